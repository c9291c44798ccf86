//! The ET receiver during the backscatter phase.
//!
//! The ET sees the backscattered path `√(γ1γ2) g f c(t) s(t)`, the direct
//! ambient path `√γ3 h s(t)` and AWGN, and correlates the sum with the known
//! chip pattern over `Nc Tc = Ns Ts` seconds. Two evaluations are provided:
//! [`correlator_closed_form`] uses the per-symbol collapsed sums, and
//! [`correlator_waveform`] walks the signal chip by chip. All pulses are
//! rectangular and chip aligned, so the chip walk equals the integral exactly.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{complex_normal, complex_normal_vec};
use crate::training::TrainingSequence;

/// The ambient symbols transmitted during one backscatter phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientFrame {
    pub symbols: Vec<Complex64>,
    /// Ambient power (W).
    pub ps: f64,
    /// Symbol duration (s).
    pub ts: f64,
}

impl AmbientFrame {
    pub fn symbol_sum(&self) -> Complex64 {
        self.symbols.iter().sum()
    }
}

/// `Ns` i.i.d. CN(0, 1) symbols.
pub fn draw_ambient_frame<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> AmbientFrame {
    AmbientFrame {
        symbols: complex_normal_vec(rng, cfg.ns, 1.0),
        ps: cfg.ps,
        ts: cfg.ts,
    }
}

/// Correlator output split into its three contributions; `x_r` is their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorOutput {
    pub x_s: Vec<Complex64>,
    pub x_i: Vec<Complex64>,
    pub n_tilde: Vec<Complex64>,
    pub x_r: Vec<Complex64>,
}

impl CorrelatorOutput {
    fn assemble(x_s: Vec<Complex64>, x_i: Vec<Complex64>, n_tilde: Vec<Complex64>) -> Self {
        let x_r = x_s
            .iter()
            .zip(&x_i)
            .zip(&n_tilde)
            .map(|((s, i), n)| s + i + n)
            .collect();
        CorrelatorOutput { x_s, x_i, n_tilde, x_r }
    }
}

fn check_inputs(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    frame: &AmbientFrame,
    seq: &TrainingSequence,
) -> Result<()> {
    if frame.symbols.len() != seq.ns() {
        return Err(Error::DimensionMismatch(format!(
            "sequence covers {} symbols but the frame holds {}",
            seq.ns(),
            frame.symbols.len()
        )));
    }
    if ch.f.len() != ch.h.len() {
        return Err(Error::DimensionMismatch(format!(
            "f has {} antennas, h has {}",
            ch.f.len(),
            ch.h.len()
        )));
    }
    let span = seq.tc * seq.chips_per_symbol() as f64;
    if ((span - cfg.ts) / cfg.ts).abs() > 1e-9 {
        return Err(Error::DimensionMismatch(format!(
            "{} chips of {} s do not span one {} s ambient symbol",
            seq.chips_per_symbol(),
            seq.tc,
            cfg.ts
        )));
    }
    Ok(())
}

/// The correlator output from the collapsed per-symbol sums:
///
/// * `x_s = √(γ1γ2Ps) (g / Ns) Σ s_i f`
/// * `x_i = √(γ3Ps) (h / Nc) Σ s_i b_i`, with `b_i` the chip sum of block `i`
/// * `ñ ~ CN(0, σ² / (Nc Tc) I)`
///
/// Noise is drawn from `rng` (M draws) even when `σ² = 0`, keeping stream
/// positions independent of the noise level.
pub fn correlator_closed_form<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    frame: &AmbientFrame,
    seq: &TrainingSequence,
    rng: &mut R,
) -> Result<CorrelatorOutput> {
    check_inputs(cfg, ch, frame, seq)?;
    let ns = seq.ns() as f64;
    let nc = seq.len() as f64;

    let desired = (cfg.gamma1() * cfg.gamma2() * frame.ps).sqrt() * ch.g * frame.symbol_sum() / ns;
    let x_s = ch.f.iter().map(|f| desired * f).collect();

    // Exactly zero when every block sum is zero.
    let leak: Complex64 = frame
        .symbols
        .iter()
        .zip(seq.block_sums())
        .map(|(s, b)| s * b as f64)
        .sum();
    let leak = (cfg.gamma3() * frame.ps).sqrt() * leak / nc;
    let x_i = ch.h.iter().map(|h| leak * h).collect();

    let span = nc * seq.tc;
    let n_tilde = complex_normal_vec(rng, ch.f.len(), cfg.sigma_n2 / span);
    Ok(CorrelatorOutput::assemble(x_s, x_i, n_tilde))
}

/// The correlator output from a chip-by-chip walk of the received signal.
///
/// For chip `n` of symbol `i` the three component samples are
/// `√(γ1γ2Ps) g f c_n s_i`, `√(γ3Ps) h s_i` and the chip-averaged noise
/// `w_n ~ CN(0, σ²/Tc I)`; each output is `(1/Nc) Σ_n c_n · sample_n`. The
/// noise draws are ordered chip-major (`Nc × M`).
pub fn correlator_waveform<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    frame: &AmbientFrame,
    seq: &TrainingSequence,
    rng: &mut R,
) -> Result<CorrelatorOutput> {
    check_inputs(cfg, ch, frame, seq)?;
    let m = ch.f.len();
    let cps = seq.chips_per_symbol();
    let backscatter_gain = (cfg.gamma1() * cfg.gamma2() * frame.ps).sqrt() * ch.g;
    let direct_gain = (cfg.gamma3() * frame.ps).sqrt();
    let noise_scale = (cfg.sigma_n2 / seq.tc).sqrt();

    let mut x_s = vec![Complex64::ZERO; m];
    let mut x_i = vec![Complex64::ZERO; m];
    let mut n_tilde = vec![Complex64::ZERO; m];
    for (n, &chip) in seq.chips().iter().enumerate() {
        let c = f64::from(chip);
        let s = frame.symbols[n / cps];
        let reflected = backscatter_gain * c * s;
        let direct = direct_gain * s;
        for a in 0..m {
            x_s[a] += c * (reflected * ch.f[a]);
            x_i[a] += c * (direct * ch.h[a]);
            n_tilde[a] += c * (complex_normal(rng) * noise_scale);
        }
    }
    let inv_nc = 1.0 / seq.len() as f64;
    for v in [&mut x_s, &mut x_i, &mut n_tilde] {
        v.iter_mut().for_each(|z| *z *= inv_nc);
    }
    Ok(CorrelatorOutput::assemble(x_s, x_i, n_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channels;
    use crate::rng::trial_rng;
    use crate::training::{constant_sequence, minimal_sequence, random_balanced_sequence};

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig { m: 8, ns: 6, ..Default::default() }
    }

    #[test]
    fn frame_shape_and_reproducibility() {
        let cfg = ScenarioConfig { ns: 50, ..Default::default() };
        let a = draw_ambient_frame(&cfg, &mut trial_rng(1, 2));
        assert_eq!(a.symbols.len(), 50);
        assert_eq!(a, draw_ambient_frame(&cfg, &mut trial_rng(1, 2)));
    }

    #[test]
    fn frame_symbols_have_unit_power() {
        let cfg = ScenarioConfig { ns: 1, ..Default::default() };
        let mut rng = trial_rng(4, 0);
        let n = 100_000;
        let p: f64 = (0..n)
            .map(|_| draw_ambient_frame(&cfg, &mut rng).symbols[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((p - 1.0).abs() < 0.02, "{p}");
    }

    #[test]
    fn balanced_sequence_cancels_exactly() {
        let cfg = small_cfg();
        let mut rng = trial_rng(9, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let seq = minimal_sequence(cfg.ns, cfg.half_chips(), cfg.tc).unwrap();
        let out = correlator_closed_form(&cfg, &ch, &frame, &seq, &mut rng).unwrap();
        assert!(out.x_i.iter().all(|z| *z == Complex64::ZERO));
    }

    #[test]
    fn desired_term_ignores_sequence_choice() {
        let cfg = small_cfg();
        let mut rng = trial_rng(10, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let a = minimal_sequence(cfg.ns, cfg.half_chips(), cfg.tc).unwrap();
        let b = random_balanced_sequence(cfg.ns, cfg.half_chips(), cfg.tc, &mut rng).unwrap();
        let oa = correlator_closed_form(&cfg, &ch, &frame, &a, &mut trial_rng(0, 0)).unwrap();
        let ob = correlator_closed_form(&cfg, &ch, &frame, &b, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(oa.x_s, ob.x_s);
    }

    #[test]
    fn constant_sequence_leaks_time_average() {
        let cfg = small_cfg();
        let mut rng = trial_rng(12, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let seq = constant_sequence(cfg.ns, cfg.half_chips(), cfg.tc).unwrap();
        let out = correlator_closed_form(&cfg, &ch, &frame, &seq, &mut rng).unwrap();
        let avg = (cfg.gamma3() * cfg.ps).sqrt() * frame.symbol_sum() / cfg.ns as f64;
        for (x, h) in out.x_i.iter().zip(&ch.h) {
            let want = avg * h;
            assert!((x - want).norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn single_symbol_constant_waveform_matches_hand_evaluation() {
        let cfg = ScenarioConfig { m: 4, ns: 1, sigma_n2: 0.0, ..Default::default() };
        let mut rng = trial_rng(13, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let seq = constant_sequence(1, cfg.half_chips(), cfg.tc).unwrap();
        let out = correlator_waveform(&cfg, &ch, &frame, &seq, &mut rng).unwrap();
        let s1 = frame.symbols[0];
        let bs = (cfg.gamma1() * cfg.gamma2() * cfg.ps).sqrt() * ch.g * s1;
        let direct = (cfg.gamma3() * cfg.ps).sqrt() * s1;
        for a in 0..cfg.m {
            let want = bs * ch.f[a] + direct * ch.h[a];
            assert!((out.x_r[a] - want).norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn zero_noise_waveform_leaves_only_desired_term() {
        let cfg = ScenarioConfig { m: 16, ns: 5, sigma_n2: 0.0, ..Default::default() };
        let mut rng = trial_rng(14, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let seq = random_balanced_sequence(cfg.ns, cfg.half_chips(), cfg.tc, &mut rng).unwrap();
        let out = correlator_waveform(&cfg, &ch, &frame, &seq, &mut rng).unwrap();
        let diff: Vec<Complex64> = out.x_r.iter().zip(&out.x_s).map(|(r, s)| r - s).collect();
        assert!(norm(&diff) <= 1e-12 * norm(&out.x_s));
    }

    #[test]
    fn noise_variance_matches_integration_window() {
        // Nc Tc = Ns Ts, so the variance does not depend on k.
        for (ts, tc) in [(5e-6, 2.5e-6), (5e-6, 500e-9)] {
            let cfg = ScenarioConfig { m: 100, ns: 3, ts, tc, ..Default::default() };
            let seq = minimal_sequence(cfg.ns, cfg.half_chips(), cfg.tc).unwrap();
            let mut rng = trial_rng(15, 0);
            let ch = draw_channels(&cfg, &mut rng);
            let frame = draw_ambient_frame(&cfg, &mut rng);
            let draws = 100;
            let mut acc = 0.0;
            for _ in 0..draws {
                let out = correlator_closed_form(&cfg, &ch, &frame, &seq, &mut rng).unwrap();
                acc += out.n_tilde.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            let var = acc / (draws * cfg.m) as f64;
            let want = cfg.sigma_n2 / (cfg.ns as f64 * cfg.ts);
            assert!((var / want - 1.0).abs() < 0.02, "{var} vs {want}");
        }
    }

    #[test]
    fn waveform_noise_has_same_scale() {
        let cfg = ScenarioConfig { m: 50, ns: 2, ..Default::default() };
        let seq = minimal_sequence(cfg.ns, cfg.half_chips(), cfg.tc).unwrap();
        let mut rng = trial_rng(16, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let draws = 200;
        let mut acc = 0.0;
        for _ in 0..draws {
            let out = correlator_waveform(&cfg, &ch, &frame, &seq, &mut rng).unwrap();
            acc += out.n_tilde.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let var = acc / (draws * cfg.m) as f64;
        let want = cfg.sigma_n2 / (cfg.nc() as f64 * cfg.tc);
        assert!((var / want - 1.0).abs() < 0.03, "{var} vs {want}");
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let cfg = small_cfg();
        let mut rng = trial_rng(17, 0);
        let ch = draw_channels(&cfg, &mut rng);
        let frame = draw_ambient_frame(&cfg, &mut rng);
        let short = minimal_sequence(cfg.ns - 1, cfg.half_chips(), cfg.tc).unwrap();
        assert!(matches!(
            correlator_closed_form(&cfg, &ch, &frame, &short, &mut rng),
            Err(Error::DimensionMismatch(_))
        ));
        let wrong_rate = minimal_sequence(cfg.ns, 1, cfg.tc).unwrap();
        assert!(correlator_waveform(&cfg, &ch, &frame, &wrong_rate, &mut rng).is_err());
    }
}
