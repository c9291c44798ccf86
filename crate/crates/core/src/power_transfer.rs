//! Power-transfer phase: conjugate beamforming and harvested power.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::correlator::{AmbientFrame, CorrelatorOutput};
use crate::error::{Error, Result};

/// Harvested power of one block (W). Power and energy coincide since the
/// power-transfer phase is taken as unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub q: f64,
    pub components: Option<PowerComponents>,
}

/// Power the ER would collect from each correlator term alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerComponents {
    pub beamformed: f64,
    pub leakage: f64,
    pub noise: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    // Scaled to stay clear of underflow: entries are routinely around 1e-9.
    let scale = v.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|z| (z / scale).norm_sqr()).sum::<f64>().sqrt()
}

/// `x_t = √Pt conj(x_r) / ‖x_r‖`.
pub fn retrodirective_beam(x_r: &[Complex64], pt: f64) -> Result<Vec<Complex64>> {
    let n = norm(x_r);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Degenerate(
            "correlator output has zero norm, nothing to conjugate".into(),
        ));
    }
    let scale = pt.sqrt() / n;
    Ok(x_r.iter().map(|z| z.conj() * scale).collect())
}

fn transpose_product(f: &[Complex64], x: &[Complex64]) -> Complex64 {
    f.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// `q = ζ |√γ2 fᵀ x_t|²`. ER receiver noise plays no part in harvesting.
pub fn harvested_power(
    ch: &ChannelRealization,
    x_t: &[Complex64],
    cfg: &ScenarioConfig,
) -> Result<PowerSample> {
    if x_t.len() != ch.f.len() {
        return Err(Error::DimensionMismatch(format!(
            "beam has {} entries, channel has {} antennas",
            x_t.len(),
            ch.f.len()
        )));
    }
    let r = cfg.gamma2().sqrt() * transpose_product(&ch.f, x_t);
    Ok(PowerSample { q: cfg.zeta * r.norm_sqr(), components: None })
}

/// Beamforms on `out.x_r` and reports the total along with the share each
/// correlator term would deliver on its own.
pub fn harvested_power_breakdown(
    ch: &ChannelRealization,
    out: &CorrelatorOutput,
    cfg: &ScenarioConfig,
) -> Result<PowerSample> {
    let x_t = retrodirective_beam(&out.x_r, cfg.pt)?;
    let mut sample = harvested_power(ch, &x_t, cfg)?;
    let scale = cfg.zeta * cfg.gamma2() * cfg.pt / norm(&out.x_r).powi(2);
    let part = |v: &[Complex64]| {
        let conj: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        scale * transpose_product(&ch.f, &conj).norm_sqr()
    };
    sample.components = Some(PowerComponents {
        beamformed: part(&out.x_s),
        leakage: part(&out.x_i),
        noise: part(&out.n_tilde),
    });
    Ok(sample)
}

/// `μ = |Σ s_i|²`.
pub fn mu(frame: &AmbientFrame) -> f64 {
    frame.symbol_sum().norm_sqr()
}

/// Large-array instantaneous harvested power
///
/// `q = ζγ2Pt (γ1γ2 |g|² μ (M+1) + a) / (γ1γ2 |g|² μ + a)`, `a = σ² Ns / (Ts Ps)`.
///
/// When both `|g|²μ` and `a` vanish the expression is 0/0; the `|g|²μ → 0`
/// limit at positive `a`, `ζγ2Pt`, is returned.
pub fn asymptotic_q(cfg: &ScenarioConfig, g_abs2: f64, mu: f64) -> PowerSample {
    let base = cfg.zeta * cfg.gamma2() * cfg.pt;
    let signal = cfg.gamma1() * cfg.gamma2() * g_abs2 * mu;
    let a = cfg.noise_parameter();
    let q = if signal + a == 0.0 {
        base
    } else {
        base * (signal * (cfg.m as f64 + 1.0) + a) / (signal + a)
    };
    PowerSample { q, components: None }
}
