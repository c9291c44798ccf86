//! Monte Carlo harness and the reproduction sweeps.
//!
//! Trial `i` of a run seeded with `s` draws everything from
//! [`trial_rng(s, i)`](crate::rng::trial_rng), and per-trial powers are reduced
//! in trial order, so results are bit-identical for any thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{average_q_quadrature, QuadratureSpec};
use crate::channel::{draw_channels, ChannelRealization, ScenarioConfig};
use crate::correlator::{
    correlator_closed_form, correlator_waveform, draw_ambient_frame, AmbientFrame,
    CorrelatorOutput,
};
use crate::error::{Error, Result};
use crate::power_transfer::{harvested_power_breakdown, PowerSample};
use crate::rng::{trial_rng, TrialRng};
use crate::training::{constant_sequence, minimal_sequence, TrainingSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    Quadrature,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::Quadrature => "quadrature",
        }
    }
}

/// An average harvested power estimate (W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub mean: f64,
    /// Standard error of the mean; absent for single-trial runs and for
    /// quadrature.
    pub std_error: Option<f64>,
    /// Zero for quadrature.
    pub trials: usize,
    pub method: Method,
    pub seed: Option<u64>,
    /// Leading 16 hex digits of SHA-256 over the config text and seed.
    pub fingerprint: String,
}

impl PowerEstimate {
    pub fn new(
        mean: f64,
        std_error: Option<f64>,
        trials: usize,
        method: Method,
        cfg: &ScenarioConfig,
        seed: Option<u64>,
    ) -> Self {
        PowerEstimate {
            mean,
            std_error,
            trials,
            method,
            seed,
            fingerprint: fingerprint(cfg, seed),
        }
    }

    pub fn mean_uw(&self) -> f64 {
        self.mean * 1e6
    }
}

pub fn fingerprint(cfg: &ScenarioConfig, seed: Option<u64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.to_config_text().as_bytes());
    if let Some(seed) = seed {
        hasher.update(format!("seed = {seed}\n").as_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Which correlator evaluation a trial uses. Both give the same output; the
/// closed form is far cheaper.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelatorPath {
    #[default]
    ClosedForm,
    Waveform,
}

/// Everything one trial produced.
#[derive(Debug, Clone, Serialize)]
pub struct TrialTrace {
    pub channels: ChannelRealization,
    pub frame: AmbientFrame,
    pub correlator: CorrelatorOutput,
    pub power: PowerSample,
}

/// One block: draw channels and a frame, correlate, beamform, harvest.
pub fn trace_trial(
    cfg: &ScenarioConfig,
    seq: &TrainingSequence,
    rng: &mut TrialRng,
    path: CorrelatorPath,
) -> Result<TrialTrace> {
    let channels = draw_channels(cfg, rng);
    let frame = draw_ambient_frame(cfg, rng);
    let correlator = match path {
        CorrelatorPath::ClosedForm => correlator_closed_form(cfg, &channels, &frame, seq, rng)?,
        CorrelatorPath::Waveform => correlator_waveform(cfg, &channels, &frame, seq, rng)?,
    };
    let power = harvested_power_breakdown(&channels, &correlator, cfg)?;
    Ok(TrialTrace { channels, frame, correlator, power })
}

/// One full pipeline pass on the stream of `trial_seed`, closed-form
/// correlator.
pub fn run_trial(cfg: &ScenarioConfig, seq: &TrainingSequence, trial_seed: u64) -> Result<PowerSample> {
    let mut rng = trial_rng(trial_seed, 0);
    Ok(trace_trial(cfg, seq, &mut rng, CorrelatorPath::ClosedForm)?.power)
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses rayon's global pool. Results do not depend
    /// on this.
    pub threads: Option<usize>,
    pub path: CorrelatorPath,
}

impl MonteCarlo {
    pub fn new(trials: usize, seed: u64) -> Self {
        MonteCarlo { trials, seed, threads: None, path: CorrelatorPath::ClosedForm }
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn path(mut self, path: CorrelatorPath) -> Self {
        self.path = path;
        self
    }

    /// Per-trial harvested powers, in trial order.
    pub fn samples(&self, cfg: &ScenarioConfig, seq: &TrainingSequence) -> Result<Vec<f64>> {
        cfg.validate()?;
        if self.trials == 0 {
            return Err(Error::Domain("at least one trial is required".into()));
        }
        let one = |i: usize| -> Result<f64> {
            let mut rng = trial_rng(self.seed, i as u64);
            Ok(trace_trial(cfg, seq, &mut rng, self.path)?.power.q)
        };
        let run = || (0..self.trials).into_par_iter().map(one).collect::<Result<Vec<f64>>>();
        match self.threads {
            None => run(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?
                .install(run),
        }
    }

    pub fn run(&self, cfg: &ScenarioConfig, seq: &TrainingSequence) -> Result<PowerEstimate> {
        let q = self.samples(cfg, seq)?;
        let n = q.len() as f64;
        let mean = q.iter().sum::<f64>() / n;
        let std_error = (q.len() > 1).then(|| {
            let var = q.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Ok(PowerEstimate::new(mean, std_error, q.len(), Method::MonteCarlo, cfg, Some(self.seed)))
    }
}

/// The default trained sequence for a scenario: per symbol, `k` chips of
/// `+1` then `k` of `-1`, `k = Ts / (2 Tc)`.
pub fn default_sequence(cfg: &ScenarioConfig) -> Result<TrainingSequence> {
    cfg.validate()?;
    minimal_sequence(cfg.ns, cfg.half_chips(), cfg.tc)
}

pub fn monte_carlo(
    cfg: &ScenarioConfig,
    seq: &TrainingSequence,
    trials: usize,
    master_seed: u64,
) -> Result<PowerEstimate> {
    MonteCarlo::new(trials, master_seed).run(cfg, seq)
}

/// Reflection coefficient fixed at `+1`, so the correlator only time-averages.
pub fn no_training_baseline(cfg: &ScenarioConfig, trials: usize, master_seed: u64) -> Result<PowerEstimate> {
    baseline_with(cfg, &MonteCarlo::new(trials, master_seed))
}

pub fn baseline_with(cfg: &ScenarioConfig, mc: &MonteCarlo) -> Result<PowerEstimate> {
    cfg.validate()?;
    let seq = constant_sequence(cfg.ns, cfg.half_chips(), cfg.tc)?;
    mc.run(cfg, &seq)
}

/// Monte Carlo and quadrature estimates along one scenario axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub values: Vec<f64>,
    pub monte_carlo: Vec<PowerEstimate>,
    pub quadrature: Vec<PowerEstimate>,
}

/// Number of whole symbols in `tb`, or an error if `tb` is not a positive
/// integer multiple of `ts`.
pub fn symbols_in(tb: f64, ts: f64) -> Result<usize> {
    let ratio = tb / ts;
    let n = ratio.round();
    if !(ratio.is_finite() && n >= 1.0 && (ratio - n).abs() <= 1e-9 * n) {
        return Err(Error::Domain(format!(
            "backscatter duration {tb} s is not an integer multiple of Ts = {ts} s"
        )));
    }
    Ok(n as usize)
}

/// Average power against the backscatter phase duration `Tb` (s), keeping
/// `Ts` and `Tc` fixed so that `Ns = Tb / Ts` grows with `Tb`.
pub fn sweep_tb(
    cfg: &ScenarioConfig,
    tb_values: &[f64],
    mc: &MonteCarlo,
    quad: &QuadratureSpec,
) -> Result<SweepResult> {
    let scenarios = tb_values
        .iter()
        .map(|&tb| Ok(ScenarioConfig { ns: symbols_in(tb, cfg.ts)?, ..*cfg }))
        .collect::<Result<Vec<_>>>()?;
    let mut monte_carlo = Vec::with_capacity(scenarios.len());
    for s in &scenarios {
        monte_carlo.push(mc.run(s, &default_sequence(s)?)?);
    }
    // The average does not involve Tb: one evaluation serves every row.
    let quadrature = match scenarios.first() {
        Some(s) => vec![average_q_quadrature(s, quad)?; scenarios.len()],
        None => Vec::new(),
    };
    Ok(SweepResult { axis: "Tb".into(), values: tb_values.to_vec(), monte_carlo, quadrature })
}

/// Average power against the ET antenna count.
pub fn sweep_m(
    cfg: &ScenarioConfig,
    m_values: &[usize],
    mc: &MonteCarlo,
    quad: &QuadratureSpec,
) -> Result<SweepResult> {
    let mut monte_carlo = Vec::with_capacity(m_values.len());
    let mut quadrature = Vec::with_capacity(m_values.len());
    for &m in m_values {
        if m == 0 {
            return Err(Error::Domain("antenna count must be at least 1".into()));
        }
        let s = ScenarioConfig { m, ..*cfg };
        monte_carlo.push(mc.run(&s, &default_sequence(&s)?)?);
        quadrature.push(average_q_quadrature(&s, quad)?);
    }
    Ok(SweepResult {
        axis: "M".into(),
        values: m_values.iter().map(|&m| m as f64).collect(),
        monte_carlo,
        quadrature,
    })
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct CsvRow<'a> {
    axis_value: f64,
    method: &'a str,
    mean_W: f64,
    mean_uW: f64,
    std_error_W: Option<f64>,
    trials: usize,
    seed: Option<u64>,
}

/// Writes estimates as CSV with columns
/// `axis_value,method,mean_W,mean_uW,std_error_W,trials,seed`.
pub fn write_csv<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (f64, &'a PowerEstimate)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
    for (axis_value, est) in rows {
        w.serialize(CsvRow {
            axis_value,
            method: est.method.as_str(),
            mean_W: est.mean,
            mean_uW: est.mean_uw(),
            std_error_W: est.std_error,
            trials: est.trials,
            seed: est.seed,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))?;
    Ok(())
}

pub fn csv_string<'a>(rows: impl IntoIterator<Item = (f64, &'a PowerEstimate)>) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

impl SweepResult {
    /// One Monte Carlo row then one quadrature row per axis value.
    pub fn to_csv(&self) -> Result<String> {
        let rows = self
            .values
            .iter()
            .zip(self.monte_carlo.iter().zip(&self.quadrature))
            .flat_map(|(&v, (mc, q))| [(v, mc), (v, q)]);
        csv_string(rows)
    }
}
