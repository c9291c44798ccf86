//! Scenario parameters, large-scale path loss and quasi-static Rayleigh draws.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_normal, complex_normal_vec};

/// Relative slack allowed when checking that `Ts / Tc` is an integer.
const RATIO_TOLERANCE: f64 = 1e-9;

/// Every physical and protocol parameter of one scenario, in SI units.
///
/// Field names follow the keys of the config file format (see
/// [`ScenarioConfig::parse`]); serde uses the same keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Reference distance (m).
    pub d0: f64,
    /// Ambient source to ER distance (m).
    pub d1: f64,
    /// ER to ET distance (m).
    pub d2: f64,
    /// Ambient source to ET distance (m).
    pub d3: f64,
    /// Attenuation at the reference distance.
    pub k0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Ambient transmit power (W).
    #[serde(rename = "Ps")]
    pub ps: f64,
    /// ET transmit power (W).
    #[serde(rename = "Pt")]
    pub pt: f64,
    /// AWGN variance at the ET (W). Zero disables noise.
    pub sigma_n2: f64,
    /// Antennas at the ET.
    #[serde(rename = "M")]
    pub m: usize,
    /// Ambient symbol duration (s).
    #[serde(rename = "Ts")]
    pub ts: f64,
    /// Chip duration (s).
    #[serde(rename = "Tc")]
    pub tc: f64,
    /// Ambient symbols per backscatter phase.
    #[serde(rename = "Ns")]
    pub ns: usize,
    /// Energy-harvesting efficiency.
    pub zeta: f64,
    /// Power-transfer phase duration (s). Informational: power is computed
    /// per unit time.
    #[serde(rename = "Tp")]
    pub tp: f64,
}

/// Config keys in canonical order.
pub const CONFIG_KEYS: [&str; 15] = [
    "d0", "d1", "d2", "d3", "k0", "alpha", "Ps", "Pt", "sigma_n2", "M", "Ts", "Tc", "Ns", "zeta",
    "Tp",
];

impl Default for ScenarioConfig {
    /// The reference scenario: 10/20/18 m geometry, 1 W sources, 500 antennas,
    /// 500 ns chips, 5 µs ambient symbols and a 0.25 ms backscatter phase.
    fn default() -> Self {
        ScenarioConfig {
            d0: 1.0,
            d1: 10.0,
            d2: 20.0,
            d3: 18.0,
            k0: 1e-3,
            alpha: 2.5,
            ps: 1.0,
            pt: 1.0,
            sigma_n2: 1e-18,
            m: 500,
            ts: 5e-6,
            tc: 500e-9,
            ns: 50,
            zeta: 0.5,
            tp: 1.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d0", self.d0),
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("k0", self.k0),
            ("Ps", self.ps),
            ("Pt", self.pt),
            ("Ts", self.ts),
            ("Tc", self.tc),
            ("Tp", self.tp),
        ] {
            positive(name, v)?;
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidConfig("alpha must be finite".into()));
        }
        if !(self.sigma_n2.is_finite() && self.sigma_n2 >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma_n2 must be non-negative, got {}",
                self.sigma_n2
            )));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(Error::InvalidConfig(format!("zeta must lie in (0, 1], got {}", self.zeta)));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("M must be at least 1".into()));
        }
        if self.ns == 0 {
            return Err(Error::InvalidConfig("Ns must be at least 1".into()));
        }
        let ratio = self.ts / self.tc;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > RATIO_TOLERANCE * ratio
            || rounded < 2.0
            || !(rounded as u64).is_multiple_of(2)
        {
            return Err(Error::InvalidConfig(format!(
                "Ts / Tc must be a positive even integer, got {ratio}"
            )));
        }
        Ok(())
    }

    /// Chips per ambient symbol, `Ts / Tc = 2k`.
    pub fn chips_per_symbol(&self) -> usize {
        (self.ts / self.tc).round() as usize
    }

    /// `k = Ts / (2 Tc)`.
    pub fn half_chips(&self) -> usize {
        self.chips_per_symbol() / 2
    }

    /// Chips in the backscatter phase, `Nc = 2 k Ns`.
    pub fn nc(&self) -> usize {
        self.chips_per_symbol() * self.ns
    }

    /// Backscatter phase duration `Tb = Ns Ts` (s).
    pub fn tb(&self) -> f64 {
        self.ns as f64 * self.ts
    }

    pub fn gamma1(&self) -> f64 {
        self.k0 * (self.d1 / self.d0).powf(-self.alpha)
    }

    pub fn gamma2(&self) -> f64 {
        self.k0 * (self.d2 / self.d0).powf(-self.alpha)
    }

    pub fn gamma3(&self) -> f64 {
        self.k0 * (self.d3 / self.d0).powf(-self.alpha)
    }

    /// Noise term of the large-array power formula, `σ² Ns / (Ts Ps)`.
    pub fn noise_parameter(&self) -> f64 {
        self.sigma_n2 * self.ns as f64 / (self.ts * self.ps)
    }

    /// Parses the flat `key = value` format. Blank lines and `#` comments are
    /// ignored. Keys not present keep their [`Default`] value; unknown or
    /// repeated keys are rejected. The result is validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen = [false; CONFIG_KEYS.len()];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |message: String| Error::ConfigParse { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let slot = CONFIG_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| perr(format!("unknown key `{key}`")))?;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(perr(format!("duplicate key `{key}`")));
            }
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| perr(format!("`{key}` expects a number, got `{value}`")))
            };
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|_| perr(format!("`{key}` expects a non-negative integer, got `{value}`")))
            };
            match key {
                "d0" => cfg.d0 = float()?,
                "d1" => cfg.d1 = float()?,
                "d2" => cfg.d2 = float()?,
                "d3" => cfg.d3 = float()?,
                "k0" => cfg.k0 = float()?,
                "alpha" => cfg.alpha = float()?,
                "Ps" => cfg.ps = float()?,
                "Pt" => cfg.pt = float()?,
                "sigma_n2" => cfg.sigma_n2 = float()?,
                "M" => cfg.m = count()?,
                "Ts" => cfg.ts = float()?,
                "Tc" => cfg.tc = float()?,
                "Ns" => cfg.ns = count()?,
                "zeta" => cfg.zeta = float()?,
                "Tp" => cfg.tp = float()?,
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Renders the config in the file format, every key present, with values
    /// printed so that [`ScenarioConfig::parse`] recovers them exactly.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let value = match key {
                "d0" => fmt_num(self.d0),
                "d1" => fmt_num(self.d1),
                "d2" => fmt_num(self.d2),
                "d3" => fmt_num(self.d3),
                "k0" => fmt_num(self.k0),
                "alpha" => fmt_num(self.alpha),
                "Ps" => fmt_num(self.ps),
                "Pt" => fmt_num(self.pt),
                "sigma_n2" => fmt_num(self.sigma_n2),
                "M" => self.m.to_string(),
                "Ts" => fmt_num(self.ts),
                "Tc" => fmt_num(self.tc),
                "Ns" => self.ns.to_string(),
                "zeta" => fmt_num(self.zeta),
                "Tp" => fmt_num(self.tp),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Shortest round-trip rendering, switching to exponent form for very small
/// or very large magnitudes.
pub(crate) fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// `k0 (d / d0)^(-alpha)`.
pub fn path_loss(d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(cfg.k0 * (d / cfg.d0).powf(-cfg.alpha))
}

/// One quasi-static draw of the three small-scale fading channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Ambient source to ER.
    pub g: Complex64,
    /// ER to ET, reused for the reciprocal ET to ER link.
    pub f: Vec<Complex64>,
    /// Ambient source to ET.
    pub h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn antennas(&self) -> usize {
        self.f.len()
    }

    /// Keeps the first `m` antennas.
    pub fn truncated(&self, m: usize) -> ChannelRealization {
        ChannelRealization {
            g: self.g,
            f: self.f[..m].to_vec(),
            h: self.h[..m].to_vec(),
        }
    }
}

/// Draws `g`, then `f`, then `h`, all i.i.d. CN(0, 1).
pub fn draw_channels<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> ChannelRealization {
    let g = complex_normal(rng);
    let f = complex_normal_vec(rng, cfg.m, 1.0);
    let h = complex_normal_vec(rng, cfg.m, 1.0);
    ChannelRealization { g, f, h }
}
