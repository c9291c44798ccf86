//! Analytical average harvested power.
//!
//! With `Z = |g|² μ`, a product of independent exponentials with means 1 and
//! `Ns`, the average of the large-array power formula is
//! `∫₀^∞ q(z) f_Z(z) dz` with `f_Z(z) = (2/Ns) K0(2 √(z/Ns))`. The density has
//! an integrable logarithmic singularity at zero, handled by a small-argument
//! expansion on `[0, ε]`; the remainder is integrated adaptively up to a point
//! past which the tail is negligible.

mod bessel;
pub mod quadrature;

pub use bessel::{bessel_k0, bessel_k0_small};

use serde::{Deserialize, Serialize};

use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};
use crate::experiments::{Method, PowerEstimate};
use crate::power_transfer::asymptotic_q;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute tolerance (W).
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Upper integration limit in `z`. `None` picks one from the tail decay.
    pub upper: Option<f64>,
    /// Split point `ε`, as a multiple of `Ns`.
    pub singular_split: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-8,
            abs_tol: 1e-20,
            max_subdivisions: 2000,
            upper: None,
            singular_split: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if !(self.singular_split > 0.0 && self.singular_split < 1.0) {
            return Err(Error::Domain("singular split must lie in (0, 1)".into()));
        }
        if let Some(u) = self.upper {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::Domain(format!("upper limit must be positive, got {u}")));
            }
        }
        Ok(())
    }
}

/// Density of `|g|² μ`: `(2/Ns) K0(2 √(z/Ns))`. Infinite at `z = 0`.
pub fn z_density(z: f64, ns: usize) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain(format!("density requires z >= 0, got {z}")));
    }
    if ns == 0 {
        return Err(Error::Domain("Ns must be at least 1".into()));
    }
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ns = ns as f64;
    Ok(2.0 / ns * bessel_k0(2.0 * (z / ns).sqrt())?)
}

fn density_small(z: f64, ns: f64) -> f64 {
    2.0 / ns * bessel_k0_small(2.0 * (z / ns).sqrt())
}

/// Integrates `weight(z) f_Z(z)` over `[0, ∞)`.
pub fn expect_over_z<F: Fn(f64) -> f64>(weight: F, ns: usize, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    let nsf = ns as f64;
    let eps = quad.singular_split * nsf;
    let integrand = |z: f64| weight(z) * z_density(z, ns).unwrap_or(0.0);

    // [0, ε] under z = ε w², which turns the log singularity into w ln w.
    let head = quadrature::integrate(
        |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let z = eps * w * w;
            2.0 * eps * w * weight(z) * density_small(z, nsf)
        },
        &[0.0, 1.0],
        quad.rel_tol,
        quad.abs_tol * 1e-3,
        quad.max_subdivisions,
    )?;

    let upper = match quad.upper {
        Some(u) => u,
        None => {
            let target = quad.abs_tol * 1e-3;
            let mut u = nsf;
            // Once u is several Ns, the remaining tail is below 4 u f(u).
            while 4.0 * u * integrand(u).abs() > target {
                u *= 2.0;
                if !u.is_finite() {
                    return Err(Error::NonConvergence { subdivisions: 0, estimate: f64::NAN, error: f64::INFINITY });
                }
            }
            u
        }
    };
    if upper <= eps {
        return Err(Error::Domain(format!("upper limit {upper} does not exceed split point {eps}")));
    }

    // Decade breakpoints from ε to the upper limit.
    let mut points = vec![eps];
    let mut p = eps * 10.0;
    while p < upper {
        points.push(p);
        p *= 10.0;
    }
    points.push(upper);
    let body = quadrature::integrate(
        integrand,
        &points,
        quad.rel_tol,
        quad.abs_tol,
        quad.max_subdivisions,
    )?;
    Ok(head.value + body.value)
}

/// Average harvested power: the large-array power formula averaged against
/// `f_Z`.
pub fn average_q_quadrature(cfg: &ScenarioConfig, quad: &QuadratureSpec) -> Result<PowerEstimate> {
    cfg.validate()?;
    let mean = expect_over_z(|z| asymptotic_q(cfg, z, 1.0).q, cfg.ns, quad)?;
    Ok(PowerEstimate::new(mean, None, 0, Method::Quadrature, cfg, None))
}
