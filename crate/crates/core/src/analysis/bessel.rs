//! Modified Bessel function of the second kind, order zero.
//!
//! Power series for `x <= 2`, Steed's evaluation of the Temme continued
//! fraction above. Both reach close to machine precision.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const SERIES_LIMIT: f64 = 2.0;
const MAX_ITER: usize = 10_000;

/// `K0(x)` for `x > 0`. Returns `0.0` once `exp(-x)` underflows.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("K0 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x <= SERIES_LIMIT { series(x) } else { continued_fraction(x) })
}

/// `K0(x) = -(ln(x/2) + γ) I0(x) + Σ_{k≥1} (x²/4)^k / (k!)² H_k`.
fn series(x: f64) -> f64 {
    let t = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= t / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic < 1e-17 * tail.abs().max(1e-300) && term < 1e-17 * i0 {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
}

/// Steed's algorithm for the second continued fraction at order zero.
fn continued_fraction(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() / s * (-x).exp()
}

/// Small-argument form `-(ln(x/2) + γ)(1 + x²/4) + x²/4`, accurate to
/// `O(x⁴ ln x)`.
pub fn bessel_k0_small(x: f64) -> f64 {
    let t = 0.25 * x * x;
    -((0.5 * x).ln() + EULER_GAMMA) * (1.0 + t) + t
}
