//! Globally adaptive Gauss–Kronrod (10/21 point) integration on a finite
//! interval with optional interior breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from one panel
/// per pair of consecutive points and repeatedly bisecting the panel with the
/// largest error estimate until the total error is below
/// `max(abs_tol, rel_tol |I|)`.
///
/// Returns [`Error::NonConvergence`] when `max_subdivisions` bisections do not
/// meet the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    if points.len() < 2 || points.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("integration points must be strictly increasing".into()));
    }
    let mut heap: BinaryHeap<Panel> = points.windows(2).map(|w| kronrod21(&f, w[0], w[1])).collect();
    let mut subdivisions = 0;
    loop {
        // Summed left to right so the result does not depend on
        // heap layout.
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::NonConvergence { subdivisions, estimate: value, error });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, abs_error: error, subdivisions });
        }
        if subdivisions >= max_subdivisions {
            return Err(Error::NonConvergence { subdivisions, estimate: value, error });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::NonConvergence { subdivisions, estimate: value, error });
        }
        heap.push(kronrod21(&f, worst.a, mid));
        heap.push(kronrod21(&f, mid, worst.b));
        subdivisions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, &[0.0, 2.0], 1e-14, 0.0, 10).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn log_singularity_converges_with_subdivision() {
        // ∫₀¹ -ln x dx = 1
        let r = integrate(|x: f64| -x.ln(), &[0.0, 1.0], 1e-10, 0.0, 500).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.subdivisions > 0);
    }

    #[test]
    fn breakpoints_and_exponential() {
        let r = integrate(|x: f64| (-x).exp(), &[0.0, 1.0, 10.0, 50.0], 1e-13, 0.0, 200).unwrap();
        assert!((r.value - (1.0 - (-50.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt(), &[-1.0, 1.0], 1e-15, 0.0, 3);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
        assert!(integrate(|x| x, &[1.0, 1.0], 1e-8, 0.0, 3).is_err());
    }
}
