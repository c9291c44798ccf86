//! Random streams.
//!
//! Every Monte Carlo trial owns a ChaCha stream keyed by the master seed and
//! selected by the trial index, so a trial's draws never depend on which
//! worker ran it or in which order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type TrialRng = ChaCha8Rng;

/// Stream for trial `index` under `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// One CN(0, 1) draw: independent real and imaginary parts of variance 1/2.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n` i.i.d. CN(0, variance) draws.
pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> Vec<Complex64> {
    let scale = variance.sqrt();
    (0..n).map(|_| complex_normal(rng) * scale).collect()
}
