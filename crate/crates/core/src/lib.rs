//! Retrodirective wireless power transfer to an ambient-backscatter energy
//! receiver (ER).
//!
//! The ER requests power by backscattering an ambient signal toward a
//! multi-antenna energy transmitter (ET) while flipping its reflection
//! coefficient according to a ±1 training sequence. The ET correlates the
//! composite received signal with the known sequence, conjugates the result
//! and beamforms energy back. A sequence that is balanced within every ambient
//! symbol cancels the direct-link ambient interference exactly.
//!
//! Module map:
//!
//! * [`channel`]: scenario parameters, path loss and Rayleigh draws.
//! * [`training`]: training sequence construction and validation.
//! * [`correlator`]: the ET receiver, closed-form and chip-resolution paths.
//! * [`power_transfer`]: conjugate beamforming and harvested power.
//! * [`analysis`]: `K0`, the density of `|g|²·μ` and the averaging quadrature.
//! * [`experiments`]: Monte Carlo harness and the reproduction sweeps.
//! * [`cli`]: the command-line front end.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod correlator;
pub mod error;
pub mod experiments;
pub mod power_transfer;
pub mod rng;
pub mod training;

pub use analysis::{average_q_quadrature, bessel_k0, z_density, QuadratureSpec};
pub use channel::{draw_channels, path_loss, ChannelRealization, ScenarioConfig};
pub use correlator::{
    correlator_closed_form, correlator_waveform, draw_ambient_frame, AmbientFrame,
    CorrelatorOutput,
};
pub use error::{Error, Result};
pub use experiments::{
    monte_carlo, no_training_baseline, run_trial, sweep_m, sweep_tb, CorrelatorPath, Method,
    MonteCarlo, PowerEstimate, SweepResult,
};
pub use power_transfer::{asymptotic_q, harvested_power, mu, retrodirective_beam, PowerSample};
pub use training::{
    constant_sequence, minimal_sequence, random_balanced_sequence, validate_design_criterion,
    DesignReport, TrainingSequence,
};

pub use num_complex::Complex64;
