//! Photon generation from vacuum in a parametrically modulated cavity mode
//! coupled to a resonant ladder detector.
//!
//! * [`statespace`] holds the joint amplitude table and its observables.
//! * [`dynamics`] integrates the interaction-picture amplitude equations.
//! * [`analytic`] has the closed forms for the empty cavity and the
//!   oscillator detector.
//! * [`spectral`] analyses the fixed-excitation blocks of the unmodulated
//!   Hamiltonian and predicts the photon cap.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{a} vs {b} (tol {:e})", $tol);
    }};
}

pub mod analytic;
pub mod dynamics;
pub mod spectral;
pub mod statespace;

pub use dynamics::{
    auto_cutoff, coupling_profile, expm_oracle, integrate_adaptive, integrate_observed,
    simulate, DynamicsError, GeneratorSpec, StepStats, Trajectory,
};
pub use statespace::{
    CouplingProfile, DetectorKind, ObservableRecord, StateVector, SystemSpec, Tolerances,
};
