//! Interaction-picture dynamics from the joint vacuum `|1, 0>`.

mod cutoff;
mod generator;
mod integrator;
mod oracle;

use thiserror::Error;

use crate::statespace::StateError;

pub use cutoff::{auto_cutoff, simulate, Simulation, MIN_AUTO_CUTOFF};
pub use generator::{coupling_profile, rhs_apply, GeneratorSpec};
pub use integrator::{
    integrate_adaptive, integrate_observed, uniform_times, StepStats, Trajectory,
    NORM_DRIFT_LIMIT,
};
pub use oracle::{assemble_hamiltonian, expm_oracle, ORACLE_MAX_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("norm drifted by {drift:.3e} at t = {t}")]
    NormDriftExceeded { t: f64, drift: f64 },
    #[error("Fock tail holds {tail:.3e} at t = {t} with cutoff {cutoff}; raise the cutoff")]
    TruncationOverflow { t: f64, tail: f64, cutoff: usize },
    #[error("non-finite amplitude at t = {t}")]
    NonFiniteAmplitude { t: f64 },
    #[error("step size {h:.3e} underflowed at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t}")]
    StepLimit { t: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dense oracle needs dim <= {max}, got {dim}")]
    OracleTooLarge { dim: usize, max: usize },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    State(#[from] StateError),
}
