use super::{integrate_observed, DynamicsError, GeneratorSpec, Trajectory};
use crate::statespace::{StateVector, SystemSpec};

/// Smallest cutoff ever proposed.
pub const MIN_AUTO_CUTOFF: usize = 16;

/// Fock cutoff from the empty-cavity envelope:
/// `max(16, ceil(8 sinh^2(eps t_final / 2) + 24))`.
///
/// The detector only slows photon growth, so the empty cavity bounds the
/// mean photon number from above; heavy squeezed-state tails are caught by
/// the tail monitor and handled by [`simulate`] doubling the cutoff.
pub fn auto_cutoff(spec: &SystemSpec) -> usize {
    let envelope = (spec.epsilon.abs() * spec.t_final / 2.0).sinh().powi(2);
    let k = (8.0 * envelope + 24.0).ceil();
    if k.is_finite() && k < usize::MAX as f64 {
        MIN_AUTO_CUTOFF.max(k as usize)
    } else {
        usize::MAX
    }
}

/// Result of a run that may have been repeated with a larger cutoff.
#[derive(Debug, Clone)]
pub struct Simulation<S> {
    pub trajectory: Trajectory<S>,
    /// Cutoff of the attempt that succeeded.
    pub cutoff: usize,
    pub attempts: u32,
}

/// Integrates `spec` from the joint vacuum, doubling `fock_cutoff` up to
/// `max_doublings` times when the truncation tail overflows.
pub fn simulate<S, F>(
    spec: &SystemSpec,
    output_times: &[f64],
    max_doublings: u32,
    mut observer: F,
) -> Result<Simulation<S>, DynamicsError>
where
    F: FnMut(&StateVector) -> S,
{
    let mut spec = spec.clone();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let gen = GeneratorSpec::from_spec(&spec)?;
        let state0 = StateVector::new_vacuum(&spec)?;
        match integrate_observed(&state0, &gen, output_times, &spec.tolerances, &mut observer) {
            Ok(trajectory) => {
                return Ok(Simulation {
                    trajectory,
                    cutoff: spec.fock_cutoff,
                    attempts,
                })
            }
            Err(DynamicsError::TruncationOverflow { .. }) if attempts <= max_doublings => {
                spec.fock_cutoff *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}
