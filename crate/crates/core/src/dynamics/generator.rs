use num_complex::Complex64;

use super::DynamicsError;
use crate::statespace::{CouplingProfile, DetectorKind, StateVector, SystemSpec};

/// Ladder couplings for a detector kind: `g sqrt(j)` for the ladder and the
/// oscillator, `g sqrt(j (N - j))` for `N - 1` atoms in the Dicke basis.
pub fn coupling_profile(kind: DetectorKind, levels: usize, g: f64) -> CouplingProfile {
    let couplings = (1..levels)
        .map(|j| {
            let j = j as f64;
            match kind {
                DetectorKind::Ladder | DetectorKind::HarmonicOscillatorTruncated => g * j.sqrt(),
                DetectorKind::TwoLevelEnsemble => g * (j * (levels as f64 - j)).sqrt(),
            }
        })
        .collect();
    CouplingProfile::new(couplings).expect("non-negative g yields a valid profile")
}

/// Interaction-picture generator
/// `H_I = -i beta (a^2 - a^+2) + sum_j g_j (a s_{j+1,j} + a^+ s_{j,j+1})`
/// on the truncated space `N x (K_max + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    beta: f64,
    profile: CouplingProfile,
    levels: usize,
    cutoff: usize,
    sqrt_k: Vec<f64>,
    // sqrt(k (k - 1))
    sqrt_pair: Vec<f64>,
}

impl GeneratorSpec {
    pub fn new(
        beta: f64,
        profile: CouplingProfile,
        levels: usize,
        cutoff: usize,
    ) -> Result<Self, DynamicsError> {
        if profile.levels() != levels {
            return Err(DynamicsError::Dimension(format!(
                "profile has {} couplings, {} levels need {}",
                profile.couplings().len(),
                levels,
                levels.saturating_sub(1)
            )));
        }
        if levels == 0 || cutoff < 2 {
            return Err(DynamicsError::Dimension(format!(
                "need N >= 1 and K_max >= 2, got N={levels} K_max={cutoff}"
            )));
        }
        if !beta.is_finite() {
            return Err(DynamicsError::Dimension("beta must be finite".into()));
        }
        let sqrt_k = (0..=cutoff + 1).map(|k| (k as f64).sqrt()).collect();
        let sqrt_pair = (0..=cutoff + 2)
            .map(|k| ((k * k.saturating_sub(1)) as f64).sqrt())
            .collect();
        Ok(Self {
            beta,
            profile,
            levels,
            cutoff,
            sqrt_k,
            sqrt_pair,
        })
    }

    pub fn from_spec(spec: &SystemSpec) -> Result<Self, DynamicsError> {
        spec.validate()?;
        Self::new(
            spec.beta(),
            coupling_profile(spec.detector, spec.levels, spec.g),
            spec.levels,
            spec.fock_cutoff,
        )
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn profile(&self) -> &CouplingProfile {
        &self.profile
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.levels * (self.cutoff + 1)
    }

    /// Same operator with `beta -> -beta`, i.e. the complex conjugate of `H_I`.
    pub fn conjugate(&self) -> Self {
        Self {
            beta: -self.beta,
            ..self.clone()
        }
    }

    /// Fastest rate in the generator, used to pick the first step.
    pub(crate) fn rate_scale(&self) -> f64 {
        let k = self.cutoff as f64;
        let g = self.profile.max();
        (g * k.sqrt()).max(self.beta.abs() * k)
    }

    /// Writes `dp/dt = -i H_I p` into `out`. Amplitudes beyond the cutoff are
    /// treated as zero, which keeps the truncated generator anti-Hermitian.
    pub(crate) fn apply(&self, p: &[Complex64], out: &mut [Complex64]) {
        let w = self.cutoff + 1;
        let beta = self.beta;
        let g = self.profile.couplings();
        let rt = &self.sqrt_k;
        let pair = &self.sqrt_pair;
        for (j, dst) in out.chunks_exact_mut(w).enumerate().take(self.levels) {
            let row = &p[j * w..(j + 1) * w];
            // beta (sqrt(m(m-1)) p_{m-2} - sqrt((m+1)(m+2)) p_{m+2})
            dst.iter_mut().for_each(|d| *d = Complex64::new(0.0, 0.0));
            if w > 2 {
                for ((d, &a), &c) in dst[2..].iter_mut().zip(&row[..w - 2]).zip(&pair[2..]) {
                    *d += a * (beta * c);
                }
                for ((d, &a), &c) in dst[..w - 2].iter_mut().zip(&row[2..]).zip(&pair[2..]) {
                    *d -= a * (beta * c);
                }
            }
            // -i g_j sqrt(m) p_{j+1, m-1}
            if j + 1 < self.levels {
                let (gj, next) = (g[j], &p[(j + 1) * w..(j + 2) * w]);
                for ((d, &a), &c) in dst[1..].iter_mut().zip(&next[..w - 1]).zip(&rt[1..]) {
                    let x = a * (gj * c);
                    *d += Complex64::new(x.im, -x.re);
                }
            }
            // -i g_{j-1} sqrt(m+1) p_{j-1, m+1}
            if j > 0 {
                let (gj, prev) = (g[j - 1], &p[(j - 1) * w..j * w]);
                for ((d, &a), &c) in dst[..w - 1].iter_mut().zip(&prev[1..]).zip(&rt[1..]) {
                    let x = a * (gj * c);
                    *d += Complex64::new(x.im, -x.re);
                }
            }
        }
    }
}

/// Amplitude derivatives `dp_{j,m}/dt` for `state` under `gen`.
pub fn rhs_apply(state: &StateVector, gen: &GeneratorSpec) -> Result<StateVector, DynamicsError> {
    if state.levels() != gen.levels() || state.cutoff() != gen.cutoff() {
        return Err(DynamicsError::Dimension(format!(
            "state is {}x{}, generator is {}x{}",
            state.levels(),
            state.cutoff() + 1,
            gen.levels(),
            gen.cutoff() + 1
        )));
    }
    let mut out = StateVector::zeros(state.levels(), state.cutoff());
    out.time = state.time;
    gen.apply(state.amplitudes(), out.amplitudes_mut());
    Ok(out)
}
