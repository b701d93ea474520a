//! Dense reference propagator `exp(-i H_I t)` by Hermitian eigendecomposition.
//!
//! `H_I` is assembled from Kronecker products of the field and detector
//! operators rather than from the amplitude equations, so it does not share
//! code with the integrator's right-hand side.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{DynamicsError, GeneratorSpec};
use crate::statespace::StateVector;

/// Largest Hilbert-space dimension the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 2000;

fn annihilation(cutoff: usize) -> DMatrix<Complex64> {
    let w = cutoff + 1;
    DMatrix::from_fn(w, w, |r, c| {
        if c == r + 1 {
            Complex64::new((c as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `|i><j|` on the detector, 1-based.
fn transition(levels: usize, i: usize, j: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(levels, levels);
    m[(i - 1, j - 1)] = Complex64::new(1.0, 0.0);
    m
}

/// Dense `H_I` in the basis ordered like [`StateVector`]: detector major.
pub fn assemble_hamiltonian(gen: &GeneratorSpec) -> DMatrix<Complex64> {
    let n = gen.levels();
    let a = annihilation(gen.cutoff());
    let ad = a.adjoint();
    let id_det = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let ad2 = &ad * &ad;
    let squeeze = (a2 - ad2) * Complex64::new(0.0, -gen.beta());
    let mut h = id_det.kronecker(&squeeze);
    for (i, &g) in gen.profile().couplings().iter().enumerate() {
        let j = i + 1;
        let up = transition(n, j + 1, j).kronecker(&a);
        let down = transition(n, j, j + 1).kronecker(&ad);
        h += (up + down) * Complex64::new(g, 0.0);
    }
    h
}

/// Exact propagation of `state0` by `t` under `gen`.
pub fn expm_oracle(
    gen: &GeneratorSpec,
    state0: &StateVector,
    t: f64,
) -> Result<StateVector, DynamicsError> {
    let dim = gen.dim();
    if dim > ORACLE_MAX_DIM {
        return Err(DynamicsError::OracleTooLarge {
            dim,
            max: ORACLE_MAX_DIM,
        });
    }
    if state0.levels() != gen.levels() || state0.cutoff() != gen.cutoff() {
        return Err(DynamicsError::Dimension(
            "oracle state and generator disagree on dimensions".into(),
        ));
    }
    let eig = SymmetricEigen::new(assemble_hamiltonian(gen));
    let psi0 = DVector::from_column_slice(state0.amplitudes());
    let mut coeff = eig.eigenvectors.adjoint() * psi0;
    for (c, &lambda) in coeff.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= Complex64::from_polar(1.0, -lambda * t);
    }
    let psi = &eig.eigenvectors * coeff;
    StateVector::from_amplitudes(
        gen.levels(),
        gen.cutoff(),
        psi.iter().copied().collect(),
        state0.time + t,
    )
    .map_err(DynamicsError::from)
}
