//! Fixed-excitation blocks of the unmodulated Hamiltonian and the photon cap
//! they imply.
//!
//! Without modulation `H_I` conserves `E = (j - 1) + k`. The block for a given
//! `E` lives on `(1, E), (2, E - 1), ...` and is symmetric tridiagonal with a
//! zero diagonal, so its spectrum is symmetric about zero and it is singular
//! exactly when its dimension is odd. A zero mode in every block
//! `E = 0, 2, 4, ...` lets the squeezing term pump photon pairs resonantly up
//! the chain; the first even-dimensional block stops it.

use thiserror::Error;

use crate::statespace::CouplingProfile;

/// Relative size below which an eigenvalue counts as a null eigenvalue.
pub const NULL_REL_TOL: f64 = 1e-12;
/// Relative size below which a null-vector component counts as absent.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("QL iteration did not converge for eigenvalue {index} after {iterations} sweeps")]
    NoConvergence { index: usize, iterations: usize },
    #[error("off-diagonal entry {position} vanishes; the null-vector structure needs all couplings > 0")]
    ZeroCoupling { position: usize },
}

/// Symmetric tridiagonal block with zero diagonal for excitation `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationBlock {
    pub excitation: usize,
    /// `offdiag[i - 1]` couples basis states `i` and `i + 1` (1-based), that
    /// is `(i, E - i + 1)` and `(i + 1, E - i)`.
    pub offdiag: Vec<f64>,
}

impl ExcitationBlock {
    pub fn dim(&self) -> usize {
        self.offdiag.len() + 1
    }

    /// `(detector level, photons)` of basis position `i` (1-based).
    pub fn basis_state(&self, i: usize) -> (usize, usize) {
        (i, self.excitation + 1 - i)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[i][i + 1] = e;
            m[i + 1][i] = e;
        }
        m
    }
}

/// Block of excitation `E` for an `N`-level detector: dimension `min(N, E + 1)`,
/// off-diagonal `g_j sqrt(E - j + 1)`.
pub fn build_block(profile: &CouplingProfile, levels: usize, excitation: usize) -> ExcitationBlock {
    let dim = levels.min(excitation + 1);
    let offdiag = (1..dim)
        .map(|j| profile.get(j) * ((excitation + 1 - j) as f64).sqrt())
        .collect();
    ExcitationBlock {
        excitation,
        offdiag,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector of `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

impl TridiagEigen {
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// Full eigensystem of the block by the implicit-shift QL algorithm.
pub fn eigen_tridiag(block: &ExcitationBlock) -> Result<TridiagEigen, SpectralError> {
    let diag = vec![0.0; block.dim()];
    symmetric_tridiagonal_ql(&diag, &block.offdiag)
}

/// Implicit QL with Wilkinson shifts for a symmetric tridiagonal matrix with
/// diagonal `diag` and sub-diagonal `offdiag` (`offdiag.len() + 1 == diag.len()`).
pub fn symmetric_tridiagonal_ql(diag: &[f64], offdiag: &[f64]) -> Result<TridiagEigen, SpectralError> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n.max(1), "tridiagonal shape");
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let norm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    // z[row][col]; column k ends up as the eigenvector of d[k]
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd.max(norm) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(SpectralError::NoConvergence {
                    index: l,
                    iterations: MAX_QL_ITERATIONS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let zi1 = row[i + 1];
                    row[i + 1] = s * row[i] + c * zi1;
                    row[i] = c * row[i] - s * zi1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(TridiagEigen {
        values: order.iter().map(|&k| d[k]).collect(),
        vectors: order
            .iter()
            .map(|&k| z.iter().map(|row| row[k]).collect())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpace {
    pub has_null: bool,
    /// 1-based block positions carrying weight in the null vector.
    pub support: Vec<usize>,
    pub null_vector: Option<Vec<f64>>,
    pub min_abs_eigenvalue: f64,
    pub spectral_radius: f64,
}

/// Locates a null eigenvalue of the block and the support of its eigenvector.
pub fn null_space_analysis(block: &ExcitationBlock) -> Result<NullSpace, SpectralError> {
    if let Some(pos) = block.offdiag.iter().position(|&x| !(x > 0.0)) {
        return Err(SpectralError::ZeroCoupling { position: pos + 1 });
    }
    let eig = eigen_tridiag(block)?;
    let radius = eig.spectral_radius();
    let (idx, min_abs) = eig
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("block has at least one eigenvalue");
    // a 1x1 block is the zero matrix
    let has_null = min_abs <= NULL_REL_TOL * radius || radius == 0.0;
    let (support, null_vector) = if has_null {
        let v = eig.vectors[idx].clone();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let support = v
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > SUPPORT_REL_TOL * norm)
            .map(|(i, _)| i + 1)
            .collect();
        (support, Some(v))
    } else {
        (Vec::new(), None)
    };
    Ok(NullSpace {
        has_null,
        support,
        null_vector,
        min_abs_eigenvalue: min_abs,
        spectral_radius: radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonCap {
    Bounded(usize),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityPrediction {
    pub max_photons: PhotonCap,
    /// Even excitations `0, 2, 4, ...` whose blocks carry a null eigenvalue,
    /// up to the point where the pattern is settled.
    pub resonant_chain: Vec<usize>,
}

/// Predicts how many photons the modulation can create from `|1, 0>`.
///
/// Walks `E = 0, 2, 4, ...` while each block has a zero mode. The chain
/// breaks at the first even-dimensional block (giving `N - 2` photons for
/// even `N`); once the block dimension saturates at an odd `N` it never
/// breaks. `N = 1` is the bare cavity, which grows without limit.
pub fn predict_max_photons(levels: usize) -> ParityPrediction {
    assert!(levels >= 1, "detector needs at least one level");
    if levels == 1 {
        return ParityPrediction {
            max_photons: PhotonCap::Unbounded,
            resonant_chain: vec![0],
        };
    }
    // any strictly positive profile gives the same pattern
    let profile = CouplingProfile::new((1..levels).map(|j| (j as f64).sqrt()).collect())
        .expect("positive couplings");
    let mut chain = Vec::new();
    let mut excitation = 0;
    loop {
        let block = build_block(&profile, levels, excitation);
        let null = null_space_analysis(&block).expect("positive couplings");
        if !null.has_null {
            let last = *chain.last().expect("E = 0 block is always null");
            return ParityPrediction {
                max_photons: PhotonCap::Bounded(last),
                resonant_chain: chain,
            };
        }
        chain.push(excitation);
        if block.dim() == levels {
            return ParityPrediction {
                max_photons: PhotonCap::Unbounded,
                resonant_chain: chain,
            };
        }
        excitation += 2;
    }
}

/// One row of the block report.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSummary {
    pub excitation: usize,
    pub dim: usize,
    pub has_null: bool,
    pub min_abs_eigenvalue: f64,
}

pub fn block_report(
    profile: &CouplingProfile,
    levels: usize,
    max_excitation: usize,
) -> Result<Vec<BlockSummary>, SpectralError> {
    (0..=max_excitation)
        .map(|e| {
            let block = build_block(profile, levels, e);
            let null = if block.dim() == 1 {
                NullSpace {
                    has_null: true,
                    support: vec![1],
                    null_vector: Some(vec![1.0]),
                    min_abs_eigenvalue: 0.0,
                    spectral_radius: 0.0,
                }
            } else {
                null_space_analysis(&block)?
            };
            Ok(BlockSummary {
                excitation: e,
                dim: block.dim(),
                has_null: null.has_null,
                min_abs_eigenvalue: null.min_abs_eigenvalue,
            })
        })
        .collect()
}
