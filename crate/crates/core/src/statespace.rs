//! Joint detector-field state and the observables computed from it.
//!
//! Amplitudes are stored densely as `p[j][k]` with detector level `j` in
//! `1..=N` (1-based) and photon number `k` in `0..=K_max` (0-based).

use num_complex::Complex64;
use thiserror::Error;

/// Below this mean photon number the Mandel factor is reported as undefined.
pub const MANDEL_UNDEFINED_BELOW: f64 = 1e-12;

/// Distributions are renormalized for reporting only below this norm error.
pub const REPORT_NORM_LIMIT: f64 = 1e-8;

/// Number of top Fock levels counted as the truncation tail.
pub const TAIL_WIDTH: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("invalid system: {0}")]
    InvalidSpec(String),
    #[error("state norm drifted by {drift:.3e}, refusing to renormalize")]
    NormDrift { drift: f64 },
    #[error("amplitude table is {found} entries, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// Equidistant N-level ladder with `g_j = g sqrt(j)`.
    Ladder,
    /// `N - 1` identical two-level atoms, described in the Dicke basis.
    TwoLevelEnsemble,
    /// Harmonic oscillator detector truncated to `N` levels.
    HarmonicOscillatorTruncated,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ladder => "ladder",
            DetectorKind::TwoLevelEnsemble => "dicke",
            DetectorKind::HarmonicOscillatorTruncated => "ho",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "ladder" => Some(DetectorKind::Ladder),
            "dicke" | "two-level" | "two-level-ensemble" | "ensemble" => {
                Some(DetectorKind::TwoLevelEnsemble)
            }
            "ho" | "oscillator" | "harmonic" => Some(DetectorKind::HarmonicOscillatorTruncated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the population of the top [`TAIL_WIDTH`] Fock levels.
    pub tail_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            tail_threshold: 1e-12,
        }
    }
}

/// Full physical configuration of a run. Energies are in units of the bare
/// cavity frequency, times in units of its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub detector: DetectorKind,
    /// Detector levels; for the two-level ensemble this is `atoms + 1`.
    pub levels: usize,
    pub g: f64,
    pub epsilon: f64,
    pub fock_cutoff: usize,
    pub t_final: f64,
    pub tolerances: Tolerances,
}

impl SystemSpec {
    /// Squeezing rate of the interaction-picture generator, always `epsilon / 4`.
    pub fn beta(&self) -> f64 {
        self.epsilon / 4.0
    }

    pub fn validate(&self) -> Result<(), StateError> {
        let bad = |msg: String| Err(StateError::InvalidSpec(msg));
        if self.levels < 1 {
            return bad("detector needs at least one level".into());
        }
        if self.detector == DetectorKind::HarmonicOscillatorTruncated && self.levels < 4 {
            return bad(format!(
                "oscillator truncation needs at least 4 levels, got {}",
                self.levels
            ));
        }
        if self.fock_cutoff < 2 {
            return bad(format!("Fock cutoff must be >= 2, got {}", self.fock_cutoff));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return bad(format!("coupling g must be finite and >= 0, got {}", self.g));
        }
        if !self.epsilon.is_finite() {
            return bad("modulation depth must be finite".into());
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return bad(format!("t_final must be finite and >= 0, got {}", self.t_final));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("rel_tol", t.rel_tol),
            ("abs_tol", t.abs_tol),
            ("tail_threshold", t.tail_threshold),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Ladder couplings `g_1..g_{N-1}`; `g_0` and `g_{j>=N}` are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    couplings: Vec<f64>,
}

impl CouplingProfile {
    pub fn new(couplings: Vec<f64>) -> Result<Self, StateError> {
        if let Some(bad) = couplings.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(StateError::InvalidSpec(format!(
                "couplings must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self { couplings })
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Number of detector levels this profile connects.
    pub fn levels(&self) -> usize {
        self.couplings.len() + 1
    }

    /// `g_j` with the boundary convention `g_0 = g_{j>=N} = 0`.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.couplings.get(j - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn max(&self) -> f64 {
        self.couplings.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    levels: usize,
    cutoff: usize,
    amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl StateVector {
    /// Joint vacuum `|1, 0>`: detector in its ground level, no photons.
    pub fn new_vacuum(spec: &SystemSpec) -> Result<Self, StateError> {
        spec.validate()?;
        Ok(Self::vacuum(spec.levels, spec.fock_cutoff))
    }

    pub(crate) fn vacuum(levels: usize, cutoff: usize) -> Self {
        let mut s = Self::zeros(levels, cutoff);
        s.amplitudes[0] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn zeros(levels: usize, cutoff: usize) -> Self {
        Self {
            levels,
            cutoff,
            amplitudes: vec![Complex64::new(0.0, 0.0); levels * (cutoff + 1)],
            time: 0.0,
        }
    }

    /// Wraps a row-major amplitude table (detector level major).
    pub fn from_amplitudes(
        levels: usize,
        cutoff: usize,
        amplitudes: Vec<Complex64>,
        time: f64,
    ) -> Result<Self, StateError> {
        let expected = levels * (cutoff + 1);
        if amplitudes.len() != expected {
            return Err(StateError::Dimension {
                expected,
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            levels,
            cutoff,
            amplitudes,
            time,
        })
    }

    /// Builds a state from `(level, photons, amplitude)` triples, then normalizes it.
    pub fn from_components(
        levels: usize,
        cutoff: usize,
        components: &[(usize, usize, Complex64)],
    ) -> Self {
        let mut s = Self::zeros(levels, cutoff);
        for &(j, k, amp) in components {
            *s.amp_mut(j, k) += amp;
        }
        let norm = s.norm_sqr().sqrt();
        if norm > 0.0 {
            s.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
        s
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    #[inline]
    fn index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j >= 1 && j <= self.levels && k <= self.cutoff);
        (j - 1) * (self.cutoff + 1) + k
    }

    /// Amplitude `p_{j,k}`; `j` is 1-based.
    pub fn amp(&self, j: usize, k: usize) -> Complex64 {
        self.amplitudes[self.index(j, k)]
    }

    pub fn amp_mut(&mut self, j: usize, k: usize) -> &mut Complex64 {
        let i = self.index(j, k);
        &mut self.amplitudes[i]
    }

    /// Row of amplitudes for detector level `j` (1-based).
    pub fn level_row(&self, j: usize) -> &[Complex64] {
        let w = self.cutoff + 1;
        &self.amplitudes[(j - 1) * w..j * w]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_error(&self) -> f64 {
        (self.norm_sqr() - 1.0).abs()
    }

    /// Population of the top Fock levels `k > K_max - 4`.
    pub fn tail_occupation(&self) -> f64 {
        let first = (self.cutoff + 1).saturating_sub(TAIL_WIDTH);
        (1..=self.levels)
            .flat_map(|j| self.level_row(j)[first..].iter())
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Largest amplitude magnitude over the `(j + k)` even sector, which
    /// stays empty for evolution from `|1, 0>`.
    pub fn parity_leak(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 1..=self.levels {
            for (k, a) in self.level_row(j).iter().enumerate() {
                if (j + k) % 2 == 0 {
                    worst = worst.max(a.norm());
                }
            }
        }
        worst
    }
}

/// `<n> = sum k |p_{j,k}|^2`.
pub fn mean_photon(state: &StateVector) -> f64 {
    photon_distribution(state)
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum()
}

pub fn photon_second_moment(state: &StateVector) -> f64 {
    photon_distribution(state)
        .iter()
        .enumerate()
        .map(|(k, p)| (k * k) as f64 * p)
        .sum()
}

/// Mandel factor `(Var n - <n>) / <n>`, or `None` when `<n>` is below
/// [`MANDEL_UNDEFINED_BELOW`].
pub fn mandel_q(state: &StateVector) -> Option<f64> {
    let n = mean_photon(state);
    let n2 = photon_second_moment(state);
    mandel_from_moments(n, n2)
}

pub(crate) fn mandel_from_moments(n: f64, n2: f64) -> Option<f64> {
    (n >= MANDEL_UNDEFINED_BELOW).then(|| (n2 - n * n - n) / n)
}

/// First and second moments of `x = (a + a^+)/sqrt 2` and `p = (a - a^+)/(i sqrt 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub x_mean: f64,
    pub p_mean: f64,
    pub x_var: f64,
    pub p_var: f64,
    /// Symmetrized covariance `<(xp + px)/2> - <x><p>`.
    pub xp_cov: f64,
}

impl QuadratureMoments {
    pub fn uncertainty_product(&self) -> f64 {
        self.x_var * self.p_var - self.xp_cov * self.xp_cov
    }
}

pub fn quadrature_moments(state: &StateVector) -> QuadratureMoments {
    let kmax = state.cutoff();
    let mut a1 = Complex64::new(0.0, 0.0);
    let mut a2 = Complex64::new(0.0, 0.0);
    let mut n = 0.0;
    for j in 1..=state.levels() {
        let row = state.level_row(j);
        for k in 0..=kmax {
            let c = row[k].conj();
            n += k as f64 * row[k].norm_sqr();
            if k < kmax {
                a1 += c * row[k + 1] * ((k + 1) as f64).sqrt();
            }
            if k + 1 < kmax {
                a2 += c * row[k + 2] * (((k + 1) * (k + 2)) as f64).sqrt();
            }
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let x_mean = sqrt2 * a1.re;
    let p_mean = sqrt2 * a1.im;
    let x2 = a2.re + n + 0.5;
    let p2 = n + 0.5 - a2.re;
    QuadratureMoments {
        x_mean,
        p_mean,
        x_var: x2 - x_mean * x_mean,
        p_var: p2 - p_mean * p_mean,
        xp_cov: a2.im - x_mean * p_mean,
    }
}

/// `P_K = sum_j |p_{j,K}|^2` for `K = 0..=K_max`.
pub fn photon_distribution(state: &StateVector) -> Vec<f64> {
    let mut probs = vec![0.0; state.cutoff() + 1];
    for j in 1..=state.levels() {
        for (p, a) in probs.iter_mut().zip(state.level_row(j)) {
            *p += a.norm_sqr();
        }
    }
    probs
}

/// `P_j = sum_k |p_{j,k}|^2` for `j = 1..=N`.
pub fn detector_distribution(state: &StateVector) -> Vec<f64> {
    (1..=state.levels())
        .map(|j| state.level_row(j).iter().map(|a| a.norm_sqr()).sum())
        .collect()
}

/// Mean detector excitation `sum (j - 1) P_j`, the ladder analogue of `<b^+ b>`.
pub fn mean_excitation(state: &StateVector) -> f64 {
    detector_distribution(state)
        .iter()
        .enumerate()
        .map(|(i, p)| i as f64 * p)
        .sum()
}

/// Purity `Tr(rho_f^2)` of the reduced field state.
///
/// For a pure joint state both reduced density matrices share their nonzero
/// spectrum, so the trace is taken over whichever factor is smaller.
pub fn field_purity(state: &StateVector) -> f64 {
    if state.levels() <= state.cutoff() + 1 {
        detector_side_purity(state)
    } else {
        field_side_purity(state)
    }
}

fn detector_side_purity(state: &StateVector) -> f64 {
    let n = state.levels();
    let mut total = 0.0;
    for j in 1..=n {
        let rj = state.level_row(j);
        for jp in j..=n {
            let rjp = state.level_row(jp);
            let rho: Complex64 = rj.iter().zip(rjp).map(|(a, b)| a * b.conj()).sum();
            let w = if j == jp { 1.0 } else { 2.0 };
            total += w * rho.norm_sqr();
        }
    }
    total
}

pub(crate) fn field_side_purity(state: &StateVector) -> f64 {
    let width = state.cutoff() + 1;
    let mut rho = vec![Complex64::new(0.0, 0.0); width * width];
    for j in 1..=state.levels() {
        let row = state.level_row(j);
        for k in 0..width {
            if row[k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for kp in 0..width {
                rho[k * width + kp] += row[k] * row[kp].conj();
            }
        }
    }
    rho.iter().map(|r| r.norm_sqr()).sum()
}

/// One time sample of every reported observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub time: f64,
    pub n_mean: f64,
    pub n_second_moment: f64,
    pub mandel_q: Option<f64>,
    pub x_var: f64,
    pub p_var: f64,
    pub xp_cov: f64,
    pub purity: f64,
    pub level_probs: Vec<f64>,
    pub photon_probs: Vec<f64>,
    pub norm_error: f64,
}

impl ObservableRecord {
    /// Evaluates all observables. Distributions are renormalized when the
    /// norm error is below [`REPORT_NORM_LIMIT`]; beyond that this fails.
    pub fn from_state(state: &StateVector) -> Result<Self, StateError> {
        let norm = state.norm_sqr();
        let norm_error = (norm - 1.0).abs();
        if !(norm_error < REPORT_NORM_LIMIT) {
            return Err(StateError::NormDrift { drift: norm_error });
        }
        let mut photon_probs = photon_distribution(state);
        let mut level_probs = detector_distribution(state);
        photon_probs.iter_mut().for_each(|p| *p /= norm);
        level_probs.iter_mut().for_each(|p| *p /= norm);
        let n_mean = mean_photon(state);
        let n_second_moment = photon_second_moment(state);
        let quad = quadrature_moments(state);
        Ok(Self {
            time: state.time,
            n_mean,
            n_second_moment,
            mandel_q: mandel_from_moments(n_mean, n_second_moment),
            x_var: quad.x_var,
            p_var: quad.p_var,
            xp_cov: quad.xp_cov,
            purity: field_purity(state),
            level_probs,
            photon_probs,
            norm_error,
        })
    }

    /// Mean detector excitation from the stored level distribution.
    pub fn n_detector(&self) -> f64 {
        self.level_probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }
}
