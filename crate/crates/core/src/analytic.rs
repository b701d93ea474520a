//! Closed-form results for the empty cavity and for an oscillator detector
//! (`N -> infinity` with `g_j = g sqrt(j)`), starting from the joint vacuum.
//!
//! The oscillator solution is written with
//! `C_b = cosh(bt)`, `S_b = sinh(bt)`, `c_y = cos(yt)` and `s_y = sin(yt)/y`,
//! where `y = sqrt(g^2 - b^2)`. For `|b| > g` the same expressions continue
//! analytically to `cosh`/`sinh` of `sqrt(b^2 - g^2) t`, and at `|b| = g`
//! they reduce to `c_y = 1`, `s_y = t`.

use num_complex::Complex64;

use crate::statespace::MANDEL_UNDEFINED_BELOW;

/// `|g| - |beta|` below this (relative) is treated as the branch point.
pub const DEGENERATE_REL_TOL: f64 = 1e-14;

// |y t| below which c_y and s_y come from their Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmptyCavity {
    pub n_mean: f64,
    pub mandel_q: f64,
    pub p_var: f64,
    pub x_var: f64,
}

/// Squeezed vacuum of the unloaded cavity after time `t`.
pub fn empty_cavity(t: f64, epsilon: f64) -> EmptyCavity {
    let n_mean = (epsilon * t / 2.0).sinh().powi(2);
    EmptyCavity {
        n_mean,
        mandel_q: 1.0 + 2.0 * n_mean,
        p_var: 0.5 * (-epsilon * t).exp(),
        x_var: 0.5 * (epsilon * t).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `g > |beta|`: oscillating exchange between field and detector.
    Trigonometric,
    /// `g < |beta|`: squeezing dominates.
    Hyperbolic,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoParams {
    pub beta: f64,
    pub g: f64,
}

impl HoParams {
    pub fn new(beta: f64, g: f64) -> Self {
        Self { beta, g }
    }

    pub fn from_epsilon(epsilon: f64, g: f64) -> Self {
        Self::new(epsilon / 4.0, g)
    }

    /// `g^2 - beta^2`; its sign selects the branch.
    pub fn gamma_sq(&self) -> f64 {
        (self.g - self.beta) * (self.g + self.beta)
    }

    /// `sqrt(|g^2 - beta^2|)`, i.e. `gamma` or `gamma~` depending on the branch.
    pub fn gamma(&self) -> f64 {
        self.gamma_sq().abs().sqrt()
    }

    pub fn branch(&self) -> Branch {
        let (g, b) = (self.g.abs(), self.beta.abs());
        if (g - b).abs() <= DEGENERATE_REL_TOL * g.max(b) {
            Branch::Degenerate
        } else if g > b {
            Branch::Trigonometric
        } else {
            Branch::Hyperbolic
        }
    }

    /// `(c_y, s_y)` at time `t` on the appropriate branch.
    pub fn exchange_functions(&self, t: f64) -> (f64, f64) {
        let gsq = self.gamma_sq();
        let gamma = gsq.abs().sqrt();
        if self.branch() == Branch::Degenerate || gamma * t.abs() < SERIES_CUTOFF {
            // c = 1 - x/2 + x^2/24, s = t (1 - x/6 + x^2/120), x = (g^2 - b^2) t^2
            let x = gsq * t * t;
            let c = 1.0 - x / 2.0 + x * x / 24.0;
            let s = t * (1.0 - x / 6.0 + x * x / 120.0);
            (c, s)
        } else if gsq > 0.0 {
            ((gamma * t).cos(), (gamma * t).sin() / gamma)
        } else {
            ((gamma * t).cosh(), (gamma * t).sinh() / gamma)
        }
    }
}

/// Coefficients of one mode operator in the initial operators:
/// `op(t) = a0 * a_0 + b0 * b_0 + a0_dag * a_0^+ + b0_dag * b_0^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoeffs {
    pub a0: Complex64,
    pub b0: Complex64,
    pub a0_dag: Complex64,
    pub b0_dag: Complex64,
}

impl ModeCoeffs {
    /// `|u_a|^2 + |u_b|^2 - |v_a|^2 - |v_b|^2`, equal to 1 when `[op, op^+] = 1`.
    pub fn commutator(&self) -> f64 {
        self.a0.norm_sqr() + self.b0.norm_sqr() - self.a0_dag.norm_sqr() - self.b0_dag.norm_sqr()
    }

    /// `<op^+ op>` in the joint vacuum.
    pub fn vacuum_number(&self) -> f64 {
        self.a0_dag.norm_sqr() + self.b0_dag.norm_sqr()
    }

    /// `<op^2>` in the joint vacuum.
    pub fn vacuum_pair(&self) -> Complex64 {
        self.a0 * self.a0_dag + self.b0 * self.b0_dag
    }
}

/// Heisenberg-picture solution for the field `a(t)` and detector `b(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovCoeffs {
    pub a: ModeCoeffs,
    pub b: ModeCoeffs,
}

impl BogoliubovCoeffs {
    /// `[a(t), b(t)]`, which must vanish.
    pub fn cross_commutator(&self) -> Complex64 {
        let (a, b) = (&self.a, &self.b);
        a.a0 * b.a0_dag - a.a0_dag * b.a0 + a.b0 * b.b0_dag - a.b0_dag * b.b0
    }

    /// `[a(t), b(t)^+]`, which must vanish.
    pub fn cross_commutator_dag(&self) -> Complex64 {
        let (a, b) = (&self.a, &self.b);
        a.a0 * b.a0.conj() - a.a0_dag * b.a0_dag.conj() + a.b0 * b.b0.conj()
            - a.b0_dag * b.b0_dag.conj()
    }
}

pub fn ho_bogoliubov_coeffs(params: &HoParams, t: f64) -> BogoliubovCoeffs {
    let HoParams { beta, g } = *params;
    let (cb, sb) = ((beta * t).cosh(), (beta * t).sinh());
    let (cg, sg) = params.exchange_functions(t);
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    let a = ModeCoeffs {
        a0: re(cb * cg + beta * sb * sg),
        b0: im(-g * cb * sg),
        a0_dag: re(sb * cg + beta * cb * sg),
        b0_dag: im(g * sb * sg),
    };
    let b = ModeCoeffs {
        b0: re(cb * cg - beta * sb * sg),
        a0: im(-g * cb * sg),
        b0_dag: re(-(sb * cg - beta * cb * sg)),
        a0_dag: im(-g * sb * sg),
    };
    BogoliubovCoeffs { a, b }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoObservables {
    pub n_field: f64,
    pub n_detector: f64,
    /// Undefined while `<n>` is below the reporting threshold.
    pub mandel_q: Option<f64>,
    pub p_var: f64,
    pub x_var: f64,
    /// `(Dp)^2 (Dx)^2 = 1/4 + g^2 beta^2 s_y^4`.
    pub uncertainty_product: f64,
    pub purity: f64,
}

pub fn ho_observables(params: &HoParams, t: f64) -> HoObservables {
    let HoParams { beta, g } = *params;
    let sb = (beta * t).sinh();
    let (s2b, c2b) = ((2.0 * beta * t).sinh(), (2.0 * beta * t).cosh());
    let (cg, sg) = params.exchange_functions(t);
    // s_{2y} = sin(2yt)/(2y) = s_y c_y on every branch
    let s2g = sg * cg;

    let common = sb * sb + beta * beta * c2b * sg * sg;
    let cross = beta * s2b * s2g;
    let n_field = common + cross;
    let n_detector = common - cross;

    let mandel_q = (n_field >= MANDEL_UNDEFINED_BELOW).then(|| {
        let pair = s2b * (1.0 + 2.0 * beta * beta * sg * sg) + 2.0 * beta * c2b * s2g;
        n_field + pair * pair / (4.0 * n_field)
    });

    let p_var = (-2.0 * beta * t).exp() * (0.5 - beta * s2g + beta * beta * sg * sg);
    let x_var = (2.0 * beta * t).exp() * (0.5 + beta * s2g + beta * beta * sg * sg);
    let uncertainty_product = 0.25 + (g * beta).powi(2) * sg.powi(4);
    HoObservables {
        n_field,
        n_detector,
        mandel_q,
        p_var,
        x_var,
        uncertainty_product,
        purity: (4.0 * uncertainty_product).sqrt().recip(),
    }
}

/// Long-time form `(1/4) e^{2 beta t} [1 + (beta/y) sin 2yt + (2 beta^2/y^2) sin^2 yt]`.
///
/// Only meaningful for `beta t >> 1`; at `beta = 0` it returns `1/4` while
/// the exact photon number is zero.
pub fn ho_asymptotic_n(params: &HoParams, t: f64) -> f64 {
    let beta = params.beta;
    let (cg, sg) = params.exchange_functions(t);
    0.25 * (2.0 * beta * t).exp() * (1.0 + 2.0 * beta * sg * cg + 2.0 * beta * beta * sg * sg)
}

/// `<n_b(t)> / <n(t)>`, undefined while no photons are present.
pub fn detector_field_ratio(params: &HoParams, t: f64) -> Option<f64> {
    let obs = ho_observables(params, t);
    (obs.n_field > 0.0).then(|| obs.n_detector / obs.n_field)
}
