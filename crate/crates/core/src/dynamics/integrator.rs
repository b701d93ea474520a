//! Adaptive Dormand-Prince 8(5,3) integration of the amplitude equations.
//!
//! The integrator lands exactly on every requested output time instead of
//! interpolating, and watches the norm and the Fock-space tail after each
//! accepted step.

use num_complex::Complex64;

use super::{DynamicsError, GeneratorSpec};
use crate::statespace::{StateVector, Tolerances};

/// Accepted runs never drift further than this from unit norm.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

const MAX_STEPS: u64 = 50_000_000;
const SAFETY: f64 = 0.9;
// Step ratio bounds h_new / h in [1/3, 6].
const SHRINK_LIMIT: f64 = 3.0;
const GROW_LIMIT: f64 = 1.0 / 6.0;
// PI controller memory.
const PI_BETA: f64 = 0.04;
const ERR_EXPONENT: f64 = 1.0 / 8.0 - PI_BETA * 0.2;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
    pub max_norm_error: f64,
}

/// Samples taken at the requested output times, plus step bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub samples: Vec<S>,
    pub step_stats: StepStats,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.times.iter().copied().zip(self.samples.iter())
    }
}

/// `count` evenly spaced times from 0 to `t_final` inclusive.
pub fn uniform_times(t_final: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_final],
        _ => {
            let mut v: Vec<f64> = (0..count)
                .map(|i| t_final * i as f64 / (count - 1) as f64)
                .collect();
            v[count - 1] = t_final;
            v
        }
    }
}

/// Integrates from `state0` and returns a snapshot at each output time.
pub fn integrate_adaptive(
    state0: &StateVector,
    gen: &GeneratorSpec,
    output_times: &[f64],
    tols: &Tolerances,
) -> Result<Trajectory<StateVector>, DynamicsError> {
    integrate_observed(state0, gen, output_times, tols, |s| s.clone())
}

/// Integrates from `state0`, handing the state at each output time to
/// `observer`. Output times must be strictly increasing and not before
/// `state0.time`; a time equal to `state0.time` samples the initial state.
pub fn integrate_observed<S, F>(
    state0: &StateVector,
    gen: &GeneratorSpec,
    output_times: &[f64],
    tols: &Tolerances,
    mut observer: F,
) -> Result<Trajectory<S>, DynamicsError>
where
    F: FnMut(&StateVector) -> S,
{
    if state0.levels() != gen.levels() || state0.cutoff() != gen.cutoff() {
        return Err(DynamicsError::Dimension(format!(
            "state is {}x{}, generator is {}x{}",
            state0.levels(),
            state0.cutoff() + 1,
            gen.levels(),
            gen.cutoff() + 1
        )));
    }
    if !(tols.rel_tol > 0.0 && tols.abs_tol > 0.0 && tols.tail_threshold > 0.0) {
        return Err(DynamicsError::Config("tolerances must be positive".into()));
    }
    let t0 = state0.time;
    if let Some(w) = output_times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(DynamicsError::Config(format!(
            "output times must be strictly increasing, got {} then {}",
            w[0], w[1]
        )));
    }
    if output_times.first().is_some_and(|&t| !(t >= t0) || !t.is_finite())
        || output_times.last().is_some_and(|t| !t.is_finite())
    {
        return Err(DynamicsError::Config(format!(
            "output times must be finite and start at or after t0 = {t0}"
        )));
    }

    let mut stepper = Dop853::new(gen.dim());
    let mut y = state0.amplitudes().to_vec();
    let norm0 = state0.norm_sqr();
    let mut t = t0;
    let mut stats = StepStats::default();
    let mut times = Vec::with_capacity(output_times.len());
    let mut samples = Vec::with_capacity(output_times.len());
    let mut snapshot = state0.clone();

    let scale = gen.rate_scale();
    let mut h = if scale > 0.0 { (0.05 / scale).min(0.1) } else { 0.1 };
    let mut fac_old: f64 = 1e-4;
    let mut k0_valid = false;

    for &t_out in output_times {
        while t < t_out {
            if stats.accepted + stats.rejected >= MAX_STEPS {
                return Err(DynamicsError::StepLimit { t });
            }
            let remaining = t_out - t;
            let clipped = h >= remaining * (1.0 - 1e-12);
            let h_try = if clipped { remaining } else { h };
            if h_try <= t.abs().max(1.0) * 1e-14 && !clipped {
                return Err(DynamicsError::StepSizeUnderflow { t, h: h_try });
            }
            if !k0_valid {
                gen.apply(&y, &mut stepper.k[0]);
                stats.rhs_evals += 1;
                k0_valid = true;
            }
            let err = stepper.attempt(gen, &y, h_try, tols);
            stats.rhs_evals += 11;
            if !err.is_finite() {
                return Err(DynamicsError::NonFiniteAmplitude { t });
            }
            let fac11 = err.powf(ERR_EXPONENT);
            if err <= 1.0 {
                let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(GROW_LIMIT, SHRINK_LIMIT);
                let h_new = h_try / fac;
                fac_old = err.max(1e-4);
                std::mem::swap(&mut y, &mut stepper.y_new);
                t = if clipped { t_out } else { t + h_try };
                stats.accepted += 1;
                k0_valid = false;

                let norm = y.iter().map(|a| a.norm_sqr()).sum::<f64>();
                if !norm.is_finite() {
                    return Err(DynamicsError::NonFiniteAmplitude { t });
                }
                let drift = (norm - norm0).abs();
                stats.max_norm_error = stats.max_norm_error.max(drift);
                if drift > NORM_DRIFT_LIMIT {
                    return Err(DynamicsError::NormDriftExceeded { t, drift });
                }
                let tail = tail_occupation(&y, gen.levels(), gen.cutoff());
                if tail > tols.tail_threshold {
                    return Err(DynamicsError::TruncationOverflow {
                        t,
                        tail,
                        cutoff: gen.cutoff(),
                    });
                }
                // A short landing step says nothing about the natural step size.
                h = if clipped { h_new.max(h) } else { h_new };
            } else {
                stats.rejected += 1;
                h = h_try / (fac11 / SAFETY).min(SHRINK_LIMIT);
            }
        }
        snapshot.amplitudes_mut().copy_from_slice(&y);
        snapshot.time = t_out;
        times.push(t_out);
        samples.push(observer(&snapshot));
    }

    Ok(Trajectory {
        times,
        samples,
        step_stats: stats,
    })
}

fn tail_occupation(y: &[Complex64], levels: usize, cutoff: usize) -> f64 {
    let w = cutoff + 1;
    let first = w.saturating_sub(crate::statespace::TAIL_WIDTH);
    (0..levels)
        .flat_map(|j| y[j * w + first..(j + 1) * w].iter())
        .map(|a| a.norm_sqr())
        .sum()
}

struct Dop853 {
    k: Vec<Vec<Complex64>>,
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl Dop853 {
    fn new(dim: usize) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k: vec![zero.clone(); STAGES],
            stage: zero.clone(),
            y_new: zero,
        }
    }

    /// One trial step of size `h` from `y` (with `k[0] = f(y)` already in
    /// place). Leaves the 8th-order solution in `y_new` and returns the
    /// scaled error estimate; the step is acceptable when it is <= 1.
    fn attempt(&mut self, gen: &GeneratorSpec, y: &[Complex64], h: f64, tols: &Tolerances) -> f64 {
        for i in 1..STAGES {
            self.stage.copy_from_slice(y);
            for (l, &a) in A[i].iter().enumerate().take(i) {
                if a != 0.0 {
                    let ha = h * a;
                    for (s, kl) in self.stage.iter_mut().zip(&self.k[l]) {
                        *s += kl * ha;
                    }
                }
            }
            gen.apply(&self.stage, &mut self.k[i]);
        }

        let mut err5 = 0.0f64;
        let mut err3 = 0.0f64;
        for idx in 0..y.len() {
            let mut incr = Complex64::new(0.0, 0.0);
            let mut e5 = Complex64::new(0.0, 0.0);
            for s in 0..STAGES {
                let ks = self.k[s][idx];
                if B[s] != 0.0 {
                    incr += ks * B[s];
                }
                if ER[s] != 0.0 {
                    e5 += ks * ER[s];
                }
            }
            let e3 = incr - self.k[0][idx] * BHH[0] - self.k[8][idx] * BHH[1] - self.k[11][idx] * BHH[2];
            let y_new = y[idx] + incr * h;
            self.y_new[idx] = y_new;
            // squared magnitudes avoid the slower hypot in Complex::norm
            let scale = y[idx].norm_sqr().max(y_new.norm_sqr()).sqrt();
            let sk = tols.abs_tol + tols.rel_tol * scale;
            err5 = err5.max(e5.norm_sqr().sqrt() / sk);
            err3 = err3.max(e3.norm_sqr().sqrt() / sk);
        }
        let denom = err5 * err5 + 0.01 * err3 * err3;
        if denom > 0.0 {
            h * err5 * err5 / denom.sqrt()
        } else if denom == 0.0 {
            0.0
        } else {
            f64::NAN
        }
    }
}

const STAGES: usize = 12;

// Butcher tableau of the Dormand-Prince 8(5,3) pair (Hairer's DOP853).
const A: [[f64; STAGES]; STAGES] = [
    [0.0; STAGES],
    [5.260_015_195_876_773E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79E-2, 5.917_517_095_361_37E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685E-2, 0.0, 8.876_275_643_042_054E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        2.413_651_341_592_667E-1,
        0.0,
        -8.845_494_793_282_861E-1,
        9.248_340_032_617_92E-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.703_703_703_703_703_5E-2,
        0.0,
        0.0,
        1.708_286_087_294_738_6E-1,
        1.254_676_875_668_224_2E-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.710_937_5E-2,
        0.0,
        0.0,
        1.702_522_110_195_440_5E-1,
        6.021_653_898_045_596E-2,
        -1.757_812_5E-2,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.709_200_011_850_479E-2,
        0.0,
        0.0,
        1.703_839_257_122_399_8E-1,
        1.072_620_304_463_732_8E-1,
        -1.531_943_774_862_440_2E-2,
        8.273_789_163_814_023E-3,
        0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        6.241_109_587_160_757E-1,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -8.682_193_468_417_26E-1,
        2.759_209_969_944_671E1,
        2.015_406_755_047_789_4E1,
        -4.348_988_418_106_996E1,
        0.0, 0.0, 0.0, 0.0,
    ],
    [
        4.776_625_364_382_643_4E-1,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -5.902_908_268_368_43E-1,
        2.123_005_144_818_119_3E1,
        1.527_923_363_288_242_3E1,
        -3.328_821_096_898_486E1,
        -2.033_120_170_850_862_7E-2,
        0.0, 0.0, 0.0,
    ],
    [
        -9.371_424_300_859_873E-1,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -1.852_006_565_999_696E1,
        2.273_948_709_935_050_5E1,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0, 0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -1.053_449_546_673_725E1,
        -2.000_872_058_224_862_5,
        -1.795_893_186_311_88E1,
        2.794_888_452_941_996E1,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        1.236_056_717_579_430_3E1,
        6.433_927_460_157_636E-1,
        0.0,
    ],
];

#[cfg(test)]
const C: [f64; STAGES] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

const B: [f64; STAGES] = [
    5.429_373_411_656_876_5E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1,
    2.013_654_008_040_303_4E-1,
    4.471_061_572_777_259E-2,
];

// Fifth-order error weights.
const ER: [f64; STAGES] = [
    1.312_004_499_419_488E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1,
    8.192_320_648_511_571E-2,
    -2.235_530_786_388_629_4E-2,
];

// Third-order embedded weights on stages 1, 9 and 12.
const BHH: [f64; 3] = [
    2.440_944_881_889_764E-1,
    7.338_466_882_816_118E-1,
    2.205_882_352_941_176_6E-2,
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::coupling_profile;
    use crate::statespace::{CouplingProfile, DetectorKind};

    #[test]
    fn tableau_rows_sum_to_nodes() {
        for i in 0..STAGES {
            let s: f64 = A[i].iter().sum();
            assert_close!(s, C[i], 1e-13);
        }
        assert_close!(B.iter().sum::<f64>(), 1.0, 1e-14);
        assert_close!(ER.iter().sum::<f64>(), 0.0, 1e-14);
        assert_close!(BHH.iter().sum::<f64>(), 1.0, 1e-14);
    }

    #[test]
    fn quadrature_order_conditions() {
        // sum b_i c_i^q = 1/(q+1) up to q = 7 for an eighth-order method
        for q in 0..8 {
            let s: f64 = B.iter().zip(C).map(|(b, c)| b * c.powi(q)).sum();
            assert_close!(s, 1.0 / (q as f64 + 1.0), 1e-12);
        }
    }

    fn two_level_rabi(g: f64) -> GeneratorSpec {
        GeneratorSpec::new(0.0, CouplingProfile::new(vec![g]).unwrap(), 2, 3).unwrap()
    }

    #[test]
    fn rabi_oscillation_is_exact() {
        // |2,0> <-> |1,1> at frequency g
        let g = 0.3;
        let gen = two_level_rabi(g);
        let s0 = StateVector::from_components(2, 3, &[(2, 0, Complex64::new(1.0, 0.0))]);
        let times = uniform_times(40.0, 9);
        let tols = Tolerances {
            tail_threshold: f64::INFINITY,
            ..Tolerances::default()
        };
        let traj = integrate_adaptive(&s0, &gen, &times, &tols).unwrap();
        for (t, s) in traj.iter() {
            assert_close!(s.amp(2, 0).re, (g * t).cos(), 1e-10);
            assert_close!(s.amp(1, 1).im, -(g * t).sin(), 1e-10);
        }
        assert_eq!(traj.times, times);
        assert!(traj.step_stats.max_norm_error < 1e-12);
    }

    #[test]
    fn samples_land_on_requested_times() {
        let gen = GeneratorSpec::new(1e-3, coupling_profile(DetectorKind::Ladder, 3, 0.01), 3, 40)
            .unwrap();
        let s0 = StateVector::vacuum(3, 40);
        let times = [0.0, 1e-9, 0.5, 3.0, 3.000001, 250.0];
        let traj = integrate_adaptive(&s0, &gen, &times, &Tolerances::default()).unwrap();
        assert_eq!(traj.times, times);
        for (t, s) in traj.iter() {
            assert_eq!(s.time, t);
        }
        assert_eq!(traj.samples[0], s0);
    }

    #[test]
    fn rejects_bad_time_grids() {
        let gen = two_level_rabi(0.1);
        let s0 = StateVector::vacuum(2, 3);
        let tols = Tolerances::default();
        assert!(integrate_adaptive(&s0, &gen, &[1.0, 1.0], &tols).is_err());
        assert!(integrate_adaptive(&s0, &gen, &[-1.0], &tols).is_err());
        assert!(integrate_adaptive(&s0, &gen, &[f64::NAN], &tols).is_err());
        assert!(integrate_adaptive(&StateVector::vacuum(2, 4), &gen, &[1.0], &tols).is_err());
    }

    #[test]
    fn tail_overflow_is_reported() {
        let gen = GeneratorSpec::new(0.05, CouplingProfile::new(vec![]).unwrap(), 1, 6).unwrap();
        let err = integrate_adaptive(
            &StateVector::vacuum(1, 6),
            &gen,
            &[100.0],
            &Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, DynamicsError::TruncationOverflow { cutoff: 6, .. }));
    }

    #[test]
    fn uniform_grid_endpoints() {
        let v = uniform_times(3.0, 4);
        assert_eq!(v, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(uniform_times(1.0, 0).is_empty());
    }
}
