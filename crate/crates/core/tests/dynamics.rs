use num_complex::Complex64;
use proptest::prelude::*;

use dce_core::dynamics::{
    coupling_profile, expm_oracle, integrate_adaptive, simulate, uniform_times, GeneratorSpec,
};
use dce_core::spectral::{build_block, eigen_tridiag, predict_max_photons, PhotonCap};
use dce_core::statespace::{
    detector_distribution, mean_photon, photon_distribution, DetectorKind, StateVector,
    SystemSpec, Tolerances,
};
use dce_core::CouplingProfile;

fn loose_tail() -> Tolerances {
    Tolerances {
        tail_threshold: f64::INFINITY,
        ..Tolerances::default()
    }
}

fn max_dev(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn conjugated(s: &StateVector) -> StateVector {
    let amps = s.amplitudes().iter().map(|a| a.conj()).collect();
    StateVector::from_amplitudes(s.levels(), s.cutoff(), amps, 0.0).unwrap()
}

fn vacuum(levels: usize, cutoff: usize) -> StateVector {
    StateVector::from_components(levels, cutoff, &[(1, 0, Complex64::new(1.0, 0.0))])
}

fn kind(i: usize) -> DetectorKind {
    [
        DetectorKind::Ladder,
        DetectorKind::TwoLevelEnsemble,
        DetectorKind::HarmonicOscillatorTruncated,
    ][i % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integrator_matches_dense_propagator(
        k in 0usize..3,
        levels in 4usize..=5,
        cutoff in 2usize..=14,
        g in 1e-3f64..0.1,
        eps in 1e-4f64..1e-2,
        eps_t in 0.0f64..3.0,
    ) {
        let gen = GeneratorSpec::new(eps / 4.0, coupling_profile(kind(k), levels, g), levels, cutoff)
            .unwrap();
        let s0 = vacuum(levels, cutoff);
        let t = eps_t / eps;
        let traj = integrate_adaptive(&s0, &gen, &[t], &loose_tail()).unwrap();
        let exact = expm_oracle(&gen, &s0, t).unwrap();
        prop_assert!(max_dev(&traj.samples[0], &exact) < 1e-8);
    }

    #[test]
    fn conjugate_generator_runs_time_backwards(
        k in 0usize..3,
        cutoff in 4usize..=16,
        g in 1e-3f64..0.05,
        eps in 1e-4f64..1e-2,
        eps_t in 0.1f64..2.0,
    ) {
        let levels = 4;
        let gen = GeneratorSpec::new(eps / 4.0, coupling_profile(kind(k), levels, g), levels, cutoff)
            .unwrap();
        let s0 = vacuum(levels, cutoff);
        let t = eps_t / eps;
        let forward = integrate_adaptive(&s0, &gen, &[t], &loose_tail()).unwrap();
        // U^+ psi = conj(exp(-i H* t) conj(psi))
        let back = integrate_adaptive(
            &conjugated(&forward.samples[0]),
            &gen.conjugate(),
            &[t],
            &loose_tail(),
        )
        .unwrap();
        let recovered = conjugated(&back.samples[0]);
        prop_assert!(max_dev(&recovered, &s0) < 1e-9);
    }
}

fn spec(detector: DetectorKind, levels: usize, cutoff: usize, eps_t: f64) -> SystemSpec {
    SystemSpec {
        detector,
        levels,
        g: 1e-2,
        epsilon: 1e-3,
        fock_cutoff: cutoff,
        t_final: eps_t / 1e-3,
        tolerances: Tolerances::default(),
    }
}

#[test]
fn tighter_tolerance_does_not_move_the_answer() {
    let base = spec(DetectorKind::Ladder, 3, 120, 2.5);
    let mut tight = base.clone();
    tight.tolerances.rel_tol = 1e-13;
    let times = uniform_times(base.t_final, 7);
    let a = simulate(&base, &times, 3, mean_photon).unwrap();
    let b = simulate(&tight, &times, 3, mean_photon).unwrap();
    assert_eq!(a.cutoff, b.cutoff);
    for (x, y) in a.trajectory.samples.iter().zip(&b.trajectory.samples) {
        assert!((x - y).abs() <= 1e-9 * y.max(1e-3), "{x} vs {y}");
    }
}

#[test]
fn doubling_the_cutoff_converges() {
    let times = uniform_times(2000.0, 5);
    let a = simulate(&spec(DetectorKind::Ladder, 5, 90, 2.0), &times, 0, photon_distribution)
        .unwrap();
    let b = simulate(&spec(DetectorKind::Ladder, 5, 180, 2.0), &times, 0, photon_distribution)
        .unwrap();
    for (pa, pb) in a.trajectory.samples.iter().zip(&b.trajectory.samples) {
        for (x, y) in pa.iter().zip(pb) {
            assert!((x - y).abs() < 1e-11);
        }
    }
}

#[test]
fn bare_cavity_grows_without_limit() {
    assert_eq!(predict_max_photons(1).max_photons, PhotonCap::Unbounded);
    let mut s = spec(DetectorKind::Ladder, 1, 400, 4.0);
    s.g = 0.0;
    let times = uniform_times(s.t_final, 5);
    let sim = simulate(&s, &times, 2, mean_photon).unwrap();
    let n = &sim.trajectory.samples;
    assert!(n.windows(2).all(|w| w[1] > w[0]));
    assert!((n[4] - 2f64.sinh().powi(2)).abs() < 1e-8 * n[4]);
}

#[test]
fn blockade_follows_the_two_photon_block() {
    // unmodulated N = 2 from |1, 2>: only the E = 2 block is populated and the
    // photons return with the period set by its eigenvalues
    let g1 = 0.01;
    let profile = CouplingProfile::new(vec![g1]).unwrap();
    let eig = eigen_tridiag(&build_block(&profile, 2, 2)).unwrap();
    let omega = eig.values[1];
    let gen = GeneratorSpec::new(0.0, profile, 2, 6).unwrap();
    let s0 = StateVector::from_components(2, 6, &[(1, 2, Complex64::new(1.0, 0.0))]);
    let times = uniform_times(1000.0, 21);
    let traj = integrate_adaptive(&s0, &gen, &times, &loose_tail()).unwrap();
    for (t, s) in traj.iter() {
        let expected = (omega * t).cos().powi(2);
        assert!((s.amp(1, 2).norm_sqr() - expected).abs() < 1e-10);
        assert!((s.amp(2, 1).norm_sqr() - (1.0 - expected)).abs() < 1e-10);
    }
}

#[test]
fn even_detector_keeps_photons_below_its_cap() {
    for levels in [2, 4, 6] {
        let cap = match predict_max_photons(levels).max_photons {
            PhotonCap::Bounded(k) => k,
            PhotonCap::Unbounded => panic!("even N is bounded"),
        };
        assert_eq!(cap, levels - 2);
        let s = spec(DetectorKind::Ladder, levels, 40, 3.0);
        let times = uniform_times(s.t_final, 31);
        let sim = simulate(&s, &times, 3, photon_distribution).unwrap();
        let worst = sim
            .trajectory
            .samples
            .iter()
            .map(|p| p.iter().skip(cap + 1).sum::<f64>())
            .fold(0.0, f64::max);
        assert!(worst < 1e-2, "N={levels}: {worst}");
    }
}

#[test]
fn even_detector_levels_stay_nearly_empty() {
    let s = spec(DetectorKind::Ladder, 5, 80, 3.0);
    let times = uniform_times(s.t_final, 31);
    let sim = simulate(&s, &times, 2, detector_distribution).unwrap();
    let mut worst = 0.0f64;
    for p in &sim.trajectory.samples {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        worst = worst.max(p[1] + p[3]);
    }
    // levels 2 and 4 are reached only through an odd photon number
    assert!(worst < 1e-3, "{worst}");
}
