//! Randomized invariants of the model, the trajectory engine, the estimators
//! and the baselines. Oracles here are independent of the library code paths:
//! density matrices for the qubit updates, enumeration for distributions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64 as C;
use proptest::prelude::*;
use weakclock_core::baselines::{cascaded_fisher, cascaded_plan_bmse, oci_bound, CascadedPlan};
use weakclock_core::estimation::{
    bayesian_mmse_estimate, bmse_experiment, dft_objective, mle_estimate, Estimator, Prior,
};
use weakclock_core::model::{averaged_dynamics, kraus_pair, planar_state_update, weak_meas_probabilities};
use weakclock_core::trajectory::{
    enumerate_outcome_distribution, score_trajectory, simulate_trajectory, unpack_enumerated,
    ENUMERATION_LIMIT,
};
use weakclock_core::{Mode, Outcome, PlanarState, ProtocolParams};

type Mat = [[C; 2]; 2];

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn dagger(a: &Mat) -> Mat {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn density(r: f64, phi: f64) -> Mat {
    let (rx, ry) = (r * phi.cos(), r * phi.sin());
    [
        [C::new(0.5, 0.0), C::new(0.5 * rx, -0.5 * ry)],
        [C::new(0.5 * rx, 0.5 * ry), C::new(0.5, 0.0)],
    ]
}

/// `(r_x, r_y, r_z)` of a density matrix.
fn bloch(rho: &Mat) -> [f64; 3] {
    [2.0 * rho[1][0].re, 2.0 * rho[1][0].im, (rho[0][0] - rho[1][1]).re]
}

fn kraus_matrix(g: f64, sign: f64) -> Mat {
    let (c, s) = (g.cos() / 2f64.sqrt(), sign * g.sin() / 2f64.sqrt());
    [[C::new(c, 0.0), C::new(s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
}

/// Outcome probability and normalized post-measurement state after the free
/// evolution `diag(e^{iωτ}, e^{−iωτ})`, with readout flips mixed in.
fn density_step(rho: &Mat, g: f64, omega: f64, tau: f64, p_e: f64, outcome: Outcome) -> (f64, Mat) {
    let (right, wrong) = match outcome {
        Outcome::Zero => (1.0, -1.0),
        Outcome::One => (-1.0, 1.0),
    };
    let branch = |sign: f64, weight: f64| {
        let k = kraus_matrix(g, sign);
        let m = mul(&mul(&k, rho), &dagger(&k));
        m.map(|row| row.map(|v| v * weight))
    };
    let a = branch(right, 1.0 - p_e);
    let b = branch(wrong, p_e);
    let mut post = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            post[i][j] = a[i][j] + b[i][j];
        }
    }
    let p = (post[0][0] + post[1][1]).re;
    let v: Mat = [
        [C::from_polar(1.0, omega * tau), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::from_polar(1.0, -omega * tau)],
    ];
    let evolved = mul(&mul(&v, &post), &dagger(&v));
    (p, evolved.map(|row| row.map(|x| x / p)))
}

fn outcome(bit: bool) -> Outcome {
    Outcome::from_bit(bit)
}

fn protocol(g: f64, tau: f64, t: f64, n: usize, mode: Mode) -> ProtocolParams {
    ProtocolParams::new(g, tau, t, n, FRAC_PI_2 / tau, mode).unwrap()
}

fn strength() -> impl Strategy<Value = f64> {
    (1e-3..=1.0f64).prop_map(|u| u * FRAC_PI_4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kraus_pair_is_complete(g in strength()) {
        let c = kraus_pair(g).unwrap().completeness();
        prop_assert!((c[0][0] - 1.0).abs() < 1e-14 && (c[1][1] - 1.0).abs() < 1e-14);
        prop_assert!(c[0][1].abs() < 1e-14 && c[1][0].abs() < 1e-14);
    }

    #[test]
    fn probabilities_are_normalized(
        g in 0.0..=FRAC_PI_4, p_e in 0.0..=0.5f64, r in 0.0..=1.0f64, phi in -PI..PI,
    ) {
        let state = PlanarState::new(r, phi).unwrap();
        let (p0, p1) = weak_meas_probabilities(state, g, p_e).unwrap();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&p0));
        if g > 0.0 {
            let (p, _) = density_step(&density(r, phi), g, 0.0, 1.0, p_e, Outcome::Zero);
            prop_assert!((p0 - p).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_states_stay_pure(
        g in strength(), omega in -20.0..20.0f64, tau in 0.01..1.0f64,
        phi in -PI..PI, bit in any::<bool>(),
    ) {
        let next = planar_state_update(PlanarState::new(1.0, phi).unwrap(), outcome(bit), g, omega, tau, 0.0);
        prop_assert!((next.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planar_update_matches_density_matrix(
        g in strength(), omega in -20.0..20.0f64, tau in 0.01..1.0f64,
        r in 0.0..=1.0f64, phi in -PI..PI, p_e in 0.0..0.5f64, bit in any::<bool>(),
    ) {
        let (p, rho) = density_step(&density(r, phi), g, omega, tau, p_e, outcome(bit));
        prop_assume!(p > 1e-9);
        let [rx, ry, rz] = bloch(&rho);
        // the update never leaves the equatorial plane
        prop_assert!(rz.abs() < 1e-12);
        let next = planar_state_update(PlanarState::new(r, phi).unwrap(), outcome(bit), g, omega, tau, p_e);
        let (x, y) = next.to_xy();
        prop_assert!((x - rx).abs() < 1e-12 && (y - ry).abs() < 1e-12, "({x}, {y}) vs ({rx}, {ry})");
    }

    #[test]
    fn dft_objective_is_mirror_symmetric(
        fractions in prop::collection::vec(0.0..=1.0f64, 1..64),
        tau in 0.01..1.0f64, u in 0.0..1.0f64,
    ) {
        let omega = u * PI / tau;
        let a = dft_objective(&fractions, tau, omega);
        let b = dft_objective(&fractions, tau, PI / tau - omega);
        prop_assert!((a - b).abs() < 1e-12 * fractions.len() as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_is_normalized_with_zero_mean_score(
        g in 0.02..FRAC_PI_4, omega_tau in 0.05..1.5f64, steps in 2usize..=6,
        n in 1usize..=2, strong in any::<bool>(), p_e in prop_oneof![Just(0.0), 0.0..0.3f64],
    ) {
        let tau = 0.1;
        let mode = if strong { Mode::WeakWithStrong } else { Mode::WeakOnly };
        let p = protocol(g, tau, steps as f64 * tau, n, mode).with_readout_error(p_e).unwrap();
        prop_assume!(n * steps <= ENUMERATION_LIMIT);
        let omega = omega_tau / tau;
        let dist = enumerate_outcome_distribution(&p, omega, ENUMERATION_LIMIT).unwrap();
        let total: f64 = dist.iter().map(|d| d.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut mean_score = 0.0;
        for &(packed, prob) in &dist {
            if prob > 0.0 {
                let record = unpack_enumerated(&p, packed);
                mean_score += prob * score_trajectory(&record, omega, &p).unwrap().score;
            }
        }
        prop_assert!(mean_score.abs() < 1e-10, "Σ p·score = {mean_score}");
    }

    #[test]
    fn enumerated_marginals_follow_the_averaged_dynamics(
        g in 0.02..0.5f64, omega_tau in 0.1..1.45f64, steps in 1usize..=8,
    ) {
        let tau = 0.1;
        let omega = omega_tau / tau;
        let averaged = averaged_dynamics(g, omega, tau);
        prop_assume!(averaged.is_ok());
        let averaged = averaged.unwrap();
        let p = protocol(g, tau, steps as f64 * tau, 1, Mode::WeakOnly);
        let dist = enumerate_outcome_distribution(&p, omega, ENUMERATION_LIMIT).unwrap();
        for k in 0..steps {
            // outcome bit 1 is the minus branch
            let zero: f64 = dist.iter().filter(|d| d.0 >> k & 1 == 0).map(|d| d.1).sum();
            let expected = averaged.p_zero(k + 1);
            prop_assert!((zero - expected).abs() < 1e-10, "step {k}: {zero} vs {expected}");
        }
    }

    #[test]
    fn estimates_lie_in_the_prior(
        g in 0.05..0.4f64, steps in 2usize..40, n in 1usize..8, seed in any::<u64>(),
        u in 0.0..1.0f64, lo_frac in 0.0..0.5f64, strong in any::<bool>(),
    ) {
        let tau = 0.1;
        let mode = if strong { Mode::WeakWithStrong } else { Mode::WeakOnly };
        let p = protocol(g, tau, steps as f64 * tau, n, mode);
        let hi = FRAC_PI_2 / tau;
        let prior = Prior::new(lo_frac * hi, hi).unwrap();
        let omega = prior.lo + u * prior.width();
        let record = simulate_trajectory(&p, omega, seed);
        let mle = mle_estimate(&record, &p, &prior).unwrap();
        prop_assert!(prior.contains(mle.omega), "{} outside [{}, {}]", mle.omega, prior.lo, prior.hi);
        let mmse = bayesian_mmse_estimate(&record, &p, &prior, 512).unwrap();
        prop_assert!(prior.contains(mmse.omega));
    }

    #[test]
    fn oci_bound_lies_between_zero_and_the_prior_variance(
        n in 1usize..=64, t in 0.01..30.0f64, delta_omega in 0.1..10.0f64,
    ) {
        let bound = oci_bound(n, t, delta_omega).unwrap();
        prop_assert!(bound >= 0.0 && bound <= delta_omega * delta_omega / 12.0 * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cascaded_bmse_respects_its_fisher_bound(
        ensembles in 1usize..=3, per_ensemble in 2usize..=6, t in 0.5..4.0f64, seed in any::<u64>(),
    ) {
        let plan = CascadedPlan::equal(ensembles * per_ensemble, ensembles, t).unwrap();
        let fisher = cascaded_fisher(&plan).unwrap().total;
        // wide enough that the prior cannot beat the Fisher bound
        let prior = Prior::new(0.0, 4.0 * PI / t).unwrap();
        let r = cascaded_plan_bmse(&plan, &prior, 200, seed).unwrap();
        prop_assert!(r.bmse >= 1.0 / fisher - 3.0 * r.stderr, "{} < 1/{fisher}", r.bmse);
    }

    #[test]
    fn wide_prior_bmse_respects_the_quantum_bound(
        n in 1usize..=8, steps in 20usize..=60, g in 0.1..0.4f64, seed in any::<u64>(),
    ) {
        // τ = π/2δω and T = mτ give δωT = mπ/2 ≥ 10π
        let tau = 0.5;
        let p = protocol(g, tau, steps as f64 * tau, n, Mode::WeakWithStrong);
        let prior = Prior::for_params(&p);
        let r = bmse_experiment(&p, &prior, Estimator::Auto, 200, seed).unwrap();
        let qfi = 4.0 * n as f64 * p.total_time * p.total_time;
        prop_assert!(r.bmse >= 1.0 / qfi - 3.0 * r.stderr);
    }
}

#[test]
fn sampled_record_frequencies_match_enumeration() {
    // one qubit, four weak steps and a final readout: 32 records
    let p = protocol(0.3, 0.1, 0.5, 1, Mode::WeakWithStrong);
    let omega = 4.0;
    let dist = enumerate_outcome_distribution(&p, omega, ENUMERATION_LIMIT).unwrap();
    let samples = 100_000u64;
    let mut counts = vec![0u64; dist.len()];
    for seed in 0..samples {
        let r = simulate_trajectory(&p, omega, seed);
        let mut packed = 0u64;
        for (k, bit) in r.weak[0].iter().enumerate() {
            packed |= u64::from(bit) << k;
        }
        packed |= u64::from(r.strong.as_ref().unwrap()[0]) << p.weak_steps();
        counts[packed as usize] += 1;
    }
    for &(packed, prob) in &dist {
        let expected = prob * samples as f64;
        let sigma = (samples as f64 * prob * (1.0 - prob)).sqrt().max(1.0);
        let seen = counts[packed as usize] as f64;
        assert!((seen - expected).abs() <= 4.0 * sigma, "record {packed:05b}: {seen} vs {expected:.1}");
    }
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let p = protocol(0.15, 0.25, 5.0, 16, Mode::WeakWithStrong);
    let prior = Prior::for_params(&p);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bmse_experiment(&p, &prior, Estimator::Auto, 300, 17).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}
