use gibbslab_core::coupling::{
    expected_onestep_distance, greedy_coupling_step, kappa, kappa_profile, onestep_distance_bound, run_coupling,
    CouplingInit, CouplingOptions, CouplingTrial,
};
use gibbslab_core::glauber::{random_configuration, update_distribution_at};
use gibbslab_core::lumped::{build_lumped_kernel, evolve_law, total_variation};
use gibbslab_core::rng::RngStream;
use gibbslab_core::{Configuration, LatticePoint, ModelSpec};
use proptest::prelude::*;

fn pair(n: usize, q: usize, seed: u64) -> (Configuration, Configuration) {
    let mut rng = RngStream::new(seed, 0);
    (random_configuration(n, q, &mut rng), random_configuration(n, q, &mut rng))
}

/// Repeats one coupled step from the same pair `steps` times.
fn one_step_samples(
    m: &ModelSpec,
    sigma: &Configuration,
    tau: &Configuration,
    steps: u64,
    mut visit: impl FnMut(&CouplingTrial, usize, usize, usize),
) {
    for i in 0..steps {
        let mut t = CouplingTrial::new(sigma.clone(), tau.clone(), RngStream::new(1234, i)).unwrap();
        let rec = greedy_coupling_step(m, &mut t);
        visit(&t, rec.vertex, rec.sigma_spin, rec.tau_spin);
    }
}

#[test]
fn marginals_are_glauber_updates() {
    let m = ModelSpec::gcwp(3, 2.0, 2.0).unwrap();
    let (sigma, tau) = pair(6, 3, 5);
    let steps = 1_000_000u64;
    let n = sigma.n();
    let mut hits_s = vec![[0u64; 3]; n];
    let mut hits_t = vec![[0u64; 3]; n];
    let mut visits = vec![0u64; n];
    one_step_samples(&m, &sigma, &tau, steps, |_, v, a, b| {
        visits[v] += 1;
        hits_s[v][a] += 1;
        hits_t[v][b] += 1;
    });
    // one Pearson test per vertex and chain (2 dof); Bonferroni over the 2n
    // tests at family-wise level 1e-3, so the chi-square(2) cutoff is -2 ln(alpha)
    let alpha = 1e-3 / (2 * n) as f64;
    let cutoff = -2.0 * alpha.ln();
    for v in 0..n {
        let ps = update_distribution_at(&m, &sigma, v).unwrap();
        let pt = update_distribution_at(&m, &tau, v).unwrap();
        let nv = visits[v] as f64;
        for (hits, p) in [(&hits_s[v], &ps), (&hits_t[v], &pt)] {
            let stat: f64 = (0..3).map(|k| (hits[k] as f64 - nv * p[k]).powi(2) / (nv * p[k])).sum();
            assert!(stat < cutoff, "vertex {v}: chi2 {stat} >= {cutoff}, hits {hits:?}, law {p:?}");
        }
    }
}

#[test]
fn disagreement_probability_is_kappa() {
    let m = ModelSpec::gcwp(3, 2.0, 2.5).unwrap();
    let (sigma, tau) = pair(8, 3, 9);
    let n = sigma.n();
    let mut differ = vec![0u64; n];
    let mut visits = vec![0u64; n];
    one_step_samples(&m, &sigma, &tau, 400_000, |_, v, a, b| {
        visits[v] += 1;
        differ[v] += u64::from(a != b);
    });
    for v in 0..n {
        let k = kappa(&m, &sigma, &tau, v).unwrap();
        let nv = visits[v] as f64;
        let se = (k * (1.0 - k) / nv).sqrt();
        assert!((differ[v] as f64 / nv - k).abs() <= 3.0 * se + 1e-12, "vertex {v}");
    }
}

#[test]
fn expected_distance_matches_simulation() {
    let m = ModelSpec::gcwp(3, 2.0, 1.5).unwrap();
    let (sigma, tau) = pair(20, 3, 21);
    let exact = expected_onestep_distance(&m, &sigma, &tau).unwrap();
    let steps = 1_000_000u64;
    let (mut sum, mut sq) = (0.0, 0.0);
    one_step_samples(&m, &sigma, &tau, steps, |t, _, _, _| {
        let d = t.distance() as f64;
        sum += d;
        sq += d * d;
    });
    let mean = sum / steps as f64;
    let se = ((sq / steps as f64 - mean * mean) / steps as f64).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn coalescence_is_absorbing() {
    let m = ModelSpec::gcwp(3, 2.0, 1.0).unwrap();
    let (sigma, tau) = pair(15, 3, 2);
    let mut t = CouplingTrial::new(sigma, tau, RngStream::new(3, 0)).unwrap();
    while !t.is_coalesced() {
        greedy_coupling_step(&m, &mut t);
    }
    for _ in 0..1_000_000 {
        greedy_coupling_step(&m, &mut t);
        assert_eq!(t.distance(), 0);
    }
    assert_eq!(t.sigma(), t.tau());
}

#[test]
fn coupling_dominates_total_variation() {
    // ||P^t(x,.) - P^t(y,.)||_TV <= P(X^t != Y^t)
    let n = 8usize;
    let m = ModelSpec::gcwp(3, 2.0, 1.5).unwrap();
    let k = build_lumped_kernel(&m, n as u32).unwrap();
    let horizon = 80;
    let from_x = evolve_law(&k, &LatticePoint::pure(3, n as u32, 0), horizon).unwrap();
    let from_y = evolve_law(&k, &LatticePoint::pure(3, n as u32, 1), horizon).unwrap();
    let trials = 10_000;
    let run = run_coupling(&m, n, &CouplingOptions::new(CouplingInit::WorstPurePair, trials, 5)).unwrap();
    for t in 0..=horizon {
        let tv = total_variation(&from_x[t], &from_y[t]);
        let p = run.survival(t as u64);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(tv <= p + 3.0 * se, "t={t}: tv {tv} > {p} + 3 * {se}");
    }
}

#[test]
fn equilibrium_start_is_exact_for_small_n_and_flagged_otherwise() {
    let m = ModelSpec::gcwp(3, 2.0, 1.0).unwrap();
    let mut opts = CouplingOptions::new(CouplingInit::EquilibriumVsPure, 4, 1);
    let small = run_coupling(&m, 30, &opts).unwrap();
    assert!(!small.approximate_start);
    assert!(small.outcomes.iter().all(|o| !o.censored));
    opts.burn_in_sweeps = 5;
    let large = run_coupling(&m, 6000, &opts).unwrap();
    assert!(large.approximate_start);
}

#[test]
fn mean_distance_curve_starts_at_n_for_pure_pair() {
    let m = ModelSpec::gcwp(3, 2.0, 1.0).unwrap();
    let run = run_coupling(&m, 50, &CouplingOptions::new(CouplingInit::WorstPurePair, 8, 2)).unwrap();
    assert_eq!(run.mean_distance[0], (0, 50.0));
    assert_eq!(run.mean_distance.last().unwrap().1, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_onestep_below_kappa_bound(seed in any::<u64>(), beta in 0.0f64..4.0, n in 2usize..40) {
        let m = ModelSpec::gcwp(3, 2.0, beta).unwrap();
        let (sigma, tau) = pair(n, 3, seed);
        let exact = expected_onestep_distance(&m, &sigma, &tau).unwrap();
        let bound = onestep_distance_bound(&m, &sigma, &tau).unwrap();
        prop_assert!(exact <= bound + 1e-12);
        let kappas = kappa_profile(&m, &sigma, &tau).unwrap();
        prop_assert!(kappas.iter().all(|&k| (0.0..=1.0).contains(&k)));
    }

    #[test]
    fn distance_invariant_along_runs(seed in any::<u64>(), beta in 0.0f64..4.0) {
        let m = ModelSpec::gcwp(4, 2.5, beta).unwrap();
        let (sigma, tau) = pair(12, 4, seed);
        let mut t = CouplingTrial::new(sigma, tau, RngStream::new(seed, 1)).unwrap();
        let mut was_zero = false;
        for _ in 0..300 {
            greedy_coupling_step(&m, &mut t);
            prop_assert_eq!(t.distance(), t.sigma().hamming(t.tau()));
            if was_zero {
                prop_assert_eq!(t.distance(), 0);
            }
            was_zero = t.is_coalesced();
        }
    }
}
