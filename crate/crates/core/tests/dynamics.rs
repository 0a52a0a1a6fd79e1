use gibbslab_core::gibbs::gibbs_weights;
use gibbslab_core::glauber::{update_distribution, update_distribution_expansion, GlauberChain};
use gibbslab_core::lumped::build_lumped_kernel;
use gibbslab_core::rng::RngStream;
use gibbslab_core::{Configuration, LatticePoint, ModelSpec};
use proptest::prelude::*;

fn counts_strategy(q: usize) -> impl Strategy<Value = (Vec<u32>, usize)> {
    (prop::collection::vec(0u32..30, q), 0..q).prop_filter_map("empty current", |(mut c, m)| {
        c[m] += 1;
        Some((c, m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn update_law_is_a_distribution((c, m) in counts_strategy(4), beta in 0.0f64..6.0, r in 2.0f64..4.0) {
        let model = ModelSpec::gcwp(4, r, beta).unwrap();
        let p = update_distribution(&model, &LatticePoint::new(c).unwrap(), m).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn update_law_is_label_equivariant((c, m) in counts_strategy(3), beta in 0.0f64..6.0, shift in 1usize..3) {
        let model = ModelSpec::gcwp(3, 2.0, beta).unwrap();
        let p = update_distribution(&model, &LatticePoint::new(c.clone()).unwrap(), m).unwrap();
        // relabel k -> k + shift
        let mut cp = vec![0; 3];
        for k in 0..3 {
            cp[(k + shift) % 3] = c[k];
        }
        let pp = update_distribution(&model, &LatticePoint::new(cp).unwrap(), (m + shift) % 3).unwrap();
        for k in 0..3 {
            prop_assert!((pp[(k + shift) % 3] - p[k]).abs() < 1e-14);
        }
    }
}

#[test]
fn expansion_residual_is_second_order() {
    let m = ModelSpec::gcwp(3, 2.0, 1.0).unwrap();
    // z = (0.5, 0.3, 0.2) at n = 50, 100, ..., 800
    let mut scaled = Vec::new();
    for n in [50u32, 100, 200, 400, 800] {
        let counts = LatticePoint::new(vec![n / 2, 3 * n / 10, n / 5]).unwrap();
        let exact = update_distribution(&m, &counts, 0).unwrap();
        let approx = update_distribution_expansion(&m, &counts.to_simplex(), 0, n).unwrap();
        let err = exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        scaled.push(err * (n as f64).powi(2));
    }
    let max = scaled.iter().copied().fold(0.0, f64::max);
    let min = scaled.iter().copied().fold(f64::MAX, f64::min);
    assert!(max / min < 1.5, "n^2 * residual = {scaled:?}");
}

#[test]
fn expansion_exact_at_zero_beta() {
    let m = ModelSpec::gcwp(3, 2.0, 0.0).unwrap();
    let counts = LatticePoint::new(vec![5, 3, 2]).unwrap();
    let exact = update_distribution(&m, &counts, 1).unwrap();
    let approx = update_distribution_expansion(&m, &counts.to_simplex(), 1, 10).unwrap();
    assert_eq!(exact, approx);
}

#[test]
fn kernel_moves_one_unit_at_a_time() {
    let m = ModelSpec::gcwp(3, 2.5, 2.0).unwrap();
    let k = build_lumped_kernel(&m, 12).unwrap();
    for i in 0..k.len() {
        let total: f64 = k.row(i).map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (j, p) in k.row(i) {
            assert!(p > 0.0);
            let l1: u32 = k.states()[i].iter().zip(&k.states()[j]).map(|(a, b)| a.abs_diff(*b)).sum();
            assert!(l1 == 0 || l1 == 2);
        }
    }
}

/// Pearson chi-square statistic and degrees of freedom, merging no cells.
fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

#[test]
fn zero_beta_counts_are_multinomial() {
    let q = 3;
    let n = 10u32;
    let m = ModelSpec::gcwp(q, 2.0, 0.0).unwrap();
    let w = gibbs_weights(&m, n).unwrap();
    let mut chain = GlauberChain::new(m, Configuration::constant(n as usize, q, 0)).unwrap();
    let mut rng = RngStream::new(31, 0);
    for _ in 0..1000 {
        chain.step(&mut rng);
    }
    let mut hist = vec![0u64; w.states().len()];
    let index: std::collections::HashMap<&[u32], usize> =
        w.states().iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    // thin by one sweep so samples are close to independent
    let samples = 100_000u64;
    for _ in 0..samples {
        for _ in 0..n {
            chain.step(&mut rng);
        }
        hist[index[chain.counts().counts()]] += 1;
    }
    let expected: Vec<f64> = w.probabilities().iter().map(|p| p * samples as f64).collect();
    let stat = chi_square(&hist, &expected);
    let dof = (hist.len() - 1) as f64;
    // mean dof, sd sqrt(2 dof); 5 sd is far in the tail
    assert!(stat < dof + 5.0 * (2.0 * dof).sqrt(), "chi2 = {stat}, dof = {dof}");
}

#[test]
fn occupation_frequencies_match_gibbs_weights() {
    // n = 10, q = 2, 10^7 steps after 10^5 burn-in; batch means for the
    // standard error of each state's frequency
    let n = 10u32;
    let m = ModelSpec::gcwp(2, 2.0, 1.5).unwrap();
    let w = gibbs_weights(&m, n).unwrap();
    let mut chain = GlauberChain::new(m, Configuration::constant(n as usize, 2, 0)).unwrap();
    let mut rng = RngStream::new(77, 0);
    for _ in 0..100_000 {
        chain.step(&mut rng);
    }
    let batches = 100usize;
    let per_batch = 100_000usize;
    let states = n as usize + 1;
    let mut freq = vec![vec![0.0; states]; batches];
    for b in freq.iter_mut() {
        for _ in 0..per_batch {
            chain.step(&mut rng);
            b[chain.counts().counts()[0] as usize] += 1.0 / per_batch as f64;
        }
    }
    for s in 0..states {
        let mean = freq.iter().map(|b| b[s]).sum::<f64>() / batches as f64;
        let var = freq.iter().map(|b| (b[s] - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        let exact = w.get(&LatticePoint::new(vec![s as u32, n - s as u32]).unwrap()).unwrap();
        assert!((mean - exact).abs() <= 3.0 * se + 1e-12, "state {s}: {mean} vs {exact} (se {se})");
    }
}
