use gibbslab_core::conditions::{check_condition_contraction, check_condition_riemann};
use gibbslab_core::equilibrium::{find_beta_c, find_beta_s};
use gibbslab_core::grid::barycentric_grid;
use gibbslab_core::model::g_function;
use gibbslab_core::path::{
    aggregate_variation_closed_form, aggregate_variation_quadrature, build_monotone_path, g_velocity, riemann_variation,
};
use gibbslab_core::{ModelSpec, SimplexPoint};
use proptest::prelude::*;

fn simplex_point(q: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.0f64..1.0, q).prop_filter_map("degenerate", |w| {
        let s: f64 = w.iter().sum();
        if s < 1e-3 {
            return None;
        }
        let mut z: Vec<f64> = w.iter().map(|x| x / s).collect();
        let tail: f64 = z[1..].iter().sum();
        z[0] = (1.0 - tail).max(0.0);
        SimplexPoint::new(z).ok()
    })
}

fn on_segment(z: &SimplexPoint, t: f64) -> Vec<f64> {
    let q = z.q() as f64;
    z.coords().iter().map(|&x| (1.0 - t) / q + t * x).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn monotone_path_invariants(a in simplex_point(3), b in simplex_point(3), eps in 0.01f64..0.5) {
        prop_assume!(a.l1_distance(&b) > 1e-9);
        let path = build_monotone_path(&a, &b, eps).unwrap();
        prop_assert!((path.total_length() - a.l1_distance(&b)).abs() < 1e-10);
        prop_assert!(path.is_coordinate_monotone());
        if a.l1_distance(&b) >= eps {
            for l in path.step_lengths() {
                prop_assert!(l >= eps * (1.0 - 1e-9) && l < 2.0 * eps);
            }
        }
    }

    #[test]
    fn g_below_threshold_coordinates_decrease(z in simplex_point(3), beta in 0.05f64..1.0, r in 2.0f64..4.0) {
        // claim (a) and claim (b) along the segment from the uniform point
        let bs = find_beta_s(3, r).unwrap();
        let m = ModelSpec::gcwp(3, r, beta * bs).unwrap();
        let u = vec![1.0 / 3.0; 3];
        let ts: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let vel: Vec<Vec<f64>> = ts.iter().map(|&t| g_velocity(&m, &u, z.coords(), t)).collect();
        for k in 0..3 {
            if z.coords()[k] <= 1.0 / 3.0 {
                prop_assert!(vel.iter().all(|v| v[k] <= 1e-14));
            } else {
                let mut changes = 0;
                let mut prev = vel[1][k];
                for v in &vel[2..] {
                    if v[k].abs() > 1e-14 && prev.abs() > 1e-14 && (v[k] > 0.0) != (prev > 0.0) {
                        changes += 1;
                    }
                    if v[k].abs() > 1e-14 {
                        prev = v[k];
                    }
                }
                prop_assert!(changes <= 1);
            }
        }
    }

    #[test]
    fn weighted_inner_product_increases(z in simplex_point(3), beta in 0.05f64..3.0, r in 2.0f64..4.0) {
        let m = ModelSpec::gcwp(3, r, beta).unwrap();
        let ip = |t: f64| {
            let zt = on_segment(&z, t);
            let g = g_function(&m, &SimplexPoint::new(zt.clone()).unwrap()).unwrap().into_coords();
            (0..3).map(|j| g[j] * (z.coords()[j] - 1.0 / 3.0) * zt[j].powf(r - 2.0)).sum::<f64>()
        };
        let mut prev = ip(0.0);
        prop_assert!(prev.abs() < 1e-15);
        for i in 1..=1000 {
            let v = ip(i as f64 / 1000.0);
            prop_assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn variation_below_distance_under_beta_s(z in simplex_point(3), frac in 0.05f64..0.99) {
        let bs = find_beta_s(3, 2.0).unwrap();
        let m = ModelSpec::gcwp(3, 2.0, frac * bs).unwrap();
        let u = SimplexPoint::uniform(3);
        prop_assume!(z.l1_distance(&u) > 1e-6);
        let d = aggregate_variation_closed_form(&m, &z).unwrap();
        prop_assert!(d < z.l1_distance(&u));
        let quad = aggregate_variation_quadrature(&m, &u, &z).unwrap();
        prop_assert!((d - quad).abs() < 1e-8);
    }
}

#[test]
fn riemann_sums_converge_linearly() {
    let bs = find_beta_s(3, 2.0).unwrap();
    let m = ModelSpec::gcwp(3, 2.0, 0.7 * bs).unwrap();
    let u = SimplexPoint::uniform(3);
    let mut worst_constant: f64 = 0.0;
    let grid = barycentric_grid(3, 7);
    let points: Vec<SimplexPoint> = grid.into_iter().map(|z| SimplexPoint::new(z).unwrap()).take(20).collect();
    for z in &points {
        if z.l1_distance(&u) < 0.1 {
            continue;
        }
        let exact = aggregate_variation_quadrature(&m, &u, z).unwrap();
        let mut diffs = Vec::new();
        for eps in [0.04, 0.02, 0.01, 0.005] {
            let path = build_monotone_path(&u, z, eps).unwrap();
            let diff = (riemann_variation(&m, &path).unwrap() - exact).abs();
            diffs.push(diff);
            worst_constant = worst_constant.max(diff / eps);
        }
        // halving epsilon at least roughly halves the error
        assert!(diffs[3] <= 0.7 * diffs[0] + 1e-12, "{z:?}: {diffs:?}");
    }
    assert!(worst_constant < 5.0, "C = {worst_constant}");
}

#[test]
fn violation_found_between_beta_s_and_beta_c() {
    let bs = find_beta_s(3, 2.0).unwrap();
    let bc = find_beta_c(3, 2.0).unwrap();
    let beta = 0.5 * (bs + bc);
    let report = check_condition_contraction(&ModelSpec::gcwp(3, 2.0, beta).unwrap(), Some(200)).unwrap();
    assert!(!report.holds);
    assert!(report.sup_ratio >= 1.0);
}

#[test]
fn riemann_condition_holds_below_beta_s() {
    let bs = find_beta_s(3, 2.0).unwrap();
    let m = ModelSpec::gcwp(3, 2.0, 0.9 * bs).unwrap();
    let report = check_condition_riemann(&m, 0.02, Some(200)).unwrap();
    assert!(report.holds, "{report:?}");
    let contraction = check_condition_contraction(&m, Some(200)).unwrap();
    assert!((report.sup_ratio - contraction.sup_ratio).abs() < 0.05);
}
