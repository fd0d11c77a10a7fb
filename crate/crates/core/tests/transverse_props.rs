use lwire::transverse::*;
use proptest::prelude::*;

fn subcritical() -> impl Strategy<Value = PhysicsParams> {
    (0.2f64..5.0, 0.0f64..0.999).prop_map(|(a, r)| PhysicsParams::new(a, r * a * a).unwrap())
}

proptest! {
    #[test]
    fn threshold_is_the_bound_state(p in subcritical()) {
        let ts = transverse_bound_state(&p);
        prop_assert_eq!(ts.bound_energy, Some(essential_threshold(&p)));
    }

    #[test]
    fn decay_rates_sum_to_alpha(p in subcritical()) {
        let ts = transverse_bound_state(&p);
        let s = ts.kappa_minus.unwrap() + ts.kappa_plus.unwrap();
        prop_assert!((s - p.alpha).abs() <= 1e-12 * p.alpha.max(1.0));
    }

    #[test]
    fn threshold_vanishes_above_critical(a in 0.2f64..5.0, r in 1.0f64..10.0) {
        let p = PhysicsParams::new(a, r * a * a).unwrap();
        prop_assert_eq!(essential_threshold(&p), 0.0);
    }
}

#[test]
fn threshold_is_continuous_in_v0() {
    let a = 1.3;
    let mut prev = essential_threshold(&PhysicsParams::new(a, 0.0).unwrap());
    for k in 1..=100 {
        let v0 = 2.0 * a * a * k as f64 / 100.0;
        let mu = essential_threshold(&PhysicsParams::new(a, v0).unwrap());
        // |dμ/dV₀| <= 1/2 on the subcritical side
        assert!((mu - prev).abs() <= 0.5 * 2.0 * a * a / 100.0 + 1e-15);
        prev = mu;
    }
}

#[test]
fn fd_order_at_least_one() {
    for (a, v0) in [(1.0, 0.0), (1.0, 0.5), (2.0, 1.0), (0.7, 0.1)] {
        let p = PhysicsParams::new(a, v0).unwrap();
        let exact = essential_threshold(&p);
        let err: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| {
                let g = Grid1D::for_params(&p, h).unwrap();
                (solve_transverse_fd(&p, &g, 1).unwrap()[0] - exact).abs()
            })
            .collect();
        let slope = (err[0] / err[2]).ln() / 4f64.ln();
        assert!(slope >= 1.0, "alpha={a} v0={v0}: slope {slope}, errors {err:?}");
    }
}

#[test]
fn fd_lowest_matches_sinh_relation() {
    // the node-aligned δ lump on an unbiased line gives a discrete decay
    // factor q = e^{-κh} with 2 sinh(κh)/h = α and E = -(2/h²)(cosh κh - 1)
    let (a, h) = (1.5, 0.05);
    let p = PhysicsParams::new(a, 0.0).unwrap();
    let g = Grid1D::for_params(&p, h).unwrap();
    let lam = solve_transverse_fd(&p, &g, 1).unwrap()[0];
    let kh = (a * h / 2.0).asinh();
    let oracle = -(2.0 / (h * h)) * (kh.cosh() - 1.0);
    assert!((lam - oracle).abs() < 1e-9, "{lam} vs {oracle}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn halfline_slack_is_nonnegative(
        c in prop::collection::vec(-2.0f64..2.0, 3),
        r in prop::collection::vec(0.3f64..5.0, 3),
        v0 in 0.05f64..4.0,
    ) {
        let r_min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_max = r.iter().cloned().fold(0.0, f64::max);
        let x_max = 40.0 / r_min;
        // keep r h <= 0.005 so the fourth-order rules are far below 1e-8
        let n = (x_max * r_max / 0.005).ceil() as usize + 1;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let x = x_max * i as f64 / (n - 1) as f64;
                c.iter().zip(&r).map(|(c, r)| c * (-r * x).exp()).sum()
            })
            .collect();
        let slack = verify_halfline_inequality(&samples, x_max, v0).unwrap();
        prop_assert!(slack >= -1e-8, "slack {}", slack);
    }
}
