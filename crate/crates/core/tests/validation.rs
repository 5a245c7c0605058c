use potcast::estimators::Method;
use potcast::gpd::{gp_density, GpParams};
use potcast::predictive::Level;
use potcast::quadrature::{integrate, QuadConfig};
use potcast::validation::{
    contraction_experiment, extrapolation_distance, hellinger, hellinger_split, normalized_excess_density,
    simulate_coverage, threshold_distance, CoverageSettings, DistributionOracle,
};

fn oracles() -> Vec<DistributionOracle> {
    vec![
        DistributionOracle::exact_gp(1.0, 0.2).unwrap(),
        DistributionOracle::exact_gp(2.0, -0.3).unwrap(),
        DistributionOracle::exponential(1.5).unwrap(),
        DistributionOracle::burr(0.25, -0.5).unwrap(),
        DistributionOracle::burr(0.5, -1.0).unwrap(),
        DistributionOracle::finite_endpoint_power(-0.3, -1.0, 0.0).unwrap(),
        DistributionOracle::finite_endpoint_power(-0.2, -0.7, 40.0).unwrap(),
    ]
}

#[test]
fn oracle_densities_integrate_to_one() {
    for o in oracles() {
        let pts = [
            o.quantile(0.0).unwrap().max(-1e6),
            o.quantile(0.5).unwrap(),
            o.endpoint(),
        ];
        let cfg = QuadConfig::default().with_abs_tol(1e-11);
        let mut total = integrate(|x| o.density(x), &pts, &cfg).unwrap().value;
        if pts[0] == -1e6 {
            total += o.cdf(-1e6);
        }
        assert!((total - 1.0).abs() < 1e-8, "{}: {total}", o.name());
    }
}

#[test]
fn oracle_quantile_inverts_cdf() {
    for o in oracles() {
        for i in 1..1000 {
            let q = i as f64 / 1000.0;
            let x = o.quantile(q).unwrap();
            assert!((o.cdf(x) - q).abs() < 1e-8, "{} q={q}", o.name());
        }
    }
}

#[test]
fn oracle_scaling_is_tail_over_density() {
    for o in oracles() {
        for q in [0.5, 0.9, 0.99, 0.999] {
            let t = o.quantile(q).unwrap();
            let s = o.scaling(t);
            assert!(s > 0.0);
            let h = 1e-6 * t.abs().max(1e-3);
            let fd = -(o.survival(t + h) - o.survival(t - h)) / (2.0 * h);
            assert!(((1.0 - q) / fd / s - 1.0).abs() < 1e-5, "{} q={q}", o.name());
        }
    }
}

#[test]
fn second_order_function_matches_numerical_derivatives() {
    // With x = log v: A = U_xx / U_x - gamma.
    for o in oracles() {
        for v in [20.0f64, 300.0, 5000.0] {
            let u = |x: f64| o.upper_quantile((-x).exp()).unwrap();
            let (x, h) = (v.ln(), 1e-3);
            let d1 = (u(x + h) - u(x - h)) / (2.0 * h);
            let d2 = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
            let fd = d2 / d1 - o.gamma();
            let a = o.second_order(v);
            assert!(
                (fd - a).abs() < 1e-4 * a.abs().max(1e-2),
                "{} v={v}: {fd} vs {a}",
                o.name()
            );
        }
    }
}

#[test]
fn second_order_function_is_regularly_varying() {
    for o in oracles() {
        let Some(rho) = o.rho() else {
            assert_eq!(o.second_order(1e4), 0.0);
            continue;
        };
        let v = 1e8;
        let ratio = o.second_order(2.0 * v).abs() / o.second_order(v).abs();
        assert!((ratio / 2f64.powf(rho) - 1.0).abs() < 0.05, "{}: {ratio}", o.name());
    }
}

#[test]
fn normalized_excess_is_exact_for_gp() {
    for g in [-0.45, -0.3, 0.0, 0.2, 1.0] {
        let o = DistributionOracle::exact_gp(1.7, g).unwrap();
        let h = GpParams::new(1.0, g).unwrap();
        for q in [0.0, 0.5, 0.9, 0.999] {
            let l = normalized_excess_density(&o, o.quantile(q).unwrap()).unwrap();
            for i in 0..100 {
                let y = i as f64 * 0.02;
                assert!((l.density(y) - gp_density(y, &h)).abs() < 1e-10, "g={g} q={q} y={y}");
            }
        }
    }
}

#[test]
fn normalized_excess_integrates_to_one() {
    for o in oracles() {
        for q in [0.9, 0.99, 0.9999] {
            let l = normalized_excess_density(&o, o.quantile(q).unwrap()).unwrap();
            let cfg = QuadConfig::default().with_abs_tol(1e-11);
            let m = integrate(|y| l.density(y), &[0.0, l.upper()], &cfg).unwrap().value;
            assert!((m - 1.0).abs() < 1e-8, "{} q={q}: {m}", o.name());
        }
    }
}

#[test]
fn normalized_excess_reports_underflow() {
    let o = DistributionOracle::exponential(1.0).unwrap();
    assert!(matches!(
        normalized_excess_density(&o, 800.0),
        Err(potcast::error::Error::Underflow(_))
    ));
    let e = DistributionOracle::finite_endpoint_power(-0.3, -1.0, 0.0).unwrap();
    assert!(normalized_excess_density(&e, 0.0).is_err());
}

#[test]
fn burr_distance_decreases_with_threshold() {
    let o = DistributionOracle::burr(0.25, -0.5).unwrap();
    let mut last = f64::INFINITY;
    for q in [0.5, 0.8, 0.9, 0.99, 0.999] {
        let h = threshold_distance(&o, o.quantile(q).unwrap()).unwrap();
        assert!(h > 0.0 && h < last, "q={q}: {h}");
        last = h;
    }
}

#[test]
fn hellinger_closed_forms() {
    let f = |x: f64| (-x).exp();
    let g = |x: f64| 4.0 * (-4.0 * x).exp();
    let h = hellinger(f, g, (0.0, f64::INFINITY), 64).unwrap();
    assert!((h - (1.0 - 2.0 * 2.0 / 5.0f64).sqrt()).abs() < 1e-6);
    let p = GpParams::new(1.0, 0.2).unwrap();
    let same = hellinger(|x| gp_density(x, &p), |x| gp_density(x, &p), (0.0, f64::INFINITY), 64).unwrap();
    assert!(same < 1e-7);
    // Disjoint supports are at distance one.
    let a = hellinger_split(
        |x| if x < 1.0 { 1.0 } else { 0.0 },
        |x| if (1.0..2.0).contains(&x) { 1.0 } else { 0.0 },
        &[0.0, 1.0, 2.0],
        64,
    )
    .unwrap();
    assert!((a - 1.0).abs() < 1e-9);
}

#[test]
fn hellinger_is_symmetric_and_satisfies_triangle_inequality() {
    let ps: Vec<GpParams> = [(1.0, 0.2), (1.3, -0.2), (0.7, 0.5), (2.0, -0.45), (1.0, 0.0)]
        .iter()
        .map(|&(s, g)| GpParams::new(s, g).unwrap())
        .collect();
    let dist = |a: &GpParams, b: &GpParams| {
        let pts = [0.0, a.support().upper, b.support().upper];
        hellinger_split(|x| gp_density(x, a), |x| gp_density(x, b), &pts, 64).unwrap()
    };
    for a in &ps {
        for b in &ps {
            assert!((dist(a, b) - dist(b, a)).abs() < 1e-9);
            for c in &ps {
                assert!(dist(a, c) <= dist(a, b) + dist(b, c) + 1e-6);
            }
        }
    }
}

#[test]
fn contraction_for_exact_gp_is_zero() {
    let o = DistributionOracle::exact_gp(1.0, -0.3).unwrap();
    let table = contraction_experiment(&o, &[1e2, 1e3, 1e4, 1e5]).unwrap();
    assert!(table.rows.iter().all(|r| r.h < 1e-7 && r.ratio.is_none()));
    assert_eq!(table.ratio_spread(), None);
}

#[test]
fn contraction_ratios_are_stable() {
    for o in [
        DistributionOracle::burr(0.25, -0.5).unwrap(),
        DistributionOracle::finite_endpoint_power(-0.3, -1.0, 0.0).unwrap(),
    ] {
        let table = contraction_experiment(&o, &[1e2, 1e3, 1e4, 1e5]).unwrap();
        assert!(table.is_decreasing(), "{table:?}");
        assert!(table.ratio_spread().unwrap() < 10.0, "{table:?}");
        for r in &table.rows {
            assert!((o.survival(r.t) * r.v - 1.0).abs() < 1e-9);
        }
    }
    assert!(contraction_experiment(&DistributionOracle::exponential(1.0).unwrap(), &[10.0, 5.0]).is_err());
}

#[test]
fn extrapolation_distance_grows_with_depth() {
    let o = DistributionOracle::burr(0.25, -0.5).unwrap();
    let (n, k) = (10_000, 500);
    let base = k as f64 / n as f64;
    let mut last = 0.0;
    for factor in [1.0, 2.0, 10.0, 100.0, 1000.0] {
        let h = extrapolation_distance(&o, n, k, base / factor).unwrap();
        assert!(h > last, "k/(np)={factor}: {h} <= {last}");
        last = h;
    }
}

#[test]
fn coverage_is_reproducible_and_checked() {
    let o = DistributionOracle::exact_gp(1.0, 0.2).unwrap();
    let mut s = CoverageSettings::new(o, 2000, 200, Method::Gpwm);
    s.replicates = 100;
    s.seed = 5;
    let a = simulate_coverage(&s).unwrap();
    let b = simulate_coverage(&s).unwrap();
    assert_eq!(a, b);
    assert!((a.mc_stderr - (a.empirical * (1.0 - a.empirical) / a.replicates as f64).sqrt()).abs() < 1e-15);
    assert!((0.0..=1.0).contains(&a.empirical));
    s.replicates = 99;
    assert!(simulate_coverage(&s).is_err());
    s.replicates = 100;
    s.level = Level::Scaling(2.0);
    // gamma > 0: scaling factors are undefined for every replicate.
    assert!(matches!(
        simulate_coverage(&s),
        Err(potcast::error::Error::Experiment(_))
    ));
}

#[test]
fn coverage_error_shrinks_with_sample_size() {
    let o = DistributionOracle::exact_gp(1.0, 0.2).unwrap();
    let run = |n: usize| {
        let mut s = CoverageSettings::new(o, n, n / 10, Method::Ml);
        s.replicates = 400;
        s.seed = 17;
        simulate_coverage(&s).unwrap()
    };
    let (small, large) = (run(2000), run(20_000));
    let combined = (small.mc_stderr.powi(2) + large.mc_stderr.powi(2)).sqrt();
    assert!(
        large.deviation() <= small.deviation() + 2.0 * combined,
        "{small:?} {large:?}"
    );
}
