mod common;

use cluster_limit::mc::stream_rng;
use cluster_limit::models::{assoc_covariance_bound, Ar1TailOracle, SequenceModel, Side};

fn pareto_cdf(alpha: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| if x <= 1.0 { 0.0 } else { 1.0 - x.powf(-alpha) }
}

#[test]
fn iid_marginal_matches_pareto() {
    let model = SequenceModel::IidPareto { alpha: 1.5, p: 0.3 };
    let path = model.sample_path(20_000, 1).unwrap();
    let ks = common::ks_statistic(path.iter().map(|v| v.abs()).collect(), pareto_cdf(1.5));
    assert!(ks < common::ks_critical_1pct(path.len()), "ks={ks}");
    let pos = path.iter().filter(|v| **v > 0.0).count() as u64;
    assert!(common::within_binomial(pos, path.len() as u64, 0.3, 4.0));
}

#[test]
fn moving_max_marginal_is_power_of_pareto() {
    let model = SequenceModel::MovingMax { m: 3, alpha: 1.0 };
    let path = model.sample_path(30_000, 2).unwrap();
    // successive values share innovations; thin to every third to keep
    // the KS bound honest
    let thin: Vec<f64> = path.iter().step_by(3).copied().collect();
    let cdf = |x: f64| if x <= 1.0 { 0.0 } else { (1.0 - 1.0 / x).powi(3) };
    let ks = common::ks_statistic(thin.clone(), cdf);
    assert!(ks < common::ks_critical_1pct(thin.len()), "ks={ks}");
}

#[test]
fn moving_max_runs_are_maxima_of_window() {
    let model = SequenceModel::MovingMax { m: 2, alpha: 1.0 };
    let mut rng = stream_rng(9, 0);
    let sim = model.simulate(500, &mut rng).unwrap();
    for (j, v) in sim.values.iter().enumerate() {
        let w = sim.innovations[j].max(sim.innovations[j + 1]);
        assert_eq!(*v, w);
    }
}

#[test]
fn sample_path_is_reproducible() {
    let model = SequenceModel::Ar1RegVar { phi: 0.5, alpha: 1.0, burn_in: 200 };
    assert_eq!(model.sample_path(1000, 4).unwrap(), model.sample_path(1000, 4).unwrap());
    assert_ne!(model.sample_path(1000, 4).unwrap(), model.sample_path(1000, 5).unwrap());
}

#[test]
fn level_gives_expected_exceedance_rate() {
    for model in [
        SequenceModel::IidPareto { alpha: 1.0, p: 1.0 },
        SequenceModel::MovingMax { m: 2, alpha: 2.0 },
        SequenceModel::AssociatedLinear { depth: 60 },
    ] {
        let n = 1000;
        let u = model.level_u(n).unwrap();
        let reps = 400u64;
        let mut hits = 0u64;
        for r in 0..reps {
            let mut rng = stream_rng(11, r);
            hits += model.sample_exceedances(n, u, Side::Upper, &mut rng).len() as u64;
        }
        assert!(common::within_binomial(hits, reps * n as u64, 1.0 / n as f64, 4.5), "{}: {hits}", model.name());
    }
}

#[test]
fn sparse_exceedances_match_dense_filter() {
    // the sparse samplers must produce the same law as thresholding a path
    let model = SequenceModel::MovingMax { m: 2, alpha: 1.0 };
    let t = 50.0;
    let reps = 300u64;
    let (mut sparse, mut dense) = (Vec::new(), Vec::new());
    for r in 0..reps {
        let mut rng = stream_rng(21, r);
        sparse.extend(model.sample_exceedances(2000, t, Side::Upper, &mut rng).into_iter().map(|e| e.1));
        let mut rng = stream_rng(22, r);
        dense.extend(model.simulate(2000, &mut rng).unwrap().values.into_iter().filter(|v| *v > t));
    }
    let expected = reps as f64 * 2000.0 * (1.0 - (1.0 - 1.0 / t).powi(2));
    for got in [sparse.len() as f64, dense.len() as f64] {
        // counts come in pairs, so the variance is about doubled
        assert!((got - expected).abs() < 4.0 * (2.0 * expected).sqrt(), "{got} vs {expected}");
    }
    let cond = |x: f64| if x <= t { 0.0 } else { 1.0 - t / x };
    let ks = common::ks_statistic(sparse.iter().step_by(2).copied().collect(), cond);
    assert!(ks < 1.3 * common::ks_critical_1pct(sparse.len() / 2), "ks={ks}");
}

#[test]
fn ar1_tail_oracle_agrees_with_independent_simulation() {
    let oracle = Ar1TailOracle::shared(0.5, 1.0).unwrap();
    let path = common::ar1_path(0.5, 1.0, 2_000_000, 1000, 77);
    for x in [2.0, 10.0, 50.0] {
        let freq = path.iter().filter(|v| v.abs() > x).count() as f64 / path.len() as f64;
        let t = oracle.tail(x);
        assert!((freq / t - 1.0).abs() < 0.06, "x={x}: sim {freq} vs oracle {t}");
    }
    // far tail: Breiman's constant Σ φ^{αj} = 1/(1-φ^α) = 2
    let far = oracle.tail(1e6) * 1e6;
    assert!((far - 2.0).abs() < 0.1, "far tail constant {far}");
}

#[test]
fn runs_oracle_confirms_ar1_extremal_index() {
    let model = SequenceModel::Ar1RegVar { phi: 0.5, alpha: 1.0, burn_in: 1000 };
    let theta = model.known_theta().unwrap();
    let path = common::ar1_path(0.5, 1.0, 4_000_000, 1000, 5);
    let u = common::modulus_quantile(&path, 0.999);
    let runs = common::runs_theta(&path, u, 50);
    assert!((runs - theta).abs() < 0.05, "runs={runs} closed form={theta}");
}

#[test]
fn runs_oracle_confirms_moving_max_extremal_index() {
    let model = SequenceModel::MovingMax { m: 3, alpha: 1.0 };
    let path = model.sample_path(1_000_000, 8).unwrap();
    let u = common::modulus_quantile(&path, 0.999);
    let runs = common::runs_theta(&path, u, 20);
    assert!((runs - 1.0 / 3.0).abs() < 0.04, "runs={runs}");
}

#[test]
fn association_lag_covariances_match_exact_formula() {
    let model = SequenceModel::AssociatedLinear { depth: 60 };
    let n = 200;
    let b = assoc_covariance_bound(&model, n, 5, 4000, 3).unwrap();
    let q = 1.0 / n as f64;
    for lc in b.per_lag.iter().take(8) {
        let exact = common::assoc_cov(q, lc.lag as u32);
        assert!(
            (lc.cov.value - exact).abs() <= lc.cov.half_width * 1.6,
            "lag {}: {} ± {} vs {exact}",
            lc.lag,
            lc.cov.value,
            lc.cov.half_width
        );
    }
    let exact = common::assoc_partial_sum(n, 5);
    assert!(
        (b.estimate.value - exact).abs() <= b.estimate.half_width * 1.6,
        "partial sum {} ± {} vs {exact}",
        b.estimate.value,
        b.estimate.half_width
    );
}

#[test]
fn association_oracle_small_lags() {
    let q = 1e-3;
    assert!((common::assoc_cov(q, 1) - (q / 2.0 - q * q)).abs() < 1e-15);
    assert!((0..40).all(|h| common::assoc_cov(q, h) >= 0.0));
    assert!((common::assoc_cov(q, 0) - q * (1.0 - q)).abs() < 1e-15);
}

#[test]
fn model_configs_round_trip() {
    for text in [
        r#"{"kind":"iid_pareto","alpha":1.0}"#,
        r#"{"kind":"moving_max","m":2,"alpha":1.0}"#,
        r#"{"kind":"ar1_reg_var","phi":0.5,"alpha":1.0}"#,
        r#"{"kind":"associated_linear"}"#,
    ] {
        let m: SequenceModel = serde_json::from_str(text).unwrap();
        let back: SequenceModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }
    assert!(serde_json::from_str::<SequenceModel>(r#"{"kind":"moving_max","m":2,"alpha":1.0,"x":1}"#).is_err());
}
