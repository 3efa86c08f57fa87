mod common;

use robust_d2d::allocator::{allocate, default_zeta};
use robust_d2d::channel::{generate_dataset, ErrorDistribution, ScenarioConfig};
use robust_d2d::evaluation::{
    default_cdf_grid, empirical_outage, run_experiment, sinr_cdf, split_seeds, write_cdf_csv, write_metrics_csv,
    ExperimentSpec, SweepVar, METRICS_HEADER,
};
use robust_d2d::uncertainty::{fit_set, Method};

#[test]
fn outage_and_cdf_agree_with_a_recount() {
    let s = common::default_scenario();
    let train = common::channel_samples(&ErrorDistribution::default_gaussian(), 1000, 40);
    let test = common::channel_samples(&ErrorDistribution::default_gaussian(), 10_000, 41);
    for m in Method::ALL {
        let set = fit_set(m, &train, 0.05).unwrap();
        let r = allocate(&s, &set, default_zeta(&s)).unwrap();
        let mut misses = 0;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for g in &test {
            let sinr = r.p_d * g.g_d / (s.noise_power + r.p_c * g.g_cd);
            misses += (sinr < s.gamma_min_d) as usize;
            lo = lo.min(sinr);
            hi = hi.max(sinr);
        }
        let outage = empirical_outage(&r, &test, s.gamma_min_d, s.noise_power);
        assert_eq!(outage, misses as f64 / test.len() as f64);
        let cdf = sinr_cdf(&r, &test, &[0.5 * lo, s.gamma_min_d, 2.0 * hi], s.noise_power);
        assert_eq!(cdf[0], 0.0);
        assert!((cdf[1] - outage).abs() <= 1.0 / test.len() as f64);
        assert_eq!(cdf[2], 1.0);
    }
}

fn small_spec(sweep: SweepVar, grid: Vec<f64>) -> ExperimentSpec {
    ExperimentSpec {
        sweep,
        grid,
        n_train: 400,
        n_test: 2000,
        ..ExperimentSpec::default()
    }
}

#[test]
fn experiment_is_deterministic_and_shares_data() {
    let spec = small_spec(SweepVar::Epsilon, vec![0.05, 0.1]);
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.cdfs, b.cdfs);
    assert_eq!(a.rows.len(), 2 * Method::ALL.len());

    // Every method at every point sees the same seeded splits.
    let (train_seed, test_seed) = split_seeds(spec.seed);
    let s = common::default_scenario();
    let train = generate_dataset(&s, &spec.distribution, spec.n_train, train_seed).unwrap();
    let test = generate_dataset(&s, &spec.distribution, spec.n_test, test_seed).unwrap();
    for row in &a.rows {
        let set = fit_set(row.method, &train.samples, row.sweep_value).unwrap();
        let cfg = ScenarioConfig {
            epsilon: row.sweep_value,
            ..ScenarioConfig::default()
        };
        let scen = robust_d2d::channel::build_scenario(&cfg).unwrap();
        let r = allocate(&scen, &set, default_zeta(&scen)).unwrap();
        assert_eq!((row.p_c, row.p_d), (r.p_c, r.p_d), "{}", row.method);
        assert_eq!(
            row.outage,
            empirical_outage(&r, &test.samples, scen.gamma_min_d, scen.noise_power)
        );
    }
}

#[test]
fn cdf_tables_are_monotone_and_bounded() {
    let out = run_experiment(&small_spec(SweepVar::None, vec![])).unwrap();
    assert_eq!(out.cdfs.len(), Method::ALL.len());
    for t in &out.cdfs {
        assert_eq!(t.sinr, default_cdf_grid());
        assert!(t.cdf.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.cdf.iter().all(|v| (0.0..=1.0).contains(v)));
        let mut buf = Vec::new();
        write_cdf_csv(t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,sinr,cdf\n"));
        assert_eq!(text.lines().count(), t.sinr.len() + 1);
    }
}

#[test]
fn robust_methods_respect_the_outage_budget() {
    let spec = ExperimentSpec::default();
    let out = run_experiment(&spec).unwrap();
    let eps = spec.scenario.epsilon;
    let budget = eps + 3.0 * (eps * (1.0 - eps) / spec.n_test as f64).sqrt();
    for row in &out.rows {
        assert!(row.feasible, "{}", row.method);
        if row.method.is_robust() {
            assert!(row.outage <= budget, "{}: {}", row.method, row.outage);
        } else {
            assert!(row.outage > 0.3, "{}", row.outage);
        }
        let se = (row.outage * (1.0 - row.outage) / spec.n_test as f64).sqrt();
        assert_eq!(row.outage_se, se);
    }
}

#[test]
fn infeasible_points_become_rows() {
    let out = run_experiment(&small_spec(SweepVar::GammaMinD, vec![0.1, 1e3])).unwrap();
    assert_eq!(out.rows.len(), 12);
    for row in out.rows.iter().filter(|r| r.sweep_value == 1e3) {
        assert!(!row.feasible);
        assert_eq!((row.throughput_bps, row.outage), (0.0, 1.0));
        assert!(row.status.is_some());
    }
    let mut buf = Vec::new();
    write_metrics_csv(&out.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), METRICS_HEADER);
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small_spec(SweepVar::Epsilon, vec![0.01, 0.05]);
    spec.n_test = 500;
    assert!(run_experiment(&spec).is_err());
    let spec = small_spec(SweepVar::Epsilon, vec![0.05, 0.01]);
    assert!(run_experiment(&spec).is_err());
}
