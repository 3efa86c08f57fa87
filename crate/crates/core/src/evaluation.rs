//! Monte Carlo harness: fit each method's set on a training split, allocate,
//! and score the allocation on a held-out split.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;

use crate::allocator::{allocate, default_zeta, AllocationResult};
use crate::channel::{build_scenario, generate_dataset, sinr_d, ChannelSample, ErrorDistribution, ScenarioConfig};
use crate::error::{Error, Result};
use crate::uncertainty::{fit_set, Method, UncertaintySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVar {
    Epsilon,
    GammaMinD,
    PMaxD,
    Delta,
    None,
}

impl SweepVar {
    fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepVar::Epsilon => cfg.epsilon = value,
            SweepVar::GammaMinD => cfg.gamma_min_d = value,
            SweepVar::PMaxD => cfg.p_max_d = value,
            SweepVar::Delta => cfg.delta = value,
            SweepVar::None => {}
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::Epsilon => "epsilon",
            SweepVar::GammaMinD => "gamma_min_d",
            SweepVar::PMaxD => "p_max_d",
            SweepVar::Delta => "delta",
            SweepVar::None => "none",
        })
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(SweepVar::Epsilon),
            "gamma_min_d" => Ok(SweepVar::GammaMinD),
            "p_max_d" => Ok(SweepVar::PMaxD),
            "delta" => Ok(SweepVar::Delta),
            "none" => Ok(SweepVar::None),
            other => Err(Error::config("sweep_var", format!("unknown sweep variable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub distribution: ErrorDistribution,
    pub methods: Vec<Method>,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            distribution: ErrorDistribution::default_gaussian(),
            methods: Method::ALL.to_vec(),
            sweep: SweepVar::None,
            grid: Vec::new(),
            n_train: 1000,
            n_test: 10_000,
            seed: 2024,
        }
    }
}

impl ExperimentSpec {
    /// Sweep values; a single placeholder point when nothing is swept.
    pub fn points(&self) -> Vec<f64> {
        if self.sweep == SweepVar::None {
            vec![0.0]
        } else {
            self.grid.clone()
        }
    }

    pub fn config_at(&self, value: f64) -> ScenarioConfig {
        let mut cfg = self.scenario.clone();
        self.sweep.apply(&mut cfg, value);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "must name at least one method"));
        }
        if self.sweep != SweepVar::None {
            if self.grid.is_empty() {
                return Err(Error::config("grid", "must be non-empty"));
            }
            if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::config("grid", "must be strictly increasing"));
            }
        }
        if self.n_train < 3 {
            return Err(Error::config("n_train", "must be at least 3"));
        }
        self.distribution.validate()?;
        for v in self.points() {
            let cfg = self.config_at(v);
            cfg.validate()?;
            if (self.n_test as f64) < 10.0 / cfg.epsilon - 1e-9 {
                return Err(Error::config(
                    "n_test",
                    format!("must be at least 10/epsilon = {}", (10.0 / cfg.epsilon).ceil()),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub method: Method,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub p_c: f64,
    pub p_d: f64,
    pub feasible: bool,
    pub throughput_bps: f64,
    pub outage: f64,
    pub outage_se: f64,
    /// Mean linear DUE SINR over the test split.
    pub mean_due_sinr: f64,
    pub iterations: usize,
    /// Error text for infeasible or failed rows.
    pub status: Option<String>,
}

pub const METRICS_HEADER: &str =
    "method,sweep_var,sweep_value,p_c,p_d,feasible,throughput_bps,outage,outage_se,mean_due_sinr";

impl MetricRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{},{:e},{},{:e},{:e}",
            self.method,
            self.sweep_var,
            self.sweep_value,
            self.p_c,
            self.p_d,
            self.feasible,
            self.throughput_bps,
            self.outage,
            self.outage_se,
            self.mean_due_sinr
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub method: Method,
    pub sinr: Vec<f64>,
    pub cdf: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricRow>,
    /// SINR distributions at the first sweep point, one per feasible method.
    pub cdfs: Vec<CdfTable>,
}

pub fn due_sinrs(p_c: f64, p_d: f64, test: &[ChannelSample], noise: f64) -> Vec<f64> {
    test.iter().map(|s| sinr_d(p_c, p_d, *s, noise)).collect()
}

/// Fraction of test samples whose DUE SINR falls short of the target.
pub fn empirical_outage(result: &AllocationResult, test: &[ChannelSample], gamma_min_d: f64, noise: f64) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let misses = test
        .iter()
        .filter(|s| sinr_d(result.p_c, result.p_d, **s, noise) < gamma_min_d)
        .count();
    misses as f64 / test.len() as f64
}

/// Right-continuous empirical CDF of the DUE SINR on a sorted grid.
pub fn sinr_cdf(result: &AllocationResult, test: &[ChannelSample], grid: &[f64], noise: f64) -> Vec<f64> {
    let mut v = due_sinrs(result.p_c, result.p_d, test, noise);
    v.sort_by(f64::total_cmp);
    let n = v.len().max(1) as f64;
    grid.iter().map(|x| v.partition_point(|s| s <= x) as f64 / n).collect()
}

/// 40 points per decade over `[1e-3, 1e3]`.
pub fn default_cdf_grid() -> Vec<f64> {
    (0..=240).map(|k| 10f64.powf(-3.0 + k as f64 / 40.0)).collect()
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    // SplitMix64 finaliser over the combined input.
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds of the training and test splits; shared by every sweep point.
pub fn split_seeds(seed: u64) -> (u64, u64) {
    (derive_seed(seed, 0), derive_seed(seed, 1))
}

fn failed_row(method: Method, sweep: SweepVar, value: f64, status: String) -> MetricRow {
    MetricRow {
        method,
        sweep_var: sweep,
        sweep_value: value,
        p_c: 0.0,
        p_d: 0.0,
        feasible: false,
        throughput_bps: 0.0,
        outage: 1.0,
        outage_se: 0.0,
        mean_due_sinr: 0.0,
        iterations: 0,
        status: Some(status),
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let (train_seed, test_seed) = split_seeds(spec.seed);
    let mut rows = Vec::new();
    let mut cdfs = Vec::new();
    let mut cache: HashMap<(Method, u64, u64), std::result::Result<UncertaintySet, String>> = HashMap::new();
    let grid = default_cdf_grid();

    for (k, value) in spec.points().into_iter().enumerate() {
        let cfg = spec.config_at(value);
        let scenario = build_scenario(&cfg)?;
        let train = generate_dataset(&scenario, &spec.distribution, spec.n_train, train_seed)?;
        let test = generate_dataset(&scenario, &spec.distribution, spec.n_test, test_seed)?;
        let zeta = default_zeta(&scenario);
        for &method in &spec.methods {
            let key = (method, cfg.epsilon.to_bits(), cfg.delta.to_bits());
            let set = cache
                .entry(key)
                .or_insert_with(|| fit_set(method, &train.samples, cfg.epsilon).map_err(|e| e.to_string()));
            let set = match set {
                Ok(s) => s,
                Err(msg) => {
                    warn!("{method} at {}={value}: fit failed: {msg}", spec.sweep);
                    rows.push(failed_row(method, spec.sweep, value, format!("fit: {msg}")));
                    continue;
                }
            };
            let result = match allocate(&scenario, set, zeta) {
                Ok(r) => r,
                Err(e) => {
                    if !matches!(e, Error::Infeasible(_)) {
                        warn!("{method} at {}={value}: {e}", spec.sweep);
                    }
                    rows.push(failed_row(method, spec.sweep, value, e.to_string()));
                    continue;
                }
            };
            let noise = scenario.noise_power;
            let outage = empirical_outage(&result, &test.samples, scenario.gamma_min_d, noise);
            let sinrs = due_sinrs(result.p_c, result.p_d, &test.samples, noise);
            let m = test.len() as f64;
            rows.push(MetricRow {
                method,
                sweep_var: spec.sweep,
                sweep_value: value,
                p_c: result.p_c,
                p_d: result.p_d,
                feasible: true,
                throughput_bps: result.throughput(&scenario),
                outage,
                outage_se: (outage * (1.0 - outage) / m).sqrt(),
                mean_due_sinr: sinrs.iter().sum::<f64>() / m,
                iterations: result.iterations,
                status: None,
            });
            if k == 0 {
                cdfs.push(CdfTable {
                    method,
                    cdf: sinr_cdf(&result, &test.samples, &grid, noise),
                    sinr: grid.clone(),
                });
            }
        }
    }
    Ok(ExperimentOutput { rows, cdfs })
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: e,
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], mut w: W) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}").map_err(io_err)?;
    for r in rows {
        writeln!(w, "{}", r.csv_line()).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_cdf_csv<W: Write>(table: &CdfTable, mut w: W) -> Result<()> {
    writeln!(w, "method,sinr,cdf").map_err(io_err)?;
    for (x, c) in table.sinr.iter().zip(&table.cdf) {
        writeln!(w, "{},{x:e},{c}", table.method).map_err(io_err)?;
    }
    Ok(())
}
