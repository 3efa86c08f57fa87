//! Flat TOML run configuration with `KEY=VALUE` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocator::default_zeta;
use crate::channel::{D2dPathloss, ErrorDistribution, HalfSpace, Scenario, ScenarioConfig, SmallScale};
use crate::error::{Error, Result};
use crate::evaluation::{ExperimentSpec, SweepVar};
use crate::uncertainty::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d_c: f64,
    pub d_cd: f64,
    pub d_db: f64,
    pub d_d: f64,
    pub bandwidth_hz: f64,
    /// Watts.
    pub noise_power: f64,
    pub macro_intercept_db: f64,
    pub macro_slope_db: f64,
    /// `winner-b1-los` or `macro`.
    pub d2d_model: String,
    pub carrier_ghz: f64,
    pub shadowing_cell_db: f64,
    pub shadowing_d2d_db: f64,
    pub delta: f64,
    /// Watts.
    pub p_max_c: f64,
    /// Watts.
    pub p_max_d: f64,
    pub gamma_min_c: f64,
    pub gamma_min_d: f64,
    pub epsilon: f64,
    /// `rayleigh` or `unit`.
    pub small_scale: String,
    pub scenario_seed: u64,

    /// `gaussian` or `truncated-exponential`.
    pub distribution: String,
    pub gauss_mean: [f64; 2],
    pub gauss_cov: [[f64; 2]; 2],
    pub exp_rate: [f64; 2],
    /// Rows `[a_d, a_cd, b]` for `a_d e_d + a_cd e_cd <= b`.
    pub exp_halfspaces: Vec<[f64; 3]>,

    pub methods: Vec<String>,
    pub sweep_var: String,
    pub sweep_grid: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Seed of the data streams.
    pub seed: u64,
    /// Bisection tolerance in watts; defaults to `1e-4 * p_max_d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    /// Method used by `fit-set`.
    pub method: String,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        let spec = ExperimentSpec::default();
        let carrier_ghz = match s.d2d_model {
            D2dPathloss::WinnerB1Los { carrier_ghz } => carrier_ghz,
            D2dPathloss::Macro => 2.0,
        };
        Self {
            d_c: s.d_c,
            d_cd: s.d_cd,
            d_db: s.d_db,
            d_d: s.d_d,
            bandwidth_hz: s.bandwidth_hz,
            noise_power: s.noise_power,
            macro_intercept_db: s.macro_intercept_db,
            macro_slope_db: s.macro_slope_db,
            d2d_model: "winner-b1-los".into(),
            carrier_ghz,
            shadowing_cell_db: s.shadowing_cell_db,
            shadowing_d2d_db: s.shadowing_d2d_db,
            delta: s.delta,
            p_max_c: s.p_max_c,
            p_max_d: s.p_max_d,
            gamma_min_c: s.gamma_min_c,
            gamma_min_d: s.gamma_min_d,
            epsilon: s.epsilon,
            small_scale: "rayleigh".into(),
            scenario_seed: s.seed,
            distribution: "gaussian".into(),
            gauss_mean: [0.0, 0.0],
            gauss_cov: [[1.0, 0.5], [0.5, 1.0]],
            exp_rate: [1.0, 1.0],
            exp_halfspaces: vec![[1.0, 1.0, 3.0]],
            methods: Method::ALL.iter().map(|m| m.to_string()).collect(),
            sweep_var: "none".into(),
            sweep_grid: Vec::new(),
            n_train: spec.n_train,
            n_test: spec.n_test,
            seed: spec.seed,
            zeta: None,
            method: "svc".into(),
            out_dir: "out".into(),
        }
    }
}

fn de_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let field = msg
        .split_once("unknown field `")
        .and_then(|(_, rest)| rest.split_once('`'))
        .map(|(k, _)| k.to_string())
        .unwrap_or_else(|| "config".to_string());
    Error::Config {
        field,
        reason: msg.trim().to_string(),
    }
}

/// Parses `VALUE` as a TOML value, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(de_error)?;
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(item, "override must look like KEY=VALUE"))?;
            table.insert(k.trim().to_string(), parse_override_value(v.trim()));
        }
        let cfg: RunConfig = table.try_into().map_err(de_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.display().to_string(),
                source: e,
            })?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserializable configuration: {e}\n"))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario()?.validate()?;
        self.error_distribution()?.validate()?;
        self.method_list()?;
        self.sweep()?;
        self.method()?;
        if let Some(z) = self.zeta {
            if !(z > 0.0 && z < 1.0) {
                return Err(Error::config("zeta", "must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let d2d_model = match self.d2d_model.as_str() {
            "winner-b1-los" => D2dPathloss::WinnerB1Los {
                carrier_ghz: self.carrier_ghz,
            },
            "macro" => D2dPathloss::Macro,
            other => return Err(Error::config("d2d_model", format!("unknown model `{other}`"))),
        };
        let small_scale = match self.small_scale.as_str() {
            "rayleigh" => SmallScale::Rayleigh,
            "unit" => SmallScale::Unit,
            other => return Err(Error::config("small_scale", format!("unknown model `{other}`"))),
        };
        Ok(ScenarioConfig {
            d_c: self.d_c,
            d_cd: self.d_cd,
            d_db: self.d_db,
            d_d: self.d_d,
            bandwidth_hz: self.bandwidth_hz,
            noise_power: self.noise_power,
            macro_intercept_db: self.macro_intercept_db,
            macro_slope_db: self.macro_slope_db,
            d2d_model,
            shadowing_cell_db: self.shadowing_cell_db,
            shadowing_d2d_db: self.shadowing_d2d_db,
            delta: self.delta,
            p_max_c: self.p_max_c,
            p_max_d: self.p_max_d,
            gamma_min_c: self.gamma_min_c,
            gamma_min_d: self.gamma_min_d,
            epsilon: self.epsilon,
            small_scale,
            seed: self.scenario_seed,
        })
    }

    pub fn error_distribution(&self) -> Result<ErrorDistribution> {
        match self.distribution.as_str() {
            "gaussian" => Ok(ErrorDistribution::Gaussian {
                mean: self.gauss_mean,
                cov: self.gauss_cov,
            }),
            "truncated-exponential" => Ok(ErrorDistribution::TruncatedExponential {
                rate: self.exp_rate,
                halfspaces: self
                    .exp_halfspaces
                    .iter()
                    .map(|h| HalfSpace {
                        normal: [h[0], h[1]],
                        offset: h[2],
                    })
                    .collect(),
            }),
            other => Err(Error::config("distribution", format!("unknown distribution `{other}`"))),
        }
    }

    pub fn method_list(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    pub fn sweep(&self) -> Result<SweepVar> {
        self.sweep_var.parse()
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            scenario: self.scenario()?,
            distribution: self.error_distribution()?,
            methods: self.method_list()?,
            sweep: self.sweep()?,
            grid: self.sweep_grid.clone(),
            n_train: self.n_train,
            n_test: self.n_test,
            seed: self.seed,
        })
    }

    pub fn zeta_for(&self, scenario: &Scenario) -> f64 {
        self.zeta.unwrap_or_else(|| default_zeta(scenario))
    }
}
