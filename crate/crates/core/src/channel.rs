//! Single-cell D2D underlay geometry, imperfect-CSI sample generation and
//! link-level SINR/throughput.
//!
//! All quantities are linear (watts, linear power gains) once they are inside
//! a [`ScenarioConfig`]; the dB/dBm helpers below are for the config boundary.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::solvers::lp::{solve_lp, LpProblem, LpStatus};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Pathloss model used for the user-to-user links (D2D and CUE-to-DUE crosstalk).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum D2dPathloss {
    /// WINNER+ B1 line-of-sight: `22.7 log10(d_m) + 41 + 20 log10(f_GHz / 5)`.
    WinnerB1Los { carrier_ghz: f64 },
    /// Same macrocell model as the links towards the base station.
    Macro,
}

/// Small-scale power draws used for the perfectly known gains and the CSI estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallScale {
    Rayleigh,
    /// Every small-scale power draw is 1.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// CUE to BS distance in meters.
    pub d_c: f64,
    /// CUE to DUE-receiver distance.
    pub d_cd: f64,
    /// DUE-transmitter to BS distance.
    pub d_db: f64,
    /// DUE pair distance.
    pub d_d: f64,
    pub bandwidth_hz: f64,
    pub noise_power: f64,
    pub macro_intercept_db: f64,
    pub macro_slope_db: f64,
    pub d2d_model: D2dPathloss,
    pub shadowing_cell_db: f64,
    pub shadowing_d2d_db: f64,
    /// Channel estimation error coefficient.
    pub delta: f64,
    pub p_max_c: f64,
    pub p_max_d: f64,
    pub gamma_min_c: f64,
    pub gamma_min_d: f64,
    pub epsilon: f64,
    pub small_scale: SmallScale,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            d_c: 42.0,
            d_cd: 50.16,
            d_db: 85.0,
            d_d: 44.0,
            bandwidth_hz: 10e6,
            noise_power: dbm_to_watts(-134.0),
            macro_intercept_db: 128.1,
            macro_slope_db: 37.6,
            d2d_model: D2dPathloss::WinnerB1Los { carrier_ghz: 2.0 },
            shadowing_cell_db: 8.0,
            shadowing_d2d_db: 4.0,
            delta: 0.9,
            p_max_c: dbm_to_watts(20.0),
            p_max_d: dbm_to_watts(20.0),
            gamma_min_c: 5.0,
            gamma_min_d: 0.1,
            epsilon: 0.05,
            small_scale: SmallScale::Rayleigh,
            seed: 5,
        }
    }
}

fn require(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, reason))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_c", self.d_c),
            ("d_cd", self.d_cd),
            ("d_db", self.d_db),
            ("d_d", self.d_d),
        ] {
            require(v.is_finite() && v > 0.0, name, "must be a positive distance")?;
        }
        require(self.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive")?;
        require(self.noise_power > 0.0, "noise_power", "must be positive")?;
        require(self.delta > 0.0 && self.delta < 1.0, "delta", "must lie in (0, 1)")?;
        require(
            self.epsilon > 0.0 && self.epsilon < 1.0,
            "epsilon",
            "must lie in (0, 1)",
        )?;
        require(self.p_max_c > 0.0, "p_max_c", "must be positive")?;
        require(self.p_max_d > 0.0, "p_max_d", "must be positive")?;
        require(self.gamma_min_c > 0.0, "gamma_min_c", "must be positive")?;
        require(self.gamma_min_d > 0.0, "gamma_min_d", "must be positive")?;
        require(
            self.shadowing_cell_db >= 0.0,
            "shadowing_cell_db",
            "must be non-negative",
        )?;
        require(self.shadowing_d2d_db >= 0.0, "shadowing_d2d_db", "must be non-negative")?;
        if let D2dPathloss::WinnerB1Los { carrier_ghz } = self.d2d_model {
            require(carrier_ghz > 0.0, "carrier_ghz", "must be positive")?;
        }
        Ok(())
    }

    /// Macrocell pathloss in dB at `d_m` meters.
    pub fn macro_pathloss_db(&self, d_m: f64) -> f64 {
        self.macro_intercept_db + self.macro_slope_db * (d_m / 1000.0).log10()
    }

    pub fn d2d_pathloss_db(&self, d_m: f64) -> f64 {
        match self.d2d_model {
            D2dPathloss::WinnerB1Los { carrier_ghz } => 22.7 * d_m.log10() + 41.0 + 20.0 * (carrier_ghz / 5.0).log10(),
            D2dPathloss::Macro => self.macro_pathloss_db(d_m),
        }
    }
}

/// Frozen network realisation: large-scale gains, perfectly known BS-side
/// gains and the per-run CSI estimate of the two user-to-user links.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub alpha_c: f64,
    pub alpha_d: f64,
    pub alpha_cd: f64,
    pub alpha_db: f64,
    pub g_c: f64,
    pub g_db: f64,
    /// Estimated small-scale power `|h_d|^2` of the D2D link.
    pub h_hat_d: f64,
    /// Estimated small-scale power of the CUE-to-DUE crosstalk link.
    pub h_hat_cd: f64,
    pub noise_power: f64,
    pub bandwidth_hz: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub p_max_c: f64,
    pub p_max_d: f64,
    pub gamma_min_c: f64,
    pub gamma_min_d: f64,
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut shadow = |std_db: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * std_db
    };
    let s_c = shadow(config.shadowing_cell_db);
    let s_db = shadow(config.shadowing_cell_db);
    let s_d = shadow(config.shadowing_d2d_db);
    let s_cd = shadow(config.shadowing_d2d_db);

    let alpha_c = db_to_linear(-config.macro_pathloss_db(config.d_c) + s_c);
    let alpha_db = db_to_linear(-config.macro_pathloss_db(config.d_db) + s_db);
    let alpha_d = db_to_linear(-config.d2d_pathloss_db(config.d_d) + s_d);
    let alpha_cd = db_to_linear(-config.d2d_pathloss_db(config.d_cd) + s_cd);

    let mut small = || -> f64 {
        match config.small_scale {
            SmallScale::Rayleigh => Exp1.sample(&mut rng),
            SmallScale::Unit => 1.0,
        }
    };
    let g_c = alpha_c * small();
    let g_db = alpha_db * small();
    let h_hat_d = small();
    let h_hat_cd = small();

    Ok(Scenario {
        alpha_c,
        alpha_d,
        alpha_cd,
        alpha_db,
        g_c,
        g_db,
        h_hat_d,
        h_hat_cd,
        noise_power: config.noise_power,
        bandwidth_hz: config.bandwidth_hz,
        delta: config.delta,
        epsilon: config.epsilon,
        p_max_c: config.p_max_c,
        p_max_d: config.p_max_d,
        gamma_min_c: config.gamma_min_c,
        gamma_min_d: config.gamma_min_d,
    })
}

impl Scenario {
    /// The sample every draw collapses to when the estimation error vanishes.
    pub fn estimate_point(&self) -> ChannelSample {
        ChannelSample::new(self.alpha_d * self.h_hat_d, self.alpha_cd * self.h_hat_cd)
    }

    /// Composes the estimate with one error draw `(e_d, e_cd)`.
    pub fn compose(&self, e_d: f64, e_cd: f64) -> ChannelSample {
        let d2 = self.delta * self.delta;
        ChannelSample::new(
            self.alpha_d * (d2 * self.h_hat_d + (1.0 - d2) * e_d * e_d),
            self.alpha_cd * (d2 * self.h_hat_cd + (1.0 - d2) * e_cd * e_cd),
        )
    }
}

/// One realisation of the uncertain pair `(g_d, g_cd)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub g_d: f64,
    pub g_cd: f64,
}

impl ChannelSample {
    pub const fn new(g_d: f64, g_cd: f64) -> Self {
        Self { g_d, g_cd }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.g_d, self.g_cd]
    }

    pub fn dot(self, p: [f64; 2]) -> f64 {
        p[0] * self.g_d + p[1] * self.g_cd
    }
}

impl From<[f64; 2]> for ChannelSample {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

/// Half-plane `normal . e <= offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfSpace {
    pub fn contains(&self, e: [f64; 2]) -> bool {
        self.normal[0] * e[0] + self.normal[1] * e[1] <= self.offset
    }
}

/// Distribution of the estimation error pair `(e_d, e_cd)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorDistribution {
    Gaussian {
        mean: [f64; 2],
        cov: [[f64; 2]; 2],
    },
    /// Independent exponentials conditioned on a polytope.
    TruncatedExponential {
        rate: [f64; 2],
        halfspaces: Vec<HalfSpace>,
    },
}

const MAX_REJECTIONS: usize = 100_000;

impl ErrorDistribution {
    /// Unit variances with correlation 0.5.
    pub fn default_gaussian() -> Self {
        ErrorDistribution::Gaussian {
            mean: [0.0, 0.0],
            cov: [[1.0, 0.5], [0.5, 1.0]],
        }
    }

    /// Rate 1 per coordinate, truncated to the L1 ball of radius 3.
    pub fn default_truncated_exponential() -> Self {
        ErrorDistribution::TruncatedExponential {
            rate: [1.0, 1.0],
            halfspaces: vec![HalfSpace {
                normal: [1.0, 1.0],
                offset: 3.0,
            }],
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ErrorDistribution::Gaussian { .. } => "gaussian",
            ErrorDistribution::TruncatedExponential { .. } => "truncated-exponential",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ErrorDistribution::Gaussian { mean, cov } => {
                require(mean.iter().all(|m| m.is_finite()), "gauss_mean", "must be finite")?;
                require(
                    (cov[0][1] - cov[1][0]).abs() <= 1e-12 * (1.0 + cov[0][1].abs()),
                    "gauss_cov",
                    "must be symmetric",
                )?;
                let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
                require(
                    cov[0][0] >= 0.0 && cov[1][1] >= 0.0 && det >= -1e-12 * (cov[0][0] * cov[1][1]).max(1e-300),
                    "gauss_cov",
                    "must be positive semidefinite",
                )?;
            }
            ErrorDistribution::TruncatedExponential { rate, halfspaces } => {
                require(
                    rate.iter().all(|r| *r > 0.0 && r.is_finite()),
                    "exp_rate",
                    "must be positive",
                )?;
                // Non-empty intersection with the exponential support e >= 0.
                let mut lp = LpProblem::new(vec![0.0, 0.0]).nonnegative();
                for h in halfspaces {
                    lp = lp.leq(h.normal.to_vec(), h.offset);
                }
                let sol = solve_lp(&lp)?;
                require(
                    sol.status != LpStatus::Infeasible,
                    "exp_halfspaces",
                    "truncation polytope does not meet the positive quadrant",
                )?;
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Result<[f64; 2]> {
        match self {
            ErrorDistribution::Gaussian { mean, cov } => {
                let z0: f64 = StandardNormal.sample(rng);
                let z1: f64 = StandardNormal.sample(rng);
                let s0 = cov[0][0].sqrt();
                let (l10, l11) = if s0 > 0.0 {
                    let l10 = cov[1][0] / s0;
                    (l10, (cov[1][1] - l10 * l10).max(0.0).sqrt())
                } else {
                    (0.0, cov[1][1].sqrt())
                };
                Ok([mean[0] + s0 * z0, mean[1] + l10 * z0 + l11 * z1])
            }
            ErrorDistribution::TruncatedExponential { rate, halfspaces } => {
                let ed = Exp::new(rate[0]).map_err(|e| Error::config("exp_rate", e.to_string()))?;
                let ec = Exp::new(rate[1]).map_err(|e| Error::config("exp_rate", e.to_string()))?;
                for _ in 0..MAX_REJECTIONS {
                    let e = [ed.sample(rng), ec.sample(rng)];
                    if halfspaces.iter().all(|h| h.contains(e)) {
                        return Ok(e);
                    }
                }
                Err(Error::Dataset(format!(
                    "rejection sampler accepted nothing in {MAX_REJECTIONS} draws"
                )))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<ChannelSample>,
    pub seed: u64,
    pub tag: String,
}

/// Draws `n` i.i.d. samples `g = alpha * (delta^2 h_hat + (1 - delta^2) e^2)` around
/// the scenario's frozen estimate.
pub fn generate_dataset(scenario: &Scenario, spec: &ErrorDistribution, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Dataset(format!("need at least 2 samples, got {n}")));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| spec.draw(&mut rng).map(|e| scenario.compose(e[0], e[1])))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        samples,
        seed,
        tag: spec.tag().to_string(),
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with header `g_d,g_cd` at 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["g_d", "g_cd"])?;
        for s in &self.samples {
            w.write_record([format!("{:.16e}", s.g_d), format!("{:.16e}", s.g_cd)])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<dataset>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["g_d", "g_cd"] {
            return Err(Error::Parse(format!("unexpected dataset header {headers:?}")));
        }
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("short dataset row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            samples.push(ChannelSample::new(parse(0)?, parse(1)?));
        }
        Ok(Dataset {
            samples,
            seed: 0,
            tag: "file".into(),
        })
    }
}

/// Received SINR of the D2D pair.
pub fn sinr_d(p_c: f64, p_d: f64, sample: ChannelSample, noise_power: f64) -> f64 {
    p_d * sample.g_d / (noise_power + p_c * sample.g_cd)
}

/// Received SINR of the CUE at the base station.
pub fn sinr_c(p_c: f64, p_d: f64, scenario: &Scenario) -> f64 {
    p_c * scenario.g_c / (scenario.noise_power + p_d * scenario.g_db)
}

/// CUE throughput in bits/s.
pub fn throughput(p_c: f64, p_d: f64, scenario: &Scenario) -> f64 {
    scenario.bandwidth_hz * (1.0 + sinr_c(p_c, p_d, scenario)).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_is_embedded() {
        let cfg = ScenarioConfig::default();
        assert_eq!((cfg.d_c, cfg.d_cd, cfg.d_db, cfg.d_d), (42.0, 50.16, 85.0, 44.0));
        assert_eq!(cfg.bandwidth_hz, 1e7);
        assert!((watts_to_dbm(cfg.noise_power) + 134.0).abs() < 1e-9);
        let sc = build_scenario(&cfg).unwrap();
        assert_eq!(sc.bandwidth_hz, 1e7);
        assert!(sc.alpha_c > 0.0 && sc.g_c > 0.0 && sc.g_db > 0.0);
    }

    #[test]
    fn zero_shadowing_gives_pure_pathloss() {
        let cfg = ScenarioConfig {
            shadowing_cell_db: 0.0,
            shadowing_d2d_db: 0.0,
            small_scale: SmallScale::Unit,
            ..Default::default()
        };
        let sc = build_scenario(&cfg).unwrap();
        let pl = 128.1 + 37.6 * (0.042f64).log10();
        assert!((sc.alpha_c / 10f64.powf(-pl / 10.0) - 1.0).abs() < 1e-12);
        assert_eq!(sc.g_c, sc.alpha_c);
        assert_eq!(sc.g_db, sc.alpha_db);
        let pl_d = 22.7 * 44f64.log10() + 41.0 + 20.0 * (0.4f64).log10();
        assert!((sc.alpha_d / 10f64.powf(-pl_d / 10.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_errors_name_the_field() {
        let cfg = ScenarioConfig {
            delta: 1.5,
            ..Default::default()
        };
        match build_scenario(&cfg) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "delta"),
            other => panic!("{other:?}"),
        }
        let cfg = ScenarioConfig {
            d_cd: 0.0,
            ..Default::default()
        };
        assert!(matches!(build_scenario(&cfg), Err(Error::Config { field, .. }) if field == "d_cd"));
    }

    #[test]
    fn dataset_needs_two_samples() {
        let sc = build_scenario(&ScenarioConfig::default()).unwrap();
        let r = generate_dataset(&sc, &ErrorDistribution::default_gaussian(), 1, 0);
        assert!(matches!(r, Err(Error::Dataset(_))));
    }

    #[test]
    fn empty_truncation_rejected() {
        let spec = ErrorDistribution::TruncatedExponential {
            rate: [1.0, 1.0],
            halfspaces: vec![HalfSpace {
                normal: [1.0, 1.0],
                offset: -1.0,
            }],
        };
        assert!(matches!(spec.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn sinr_basics() {
        let s = ChannelSample::new(2.0, 3.0);
        assert_eq!(sinr_d(1.0, 0.0, s, 1.0), 0.0);
        let s = ChannelSample::new(0.5, 3.0);
        assert_eq!(sinr_d(0.0, 1.0, s, 0.5), 1.0);
        let sc = build_scenario(&ScenarioConfig::default()).unwrap();
        let p_c = sc.noise_power / sc.g_c;
        assert!((sinr_c(p_c, 0.0, &sc) - 1.0).abs() < 1e-12);
        assert_eq!(sinr_c(0.0, 0.1, &sc), 0.0);
        assert_eq!(throughput(0.0, 0.1, &sc), 0.0);
        assert!((throughput(p_c, 0.0, &sc) - 1e7).abs() < 1e-6);
    }
}
