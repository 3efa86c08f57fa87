//! Robust power allocation for one CUE/DUE pair.
//!
//! The D2D constraint over a set `G` reads `min_{g in G} p^T g >= gamma_d`
//! with `p = [p_d / s2, -p_c gamma_d / s2]`. For fixed `p_d` the left side is
//! concave and non-increasing in `p_c`, so the admissible `p_c` form an
//! interval `[0, cap(p_d)]`. The outer search bisects on `p_d` until the cap
//! meets the CUE power budget.

use log::warn;

use crate::channel::{sinr_c, throughput, Scenario};
use crate::error::{Error, Result};
use crate::quantile_sets::SetShape;
use crate::uncertainty::UncertaintySet;

const NEWTON_MAX: usize = 100;
const BISECTION_MAX: usize = 200;

/// Smallest CUE power meeting the CUE SINR target.
pub fn pc_lower_bound(scenario: &Scenario, p_d: f64) -> f64 {
    scenario.gamma_min_c * (scenario.noise_power + p_d * scenario.g_db) / scenario.g_c
}

fn direction(p_c: f64, p_d: f64, gamma_min_d: f64, noise: f64) -> [f64; 2] {
    [p_d / noise, -p_c * gamma_min_d / noise]
}

/// Robust D2D margin `min_g p^T g - gamma_d` at a power pair.
pub fn robust_margin(set: &UncertaintySet, p_c: f64, p_d: f64, gamma_min_d: f64, noise: f64) -> Result<f64> {
    let (_, v) = set.worst_case(direction(p_c, p_d, gamma_min_d, noise))?;
    Ok(v - gamma_min_d)
}

/// Largest root of `A - b gcd - zeta sqrt(a^2 + b^2) = 0` on `b >= 0`.
fn l2_root(a: f64, big_a: f64, gcd: f64, zeta: f64) -> Option<f64> {
    let qa = gcd * gcd - zeta * zeta;
    let qb = -2.0 * big_a * gcd;
    let qc = big_a * big_a - zeta * zeta * a * a;
    let mut roots = Vec::with_capacity(2);
    if qa.abs() <= 1e-300 {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Numerically stable pair.
        let t = -0.5 * (qb + qb.signum() * sq);
        if t != 0.0 {
            roots.push(t / qa);
            roots.push(qc / t);
        } else {
            roots.push(0.0);
        }
    }
    roots
        .into_iter()
        .filter(|b| b.is_finite() && *b >= 0.0 && big_a - b * gcd >= -1e-12 * big_a.abs())
        .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |x| x.max(b))))
}

/// Largest `p_c >= 0` keeping the robust D2D constraint at `p_d`.
///
/// `Ok(None)` when even `p_c = 0` violates it; `f64::INFINITY` when no cap applies.
pub fn pc_max_robust(set: &UncertaintySet, p_d: f64, gamma_min_d: f64, noise: f64) -> Result<Option<f64>> {
    if !(gamma_min_d > 0.0) || !(noise > 0.0) || p_d < 0.0 {
        return Err(Error::config(
            "gamma_min_d",
            "robust cap needs gamma_min_d > 0, noise > 0 and p_d >= 0",
        ));
    }
    let a = p_d / noise;
    let to_pc = |b: f64| b * noise / gamma_min_d;
    let f = |b: f64| -> Result<f64> { Ok(set.worst_case([a, -b])?.1 - gamma_min_d) };
    let f0 = f(0.0)?;
    let scale = gamma_min_d.abs() + a * set.reference_point()[0].abs();
    if f0 < -1e-12 * scale {
        return Ok(None);
    }
    match set {
        UncertaintySet::Singleton(c) => {
            if c[1] <= 0.0 {
                return Ok(Some(f64::INFINITY));
            }
            Ok(Some(to_pc(((a * c[0] - gamma_min_d) / c[1]).max(0.0))))
        }
        UncertaintySet::Symmetric(s) => {
            if s.min_crosstalk() < 0.0 {
                warn!("{} set allows negative crosstalk gains", s.shape);
            }
            let c = s.center;
            let r = s.radius();
            let b = match s.shape {
                SetShape::L1Ball => {
                    // Slope changes where b = a.
                    if c[1] + r <= 0.0 {
                        return Ok(Some(f64::INFINITY));
                    }
                    if f(a)? >= 0.0 {
                        (a * c[0] - gamma_min_d) / (c[1] + r)
                    } else {
                        if c[1] <= 0.0 {
                            return Ok(Some(f64::INFINITY));
                        }
                        (a * (c[0] - r) - gamma_min_d) / c[1]
                    }
                }
                SetShape::BoxSet => {
                    if c[1] + r <= 0.0 {
                        return Ok(Some(f64::INFINITY));
                    }
                    (a * (c[0] - r) - gamma_min_d) / (c[1] + r)
                }
                SetShape::L2Ball => {
                    if c[1] + r <= 0.0 {
                        return Ok(Some(f64::INFINITY));
                    }
                    let big_a = a * c[0] - gamma_min_d;
                    match l2_root(a, big_a, c[1], r) {
                        Some(b) => b,
                        None => return Ok(Some(f64::INFINITY)),
                    }
                }
            };
            Ok(Some(to_pc(b.max(0.0))))
        }
        UncertaintySet::Svc(_) => polyhedral_root(set, a, gamma_min_d, f0).map(|b| b.map(to_pc)),
    }
}

/// Largest root of the concave piecewise-linear margin, by Newton steps from the right.
///
/// For a concave function every tangent root lies at or beyond the largest
/// root, so the iterates decrease monotonically onto it; on a piecewise-linear
/// function they land on it exactly once the active piece is found.
fn polyhedral_root(set: &UncertaintySet, a: f64, gamma_min_d: f64, f0: f64) -> Result<Option<f64>> {
    let eval = |b: f64| -> Result<(f64, f64)> {
        let (g, v) = set.worst_case([a, -b])?;
        Ok((v - gamma_min_d, g[1]))
    };
    let r = set.reference_point();
    let tol = 1e-13 * (gamma_min_d + a * r[0].abs());
    // Any member bounds the root from above.
    let mut b = if r[1] > 0.0 {
        ((a * r[0] - gamma_min_d) / r[1]).max(0.0)
    } else {
        let (_, slope0) = eval(0.0)?;
        if slope0 <= 0.0 {
            return Ok(Some(f64::INFINITY));
        }
        f0 / slope0
    };
    let (mut fb, mut gcd) = eval(b)?;
    let mut step = b.max(f64::MIN_POSITIVE);
    let mut grown = 0;
    while fb > tol {
        if grown > 200 {
            return Ok(Some(f64::INFINITY));
        }
        b += step;
        step *= 2.0;
        grown += 1;
        (fb, gcd) = eval(b)?;
    }
    for _ in 0..NEWTON_MAX {
        if fb >= -tol {
            return Ok(Some(b));
        }
        if gcd <= 0.0 {
            break;
        }
        let next = b + fb / gcd;
        if !(next < b) || next < 0.0 {
            break;
        }
        b = next;
        (fb, gcd) = eval(b)?;
    }
    warn!("Newton search for the robust cap stalled; bisecting");
    let (mut lo, mut hi) = (0.0, b);
    for _ in 0..BISECTION_MAX {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid)?.0 >= -tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Uncapped robust CUE power at `p_d`; the throughput is increasing in `p_c`.
pub fn solve_subproblem(scenario: &Scenario, set: &UncertaintySet, p_d: f64) -> Result<f64> {
    let cap = pc_max_robust(set, p_d, scenario.gamma_min_d, scenario.noise_power)?
        .ok_or_else(|| Error::Infeasible(format!("robust D2D constraint fails at p_c = 0, p_d = {p_d:e}")))?;
    let lb = pc_lower_bound(scenario, p_d);
    if cap < lb * (1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "robust cap {cap:e} is below the CUE floor {lb:e} at p_d = {p_d:e}"
        )));
    }
    Ok(cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub p_d: f64,
    /// Uncapped robust CUE power, 0 where the D2D constraint cannot be met.
    pub p_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub p_c: f64,
    pub p_d: f64,
    pub feasible: bool,
    /// Worst-case D2D SINR margin over the set.
    pub margin: f64,
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
    pub zeta: f64,
}

pub const CSV_HEADER: &str = "method,epsilon,gamma_min_d,p_c,p_d,feasible,iterations,margin";

impl AllocationResult {
    pub fn infeasible(zeta: f64, iterations: usize, trace: Vec<TraceStep>) -> Self {
        Self {
            p_c: 0.0,
            p_d: 0.0,
            feasible: false,
            margin: f64::NAN,
            iterations,
            trace,
            zeta,
        }
    }

    pub fn csv_row(&self, method: &str, epsilon: f64, gamma_min_d: f64) -> String {
        format!(
            "{method},{epsilon},{gamma_min_d},{:e},{:e},{},{},{:e}",
            self.p_c, self.p_d, self.feasible, self.iterations, self.margin
        )
    }

    pub fn throughput(&self, scenario: &Scenario) -> f64 {
        if self.feasible {
            throughput(self.p_c, self.p_d, scenario)
        } else {
            0.0
        }
    }

    /// True when one of the two powers sits at its budget.
    pub fn at_endpoint(&self, scenario: &Scenario) -> bool {
        (self.p_c - scenario.p_max_c).abs() <= self.zeta || (self.p_d - scenario.p_max_d).abs() <= self.zeta
    }
}

pub fn default_zeta(scenario: &Scenario) -> f64 {
    1e-4 * scenario.p_max_d
}

pub fn max_iterations(p_max_d: f64, zeta: f64) -> usize {
    (p_max_d / zeta).log2().ceil() as usize + 2
}

/// Bisection on `p_d`, steered by the uncapped robust CUE power.
pub fn allocate(scenario: &Scenario, set: &UncertaintySet, zeta: f64) -> Result<AllocationResult> {
    let (pmax_c, pmax_d) = (scenario.p_max_c, scenario.p_max_d);
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::config("zeta", format!("must lie in (0, 1), got {zeta}")));
    }
    let steer = |p_d: f64| -> Result<f64> {
        Ok(pc_max_robust(set, p_d, scenario.gamma_min_d, scenario.noise_power)?.unwrap_or(0.0))
    };
    let bound = max_iterations(pmax_d, zeta);
    let mut lo = 0.0;
    let mut hi = pmax_d;
    let mut hi_value = None;
    let mut trace = Vec::new();
    let mut finish: Option<(f64, f64)> = None;
    let mut p_d = 0.5 * (lo + hi);
    while trace.len() < bound {
        let p_c = steer(p_d)?;
        trace.push(TraceStep { p_d, p_c });
        if p_c > pmax_c + zeta {
            hi = p_d;
            hi_value = Some(p_c);
        } else if p_c < pmax_c - zeta {
            lo = p_d;
        } else {
            finish = Some((p_d, p_c.min(pmax_c)));
            break;
        }
        if hi - lo < zeta {
            if let Some(v) = hi_value {
                finish = Some((hi, v.min(pmax_c)));
            }
            break;
        }
        p_d = 0.5 * (lo + hi);
        if p_d >= pmax_d - zeta {
            break;
        }
    }
    check_monotone(&trace)?;
    let iterations = trace.len();
    let (p_d, p_c) = match finish {
        Some(v) => v,
        None => {
            let cap = solve_subproblem(scenario, set, pmax_d)?;
            (pmax_d, cap.min(pmax_c))
        }
    };
    let lb = pc_lower_bound(scenario, p_d);
    if p_c < lb * (1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "CUE floor {lb:e} exceeds the allocated p_c = {p_c:e}"
        )));
    }
    let margin = robust_margin(set, p_c, p_d, scenario.gamma_min_d, scenario.noise_power)?;
    debug_assert!(sinr_c(p_c, p_d, scenario) >= scenario.gamma_min_c * (1.0 - 1e-9));
    Ok(AllocationResult {
        p_c,
        p_d,
        feasible: true,
        margin,
        iterations,
        trace,
        zeta,
    })
}

fn check_monotone(trace: &[TraceStep]) -> Result<()> {
    let mut steps: Vec<&TraceStep> = trace.iter().collect();
    steps.sort_by(|a, b| a.p_d.total_cmp(&b.p_d));
    for w in steps.windows(2) {
        let (x, y) = (w[0], w[1]);
        if y.p_c < x.p_c * (1.0 - 1e-9) {
            return Err(Error::NonMonotoneSteering(format!(
                "p_c drops from {:e} to {:e} as p_d grows from {:e} to {:e}",
                x.p_c, y.p_c, x.p_d, y.p_d
            )));
        }
    }
    Ok(())
}
