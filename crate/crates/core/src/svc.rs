//! Support vector clustering with the weighted generalized intersection
//! kernel, and the polytope it induces in CSI space.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use log::warn;

use crate::channel::ChannelSample;
use crate::error::{Error, Result};
use crate::quantile_sets::{parse_f64, quantile_rank};
use crate::solvers::smo::{solve_simplex_qp, KernelMatrix, SmoOptions};

pub type Mat2 = [[f64; 2]; 2];

/// Threshold for classifying a weight against 0 and the cap.
pub const WEIGHT_TOL: f64 = 1e-8;
const WIDTH_MARGIN: f64 = 0.01;
const RHO_SPREAD_WARN: f64 = 1e-4;

pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_inverse(m: &Mat2) -> Option<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Eigen-decomposition of a symmetric 2x2 matrix: values descending, unit vectors.
fn symmetric_eigen(m: &Mat2) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = (mean + r, mean - r);
    let v1 = if b.abs() > 0.0 {
        // Pick the better conditioned of the two equivalent forms.
        let u = [l1 - d, b];
        let w = [b, l1 - a];
        let c = if u[0].hypot(u[1]) >= w[0].hypot(w[1]) { u } else { w };
        let n = c[0].hypot(c[1]);
        [c[0] / n, c[1] / n]
    } else if a >= d {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [v1, v2])
}

/// Sample covariance (regularized) and its inverse square root `Q`.
pub fn covariance_weights(samples: &[ChannelSample]) -> Result<(Mat2, Mat2)> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::Dataset(format!("covariance needs at least 3 samples, got {n}")));
    }
    let inv = 1.0 / n as f64;
    let mean = samples
        .iter()
        .fold([0.0; 2], |acc, s| [acc[0] + s.g_d * inv, acc[1] + s.g_cd * inv]);
    let mut cov = [[0.0; 2]; 2];
    for s in samples {
        let d = [s.g_d - mean[0], s.g_cd - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    let reg = 1e-10 * (cov[0][0] + cov[1][1]) / 2.0;
    cov[0][0] += reg;
    cov[1][1] += reg;

    let (vals, vecs) = symmetric_eigen(&cov);
    if !(vals[0].is_finite() && vals[1].is_finite()) || vals[0] <= 0.0 || vals[1] < 1e-12 * vals[0] {
        return Err(Error::SingularCovariance {
            min: vals[1],
            max: vals[0],
        });
    }
    let mut q = [[0.0; 2]; 2];
    for (val, v) in vals.iter().zip(vecs.iter()) {
        let s = 1.0 / val.sqrt();
        for i in 0..2 {
            for j in 0..2 {
                q[i][j] += s * v[i] * v[j];
            }
        }
    }
    Ok((q, cov))
}

/// Widened ranges of the whitened coordinates.
pub fn interval_widths(samples: &[ChannelSample], q: &Mat2) -> [f64; 2] {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in samples {
        let w = mat_vec(q, s.to_array());
        for k in 0..2 {
            lo[k] = lo[k].min(w[k]);
            hi[k] = hi[k].max(w[k]);
        }
    }
    [0, 1].map(|k| {
        if hi[k] >= lo[k] {
            (1.0 + WIDTH_MARGIN) * (hi[k] - lo[k])
        } else {
            0.0
        }
    })
}

pub fn wgik(q: &Mat2, xi: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let w = mat_vec(q, [a[0] - b[0], a[1] - b[1]]);
    xi[0] + xi[1] - w[0].abs() - w[1].abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvcVariant {
    /// Soft margin with cap `1/(eps N)`.
    Soft,
    /// Hard margin, radius set by the rank statistic.
    Quantile,
}

impl fmt::Display for SvcVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SvcVariant::Soft => "soft",
            SvcVariant::Quantile => "quantile",
        })
    }
}

impl FromStr for SvcVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "soft" => Ok(SvcVariant::Soft),
            "quantile" => Ok(SvcVariant::Quantile),
            other => Err(Error::Parse(format!("unknown SVC variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvcModel {
    pub variant: SvcVariant,
    pub epsilon: f64,
    pub points: Vec<[f64; 2]>,
    pub lambda: Vec<f64>,
    pub cap: f64,
    /// `lambda_i > tol`.
    pub support: Vec<usize>,
    /// `tol < lambda_i < cap - tol`.
    pub boundary: Vec<usize>,
    /// `lambda_i >= cap - tol`.
    pub outliers: Vec<usize>,
    pub q: Mat2,
    pub covariance: Mat2,
    pub xi: [f64; 2],
    pub rho: f64,
    pub anchor: usize,
    /// Squared feature distance of each training sample to the centre.
    pub distances: Vec<f64>,
    pub radius_sq: f64,
    /// Spread of the size constant across boundary support vectors.
    pub rho_spread: f64,
    pub updates: usize,
    pub violation: f64,
}

struct Prepared {
    points: Vec<[f64; 2]>,
    q: Mat2,
    covariance: Mat2,
    xi: [f64; 2],
    kernel: KernelMatrix,
}

fn prepare(samples: &[ChannelSample]) -> Result<Prepared> {
    if samples.len() < 2 {
        return Err(Error::Dataset("SVC needs at least 2 samples".into()));
    }
    let points: Vec<[f64; 2]> = samples.iter().map(|s| s.to_array()).collect();
    let first = points[0];
    if points.iter().all(|p| *p == first) {
        return Err(Error::DegenerateDataset("all samples are identical".into()));
    }
    let (q, covariance) = if samples.len() >= 3 {
        covariance_weights(samples)?
    } else {
        // Two points: scale each axis by its spread.
        let d = [points[1][0] - points[0][0], points[1][1] - points[0][1]];
        let s = [0, 1].map(|k| if d[k] != 0.0 { 1.0 / d[k].abs() } else { 1.0 });
        (
            [[s[0], 0.0], [0.0, s[1]]],
            [[d[0] * d[0] / 2.0, 0.0], [0.0, d[1] * d[1] / 2.0]],
        )
    };
    let xi = interval_widths(samples, &q);
    if xi[0] <= 0.0 || xi[1] <= 0.0 {
        return Err(Error::DegenerateDataset(format!(
            "interval widths {xi:?} are not positive"
        )));
    }
    let white: Vec<[f64; 2]> = points.iter().map(|p| mat_vec(&q, *p)).collect();
    let diag = xi[0] + xi[1];
    let kernel = KernelMatrix::from_fn(points.len(), |i, j| {
        diag - (white[i][0] - white[j][0]).abs() - (white[i][1] - white[j][1]).abs()
    });
    Ok(Prepared {
        points,
        q,
        covariance,
        xi,
        kernel,
    })
}

fn weighted_l1(q: &Mat2, g: [f64; 2], points: &[[f64; 2]], weights: &[f64]) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(p, l)| {
            let w = mat_vec(q, [g[0] - p[0], g[1] - p[1]]);
            l * (w[0].abs() + w[1].abs())
        })
        .sum()
}

fn build_model(variant: SvcVariant, epsilon: f64, prep: Prepared, cap: f64, opts: SmoOptions) -> Result<SvcModel> {
    let sol = solve_simplex_qp(&prep.kernel, cap, opts)?;
    let lkl = sol.quadratic_term(&prep.kernel);
    let distances: Vec<f64> = sol.gradient.iter().map(|g| lkl - g).collect();
    let n = prep.points.len();
    let support: Vec<usize> = (0..n).filter(|&i| sol.lambda[i] > WEIGHT_TOL).collect();
    let boundary: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| sol.lambda[i] < cap - WEIGHT_TOL)
        .collect();
    let outliers: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| sol.lambda[i] >= cap - WEIGHT_TOL)
        .collect();
    if support.is_empty() {
        return Err(Error::NoBoundaryVector);
    }
    let sv_points: Vec<[f64; 2]> = support.iter().map(|&i| prep.points[i]).collect();
    let sv_weights: Vec<f64> = support.iter().map(|&i| sol.lambda[i]).collect();
    let rho_at = |l: usize| weighted_l1(&prep.q, prep.points[l], &sv_points, &sv_weights);

    let anchor = match variant {
        SvcVariant::Soft => {
            if boundary.is_empty() {
                warn!("no boundary support vector; anchoring at the support vector of median distance");
                let mut d: Vec<f64> = support.iter().map(|&i| distances[i]).collect();
                d.sort_by(f64::total_cmp);
                let median = d[d.len() / 2];
                *support
                    .iter()
                    .min_by(|&&a, &&b| (distances[a] - median).abs().total_cmp(&(distances[b] - median).abs()))
                    .ok_or(Error::NoBoundaryVector)?
            } else {
                let half = 0.5 * cap;
                *boundary
                    .iter()
                    .min_by(|&&a, &&b| (sol.lambda[a] - half).abs().total_cmp(&(sol.lambda[b] - half).abs()))
                    .ok_or(Error::NoBoundaryVector)?
            }
        }
        SvcVariant::Quantile => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
            order[quantile_rank(epsilon, n) - 1]
        }
    };
    let rho = rho_at(anchor);
    let rho_spread = if boundary.len() > 1 {
        let vals: Vec<f64> = boundary.iter().map(|&i| rho_at(i)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    } else {
        0.0
    };
    if rho_spread > RHO_SPREAD_WARN {
        warn!("size constant varies by {rho_spread:e} across boundary support vectors");
    }
    Ok(SvcModel {
        variant,
        epsilon,
        points: prep.points,
        lambda: sol.lambda,
        cap,
        support,
        boundary,
        outliers,
        q: prep.q,
        covariance: prep.covariance,
        xi: prep.xi,
        rho,
        anchor,
        radius_sq: distances[anchor],
        distances,
        rho_spread,
        updates: sol.updates,
        violation: sol.violation,
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Soft-margin fit with `C = 1/(eps N)`.
pub fn fit_svc(samples: &[ChannelSample], epsilon: f64) -> Result<SvcModel> {
    fit_svc_with(samples, epsilon, SmoOptions::default())
}

pub fn fit_svc_with(samples: &[ChannelSample], epsilon: f64, opts: SmoOptions) -> Result<SvcModel> {
    check_epsilon(epsilon)?;
    let prep = prepare(samples)?;
    let n = prep.points.len() as f64;
    let cap = 1.0 / (epsilon * n);
    if epsilon * n < 1.0 {
        warn!("eps*N = {} < 1: the weight cap {cap} does not bind", epsilon * n);
    }
    build_model(SvcVariant::Soft, epsilon, prep, cap, opts)
}

/// Hard-margin fit; the radius is the feature distance ranked `ceil((1-eps)N)`.
pub fn fit_quantile_svc(samples: &[ChannelSample], epsilon: f64) -> Result<SvcModel> {
    fit_quantile_svc_with(samples, epsilon, SmoOptions::default())
}

pub fn fit_quantile_svc_with(samples: &[ChannelSample], epsilon: f64, opts: SmoOptions) -> Result<SvcModel> {
    check_epsilon(epsilon)?;
    let prep = prepare(samples)?;
    build_model(SvcVariant::Quantile, epsilon, prep, f64::INFINITY, opts)
}

impl SvcModel {
    pub fn kernel(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        wgik(&self.q, self.xi, a, b)
    }

    /// Squared feature distance to the centre by direct kernel expansion over all samples.
    pub fn feature_distance_direct(&self, g: [f64; 2]) -> f64 {
        let n = self.points.len();
        let mut cross = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            if self.lambda[i] == 0.0 {
                continue;
            }
            cross += self.lambda[i] * self.kernel(g, self.points[i]);
            for j in 0..n {
                if self.lambda[j] != 0.0 {
                    quad += self.lambda[i] * self.lambda[j] * self.kernel(self.points[i], self.points[j]);
                }
            }
        }
        self.kernel(g, g) - 2.0 * cross + quad
    }

    pub fn dual_objective(&self) -> f64 {
        let diag = self.xi[0] + self.xi[1];
        let mut v = 0.0;
        for (i, li) in self.lambda.iter().enumerate() {
            if *li == 0.0 {
                continue;
            }
            for (j, lj) in self.lambda.iter().enumerate() {
                v += li * lj * self.kernel(self.points[i], self.points[j]);
            }
            v -= li * diag;
        }
        v
    }
}

/// Polytope `{g : sum_i lambda_i |Q(g - xi_i)|_1 <= rho}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvcPolytope {
    pub variant: SvcVariant,
    /// Training indices of the support points.
    pub indices: Vec<usize>,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub q: Mat2,
    pub xi: [f64; 2],
    pub rho: f64,
    pub anchor: usize,
    pub cap: f64,
    pub epsilon: f64,
}

pub fn extract_polytope(model: &SvcModel) -> SvcPolytope {
    SvcPolytope {
        variant: model.variant,
        indices: model.support.clone(),
        points: model.support.iter().map(|&i| model.points[i]).collect(),
        weights: model.support.iter().map(|&i| model.lambda[i]).collect(),
        q: model.q,
        xi: model.xi,
        rho: model.rho,
        anchor: model.anchor,
        cap: model.cap,
        epsilon: model.epsilon,
    }
}

pub fn svc_membership(polytope: &SvcPolytope, g: [f64; 2]) -> bool {
    polytope.membership_value(g) <= polytope.rho
}

impl SvcPolytope {
    pub fn membership_value(&self, g: [f64; 2]) -> f64 {
        weighted_l1(&self.q, g, &self.points, &self.weights)
    }

    pub fn contains(&self, g: [f64; 2]) -> bool {
        svc_membership(self, g)
    }

    /// Squared feature distance to the centre computed with kernel sums over the support points.
    pub fn kernel_distance(&self, g: [f64; 2]) -> f64 {
        let k = |a, b| wgik(&self.q, self.xi, a, b);
        let cross: f64 = self.points.iter().zip(&self.weights).map(|(p, l)| l * k(g, *p)).sum();
        let mut quad = 0.0;
        for (pi, li) in self.points.iter().zip(&self.weights) {
            for (pj, lj) in self.points.iter().zip(&self.weights) {
                quad += li * lj * k(*pi, *pj);
            }
        }
        k(g, g) - 2.0 * cross + quad
    }

    /// Squared radius: the kernel distance of the anchor.
    pub fn kernel_radius_sq(&self) -> Result<f64> {
        let pos = self
            .indices
            .iter()
            .position(|&i| i == self.anchor)
            .ok_or_else(|| Error::DegenerateSet("anchor is not a stored support point".into()))?;
        Ok(self.kernel_distance(self.points[pos]))
    }

    /// Anchor coordinates when the anchor is one of the stored support points.
    pub fn anchor_point(&self) -> Option<[f64; 2]> {
        self.indices
            .iter()
            .position(|&i| i == self.anchor)
            .map(|pos| self.points[pos])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::Io {
            path: "<svc model>".into(),
            source: e,
        };
        writeln!(w, "variant,q11,q12,q21,q22,xi1,xi2,rho,anchor,cap,epsilon").map_err(io)?;
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e}",
            self.variant,
            self.q[0][0],
            self.q[0][1],
            self.q[1][0],
            self.q[1][1],
            self.xi[0],
            self.xi[1],
            self.rho,
            self.anchor,
            self.cap,
            self.epsilon
        )
        .map_err(io)?;
        writeln!(w, "index,lambda,g_d,g_cd").map_err(io)?;
        for ((i, l), p) in self.indices.iter().zip(&self.weights).zip(&self.points) {
            writeln!(w, "{i},{l:e},{:e},{:e}", p[0], p[1]).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text).map_err(|e| Error::Io {
            path: "<svc model>".into(),
            source: e,
        })?;
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty SVC model".into()))?;
        if header != "variant,q11,q12,q21,q22,xi1,xi2,rho,anchor,cap,epsilon" {
            return Err(Error::Parse(format!("unexpected SVC header `{header}`")));
        }
        let values: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("missing SVC header values".into()))?
            .split(',')
            .collect();
        if values.len() != 11 {
            return Err(Error::Parse("SVC header record needs 11 fields".into()));
        }
        let f = |k: usize| parse_f64(values[k]);
        let variant: SvcVariant = values[0].parse()?;
        let q = [[f(1)?, f(2)?], [f(3)?, f(4)?]];
        let xi = [f(5)?, f(6)?];
        let rho = f(7)?;
        let anchor = values[8]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("anchor: {e}")))?;
        let cap = f(9)?;
        let epsilon = f(10)?;
        if lines.next() != Some("index,lambda,g_d,g_cd") {
            return Err(Error::Parse("missing support-point header".into()));
        }
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        let mut points = Vec::new();
        for line in lines {
            let v: Vec<&str> = line.split(',').collect();
            if v.len() != 4 {
                return Err(Error::Parse(format!("bad support-point row `{line}`")));
            }
            indices.push(v[0].trim().parse().map_err(|e| Error::Parse(format!("index: {e}")))?);
            weights.push(parse_f64(v[1])?);
            points.push([parse_f64(v[2])?, parse_f64(v[3])?]);
        }
        if points.is_empty() {
            return Err(Error::Parse("SVC model has no support points".into()));
        }
        Ok(Self {
            variant,
            indices,
            points,
            weights,
            q,
            xi,
            rho,
            anchor,
            cap,
            epsilon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_samples() -> Vec<ChannelSample> {
        let mut v = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                let x = i as f64 + 0.13 * j as f64;
                let y = j as f64 - 0.07 * (i * i) as f64;
                v.push(ChannelSample::new(x, y));
            }
        }
        v
    }

    #[test]
    fn diagonal_covariance_gives_inverse_roots() {
        // Points at (+-2, 0) and (0, +-1) plus the centre scaled to diag(4, 1).
        let pts = [[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let samples: Vec<ChannelSample> = pts.iter().map(|p| (*p).into()).collect();
        let (q, cov) = covariance_weights(&samples).unwrap();
        let s = 3.0f64; // unbiased scale: sum of squares / (n-1)
        assert!((cov[0][0] - 8.0 / s).abs() < 1e-9);
        assert!((q[0][0] - (s / 8.0).sqrt()).abs() < 1e-9);
        assert!((q[1][1] - (s / 2.0).sqrt()).abs() < 1e-9);
        assert!(q[0][1].abs() < 1e-15);
    }

    #[test]
    fn whitening_identity() {
        let samples = grid_samples();
        let (q, cov) = covariance_weights(&samples).unwrap();
        let m = mat_mul(&mat_mul(&q, &cov), &q);
        assert!((m[0][0] - 1.0).abs() < 1e-10 && (m[1][1] - 1.0).abs() < 1e-10);
        assert!(m[0][1].abs() < 1e-10 && m[1][0].abs() < 1e-10);
    }

    #[test]
    fn zero_spread_is_singular() {
        let samples = vec![ChannelSample::new(1.0, 2.0); 4];
        assert!(matches!(
            covariance_weights(&samples),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn collinear_samples_survive_regularization() {
        let samples: Vec<ChannelSample> = (0..5).map(|i| ChannelSample::new(i as f64, 2.0 * i as f64)).collect();
        let (q, _) = covariance_weights(&samples).unwrap();
        assert!(q.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn widths_and_kernel() {
        let samples = vec![ChannelSample::new(0.0, 0.0), ChannelSample::new(10.0, 3.0)];
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let xi = interval_widths(&samples, &id);
        assert!((xi[0] - 10.1).abs() < 1e-12);
        assert_eq!(wgik(&id, [10.0, 10.0], [1.0, 2.0], [3.0, 1.0]), 17.0);
        assert_eq!(wgik(&id, [10.0, 10.0], [1.0, 2.0], [1.0, 2.0]), 20.0);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let samples = vec![ChannelSample::new(1.0, 1.0); 5];
        assert!(matches!(fit_svc(&samples, 0.1), Err(Error::DegenerateDataset(_))));
    }

    #[test]
    fn two_points_split_evenly() {
        let samples = vec![ChannelSample::new(0.0, 0.0), ChannelSample::new(1.0, 2.0)];
        let m = fit_svc(&samples, 0.5).unwrap();
        assert!((m.lambda[0] - 0.5).abs() < 1e-9 && (m.lambda[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn soft_fit_invariants() {
        let samples = grid_samples();
        let eps = 0.1;
        let m = fit_svc(&samples, eps).unwrap();
        let sum: f64 = m.lambda.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
        assert!(m.lambda.iter().all(|l| *l >= 0.0 && *l <= m.cap + 1e-12));
        assert!(m.outliers.len() as f64 <= eps * samples.len() as f64 + 1.0);
        let p = extract_polytope(&m);
        let anchor = p.anchor_point().unwrap();
        assert_eq!(p.membership_value(anchor), p.rho);
        assert!(!p.contains([1e3, -1e3]));
    }

    #[test]
    fn text_round_trip_preserves_membership() {
        let m = fit_svc(&grid_samples(), 0.1).unwrap();
        let p = extract_polytope(&m);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = SvcPolytope::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }
}
