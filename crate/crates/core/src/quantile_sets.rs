//! Symmetric uncertainty sets (L1 ball, Euclidean ball, box) centred at the
//! sample mean and sized by an order statistic of the sample distances.
//!
//! Worst-case values `min_{g in set} p^T g` use the dual-norm closed forms.
//! The Lagrangian certificates for the two polyhedral shapes are exposed
//! separately through [`dual_certificate`].

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetShape {
    /// `|g_d - c_d| + |g_cd - c_cd| <= size`.
    L1Ball,
    /// `(g - c)^T (g - c) <= size`; the radius is `sqrt(size)`.
    L2Ball,
    /// `max_k |g_k - c_k| <= size`.
    BoxSet,
}

impl SetShape {
    pub const ALL: [SetShape; 3] = [SetShape::L1Ball, SetShape::L2Ball, SetShape::BoxSet];

    /// Scalar transform whose order statistic calibrates the set size.
    pub fn transform(self, center: [f64; 2], g: [f64; 2]) -> f64 {
        let dx = g[0] - center[0];
        let dy = g[1] - center[1];
        match self {
            SetShape::L1Ball => dx.abs() + dy.abs(),
            SetShape::L2Ball => dx * dx + dy * dy,
            SetShape::BoxSet => dx.abs().max(dy.abs()),
        }
    }
}

impl fmt::Display for SetShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetShape::L1Ball => "L1Ball",
            SetShape::L2Ball => "L2Ball",
            SetShape::BoxSet => "BoxSet",
        })
    }
}

impl FromStr for SetShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L1Ball" => Ok(SetShape::L1Ball),
            "L2Ball" => Ok(SetShape::L2Ball),
            "BoxSet" => Ok(SetShape::BoxSet),
            other => Err(Error::Parse(format!("unknown set shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSet {
    pub shape: SetShape,
    pub center: [f64; 2],
    /// Budget `Gamma` (L1), squared radius `Lambda` (L2) or half-width `Psi` (box).
    pub size: f64,
    pub epsilon: f64,
    pub n: usize,
}

/// Coordinatewise sample mean.
pub fn fit_center(samples: &[ChannelSample]) -> [f64; 2] {
    let n = samples.len() as f64;
    let (sd, sc) = samples.iter().fold((0.0, 0.0), |(a, b), s| (a + s.g_d, b + s.g_cd));
    [sd / n, sc / n]
}

/// 1-based rank `ceil((1 - eps) N)`, clamped to `[1, N]`.
pub fn quantile_rank(epsilon: f64, n: usize) -> usize {
    let k = ((1.0 - epsilon) * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

pub fn calibrate(samples: &[ChannelSample], center: [f64; 2], shape: SetShape, epsilon: f64) -> Result<SymmetricSet> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config("epsilon", "must lie in (0, 1)"));
    }
    if samples.is_empty() {
        return Err(Error::Dataset("cannot calibrate on an empty sample".into()));
    }
    let mut t: Vec<f64> = samples.iter().map(|s| shape.transform(center, s.to_array())).collect();
    t.sort_by(f64::total_cmp);
    let k = quantile_rank(epsilon, t.len());
    Ok(SymmetricSet {
        shape,
        center,
        size: t[k - 1],
        epsilon,
        n: samples.len(),
    })
}

/// Centre at the sample mean, then calibrate.
pub fn fit_symmetric(samples: &[ChannelSample], shape: SetShape, epsilon: f64) -> Result<SymmetricSet> {
    calibrate(samples, fit_center(samples), shape, epsilon)
}

const M_POLYTOPE: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
const M_BOX: [[f64; 2]; 4] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];

/// Multipliers `x >= 0` with `M^T x = -p` and the certified value
/// `-(size * 1 + M c)^T x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub multipliers: [f64; 4],
    pub value: f64,
}

impl SymmetricSet {
    /// Radius of the Euclidean ball, `sqrt(Lambda)`; the raw size otherwise.
    pub fn radius(&self) -> f64 {
        match self.shape {
            SetShape::L2Ball => self.size.sqrt(),
            _ => self.size,
        }
    }

    pub fn contains(&self, g: [f64; 2]) -> bool {
        self.shape.transform(self.center, g) <= self.size
    }

    pub fn worst_case_value(&self, p: [f64; 2]) -> f64 {
        let base = p[0] * self.center[0] + p[1] * self.center[1];
        base - self.radius() * self.dual_norm(p)
    }

    fn dual_norm(&self, p: [f64; 2]) -> f64 {
        match self.shape {
            SetShape::L1Ball => p[0].abs().max(p[1].abs()),
            SetShape::L2Ball => p[0].hypot(p[1]),
            SetShape::BoxSet => p[0].abs() + p[1].abs(),
        }
    }

    /// A minimiser of `p^T g` over the set.
    pub fn worst_case_point(&self, p: [f64; 2]) -> [f64; 2] {
        let c = self.center;
        let r = self.radius();
        match self.shape {
            SetShape::L1Ball => {
                let k = if p[0].abs() >= p[1].abs() { 0 } else { 1 };
                let mut g = c;
                g[k] -= r * sign(p[k]);
                g
            }
            SetShape::L2Ball => {
                let norm = p[0].hypot(p[1]);
                if norm == 0.0 {
                    c
                } else {
                    [c[0] - r * p[0] / norm, c[1] - r * p[1] / norm]
                }
            }
            SetShape::BoxSet => [c[0] - r * sign(p[0]), c[1] - r * sign(p[1])],
        }
    }

    pub fn robust_constraint_holds(&self, p: [f64; 2], gamma_min_d: f64) -> bool {
        self.worst_case_value(p) >= gamma_min_d
    }

    /// Smallest `g_cd` coordinate over the set.
    pub fn min_crosstalk(&self) -> f64 {
        self.center[1] - self.radius()
    }

    /// Flat `key=value` text; floats are written in shortest round-trip form.
    pub fn to_text(&self) -> String {
        format!(
            "shape={}\ncenter={},{}\nsize={}\nepsilon={}\nn={}\n",
            self.shape, self.center[0], self.center[1], self.size, self.epsilon, self.n
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let get = |k: &str| -> Result<&str> {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Parse(format!("missing key `{k}`")))
        };
        for (k, _) in &kv {
            if !["shape", "center", "size", "epsilon", "n"].contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown key `{k}`")));
            }
        }
        Ok(SymmetricSet {
            shape: get("shape")?.parse()?,
            center: parse_pair(get("center")?)?,
            size: parse_f64(get("size")?)?,
            epsilon: parse_f64(get("epsilon")?)?,
            n: get("n")?.parse().map_err(|e| Error::Parse(format!("n: {e}")))?,
        })
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{l}`")))
        })
        .collect()
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

pub(crate) fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("expected a pair, got `{s}`")))?;
    Ok([parse_f64(a)?, parse_f64(b)?])
}

/// Lagrangian certificate for the polyhedral shapes.
///
/// Stationarity is enforced as an equality `M^T x = -p`, under which the
/// certified value equals the primal optimum; the result is checked against
/// [`SymmetricSet::worst_case_value`].
pub fn dual_certificate(set: &SymmetricSet, p: [f64; 2]) -> Result<DualCertificate> {
    let (m, x) = match set.shape {
        SetShape::L1Ball => {
            // Split the dominant coordinate across the two rows sharing its sign.
            let x = if p[0].abs() >= p[1].abs() {
                let s = sign_or_one(p[0]);
                let a = 0.5 * (p[0].abs() - p[1] * s);
                let b = 0.5 * (p[0].abs() + p[1] * s);
                if p[0] >= 0.0 {
                    // rows (-1, 1) and (-1, -1)
                    [0.0, 0.0, a, b]
                } else {
                    // rows (1, 1) and (1, -1)
                    [b, a, 0.0, 0.0]
                }
            } else {
                let s = sign_or_one(p[1]);
                let a = 0.5 * (p[1].abs() - p[0] * s);
                let b = 0.5 * (p[1].abs() + p[0] * s);
                if p[1] >= 0.0 {
                    // rows (1, -1) and (-1, -1)
                    [0.0, a, 0.0, b]
                } else {
                    // rows (1, 1) and (-1, 1)
                    [b, 0.0, a, 0.0]
                }
            };
            (M_POLYTOPE, x)
        }
        SetShape::BoxSet => (
            M_BOX,
            [(-p[0]).max(0.0), p[0].max(0.0), (-p[1]).max(0.0), p[1].max(0.0)],
        ),
        SetShape::L2Ball => {
            return Err(Error::Unsupported(
                "the Euclidean ball has a second-order cone counterpart, not a linear certificate".into(),
            ))
        }
    };
    let mut value = 0.0;
    let mut stationarity = [p[0], p[1]];
    for (row, xi) in m.iter().zip(&x) {
        let mc = row[0] * set.center[0] + row[1] * set.center[1];
        value -= (set.size + mc) * xi;
        stationarity[0] += row[0] * xi;
        stationarity[1] += row[1] * xi;
    }
    let primal = set.worst_case_value(p);
    let pnorm = p[0].abs() + p[1].abs();
    let scale = 1.0 + pnorm * (set.center[0].abs() + set.center[1].abs() + set.size.abs());
    let tol = 1e-9 * scale;
    let gap = (value - primal).abs();
    let residual = stationarity[0].abs().max(stationarity[1].abs());
    if gap > tol || residual > 1e-12 * (1.0 + pnorm) || x.iter().any(|v| *v < 0.0) {
        return Err(Error::DualityGap {
            gap: gap.max(residual),
            tol,
        });
    }
    Ok(DualCertificate { multipliers: x, value })
}

fn sign_or_one(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}
