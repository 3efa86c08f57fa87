//! A single handle over every uncertainty set the allocator understands.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelSample;
use crate::error::{Error, Result};
use crate::quantile_sets::{fit_center, fit_symmetric, parse_key_values, parse_pair, SetShape, SymmetricSet};
use crate::solvers::svc_lp::solve_svc_lp;
use crate::svc::{extract_polytope, fit_quantile_svc, fit_svc, SvcPolytope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    NonRobust,
    L1Ball,
    L2Ball,
    BoxSet,
    Svc,
    QuantileSvc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::NonRobust,
        Method::L1Ball,
        Method::L2Ball,
        Method::BoxSet,
        Method::Svc,
        Method::QuantileSvc,
    ];

    pub fn is_robust(self) -> bool {
        self != Method::NonRobust
    }

    pub fn symmetric_shape(self) -> Option<SetShape> {
        match self {
            Method::L1Ball => Some(SetShape::L1Ball),
            Method::L2Ball => Some(SetShape::L2Ball),
            Method::BoxSet => Some(SetShape::BoxSet),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::NonRobust => "NonRobust",
            Method::L1Ball => "L1Ball",
            Method::L2Ball => "L2Ball",
            Method::BoxSet => "BoxSet",
            Method::Svc => "SVC",
            Method::QuantileSvc => "QuantileSVC",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "nonrobust" | "singleton" | "mean" => Ok(Method::NonRobust),
            "l1" | "l1ball" => Ok(Method::L1Ball),
            "l2" | "l2ball" => Ok(Method::L2Ball),
            "box" | "boxset" => Ok(Method::BoxSet),
            "svc" => Ok(Method::Svc),
            "quantilesvc" | "qsvc" => Ok(Method::QuantileSvc),
            _ => Err(Error::config("method", format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    /// The sample mean alone; the non-robust baseline.
    Singleton([f64; 2]),
    Symmetric(SymmetricSet),
    Svc(SvcPolytope),
}

pub fn fit_set(method: Method, samples: &[ChannelSample], epsilon: f64) -> Result<UncertaintySet> {
    if samples.is_empty() {
        return Err(Error::Dataset("cannot fit a set on an empty sample".into()));
    }
    Ok(match method {
        Method::NonRobust => UncertaintySet::Singleton(fit_center(samples)),
        Method::L1Ball | Method::L2Ball | Method::BoxSet => {
            let shape = method.symmetric_shape().expect("symmetric method");
            UncertaintySet::Symmetric(fit_symmetric(samples, shape, epsilon)?)
        }
        Method::Svc => UncertaintySet::Svc(extract_polytope(&fit_svc(samples, epsilon)?)),
        Method::QuantileSvc => UncertaintySet::Svc(extract_polytope(&fit_quantile_svc(samples, epsilon)?)),
    })
}

impl UncertaintySet {
    /// Minimiser and value of `p^T g` over the set.
    pub fn worst_case(&self, p: [f64; 2]) -> Result<([f64; 2], f64)> {
        match self {
            UncertaintySet::Singleton(c) => Ok((*c, p[0] * c[0] + p[1] * c[1])),
            UncertaintySet::Symmetric(s) => Ok((s.worst_case_point(p), s.worst_case_value(p))),
            UncertaintySet::Svc(poly) => {
                let wc = solve_svc_lp(poly, p)?;
                Ok((wc.point, wc.value))
            }
        }
    }

    pub fn contains(&self, g: [f64; 2]) -> bool {
        match self {
            UncertaintySet::Singleton(c) => *c == g,
            UncertaintySet::Symmetric(s) => s.contains(g),
            UncertaintySet::Svc(poly) => poly.contains(g),
        }
    }

    /// A point known to lie in the set.
    pub fn reference_point(&self) -> [f64; 2] {
        match self {
            UncertaintySet::Singleton(c) => *c,
            UncertaintySet::Symmetric(s) => s.center,
            UncertaintySet::Svc(poly) => poly.anchor_point().unwrap_or(poly.points[0]),
        }
    }

    pub fn label(&self) -> String {
        match self {
            UncertaintySet::Singleton(_) => "Singleton".into(),
            UncertaintySet::Symmetric(s) => s.shape.to_string(),
            UncertaintySet::Svc(poly) => format!("SVC-{}", poly.variant),
        }
    }

    pub fn to_text(&self) -> Result<String> {
        match self {
            UncertaintySet::Singleton(c) => Ok(format!("shape=Singleton\ncenter={},{}\n", c[0], c[1])),
            UncertaintySet::Symmetric(s) => Ok(s.to_text()),
            UncertaintySet::Svc(poly) => {
                let mut buf = Vec::new();
                poly.write_csv(&mut buf)?;
                String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
        if first.starts_with("variant,") {
            return Ok(UncertaintySet::Svc(SvcPolytope::read_csv(text.as_bytes())?));
        }
        let kv = parse_key_values(text)?;
        let shape = kv
            .iter()
            .find(|(k, _)| k == "shape")
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse("missing `shape`".into()))?;
        if shape == "Singleton" {
            let mut center = None;
            for (k, v) in &kv {
                match k.as_str() {
                    "shape" => {}
                    "center" => center = Some(parse_pair(v)?),
                    other => return Err(Error::Parse(format!("unknown key `{other}`"))),
                }
            }
            let c = center.ok_or_else(|| Error::Parse("missing `center`".into()))?;
            return Ok(UncertaintySet::Singleton(c));
        }
        Ok(UncertaintySet::Symmetric(SymmetricSet::from_text(text)?))
    }
}
