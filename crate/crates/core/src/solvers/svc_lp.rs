//! Worst case of a linear form over an SVC polytope, with its Lagrangian certificate.
//!
//! The LP is posed in whitened coordinates `u = Q(g - c)` with the objective
//! direction normalised, so the tableau stays well scaled whatever the units
//! of the channel gains are. Multipliers are mapped back afterwards.

use crate::error::{Error, Result};
use crate::solvers::lp::{solve_lp, LpProblem, LpStatus};
use crate::svc::{mat_inverse, mat_vec, SvcPolytope};

#[derive(Debug, Clone)]
pub struct SvcWorstCase {
    pub point: [f64; 2],
    pub value: f64,
    /// Multiplier of the budget row.
    pub kappa: f64,
    /// Multipliers of `Q(g - xi_i) <= v_i`.
    pub phi: Vec<[f64; 2]>,
    /// Multipliers of `-Q(g - xi_i) <= v_i`.
    pub omega: Vec<[f64; 2]>,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub struct SvcCertificate {
    pub kappa: f64,
    pub phi: Vec<[f64; 2]>,
    pub omega: Vec<[f64; 2]>,
    /// `sum_i (omega_i - phi_i)^T Q xi_i - rho kappa`.
    pub value: f64,
    pub primal_value: f64,
    pub stationarity_residual: f64,
    pub coupling_residual: f64,
}

fn check(polytope: &SvcPolytope) -> Result<()> {
    if !(polytope.rho > 0.0) || !polytope.rho.is_finite() {
        return Err(Error::DegenerateSet(format!(
            "size constant {} is not positive",
            polytope.rho
        )));
    }
    if polytope.points.is_empty() || polytope.points.len() != polytope.weights.len() {
        return Err(Error::DegenerateSet("polytope has no support points".into()));
    }
    Ok(())
}

fn centre(polytope: &SvcPolytope) -> [f64; 2] {
    let n = polytope.points.len() as f64;
    let s = polytope.points.iter().fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]);
    [s[0] / n, s[1] / n]
}

/// Full primal-dual solve of the auxiliary-variable LP.
pub fn solve_svc_lp(polytope: &SvcPolytope, p: [f64; 2]) -> Result<SvcWorstCase> {
    check(polytope)?;
    let m = polytope.points.len();
    let qinv = mat_inverse(&polytope.q).ok_or_else(|| Error::DegenerateSet("weight matrix is singular".into()))?;
    // p^T g = p^T c + (Q^{-T} p)^T u
    let qinv_t = [[qinv[0][0], qinv[1][0]], [qinv[0][1], qinv[1][1]]];
    let d = mat_vec(&qinv_t, p);
    let s = d[0].abs().max(d[1].abs());
    let c = centre(polytope);
    if s == 0.0 {
        let point = polytope.anchor_point().unwrap_or(c);
        return Ok(SvcWorstCase {
            point,
            value: 0.0,
            kappa: 0.0,
            phi: vec![[0.0; 2]; m],
            omega: vec![[0.0; 2]; m],
            pivots: 0,
        });
    }
    let dn = [d[0] / s, d[1] / s];
    let w: Vec<[f64; 2]> = polytope
        .points
        .iter()
        .map(|x| mat_vec(&polytope.q, [x[0] - c[0], x[1] - c[1]]))
        .collect();

    // Variables: u0, u1, then v_{i,0}, v_{i,1}.
    let nv = 2 + 2 * m;
    let mut objective = vec![0.0; nv];
    objective[0] = dn[0];
    objective[1] = dn[1];
    let mut lp = LpProblem::new(objective);
    for (i, wi) in w.iter().enumerate() {
        for k in 0..2 {
            let mut row = vec![0.0; nv];
            row[k] = 1.0;
            row[2 + 2 * i + k] = -1.0;
            lp = lp.leq(row, wi[k]);
            let mut row = vec![0.0; nv];
            row[k] = -1.0;
            row[2 + 2 * i + k] = -1.0;
            lp = lp.leq(row, -wi[k]);
        }
    }
    let mut budget = vec![0.0; nv];
    for (i, l) in polytope.weights.iter().enumerate() {
        budget[2 + 2 * i] = *l;
        budget[3 + 2 * i] = *l;
    }
    lp = lp.leq(budget, polytope.rho);
    for j in 2..nv {
        lp = lp.bounds(j, Some(0.0), None);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::DegenerateSet("SVC polytope is empty".into())),
        LpStatus::Unbounded => return Err(Error::NumericalFailure("SVC worst case is unbounded".into())),
    }
    let u = [sol.x[0], sol.x[1]];
    let du = mat_vec(&qinv, u);
    let point = [c[0] + du[0], c[1] + du[1]];

    let kappa = s * sol.ineq_duals[4 * m].max(0.0);
    let mut phi = Vec::with_capacity(m);
    let mut omega = Vec::with_capacity(m);
    for i in 0..m {
        let mut ph = [0.0; 2];
        let mut om = [0.0; 2];
        for k in 0..2 {
            let base = 4 * i + 2 * k;
            let (a, b) = (sol.ineq_duals[base].max(0.0), sol.ineq_duals[base + 1].max(0.0));
            // Spread any reduced cost of a zero auxiliary variable over both rows.
            let slack = 0.5 * (kappa / s * polytope.weights[i] - a - b).max(0.0);
            ph[k] = s * (a + slack);
            om[k] = s * (b + slack);
        }
        phi.push(ph);
        omega.push(om);
    }
    Ok(SvcWorstCase {
        point,
        value: p[0] * point[0] + p[1] * point[1],
        kappa,
        phi,
        omega,
        pivots: sol.pivots,
    })
}

/// Minimiser and value of `p^T g` over the polytope.
pub fn svc_worst_case(polytope: &SvcPolytope, p: [f64; 2]) -> Result<([f64; 2], f64)> {
    let wc = solve_svc_lp(polytope, p)?;
    Ok((wc.point, wc.value))
}

/// Certificate from the simplex multipliers, checked for stationarity, coupling and gap.
pub fn svc_dual_certificate(polytope: &SvcPolytope, p: [f64; 2]) -> Result<SvcCertificate> {
    let wc = solve_svc_lp(polytope, p)?;
    certify(polytope, p, &wc)
}

pub fn certify(polytope: &SvcPolytope, p: [f64; 2], wc: &SvcWorstCase) -> Result<SvcCertificate> {
    let q = &polytope.q;
    let mut stat = [0.0; 2];
    let mut value = -polytope.rho * wc.kappa;
    let mut coupling: f64 = 0.0;
    let mut mult_scale: f64 = wc.kappa;
    for i in 0..polytope.points.len() {
        let diff = [wc.omega[i][0] - wc.phi[i][0], wc.omega[i][1] - wc.phi[i][1]];
        // (omega - phi)^T Q
        stat[0] += diff[0] * q[0][0] + diff[1] * q[1][0];
        stat[1] += diff[0] * q[0][1] + diff[1] * q[1][1];
        let qx = mat_vec(q, polytope.points[i]);
        value += diff[0] * qx[0] + diff[1] * qx[1];
        for k in 0..2 {
            coupling = coupling.max((wc.omega[i][k] + wc.phi[i][k] - polytope.weights[i] * wc.kappa).abs());
            mult_scale = mult_scale.max(wc.omega[i][k]).max(wc.phi[i][k]);
        }
    }
    let stationarity = (stat[0] - p[0]).abs().max((stat[1] - p[1]).abs());
    let pnorm = p[0].abs().max(p[1].abs());
    let gscale = wc.point[0].abs().max(wc.point[1].abs());
    let qx_scale = polytope
        .points
        .iter()
        .map(|x| {
            let v = mat_vec(q, *x);
            v[0].abs().max(v[1].abs())
        })
        .fold(polytope.rho, f64::max);
    let gap = (value - wc.value).abs();
    let gap_tol = 1e-8 * (pnorm * gscale + mult_scale * qx_scale).max(f64::MIN_POSITIVE);
    if stationarity > 1e-9 * pnorm.max(f64::MIN_POSITIVE) || coupling > 1e-9 * mult_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DualityGap {
            gap: stationarity.max(coupling),
            tol: 1e-9,
        });
    }
    if gap > gap_tol {
        return Err(Error::DualityGap { gap, tol: gap_tol });
    }
    Ok(SvcCertificate {
        kappa: wc.kappa,
        phi: wc.phi.clone(),
        omega: wc.omega.clone(),
        value,
        primal_value: wc.value,
        stationarity_residual: stationarity,
        coupling_residual: coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svc::SvcVariant;

    fn diamond() -> SvcPolytope {
        // Single support point at the origin: |g|_1 <= 1.
        SvcPolytope {
            variant: SvcVariant::Soft,
            indices: vec![0],
            points: vec![[0.0, 0.0]],
            weights: vec![1.0],
            q: [[1.0, 0.0], [0.0, 1.0]],
            xi: [1.0, 1.0],
            rho: 1.0,
            anchor: 0,
            cap: 1.0,
            epsilon: 0.1,
        }
    }

    #[test]
    fn diamond_worst_case() {
        let poly = diamond();
        let (g, v) = svc_worst_case(&poly, [1.0, 2.0]).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
        assert!((g[1] + 1.0).abs() < 1e-12);
        let cert = svc_dual_certificate(&poly, [1.0, 2.0]).unwrap();
        assert!((cert.value - v).abs() < 1e-12);
        assert!((cert.kappa - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_direction() {
        let cert = svc_dual_certificate(&diamond(), [0.0, 0.0]).unwrap();
        assert_eq!(cert.kappa, 0.0);
        assert_eq!(cert.value, 0.0);
    }

    #[test]
    fn zero_rho_is_degenerate() {
        let mut poly = diamond();
        poly.rho = 0.0;
        assert!(matches!(
            svc_worst_case(&poly, [1.0, 0.0]),
            Err(Error::DegenerateSet(_))
        ));
    }
}
