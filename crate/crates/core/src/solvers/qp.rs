//! Primal active-set solver for small simplex-constrained QPs
//!
//! ```text
//! min  l^T K l - linear^T l    s.t.  sum_i l_i = 1,  0 <= l_i <= cap
//! ```
//!
//! Used as an independent reference for the pairwise solver; dense and
//! cubic per iteration, intended for a few dozen variables.

use crate::error::{Error, Result};

const STEP_TOL: f64 = 1e-14;
const KKT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Reference solve to a KKT residual of 1e-10.
pub fn reference_qp(kernel: &[Vec<f64>], linear: &[f64], cap: f64) -> Result<Vec<f64>> {
    let n = kernel.len();
    if n == 0 || linear.len() != n || kernel.iter().any(|r| r.len() != n) {
        return Err(Error::Dataset("reference QP dimensions are inconsistent".into()));
    }
    if cap * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::config("cap", "cannot hold unit mass"));
    }
    let mut x = vec![(1.0 / n as f64).min(cap); n];
    let mut state = vec![Bound::Free; n];
    if cap <= 1.0 / n as f64 {
        state.fill(Bound::Upper);
    }
    let gradient = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 2.0 * kernel[i].iter().zip(x).map(|(k, v)| k * v).sum::<f64>() - linear[i])
            .collect()
    };

    let max_iter = 200 * n + 100;
    for _ in 0..max_iter {
        let g = gradient(&x);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let m = free.len();
        let (step, nu) = if m == 0 {
            (vec![0.0; n], None)
        } else {
            // [2 K_FF  1; 1^T 0] [p; -nu] = [-g_F; 0]
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    a[r][c] = 2.0 * kernel[i][j];
                }
                a[r][m] = 1.0;
                a[m][r] = 1.0;
                b[r] = -g[i];
            }
            let sol = solve_dense(a, b)
                .ok_or_else(|| Error::NumericalFailure("singular KKT system in reference QP".into()))?;
            let mut p = vec![0.0; n];
            for (r, &i) in free.iter().enumerate() {
                p[i] = sol[r];
            }
            (p, Some(-sol[m]))
        };
        let pnorm = step.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if pnorm <= STEP_TOL {
            // Multiplier of the sum constraint: g_i = nu on free coordinates.
            let nu = match nu {
                Some(v) => v,
                None => {
                    let lo = (0..n)
                        .filter(|&i| state[i] == Bound::Lower)
                        .map(|i| g[i])
                        .fold(f64::INFINITY, f64::min);
                    let hi = (0..n)
                        .filter(|&i| state[i] == Bound::Upper)
                        .map(|i| g[i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    match (lo.is_finite(), hi.is_finite()) {
                        (true, true) => 0.5 * (lo + hi),
                        (true, false) => lo,
                        (false, true) => hi,
                        _ => 0.0,
                    }
                }
            };
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                let mult = match state[i] {
                    Bound::Free => continue,
                    Bound::Lower => g[i] - nu,
                    Bound::Upper => nu - g[i],
                };
                if mult < -KKT_TOL && worst.is_none_or(|(_, w)| mult < w) {
                    worst = Some((i, mult));
                }
            }
            match worst {
                None => return Ok(x),
                Some((i, _)) => state[i] = Bound::Free,
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            let p = step[i];
            let limit = if p < 0.0 {
                -x[i] / p
            } else if p > 0.0 && cap.is_finite() {
                (cap - x[i]) / p
            } else {
                continue;
            };
            if limit < alpha {
                alpha = limit.max(0.0);
                blocking = Some((i, if p < 0.0 { Bound::Lower } else { Bound::Upper }));
            }
        }
        for &i in &free {
            x[i] += alpha * step[i];
        }
        if let Some((i, b)) = blocking {
            state[i] = b;
            x[i] = if b == Bound::Lower { 0.0 } else { cap };
        }
    }
    Err(Error::QpNotConverged {
        iterations: max_iter,
        violation: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_symmetric() {
        let k = vec![vec![3.0, 1.0], vec![1.0, 3.0]];
        let x = reference_qp(&k, &[3.0, 3.0], 10.0).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bound_becomes_active() {
        // Strong pull towards coordinate 0, capped at 0.6.
        let k = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let x = reference_qp(&k, &[10.0, 0.0], 0.6).unwrap();
        assert!((x[0] - 0.6).abs() < 1e-12 && (x[1] - 0.4).abs() < 1e-12);
    }
}
