//! Pairwise coordinate descent for
//!
//! ```text
//! min  l^T K l - sum_i l_i K_ii    s.t.  sum_i l_i = 1,  0 <= l_i <= cap
//! ```
//!
//! Each step moves mass between the maximally violating pair, the only
//! feasible direction touching two coordinates that keeps the sum fixed.

use crate::error::{Error, Result};

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `l^T K l - sum_i l_i K_ii`.
    pub fn dual_objective(&self, lambda: &[f64]) -> f64 {
        let mut v = 0.0;
        for i in 0..self.n {
            if lambda[i] == 0.0 {
                continue;
            }
            let ki: f64 = self.row(i).iter().zip(lambda).map(|(k, l)| k * l).sum();
            v += lambda[i] * (ki - self.get(i, i));
        }
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmoOptions {
    /// Stop once `max G_down - min G_up` falls below this.
    pub tol: f64,
    pub max_updates: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_updates: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    /// `2 K l - diag(K)`.
    pub gradient: Vec<f64>,
    pub updates: usize,
    pub violation: f64,
}

impl DualSolution {
    /// `l^T K l`, recovered from the gradient.
    pub fn quadratic_term(&self, kernel: &KernelMatrix) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .map(|(i, l)| l * (self.gradient[i] + kernel.get(i, i)))
            .sum::<f64>()
            * 0.5
    }

    pub fn objective(&self, kernel: &KernelMatrix) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .map(|(i, l)| l * (self.gradient[i] - kernel.get(i, i)))
            .sum::<f64>()
            * 0.5
    }
}

/// Solves the simplex-constrained dual; `cap = f64::INFINITY` gives the hard-margin problem.
pub fn solve_simplex_qp(kernel: &KernelMatrix, cap: f64, opts: SmoOptions) -> Result<DualSolution> {
    let n = kernel.len();
    if n == 0 {
        return Err(Error::Dataset("empty kernel".into()));
    }
    if cap * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::config(
            "epsilon",
            format!("box cap {cap} cannot hold unit mass over {n} samples"),
        ));
    }
    let start = 1.0 / n as f64;
    let mut lambda = vec![start.min(cap); n];
    let mut gradient: Vec<f64> = (0..n)
        .map(|i| {
            let s: f64 = kernel.row(i).iter().sum();
            2.0 * s * start - kernel.get(i, i)
        })
        .collect();

    let mut updates = 0;
    loop {
        // i: may increase (below cap) with smallest gradient; j: may decrease with largest.
        let mut i_up = usize::MAX;
        let mut g_up = f64::INFINITY;
        let mut j_down = usize::MAX;
        let mut g_down = f64::NEG_INFINITY;
        for k in 0..n {
            let g = gradient[k];
            if lambda[k] < cap && g < g_up {
                g_up = g;
                i_up = k;
            }
            if lambda[k] > 0.0 && g > g_down {
                g_down = g;
                j_down = k;
            }
        }
        let violation = g_down - g_up;
        if i_up == usize::MAX || j_down == usize::MAX || violation < opts.tol {
            return Ok(DualSolution {
                lambda,
                gradient,
                updates,
                violation: violation.max(0.0),
            });
        }
        if updates >= opts.max_updates {
            return Err(Error::QpNotConverged {
                iterations: updates,
                violation,
            });
        }
        let (i, j) = (i_up, j_down);
        let eta = kernel.get(i, i) + kernel.get(j, j) - 2.0 * kernel.get(i, j);
        let unconstrained = if eta > 0.0 {
            violation / (2.0 * eta)
        } else {
            f64::INFINITY
        };
        let room_i = cap - lambda[i];
        let room_j = lambda[j];
        let t = unconstrained.min(room_i).min(room_j);
        if t == room_j {
            lambda[j] = 0.0;
        } else {
            lambda[j] -= t;
        }
        if t == room_i {
            lambda[i] = cap;
        } else {
            lambda[i] += t;
        }
        let (ri, rj) = (kernel.row(i), kernel.row(j));
        for k in 0..n {
            gradient[k] += 2.0 * t * (ri[k] - rj[k]);
        }
        updates += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair_splits_evenly() {
        let k = KernelMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let sol = solve_simplex_qp(&k, 1.0, SmoOptions::default()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-12);
        assert!((sol.lambda[1] - 0.5).abs() < 1e-12);
        assert!((sol.objective(&k) - k.dual_objective(&sol.lambda)).abs() < 1e-12);
    }

    #[test]
    fn cap_too_small_is_rejected() {
        let k = KernelMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!(solve_simplex_qp(&k, 0.4, SmoOptions::default()).is_err());
    }
}
