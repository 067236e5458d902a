use super::linear::solve_linear;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsorSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Largest `|min(x_i, (Qx − r)_i)|` at exit, relative to `max(1, ‖r‖∞)`.
    pub residual: f64,
}

/// Complementarity residual `max_i |min(x_i, (Qx − r)_i)|` scaled by `max(1, ‖r‖∞)`.
pub fn lcp_residual(q: &CsrMatrix, r: &[f64], x: &[f64]) -> f64 {
    let scale = r.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let w = q.mul_vec(x);
    x.iter()
        .zip(w.iter().zip(r))
        .map(|(&xi, (&wi, &ri))| xi.min(wi - ri).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Projected SOR for `x ≥ 0, Qx − r ≥ 0, xᵀ(Qx − r) = 0` with symmetric `Q`, positive diagonal.
pub fn solve_psor(q: &CsrMatrix, r: &[f64], x0: &[f64], tol: f64, omega: f64, max_iter: usize) -> Result<PsorSolution> {
    let n = r.len();
    assert_eq!(q.n_rows(), n);
    assert_eq!(x0.len(), n);
    assert!(omega > 0.0 && omega < 2.0, "relaxation factor must lie in (0, 2)");
    let diag = q.diagonal();
    if let Some(i) = diag.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Solver(format!("non-positive diagonal entry at row {i}")));
    }
    let mut x: Vec<f64> = x0.iter().map(|v| v.max(0.0)).collect();
    let mut residual = lcp_residual(q, r, &x);
    if residual <= tol {
        return Ok(PsorSolution { x, iterations: 0, residual });
    }
    for it in 1..=max_iter {
        let mut largest_step = 0.0f64;
        for i in 0..n {
            let (cols, vals) = q.row(i);
            let mut w = -r[i];
            for (&j, &v) in cols.iter().zip(vals) {
                w += v * x[j];
            }
            let xi = (x[i] - omega * w / diag[i]).max(0.0);
            largest_step = largest_step.max((xi - x[i]).abs());
            x[i] = xi;
        }
        // The residual costs a sweep; evaluate it once the updates have become small.
        if largest_step > 2.0 * tol && it % 16 != 0 && it != max_iter {
            continue;
        }
        residual = lcp_residual(q, r, &x);
        if residual <= tol {
            return Ok(PsorSolution { x, iterations: it, residual });
        }
    }
    Err(Error::NotConverged {
        method: "PSOR",
        iterations: max_iter,
        residual,
    })
}

/// Starting point for PSOR from primal-dual active-set steps.
///
/// Each step fixes `x_i = 0` where `x_i ≤ (Qx − r)_i` and solves the remaining block
/// exactly. Stops when the free set repeats, after `steps` steps, or if a block solve
/// fails; the result is projected onto `x ≥ 0` but need not solve the problem.
pub fn active_set_start(q: &CsrMatrix, r: &[f64], x0: &[f64], steps: usize) -> Vec<f64> {
    let n = r.len();
    let mut x: Vec<f64> = x0.iter().map(|v| v.max(0.0)).collect();
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..steps {
        let w = q.mul_vec(&x);
        let free: Vec<usize> = (0..n).filter(|&i| x[i] > w[i] - r[i]).collect();
        if previous.as_ref() == Some(&free) {
            break;
        }
        let rhs: Vec<f64> = free.iter().map(|&i| r[i]).collect();
        let Ok(y) = solve_linear(&q.submatrix(&free), &rhs) else {
            break;
        };
        x.fill(0.0);
        for (k, &i) in free.iter().enumerate() {
            x[i] = y[k].max(0.0);
        }
        previous = Some(free);
    }
    x
}
