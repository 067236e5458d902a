use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::{Mat, Side};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Sparse Cholesky solver that reuses the symbolic analysis while the pattern is unchanged.
#[derive(Default)]
pub struct LinearSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLlt<usize>)>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.n_rows();
        if a.n_cols() != n || b.len() != n {
            return Err(Error::Solver(format!(
                "dimension mismatch: {}x{} matrix, {} right-hand side",
                n,
                a.n_cols(),
                b.len()
            )));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let lower = a.to_faer_lower();
        let (ptr, idx) = (
            lower.symbolic().col_ptr().to_vec(),
            lower.symbolic().row_idx().to_vec(),
        );
        let reuse = matches!(&self.cached, Some((p, i, _)) if *p == ptr && *i == idx);
        if !reuse {
            let sym = SymbolicLlt::try_new(lower.symbolic(), Side::Lower)
                .map_err(|e| Error::Solver(format!("symbolic analysis failed: {e:?}")))?;
            self.cached = Some((ptr, idx, sym));
        }
        let sym = self.cached.as_ref().unwrap().2.clone();
        let llt = Llt::try_new_with_symbolic(sym, lower.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("matrix is not positive definite ({e:?})")))?;
        let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
        let mut x: Vec<f64> = {
            let sol = llt.solve(&rhs);
            (0..n).map(|i| sol[(i, 0)]).collect()
        };
        // Iterative refinement keeps the residual at round-off level.
        let bn = norm2(b);
        for _ in 0..2 {
            let ax = a.mul_vec(&x);
            let res: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if norm2(&res) <= 1e-12 * bn {
                break;
            }
            let corr = llt.solve(&Mat::from_fn(n, 1, |i, _| res[i]));
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += corr[(i, 0)];
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite solution".into()));
        }
        Ok(x)
    }
}

/// Solve `Ax = b` for a symmetric positive definite `A`.
pub fn solve_linear(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LinearSolver::new().solve(a, b)
}

/// Solve `Kx = f` with `x_i` prescribed where `fixed[i]` is set, by elimination.
pub fn solve_dirichlet(k: &CsrMatrix, f: &[f64], fixed: &[Option<f64>]) -> Result<Vec<f64>> {
    solve_dirichlet_with(&mut LinearSolver::new(), k, f, fixed)
}

pub fn solve_dirichlet_with(
    solver: &mut LinearSolver,
    k: &CsrMatrix,
    f: &[f64],
    fixed: &[Option<f64>],
) -> Result<Vec<f64>> {
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    let full: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let lifted = k.mul_vec(&full);
    let rhs: Vec<f64> = free.iter().map(|&i| f[i] - lifted[i]).collect();
    let xf = solver.solve(&k.submatrix(&free), &rhs)?;
    let mut x = full;
    for (k, &i) in free.iter().enumerate() {
        x[i] = xf[k];
    }
    Ok(x)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
