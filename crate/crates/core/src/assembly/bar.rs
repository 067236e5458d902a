//! Damaged 1D bar `−(ω(d) E u')' = 0` with prescribed end displacements.

use crate::hierarchy::ThbSpace;
use crate::model::degradation;
use crate::solvers::solve_dirichlet;
use crate::sparse::CsrMatrix;
use crate::splines::gauss_legendre;
use crate::Result;

/// Stiffness `∫ ω(d) u' v'` with unit modulus; `damage` is evaluated at Gauss points.
pub fn bar_stiffness(space: &ThbSpace<1>, damage: impl Fn(f64) -> f64, eta: f64) -> Result<CsrMatrix> {
    let (gx, gw) = gauss_legendre(space.degree() + 1);
    let mut t = Vec::new();
    for cell in space.elements() {
        let ext = space.extraction(cell)?;
        let (lo, hi) = space.mesh().cell_bounds(cell);
        let half = 0.5 * (hi[0] - lo[0]);
        for (&x, &w) in gx.iter().zip(&gw) {
            let pt = [lo[0] + half * (x + 1.0)];
            let c = degradation(damage(pt[0]), eta) * w * half;
            let basis = space.eval_with(&ext, &pt, 1);
            for a in &basis {
                for b in &basis {
                    t.push((a.dof, b.dof, c * a.grad[0] * b.grad[0]));
                }
            }
        }
    }
    let n = space.num_dofs();
    Ok(CsrMatrix::from_triplets(n, n, t))
}

/// Displacement coefficients with `u(first) = left`, `u(last) = right`.
pub fn solve_bar(space: &ThbSpace<1>, damage: impl Fn(f64) -> f64, eta: f64, left: f64, right: f64) -> Result<Vec<f64>> {
    let k = bar_stiffness(space, damage, eta)?;
    let mut fixed = vec![None; space.num_dofs()];
    for (i, slot) in fixed.iter_mut().enumerate() {
        let f = space.function(i);
        if f.index[0] == 0 {
            *slot = Some(left);
        } else if f.index[0] == space.function_dims(f.level)[0] - 1 {
            *slot = Some(right);
        }
    }
    solve_dirichlet(&k, &vec![0.0; space.num_dofs()], &fixed)
}
