use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Discretization, ElementData};
use crate::model::{degradation, MaterialParams};
use crate::sparse::CsrMatrix;
use crate::splines::gauss_legendre;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainSplit {
    /// Symmetric strain `[ε_xx, ε_yy, ε_xy]`.
    pub eps: [f64; 3],
    pub eps_v: f64,
    pub eps_v_plus: f64,
    pub eps_v_minus: f64,
    /// Deviatoric part `[e_xx, e_yy, e_xy]`.
    pub eps_dev: [f64; 3],
}

impl StrainSplit {
    pub fn dev_norm_sq(&self) -> f64 {
        let e = self.eps_dev;
        e[0] * e[0] + e[1] * e[1] + 2.0 * e[2] * e[2]
    }
}

/// Volumetric/deviatoric split of `sym(grad_u)`, `grad_u[c][k] = ∂u_c/∂x_k`.
pub fn strain_split(grad_u: [[f64; 2]; 2]) -> StrainSplit {
    let eps = [grad_u[0][0], grad_u[1][1], 0.5 * (grad_u[0][1] + grad_u[1][0])];
    let eps_v = eps[0] + eps[1];
    StrainSplit {
        eps,
        eps_v,
        eps_v_plus: eps_v.max(0.0),
        eps_v_minus: (-eps_v).max(0.0),
        eps_dev: [eps[0] - 0.5 * eps_v, eps[1] - 0.5 * eps_v, eps[2]],
    }
}

/// Tensile energy density `½K⟨ε_v⟩₊² + μ|ε_d|²`.
pub fn psi_plus(mat: &MaterialParams, s: &StrainSplit) -> f64 {
    0.5 * mat.bulk() * s.eps_v_plus * s.eps_v_plus + mat.mu() * s.dev_norm_sq()
}

/// Compressive energy density `½K⟨ε_v⟩₋²`.
pub fn psi_minus(mat: &MaterialParams, s: &StrainSplit) -> f64 {
    0.5 * mat.bulk() * s.eps_v_minus * s.eps_v_minus
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dirichlet {
    pub edge: Edge,
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<Dirichlet>,
    /// Constant tractions on edges.
    pub tractions: Vec<(Edge, [f64; 2])>,
    pub body_force: [f64; 2],
}

impl BoundaryConditions {
    /// DOFs of active functions that do not vanish on `edge`.
    pub fn edge_dofs(disc: &Discretization, edge: Edge) -> Vec<usize> {
        let space = disc.space();
        (0..space.num_dofs())
            .filter(|&i| {
                let f = space.function(i);
                let last = space.function_dims(f.level).map(|n| n - 1);
                match edge {
                    Edge::Left => f.index[0] == 0,
                    Edge::Right => f.index[0] == last[0],
                    Edge::Bottom => f.index[1] == 0,
                    Edge::Top => f.index[1] == last[1],
                }
            })
            .collect()
    }

    /// Prescribed value per constrained vector DOF, `None` where free.
    pub fn prescribed(&self, disc: &Discretization) -> Vec<Option<f64>> {
        let mut out = vec![None; 2 * disc.num_dofs()];
        for bc in &self.dirichlet {
            for i in Self::edge_dofs(disc, bc.edge) {
                out[2 * i + bc.component] = Some(bc.value);
            }
        }
        out
    }

    pub fn constrains(&self, edge: Edge) -> bool {
        self.dirichlet.iter().any(|b| b.edge == edge)
    }
}

/// Moduli of the secant bilinear form: `(K_eff, μω)`.
fn moduli(mat: &MaterialParams, eps_v_prev: f64, d: f64) -> (f64, f64) {
    let w = degradation(d, mat.residual_stiffness);
    let k = if eps_v_prev >= 0.0 { w * mat.bulk() } else { mat.bulk() };
    (k, w * mat.mu())
}

fn element_stiffness(el: &ElementData, u_prev: &[f64], d: &[f64], mat: &MaterialParams) -> Vec<f64> {
    let n = el.n();
    let m = 2 * n;
    let mut ke = vec![0.0; m * m];
    for q in 0..el.nq() {
        let s = strain_split(el.vector_gradient(q, u_prev));
        let (k, mw) = moduli(mat, s.eps_v, el.value(q, d));
        let c1 = (k + mw) * el.weights[q];
        let c2 = (k - mw) * el.weights[q];
        let c3 = mw * el.weights[q];
        let g = &el.grads[q * n..(q + 1) * n];
        for a in 0..n {
            let [ax, ay] = g[a];
            for b in 0..n {
                let [bx, by] = g[b];
                let r0 = 2 * a * m + 2 * b;
                let r1 = r0 + m;
                ke[r0] += ax * c1 * bx + ay * c3 * by;
                ke[r0 + 1] += ax * c2 * by + ay * c3 * bx;
                ke[r1] += ay * c2 * bx + ax * c3 * by;
                ke[r1 + 1] += ay * c1 * by + ax * c3 * bx;
            }
        }
    }
    ke
}

/// Secant stiffness `K(u_prev, d)` on interleaved vector DOFs, before Dirichlet elimination.
///
/// The volumetric modulus is degraded where `ε_v(u_prev) ≥ 0`; the deviatoric one always.
pub fn assemble_elasticity(disc: &Discretization, u_prev: &[f64], d: &[f64], mat: &MaterialParams) -> Result<CsrMatrix> {
    disc.check_len("displacement", u_prev.len(), 2)?;
    disc.check_len("damage", d.len(), 1)?;
    let local: Vec<Vec<f64>> = disc
        .elements()
        .par_iter()
        .map(|el| element_stiffness(el, u_prev, d, mat))
        .collect();
    let n = 2 * disc.num_dofs();
    Ok(disc.vector_pattern().assemble(n, &local))
}

/// Internal force `K(u, d) u`, with the volumetric sign taken from `u` itself.
pub fn internal_force(disc: &Discretization, u: &[f64], d: &[f64], mat: &MaterialParams) -> Result<Vec<f64>> {
    disc.check_len("displacement", u.len(), 2)?;
    disc.check_len("damage", d.len(), 1)?;
    let parts: Vec<(Vec<usize>, Vec<f64>)> = disc
        .elements()
        .par_iter()
        .map(|el| {
            let n = el.n();
            let mut fe = vec![0.0; 2 * n];
            for q in 0..el.nq() {
                let s = strain_split(el.vector_gradient(q, u));
                let (k, mw) = moduli(mat, s.eps_v, el.value(q, d));
                let w = el.weights[q];
                // σ = (K_eff − μω) ε_v I + 2μω ε
                let p = (k - mw) * s.eps_v;
                let sxx = (p + 2.0 * mw * s.eps[0]) * w;
                let syy = (p + 2.0 * mw * s.eps[1]) * w;
                let sxy = 2.0 * mw * s.eps[2] * w;
                for a in 0..n {
                    let [gx, gy] = el.grads[q * n + a];
                    fe[2 * a] += sxx * gx + sxy * gy;
                    fe[2 * a + 1] += sxy * gx + syy * gy;
                }
            }
            (el.dofs.clone(), fe)
        })
        .collect();
    let mut f = vec![0.0; u.len()];
    for (dofs, fe) in parts {
        for (a, &i) in dofs.iter().enumerate() {
            f[2 * i] += fe[2 * a];
            f[2 * i + 1] += fe[2 * a + 1];
        }
    }
    Ok(f)
}

/// Stored elastic energy `∫ ω(d) ψ₀⁺ + ψ₀⁻`.
pub fn elastic_energy(disc: &Discretization, u: &[f64], d: &[f64], mat: &MaterialParams) -> Result<f64> {
    disc.check_len("displacement", u.len(), 2)?;
    disc.check_len("damage", d.len(), 1)?;
    let parts: Vec<f64> = disc
        .elements()
        .par_iter()
        .map(|el| {
            (0..el.nq())
                .map(|q| {
                    let s = strain_split(el.vector_gradient(q, u));
                    let w = degradation(el.value(q, d), mat.residual_stiffness);
                    el.weights[q] * (w * psi_plus(mat, &s) + psi_minus(mat, &s))
                })
                .sum()
        })
        .collect();
    Ok(parts.iter().sum())
}

/// External load vector from body force and edge tractions.
pub fn assemble_load(disc: &Discretization, bc: &BoundaryConditions) -> Vec<f64> {
    let mut f = vec![0.0; 2 * disc.num_dofs()];
    if bc.body_force != [0.0; 2] {
        for el in disc.elements() {
            let n = el.n();
            for q in 0..el.nq() {
                for (a, &i) in el.dofs.iter().enumerate() {
                    let v = el.values[q * n + a] * el.weights[q];
                    f[2 * i] += bc.body_force[0] * v;
                    f[2 * i + 1] += bc.body_force[1] * v;
                }
            }
        }
    }
    let space = disc.space();
    let mesh = space.mesh();
    let (gx, gw) = gauss_legendre(space.degree() + 1);
    for &(edge, t) in &bc.tractions {
        for cell in space.elements() {
            let (lo, hi) = mesh.cell_bounds(cell);
            let (along, fixed) = match edge {
                Edge::Left if lo[0] == mesh.lower()[0] => (1, lo[0]),
                Edge::Right if hi[0] == mesh.upper()[0] => (1, hi[0]),
                Edge::Bottom if lo[1] == mesh.lower()[1] => (0, lo[1]),
                Edge::Top if hi[1] == mesh.upper()[1] => (0, hi[1]),
                _ => continue,
            };
            let ext = space.extraction(cell).expect("active element");
            let half = 0.5 * (hi[along] - lo[along]);
            for (&x, &w) in gx.iter().zip(&gw) {
                let mut pt = [fixed; 2];
                pt[along] = lo[along] + half * (x + 1.0);
                for b in space.eval_with(&ext, &pt, 0) {
                    f[2 * b.dof] += t[0] * b.value * w * half;
                    f[2 * b.dof + 1] += t[1] * b.value * w * half;
                }
            }
        }
    }
    f
}

/// Sum of internal forces over the DOFs constrained on `edge`, per component.
pub fn reaction_force(
    disc: &Discretization,
    u: &[f64],
    d: &[f64],
    mat: &MaterialParams,
    bc: &BoundaryConditions,
    edge: Edge,
) -> Result<[f64; 2]> {
    if !bc.constrains(edge) {
        return Err(Error::Domain(format!("edge {edge:?} carries no Dirichlet condition")));
    }
    let fint = internal_force(disc, u, d, mat)?;
    let mut r = [0.0; 2];
    let dofs = BoundaryConditions::edge_dofs(disc, edge);
    for c in 0..2 {
        if bc.dirichlet.iter().any(|b| b.edge == edge && b.component == c) {
            r[c] = dofs.iter().map(|&i| fint[2 * i + c]).sum();
        }
    }
    Ok(r)
}
