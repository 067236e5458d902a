use rayon::prelude::*;

use super::elasticity::{psi_plus, strain_split};
use super::{Discretization, ElementData};
use crate::model::{MaterialParams, ModelSpec, Order};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

fn assemble_scalar<F>(disc: &Discretization, kernel: F) -> (CsrMatrix, Vec<f64>)
where
    F: Fn(&ElementData, &mut [f64], &mut [f64]) + Sync,
{
    let parts: Vec<(Vec<f64>, Vec<f64>)> = disc
        .elements()
        .par_iter()
        .map(|el| {
            let n = el.n();
            let mut ke = vec![0.0; n * n];
            let mut fe = vec![0.0; n];
            kernel(el, &mut ke, &mut fe);
            (ke, fe)
        })
        .collect();
    let n = disc.num_dofs();
    let mut vec = vec![0.0; n];
    let mut local = Vec::with_capacity(parts.len());
    for (el, (ke, fe)) in disc.elements().iter().zip(parts) {
        for (a, &i) in el.dofs.iter().enumerate() {
            vec[i] += fe[a];
        }
        local.push(ke);
    }
    (disc.scalar_pattern().assemble(n, &local), vec)
}

/// Solution-independent part: `Φ` and, for the linear local term, `φ`.
pub fn assemble_phasefield_constant(disc: &Discretization, spec: &ModelSpec) -> Result<(CsrMatrix, Vec<f64>)> {
    if spec.order == Order::Fourth && disc.space().degree() < 2 {
        return Err(Error::Domain("fourth-order models need a C¹ basis (degree ≥ 2)".into()));
    }
    let quad = if spec.beta == 2 { 2.0 * spec.c_d } else { 0.0 };
    let lin = if spec.beta == 1 { spec.c_d } else { 0.0 };
    let (g, l) = (2.0 * spec.c_g, 2.0 * spec.c_l);
    Ok(assemble_scalar(disc, |el, ke, fe| {
        let n = el.n();
        for q in 0..el.nq() {
            let w = el.weights[q];
            let v = &el.values[q * n..(q + 1) * n];
            let gr = &el.grads[q * n..(q + 1) * n];
            let lp = &el.laplacians[q * n..(q + 1) * n];
            for a in 0..n {
                fe[a] += lin * v[a] * w;
                for b in 0..n {
                    ke[a * n + b] += w
                        * (quad * v[a] * v[b]
                            + g * (gr[a][0] * gr[b][0] + gr[a][1] * gr[b][1])
                            + l * lp[a] * lp[b]);
                }
            }
        }
    }))
}

/// Solution-dependent part: `Ψ_ij = ∫ 2ψ₀⁺ R_i R_j` and `ψ_i = ∫ 2ψ₀⁺ R_i`.
pub fn assemble_phasefield_solution(disc: &Discretization, u: &[f64], mat: &MaterialParams) -> Result<(CsrMatrix, Vec<f64>)> {
    disc.check_len("displacement", u.len(), 2)?;
    Ok(assemble_scalar(disc, |el, ke, fe| {
        let n = el.n();
        for q in 0..el.nq() {
            let h = 2.0 * psi_plus(mat, &strain_split(el.vector_gradient(q, u))) * el.weights[q];
            if h == 0.0 {
                continue;
            }
            let v = &el.values[q * n..(q + 1) * n];
            for a in 0..n {
                fe[a] += h * v[a];
                for b in 0..n {
                    ke[a * n + b] += h * v[a] * v[b];
                }
            }
        }
    }))
}

/// Increment problem `x ≥ 0, Qx − r ≥ 0, xᵀ(Qx − r) = 0` for `d = d_n + x`.
#[derive(Debug, Clone)]
pub struct PhaseFieldSystem {
    pub q: CsrMatrix,
    pub r: Vec<f64>,
}

impl PhaseFieldSystem {
    /// `Q = Ψ + G_c Φ`, `r = ψ − G_c φ − Q d_n`.
    pub fn new(phi_mat: &CsrMatrix, phi_vec: &[f64], psi_mat: &CsrMatrix, psi_vec: &[f64], d_n: &[f64], gc: f64) -> Self {
        let q = psi_mat.add_scaled(gc, phi_mat);
        let qd = q.mul_vec(d_n);
        let r = (0..d_n.len())
            .map(|i| psi_vec[i] - gc * phi_vec[i] - qd[i])
            .collect();
        Self { q, r }
    }
}

/// `G_c ∫ (c_d d^β + c_g |∇d|² + c_l (Δd)²)`.
pub fn dissipated_energy(disc: &Discretization, d: &[f64], spec: &ModelSpec, mat: &MaterialParams) -> Result<f64> {
    disc.check_len("damage", d.len(), 1)?;
    let parts: Vec<f64> = disc
        .elements()
        .par_iter()
        .map(|el| {
            let n = el.n();
            let mut e = 0.0;
            for q in 0..el.nq() {
                let (mut v, mut g, mut l) = (0.0, [0.0; 2], 0.0);
                for (a, &i) in el.dofs.iter().enumerate() {
                    let c = d[i];
                    v += c * el.values[q * n + a];
                    g[0] += c * el.grads[q * n + a][0];
                    g[1] += c * el.grads[q * n + a][1];
                    l += c * el.laplacians[q * n + a];
                }
                e += el.weights[q] * spec.dissipation_density(v, g[0] * g[0] + g[1] * g[1], l);
            }
            e
        })
        .collect();
    Ok(mat.toughness * parts.iter().sum::<f64>())
}
