//! Galerkin assembly on 2D THB spaces.

pub mod bar;
mod elasticity;
mod phasefield;

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::hierarchy::{Cell, ThbSpace};
use crate::sparse::CsrMatrix;
use crate::splines::gauss_legendre;
use crate::{Error, Result};

pub use elasticity::{
    assemble_elasticity, assemble_load, elastic_energy, internal_force, psi_minus, psi_plus, reaction_force,
    strain_split, BoundaryConditions, Dirichlet, Edge, StrainSplit,
};
pub use phasefield::{
    assemble_phasefield_constant, assemble_phasefield_solution, dissipated_energy, PhaseFieldSystem,
};

/// Basis data of one active element at its Gauss points.
///
/// Arrays are indexed `[q * n + a]` for quadrature point `q` and local function `a`.
#[derive(Debug, Clone)]
pub struct ElementData {
    pub cell: Cell<2>,
    pub dofs: Vec<usize>,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub laplacians: Vec<f64>,
}

impl ElementData {
    pub fn n(&self) -> usize {
        self.dofs.len()
    }

    pub fn nq(&self) -> usize {
        self.weights.len()
    }

    /// Scalar field value at a quadrature point.
    pub fn value(&self, q: usize, coeffs: &[f64]) -> f64 {
        let n = self.n();
        self.dofs
            .iter()
            .enumerate()
            .map(|(a, &i)| self.values[q * n + a] * coeffs[i])
            .sum()
    }

    /// Gradient of a two-component interleaved field: `g[c][k] = ∂u_c/∂x_k`.
    pub fn vector_gradient(&self, q: usize, u: &[f64]) -> [[f64; 2]; 2] {
        let n = self.n();
        let mut g = [[0.0; 2]; 2];
        for (a, &i) in self.dofs.iter().enumerate() {
            let gr = self.grads[q * n + a];
            for c in 0..2 {
                g[c][0] += u[2 * i + c] * gr[0];
                g[c][1] += u[2 * i + c] * gr[1];
            }
        }
        g
    }
}

/// A THB space together with cached Gauss-point basis data.
#[derive(Debug, Clone)]
pub struct Discretization {
    space: ThbSpace<2>,
    elements: Vec<ElementData>,
    area: f64,
    scalar_pattern: OnceLock<Pattern>,
    vector_pattern: OnceLock<Pattern>,
}

/// Sparsity pattern of the global matrices with the value slot of every local entry.
#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Per element, row-major `m × m` slots into the value array.
    slots: Vec<Vec<usize>>,
}

impl Pattern {
    fn build(n: usize, element_dofs: &[Vec<usize>]) -> Self {
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, dofs) in element_dofs.iter().enumerate() {
            for &i in dofs {
                touching[i].push(e);
            }
        }
        let rows: Vec<Vec<usize>> = touching
            .par_iter()
            .map(|els| {
                let mut cols: Vec<usize> = els.iter().flat_map(|&e| element_dofs[e].iter().copied()).collect();
                cols.sort_unstable();
                cols.dedup();
                cols
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        for r in &rows {
            row_ptr.push(row_ptr.last().unwrap() + r.len());
        }
        let col_idx: Vec<usize> = rows.into_iter().flatten().collect();
        let slots = element_dofs
            .par_iter()
            .map(|dofs| {
                let mut s = Vec::with_capacity(dofs.len() * dofs.len());
                for &i in dofs {
                    let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                    for &j in dofs {
                        s.push(row_ptr[i] + row.binary_search(&j).expect("pattern covers element"));
                    }
                }
                s
            })
            .collect();
        Self { row_ptr, col_idx, slots }
    }

    /// Sum element matrices, given in element order, into a matrix with this pattern.
    pub(crate) fn assemble(&self, n_cols: usize, local: &[Vec<f64>]) -> CsrMatrix {
        let mut values = vec![0.0; self.col_idx.len()];
        for (slots, ke) in self.slots.iter().zip(local) {
            for (&s, &v) in slots.iter().zip(ke) {
                values[s] += v;
            }
        }
        CsrMatrix::from_pattern(n_cols, self.row_ptr.clone(), self.col_idx.clone(), values)
    }
}

impl Discretization {
    pub fn new(space: ThbSpace<2>) -> Result<Self> {
        let q = space.degree() + 1;
        let (gx, gw) = gauss_legendre(q);
        let elements = space
            .elements()
            .par_iter()
            .map(|cell| element_data(&space, cell, &gx, &gw))
            .collect::<Result<Vec<_>>>()?;
        let mesh = space.mesh();
        let area = (mesh.upper()[0] - mesh.lower()[0]) * (mesh.upper()[1] - mesh.lower()[1]);
        Ok(Self {
            space,
            elements,
            area,
            scalar_pattern: OnceLock::new(),
            vector_pattern: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &ThbSpace<2> {
        &self.space
    }

    pub fn elements(&self) -> &[ElementData] {
        &self.elements
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub(crate) fn scalar_pattern(&self) -> &Pattern {
        self.scalar_pattern.get_or_init(|| {
            let dofs: Vec<Vec<usize>> = self.elements.iter().map(|e| e.dofs.clone()).collect();
            Pattern::build(self.num_dofs(), &dofs)
        })
    }

    /// Pattern for interleaved two-component fields.
    pub(crate) fn vector_pattern(&self) -> &Pattern {
        self.vector_pattern.get_or_init(|| {
            let dofs: Vec<Vec<usize>> = self
                .elements
                .iter()
                .map(|e| e.dofs.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect())
                .collect();
            Pattern::build(2 * self.num_dofs(), &dofs)
        })
    }

    pub(crate) fn check_len(&self, what: &str, len: usize, components: usize) -> Result<()> {
        if len != self.num_dofs() * components {
            return Err(Error::Structure(format!(
                "{what} has {len} values, space expects {}",
                self.num_dofs() * components
            )));
        }
        Ok(())
    }
}

fn element_data(space: &ThbSpace<2>, cell: &Cell<2>, gx: &[f64], gw: &[f64]) -> Result<ElementData> {
    let ext = space.extraction(cell)?;
    let (lo, hi) = space.mesh().cell_bounds(cell);
    let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
    let n = ext.dofs.len();
    let nloc = space.local_size();
    let nq = gx.len() * gx.len();
    let mut data = ElementData {
        cell: *cell,
        dofs: ext.dofs.clone(),
        points: Vec::with_capacity(nq),
        weights: Vec::with_capacity(nq),
        values: vec![0.0; nq * n],
        grads: vec![[0.0; 2]; nq * n],
        laplacians: vec![0.0; nq * n],
    };
    for (j, (&yj, &wj)) in gx.iter().zip(gw).enumerate() {
        for (i, (&xi, &wi)) in gx.iter().zip(gw).enumerate() {
            let q = j * gx.len() + i;
            let pt = [lo[0] + half[0] * (xi + 1.0), lo[1] + half[1] * (yj + 1.0)];
            data.points.push(pt);
            data.weights.push(wi * wj * half[0] * half[1]);
            let (val, grad, hess) = space.local_tensor_basis(cell, &pt, 2);
            for a in 0..n {
                let row = &ext.coeffs[a * nloc..(a + 1) * nloc];
                let (mut v, mut g, mut l) = (0.0, [0.0; 2], 0.0);
                for (k, &c) in row.iter().enumerate() {
                    if c != 0.0 {
                        v += c * val[k];
                        g[0] += c * grad[k][0];
                        g[1] += c * grad[k][1];
                        l += c * (hess[k][0][0] + hess[k][1][1]);
                    }
                }
                data.values[q * n + a] = v;
                data.grads[q * n + a] = g;
                data.laplacians[q * n + a] = l;
            }
        }
    }
    Ok(data)
}
