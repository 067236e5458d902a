use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{linear, unlinear, Cell, CellStatus, HierarchicalMesh, MultiRange};
use crate::splines::{two_scale_table, KnotVector};
use crate::{Error, Result};

const NO_DOF: u32 = u32::MAX;
const IN_OMEGA: u8 = 1;
const IN_NEXT: u8 = 2;

type TwoScale = Arc<Vec<Vec<(usize, f64)>>>;

/// Two-scale tables depend only on degree and element count, so they are shared.
fn cached_two_scale(degree: usize, elements: usize) -> TwoScale {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), TwoScale>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap().get(&(degree, elements)) {
        return t.clone();
    }
    let table = Arc::new(two_scale_table(&KnotVector::uniform(degree, elements, 0.0, 1.0)));
    cache
        .lock()
        .unwrap()
        .entry((degree, elements))
        .or_insert(table)
        .clone()
}

/// Truncated hierarchical B-spline space on a [`HierarchicalMesh`].
#[derive(Debug, Clone)]
pub struct ThbSpace<const D: usize> {
    mesh: HierarchicalMesh<D>,
    knots: Vec<[KnotVector; D]>,
    two_scale: Vec<[TwoScale; D]>,
    fstate: Vec<Vec<u8>>,
    dof_map: Vec<Vec<u32>>,
    functions: Vec<Cell<D>>,
    elements: Vec<Cell<D>>,
}

/// Restriction of the active THB functions to one element, in terms of the
/// tensor B-splines of the element's level that are nonzero there.
///
/// `coeffs` is row-major: one row of `(p+1)^D` entries per DOF, first direction fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementExtraction<const D: usize> {
    pub cell: Cell<D>,
    pub dofs: Vec<usize>,
    pub coeffs: Vec<f64>,
}

/// A THB function evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointBasis<const D: usize> {
    pub dof: usize,
    pub value: f64,
    pub grad: [f64; D],
    pub hess: [[f64; D]; D],
}

impl<const D: usize> ThbSpace<D> {
    pub fn new(mesh: HierarchicalMesh<D>) -> Result<Self> {
        mesh.validate()?;
        let p = mesh.degree();
        let nlev = mesh.num_levels();
        let mut knots = Vec::with_capacity(nlev);
        let mut two_scale = Vec::with_capacity(nlev);
        let mut fstate = Vec::with_capacity(nlev);
        let mut dof_map = Vec::with_capacity(nlev);
        let mut functions = Vec::new();
        let (lo, hi) = (mesh.lower(), mesh.upper());
        for level in 0..nlev {
            let dims = mesh.dims(level);
            knots.push(std::array::from_fn(|d| KnotVector::uniform(p, dims[d], lo[d], hi[d])));
            two_scale.push(std::array::from_fn(|d| cached_two_scale(p, dims[d])));
            let fdims = dims.map(|n| n + p);
            let count: usize = fdims.iter().product();
            let mut state = vec![0u8; count];
            let mut map = vec![NO_DOF; count];
            for (l, st) in state.iter_mut().enumerate() {
                let f = unlinear(&fdims, l);
                let (clo, chi) = support_cells(&f, &dims, p);
                let mut inside = true;
                let mut refined = true;
                for index in MultiRange::new(clo, chi) {
                    match mesh.status(&Cell::new(level, index)) {
                        CellStatus::Outside => {
                            inside = false;
                            refined = false;
                            break;
                        }
                        CellStatus::Active => refined = false,
                        CellStatus::Refined => {}
                    }
                }
                if inside {
                    *st |= IN_OMEGA;
                }
                if refined {
                    *st |= IN_NEXT;
                }
                if inside && !refined {
                    map[l] = functions.len() as u32;
                    functions.push(Cell::new(level, f));
                }
            }
            fstate.push(state);
            dof_map.push(map);
        }
        let elements = mesh.active_cells();
        Ok(Self {
            mesh,
            knots,
            two_scale,
            fstate,
            dof_map,
            functions,
            elements,
        })
    }

    pub fn mesh(&self) -> &HierarchicalMesh<D> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.mesh.degree()
    }

    pub fn num_dofs(&self) -> usize {
        self.functions.len()
    }

    /// Active elements in level-major lexicographic order.
    pub fn elements(&self) -> &[Cell<D>] {
        &self.elements
    }

    /// Level and tensor index of a DOF.
    pub fn function(&self, dof: usize) -> Cell<D> {
        self.functions[dof]
    }

    pub fn dof(&self, level: usize, index: &[usize; D]) -> Option<usize> {
        let fdims = self.function_dims(level);
        if level >= self.dof_map.len() || (0..D).any(|d| index[d] >= fdims[d]) {
            return None;
        }
        match self.dof_map[level][linear(&fdims, index)] {
            NO_DOF => None,
            v => Some(v as usize),
        }
    }

    pub fn knots(&self, level: usize) -> &[KnotVector; D] {
        &self.knots[level]
    }

    pub fn function_dims(&self, level: usize) -> [usize; D] {
        self.mesh.dims(level).map(|n| n + self.degree())
    }

    /// Level cells `[lo, hi]` (inclusive) covered by the support of a tensor function.
    pub fn support(&self, f: &Cell<D>) -> ([usize; D], [usize; D]) {
        support_cells(&f.index, &self.mesh.dims(f.level), self.degree())
    }

    /// Whether the support of a level function lies in that level's subdomain.
    pub fn support_in_domain(&self, f: &Cell<D>) -> bool {
        self.fstate_of(f) & IN_OMEGA != 0
    }

    fn fstate_of(&self, f: &Cell<D>) -> u8 {
        match self.fstate.get(f.level) {
            Some(s) => s[linear(&self.function_dims(f.level), &f.index)],
            None => 0,
        }
    }

    /// Number of tensor functions per element, `(p+1)^D`.
    pub fn local_size(&self) -> usize {
        (self.degree() + 1).pow(D as u32)
    }

    /// Restriction of all active THB functions to an active element.
    pub fn extraction(&self, cell: &Cell<D>) -> Result<ElementExtraction<D>> {
        if !self.mesh.is_active(cell) {
            return Err(Error::Structure(format!("{cell:?} is not an active element")));
        }
        let p = self.degree();
        let q = p + 1;
        let nloc = self.local_size();
        let top = cell.level;
        let mut dofs = Vec::new();
        let mut coeffs = Vec::new();
        let mut buf = vec![0.0; nloc];
        let mut tmp = vec![0.0; nloc];
        for k in 0..=top {
            let anc = cell.ancestor(k).index;
            let fdims = self.function_dims(k);
            for (loc, f) in MultiRange::new(anc, anc.map(|a| a + p)).enumerate() {
                let dof = self.dof_map[k][linear(&fdims, &f)];
                if dof == NO_DOF {
                    continue;
                }
                buf.fill(0.0);
                buf[loc] = 1.0;
                let mut alive = true;
                for j in k + 1..=top {
                    self.refine_window(cell, j, &mut buf, &mut tmp);
                    let child = cell.ancestor(j).index;
                    let cdims = self.function_dims(j);
                    let mut any = false;
                    for (l, g) in MultiRange::new(child, child.map(|a| a + p)).enumerate() {
                        if buf[l] != 0.0 {
                            if self.fstate[j][linear(&cdims, &g)] & IN_OMEGA != 0 {
                                buf[l] = 0.0;
                            } else {
                                any = true;
                            }
                        }
                    }
                    if !any {
                        alive = false;
                        break;
                    }
                }
                if alive {
                    dofs.push(dof as usize);
                    coeffs.extend_from_slice(&buf);
                }
            }
        }
        debug_assert_eq!(q.pow(D as u32), nloc);
        Ok(ElementExtraction {
            cell: *cell,
            dofs,
            coeffs,
        })
    }

    /// Map window coefficients of level `j-1` on the ancestor of `cell` to level `j`.
    pub(crate) fn refine_window(&self, cell: &Cell<D>, j: usize, buf: &mut [f64], tmp: &mut [f64]) {
        let p = self.degree();
        let q = p + 1;
        let parent = cell.ancestor(j - 1).index;
        let child = cell.ancestor(j).index;
        let mut stride = 1;
        for d in 0..D {
            let table = &self.two_scale[j - 1][d];
            let mut s = vec![0.0; q * q];
            for g in 0..q {
                for &(b, c) in &table[parent[d] + g] {
                    if b >= child[d] && b <= child[d] + p {
                        s[g * q + (b - child[d])] = c;
                    }
                }
            }
            tmp.fill(0.0);
            for (l, &v) in buf.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let g = (l / stride) % q;
                let base = l - g * stride;
                for b in 0..q {
                    let c = s[g * q + b];
                    if c != 0.0 {
                        tmp[base + b * stride] += v * c;
                    }
                }
            }
            buf.copy_from_slice(tmp);
            stride *= q;
        }
    }

    /// Tensor B-splines of the element's level at `point`, up to second derivatives.
    ///
    /// Returns `(values, grads, hessians)` over the `(p+1)^D` local functions.
    pub fn local_tensor_basis(
        &self,
        cell: &Cell<D>,
        point: &[f64; D],
        nders: usize,
    ) -> (Vec<f64>, Vec<[f64; D]>, Vec<[[f64; D]; D]>) {
        let p = self.degree();
        let q = p + 1;
        let nd = nders.min(2);
        let uni: [_; D] = std::array::from_fn(|d| {
            self.knots[cell.level][d].eval_in_span(point[d], cell.index[d] + p, nd)
        });
        let nloc = self.local_size();
        let mut val = vec![0.0; nloc];
        let mut grad = vec![[0.0; D]; nloc];
        let mut hess = vec![[[0.0; D]; D]; nloc];
        for l in 0..nloc {
            let mut loc = [0; D];
            let mut r = l;
            for d in 0..D {
                loc[d] = r % q;
                r /= q;
            }
            let der = |d: usize, k: usize| -> f64 {
                if k <= nd {
                    uni[d].ders[k][loc[d]]
                } else {
                    0.0
                }
            };
            val[l] = (0..D).map(|d| der(d, 0)).product();
            if nd >= 1 {
                for a in 0..D {
                    grad[l][a] = (0..D).map(|d| der(d, usize::from(d == a))).product();
                }
            }
            if nd >= 2 {
                for a in 0..D {
                    for b in 0..D {
                        hess[l][a][b] = (0..D)
                            .map(|d| der(d, usize::from(d == a) + usize::from(d == b)))
                            .product();
                    }
                }
            }
        }
        (val, grad, hess)
    }

    /// Active THB functions nonzero at `point` with derivatives up to `nders`.
    pub fn eval(&self, point: &[f64; D], nders: usize) -> Result<Vec<PointBasis<D>>> {
        let cell = self.mesh.locate(point)?;
        let ext = self.extraction(&cell)?;
        Ok(self.eval_with(&ext, point, nders))
    }

    /// Evaluate the functions of an extraction at a point of its element.
    pub fn eval_with(&self, ext: &ElementExtraction<D>, point: &[f64; D], nders: usize) -> Vec<PointBasis<D>> {
        let (val, grad, hess) = self.local_tensor_basis(&ext.cell, point, nders);
        let nloc = val.len();
        ext.dofs
            .iter()
            .enumerate()
            .map(|(r, &dof)| {
                let row = &ext.coeffs[r * nloc..(r + 1) * nloc];
                let mut pb = PointBasis {
                    dof,
                    value: 0.0,
                    grad: [0.0; D],
                    hess: [[0.0; D]; D],
                };
                for (l, &c) in row.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    pb.value += c * val[l];
                    for a in 0..D {
                        pb.grad[a] += c * grad[l][a];
                        for b in 0..D {
                            pb.hess[a][b] += c * hess[l][a][b];
                        }
                    }
                }
                pb
            })
            .collect()
    }

    /// Value of a scalar field at a point.
    pub fn eval_field(&self, coeffs: &[f64], point: &[f64; D]) -> Result<f64> {
        Ok(self
            .eval(point, 0)?
            .iter()
            .map(|b| coeffs[b.dof] * b.value)
            .sum())
    }
}

pub(crate) fn support_cells<const D: usize>(
    f: &[usize; D],
    dims: &[usize; D],
    p: usize,
) -> ([usize; D], [usize; D]) {
    let lo = f.map(|i| i.saturating_sub(p));
    let hi = std::array::from_fn(|d| f[d].min(dims[d] - 1));
    (lo, hi)
}
