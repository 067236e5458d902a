use std::collections::BTreeSet;

use super::{Cell, HierarchicalMesh, MultiRange, ThbSpace};
use crate::{Error, Result};

/// Level cells `[lo, hi]` in the union of supports of the level's tensor functions
/// that are nonzero on `cell`.
pub fn support_extension<const D: usize>(
    mesh: &HierarchicalMesh<D>,
    cell: &Cell<D>,
) -> Result<([usize; D], [usize; D])> {
    if !mesh.contains_index(cell) {
        return Err(Error::Domain(format!("{cell:?} is not a cell of the grid")));
    }
    let p = mesh.degree();
    let dims = mesh.dims(cell.level);
    let lo = cell.index.map(|i| i.saturating_sub(p));
    let hi = std::array::from_fn(|d| (cell.index[d] + p).min(dims[d] - 1));
    Ok((lo, hi))
}

/// Active elements of level `l - m + 1` meeting the support extension of the
/// level `l - m + 2` ancestor of `cell`.
pub fn t_neighborhood<const D: usize>(mesh: &HierarchicalMesh<D>, cell: &Cell<D>, m: usize) -> Vec<Cell<D>> {
    assert!(m >= 2, "admissibility class must be at least 2");
    if cell.level + 1 < m {
        return Vec::new();
    }
    let target = cell.level + 1 - m;
    let anc = cell.ancestor(target + 1);
    let (lo, hi) = support_extension(mesh, &anc).expect("ancestor of a valid cell");
    MultiRange::new(lo.map(|i| i / 2), hi.map(|i| i / 2))
        .map(|index| Cell::new(target, index))
        .filter(|c| mesh.is_active(c))
        .collect()
}

/// Enlarge a set of marked active elements so that refining it keeps the mesh
/// admissible of class `m`.
pub fn mark_admissible_closure<const D: usize>(
    mesh: &HierarchicalMesh<D>,
    marked: &[Cell<D>],
    m: usize,
) -> Vec<Cell<D>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Cell<D>> = marked.to_vec();
    while let Some(cell) = stack.pop() {
        if out.insert(cell) {
            stack.extend(t_neighborhood(mesh, &cell, m).into_iter().filter(|c| !out.contains(c)));
        }
    }
    out.into_iter().collect()
}

/// Every active function nonzero on an active element of level `l` has level at least `l - m + 1`.
pub fn is_admissible<const D: usize>(space: &ThbSpace<D>, m: usize) -> Result<bool> {
    for cell in space.elements() {
        let ext = space.extraction(cell)?;
        for dof in &ext.dofs {
            if space.function(*dof).level + m < cell.level + 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
