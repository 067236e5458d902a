use std::collections::HashMap;

use rayon::prelude::*;

use super::{Cell, CellStatus, MultiRange, ThbSpace};
use crate::{Error, Result};

/// Re-express a field of `old` in the refined space `new`.
///
/// `coeffs` holds `components` interleaved values per DOF. A THB coefficient of a
/// level-`k` function equals its coefficient in the level-`k` tensor expansion of the
/// field on any active level-`k` element in its support, so each new coefficient is
/// read off a local two-scale refinement of the old element polynomial.
pub fn transfer_field<const D: usize>(
    old: &ThbSpace<D>,
    new: &ThbSpace<D>,
    coeffs: &[f64],
    components: usize,
) -> Result<Vec<f64>> {
    if coeffs.len() != old.num_dofs() * components {
        return Err(Error::Structure(format!(
            "field has {} values, space expects {}",
            coeffs.len(),
            old.num_dofs() * components
        )));
    }
    let (om, nm) = (old.mesh(), new.mesh());
    if om.degree() != nm.degree() || om.base() != nm.base() || om.lower() != nm.lower() || om.upper() != nm.upper() {
        return Err(Error::Structure("spaces are built on different base grids".into()));
    }
    for cell in om.active_cells() {
        if nm.status(&cell) == CellStatus::Outside {
            return Err(Error::Structure(format!(
                "new mesh is not a refinement of the old one at {cell:?}"
            )));
        }
    }

    // Group new functions by a witness element: an active cell of the function's level in its support.
    let mut groups: HashMap<Cell<D>, Vec<usize>> = HashMap::new();
    for dof in 0..new.num_dofs() {
        let f = new.function(dof);
        let (lo, hi) = new.support(&f);
        let witness = MultiRange::new(lo, hi)
            .map(|index| Cell::new(f.level, index))
            .find(|c| nm.is_active(c))
            .ok_or_else(|| Error::Structure(format!("active function {f:?} has no active element")))?;
        groups.entry(witness).or_default().push(dof);
    }
    let mut groups: Vec<_> = groups.into_iter().collect();
    groups.sort_unstable_by_key(|(c, _)| *c);

    let p = new.degree();
    let nloc = new.local_size();
    let results: Vec<Vec<(usize, Vec<f64>)>> = groups
        .par_iter()
        .map(|(cell, dofs)| -> Result<Vec<(usize, Vec<f64>)>> {
            let anc = om.active_ancestor(cell).ok_or_else(|| {
                Error::Structure(format!("old mesh is finer than the new one at {cell:?}"))
            })?;
            let ext = old.extraction(&anc)?;
            let mut local = vec![vec![0.0; nloc]; components];
            for (r, &dof) in ext.dofs.iter().enumerate() {
                let row = &ext.coeffs[r * nloc..(r + 1) * nloc];
                for (c, loc) in local.iter_mut().enumerate() {
                    let v = coeffs[dof * components + c];
                    if v != 0.0 {
                        for (a, b) in loc.iter_mut().zip(row) {
                            *a += v * b;
                        }
                    }
                }
            }
            let mut tmp = vec![0.0; nloc];
            for j in anc.level + 1..=cell.level {
                for loc in local.iter_mut() {
                    new.refine_window(cell, j, loc, &mut tmp);
                }
            }
            let window = cell.index;
            Ok(dofs
                .iter()
                .map(|&dof| {
                    let f = new.function(dof);
                    let mut l = 0;
                    for d in (0..D).rev() {
                        l = l * (p + 1) + (f.index[d] - window[d]);
                    }
                    (dof, local.iter().map(|loc| loc[l]).collect())
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut out = vec![0.0; new.num_dofs() * components];
    for (dof, vals) in results.into_iter().flatten() {
        out[dof * components..(dof + 1) * components].copy_from_slice(&vals);
    }
    Ok(out)
}
