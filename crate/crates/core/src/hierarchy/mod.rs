//! Hierarchical meshes and truncated hierarchical B-spline (THB) spaces.
//!
//! Levels are nested dyadic refinements of a uniform tensor grid. Cells and
//! functions are addressed by integer multi-indices per level, so nestedness
//! tests never compare floating point knots.

mod admissible;
mod mesh;
mod space;
mod transfer;

pub use admissible::{is_admissible, mark_admissible_closure, support_extension, t_neighborhood};
pub use mesh::{CellStatus, HierarchicalMesh};
pub use space::{ElementExtraction, PointBasis, ThbSpace};
pub use transfer::transfer_field;

/// A cell of the tensor grid at `level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell<const D: usize> {
    pub level: usize,
    pub index: [usize; D],
}

impl<const D: usize> Cell<D> {
    pub fn new(level: usize, index: [usize; D]) -> Self {
        Self { level, index }
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: usize) -> Cell<D> {
        assert!(level <= self.level);
        let shift = self.level - level;
        Cell {
            level,
            index: self.index.map(|i| i >> shift),
        }
    }

    pub fn children(&self) -> impl Iterator<Item = Cell<D>> + '_ {
        let lo = self.index.map(|i| 2 * i);
        let hi = self.index.map(|i| 2 * i + 1);
        MultiRange::new(lo, hi).map(move |index| Cell {
            level: self.level + 1,
            index,
        })
    }
}

/// Inclusive multi-index box iterated with the first index fastest.
#[derive(Debug, Clone)]
pub struct MultiRange<const D: usize> {
    lo: [usize; D],
    hi: [usize; D],
    next: Option<[usize; D]>,
}

impl<const D: usize> MultiRange<D> {
    pub fn new(lo: [usize; D], hi: [usize; D]) -> Self {
        let empty = (0..D).any(|d| lo[d] > hi[d]);
        Self {
            lo,
            hi,
            next: if empty { None } else { Some(lo) },
        }
    }
}

impl<const D: usize> Iterator for MultiRange<D> {
    type Item = [usize; D];

    fn next(&mut self) -> Option<[usize; D]> {
        let cur = self.next?;
        let mut n = cur;
        let mut d = 0;
        loop {
            if d == D {
                self.next = None;
                break;
            }
            if n[d] < self.hi[d] {
                n[d] += 1;
                self.next = Some(n);
                break;
            }
            n[d] = self.lo[d];
            d += 1;
        }
        Some(cur)
    }
}

/// Linear index with the first direction fastest.
pub(crate) fn linear<const D: usize>(dims: &[usize; D], idx: &[usize; D]) -> usize {
    let mut l = 0;
    for d in (0..D).rev() {
        l = l * dims[d] + idx[d];
    }
    l
}

pub(crate) fn unlinear<const D: usize>(dims: &[usize; D], mut l: usize) -> [usize; D] {
    let mut idx = [0; D];
    for d in 0..D {
        idx[d] = l % dims[d];
        l /= dims[d];
    }
    idx
}
