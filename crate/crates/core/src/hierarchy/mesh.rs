use std::fmt::Write as _;

use super::{linear, unlinear, Cell, MultiRange};
use crate::{Error, Result};

/// Membership of a cell of some level in the hierarchical mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum CellStatus {
    /// Not contained in the level's subdomain.
    Outside = 0,
    /// Active element.
    Active = 1,
    /// Contained in the subdomain of the next level.
    Refined = 2,
}

/// Nested dyadic mesh on a box. Level `l` has `base[d] << l` cells per direction.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalMesh<const D: usize> {
    degree: usize,
    base: [usize; D],
    lower: [f64; D],
    upper: [f64; D],
    max_level: usize,
    levels: Vec<Vec<CellStatus>>,
}

impl<const D: usize> HierarchicalMesh<D> {
    /// Single-level mesh of `base` cells on `[lower, upper]`.
    pub fn new(degree: usize, base: [usize; D], lower: [f64; D], upper: [f64; D], max_level: usize) -> Self {
        assert!(base.iter().all(|&n| n > 0), "empty base grid");
        assert!((0..D).all(|d| upper[d] > lower[d]), "degenerate domain");
        let n: usize = base.iter().product();
        Self {
            degree,
            base,
            lower,
            upper,
            max_level,
            levels: vec![vec![CellStatus::Active; n]],
        }
    }

    /// Unit box `[0,1]^D`.
    pub fn unit(degree: usize, base: [usize; D], max_level: usize) -> Self {
        Self::new(degree, base, [0.0; D], [1.0; D], max_level)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> [usize; D] {
        self.base
    }

    pub fn lower(&self) -> [f64; D] {
        self.lower
    }

    pub fn upper(&self) -> [f64; D] {
        self.upper
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Number of levels holding at least one cell.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dims(&self, level: usize) -> [usize; D] {
        self.base.map(|n| n << level)
    }

    pub fn cell_size(&self, level: usize) -> [f64; D] {
        let dims = self.dims(level);
        std::array::from_fn(|d| (self.upper[d] - self.lower[d]) / dims[d] as f64)
    }

    pub fn contains_index(&self, cell: &Cell<D>) -> bool {
        let dims = self.dims(cell.level);
        (0..D).all(|d| cell.index[d] < dims[d])
    }

    pub fn status(&self, cell: &Cell<D>) -> CellStatus {
        match self.levels.get(cell.level) {
            Some(grid) if self.contains_index(cell) => grid[linear(&self.dims(cell.level), &cell.index)],
            _ => CellStatus::Outside,
        }
    }

    pub fn is_active(&self, cell: &Cell<D>) -> bool {
        self.status(cell) == CellStatus::Active
    }

    /// Whether the cell lies in the level's subdomain.
    pub fn in_domain(&self, cell: &Cell<D>) -> bool {
        self.status(cell) != CellStatus::Outside
    }

    /// Active elements ordered by level, then lexicographically.
    pub fn active_cells(&self) -> Vec<Cell<D>> {
        let mut out = Vec::new();
        for (level, grid) in self.levels.iter().enumerate() {
            let dims = self.dims(level);
            for (l, s) in grid.iter().enumerate() {
                if *s == CellStatus::Active {
                    out.push(Cell::new(level, unlinear(&dims, l)));
                }
            }
        }
        out
    }

    pub fn active_cells_at(&self, level: usize) -> Vec<Cell<D>> {
        let Some(grid) = self.levels.get(level) else {
            return Vec::new();
        };
        let dims = self.dims(level);
        grid.iter()
            .enumerate()
            .filter(|(_, s)| **s == CellStatus::Active)
            .map(|(l, _)| Cell::new(level, unlinear(&dims, l)))
            .collect()
    }

    pub fn num_active(&self) -> usize {
        self.levels
            .iter()
            .map(|g| g.iter().filter(|s| **s == CellStatus::Active).count())
            .sum()
    }

    pub fn cell_bounds(&self, cell: &Cell<D>) -> ([f64; D], [f64; D]) {
        let h = self.cell_size(cell.level);
        let lo = std::array::from_fn(|d| self.lower[d] + cell.index[d] as f64 * h[d]);
        let hi = std::array::from_fn(|d| self.lower[d] + (cell.index[d] + 1) as f64 * h[d]);
        (lo, hi)
    }

    /// Active element containing `point`; ties on cell faces go to the upper cell.
    pub fn locate(&self, point: &[f64; D]) -> Result<Cell<D>> {
        for d in 0..D {
            if !(point[d] >= self.lower[d] && point[d] <= self.upper[d]) {
                return Err(Error::Domain(format!("point {point:?} outside the domain")));
            }
        }
        let mut level = 0;
        loop {
            let h = self.cell_size(level);
            let dims = self.dims(level);
            let index = std::array::from_fn(|d| {
                let i = ((point[d] - self.lower[d]) / h[d]).floor() as usize;
                i.min(dims[d] - 1)
            });
            let cell = Cell::new(level, index);
            match self.status(&cell) {
                CellStatus::Active => return Ok(cell),
                CellStatus::Refined => level += 1,
                CellStatus::Outside => {
                    return Err(Error::Structure(format!("no active cell covers {point:?}")))
                }
            }
        }
    }

    /// Active element covering `cell`, if one of its ancestors (or itself) is active.
    pub fn active_ancestor(&self, cell: &Cell<D>) -> Option<Cell<D>> {
        (0..=cell.level)
            .map(|l| cell.ancestor(l))
            .find(|a| self.is_active(a))
    }

    /// Replace each given active element by its children.
    pub fn refine(&self, cells: &[Cell<D>]) -> Result<Self> {
        let mut out = self.clone();
        for cell in cells {
            if !self.is_active(cell) {
                return Err(Error::Structure(format!("cannot refine inactive cell {cell:?}")));
            }
            if cell.level >= self.max_level {
                return Err(Error::Capacity(format!(
                    "cell {cell:?} is already at the finest level {}",
                    self.max_level
                )));
            }
            let level = cell.level;
            let dims = self.dims(level);
            out.levels[level][linear(&dims, &cell.index)] = CellStatus::Refined;
            if out.levels.len() == level + 1 {
                let n: usize = self.dims(level + 1).iter().product();
                out.levels.push(vec![CellStatus::Outside; n]);
            }
            let cdims = self.dims(level + 1);
            for child in cell.children() {
                out.levels[level + 1][linear(&cdims, &child.index)] = CellStatus::Active;
            }
        }
        Ok(out)
    }

    /// Refine until every cell of `level` inside `[lo, hi]` (indices at that level) is
    /// active or refined. Coarser active ancestors are refined as needed.
    pub fn refine_to_level(&self, level: usize, lo: [usize; D], hi: [usize; D]) -> Result<Self> {
        let mut mesh = self.clone();
        for l in 0..level {
            let shift = level - l;
            let clo = lo.map(|i| i >> shift);
            let chi = hi.map(|i| i >> shift);
            let cells: Vec<_> = MultiRange::new(clo, chi)
                .map(|index| Cell::new(l, index))
                .filter(|c| mesh.is_active(c))
                .collect();
            if !cells.is_empty() {
                mesh = mesh.refine(&cells)?;
            }
        }
        Ok(mesh)
    }

    /// Check that active cells tile the domain and subdomains are nested.
    pub fn validate(&self) -> Result<()> {
        for (level, grid) in self.levels.iter().enumerate() {
            let dims = self.dims(level);
            for (l, s) in grid.iter().enumerate() {
                let cell = Cell::new(level, unlinear(&dims, l));
                let parent_refined = level == 0
                    || self.status(&cell.ancestor(level - 1)) == CellStatus::Refined;
                if (*s != CellStatus::Outside) != parent_refined {
                    return Err(Error::Structure(format!(
                        "cell {cell:?} breaks nestedness of the subdomains"
                    )));
                }
                if *s == CellStatus::Refined
                    && cell.children().any(|c| self.status(&c) == CellStatus::Outside)
                {
                    return Err(Error::Structure(format!("refined cell {cell:?} has no children")));
                }
            }
        }
        Ok(())
    }

    /// One `level, i, j` line per active element.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for cell in self.active_cells() {
            let _ = write!(s, "{}", cell.level);
            for i in cell.index {
                let _ = write!(s, ", {i}");
            }
            s.push('\n');
        }
        s
    }
}
