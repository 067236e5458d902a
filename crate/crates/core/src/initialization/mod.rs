//! Initial crack: mesh pre-refinement around the crack and projected damage profile.

mod profile;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use profile::{fd_profile, optimal_profile};

use crate::adaptivity::refine_marked;
use crate::hierarchy::{Cell, HierarchicalMesh, ThbSpace};
use crate::model::ModelSpec;
use crate::solvers::solve_linear;
use crate::sparse::CsrMatrix;
use crate::splines::gauss_legendre;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackSegment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl CrackSegment {
    pub fn new(start: [f64; 2], end: [f64; 2]) -> Result<Self> {
        let c = Self { start, end };
        if c.length() == 0.0 {
            return Err(Error::Domain("crack segment has zero length".into()));
        }
        Ok(c)
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    /// Euclidean distance from a point to the segment.
    pub fn distance(&self, p: &[f64; 2]) -> f64 {
        let (ax, ay) = (self.start[0], self.start[1]);
        let (dx, dy) = (self.end[0] - ax, self.end[1] - ay);
        let t = (((p[0] - ax) * dx + (p[1] - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        (p[0] - ax - t * dx).hypot(p[1] - ay - t * dy)
    }

    /// Distance from an axis-aligned box to the segment.
    pub fn box_distance(&self, lo: &[f64; 2], hi: &[f64; 2]) -> f64 {
        if self.clips(lo, hi) {
            return 0.0;
        }
        // Disjoint convex sets: the closest pair involves a box corner or a segment end.
        let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
        let mut best = corners.iter().map(|c| self.distance(c)).fold(f64::INFINITY, f64::min);
        for p in [self.start, self.end] {
            let q = [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])];
            best = best.min((p[0] - q[0]).hypot(p[1] - q[1]));
        }
        best
    }

    /// Liang-Barsky test for a nonempty intersection with a closed box.
    fn clips(&self, lo: &[f64; 2], hi: &[f64; 2]) -> bool {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..2 {
            let dir = self.end[k] - self.start[k];
            for (p, q) in [(-dir, self.start[k] - lo[k]), (dir, hi[k] - self.start[k])] {
                if p == 0.0 {
                    if q < 0.0 {
                        return false;
                    }
                } else if p < 0.0 {
                    t0 = t0.max(q / p);
                } else {
                    t1 = t1.min(q / p);
                }
            }
        }
        t0 <= t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Radius of the projection neighbourhood in units of the internal length.
    pub band_radius: f64,
    /// Radius of the neighbourhood whose elements are marked for refinement, in units of
    /// the internal length. Zero marks the elements touching the crack.
    pub mesh_radius: f64,
    /// Minimise the dissipation once at zero load with the projected field as lower bound.
    /// The projection alone is not a discrete minimiser, so the first load step would
    /// otherwise lower the dissipation.
    pub relax: bool,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            band_radius: 4.0,
            mesh_radius: 0.0,
            relax: true,
        }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str| {
            Err(Error::Config {
                path: format!("init.{path}"),
                message: "must be finite and nonnegative".into(),
            })
        };
        if !(self.band_radius.is_finite() && self.band_radius >= 2.0) {
            return Err(Error::Config {
                path: "init.band_radius".into(),
                message: "must be at least 2 internal lengths".into(),
            });
        }
        if !(self.mesh_radius.is_finite() && self.mesh_radius >= 0.0) {
            return bad("mesh_radius");
        }
        Ok(())
    }
}

/// Refine every element within distance `radius` of the crack up to the finest level.
pub fn init_mesh_around_crack(
    mesh: &HierarchicalMesh<2>,
    crack: &CrackSegment,
    radius: f64,
    m: usize,
) -> Result<HierarchicalMesh<2>> {
    let (mesh, _) = refine_marked(mesh, m, |mesh, cells| {
        cells
            .iter()
            .filter(|c| {
                let (lo, hi) = mesh.cell_bounds(c);
                crack.box_distance(&lo, &hi) <= radius
            })
            .copied()
            .collect()
    })?;
    Ok(mesh)
}

/// L² projection of `target` onto the functions whose support meets `in_band`; other coefficients are zero.
pub fn project_band<T, B>(space: &ThbSpace<2>, target: T, in_band: B) -> Result<Vec<f64>>
where
    T: Fn(&[f64; 2]) -> f64 + Sync,
    B: Fn(&[f64; 2], &[f64; 2]) -> bool + Sync,
{
    let mesh = space.mesh();
    let n = space.num_dofs();
    let band: Vec<usize> = (0..n)
        .filter(|&i| {
            let f = space.function(i);
            let (clo, chi) = space.support(&f);
            let (lo, _) = mesh.cell_bounds(&Cell::new(f.level, clo));
            let (_, hi) = mesh.cell_bounds(&Cell::new(f.level, chi));
            in_band(&lo, &hi)
        })
        .collect();
    let mut local = vec![usize::MAX; n];
    for (k, &i) in band.iter().enumerate() {
        local[i] = k;
    }
    // Extra points resolve the non-polynomial profile.
    let (gx, gw) = gauss_legendre(space.degree() + 4);
    let parts: Vec<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)> = space
        .elements()
        .par_iter()
        .map(|cell| {
            let ext = space.extraction(cell).expect("active element");
            let rows: Vec<usize> = ext.dofs.iter().map(|&i| local[i]).collect();
            if rows.iter().all(|&r| r == usize::MAX) {
                return (Vec::new(), Vec::new());
            }
            let (lo, hi) = mesh.cell_bounds(cell);
            let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
            let nl = rows.len();
            let mut me = vec![0.0; nl * nl];
            let mut be = vec![0.0; nl];
            for (&y, &wy) in gx.iter().zip(&gw) {
                for (&x, &wx) in gx.iter().zip(&gw) {
                    let p = [lo[0] + half[0] * (x + 1.0), lo[1] + half[1] * (y + 1.0)];
                    let w = wx * wy * half[0] * half[1];
                    let basis = space.eval_with(&ext, &p, 0);
                    let tv = target(&p);
                    for (a, ba) in basis.iter().enumerate() {
                        be[a] += w * tv * ba.value;
                        for (b, bb) in basis.iter().enumerate() {
                            me[a * nl + b] += w * ba.value * bb.value;
                        }
                    }
                }
            }
            let mut t = Vec::new();
            let mut f = Vec::new();
            for a in 0..nl {
                if rows[a] == usize::MAX {
                    continue;
                }
                f.push((rows[a], be[a]));
                for b in 0..nl {
                    if rows[b] != usize::MAX {
                        t.push((rows[a], rows[b], me[a * nl + b]));
                    }
                }
            }
            (t, f)
        })
        .collect();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; band.len()];
    for (t, f) in parts {
        triplets.extend(t);
        for (i, v) in f {
            rhs[i] += v;
        }
    }
    let m = CsrMatrix::from_triplets(band.len(), band.len(), triplets);
    let c = solve_linear(&m, &rhs)?;
    let mut out = vec![0.0; n];
    for (k, &i) in band.iter().enumerate() {
        out[i] = if c[k].abs() < 1e-12 { 0.0 } else { c[k] };
    }
    Ok(out)
}

/// Damage coefficients approximating the optimal profile around the crack.
pub fn ipf_initialize(space: &ThbSpace<2>, crack: &CrackSegment, spec: &ModelSpec, l0: f64, radius: f64) -> Result<Vec<f64>> {
    project_band(
        space,
        |p| optimal_profile(spec, l0, crack.distance(p)),
        |lo, hi| crack.box_distance(lo, hi) < radius,
    )
}
