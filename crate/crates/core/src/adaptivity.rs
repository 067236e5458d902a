//! Damage-driven refinement and adaptive load stepping.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryConditions, Discretization};
use crate::hierarchy::{mark_admissible_closure, support_extension, transfer_field, Cell, HierarchicalMesh, MultiRange, ThbSpace};
use crate::model::{MaterialParams, ModelSpec};
use crate::solvers::{staggered_load_step, FractureProblem, SolverTolerances, Timings};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteppingPolicy {
    Explicit,
    Implicit,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefinementConfig {
    /// Marking threshold `d_min`.
    pub damage_threshold: f64,
    pub admissibility: usize,
    pub policy: SteppingPolicy,
    /// Mesh-change ratio used by the hybrid policy.
    pub hybrid_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            damage_threshold: 0.1,
            admissibility: 2,
            policy: SteppingPolicy::Hybrid,
            hybrid_tolerance: 0.005,
            max_iterations: 10,
        }
    }
}

impl RefinementConfig {
    /// `TOL_ref` induced by the stepping policy.
    pub fn tol_ref(&self) -> f64 {
        match self.policy {
            SteppingPolicy::Explicit => 1.0,
            SteppingPolicy::Implicit => 0.0,
            SteppingPolicy::Hybrid => self.hybrid_tolerance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::Config {
                path: format!("refinement.{path}"),
                message: message.into(),
            })
        };
        if !(self.damage_threshold > 0.0 && self.damage_threshold < 1.0) {
            return bad("damage_threshold", "must lie in (0, 1)");
        }
        if self.admissibility < 2 {
            return bad("admissibility", "must be at least 2");
        }
        if !(self.hybrid_tolerance > 0.0 && self.hybrid_tolerance < 1.0) {
            return bad("hybrid_tolerance", "must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be positive");
        }
        Ok(())
    }
}

/// Fractions of the element at which damage is sampled in each direction.
pub const SAMPLE_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// The `3^D` sample points of a cell.
pub fn sample_points<const D: usize>(mesh: &HierarchicalMesh<D>, cell: &Cell<D>) -> Vec<[f64; D]> {
    let (lo, hi) = mesh.cell_bounds(cell);
    MultiRange::new([0; D], [2; D])
        .map(|k| std::array::from_fn(|d| lo[d] + SAMPLE_FRACTIONS[k[d]] * (hi[d] - lo[d])))
        .collect()
}

/// Active elements of level below `max_level` where `d` exceeds the threshold at a sample point.
pub fn mark_by_damage<const D: usize>(space: &ThbSpace<D>, d: &[f64], threshold: f64) -> Vec<Cell<D>> {
    let mesh = space.mesh();
    space
        .elements()
        .par_iter()
        .filter(|c| c.level < mesh.max_level())
        .filter(|c| {
            let ext = space.extraction(c).expect("active element");
            sample_points(mesh, c).iter().any(|p| {
                let v: f64 = space.eval_with(&ext, p, 0).iter().map(|b| d[b.dof] * b.value).sum();
                v > threshold
            })
        })
        .copied()
        .collect()
}

/// Level-by-level refinement driven by a marking predicate on active elements.
///
/// At level `max_level − 1` every marked element is widened to its support extension,
/// so no coarser function straddles the marked region. Returns the new mesh and the
/// number of elements refined.
pub fn refine_marked<const D: usize, F>(mesh: &HierarchicalMesh<D>, m: usize, mark: F) -> Result<(HierarchicalMesh<D>, usize)>
where
    F: Fn(&HierarchicalMesh<D>, &[Cell<D>]) -> Vec<Cell<D>>,
{
    let top = mesh.max_level();
    let mut mesh = mesh.clone();
    let mut count = 0;
    for level in 0..top {
        let active = mesh.active_cells_at(level);
        let marked = mark(&mesh, &active);
        if marked.is_empty() {
            continue;
        }
        let marked = if level + 1 == top {
            let mut band = BTreeSet::new();
            for c in &marked {
                let (lo, hi) = support_extension(&mesh, c)?;
                band.extend(MultiRange::new(lo, hi).map(|i| Cell::new(level, i)));
            }
            // Extension cells may still sit inside coarser active elements.
            loop {
                let coarse: BTreeSet<_> = band
                    .iter()
                    .filter(|c| !mesh.in_domain(c))
                    .filter_map(|c| mesh.active_ancestor(c))
                    .collect();
                if coarse.is_empty() {
                    break;
                }
                let coarse: Vec<_> = coarse.into_iter().collect();
                let closed = mark_admissible_closure(&mesh, &coarse, m);
                count += closed.len();
                mesh = mesh.refine(&closed)?;
            }
            band.into_iter().filter(|c| mesh.is_active(c)).collect()
        } else {
            marked
        };
        let closed = mark_admissible_closure(&mesh, &marked, m);
        count += closed.len();
        mesh = mesh.refine(&closed)?;
    }
    Ok((mesh, count))
}

/// Damage-driven refinement with cross-talk elimination. Returns the new space and the
/// number of elements refined.
pub fn refine_for_damage<const D: usize>(
    space: &ThbSpace<D>,
    d: &[f64],
    cfg: &RefinementConfig,
) -> Result<(ThbSpace<D>, usize)> {
    let threshold = cfg.damage_threshold;
    let (mesh, count) = refine_marked(space.mesh(), cfg.admissibility, |mesh, cells| {
        cells
            .par_iter()
            .filter(|c| {
                let points = sample_points(mesh, c);
                if space.mesh().is_active(c) {
                    let ext = space.extraction(c).expect("active element");
                    points.iter().any(|p| {
                        let v: f64 = space.eval_with(&ext, p, 0).iter().map(|b| d[b.dof] * b.value).sum();
                        v > threshold
                    })
                } else {
                    points
                        .iter()
                        .any(|p| space.eval_field(d, p).expect("point inside the domain") > threshold)
                }
            })
            .copied()
            .collect()
    })?;
    if count == 0 {
        return Ok((space.clone(), 0));
    }
    Ok((ThbSpace::new(mesh)?, count))
}

/// Converged state of a load step together with the space it lives on.
#[derive(Debug, Clone)]
pub struct AdaptiveStep {
    pub disc: Discretization,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub staggered_iterations: usize,
    pub refinement_iterations: usize,
    pub timings: Timings,
}

pub struct AdaptiveProblem<'a> {
    pub mat: &'a MaterialParams,
    pub spec: &'a ModelSpec,
    pub bc: &'a BoundaryConditions,
    pub tol: &'a SolverTolerances,
    pub refinement: &'a RefinementConfig,
}

/// Solve a load step, refine and re-solve until the mesh change satisfies the policy.
///
/// `d_k` is the converged damage of the previous step on `disc`; it stays the
/// irreversibility reference through all repetitions.
pub fn adaptive_load_step(
    step: usize,
    prob: &AdaptiveProblem,
    disc: Discretization,
    u_k: Vec<f64>,
    d_k: Vec<f64>,
) -> Result<AdaptiveStep> {
    let tol_ref = prob.refinement.tol_ref();
    let mut disc = disc;
    let (mut u_guess, mut d_guess, mut d_ref) = (u_k, d_k.clone(), d_k);
    let mut timings = Timings::default();
    let mut staggered = 0;
    for it in 1..=prob.refinement.max_iterations {
        let fp = FractureProblem {
            disc: &disc,
            mat: prob.mat,
            spec: prob.spec,
            bc: prob.bc,
            tol: prob.tol,
        };
        let res = staggered_load_step(&fp, &u_guess, &d_ref, &d_guess)?;
        staggered += res.iterations;
        timings += res.timings;

        let t = Instant::now();
        let before = disc.space().elements().len();
        let (space, marked) = refine_for_damage(disc.space(), &res.d, prob.refinement)?;
        let (u, d) = if marked > 0 {
            let u = transfer_field(disc.space(), &space, &res.u, 2)?;
            let d = transfer_field(disc.space(), &space, &res.d, 1)?;
            d_ref = transfer_field(disc.space(), &space, &d_ref, 1)?;
            disc = Discretization::new(space)?;
            (u, d)
        } else {
            (res.u, res.d)
        };
        timings.projection += t.elapsed().as_secs_f64();
        log::info!(
            "step {step} iteration {it}: marked {marked}, elements {}, dofs {}",
            disc.space().elements().len(),
            disc.num_dofs()
        );
        if marked == 0 || tol_ref >= 1.0 || marked as f64 / before as f64 <= tol_ref {
            return Ok(AdaptiveStep {
                disc,
                u,
                d,
                staggered_iterations: staggered,
                refinement_iterations: it,
                timings,
            });
        }
        u_guess = u;
        d_guess = d;
    }
    Err(Error::NotConverged {
        method: "adaptive refinement",
        iterations: prob.refinement.max_iterations,
        residual: f64::NAN,
    })
}
