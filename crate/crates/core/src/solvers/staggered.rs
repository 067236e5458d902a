use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::linear::{norm2, solve_dirichlet_with, LinearSolver};
use super::psor::{active_set_start, solve_psor};
use crate::assembly::{
    assemble_elasticity, assemble_load, assemble_phasefield_constant, assemble_phasefield_solution,
    internal_force, BoundaryConditions, Discretization, PhaseFieldSystem,
};
use crate::model::{MaterialParams, ModelSpec};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverTolerances {
    pub picard: f64,
    pub psor: f64,
    pub staggered: f64,
    pub max_picard: usize,
    pub max_psor: usize,
    pub max_staggered: usize,
    pub omega: f64,
    /// Active-set steps computing the PSOR starting point; zero starts from the previous iterate.
    pub active_set_steps: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            picard: 1e-5,
            psor: 1e-9,
            staggered: 1e-5,
            max_picard: 50,
            max_psor: 200_000,
            max_staggered: 5_000,
            omega: 1.2,
            active_set_steps: 10,
        }
    }
}

impl SolverTolerances {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::Config {
                path: format!("tolerances.{path}"),
                message: message.into(),
            })
        };
        for (name, v) in [("picard", self.picard), ("psor", self.psor), ("staggered", self.staggered)] {
            if !(v > 0.0) {
                return bad(name, "must be positive");
            }
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return bad("omega", "must lie in (0, 2)");
        }
        if self.max_picard == 0 || self.max_psor == 0 || self.max_staggered == 0 {
            return bad("max_*", "iteration limits must be positive");
        }
        Ok(())
    }
}

/// Wall-clock seconds per solver phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub el_assembly: f64,
    pub el_solver: f64,
    pub pf_assembly: f64,
    pub pf_solver: f64,
    pub projection: f64,
}

impl std::ops::AddAssign for Timings {
    fn add_assign(&mut self, o: Timings) {
        self.el_assembly += o.el_assembly;
        self.el_solver += o.el_solver;
        self.pf_assembly += o.pf_assembly;
        self.pf_solver += o.pf_solver;
        self.projection += o.projection;
    }
}

/// Everything needed to advance one load step on a fixed discretization.
pub struct FractureProblem<'a> {
    pub disc: &'a Discretization,
    pub mat: &'a MaterialParams,
    pub spec: &'a ModelSpec,
    pub bc: &'a BoundaryConditions,
    pub tol: &'a SolverTolerances,
}

#[derive(Debug, Clone)]
pub struct StaggeredResult {
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub iterations: usize,
    pub picard_iterations: usize,
    pub psor_iterations: usize,
    pub residual: f64,
    pub timings: Timings,
}

fn free_residual(fint: &[f64], fext: &[f64], fixed: &[Option<f64>]) -> f64 {
    let r: Vec<f64> = (0..fint.len())
        .filter(|&i| fixed[i].is_none())
        .map(|i| fint[i] - fext[i])
        .collect();
    norm2(&r)
}

/// Picard iteration on the secant stiffness. Returns the displacement and the iteration count.
#[allow(clippy::too_many_arguments)]
pub fn solve_elasticity(
    disc: &Discretization,
    u_prev: &[f64],
    d: &[f64],
    fixed: &[Option<f64>],
    fext: &[f64],
    mat: &MaterialParams,
    tol: &SolverTolerances,
    solver: &mut LinearSolver,
    timings: &mut Timings,
) -> Result<(Vec<f64>, usize)> {
    let scale = norm2(fext).max(1.0);
    let mut u: Vec<f64> = u_prev
        .iter()
        .zip(fixed)
        .map(|(&v, f)| f.unwrap_or(v))
        .collect();
    let mut res = f64::INFINITY;
    for it in 1..=tol.max_picard {
        let t = Instant::now();
        let k = assemble_elasticity(disc, &u, d, mat)?;
        timings.el_assembly += t.elapsed().as_secs_f64();
        let t = Instant::now();
        u = solve_dirichlet_with(solver, &k, fext, fixed)?;
        timings.el_solver += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let fint = internal_force(disc, &u, d, mat)?;
        timings.el_assembly += t.elapsed().as_secs_f64();
        res = free_residual(&fint, fext, fixed) / scale;
        if res <= tol.picard {
            return Ok((u, it));
        }
    }
    Err(Error::NotConverged {
        method: "Picard",
        iterations: tol.max_picard,
        residual: res,
    })
}

/// One damage update from the reference `d_n`, warm-started at `d_guess`.
///
/// Returns `d = d_n + Δd` with `Δd ≥ 0` and the PSOR iteration count.
#[allow(clippy::too_many_arguments)]
pub fn solve_phasefield(
    disc: &Discretization,
    u: &[f64],
    d_n: &[f64],
    d_guess: &[f64],
    phi_mat: &CsrMatrix,
    phi_vec: &[f64],
    mat: &MaterialParams,
    tol: &SolverTolerances,
    timings: &mut Timings,
) -> Result<(Vec<f64>, usize)> {
    let t = Instant::now();
    let (psi_mat, psi_vec) = assemble_phasefield_solution(disc, u, mat)?;
    let mut sys = PhaseFieldSystem::new(phi_mat, phi_vec, &psi_mat, &psi_vec, d_n, mat.toughness);
    // Normalising by the largest diagonal makes the tolerance act in damage units.
    let s = 1.0 / sys.q.diagonal().into_iter().fold(0.0, f64::max);
    sys.q.scale(s);
    sys.r.iter_mut().for_each(|v| *v *= s);
    timings.pf_assembly += t.elapsed().as_secs_f64();
    let t = Instant::now();
    let mut x0: Vec<f64> = d_guess.iter().zip(d_n).map(|(g, n)| (g - n).max(0.0)).collect();
    if tol.active_set_steps > 0 {
        x0 = active_set_start(&sys.q, &sys.r, &x0, tol.active_set_steps);
    }
    let sol = solve_psor(&sys.q, &sys.r, &x0, tol.psor, tol.omega, tol.max_psor)?;
    timings.pf_solver += t.elapsed().as_secs_f64();
    Ok((d_n.iter().zip(&sol.x).map(|(a, b)| a + b).collect(), sol.iterations))
}

/// Damage field of least dissipation among fields `≥ d` at zero displacement.
pub fn relax_damage(
    disc: &Discretization,
    d: &[f64],
    spec: &ModelSpec,
    mat: &MaterialParams,
    tol: &SolverTolerances,
    timings: &mut Timings,
) -> Result<Vec<f64>> {
    let t = Instant::now();
    let (phi_mat, phi_vec) = assemble_phasefield_constant(disc, spec)?;
    timings.pf_assembly += t.elapsed().as_secs_f64();
    let u = vec![0.0; 2 * disc.num_dofs()];
    let (d, _) = solve_phasefield(disc, &u, d, d, &phi_mat, &phi_vec, mat, tol, timings)?;
    Ok(d)
}

/// Alternate elasticity and damage solves until the force residual converges.
///
/// `d_k` is the irreversibility reference; `u_start`, `d_start` are initial guesses.
pub fn staggered_load_step(
    prob: &FractureProblem,
    u_start: &[f64],
    d_k: &[f64],
    d_start: &[f64],
) -> Result<StaggeredResult> {
    let disc = prob.disc;
    let mut timings = Timings::default();
    let t = Instant::now();
    let (phi_mat, phi_vec) = assemble_phasefield_constant(disc, prob.spec)?;
    let fext = assemble_load(disc, prob.bc);
    let fixed = prob.bc.prescribed(disc);
    timings.pf_assembly += t.elapsed().as_secs_f64();
    let scale = norm2(&fext).max(1.0);

    let mut solver = LinearSolver::new();
    let mut u = u_start.to_vec();
    let mut d = d_start.to_vec();
    let (mut picard, mut psor) = (0, 0);
    let mut res = f64::INFINITY;
    for it in 1..=prob.tol.max_staggered {
        let (un, np) = solve_elasticity(disc, &u, &d, &fixed, &fext, prob.mat, prob.tol, &mut solver, &mut timings)?;
        u = un;
        picard += np;
        let (dn, ns) = solve_phasefield(disc, &u, d_k, &d, &phi_mat, &phi_vec, prob.mat, prob.tol, &mut timings)?;
        d = dn;
        psor += ns;
        log::debug!("staggered iteration {it}: Picard {np}, PSOR {ns}");
        let t = Instant::now();
        let fint = internal_force(disc, &u, &d, prob.mat)?;
        timings.el_assembly += t.elapsed().as_secs_f64();
        res = free_residual(&fint, &fext, &fixed) / scale;
        if res <= prob.tol.staggered {
            return Ok(StaggeredResult {
                u,
                d,
                iterations: it,
                picard_iterations: picard,
                psor_iterations: psor,
                residual: res,
                timings,
            });
        }
    }
    Err(Error::NotConverged {
        method: "staggered scheme",
        iterations: prob.tol.max_staggered,
        residual: res,
    })
}
