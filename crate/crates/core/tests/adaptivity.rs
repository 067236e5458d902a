mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thbfrac::adaptivity::{
    adaptive_load_step, mark_by_damage, refine_for_damage, sample_points, AdaptiveProblem, RefinementConfig,
    SteppingPolicy,
};
use thbfrac::assembly::bar::solve_bar;
use thbfrac::assembly::{BoundaryConditions, Dirichlet, Discretization, Edge};
use thbfrac::hierarchy::{is_admissible, Cell, HierarchicalMesh, ThbSpace};
use thbfrac::initialization::{ipf_initialize, CrackSegment};
use thbfrac::model::{Family, MaterialParams, ModelSpec, Order};
use thbfrac::solvers::SolverTolerances;
use thbfrac::Error;

use common::{cross_talk_violations, greville, random_mesh};

#[test]
fn policy_tolerances() {
    let mut cfg = RefinementConfig::default();
    assert_eq!(cfg.tol_ref(), 0.005);
    cfg.policy = SteppingPolicy::Explicit;
    assert_eq!(cfg.tol_ref(), 1.0);
    cfg.policy = SteppingPolicy::Implicit;
    assert_eq!(cfg.tol_ref(), 0.0);
    cfg.validate().unwrap();
    cfg.damage_threshold = 1.0;
    assert!(matches!(cfg.validate(), Err(Error::Config { path, .. }) if path == "refinement.damage_threshold"));
    let mut cfg = RefinementConfig::default();
    cfg.admissibility = 1;
    assert!(matches!(cfg.validate(), Err(Error::Config { path, .. }) if path == "refinement.admissibility"));
}

#[test]
fn sample_points_are_interior() {
    let mesh = HierarchicalMesh::unit(2, [4, 4], 1);
    let pts = sample_points(&mesh, &Cell::new(0, [1, 2]));
    assert_eq!(pts.len(), 9);
    assert_eq!(pts[0], [0.25 + 0.0625, 0.5 + 0.0625]);
    assert!(pts.iter().all(|p| p[0] > 0.25 && p[0] < 0.5 && p[1] > 0.5 && p[1] < 0.75));
}

#[test]
fn marking_constant_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let space = ThbSpace::new(random_mesh(&mut rng, 5, 2)).unwrap();
    assert!(mark_by_damage(&space, &vec![0.0; space.num_dofs()], 0.1).is_empty());
    let all = mark_by_damage(&space, &vec![1.0; space.num_dofs()], 0.1);
    let expected: Vec<_> = space.elements().iter().filter(|c| c.level < 2).copied().collect();
    assert_eq!(all, expected);

    let (same, count) = refine_for_damage(&space, &vec![0.0; space.num_dofs()], &RefinementConfig::default()).unwrap();
    assert_eq!(count, 0);
    assert_eq!(same.mesh(), space.mesh());
}

/// Coefficients equal to one for functions whose Greville point lies in `y ∈ [a, b]`.
fn band_coefficients(space: &ThbSpace<2>, a: f64, b: f64) -> Vec<f64> {
    (0..space.num_dofs())
        .map(|i| {
            let g = greville(space, i);
            if g[1] >= a && g[1] <= b { 1.0 } else { 0.0 }
        })
        .collect()
}

#[test]
fn horizontal_band_eliminates_cross_talk() {
    let space = ThbSpace::new(HierarchicalMesh::unit(2, [8, 8], 2)).unwrap();
    let d = band_coefficients(&space, 0.4, 0.6);
    let damage = |p: &[f64; 2]| space.eval_field(&d, p).unwrap();
    assert!(damage(&[0.3, 0.5]) >= 0.95);
    // The unrefined basis couples both sides of the band.
    assert!(!cross_talk_violations(&space, damage, 128).is_empty());

    let (refined, count) = refine_for_damage(&space, &d, &RefinementConfig::default()).unwrap();
    assert!(count > 0);
    assert!(is_admissible(&refined, 2).unwrap());
    assert!(cross_talk_violations(&refined, damage, 128).is_empty());
    // No level-1 function is left across the band.
    for i in 0..refined.num_dofs() {
        let f = refined.function(i);
        if f.level == 1 {
            let (lo, hi) = refined.support(&f);
            let (blo, _) = refined.mesh().cell_bounds(&Cell::new(1, lo));
            let (_, bhi) = refined.mesh().cell_bounds(&Cell::new(1, hi));
            assert!(!(blo[1] < 0.5 && bhi[1] > 0.5), "level-1 function {:?} spans the band", f.index);
        }
    }
}

fn bar_damage(x: f64) -> f64 {
    if (0.4..=0.6).contains(&x) { 1.0 } else { 0.0 }
}

fn jump(space: &ThbSpace<1>, u: &[f64]) -> f64 {
    space.eval_field(u, &[0.6]).unwrap() - space.eval_field(u, &[0.4]).unwrap()
}

#[test]
fn one_dimensional_cross_talk() {
    let eta = 1e-8;
    let tp = ThbSpace::new(HierarchicalMesh::unit(2, [5], 1)).unwrap();
    let u = solve_bar(&tp, bar_damage, eta, -1.0, 1.0).unwrap();
    assert!(jump(&tp, &u) <= 1.0, "{}", jump(&tp, &u));

    let cells: Vec<_> = (1..=3).map(|i| Cell::new(0, [i])).collect();
    let thb = ThbSpace::new(HierarchicalMesh::unit(2, [5], 1).refine(&cells).unwrap()).unwrap();
    let u = solve_bar(&thb, bar_damage, eta, -1.0, 1.0).unwrap();
    assert!(jump(&thb, &u) >= 1.9, "{}", jump(&thb, &u));
    // No basis function (after truncation) is nonzero on both sides of the damaged interval.
    for i in 0..thb.num_dofs() {
        let mut e = vec![0.0; thb.num_dofs()];
        e[i] = 1.0;
        let nonzero = |x: f64| thb.eval_field(&e, &[x]).unwrap().abs() > 1e-12;
        let left = (1..40).any(|k| nonzero(0.4 * k as f64 / 40.0));
        let right = (1..40).any(|k| nonzero(0.6 + 0.4 * k as f64 / 40.0));
        assert!(!(left && right), "function {i} spans the damaged interval");
    }
}

#[test]
fn one_dimensional_damage_refinement_decouples_the_bar() {
    let space = ThbSpace::new(HierarchicalMesh::unit(2, [10], 1)).unwrap();
    // Functions 5 and 6 cover [0.4, 0.6] at coefficient one together with 4 and 7.
    let d: Vec<f64> = (0..space.num_dofs()).map(|i| if (5..=6).contains(&i) { 1.0 } else { 0.0 }).collect();
    let (refined, count) = refine_for_damage(&space, &d, &RefinementConfig::default()).unwrap();
    assert!(count > 0);
    for i in 0..refined.num_dofs() {
        let f = refined.function(i);
        if f.level == 0 {
            let (lo, hi) = refined.support(&f);
            let damaged = (lo[0]..=hi[0]).any(|c| {
                let (a, b) = refined.mesh().cell_bounds(&Cell::new(0, [c]));
                let mid = 0.5 * (a[0] + b[0]);
                space.eval_field(&d, &[mid]).unwrap() > 0.1
            });
            assert!(!damaged, "coarse function {i} still overlaps the damage");
        }
    }
}

struct Setup {
    mat: MaterialParams,
    spec: ModelSpec,
    bc: BoundaryConditions,
    tol: SolverTolerances,
}

fn setup() -> (Setup, Discretization, Vec<f64>) {
    let l0 = 0.05;
    let mat = MaterialParams {
        youngs_modulus: 210.0,
        poisson_ratio: 0.3,
        toughness: 2.7e-3,
        length_scale: l0,
        residual_stiffness: 1e-8,
    };
    let spec = ModelSpec::new(Family::At2, Order::Second, l0);
    let space = ThbSpace::new(HierarchicalMesh::unit(2, [8, 8], 2)).unwrap();
    let crack = CrackSegment::new([0.0, 0.5], [0.5, 0.5]).unwrap();
    let d = ipf_initialize(&space, &crack, &spec, l0, 4.0 * l0).unwrap();
    let bc = BoundaryConditions {
        dirichlet: vec![
            Dirichlet { edge: Edge::Bottom, component: 0, value: 0.0 },
            Dirichlet { edge: Edge::Bottom, component: 1, value: 0.0 },
            Dirichlet { edge: Edge::Top, component: 0, value: 0.0 },
            Dirichlet { edge: Edge::Top, component: 1, value: 1e-4 },
        ],
        ..Default::default()
    };
    let disc = Discretization::new(space).unwrap();
    (Setup { mat, spec, bc, tol: SolverTolerances::default() }, disc, d)
}

fn step(policy: SteppingPolicy, max_iterations: usize) -> (Discretization, thbfrac::Result<thbfrac::adaptivity::AdaptiveStep>) {
    let (s, disc, d) = setup();
    let refinement = RefinementConfig { policy, max_iterations, ..Default::default() };
    let prob = AdaptiveProblem { mat: &s.mat, spec: &s.spec, bc: &s.bc, tol: &s.tol, refinement: &refinement };
    let u = vec![0.0; 2 * disc.num_dofs()];
    (disc.clone(), adaptive_load_step(1, &prob, disc, u, d))
}

#[test]
fn explicit_policy_solves_once() {
    let (before, res) = step(SteppingPolicy::Explicit, 10);
    let res = res.unwrap();
    assert_eq!(res.refinement_iterations, 1);
    assert!(res.disc.space().elements().len() > before.space().elements().len());
    assert_eq!(res.d.len(), res.disc.num_dofs());
    assert_eq!(res.u.len(), 2 * res.disc.num_dofs());
    assert!(res.timings.projection > 0.0);
}

#[test]
fn implicit_policy_repeats_until_nothing_is_marked() {
    let (_, res) = step(SteppingPolicy::Implicit, 10);
    let res = res.unwrap();
    assert!(res.refinement_iterations >= 2);
    let (_, count) = refine_for_damage(res.disc.space(), &res.d, &RefinementConfig::default()).unwrap();
    assert_eq!(count, 0);
    assert!(is_admissible(res.disc.space(), 2).unwrap());
}

#[test]
fn refinement_cap_is_an_error() {
    let (_, res) = step(SteppingPolicy::Implicit, 1);
    assert!(matches!(res, Err(Error::NotConverged { method: "adaptive refinement", iterations: 1, .. })));
}
