//! Single-edge-notched benchmarks: run configuration, simulation driver and CSV output.

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adaptivity::{adaptive_load_step, refine_for_damage, AdaptiveProblem, RefinementConfig};
use crate::assembly::{dissipated_energy, reaction_force, BoundaryConditions, Dirichlet, Discretization, Edge};
use crate::hierarchy::{transfer_field, HierarchicalMesh, ThbSpace};
use crate::initialization::{init_mesh_around_crack, ipf_initialize, CrackSegment, InitConfig};
use crate::model::{Family, MaterialParams, ModelSpec, Order};
use crate::solvers::{relax_damage, staggered_load_step, FractureProblem, SolverTolerances, Timings};
use crate::{Error, Result};

/// Column header of the summary file.
pub const SUMMARY_HEADER: &str =
    "step,u,Fx,Fy,dissipation,dofs,elements,elAssemblyTime,elSolverTime,pfAssemblyTime,pfSolverTime,projectionTime";
/// Column header of the per-step solver iteration file.
pub const ITERATIONS_HEADER: &str = "step,staggeredIters,refinementIters";
/// Column header of contour files.
pub const CONTOUR_HEADER: &str = "index,x,y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    /// Uniform tensor-product space at the finest level.
    Tp,
    Thb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadCase {
    Tensile,
    Shear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    SenTensile,
    SenShear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Side of the square specimen (mm); the lower left corner is the origin.
    pub side: f64,
    pub crack: CrackSegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    pub order: Order,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub kind: MeshKind,
    pub degree: usize,
    /// Elements per side on level 0.
    pub base: usize,
    pub max_level: usize,
}

impl MeshConfig {
    /// Element size on `level` for a specimen of side `side`.
    pub fn level_size(&self, side: f64, level: usize) -> f64 {
        side / (self.base << level) as f64
    }
}

/// Displacement ramp up to `target` in increments of `step` (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadPhase {
    pub target: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory for CSV files and mesh dumps; nothing is written when absent.
    pub dir: Option<PathBuf>,
    pub contour_resolution: usize,
    /// Write a contour every this many steps (and always for the last step).
    pub contour_every: usize,
    pub mesh_dumps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            contour_resolution: 512,
            contour_every: 1,
            mesh_dumps: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub material: MaterialParams,
    pub model: ModelConfig,
    pub mesh: MeshConfig,
    pub load_case: LoadCase,
    pub schedule: Vec<LoadPhase>,
    #[serde(default)]
    pub tolerances: SolverTolerances,
    #[serde(default)]
    pub refinement: RefinementConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn preset(preset: Preset, resolution: Resolution) -> Self {
        let (l0, base, load_case, schedule) = match preset {
            Preset::SenTensile => (
                0.015,
                20,
                LoadCase::Tensile,
                vec![LoadPhase { target: 4.2e-3, step: 3e-4 }, LoadPhase { target: 6.0e-3, step: 3e-5 }],
            ),
            Preset::SenShear => (
                0.010,
                25,
                LoadCase::Shear,
                vec![LoadPhase { target: 9.0e-3, step: 3e-4 }, LoadPhase { target: 1.2e-2, step: 3e-5 }],
            ),
        };
        Self {
            geometry: Geometry {
                side: 1.0,
                crack: CrackSegment { start: [0.0, 0.5], end: [0.5, 0.5] },
            },
            material: MaterialParams {
                youngs_modulus: 210.0,
                poisson_ratio: 0.3,
                toughness: 2.7e-3,
                length_scale: l0,
                residual_stiffness: 1e-8,
            },
            model: ModelConfig { family: Family::At1, order: Order::Fourth },
            mesh: MeshConfig {
                kind: MeshKind::Thb,
                degree: 2,
                base,
                max_level: match resolution {
                    Resolution::Coarse => 3,
                    Resolution::Fine => 4,
                },
            },
            load_case,
            schedule,
            tolerances: SolverTolerances::default(),
            refinement: RefinementConfig::default(),
            init: InitConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Resolve a preset, an optional JSON file merged on top of it, and dotted
    /// `key=value` overrides, then validate.
    pub fn load(base: RunConfig, file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(&base).expect("configuration serialises");
        if let Some(path) = file {
            let text = fs::read_to_string(path)?;
            let patch: Value = serde_json::from_str(&text).map_err(|e| config_error("", format!("{}: {e}", path.display())))?;
            merge(&mut value, patch);
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec::new(self.model.family, self.model.order, self.material.length_scale)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.tolerances.validate()?;
        self.refinement.validate()?;
        self.init.validate()?;
        let side = self.geometry.side;
        if !(side.is_finite() && side > 0.0) {
            return Err(config_error("geometry.side", "must be positive"));
        }
        let c = &self.geometry.crack;
        if c.length() == 0.0 {
            return Err(config_error("geometry.crack", "crack segment has zero length"));
        }
        if c.start.iter().chain(&c.end).any(|&x| !(0.0..=side).contains(&x)) {
            return Err(config_error("geometry.crack", "crack must lie inside the specimen"));
        }
        if self.mesh.degree < 2 {
            return Err(config_error("mesh.degree", "at least 2 is needed for the fourth-order models"));
        }
        if self.mesh.base == 0 {
            return Err(config_error("mesh.base", "must be positive"));
        }
        if self.mesh.max_level > 12 {
            return Err(config_error("mesh.max_level", "at most 12 levels are supported"));
        }
        if self.output.contour_resolution < 2 {
            return Err(config_error("output.contour_resolution", "must be at least 2"));
        }
        if self.output.contour_every == 0 {
            return Err(config_error("output.contour_every", "must be positive"));
        }
        self.load_levels().map(|_| ())
    }

    /// Applied displacement of every load step.
    pub fn load_levels(&self) -> Result<Vec<f64>> {
        let mut levels = Vec::new();
        let mut u = 0.0;
        for (k, phase) in self.schedule.iter().enumerate() {
            let path = format!("schedule[{k}]");
            if !(phase.step > 0.0 && phase.target.is_finite()) {
                return Err(config_error(&path, "step must be positive and target finite"));
            }
            let n = (phase.target - u) / phase.step;
            let rounded = n.round();
            if rounded < 1.0 || (n - rounded).abs() > 1e-6 * rounded.max(1.0) {
                return Err(config_error(&path, "target must exceed the previous one by a whole number of steps"));
            }
            let start = u;
            for i in 1..=rounded as usize {
                levels.push(start + i as f64 * phase.step);
            }
            u = phase.target;
        }
        Ok(levels)
    }

    /// Dirichlet conditions at applied displacement `u`.
    pub fn boundary_conditions(&self, u: f64) -> BoundaryConditions {
        let top = match self.load_case {
            LoadCase::Tensile => [0.0, u],
            LoadCase::Shear => [u, 0.0],
        };
        let mut dirichlet = Vec::with_capacity(4);
        for c in 0..2 {
            dirichlet.push(Dirichlet { edge: Edge::Bottom, component: c, value: 0.0 });
            dirichlet.push(Dirichlet { edge: Edge::Top, component: c, value: top[c] });
        }
        BoundaryConditions { dirichlet, ..Default::default() }
    }

    /// DOFs per scalar field of the uniform space at the finest level.
    pub fn tp_dofs(&self) -> usize {
        let n = (self.mesh.base << self.mesh.max_level) + self.mesh.degree;
        n * n
    }
}

fn merge(into: &mut Value, patch: Value) {
    match (into, patch) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Set a dotted `key=value` path. The value is parsed as JSON unless the key
/// currently holds a string; unparsable values are taken as strings.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(assignment, "override must have the form key=value"))?;
    let mut slot = root;
    for part in key.split('.') {
        slot = match slot {
            Value::Object(map) => map.entry(part).or_insert(Value::Null),
            Value::Array(items) => {
                let i: usize = part.parse().map_err(|_| config_error(key, "expected an array index"))?;
                let len = items.len();
                items.get_mut(i).ok_or(Error::Config {
                    path: key.into(),
                    message: format!("index {i} out of range (length {len})"),
                })?
            }
            _ => return Err(config_error(key, "path descends into a scalar")),
        };
    }
    *slot = match slot {
        Value::String(_) => Value::String(raw.into()),
        _ => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into())),
    };
    Ok(())
}

/// One row of the summary together with the iteration counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub step: usize,
    /// Applied displacement (mm).
    pub u: f64,
    /// Reaction force on the top edge (kN).
    pub fx: f64,
    pub fy: f64,
    /// Dissipated energy (kN·mm).
    pub dissipation: f64,
    /// DOFs per scalar field.
    pub dofs: usize,
    pub elements: usize,
    pub el_assembly_time: f64,
    pub el_solver_time: f64,
    pub pf_assembly_time: f64,
    pub pf_solver_time: f64,
    pub projection_time: f64,
    pub staggered_iters: usize,
    pub refinement_iters: usize,
}

impl StepReport {
    fn summary_record(&self) -> Vec<String> {
        let mut r = vec![self.step.to_string()];
        r.extend([self.u, self.fx, self.fy, self.dissipation].map(|v| v.to_string()));
        r.push(self.dofs.to_string());
        r.push(self.elements.to_string());
        r.extend(
            [
                self.el_assembly_time,
                self.el_solver_time,
                self.pf_assembly_time,
                self.pf_solver_time,
                self.projection_time,
            ]
            .map(|v| v.to_string()),
        );
        r
    }

    fn set_timings(&mut self, t: &Timings) {
        self.el_assembly_time = t.el_assembly;
        self.el_solver_time = t.el_solver;
        self.pf_assembly_time = t.pf_assembly;
        self.pf_solver_time = t.pf_solver;
        self.projection_time = t.projection;
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

fn parse<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Domain(format!("csv: bad or missing `{name}`")))
}

/// Incremental writer for summary, iteration, contour and mesh files.
pub struct ReportWriter {
    dir: PathBuf,
    summary: csv::Writer<File>,
    iterations: csv::Writer<File>,
}

impl ReportWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut summary = csv::Writer::from_path(dir.join("summary.csv")).map_err(csv_error)?;
        summary.write_record(SUMMARY_HEADER.split(',')).map_err(csv_error)?;
        summary.flush()?;
        let mut iterations = csv::Writer::from_path(dir.join("iterations.csv")).map_err(csv_error)?;
        iterations.write_record(ITERATIONS_HEADER.split(',')).map_err(csv_error)?;
        iterations.flush()?;
        Ok(Self { dir: dir.to_path_buf(), summary, iterations })
    }

    /// Append a report; files are flushed so that a failing later step leaves them intact.
    pub fn push(&mut self, r: &StepReport) -> Result<()> {
        self.summary.write_record(r.summary_record()).map_err(csv_error)?;
        self.summary.flush()?;
        self.iterations
            .write_record([r.step, r.staggered_iters, r.refinement_iters].map(|v| v.to_string()))
            .map_err(csv_error)?;
        self.iterations.flush()?;
        Ok(())
    }

    pub fn contour(&self, step: usize, points: &[[f64; 2]]) -> Result<()> {
        write_contour(&self.dir.join(format!("contour_{step}.csv")), points)
    }

    pub fn mesh(&self, step: usize, mesh: &HierarchicalMesh<2>) -> Result<()> {
        fs::write(self.dir.join(format!("mesh_{step}.txt")), mesh.dump())?;
        Ok(())
    }
}

/// Write `summary.csv` and `iterations.csv` into `dir`.
pub fn write_reports(reports: &[StepReport], dir: &Path) -> Result<()> {
    let mut w = ReportWriter::create(dir)?;
    for r in reports {
        w.push(r)?;
    }
    Ok(())
}

/// Read back the files written by [`write_reports`]; iteration counts are zero when
/// `iterations.csv` is missing.
pub fn read_reports(dir: &Path) -> Result<Vec<StepReport>> {
    let mut rd = csv::Reader::from_path(dir.join("summary.csv")).map_err(csv_error)?;
    let header: Vec<String> = rd.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if header.join(",") != SUMMARY_HEADER {
        return Err(Error::Domain(format!("unexpected summary header `{}`", header.join(","))));
    }
    let mut reports = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_error)?;
        let f = |i: usize| parse::<f64>(rec.get(i), &header[i]);
        let n = |i: usize| parse::<usize>(rec.get(i), &header[i]);
        reports.push(StepReport {
            step: n(0)?,
            u: f(1)?,
            fx: f(2)?,
            fy: f(3)?,
            dissipation: f(4)?,
            dofs: n(5)?,
            elements: n(6)?,
            el_assembly_time: f(7)?,
            el_solver_time: f(8)?,
            pf_assembly_time: f(9)?,
            pf_solver_time: f(10)?,
            projection_time: f(11)?,
            ..Default::default()
        });
    }
    let path = dir.join("iterations.csv");
    if path.exists() {
        let mut rd = csv::Reader::from_path(path).map_err(csv_error)?;
        for (rec, r) in rd.records().zip(reports.iter_mut()) {
            let rec = rec.map_err(csv_error)?;
            if parse::<usize>(rec.get(0), "step")? != r.step {
                return Err(Error::Domain("iteration rows do not match the summary".into()));
            }
            r.staggered_iters = parse(rec.get(1), "staggeredIters")?;
            r.refinement_iters = parse(rec.get(2), "refinementIters")?;
        }
    }
    Ok(reports)
}

pub fn write_contour(path: &Path, points: &[[f64; 2]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CONTOUR_HEADER}")?;
    for (i, p) in points.iter().enumerate() {
        writeln!(w, "{i},{},{}", p[0], p[1])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_contour(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_error)?;
        out.push([parse(rec.get(1), "x")?, parse(rec.get(2), "y")?]);
    }
    Ok(out)
}

/// Points where the field crosses `level` along the edges of a uniform
/// `resolution × resolution` grid, located by bisection to 1e-6.
pub fn extract_contour(space: &ThbSpace<2>, d: &[f64], level: f64, resolution: usize) -> Vec<[f64; 2]> {
    let mesh = space.mesh();
    let (lo, hi) = (mesh.lower(), mesh.upper());
    let n = resolution;
    let coord = |k: usize, i: usize| if i == n { hi[k] } else { lo[k] + (hi[k] - lo[k]) * i as f64 / n as f64 };
    let node = |i: usize, j: usize| [coord(0, i), coord(1, j)];

    // Node values, one extraction per active element.
    let values: Vec<(usize, f64)> = space
        .elements()
        .par_iter()
        .flat_map_iter(|cell| {
            let ext = space.extraction(cell).expect("active element");
            let (clo, chi) = mesh.cell_bounds(cell);
            let dims = mesh.dims(cell.level);
            let range = |k: usize| {
                let a = ((clo[k] - lo[k]) / (hi[k] - lo[k]) * n as f64).floor() as usize;
                let b = (((chi[k] - lo[k]) / (hi[k] - lo[k]) * n as f64).ceil() as usize).min(n);
                (a..=b).filter(move |&i| {
                    // Same owner rule as point location: floor, clamped to the last cell.
                    let x = (coord(k, i) - lo[k]) / (hi[k] - lo[k]) * dims[k] as f64;
                    (x.floor() as usize).min(dims[k] - 1) == cell.index[k]
                })
            };
            let mut out = Vec::new();
            for j in range(1) {
                for i in range(0) {
                    let v: f64 = space.eval_with(&ext, &node(i, j), 0).iter().map(|b| d[b.dof] * b.value).sum();
                    out.push((j * (n + 1) + i, v));
                }
            }
            out
        })
        .collect();
    let mut grid = vec![f64::NAN; (n + 1) * (n + 1)];
    for (k, v) in values {
        grid[k] = v;
    }

    let eval = |p: &[f64; 2]| space.eval_field(d, p).unwrap_or(f64::NAN);
    let root = |a: [f64; 2], b: [f64; 2], fa: f64| {
        let (mut a, mut b) = (a, b);
        let above = fa > level;
        while (b[0] - a[0]).abs() + (b[1] - a[1]).abs() > 1e-6 {
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            if (eval(&m) > level) == above {
                a = m;
            } else {
                b = m;
            }
        }
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    };
    (0..=n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let grid = &grid;
            let mut pts = Vec::new();
            for i in 0..=n {
                let v = grid[j * (n + 1) + i];
                for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                    if ni > n || nj > n {
                        continue;
                    }
                    let w = grid[nj * (n + 1) + ni];
                    if (v > level) != (w > level) && v.is_finite() && w.is_finite() {
                        pts.push(root(node(i, j), node(ni, nj), v));
                    }
                }
            }
            pts
        })
        .collect()
}

/// State handed to the observer after every step (step 0 is the initial state).
pub struct StepState<'a> {
    pub report: &'a StepReport,
    pub disc: &'a Discretization,
    pub u: &'a [f64],
    pub d: &'a [f64],
    /// Smallest coefficient change of the damage against the previous step, after
    /// transferring the previous field onto the current space.
    pub min_increment: f64,
}

pub struct RunOutput {
    pub reports: Vec<StepReport>,
    pub disc: Discretization,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

/// Uniform mesh at the finest level, or the hierarchy pre-refined around the crack.
pub fn initial_mesh(cfg: &RunConfig) -> Result<HierarchicalMesh<2>> {
    let side = cfg.geometry.side;
    Ok(match cfg.mesh.kind {
        MeshKind::Tp => {
            let n = cfg.mesh.base << cfg.mesh.max_level;
            HierarchicalMesh::new(cfg.mesh.degree, [n, n], [0.0, 0.0], [side, side], 0)
        }
        MeshKind::Thb => {
            let n = cfg.mesh.base;
            let mesh = HierarchicalMesh::new(cfg.mesh.degree, [n, n], [0.0, 0.0], [side, side], cfg.mesh.max_level);
            let radius = cfg.init.mesh_radius * cfg.material.length_scale;
            init_mesh_around_crack(&mesh, &cfg.geometry.crack, radius, cfg.refinement.admissibility)?
        }
    })
}

/// Initial discretization and damage field with the time spent on them.
///
/// With `init.relax` the projected field is relaxed at zero load, and on adaptive meshes
/// the relaxed field is refined for and relaxed again until no element is marked.
pub fn initial_state(cfg: &RunConfig) -> Result<(Discretization, Vec<f64>, Timings)> {
    let spec = cfg.spec();
    let l0 = cfg.material.length_scale;
    let t = Instant::now();
    let space = ThbSpace::new(initial_mesh(cfg)?)?;
    let mut d = ipf_initialize(&space, &cfg.geometry.crack, &spec, l0, cfg.init.band_radius * l0)?;
    let mut disc = Discretization::new(space)?;
    let mut timings = Timings { projection: t.elapsed().as_secs_f64(), ..Default::default() };
    if !cfg.init.relax {
        return Ok((disc, d, timings));
    }
    for _ in 0..cfg.refinement.max_iterations {
        d = relax_damage(&disc, &d, &spec, &cfg.material, &cfg.tolerances, &mut timings)?;
        if cfg.mesh.kind == MeshKind::Tp {
            return Ok((disc, d, timings));
        }
        let t = Instant::now();
        let (space, count) = refine_for_damage(disc.space(), &d, &cfg.refinement)?;
        if count == 0 {
            timings.projection += t.elapsed().as_secs_f64();
            return Ok((disc, d, timings));
        }
        d = transfer_field(disc.space(), &space, &d, 1)?;
        disc = Discretization::new(space)?;
        timings.projection += t.elapsed().as_secs_f64();
    }
    Err(Error::NotConverged {
        method: "initial refinement",
        iterations: cfg.refinement.max_iterations,
        residual: f64::NAN,
    })
}

pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    run_simulation_with(cfg, |_| {})
}

/// Initialise the cracked specimen and follow the load schedule.
pub fn run_simulation_with<F: FnMut(&StepState)>(cfg: &RunConfig, mut observe: F) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.spec();
    let mut writer = match &cfg.output.dir {
        Some(dir) => Some(ReportWriter::create(dir)?),
        None => None,
    };

    let (mut disc, mut d, init_timings) = initial_state(cfg)?;
    let mut u = vec![0.0; 2 * disc.num_dofs()];

    let levels = cfg.load_levels()?;
    let mut reports = Vec::with_capacity(levels.len() + 1);
    let mut record = |step: usize,
                      applied: f64,
                      disc: &Discretization,
                      u: &[f64],
                      d: &[f64],
                      timings: Timings,
                      iters: (usize, usize),
                      min_increment: f64|
     -> Result<()> {
        let bc = cfg.boundary_conditions(applied);
        let [fx, fy] = reaction_force(disc, u, d, &cfg.material, &bc, Edge::Top)?;
        let mut r = StepReport {
            step,
            u: applied,
            fx,
            fy,
            dissipation: dissipated_energy(disc, d, &spec, &cfg.material)?,
            dofs: disc.num_dofs(),
            elements: disc.space().elements().len(),
            staggered_iters: iters.0,
            refinement_iters: iters.1,
            ..Default::default()
        };
        r.set_timings(&timings);
        log::info!(
            "step {step}: u = {applied:.4e}, F = ({fx:.4e}, {fy:.4e}), D = {:.4e}, dofs {}",
            r.dissipation,
            r.dofs
        );
        if let Some(w) = writer.as_mut() {
            w.push(&r)?;
            if step % cfg.output.contour_every == 0 || step == levels.len() {
                let pts = extract_contour(disc.space(), d, 0.5, cfg.output.contour_resolution);
                w.contour(step, &pts)?;
            }
            if cfg.output.mesh_dumps {
                w.mesh(step, disc.space().mesh())?;
            }
        }
        observe(&StepState { report: &r, disc, u, d, min_increment });
        reports.push(r);
        Ok(())
    };
    record(0, 0.0, &disc, &u, &d, init_timings, (0, 0), 0.0)?;

    for (k, &applied) in levels.iter().enumerate() {
        let step = k + 1;
        let bc = cfg.boundary_conditions(applied);
        let old_space = disc.space().clone();
        let (next_disc, next_u, next_d, timings, iters) = match cfg.mesh.kind {
            MeshKind::Tp => {
                let prob = FractureProblem {
                    disc: &disc,
                    mat: &cfg.material,
                    spec: &spec,
                    bc: &bc,
                    tol: &cfg.tolerances,
                };
                let res = staggered_load_step(&prob, &u, &d, &d)?;
                (disc, res.u, res.d, res.timings, (res.iterations, 1))
            }
            MeshKind::Thb => {
                let prob = AdaptiveProblem {
                    mat: &cfg.material,
                    spec: &spec,
                    bc: &bc,
                    tol: &cfg.tolerances,
                    refinement: &cfg.refinement,
                };
                let res = adaptive_load_step(step, &prob, disc, u, d.clone())?;
                (res.disc, res.u, res.d, res.timings, (res.staggered_iterations, res.refinement_iterations))
            }
        };
        let previous = if next_disc.space().mesh() == old_space.mesh() {
            d
        } else {
            transfer_field(&old_space, next_disc.space(), &d, 1)?
        };
        let min_increment = next_d.iter().zip(&previous).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        record(step, applied, &next_disc, &next_u, &next_d, timings, iters, min_increment)?;
        disc = next_disc;
        u = next_u;
        d = next_d;
    }
    Ok(RunOutput { reports, disc, u, d })
}
