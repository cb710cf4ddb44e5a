//! Experiment drivers behind the command-line tool: single runs, refinement
//! studies and scheme comparisons, with CSV/JSON output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    convergence_orders, error_vs_exact, global_energy_modified, global_energy_original, implicit_scheme_energy,
    EnergyRecord,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, MeshFunction};
use crate::linear_solver::SolveOptions;
use crate::operators::StencilSet;
use crate::problems::{DisplayTransform, Mirror, Problem, ProblemId};
use crate::schemes::{
    run_simulation, FixedPointOptions, Recorder, RunStats, SchemeKind, SchemeState, Simulation, TimeGrid,
};

pub const ENERGY_HEADER: [&str; 4] = ["t", "e_modified", "e_original", "deviation"];
pub const CONVERGENCE_HEADER: [&str; 9] =
    ["h", "tau", "l2", "l2_order", "linf", "linf_order", "h1", "h1_order", "cpu_s"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub fixed_point_tol: f64,
    pub fixed_point_max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolveOptions::default();
        let f = FixedPointOptions::default();
        SolverConfig { tol: s.tol, max_iter: s.max_iter, fixed_point_tol: f.tol, fixed_point_max_sweeps: f.max_sweeps }
    }
}

impl SolverConfig {
    fn apply(&self, sim: &mut Simulation) {
        sim.integrator.solve = SolveOptions { tol: self.tol, max_iter: self.max_iter };
        sim.integrator.fixed_point =
            FixedPointOptions { tol: self.fixed_point_tol, max_sweeps: self.fixed_point_max_sweeps };
    }

    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 || self.fixed_point_tol.is_nan() || self.fixed_point_tol <= 0.0 {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.fixed_point_max_sweeps == 0 || self.max_iter == Some(0) {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub scheme: SchemeKind,
    pub n1: usize,
    pub n2: usize,
    pub tau: f64,
    pub final_time: f64,
    /// Energy is recorded every this many steps (and at the last level).
    pub record_every: usize,
    pub snapshots: Vec<f64>,
    /// Emit `sin(u/2)` instead of `u` for problems that define it.
    pub transform: bool,
    /// Append the symmetric extension for problems that define one.
    pub mirror: bool,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(problem: ProblemId, scheme: SchemeKind, n1: usize, n2: usize, tau: f64, final_time: f64) -> RunConfig {
        RunConfig {
            problem,
            scheme,
            n1,
            n2,
            tau,
            final_time,
            record_every: 1,
            snapshots: Vec::new(),
            transform: true,
            mirror: false,
            solver: SolverConfig::default(),
            out: PathBuf::from("out"),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        self.problem.problem().grid(self.n1, self.n2)
    }

    /// Checks the configuration and returns the time grid and, per snapshot
    /// step, the requested times that map to it.
    pub fn validate(&self) -> Result<(TimeGrid, BTreeMap<usize, Vec<f64>>)> {
        if self.record_every == 0 {
            return Err(Error::Config("record cadence must be at least 1".into()));
        }
        self.solver.validate()?;
        let problem = self.problem.problem();
        if problem.dim == 1 && self.n2 != 1 {
            return Err(Error::Config(format!("{} is one-dimensional; n2 must be 1", problem.name())));
        }
        let tg = TimeGrid::new(self.tau, self.final_time)?;
        self.grid()?;
        Ok((tg, snapshot_steps(&self.snapshots, &tg)?))
    }
}

/// Matches requested times to the nearest step; anything further than `tau/2`
/// from a step inside `[0, T]` is rejected.
pub fn snapshot_steps(times: &[f64], tg: &TimeGrid) -> Result<BTreeMap<usize, Vec<f64>>> {
    let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &t in times {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Config(format!("snapshot time {t} is not a valid time")));
        }
        let k = (t / tg.tau).round();
        if k > tg.steps as f64 || (k * tg.tau - t).abs() > tg.tau / 2.0 {
            return Err(Error::Config(format!(
                "snapshot time {t} is not within tau/2 of a step in [0, {}]",
                tg.final_time()
            )));
        }
        out.entry(k as usize).or_default().push(t);
    }
    Ok(out)
}

/// Global energies of a state; the implicit scheme reports its own conserved
/// energy in the `e_modified` slot, from level 1 on.
pub fn energy_pair(st: &StencilSet, scheme: SchemeKind, state: &SchemeState, tau: f64) -> Result<(f64, f64)> {
    let original = global_energy_original(st, state)?;
    let conserved = match (scheme, &state.u_prev) {
        (SchemeKind::LiLeps, _) => global_energy_modified(st, state)?,
        (SchemeKind::EpFds, Some(prev)) => implicit_scheme_energy(st, prev, &state.u, tau)?,
        (SchemeKind::EpFds, None) => original,
    };
    Ok((conserved, original))
}

pub fn field_filename(t: f64) -> String {
    format!("field_t{t}.csv")
}

/// `(x, y, value)` rows of a field, optionally extended by reflection.
pub fn field_rows(
    u: &MeshFunction,
    transform: Option<DisplayTransform>,
    mirror: Option<Mirror>,
) -> Vec<(f64, f64, f64)> {
    let g = u.grid();
    let mut rows: Vec<(f64, f64, f64)> = (0..g.len())
        .map(|i| {
            let (x, y) = g.position(i);
            let v = u.values()[i];
            (x, y, transform.map_or(v, |d| d.apply(v)))
        })
        .collect();
    if let Some(m) = mirror {
        rows = mirror_rows(&rows, m);
    }
    rows
}

/// The rows followed by their reflections across each mirror line.
pub fn mirror_rows(rows: &[(f64, f64, f64)], m: Mirror) -> Vec<(f64, f64, f64)> {
    let mut out = rows.to_vec();
    if let Some(a) = m.x_axis {
        let reflected: Vec<_> = out.iter().map(|&(x, y, v)| (2.0 * a - x, y, v)).collect();
        out.extend(reflected);
    }
    if let Some(b) = m.y_axis {
        let reflected: Vec<_> = out.iter().map(|&(x, y, v)| (x, 2.0 * b - y, v)).collect();
        out.extend(reflected);
    }
    out
}

pub fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(ENERGY_HEADER)?;
    for r in records {
        w.serialize((r.t, r.e_modified, r.e_original, r.deviation))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(["x", "y", "value"])?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMeta {
    pub config: RunConfig,
    pub status: String,
    pub error: Option<String>,
    pub nodes: usize,
    pub h1: f64,
    pub h2: f64,
    pub steps_completed: usize,
    pub t_reached: f64,
    pub stats: RunStats,
    pub wall_seconds: f64,
    pub snapshot_files: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub energy: Vec<EnergyRecord>,
    pub stats: RunStats,
    pub state: SchemeState,
    pub wall_seconds: f64,
}

/// A failed run, with whatever was gathered before the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<RunOutcome>,
}

/// Integrates a configured run in memory, collecting the energy trace and
/// handing snapshot levels to `on_snapshot`. On failure the energy trace
/// runs up to the last good level.
pub fn simulate(
    cfg: &RunConfig,
    mut on_snapshot: impl FnMut(f64, &SchemeState) -> Result<()>,
) -> std::result::Result<RunOutcome, Box<RunFailure>> {
    let early = |error| Box::new(RunFailure { error, partial: None });
    let (tg, snaps) = cfg.validate().map_err(early)?;
    let problem = cfg.problem.problem();
    let grid = cfg.grid().map_err(early)?;
    let mut sim = Simulation::new(&problem, cfg.scheme, &grid, cfg.tau).map_err(early)?;
    cfg.solver.apply(&mut sim);
    let st = Arc::clone(sim.integrator.stencil());
    let started = Instant::now();

    let mut energy: Vec<EnergyRecord> = Vec::new();
    let mut reference: Option<f64> = None;
    let reference_step = reference_level(cfg.scheme);
    let record = |s: &SchemeState, energy: &mut Vec<EnergyRecord>| -> Result<()> {
        if energy.last().is_some_and(|r| r.t == s.t) {
            return Ok(());
        }
        let (conserved, original) = energy_pair(&st, cfg.scheme, s, cfg.tau)?;
        energy.push(EnergyRecord::new(s.t, conserved, original, conserved));
        Ok(())
    };
    let result = {
        let energy_ref = &mut energy;
        let reference_ref = &mut reference;
        let mut recorders = [
            Recorder::new(cfg.record_every, |s: &SchemeState| record(s, energy_ref)),
            Recorder::new(1, |s: &SchemeState| {
                if s.step == reference_step {
                    *reference_ref = Some(energy_pair(&st, cfg.scheme, s, cfg.tau)?.0);
                }
                if let Some(times) = snaps.get(&s.step) {
                    for &t in times {
                        on_snapshot(t, s)?;
                    }
                }
                Ok(())
            }),
        ];
        run_simulation(&mut sim, tg.steps, &mut recorders)
    };
    let wall_seconds = started.elapsed().as_secs_f64();
    if result.is_err() {
        // Make sure the last good level is in the trace.
        let _ = record(&sim.state, &mut energy);
    }
    let reference = reference.or_else(|| energy.first().map(|r| r.e_modified));
    if let Some(e_ref) = reference {
        for r in &mut energy {
            *r = EnergyRecord::new(r.t, r.e_modified, r.e_original, e_ref);
        }
    }
    let outcome = RunOutcome { energy, stats: sim.stats, state: sim.state, wall_seconds };
    match result {
        Ok(()) => Ok(outcome),
        Err(error) => Err(Box::new(RunFailure { error, partial: Some(outcome) })),
    }
}

/// Level whose conserved energy the deviation is measured against. The
/// implicit scheme's energy needs two levels, so its reference is level 1
/// and the level-0 row shows the offset left by the bootstrap step.
pub fn reference_level(scheme: SchemeKind) -> usize {
    match scheme {
        SchemeKind::LiLeps => 0,
        SchemeKind::EpFds => 1,
    }
}

/// `run`: writes `energy.csv`, `field_t<t>.csv` per snapshot and `meta.json` under `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let problem = cfg.problem.problem();
    let transform = if cfg.transform { problem.display } else { None };
    let mirror = if cfg.mirror { problem.mirror } else { None };
    let mut files = Vec::new();
    let result = simulate(cfg, |t, s| {
        let name = field_filename(t);
        write_field_csv(&cfg.out.join(&name), &field_rows(&s.u, transform, mirror))?;
        files.push(name);
        Ok(())
    });
    let grid = cfg.grid()?;
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(f) => match *f {
            RunFailure { error, partial: Some(o) } => (o, Some(error)),
            RunFailure { error, partial: None } => return Err(error),
        },
    };
    write_energy_csv(&cfg.out.join("energy.csv"), &outcome.energy)?;
    let meta = RunMeta {
        config: cfg.clone(),
        status: if error.is_some() { "failed".into() } else { "ok".into() },
        error: error.as_ref().map(|e| e.to_string()),
        nodes: grid.len(),
        h1: grid.h1(),
        h2: grid.h2(),
        steps_completed: outcome.state.step,
        t_reached: outcome.state.t,
        stats: outcome.stats,
        wall_seconds: outcome.wall_seconds,
        snapshot_files: files,
    };
    fs::write(cfg.out.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    match error {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeConfig {
    pub problem: ProblemId,
    pub scheme: SchemeKind,
    pub n1: usize,
    pub n2: usize,
    pub tau: f64,
    pub final_time: f64,
    pub levels: usize,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub tau: f64,
    pub l2: f64,
    pub l2_order: Option<f64>,
    pub linf: f64,
    pub linf_order: Option<f64>,
    pub h1: f64,
    pub h1_order: Option<f64>,
    pub cpu_s: f64,
}

/// Errors at `final_time` for `levels` runs with `(h, tau)` halved per level.
pub fn convergence_study(cfg: &ConvergeConfig) -> Result<Vec<ConvergenceRow>> {
    if cfg.levels < 2 {
        return Err(Error::Config("a convergence study needs at least 2 levels".into()));
    }
    cfg.solver.validate()?;
    let problem: Problem = cfg.problem.problem();
    if problem.exact.is_none() {
        return Err(Error::MissingExact(problem.name().to_string()));
    }
    let mut rows = Vec::with_capacity(cfg.levels);
    let mut ladder = Vec::with_capacity(cfg.levels);
    for k in 0..cfg.levels {
        let scale = 1usize << k;
        let n2 = if problem.dim == 1 { 1 } else { cfg.n2 * scale };
        let grid = problem.grid(cfg.n1 * scale, n2)?;
        let tau = cfg.tau / scale as f64;
        let tg = TimeGrid::new(tau, cfg.final_time)?;
        let mut sim = Simulation::new(&problem, cfg.scheme, &grid, tau)?;
        cfg.solver.apply(&mut sim);
        run_simulation(&mut sim, tg.steps, &mut [])?;
        let err = error_vs_exact(&sim.state, &problem)?;
        ladder.push((grid.h1(), tau));
        rows.push(ConvergenceRow {
            h: grid.h1(),
            tau,
            l2: err.l2_err,
            l2_order: None,
            linf: err.linf_err,
            linf_order: None,
            h1: err.h1_err,
            h1_order: None,
            cpu_s: sim.stats.stepping_seconds,
        });
    }
    let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
    let linf: Vec<f64> = rows.iter().map(|r| r.linf).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.h1).collect();
    let (o2, oi, oh) =
        (convergence_orders(&ladder, &l2)?, convergence_orders(&ladder, &linf)?, convergence_orders(&ladder, &h1)?);
    for k in 1..rows.len() {
        rows[k].l2_order = Some(o2[k - 1]);
        rows[k].linf_order = Some(oi[k - 1]);
        rows[k].h1_order = Some(oh[k - 1]);
    }
    Ok(rows)
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CONVERGENCE_HEADER)?;
    for r in rows {
        w.serialize((r.h, r.tau, r.l2, r.l2_order, r.linf, r.linf_order, r.h1, r.h1_order, r.cpu_s))?;
    }
    w.flush()?;
    Ok(())
}

/// `converge`: writes `convergence.csv` and `meta.json` under `cfg.out`.
pub fn cmd_converge(cfg: &ConvergeConfig) -> Result<Vec<ConvergenceRow>> {
    let rows = convergence_study(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    write_convergence_csv(&cfg.out.join("convergence.csv"), &rows)?;
    let meta = serde_json::json!({ "config": cfg, "rows": rows.len() });
    fs::write(cfg.out.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CpuRow {
    pub scheme: SchemeKind,
    pub nodes: usize,
    pub wall_seconds: f64,
}

/// Both schemes must share problem, mesh, step and horizon.
pub fn check_comparable(a: &RunConfig, b: &RunConfig) -> Result<()> {
    if a.tau != b.tau {
        return Err(Error::Config(format!("time steps differ: {} vs {}", a.tau, b.tau)));
    }
    if a.problem != b.problem || (a.n1, a.n2) != (b.n1, b.n2) || a.final_time != b.final_time {
        return Err(Error::Config("compared runs must share problem, mesh and final time".into()));
    }
    if a.scheme == b.scheme {
        return Err(Error::Config("compared runs use the same scheme".into()));
    }
    Ok(())
}

/// Runs each configuration in turn (sequentially, so timings do not contend)
/// and returns their outcomes in order.
pub fn compare_runs(runs: &[RunConfig]) -> Result<Vec<RunOutcome>> {
    for pair in runs.windows(2) {
        check_comparable(&pair[0], &pair[1])?;
    }
    runs.iter().map(|cfg| simulate(cfg, |_, _| Ok(())).map_err(|f| f.error)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub base: RunConfig,
    /// Extra meshes, each doubling `n1`/`n2`, timed at the same `tau`.
    pub refinements: usize,
}

/// `compare`: writes `energy_<scheme>.csv` for the base mesh, `cpu.csv` with
/// stepping wall time per scheme and mesh, and `meta.json`.
pub fn cmd_compare(cfg: &CompareConfig) -> Result<Vec<CpuRow>> {
    fs::create_dir_all(&cfg.base.out)?;
    let problem = cfg.base.problem.problem();
    let mut cpu = Vec::new();
    for k in 0..=cfg.refinements {
        let scale = 1usize << k;
        let runs: Vec<RunConfig> = [SchemeKind::LiLeps, SchemeKind::EpFds]
            .into_iter()
            .map(|scheme| RunConfig {
                scheme,
                n1: cfg.base.n1 * scale,
                n2: if problem.dim == 1 { 1 } else { cfg.base.n2 * scale },
                snapshots: Vec::new(),
                ..cfg.base.clone()
            })
            .collect();
        let outcomes = compare_runs(&runs)?;
        for (run, out) in runs.iter().zip(&outcomes) {
            if k == 0 {
                write_energy_csv(&cfg.base.out.join(format!("energy_{}.csv", run.scheme)), &out.energy)?;
            }
            cpu.push(CpuRow { scheme: run.scheme, nodes: run.n1 * run.n2, wall_seconds: out.stats.stepping_seconds });
        }
    }
    let mut w = csv::Writer::from_path(cfg.base.out.join("cpu.csv"))?;
    for row in &cpu {
        w.serialize(row)?;
    }
    w.flush()?;
    let meta = serde_json::json!({ "config": cfg, "cpu": cpu });
    fs::write(cfg.base.out.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(cpu)
}
