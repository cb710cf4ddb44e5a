//! Time integrators.
//!
//! The linearly implicit scheme advances `(U, V, R)` with one SPD solve per
//! step: eliminating `V^{n+1}` and `R^{n+1}` from the coupled three-field
//! update leaves
//!
//! ```text
//! [I - (tau^2/4) Lap + (tau^2/8) D^2] U^{n+1}
//!     = U^n + tau V^n + (tau^2/4) Lap U^n + (tau^2/8) D^2 U^n - (tau^2/2) D R^n
//! V^{n+1} = 2 (U^{n+1} - U^n) / tau - V^n
//! R^{n+1} = R^n + (D/2) (U^{n+1} - U^n)
//! ```
//!
//! with `D = diag(coupling(3/2 U^n - 1/2 U^{n-1}))`, or `coupling(U^0)` on
//! the bootstrap step.
//!
//! The comparison scheme is the fully implicit three-level
//! discrete-gradient scheme
//!
//! ```text
//! (U^{n+1} - 2U^n + U^{n-1}) / tau^2 = Lap (U^{n+1} + U^{n-1}) / 2
//!     - (cos U^{n-1} - cos U^{n+1}) / (U^{n+1} - U^{n-1})
//! ```
//!
//! solved by fixed-point iteration, started from one linearly implicit step.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MeshFunction};
use crate::linear_solver::{pcg_solve, SolveOptions, SystemOperator};
use crate::operators::{coupling, StencilSet};
use crate::problems::{Problem, SpaceTimeFn};

/// Below this half-gap the discrete gradient of `1 - cos` is replaced by
/// its limit, `sin` of the midpoint.
pub const DISCRETE_GRADIENT_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    LiLeps,
    EpFds,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::LiLeps => "li-leps",
            SchemeKind::EpFds => "ep-fds",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "li-leps" => Ok(SchemeKind::LiLeps),
            "ep-fds" => Ok(SchemeKind::EpFds),
            other => Err(Error::Config(format!("unknown scheme `{other}` (expected li-leps or ep-fds)"))),
        }
    }
}

/// One time level. `r` is only initialised from `u`; afterwards it is evolved.
#[derive(Clone, Debug)]
pub struct SchemeState {
    pub t: f64,
    pub step: usize,
    pub u_prev: Option<MeshFunction>,
    pub u: MeshFunction,
    pub v: MeshFunction,
    pub r: MeshFunction,
}

impl SchemeState {
    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    /// The state with `u = v = 0`, `r = 1`, a fixed point of both schemes.
    pub fn rest(grid: &Arc<Grid>) -> SchemeState {
        SchemeState {
            t: 0.0,
            step: 0,
            u_prev: None,
            u: MeshFunction::zeros(grid),
            v: MeshFunction::zeros(grid),
            r: MeshFunction::constant(grid, 1.0),
        }
    }

    pub fn auxiliary_from(u: &MeshFunction) -> MeshFunction {
        u.map(|x| (2.0 - x.cos()).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Uniform steps of `tau` covering `[0, final_time]`; `tau` must divide
    /// `final_time` to within 1e-9 of a step.
    pub fn new(tau: f64, final_time: f64) -> Result<TimeGrid> {
        if tau.is_nan() || tau <= 0.0 || !tau.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {tau}")));
        }
        if final_time.is_nan() || final_time < 0.0 || !final_time.is_finite() {
            return Err(Error::Config(format!("final time must be non-negative, got {final_time}")));
        }
        let m = (final_time / tau).round();
        if (m * tau - final_time).abs() > 1e-9 * tau {
            return Err(Error::Config(format!("tau = {tau} does not divide T = {final_time}")));
        }
        Ok(TimeGrid { tau, steps: m as usize })
    }

    pub fn final_time(&self) -> f64 {
        self.steps as f64 * self.tau
    }
}

/// Samples the initial data: `u = f`, `v = g`, `r = sqrt(2 - cos f)`.
///
/// On Dirichlet meshes the ghosts of `u` come from the exact solution at `t = 0`.
pub fn init_state(problem: &Problem, grid: &Arc<Grid>) -> Result<SchemeState> {
    let f = problem.initial_u;
    let u = match (grid.is_periodic(), problem.exact) {
        (false, Some(exact)) => MeshFunction::from_fn(grid, |x, y| exact(x, y, 0.0))?,
        (false, None) => return Err(Error::MissingExact(problem.name().to_string())),
        (true, _) => MeshFunction::from_fn(grid, f)?,
    };
    let v = MeshFunction::from_fn(grid, problem.initial_v)?;
    let r = SchemeState::auxiliary_from(&u);
    Ok(SchemeState { t: 0.0, step: 0, u_prev: None, u, v, r })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    /// Stop when `||W_{k+1} - W_k||_h <= tol * max(1, ||W_{k+1}||_h)`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tol: 1e-14, max_sweeps: 100 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub cg_iterations: usize,
    pub fixed_point_sweeps: usize,
}

/// Stepping machinery shared by both schemes for one mesh.
#[derive(Clone, Debug)]
pub struct Integrator {
    stencil: Arc<StencilSet>,
    boundary: Option<SpaceTimeFn>,
    pub solve: SolveOptions,
    pub fixed_point: FixedPointOptions,
}

impl Integrator {
    pub fn new(problem: &Problem, grid: &Arc<Grid>) -> Result<Integrator> {
        let boundary = if grid.is_periodic() {
            None
        } else {
            Some(problem.exact.ok_or_else(|| Error::MissingExact(problem.name().to_string()))?)
        };
        Ok(Integrator {
            stencil: StencilSet::new(grid),
            boundary,
            solve: SolveOptions::default(),
            fixed_point: FixedPointOptions::default(),
        })
    }

    /// Integrator for a periodic mesh with no problem attached.
    pub fn periodic(grid: &Arc<Grid>) -> Result<Integrator> {
        if !grid.is_periodic() {
            return Err(Error::Config("Dirichlet meshes need boundary data".into()));
        }
        Ok(Integrator {
            stencil: StencilSet::new(grid),
            boundary: None,
            solve: SolveOptions::default(),
            fixed_point: FixedPointOptions::default(),
        })
    }

    pub fn stencil(&self) -> &Arc<StencilSet> {
        &self.stencil
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.stencil.grid()
    }

    /// Bootstrap step from level 0, with the coupling evaluated at `U^0`.
    pub fn li_leps_first_step(&self, state: &SchemeState, tau: f64) -> Result<(SchemeState, StepReport)> {
        if state.u_prev.is_some() {
            return Err(Error::State("bootstrap step called after level 0".into()));
        }
        let d: Vec<f64> = state.u.values().iter().map(|&x| coupling(x)).collect();
        self.li_leps_update(state, tau, d)
    }

    /// Regular step, with the coupling evaluated at `(3U^n - U^{n-1})/2`.
    pub fn li_leps_step(&self, state: &SchemeState, tau: f64) -> Result<(SchemeState, StepReport)> {
        let prev = state
            .u_prev
            .as_ref()
            .ok_or_else(|| Error::State("regular step needs U^{n-1}; run the bootstrap step first".into()))?;
        state.u.same_grid(prev)?;
        let d: Vec<f64> =
            state.u.values().iter().zip(prev.values()).map(|(&a, &b)| coupling((3.0 * a - b) / 2.0)).collect();
        self.li_leps_update(state, tau, d)
    }

    fn li_leps_update(&self, state: &SchemeState, tau: f64, d: Vec<f64>) -> Result<(SchemeState, StepReport)> {
        check_tau(tau)?;
        let grid = Arc::clone(self.grid());
        let n = grid.len();
        let lap_coef = tau * tau / 4.0;
        let diag_coef = tau * tau / 8.0;
        let (u, v, r) = (state.u.values(), state.v.values(), state.r.values());

        let lap_u = self.stencil.laplacian(&state.u)?;
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let dd = d[i] * d[i];
                u[i] + tau * v[i] + lap_coef * lap_u.values()[i] + diag_coef * dd * u[i] - tau * tau / 2.0 * d[i] * r[i]
            })
            .collect();
        let bc = self.boundary_field(state.t + tau)?;
        if let Some(bc) = &bc {
            self.lift(&mut rhs, lap_coef, bc);
        }
        let rhs = MeshFunction::from_parts(&grid, rhs, vec![0.0; grid.ghost_len()]);
        rhs.ensure_finite()?;
        let op = SystemOperator::with_coefficients(&self.stencil, lap_coef, diag_coef, Some(d.clone()));
        let (mut u_next, report) = pcg_solve(&op, &rhs, Some(&state.u), &self.solve)?;
        if let Some(bc) = &bc {
            u_next.ghost_mut().copy_from_slice(bc.ghost());
        }
        let un = u_next.values();
        let v_next: Vec<f64> = (0..n).map(|i| 2.0 * (un[i] - u[i]) / tau - v[i]).collect();
        let r_next: Vec<f64> = (0..n).map(|i| r[i] + d[i] / 2.0 * (un[i] - u[i])).collect();
        let next = SchemeState {
            t: state.t + tau,
            step: state.step + 1,
            u_prev: Some(state.u.clone()),
            v: MeshFunction::from_parts(&grid, v_next, vec![0.0; grid.ghost_len()]),
            r: MeshFunction::from_parts(&grid, r_next, vec![0.0; grid.ghost_len()]),
            u: u_next,
        };
        ensure_state_finite(&next)?;
        Ok((next, StepReport { cg_iterations: report.iterations, fixed_point_sweeps: 0 }))
    }

    /// One step of the fully implicit comparison scheme. Needs `U^{n-1}`.
    pub fn ep_fds_step(&self, state: &SchemeState, tau: f64) -> Result<(SchemeState, StepReport)> {
        check_tau(tau)?;
        let prev = state
            .u_prev
            .as_ref()
            .ok_or_else(|| Error::State("the implicit scheme needs two starting levels".into()))?;
        state.u.same_grid(prev)?;
        let grid = Arc::clone(self.grid());
        let n = grid.len();
        let lap_coef = tau * tau / 2.0;
        let (u, um) = (state.u.values(), prev.values());
        let lap_um = self.stencil.laplacian(prev)?;
        let base: Vec<f64> = (0..n).map(|i| 2.0 * u[i] - um[i] + lap_coef * lap_um.values()[i]).collect();
        let bc = self.boundary_field(state.t + tau)?;
        let op = SystemOperator::implicit_wave(&self.stencil, tau);
        // The inner solve must resolve updates well below the outer tolerance.
        let inner = SolveOptions { tol: self.solve.tol.min(0.1 * self.fixed_point.tol), ..self.solve };

        let mut w =
            MeshFunction::from_parts(&grid, (0..n).map(|i| 2.0 * u[i] - um[i]).collect(), vec![0.0; grid.ghost_len()]);
        let mut report = StepReport::default();
        let mut converged = false;
        let mut update = f64::INFINITY;
        for _ in 0..self.fixed_point.max_sweeps {
            let wv = w.values();
            let mut rhs: Vec<f64> = (0..n).map(|i| base[i] - tau * tau * discrete_gradient(wv[i], um[i])).collect();
            if let Some(bc) = &bc {
                self.lift(&mut rhs, lap_coef, bc);
            }
            let rhs = MeshFunction::from_parts(&grid, rhs, vec![0.0; grid.ghost_len()]);
            rhs.ensure_finite()?;
            let (w_next, solve) = pcg_solve(&op, &rhs, Some(&w), &inner)?;
            report.cg_iterations += solve.iterations;
            report.fixed_point_sweeps += 1;
            let diff: Vec<f64> = w_next.values().iter().zip(w.values()).map(|(a, b)| a - b).collect();
            update = (grid.cell_measure() * crate::grid::dot(&diff, &diff)).sqrt();
            w = w_next;
            if update <= self.fixed_point.tol * w.l2().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FixedPointDiverged { iterations: report.fixed_point_sweeps, update });
        }
        if let Some(bc) = &bc {
            w.ghost_mut().copy_from_slice(bc.ghost());
        }
        let wv = w.values();
        let v = state.v.values();
        let v_next: Vec<f64> = (0..n).map(|i| 2.0 * (wv[i] - u[i]) / tau - v[i]).collect();
        let next = SchemeState {
            t: state.t + tau,
            step: state.step + 1,
            u_prev: Some(state.u.clone()),
            v: MeshFunction::from_parts(&grid, v_next, vec![0.0; grid.ghost_len()]),
            r: SchemeState::auxiliary_from(&w),
            u: w,
        };
        ensure_state_finite(&next)?;
        Ok((next, report))
    }

    /// Exact boundary values (ring and ghosts) at time `t`, on Dirichlet meshes.
    fn boundary_field(&self, t: f64) -> Result<Option<MeshFunction>> {
        match self.boundary {
            None => Ok(None),
            Some(exact) => {
                let grid = self.grid();
                let mut bc = MeshFunction::from_fn(grid, |x, y| exact(x, y, t))?;
                for i in 0..grid.len() {
                    if !grid.is_boundary(i) {
                        bc.values_mut()[i] = 0.0;
                    }
                }
                Ok(Some(bc))
            }
        }
    }

    /// Moves known boundary values into the right-hand side of
    /// `(I - lap_coef Lap + ...) x = rhs`: ring rows become `x = bc`, and
    /// interior rows gain `lap_coef` times the ring/ghost part of the stencil.
    fn lift(&self, rhs: &mut [f64], lap_coef: f64, bc: &MeshFunction) {
        let mut coupling_part = vec![0.0; rhs.len()];
        self.stencil.laplacian_into(bc.values(), bc.ghost(), &mut coupling_part);
        for (i, value) in rhs.iter_mut().enumerate() {
            if self.stencil.is_interior(i) {
                *value += lap_coef * coupling_part[i];
            } else {
                *value = bc.values()[i];
            }
        }
    }
}

/// `(cos c - cos a) / (a - c)`, the discrete gradient of `1 - cos`,
/// evaluated as `sin(m) sin(g) / g` with `m`, `g` the midpoint and half-gap
/// to avoid cancellation.
pub fn discrete_gradient(a: f64, c: f64) -> f64 {
    let half_gap = (a - c) / 2.0;
    let mid = ((a + c) / 2.0).sin();
    if half_gap.abs() < DISCRETE_GRADIENT_THRESHOLD {
        mid
    } else {
        mid * half_gap.sin() / half_gap
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("time step must be positive, got {tau}")))
    }
}

fn ensure_state_finite(state: &SchemeState) -> Result<()> {
    state.u.ensure_finite()?;
    state.v.ensure_finite()?;
    state.r.ensure_finite()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub cg_iterations: usize,
    pub max_cg_iterations: usize,
    pub fixed_point_sweeps: usize,
    /// Wall-clock time spent inside step calls.
    pub stepping_seconds: f64,
    /// Steps taken by the linearly implicit bootstrap (1 for the implicit scheme).
    pub bootstrap_steps: usize,
}

/// A scheme bound to a problem, mesh and time step, advanced one level at a time.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub integrator: Integrator,
    pub scheme: SchemeKind,
    pub tau: f64,
    pub state: SchemeState,
    pub stats: RunStats,
    origin: f64,
}

impl Simulation {
    pub fn new(problem: &Problem, scheme: SchemeKind, grid: &Arc<Grid>, tau: f64) -> Result<Simulation> {
        check_tau(tau)?;
        Ok(Simulation {
            integrator: Integrator::new(problem, grid)?,
            scheme,
            tau,
            state: init_state(problem, grid)?,
            stats: RunStats::default(),
            origin: 0.0,
        })
    }

    pub fn from_state(integrator: Integrator, scheme: SchemeKind, tau: f64, state: SchemeState) -> Result<Simulation> {
        check_tau(tau)?;
        let origin = state.t - state.step as f64 * tau;
        Ok(Simulation { integrator, scheme, tau, state, stats: RunStats::default(), origin })
    }

    /// Advances one level; level 0 always takes the linearly implicit bootstrap.
    pub fn advance(&mut self) -> Result<()> {
        let started = Instant::now();
        let bootstrap = self.state.u_prev.is_none();
        let (next, report) = if bootstrap {
            self.integrator.li_leps_first_step(&self.state, self.tau)?
        } else {
            match self.scheme {
                SchemeKind::LiLeps => self.integrator.li_leps_step(&self.state, self.tau)?,
                SchemeKind::EpFds => self.integrator.ep_fds_step(&self.state, self.tau)?,
            }
        };
        self.stats.stepping_seconds += started.elapsed().as_secs_f64();
        // Recompute the clock from the step count so it does not drift.
        let mut next = next;
        next.t = self.origin + next.step as f64 * self.tau;
        self.stats.steps += 1;
        self.stats.cg_iterations += report.cg_iterations;
        self.stats.max_cg_iterations = self.stats.max_cg_iterations.max(report.cg_iterations);
        self.stats.fixed_point_sweeps += report.fixed_point_sweeps;
        if bootstrap && self.scheme == SchemeKind::EpFds {
            self.stats.bootstrap_steps += 1;
        }
        self.state = next;
        Ok(())
    }
}

pub type RecordFn<'a> = Box<dyn FnMut(&SchemeState) -> Result<()> + 'a>;

/// Callback invoked on level 0, every `every` levels, and on the final level.
pub struct Recorder<'a> {
    pub every: usize,
    pub callback: RecordFn<'a>,
}

impl<'a> Recorder<'a> {
    pub fn new(every: usize, callback: impl FnMut(&SchemeState) -> Result<()> + 'a) -> Recorder<'a> {
        Recorder { every: every.max(1), callback: Box::new(callback) }
    }
}

/// Runs `time_grid.steps` levels. On failure the recorders have already seen
/// every good level up to the failing step.
pub fn run(
    problem: &Problem,
    scheme: SchemeKind,
    grid: &Arc<Grid>,
    time_grid: &TimeGrid,
    recorders: &mut [Recorder<'_>],
) -> Result<(SchemeState, RunStats)> {
    let mut sim = Simulation::new(problem, scheme, grid, time_grid.tau)?;
    run_simulation(&mut sim, time_grid.steps, recorders)?;
    Ok((sim.state, sim.stats))
}

pub fn run_simulation(sim: &mut Simulation, steps: usize, recorders: &mut [Recorder<'_>]) -> Result<()> {
    let first = sim.state.step;
    let last = first + steps;
    for rec in recorders.iter_mut() {
        (rec.callback)(&sim.state)?;
    }
    while sim.state.step < last {
        sim.advance()?;
        let step = sim.state.step;
        for rec in recorders.iter_mut() {
            if step.is_multiple_of(rec.every) || step == last {
                (rec.callback)(&sim.state)?;
            }
        }
    }
    Ok(())
}
