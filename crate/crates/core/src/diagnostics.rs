//! Energies, local conservation-law residuals and errors against exact solutions.
//!
//! Modified density: `1/2 V^2 + 1/2 (dx U)^2 + 1/2 (dy U)^2 + R^2`.
//! Original density: the same with `1 - cos U` in place of `R^2`.
//!
//! The local law checked between consecutive levels is
//!
//! ```text
//! dt e - dx(At dx U[j1-1] * At V) - dy(At dy U[j2-1] * At V) = 0
//! ```
//!
//! which the linearly implicit scheme satisfies to round-off for the
//! modified density, and only to truncation error for the original one.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, MeshFunction};
use crate::operators::StencilSet;
use crate::problems::Problem;
use crate::schemes::SchemeState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityForm {
    /// `R^2` potential, conserved by the linearly implicit scheme.
    Modified,
    /// `1 - cos U` potential.
    Original,
}

fn density(
    st: &StencilSet,
    u: &MeshFunction,
    v: &MeshFunction,
    r: &MeshFunction,
    form: DensityForm,
) -> Result<MeshFunction> {
    u.same_grid(v)?;
    u.same_grid(r)?;
    let dx = st.delta_x(u)?;
    let dy = st.delta_y(u)?;
    let out: Vec<f64> = (0..u.len())
        .map(|i| {
            let pot = match form {
                DensityForm::Modified => r.values()[i] * r.values()[i],
                DensityForm::Original => 1.0 - u.values()[i].cos(),
            };
            0.5 * v.values()[i] * v.values()[i]
                + 0.5 * dx.values()[i] * dx.values()[i]
                + 0.5 * dy.values()[i] * dy.values()[i]
                + pot
        })
        .collect();
    Ok(MeshFunction::from_parts(u.grid(), out, vec![0.0; u.ghost().len()]))
}

pub fn local_energy_density(st: &StencilSet, state: &SchemeState) -> Result<MeshFunction> {
    density(st, &state.u, &state.v, &state.r, DensityForm::Modified)
}

pub fn original_energy_density(st: &StencilSet, state: &SchemeState) -> Result<MeshFunction> {
    density(st, &state.u, &state.v, &state.r, DensityForm::Original)
}

pub fn energy_density(st: &StencilSet, state: &SchemeState, form: DensityForm) -> Result<MeshFunction> {
    density(st, &state.u, &state.v, &state.r, form)
}

fn check_pair(st: &StencilSet, s0: &SchemeState, s1: &SchemeState, tau: f64) -> Result<()> {
    if !st.grid().is_periodic() {
        return Err(Error::Config("local conservation laws are checked on periodic meshes".into()));
    }
    if s1.step != s0.step + 1 {
        return Err(Error::State(format!("levels {} and {} are not consecutive", s0.step, s1.step)));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Config(format!("time step must be positive, got {tau}")));
    }
    s0.u.same_grid(&s1.u)
}

/// Per-node residual of the discrete local energy law between two consecutive levels.
pub fn local_law_residual(
    st: &StencilSet,
    s0: &SchemeState,
    s1: &SchemeState,
    tau: f64,
    form: DensityForm,
) -> Result<MeshFunction> {
    check_pair(st, s0, s1, tau)?;
    let grid = Arc::clone(st.grid());
    let e0 = energy_density(st, s0, form)?;
    let e1 = energy_density(st, s1, form)?;
    let ax = st.delta_x(&s0.u)?.zip_with(&st.delta_x(&s1.u)?, |a, b| (a + b) / 2.0)?;
    let ay = st.delta_y(&s0.u)?.zip_with(&st.delta_y(&s1.u)?, |a, b| (a + b) / 2.0)?;
    let av = s0.v.zip_with(&s1.v, |a, b| (a + b) / 2.0)?;
    let (ax, ay, av) = (ax.values(), ay.values(), av.values());
    let (east, west, north, south) = st.tables();
    let (h1, h2) = (grid.h1(), grid.h2());
    let out = (0..grid.len())
        .map(|i| {
            let dt = (e1.values()[i] - e0.values()[i]) / tau;
            let fx = (ax[i] * av[east[i]] - ax[west[i]] * av[i]) / h1;
            let fy = if grid.is_1d() { 0.0 } else { (ay[i] * av[north[i]] - ay[south[i]] * av[i]) / h2 };
            dt - fx - fy
        })
        .collect();
    Ok(MeshFunction::from_parts(&grid, out, Vec::new()))
}

/// `h1 h2 sum_j (e_j^{n+1} - e_j^n) / tau`, the global energy rate built node by node.
pub fn energy_rate(st: &StencilSet, s0: &SchemeState, s1: &SchemeState, tau: f64, form: DensityForm) -> Result<f64> {
    check_pair(st, s0, s1, tau)?;
    let e0 = energy_density(st, s0, form)?;
    let e1 = energy_density(st, s1, form)?;
    let rate: Vec<f64> = e1.values().iter().zip(e0.values()).map(|(a, b)| (a - b) / tau).collect();
    Ok(st.grid().cell_measure() * rate.iter().sum::<f64>())
}

pub fn global_energy_modified(st: &StencilSet, state: &SchemeState) -> Result<f64> {
    let e = local_energy_density(st, state)?;
    Ok(st.grid().cell_measure() * e.values().iter().sum::<f64>())
}

pub fn global_energy_original(st: &StencilSet, state: &SchemeState) -> Result<f64> {
    let e = original_energy_density(st, state)?;
    Ok(st.grid().cell_measure() * e.values().iter().sum::<f64>())
}

/// Energy conserved by the fully implicit scheme across the level pair `(U^{n-1}, U^n)`:
///
/// ```text
/// 1/2 ||(U^n - U^{n-1})/tau||^2 + 1/4 (|U^n|_1^2 + |U^{n-1}|_1^2)
///     + 1/2 h1 h2 sum (G(U^n) + G(U^{n-1})),   G = 1 - cos
/// ```
pub fn implicit_scheme_energy(st: &StencilSet, u_prev: &MeshFunction, u: &MeshFunction, tau: f64) -> Result<f64> {
    u.same_grid(u_prev)?;
    let w = st.grid().cell_measure();
    let semi = |f: &MeshFunction| -> Result<f64> {
        let dx = st.delta_x(f)?;
        let dy = st.delta_y(f)?;
        Ok(w * (dot(dx.values(), dx.values()) + dot(dy.values(), dy.values())))
    };
    let rate: Vec<f64> = u.values().iter().zip(u_prev.values()).map(|(a, b)| (a - b) / tau).collect();
    let kinetic = 0.5 * w * dot(&rate, &rate);
    let potential: f64 = u.values().iter().zip(u_prev.values()).map(|(a, b)| 2.0 - a.cos() - b.cos()).sum();
    Ok(kinetic + 0.25 * (semi(u)? + semi(u_prev)?) + 0.5 * w * potential)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub e_modified: f64,
    pub e_original: f64,
    /// `|E^n - E^0| / |E^0|` of the conserved energy.
    pub deviation: f64,
}

impl EnergyRecord {
    pub fn new(t: f64, e_modified: f64, e_original: f64, reference: f64) -> EnergyRecord {
        let deviation = if reference == 0.0 {
            (e_modified - reference).abs()
        } else {
            ((e_modified - reference) / reference).abs()
        };
        EnergyRecord { t, e_modified, e_original, deviation }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub l2_err: f64,
    pub linf_err: f64,
    pub h1_err: f64,
    pub v_l2_err: Option<f64>,
    pub r_l2_err: Option<f64>,
}

/// Errors of `state` against the problem's exact solution at `state.t`.
pub fn error_vs_exact(state: &SchemeState, problem: &Problem) -> Result<ErrorReport> {
    let exact = problem.exact.ok_or_else(|| Error::MissingExact(problem.name().to_string()))?;
    let grid = state.grid();
    let t = state.t;
    let u_exact = MeshFunction::from_fn(grid, |x, y| exact(x, y, t))?;
    let mut e = state.u.zip_with(&u_exact, |a, b| a - b)?;
    if grid.is_periodic() {
        e.ghost_mut().fill(0.0);
    }
    let r_err = state.r.zip_with(&u_exact, |r, u| r - (2.0 - u.cos()).sqrt())?;
    let v_l2_err = match problem.exact_velocity {
        Some(vel) => {
            let v_exact = MeshFunction::from_fn(grid, |x, y| vel(x, y, t))?;
            Some(state.v.zip_with(&v_exact, |a, b| a - b)?.l2())
        }
        None => None,
    };
    Ok(ErrorReport { l2_err: e.l2(), linf_err: e.linf(), h1_err: e.h1_norm(), v_l2_err, r_l2_err: Some(r_err.l2()) })
}

/// `log2(err_{k-1} / err_k)` for a ladder where both `h` and `tau` halve.
pub fn convergence_orders(levels: &[(f64, f64)], errors: &[f64]) -> Result<Vec<f64>> {
    if levels.len() != errors.len() {
        return Err(Error::Config(format!("{} levels but {} errors", levels.len(), errors.len())));
    }
    if levels.len() < 2 {
        return Err(Error::Config("orders need at least two levels".into()));
    }
    for (k, w) in levels.windows(2).enumerate() {
        let halves = |a: f64, b: f64| (a / b - 2.0).abs() <= 1e-9;
        if !halves(w[0].0, w[1].0) || !halves(w[0].1, w[1].1) {
            return Err(Error::Config(format!(
                "level {} -> {} does not halve (h, tau): {:?} -> {:?}",
                k,
                k + 1,
                w[0],
                w[1]
            )));
        }
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}
