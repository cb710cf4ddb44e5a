//! Initial/boundary data for the sine-Gordon test problems.
//!
//! Every 2D problem except the line kink is run periodic; the line kink is
//! the accuracy test with boundary values taken from its exact solution.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

pub type SpaceFn = fn(f64, f64) -> f64;
pub type SpaceTimeFn = fn(f64, f64, f64) -> f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemId {
    #[serde(rename = "double-pole-1d")]
    DoublePole1d,
    #[serde(rename = "line-kink-2d")]
    LineKink2d,
    #[serde(rename = "ring")]
    Ring,
    #[serde(rename = "breather")]
    Breather,
    #[serde(rename = "collide2")]
    Collide2,
    #[serde(rename = "collide4")]
    Collide4,
}

impl ProblemId {
    pub const ALL: [ProblemId; 6] = [
        ProblemId::DoublePole1d,
        ProblemId::LineKink2d,
        ProblemId::Ring,
        ProblemId::Breather,
        ProblemId::Collide2,
        ProblemId::Collide4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::DoublePole1d => "double-pole-1d",
            ProblemId::LineKink2d => "line-kink-2d",
            ProblemId::Ring => "ring",
            ProblemId::Breather => "breather",
            ProblemId::Collide2 => "collide2",
            ProblemId::Collide4 => "collide4",
        }
    }

    pub fn problem(self) -> Problem {
        match self {
            ProblemId::DoublePole1d => double_pole_1d(),
            ProblemId::LineKink2d => line_kink_2d(),
            ProblemId::Ring => circular_ring(),
            ProblemId::Breather => elliptical_breather(),
            ProblemId::Collide2 => two_ring_collision(),
            ProblemId::Collide4 => four_ring_collision(),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Domain {
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }
    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }
}

/// Post-processing applied to emitted fields; the figures show `sin(u/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplayTransform {
    HalfAngleSine,
}

impl DisplayTransform {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            DisplayTransform::HalfAngleSine => (u / 2.0).sin(),
        }
    }
}

/// Symmetry lines across which a snapshot is extended for display.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mirror {
    pub x_axis: Option<f64>,
    pub y_axis: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct Problem {
    pub id: ProblemId,
    pub dim: usize,
    pub domain: Domain,
    pub boundary: Boundary,
    pub initial_u: SpaceFn,
    pub initial_v: SpaceFn,
    pub exact: Option<SpaceTimeFn>,
    pub exact_velocity: Option<SpaceTimeFn>,
    pub display: Option<DisplayTransform>,
    pub mirror: Option<Mirror>,
}

impl Problem {
    pub fn by_name(name: &str) -> Result<Problem> {
        Ok(name.parse::<ProblemId>()?.problem())
    }

    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    /// Mesh with `n1` (and in 2D `n2`) intervals per axis.
    pub fn grid(&self, n1: usize, n2: usize) -> Result<Arc<Grid>> {
        let d = &self.domain;
        if self.dim == 1 {
            Grid::new_1d(d.x_lo, d.x_hi, n1, self.boundary)
        } else {
            Grid::new(d.x_lo, d.x_hi, d.y_lo, d.y_hi, n1, n2, self.boundary)
        }
    }

    /// Interval counts giving spacing `h` on both axes; the extents must be
    /// integer multiples of `h` to within 1e-9 relative.
    pub fn intervals_for_spacing(&self, h: f64) -> Result<(usize, usize)> {
        let count = |len: f64| -> Result<usize> {
            let n = (len / h).round();
            if h.is_nan() || h <= 0.0 || n < 1.0 || ((n * h - len) / len).abs() > 1e-9 {
                return Err(Error::Config(format!("spacing {h} does not divide extent {len}")));
            }
            Ok(n as usize)
        };
        let n1 = count(self.domain.width())?;
        let n2 = if self.dim == 1 { 1 } else { count(self.domain.height())? };
        Ok((n1, n2))
    }

    /// `n2` matching the x-spacing of `n1` intervals.
    pub fn matching_n2(&self, n1: usize) -> usize {
        if self.dim == 1 {
            1
        } else {
            ((n1 as f64) * self.domain.height() / self.domain.width()).round().max(1.0) as usize
        }
    }

    /// Checks `exact(., ., 0) = f` and `d/dt exact(., ., 0) = g` on an 11x11
    /// sample of the domain; values to 1e-12, the time derivative (sixth-order
    /// central difference) to 1e-11.
    pub fn check_consistency(&self) -> Result<()> {
        let Some(exact) = self.exact else {
            return Ok(());
        };
        let d = &self.domain;
        let ys: Vec<f64> =
            if self.dim == 1 { vec![0.0] } else { (0..11).map(|k| d.y_lo + d.height() * k as f64 / 10.0).collect() };
        for i in 0..11 {
            let x = d.x_lo + d.width() * i as f64 / 10.0;
            for &y in &ys {
                let f = (self.initial_u)(x, y);
                if (exact(x, y, 0.0) - f).abs() > 1e-12 {
                    return Err(Error::Config(format!("{}: exact(., 0) != f at ({x}, {y})", self.name())));
                }
                let g = (self.initial_v)(x, y);
                let dt = time_derivative(|t| exact(x, y, t), 0.0, 2e-3);
                if (dt - g).abs() > 1e-11 * g.abs().max(1.0) {
                    return Err(Error::Config(format!(
                        "{}: d/dt exact(., 0) = {dt} but g = {g} at ({x}, {y})",
                        self.name()
                    )));
                }
                if let Some(v) = self.exact_velocity {
                    if (v(x, y, 0.0) - g).abs() > 1e-12 {
                        return Err(Error::Config(format!("{}: exact velocity != g at ({x}, {y})", self.name())));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sixth-order central difference.
pub(crate) fn time_derivative(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let d1 = f(t + h) - f(t - h);
    let d2 = f(t + 2.0 * h) - f(t - 2.0 * h);
    let d3 = f(t + 3.0 * h) - f(t - 3.0 * h);
    (45.0 * d1 - 9.0 * d2 + d3) / (60.0 * h)
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

pub fn double_pole_1d() -> Problem {
    Problem {
        id: ProblemId::DoublePole1d,
        dim: 1,
        domain: Domain { x_lo: -20.0, x_hi: 20.0, y_lo: 0.0, y_hi: 1.0 },
        boundary: Boundary::Periodic,
        initial_u: |_, _| 0.0,
        initial_v: |x, _| 4.0 * sech(x),
        exact: Some(|x, _, t| 4.0 * (t * sech(x)).atan()),
        exact_velocity: Some(|x, _, t| {
            let s = sech(x);
            4.0 * s / (1.0 + t * t * s * s)
        }),
        display: None,
        mirror: None,
    }
}

pub fn line_kink_2d() -> Problem {
    Problem {
        id: ProblemId::LineKink2d,
        dim: 2,
        domain: Domain { x_lo: -7.0, x_hi: 7.0, y_lo: -7.0, y_hi: 7.0 },
        boundary: Boundary::DirichletExact,
        initial_u: |x, y| 4.0 * (x + y).exp().atan(),
        initial_v: |x, y| -4.0 * (x + y).exp() / (1.0 + (2.0 * x + 2.0 * y).exp()),
        exact: Some(|x, y, t| 4.0 * (x + y - t).exp().atan()),
        exact_velocity: Some(|x, y, t| {
            let e = (x + y - t).exp();
            -4.0 * e / (1.0 + e * e)
        }),
        display: Some(DisplayTransform::HalfAngleSine),
        mirror: None,
    }
}

pub fn circular_ring() -> Problem {
    Problem {
        id: ProblemId::Ring,
        dim: 2,
        domain: Domain { x_lo: -14.0, x_hi: 14.0, y_lo: -14.0, y_hi: 14.0 },
        boundary: Boundary::Periodic,
        initial_u: |x, y| 4.0 * (3.0 - (x * x + y * y).sqrt()).exp().atan(),
        initial_v: |_, _| 0.0,
        exact: None,
        exact_velocity: None,
        display: Some(DisplayTransform::HalfAngleSine),
        mirror: None,
    }
}

pub fn elliptical_breather() -> Problem {
    Problem {
        id: ProblemId::Breather,
        dim: 2,
        domain: Domain { x_lo: -7.0, x_hi: 7.0, y_lo: -7.0, y_hi: 7.0 },
        boundary: Boundary::Periodic,
        initial_u: |x, y| {
            let rho = ((x - y).powi(2) / 3.0 + (x + y).powi(2) / 2.0).sqrt();
            4.0 * (2.0 * sech(0.866 * rho)).atan()
        },
        initial_v: |_, _| 0.0,
        exact: None,
        exact_velocity: None,
        display: Some(DisplayTransform::HalfAngleSine),
        mirror: None,
    }
}

fn collision_profile(x: f64, y: f64) -> f64 {
    (4.0 - ((x + 3.0).powi(2) + (y + 7.0).powi(2)).sqrt()) / 0.436
}

pub fn two_ring_collision() -> Problem {
    Problem {
        id: ProblemId::Collide2,
        dim: 2,
        domain: Domain { x_lo: -30.0, x_hi: 10.0, y_lo: -21.0, y_hi: 7.0 },
        boundary: Boundary::Periodic,
        initial_u: |x, y| 4.0 * collision_profile(x, y).exp().atan(),
        initial_v: |x, y| 4.13 * sech(collision_profile(x, y)),
        exact: None,
        exact_velocity: None,
        display: Some(DisplayTransform::HalfAngleSine),
        mirror: Some(Mirror { x_axis: Some(-10.0), y_axis: Some(-7.0) }),
    }
}

pub fn four_ring_collision() -> Problem {
    Problem {
        id: ProblemId::Collide4,
        dim: 2,
        domain: Domain { x_lo: -30.0, x_hi: 10.0, y_lo: -30.0, y_hi: 10.0 },
        boundary: Boundary::Periodic,
        initial_u: |x, y| 4.0 * collision_profile(x, y).exp().atan(),
        initial_v: |x, y| 4.13 / collision_profile(x, y).cosh(),
        exact: None,
        exact_velocity: None,
        display: Some(DisplayTransform::HalfAngleSine),
        mirror: Some(Mirror { x_axis: Some(-10.0), y_axis: Some(-10.0) }),
    }
}
