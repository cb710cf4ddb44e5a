//! Uniform rectangular meshes and the mesh functions that live on them.
//!
//! Nodes are `x_j1 = x_lo + j1*h1`, `y_j2 = y_lo + j2*h2` for `0 <= j_r < n_r`,
//! stored j2-outer / j1-inner. A 1D mesh is the 2D layout with `n2 == 1`;
//! every y-difference on it is zero and `h2` is fixed to 1 so that
//! `h1*h2` is the 1D cell measure.
//!
//! On periodic meshes the node `j_r = n_r` is identified with `j_r = 0`.
//! On [`Boundary::DirichletExact`] meshes the nodes with `j1 == 0` (or
//! `j2 == 0` in 2D) form the boundary ring, and the nodes just past the far
//! edge (`j1 == n1`, `j2 == n2`) are ghosts whose values are carried by each
//! [`MeshFunction`] alongside its node values. `n1`, `n2` need not be even.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    DirichletExact,
}

/// Where a stencil read lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Node(usize),
    Ghost(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
    boundary: Boundary,
}

/// Periodic image of `j` in `[0, n)`.
///
/// Total for any `j`; the stencils only ever pass `j` in `-1..=n`.
pub fn wrap(j: isize, n: usize) -> usize {
    debug_assert!(n >= 1);
    j.rem_euclid(n as isize) as usize
}

impl Grid {
    /// Builds a 2D mesh, or a 1D one when `n2 == 1` (the y extent is then ignored).
    pub fn new(
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
        n1: usize,
        n2: usize,
        boundary: Boundary,
    ) -> Result<Arc<Grid>> {
        if n2 == 1 {
            return Self::new_1d(x_lo, x_hi, n1, boundary);
        }
        check_axis("x", x_lo, x_hi, n1)?;
        check_axis("y", y_lo, y_hi, n2)?;
        Ok(Arc::new(Grid {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            n1,
            n2,
            h1: (x_hi - x_lo) / n1 as f64,
            h2: (y_hi - y_lo) / n2 as f64,
            boundary,
        }))
    }

    pub fn new_1d(x_lo: f64, x_hi: f64, n1: usize, boundary: Boundary) -> Result<Arc<Grid>> {
        check_axis("x", x_lo, x_hi, n1)?;
        Ok(Arc::new(Grid {
            x_lo,
            x_hi,
            y_lo: 0.0,
            y_hi: 1.0,
            n1,
            n2: 1,
            h1: (x_hi - x_lo) / n1 as f64,
            h2: 1.0,
            boundary,
        }))
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }
    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }
    pub fn y_lo(&self) -> f64 {
        self.y_lo
    }
    pub fn y_hi(&self) -> f64 {
        self.y_hi
    }
    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    pub fn h1(&self) -> f64 {
        self.h1
    }
    pub fn h2(&self) -> f64 {
        self.h2
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_1d(&self) -> bool {
        self.n2 == 1
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of one node in the discrete inner product, `h1*h2`.
    pub fn cell_measure(&self) -> f64 {
        self.h1 * self.h2
    }

    pub fn index(&self, j1: usize, j2: usize) -> usize {
        j2 * self.n1 + j1
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.n1, index / self.n1)
    }

    pub fn x(&self, j1: usize) -> f64 {
        self.x_lo + j1 as f64 * self.h1
    }

    pub fn y(&self, j2: usize) -> f64 {
        if self.is_1d() {
            0.0
        } else {
            self.y_lo + j2 as f64 * self.h2
        }
    }

    pub fn position(&self, index: usize) -> (f64, f64) {
        let (j1, j2) = self.coords(index);
        (self.x(j1), self.y(j2))
    }

    /// Number of ghost values a mesh function carries: one per row for the
    /// `j1 == n1` column and, in 2D, one per column for the `j2 == n2` row.
    pub fn ghost_len(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => 0,
            Boundary::DirichletExact if self.is_1d() => self.n2,
            Boundary::DirichletExact => self.n2 + self.n1,
        }
    }

    pub fn ghost_position(&self, ghost: usize) -> (f64, f64) {
        if ghost < self.n2 {
            (self.x(self.n1), self.y(ghost))
        } else {
            let j1 = ghost - self.n2;
            (self.x(j1), self.y(self.n2))
        }
    }

    /// Whether a node belongs to the boundary ring of a Dirichlet mesh.
    pub fn is_boundary(&self, index: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        let (j1, j2) = self.coords(index);
        j1 == 0 || (!self.is_1d() && j2 == 0)
    }

    pub fn east(&self, index: usize) -> Neighbor {
        let (j1, j2) = self.coords(index);
        if j1 + 1 < self.n1 {
            Neighbor::Node(index + 1)
        } else {
            match self.boundary {
                Boundary::Periodic => Neighbor::Node(self.index(0, j2)),
                Boundary::DirichletExact => Neighbor::Ghost(j2),
            }
        }
    }

    pub fn west(&self, index: usize) -> Neighbor {
        let (j1, j2) = self.coords(index);
        match self.boundary {
            Boundary::Periodic => Neighbor::Node(self.index(wrap(j1 as isize - 1, self.n1), j2)),
            // The ring has no unknowns, so nothing reads past it.
            Boundary::DirichletExact => Neighbor::Node(if j1 == 0 { index } else { index - 1 }),
        }
    }

    /// In 1D the y-neighbors are the node itself, so y-differences vanish.
    pub fn north(&self, index: usize) -> Neighbor {
        if self.is_1d() {
            return Neighbor::Node(index);
        }
        let (j1, j2) = self.coords(index);
        if j2 + 1 < self.n2 {
            Neighbor::Node(index + self.n1)
        } else {
            match self.boundary {
                Boundary::Periodic => Neighbor::Node(j1),
                Boundary::DirichletExact => Neighbor::Ghost(self.n2 + j1),
            }
        }
    }

    pub fn south(&self, index: usize) -> Neighbor {
        if self.is_1d() {
            return Neighbor::Node(index);
        }
        let (j1, j2) = self.coords(index);
        match self.boundary {
            Boundary::Periodic => Neighbor::Node(self.index(j1, wrap(j2 as isize - 1, self.n2))),
            Boundary::DirichletExact => Neighbor::Node(if j2 == 0 { index } else { index - self.n1 }),
        }
    }
}

fn check_axis(axis: &str, lo: f64, hi: f64, n: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::InvalidGrid(format!("{axis}-extent [{lo}, {hi}] is not a positive interval")));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("{axis}-axis needs at least 2 nodes, got {n}")));
    }
    Ok(())
}

/// A real value per node, plus the ghost values of a Dirichlet mesh.
#[derive(Clone, Debug)]
pub struct MeshFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    ghost: Vec<f64>,
}

impl MeshFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        MeshFunction { grid: Arc::clone(grid), values: vec![c; grid.len()], ghost: vec![c; grid.ghost_len()] }
    }

    /// Samples `f` at every node and ghost position.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.position(i);
                f(x, y)
            })
            .collect();
        let ghost = (0..grid.ghost_len())
            .map(|g| {
                let (x, y) = grid.ghost_position(g);
                f(x, y)
            })
            .collect();
        let out = MeshFunction { grid: Arc::clone(grid), values, ghost };
        out.ensure_finite()?;
        Ok(out)
    }

    /// Wraps node values; ghosts start at zero.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        let out = MeshFunction { grid: Arc::clone(grid), values, ghost: vec![0.0; grid.ghost_len()] };
        out.ensure_finite()?;
        Ok(out)
    }

    pub(crate) fn from_parts(grid: &Arc<Grid>, values: Vec<f64>, ghost: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert_eq!(ghost.len(), grid.ghost_len());
        MeshFunction { grid: Arc::clone(grid), values, ghost }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Direct write access. Callers that may introduce non-finite values
    /// should follow up with [`MeshFunction::ensure_finite`].
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn ghost(&self) -> &[f64] {
        &self.ghost
    }

    pub fn ghost_mut(&mut self) -> &mut [f64] {
        &mut self.ghost
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, j1: usize, j2: usize) -> f64 {
        self.values[self.grid.index(j1, j2)]
    }

    pub fn read(&self, n: Neighbor) -> f64 {
        match n {
            Neighbor::Node(i) => self.values[i],
            Neighbor::Ghost(g) => self.ghost[g],
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index, value: self.values[index] }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &MeshFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise map over nodes and ghosts.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> MeshFunction {
        MeshFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            ghost: self.ghost.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination over nodes and ghosts.
    pub fn zip_with(&self, other: &MeshFunction, f: impl Fn(f64, f64) -> f64) -> Result<MeshFunction> {
        self.same_grid(other)?;
        Ok(MeshFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            ghost: self.ghost.iter().zip(&other.ghost).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `<U, V>_h = h1 h2 sum U V`, summed in storage order.
    pub fn inner(&self, other: &MeshFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.cell_measure() * dot(&self.values, &other.values))
    }

    pub fn l2(&self) -> f64 {
        (self.grid.cell_measure() * dot(&self.values, &self.values)).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sqrt(||U||^2 + ||dx U||^2 + ||dy U||^2)` with forward differences
    /// resolved through the mesh's boundary mode.
    pub fn h1_norm(&self) -> f64 {
        let g = &*self.grid;
        let mut dx2 = 0.0;
        let mut dy2 = 0.0;
        for i in 0..g.len() {
            let dx = (self.read(g.east(i)) - self.values[i]) / g.h1();
            dx2 += dx * dx;
            if !g.is_1d() {
                let dy = (self.read(g.north(i)) - self.values[i]) / g.h2();
                dy2 += dy * dy;
            }
        }
        let w = g.cell_measure();
        let l2 = self.l2();
        (l2 * l2 + w * dx2 + w * dy2).sqrt()
    }
}

/// Sequential dot product; the fixed order keeps reductions reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}
