//! Difference and averaging operators, and the quadratized nonlinearity.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, MeshFunction, Neighbor};

/// Neighbor tables for the forward/backward differences of one mesh.
///
/// Entries `>= grid.len()` address the mesh function's ghost values at
/// offset `grid.len()`.
#[derive(Debug)]
pub struct StencilSet {
    grid: Arc<Grid>,
    east: Vec<usize>,
    west: Vec<usize>,
    north: Vec<usize>,
    south: Vec<usize>,
    interior: Vec<bool>,
}

impl StencilSet {
    pub fn new(grid: &Arc<Grid>) -> Arc<StencilSet> {
        let n = grid.len();
        let flat = |nb: Neighbor| match nb {
            Neighbor::Node(i) => i,
            Neighbor::Ghost(g) => n + g,
        };
        Arc::new(StencilSet {
            grid: Arc::clone(grid),
            east: (0..n).map(|i| flat(grid.east(i))).collect(),
            west: (0..n).map(|i| flat(grid.west(i))).collect(),
            north: (0..n).map(|i| flat(grid.north(i))).collect(),
            south: (0..n).map(|i| flat(grid.south(i))).collect(),
            interior: (0..n).map(|i| !grid.is_boundary(i)).collect(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn check(&self, u: &MeshFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, u.grid()) || *self.grid == **u.grid() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    #[inline]
    fn read(&self, values: &[f64], ghost: &[f64], k: usize) -> f64 {
        if k < values.len() {
            values[k]
        } else {
            ghost[k - values.len()]
        }
    }

    /// Forward difference in x, `(U[j1+1] - U[j1]) / h1`.
    pub fn delta_x(&self, u: &MeshFunction) -> Result<MeshFunction> {
        self.check(u)?;
        let h = self.grid.h1();
        let (v, g) = (u.values(), u.ghost());
        let out = (0..v.len()).map(|i| (self.read(v, g, self.east[i]) - v[i]) / h).collect();
        Ok(MeshFunction::from_parts(&self.grid, out, vec![0.0; g.len()]))
    }

    /// Forward difference in y; identically zero on 1D meshes.
    pub fn delta_y(&self, u: &MeshFunction) -> Result<MeshFunction> {
        self.check(u)?;
        let h = self.grid.h2();
        let (v, g) = (u.values(), u.ghost());
        let out = (0..v.len()).map(|i| (self.read(v, g, self.north[i]) - v[i]) / h).collect();
        Ok(MeshFunction::from_parts(&self.grid, out, vec![0.0; g.len()]))
    }

    /// `dx^2 U[j1-1,j2] + dy^2 U[j1,j2-1]`, the 5-point (3-point in 1D)
    /// Laplacian. Zero on the boundary ring of a Dirichlet mesh.
    pub fn laplacian(&self, u: &MeshFunction) -> Result<MeshFunction> {
        self.check(u)?;
        let mut out = vec![0.0; u.len()];
        self.laplacian_into(u.values(), u.ghost(), &mut out);
        Ok(MeshFunction::from_parts(&self.grid, out, vec![0.0; u.ghost().len()]))
    }

    /// Laplacian of raw node/ghost slices. An empty `ghost` slice on a
    /// Dirichlet mesh means homogeneous ghosts.
    pub(crate) fn laplacian_into(&self, values: &[f64], ghost: &[f64], out: &mut [f64]) {
        let n = values.len();
        let cx = 1.0 / (self.grid.h1() * self.grid.h1());
        let cy = if self.grid.is_1d() { 0.0 } else { 1.0 / (self.grid.h2() * self.grid.h2()) };
        let rd = |k: usize| -> f64 {
            if k < n {
                values[k]
            } else {
                ghost.get(k - n).copied().unwrap_or(0.0)
            }
        };
        for i in 0..n {
            if !self.interior[i] {
                out[i] = 0.0;
                continue;
            }
            let c = values[i];
            let xx = (rd(self.east[i]) + rd(self.west[i]) - 2.0 * c) * cx;
            let yy = if cy == 0.0 { 0.0 } else { (rd(self.north[i]) + rd(self.south[i]) - 2.0 * c) * cy };
            out[i] = xx + yy;
        }
    }

    pub(crate) fn tables(&self) -> (&[usize], &[usize], &[usize], &[usize]) {
        (&self.east, &self.west, &self.north, &self.south)
    }

    pub(crate) fn is_interior(&self, index: usize) -> bool {
        self.interior[index]
    }
}

/// `(3 U^n - U^{n-1}) / 2`, the linear extrapolation to the half step.
pub fn extrapolate_half(u_n: &MeshFunction, u_nm1: &MeshFunction) -> Result<MeshFunction> {
    u_n.zip_with(u_nm1, |a, b| (3.0 * a - b) / 2.0)
}

/// `A_t U = (U^{n+1} + U^n) / 2`.
pub fn time_average(u_np1: &MeshFunction, u_n: &MeshFunction) -> Result<MeshFunction> {
    u_np1.zip_with(u_n, |a, b| (a + b) / 2.0)
}

/// `sin x / sqrt(2 - cos x)`, the coefficient that couples the auxiliary
/// variable `r = sqrt(2 - cos u)` to the velocity. `2 - cos x >= 1`, so the
/// closed form is safe for every finite `x`.
#[inline]
pub fn coupling(x: f64) -> f64 {
    x.sin() / (2.0 - x.cos()).sqrt()
}

#[inline]
pub fn coupling_prime(x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let q = 2.0 - c;
    c / q.sqrt() - s * s / (2.0 * q.powf(1.5))
}

#[inline]
pub fn coupling_second(x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let q = 2.0 - c;
    -coupling(x) - 3.0 * (2.0 * x).sin() / (4.0 * q.powf(1.5)) + 3.0 * s * s * s / (4.0 * q.powf(2.5))
}

pub fn checked_coupling(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(coupling(x))
    } else {
        Err(Error::NonFiniteArgument(x))
    }
}
