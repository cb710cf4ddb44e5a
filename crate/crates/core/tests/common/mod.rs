//! Dense reference implementations used as oracles by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use sinegordon::{Grid, MeshFunction, SchemeState};

/// Periodic 5-point (3-point in 1D) Laplacian assembled from index arithmetic.
pub fn dense_laplacian(n1: usize, n2: usize, h1: f64, h2: f64) -> DMatrix<f64> {
    let n = n1 * n2;
    let mut a = DMatrix::zeros(n, n);
    let idx = |j1: isize, j2: isize| (j2.rem_euclid(n2 as isize) as usize) * n1 + j1.rem_euclid(n1 as isize) as usize;
    for j2 in 0..n2 as isize {
        for j1 in 0..n1 as isize {
            let i = idx(j1, j2);
            a[(i, idx(j1 + 1, j2))] += 1.0 / (h1 * h1);
            a[(i, idx(j1 - 1, j2))] += 1.0 / (h1 * h1);
            a[(i, i)] -= 2.0 / (h1 * h1);
            if n2 > 1 {
                a[(i, idx(j1, j2 + 1))] += 1.0 / (h2 * h2);
                a[(i, idx(j1, j2 - 1))] += 1.0 / (h2 * h2);
                a[(i, i)] -= 2.0 / (h2 * h2);
            }
        }
    }
    a
}

pub fn b(x: f64) -> f64 {
    x.sin() / (2.0 - x.cos()).sqrt()
}

/// `I - (tau^2/4) Lap + (tau^2/8) diag(d)^2`, assembled densely.
pub fn dense_system(grid: &Grid, tau: f64, d: &[f64]) -> DMatrix<f64> {
    let lap = dense_laplacian(grid.n1(), grid.n2(), grid.h1(), grid.h2());
    let n = grid.len();
    let mut a = DMatrix::identity(n, n) - lap * (tau * tau / 4.0);
    for i in 0..n {
        a[(i, i)] += tau * tau / 8.0 * d[i] * d[i];
    }
    a
}

/// One step of the coupled three-field scheme, solved as a single dense
/// `3N x 3N` system in `(U^{n+1}, V^{n+1}, R^{n+1})`:
///
/// (U1 - U)/tau = (V1 + V)/2
/// (V1 - V)/tau = Lap (U1 + U)/2 - d (R1 + R)/2
/// (R1 - R)/tau = d/2 (U1 - U)/tau
pub fn coupled_step(
    grid: &Grid,
    u: &[f64],
    v: &[f64],
    r: &[f64],
    d: &[f64],
    tau: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let lap = dense_laplacian(grid.n1(), grid.n2(), grid.h1(), grid.h2());
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    let mut rhs = DVector::zeros(3 * n);
    let lap_u = &lap * DVector::from_column_slice(u);
    for i in 0..n {
        // Row block 1.
        m[(i, i)] = 1.0 / tau;
        m[(i, n + i)] = -0.5;
        rhs[i] = u[i] / tau + 0.5 * v[i];
        // Row block 2.
        m[(n + i, n + i)] = 1.0 / tau;
        for j in 0..n {
            m[(n + i, j)] = -0.5 * lap[(i, j)];
        }
        m[(n + i, 2 * n + i)] = 0.5 * d[i];
        rhs[n + i] = v[i] / tau + 0.5 * lap_u[i] - 0.5 * d[i] * r[i];
        // Row block 3.
        m[(2 * n + i, 2 * n + i)] = 1.0 / tau;
        m[(2 * n + i, i)] = -0.5 * d[i] / tau;
        rhs[2 * n + i] = r[i] / tau - 0.5 * d[i] * u[i] / tau;
    }
    let sol = m.lu().solve(&rhs).expect("coupled system is singular");
    (
        sol.rows(0, n).iter().copied().collect(),
        sol.rows(n, n).iter().copied().collect(),
        sol.rows(2 * n, n).iter().copied().collect(),
    )
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// A random state at level 1, with a random previous level.
pub fn random_state(grid: &Arc<Grid>, seed: u64) -> SchemeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let mf = |v: Vec<f64>| MeshFunction::from_values(grid, v).unwrap();
    let u = random_values(&mut rng, n, 4.0);
    let up = random_values(&mut rng, n, 4.0);
    let v = random_values(&mut rng, n, 2.0);
    let r: Vec<f64> = random_values(&mut rng, n, 1.0).iter().map(|x| 1.2 + 0.5 * x).collect();
    SchemeState { t: 0.1, step: 1, u_prev: Some(mf(up)), u: mf(u), v: mf(v), r: mf(r) }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
