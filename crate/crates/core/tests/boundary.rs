use sinegordon::problems::line_kink_2d;
use sinegordon::schemes::{init_state, Integrator};
use sinegordon::{Grid, SchemeKind, Simulation};

#[test]
fn dirichlet_boundary_follows_exact_solution() {
    let p = line_kink_2d();
    let exact = p.exact.unwrap();
    let g = p.grid(28, 28).unwrap();
    for scheme in [SchemeKind::LiLeps, SchemeKind::EpFds] {
        let mut sim = Simulation::new(&p, scheme, &g, 0.05).unwrap();
        for _ in 0..10 {
            sim.advance().unwrap();
            let s = &sim.state;
            for i in 0..g.len() {
                if g.is_boundary(i) {
                    let (x, y) = g.position(i);
                    assert!((s.u.values()[i] - exact(x, y, s.t)).abs() < 1e-13, "{scheme} node {i}");
                }
            }
            for (k, &v) in s.u.ghost().iter().enumerate() {
                let (x, y) = g.ghost_position(k);
                assert_eq!(v, exact(x, y, s.t));
            }
        }
    }
}

#[test]
fn schemes_agree_to_truncation_error() {
    let p = line_kink_2d();
    let g = p.grid(56, 56).unwrap();
    let run = |scheme| {
        let mut sim = Simulation::new(&p, scheme, &g, 0.01).unwrap();
        for _ in 0..50 {
            sim.advance().unwrap();
        }
        sim.state.u
    };
    let gap = run(SchemeKind::LiLeps).zip_with(&run(SchemeKind::EpFds), |a, b| a - b).unwrap().linf();
    assert!(gap < 1e-3, "{gap}");
}

#[test]
fn dirichlet_mesh_requires_boundary_data() {
    let g = Grid::new(0.0, 1.0, 0.0, 1.0, 8, 8, sinegordon::Boundary::DirichletExact).unwrap();
    assert!(Integrator::periodic(&g).is_err());
    let mut ring = sinegordon::problems::circular_ring();
    ring.boundary = sinegordon::Boundary::DirichletExact;
    let g = ring.grid(10, 10).unwrap();
    assert!(init_state(&ring, &g).is_err());
    assert!(Integrator::new(&ring, &g).is_err());
}
