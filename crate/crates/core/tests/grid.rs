mod common;

use common::*;
use detsim::grid::{
    dft, evolve, evolve_traced, expectation, idft, step, step_adjoint, Grid, GridWaveFunction,
    Observable, PotentialField,
};
use num_complex::Complex64;

fn random_wave(seed: u64, grid: Grid) -> GridWaveFunction {
    let mut rng = rng(seed);
    let raw = (0..grid.points()).map(|_| complex_gaussian(&mut rng)).collect();
    GridWaveFunction::normalized(grid, raw).unwrap()
}

#[test]
fn dft_matches_the_defining_sum() {
    for l in [1u32, 3, 5, 7] {
        let grid = Grid::new(l).unwrap();
        let psi = random_wave(l as u64, grid);
        let fast = dft(&psi);
        assert!(max_diff(fast.amplitudes(), &naive_dft(psi.amplitudes())) < 1e-12);
        assert!(idft(&fast).max_distance(&psi) < 1e-12);
        assert!((fast.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn free_evolution_matches_dense_kinetic_exponential() {
    // With V = 0 the split step is exact, so only the kinetic matrix is tested.
    let grid = Grid::new(6).unwrap();
    let field = PotentialField::zero(grid, 1.3).unwrap();
    let psi = random_wave(1, grid);
    let h = dense_hamiltonian(grid, &vec![0.0; grid.points()], 1.3);
    let exact = apply(&exact_propagator(&h, 0.7), psi.amplitudes());
    let split = evolve(&psi, &field, 0.07, 10).unwrap();
    assert!(max_diff(split.amplitudes(), &exact) < 1e-10);
}

#[test]
fn first_order_trotter_convergence() {
    let grid = Grid::new(7).unwrap();
    let field = PotentialField::harmonic(grid, 1.0, 1.0).unwrap();
    let psi0 = GridWaveFunction::gaussian(grid, 1.5, 0.0, 1.0).unwrap();
    let h = dense_hamiltonian(grid, field.at_step(0).unwrap(), 1.0);
    let exact = apply(&exact_propagator(&h, 0.5), psi0.amplitudes());
    let error = |steps: usize| {
        let psi = evolve(&psi0, &field, 0.5 / steps as f64, steps).unwrap();
        l2_diff(psi.amplitudes(), &exact)
    };
    let ratio = error(50) / error(100);
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn adjoint_step_undoes_step() {
    let grid = Grid::new(6).unwrap();
    let field = PotentialField::harmonic(grid, 0.8, 1.0).unwrap();
    let psi = random_wave(2, grid);
    let back = step_adjoint(&step(&psi, &field, 0.05).unwrap(), &field, -0.05).unwrap();
    assert!(back.max_distance(&psi) < 1e-10);
}

#[test]
fn ehrenfest_in_harmonic_well() {
    let grid = Grid::new(8).unwrap();
    let (omega, mass, dt) = (1.0, 1.0, 0.001);
    let field = PotentialField::harmonic(grid, omega, mass).unwrap();
    let psi0 = GridWaveFunction::gaussian(grid, 1.0, 0.5, 1.0).unwrap();
    let (_, trace) = evolve_traced(&psi0, &field, dt, 2000, 1).unwrap();
    // <X>(t) = x0 cos(wt) + p0/(m w) sin(wt) for a harmonic well.
    for t in trace.iter().step_by(100) {
        let w = omega * t.time;
        let x = 1.0 * w.cos() + 0.5 / (mass * omega) * w.sin();
        let p = -mass * omega * 1.0 * w.sin() + 0.5 * w.cos();
        assert!((t.position - x).abs() < 5e-3, "t={}: {} vs {x}", t.time, t.position);
        assert!((t.momentum - p).abs() < 5e-3, "t={}: {} vs {p}", t.time, t.momentum);
    }
}

#[test]
fn stepped_potential_uses_one_sample_set_per_step() {
    let grid = Grid::new(4).unwrap();
    let n = grid.points();
    let a: Vec<f64> = grid.positions().iter().map(|x| 0.3 * x * x).collect();
    let b: Vec<f64> = grid.positions().iter().map(|x| -0.2 * x).collect();
    let stepped = PotentialField::time_dependent(grid, vec![a.clone(), b.clone()], 1.0).unwrap();
    let psi = random_wave(3, grid);
    let direct = step(
        &step(&psi, &PotentialField::new(grid, a, 1.0).unwrap(), 0.1).unwrap(),
        &PotentialField::new(grid, b, 1.0).unwrap(),
        0.1,
    )
    .unwrap();
    let two = evolve(&psi, &stepped, 0.1, 2).unwrap();
    assert!(two.max_distance(&direct) < 1e-14);
    assert_eq!(two.amplitudes().len(), n);
}

#[test]
fn expectations_of_plane_wave() {
    let grid = Grid::new(5).unwrap();
    let psi = GridWaveFunction::plane_wave(grid, 3).unwrap();
    assert!((expectation(&psi, Observable::Momentum) - grid.momentum(3)).abs() < 1e-12);
    let amps: Vec<Complex64> = psi.amplitudes().to_vec();
    assert!(amps.iter().all(|a| (a.norm_sqr() - 1.0 / 32.0).abs() < 1e-14));
}
