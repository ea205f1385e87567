//! Reference implementations used as test oracles. They favor the obvious
//! formula over speed and share no code paths with the library beyond its
//! public data types.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use detsim::assembly::{
    assembly_step, ActiveSystem, ContextKey, Element, Outcome, Scenario, ScatteringTable,
};
use detsim::grid::Grid;
use detsim::option_model::StateVector;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> StateVector {
    let raw: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::new(raw.into_iter().map(|a| a / norm).collect()).unwrap()
}

/// Haar-ish unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    z.qr().q()
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    (&z + z.adjoint()).scale(0.5)
}

/// Thresholds by the textbook formula `floor(L * sum_{p<=j} |l_p|^2)`.
pub fn thresholds(probabilities: &[f64], volume: u64) -> Vec<u64> {
    let mut acc = 0.0;
    let mut out: Vec<u64> = probabilities
        .iter()
        .map(|p| {
            acc += p;
            (volume as f64 * acc).floor() as u64
        })
        .collect();
    *out.last_mut().unwrap() = volume;
    out
}

pub fn outcome_of(thresholds: &[u64], k: u64) -> usize {
    thresholds.iter().position(|&t| k <= t).unwrap()
}

/// `sum_a psi_a exp(-2 pi i a b / N) / sqrt(N)`, straight from the definition.
pub fn naive_dft(psi: &[Complex64]) -> Vec<Complex64> {
    let n = psi.len();
    let scale = (n as f64).sqrt().recip();
    (0..n)
        .map(|b| {
            psi.iter()
                .enumerate()
                .map(|(a, x)| x * Complex64::from_polar(1.0, -2.0 * PI * (a * b % n) as f64 / n as f64))
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Real symmetric `H = T + V` on the grid, with
/// `T_aa' = (1/N) sum_b cos(2 pi b (a - a') / N) p_b^2 / (2m)`.
pub fn dense_hamiltonian(grid: Grid, potential: &[f64], mass: f64) -> DMatrix<f64> {
    let n = grid.points();
    let kinetic: Vec<f64> = (0..n)
        .map(|b| {
            let p = grid.momentum(b);
            p * p / (2.0 * mass)
        })
        .collect();
    // T depends on a - a' only.
    let row: Vec<f64> = (0..n)
        .map(|d| {
            kinetic
                .iter()
                .enumerate()
                .map(|(b, t)| t * (2.0 * PI * (b * d % n) as f64 / n as f64).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |a, c| {
        let t = row[(a + n - c) % n];
        if a == c {
            t + potential[a]
        } else {
            t
        }
    })
}

/// `exp(-i H t)` by eigendecomposition.
pub fn exact_propagator(h: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        h.nrows(),
        eig.eigenvalues.iter().map(|e| Complex64::from_polar(1.0, -e * t)),
    ));
    &v * phases * v.transpose()
}

pub fn apply(m: &DMatrix<Complex64>, psi: &[Complex64]) -> Vec<Complex64> {
    (m * DVector::from_column_slice(psi)).iter().copied().collect()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn l2_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Histogram class: assembled letters or `None` for an impossible run.
pub type Class = Option<Vec<Element>>;

/// Every branch of the scenario with its exact probability. Branches that end
/// impossibly are separate leaves even when they share the class `None`.
/// The per-step outcome mixture is recomputed here from the table.
pub fn enumerate_leaves(
    scenario: &Scenario,
    initial: &ActiveSystem,
    table: &ScatteringTable,
) -> Vec<(Class, f64)> {
    let mut out = Vec::new();
    walk(scenario, 0, initial.clone(), 1.0, table, &mut out);
    out
}

/// Exact class probabilities by enumerating every branch.
pub fn enumerate_classes(
    scenario: &Scenario,
    initial: &ActiveSystem,
    table: &ScatteringTable,
) -> BTreeMap<Class, f64> {
    let mut out = BTreeMap::new();
    for (class, p) in enumerate_leaves(scenario, initial, table) {
        *out.entry(class).or_default() += p;
    }
    out
}

fn walk(
    scenario: &Scenario,
    step: usize,
    active: ActiveSystem,
    prob: f64,
    table: &ScatteringTable,
    out: &mut Vec<(Class, f64)>,
) {
    let Some(reservoir) = scenario.steps().get(step) else {
        out.push((Some(active.growing().letters()), prob));
        return;
    };
    if !active.can_extend() {
        out.push((None, prob));
        return;
    }
    let mut mixture: Vec<(Outcome, f64)> = Vec::new();
    for entry in reservoir.entries() {
        let dist = table.get(&ContextKey::for_entry(&active, entry)).expect("fixture covers context");
        for o in dist.outcomes() {
            match mixture.iter_mut().find(|(x, _)| *x == o.outcome) {
                Some((_, w)) => *w += entry.weight * o.weight,
                None => mixture.push((o.outcome.clone(), entry.weight * o.weight)),
            }
        }
    }
    let total: f64 = mixture.iter().map(|(_, w)| w).sum();
    for (outcome, w) in mixture {
        let p = prob * w / total;
        if p == 0.0 {
            continue;
        }
        if outcome.is_admitted() {
            walk(scenario, step + 1, assembly_step(&active, &outcome).unwrap(), p, table, out);
        } else {
            out.push((None, p));
        }
    }
}

/// `psi = (E - H - V + i eta)^-1 (E - H + i eta) phi`, the closed form of
/// `psi = phi + G V psi`.
pub fn lippmann_schwinger_direct(
    h: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
    phi: &DVector<Complex64>,
    energy: f64,
    eta: f64,
) -> DVector<Complex64> {
    let n = h.nrows();
    let z = DMatrix::from_diagonal_element(n, n, Complex64::new(energy, eta));
    let lhs = &z - h - v;
    let rhs = (&z - h) * phi;
    lhs.lu().solve(&rhs).expect("nonsingular")
}
