//! Split-operator propagation on a `2^l`-point periodic grid.
//!
//! Units: `hbar = 1`, `dq = dp = sqrt(2 pi / N)`, grid positions
//! `q_a = (a - N/2) dq` covering `[-A, A)` with `A = sqrt(pi N / 2)`.
//! Momentum index `b` is read in centered form, so `b >= N/2` stands for
//! `b - N`. With this choice the grid Fourier transform is the plain unitary
//! DFT with kernel `exp(-2 pi i a b / N) / sqrt(N)` and the kinetic phase of
//! one step is `exp(-i pi b^2 dt / (m N))`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::option_model::NORM_TOLERANCE;

/// Largest supported register width.
pub const MAX_QUBITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Grid {
    qubits: u32,
}

impl Grid {
    pub fn new(qubits: u32) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "grid qubits must be in 1..={MAX_QUBITS}, got {qubits}"
            )));
        }
        Ok(Self { qubits })
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn points(&self) -> usize {
        1 << self.qubits
    }

    /// `dq = dp = sqrt(2 pi / N)`.
    pub fn spacing(&self) -> f64 {
        (2.0 * PI / self.points() as f64).sqrt()
    }

    /// `A = B = sqrt(pi N / 2)`.
    pub fn half_range(&self) -> f64 {
        (PI * self.points() as f64 / 2.0).sqrt()
    }

    pub fn position(&self, a: usize) -> f64 {
        (a as f64 - (self.points() / 2) as f64) * self.spacing()
    }

    /// Signed momentum index for storage index `b`.
    pub fn signed_index(&self, b: usize) -> i64 {
        let n = self.points();
        if b < n / 2 {
            b as i64
        } else {
            b as i64 - n as i64
        }
    }

    pub fn momentum(&self, b: usize) -> f64 {
        self.signed_index(b) as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points()).map(|a| self.position(a)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Representation {
    Coordinate,
    Impulse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWaveFunction {
    grid: Grid,
    representation: Representation,
    amplitudes: Vec<Complex64>,
}

impl GridWaveFunction {
    /// Coordinate-space wave function; renormalized when within tolerance.
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::with_representation(grid, Representation::Coordinate, amplitudes)
    }

    pub fn with_representation(
        grid: Grid,
        representation: Representation,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        if amplitudes.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                actual: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("wave function contains non-finite amplitudes"));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized {
                norm_sqr,
                tolerance: NORM_TOLERANCE,
            });
        }
        let mut psi = Self {
            grid,
            representation,
            amplitudes,
        };
        // Already-normalized input is kept bit for bit so dumps round-trip.
        if (norm_sqr - 1.0).abs() > 8.0 * f64::EPSILON {
            let scale = norm_sqr.sqrt().recip();
            psi.amplitudes.iter_mut().for_each(|a| *a *= scale);
        }
        Ok(psi)
    }

    /// Normalizes arbitrary nonzero samples.
    pub fn normalized(grid: Grid, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite wave function"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(grid, amplitudes)
    }

    /// Gaussian packet `exp(-(q - x0)^2 / (4 sigma^2) + i p0 q)`, normalized
    /// on the grid.
    pub fn gaussian(grid: Grid, x0: f64, p0: f64, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::invalid("gaussian width must be positive"));
        }
        let amps = grid
            .positions()
            .into_iter()
            .map(|q| {
                let envelope = (-(q - x0).powi(2) / (4.0 * sigma * sigma)).exp();
                Complex64::from_polar(envelope, p0 * q)
            })
            .collect();
        Self::normalized(grid, amps)
    }

    /// Grid plane wave `exp(2 pi i a b0 / N) / sqrt(N)`.
    pub fn plane_wave(grid: Grid, b0: usize) -> Result<Self> {
        let n = grid.points();
        let amp = (n as f64).sqrt().recip();
        let amps = (0..n)
            .map(|a| Complex64::from_polar(amp, 2.0 * PI * ((a * b0) % n) as f64 / n as f64))
            .collect();
        Self::new(grid, amps)
    }

    pub fn delta(grid: Grid, a: usize) -> Result<Self> {
        if a >= grid.points() {
            return Err(Error::invalid("delta index outside the grid"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); grid.points()];
        amps[a] = Complex64::new(1.0, 0.0);
        Self::new(grid, amps)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `max_a |psi_a - other_a|`.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance `||psi - other||`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Unchecked constructor for outputs of unitary maps.
    pub(crate) fn from_unitary_image(
        grid: Grid,
        representation: Representation,
        amplitudes: Vec<Complex64>,
    ) -> Self {
        Self {
            grid,
            representation,
            amplitudes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSamples {
    Static(Vec<f64>),
    /// One sample vector per time step.
    Stepped(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    samples: PotentialSamples,
    mass: f64,
}

impl PotentialField {
    pub fn new(grid: Grid, samples: Vec<f64>, mass: f64) -> Result<Self> {
        Self::from_samples(grid, PotentialSamples::Static(samples), mass)
    }

    pub fn time_dependent(grid: Grid, samples: Vec<Vec<f64>>, mass: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("time-dependent potential needs at least one step"));
        }
        Self::from_samples(grid, PotentialSamples::Stepped(samples), mass)
    }

    fn from_samples(grid: Grid, samples: PotentialSamples, mass: f64) -> Result<Self> {
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::invalid("mass must be positive and finite"));
        }
        let slices: Vec<&[f64]> = match &samples {
            PotentialSamples::Static(v) => vec![v],
            PotentialSamples::Stepped(vs) => vs.iter().map(Vec::as_slice).collect(),
        };
        for s in slices {
            if s.len() != grid.points() {
                return Err(Error::DimensionMismatch {
                    expected: grid.points(),
                    actual: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("potential samples must be finite"));
            }
        }
        Ok(Self { samples, mass })
    }

    pub fn zero(grid: Grid, mass: f64) -> Result<Self> {
        Self::new(grid, vec![0.0; grid.points()], mass)
    }

    /// `V(q) = omega^2 q^2 m / 2`.
    pub fn harmonic(grid: Grid, omega: f64, mass: f64) -> Result<Self> {
        let v = grid
            .positions()
            .into_iter()
            .map(|q| 0.5 * mass * omega * omega * q * q)
            .collect();
        Self::new(grid, v, mass)
    }

    /// `V(q) = g q`.
    pub fn linear(grid: Grid, slope: f64, mass: f64) -> Result<Self> {
        let v = grid.positions().into_iter().map(|q| slope * q).collect();
        Self::new(grid, v, mass)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn samples(&self) -> &PotentialSamples {
        &self.samples
    }

    /// Number of distinct steps covered, `None` for a static field.
    pub fn step_count(&self) -> Option<usize> {
        match &self.samples {
            PotentialSamples::Static(_) => None,
            PotentialSamples::Stepped(v) => Some(v.len()),
        }
    }

    pub fn at_step(&self, step: usize) -> Result<&[f64]> {
        match &self.samples {
            PotentialSamples::Static(v) => Ok(v),
            PotentialSamples::Stepped(vs) => vs.get(step).map(Vec::as_slice).ok_or_else(|| {
                Error::invalid(format!(
                    "time-dependent potential has {} steps, step {step} requested",
                    vs.len()
                ))
            }),
        }
    }

    fn points(&self) -> usize {
        match &self.samples {
            PotentialSamples::Static(v) => v.len(),
            PotentialSamples::Stepped(vs) => vs[0].len(),
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn transform(amplitudes: &mut [Complex64], fft: &dyn Fft<f64>) {
    fft.process(amplitudes);
    let scale = (amplitudes.len() as f64).sqrt().recip();
    amplitudes.iter_mut().for_each(|a| *a *= scale);
}

/// Coordinate to impulse representation.
pub fn dft(psi: &GridWaveFunction) -> GridWaveFunction {
    let (forward, _) = plans(psi.grid.points());
    let mut amps = psi.amplitudes.clone();
    transform(&mut amps, forward.as_ref());
    GridWaveFunction::from_unitary_image(psi.grid, Representation::Impulse, amps)
}

/// Impulse to coordinate representation.
pub fn idft(phi: &GridWaveFunction) -> GridWaveFunction {
    let (_, inverse) = plans(phi.grid.points());
    let mut amps = phi.amplitudes.clone();
    transform(&mut amps, inverse.as_ref());
    GridWaveFunction::from_unitary_image(phi.grid, Representation::Coordinate, amps)
}

pub fn potential_phase(psi: &GridWaveFunction, samples: &[f64], dt: f64) -> GridWaveFunction {
    debug_assert_eq!(psi.representation, Representation::Coordinate);
    let amps = psi
        .amplitudes
        .iter()
        .zip(samples)
        .map(|(a, v)| a * Complex64::cis(-v * dt))
        .collect();
    GridWaveFunction::from_unitary_image(psi.grid, psi.representation, amps)
}

fn kinetic_phases(grid: Grid, dt: f64, mass: f64) -> Vec<Complex64> {
    let n = grid.points() as f64;
    (0..grid.points())
        .map(|b| {
            let s = grid.signed_index(b) as f64;
            Complex64::cis(-PI * s * s * dt / (mass * n))
        })
        .collect()
}

/// Multiplies impulse component `b` by `exp(-i pi b^2 dt / (m N))`.
pub fn kinetic_phase(phi: &GridWaveFunction, dt: f64, mass: f64) -> GridWaveFunction {
    debug_assert_eq!(phi.representation, Representation::Impulse);
    let amps = phi
        .amplitudes
        .iter()
        .zip(kinetic_phases(phi.grid, dt, mass))
        .map(|(a, k)| a * k)
        .collect();
    GridWaveFunction::from_unitary_image(phi.grid, phi.representation, amps)
}

/// One split step with the field's first sample set.
pub fn step(psi: &GridWaveFunction, field: &PotentialField, dt: f64) -> Result<GridWaveFunction> {
    let mut stepper = SplitStepper::new(psi.grid, field, dt)?;
    let mut amps = psi.amplitudes.clone();
    stepper.advance(&mut amps, 0)?;
    Ok(GridWaveFunction::from_unitary_image(psi.grid, Representation::Coordinate, amps))
}

/// The adjoint splitting: kinetic then potential phase. With `-dt` it undoes
/// [`step`].
pub fn step_adjoint(
    psi: &GridWaveFunction,
    field: &PotentialField,
    dt: f64,
) -> Result<GridWaveFunction> {
    let samples = field.at_step(0)?;
    let kicked = idft(&kinetic_phase(&dft(psi), dt, field.mass()));
    Ok(potential_phase(&kicked, samples, dt))
}

/// Applies `steps` split steps; step `i` uses the field's samples for step `i`.
pub fn evolve(
    psi0: &GridWaveFunction,
    field: &PotentialField,
    dt: f64,
    steps: usize,
) -> Result<GridWaveFunction> {
    let mut amps = psi0.amplitudes.clone();
    if steps > 0 {
        let mut stepper = SplitStepper::new(psi0.grid, field, dt)?;
        for i in 0..steps {
            stepper.advance(&mut amps, i)?;
        }
    }
    Ok(GridWaveFunction::from_unitary_image(
        psi0.grid,
        psi0.representation,
        amps,
    ))
}

/// One point of an evolution trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub position: f64,
    pub momentum: f64,
}

/// Like [`evolve`] but records norm and expectations every `every` steps
/// (and at both ends).
pub fn evolve_traced(
    psi0: &GridWaveFunction,
    field: &PotentialField,
    dt: f64,
    steps: usize,
    every: usize,
) -> Result<(GridWaveFunction, Vec<TracePoint>)> {
    let every = every.max(1);
    let grid = psi0.grid;
    let record = |step: usize, amps: &[Complex64]| {
        let psi = GridWaveFunction::from_unitary_image(grid, Representation::Coordinate, amps.to_vec());
        TracePoint {
            step,
            time: step as f64 * dt,
            norm: psi.norm(),
            position: expectation(&psi, Observable::Position),
            momentum: expectation(&psi, Observable::Momentum),
        }
    };
    let mut amps = psi0.amplitudes.clone();
    let mut trace = vec![record(0, &amps)];
    if steps > 0 {
        let mut stepper = SplitStepper::new(grid, field, dt)?;
        for i in 0..steps {
            stepper.advance(&mut amps, i)?;
            if (i + 1) % every == 0 || i + 1 == steps {
                trace.push(record(i + 1, &amps));
            }
        }
    }
    Ok((
        GridWaveFunction::from_unitary_image(grid, Representation::Coordinate, amps),
        trace,
    ))
}

/// Reusable state for repeated split steps on one grid.
struct SplitStepper<'a> {
    field: &'a PotentialField,
    dt: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kinetic: Vec<Complex64>,
    potential: Vec<Complex64>,
    potential_step: Option<usize>,
    scratch: Vec<Complex64>,
}

impl<'a> SplitStepper<'a> {
    fn new(grid: Grid, field: &'a PotentialField, dt: f64) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::invalid("time step must be finite"));
        }
        if field.points() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                actual: field.points(),
            });
        }
        let (forward, inverse) = plans(grid.points());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            field,
            dt,
            kinetic: kinetic_phases(grid, dt, field.mass()),
            forward,
            inverse,
            potential: Vec::new(),
            potential_step: None,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    fn advance(&mut self, amps: &mut [Complex64], step: usize) -> Result<()> {
        let key = match self.field.samples {
            PotentialSamples::Static(_) => 0,
            PotentialSamples::Stepped(_) => step,
        };
        if self.potential_step != Some(key) {
            let dt = self.dt;
            self.potential = self
                .field
                .at_step(key)?
                .iter()
                .map(|v| Complex64::cis(-v * dt))
                .collect();
            self.potential_step = Some(key);
        }
        let scale = (amps.len() as f64).sqrt().recip();
        for (a, p) in amps.iter_mut().zip(&self.potential) {
            *a *= p;
        }
        self.forward.process_with_scratch(amps, &mut self.scratch);
        for (a, k) in amps.iter_mut().zip(&self.kinetic) {
            *a *= k * scale;
        }
        self.inverse.process_with_scratch(amps, &mut self.scratch);
        for a in amps.iter_mut() {
            *a *= scale;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Position,
    Momentum,
}

pub fn expectation(psi: &GridWaveFunction, observable: Observable) -> f64 {
    let grid = psi.grid;
    match observable {
        Observable::Position => psi
            .amplitudes
            .iter()
            .enumerate()
            .map(|(a, amp)| grid.position(a) * amp.norm_sqr())
            .sum(),
        Observable::Momentum => dft(psi)
            .amplitudes
            .iter()
            .enumerate()
            .map(|(b, amp)| grid.momentum(b) * amp.norm_sqr())
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

/// Central-difference gradient of grid samples, one-sided at the ends.
fn sample_gradient(samples: &[f64], spacing: f64) -> Vec<f64> {
    let n = samples.len();
    (0..n)
        .map(|a| {
            if n == 1 {
                0.0
            } else if a == 0 {
                (samples[1] - samples[0]) / spacing
            } else if a == n - 1 {
                (samples[n - 1] - samples[n - 2]) / spacing
            } else {
                (samples[a + 1] - samples[a - 1]) / (2.0 * spacing)
            }
        })
        .collect()
}

/// Symplectic-Euler integration of `X' = P / m`, `P' = -dV/dX`.
///
/// Each step applies the force kick before the drift, the same order as the
/// quantum split step. The gradient is interpolated linearly between grid
/// points. Returns `steps + 1` points including the initial one.
pub fn classical_trajectory(
    grid: Grid,
    x0: f64,
    p0: f64,
    field: &PotentialField,
    dt: f64,
    steps: usize,
) -> Result<Vec<PhasePoint>> {
    let spacing = grid.spacing();
    let half = grid.half_range();
    let in_range = |x: f64| x > -half && x < half;
    if !in_range(x0) {
        return Err(Error::OutOfRange { step: 0, x: x0 });
    }
    let mass = field.mass();
    let mut gradient = Vec::new();
    let mut gradient_step = None;
    let mut point = PhasePoint { x: x0, p: p0 };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(point);
    for i in 0..steps {
        let key = if field.step_count().is_some() { i } else { 0 };
        if gradient_step != Some(key) {
            gradient = sample_gradient(field.at_step(key)?, spacing);
            gradient_step = Some(key);
        }
        let u = (point.x + half) / spacing;
        let a = (u.floor() as usize).min(grid.points() - 1);
        let force = if a + 1 < grid.points() {
            let t = u - a as f64;
            gradient[a] * (1.0 - t) + gradient[a + 1] * t
        } else {
            gradient[a]
        };
        point.p -= force * dt;
        point.x += point.p * dt / mass;
        if !in_range(point.x) {
            return Err(Error::OutOfRange {
                step: i + 1,
                x: point.x,
            });
        }
        out.push(point);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: u32) -> Grid {
        Grid::new(l).unwrap()
    }

    #[test]
    fn grid_units() {
        for l in 1..12 {
            let g = grid(l);
            let n = g.points() as f64;
            assert!((g.spacing() * g.spacing() * n - 2.0 * PI).abs() < 1e-12);
            assert!((g.spacing() * n / 2.0 - g.half_range()).abs() < 1e-12);
            assert!((g.position(0) + g.half_range()).abs() < 1e-12);
        }
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn signed_momentum_indices() {
        let g = grid(3);
        let s: Vec<i64> = (0..8).map(|b| g.signed_index(b)).collect();
        assert_eq!(s, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn dft_of_delta_is_uniform() {
        let g = grid(4);
        let phi = dft(&GridWaveFunction::delta(g, 0).unwrap());
        let expected = 0.25;
        for a in phi.amplitudes() {
            assert!((a.re - expected).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
        assert_eq!(phi.representation(), Representation::Impulse);
    }

    #[test]
    fn dft_of_uniform_is_delta() {
        let g = grid(4);
        let uniform = GridWaveFunction::new(g, vec![Complex64::new(0.25, 0.0); 16]).unwrap();
        let phi = dft(&uniform);
        assert!((phi.amplitudes()[0].re - 1.0).abs() < 1e-15);
        assert!(phi.amplitudes()[1..].iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn potential_phase_cases() {
        let g = grid(5);
        let psi = GridWaveFunction::gaussian(g, 0.5, 1.0, 1.0).unwrap();
        let zero = vec![0.0; 32];
        assert_eq!(potential_phase(&psi, &zero, 0.3), psi);
        let constant = vec![2.0; 32];
        let shifted = potential_phase(&psi, &constant, 0.3);
        let phase = Complex64::cis(-0.6);
        for (a, b) in shifted.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b * phase).norm() < 1e-15);
        }
        let wild: Vec<f64> = (0..32).map(|a| (a as f64).sin() * 7.0).collect();
        let out = potential_phase(&psi, &wild, 0.9);
        for (a, b) in out.probabilities().iter().zip(psi.probabilities()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn kinetic_phase_cases() {
        let g = grid(5);
        let phi = dft(&GridWaveFunction::gaussian(g, 0.0, 0.7, 1.2).unwrap());
        let out = kinetic_phase(&phi, 0.4, 1.0);
        assert_eq!(out.amplitudes()[0], phi.amplitudes()[0]);
        assert_eq!(kinetic_phase(&phi, 0.0, 1.0), phi);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_plane_wave_picks_up_kinetic_phase() {
        let g = grid(6);
        let field = PotentialField::zero(g, 1.0).unwrap();
        let n = g.points() as f64;
        for b0 in [0usize, 3, 60] {
            let psi = GridWaveFunction::plane_wave(g, b0).unwrap();
            let out = step(&psi, &field, 0.25).unwrap();
            let s = g.signed_index(b0) as f64;
            let phase = Complex64::cis(-PI * s * s * 0.25 / n);
            for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((a - b * phase).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let g = grid(5);
        let psi = GridWaveFunction::gaussian(g, 0.0, 0.0, 1.0).unwrap();
        let field = PotentialField::harmonic(g, 1.0, 1.0).unwrap();
        assert_eq!(evolve(&psi, &field, 0.1, 0).unwrap(), psi);
    }

    #[test]
    fn stepped_field_must_cover_all_steps() {
        let g = grid(3);
        let field = PotentialField::time_dependent(g, vec![vec![0.0; 8]; 2], 1.0).unwrap();
        let psi = GridWaveFunction::delta(g, 4).unwrap();
        assert!(evolve(&psi, &field, 0.1, 2).is_ok());
        assert!(evolve(&psi, &field, 0.1, 3).is_err());
    }

    #[test]
    fn field_validation() {
        let g = grid(3);
        assert!(PotentialField::new(g, vec![0.0; 7], 1.0).is_err());
        assert!(PotentialField::new(g, vec![f64::NAN; 8], 1.0).is_err());
        assert!(PotentialField::zero(g, 0.0).is_err());
    }

    #[test]
    fn expectation_examples() {
        let g = grid(7);
        let centered = GridWaveFunction::gaussian(g, 0.0, 0.0, 1.5).unwrap();
        // q_a is symmetric about zero except for the unpaired point at -A,
        // where this packet has negligible weight.
        assert!(expectation(&centered, Observable::Position).abs() < 1e-9);
        assert!(expectation(&centered, Observable::Momentum).abs() < 1e-9);
        for b0 in [5usize, 120] {
            let pw = GridWaveFunction::plane_wave(g, b0).unwrap();
            assert!((expectation(&pw, Observable::Momentum) - g.momentum(b0)).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_free_motion() {
        let g = grid(8);
        let field = PotentialField::zero(g, 2.0).unwrap();
        let traj = classical_trajectory(g, -1.0, 0.5, &field, 0.01, 200).unwrap();
        for (i, pt) in traj.iter().enumerate() {
            let t = i as f64 * 0.01;
            assert!((pt.x - (-1.0 + 0.5 * t / 2.0)).abs() < 1e-12);
            assert_eq!(pt.p, 0.5);
        }
    }

    #[test]
    fn classical_constant_force() {
        let g = grid(8);
        let field = PotentialField::linear(g, 0.3, 1.0).unwrap();
        let traj = classical_trajectory(g, 0.0, 1.0, &field, 0.01, 300).unwrap();
        for (i, pt) in traj.iter().enumerate() {
            assert!((pt.p - (1.0 - 0.3 * i as f64 * 0.01)).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_leaving_grid_is_an_error() {
        let g = grid(4);
        let field = PotentialField::zero(g, 1.0).unwrap();
        let err = classical_trajectory(g, 0.0, 5.0, &field, 0.1, 100).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }
}
