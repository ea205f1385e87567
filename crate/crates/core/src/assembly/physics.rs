//! Desk-scale helpers for filling scattering tables: golden-rule channel
//! weights and the iterated Lippmann-Schwinger equation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::scattering::{Outcome, OutcomeDistribution};
use crate::error::{Error, Result};

/// Largest system accepted by [`lippmann_schwinger_solve`].
pub const MAX_LS_DIMENSION: usize = 64;

/// Transition weight `(2 pi / hbar) |m|^2 rho`.
pub fn golden_rule_prob(matrix_element: Complex64, density_of_states: f64, hbar: f64) -> Result<f64> {
    if !(density_of_states >= 0.0) || !density_of_states.is_finite() {
        return Err(Error::invalid(format!(
            "density of states must be nonnegative, got {density_of_states}"
        )));
    }
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::invalid("hbar must be positive"));
    }
    Ok(2.0 * std::f64::consts::PI / hbar * matrix_element.norm_sqr() * density_of_states)
}

/// A scattering channel described by its matrix element and final density
/// of states.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub outcome: Outcome,
    pub matrix_element: Complex64,
    pub density_of_states: f64,
}

/// Golden-rule weights of the channels, renormalized.
pub fn golden_rule_distribution(channels: Vec<Channel>, hbar: f64) -> Result<OutcomeDistribution> {
    let weighted = channels
        .into_iter()
        .map(|c| Ok((c.outcome, golden_rule_prob(c.matrix_element, c.density_of_states, hbar)?)))
        .collect::<Result<Vec<_>>>()?;
    OutcomeDistribution::from_weights(weighted)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringState {
    #[serde(serialize_with = "serialize_vector")]
    pub state: DVector<Complex64>,
    pub iterations: usize,
    /// Norm of the last iterate difference.
    pub last_update: f64,
}

fn serialize_vector<S: serde::Serializer>(v: &DVector<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v.iter() {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Resolvent `(E - H + i eta)^-1`.
pub fn resolvent(h: &DMatrix<Complex64>, energy: f64, eta: f64) -> Result<DMatrix<Complex64>> {
    let n = h.nrows();
    let shifted = DMatrix::from_diagonal_element(n, n, Complex64::new(energy, eta)) - h;
    shifted.try_inverse().ok_or(Error::SingularResolvent)
}

/// Iterates `psi <- phi + G V psi` until successive iterates differ by less
/// than `tol`.
#[allow(clippy::too_many_arguments)]
pub fn lippmann_schwinger_solve(
    h: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
    phi: &DVector<Complex64>,
    energy: f64,
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ScatteringState> {
    let n = h.nrows();
    if n == 0 || n > MAX_LS_DIMENSION {
        return Err(Error::CapExceeded {
            points: n,
            cap: MAX_LS_DIMENSION,
        });
    }
    if h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: h.ncols() });
    }
    if v.nrows() != n || v.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: v.nrows() });
    }
    if phi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: phi.len() });
    }
    let asymmetry = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if asymmetry > 1e-12 * scale {
        return Err(Error::invalid("H_a must be Hermitian"));
    }
    if !(eta > 0.0) || !(tol > 0.0) || max_iter == 0 {
        return Err(Error::invalid("need eta > 0, tol > 0 and max_iter >= 1"));
    }

    let kernel = resolvent(h, energy, eta)? * v;
    let mut psi = phi.clone();
    let mut last_update = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next = phi + &kernel * &psi;
        last_update = (&next - &psi).norm();
        psi = next;
        if !last_update.is_finite() {
            return Err(Error::Divergence { iterations: iteration, last_update });
        }
        if last_update < tol {
            return Ok(ScatteringState {
                state: psi,
                iterations: iteration,
                last_update,
            });
        }
    }
    Err(Error::Divergence {
        iterations: max_iter,
        last_update,
    })
}
