//! Deterministic measurement driven by an option value.
//!
//! A [`DeterministicModel`] of dimension `N` and volume `L` splits the option
//! range `1..=L` into consecutive bins, one per basic state. Bin `j` covers
//! `L_{j-1} < k <= L_j` with `L_j = floor(L * sum_{p<=j} |lambda_p|^2)` and the
//! last threshold pinned to `L`. Measuring with option `k` returns the bin
//! that contains `k`; sweeping `k` over the whole range reproduces the Born
//! probabilities to within the bin quantization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on `sum |lambda_j|^2 - 1` accepted on ingestion.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state, renormalizing when the squared norm is within
    /// [`NORM_TOLERANCE`] of one.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state vector must have at least one amplitude"));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("state vector contains non-finite amplitudes"));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized {
                norm_sqr,
                tolerance: NORM_TOLERANCE,
            });
        }
        let scale = norm_sqr.sqrt().recip();
        // Leave already-normalized input untouched so stored states round-trip.
        let amplitudes = if (norm_sqr - 1.0).abs() <= 8.0 * f64::EPSILON {
            amplitudes
        } else {
            amplitudes.into_iter().map(|a| a * scale).collect()
        };
        Ok(Self { amplitudes })
    }

    /// Real nonnegative amplitudes `sqrt(p_j)`.
    pub fn from_probabilities(probabilities: &[f64]) -> Result<Self> {
        if probabilities.iter().any(|p| *p < 0.0) {
            return Err(Error::invalid("probabilities must be nonnegative"));
        }
        Self::new(
            probabilities
                .iter()
                .map(|p| Complex64::new(p.sqrt(), 0.0))
                .collect(),
        )
    }

    /// Basis vector `|index>`.
    pub fn basis(dimension: usize, index: usize) -> Result<Self> {
        if index >= dimension {
            return Err(Error::invalid(format!(
                "basis index {index} outside dimension {dimension}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self::new(amplitudes)
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies a (unitary) matrix and returns the image state.
    pub fn evolve(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.ncols() != self.dimension() || unitary.nrows() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: unitary.ncols(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        let out = unitary * v;
        Self::new(out.iter().copied().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DeterministicModel {
    dimension: usize,
    volume: u64,
}

impl DeterministicModel {
    pub fn new(dimension: usize, volume_per_outcome: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("model dimension must be at least 1"));
        }
        if volume_per_outcome == 0 {
            return Err(Error::invalid("option volume L must be at least 1"));
        }
        Ok(Self {
            dimension,
            volume: volume_per_outcome,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of option values `L`.
    pub fn volume_per_outcome(&self) -> u64 {
        self.volume
    }

    /// Total number of `(j, k)` pairs, `N * L`.
    pub fn total_volume(&self) -> u64 {
        self.dimension as u64 * self.volume
    }

    pub fn accuracy(&self) -> f64 {
        1.0 / self.volume as f64
    }

    /// Iterator over every option value of this model.
    pub fn options(&self) -> impl Iterator<Item = OptionValue> + '_ {
        (1..=self.volume).map(|k| OptionValue { k, volume: self.volume })
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: state.dimension(),
            });
        }
        Ok(())
    }

    fn check_option(&self, option: OptionValue) -> Result<()> {
        if option.volume != self.volume {
            return Err(Error::invalid(format!(
                "option drawn from volume {} used with a model of volume {}",
                option.volume, self.volume
            )));
        }
        Ok(())
    }
}

/// An option value `k` in `1..=L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OptionValue {
    k: u64,
    volume: u64,
}

impl OptionValue {
    pub fn new(k: u64, volume: u64) -> Result<Self> {
        if k == 0 || k > volume {
            return Err(Error::OptionOutOfRange { k, volume });
        }
        Ok(Self { k, volume })
    }

    pub fn index(&self) -> u64 {
        self.k
    }

    pub fn volume(&self) -> u64 {
        self.volume
    }
}

/// Thresholds `L_0 <= ... <= L_{N-1} = L`; `L_{-1} = 0` is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptionAssignment {
    thresholds: Vec<u64>,
}

impl OptionAssignment {
    pub fn thresholds(&self) -> &[u64] {
        &self.thresholds
    }

    pub fn volume(&self) -> u64 {
        *self.thresholds.last().expect("assignment is never empty")
    }

    /// `L_{j-1}`, with `L_{-1} = 0`.
    fn lower(&self, j: usize) -> u64 {
        if j == 0 {
            0
        } else {
            self.thresholds[j - 1]
        }
    }

    /// Options `k` with `L_{j-1} < k <= L_j`.
    pub fn bin(&self, j: usize) -> std::ops::RangeInclusive<u64> {
        self.lower(j) + 1..=self.thresholds[j]
    }

    pub fn bin_size(&self, j: usize) -> u64 {
        self.thresholds[j] - self.lower(j)
    }

    pub fn contains(&self, j: usize, k: u64) -> bool {
        j < self.thresholds.len() && self.lower(j) < k && k <= self.thresholds[j]
    }

    /// The unique outcome whose bin holds `k`.
    pub fn outcome(&self, k: u64) -> usize {
        debug_assert!(k >= 1 && k <= self.volume());
        self.thresholds.partition_point(|&t| t < k)
    }

    /// The pair set `{(j, k)}` this assignment stands for.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        (0..self.thresholds.len()).flat_map(move |j| self.bin(j).map(move |k| (j, k)))
    }
}

/// Floor thresholds for a weight vector whose sum is one.
/// `floor`, except that values within rounding noise of an integer are taken
/// to be that integer. Squared amplitudes such as `sqrt(0.2)^2` land just below
/// the exact product and would otherwise lose a whole option.
fn snapped_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

pub(crate) fn thresholds_from_weights(weights: &[f64], volume: u64) -> Vec<u64> {
    let scale = volume as f64;
    let last = weights.len() - 1;
    let mut cumulative = 0.0;
    let mut previous = 0;
    let mut out = Vec::with_capacity(weights.len());
    for (j, w) in weights.iter().enumerate() {
        cumulative += w;
        let t = if j == last {
            volume
        } else {
            (snapped_floor(scale * cumulative) as u64).clamp(previous, volume)
        };
        out.push(t);
        previous = t;
    }
    out
}

/// Partition of the options into outcome bins for `state`.
pub fn phi(model: &DeterministicModel, state: &StateVector) -> Result<OptionAssignment> {
    model.check_state(state)?;
    Ok(OptionAssignment {
        thresholds: thresholds_from_weights(&state.probabilities(), model.volume),
    })
}

pub fn measure(model: &DeterministicModel, state: &StateVector, option: OptionValue) -> Result<usize> {
    model.check_option(option)?;
    Ok(phi(model, state)?.outcome(option.k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub source: usize,
    pub target: usize,
}

/// Per-option outcome transitions between a state and its unitary image.
///
/// For each `k` the permutation swaps `(source, k)` with `(target, k)` and
/// fixes every other pair, so it is a genuine permutation of the full pair
/// set and carries `phi(source)` onto `phi(evolved)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptionPermutation {
    transitions: Vec<Transition>,
}

impl OptionPermutation {
    pub fn volume(&self) -> u64 {
        self.transitions.len() as u64
    }

    pub fn transition(&self, k: u64) -> Transition {
        self.transitions[(k - 1) as usize]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn apply(&self, (j, k): (usize, u64)) -> (usize, u64) {
        let t = self.transition(k);
        if j == t.source {
            (t.target, k)
        } else if j == t.target {
            (t.source, k)
        } else {
            (j, k)
        }
    }

    pub fn is_identity(&self) -> bool {
        self.transitions.iter().all(|t| t.source == t.target)
    }
}

/// `evolved` is `U * source`; the unitary itself never enters.
pub fn theta(
    model: &DeterministicModel,
    evolved: &StateVector,
    source: &StateVector,
) -> Result<OptionPermutation> {
    let before = phi(model, source)?;
    let after = phi(model, evolved)?;
    let transitions = (1..=model.volume)
        .map(|k| Transition {
            source: before.outcome(k),
            target: after.outcome(k),
        })
        .collect();
    Ok(OptionPermutation { transitions })
}

/// Fraction of the option sweep landing in each outcome, `(L_j - L_{j-1}) / L`.
pub fn sweep_statistics(model: &DeterministicModel, state: &StateVector) -> Result<Vec<f64>> {
    let assignment = phi(model, state)?;
    let scale = model.volume as f64;
    Ok((0..model.dimension)
        .map(|j| assignment.bin_size(j) as f64 / scale)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialMeasurement {
    /// Measured leading-bit prefix `x`.
    pub prefix: usize,
    pub collapsed: StateVector,
    /// Normalizing factor `d` of the selected block.
    pub norm: f64,
    /// Option for subsequent measurements of `collapsed`.
    pub residual: OptionValue,
}

/// Measures the leading `measured_bits` of an `n`-qubit register.
///
/// The prefix is chosen by the coarse model over the `2^m` block
/// probabilities. The position of `k` inside the selected bin is rescaled
/// onto `1..=L` and returned as the residual option, so a later measurement
/// of the collapsed state uses the option digits the prefix did not consume.
pub fn partial_measure(
    model: &DeterministicModel,
    state: &StateVector,
    measured_bits: u32,
    option: OptionValue,
) -> Result<PartialMeasurement> {
    model.check_state(state)?;
    model.check_option(option)?;
    let n = model.dimension;
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::invalid(format!(
            "partial measurement needs a 2^n dimension with n >= 1, got {n}"
        )));
    }
    let total_bits = n.trailing_zeros();
    if measured_bits == 0 || measured_bits >= total_bits {
        return Err(Error::invalid(format!(
            "measured bits must satisfy 1 <= m < {total_bits}, got {measured_bits}"
        )));
    }
    let block = 1usize << (total_bits - measured_bits);
    let blocks = n / block;
    let probabilities = state.probabilities();
    let block_probabilities: Vec<f64> = probabilities
        .chunks(block)
        .map(|c| c.iter().sum())
        .collect();
    debug_assert_eq!(block_probabilities.len(), blocks);

    let coarse = OptionAssignment {
        thresholds: thresholds_from_weights(&block_probabilities, model.volume),
    };
    let prefix = coarse.outcome(option.k);

    let start = prefix * block;
    let norm = state.amplitudes[start..start + block]
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNormBlock { block: prefix });
    }
    let collapsed = StateVector::new(
        state.amplitudes[start..start + block]
            .iter()
            .map(|a| a / norm)
            .collect(),
    )?;

    let lower = coarse.lower(prefix);
    let width = coarse.bin_size(prefix);
    let position = (option.k - lower) as u128;
    let residual = (position * model.volume as u128).div_ceil(width as u128) as u64;

    Ok(PartialMeasurement {
        prefix,
        collapsed,
        norm,
        residual: OptionValue::new(residual, model.volume)?,
    })
}

/// Width of a coordinate bin after resolving `measured_bits` leading bits.
pub fn coordinate_bin_width(measured_bits: u32) -> f64 {
    (-(measured_bits as f64)).exp2()
}

/// Width of the conjugate impulse bin left after a coordinate measurement
/// of `measured_bits` out of `total_bits`.
pub fn impulse_bin_width(total_bits: u32, measured_bits: u32) -> f64 {
    (-((total_bits - measured_bits) as f64)).exp2()
}

/// The part of an option value not yet consumed by earlier selections.
///
/// A cursor is a subinterval `[lo, hi)` of the unit interval. Selecting among
/// weights splits it proportionally; option `k` picks the child whose floor
/// thresholds `floor(L * boundary)` enclose it. The option itself never
/// changes. Starting from [`OptionCursor::full`] the first selection uses
/// exactly the thresholds of [`phi`], and the options reaching any sequence of
/// selections form a single bin whose size is within one of `L` times the
/// product of the selected weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptionCursor {
    lo: f64,
    hi: f64,
}

impl Default for OptionCursor {
    fn default() -> Self {
        Self::full()
    }
}

impl OptionCursor {
    pub fn full() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Bit pattern usable as a hash key.
    pub fn key(&self) -> (u64, u64) {
        (self.lo.to_bits(), self.hi.to_bits())
    }

    /// Options `k` still reachable through this cursor.
    pub fn option_range(&self, volume: u64) -> std::ops::RangeInclusive<u64> {
        let scale = volume as f64;
        snapped_floor(scale * self.lo) as u64 + 1..=snapped_floor(scale * self.hi) as u64
    }

    /// Picks the outcome for `option` among `weights` (normalized) and returns
    /// it with the narrowed cursor.
    pub fn select(&self, weights: &[f64], option: OptionValue) -> Result<(usize, OptionCursor)> {
        if weights.is_empty() {
            return Err(Error::invalid("cannot select among zero outcomes"));
        }
        let scale = option.volume as f64;
        let k = option.k;
        let mut lower_bound = self.lo;
        let mut lower = snapped_floor(scale * lower_bound) as u64;
        if k <= lower || k > snapped_floor(scale * self.hi) as u64 {
            return Err(Error::invalid(format!(
                "option {k} is not reachable through cursor [{}, {})",
                self.lo, self.hi
            )));
        }
        let width = self.hi - self.lo;
        let last = weights.len() - 1;
        let mut cumulative = 0.0;
        for (j, w) in weights.iter().enumerate() {
            cumulative += w;
            let upper_bound = if j == last {
                self.hi
            } else {
                (self.lo + width * cumulative).clamp(lower_bound, self.hi)
            };
            let upper = snapped_floor(scale * upper_bound) as u64;
            if lower < k && k <= upper {
                return Ok((
                    j,
                    OptionCursor {
                        lo: lower_bound,
                        hi: upper_bound,
                    },
                ));
            }
            lower_bound = upper_bound;
            lower = upper;
        }
        unreachable!("the last child bin ends at the cursor's upper threshold")
    }
}
