//! Pulse-biased scenarios over a two-letter assembly alphabet.
//!
//! A pulse tuned to one letter makes that letter `l` times more likely to
//! join at the step it is applied. Spelling the target word with pulses
//! gives a scenario whose per-step weights are `l/(l+1)` for the pulsed
//! letter and `1/(l+1)` for the other.

use super::chain::{BondKind, Element};
use super::engine::Scenario;
use super::scattering::{
    Attachment, ContextKey, Outcome, OutcomeDistribution, ReservoirEntry, ReservoirSpec,
    ScatteringTable,
};
use crate::error::{Error, Result};

/// Builds the scenario for a pulse sequence. Reservoir entries always list
/// `pair[0]` first.
pub fn photon_scenario(
    pulses: &[Element],
    bias: f64,
    pair: [&Element; 2],
    state: &str,
    max_steps: usize,
) -> Result<Scenario> {
    if !bias.is_finite() || bias < 1.0 {
        return Err(Error::invalid(format!("pulse bias must be at least 1, got {bias}")));
    }
    if pair[0] == pair[1] {
        return Err(Error::invalid("the pulse alphabet needs two distinct letters"));
    }
    let favored = bias / (bias + 1.0);
    let other = 1.0 / (bias + 1.0);
    let steps = pulses
        .iter()
        .map(|p| {
            let first = if p == pair[0] {
                favored
            } else if p == pair[1] {
                other
            } else {
                return Err(Error::invalid(format!(
                    "pulse letter {p} is not one of {} / {}",
                    pair[0], pair[1]
                )));
            };
            ReservoirSpec::new(vec![
                ReservoirEntry {
                    element: pair[0].clone(),
                    state: state.to_string(),
                    weight: first,
                },
                ReservoirEntry {
                    element: pair[1].clone(),
                    state: state.to_string(),
                    weight: 1.0 - first,
                },
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(steps, max_steps)
}

/// Table in which every incoming pair letter attaches itself with certainty,
/// for every context built from `context_letters` and both bond kinds.
pub fn photon_table(
    pair: [&Element; 2],
    state: &str,
    context_letters: &[Element],
    bond_to_coding: BondKind,
) -> ScatteringTable {
    let mut table = ScatteringTable::new();
    for terminal_bond in [BondKind::Covalent, BondKind::Hydrogen] {
        for coding in context_letters {
            for growing in context_letters {
                for incoming in pair {
                    table.insert(
                        ContextKey {
                            terminal_bond,
                            coding_element: coding.clone(),
                            growing_element: growing.clone(),
                            incoming_element: incoming.clone(),
                            incoming_state: state.to_string(),
                        },
                        OutcomeDistribution::point(Outcome::Admitted(Attachment {
                            element: incoming.clone(),
                            bond_to_coding,
                            position: [0.0, 0.0, 1.0],
                        })),
                    );
                }
            }
        }
    }
    table
}

/// Letter-wise complement of a word over `pair`.
pub fn complement(word: &[Element], pair: [&Element; 2]) -> Result<Vec<Element>> {
    word.iter()
        .map(|w| {
            if w == pair[0] {
                Ok(pair[1].clone())
            } else if w == pair[1] {
                Ok(pair[0].clone())
            } else {
                Err(Error::invalid(format!("letter {w} is not in the pair")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::engine::DEFAULT_MAX_STEPS;

    fn e(s: &str) -> Element {
        Element::new(s).unwrap()
    }

    fn weights(s: &Scenario) -> Vec<(f64, f64)> {
        s.steps()
            .iter()
            .map(|r| (r.entries()[0].weight, r.entries()[1].weight))
            .collect()
    }

    #[test]
    fn unbiased_pulses_are_uniform() {
        let (a, b) = (e("A"), e("B"));
        let s = photon_scenario(&[a.clone(), b.clone()], 1.0, [&a, &b], "g", DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(weights(&s), vec![(0.5, 0.5), (0.5, 0.5)]);
    }

    #[test]
    fn bias_two_weights() {
        let (a, b) = (e("A"), e("B"));
        let s = photon_scenario(&[a.clone(), b.clone()], 2.0, [&a, &b], "g", DEFAULT_MAX_STEPS).unwrap();
        let w = weights(&s);
        assert!((w[0].0 - 2.0 / 3.0).abs() < 1e-15 && (w[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((w[1].0 - 1.0 / 3.0).abs() < 1e-15 && (w[1].1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn foreign_pulse_is_rejected() {
        let (a, b) = (e("A"), e("B"));
        assert!(photon_scenario(&[e("C")], 2.0, [&a, &b], "g", DEFAULT_MAX_STEPS).is_err());
        assert!(photon_scenario(&[a.clone()], 0.5, [&a, &b], "g", DEFAULT_MAX_STEPS).is_err());
    }

    #[test]
    fn complement_swaps_letters() {
        let (a, b) = (e("A"), e("B"));
        let c = complement(&[a.clone(), a.clone(), b.clone()], [&a, &b]).unwrap();
        assert_eq!(c, vec![b.clone(), b, a]);
    }
}
