use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use super::chain::{ActiveSystem, BondKind, Element};
use crate::error::{Error, Result};
use crate::option_model::{OptionCursor, OptionValue, NORM_TOLERANCE};

/// One reservoir component: an element in a labeled internal state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReservoirEntry {
    pub element: Element,
    pub state: String,
    pub weight: f64,
}

/// Weighted reservoir preparation for one assembly step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReservoirSpec {
    entries: Vec<ReservoirEntry>,
}

impl ReservoirSpec {
    pub fn new(mut entries: Vec<ReservoirEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("reservoir needs at least one entry"));
        }
        if entries.iter().any(|e| !(e.weight >= 0.0) || !e.weight.is_finite()) {
            return Err(Error::invalid("reservoir weights must be nonnegative and finite"));
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("reservoir weights sum to {total}, not 1")));
        }
        // -0.0 would hash differently from 0.0
        entries.iter_mut().for_each(|e| e.weight += 0.0);
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ReservoirEntry] {
        &self.entries
    }
}

impl Eq for ReservoirSpec {}

impl Hash for ReservoirSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for e in &self.entries {
            e.element.hash(state);
            e.state.hash(state);
            e.weight.to_bits().hash(state);
        }
    }
}

/// Lookup key of a scattering table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ContextKey {
    pub terminal_bond: BondKind,
    pub coding_element: Element,
    pub growing_element: Element,
    pub incoming_element: Element,
    pub incoming_state: String,
}

impl ContextKey {
    pub fn for_entry(active: &ActiveSystem, entry: &ReservoirEntry) -> Self {
        Self {
            terminal_bond: active.terminal_bond(),
            coding_element: active.coding_element().clone(),
            growing_element: active.growing_element().clone(),
            incoming_element: entry.element.clone(),
            incoming_state: entry.state.clone(),
        }
    }
}

impl std::fmt::Display for ContextKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.terminal_bond,
            self.coding_element,
            self.growing_element,
            self.incoming_element,
            self.incoming_state
        )
    }
}

/// The new unit and how it binds. The bond to the growing chain is always
/// covalent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attachment {
    pub element: Element,
    pub bond_to_coding: BondKind,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Admitted(Attachment),
    NonAdmitted { label: String },
}

impl Outcome {
    pub fn is_admitted(&self) -> bool {
        matches!(self, Outcome::Admitted(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedOutcome {
    pub outcome: Outcome,
    pub weight: f64,
}

/// Finite list of weighted scattering outcomes; weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    outcomes: Vec<WeightedOutcome>,
}

impl OutcomeDistribution {
    /// Weights must already be normalized (within tolerance).
    pub fn new(outcomes: Vec<(Outcome, f64)>) -> Result<Self> {
        let total = Self::check(&outcomes)?;
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("outcome weights sum to {total}, not 1")));
        }
        Ok(Self::scaled(outcomes, total))
    }

    /// Renormalizes any nonnegative weights with a positive total, e.g. after
    /// truncating a scattering result to a few channels.
    pub fn from_weights(outcomes: Vec<(Outcome, f64)>) -> Result<Self> {
        let total = Self::check(&outcomes)?;
        if total <= 0.0 {
            return Err(Error::invalid("outcome weights have zero total"));
        }
        Ok(Self::scaled(outcomes, total))
    }

    pub fn point(outcome: Outcome) -> Self {
        Self {
            outcomes: vec![WeightedOutcome {
                outcome,
                weight: 1.0,
            }],
        }
    }

    fn check(outcomes: &[(Outcome, f64)]) -> Result<f64> {
        if outcomes.is_empty() {
            return Err(Error::invalid("outcome distribution needs at least one outcome"));
        }
        if outcomes.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("outcome weights must be nonnegative and finite"));
        }
        Ok(outcomes.iter().map(|(_, w)| w).sum())
    }

    fn scaled(outcomes: Vec<(Outcome, f64)>, total: f64) -> Self {
        Self {
            outcomes: outcomes
                .into_iter()
                .map(|(outcome, w)| WeightedOutcome {
                    outcome,
                    weight: if total == 1.0 { w } else { w / total },
                })
                .collect(),
        }
    }

    pub fn outcomes(&self) -> &[WeightedOutcome] {
        &self.outcomes
    }

    pub fn outcome(&self, index: usize) -> &Outcome {
        &self.outcomes[index].outcome
    }

    pub fn weights(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.weight).collect()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScatteringTable {
    entries: BTreeMap<ContextKey, OutcomeDistribution>,
}

impl ScatteringTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: ContextKey, dist: OutcomeDistribution) -> Option<OutcomeDistribution> {
        self.entries.insert(key, dist)
    }

    pub fn get(&self, key: &ContextKey) -> Option<&OutcomeDistribution> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContextKey, &OutcomeDistribution)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Mixes the per-entry outcome distributions with the reservoir weights.
///
/// Equal outcomes from different entries are merged; the order is that of
/// first appearance, entries taken in reservoir order.
pub fn scatter(
    table: &ScatteringTable,
    active: &ActiveSystem,
    reservoir: &ReservoirSpec,
) -> Result<OutcomeDistribution> {
    let mut mixed: Vec<(Outcome, f64)> = Vec::new();
    for entry in reservoir.entries() {
        let key = ContextKey::for_entry(active, entry);
        let dist = table
            .get(&key)
            .ok_or_else(|| Error::UnknownReaction(key.to_string()))?;
        for o in dist.outcomes() {
            let w = entry.weight * o.weight;
            match mixed.iter_mut().find(|(x, _)| *x == o.outcome) {
                Some((_, acc)) => *acc += w,
                None => mixed.push((o.outcome.clone(), w)),
            }
        }
    }
    OutcomeDistribution::from_weights(mixed)
}

/// Index of the outcome selected by `option` from a fresh cursor.
pub fn select_outcome(dist: &OutcomeDistribution, option: OptionValue) -> usize {
    OptionCursor::full()
        .select(&dist.weights(), option)
        .expect("a full cursor reaches every option")
        .0
}
