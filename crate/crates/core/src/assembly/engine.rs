//! Scenario runs, option sweeps and scenario ranking.
//!
//! A run walks the scenario step by step: mix the reservoir through the
//! scattering table, let the fixed option pick an outcome, and extend the
//! growing chain. The option never changes during a run; each selection
//! narrows an [`OptionCursor`] so that successive choices are split from the
//! bin chosen before them. Scattering results and selections are memoized in
//! a [`ScatterCache`] shared across runs.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use once_cell::sync::OnceCell;
use rayon::prelude::*;
use serde::Serialize;

use super::chain::{ActiveSystem, BondKind, Chain, Element, Unit};
use super::scattering::{scatter, Outcome, OutcomeDistribution, ReservoirSpec, ScatteringTable};
use crate::error::{Error, Result};
use crate::option_model::{OptionCursor, OptionValue};

/// Default maximum scenario length `T0`.
pub const DEFAULT_MAX_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    name: Option<String>,
    steps: Vec<ReservoirSpec>,
}

impl Scenario {
    pub fn new(steps: Vec<ReservoirSpec>, max_steps: usize) -> Result<Self> {
        if steps.is_empty() || steps.len() > max_steps {
            return Err(Error::invalid(format!(
                "scenario length {} outside 1..={max_steps}",
                steps.len()
            )));
        }
        Ok(Self { name: None, steps })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn steps(&self) -> &[ReservoirSpec] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ImpossibleReason {
    NonAdmitted { label: String },
    CodingChainExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyResult {
    Assembled(Chain),
    /// `step` is 1-based.
    Impossible { step: usize, reason: ImpossibleReason },
}

impl AssemblyResult {
    pub fn chain(&self) -> Option<&Chain> {
        match self {
            AssemblyResult::Assembled(c) => Some(c),
            AssemblyResult::Impossible { .. } => None,
        }
    }
}

/// Extends the growing chain by the admitted attachment.
pub fn assembly_step(active: &ActiveSystem, outcome: &Outcome) -> Result<ActiveSystem> {
    match outcome {
        Outcome::Admitted(a) => active.extended(Unit::new(a.element.clone(), a.position), a.bond_to_coding),
        Outcome::NonAdmitted { .. } => Err(Error::NotAdmitted),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ScatterKey {
    terminal_bond: BondKind,
    coding_element: Element,
    growing_element: Element,
    reservoir: ReservoirSpec,
}

impl ScatterKey {
    fn new(active: &ActiveSystem, reservoir: &ReservoirSpec) -> Self {
        Self {
            terminal_bond: active.terminal_bond(),
            coding_element: active.coding_element().clone(),
            growing_element: active.growing_element().clone(),
            reservoir: reservoir.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SelectionKey {
    scatter: ScatterKey,
    option: OptionValue,
    cursor: (u64, u64),
}

type Slots<K, V> = Mutex<HashMap<K, Arc<OnceCell<V>>>>;

fn slot<K: Eq + Hash, V>(slots: &Slots<K, V>, key: K) -> Arc<OnceCell<V>> {
    slots
        .lock()
        .expect("scatter cache poisoned")
        .entry(key)
        .or_default()
        .clone()
}

/// Memo of scattering results and option selections.
///
/// Each key is computed exactly once even under concurrent sweeps.
#[derive(Debug, Default)]
pub struct ScatterCache {
    distributions: Slots<ScatterKey, Arc<OutcomeDistribution>>,
    selections: Slots<SelectionKey, (usize, OptionCursor)>,
    scatter_computations: AtomicUsize,
    selection_computations: AtomicUsize,
}

impl ScatterCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scatter_computations(&self) -> usize {
        self.scatter_computations.load(Ordering::SeqCst)
    }

    pub fn selection_computations(&self) -> usize {
        self.selection_computations.load(Ordering::SeqCst)
    }

    fn distribution(
        &self,
        key: &ScatterKey,
        table: &ScatteringTable,
        active: &ActiveSystem,
        reservoir: &ReservoirSpec,
    ) -> Result<Arc<OutcomeDistribution>> {
        slot(&self.distributions, key.clone())
            .get_or_try_init(|| {
                self.scatter_computations.fetch_add(1, Ordering::SeqCst);
                scatter(table, active, reservoir).map(Arc::new)
            })
            .cloned()
    }

    fn selection(
        &self,
        key: SelectionKey,
        dist: &OutcomeDistribution,
        cursor: OptionCursor,
    ) -> Result<(usize, OptionCursor)> {
        let option = key.option;
        slot(&self.selections, key)
            .get_or_try_init(|| {
                self.selection_computations.fetch_add(1, Ordering::SeqCst);
                cursor.select(&dist.weights(), option)
            })
            .copied()
    }
}

/// One pass of assembly under a fixed option value.
pub fn run_assembly(
    scenario: &Scenario,
    option: OptionValue,
    initial: &ActiveSystem,
    table: &ScatteringTable,
    cache: &ScatterCache,
) -> Result<AssemblyResult> {
    let mut active = initial.clone();
    let mut cursor = OptionCursor::full();
    for (i, reservoir) in scenario.steps().iter().enumerate() {
        let step = i + 1;
        // Known before scattering, so the whole remaining option interval is
        // impossible here whatever the outcome would be.
        if !active.can_extend() {
            return Ok(AssemblyResult::Impossible {
                step,
                reason: ImpossibleReason::CodingChainExhausted,
            });
        }
        let key = ScatterKey::new(&active, reservoir);
        let dist = cache.distribution(&key, table, &active, reservoir)?;
        let selection_key = SelectionKey {
            scatter: key,
            option,
            cursor: cursor.key(),
        };
        let (index, next) = cache.selection(selection_key, &dist, cursor)?;
        cursor = next;
        let outcome = dist.outcome(index);
        if let Outcome::NonAdmitted { label } = outcome {
            return Ok(AssemblyResult::Impossible {
                step,
                reason: ImpossibleReason::NonAdmitted {
                    label: label.clone(),
                },
            });
        }
        active = assembly_step(&active, outcome)?;
    }
    Ok(AssemblyResult::Assembled(active.growing().clone()))
}

/// How assembled chains are compared against the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainComparison {
    #[default]
    Letters,
    LettersAndCoordinates,
}

impl ChainComparison {
    pub fn matches(&self, result: &Chain, sample: &Chain) -> bool {
        match self {
            ChainComparison::Letters => result.same_letters(sample),
            ChainComparison::LettersAndCoordinates => result == sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionRecord {
    pub option: u64,
    pub result: AssemblyResult,
    pub lucky: bool,
}

/// One histogram class: a letter sequence, or `None` for impossible runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramEntry {
    pub letters: Option<Vec<Element>>,
    pub count: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: Option<String>,
    pub volume: u64,
    pub lucky_count: u64,
    pub lucky_fraction: f64,
    pub impossible_fraction: f64,
    pub histogram: Vec<HistogramEntry>,
    pub per_option: Vec<OptionRecord>,
}

impl ScenarioReport {
    /// Fraction of options that produced `letters`.
    pub fn fraction_of(&self, letters: &[Element]) -> f64 {
        self.histogram
            .iter()
            .find(|h| h.letters.as_deref() == Some(letters))
            .map_or(0.0, |h| h.fraction)
    }
}

/// Runs every option `1..=L` and scores the scenario against `sample`.
pub fn evaluate_scenario(
    scenario: &Scenario,
    sample: &Chain,
    initial: &ActiveSystem,
    table: &ScatteringTable,
    volume: u64,
    cache: &ScatterCache,
    comparison: ChainComparison,
) -> Result<ScenarioReport> {
    if volume == 0 {
        return Err(Error::invalid("option volume L must be at least 1"));
    }
    let per_option = (1..=volume)
        .into_par_iter()
        .map(|k| {
            let result = run_assembly(scenario, OptionValue::new(k, volume)?, initial, table, cache)?;
            let lucky = result.chain().is_some_and(|c| comparison.matches(c, sample));
            Ok(OptionRecord {
                option: k,
                result,
                lucky,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts: Vec<(Option<Vec<Element>>, u64)> = Vec::new();
    for rec in &per_option {
        let class = rec.result.chain().map(Chain::letters);
        match counts.iter_mut().find(|(c, _)| *c == class) {
            Some((_, n)) => *n += 1,
            None => counts.push((class, 1)),
        }
    }
    // Chains in lexicographic letter order, impossible last.
    counts.sort_by(|(a, _), (b, _)| match (a, b) {
        (Some(a), Some(b)) => a.cmp(b),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let scale = volume as f64;
    let lucky_count = per_option.iter().filter(|r| r.lucky).count() as u64;
    let impossible = per_option.iter().filter(|r| r.result.chain().is_none()).count() as u64;
    Ok(ScenarioReport {
        scenario: scenario.name().map(str::to_owned),
        volume,
        lucky_count,
        lucky_fraction: lucky_count as f64 / scale,
        impossible_fraction: impossible as f64 / scale,
        histogram: counts
            .into_iter()
            .map(|(letters, count)| HistogramEntry {
                letters,
                count,
                fraction: count as f64 / scale,
            })
            .collect(),
        per_option,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedReport {
    pub rank: usize,
    pub input_index: usize,
    pub successful: bool,
    pub report: ScenarioReport,
}

/// Evaluates every scenario and ranks them by lucky fraction (descending),
/// then impossible fraction (ascending), then input order. Scenarios whose
/// lucky fraction reaches `threshold` are flagged successful.
#[allow(clippy::too_many_arguments)]
pub fn compare_scenarios(
    scenarios: &[Scenario],
    sample: &Chain,
    initial: &ActiveSystem,
    table: &ScatteringTable,
    volume: u64,
    threshold: f64,
    cache: &ScatterCache,
    comparison: ChainComparison,
) -> Result<Vec<RankedReport>> {
    if scenarios.is_empty() {
        return Err(Error::invalid("at least one scenario is required"));
    }
    let mut reports = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            evaluate_scenario(s, sample, initial, table, volume, cache, comparison).map(|r| (i, r))
        })
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|(_, a), (_, b)| {
        b.lucky_count
            .cmp(&a.lucky_count)
            .then(a.impossible_fraction.total_cmp(&b.impossible_fraction))
    });
    Ok(reports
        .into_iter()
        .enumerate()
        .map(|(rank, (input_index, report))| RankedReport {
            rank: rank + 1,
            input_index,
            successful: report.lucky_fraction >= threshold,
            report,
        })
        .collect())
}
