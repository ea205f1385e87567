//! Chain assembly driven by elementary scatterings and a fixed option value.

mod chain;
mod engine;
mod photon;
mod physics;
mod scattering;

pub use chain::{ActiveSystem, Alphabet, BondDescriptor, BondKind, Chain, Element, Unit};
pub use engine::{
    assembly_step, compare_scenarios, evaluate_scenario, run_assembly, AssemblyResult,
    ChainComparison, HistogramEntry, ImpossibleReason, OptionRecord, RankedReport, Scenario,
    ScatterCache, ScenarioReport, DEFAULT_MAX_STEPS,
};
pub use photon::{complement, photon_scenario, photon_table};
pub use physics::{
    golden_rule_distribution, golden_rule_prob, lippmann_schwinger_solve, resolvent, Channel,
    ScatteringState, MAX_LS_DIMENSION,
};
pub use scattering::{
    scatter, select_outcome, Attachment, ContextKey, Outcome, OutcomeDistribution, ReservoirEntry,
    ReservoirSpec, ScatteringTable, WeightedOutcome,
};
