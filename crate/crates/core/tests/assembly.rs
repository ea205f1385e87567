mod common;

use common::*;
use detsim::assembly::{
    compare_scenarios, evaluate_scenario, golden_rule_prob, lippmann_schwinger_solve,
    photon_scenario, photon_table, run_assembly, ActiveSystem, Attachment, BondKind, Chain,
    ChainComparison, ContextKey, Element, Outcome, OutcomeDistribution, ReservoirEntry,
    ReservoirSpec, Scenario, ScatterCache, ScatteringTable, DEFAULT_MAX_STEPS,
};
use detsim::option_model::OptionValue;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn e(s: &str) -> Element {
    Element::new(s).unwrap()
}

fn two_letter_setup() -> (ActiveSystem, ScatteringTable, [Element; 2]) {
    let (a, b) = (e("A"), e("B"));
    let table = photon_table([&a, &b], "g", &[e("P"), a.clone(), b.clone()], BondKind::Hydrogen);
    let coding = Chain::from_letters(["P", "A", "B", "A", "B", "A"]).unwrap();
    let initial = ActiveSystem::new(coding, Chain::from_letters(["P"]).unwrap(), 1, &[BondKind::Covalent]).unwrap();
    (initial, table, [a, b])
}

fn even_step(pair: &[Element; 2], w: f64) -> ReservoirSpec {
    ReservoirSpec::new(vec![
        ReservoirEntry { element: pair[0].clone(), state: "g".into(), weight: w },
        ReservoirEntry { element: pair[1].clone(), state: "g".into(), weight: 1.0 - w },
    ])
    .unwrap()
}

#[test]
fn two_independent_halves_match_enumeration() {
    let (initial, table, pair) = two_letter_setup();
    let scenario = Scenario::new(vec![even_step(&pair, 0.5), even_step(&pair, 0.5)], DEFAULT_MAX_STEPS).unwrap();
    let sample = Chain::from_letters(["P", "A", "B"]).unwrap();
    let report = evaluate_scenario(&scenario, &sample, &initial, &table, 100, &ScatterCache::new(), ChainComparison::Letters).unwrap();
    let exact = enumerate_classes(&scenario, &initial, &table);
    assert_eq!(report.histogram.len(), 4);
    for h in &report.histogram {
        assert!((h.fraction - exact[&h.letters]).abs() <= 2.0 / 100.0);
    }
    assert!((report.histogram.iter().map(|h| h.fraction).sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((report.lucky_fraction - 0.25).abs() <= 2.0 / 100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_classes_match_enumeration(
        weights in prop::collection::vec(0.05f64..0.95, 1..=5),
        bias in 1.0f64..5.0,
        l in 50u64..1500,
    ) {
        let (initial, table, pair) = two_letter_setup();
        let steps = weights.iter().map(|&w| even_step(&pair, w)).collect();
        let scenario = Scenario::new(steps, DEFAULT_MAX_STEPS).unwrap();
        let sample = Chain::from_letters(["P"]).unwrap();
        let report = evaluate_scenario(&scenario, &sample, &initial, &table, l, &ScatterCache::new(), ChainComparison::Letters).unwrap();
        let exact = enumerate_classes(&scenario, &initial, &table);
        // No rejections here, so every class is a single branch.
        for h in &report.histogram {
            prop_assert!((h.fraction - exact[&h.letters]).abs() <= 1.0 / l as f64 + 1e-12);
        }

        let pulses: Vec<Element> = weights.iter().map(|&w| pair[usize::from(w < 0.5)].clone()).collect();
        let s = photon_scenario(&pulses, bias, [&pair[0], &pair[1]], "g", DEFAULT_MAX_STEPS).unwrap();
        let report = evaluate_scenario(&s, &sample, &initial, &table, l, &ScatterCache::new(), ChainComparison::Letters).unwrap();
        let exact = enumerate_classes(&s, &initial, &table);
        let mut target = vec![e("P")];
        target.extend(pulses.iter().cloned());
        let p = exact[&Some(target.clone())];
        prop_assert!((p - (bias / (bias + 1.0)).powi(pulses.len() as i32)).abs() < 1e-12);
        prop_assert!((report.fraction_of(&target) - p).abs() <= 1.0 / l as f64 + 1e-12);
    }

    #[test]
    fn iterative_scattering_matches_direct_solve(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = rng(seed);
        let h = random_hermitian(&mut rng, n);
        let energy = gaussian(&mut rng);
        let eta = 0.2;
        let g = detsim::assembly::resolvent(&h, energy, eta).unwrap();
        let g_norm = g.svd(false, false).singular_values.max();
        let raw = random_hermitian(&mut rng, n);
        let v = raw.scale(0.4 / (raw.clone().svd(false, false).singular_values.max() * g_norm));
        let phi = DVector::from_fn(n, |_, _| complex_gaussian(&mut rng));
        let solved = lippmann_schwinger_solve(&h, &v, &phi, energy, eta, 1e-14, 10_000).unwrap();
        let direct = lippmann_schwinger_direct(&h, &v, &phi, energy, eta);
        prop_assert!((&solved.state - &direct).camax() < 1e-10);
    }
}

#[test]
fn repeated_runs_are_served_from_the_cache() {
    let (initial, table, pair) = two_letter_setup();
    let scenario = Scenario::new(vec![even_step(&pair, 0.3); 4], DEFAULT_MAX_STEPS).unwrap();
    let cache = ScatterCache::new();
    let o = OptionValue::new(42, 100).unwrap();
    let first = run_assembly(&scenario, o, &initial, &table, &cache).unwrap();
    let (s, k) = (cache.scatter_computations(), cache.selection_computations());
    let second = run_assembly(&scenario, o, &initial, &table, &cache).unwrap();
    assert_eq!(first, second);
    assert_eq!((cache.scatter_computations(), cache.selection_computations()), (s, k));
}

#[test]
fn comparison_ranks_biased_scenarios() {
    let (initial, table, pair) = two_letter_setup();
    let word = [pair[0].clone(), pair[1].clone(), pair[0].clone()];
    let sample = Chain::from_letters(["P", "A", "B", "A"]).unwrap();
    let scenarios: Vec<Scenario> = [1.0, 4.0, 2.0]
        .iter()
        .map(|&bias| photon_scenario(&word, bias, [&pair[0], &pair[1]], "g", DEFAULT_MAX_STEPS).unwrap())
        .collect();
    let ranked = compare_scenarios(&scenarios, &sample, &initial, &table, 1000, 0.3, &ScatterCache::new(), ChainComparison::Letters).unwrap();
    let order: Vec<usize> = ranked.iter().map(|r| r.input_index).collect();
    assert_eq!(order, vec![1, 2, 0]);
    assert_eq!(ranked.iter().map(|r| r.successful).collect::<Vec<_>>(), vec![true, false, false]);
}

#[test]
fn rejection_makes_runs_impossible() {
    let (a, p) = (e("A"), e("P"));
    let mut table = ScatteringTable::new();
    table.insert(
        ContextKey {
            terminal_bond: BondKind::Covalent,
            coding_element: p.clone(),
            growing_element: p.clone(),
            incoming_element: a.clone(),
            incoming_state: "g".into(),
        },
        OutcomeDistribution::new(vec![
            (Outcome::Admitted(Attachment { element: a.clone(), bond_to_coding: BondKind::Hydrogen, position: [0.0; 3] }), 0.7),
            (Outcome::NonAdmitted { label: "singular".into() }, 0.3),
        ])
        .unwrap(),
    );
    let initial = ActiveSystem::new(Chain::from_letters(["P", "A"]).unwrap(), Chain::from_letters(["P"]).unwrap(), 1, &[BondKind::Covalent]).unwrap();
    let step = ReservoirSpec::new(vec![ReservoirEntry { element: a, state: "g".into(), weight: 1.0 }]).unwrap();
    let scenario = Scenario::new(vec![step], DEFAULT_MAX_STEPS).unwrap();
    let sample = Chain::from_letters(["P", "A"]).unwrap();
    let report = evaluate_scenario(&scenario, &sample, &initial, &table, 10, &ScatterCache::new(), ChainComparison::Letters).unwrap();
    assert_eq!(report.lucky_fraction, 0.7);
    assert_eq!(report.impossible_fraction, 0.3);
    assert_eq!(report.histogram.last().unwrap().letters, None);
}

#[test]
fn golden_rule_weights_square_the_matrix_element() {
    let w1 = golden_rule_prob(Complex64::new(0.1, 0.0), 2.0, 1.0).unwrap();
    let w2 = golden_rule_prob(Complex64::new(0.0, 0.2), 2.0, 1.0).unwrap();
    assert!((w2 / w1 - 4.0).abs() < 1e-12);
    let h = DMatrix::<Complex64>::identity(3, 3);
    assert!(lippmann_schwinger_solve(&h, &h, &DVector::zeros(2), 0.0, 0.1, 1e-10, 5).is_err());
}
