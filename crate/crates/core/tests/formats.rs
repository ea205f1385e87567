mod common;

use common::*;
use detsim::assembly::{photon_scenario, photon_table, ActiveSystem, Alphabet, BondKind, Chain, Element};
use detsim::formats::*;
use detsim::grid::{Grid, GridWaveFunction};
use detsim::Error;
use proptest::prelude::*;

proptest! {
    #[test]
    fn state_files_round_trip_exactly(seed in any::<u64>(), n in 1usize..12, l in prop::option::of(1u64..10_000)) {
        let s = random_state(&mut rng(seed), n);
        let f = parse_state(&write_state(&s, l)).unwrap();
        prop_assert_eq!(f.state, s);
        prop_assert_eq!(f.volume, l);
    }

    #[test]
    fn wavefunction_dumps_round_trip_exactly(seed in any::<u64>(), l in 1u32..7, step in 0usize..1000) {
        let grid = Grid::new(l).unwrap();
        let mut rng = rng(seed);
        let raw = (0..grid.points()).map(|_| complex_gaussian(&mut rng)).collect();
        let psi = GridWaveFunction::normalized(grid, raw).unwrap();
        let d = parse_wavefunction(&write_wavefunction(&psi, step, step as f64 * 0.01)).unwrap();
        prop_assert_eq!(d.psi, psi);
        prop_assert_eq!(d.step, step);
    }
}

fn e(s: &str) -> Element {
    Element::new(s).unwrap()
}

#[test]
fn generated_photon_files_round_trip() {
    let (a, b) = (e("A"), e("B"));
    let table = photon_table([&a, &b], "g", &[e("P"), a.clone(), b.clone()], BondKind::Hydrogen);
    assert_eq!(parse_table(&write_table(&table)).unwrap(), table);

    let pulses = [a.clone(), b.clone(), b.clone()];
    let file = ScenarioFile {
        alphabet: Alphabet::new(vec![(e("P"), false), (a.clone(), true), (b.clone(), true)]).unwrap(),
        initial: ActiveSystem::new(
            Chain::from_letters(["P", "A", "B", "B"]).unwrap(),
            Chain::from_letters(["P"]).unwrap(),
            1,
            &[BondKind::Covalent],
        )
        .unwrap(),
        sample: Some(Chain::from_letters(["P", "A", "B", "B"]).unwrap()),
        scenario: photon_scenario(&pulses, 3.0, [&a, &b], "g", 64).unwrap().named("abb"),
    };
    assert_eq!(parse_scenario(&write_scenario(&file), 64).unwrap(), file);
}

#[test]
fn errors_name_the_line() {
    let text = "# detsim-table v1\ncontext covalent P P A g\n\nadmitted A sideways 0,0,1 1\n";
    match parse_table(text) {
        Err(Error::Parse { line, message }) => {
            assert_eq!(line, 4);
            assert!(message.contains("sideways"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_state("# detsim-state v2\n1 0\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_state("# detsim-state v1\n1 0\n0.5\n"), Err(Error::Parse { line: 3, .. })));
}
