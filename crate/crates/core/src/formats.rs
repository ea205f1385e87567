//! Line-oriented text formats.
//!
//! Every file starts with a versioned header line `# detsim-<kind> v1`
//! optionally followed by `key=value` pairs. Blank lines and lines starting
//! with `#` after the header are ignored. Floats are written in Rust's
//! shortest round-trip notation, so write-then-read is bit exact.
//!
//! ```text
//! # detsim-state v1 N=2 L=10
//! 0.7071067811865476 0
//! 0 0.7071067811865476
//! ```
//!
//! Scenario files list the alphabet (`*` marks the assembly subset), the
//! initial active system, an optional sample chain and one `step` line per
//! assembly step with `element:state:weight` reservoir entries:
//!
//! ```text
//! # detsim-scenario v1
//! name pulses-AAB
//! alphabet P A* B*
//! coding P A A B
//! growing P
//! alignment 1
//! bonds covalent
//! sample P A A B
//! step A:g:0.6666666666666666 B:g:0.33333333333333337
//! ```
//!
//! Chain units are `E` or `E@x,y,z`. Table files group outcome lines under
//! `context <bond> <coding> <growing> <incoming> <state>` lines:
//!
//! ```text
//! # detsim-table v1
//! context covalent P P A g
//! admitted A hydrogen 0,0,1 0.7
//! rejected singular 0.3
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::assembly::{
    ActiveSystem, Alphabet, Attachment, BondKind, Chain, ContextKey, Element, Outcome,
    OutcomeDistribution, ReservoirEntry, ReservoirSpec, Scenario, ScatteringTable, Unit,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridWaveFunction, PotentialField};
use crate::option_model::StateVector;

pub const STATE_KIND: &str = "state";
pub const WAVEFUNCTION_KIND: &str = "wavefunction";
pub const POTENTIAL_KIND: &str = "potential";
pub const SCENARIO_KIND: &str = "scenario";
pub const TABLE_KIND: &str = "table";

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn header(kind: &str, params: &[(&str, String)]) -> String {
    let mut h = format!("# detsim-{kind} v1");
    for (k, v) in params {
        let _ = write!(h, " {k}={v}");
    }
    h.push('\n');
    h
}

/// Content lines with their 1-based line numbers, after the header.
struct Body<'a> {
    params: BTreeMap<&'a str, &'a str>,
    lines: Vec<(usize, &'a str)>,
}

fn parse_body<'a>(text: &'a str, kind: &str) -> Result<Body<'a>> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let mut tokens = first.split_whitespace();
    let expected = format!("detsim-{kind}");
    if tokens.next() != Some("#") || tokens.next() != Some(expected.as_str()) {
        return Err(Error::parse(1, format!("expected header '# {expected} v1'")));
    }
    if tokens.next() != Some("v1") {
        return Err(Error::parse(1, "unsupported format version"));
    }
    let mut params = BTreeMap::new();
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("malformed header parameter {t:?}")))?;
        params.insert(k, v);
    }
    let lines = lines
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    Ok(Body { params, lines })
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {token:?}")))
}

fn param<T: std::str::FromStr>(body: &Body, key: &str) -> Result<Option<T>> {
    body.params
        .get(key)
        .map(|v| parse_num(1, v, key))
        .transpose()
}

fn parse_complex_lines(lines: &[(usize, &str)]) -> Result<Vec<Complex64>> {
    lines
        .iter()
        .map(|&(n, l)| {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 2 {
                return Err(Error::parse(n, "expected 're im'"));
            }
            Ok(Complex64::new(
                parse_num(n, t[0], "real part")?,
                parse_num(n, t[1], "imaginary part")?,
            ))
        })
        .collect()
}

fn write_complex_lines(out: &mut String, amps: &[Complex64]) {
    for a in amps {
        let _ = writeln!(out, "{:e} {:e}", a.re, a.im);
    }
}

/// A state vector with the option volume it was stored with, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub state: StateVector,
    pub volume: Option<u64>,
}

pub fn parse_state(text: &str) -> Result<StateFile> {
    let body = parse_body(text, STATE_KIND)?;
    let amps = parse_complex_lines(&body.lines)?;
    if let Some(n) = param::<usize>(&body, "N")? {
        if n != amps.len() {
            return Err(Error::parse(1, format!("header says N={n}, found {} amplitudes", amps.len())));
        }
    }
    Ok(StateFile {
        state: StateVector::new(amps)?,
        volume: param(&body, "L")?,
    })
}

pub fn write_state(state: &StateVector, volume: Option<u64>) -> String {
    let mut params = vec![("N", state.dimension().to_string())];
    if let Some(l) = volume {
        params.push(("L", l.to_string()));
    }
    let mut out = header(STATE_KIND, &params);
    write_complex_lines(&mut out, state.amplitudes());
    out
}

/// Wave function dump with its step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunctionDump {
    pub psi: GridWaveFunction,
    pub step: usize,
    pub time: f64,
}

pub fn parse_wavefunction(text: &str) -> Result<WaveFunctionDump> {
    let body = parse_body(text, WAVEFUNCTION_KIND)?;
    let qubits: u32 = param(&body, "l")?.ok_or_else(|| Error::parse(1, "missing l= in header"))?;
    let grid = Grid::new(qubits)?;
    let amps = parse_complex_lines(&body.lines)?;
    Ok(WaveFunctionDump {
        psi: GridWaveFunction::new(grid, amps)?,
        step: param(&body, "step")?.unwrap_or(0),
        time: param(&body, "time")?.unwrap_or(0.0),
    })
}

pub fn write_wavefunction(psi: &GridWaveFunction, step: usize, time: f64) -> String {
    let grid = psi.grid();
    let mut out = header(
        WAVEFUNCTION_KIND,
        &[
            ("l", grid.qubits().to_string()),
            ("dq", format!("{:e}", grid.spacing())),
            ("step", step.to_string()),
            ("time", format!("{time:e}")),
        ],
    );
    write_complex_lines(&mut out, psi.amplitudes());
    out
}

/// Potential samples, one per line. The header is optional here; when
/// present it may carry `mass=`, which overrides `default_mass`.
pub fn parse_potential(text: &str, grid: Grid, default_mass: f64) -> Result<PotentialField> {
    let (mass, lines) = if text.trim_start().starts_with("# detsim-") {
        let body = parse_body(text, POTENTIAL_KIND)?;
        (param(&body, "mass")?.unwrap_or(default_mass), body.lines)
    } else {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        (default_mass, lines)
    };
    let samples = lines
        .iter()
        .map(|&(n, l)| parse_num(n, l, "potential sample"))
        .collect::<Result<Vec<f64>>>()?;
    PotentialField::new(grid, samples, mass)
}

pub fn write_potential(samples: &[f64], mass: f64) -> String {
    let mut out = header(POTENTIAL_KIND, &[("mass", mass.to_string())]);
    for v in samples {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Everything a scenario file describes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub alphabet: Alphabet,
    pub initial: ActiveSystem,
    pub sample: Option<Chain>,
    pub scenario: Scenario,
}

fn parse_unit(line: usize, token: &str) -> Result<Unit> {
    let (id, coords) = match token.split_once('@') {
        Some((id, c)) => (id, Some(c)),
        None => (token, None),
    };
    let element = Element::new(id).map_err(|e| Error::parse(line, e.to_string()))?;
    let position = match coords {
        Some(c) => parse_coords(line, c)?,
        None => [0.0; 3],
    };
    Ok(Unit::new(element, position))
}

fn parse_coords(line: usize, text: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::parse(line, format!("expected x,y,z coordinates, got {text:?}")));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_num(line, p, "coordinate")?;
    }
    Ok(out)
}

fn write_unit(out: &mut String, u: &Unit) {
    if u.position == [0.0; 3] {
        let _ = write!(out, " {}", u.element);
    } else {
        let [x, y, z] = u.position;
        let _ = write!(out, " {}@{x},{y},{z}", u.element);
    }
}

fn parse_chain(line: usize, tokens: &[&str]) -> Result<Chain> {
    tokens
        .iter()
        .map(|t| parse_unit(line, t))
        .collect::<Result<Vec<_>>>()
        .map(Chain::new)
}

pub fn parse_scenario(text: &str, max_steps: usize) -> Result<ScenarioFile> {
    let body = parse_body(text, SCENARIO_KIND)?;
    let mut name = None;
    let mut alphabet = None;
    let mut coding = None;
    let mut growing = None;
    let mut alignment = None;
    let mut bonds = None;
    let mut sample = None;
    let mut steps = Vec::new();
    for &(n, l) in &body.lines {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        let (keyword, rest) = tokens.split_first().expect("line is nonempty");
        let wrap = |e: Error| Error::parse(n, e.to_string());
        match *keyword {
            "name" => name = Some(rest.join(" ")),
            "alphabet" => {
                let letters = rest
                    .iter()
                    .map(|t| {
                        let (id, assembly) = match t.strip_suffix('*') {
                            Some(id) => (id, true),
                            None => (*t, false),
                        };
                        Element::new(id).map(|e| (e, assembly))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(wrap)?;
                alphabet = Some(Alphabet::new(letters).map_err(wrap)?);
            }
            "coding" => coding = Some(parse_chain(n, rest)?),
            "growing" => growing = Some(parse_chain(n, rest)?),
            "sample" => sample = Some(parse_chain(n, rest)?),
            "alignment" => {
                let [a] = rest else {
                    return Err(Error::parse(n, "expected 'alignment <s>'"));
                };
                alignment = Some(parse_num::<usize>(n, a, "alignment")?);
            }
            "bonds" => {
                bonds = Some(
                    rest.iter()
                        .map(|t| t.parse::<BondKind>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(wrap)?,
                );
            }
            "step" => {
                let entries = rest
                    .iter()
                    .map(|t| {
                        let parts: Vec<&str> = t.split(':').collect();
                        let [el, state, w] = parts[..] else {
                            return Err(Error::parse(n, format!("expected element:state:weight, got {t:?}")));
                        };
                        Ok(ReservoirEntry {
                            element: Element::new(el).map_err(wrap)?,
                            state: state.to_string(),
                            weight: parse_num(n, w, "weight")?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                steps.push((n, ReservoirSpec::new(entries).map_err(wrap)?));
            }
            other => return Err(Error::parse(n, format!("unknown keyword {other:?}"))),
        }
    }
    let missing = |what: &str| Error::parse(body.lines.last().map_or(1, |l| l.0), format!("missing '{what}' line"));
    let alphabet = alphabet.ok_or_else(|| missing("alphabet"))?;
    let coding = coding.ok_or_else(|| missing("coding"))?;
    let growing = growing.ok_or_else(|| missing("growing"))?;
    let bonds = bonds.ok_or_else(|| missing("bonds"))?;
    let alignment = alignment.unwrap_or(bonds.len());
    let context = |e: Error| Error::parse(1, e.to_string());
    coding.validate(&alphabet).map_err(context)?;
    growing.validate(&alphabet).map_err(context)?;
    if let Some(s) = &sample {
        s.validate(&alphabet).map_err(context)?;
    }
    for (n, step) in &steps {
        for e in step.entries() {
            if !alphabet.is_assembly(&e.element) {
                return Err(Error::parse(*n, format!("{} is not an assembly element", e.element)));
            }
        }
    }
    let initial = ActiveSystem::new(coding, growing, alignment, &bonds).map_err(context)?;
    let mut scenario = Scenario::new(steps.into_iter().map(|(_, s)| s).collect(), max_steps).map_err(context)?;
    if let Some(n) = name {
        scenario = scenario.named(n);
    }
    Ok(ScenarioFile {
        alphabet,
        initial,
        sample,
        scenario,
    })
}

pub fn write_scenario(file: &ScenarioFile) -> String {
    let mut out = header(SCENARIO_KIND, &[]);
    if let Some(n) = file.scenario.name() {
        let _ = writeln!(out, "name {n}");
    }
    out.push_str("alphabet");
    for (e, assembly) in file.alphabet.letters() {
        let _ = write!(out, " {e}{}", if assembly { "*" } else { "" });
    }
    out.push('\n');
    let mut chain_line = |label: &str, c: &Chain| {
        out.push_str(label);
        c.units().iter().for_each(|u| write_unit(&mut out, u));
        out.push('\n');
    };
    chain_line("coding", file.initial.coding());
    chain_line("growing", file.initial.growing());
    if let Some(s) = &file.sample {
        chain_line("sample", s);
    }
    let _ = writeln!(out, "alignment {}", file.initial.alignment());
    out.push_str("bonds");
    for b in file.initial.bonds() {
        let _ = write!(out, " {}", b.kind);
    }
    out.push('\n');
    for step in file.scenario.steps() {
        out.push_str("step");
        for e in step.entries() {
            let _ = write!(out, " {}:{}:{}", e.element, e.state, e.weight);
        }
        out.push('\n');
    }
    out
}

pub fn parse_table(text: &str) -> Result<ScatteringTable> {
    let body = parse_body(text, TABLE_KIND)?;
    let mut table = ScatteringTable::new();
    let mut current: Option<(usize, ContextKey, Vec<(Outcome, f64)>)> = None;
    let flush = |entry: Option<(usize, ContextKey, Vec<(Outcome, f64)>)>,
                     table: &mut ScatteringTable|
     -> Result<()> {
        if let Some((n, key, outcomes)) = entry {
            let dist = OutcomeDistribution::new(outcomes).map_err(|e| Error::parse(n, e.to_string()))?;
            if table.insert(key.clone(), dist).is_some() {
                return Err(Error::parse(n, format!("duplicate context {key}")));
            }
        }
        Ok(())
    };
    for &(n, l) in &body.lines {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        let wrap = |e: Error| Error::parse(n, e.to_string());
        match tokens[..] {
            ["context", bond, coding, growing, incoming, state] => {
                flush(current.take(), &mut table)?;
                let key = ContextKey {
                    terminal_bond: bond.parse().map_err(wrap)?,
                    coding_element: Element::new(coding).map_err(wrap)?,
                    growing_element: Element::new(growing).map_err(wrap)?,
                    incoming_element: Element::new(incoming).map_err(wrap)?,
                    incoming_state: state.to_string(),
                };
                current = Some((n, key, Vec::new()));
            }
            ["admitted", element, bond, coords, weight] => {
                let outcome = Outcome::Admitted(Attachment {
                    element: Element::new(element).map_err(wrap)?,
                    bond_to_coding: bond.parse().map_err(wrap)?,
                    position: parse_coords(n, coords)?,
                });
                push_outcome(&mut current, n, outcome, parse_num(n, weight, "weight")?)?;
            }
            ["rejected", label, weight] => {
                let outcome = Outcome::NonAdmitted {
                    label: label.to_string(),
                };
                push_outcome(&mut current, n, outcome, parse_num(n, weight, "weight")?)?;
            }
            _ => return Err(Error::parse(n, format!("unrecognized table line {l:?}"))),
        }
    }
    flush(current.take(), &mut table)?;
    Ok(table)
}

fn push_outcome(
    current: &mut Option<(usize, ContextKey, Vec<(Outcome, f64)>)>,
    line: usize,
    outcome: Outcome,
    weight: f64,
) -> Result<()> {
    match current {
        Some((_, _, outcomes)) => {
            outcomes.push((outcome, weight));
            Ok(())
        }
        None => Err(Error::parse(line, "outcome line before any context line")),
    }
}

pub fn write_table(table: &ScatteringTable) -> String {
    let mut out = header(TABLE_KIND, &[]);
    for (key, dist) in table.iter() {
        let _ = writeln!(out, "context {key}");
        for o in dist.outcomes() {
            match &o.outcome {
                Outcome::Admitted(a) => {
                    let [x, y, z] = a.position;
                    let _ = writeln!(
                        out,
                        "admitted {} {} {x},{y},{z} {}",
                        a.element, a.bond_to_coding, o.weight
                    );
                }
                Outcome::NonAdmitted { label } => {
                    let _ = writeln!(out, "rejected {label} {}", o.weight);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = "# detsim-scenario v1
name demo
alphabet P A* B*
coding P A@1,0,0 B
growing P
alignment 1
bonds covalent
sample P A B
step A:g:0.5 B:g:0.5
step A:g:1
";

    const TABLE: &str = "# detsim-table v1
context covalent P P A g
admitted A hydrogen 0,0,1 0.7
rejected singular 0.3
# comment
context hydrogen A A B g
admitted B covalent 0,0,1 1
";

    #[test]
    fn scenario_round_trip() {
        let f = parse_scenario(SCENARIO, 64).unwrap();
        assert_eq!(f.scenario.len(), 2);
        assert_eq!(f.scenario.name(), Some("demo"));
        assert_eq!(f.initial.coding().units()[1].position, [1.0, 0.0, 0.0]);
        assert_eq!(f.sample.as_ref().unwrap().to_string(), "P A B");
        assert_eq!(parse_scenario(&write_scenario(&f), 64).unwrap(), f);
    }

    #[test]
    fn scenario_errors_carry_line_numbers() {
        let bad = SCENARIO.replace("step A:g:1", "step A:g");
        assert!(matches!(parse_scenario(&bad, 64), Err(Error::Parse { line: 10, .. })));
        let bad = SCENARIO.replace("step A:g:1", "step P:g:1");
        assert!(matches!(parse_scenario(&bad, 64), Err(Error::Parse { line: 10, .. })));
        assert!(parse_scenario("garbage", 64).is_err());
        assert!(parse_scenario(SCENARIO, 1).is_err());
        let no_bonds = SCENARIO.replace("bonds covalent\n", "");
        assert!(parse_scenario(&no_bonds, 64).is_err());
    }

    #[test]
    fn table_round_trip() {
        let t = parse_table(TABLE).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(parse_table(&write_table(&t)).unwrap(), t);
    }

    #[test]
    fn table_errors() {
        let unnormalized = TABLE.replace("0.3", "0.2");
        assert!(matches!(parse_table(&unnormalized), Err(Error::Parse { line: 2, .. })));
        let orphan = "# detsim-table v1\nrejected x 1\n";
        assert!(parse_table(orphan).is_err());
        let dup = format!("{TABLE}context covalent P P A g\nrejected x 1\n");
        assert!(parse_table(&dup).is_err());
    }

    #[test]
    fn state_round_trip_is_exact() {
        let s = StateVector::new(vec![
            Complex64::new(0.1_f64.sqrt(), 0.0),
            Complex64::new(0.0, 0.9_f64.sqrt()),
        ])
        .unwrap();
        let f = parse_state(&write_state(&s, Some(10))).unwrap();
        assert_eq!(f.state, s);
        assert_eq!(f.volume, Some(10));
        assert!(parse_state("# detsim-state v1 N=3\n1 0\n").is_err());
    }

    #[test]
    fn wavefunction_round_trip_is_exact() {
        let g = Grid::new(5).unwrap();
        let psi = GridWaveFunction::gaussian(g, 0.3, -0.4, 1.1).unwrap();
        let d = parse_wavefunction(&write_wavefunction(&psi, 7, 0.35)).unwrap();
        assert_eq!(d.psi, psi);
        assert_eq!((d.step, d.time), (7, 0.35));
    }

    #[test]
    fn potential_with_and_without_header() {
        let g = Grid::new(2).unwrap();
        let f = parse_potential("1\n2\n3\n4\n", g, 1.0).unwrap();
        assert_eq!(f.at_step(0).unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        let f2 = parse_potential(&write_potential(&[1.0, 2.0, 3.0, 4.5], 2.0), g, 1.0).unwrap();
        assert_eq!(f2.mass(), 2.0);
        assert!(parse_potential("1\n2\n", g, 1.0).is_err());
        assert!(matches!(parse_potential("1\nx\n3\n4\n", g, 1.0), Err(Error::Parse { line: 2, .. })));
    }
}
