use std::path::PathBuf;

use detsim::assembly::{
    compare_scenarios, complement, evaluate_scenario, golden_rule_distribution, golden_rule_prob,
    lippmann_schwinger_solve, photon_scenario, photon_table, ActiveSystem, Alphabet, BondKind,
    Chain, ChainComparison, Channel, ContextKey, Element, Outcome, ScatterCache, ScatteringTable,
    ScenarioReport,
};
use detsim::formats::{
    parse_scenario, parse_state, parse_table, write_file, write_scenario, write_table,
    write_wavefunction, ScenarioFile,
};
use detsim::grid::{self, classical_trajectory, evolve_traced, Grid, PhasePoint, TracePoint};
use detsim::option_model::{
    measure, partial_measure, phi, sweep_statistics, DeterministicModel, OptionValue,
};
use detsim::propagator_db::{self, PropagatorDatabase, PropagatorKey, PropagatorMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{cap, CliError, CliResult};
use crate::inputs;
use crate::report::{write_report, Inputs};
use crate::{
    caps, CompareArgs, DbApplyArgs, DbArgs, DbBuildArgs, DbInspectArgs, EvolveArgs, GoldenRuleArgs,
    GridArgs, LsSolveArgs, MeasureArgs, PhotonGenArgs, SweepArgs,
};

fn comparison(coordinates: bool) -> ChainComparison {
    if coordinates {
        ChainComparison::LettersAndCoordinates
    } else {
        ChainComparison::Letters
    }
}

fn check_volume(volume: u64) -> CliResult<()> {
    cap("volume", volume, caps::VOLUME)
}

fn sample_chain(arg: Option<&str>, file: &ScenarioFile) -> CliResult<Chain> {
    match (arg, &file.sample) {
        (Some(s), _) => {
            let c = inputs::chain(s)?;
            c.validate(&file.alphabet)?;
            Ok(c)
        }
        (None, Some(c)) => Ok(c.clone()),
        (None, None) => Err(CliError::Usage(
            "no sample chain: pass --sample or add a sample line to the scenario".into(),
        )),
    }
}

fn print_report(report: &ScenarioReport) {
    let name = report.scenario.as_deref().unwrap_or("(unnamed)");
    println!(
        "{name}: lucky {}/{} = {:.6}, impossible {:.6}",
        report.lucky_count, report.volume, report.lucky_fraction, report.impossible_fraction
    );
    for h in &report.histogram {
        let class = match &h.letters {
            Some(ls) => ls.iter().map(Element::as_str).collect::<Vec<_>>().join(" "),
            None => "<impossible>".into(),
        };
        println!("  {:>10} {:.6}  {class}", h.count, h.fraction);
    }
}

#[derive(Serialize)]
struct SweepBody<'a> {
    sample: &'a Chain,
    report: &'a ScenarioReport,
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    check_volume(a.volume)?;
    cap("max-steps", a.max_steps as u64, caps::SCENARIO_STEPS)?;
    let mut inputs = Inputs::default();
    let file = inputs.load(&a.scenario, |t| parse_scenario(t, a.max_steps))?;
    let table = inputs.load(&a.table, parse_table)?;
    let sample = sample_chain(a.sample.as_deref(), &file)?;
    let cache = ScatterCache::new();
    let report = evaluate_scenario(
        &file.scenario,
        &sample,
        &file.initial,
        &table,
        a.volume,
        &cache,
        comparison(a.coordinates),
    )?;
    print_report(&report);
    eprintln!(
        "scatter computations: {}, selections: {}",
        cache.scatter_computations(),
        cache.selection_computations()
    );
    let body = SweepBody {
        sample: &sample,
        report: &report,
    };
    write_report(a.out.output.as_ref(), "sweep", &a, inputs, body)
}

pub fn compare(a: CompareArgs) -> CliResult<()> {
    check_volume(a.volume)?;
    cap("max-steps", a.max_steps as u64, caps::SCENARIO_STEPS)?;
    let mut inputs = Inputs::default();
    let table = inputs.load(&a.table, parse_table)?;
    let files = a
        .scenarios
        .iter()
        .map(|p| inputs.load(p, |t| parse_scenario(t, a.max_steps)))
        .collect::<CliResult<Vec<_>>>()?;
    let first = &files[0];
    for (f, p) in files.iter().zip(&a.scenarios).skip(1) {
        if f.initial != first.initial {
            return Err(CliError::Usage(format!(
                "{} starts from a different active system than {}",
                p.display(),
                a.scenarios[0].display()
            )));
        }
    }
    let sample = sample_chain(a.sample.as_deref(), first)?;
    let scenarios: Vec<_> = files.iter().map(|f| f.scenario.clone()).collect();
    let ranked = compare_scenarios(
        &scenarios,
        &sample,
        &first.initial,
        &table,
        a.volume,
        a.threshold,
        &ScatterCache::new(),
        comparison(a.coordinates),
    )?;
    for r in &ranked {
        print!(
            "#{} [{}] {} ",
            r.rank,
            if r.successful { "ok" } else { "--" },
            a.scenarios[r.input_index].display()
        );
        print_report(&r.report);
    }
    #[derive(Serialize)]
    struct Body<'a> {
        sample: &'a Chain,
        ranking: &'a [detsim::assembly::RankedReport],
    }
    let body = Body {
        sample: &sample,
        ranking: &ranked,
    };
    write_report(a.out.output.as_ref(), "compare", &a, inputs, body)
}

fn grid_of(g: &GridArgs) -> CliResult<Grid> {
    cap("qubits", g.qubits as u64, detsim::grid::MAX_QUBITS as u64)?;
    cap("steps", g.steps as u64, caps::EVOLVE_STEPS)?;
    if !(g.dt.is_finite() && g.dt > 0.0) {
        return Err(CliError::Usage(format!("--dt must be positive, got {}", g.dt)));
    }
    Ok(Grid::new(g.qubits)?)
}

fn dump_to(path: Option<&PathBuf>, text: impl FnOnce() -> String) -> CliResult<()> {
    if let Some(p) = path {
        write_file(p, &text())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveBody {
    final_step: usize,
    final_time: f64,
    norm: f64,
    trace: Vec<TracePoint>,
    classical: Option<Vec<PhasePoint>>,
}

pub fn evolve(a: EvolveArgs) -> CliResult<()> {
    let grid = grid_of(&a.grid)?;
    let mut inputs = Inputs::default();
    let field = inputs::potential(&a.grid.potential, grid, a.grid.mass, &mut inputs)?;
    let initial = inputs::initial_wave(
        a.initial.initial.as_deref(),
        a.initial.gaussian.as_deref(),
        grid,
        &mut inputs,
    )?;
    let (psi0, step0, time0) = (&initial.psi, initial.step, initial.time);
    let every = a.trace_every.unwrap_or(a.grid.steps.max(1));
    let (psi, mut trace) = evolve_traced(psi0, &field, a.grid.dt, a.grid.steps, every)?;
    for t in &mut trace {
        t.step += step0;
        t.time += time0;
    }
    let classical = if a.classical {
        let g = inputs::numbers(a.initial.gaussian.as_deref().unwrap_or(""), 3, "--gaussian expects x0,p0,sigma")?;
        let path = classical_trajectory(grid, g[0], g[1], &field, a.grid.dt, a.grid.steps)?;
        let every = every.max(1);
        Some(
            path.into_iter()
                .enumerate()
                .filter(|(i, _)| i % every == 0 || *i == a.grid.steps)
                .map(|(_, p)| p)
                .collect(),
        )
    } else {
        None
    };
    let final_step = step0 + a.grid.steps;
    let final_time = time0 + a.grid.steps as f64 * a.grid.dt;
    println!(
        "evolved {} steps on 2^{} points: norm {:.15}, <X> {:.6}, <P> {:.6}",
        a.grid.steps,
        a.grid.qubits,
        psi.norm(),
        trace.last().map_or(0.0, |t| t.position),
        trace.last().map_or(0.0, |t| t.momentum)
    );
    // Zero steps hands back the input dump untouched.
    dump_to(a.dump.as_ref(), || match (&initial.text, a.grid.steps) {
        (Some(text), 0) => text.clone(),
        _ => write_wavefunction(&psi, final_step, final_time),
    })?;
    let body = EvolveBody {
        final_step,
        final_time,
        norm: psi.norm(),
        trace,
        classical,
    };
    write_report(a.out.output.as_ref(), "evolve", &a, inputs, body)
}

fn open_db(db: &DbArgs) -> CliResult<PropagatorDatabase> {
    cap("max-points", db.max_points as u64, caps::DB_POINTS)?;
    let dir = db
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("DETSIM_CACHE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(".detsim-cache"));
    Ok(PropagatorDatabase::open(dir)?.with_max_points(db.max_points))
}

#[derive(Serialize)]
struct KeyInfo {
    digest: String,
    qubits: u32,
    potential: String,
    dt: f64,
    steps: usize,
    unitarity_residual: f64,
}

fn key_info(key: &PropagatorKey, m: &PropagatorMatrix) -> KeyInfo {
    KeyInfo {
        digest: key.digest(),
        qubits: key.qubits(),
        potential: key.potential().to_string(),
        dt: key.dt(),
        steps: key.steps(),
        unitarity_residual: m.unitarity_residual(),
    }
}

pub fn db_build(a: DbBuildArgs) -> CliResult<()> {
    let grid = grid_of(&a.grid)?;
    let db = open_db(&a.db)?;
    let mut inputs = Inputs::default();
    let field = inputs::potential(&a.grid.potential, grid, a.grid.mass, &mut inputs)?;
    let key = PropagatorKey::new(grid, &field, a.grid.dt, a.grid.steps);
    let m = db.lookup_or_build(&key, &field, grid)?;
    eprintln!("{}", if db.builds() > 0 { "built" } else { "loaded" });
    let info = key_info(&key, &m);
    println!("{} residual {:e}", info.digest, info.unitarity_residual);
    write_report(a.out.output.as_ref(), "db-build", &a, inputs, info)
}

#[derive(Serialize)]
struct ApplyBody {
    key: KeyInfo,
    norm: f64,
    direct_difference: f64,
}

pub fn db_apply(a: DbApplyArgs) -> CliResult<()> {
    let grid = grid_of(&a.grid)?;
    let db = open_db(&a.db)?;
    let mut inputs = Inputs::default();
    let field = inputs::potential(&a.grid.potential, grid, a.grid.mass, &mut inputs)?;
    let initial = inputs::initial_wave(
        a.initial.initial.as_deref(),
        a.initial.gaussian.as_deref(),
        grid,
        &mut inputs,
    )?;
    let (psi0, step0, time0) = (&initial.psi, initial.step, initial.time);
    let key = PropagatorKey::new(grid, &field, a.grid.dt, a.grid.steps);
    let m = if a.build {
        db.lookup_or_build(&key, &field, grid)?
    } else {
        db.lookup(&key)?
    };
    eprintln!("{}", if db.builds() > 0 { "built" } else { "loaded" });
    let psi = propagator_db::apply(&m, psi0)?;
    let direct = grid::evolve(psi0, &field, a.grid.dt, a.grid.steps)?;
    let body = ApplyBody {
        key: key_info(&key, &m),
        norm: psi.norm(),
        direct_difference: psi.max_distance(&direct),
    };
    println!(
        "applied {}: norm {:.15}, max |M psi - evolve psi| {:e}",
        body.key.digest, body.norm, body.direct_difference
    );
    dump_to(a.dump.as_ref(), || {
        write_wavefunction(&psi, step0 + a.grid.steps, time0 + a.grid.steps as f64 * a.grid.dt)
    })?;
    write_report(a.out.output.as_ref(), "db-apply", &a, inputs, body)
}

pub fn db_inspect(a: DbInspectArgs) -> CliResult<()> {
    let db = open_db(&a.db)?;
    if a.digest.is_empty() || !a.digest.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(CliError::Usage(format!("{:?} is not a key digest", a.digest)));
    }
    let path = db.directory().expect("opened on disk").join(&a.digest);
    if !path.exists() {
        return Err(detsim::Error::MissingEntry(a.digest.clone()).into());
    }
    let (key, m) = PropagatorMatrix::read_file(&path)?;
    let info = key_info(&key, &m);
    println!(
        "{}: l={} dt={} steps={} residual {:e}",
        info.digest, info.qubits, info.dt, info.steps, info.unitarity_residual
    );
    write_report(a.out.output.as_ref(), "db-inspect", &a, Inputs::default(), info)
}

#[derive(Serialize)]
struct PhotonBody {
    target: Vec<Element>,
    complement: Vec<Element>,
    expected_ratio: f64,
}

pub fn photon_gen(a: PhotonGenArgs) -> CliResult<()> {
    cap("max-steps", a.max_steps as u64, caps::SCENARIO_STEPS)?;
    let word = inputs::letters(&a.word)?;
    let pair = inputs::letters(&a.pair)?;
    let [x, y] = &pair[..] else {
        return Err(CliError::Usage("--pair expects two letters".into()));
    };
    let primer = inputs::element(&a.primer)?;
    if word.is_empty() {
        return Err(CliError::Usage("--word needs at least one pulse".into()));
    }
    let pair = [x, y];
    let scenario = photon_scenario(&word, a.bias, pair, &a.state, a.max_steps)?.named("photon");
    let table = photon_table(pair, &a.state, &[primer.clone(), x.clone(), y.clone()], BondKind::Hydrogen);

    let alphabet = Alphabet::new(vec![(primer.clone(), false), (x.clone(), true), (y.clone(), true)])?;
    let mut coding = vec![primer.clone()];
    coding.extend(std::iter::repeat_n(x.clone(), word.len()));
    let chain_of = |ls: &[Element]| Chain::from_letters(ls.iter().map(Element::as_str));
    let initial = ActiveSystem::new(chain_of(&coding)?, chain_of(&[primer.clone()])?, 1, &[BondKind::Covalent])?;
    let mut target = vec![primer.clone()];
    target.extend(word.iter().cloned());
    let mut comp = vec![primer];
    comp.extend(complement(&word, pair)?);

    let file = ScenarioFile {
        alphabet,
        initial,
        sample: Some(chain_of(&target)?),
        scenario,
    };
    write_file(&a.scenario_out, &write_scenario(&file))?;
    write_file(&a.table_out, &write_table(&table))?;
    let body = PhotonBody {
        target,
        complement: comp,
        expected_ratio: a.bias.powi(word.len() as i32),
    };
    println!(
        "wrote {} and {}; expected f(target)/f(complement) = {}",
        a.scenario_out.display(),
        a.table_out.display(),
        body.expected_ratio
    );
    write_report(a.out.output.as_ref(), "photon-gen", &a, Inputs::default(), body)
}

pub fn ls_solve(a: LsSolveArgs) -> CliResult<()> {
    let mut inputs = Inputs::default();
    let system = inputs.load(&a.input, inputs::parse_ls)?;
    let solution = lippmann_schwinger_solve(
        &system.h,
        &system.v,
        &system.phi,
        a.energy,
        a.eta,
        a.tol,
        a.max_iter,
    )?;
    println!(
        "converged in {} iterations (last update {:e})",
        solution.iterations, solution.last_update
    );
    for z in solution.state.iter() {
        println!("{:e} {:e}", z.re, z.im);
    }
    write_report(a.out.output.as_ref(), "ls-solve", &a, inputs, &solution)
}

#[derive(Serialize)]
struct ChannelRecord {
    outcome: Outcome,
    rate: f64,
    probability: f64,
}

fn parse_channel(spec: &str) -> CliResult<Channel> {
    let (outcome, values) = spec
        .rsplit_once('=')
        .ok_or_else(|| CliError::Usage(format!("bad channel {spec:?}; expected OUTCOME=re,im,rho")))?;
    let v = inputs::numbers(values, 3, "channel values must be re,im,rho")?;
    Ok(Channel {
        outcome: inputs::outcome(outcome)?,
        matrix_element: Complex64::new(v[0], v[1]),
        density_of_states: v[2],
    })
}

fn parse_context(spec: &str) -> CliResult<ContextKey> {
    let t: Vec<&str> = spec.split_whitespace().collect();
    let [bond, coding, growing, incoming, state] = t[..] else {
        return Err(CliError::Usage(
            "--context expects '<bond> <coding> <growing> <incoming> <state>'".into(),
        ));
    };
    Ok(ContextKey {
        terminal_bond: bond.parse::<BondKind>()?,
        coding_element: inputs::element(coding)?,
        growing_element: inputs::element(growing)?,
        incoming_element: inputs::element(incoming)?,
        incoming_state: state.to_string(),
    })
}

pub fn golden_rule(a: GoldenRuleArgs) -> CliResult<()> {
    let channels = a
        .channels
        .iter()
        .map(|c| parse_channel(c))
        .collect::<CliResult<Vec<_>>>()?;
    let rates = channels
        .iter()
        .map(|c| golden_rule_prob(c.matrix_element, c.density_of_states, a.hbar))
        .collect::<detsim::Result<Vec<_>>>()?;
    let dist = golden_rule_distribution(channels.clone(), a.hbar)?;
    let records: Vec<ChannelRecord> = dist
        .outcomes()
        .iter()
        .map(|w| {
            let i = channels.iter().position(|c| c.outcome == w.outcome).expect("channel outcome");
            ChannelRecord {
                outcome: w.outcome.clone(),
                rate: rates[i],
                probability: w.weight,
            }
        })
        .collect();
    for (r, spec) in records.iter().zip(&a.channels) {
        println!("{:.12} rate {:e}  {}", r.probability, r.rate, spec);
    }
    if let (Some(ctx), Some(path)) = (&a.context, &a.table_out) {
        let mut table = ScatteringTable::new();
        table.insert(parse_context(ctx)?, dist);
        write_file(path, &write_table(&table))?;
    }
    write_report(a.out.output.as_ref(), "golden-rule", &a, Inputs::default(), records)
}

#[derive(Serialize)]
struct MeasureBody {
    volume: u64,
    thresholds: Vec<u64>,
    probabilities: Vec<f64>,
    frequencies: Vec<f64>,
    outcome: Option<usize>,
    partial: Option<PartialBody>,
}

#[derive(Serialize)]
struct PartialBody {
    bits: u32,
    prefix: usize,
    residual: u64,
    outcome: usize,
}

pub fn measure_cmd(a: MeasureArgs) -> CliResult<()> {
    let mut inputs = Inputs::default();
    let file = inputs.load(&a.state, parse_state)?;
    let volume = a.volume.or(file.volume).ok_or_else(|| {
        CliError::Usage("no option volume: pass -L or store L= in the state header".into())
    })?;
    check_volume(volume)?;
    let state = file.state;
    let model = DeterministicModel::new(state.dimension(), volume)?;
    let assignment = phi(&model, &state)?;
    let frequencies = sweep_statistics(&model, &state)?;
    let mut body = MeasureBody {
        volume,
        thresholds: assignment.thresholds().to_vec(),
        probabilities: state.probabilities(),
        frequencies,
        outcome: None,
        partial: None,
    };
    if let Some(k) = a.option {
        let option = OptionValue::new(k, volume)?;
        let j = measure(&model, &state, option)?;
        body.outcome = Some(j);
        println!("k = {k}: outcome {j}");
        if let Some(bits) = a.partial_bits {
            let pm = partial_measure(&model, &state, bits, option)?;
            let sub = DeterministicModel::new(pm.collapsed.dimension(), volume)?;
            let rest = measure(&sub, &pm.collapsed, pm.residual)?;
            let outcome = pm.prefix * pm.collapsed.dimension() + rest;
            println!(
                "partial {bits} bits: prefix {}, residual option {}, then outcome {outcome}",
                pm.prefix,
                pm.residual.index()
            );
            body.partial = Some(PartialBody {
                bits,
                prefix: pm.prefix,
                residual: pm.residual.index(),
                outcome,
            });
        }
    } else {
        for (j, (f, p)) in body.frequencies.iter().zip(&body.probabilities).enumerate() {
            println!("{j:>6} f {f:.6} p {p:.6}");
        }
    }
    write_report(a.out.output.as_ref(), "measure", &a, inputs, body)
}
