//! Command-line value parsers and the CLI-only text formats.

use std::path::Path;

use detsim::assembly::{Attachment, BondKind, Chain, Element, Outcome};
use detsim::formats::{parse_potential, parse_wavefunction};
use detsim::grid::{Grid, GridWaveFunction, PotentialField};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CliError, CliResult};
use crate::report::Inputs;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `zero`, `harmonic:<omega>`, `linear:<slope>`, or a potential file.
pub fn potential(spec: &str, grid: Grid, mass: f64, inputs: &mut Inputs) -> CliResult<PotentialField> {
    let tagged = |v: &str| v.parse::<f64>().map_err(|_| usage(format!("bad number in potential tag {spec:?}")));
    let field = match spec.split_once(':') {
        _ if spec == "zero" => PotentialField::zero(grid, mass)?,
        Some(("harmonic", omega)) => PotentialField::harmonic(grid, tagged(omega)?, mass)?,
        Some(("linear", slope)) => PotentialField::linear(grid, tagged(slope)?, mass)?,
        _ => inputs.load(Path::new(spec), |t| parse_potential(t, grid, mass))?,
    };
    Ok(field)
}

/// `x0,p0,sigma`.
pub fn gaussian(spec: &str, grid: Grid) -> CliResult<GridWaveFunction> {
    let v = numbers(spec, 3, "--gaussian expects x0,p0,sigma")?;
    Ok(GridWaveFunction::gaussian(grid, v[0], v[1], v[2])?)
}

/// Initial wave function, with the step and time it was dumped at and the
/// dump text itself when it came from a file.
pub struct Initial {
    pub psi: GridWaveFunction,
    pub step: usize,
    pub time: f64,
    pub text: Option<String>,
}

pub fn initial_wave(
    file: Option<&Path>,
    gaussian_spec: Option<&str>,
    grid: Grid,
    inputs: &mut Inputs,
) -> CliResult<Initial> {
    match (file, gaussian_spec) {
        (Some(path), None) => {
            let text = inputs.read(path)?;
            let dump = parse_wavefunction(&text).map_err(|e| CliError::from(e).in_file(path))?;
            if dump.psi.grid() != grid {
                return Err(CliError::from(detsim::Error::DimensionMismatch {
                    expected: grid.points(),
                    actual: dump.psi.grid().points(),
                })
                .in_file(path));
            }
            Ok(Initial {
                psi: dump.psi,
                step: dump.step,
                time: dump.time,
                text: Some(text),
            })
        }
        (None, Some(spec)) => Ok(Initial {
            psi: gaussian(spec, grid)?,
            step: 0,
            time: 0.0,
            text: None,
        }),
        _ => Err(usage("give exactly one of --initial and --gaussian")),
    }
}

pub fn numbers(spec: &str, count: usize, msg: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = spec
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(msg))?;
    if v.len() != count {
        return Err(usage(msg));
    }
    Ok(v)
}

pub fn element(s: &str) -> CliResult<Element> {
    Ok(Element::new(s.trim())?)
}

/// Space- or comma-separated letters.
pub fn letters(s: &str) -> CliResult<Vec<Element>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(element)
        .collect()
}

pub fn chain(s: &str) -> CliResult<Chain> {
    let ls = letters(s)?;
    Ok(Chain::from_letters(ls.iter().map(Element::as_str))?)
}

/// `admitted:<elem>:<bond>:<x>,<y>,<z>` or `rejected:<label>`.
pub fn outcome(spec: &str) -> CliResult<Outcome> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        ["admitted", el, bond, pos] => {
            let p = numbers(pos, 3, "attachment position must be x,y,z")?;
            Ok(Outcome::Admitted(Attachment {
                element: element(el)?,
                bond_to_coding: bond.parse::<BondKind>()?,
                position: [p[0], p[1], p[2]],
            }))
        }
        ["rejected", label] if !label.is_empty() => Ok(Outcome::NonAdmitted {
            label: label.to_string(),
        }),
        _ => Err(usage(format!(
            "bad outcome {spec:?}; expected admitted:E:bond:x,y,z or rejected:label"
        ))),
    }
}

/// Input of `ls-solve`:
///
/// ```text
/// # detsim-ls v1 n=2
/// H
/// 0 0  0 0
/// 0 0  1 0
/// V
/// ...
/// phi
/// 1 0
/// 0 0
/// ```
///
/// Matrix rows hold `re im` pairs; `phi` holds one `re im` pair per line.
#[derive(Debug)]
pub struct LsSystem {
    pub h: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub phi: DVector<Complex64>,
}

pub fn parse_ls(text: &str) -> detsim::Result<LsSystem> {
    let perr = |line: usize, message: String| detsim::Error::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let mut tokens = header.split_whitespace();
    if (tokens.next(), tokens.next(), tokens.next()) != (Some("#"), Some("detsim-ls"), Some("v1")) {
        return Err(perr(1, "expected header '# detsim-ls v1 n=<dim>'".into()));
    }
    let n: usize = tokens
        .find_map(|t| t.strip_prefix("n="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(1, "missing n=<dim> in header".into()))?;

    let mut section = "";
    let mut rows: [Vec<Vec<Complex64>>; 3] = Default::default();
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if matches!(line, "H" | "V" | "phi") {
            section = if line == "H" { "H" } else if line == "V" { "V" } else { "phi" };
            continue;
        }
        let idx = match section {
            "H" => 0,
            "V" => 1,
            "phi" => 2,
            _ => return Err(perr(no, "data before any H / V / phi section".into())),
        };
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| perr(no, format!("invalid number {t:?}"))))
            .collect::<detsim::Result<Vec<f64>>>()?;
        let width = if idx == 2 { 1 } else { n };
        if values.len() != 2 * width {
            return Err(perr(no, format!("expected {} numbers, found {}", 2 * width, values.len())));
        }
        rows[idx].push(values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    for (name, r) in ["H", "V", "phi"].iter().zip(&rows) {
        if r.len() != n {
            return Err(perr(1, format!("section {name} has {} rows, expected {n}", r.len())));
        }
    }
    let matrix = |r: &Vec<Vec<Complex64>>| DMatrix::from_fn(n, n, |i, j| r[i][j]);
    Ok(LsSystem {
        h: matrix(&rows[0]),
        v: matrix(&rows[1]),
        phi: DVector::from_fn(n, |i, _| rows[2][i][0]),
    })
}
