//! Cached full propagators for repeated Cauchy problems.
//!
//! For a fixed potential, mass, time step and step count the split-operator
//! evolution is a fixed linear map `M(T)`. Building it once (column by column
//! from the basis states) turns every later initial condition into a single
//! matrix-vector product. Matrices are kept in memory and optionally persisted
//! one file per key, the file name being the key digest.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::OnceCell;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{evolve, Grid, GridWaveFunction, PotentialField, PotentialSamples, Representation};

/// Default cap on grid points for dense storage (`l <= 10`).
pub const DEFAULT_MAX_POINTS: usize = 1024;

const FILE_HEADER: &str = "# detsim-propagator v1";

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the potential samples (bit patterns, step by step) and mass.
pub fn potential_fingerprint(field: &PotentialField) -> String {
    let mut h = Sha256::new();
    match field.samples() {
        PotentialSamples::Static(v) => {
            h.update(b"static");
            h.update((v.len() as u64).to_le_bytes());
            v.iter().for_each(|x| h.update(x.to_bits().to_le_bytes()));
        }
        PotentialSamples::Stepped(vs) => {
            h.update(b"stepped");
            h.update((vs.len() as u64).to_le_bytes());
            for v in vs {
                h.update((v.len() as u64).to_le_bytes());
                v.iter().for_each(|x| h.update(x.to_bits().to_le_bytes()));
            }
        }
    }
    h.update(b"mass");
    h.update(field.mass().to_bits().to_le_bytes());
    hex(&h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PropagatorKey {
    qubits: u32,
    potential: String,
    dt_bits: u64,
    steps: usize,
}

impl PropagatorKey {
    pub fn new(grid: Grid, field: &PotentialField, dt: f64, steps: usize) -> Self {
        Self {
            qubits: grid.qubits(),
            potential: potential_fingerprint(field),
            dt_bits: dt.to_bits(),
            steps,
        }
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn potential(&self) -> &str {
        &self.potential
    }

    pub fn dt(&self) -> f64 {
        f64::from_bits(self.dt_bits)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn canonical(&self) -> String {
        format!(
            "l={} potential={} dt={:016x} steps={}",
            self.qubits, self.potential, self.dt_bits, self.steps
        )
    }

    fn parse_canonical(line: &str) -> Option<Self> {
        let mut qubits = None;
        let mut potential = None;
        let mut dt_bits = None;
        let mut steps = None;
        for token in line.split_whitespace() {
            let (k, v) = token.split_once('=')?;
            match k {
                "l" => qubits = v.parse().ok(),
                "potential" => potential = Some(v.to_string()),
                "dt" => dt_bits = u64::from_str_radix(v, 16).ok(),
                "steps" => steps = v.parse().ok(),
                _ => return None,
            }
        }
        Some(Self {
            qubits: qubits?,
            potential: potential?,
            dt_bits: dt_bits?,
            steps: steps?,
        })
    }

    /// Hex SHA-256 of the canonical key text; used as the file name.
    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Dense `N x N` propagator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    grid: Grid,
    entries: Vec<Complex64>,
}

impl PropagatorMatrix {
    pub fn identity(grid: Grid) -> Self {
        let n = grid.points();
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        (0..n).for_each(|i| entries[i * n + i] = Complex64::new(1.0, 0.0));
        Self { grid, entries }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dimension(&self) -> usize {
        self.grid.points()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dimension() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `max |(M^dagger M - I)_{ij}|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dimension();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut worst: f64 = 0.0;
                for j in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for r in 0..n {
                        s += self.entries[r * n + i].conj() * self.entries[r * n + j];
                    }
                    if i == j {
                        s -= 1.0;
                    }
                    worst = worst.max(s.norm());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    fn write_to(&self, key: &PropagatorKey, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            writeln!(w, "{FILE_HEADER}")?;
            writeln!(w, "{}", key.canonical())?;
            for z in &self.entries {
                writeln!(w, "{:e} {:e}", z.re, z.im)?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    fn read_from(path: &Path, expected: &PropagatorKey) -> Result<Self> {
        let (key, matrix) = Self::read_file(path)?;
        if &key != expected {
            return Err(Error::KeyMismatch);
        }
        Ok(matrix)
    }

    /// Reads a stored propagator together with the key it was built for.
    pub fn read_file(path: &Path) -> Result<(PropagatorKey, Self)> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let mut next = |n: usize| -> Result<String> {
            match lines.next() {
                Some(Ok(l)) => Ok(l),
                Some(Err(e)) => Err(Error::io(path, e)),
                None => Err(Error::parse(n, "unexpected end of propagator file")),
            }
        };
        if next(1)?.trim() != FILE_HEADER {
            return Err(Error::parse(1, "not a propagator file"));
        }
        let key = PropagatorKey::parse_canonical(&next(2)?)
            .ok_or_else(|| Error::parse(2, "malformed propagator key"))?;
        let grid = Grid::new(key.qubits)?;
        let n = grid.points();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n * n {
            let line = next(i + 3)?;
            let mut it = line.split_whitespace();
            let mut num = || -> Result<f64> {
                it.next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(i + 3, "expected two floats"))
            };
            entries.push(Complex64::new(num()?, num()?));
        }
        Ok((key, Self { grid, entries }))
    }
}

/// Assembles `M(T)` column by column: column `c` is `evolve(|c>)`.
pub fn build(
    key: &PropagatorKey,
    field: &PotentialField,
    grid: Grid,
    max_points: usize,
) -> Result<PropagatorMatrix> {
    let n = grid.points();
    if n > max_points {
        return Err(Error::CapExceeded {
            points: n,
            cap: max_points,
        });
    }
    let dt = key.dt();
    if &PropagatorKey::new(grid, field, dt, key.steps) != key {
        return Err(Error::KeyMismatch);
    }
    let columns: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|c| {
            let basis = GridWaveFunction::delta(grid, c)?;
            Ok(evolve(&basis, field, dt, key.steps)?.into_amplitudes())
        })
        .collect::<Result<_>>()?;
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (c, col) in columns.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            entries[r * n + c] = *z;
        }
    }
    Ok(PropagatorMatrix { grid, entries })
}

/// `M * psi0`.
pub fn apply(matrix: &PropagatorMatrix, psi0: &GridWaveFunction) -> Result<GridWaveFunction> {
    let n = matrix.dimension();
    if psi0.grid() != matrix.grid {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: psi0.grid().points(),
        });
    }
    let x = psi0.amplitudes();
    let out = matrix
        .entries
        .chunks_exact(n)
        .map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum())
        .collect();
    GridWaveFunction::with_representation(matrix.grid, Representation::Coordinate, out)
}

type Slot = Arc<OnceCell<Arc<PropagatorMatrix>>>;

/// In-memory store of propagators with optional on-disk persistence.
///
/// Concurrent lookups of the same key block on a single build.
#[derive(Debug)]
pub struct PropagatorDatabase {
    dir: Option<PathBuf>,
    max_points: usize,
    slots: Mutex<HashMap<PropagatorKey, Slot>>,
    builds: AtomicUsize,
}

impl PropagatorDatabase {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            max_points: DEFAULT_MAX_POINTS,
            slots: Mutex::new(HashMap::new()),
            builds: AtomicUsize::new(0),
        }
    }

    /// Store backed by `dir` (created if missing).
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir: Some(dir),
            ..Self::in_memory()
        })
    }

    pub fn with_max_points(mut self, max_points: usize) -> Self {
        self.max_points = max_points;
        self
    }

    pub fn max_points(&self) -> usize {
        self.max_points
    }

    pub fn directory(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Number of matrices built (not loaded) by this instance.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::SeqCst)
    }

    pub fn path_for(&self, key: &PropagatorKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(key.digest()))
    }

    fn slot(&self, key: &PropagatorKey) -> Slot {
        let mut slots = self.slots.lock().expect("propagator store poisoned");
        slots.entry(key.clone()).or_default().clone()
    }

    fn load(&self, key: &PropagatorKey) -> Result<Option<PropagatorMatrix>> {
        match self.path_for(key) {
            Some(path) if path.exists() => PropagatorMatrix::read_from(&path, key).map(Some),
            _ => Ok(None),
        }
    }

    /// Returns the stored matrix, loading from disk if needed, without
    /// building.
    pub fn lookup(&self, key: &PropagatorKey) -> Result<Arc<PropagatorMatrix>> {
        let slot = self.slot(key);
        slot.get_or_try_init(|| {
            self.load(key)?
                .map(Arc::new)
                .ok_or_else(|| Error::MissingEntry(key.digest()))
        })
        .cloned()
    }

    pub fn lookup_or_build(
        &self,
        key: &PropagatorKey,
        field: &PotentialField,
        grid: Grid,
    ) -> Result<Arc<PropagatorMatrix>> {
        let slot = self.slot(key);
        slot.get_or_try_init(|| {
            if let Some(m) = self.load(key)? {
                return Ok(Arc::new(m));
            }
            let m = build(key, field, grid, self.max_points)?;
            self.builds.fetch_add(1, Ordering::SeqCst);
            if let Some(path) = self.path_for(key) {
                m.write_to(key, &path)?;
            }
            Ok(Arc::new(m))
        })
        .cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dft, idft, kinetic_phase};

    fn grid(l: u32) -> Grid {
        Grid::new(l).unwrap()
    }

    #[test]
    fn zero_steps_gives_identity() {
        let g = grid(4);
        let field = PotentialField::harmonic(g, 1.0, 1.0).unwrap();
        let key = PropagatorKey::new(g, &field, 0.1, 0);
        let m = build(&key, &field, g, DEFAULT_MAX_POINTS).unwrap();
        assert_eq!(m, PropagatorMatrix::identity(g));
    }

    #[test]
    fn free_single_step_columns() {
        let g = grid(4);
        let field = PotentialField::zero(g, 1.0).unwrap();
        let key = PropagatorKey::new(g, &field, 0.3, 1);
        let m = build(&key, &field, g, DEFAULT_MAX_POINTS).unwrap();
        for c in 0..g.points() {
            let e = GridWaveFunction::delta(g, c).unwrap();
            let col = idft(&kinetic_phase(&dft(&e), 0.3, 1.0));
            for r in 0..g.points() {
                assert!((m.entry(r, c) - col.amplitudes()[r]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn key_distinguishes_inputs() {
        let g = grid(3);
        let f = PotentialField::harmonic(g, 1.0, 1.0).unwrap();
        let a = PropagatorKey::new(g, &f, 0.1, 5);
        assert_eq!(a, PropagatorKey::new(g, &f, 0.1, 5));
        assert_ne!(a, PropagatorKey::new(g, &f, 0.2, 5));
        assert_ne!(a, PropagatorKey::new(g, &f, 0.1, 6));
        let heavier = PotentialField::new(g, f.at_step(0).unwrap().to_vec(), 2.0).unwrap();
        assert_ne!(a, PropagatorKey::new(g, &heavier, 0.1, 5));
        assert_ne!(a.digest(), PropagatorKey::new(g, &f, 0.2, 5).digest());
        assert_eq!(PropagatorKey::parse_canonical(&a.canonical()), Some(a));
    }

    #[test]
    fn cap_and_key_checks() {
        let g = grid(5);
        let f = PotentialField::zero(g, 1.0).unwrap();
        let key = PropagatorKey::new(g, &f, 0.1, 1);
        assert!(matches!(build(&key, &f, g, 16), Err(Error::CapExceeded { .. })));
        let other = PotentialField::harmonic(g, 1.0, 1.0).unwrap();
        assert!(matches!(
            build(&key, &other, g, DEFAULT_MAX_POINTS),
            Err(Error::KeyMismatch)
        ));
    }

    #[test]
    fn apply_identity_and_mismatch() {
        let g = grid(4);
        let psi = GridWaveFunction::gaussian(g, 0.3, 0.2, 1.0).unwrap();
        let out = apply(&PropagatorMatrix::identity(g), &psi).unwrap();
        assert!(out.max_distance(&psi) < 1e-15);
        let other = GridWaveFunction::delta(grid(3), 0).unwrap();
        assert!(apply(&PropagatorMatrix::identity(g), &other).is_err());
    }

    #[test]
    fn cache_builds_once() {
        let g = grid(4);
        let f = PotentialField::harmonic(g, 1.0, 1.0).unwrap();
        let db = PropagatorDatabase::in_memory();
        let key = PropagatorKey::new(g, &f, 0.05, 10);
        let a = db.lookup_or_build(&key, &f, g).unwrap();
        let b = db.lookup_or_build(&key, &f, g).unwrap();
        assert_eq!(db.builds(), 1);
        assert!(Arc::ptr_eq(&a, &b));
        let key2 = PropagatorKey::new(g, &f, 0.1, 10);
        db.lookup_or_build(&key2, &f, g).unwrap();
        assert_eq!(db.builds(), 2);
    }

    #[test]
    fn missing_entry_without_build() {
        let g = grid(3);
        let f = PotentialField::zero(g, 1.0).unwrap();
        let db = PropagatorDatabase::in_memory();
        let key = PropagatorKey::new(g, &f, 0.05, 10);
        assert!(matches!(db.lookup(&key), Err(Error::MissingEntry(_))));
    }

    #[test]
    fn unwritable_directory_propagates() {
        let dir = tempfile::tempdir().unwrap();
        let db = PropagatorDatabase::open(dir.path()).unwrap();
        let g = grid(3);
        let f = PotentialField::zero(g, 1.0).unwrap();
        let key = PropagatorKey::new(g, &f, 0.05, 1);
        // A directory squatting on the entry's file name makes the write fail.
        fs::create_dir(db.path_for(&key).unwrap().with_extension("tmp")).unwrap();
        assert!(matches!(db.lookup_or_build(&key, &f, g), Err(Error::Io { .. })));
    }
}
