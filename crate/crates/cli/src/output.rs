//! Artifact writing: JSON metadata, CSV tables, HFLD fields, the run
//! manifest. Every file goes through a temporary sibling and a rename.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hartree_core::io::{save_field, write_atomic};
use hartree_core::Field;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Version of the CSV layouts below; written into every CSV header comment.
pub const CSV_SCHEMA: u32 = 1;

pub struct Table {
    pub name: &'static str,
    pub columns: &'static [&'static str],
    pub doc: &'static [&'static str],
}

pub const SWEEP: Table = Table {
    name: "sweep",
    columns: &["lambda", "I", "mu", "residual", "converged"],
    doc: &[
        "mass",
        "minimal energy found at that mass",
        "Lagrange multiplier",
        "relative residual ‖H[u]u − μu‖/‖u‖",
        "1 if the flow converged, else 0",
    ],
};

pub const TRACE: Table = Table {
    name: "trace",
    columns: &["t", "mass", "energy", "h1", "orbit_dist"],
    doc: &[
        "time",
        "‖u‖² in L²",
        "total energy",
        "‖u‖² in the homogeneous H¹ seminorm",
        "distance to the ground-state orbit (empty without a reference)",
    ],
};

pub const FLOW: Table = Table {
    name: "flow",
    columns: &["iteration", "energy", "h1"],
    doc: &[
        "accepted step (0 is the initial guess)",
        "energy after the step",
        "homogeneous H¹ seminorm squared after the step",
    ],
};

pub const KCONST: Table = Table {
    name: "kconst",
    columns: &["trial", "profile", "scale", "kernel", "ratio"],
    doc: &[
        "trial index",
        "gaussian or sech",
        "dilation length of the trial",
        "kernel label",
        "interaction / (weak norm · mass · H¹ seminorm²)",
    ],
};

pub const REARRANGE: Table = Table {
    name: "rearrange",
    columns: &["N", "field", "kernel", "riesz_violation", "polya_szego_excess"],
    doc: &[
        "grid points per axis",
        "random field index (stream of the seed)",
        "kernel label",
        "relative interaction loss under rearrangement (positive violates)",
        "relative kinetic gain under rearrangement (positive violates)",
    ],
};

pub const SOLITON: Table = Table {
    name: "soliton",
    columns: &["t", "phase_defect", "phase_defect_energy_rate", "modulus_defect"],
    doc: &[
        "time",
        "‖u(t) − e^{−iμt}u*‖/‖u*‖",
        "same with the phase rate I(λ)",
        "‖|u(t)| − |u*|‖/‖u*‖",
    ],
};

pub const STABILITY: Table = Table {
    name: "stability",
    columns: &["delta", "initial_distance", "sup_distance", "pass"],
    doc: &[
        "perturbation size in H¹",
        "orbit distance at t = 0",
        "largest sampled orbit distance",
        "1 if sup_distance ≤ 10·initial_distance",
    ],
};

pub const TABLES: [&Table; 7] = [&SWEEP, &TRACE, &FLOW, &KCONST, &REARRANGE, &SOLITON, &STABILITY];

/// Column reference for `--help`.
pub fn csv_help() -> String {
    let mut s = format!(
        "CSV outputs (first line `# hartree-csv schema={CSV_SCHEMA} table=<name>`, then the header):\n"
    );
    for t in TABLES {
        let _ = writeln!(s, "\n  {}.csv", t.name);
        for (c, d) in t.columns.iter().zip(t.doc) {
            let _ = writeln!(s, "    {c:<26} {d}");
        }
    }
    s
}

pub enum Cell {
    F(f64),
    U(usize),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// Shortest round-trip formatting keeps reruns byte-identical.
fn render(c: &Cell) -> String {
    match c {
        Cell::F(v) => format!("{v:e}"),
        Cell::U(v) => v.to_string(),
        Cell::B(v) => u8::from(*v).to_string(),
        Cell::S(v) if v.contains([',', '"', '\n']) => format!("\"{}\"", v.replace('"', "\"\"")),
        Cell::S(v) => v.clone(),
        Cell::Empty => String::new(),
    }
}

pub fn csv_text(table: &Table, rows: &[Vec<Cell>]) -> String {
    let mut s = format!("# hartree-csv schema={CSV_SCHEMA} table={}\n", table.name);
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for r in rows {
        debug_assert_eq!(r.len(), table.columns.len());
        s.push_str(&r.iter().map(render).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Output directory plus the list of artifacts written so far.
pub struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn csv(&mut self, table: &Table, rows: &[Vec<Cell>]) -> Result<PathBuf, CliError> {
        self.bytes(&format!("{}.csv", table.name), csv_text(table, rows).as_bytes())
    }

    pub fn field(&mut self, name: &str, u: &Field) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        save_field(u, &path)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Records files written by the core library (evolution snapshots).
    pub fn adopt(&mut self, paths: &[PathBuf]) {
        self.written.extend_from_slice(paths);
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub csv_schema: u32,
    pub subcommand: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub status: &'static str,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub wall_time_s: f64,
}
