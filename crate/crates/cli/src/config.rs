//! Run configuration: TOML text to a validated [`RunConfig`].
//!
//! Parsing fails on the first problem with a line number: syntax errors,
//! unknown keys and type mismatches come from the TOML deserializer, range
//! violations from the checks below.

use std::fmt;
use std::path::{Path, PathBuf};

use hartree_core::{Grid, KernelSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    grid: RawGrid,
    kernel: KernelSpec,
    groundstate: Option<RawGroundState>,
    bisect: Option<RawBisect>,
    bind: Option<RawBind>,
    evolve: Option<RawEvolve>,
    stability: Option<RawStability>,
    norms: Option<RawNorms>,
    rearrange: Option<RawRearrange>,
    energy: Option<RawEnergy>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "N")]
    n: i64,
    #[serde(rename = "L")]
    length: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGroundState {
    lambda: Option<f64>,
    lambdas: Option<Vec<f64>>,
    tau: Option<f64>,
    tol_residual: Option<f64>,
    tol_energy: Option<f64>,
    max_iter: Option<i64>,
    initial: Option<String>,
    width: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBisect {
    lo: f64,
    hi: f64,
    tol_neg: Option<f64>,
    rel_width: Option<f64>,
    scale_box: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBind {
    lambda: Option<f64>,
    ratios: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEvolve {
    #[serde(rename = "T")]
    t_final: Option<f64>,
    dt: Option<f64>,
    sample_every: Option<i64>,
    snapshot_every: Option<i64>,
    seed: Option<u64>,
    initial: Option<String>,
    k_est: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawStability {
    deltas: Option<Vec<f64>>,
    #[serde(rename = "T")]
    t_final: Option<f64>,
    dt: Option<f64>,
    sample_every: Option<i64>,
    seed: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawNorms {
    pairs: Option<Vec<(f64, f64)>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRearrange {
    fields: Option<i64>,
    widths: Option<(f64, f64)>,
    refine: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    field: Option<PathBuf>,
}

/// Starting point of the ground-state flow.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStart {
    Gaussian,
    Random,
    Snapshot(PathBuf),
}

/// Initial data of an evolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveStart {
    Groundstate,
    Random,
    Snapshot(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundStateConfig {
    pub lambda: f64,
    pub lambdas: Vec<f64>,
    pub tau: f64,
    pub tol_residual: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    pub initial: FlowStart,
    /// Width of the Gaussian start; `None` means `L/8`.
    pub width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BisectConfig {
    pub lo: f64,
    pub hi: f64,
    pub tol_neg: f64,
    pub rel_width: f64,
    pub scale_box: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BindConfig {
    pub lambda: f64,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub t_final: f64,
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub snapshot_every: Option<usize>,
    pub seed: u64,
    pub initial: EvolveStart,
    pub k_est: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityConfig {
    pub deltas: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormsConfig {
    /// `(p, q)` pairs; `q = inf` is the weak norm.
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RearrangeConfig {
    pub fields: usize,
    pub widths: (f64, f64),
    /// Repeat the suite at `2N` and report the shrink factors.
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyConfig {
    pub field: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub n: usize,
    pub length: f64,
    pub kernel: KernelSpec,
    pub groundstate: GroundStateConfig,
    pub bisect: Option<BisectConfig>,
    pub bind: BindConfig,
    pub evolve: EvolveConfig,
    pub stability: StabilityConfig,
    pub norms: NormsConfig,
    pub rearrange: RearrangeConfig,
    pub energy: EnergyConfig,
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.n, self.length).expect("validated at parse time")
    }
}

fn line_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn starts_with_key(line: &str, key: &str) -> bool {
    let t = line.trim_start();
    t.strip_prefix(key)
        .is_some_and(|rest| rest.trim_start().starts_with('='))
}

/// Best-effort line of `section.key` (`section` empty for top-level keys),
/// falling back to the section itself.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut section_line = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current == section && starts_with_key(t, key) {
            return Some(i + 1);
        }
        if current.is_empty() && !section.is_empty() && starts_with_key(t, section) {
            section_line = Some(i + 1);
            if t.contains(key) {
                return Some(i + 1);
            }
        }
    }
    section_line
}

/// First offending parameter of an invalid kernel.
fn kernel_key(k: &KernelSpec) -> &'static str {
    let bad = |v: f64| !(v > 0.0 && v.is_finite());
    match *k {
        KernelSpec::PowerLaw { alpha, .. } if !(alpha > 0.0 && alpha <= 2.0) => "alpha",
        KernelSpec::GaussianWell { sigma, g } if bad(sigma) && !bad(g) => "sigma",
        KernelSpec::Yukawa { m, g } if bad(m) && !bad(g) => "m",
        KernelSpec::CompactWell { r0, g } if bad(r0) && !bad(g) => "r0",
        _ => "g",
    }
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        ConfigError {
            line: locate(self.text, section, key),
            column: None,
            key: Some(full),
            message: message.into(),
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.fail(section, key, format!("must be positive and finite (got {v})")))
        }
    }

    fn count(&self, section: &str, key: &str, v: i64) -> Result<usize, ConfigError> {
        if v >= 1 {
            Ok(v as usize)
        } else {
            Err(self.fail(section, key, format!("must be at least 1 (got {v})")))
        }
    }

    fn masses(&self, section: &str, key: &str, v: &[f64]) -> Result<(), ConfigError> {
        if v.is_empty() {
            return Err(self.fail(section, key, "must not be empty"));
        }
        for x in v {
            self.positive(section, key, *x)?;
        }
        Ok(())
    }

    fn existing(&self, section: &str, key: &str, path: PathBuf) -> Result<PathBuf, ConfigError> {
        if Path::new(&path).is_file() {
            Ok(path)
        } else {
            Err(self.fail(section, key, format!("file {} does not exist", path.display())))
        }
    }
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => {
                let (l, c) = line_of(text, span.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ConfigError {
            line,
            column,
            key: None,
            message: e.message().trim().to_string(),
        }
    })?;
    let c = Checker { text };

    if raw.grid.n < 0 {
        return Err(c.fail("grid", "N", format!("must be non-negative (got {})", raw.grid.n)));
    }
    let n = raw.grid.n as usize;
    if let Err(e) = Grid::new(n, raw.grid.length) {
        let key = if matches!(e, hartree_core::Error::BadLength(_)) { "L" } else { "N" };
        return Err(c.fail("grid", key, e.to_string()));
    }
    if let Err(e) = raw.kernel.validate() {
        let key = kernel_key(&raw.kernel);
        return Err(c.fail("kernel", key, e.to_string()));
    }
    let seed = raw.seed.unwrap_or(0);

    let gs = raw.groundstate.unwrap_or_default();
    let lambda = c.positive("groundstate", "lambda", gs.lambda.unwrap_or(1.0))?;
    let lambdas = gs.lambdas.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    c.masses("groundstate", "lambdas", &lambdas)?;
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(c.fail("groundstate", "lambdas", "must be strictly increasing"));
    }
    let initial = match gs.initial.as_deref() {
        None | Some("gaussian") => FlowStart::Gaussian,
        Some("random") => FlowStart::Random,
        Some(p) => FlowStart::Snapshot(c.existing("groundstate", "initial", p.into())?),
    };
    let groundstate = GroundStateConfig {
        lambda,
        lambdas,
        tau: c.positive("groundstate", "tau", gs.tau.unwrap_or(1e9))?,
        tol_residual: c.positive("groundstate", "tol_residual", gs.tol_residual.unwrap_or(1e-6))?,
        tol_energy: c.positive("groundstate", "tol_energy", gs.tol_energy.unwrap_or(1e-12))?,
        max_iter: c.count("groundstate", "max_iter", gs.max_iter.unwrap_or(5000))?,
        initial,
        width: gs.width.map(|w| c.positive("groundstate", "width", w)).transpose()?,
    };

    let bisect = match raw.bisect {
        None => None,
        Some(b) => {
            c.positive("bisect", "lo", b.lo)?;
            c.positive("bisect", "hi", b.hi)?;
            if b.hi <= b.lo {
                return Err(c.fail("bisect", "hi", format!("must exceed lo (got [{}, {}])", b.lo, b.hi)));
            }
            Some(BisectConfig {
                lo: b.lo,
                hi: b.hi,
                tol_neg: c.positive("bisect", "tol_neg", b.tol_neg.unwrap_or(1e-6))?,
                rel_width: c.positive("bisect", "rel_width", b.rel_width.unwrap_or(1e-2))?,
                scale_box: b.scale_box.unwrap_or(true),
            })
        }
    };

    let bd = raw.bind.unwrap_or_default();
    let ratios = bd.ratios.unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    if ratios.is_empty() {
        return Err(c.fail("bind", "ratios", "must not be empty"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r >= 0.05 && **r <= 0.95)) {
        return Err(c.fail("bind", "ratios", format!("ratios must lie in [0.05, 0.95] (got {r})")));
    }
    let bind = BindConfig {
        lambda: c.positive("bind", "lambda", bd.lambda.unwrap_or(lambda))?,
        ratios,
    };

    let ev = raw.evolve.unwrap_or_default();
    let evolve = EvolveConfig {
        t_final: c.positive("evolve", "T", ev.t_final.unwrap_or(1.0))?,
        dt: ev.dt.map(|d| c.positive("evolve", "dt", d)).transpose()?,
        sample_every: c.count("evolve", "sample_every", ev.sample_every.unwrap_or(10))?,
        snapshot_every: ev
            .snapshot_every
            .map(|s| c.count("evolve", "snapshot_every", s))
            .transpose()?,
        seed: ev.seed.unwrap_or(seed),
        initial: match ev.initial.as_deref() {
            None | Some("groundstate") => EvolveStart::Groundstate,
            Some("random") => EvolveStart::Random,
            Some(p) => EvolveStart::Snapshot(c.existing("evolve", "initial", p.into())?),
        },
        k_est: ev.k_est.map(|k| c.positive("evolve", "k_est", k)).transpose()?,
    };

    let st = raw.stability.unwrap_or_default();
    let deltas = st.deltas.unwrap_or_else(|| vec![1e-2]);
    c.masses("stability", "deltas", &deltas)?;
    let stability = StabilityConfig {
        deltas,
        t_final: c.positive("stability", "T", st.t_final.unwrap_or(10.0))?,
        dt: c.positive("stability", "dt", st.dt.unwrap_or(1e-2))?,
        sample_every: c.count("stability", "sample_every", st.sample_every.unwrap_or(10))?,
        seed: st.seed.unwrap_or(seed),
    };

    let pairs = raw
        .norms
        .unwrap_or_default()
        .pairs
        .unwrap_or_else(|| vec![(1.5, f64::INFINITY), (2.0, 2.0), (2.0, 1.0)]);
    for (p, q) in &pairs {
        if !(*p > 1.0 && p.is_finite()) {
            return Err(c.fail("norms", "pairs", format!("p must exceed 1 (got {p})")));
        }
        if !(*q >= 1.0) {
            return Err(c.fail("norms", "pairs", format!("q must be at least 1 (got {q})")));
        }
    }

    let re = raw.rearrange.unwrap_or_default();
    let widths = re.widths.unwrap_or(hartree_core::lorentz::SUITE_WIDTHS);
    if !(widths.0 > 0.0 && widths.0 < widths.1 && widths.1 <= 0.5) {
        return Err(c.fail(
            "rearrange",
            "widths",
            format!("need 0 < lo < hi <= 0.5 (got [{}, {}])", widths.0, widths.1),
        ));
    }
    let rearrange = RearrangeConfig {
        fields: c.count("rearrange", "fields", re.fields.unwrap_or(200))?,
        widths,
        refine: re.refine.unwrap_or(true),
    };

    let energy = EnergyConfig {
        field: raw
            .energy
            .unwrap_or_default()
            .field
            .map(|p| c.existing("energy", "field", p))
            .transpose()?,
    };

    Ok(RunConfig {
        seed,
        out: raw.out,
        n,
        length: raw.grid.length,
        kernel: raw.kernel,
        groundstate,
        bisect,
        bind,
        evolve,
        stability,
        norms: NormsConfig { pairs },
        rearrange,
        energy,
    })
}
