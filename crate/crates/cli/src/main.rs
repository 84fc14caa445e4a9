//! `hartree`: command-line front end of the Hartree toolkit.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use config::{parse_config, RunConfig};
use error::CliError;
use output::{sha256_hex, Manifest, Sink, CSV_SCHEMA};

#[derive(Parser)]
#[command(
    name = "hartree",
    version,
    about = "Ground states, thresholds and dynamics of the Hartree equation",
    after_help = output::csv_help()
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads. Affects speed only, never results.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Weak L^{3/2} norm and C₂ of the kernel, Lorentz norms of the trial fields → norms.json
    Norms,
    /// Trial lower bound for K and the coercivity ceiling → kconst.json, kconst.csv
    Kconst,
    /// Minimizer at `groundstate.lambda` → groundstate.json, groundstate.hfld, flow.csv
    Groundstate,
    /// I(λ) over `groundstate.lambdas`, optional λ_* bisection → sweep.csv, sweep.json, lambda_star.json
    SweepLambda,
    /// Binding inequality at `bind.lambda` → bind.json
    BindCheck,
    /// Riesz and Pólya–Szegő suites on random fields → rearrange.json, rearrange.csv
    RearrangeCheck,
    /// Strang-split evolution → trace.csv, evolve.json, snapshots/*.hfld
    Evolve,
    /// Evolves the ground state and compares with the standing wave → soliton.json, soliton.csv
    SolitonCheck,
    /// Perturbed ground states and their orbit distance → stability.json, stability.csv
    Stability,
    /// Energy breakdown of a field (stdout) → energy.json
    Energy,
}

impl Command {
    fn name(self) -> String {
        Cli::command()
            .get_subcommands()
            .nth(self as usize)
            .map(|c| c.get_name().to_string())
            .unwrap_or_default()
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn fail(err: &CliError, dir: Option<&Path>) -> ExitCode {
    let report = serde_json::to_string(&err.report()).unwrap_or_else(|_| "{}".into());
    eprintln!("{report}");
    if let Some(dir) = dir {
        let _ = hartree_core::io::write_atomic(&dir.join("error.json"), format!("{report}\n").as_bytes());
    }
    ExitCode::FAILURE
}

fn dispatch(cmd: Command, cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    match cmd {
        Command::Norms => commands::norms(cfg, sink),
        Command::Kconst => commands::kconst(cfg, sink),
        Command::Groundstate => commands::groundstate(cfg, sink),
        Command::SweepLambda => commands::sweep_lambda(cfg, sink),
        Command::BindCheck => commands::bind_check(cfg, sink),
        Command::RearrangeCheck => commands::rearrange_check(cfg, sink),
        Command::Evolve => commands::evolve_cmd(cfg, sink),
        Command::SolitonCheck => commands::soliton(cfg, sink),
        Command::Stability => commands::stability(cfg, sink),
        Command::Energy => {
            let e = commands::energy(cfg, sink)?;
            println!("{}", serde_json::to_string(&e)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let started_unix = unix_now();
    let clock = Instant::now();

    let Some(config_path) = cli.config.clone() else {
        Cli::command()
            .error(ErrorKind::MissingRequiredArgument, "--config <PATH> is required")
            .exit();
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&CliError::Usage(format!("cannot start {n} threads: {e}")), None);
        }
    }
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => return fail(&CliError::io(&config_path, e), None),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(&e.into(), None),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.evolve.seed = seed;
        cfg.stability.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut sink = match Sink::new(&out) {
        Ok(s) => s,
        Err(e) => return fail(&e, None),
    };

    let result = dispatch(cli.command, &cfg, &mut sink);
    let outputs = sink
        .written()
        .iter()
        .map(|p| p.strip_prefix(&out).unwrap_or(p).display().to_string())
        .collect();
    let manifest = Manifest {
        tool: "hartree",
        version: env!("CARGO_PKG_VERSION"),
        core_version: hartree_core::VERSION,
        csv_schema: CSV_SCHEMA,
        subcommand: cli.command.name(),
        config_path: config_path.display().to_string(),
        config_sha256: sha256_hex(text.as_bytes()),
        seed: cfg.seed,
        status: if result.is_ok() { "ok" } else { "error" },
        outputs,
        started_unix,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(CliError::from)
        .and_then(|m| Ok(hartree_core::io::write_atomic(&out.join("manifest.json"), format!("{m}\n").as_bytes())?));
    match result.and(written) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, Some(&out)),
    }
}
