use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hartree_core::groundstate::{minimize, FlowOptions};
use hartree_core::io::load_field;
use hartree_core::{Grid, KernelSpec};
use serde_json::Value;

const COULOMB: &str = r#"
seed = 3

[grid]
N = 32
L = 80.0

[kernel]
family = "power_law"
alpha = 1.0
g = 1.0

[groundstate]
lambda = 1.0
"#;

fn hartree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hartree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(dir: &Path, config: &str, cmd: &str, out: &str, extra: &[&str]) -> (PathBuf, Output) {
    let cfg = dir.join(format!("{out}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(out);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = hartree(&args);
    assert!(
        o.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    (out, o)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn groundstate_writes_result_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = run(dir.path(), COULOMB, "groundstate", "gs", &[]);
    let r = json(&out.join("groundstate.json"));
    assert_eq!(r["converged"], true);
    assert!(r["residual"].as_f64().unwrap() <= 1e-6);
    let u = load_field(&out.join("groundstate.hfld")).unwrap();
    let grid = Grid::new(32, 80.0).unwrap();
    assert_eq!(*u.grid(), grid);

    let direct = minimize(1.0, KernelSpec::coulomb(), &grid, &FlowOptions::default()).unwrap();
    let i = r["I"].as_f64().unwrap();
    assert!((i - direct.i_lambda).abs() <= 1e-12 * direct.i_lambda.abs(), "{i} vs {}", direct.i_lambda);
    assert_eq!(u, direct.u);
    assert!(r["diagnostics"]["min_real_part"].as_f64().unwrap() > 0.0);

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "groundstate");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"groundstate.hfld"));
    assert!(outputs.contains(&"flow.csv"));
    assert_eq!(csv_lines(&out.join("flow.csv"))[1], "iteration,energy,h1");
}

fn rearrange_config(seed: u64) -> String {
    format!(
        "seed = {seed}\n[grid]\nN = 16\nL = 16.0\n[kernel]\nfamily = \"power_law\"\nalpha = 1.0\ng = 1.0\n\
         [rearrange]\nfields = 4\nrefine = false\n"
    )
}

fn strip_times(mut m: Value) -> Value {
    let o = m.as_object_mut().unwrap();
    o.remove("started_unix");
    o.remove("wall_time_s");
    o.remove("config_path");
    m
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = rearrange_config(11);
    let (a, _) = run(dir.path(), &cfg, "rearrange-check", "a", &[]);
    let (b, _) = run(dir.path(), &cfg, "rearrange-check", "b", &["--threads", "1"]);
    let csv = |d: &Path| std::fs::read(d.join("rearrange.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(
        std::fs::read(a.join("rearrange.json")).unwrap(),
        std::fs::read(b.join("rearrange.json")).unwrap()
    );
    assert_eq!(strip_times(json(&a.join("manifest.json"))), strip_times(json(&b.join("manifest.json"))));

    let (c, _) = run(dir.path(), &cfg, "rearrange-check", "c", &["--seed", "12"]);
    assert_ne!(csv(&a), csv(&c));
    assert_eq!(json(&c.join("manifest.json"))["seed"], 12);
    let lines = csv_lines(&a.join("rearrange.csv"));
    assert_eq!(lines[0], "# hartree-csv schema=1 table=rearrange");
    assert_eq!(lines[1], "N,field,kernel,riesz_violation,polya_szego_excess");
    assert_eq!(lines.len(), 2 + 4 * 5);
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let o = hartree(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = hartree(&["energy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, COULOMB.replace("alpha = 1.0", "alpha = 2.5")).unwrap();
    let o = hartree(&["energy", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"]["kind"], "config");
    assert_eq!(e["error"]["line"], 10);
    assert!(e["error"]["message"].as_str().unwrap().contains("0 < alpha <= 2"));

    std::fs::write(&cfg, COULOMB.replace("L = 80.0", "L = 8x")).unwrap();
    let o = hartree(&["energy", "--config", cfg.to_str().unwrap()]);
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"]["line"], 6);
}

#[test]
fn runtime_errors_write_error_json() {
    let dir = tempfile::tempdir().unwrap();
    // Bracket whose upper end is not negative: the bisection refuses it.
    let cfg = format!(
        "{COULOMB}lambdas = [1.0]\nmax_iter = 50\n[bisect]\nlo = 1e-4\nhi = 2e-4\nscale_box = false\n"
    );
    let path = dir.path().join("c.toml");
    std::fs::write(&path, cfg).unwrap();
    let out = dir.path().join("o");
    let o = hartree(&["sweep-lambda", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = json(&out.join("error.json"));
    assert!(e["error"]["kind"].is_string());
    assert_eq!(json(&out.join("manifest.json"))["status"], "error");
}

#[test]
fn help_documents_every_csv_column() {
    let o = hartree(&["--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    for col in [
        "lambda", "I ", "mu", "residual", "converged", "orbit_dist", "h1", "riesz_violation",
        "polya_szego_excess", "modulus_defect", "sup_distance", "schema=1",
    ] {
        assert!(help.contains(col), "{col}");
    }
}

#[test]
fn energy_prints_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let (out, o) = run(dir.path(), COULOMB, "energy", "e", &[]);
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    let stored = json(&out.join("energy.json"));
    assert_eq!(printed, stored["energy"]);
    let k = printed["kinetic"].as_f64().unwrap();
    let i = printed["interaction"].as_f64().unwrap();
    assert_eq!(printed["total"].as_f64().unwrap(), k + i);
    assert!((stored["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{COULOMB}lambdas = [0.9, 1.0]\n");
    let (out, _) = run(dir.path(), &cfg, "sweep-lambda", "s", &[]);
    let lines = csv_lines(&out.join("sweep.csv"));
    assert_eq!(lines[1], "lambda,I,mu,residual,converged");
    assert_eq!(lines.len(), 4);
    let i: Vec<f64> = lines[2..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(i[1] < i[0] && i[0] < 0.0);
}

#[test]
fn evolve_writes_trace_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seed = 5\n[grid]\nN = 16\nL = 20.0\n[kernel]\nfamily = \"yukawa\"\ng = 1.0\nm = 1.0\n\
               [evolve]\nT = 0.1\ndt = 0.01\nsample_every = 2\nsnapshot_every = 5\ninitial = \"random\"\n";
    let (out, _) = run(dir.path(), cfg, "evolve", "ev", &[]);
    let lines = csv_lines(&out.join("trace.csv"));
    assert_eq!(lines[0], "# hartree-csv schema=1 table=trace");
    assert_eq!(lines[1], "t,mass,energy,h1,orbit_dist");
    assert_eq!(lines.len(), 2 + 6);
    assert!(lines[2].ends_with(','));
    let snaps = json(&out.join("evolve.json"))["snapshots"].as_array().unwrap().clone();
    assert_eq!(snaps.len(), 3);
    let u = load_field(&out.join(snaps[2].as_str().unwrap())).unwrap();
    assert_eq!(u.grid().n(), 16);
    assert!(json(&out.join("evolve.json"))["mass_drift"].as_f64().unwrap() < 1e-12);
}

#[test]
fn soliton_and_stability_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{COULOMB}[evolve]\nT = 0.2\ndt = 0.02\nsample_every = 5\n\
         [stability]\nT = 0.2\ndt = 0.02\ndeltas = [1e-2]\nsample_every = 5\n"
    );
    let (out, _) = run(dir.path(), &cfg, "soliton-check", "sol", &[]);
    let s = json(&out.join("soliton.json"));
    assert!(s["max_modulus_defect"].as_f64().unwrap() < 1e-4);
    assert_eq!(csv_lines(&out.join("soliton.csv"))[1], "t,phase_defect,phase_defect_energy_rate,modulus_defect");

    let (out, _) = run(dir.path(), &cfg, "stability", "stab", &[]);
    let s = json(&out.join("stability.json"));
    assert_eq!(s["rows"].as_array().unwrap().len(), 1);
    assert_eq!(s["seed"], 3);
    assert_eq!(csv_lines(&out.join("stability.csv"))[1], "delta,initial_distance,sup_distance,pass");
}

#[test]
fn norms_and_kconst_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\nN = 32\nL = 16.0\n[kernel]\nfamily = \"power_law\"\nalpha = 2.0\ng = 1.0\n";
    let (out, _) = run(dir.path(), cfg, "norms", "n", &[]);
    let n = json(&out.join("norms.json"));
    let first = &n["records"][0];
    assert_eq!(first["method"], "analytic_level_set");
    assert_eq!(first["q"], "inf");
    let exact = (4.0 * std::f64::consts::PI / 3.0f64).powf(2.0 / 3.0);
    assert!((first["value"].as_f64().unwrap() - exact).abs() <= 1e-10 * exact);
    assert!((n["c2"]["value"].as_f64().unwrap() - exact).abs() <= 1e-10 * exact);

    let (out, _) = run(dir.path(), cfg, "kconst", "k", &[]);
    let k = json(&out.join("kconst.json"));
    let est = k["k_est"].as_f64().unwrap();
    assert!(est > 0.2 && k["max_ratio"].as_f64().unwrap() <= 10.0);
    assert_eq!(k["records"][0]["value"].as_f64().unwrap(), est);
    assert!((k["lambda_star_upper"].as_f64().unwrap() - 1.0 / (exact * est)).abs() < 1e-9);
    assert_eq!(csv_lines(&out.join("kconst.csv")).len(), 2 + 50);
}

#[test]
fn bind_check_reports_positive_margins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{COULOMB}[bind]\nratios = [0.5]\n");
    let (out, _) = run(dir.path(), &cfg, "bind-check", "b", &[]);
    let b = json(&out.join("bind.json"));
    assert_eq!(b["pass"], true);
    assert!(b["rows"][0]["margin"].as_f64().unwrap() > 1e-5);
}
