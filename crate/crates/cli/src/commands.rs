//! One function per subcommand. Each reads the validated config, calls the
//! core library and writes its artifacts through the [`Sink`].

use hartree_core::dynamics::{
    default_dt, evolve, soliton_check, stability_experiment, EvolveOptions, OrbitReference,
};
use hartree_core::field::{h1_seminorm_sq, mass, Field};
use hartree_core::groundstate::{
    bisect_lambda_star, binding_check, i_of_lambda_with, initial_field, minimize_with,
    minimizer_diagnostics, symmetrization_probe, BisectOptions, FlowOptions, GroundStateResult,
    InitialGuess, SweepRow,
};
use hartree_core::io::load_field;
use hartree_core::lorentz::{
    c2_estimate, decreasing_rearrangement, default_trial_fields, default_trial_kernels,
    k_lower_bound, lambda_star_from, lorentz_quasinorm, rearrangement_kernels, rearrangement_suite,
    violation_shrinks, weak_norm_analytic, RearrangementSuite, TrialProfile,
};
use hartree_core::random::SmoothRandomField;
use hartree_core::{EnergyBreakdown, Grid, Hartree, RadialKernel};
use serde::{Serialize, Serializer};
use serde_json::json;

use crate::config::{EvolveStart, FlowStart, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Sink, FLOW, KCONST, REARRANGE, SOLITON, STABILITY, SWEEP, TRACE};

type Result<T> = std::result::Result<T, CliError>;

fn exponent<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// One norm value. `q = "inf"` marks the weak norm.
#[derive(Serialize)]
struct NormRecord {
    kernel: Option<String>,
    field: Option<String>,
    #[serde(serialize_with = "exponent")]
    p: f64,
    #[serde(serialize_with = "exponent")]
    q: f64,
    value: f64,
    method: &'static str,
}

fn profile_name(p: TrialProfile) -> &'static str {
    match p {
        TrialProfile::Gaussian => "gaussian",
        TrialProfile::Sech => "sech",
    }
}

fn kernel_label(k: &RadialKernel) -> String {
    let name = k.spec.name();
    match (k.inner, k.outer) {
        (a, b) if a == 0.0 && b.is_infinite() => name,
        (a, b) if a == 0.0 => format!("{name}[r<={b}]"),
        (a, _) => format!("{name}[r>{a}]"),
    }
}

pub fn flow_options(cfg: &RunConfig) -> Result<FlowOptions> {
    let gs = &cfg.groundstate;
    let initial = match &gs.initial {
        FlowStart::Gaussian => InitialGuess::Gaussian { width: gs.width },
        FlowStart::Random => InitialGuess::Random,
        FlowStart::Snapshot(p) => InitialGuess::Supplied(load_field(p)?),
    };
    Ok(FlowOptions {
        tau: gs.tau,
        tol_energy: gs.tol_energy,
        tol_residual: gs.tol_residual,
        max_iter: gs.max_iter,
        initial,
        seed: cfg.seed,
        ..FlowOptions::default()
    })
}

fn ground_state(cfg: &RunConfig, op: &Hartree) -> Result<GroundStateResult> {
    let r = minimize_with(op, cfg.groundstate.lambda, &flow_options(cfg)?)?;
    log::info!(
        "ground state: lambda={} I={:e} residual={:e} status={:?} after {} iterations",
        r.lambda,
        r.i_lambda,
        r.residual,
        r.status,
        r.iterations
    );
    Ok(r)
}

fn converged_reference(cfg: &RunConfig, op: &Hartree) -> Result<OrbitReference> {
    let r = ground_state(cfg, op)?;
    if !r.converged {
        return Err(hartree_core::Error::NotConverged { mass: r.lambda }.into());
    }
    Ok(OrbitReference::new(r.u, op)?)
}

pub fn norms(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let full = RadialKernel::full(cfg.kernel);
    let label = kernel_label(&full);
    let mut records = vec![NormRecord {
        kernel: Some(label.clone()),
        field: None,
        p: 1.5,
        q: f64::INFINITY,
        value: weak_norm_analytic(&full, 1.5)?.value(),
        method: "analytic_level_set",
    }];
    let c2 = c2_estimate(&cfg.kernel)?;
    records.push(NormRecord {
        kernel: Some(kernel_label(&RadialKernel::core(cfg.kernel, c2.split.radius))),
        field: None,
        p: 1.5,
        q: f64::INFINITY,
        value: c2.split.core_weak,
        method: "core_at_best_split",
    });
    for t in default_trial_fields(&grid) {
        let name = format!("{}(s={})", profile_name(t.profile), t.scale);
        let profile = decreasing_rearrangement(&t.field);
        for &(p, q) in &cfg.norms.pairs {
            records.push(NormRecord {
                kernel: None,
                field: Some(name.clone()),
                p,
                q,
                value: lorentz_quasinorm(&profile, p, q)?,
                method: "discrete_rearrangement",
            });
        }
    }
    sink.json(
        "norms.json",
        &json!({ "kernel": cfg.kernel, "c2": c2, "records": records }),
    )?;
    Ok(())
}

pub fn kconst(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let trials = default_trial_fields(&grid);
    let kernels = default_trial_kernels();
    let fields: Vec<Field> = trials.iter().map(|t| t.field.clone()).collect();
    let k = k_lower_bound(&fields, &kernels)?;
    let c2 = c2_estimate(&cfg.kernel)?;
    let lambda_star_upper = lambda_star_from(c2.value, k.value);
    let rows: Vec<Vec<Cell>> = k
        .ratios
        .iter()
        .map(|r| {
            let t = &trials[r.trial];
            vec![
                Cell::U(r.trial),
                Cell::S(profile_name(t.profile).into()),
                Cell::F(t.scale),
                Cell::S(kernel_label(&kernels[r.kernel])),
                Cell::F(r.ratio),
            ]
        })
        .collect();
    sink.csv(&KCONST, &rows)?;
    let best = &trials[k.best.trial];
    sink.json(
        "kconst.json",
        &json!({
            "records": [NormRecord {
                kernel: Some("K".into()),
                field: None,
                p: 1.5,
                q: f64::INFINITY,
                value: k.value,
                method: "trial_lower_bound",
            }],
            "k_est": k.value,
            "witness": {
                "profile": best.profile,
                "scale": best.scale,
                "kernel": kernel_label(&kernels[k.best.kernel]),
            },
            "max_ratio": k.ratios.iter().map(|r| r.ratio).fold(0.0, f64::max),
            "kernel": cfg.kernel,
            "c2": c2.value,
            // Upper end of the coercivity window; infinite when C₂ = 0.
            "lambda_star_upper": if lambda_star_upper.is_finite() { json!(lambda_star_upper) } else { json!("inf") },
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct GroundStateSummary<'a> {
    lambda: f64,
    #[serde(rename = "I")]
    i_lambda: f64,
    mu: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    status: hartree_core::groundstate::FlowStatus,
    vanishing_energy: f64,
    binding_energy: f64,
    boundary_ratio: f64,
    tau: f64,
    energy: EnergyBreakdown,
    diagnostics: hartree_core::groundstate::MinimizerDiagnostics,
    symmetrization: Option<hartree_core::groundstate::SymmetrizationReport>,
    snapshot: &'a str,
}

pub fn groundstate(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let op = Hartree::new(cfg.kernel, &cfg.grid())?;
    let r = ground_state(cfg, &op)?;
    let attrs = cfg.kernel.attributes();
    let symmetrization = if attrs.radial_nondecreasing {
        Some(symmetrization_probe(&r.u, &op)?)
    } else {
        None
    };
    let rows: Vec<Vec<Cell>> = r
        .energy_trace
        .iter()
        .zip(&r.h1_trace)
        .enumerate()
        .map(|(i, (e, h))| vec![Cell::U(i), Cell::F(*e), Cell::F(*h)])
        .collect();
    sink.csv(&FLOW, &rows)?;
    sink.field("groundstate.hfld", &r.u)?;
    sink.json(
        "groundstate.json",
        &GroundStateSummary {
            lambda: r.lambda,
            i_lambda: r.i_lambda,
            mu: r.mu,
            residual: r.residual,
            iterations: r.iterations,
            converged: r.converged,
            status: r.status,
            vanishing_energy: r.vanishing_energy,
            binding_energy: r.binding_energy(),
            boundary_ratio: r.boundary_ratio,
            tau: r.tau,
            energy: op.energy(&r.u)?,
            diagnostics: minimizer_diagnostics(&r.u)?,
            symmetrization,
            snapshot: "groundstate.hfld",
        },
    )?;
    Ok(())
}

pub fn sweep_lambda(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let op = Hartree::new(cfg.kernel, &grid)?;
    let opts = flow_options(cfg)?;
    let results = i_of_lambda_with(&op, &cfg.groundstate.lambdas, &opts)?;
    let table: Vec<SweepRow> = results.iter().map(SweepRow::from).collect();
    let rows: Vec<Vec<Cell>> = table
        .iter()
        .map(|r| {
            vec![
                Cell::F(r.lambda),
                Cell::F(r.i_lambda),
                Cell::F(r.mu),
                Cell::F(r.residual),
                Cell::B(r.converged),
            ]
        })
        .collect();
    sink.csv(&SWEEP, &rows)?;
    let statuses: Vec<_> = results.iter().map(|r| r.status).collect();
    sink.json("sweep.json", &json!({ "kernel": cfg.kernel, "rows": table, "status": statuses }))?;
    if let Some(b) = &cfg.bisect {
        let bopts = BisectOptions {
            tol_neg: b.tol_neg,
            rel_width: b.rel_width,
            scale_box: b.scale_box,
        };
        let est = bisect_lambda_star(cfg.kernel, (b.lo, b.hi), &grid, &opts, &bopts)?;
        sink.json("lambda_star.json", &est)?;
    }
    Ok(())
}

pub fn bind_check(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let lambda = cfg.bind.lambda;
    let alphas: Vec<f64> = cfg.bind.ratios.iter().map(|r| r * lambda).collect();
    let report = binding_check(lambda, &alphas, cfg.kernel, &cfg.grid(), &flow_options(cfg)?)?;
    sink.json("bind.json", &report)?;
    Ok(())
}

#[derive(Serialize)]
struct SuiteSummary {
    n: usize,
    kernels: Vec<String>,
    riesz_max: Vec<f64>,
    polya_szego_max: f64,
    riesz_pass: bool,
    polya_szego_pass: bool,
}

impl From<&RearrangementSuite> for SuiteSummary {
    fn from(s: &RearrangementSuite) -> Self {
        Self {
            n: s.n,
            kernels: s.kernels.clone(),
            riesz_max: s.riesz_max.clone(),
            polya_szego_max: s.polya_szego_max,
            riesz_pass: s.riesz_pass,
            polya_szego_pass: s.polya_szego_pass,
        }
    }
}

pub fn rearrange_check(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let kernels = rearrangement_kernels();
    let re = &cfg.rearrange;
    let mut suites = vec![rearrangement_suite(&kernels, &grid, re.fields, cfg.seed, re.widths)?];
    if re.refine {
        let fine = Grid::new(2 * grid.n(), grid.length())?;
        suites.push(rearrangement_suite(&kernels, &fine, re.fields, cfg.seed, re.widths)?);
    }
    let mut rows = Vec::new();
    for s in &suites {
        for r in &s.rows {
            rows.push(vec![
                Cell::U(s.n),
                Cell::U(r.field),
                Cell::S(s.kernels[r.kernel].clone()),
                Cell::F(r.riesz_violation()),
                Cell::F(r.polya_szego_excess()),
            ]);
        }
    }
    sink.csv(&REARRANGE, &rows)?;
    let refinement = suites.get(1).map(|fine| {
        let coarse = &suites[0];
        let riesz: Vec<bool> = coarse
            .riesz_max
            .iter()
            .zip(&fine.riesz_max)
            .map(|(c, f)| violation_shrinks(*c, *f, 2.0))
            .collect();
        json!({
            "riesz_shrinks": riesz,
            "polya_szego_shrinks": violation_shrinks(coarse.polya_szego_max, fine.polya_szego_max, 2.0),
        })
    });
    let summaries: Vec<SuiteSummary> = suites.iter().map(SuiteSummary::from).collect();
    sink.json(
        "rearrange.json",
        &json!({
            "fields": re.fields,
            "widths": [re.widths.0, re.widths.1],
            "seed": cfg.seed,
            "riesz_slack": hartree_core::lorentz::RIESZ_SLACK,
            "polya_szego_slack": hartree_core::lorentz::POLYA_SZEGO_SLACK,
            "suites": summaries,
            "refinement": refinement,
        }),
    )?;
    Ok(())
}

fn trace_rows(trace: &hartree_core::dynamics::EvolutionTrace) -> Vec<Vec<Cell>> {
    trace
        .samples
        .iter()
        .map(|s| {
            vec![
                Cell::F(s.t),
                Cell::F(s.mass),
                Cell::F(s.energy),
                Cell::F(s.h1),
                Cell::from(s.orbit_dist),
            ]
        })
        .collect()
}

pub fn evolve_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let op = Hartree::new(cfg.kernel, &grid)?;
    let ev = &cfg.evolve;
    let (u0, reference) = match &ev.initial {
        EvolveStart::Groundstate => {
            let r = converged_reference(cfg, &op)?;
            (r.u.clone(), Some(r))
        }
        EvolveStart::Random => {
            let mut u = SmoothRandomField::generate(ev.seed, &grid).sample(&grid);
            u.scale_mut((cfg.groundstate.lambda / mass(&u)).sqrt());
            (u, None)
        }
        EvolveStart::Snapshot(p) => {
            let u = load_field(p)?;
            if *u.grid() != grid {
                return Err(hartree_core::Error::GridMismatch.into());
            }
            (u, None)
        }
    };
    let snapshot_dir = sink.dir().join("snapshots");
    if ev.snapshot_every.is_some() {
        std::fs::create_dir_all(&snapshot_dir).map_err(|e| CliError::io(&snapshot_dir, e))?;
    }
    let opts = EvolveOptions {
        t_final: ev.t_final,
        dt: ev.dt,
        sample_every: ev.sample_every,
        snapshot_every: ev.snapshot_every,
        snapshot_dir: ev.snapshot_every.map(|_| snapshot_dir),
        k_est: ev.k_est,
    };
    let trace = evolve(&u0, Some(&op), &opts, reference.as_ref())?;
    sink.adopt(&trace.snapshots);
    sink.csv(&TRACE, &trace_rows(&trace))?;
    let snapshots: Vec<String> = trace
        .snapshots
        .iter()
        .filter_map(|p| p.strip_prefix(sink.dir()).ok().map(|p| p.display().to_string()))
        .collect();
    sink.json(
        "evolve.json",
        &json!({
            "dt": trace.dt,
            "steps": trace.steps,
            "status": trace.status,
            "initial_mass": mass(&u0),
            "initial_h1": h1_seminorm_sq(&u0),
            "mass_drift": trace.mass_drift(),
            "energy_drift": trace.energy_drift(),
            "max_orbit_distance": trace.max_orbit_distance(),
            "gwp": trace.gwp,
            "ceiling_respected": trace.ceiling_respected(),
            "snapshots": snapshots,
        }),
    )?;
    Ok(())
}

pub fn soliton(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let op = Hartree::new(cfg.kernel, &grid)?;
    let reference = converged_reference(cfg, &op)?;
    let ev = &cfg.evolve;
    let dt = ev.dt.unwrap_or_else(|| default_dt(&grid));
    let report = soliton_check(&reference, &op, ev.t_final, dt, ev.sample_every)?;
    let rows: Vec<Vec<Cell>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                Cell::F(s.t),
                Cell::F(s.phase_defect),
                Cell::F(s.phase_defect_energy_rate),
                Cell::F(s.modulus_defect),
            ]
        })
        .collect();
    sink.csv(&SOLITON, &rows)?;
    sink.json(
        "soliton.json",
        &json!({
            "mu": report.mu,
            "energy": report.energy,
            "dt": report.dt,
            "max_phase_defect": report.max_phase_defect,
            "max_phase_defect_energy_rate": report.max_phase_defect_energy_rate,
            "max_modulus_defect": report.max_modulus_defect,
        }),
    )?;
    Ok(())
}

pub fn stability(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = cfg.grid();
    let op = Hartree::new(cfg.kernel, &grid)?;
    let reference = converged_reference(cfg, &op)?;
    let st = &cfg.stability;
    let report = stability_experiment(
        &reference,
        &op,
        &st.deltas,
        st.t_final,
        st.dt,
        st.seed,
        st.sample_every,
    )?;
    let rows: Vec<Vec<Cell>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::F(r.delta),
                Cell::F(r.initial_distance),
                Cell::F(r.sup_distance),
                Cell::B(r.pass),
            ]
        })
        .collect();
    sink.csv(&STABILITY, &rows)?;
    sink.json("stability.json", &report)?;
    Ok(())
}

/// Prints the energy breakdown of the configured field (or of the initial
/// guess of the flow) and records it with `μ` and the residual.
pub fn energy(cfg: &RunConfig, sink: &mut Sink) -> Result<EnergyBreakdown> {
    let grid = cfg.grid();
    let op = Hartree::new(cfg.kernel, &grid)?;
    let u = match &cfg.energy.field {
        Some(p) => load_field(p)?,
        None => initial_field(&grid, cfg.groundstate.lambda, &flow_options(cfg)?)?,
    };
    let breakdown = op.energy(&u)?;
    sink.json(
        "energy.json",
        &json!({
            "energy": breakdown,
            "mass": mass(&u),
            "h1": h1_seminorm_sq(&u),
            "mu": op.multiplier(&u)?,
            "residual": op.residual(&u)?,
            "max_abs": u.max_abs(),
        }),
    )?;
    Ok(breakdown)
}

