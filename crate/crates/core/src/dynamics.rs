//! Split-step integration of `i∂ₜu = −Δu + (w∗|u|²)u`, conservation and
//! a-priori bound diagnostics, soliton and orbital stability checks.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::energy::{EnergyBreakdown, Hartree};
use crate::error::{Error, Result};
use crate::field::{h1_norm_sq, mass, raw_forward, raw_inverse, Field};
use crate::grid::Grid;
use crate::io::save_field;
use crate::kernels::RadialKernel;
use crate::lorentz::c2_estimate;
use crate::random::SmoothRandomField;

/// Largest step keeping the kinetic phase `|k|²dt` below `π/4` on every
/// grid mode.
pub fn default_dt(grid: &Grid) -> f64 {
    let k2max = grid.k_squared().into_iter().fold(0.0, f64::max);
    std::f64::consts::FRAC_PI_4 / k2max
}

/// Strang splitting with step `dt`: half potential phase, full kinetic
/// phase, half potential phase. Without an operator the flow is the free
/// Schrödinger flow.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: Grid,
    op: Option<Hartree>,
    dt: f64,
    /// `e^{−i|k|²dt}/N³`
    kinetic: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: &Grid, op: Option<Hartree>, dt: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidOption(format!("dt must be finite and nonzero (got {dt})")));
        }
        if let Some(op) = &op {
            if op.grid() != grid {
                return Err(Error::GridMismatch);
            }
        }
        let scale = 1.0 / grid.len() as f64;
        let kinetic = grid
            .k_squared()
            .into_iter()
            .map(|k2| Complex64::from_polar(scale, -k2 * dt))
            .collect();
        Ok(Self {
            grid: *grid,
            op,
            dt,
            kinetic,
        })
    }

    pub fn hartree(op: &Hartree, dt: f64) -> Result<Self> {
        Self::new(op.grid(), Some(op.clone()), dt)
    }

    pub fn free(grid: &Grid, dt: f64) -> Result<Self> {
        Self::new(grid, None, dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `w∗|u|²`, zero for the free flow.
    pub fn potential(&self, u: &Field) -> Result<Vec<f64>> {
        match &self.op {
            Some(op) => Ok(op.potential(u)?.into_values()),
            None => Ok(vec![0.0; self.grid.len()]),
        }
    }

    fn potential_phase(&self, u: &mut Field, v: &[f64], dt: f64) {
        for (a, v) in u.values_mut().iter_mut().zip(v) {
            *a *= Complex64::from_polar(1.0, -v * dt);
        }
    }

    fn kinetic_phase(&self, u: &Field) -> Field {
        let mut spec = raw_forward(u);
        for (s, p) in spec.iter_mut().zip(&self.kinetic) {
            *s *= p;
        }
        // raw_inverse divides by N³ again
        let mut out = raw_inverse(self.grid, spec);
        out.scale_mut(self.grid.len() as f64);
        out
    }

    /// One step. The potential phase leaves `|u|` unchanged, so the
    /// potential `v` of the input is also that of the output's first half.
    pub fn step_with(&self, u: &Field, v: &[f64]) -> Result<(Field, Vec<f64>)> {
        let mut w = u.clone();
        self.potential_phase(&mut w, v, 0.5 * self.dt);
        let mut w = self.kinetic_phase(&w);
        let v = self.potential(&w)?;
        self.potential_phase(&mut w, &v, 0.5 * self.dt);
        Ok((w, v))
    }

    pub fn step(&self, u: &Field) -> Result<Field> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let v = self.potential(u)?;
        Ok(self.step_with(u, &v)?.0)
    }

    /// Energy from a known potential: `½‖∇u‖² + ¼∫v|u|²`.
    fn energy_with(&self, u: &Field, v: &[f64]) -> EnergyBreakdown {
        let h1 = crate::field::h1_seminorm_sq(u);
        let h3 = self.grid.cell_volume();
        let vals = u.values();
        let int = h3 * crate::field::pairwise_map_sum(vals.len(), &|i| v[i] * vals[i].norm_sqr());
        EnergyBreakdown {
            kinetic: 0.5 * h1,
            interaction: 0.25 * int,
            total: 0.5 * h1 + 0.25 * int,
        }
    }
}

pub fn strang_step(u: &Field, op: &Hartree, dt: f64) -> Result<Field> {
    Propagator::hartree(op, dt)?.step(u)
}

/// Bounds behind global existence: with the split `w = w₁ + w₂` from
/// [`c2_estimate`], `Kλ‖w₂‖_{L^{3/2,∞}} < 2` gives
/// `‖u(t)‖²_{Ḣ¹} ≤ (4|E(u₀)| + λ²‖w₁‖_∞)/(2 − Kλ‖w₂‖_{L^{3/2,∞}})`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GwpBudget {
    pub k_est: f64,
    pub lambda: f64,
    pub split_radius: f64,
    pub tail_sup: f64,
    pub core_weak: f64,
    /// `K_est λ ‖w₂‖_{L^{3/2,∞}}`
    pub smallness: f64,
    pub holds: bool,
    pub ceiling: Option<f64>,
}

impl GwpBudget {
    pub fn new(kernel: &RadialKernel, lambda: f64, energy0: f64, k_est: f64) -> Result<Self> {
        let split = c2_estimate(&kernel.spec)?.split;
        let smallness = k_est * lambda * split.core_weak;
        let holds = smallness < 2.0;
        let ceiling = holds.then(|| (4.0 * energy0.abs() + lambda * lambda * split.tail_sup) / (2.0 - smallness));
        Ok(Self {
            k_est,
            lambda,
            split_radius: split.radius,
            tail_sup: split.tail_sup,
            core_weak: split.core_weak,
            smallness,
            holds,
            ceiling,
        })
    }
}

/// Ground state `u*` with its mass, multiplier and energy.
#[derive(Clone, Debug)]
pub struct OrbitReference {
    pub u: Field,
    pub lambda: f64,
    pub mu: f64,
    pub energy: f64,
    pub residual: f64,
    h1_norm_sq: f64,
    spectrum: Vec<Complex64>,
}

impl OrbitReference {
    pub fn new(u: Field, op: &Hartree) -> Result<Self> {
        let ev = op.evaluate(&u)?;
        if !(ev.residual <= 1e-6) {
            return Err(Error::NotConverged { mass: ev.mass });
        }
        Ok(Self {
            lambda: ev.mass,
            mu: ev.multiplier,
            energy: ev.energy.total,
            residual: ev.residual,
            h1_norm_sq: h1_norm_sq(&u),
            spectrum: raw_forward(&u),
            u,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitDistance {
    /// `‖v − e^{iθ}u*(·−a)‖_{H¹}` at the best grid shift and phase.
    pub distance: f64,
    pub phase: f64,
    /// `a` in grid cells.
    pub shift: [i64; 3],
}

/// Upper bound for `inf ‖v − e^{iθ}u*(·−a)‖_{H¹}` over phases and grid
/// shifts.
///
/// The `H¹` pairing `⟨u*(·−a), v⟩_{H¹}` is computed for every periodic grid
/// shift at once as a weighted cross-correlation; the best phase for a
/// given shift is its argument. Shifts whose correlation-based distance is
/// within round-off of the best are then evaluated directly.
pub fn orbit_distance(v: &Field, reference: &OrbitReference) -> Result<OrbitDistance> {
    let grid = *v.grid();
    if grid != *reference.u.grid() {
        return Err(Error::GridMismatch);
    }
    let k2 = grid.k_squared();
    let vs = raw_forward(v);
    let mut corr: Vec<Complex64> = reference
        .spectrum
        .iter()
        .zip(&vs)
        .zip(&k2)
        .map(|((u, v), k2)| u.conj() * v * (1.0 + k2))
        .collect();
    grid.fft().inverse(&mut corr);
    let scale = grid.cell_volume() / grid.len() as f64;
    let norms = h1_norm_sq(v) + reference.h1_norm_sq;
    let best = corr.iter().map(|c| c.norm()).fold(0.0, f64::max) * scale;
    let n = grid.n() as i64;
    let signed = |i: usize| {
        let i = i as i64;
        if i > n / 2 {
            i - n
        } else {
            i
        }
    };
    let mut result: Option<OrbitDistance> = None;
    for (idx, c) in corr.iter().enumerate() {
        if (best - c.norm() * scale) * 2.0 > 1e-12 * norms {
            continue;
        }
        let [x, y, z] = grid.unravel(idx);
        let shift = [signed(x), signed(y), signed(z)];
        let phase = c.arg();
        let candidate = reference.u.circular_shift(shift).phase_rotated(phase);
        let distance = h1_norm_sq(&v.sub(&candidate)?).sqrt();
        if result.map_or(true, |r| distance < r.distance) {
            result = Some(OrbitDistance { distance, phase, shift });
        }
    }
    Ok(result.expect("the maximum is attained"))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub orbit_dist: Option<f64>,
    /// `‖u‖²_{Ḣ¹}` below the a-priori ceiling, when one applies.
    pub within_ceiling: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TraceStatus {
    Completed,
    /// A non-finite value appeared after `time`; samples stop at the last
    /// finite state.
    BlowupSuspected { time: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionTrace {
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<PathBuf>,
    pub gwp: Option<GwpBudget>,
    pub status: TraceStatus,
}

impl EvolutionTrace {
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.samples[0].mass;
        self.samples.iter().map(|s| (s.mass - m0).abs() / m0).fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.samples.iter().map(|s| (s.energy - e0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn max_orbit_distance(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.orbit_dist).reduce(f64::max)
    }

    pub fn ceiling_respected(&self) -> Option<bool> {
        self.gwp?.ceiling?;
        Some(self.samples.iter().all(|s| s.within_ceiling != Some(false)))
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub t_final: f64,
    /// `None` uses [`default_dt`]. The step is shortened so that it divides
    /// `t_final`.
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub snapshot_every: Option<usize>,
    pub snapshot_dir: Option<PathBuf>,
    /// Lower bound for `K`; enables the a-priori ceiling.
    pub k_est: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: None,
            sample_every: 10,
            snapshot_every: None,
            snapshot_dir: None,
            k_est: None,
        }
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidOption(format!("T must be non-negative (got {t_final})")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidOption(format!("dt must be positive (got {dt})")));
    }
    if t_final == 0.0 {
        return Ok((0, dt));
    }
    let steps = (t_final / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

fn finite(u: &Field) -> bool {
    u.values().iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Evolves `u0` to `t_final`, recording mass, energy, `‖u‖²_{Ḣ¹}` and, with a
/// reference, the orbit distance every `sample_every` steps and at the end.
pub fn evolve(
    u0: &Field,
    op: Option<&Hartree>,
    opts: &EvolveOptions,
    reference: Option<&OrbitReference>,
) -> Result<EvolutionTrace> {
    let grid = *u0.grid();
    u0.check_finite()?;
    let (steps, dt) = step_count(opts.t_final, opts.dt.unwrap_or_else(|| default_dt(&grid)))?;
    if opts.sample_every == 0 {
        return Err(Error::InvalidOption("sample_every must be at least 1".into()));
    }
    let prop = Propagator::new(&grid, op.cloned(), dt)?;
    let mut u = u0.clone();
    let mut v = prop.potential(&u)?;
    let e0 = prop.energy_with(&u, &v).total;
    let lambda = mass(u0);
    let gwp = match (op, opts.k_est) {
        (Some(op), Some(k)) => Some(GwpBudget::new(op.kernel(), lambda, e0, k)?),
        _ => None,
    };
    let ceiling = gwp.and_then(|g| g.ceiling);
    let record = |u: &Field, v: &[f64], t: f64| -> Result<Sample> {
        let e = prop.energy_with(u, v);
        let h1 = 2.0 * e.kinetic;
        Ok(Sample {
            t,
            mass: mass(u),
            energy: e.total,
            h1,
            orbit_dist: reference.map(|r| orbit_distance(u, r)).transpose()?.map(|d| d.distance),
            within_ceiling: ceiling.map(|c| h1 <= c),
        })
    };
    let mut samples = vec![record(&u, &v, 0.0)?];
    let mut snapshots = Vec::new();
    let snap = |u: &Field, step: usize, out: &mut Vec<PathBuf>| -> Result<()> {
        if let (Some(every), Some(dir)) = (opts.snapshot_every, &opts.snapshot_dir) {
            if every > 0 && step % every == 0 {
                let path = snapshot_path(dir, step);
                save_field(u, &path)?;
                out.push(path);
            }
        }
        Ok(())
    };
    snap(&u, 0, &mut snapshots)?;
    let mut status = TraceStatus::Completed;
    for step in 1..=steps {
        let (next, nv) = prop.step_with(&u, &v)?;
        let t = step as f64 * dt;
        if !finite(&next) || nv.iter().any(|x| !x.is_finite()) {
            status = TraceStatus::BlowupSuspected {
                time: (step - 1) as f64 * dt,
            };
            break;
        }
        u = next;
        v = nv;
        if step % opts.sample_every == 0 || step == steps {
            let s = record(&u, &v, t)?;
            if !(s.energy.is_finite() && s.h1.is_finite()) {
                status = TraceStatus::BlowupSuspected { time: samples.last().map_or(0.0, |s| s.t) };
                break;
            }
            samples.push(s);
        }
        snap(&u, step, &mut snapshots)?;
    }
    Ok(EvolutionTrace {
        dt,
        steps,
        samples,
        snapshots,
        gwp,
        status,
    })
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:08}.hfld"))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolitonSample {
    pub t: f64,
    /// `‖u(t) − e^{−iμt}u*‖/‖u*‖`
    pub phase_defect: f64,
    /// Same with the phase rate `I(λ)` in place of `μ`.
    pub phase_defect_energy_rate: f64,
    /// `‖|u(t)| − |u*|‖/‖u*‖`
    pub modulus_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolitonReport {
    pub mu: f64,
    pub energy: f64,
    pub dt: f64,
    pub samples: Vec<SolitonSample>,
    pub max_phase_defect: f64,
    pub max_phase_defect_energy_rate: f64,
    pub max_modulus_defect: f64,
}

/// Evolves the reference and compares with `e^{−iμt}u*`.
pub fn soliton_check(
    reference: &OrbitReference,
    op: &Hartree,
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<SolitonReport> {
    let (steps, dt) = step_count(t_final, dt)?;
    let sample_every = sample_every.max(1);
    let prop = Propagator::hartree(op, dt)?;
    let norm = reference.lambda.sqrt();
    let h3 = op.grid().cell_volume();
    let ustar = reference.u.values();
    let defects = |u: &Field, t: f64| {
        let rot_mu = Complex64::from_polar(1.0, -reference.mu * t);
        let rot_e = Complex64::from_polar(1.0, -reference.energy * t);
        let vals = u.values();
        let sum = |f: &dyn Fn(usize) -> f64| (h3 * crate::field::pairwise_map_sum(vals.len(), &f)).sqrt() / norm;
        SolitonSample {
            t,
            phase_defect: sum(&|i| (vals[i] - rot_mu * ustar[i]).norm_sqr()),
            phase_defect_energy_rate: sum(&|i| (vals[i] - rot_e * ustar[i]).norm_sqr()),
            modulus_defect: sum(&|i| (vals[i].norm() - ustar[i].norm()).powi(2)),
        }
    };
    let mut u = reference.u.clone();
    let mut v = prop.potential(&u)?;
    let mut samples = vec![defects(&u, 0.0)];
    for step in 1..=steps {
        let (next, nv) = prop.step_with(&u, &v)?;
        if !finite(&next) {
            return Err(Error::BlowupSuspected { time: step as f64 * dt });
        }
        u = next;
        v = nv;
        if step % sample_every == 0 || step == steps {
            samples.push(defects(&u, step as f64 * dt));
        }
    }
    let max = |f: fn(&SolitonSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(SolitonReport {
        mu: reference.mu,
        energy: reference.energy,
        dt,
        max_phase_defect: max(|s| s.phase_defect),
        max_phase_defect_energy_rate: max(|s| s.phase_defect_energy_rate),
        max_modulus_defect: max(|s| s.modulus_defect),
        samples,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StabilityRow {
    pub delta: f64,
    pub initial_distance: f64,
    pub sup_distance: f64,
    /// Only judged for `δ > 0`.
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    pub factor: f64,
    pub rows: Vec<StabilityRow>,
    pub pass: bool,
}

/// Allowed growth of the orbit distance over the run.
pub const STABILITY_FACTOR: f64 = 10.0;

/// Unit-`H¹` smooth random field used to perturb the reference.
pub fn perturbation(grid: &Grid, seed: u64) -> Field {
    let mut r = SmoothRandomField::generate(seed, grid).sample(grid);
    r.scale_mut(1.0 / h1_norm_sq(&r).sqrt());
    r
}

/// For each `δ`, evolves `u₀ = u* + δr` rescaled to mass `λ` and compares the
/// largest orbit distance with the initial one.
pub fn stability_experiment(
    reference: &OrbitReference,
    op: &Hartree,
    deltas: &[f64],
    t_final: f64,
    dt: f64,
    seed: u64,
    sample_every: usize,
) -> Result<StabilityReport> {
    let r = perturbation(op.grid(), seed);
    let opts = EvolveOptions {
        t_final,
        dt: Some(dt),
        sample_every,
        ..Default::default()
    };
    let mut rows = Vec::with_capacity(deltas.len());
    let mut used_dt = dt;
    for &delta in deltas {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidOption(format!("delta must be non-negative (got {delta})")));
        }
        let mut u0 = reference.u.axpy(Complex64::new(delta, 0.0), &r)?;
        u0.scale_mut((reference.lambda / mass(&u0)).sqrt());
        let trace = evolve(&u0, Some(op), &opts, Some(reference))?;
        if let TraceStatus::BlowupSuspected { time } = trace.status {
            return Err(Error::BlowupSuspected { time });
        }
        used_dt = trace.dt;
        let initial_distance = trace.samples[0].orbit_dist.unwrap_or(0.0);
        let sup_distance = trace.max_orbit_distance().unwrap_or(0.0);
        rows.push(StabilityRow {
            delta,
            initial_distance,
            sup_distance,
            pass: delta == 0.0 || sup_distance <= STABILITY_FACTOR * initial_distance,
        });
    }
    Ok(StabilityReport {
        t_final,
        dt: used_dt,
        seed,
        factor: STABILITY_FACTOR,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}
