//! Mass-constrained minimization of the Hartree energy by a normalized,
//! kinetically preconditioned gradient flow, and the structural checks
//! built on it.

use num_complex::Complex64;
use serde::Serialize;

use crate::energy::{EnergyBreakdown, Evaluation, Hartree};
use crate::error::{Error, Result};
use crate::field::{mass, raw_inverse, Field};
use crate::grid::Grid;
use crate::kernels::RadialKernel;
use crate::random::SmoothRandomField;

#[derive(Clone, Debug)]
pub enum InitialGuess {
    /// Centred Gaussian `e^{−|x|²/(2σ₀²)}`; `None` means `σ₀ = L/8`.
    Gaussian { width: Option<f64> },
    /// Seeded smooth random field (see [`FlowOptions::seed`]).
    Random,
    Supplied(Field),
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    /// Step of the semi-implicit flow. Large values make the update the
    /// `(|k|² + s)⁻¹`-preconditioned gradient step.
    pub tau: f64,
    /// Relative energy change allowed over the last 10 iterations.
    pub tol_energy: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
    pub seed: u64,
    /// Energies below this are taken as the unbounded-below regime.
    pub divergence_floor: f64,
    /// Total number of step halvings before giving up.
    pub max_halvings: u32,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tau: 1e9,
            tol_energy: 1e-12,
            tol_residual: 1e-6,
            max_iter: 5000,
            initial: InitialGuess::Gaussian { width: None },
            seed: 0,
            divergence_floor: -1e6,
            max_halvings: 20,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidOption(format!("tau must be positive (got {})", self.tau)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidOption("max_iter must be at least 1".into()));
        }
        if !(self.tol_energy >= 0.0 && self.tol_residual >= 0.0) {
            return Err(Error::InvalidOption("tolerances must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_initial(mut self, initial: InitialGuess) -> Self {
        self.initial = initial;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIter,
    /// The iterate spread over the whole box; its energy is that of the
    /// uniform state, the finite-box image of `I(λ) = 0`.
    Vanishing,
    UnboundedBelowSuspected,
    StepCollapse,
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub u: Field,
    pub lambda: f64,
    pub i_lambda: f64,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: FlowStatus,
    /// Energy of the uniform state of the same mass in the box.
    pub vanishing_energy: f64,
    pub boundary_ratio: f64,
    pub tau: f64,
    pub energy_trace: Vec<f64>,
    pub h1_trace: Vec<f64>,
}

impl GroundStateResult {
    /// `I(λ)` measured from the uniform state of the same mass.
    pub fn binding_energy(&self) -> f64 {
        self.i_lambda - self.vanishing_energy
    }
}

/// Energy of the constant field of mass `λ` in the box.
pub fn vanishing_energy(op: &Hartree, lambda: f64) -> Result<f64> {
    let grid = *op.grid();
    let u = Field::constant(grid, Complex64::new((lambda / grid.volume()).sqrt(), 0.0));
    Ok(op.energy(&u)?.total)
}

pub fn initial_field(grid: &Grid, lambda: f64, opts: &FlowOptions) -> Result<Field> {
    let mut u = match &opts.initial {
        InitialGuess::Gaussian { width } => {
            let s = width.unwrap_or(grid.length() / 8.0);
            if !(s > 0.0) {
                return Err(Error::InvalidOption(format!("initial width must be positive (got {s})")));
            }
            Field::from_fn(*grid, |x, y, z| {
                Complex64::new((-(x * x + y * y + z * z) / (2.0 * s * s)).exp(), 0.0)
            })
        }
        InitialGuess::Random => SmoothRandomField::generate(opts.seed, grid).sample(grid),
        InitialGuess::Supplied(f) => {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            f.check_finite()?;
            f.clone()
        }
    };
    normalize(&mut u, lambda)?;
    Ok(u)
}

fn normalize(u: &mut Field, lambda: f64) -> Result<()> {
    let m = mass(u);
    if !(m > 0.0) {
        return Err(Error::ZeroField);
    }
    u.scale_mut((lambda / m).sqrt());
    Ok(())
}

/// One flow step from `u` with evaluation `ev`:
/// `û ← û − τ ĝ / (1 + τ(|k|² + s))` with `g = H[u]u − μu` and
/// `s = max(−μ, k_min²)`, then renormalization to mass `λ`.
///
/// Subtracting `μu` makes every solution of `H[u]u = μu` an exact fixed
/// point for any `τ`; the shift `s` keeps the low modes from overshooting
/// when `τ` is large.
fn flow_step(op: &Hartree, ev: &Evaluation, tau: f64, lambda: f64) -> Result<Field> {
    let k2 = op.k_squared();
    let mu = ev.multiplier;
    let kmin = op.grid().min_nonzero_wavenumber();
    let shift = (-mu).max(kmin * kmin);
    let next: Vec<Complex64> = ev
        .spectrum
        .iter()
        .zip(&ev.potential_term_spectrum)
        .zip(k2)
        .map(|((s, p), &k2)| {
            let g = s * (k2 - mu) + p;
            s - g * (tau / (1.0 + tau * (k2 + shift)))
        })
        .collect();
    let mut u = raw_inverse(*op.grid(), next);
    normalize(&mut u, lambda)?;
    Ok(u)
}

pub fn minimize(
    lambda: f64,
    kernel: impl Into<RadialKernel>,
    grid: &Grid,
    opts: &FlowOptions,
) -> Result<GroundStateResult> {
    let op = Hartree::new(kernel, grid)?;
    minimize_with(&op, lambda, opts)
}

pub fn minimize_with(op: &Hartree, lambda: f64, opts: &FlowOptions) -> Result<GroundStateResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidOption(format!("mass must be positive (got {lambda})")));
    }
    opts.validate()?;
    let mut u = initial_field(op.grid(), lambda, opts)?;
    let mut ev = op.evaluate(&u)?;
    let mut tau = opts.tau;
    let mut halvings = 0;
    let mut energy_trace = vec![ev.energy.total];
    let mut h1_trace = vec![ev.h1];
    let mut status = FlowStatus::MaxIter;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if ev.energy.total < opts.divergence_floor {
            status = FlowStatus::UnboundedBelowSuspected;
            break;
        }
        if converged(&energy_trace, ev.residual, opts) {
            status = FlowStatus::Converged;
            break;
        }
        let candidate = flow_step(op, &ev, tau, lambda)?;
        let next = op.evaluate(&candidate)?;
        let e0 = ev.energy.total;
        if !next.energy.total.is_finite() || next.energy.total > e0 + step_slack(&ev.energy) {
            if halvings == opts.max_halvings {
                status = FlowStatus::StepCollapse;
                break;
            }
            halvings += 1;
            tau *= 0.5;
            continue;
        }
        iterations += 1;
        u = candidate;
        ev = next;
        energy_trace.push(ev.energy.total);
        h1_trace.push(ev.h1);
    }
    if status == FlowStatus::MaxIter && converged(&energy_trace, ev.residual, opts) {
        status = FlowStatus::Converged;
    }
    let vanishing = vanishing_energy(op, lambda)?;
    let boundary_ratio = u.boundary_amplitude() / u.max_abs();
    if status != FlowStatus::UnboundedBelowSuspected && spread_out(boundary_ratio) {
        status = FlowStatus::Vanishing;
    }
    Ok(GroundStateResult {
        lambda,
        i_lambda: ev.energy.total,
        mu: ev.multiplier,
        residual: ev.residual,
        iterations,
        converged: status == FlowStatus::Converged,
        status,
        vanishing_energy: vanishing,
        boundary_ratio,
        tau,
        energy_trace,
        h1_trace,
        u,
    })
}

/// Allowed energy increase per accepted step. Relative to the size of the
/// two terms rather than to `|E|`, which can pass through zero.
pub fn step_slack(e: &EnergyBreakdown) -> f64 {
    1e-13 * (e.kinetic.abs() + e.interaction.abs())
}

/// A localized state decays by orders of magnitude before the box faces.
fn spread_out(boundary_ratio: f64) -> bool {
    boundary_ratio > 0.1
}

fn converged(trace: &[f64], residual: f64, opts: &FlowOptions) -> bool {
    if trace.len() < 11 || !(residual <= opts.tol_residual) {
        return false;
    }
    let tail = &trace[trace.len() - 11..];
    let e = tail[10].abs().max(f64::MIN_POSITIVE);
    tail.windows(2).all(|w| (w[1] - w[0]).abs() <= opts.tol_energy * e)
}

/// Grid for mass `lambda` when `grid` suits mass `reference`.
///
/// For a pure power `|x|^{−α}` with `α < 2` the minimizer at mass `λ` is
/// the one at mass `λ₀` dilated by `(λ₀/λ)^{1/(2−α)}`, so the box follows
/// that length. Other kernels keep the grid.
pub fn natural_grid(kernel: &RadialKernel, grid: &Grid, reference: f64, lambda: f64) -> Result<Grid> {
    match (kernel.spec.homogeneity(), kernel.inner == 0.0 && kernel.outer.is_infinite()) {
        (Some(alpha), true) if alpha < 2.0 => Grid::new(
            grid.n(),
            grid.length() * natural_dilation(alpha, reference, lambda),
        ),
        _ => Ok(*grid),
    }
}

fn natural_dilation(alpha: f64, reference: f64, lambda: f64) -> f64 {
    (reference / lambda).powf(1.0 / (2.0 - alpha))
}

/// Options rescaled along with [`natural_grid`].
fn natural_options(kernel: &RadialKernel, opts: &FlowOptions, reference: f64, lambda: f64) -> FlowOptions {
    let mut opts = opts.clone();
    if let (Some(alpha), InitialGuess::Gaussian { width: Some(w) }) = (kernel.spec.homogeneity(), &opts.initial) {
        if alpha < 2.0 && kernel.inner == 0.0 && kernel.outer.is_infinite() {
            opts.initial = InitialGuess::Gaussian {
                width: Some(w * natural_dilation(alpha, reference, lambda)),
            };
        }
    }
    opts
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    #[serde(rename = "I")]
    pub i_lambda: f64,
    pub mu: f64,
    pub residual: f64,
    pub converged: bool,
}

impl From<&GroundStateResult> for SweepRow {
    fn from(r: &GroundStateResult) -> Self {
        Self {
            lambda: r.lambda,
            i_lambda: r.i_lambda,
            mu: r.mu,
            residual: r.residual,
            converged: r.converged,
        }
    }
}

/// `I(λ)` along increasing masses on one grid. Each mass after the first
/// starts from the previous localized minimizer, rescaled to the new mass.
pub fn i_of_lambda(
    lambdas: &[f64],
    kernel: impl Into<RadialKernel>,
    grid: &Grid,
    opts: &FlowOptions,
) -> Result<Vec<GroundStateResult>> {
    let op = Hartree::new(kernel, grid)?;
    i_of_lambda_with(&op, lambdas, opts)
}

pub fn i_of_lambda_with(op: &Hartree, lambdas: &[f64], opts: &FlowOptions) -> Result<Vec<GroundStateResult>> {
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidOption("masses must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidOption("masses must be strictly increasing".into()));
    }
    let mut out: Vec<GroundStateResult> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let run = match out.last() {
            Some(prev) if prev.status == FlowStatus::Converged => {
                opts.clone().with_initial(InitialGuess::Supplied(prev.u.clone()))
            }
            _ => opts.clone(),
        };
        out.push(minimize_with(op, lambda, &run)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub lambda: f64,
    pub box_length: f64,
    pub i_lambda: f64,
    pub h1: f64,
    pub boundary_ratio: f64,
    pub status: FlowStatus,
    /// `I(λ) < −tol_neg·‖u‖²_{Ḣ¹}` on a localized state.
    pub negative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaStarEstimate {
    /// Midpoint of the final bracket.
    pub lambda_star: f64,
    pub lower: f64,
    pub upper: f64,
    pub tol_neg: f64,
    pub probes: Vec<Probe>,
}

#[derive(Clone, Debug)]
pub struct BisectOptions {
    pub tol_neg: f64,
    /// Stop when `(upper − lower) ≤ rel_width·upper`.
    pub rel_width: f64,
    /// Rescale the box for pure powers with `λ_hi` as the reference mass.
    pub scale_box: bool,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            tol_neg: 1e-6,
            rel_width: 1e-2,
            scale_box: true,
        }
    }
}

/// Negativity indicator at one mass.
///
/// A spread state carries the small negative energy of the uniform box
/// state, which is a finite-box artifact of `I = 0`, so only localized
/// states count. The threshold is relative to the kinetic energy so that it
/// survives the `λ^{(4−α)/(2−α)}` scaling of tiny masses.
pub fn negativity_probe(op: &Hartree, lambda: f64, opts: &FlowOptions, tol_neg: f64) -> Result<Probe> {
    let r = minimize_with(op, lambda, opts)?;
    let h1 = r.h1_trace.last().copied().unwrap_or(0.0);
    let localized = r.status != FlowStatus::Vanishing;
    Ok(Probe {
        lambda,
        box_length: op.grid().length(),
        i_lambda: r.i_lambda,
        h1,
        boundary_ratio: r.boundary_ratio,
        status: r.status,
        negative: localized && r.i_lambda < -tol_neg * h1,
    })
}

/// Bisection for `λ_* = inf{λ : I(λ) < 0}` on `bracket`.
///
/// If the indicator already fires at the lower end, the estimate is
/// `λ_* ≤ λ_lo` and no bisection is done.
pub fn bisect_lambda_star(
    kernel: impl Into<RadialKernel>,
    bracket: (f64, f64),
    grid: &Grid,
    opts: &FlowOptions,
    bopts: &BisectOptions,
) -> Result<LambdaStarEstimate> {
    let kernel = kernel.into();
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidBracket(format!("need 0 < lo < hi (got {lo}, {hi})")));
    }
    let mut probes = Vec::new();
    let mut probe = |lambda: f64| -> Result<bool> {
        let (g, o) = if bopts.scale_box {
            (
                natural_grid(&kernel, grid, hi, lambda)?,
                natural_options(&kernel, opts, hi, lambda),
            )
        } else {
            (*grid, opts.clone())
        };
        let op = Hartree::new(kernel, &g)?;
        let p = negativity_probe(&op, lambda, &o, bopts.tol_neg)?;
        let neg = p.negative;
        log::debug!("probe lambda={lambda} I={} status={:?}", p.i_lambda, p.status);
        probes.push(p);
        Ok(neg)
    };
    if probe(lo)? {
        return Ok(LambdaStarEstimate {
            lambda_star: lo,
            lower: 0.0,
            upper: lo,
            tol_neg: bopts.tol_neg,
            probes,
        });
    }
    if !probe(hi)? {
        return Err(Error::InvalidBracket(format!(
            "I({hi}) is not below -tol_neg on a localized state"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > bopts.rel_width * b {
        let mid = 0.5 * (a + b);
        if probe(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(LambdaStarEstimate {
        lambda_star: 0.5 * (a + b),
        lower: a,
        upper: b,
        tol_neg: bopts.tol_neg,
        probes,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BindingRow {
    pub alpha: f64,
    pub i_alpha: f64,
    pub i_rest: f64,
    /// `I(α) + I(λ−α) − I(λ)`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BindingReport {
    pub lambda: f64,
    pub i_lambda: f64,
    pub tolerance: f64,
    pub rows: Vec<BindingRow>,
    pub pass: bool,
}

pub const BINDING_TOLERANCE: f64 = 1e-5;

/// Checks `I(λ) < I(α) + I(λ−α)` for each split `α`. Sub-masses use
/// [`natural_grid`] with `λ` as the reference.
pub fn binding_check(
    lambda: f64,
    alphas: &[f64],
    kernel: impl Into<RadialKernel>,
    grid: &Grid,
    opts: &FlowOptions,
) -> Result<BindingReport> {
    let kernel = kernel.into();
    for &a in alphas {
        if !(a >= 0.05 * lambda && lambda - a >= 0.05 * lambda) {
            return Err(Error::InvalidOption(format!(
                "split {a} must satisfy 0.05·λ ≤ α ≤ 0.95·λ"
            )));
        }
    }
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let mut solve = |m: f64| -> Result<f64> {
        if let Some((_, e)) = cache.iter().find(|(k, _)| (k - m).abs() <= 1e-12 * m) {
            return Ok(*e);
        }
        let g = natural_grid(&kernel, grid, lambda, m)?;
        let r = minimize(m, kernel, &g, &natural_options(&kernel, opts, lambda, m))?;
        if !r.converged {
            return Err(Error::NotConverged { mass: m });
        }
        cache.push((m, r.i_lambda));
        Ok(r.i_lambda)
    };
    let i_lambda = solve(lambda)?;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let i_alpha = solve(alpha)?;
        let i_rest = solve(lambda - alpha)?;
        let margin = i_alpha + i_rest - i_lambda;
        rows.push(BindingRow {
            alpha,
            i_alpha,
            i_rest,
            margin,
            pass: margin > BINDING_TOLERANCE,
        });
    }
    Ok(BindingReport {
        lambda,
        i_lambda,
        tolerance: BINDING_TOLERANCE,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizerDiagnostics {
    /// Argument of `Σ u|u|`.
    pub phase: f64,
    /// `min Re(e^{−iθ}u)`.
    pub min_real_part: f64,
    /// `max |Im(e^{−iθ}u)|`.
    pub max_imag_part: f64,
    pub max_abs: f64,
    pub center: [f64; 3],
    /// Mean `|u|` in shells of width `h` about the centre of mass.
    pub radial_profile: Vec<f64>,
    /// Largest increase between adjacent shells.
    pub monotonicity_defect: f64,
    /// `Σ_{|k|>k_max/2}|û|² / Σ|û|²`.
    pub spectral_tail: f64,
    pub boundary_ratio: f64,
}

pub fn minimizer_diagnostics(u: &Field) -> Result<MinimizerDiagnostics> {
    let grid = *u.grid();
    let m = mass(u);
    if !(m > 0.0) {
        return Err(Error::ZeroField);
    }
    let weighted: Complex64 = u.values().iter().map(|v| v * v.norm()).sum();
    let phase = weighted.arg();
    let rot = Complex64::from_polar(1.0, -phase);
    let (mut min_re, mut max_im) = (f64::INFINITY, 0.0f64);
    for v in u.values() {
        let w = v * rot;
        min_re = min_re.min(w.re);
        max_im = max_im.max(w.im.abs());
    }
    let h3 = grid.cell_volume();
    let mut center = [0.0; 3];
    for (idx, v) in u.values().iter().enumerate() {
        let p = grid.point(idx);
        for d in 0..3 {
            center[d] += p[d] * v.norm_sqr() * h3 / m;
        }
    }
    let h = grid.spacing();
    let shells = (0.5 * grid.length() / h) as usize;
    let mut sums = vec![(0.0, 0usize); shells];
    for (idx, v) in u.values().iter().enumerate() {
        let p = grid.point(idx);
        let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + (p[2] - center[2]).powi(2)).sqrt();
        let b = (r / h) as usize;
        if b < shells {
            sums[b].0 += v.norm();
            sums[b].1 += 1;
        }
    }
    let radial_profile: Vec<f64> = sums
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| s / *c as f64)
        .collect();
    let monotonicity_defect = radial_profile
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max);
    let spec = crate::field::forward(u);
    let kmax = grid.max_wavenumber();
    let (mut tail, mut total) = (0.0, 0.0);
    for (idx, c) in spec.coefficients().iter().enumerate() {
        let [i, j, k] = grid.unravel(idx);
        let k2 = grid.wavenumber(i).powi(2) + grid.wavenumber(j).powi(2) + grid.wavenumber(k).powi(2);
        total += c.norm_sqr();
        if k2 > 0.25 * kmax * kmax {
            tail += c.norm_sqr();
        }
    }
    let max_abs = u.max_abs();
    Ok(MinimizerDiagnostics {
        phase,
        min_real_part: min_re,
        max_imag_part: max_im,
        max_abs,
        center,
        radial_profile,
        monotonicity_defect,
        spectral_tail: tail / total,
        boundary_ratio: u.boundary_amplitude() / max_abs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizationReport {
    pub before: EnergyBreakdown,
    pub after: EnergyBreakdown,
    /// `E(u^S) − E(u)`.
    pub delta: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Relative slack on `E(u^S) ≤ E(u)`.
pub const SYMMETRIZATION_SLACK: f64 = 1e-3;

/// Compares `E(u)` with `E(u^S)`. The slack is relative to
/// `½‖u‖²_{Ḣ¹} + ¼|∫(w∗|u|²)|u|²|`.
pub fn symmetrization_probe(u: &Field, op: &Hartree) -> Result<SymmetrizationReport> {
    let k = op.kernel();
    if !(k.spec.attributes().radial_nondecreasing && k.inner == 0.0) {
        return Err(Error::InvalidKernel(format!(
            "{} is not radially monotone on its support",
            k.spec.name()
        )));
    }
    let us = crate::lorentz::symmetric_decreasing_rearrangement(u);
    let before = op.energy(u)?;
    let after = op.energy(&us)?;
    let delta = after.total - before.total;
    let slack = SYMMETRIZATION_SLACK * (before.kinetic.abs() + before.interaction.abs());
    Ok(SymmetrizationReport {
        before,
        after,
        delta,
        slack,
        pass: delta <= slack,
    })
}
