//! Decreasing rearrangements, Lorentz quasi-norms, the kernel splitting
//! constant `C₂`, trial lower bounds for the interaction constant `K` and
//! the symmetric decreasing rearrangement on the grid.
//!
//! Quasi-norms use the rearrangement form
//! `‖f‖_{p,q} = (∫₀^∞ (t^{1/p} f*(t))^q dt/t)^{1/q}` and
//! `‖f‖_{p,∞} = sup_t t^{1/p} f*(t)`, so `‖f‖_{p,p} = ‖f‖_p`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::energy::Hartree;
use crate::error::{Error, Result};
use crate::field::{h1_seminorm_sq, mass, Field};
use crate::grid::Grid;
use crate::kernels::{KernelSpec, RadialKernel};

const BALL: f64 = 4.0 * PI / 3.0;

/// Discrete decreasing rearrangement: `f*(t) = f*_i` for
/// `t ∈ ((i−1)h³, i h³]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RearrangementProfile {
    values: Vec<f64>,
    cell_volume: f64,
}

impl RearrangementProfile {
    pub fn from_magnitudes(mut values: Vec<f64>, cell_volume: f64) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values, cell_volume }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// `f*(t)`.
    pub fn at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let i = (t / self.cell_volume).ceil() as usize;
        self.values.get(i.saturating_sub(1)).copied().unwrap_or(0.0)
    }
}

pub fn decreasing_rearrangement(u: &Field) -> RearrangementProfile {
    RearrangementProfile::from_magnitudes(
        u.values().iter().map(|v| v.norm()).collect(),
        u.grid().cell_volume(),
    )
}

/// `‖f‖_{L^{p,q}}` of a profile; `q = ∞` gives the weak norm.
///
/// For finite `q` the step function `f*` is integrated exactly:
/// `Σ f_i^q (p/q)(t_i^{q/p} − t_{i−1}^{q/p})`.
pub fn lorentz_quasinorm(profile: &RearrangementProfile, p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadLorentzExponent(p));
    }
    if !(q >= 1.0) {
        return Err(Error::BadExponent(q));
    }
    let h3 = profile.cell_volume;
    if q.is_infinite() {
        return Ok(profile
            .values
            .iter()
            .enumerate()
            .map(|(i, f)| f * ((i + 1) as f64 * h3).powf(1.0 / p))
            .fold(0.0, f64::max));
    }
    let e = q / p;
    let mut terms = Vec::with_capacity(profile.values.len());
    let mut prev = 0.0;
    for (i, f) in profile.values.iter().enumerate() {
        if *f == 0.0 {
            break;
        }
        let next = ((i + 1) as f64 * h3).powf(e);
        terms.push(f.powf(q) * (next - prev));
        prev = next;
    }
    Ok((crate::field::pairwise_sum(&terms) / e).powf(1.0 / q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakNorm {
    Finite(f64),
    Infinite,
}

impl WeakNorm {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `sup_t t |{|w| > t}|^{1/p}` for a radial kernel with `|W|` non-increasing.
///
/// On the shell `a < r ≤ b` the level set of height `|W(r)|` is the shell
/// `a < |x| < r`, so the sup equals `sup_r |W(r)| ((4π/3)(r³ − a³))^{1/p}`.
/// Pure powers use the closed form; other kernels are scanned on a
/// logarithmic radius grid, refined by golden section, and compared with
/// the analytic limits at both ends.
pub fn weak_norm_analytic(kernel: &RadialKernel, p: f64) -> Result<WeakNorm> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let spec = kernel.spec;
    let a = kernel.inner.max(0.0);
    let b = kernel.outer.min(spec.support_radius());
    if b <= a {
        return Ok(WeakNorm::Finite(0.0));
    }
    let e = 3.0 / p;
    let alpha0 = spec.origin_exponent();
    let g = spec.origin_strength();
    // r → 0 behaviour: |W| r^{e} ~ g r^{e − α₀}
    let origin_limit = if a > 0.0 {
        0.0
    } else if alpha0 > e + 1e-12 {
        return Ok(WeakNorm::Infinite);
    } else if (alpha0 - e).abs() <= 1e-12 {
        g * BALL.powf(1.0 / p)
    } else {
        0.0
    };
    // r → ∞ behaviour, only power laws fail to decay
    let far_limit = if b.is_finite() {
        0.0
    } else {
        match spec {
            KernelSpec::PowerLaw { alpha, g } => {
                if e > alpha + 1e-12 {
                    return Ok(WeakNorm::Infinite);
                } else if (e - alpha).abs() <= 1e-12 {
                    g * BALL.powf(1.0 / p)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    };
    let f = |r: f64| spec.profile(r).abs() * (BALL * (r.powi(3) - a.powi(3))).powf(1.0 / p);
    if let KernelSpec::PowerLaw { alpha, g } = spec {
        if a == 0.0 {
            // g r^{e−α}(4π/3)^{1/p}: monotone in r
            let v = if b.is_infinite() || (alpha - e).abs() <= 1e-12 {
                g * BALL.powf(1.0 / p) * if b.is_finite() { b.powf(e - alpha) } else { 1.0 }
            } else if e > alpha {
                f(b)
            } else {
                return Ok(WeakNorm::Infinite);
            };
            return Ok(WeakNorm::Finite(v));
        }
    }
    let lo = if a > 0.0 { a } else { 1e-9 };
    let hi = if b.is_finite() { b } else { lo.max(1.0) * 1e9 };
    let steps = 4000;
    let ratio = (hi / lo).ln() / steps as f64;
    let mut best: (f64, usize) = (f(hi), steps);
    for i in 0..steps {
        let r = lo * (ratio * i as f64).exp();
        let v = f(r);
        if v > best.0 {
            best = (v, i);
        }
    }
    // golden section on the bracketing cells
    let (mut x0, mut x1) = (
        lo * (ratio * best.1.saturating_sub(1) as f64).exp(),
        (lo * (ratio * (best.1 + 1) as f64).exp()).min(hi),
    );
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let m1 = x1 - phi * (x1 - x0);
        let m2 = x0 + phi * (x1 - x0);
        if f(m1) < f(m2) {
            x0 = m1;
        } else {
            x1 = m2;
        }
    }
    let refined = f(0.5 * (x0 + x1)).max(best.0);
    Ok(WeakNorm::Finite(refined.max(origin_limit).max(far_limit)))
}

/// `w = w₁ + w₂` with bounded tail `w₁ = w·1_{|x|>R}` and singular core
/// `w₂ = w·1_{|x|≤R}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSplit {
    pub radius: f64,
    pub tail: RadialKernel,
    pub core: RadialKernel,
    /// `‖w₁‖_{L^∞}`
    pub tail_sup: f64,
    /// `‖w₂‖_{L^{3/2,∞}}`
    pub core_weak: f64,
}

impl KernelSplit {
    pub fn at(spec: KernelSpec, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::BadRadius(radius));
        }
        let tail_sup = spec.sup_beyond(radius);
        if !tail_sup.is_finite() {
            return Err(Error::UnboundedTail);
        }
        let core = RadialKernel::core(spec, radius);
        let core_weak = match weak_norm_analytic(&core, 1.5)? {
            WeakNorm::Finite(v) => v,
            WeakNorm::Infinite => return Err(Error::UnboundedTail),
        };
        Ok(Self {
            radius,
            tail: RadialKernel::tail(spec, radius),
            core,
            tail_sup,
            core_weak,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct C2Estimate {
    /// `inf_R ‖w·1_{|x|≤R}‖_{3/2,∞}`, using the `R → 0` limit.
    pub value: f64,
    /// Smallest core norm over the radius grid `[1e−3, 1e2]`.
    pub grid_min: f64,
    /// Split attaining `grid_min` (largest such radius, so the smallest
    /// tail).
    pub split: KernelSplit,
}

/// `C₂` for a catalog kernel.
///
/// Every catalog profile has `|W|` non-increasing, so threshold splittings
/// are optimal and the core norm is non-decreasing in `R`; the infimum is
/// the `R → 0` limit `(4π/3)^{2/3} lim r²|W(r)|`, which vanishes unless the
/// kernel behaves like `r^{−2}` at the origin.
pub fn c2_estimate(spec: &KernelSpec) -> Result<C2Estimate> {
    const POINTS: usize = 101;
    let mut best: Option<KernelSplit> = None;
    for i in 0..POINTS {
        let r = 1e-3 * 10f64.powf(5.0 * i as f64 / (POINTS - 1) as f64);
        let s = KernelSplit::at(*spec, r)?;
        if !(spec.sup_beyond(1e6 * r) <= s.tail_sup) {
            return Err(Error::UnboundedTail);
        }
        best = match best {
            Some(b) if b.core_weak < s.core_weak * (1.0 - 1e-12) => Some(b),
            _ => Some(s),
        };
    }
    let split = best.expect("radius grid is not empty");
    let a0 = spec.origin_exponent();
    let value = if a0 > 2.0 {
        return Err(Error::UnboundedTail);
    } else if a0 == 2.0 {
        spec.origin_strength() * BALL.powf(2.0 / 3.0)
    } else {
        0.0
    };
    Ok(C2Estimate {
        value,
        grid_min: split.core_weak,
        split,
    })
}

/// `1/(C₂ K_est)`, an upper estimate of the coercivity threshold since
/// `K_est ≤ K`; infinite when `C₂ = 0`.
pub fn lambda_star_upper(spec: &KernelSpec, k_est: f64) -> Result<f64> {
    if !(k_est > 0.0) {
        return Err(Error::InvalidOption(format!("K estimate must be positive (got {k_est})")));
    }
    Ok(lambda_star_from(c2_estimate(spec)?.value, k_est))
}

pub fn lambda_star_from(c2: f64, k_est: f64) -> f64 {
    if c2 == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (c2 * k_est)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KRatio {
    pub trial: usize,
    pub kernel: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KEstimate {
    /// Largest ratio, a lower bound for `K`.
    pub value: f64,
    pub best: KRatio,
    pub ratios: Vec<KRatio>,
}

/// `|∫(w̃∗|u|²)|u|²| / (‖w̃‖_{3/2,∞} ‖u‖²_{L²} ‖u‖²_{Ḣ¹})`.
pub fn k_ratio(u: &Field, op: &Hartree, weak: f64) -> Result<f64> {
    let m = mass(u);
    let h1 = h1_seminorm_sq(u);
    if !(m > 0.0 && h1 > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(op.interaction(u)?.abs() / (weak * m * h1))
}

pub fn k_lower_bound(trials: &[Field], kernels: &[RadialKernel]) -> Result<KEstimate> {
    if trials.is_empty() || kernels.is_empty() {
        return Err(Error::InvalidOption("k_lower_bound needs trial fields and kernels".into()));
    }
    let mut ratios = Vec::with_capacity(trials.len() * kernels.len());
    for (ki, kernel) in kernels.iter().enumerate() {
        let weak = match weak_norm_analytic(kernel, 1.5)? {
            WeakNorm::Finite(v) if v > 0.0 => v,
            _ => {
                return Err(Error::InvalidKernel(format!(
                    "{} has no finite nonzero weak L^3/2 norm",
                    kernel.spec.name()
                )))
            }
        };
        for (ti, u) in trials.iter().enumerate() {
            let op = Hartree::new(*kernel, u.grid())?;
            ratios.push(KRatio {
                trial: ti,
                kernel: ki,
                ratio: k_ratio(u, &op, weak)?,
            });
        }
    }
    let best = *ratios
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("at least one ratio");
    Ok(KEstimate {
        value: best.ratio,
        best,
        ratios,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialProfile {
    Gaussian,
    Sech,
}

#[derive(Clone, Debug)]
pub struct TrialField {
    pub profile: TrialProfile,
    pub scale: f64,
    pub field: Field,
}

/// Gaussians `e^{−r²/(2s²)}` and `sech(r/s)` at five dilations each,
/// scaled to the box so that both are resolved and negligible at the faces.
pub fn default_trial_fields(grid: &Grid) -> Vec<TrialField> {
    let unit = grid.length() / 16.0;
    let mut out = Vec::new();
    for f in [0.5, 0.75, 1.0, 1.5, 2.0] {
        let s = f * unit;
        out.push(TrialField {
            profile: TrialProfile::Gaussian,
            scale: s,
            field: Field::from_fn(*grid, |x, y, z| {
                Complex64::new((-(x * x + y * y + z * z) / (2.0 * s * s)).exp(), 0.0)
            }),
        });
    }
    for f in [0.6, 0.7, 0.8, 0.9, 1.0] {
        let s = f * unit;
        out.push(TrialField {
            profile: TrialProfile::Sech,
            scale: s,
            field: Field::from_fn(*grid, |x, y, z| {
                Complex64::new(1.0 / ((x * x + y * y + z * z).sqrt() / s).cosh(), 0.0)
            }),
        });
    }
    out
}

/// Catalog kernels with finite weak `L^{3/2}` norm: `|x|⁻²`, the Coulomb
/// core of radius 1, and the bounded wells.
pub fn default_trial_kernels() -> Vec<RadialKernel> {
    vec![
        RadialKernel::full(KernelSpec::PowerLaw { alpha: 2.0, g: 1.0 }),
        RadialKernel::core(KernelSpec::coulomb(), 1.0),
        RadialKernel::full(KernelSpec::GaussianWell { g: 1.0, sigma: 1.0 }),
        RadialKernel::full(KernelSpec::Yukawa { g: 1.0, m: 1.0 }),
        RadialKernel::full(KernelSpec::CompactWell { g: 1.0, r0: 1.0 }),
    ]
}

/// Symmetric decreasing rearrangement about the box centre: cells ranked by
/// distance to the origin sample (ties by storage index) receive the
/// sorted moduli in order. The result is real and non-negative.
pub fn symmetric_decreasing_rearrangement(u: &Field) -> Field {
    let grid = *u.grid();
    let c = (grid.n() / 2) as i64;
    let mut order: Vec<(i64, usize)> = (0..grid.len())
        .map(|idx| {
            let [x, y, z] = grid.unravel(idx);
            let d = |i: usize| (i as i64 - c).pow(2);
            (d(x) + d(y) + d(z), idx)
        })
        .collect();
    order.sort_unstable();
    let profile = decreasing_rearrangement(u);
    let mut values = vec![Complex64::default(); grid.len()];
    for ((_, idx), m) in order.iter().zip(profile.values()) {
        values[*idx] = Complex64::new(*m, 0.0);
    }
    Field::new(grid, values).expect("permutation of finite samples")
}

/// Relative Riesz violation allowed on the random-field suite.
pub const RIESZ_SLACK: f64 = 1e-3;
/// Relative Pólya–Szegő excess allowed on the random-field suite.
pub const POLYA_SZEGO_SLACK: f64 = 5e-2;
/// Bump widths (fractions of `L`) of the suite's random fields: three to
/// five cells at `N = 32`, so the rearranged fields stay resolved.
pub const SUITE_WIDTHS: (f64, f64) = (1.0 / 10.0, 1.0 / 6.0);

#[derive(Clone, Debug, Serialize)]
pub struct RearrangementRow {
    pub field: usize,
    pub kernel: usize,
    /// `|∫(w∗|u|²)|u|²|` before and after rearrangement.
    pub interaction: f64,
    pub interaction_rearranged: f64,
    pub h1: f64,
    pub h1_rearranged: f64,
}

impl RearrangementRow {
    /// Relative loss of interaction strength; positive values violate Riesz.
    pub fn riesz_violation(&self) -> f64 {
        (self.interaction - self.interaction_rearranged) / self.interaction
    }

    /// Relative kinetic excess; positive values violate Pólya–Szegő.
    pub fn polya_szego_excess(&self) -> f64 {
        self.h1_rearranged / self.h1 - 1.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RearrangementSuite {
    pub n: usize,
    pub length: f64,
    pub seed: u64,
    pub kernels: Vec<String>,
    pub rows: Vec<RearrangementRow>,
    /// Largest violation per kernel, clamped at zero.
    pub riesz_max: Vec<f64>,
    pub polya_szego_max: f64,
    pub riesz_pass: bool,
    pub polya_szego_pass: bool,
}

/// Refinement criterion: the violation at `2N` is at most `1/factor` of
/// the one at `N`. Suites without violation at `N` pass.
pub fn violation_shrinks(coarse: f64, fine: f64, factor: f64) -> bool {
    coarse <= 0.0 || fine.max(0.0) * factor <= coarse
}

/// The radially non-decreasing catalog used by the rearrangement suites.
pub fn rearrangement_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::coulomb(),
        KernelSpec::PowerLaw { alpha: 2.0, g: 1.0 },
        KernelSpec::GaussianWell { g: 1.0, sigma: 1.0 },
        KernelSpec::Yukawa { g: 1.0, m: 1.0 },
        KernelSpec::CompactWell { g: 1.0, r0: 1.0 },
    ]
}

/// Draws `count` random fields (field `i` from stream `i` of `seed`) and
/// compares interaction and kinetic energy before and after symmetric
/// decreasing rearrangement, for each kernel.
pub fn rearrangement_suite(
    specs: &[KernelSpec],
    grid: &Grid,
    count: usize,
    seed: u64,
    widths: (f64, f64),
) -> Result<RearrangementSuite> {
    for s in specs {
        if !s.attributes().radial_nondecreasing {
            return Err(Error::InvalidKernel(format!(
                "{} is not radially non-decreasing",
                s.name()
            )));
        }
    }
    if !(widths.0 > 0.0 && widths.0 < widths.1) {
        return Err(Error::InvalidOption(format!("bad width range {widths:?}")));
    }
    let ops = specs.iter().map(|s| Hartree::new(*s, grid)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(count * specs.len());
    for i in 0..count {
        let field = crate::random::SmoothRandomField::generate_with(
            &mut crate::random::rng(seed, i as u64),
            grid.length(),
            widths,
        );
        let u = field.sample(grid);
        let us = symmetric_decreasing_rearrangement(&u);
        let (h1, h1_rearranged) = (h1_seminorm_sq(&u), h1_seminorm_sq(&us));
        for (k, op) in ops.iter().enumerate() {
            rows.push(RearrangementRow {
                field: i,
                kernel: k,
                interaction: op.interaction(&u)?.abs(),
                interaction_rearranged: op.interaction(&us)?.abs(),
                h1,
                h1_rearranged,
            });
        }
    }
    let mut riesz_max = vec![0.0f64; specs.len()];
    let mut polya_szego_max = 0.0f64;
    for r in &rows {
        riesz_max[r.kernel] = riesz_max[r.kernel].max(r.riesz_violation());
        polya_szego_max = polya_szego_max.max(r.polya_szego_excess());
    }
    Ok(RearrangementSuite {
        n: grid.n(),
        length: grid.length(),
        seed,
        kernels: specs.iter().map(|s| s.name()).collect(),
        riesz_pass: riesz_max.iter().all(|v| *v <= RIESZ_SLACK),
        polya_szego_pass: polya_szego_max <= POLYA_SZEGO_SLACK,
        rows,
        riesz_max,
        polya_szego_max,
    })
}
