//! Catalog of attractive radial interaction kernels and their free-space
//! Fourier symbols.
//!
//! Convolution with a kernel is done on a grid of `2N` points per axis (box
//! side `2L`) so that densities supported in the `N`-point box see the
//! aperiodic convolution. The symbol on that grid is obtained from the
//! analytic transform of the kernel truncated at `L_t = √3·L`, sampled on a
//! `3N` grid, taken back to real space and restricted to offsets in
//! `[−L, L)³`. The singular origin sample is never evaluated in real space.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_plan, Grid};
use crate::quadrature::{integrate, sine_integral};

const QUAD_TOL: f64 = 1e-10;

/// An attractive, even, real kernel `w(x) = W(|x|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `W(r) = −g·r^{−α}`, `0 < α ≤ 2`.
    PowerLaw { alpha: f64, g: f64 },
    /// `W(r) = −g·exp(−r²/σ²)`.
    GaussianWell { g: f64, sigma: f64 },
    /// `W(r) = −g·exp(−m·r)/r`.
    Yukawa { g: f64, m: f64 },
    /// `W(r) = −g` for `r ≤ R₀`, zero outside.
    CompactWell { g: f64, r0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KernelAttributes {
    pub radial_nondecreasing: bool,
    pub is_l32: bool,
    pub singular_at_origin: bool,
}

impl KernelSpec {
    pub fn power_law(alpha: f64, g: f64) -> Result<Self> {
        let k = Self::PowerLaw { alpha, g };
        k.validate()?;
        Ok(k)
    }

    pub fn coulomb() -> Self {
        Self::PowerLaw { alpha: 1.0, g: 1.0 }
    }

    pub fn gaussian_well(g: f64, sigma: f64) -> Result<Self> {
        let k = Self::GaussianWell { g, sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn yukawa(g: f64, m: f64) -> Result<Self> {
        let k = Self::Yukawa { g, m };
        k.validate()?;
        Ok(k)
    }

    pub fn compact_well(g: f64, r0: f64) -> Result<Self> {
        let k = Self::CompactWell { g, r0 };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidKernel(format!("{name} must be positive (got {v})")))
            }
        };
        match *self {
            Self::PowerLaw { alpha, g } => {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(Error::InvalidKernel(format!(
                        "power_law requires 0 < alpha <= 2 (got {alpha}); for alpha > 2 the energy is unbounded below at every mass"
                    )));
                }
                positive("g", g)
            }
            Self::GaussianWell { g, sigma } => positive("g", g).and(positive("sigma", sigma)),
            Self::Yukawa { g, m } => positive("g", g).and(positive("m", m)),
            Self::CompactWell { g, r0 } => positive("g", g).and(positive("r0", r0)),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Self::PowerLaw { alpha, g } => format!("power_law(alpha={alpha},g={g})"),
            Self::GaussianWell { g, sigma } => format!("gaussian_well(g={g},sigma={sigma})"),
            Self::Yukawa { g, m } => format!("yukawa(g={g},m={m})"),
            Self::CompactWell { g, r0 } => format!("compact_well(g={g},r0={r0})"),
        }
    }

    /// `W(r)` for `r > 0`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::BadRadius(r));
        }
        Ok(self.profile(r))
    }

    pub(crate) fn profile(&self, r: f64) -> f64 {
        match *self {
            Self::PowerLaw { alpha, g } => -g * r.powf(-alpha),
            Self::GaussianWell { g, sigma } => -g * (-(r * r) / (sigma * sigma)).exp(),
            Self::Yukawa { g, m } => -g * (-m * r).exp() / r,
            Self::CompactWell { g, r0 } => {
                if r <= r0 {
                    -g
                } else {
                    0.0
                }
            }
        }
    }

    pub fn attributes(&self) -> KernelAttributes {
        match self {
            Self::PowerLaw { .. } => KernelAttributes {
                radial_nondecreasing: true,
                is_l32: false,
                singular_at_origin: true,
            },
            Self::GaussianWell { .. } | Self::CompactWell { .. } => KernelAttributes {
                radial_nondecreasing: true,
                is_l32: true,
                singular_at_origin: false,
            },
            Self::Yukawa { .. } => KernelAttributes {
                radial_nondecreasing: true,
                is_l32: true,
                singular_at_origin: true,
            },
        }
    }

    /// Exponent `a` with `|W(r)| ~ c·r^{−a}` as `r → 0` (zero when bounded).
    pub fn origin_exponent(&self) -> f64 {
        match *self {
            Self::PowerLaw { alpha, .. } => alpha,
            Self::Yukawa { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// `lim_{r→0} r^a |W(r)|` for the exponent of [`Self::origin_exponent`].
    pub fn origin_strength(&self) -> f64 {
        match *self {
            Self::PowerLaw { g, .. }
            | Self::GaussianWell { g, .. }
            | Self::Yukawa { g, .. }
            | Self::CompactWell { g, .. } => g,
        }
    }

    /// Degree `α` when `w(σx) = σ^{−α} w(x)` for all `σ > 0`.
    pub fn homogeneity(&self) -> Option<f64> {
        match *self {
            Self::PowerLaw { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Smallest radius beyond which the kernel vanishes identically.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Self::CompactWell { r0, .. } => r0,
            _ => f64::INFINITY,
        }
    }

    /// `sup |W|` over `r > radius`.
    pub fn sup_beyond(&self, radius: f64) -> f64 {
        // every catalog kernel has |W| non-increasing in r
        if radius <= 0.0 {
            if self.attributes().singular_at_origin {
                return f64::INFINITY;
            }
            return self.profile(f64::MIN_POSITIVE).abs();
        }
        match *self {
            Self::CompactWell { g, r0 } => {
                if radius < r0 {
                    g
                } else {
                    0.0
                }
            }
            _ => self.profile(radius).abs(),
        }
    }
}

/// A catalog kernel restricted to the shell `inner < r ≤ outer`.
///
/// Used for the bounded tail `w·1_{|x|>R}` and singular core `w·1_{|x|≤R}`
/// of a kernel splitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialKernel {
    pub spec: KernelSpec,
    pub inner: f64,
    pub outer: f64,
}

impl From<KernelSpec> for RadialKernel {
    fn from(spec: KernelSpec) -> Self {
        Self::full(spec)
    }
}

impl RadialKernel {
    pub fn full(spec: KernelSpec) -> Self {
        Self {
            spec,
            inner: 0.0,
            outer: f64::INFINITY,
        }
    }

    /// `w·1_{|x|≤R}`.
    pub fn core(spec: KernelSpec, radius: f64) -> Self {
        Self {
            spec,
            inner: 0.0,
            outer: radius,
        }
    }

    /// `w·1_{|x|>R}`.
    pub fn tail(spec: KernelSpec, radius: f64) -> Self {
        Self {
            spec,
            inner: radius,
            outer: f64::INFINITY,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r > self.inner && r <= self.outer {
            self.spec.profile(r)
        } else {
            0.0
        }
    }

    fn limits(&self, truncation: f64) -> (f64, f64) {
        let hi = self.outer.min(truncation).min(self.spec.support_radius());
        (self.inner.min(hi), hi)
    }

    /// Radial transform `ŵ_T(k) = (4π/k) ∫ r sin(kr) W(r) dr` over the
    /// support intersected with `r ≤ truncation`, by adaptive quadrature.
    /// Independent of the closed forms in [`Self::truncated_transform`].
    pub fn transform_by_quadrature(&self, k: f64, truncation: f64) -> Result<f64> {
        let (a, b) = self.limits(truncation);
        if b <= a {
            return Ok(0.0);
        }
        let w = |r: f64| if r > 0.0 { self.spec.profile(r) } else { 0.0 };
        if k == 0.0 {
            return Ok(4.0 * PI * integrate(|r| r * r * w(r), a, b, 8, QUAD_TOL, 0.0)?);
        }
        let pieces = ((b - a) * k / PI).ceil() as usize + 1;
        let v = integrate(|r| r * (k * r).sin() * w(r), a, b, pieces, QUAD_TOL, 1e-300)?;
        Ok(4.0 * PI / k * v)
    }

    /// `ŵ_T(k)` using closed forms where they exist (Coulomb, `|x|⁻²`,
    /// Yukawa, compact well, untruncated Gaussian) and quadrature otherwise.
    pub fn truncated_transform(&self, k: f64, truncation: f64) -> Result<f64> {
        let (a, b) = self.limits(truncation);
        if b <= a {
            return Ok(0.0);
        }
        let four_pi = 4.0 * PI;
        match self.spec {
            KernelSpec::PowerLaw { alpha, g } if alpha == 1.0 => Ok(if k == 0.0 {
                -g * 2.0 * PI * (b * b - a * a)
            } else {
                // ∫ sin(kr) dr = (cos ka − cos kb)/k = 2 sin(k(a+b)/2) sin(k(b−a)/2)/k
                -g * four_pi * 2.0 * (0.5 * k * (a + b)).sin() * (0.5 * k * (b - a)).sin() / (k * k)
            }),
            KernelSpec::PowerLaw { alpha, g } if alpha == 2.0 => Ok(if k == 0.0 {
                -g * four_pi * (b - a)
            } else {
                -g * four_pi * (sine_integral(k * b) - sine_integral(k * a)) / k
            }),
            KernelSpec::Yukawa { g, m } => Ok(if k == 0.0 {
                let prim = |r: f64| -(-m * r).exp() * (m * r + 1.0) / (m * m);
                -g * four_pi * (prim(b) - prim(a))
            } else {
                let prim = |r: f64| -(-m * r).exp() * (m * (k * r).sin() + k * (k * r).cos()) / (m * m + k * k);
                -g * four_pi / k * (prim(b) - prim(a))
            }),
            KernelSpec::CompactWell { g, .. } => Ok(-g * four_pi * ball_moment(k, a, b)),
            KernelSpec::GaussianWell { g, sigma } if a == 0.0 && b >= 8.0 * sigma => {
                Ok(-g * PI.powf(1.5) * sigma.powi(3) * (-0.25 * k * k * sigma * sigma).exp())
            }
            _ => self.transform_by_quadrature(k, truncation),
        }
    }

    /// [`Self::truncated_transform`] at many wavenumbers. `ks` must be sorted
    /// ascending. General power laws integrate `t^{1−α} sin t`
    /// cumulatively along the sorted arguments instead of once per `k`.
    pub fn truncated_transforms(&self, ks: &[f64], truncation: f64) -> Result<Vec<f64>> {
        debug_assert!(ks.windows(2).all(|w| w[0] <= w[1]));
        match self.spec {
            KernelSpec::PowerLaw { alpha, g } if alpha != 1.0 && alpha != 2.0 => {
                let (a, b) = self.limits(truncation);
                if b <= a {
                    return Ok(vec![0.0; ks.len()]);
                }
                let mut args: Vec<f64> = ks.iter().flat_map(|&k| [k * a, k * b]).collect();
                args.sort_by(f64::total_cmp);
                args.dedup();
                let prim = power_sine_primitive(alpha, &args)?;
                let lookup = |x: f64| {
                    let i = args.partition_point(|&v| v < x);
                    prim[i]
                };
                Ok(ks
                    .iter()
                    .map(|&k| {
                        if k == 0.0 {
                            -g * 4.0 * PI * (b.powf(3.0 - alpha) - a.powf(3.0 - alpha)) / (3.0 - alpha)
                        } else {
                            -g * 4.0 * PI * k.powf(alpha - 3.0) * (lookup(k * b) - lookup(k * a))
                        }
                    })
                    .collect())
            }
            _ => ks.iter().map(|&k| self.truncated_transform(k, truncation)).collect(),
        }
    }
}

/// `(1/k) ∫_a^b r sin(kr) dr`, with the `k → 0` limit `(b³ − a³)/3`.
fn ball_moment(k: f64, a: f64, b: f64) -> f64 {
    let f = |r: f64| {
        let x = k * r;
        if x.abs() < 1e-3 {
            // (sin x − x cos x)/k³ = r³(1/3 − x²/30 + x⁴/840)
            let x2 = x * x;
            r.powi(3) * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0)
        } else {
            (x.sin() - x * x.cos()) / (k * k * k)
        }
    };
    f(b) - f(a)
}

/// `F(X) = ∫₀^X t^{1−α} sin t dt` at each sorted point of `xs`.
fn power_sine_primitive(alpha: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let f = |t: f64| if t > 0.0 { t.powf(1.0 - alpha) * t.sin() } else { 0.0 };
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &x in xs {
        if x > prev {
            let pieces = ((x - prev) / PI).ceil() as usize;
            acc += integrate(f, prev, x, pieces, 1e-13, 1e-15)?;
            prev = x;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Real Fourier symbol of a kernel on the `2N` zero-padded grid.
#[derive(Debug)]
pub struct KernelSymbol {
    kernel: RadialKernel,
    base: Grid,
    padded: Grid,
    truncation: f64,
    values: Vec<f64>,
}

impl KernelSymbol {
    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    /// The physical `N`-point grid the symbol serves.
    pub fn base_grid(&self) -> &Grid {
        &self.base
    }

    /// The `2N`-point, side `2L` grid the symbol lives on.
    pub fn padded_grid(&self) -> &Grid {
        &self.padded
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct SymbolKey {
    kernel: [u64; 5],
    n: usize,
    length: u64,
}

fn symbol_key(kernel: &RadialKernel, grid: &Grid) -> SymbolKey {
    let (tag, p1, p2) = match kernel.spec {
        KernelSpec::PowerLaw { alpha, g } => (0, alpha, g),
        KernelSpec::GaussianWell { g, sigma } => (1, g, sigma),
        KernelSpec::Yukawa { g, m } => (2, g, m),
        KernelSpec::CompactWell { g, r0 } => (3, g, r0),
    };
    SymbolKey {
        kernel: [tag, p1.to_bits(), p2.to_bits(), kernel.inner.to_bits(), kernel.outer.to_bits()],
        n: grid.n(),
        length: grid.length().to_bits(),
    }
}

/// Symbol of `kernel` for convolutions on `grid`, cached per
/// `(kernel, grid)`.
pub fn fourier_symbol(kernel: impl Into<RadialKernel>, grid: &Grid) -> Result<Arc<KernelSymbol>> {
    static CACHE: OnceLock<Mutex<HashMap<SymbolKey, Arc<KernelSymbol>>>> = OnceLock::new();
    let kernel = kernel.into();
    kernel.spec.validate()?;
    let key = symbol_key(&kernel, grid);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("symbol cache poisoned").get(&key) {
        return Ok(Arc::clone(s));
    }
    let fresh = Arc::new(compute_symbol(kernel, grid)?);
    let mut guard = cache.lock().expect("symbol cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(fresh)))
}

/// Uncached symbol computation.
pub fn compute_symbol(kernel: RadialKernel, grid: &Grid) -> Result<KernelSymbol> {
    let n = grid.n();
    let length = grid.length();
    let h = grid.spacing();
    let truncation = 3f64.sqrt() * length;

    // analytic truncated transform on the 3N grid (period 3L ≥ L + L_t)
    let n3 = 3 * n;
    let dk = 2.0 * PI / (3.0 * length);
    let mode = |j: usize| -> i64 {
        let j = j as i64;
        let n3 = n3 as i64;
        if j < n3 / 2 {
            j
        } else {
            j - n3
        }
    };
    let half = (n3 / 2) as i64;
    let smax = 3 * half * half;
    let mut present = vec![false; smax as usize + 1];
    for a in -half..half {
        for b in -half..half {
            for c in -half..half {
                present[(a * a + b * b + c * c) as usize] = true;
            }
        }
    }
    let shells: Vec<usize> = (0..present.len()).filter(|&s| present[s]).collect();
    let ks: Vec<f64> = shells.iter().map(|&s| dk * (s as f64).sqrt()).collect();
    let table = kernel.truncated_transforms(&ks, truncation)?;
    let mut by_shell = vec![0.0; present.len()];
    for (&s, &v) in shells.iter().zip(&table) {
        by_shell[s] = v;
    }

    let mut big = vec![Complex64::default(); n3 * n3 * n3];
    for z in 0..n3 {
        let mz = mode(z);
        for y in 0..n3 {
            let my = mode(y);
            let row = &mut big[n3 * (y + n3 * z)..n3 * (y + 1 + n3 * z)];
            for (x, v) in row.iter_mut().enumerate() {
                let mx = mode(x);
                *v = Complex64::new(by_shell[(mx * mx + my * my + mz * mz) as usize], 0.0);
            }
        }
    }
    fft_plan(n3).inverse(&mut big);
    let inv_vol = 1.0 / (3.0 * length).powi(3);

    // restrict to offsets in [−N, N) on the 2N grid
    let n2 = 2 * n;
    let src = |j: usize| if j < n { j } else { n3 - (n2 - j) };
    let mut padded = vec![Complex64::default(); n2 * n2 * n2];
    for z in 0..n2 {
        for y in 0..n2 {
            for x in 0..n2 {
                let v = big[src(x) + n3 * (src(y) + n3 * src(z))];
                padded[x + n2 * (y + n2 * z)] = Complex64::new(v.re * inv_vol, 0.0);
            }
        }
    }
    drop(big);
    fft_plan(n2).forward(&mut padded);
    let h3 = h * h * h;
    // average with the mirror bin so ŵ(k) = ŵ(−k) holds bit for bit
    let neg = |j: usize| (n2 - j) % n2;
    let mut values = vec![0.0; padded.len()];
    for z in 0..n2 {
        for y in 0..n2 {
            for x in 0..n2 {
                let a = padded[x + n2 * (y + n2 * z)].re;
                let b = padded[neg(x) + n2 * (neg(y) + n2 * neg(z))].re;
                values[x + n2 * (y + n2 * z)] = 0.5 * (a + b) * h3;
            }
        }
    }
    Ok(KernelSymbol {
        kernel,
        base: *grid,
        padded: Grid::new(n2, 2.0 * length)?,
        truncation,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(KernelSpec::coulomb().value(2.0).unwrap(), -0.5);
        let gw = KernelSpec::gaussian_well(1.0, 1.0).unwrap();
        assert!((gw.value(1e-12).unwrap() + 1.0).abs() < 1e-15);
        let cw = KernelSpec::compact_well(1.0, 1.0).unwrap();
        assert_eq!(cw.value(2.0).unwrap(), 0.0);
        assert!(matches!(cw.value(0.0), Err(Error::BadRadius(_))));
        assert!(matches!(cw.value(-1.0), Err(Error::BadRadius(_))));
    }

    #[test]
    fn catalog_attributes() {
        for alpha in [0.5, 1.0, 2.0] {
            assert!(KernelSpec::power_law(alpha, 1.0).unwrap().attributes().radial_nondecreasing);
        }
        assert!(KernelSpec::gaussian_well(1.0, 1.0).unwrap().attributes().is_l32);
        let err = KernelSpec::power_law(2.5, 1.0).unwrap_err();
        assert!(err.to_string().contains("0 < alpha <= 2"));
        assert!(KernelSpec::power_law(0.0, 1.0).is_err());
        assert!(KernelSpec::power_law(1.0, -1.0).is_err());
        assert!(KernelSpec::yukawa(1.0, 0.0).is_err());
    }

    #[test]
    fn catalog_is_attractive() {
        let catalog = [
            KernelSpec::coulomb(),
            KernelSpec::power_law(0.5, 2.0).unwrap(),
            KernelSpec::gaussian_well(1.0, 1.0).unwrap(),
            KernelSpec::yukawa(1.0, 0.5).unwrap(),
            KernelSpec::compact_well(1.0, 1.0).unwrap(),
        ];
        for k in catalog {
            for r in [0.1, 0.5, 0.99, 3.0] {
                let v = k.value(r).unwrap();
                assert!(v <= 0.0, "{}", k.name());
                if r < k.support_radius() {
                    assert!(v < 0.0, "{}", k.name());
                }
            }
        }
    }

    #[test]
    fn coulomb_closed_form_at_unit_k() {
        let k = RadialKernel::full(KernelSpec::coulomb());
        let v = k.truncated_transform(1.0, 10.0).unwrap();
        let expected = -4.0 * PI * (1.0 - 10f64.cos());
        assert!((v - expected).abs() < 1e-13 * expected.abs());
        let q = k.transform_by_quadrature(1.0, 10.0).unwrap();
        assert!((q - expected).abs() < 1e-9 * expected.abs());
        let zero = k.truncated_transform(0.0, 10.0).unwrap();
        assert_eq!(zero, -2.0 * PI * 100.0);
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        let kernels = [
            RadialKernel::full(KernelSpec::coulomb()),
            RadialKernel::full(KernelSpec::power_law(2.0, 1.5).unwrap()),
            RadialKernel::tail(KernelSpec::power_law(2.0, 1.0).unwrap(), 0.7),
            RadialKernel::core(KernelSpec::coulomb(), 2.0),
            RadialKernel::full(KernelSpec::yukawa(1.0, 0.8).unwrap()),
            RadialKernel::tail(KernelSpec::yukawa(1.0, 0.8).unwrap(), 0.3),
            RadialKernel::full(KernelSpec::compact_well(2.0, 1.3).unwrap()),
            RadialKernel::full(KernelSpec::gaussian_well(1.0, 1.0).unwrap()),
        ];
        for kernel in kernels {
            for k in [0.0, 1e-4, 0.37, 1.0, 4.2, 17.0] {
                let a = kernel.truncated_transform(k, 12.0).unwrap();
                let b = kernel.transform_by_quadrature(k, 12.0).unwrap();
                let scale = a.abs().max(1e-3);
                assert!((a - b).abs() < 1e-8 * scale, "{kernel:?} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cumulative_power_transform_agrees_with_quadrature() {
        for alpha in [0.5, 1.5] {
            for kernel in [
                RadialKernel::full(KernelSpec::power_law(alpha, 1.0).unwrap()),
                RadialKernel::tail(KernelSpec::power_law(alpha, 1.0).unwrap(), 0.4),
            ] {
                let ks = [0.0, 0.05, 0.5, 1.0, 2.0, 9.5];
                let batch = kernel.truncated_transforms(&ks, 15.0).unwrap();
                for (&k, &v) in ks.iter().zip(&batch) {
                    let q = kernel.transform_by_quadrature(k, 15.0).unwrap();
                    assert!((v - q).abs() < 1e-8 * q.abs().max(1.0), "alpha={alpha} k={k}: {v} vs {q}");
                }
            }
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let kernel = RadialKernel::full(KernelSpec::gaussian_well(1.0, 1.0).unwrap());
        for k in [0.0, 0.5, 2.0, 5.0] {
            let v = kernel.transform_by_quadrature(k, 30.0).unwrap();
            let expected = -PI.powf(1.5) * (-k * k / 4.0).exp();
            assert!((v - expected).abs() < 1e-8, "k={k}");
        }
    }

    #[test]
    fn symbol_is_even_and_cached() {
        let grid = Grid::new(8, 4.0).unwrap();
        let s = fourier_symbol(KernelSpec::coulomb(), &grid).unwrap();
        let p = *s.padded_grid();
        let n = p.n();
        let neg = |j: usize| (n - j) % n;
        for idx in 0..p.len() {
            let [a, b, c] = p.unravel(idx);
            let mirror = p.index(neg(a), neg(b), neg(c));
            assert_eq!(s.values()[idx], s.values()[mirror]);
        }
        let again = fourier_symbol(KernelSpec::coulomb(), &grid).unwrap();
        assert!(Arc::ptr_eq(&s, &again));
        let fresh = compute_symbol(RadialKernel::full(KernelSpec::coulomb()), &grid).unwrap();
        assert_eq!(
            fresh.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            s.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
