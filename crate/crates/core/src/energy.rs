//! The Hartree energy `E(u) = ½‖∇u‖² + ¼∫(w∗|u|²)|u|²`, the Hartree
//! operator `H[u]u = −Δu + (w∗|u|²)u`, its Lagrange multiplier and the
//! Euler–Lagrange residual.
//!
//! Gradient bookkeeping: for a real variation `v`,
//! `d/dε E(u + εv)|₀ = Re⟨v, −Δu⟩ + Re⟨v, (w∗|u|²)u⟩`, the quartic term
//! contributing `4·¼` because `|u|²` appears twice. So `H[u]u` is the
//! gradient of `E` with respect to the real `L²` pairing, and the
//! constrained flow and the multiplier both use it directly.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{pairwise_map_sum, raw_forward, raw_inverse, Field, RealField};
use crate::grid::{fft_plan, Grid};
use crate::kernels::{fourier_symbol, KernelSymbol, RadialKernel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `½‖u‖²_{Ḣ¹}`
    pub kinetic: f64,
    /// `¼∫(w∗|u|²)|u|²`
    pub interaction: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(kinetic: f64, interaction: f64) -> Self {
        Self {
            kinetic,
            interaction,
            total: kinetic + interaction,
        }
    }
}

/// Pointwise `|u|²`.
pub fn density(u: &Field) -> RealField {
    RealField::from_parts(*u.grid(), u.values().iter().map(|v| v.norm_sqr()).collect())
}

/// `w∗ρ` on the box, by zero padding to `2N`, multiplying by the symbol and
/// cropping.
pub fn convolve(symbol: &KernelSymbol, rho: &RealField) -> Result<RealField> {
    let grid = *rho.grid();
    if *symbol.base_grid() != grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.n();
    let n2 = 2 * n;
    let mut buf = vec![Complex64::default(); n2 * n2 * n2];
    for z in 0..n {
        for y in 0..n {
            let src = &rho.values()[n * (y + n * z)..n * (y + 1 + n * z)];
            let dst = &mut buf[n2 * (y + n2 * z)..n2 * (y + n2 * z) + n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = Complex64::new(*s, 0.0);
            }
        }
    }
    let plan = fft_plan(n2);
    plan.forward_padded(&mut buf, n);
    for (b, w) in buf.iter_mut().zip(symbol.values()) {
        *b *= *w;
    }
    plan.inverse_cropped(&mut buf, n);
    // raw inverse carries a factor (2N)³; with ŵ already weighted by h³
    // the result is h³ Σ_y w(x−y) ρ(y)
    let scale = 1.0 / (n2 * n2 * n2) as f64;
    let mut out = Vec::with_capacity(grid.len());
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    for z in 0..n {
        for y in 0..n {
            for v in &buf[n2 * (y + n2 * z)..n2 * (y + n2 * z) + n] {
                let re = v.re * scale;
                max_re = max_re.max(re.abs());
                max_im = max_im.max((v.im * scale).abs());
                out.push(re);
            }
        }
    }
    if max_im > 1e-10 * max_re.max(f64::MIN_POSITIVE) && max_im > 1e-300 {
        return Err(Error::ImaginaryResidue(max_im / max_re.max(f64::MIN_POSITIVE)));
    }
    Ok(RealField::from_parts(grid, out))
}

/// Everything the solvers need about one state, computed with one
/// convolution and two FFTs.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub mass: f64,
    pub h1: f64,
    /// `∫(w∗|u|²)|u|²`
    pub interaction_integral: f64,
    pub energy: EnergyBreakdown,
    pub multiplier: f64,
    pub residual: f64,
    /// `w∗|u|²` on the grid.
    pub potential: Vec<f64>,
    /// Unweighted FFT of `u`.
    pub(crate) spectrum: Vec<Complex64>,
    /// Unweighted FFT of `(w∗|u|²)u`.
    pub(crate) potential_term_spectrum: Vec<Complex64>,
}

/// Energy functional and operator for one kernel on one grid.
#[derive(Clone, Debug)]
pub struct Hartree {
    grid: Grid,
    symbol: Arc<KernelSymbol>,
    k2: Arc<Vec<f64>>,
}

impl Hartree {
    pub fn new(kernel: impl Into<RadialKernel>, grid: &Grid) -> Result<Self> {
        Ok(Self {
            grid: *grid,
            symbol: fourier_symbol(kernel, grid)?,
            k2: Arc::new(grid.k_squared()),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &RadialKernel {
        self.symbol.kernel()
    }

    pub fn symbol(&self) -> &KernelSymbol {
        &self.symbol
    }

    pub(crate) fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    fn check(&self, u: &Field) -> Result<()> {
        if *u.grid() == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn potential(&self, u: &Field) -> Result<RealField> {
        self.check(u)?;
        convolve(&self.symbol, &density(u))
    }

    /// `∫(w∗|u|²)|u|²` via Parseval on the padded grid:
    /// `(2L)⁻³ Σ ŵ(k) |ρ̂(k)|²`.
    pub fn interaction(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let n = self.grid.n();
        let n2 = 2 * n;
        let mut buf = vec![Complex64::default(); n2 * n2 * n2];
        for z in 0..n {
            for y in 0..n {
                let src = &u.values()[n * (y + n * z)..n * (y + 1 + n * z)];
                let dst = &mut buf[n2 * (y + n2 * z)..n2 * (y + n2 * z) + n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = Complex64::new(s.norm_sqr(), 0.0);
                }
            }
        }
        fft_plan(n2).forward_padded(&mut buf, n);
        let w = self.symbol.values();
        let h3 = self.grid.cell_volume();
        let sum = pairwise_map_sum(buf.len(), &|i| w[i] * buf[i].norm_sqr());
        Ok(sum * h3 * h3 / (2.0 * self.grid.length()).powi(3))
    }

    pub fn evaluate(&self, u: &Field) -> Result<Evaluation> {
        self.check(u)?;
        let grid = self.grid;
        let h3 = grid.cell_volume();
        let parseval = h3 * h3 / grid.volume();
        let vals = u.values();
        let mass = h3 * pairwise_map_sum(vals.len(), &|i| vals[i].norm_sqr());
        let potential = convolve(&self.symbol, &density(u))?.into_values();
        let interaction_integral =
            h3 * pairwise_map_sum(vals.len(), &|i| potential[i] * vals[i].norm_sqr());
        let spectrum = raw_forward(u);
        let k2 = &self.k2;
        let h1 = parseval * pairwise_map_sum(spectrum.len(), &|i| k2[i] * spectrum[i].norm_sqr());
        let vu: Vec<Complex64> = vals.iter().zip(&potential).map(|(a, v)| a * v).collect();
        let vu = raw_forward(&Field::from_parts(grid, vu));
        let energy = EnergyBreakdown::new(0.5 * h1, 0.25 * interaction_integral);
        let (multiplier, residual) = if mass > 0.0 {
            let mu = (h1 + interaction_integral) / mass;
            let r2 = parseval
                * pairwise_map_sum(spectrum.len(), &|i| {
                    (spectrum[i] * (k2[i] - mu) + vu[i]).norm_sqr()
                });
            (mu, (r2 / mass).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(Evaluation {
            mass,
            h1,
            interaction_integral,
            energy,
            multiplier,
            residual,
            potential,
            spectrum,
            potential_term_spectrum: vu,
        })
    }

    pub fn energy(&self, u: &Field) -> Result<EnergyBreakdown> {
        self.check(u)?;
        let h1 = crate::field::h1_seminorm_sq(u);
        let v = self.interaction(u)?;
        Ok(EnergyBreakdown::new(0.5 * h1, 0.25 * v))
    }

    /// `H[u]u = −Δu + (w∗|u|²)u`.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        let ev = self.evaluate(u)?;
        let combined: Vec<Complex64> = ev
            .spectrum
            .iter()
            .zip(&ev.potential_term_spectrum)
            .zip(self.k2.iter())
            .map(|((s, p), k2)| s * k2 + p)
            .collect();
        Ok(raw_inverse(self.grid, combined))
    }

    pub fn multiplier(&self, u: &Field) -> Result<f64> {
        let ev = self.evaluate(u)?;
        if !(ev.mass > 0.0) {
            return Err(Error::ZeroField);
        }
        Ok(ev.multiplier)
    }

    /// `‖H[u]u − μu‖_{L²} / ‖u‖_{L²}`.
    pub fn residual(&self, u: &Field) -> Result<f64> {
        let ev = self.evaluate(u)?;
        if !(ev.mass > 0.0) {
            return Err(Error::ZeroField);
        }
        Ok(ev.residual)
    }
}

pub fn interaction(u: &Field, kernel: impl Into<RadialKernel>) -> Result<f64> {
    Hartree::new(kernel, u.grid())?.interaction(u)
}

pub fn energy(u: &Field, kernel: impl Into<RadialKernel>) -> Result<EnergyBreakdown> {
    Hartree::new(kernel, u.grid())?.energy(u)
}

pub fn hartree_apply(u: &Field, kernel: impl Into<RadialKernel>) -> Result<Field> {
    Hartree::new(kernel, u.grid())?.apply(u)
}

pub fn multiplier(u: &Field, kernel: impl Into<RadialKernel>) -> Result<f64> {
    Hartree::new(kernel, u.grid())?.multiplier(u)
}

pub fn residual(u: &Field, kernel: impl Into<RadialKernel>) -> Result<f64> {
    Hartree::new(kernel, u.grid())?.residual(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{h1_seminorm_sq, inner, mass};
    use crate::kernels::KernelSpec;
    use crate::random::SmoothRandomField;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid) -> Field {
        Field::from_fn(grid, |x, y, z| Complex64::new((-(x * x + y * y + z * z) / 2.0).exp(), 0.0))
    }

    #[test]
    fn gaussian_coulomb_interaction() {
        // Two Gaussian charges of variance 1/2 per axis: Q²/(s√π)
        let g = Grid::new(32, 16.0).unwrap();
        let u = gaussian(g);
        let v = interaction(&u, KernelSpec::coulomb()).unwrap();
        let exact = -(2.0f64).sqrt() * PI.powf(2.5);
        assert!((v - exact).abs() < 1e-5 * exact.abs(), "{v} vs {exact}");
    }

    #[test]
    fn gaussian_inverse_square_interaction() {
        let g = Grid::new(32, 16.0).unwrap();
        let u = gaussian(g);
        let v = interaction(&u, KernelSpec::power_law(2.0, 1.0).unwrap()).unwrap();
        let exact = -PI.powi(3);
        assert!((v - exact).abs() < 1e-4 * exact.abs(), "{v} vs {exact}");
    }

    #[test]
    fn gaussian_coulomb_energy_and_multiplier() {
        let g = Grid::new(32, 16.0).unwrap();
        let u = gaussian(g);
        let op = Hartree::new(KernelSpec::coulomb(), &g).unwrap();
        let e = op.energy(&u).unwrap();
        let s2 = (2.0f64).sqrt();
        let exact_e = 0.75 * PI.powf(1.5) - 0.25 * s2 * PI.powf(2.5);
        assert!((e.total - exact_e).abs() < 1e-5, "{}", e.total);
        let exact_mu = (1.5 * PI.powf(1.5) - s2 * PI.powf(2.5)) / PI.powf(1.5);
        let mu = op.multiplier(&u).unwrap();
        assert!((mu - exact_mu).abs() < 1e-5, "{mu}");
        let ev = op.evaluate(&u).unwrap();
        assert!((ev.energy.total - e.total).abs() < 1e-10);
        assert!((ev.multiplier - mu).abs() < 1e-12);
    }

    #[test]
    fn gauge_and_translation_invariance() {
        let g = Grid::new(32, 24.0).unwrap();
        let u = gaussian(g);
        let op = Hartree::new(KernelSpec::yukawa(2.0, 0.5).unwrap(), &g).unwrap();
        let e0 = op.energy(&u).unwrap().total;
        let e1 = op.energy(&u.phase_rotated(1.234)).unwrap().total;
        assert!((e0 - e1).abs() < 1e-12 * e0.abs().max(1.0));
        let e2 = op.energy(&u.circular_shift([3, -2, 1])).unwrap().total;
        assert!((e0 - e2).abs() < 1e-9 * e0.abs().max(1.0), "{e0} {e2}");
    }

    #[test]
    fn operator_is_the_energy_gradient() {
        let g = Grid::new(16, 12.0).unwrap();
        let u = SmoothRandomField::generate(3, &g).sample(&g);
        let v = SmoothRandomField::generate(4, &g).sample(&g);
        for spec in [KernelSpec::coulomb(), KernelSpec::gaussian_well(1.5, 1.0).unwrap()] {
            let op = Hartree::new(spec, &g).unwrap();
            let hu = op.apply(&u).unwrap();
            let eps = 1e-4;
            let ep = op.energy(&u.axpy(Complex64::new(eps, 0.0), &v).unwrap()).unwrap().total;
            let em = op.energy(&u.axpy(Complex64::new(-eps, 0.0), &v).unwrap()).unwrap().total;
            let fd = (ep - em) / (2.0 * eps);
            let exact = inner(&v, &hu).unwrap().re;
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn residual_vanishes_on_eigenfunction_of_linear_part() {
        // with w = 0 only the Laplacian remains; a plane wave is exact
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let u = Field::from_fn(g, |x, _, _| Complex64::from_polar(1.0, 2.0 * x));
        let op = Hartree::new(KernelSpec::compact_well(1e-300, 1e-3).unwrap(), &g).unwrap();
        let ev = op.evaluate(&u).unwrap();
        assert!((ev.multiplier - 4.0).abs() < 1e-10, "{}", ev.multiplier);
        assert!(ev.residual < 1e-10);
    }

    #[test]
    fn kinetic_matches_direct_seminorm() {
        let g = Grid::new(16, 10.0).unwrap();
        let u = SmoothRandomField::generate(9, &g).sample(&g);
        let op = Hartree::new(KernelSpec::coulomb(), &g).unwrap();
        let ev = op.evaluate(&u).unwrap();
        assert!((ev.h1 - h1_seminorm_sq(&u)).abs() < 1e-10 * ev.h1);
        assert!((ev.mass - mass(&u)).abs() < 1e-12 * ev.mass);
    }

    #[test]
    fn zero_field_has_no_multiplier() {
        let g = Grid::new(8, 4.0).unwrap();
        let op = Hartree::new(KernelSpec::coulomb(), &g).unwrap();
        assert!(matches!(op.multiplier(&Field::zeros(g)), Err(Error::ZeroField)));
        let other = Grid::new(8, 5.0).unwrap();
        assert!(matches!(op.energy(&Field::zeros(other)), Err(Error::GridMismatch)));
    }
}
