//! Complex fields on a [`Grid`], their norms and spectral transforms.
//!
//! Quadrature is the rectangle rule implied by the sampling, which is
//! spectrally accurate for smooth periodic integrands. All reductions go
//! through [`pairwise_sum`] so results do not depend on thread count.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Complex samples of a function on a grid, index `ix + N·(iy + N·iz)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

/// DFT coefficients `û(k) = h³ Σ_x u(x) e^{−ik·x}` in FFT bin order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

const PAIRWISE_BLOCK: usize = 64;

/// Sum in a fixed binary tree so the result is independent of how the work
/// is split.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Pairwise sum of `f(i)` for `i < len` without materializing more than one
/// block at a time.
pub(crate) fn pairwise_map_sum(len: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, len, f)
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y, z] = grid.point(idx);
                f(x, y, z)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Mutable access to the samples. Callers are responsible for keeping
    /// them finite; [`Field::check_finite`] re-validates.
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_mut(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn phase_rotated(&self, theta: f64) -> Self {
        self.scaled(Complex64::from_polar(1.0, theta))
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Circular shift: the result at index `i` is `self` at `i − shift`.
    pub fn circular_shift(&self, shift: [i64; 3]) -> Self {
        let n = self.grid.n() as i64;
        let wrap = |i: usize, s: i64| ((i as i64 - s).rem_euclid(n)) as usize;
        let values = (0..self.grid.len())
            .map(|idx| {
                let [x, y, z] = self.grid.unravel(idx);
                self.values[self.grid.index(wrap(x, shift[0]), wrap(y, shift[1]), wrap(z, shift[2]))]
            })
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus over the outermost layer of cells.
    pub fn boundary_amplitude(&self) -> f64 {
        let n = self.grid.n();
        let on_face = |i: usize| i == 0 || i == n - 1;
        (0..self.grid.len())
            .filter(|&idx| {
                let [x, y, z] = self.grid.unravel(idx);
                on_face(x) || on_face(y) || on_face(z)
            })
            .map(|idx| self.values[idx].norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }
}

/// Real samples on a grid (densities, potentials).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `h³ Σ f`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * pairwise_sum(&self.values)
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }
}

impl SpectralField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }
}

/// `(−1)^{m̃x+m̃y+m̃z}`, the phase from sample points starting at `−L/2`.
fn centering_sign(grid: &Grid, idx: usize) -> f64 {
    let [a, b, c] = grid.unravel(idx);
    let m = grid.mode(a) + grid.mode(b) + grid.mode(c);
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn forward(u: &Field) -> SpectralField {
    let grid = *u.grid();
    let mut data = u.values.clone();
    grid.fft().forward(&mut data);
    let h3 = grid.cell_volume();
    for (idx, c) in data.iter_mut().enumerate() {
        *c *= h3 * centering_sign(&grid, idx);
    }
    SpectralField {
        grid,
        coefficients: data,
    }
}

pub fn inverse(s: &SpectralField) -> Field {
    let grid = s.grid;
    let inv_vol = 1.0 / grid.volume();
    let mut data: Vec<Complex64> = s
        .coefficients
        .iter()
        .enumerate()
        .map(|(idx, c)| c * inv_vol * centering_sign(&grid, idx))
        .collect();
    grid.fft().inverse(&mut data);
    Field::from_parts(grid, data)
}

/// Unweighted forward FFT of the samples, the building block for the
/// spectral operators. `h³` and the centring phase are not applied.
pub(crate) fn raw_forward(u: &Field) -> Vec<Complex64> {
    let mut data = u.values.clone();
    u.grid.fft().forward(&mut data);
    data
}

/// Inverse of [`raw_forward`], normalized so that
/// `raw_inverse(raw_forward(u)) = u`.
pub(crate) fn raw_inverse(grid: Grid, mut data: Vec<Complex64>) -> Field {
    grid.fft().inverse(&mut data);
    let s = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|v| *v *= s);
    Field::from_parts(grid, data)
}

/// `‖u‖²_{L²} = h³ Σ |u|²`.
pub fn mass(u: &Field) -> f64 {
    let v = &u.values;
    u.grid.cell_volume() * pairwise_map_sum(v.len(), &|i| v[i].norm_sqr())
}

/// `‖∇u‖²_{L²}` computed spectrally as `L⁻³ Σ |k|² |û(k)|²`.
pub fn h1_seminorm_sq(u: &Field) -> f64 {
    let grid = *u.grid();
    let spec = raw_forward(u);
    h1_from_raw_spectrum(&grid, &spec)
}

pub(crate) fn h1_from_raw_spectrum(grid: &Grid, spec: &[Complex64]) -> f64 {
    let k2 = grid.k_squared();
    let h3 = grid.cell_volume();
    h3 * h3 / grid.volume() * pairwise_map_sum(spec.len(), &|i| k2[i] * spec[i].norm_sqr())
}

/// `(h³ Σ |u|^p)^{1/p}` for `p ≥ 1`.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::BadExponent(p));
    }
    let v = &u.values;
    let s = pairwise_map_sum(v.len(), &|i| v[i].norm().powf(p));
    Ok((u.grid.cell_volume() * s).powf(1.0 / p))
}

/// `⟨u, v⟩ = h³ Σ conj(u)·v`, antilinear in the first slot.
pub fn inner(u: &Field, v: &Field) -> Result<Complex64> {
    u.same_grid(v)?;
    let prods: Vec<Complex64> = u.values.iter().zip(&v.values).map(|(a, b)| a.conj() * b).collect();
    Ok(pairwise_sum_complex(&prods) * u.grid.cell_volume())
}

/// Full `H¹` norm squared, `‖u‖²_{L²} + ‖∇u‖²_{L²}`.
pub fn h1_norm_sq(u: &Field) -> f64 {
    mass(u) + h1_seminorm_sq(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid) -> Field {
        Field::from_fn(grid, |x, y, z| Complex64::new((-(x * x + y * y + z * z) / 2.0).exp(), 0.0))
    }

    fn plane_wave(grid: Grid, m: [i64; 3]) -> Field {
        let k = m.map(|mi| 2.0 * PI * mi as f64 / grid.length());
        Field::from_fn(grid, |x, y, z| Complex64::from_polar(1.0, k[0] * x + k[1] * y + k[2] * z))
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = Grid::new(8, 4.0).unwrap();
        let u = Field::zeros(g);
        assert_eq!(mass(&u), 0.0);
        assert_eq!(lp_norm(&u, 4.0).unwrap(), 0.0);
        assert_eq!(h1_seminorm_sq(&u), 0.0);
    }

    #[test]
    fn gaussian_mass_and_gradient() {
        let g = Grid::new(64, 16.0).unwrap();
        let u = gaussian(g);
        assert!((mass(&u) - PI.powf(1.5)).abs() < 1e-8);
        assert!((h1_seminorm_sq(&u) - 1.5 * PI.powf(1.5)).abs() < 1e-6);
        assert!((lp_norm(&u, 2.0).unwrap() - PI.powf(0.75)).abs() < 1e-6);
    }

    #[test]
    fn mass_is_quadratic() {
        let g = Grid::new(8, 3.0).unwrap();
        let u = gaussian(g);
        let c = 2.5;
        let m = mass(&u);
        assert!((mass(&u.scaled(Complex64::new(c, 0.0))) - c * c * m).abs() <= 1e-14 * m);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = Grid::new(16, 5.0).unwrap();
        let u = Field::constant(g, Complex64::new(1.0, 0.0));
        assert!(h1_seminorm_sq(&u).abs() < 1e-20);
    }

    #[test]
    fn plane_wave_gradient_is_k_squared_volume() {
        let g = Grid::new(16, 5.0).unwrap();
        let m = [2, -3, 1];
        let u = plane_wave(g, m);
        let k2: f64 = m.iter().map(|&mi| (2.0 * PI * mi as f64 / 5.0).powi(2)).sum();
        let expected = k2 * g.volume();
        assert!((h1_seminorm_sq(&u) - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn single_cell_indicator_norm() {
        let g = Grid::new(8, 2.0).unwrap();
        let mut u = Field::zeros(g);
        u.values_mut()[g.index(3, 4, 5)] = Complex64::new(1.0, 0.0);
        let h = g.spacing();
        assert!((lp_norm(&u, 2.0).unwrap() - h.powf(1.5)).abs() < 1e-15);
        assert!(matches!(lp_norm(&u, 0.5), Err(Error::BadExponent(_))));
    }

    #[test]
    fn inner_product_identities() {
        let g = Grid::new(16, 4.0).unwrap();
        let a = plane_wave(g, [1, 0, 0]);
        let b = plane_wave(g, [0, 2, 0]);
        assert!(inner(&a, &b).unwrap().norm() < 1e-12 * g.volume());
        let u = gaussian(g).axpy(Complex64::new(0.0, 0.3), &a).unwrap();
        let v = b.axpy(Complex64::new(0.5, 0.0), &u).unwrap();
        let uv = inner(&u, &v).unwrap();
        let vu = inner(&v, &u).unwrap();
        assert!((uv - vu.conj()).norm() < 1e-12);
        assert!((inner(&u, &u).unwrap().re - mass(&u)).abs() < 1e-12 * mass(&u));
        let other = Field::zeros(Grid::new(8, 4.0).unwrap());
        assert!(matches!(inner(&u, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn spectral_round_trip_and_parseval() {
        let g = Grid::new(16, 7.0).unwrap();
        let u = Field::from_fn(g, |x, y, z| Complex64::new((x * y).sin() + z, (x - 2.0 * z).cos()));
        let s = forward(&u);
        let back = inverse(&s);
        let scale = u.max_abs();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
        let spec_sum: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
        let p = spec_sum / g.volume();
        assert!((p - mass(&u)).abs() < 1e-12 * mass(&u));
    }

    #[test]
    fn spectral_convention_matches_direct_sum() {
        let g = Grid::new(8, 3.0).unwrap();
        let u = Field::from_fn(g, |x, y, z| Complex64::new((-(x * x + 2.0 * y * y + z * z)).exp(), 0.1 * x));
        let s = forward(&u);
        let h3 = g.cell_volume();
        for &bin in &[0usize, 5, 77, 300, 511] {
            let [a, b, c] = g.unravel(bin);
            let k = [g.wavenumber(a), g.wavenumber(b), g.wavenumber(c)];
            let mut acc = Complex64::default();
            for idx in 0..g.len() {
                let p = g.point(idx);
                let phase = -(k[0] * p[0] + k[1] * p[1] + k[2] * p[2]);
                acc += u.values()[idx] * Complex64::from_polar(h3, phase);
            }
            assert!((acc - s.coefficients()[bin]).norm() < 1e-12, "bin {bin}");
        }
    }

    #[test]
    fn new_rejects_bad_input() {
        let g = Grid::new(8, 1.0).unwrap();
        assert!(matches!(Field::new(g, vec![]), Err(Error::LengthMismatch { .. })));
        let mut v = vec![Complex64::default(); g.len()];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite(3))));
    }

    #[test]
    fn circular_shift_moves_samples() {
        let g = Grid::new(8, 1.0).unwrap();
        let mut u = Field::zeros(g);
        u.values_mut()[g.index(1, 2, 3)] = Complex64::new(1.0, 0.0);
        let s = u.circular_shift([2, -3, 5]);
        assert_eq!(s.values()[g.index(3, 7, 0)], Complex64::new(1.0, 0.0));
    }
}
