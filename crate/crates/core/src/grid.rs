use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;

/// Periodic cube of side `length` centred on the origin, sampled with `n`
/// points per axis.
///
/// Sample `i` along an axis sits at `i·h − L/2`, so the origin is the grid
/// point `i = n/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::OddGridSize(n));
        }
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::BadLength(length));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// Number of samples, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing() - 0.5 * self.length
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.unravel(idx);
        [self.coordinate(ix), self.coordinate(iy), self.coordinate(iz)]
    }

    /// Signed mode number `m̃ ∈ {−N/2, …, N/2−1}` of FFT bin `j`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.length
    }

    /// Per-axis wavenumbers in FFT bin order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    pub fn min_nonzero_wavenumber(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest per-axis wavenumber magnitude, `π/h`.
    pub fn max_wavenumber(&self) -> f64 {
        PI / self.spacing()
    }

    /// `|k|²` for every FFT bin, in storage order.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        let n = self.n;
        let mut out = Vec::with_capacity(self.len());
        for kz in &k {
            for ky in &k {
                for kx in &k {
                    out.push(kx * kx + ky * ky + kz * kz);
                }
            }
        }
        debug_assert_eq!(out.len(), n * n * n);
        out
    }

    pub(crate) fn fft(&self) -> Fft3 {
        fft_plan(self.n)
    }
}

pub(crate) fn fft_plan(n: usize) -> Fft3 {
    static PLANS: OnceLock<Mutex<HashMap<usize, Fft3>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard.entry(n).or_insert_with(|| Fft3::new(n)).clone()
}
