//! Seeded random smooth fields.
//!
//! A field is a continuous function (a sum of complex Gaussian bumps near
//! the origin), so the same draw can be sampled on grids of different
//! resolution, which the refinement checks rely on.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::Field;
use crate::grid::Grid;

/// Generator for stream `stream` of `seed`; distinct streams are
/// independent.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Width range of [`SmoothRandomField::generate`], as fractions of `L`.
pub const DEFAULT_WIDTHS: (f64, f64) = (1.0 / 24.0, 1.0 / 14.0);

#[derive(Clone, Debug)]
struct Bump {
    center: [f64; 3],
    width: f64,
    amplitude: Complex64,
}

#[derive(Clone, Debug)]
pub struct SmoothRandomField {
    bumps: Vec<Bump>,
}

impl SmoothRandomField {
    /// Two to five bumps with centres within `L/8` of the origin and widths
    /// in `[L/24, L/14]`, so samples on the box faces are below ~1e−6 of the
    /// peak.
    pub fn generate(seed: u64, grid: &Grid) -> Self {
        Self::generate_with(&mut rng(seed, 0), grid.length(), DEFAULT_WIDTHS)
    }

    /// Bump widths drawn from `widths` (fractions of the box length).
    pub fn generate_with<R: Rng>(rng: &mut R, length: f64, widths: (f64, f64)) -> Self {
        let count = rng.gen_range(2..=5);
        let bumps = (0..count)
            .map(|_| {
                let center = loop {
                    let c: [f64; 3] = [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ];
                    let r2: f64 = c.iter().map(|v| v * v).sum();
                    if r2 <= 1.0 {
                        break c.map(|v| v * length / 8.0);
                    }
                };
                let width = length * rng.gen_range(widths.0..widths.1);
                let amplitude =
                    Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * PI));
                Bump {
                    center,
                    width,
                    amplitude,
                }
            })
            .collect();
        Self { bumps }
    }

    pub fn value(&self, x: f64, y: f64, z: f64) -> Complex64 {
        self.bumps
            .iter()
            .map(|b| {
                let d2 = (x - b.center[0]).powi(2) + (y - b.center[1]).powi(2) + (z - b.center[2]).powi(2);
                b.amplitude * (-d2 / (2.0 * b.width * b.width)).exp()
            })
            .sum()
    }

    pub fn sample(&self, grid: &Grid) -> Field {
        Field::from_fn(*grid, |x, y, z| self.value(x, y, z))
    }
}
