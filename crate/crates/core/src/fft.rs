//! Three-dimensional FFTs on cubic arrays stored with x fastest.
//!
//! Transforms are unnormalized in both directions; callers apply the
//! physical weights (`h³` forward, `L⁻³` inverse). The padded variants skip
//! lines that are known to be zero on input (forward) or discarded on
//! output (inverse), which is what the free-space convolution needs.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        let n = self.n;
        self.axis0(data, Direction::Forward, n, n);
        self.axis1(data, Direction::Forward, n, n);
        self.axis2(data, Direction::Forward, n, n);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        let n = self.n;
        self.axis2(data, Direction::Inverse, n, n);
        self.axis1(data, Direction::Inverse, n, n);
        self.axis0(data, Direction::Inverse, n, n);
    }

    /// Forward transform of an array whose nonzero entries all lie in the
    /// corner cube `[0, active)³`.
    pub fn forward_padded(&self, data: &mut [Complex64], active: usize) {
        let n = self.n;
        self.axis0(data, Direction::Forward, active, active);
        self.axis1(data, Direction::Forward, n, active);
        self.axis2(data, Direction::Forward, n, n);
    }

    /// Inverse transform that is only correct on the corner cube
    /// `[0, active)³`; everything else is left in an intermediate state.
    pub fn inverse_cropped(&self, data: &mut [Complex64], active: usize) {
        let n = self.n;
        self.axis2(data, Direction::Inverse, n, n);
        self.axis1(data, Direction::Inverse, n, active);
        self.axis0(data, Direction::Inverse, active, active);
    }

    fn plan(&self, dir: Direction) -> &Arc<dyn Fft<f64>> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        }
    }

    /// Lines along x for y < ny, z < nz.
    fn axis0(&self, data: &mut [Complex64], dir: Direction, ny: usize, nz: usize) {
        let n = self.n;
        let plan = self.plan(dir);
        data.par_chunks_mut(n * n)
            .take(nz)
            .for_each_init(
                || vec![Complex64::default(); plan.get_inplace_scratch_len()],
                |scratch, plane| plan.process_with_scratch(&mut plane[..ny * n], scratch),
            );
    }

    /// Lines along y for x < nx, z < nz.
    fn axis1(&self, data: &mut [Complex64], dir: Direction, nx: usize, nz: usize) {
        let n = self.n;
        let plan = self.plan(dir);
        data.par_chunks_mut(n * n).take(nz).for_each_init(
            || {
                (
                    vec![Complex64::default(); n * n],
                    vec![Complex64::default(); plan.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), plane| {
                for y in 0..n {
                    let row = &plane[y * n..y * n + nx];
                    for (x, v) in row.iter().enumerate() {
                        buf[x * n + y] = *v;
                    }
                }
                plan.process_with_scratch(&mut buf[..nx * n], scratch);
                for y in 0..n {
                    let row = &mut plane[y * n..y * n + nx];
                    for (x, v) in row.iter_mut().enumerate() {
                        *v = buf[x * n + y];
                    }
                }
            },
        );
    }

    /// Lines along z for all x, y.
    fn axis2(&self, data: &mut [Complex64], dir: Direction, nx: usize, ny: usize) {
        let n = self.n;
        let plan = self.plan(dir);
        let mut buf = vec![Complex64::default(); nx * n];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for y in 0..ny {
            for z in 0..n {
                let base = n * (y + n * z);
                for x in 0..nx {
                    buf[x * n + z] = data[base + x];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for z in 0..n {
                let base = n * (y + n * z);
                for x in 0..nx {
                    data[base + x] = buf[x * n + z];
                }
            }
        }
    }
}
