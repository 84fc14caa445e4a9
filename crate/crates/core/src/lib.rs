//! Numerical toolkit for the Hartree energy
//! `E(u) = ½‖∇u‖² + ¼∬|u(x)|² w(x−y) |u(y)|² dx dy` on a periodic cube
//! with free-space convolution: kernel catalogue and Fourier symbols,
//! Lorentz-space norms, constrained minimization and Strang-split
//! dynamics.

pub mod energy;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod kernels;
pub mod lorentz;
pub mod quadrature;
pub mod random;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use energy::{EnergyBreakdown, Evaluation, Hartree};
pub use error::{Error, Result};
pub use field::{Field, RealField, SpectralField};
pub use grid::Grid;
pub use kernels::{KernelSpec, RadialKernel};
