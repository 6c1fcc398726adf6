//! Special functions, quadrature and the AFE cutoff.

pub mod cutoff;
pub mod gamma;
pub mod kernel;
pub mod quadrature;

pub use cutoff::{cutoff_v, cutoff_v_on_line, CutoffGrid, CutoffIntegrator, CutoffValue};
pub use gamma::{gamma, gamma_factor, ln_gamma, ln_gamma_factor, GammaFactorSpec};
pub use kernel::{mellin_phi, mellin_phi_scale, SmoothingKernel};
