//! L(s, f ⊗ ψ) through the approximate functional equation, the completed
//! Λ, and functional-equation residuals.

mod afe;
mod direct;
mod fe;

use num_complex::Complex64;

pub use afe::{twisted_conductor, AfePlan, LValueResult};
pub use direct::{direct_value, in_convergence_region, smooth_step, smoothed_direct_value};
pub use fe::{
    completed_lambda, fe_check, fricke_sign, twisted_fe_residual, FeCheck, TwistedFESpec,
    FE_TEST_Y_FACTOR,
};

use crate::characters::CharacterTable;
use crate::error::Result;
use crate::newforms::CoefficientSeries;
use crate::numerics::SmoothingKernel;

/// Default truncation tolerance, in units of L(s).
pub const DEFAULT_TOL: f64 = 1e-13;

/// L(s, f ⊗ ψ) by the AFE with balance parameter `y` (√Q when None).
pub fn afe_value(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
    y: Option<f64>,
    tol: f64,
) -> Result<LValueResult> {
    afe_value_with(series, phi, s, y, tol, &SmoothingKernel::default())
}

/// As [`afe_value`] with an explicit smoothing kernel and contour setup.
pub fn afe_value_with(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
    y: Option<f64>,
    tol: f64,
    ker: &SmoothingKernel,
) -> Result<LValueResult> {
    let spec = TwistedFESpec::new(series, phi)?;
    let y = y.unwrap_or(spec.conductor.sqrt());
    let plan = AfePlan::new(series.weight(), s, y, spec.conductor, tol, ker)?;
    plan.evaluate(series, phi, spec.constant())
}
