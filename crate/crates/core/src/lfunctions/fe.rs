use num_complex::Complex64;

use super::afe::AfePlan;
use super::DEFAULT_TOL;
use crate::characters::{twist_root_number, CharacterTable};
use crate::error::{Error, Result};
use crate::newforms::CoefficientSeries;
use crate::numerics::{ln_gamma_factor, GammaFactorSpec, SmoothingKernel};

/// Both sides of a residual check use y = FE_TEST_Y_FACTOR·√Q. Taking the
/// same y on each side (rather than y and Q/y) keeps the comparison from
/// collapsing to an identity of the AFE itself.
pub const FE_TEST_Y_FACTOR: f64 = 1.25;

/// Data of the functional equation of f ⊗ ψ:
/// Λ(s, f ⊗ ψ) = C Λ(k - s, f ⊗ ψ̄) with C = W_f ε W(ψ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwistedFESpec {
    /// p^{-n} G(ψ)² ψ(N), or 1 untwisted.
    pub w_phi: Complex64,
    pub epsilon: i8,
    pub archimedean_sign: f64,
    /// N p^{2n}.
    pub conductor: f64,
}

impl TwistedFESpec {
    pub fn new(series: &CoefficientSeries, phi: Option<&CharacterTable>) -> Result<Self> {
        let arch = GammaFactorSpec::new(series.weight())?.archimedean_sign();
        let level = series.level();
        let (w_phi, conductor) = match phi {
            None => (Complex64::new(1.0, 0.0), level as f64),
            Some(c) => {
                if !c.is_primitive() {
                    return Err(Error::Precondition(format!(
                        "twisted functional equation needs a primitive character, got {c:?}"
                    )));
                }
                let q = c.conductor() as f64;
                (twist_root_number(c, level)?, level as f64 * q * q)
            }
        };
        Ok(Self { w_phi, epsilon: series.sign(), archimedean_sign: arch, conductor })
    }

    pub fn constant(&self) -> Complex64 {
        self.w_phi * (self.archimedean_sign * self.epsilon as f64)
    }
}

/// Q^{s/2} Γ(s, f) L(s, f ⊗ ψ) at the balanced y = √Q.
pub fn completed_lambda(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
) -> Result<Complex64> {
    let spec = TwistedFESpec::new(series, phi)?;
    let l = super::afe_value(series, phi, s, None, DEFAULT_TOL)?;
    Ok(lambda_factor(spec.conductor, s)? * l.value)
}

fn lambda_factor(conductor: f64, s: Complex64) -> Result<Complex64> {
    Ok((s * 0.5 * conductor.ln() + ln_gamma_factor(s)?).exp())
}

/// Outcome of comparing Λ(s, f ⊗ ψ) with C Λ(k - s, f ⊗ ψ̄).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeCheck {
    pub lambda: Complex64,
    pub lambda_dual: Complex64,
    pub constant: Complex64,
    /// |Λ(s) - C Λ(k - s)| / (Q^{Re s / 2} |Γ(s, f)|), i.e. in units of L(s).
    pub residual: f64,
    pub raw_residual: f64,
    pub tail_estimate: f64,
}

fn lambda_at(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
    root: Complex64,
    conductor: f64,
    ker: &SmoothingKernel,
) -> Result<(Complex64, f64)> {
    let y = FE_TEST_Y_FACTOR * conductor.sqrt();
    let plan = AfePlan::new(series.weight(), s, y, conductor, DEFAULT_TOL, ker)?;
    let l = plan.evaluate(series, phi, root)?;
    Ok((lambda_factor(conductor, s)? * l.value, l.tail_estimate))
}

/// Functional-equation check at s. Each Λ is an independent AFE run with
/// its own root number. `compare_with` replaces C in the final comparison
/// only (for sign-sensitivity controls).
pub fn fe_check(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
    compare_with: Option<Complex64>,
    ker: &SmoothingKernel,
) -> Result<FeCheck> {
    let spec = TwistedFESpec::new(series, phi)?;
    let dual_phi = phi.map(|c| c.conj());
    let dual_spec = TwistedFESpec::new(series, dual_phi.as_ref())?;
    let k = series.weight() as f64;
    let dual_s = Complex64::new(k, 0.0) - s;
    let (lambda, t1) = lambda_at(series, phi, s, spec.constant(), spec.conductor, ker)?;
    let (lambda_dual, t2) =
        lambda_at(series, dual_phi.as_ref(), dual_s, dual_spec.constant(), spec.conductor, ker)?;
    let constant = compare_with.unwrap_or(spec.constant());
    let raw = (lambda - constant * lambda_dual).norm();
    let scale = lambda_factor(spec.conductor, Complex64::new(s.re, 0.0))?.norm()
        * (ln_gamma_factor(s)?.re - ln_gamma_factor(Complex64::new(s.re, 0.0))?.re).exp();
    Ok(FeCheck {
        lambda,
        lambda_dual,
        constant,
        residual: raw / scale,
        raw_residual: raw,
        tail_estimate: t1 + t2,
    })
}

/// Normalized residual |Λ(s, f ⊗ ψ) - C Λ(k - s, f ⊗ ψ̄)| / (Q^{Re s/2}|Γ(s, f)|).
pub fn twisted_fe_residual(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
) -> Result<f64> {
    Ok(fe_check(series, phi, s, None, &SmoothingKernel::default())?.residual)
}

/// Off-centre point used to read off ε.
fn sign_test_point(weight: u32) -> Complex64 {
    Complex64::new(weight as f64 / 2.0 + 0.3, 0.7)
}

/// The sign ε in Λ(s) = ε Λ(k - s), found by running the FE check with
/// each candidate. The stored sign of `series` is ignored.
pub fn fricke_sign(series: &CoefficientSeries) -> Result<i8> {
    let s0 = sign_test_point(series.weight());
    let ker = SmoothingKernel::default();
    let mut residual = [0.0f64; 2];
    for (slot, eps) in [1i8, -1].into_iter().enumerate() {
        let mut spec = series.spec().clone();
        spec.sign = eps;
        let trial = CoefficientSeries::from_raw(spec, series.coefficients().to_vec());
        residual[slot] = fe_check(&trial, None, s0, None, &ker)?.residual;
    }
    let [plus, minus] = residual;
    match (plus < 1e-6 && minus > 1e-2, minus < 1e-6 && plus > 1e-2) {
        (true, _) => Ok(1),
        (_, true) => Ok(-1),
        _ => Err(Error::AmbiguousSign { plus, minus }),
    }
}
