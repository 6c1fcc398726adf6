//! Complex Gamma function and the archimedean factor of a holomorphic form over ℚ.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;

/// Lanczos coefficients for g = 7, n = 9 (Godfrey). Relative error is below
/// 2e-15 on the right half plane.
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// True when `z` is one of the poles 0, -1, -2, ... of Γ.
pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// A branch of log Γ(z). Only `exp` of the result is meaningful to callers,
/// so the branch is not normalized across the reflection formula.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if is_gamma_pole(z) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::GammaPole { re: z.re, im: z.im });
    }
    Ok(ln_gamma_unchecked(z))
}

fn ln_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1-z) = π / sin(πz)
        let sin_pz = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0) - sin_pz.ln() - ln_gamma_unchecked(1.0 - z);
    }
    let z = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// Γ(z) for complex z; errors at the poles instead of returning infinity.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    ln_gamma(z).map(|l| l.exp())
}

/// Weight data entering the archimedean factor. Over ℚ with all real places in
/// the sign set, the index constant is 1 and the archimedean sign W_f is +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GammaFactorSpec {
    weight: u32,
}

impl GammaFactorSpec {
    pub fn new(weight: u32) -> Result<Self> {
        if weight < 2 {
            return Err(Error::InvalidInput(format!("weight must be at least 2, got {weight}")));
        }
        Ok(Self { weight })
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// The holomorphic specialization fixes the shift to zero.
    pub fn m_shift(&self) -> u32 {
        0
    }

    /// The archimedean sign W_f; +1 over ℚ with J = Σ(ℝ).
    pub fn archimedean_sign(&self) -> f64 {
        1.0
    }
}

/// log Γ(s, f) = log Γ(s) - s log 2π.
pub fn ln_gamma_factor(s: Complex64) -> Result<Complex64> {
    Ok(ln_gamma(s)? - s * (2.0 * PI).ln())
}

/// Γ(s, f) = Γ(s) / (2π)^s.
pub fn gamma_factor(s: Complex64, spec: &GammaFactorSpec) -> Result<Complex64> {
    let shifted = s - spec.m_shift() as f64;
    ln_gamma_factor(shifted).map(|l| l.exp())
}
