use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::arith::divisor_counts;
use crate::characters::CharacterTable;
use crate::error::{Error, Result};
use crate::newforms::CoefficientSeries;
use crate::numerics::{ln_gamma_factor, CutoffGrid, GammaFactorSpec, SmoothingKernel};

/// Terms are appended until this many consecutive envelope values fall
/// below tol/10.
const QUIET_RUN: usize = 10;
const MAX_TERMS: usize = 50_000_000;

/// d(1..=n), grown on demand and shared.
fn divisor_table(n: usize) -> Arc<Vec<u32>> {
    static TABLE: OnceLock<Mutex<Arc<Vec<u32>>>> = OnceLock::new();
    let cell = TABLE.get_or_init(|| Mutex::new(Arc::new(Vec::new())));
    let mut guard = cell.lock().unwrap_or_else(|e| e.into_inner());
    if guard.len() <= n {
        let len = (n + 1).max(2 * guard.len()).max(1 << 16);
        *guard = Arc::new(divisor_counts(len));
    }
    Arc::clone(&guard)
}

/// One AFE evaluation of L(s, f ⊗ ψ).
#[derive(Clone, Debug, PartialEq)]
pub struct LValueResult {
    pub s: Complex64,
    pub value: Complex64,
    pub y: f64,
    pub terms_first: usize,
    pub terms_second: usize,
    pub tail_estimate: f64,
    /// Floating-point noise floor: ε_mach·√(terms)·Σ|terms|.
    pub rounding_estimate: f64,
    pub flagged: bool,
    pub level: u64,
    pub p: Option<u64>,
    pub n: u32,
    pub conductor: f64,
}

/// Everything in the AFE that does not depend on the coefficients or the
/// character: m^{-s} V_{1,s}(m/y) and m^{-(k-s)} V_{2,k-s}(my/Q), the
/// truncation points and the tail estimates. One plan serves every
/// character of the same conductor.
#[derive(Clone, Debug)]
pub struct AfePlan {
    s: Complex64,
    weight: u32,
    y: f64,
    conductor: f64,
    tol: f64,
    inv_gamma_s: Complex64,
    // Q^{k/2 - s}
    dual_scale: Complex64,
    first: Vec<Complex64>,
    second: Vec<Complex64>,
    tail: f64,
}

fn check_strip(weight: u32, s: Complex64) -> Result<()> {
    let c = weight as f64 / 2.0;
    if !((s.re - c).abs() < 2.0) {
        return Err(Error::Precondition(format!(
            "AFE evaluation needs |Re s - k/2| < 2, got s = {s} with k = {weight}"
        )));
    }
    Ok(())
}

/// Σ_{j ≥ from} 2·2√j·j^{expo}|V(j·scale)|, sampled geometrically
/// (d(j) ≤ 2√j).
fn tail_beyond(grid: &CutoffGrid, from: usize, scale: f64, expo: f64, factor: f64) -> f64 {
    let (_, x_max) = grid.x_range();
    let mut tail = 0.0;
    let mut a = from as f64;
    while a * scale < x_max {
        let b = (a * 1.02).max(a + 1.0);
        let mid = 0.5 * (a + b);
        let env = 4.0 * mid.sqrt() * mid.powf(expo) * grid.value(mid * scale).norm() * factor;
        tail += env * (b - a);
        if env * mid < 1e-30 {
            break;
        }
        a = b;
    }
    tail
}

/// Values m^{-w} V(m·scale) until the envelope has been quiet for a run
/// and the tail bound beyond the cut is below tol/4, plus that bound.
fn tabulate(
    grid: &CutoffGrid,
    w: Complex64,
    scale: f64,
    envelope_factor: f64,
    weight: u32,
    tol: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let expo = (weight as f64 - 1.0) / 2.0 - w.re;
    let mut out: Vec<Complex64> = Vec::new();
    let push = |out: &mut Vec<Complex64>, m: usize| {
        let v = grid.value(m as f64 * scale);
        out.push(v * (-w * (m as f64).ln()).exp());
        v
    };
    let mut quiet = 0usize;
    let mut divisors = divisor_table(1 << 16);
    let mut m = 1usize;
    loop {
        if m >= divisors.len() {
            divisors = divisor_table(m);
        }
        let v = push(&mut out, m);
        let ln_m = (m as f64).ln();
        let env = 2.0 * divisors[m] as f64 * (expo * ln_m).exp() * v.norm() * envelope_factor;
        if env < tol / 10.0 {
            quiet += 1;
            if quiet >= QUIET_RUN {
                break;
            }
        } else {
            quiet = 0;
        }
        m += 1;
        if m > MAX_TERMS {
            return Err(Error::ToleranceUnreachable { tail: env, tol });
        }
    }
    let mut tail = tail_beyond(grid, m + 1, scale, expo, envelope_factor);
    while tail > tol / 4.0 {
        let next = (m + m / 16).max(m + 1);
        if next > MAX_TERMS {
            return Err(Error::ToleranceUnreachable { tail, tol });
        }
        for j in m + 1..=next {
            push(&mut out, j);
        }
        m = next;
        tail = tail_beyond(grid, m + 1, scale, expo, envelope_factor);
    }
    Ok((out, tail))
}

impl AfePlan {
    pub fn new(
        weight: u32,
        s: Complex64,
        y: f64,
        conductor: f64,
        tol: f64,
        ker: &SmoothingKernel,
    ) -> Result<Self> {
        check_strip(weight, s)?;
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidInput(format!("y must be positive, got {y}")));
        }
        if !(tol > 0.0) || tol < 1e-15 {
            return Err(Error::ToleranceUnreachable { tail: 1e-15, tol });
        }
        let spec = GammaFactorSpec::new(weight)?;
        let k = weight as f64;
        let ln_gamma_s = ln_gamma_factor(s)?;
        let inv_gamma_s = (-ln_gamma_s).exp();
        let abs_inv_gamma = inv_gamma_s.norm();
        let dual = Complex64::new(k, 0.0) - s;
        let dual_scale = ((k / 2.0 - s) * conductor.ln()).exp();

        let g1 = CutoffGrid::shared(1, s, ker, &spec)?;
        let g2 = CutoffGrid::shared(2, dual, ker, &spec)?;
        let (first, tail1) = tabulate(&g1, s, 1.0 / y, abs_inv_gamma, weight, tol)?;
        let (second, tail2) =
            tabulate(&g2, dual, y / conductor, abs_inv_gamma * dual_scale.norm(), weight, tol)?;
        Ok(Self {
            s,
            weight,
            y,
            conductor,
            tol,
            inv_gamma_s,
            dual_scale,
            first,
            second,
            tail: tail1 + tail2,
        })
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn conductor(&self) -> f64 {
        self.conductor
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn terms(&self) -> (usize, usize) {
        (self.first.len(), self.second.len())
    }

    /// Number of coefficients the plan consumes.
    pub fn required_bound(&self) -> usize {
        self.first.len().max(self.second.len())
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    /// Σ a(m) χ(m) first[m] and Σ a(m) χ̄(m) second[m].
    fn sums(&self, series: &CoefficientSeries, phi: Option<&CharacterTable>) -> (Complex64, Complex64) {
        let coeffs = series.coefficients();
        let mut a_sum = Complex64::new(0.0, 0.0);
        let mut b_sum = Complex64::new(0.0, 0.0);
        match phi {
            None => {
                for (a, v) in coeffs.iter().zip(&self.first) {
                    a_sum += v * *a as f64;
                }
                for (a, v) in coeffs.iter().zip(&self.second) {
                    b_sum += v * *a as f64;
                }
            }
            Some(phi) => {
                let tables = phi.tables();
                let order = phi.order();
                let e = phi.exponent();
                for (i, (a, v)) in coeffs.iter().zip(&self.first).enumerate() {
                    if let Some(l) = tables.log(i as i64 + 1) {
                        a_sum += v * tables.zeta_pow(l * e % order) * *a as f64;
                    }
                }
                for (i, (a, v)) in coeffs.iter().zip(&self.second).enumerate() {
                    if let Some(l) = tables.log(i as i64 + 1) {
                        b_sum += v * tables.zeta_pow(order - l * e % order) * *a as f64;
                    }
                }
            }
        }
        (a_sum, b_sum)
    }

    /// (1/Γ(s)) Σ a(m) w1(m) m^{-s} V₁(m/y) and
    /// (Q^{k/2-s}/Γ(s)) Σ a(m) w2(m) m^{-(k-s)} V₂(my/Q), summed in order.
    pub fn weighted_sums(
        &self,
        series: &CoefficientSeries,
        w1: impl Fn(usize) -> Complex64,
        w2: impl Fn(usize) -> Complex64,
    ) -> Result<(Complex64, Complex64)> {
        let needed = self.required_bound();
        if series.bound() < needed {
            return Err(Error::InsufficientCoefficients { needed, available: series.bound() });
        }
        let coeffs = series.coefficients();
        let mut a_sum = Complex64::new(0.0, 0.0);
        for (i, v) in self.first.iter().enumerate() {
            a_sum += v * w1(i + 1) * coeffs[i] as f64;
        }
        let mut b_sum = Complex64::new(0.0, 0.0);
        for (i, v) in self.second.iter().enumerate() {
            b_sum += v * w2(i + 1) * coeffs[i] as f64;
        }
        Ok((a_sum * self.inv_gamma_s, b_sum * self.dual_scale * self.inv_gamma_s))
    }

    /// L(s, f ⊗ ψ) with dual constant `root` (ε for the untwisted form,
    /// ε ψ(N) G(ψ)² / p^n for a primitive twist).
    pub fn evaluate(
        &self,
        series: &CoefficientSeries,
        phi: Option<&CharacterTable>,
        root: Complex64,
    ) -> Result<LValueResult> {
        if series.weight() != self.weight {
            return Err(Error::InvalidInput(format!(
                "plan is for weight {}, series has weight {}",
                self.weight,
                series.weight()
            )));
        }
        let needed = self.required_bound();
        if series.bound() < needed {
            return Err(Error::InsufficientCoefficients { needed, available: series.bound() });
        }
        let (a_sum, b_sum) = self.sums(series, phi);
        let value = (a_sum + root * self.dual_scale * b_sum) * self.inv_gamma_s;
        let coeffs = series.coefficients();
        let magnitude = |vals: &[Complex64]| -> f64 {
            coeffs.iter().zip(vals).map(|(a, v)| (*a as f64).abs() * v.norm()).sum()
        };
        let total = magnitude(&self.first) + self.dual_scale.norm() * magnitude(&self.second);
        let terms = (self.first.len() + self.second.len()) as f64;
        let rounding = f64::EPSILON * terms.sqrt() * total * self.inv_gamma_s.norm();
        Ok(LValueResult {
            s: self.s,
            value,
            y: self.y,
            terms_first: self.first.len(),
            terms_second: self.second.len(),
            tail_estimate: self.tail,
            rounding_estimate: rounding,
            flagged: !(self.tail < self.tol),
            level: series.level(),
            p: phi.map(|c| c.p()),
            n: phi.map_or(0, |c| c.n()),
            conductor: self.conductor,
        })
    }
}

/// Conductor N p^{2n} of f ⊗ ψ (N when untwisted).
pub fn twisted_conductor(series: &CoefficientSeries, phi: Option<&CharacterTable>) -> f64 {
    let n = series.level() as f64;
    match phi {
        Some(c) => n * (c.conductor() as f64).powi(2),
        None => n,
    }
}
