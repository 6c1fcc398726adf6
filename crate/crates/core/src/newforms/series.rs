use num_complex::Complex64;

use crate::arith::{divisor_counts, smallest_prime_factors};
use crate::characters::CharacterTable;
use crate::error::{Error, Result};

/// Label, weight, level and functional-equation sign of a newform with
/// trivial nebentype. The sign ε is the one in Λ(s) = ε Λ(k - s).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewformSpec {
    pub label: String,
    pub weight: u32,
    pub level: u64,
    pub sign: i8,
}

impl NewformSpec {
    pub fn new(label: impl Into<String>, weight: u32, level: u64, sign: i8) -> Result<Self> {
        if weight < 2 || weight % 2 != 0 {
            return Err(Error::InvalidInput(format!("weight must be even and >= 2, got {weight}")));
        }
        if level == 0 {
            return Err(Error::InvalidInput("level must be positive".into()));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidInput(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(Self { label: label.into(), weight, level, sign })
    }
}

/// Exact coefficients a_f(1..=B).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientSeries {
    spec: NewformSpec,
    coeffs: Vec<i128>,
}

impl CoefficientSeries {
    /// Requires a_f(1) = 1.
    pub fn new(spec: NewformSpec, coeffs: Vec<i128>) -> Result<Self> {
        if coeffs.first() != Some(&1) {
            return Err(Error::InvalidInput("series must be normalized: a(1) = 1".into()));
        }
        Ok(Self { spec, coeffs })
    }

    /// No normalization check; for synthetic series such as scaled copies.
    pub fn from_raw(spec: NewformSpec, coeffs: Vec<i128>) -> Self {
        Self { spec, coeffs }
    }

    pub fn spec(&self) -> &NewformSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.spec.label
    }

    pub fn weight(&self) -> u32 {
        self.spec.weight
    }

    pub fn level(&self) -> u64 {
        self.spec.level
    }

    pub fn sign(&self) -> i8 {
        self.spec.sign
    }

    pub fn bound(&self) -> usize {
        self.coeffs.len()
    }

    /// a_f(n) for 1 ≤ n ≤ B.
    pub fn a(&self, n: usize) -> i128 {
        self.coeffs[n - 1]
    }

    /// a_f(1..=B) in order.
    pub fn coefficients(&self) -> &[i128] {
        &self.coeffs
    }

    /// First `bound` coefficients.
    pub fn truncated(&self, bound: usize) -> Result<Self> {
        if bound > self.bound() {
            return Err(Error::InsufficientCoefficients { needed: bound, available: self.bound() });
        }
        Ok(Self { spec: self.spec.clone(), coeffs: self.coeffs[..bound].to_vec() })
    }

    /// Scaled copy λ·a_f(n), without normalization.
    pub fn scaled(&self, factor: i128) -> Self {
        Self::from_raw(self.spec.clone(), self.coeffs.iter().map(|a| a * factor).collect())
    }

    /// Termwise sum; both series must share weight and level.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.weight() != other.weight() || self.level() != other.level() {
            return Err(Error::InvalidInput("series differ in weight or level".into()));
        }
        let n = self.bound().min(other.bound());
        let coeffs = (0..n).map(|i| self.coeffs[i] + other.coeffs[i]).collect();
        Ok(Self::from_raw(self.spec.clone(), coeffs))
    }

    /// First n with a(mn) ≠ a(m)a(n) for some coprime split, if any.
    pub fn check_multiplicativity(&self) -> Option<usize> {
        let b = self.bound();
        let spf = smallest_prime_factors(b);
        for n in 2..=b {
            let q = spf[n] as usize;
            let mut qe = q;
            while (n / qe) % q == 0 {
                qe *= q;
            }
            let rest = n / qe;
            if rest > 1 && self.a(n) != self.a(qe) * self.a(rest) {
                return Some(n);
            }
        }
        None
    }

    /// First prime power q^{r+1} ≤ B violating the Hecke relation: the
    /// three-term recursion at q ∤ N, a(q^r) = a(q)^r at q | N.
    pub fn check_hecke(&self) -> Option<usize> {
        let b = self.bound();
        let spf = smallest_prime_factors(b);
        let k = self.weight();
        for q in 2..=b {
            if q * q > b {
                break;
            }
            if spf[q] as usize != q {
                continue;
            }
            let good = self.level() % q as u64 != 0;
            let qk = (q as i128).pow(k - 1);
            let mut prev = 1i128; // a(q^{r-1})
            let mut cur = self.a(q); // a(q^r)
            let mut power = q;
            while power <= b / q {
                let next_idx = power * q;
                let expect = if good {
                    self.a(q) * cur - qk * prev
                } else {
                    self.a(q) * cur
                };
                if self.a(next_idx) != expect {
                    return Some(next_idx);
                }
                prev = cur;
                cur = self.a(next_idx);
                power = next_idx;
            }
        }
        None
    }

    /// First n with |a(n)| > 2 d(n) n^{(k-1)/2}.
    pub fn check_coefficient_bound(&self) -> Option<usize> {
        let d = divisor_counts(self.bound());
        let k = self.weight() as f64;
        (1..=self.bound()).find(|&n| {
            let lim = 2.0 * d[n] as f64 * (n as f64).powf((k - 1.0) / 2.0);
            (self.a(n) as f64).abs() > lim * (1.0 + 1e-12)
        })
    }
}

/// n ↦ a_f(n)φ(n), evaluated on demand.
#[derive(Clone, Copy, Debug)]
pub struct TwistedCoefficients<'a> {
    series: &'a CoefficientSeries,
    phi: Option<&'a CharacterTable>,
}

impl<'a> TwistedCoefficients<'a> {
    pub fn a(&self, n: usize) -> Complex64 {
        let a = self.series.a(n) as f64;
        match self.phi {
            Some(phi) => phi.value(n as i64) * a,
            None => Complex64::new(a, 0.0),
        }
    }

    pub fn bound(&self) -> usize {
        self.series.bound()
    }
}

pub fn twist_coefficients<'a>(
    series: &'a CoefficientSeries,
    phi: Option<&'a CharacterTable>,
) -> TwistedCoefficients<'a> {
    TwistedCoefficients { series, phi }
}
