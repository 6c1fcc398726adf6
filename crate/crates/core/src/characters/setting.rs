use crate::arith::{is_prime, pow_mod};
use crate::error::{Error, Result};

/// The base field ℚ: class number 1, trivial different, discriminant 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BaseFieldQ;

impl BaseFieldQ {
    pub const CLASS_NUMBER: u64 = 1;
    pub const DISCRIMINANT: u64 = 1;

    /// Accepts field data only if it is that of ℚ.
    pub fn from_data(class_number: u64, discriminant: u64, degree: u32) -> Result<Self> {
        if class_number != 1 || discriminant != 1 || degree != 1 {
            return Err(Error::InvalidInput(format!(
                "only Q is supported (h = 1, D = 1, degree 1); got h = {class_number}, \
                 D = {discriminant}, degree {degree}"
            )));
        }
        Ok(Self)
    }

    pub fn class_number(&self) -> u64 {
        Self::CLASS_NUMBER
    }

    pub fn discriminant(&self) -> u64 {
        Self::DISCRIMINANT
    }

    /// Representatives 𝔞_i of the class group, as generators: just 1.
    pub fn class_representatives(&self) -> Vec<u64> {
        vec![1]
    }

    /// The elements b_j and α_j attached to the class representatives.
    pub fn class_units(&self) -> Vec<(u64, u64)> {
        vec![(1, 1)]
    }
}

/// An odd prime p together with the reference depth n₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeSetting {
    p: u64,
    n0: u32,
}

impl PrimeSetting {
    pub fn new(p: u64, n0: u32) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::InvalidInput(format!("p must be an odd prime, got {p}")));
        }
        if n0 == 0 {
            return Err(Error::InvalidInput("n0 must be positive".into()));
        }
        Ok(Self { p, n0 })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn field(&self) -> BaseFieldQ {
        BaseFieldQ
    }
}

/// The p - 1 Teichmüller lifts in (ℤ/p^n)^×.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeichmullerSet {
    modulus: u64,
    lifts: Vec<u64>,
}

impl TeichmullerSet {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        let modulus = p.pow(n);
        let e = p.pow(n - 1);
        // a^{p^{n-1}} is the lift of a mod p
        let lifts = (1..p).map(|a| pow_mod(a, e, modulus)).collect();
        Ok(Self { modulus, lifts })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Lift of a mod p, for a = 1..p-1, in that order.
    pub fn lifts(&self) -> &[u64] {
        &self.lifts
    }

    pub fn len(&self) -> usize {
        self.lifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lifts.is_empty()
    }

    pub fn contains(&self, a: u64) -> bool {
        self.lifts.contains(&(a % self.modulus))
    }
}

/// Count of positive integers m ≤ x in a residue class mod p^{n-n₀},
/// against the bound 2·max{x/p^{n-n₀}, 1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeCount {
    pub modulus: u64,
    pub count: u64,
    pub bound: f64,
    pub violated: bool,
}

pub fn cone_bound_check(a: i64, p: u64, n: u32, n0: u32, x: f64) -> Result<ConeCount> {
    if n <= n0 {
        return Err(Error::Precondition(format!("need n > n0, got n = {n}, n0 = {n0}")));
    }
    let modulus = p.pow(n - n0);
    let r = a.rem_euclid(modulus as i64) as u64;
    let first = if r == 0 { modulus } else { r };
    let count = if x < first as f64 {
        0
    } else {
        ((x - first as f64) / modulus as f64).floor() as u64 + 1
    };
    let bound = 2.0 * (x / modulus as f64).max(1.0);
    Ok(ConeCount { modulus, count, bound, violated: count as f64 > bound })
}

/// Smallest α ≤ `search` with α^m ≡ γ (mod c) but α^m ≠ γ, together with
/// the lower bound α ≥ (c - |γ|)^{1/m} that such α must satisfy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerCongruence {
    pub smallest: Option<u64>,
    pub lower_bound: f64,
}

pub fn power_congruence_floor(gamma: i64, m: u32, c: u64, search: u64) -> PowerCongruence {
    let target = gamma.rem_euclid(c as i64) as u64;
    let mut smallest = None;
    for alpha in 1..=search {
        if pow_mod(alpha, m as u64, c) == target {
            let exact = (alpha as f64).powi(m as i32);
            if exact != gamma as f64 {
                smallest = Some(alpha);
                break;
            }
        }
    }
    let lower_bound = ((c as f64 - gamma.unsigned_abs() as f64).max(0.0)).powf(1.0 / m as f64);
    PowerCongruence { smallest, lower_bound }
}
