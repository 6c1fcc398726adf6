use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::setting::PrimeSetting;
use crate::arith::{gcd, pow_mod, prime_factors};
use crate::error::{Error, Result};

const NON_UNIT: u32 = u32::MAX;

/// Discrete logarithms and roots of unity for one modulus p^n.
pub struct ModulusTables {
    p: u64,
    n: u32,
    modulus: u64,
    order: u64,
    generator: u64,
    // a ↦ log_g(a) mod p^{n-1}, NON_UNIT when p | a
    log: Vec<u32>,
    // j ↦ e(j / p^n)
    roots: Vec<Complex64>,
}

impl fmt::Debug for ModulusTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModulusTables")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("generator", &self.generator)
            .finish()
    }
}

/// A generator of (ℤ/p^n)^× for every n ≥ 1.
pub fn primitive_root(p: u64) -> u64 {
    let factors = prime_factors(p - 1);
    let mut g = 2;
    loop {
        if factors.iter().all(|q| pow_mod(g, (p - 1) / q, p) != 1) {
            break;
        }
        g += 1;
    }
    if pow_mod(g, p - 1, p * p) == 1 {
        g + p
    } else {
        g
    }
}

impl ModulusTables {
    fn build(p: u64, n: u32) -> Result<Self> {
        let modulus = p
            .checked_pow(n)
            .filter(|&m| m <= 1 << 26)
            .ok_or_else(|| Error::InvalidInput(format!("modulus {p}^{n} is too large")))?;
        let order = modulus / p;
        let generator = primitive_root(p) % modulus;
        let mut log = vec![NON_UNIT; modulus as usize];
        let group_order = modulus - order;
        let mut x = 1u64;
        for i in 0..group_order {
            log[x as usize] = (i % order) as u32;
            x = x * generator % modulus;
        }
        let roots = (0..modulus)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / modulus as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Ok(Self { p, n, modulus, order, generator, log, roots })
    }

    /// Shared tables for p^n, built once per process.
    pub fn get(p: u64, n: u32) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Arc<ModulusTables>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = guard.get(&(p, n)) {
            return Ok(Arc::clone(t));
        }
        let t = Arc::new(Self::build(p, n)?);
        guard.insert((p, n), Arc::clone(&t));
        Ok(t)
    }

    /// A private copy with the logarithm of one residue overwritten. Only
    /// meant for negative controls: the result is not a character table.
    pub fn corrupted(&self, residue: u64, log: u32) -> Arc<Self> {
        let mut copy = Self {
            p: self.p,
            n: self.n,
            modulus: self.modulus,
            order: self.order,
            generator: self.generator,
            log: self.log.clone(),
            roots: self.roots.clone(),
        };
        copy.log[(residue % self.modulus) as usize] = log % self.order as u32;
        Arc::new(copy)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// p^{n-1}, the order of the p-part of the unit group.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// log_g(a) mod p^{n-1}, or None when p | a.
    pub fn log(&self, a: i64) -> Option<u64> {
        let r = a.rem_euclid(self.modulus as i64) as usize;
        match self.log[r] {
            NON_UNIT => None,
            l => Some(l as u64),
        }
    }

    /// e(j / p^n) for any integer j.
    pub fn root(&self, j: i64) -> Complex64 {
        self.roots[j.rem_euclid(self.modulus as i64) as usize]
    }

    /// ζ^x with ζ = e(1/p^{n-1}).
    pub fn zeta_pow(&self, x: u64) -> Complex64 {
        self.roots[((x % self.order) * self.p) as usize]
    }
}

/// A primitive Dirichlet character mod p^n of order p^{n-1}, stored as the
/// exponent e with φ(g) = e(e / p^{n-1}).
#[derive(Clone)]
pub struct CharacterTable {
    tables: Arc<ModulusTables>,
    exponent: u64,
}

impl fmt::Debug for CharacterTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CharacterTable(mod {}^{}, e = {})", self.p(), self.n(), self.exponent)
    }
}

impl PartialEq for CharacterTable {
    fn eq(&self, other: &Self) -> bool {
        self.p() == other.p() && self.n() == other.n() && self.exponent == other.exponent
    }
}

impl Eq for CharacterTable {}

/// Value of a character at an integer, with the exact exponent when the
/// argument is a unit: value = ζ^exponent, ζ = e(1/p^{n-1}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharValue {
    pub value: Complex64,
    pub exponent: Option<u64>,
}

impl CharacterTable {
    /// Character with φ(g) = ζ^e. Requires n ≥ 2 and p ∤ e.
    pub fn new(p: u64, n: u32, exponent: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "primitive p-power-order characters need conductor exponent n >= 2, got {n}"
            )));
        }
        let tables = ModulusTables::get(p, n)?;
        let exponent = exponent % tables.order;
        if gcd(exponent, p) != 1 {
            return Err(Error::InvalidInput(format!(
                "exponent {exponent} is divisible by {p}: character is not primitive"
            )));
        }
        Ok(Self { tables, exponent })
    }

    /// Build on explicitly supplied tables without validation.
    pub fn with_tables(tables: Arc<ModulusTables>, exponent: u64) -> Self {
        let exponent = exponent % tables.order;
        Self { tables, exponent }
    }

    pub fn tables(&self) -> &Arc<ModulusTables> {
        &self.tables
    }

    pub fn p(&self) -> u64 {
        self.tables.p
    }

    pub fn n(&self) -> u32 {
        self.tables.n
    }

    pub fn conductor(&self) -> u64 {
        self.tables.modulus
    }

    /// The order p^{n-1}.
    pub fn order(&self) -> u64 {
        self.tables.order
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn generator(&self) -> u64 {
        self.tables.generator
    }

    pub fn is_primitive(&self) -> bool {
        self.exponent % self.p() != 0
    }

    /// φ^t.
    pub fn pow(&self, t: u64) -> Self {
        Self::with_tables(
            Arc::clone(&self.tables),
            (self.exponent as u128 * t as u128 % self.order() as u128) as u64,
        )
    }

    /// The conjugate character φ̄.
    pub fn conj(&self) -> Self {
        Self::with_tables(Arc::clone(&self.tables), self.order() - self.exponent)
    }

    /// Exponent x with φ(a) = ζ^x, or None when p | a.
    pub fn exponent_at(&self, a: i64) -> Option<u64> {
        self.tables
            .log(a)
            .map(|l| (l as u128 * self.exponent as u128 % self.order() as u128) as u64)
    }

    /// φ(a), exactly 0 when p | a.
    pub fn evaluate(&self, a: i64) -> CharValue {
        match self.exponent_at(a) {
            Some(x) => CharValue { value: self.tables.zeta_pow(x), exponent: Some(x) },
            None => CharValue { value: Complex64::new(0.0, 0.0), exponent: None },
        }
    }

    /// φ(a) as a complex number.
    pub fn value(&self, a: i64) -> Complex64 {
        self.evaluate(a).value
    }

    /// φ(a)·e(b/p^n) computed from one root-table lookup; 0 when p | a.
    pub fn twisted_root(&self, a: i64, b: i64) -> Complex64 {
        match self.exponent_at(a) {
            Some(x) => self.tables.root(x as i64 * self.p() as i64 + b),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

/// All primitive characters of p-power order and conductor p^n, in
/// increasing exponent order.
pub fn enumerate_characters(setting: &PrimeSetting, n: u32) -> Result<Vec<CharacterTable>> {
    if n == 0 {
        return Err(Error::InvalidInput("conductor exponent must be at least 1".into()));
    }
    if n == 1 {
        return Ok(Vec::new());
    }
    let p = setting.p();
    let tables = ModulusTables::get(p, n)?;
    Ok((1..tables.order)
        .filter(|e| e % p != 0)
        .map(|e| CharacterTable::with_tables(Arc::clone(&tables), e))
        .collect())
}

/// φ(a) for the character `phi`.
pub fn evaluate(phi: &CharacterTable, a: i64) -> CharValue {
    phi.evaluate(a)
}
