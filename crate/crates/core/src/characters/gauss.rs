use num_complex::Complex64;

use super::setting::PrimeSetting;
use super::table::{CharacterTable, ModulusTables};
use crate::arith::{gcd, inv_mod};
use crate::error::{Error, Result};

/// The unit c_φ mod p^{n₀} with φ(1 + p^{n-n₀}) = e(c_φ / p^{n₀}).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdditiveParameter {
    pub c: u64,
    pub n0: u32,
    pub modulus: u64,
}

fn require_depth(phi: &CharacterTable, n0: u32) -> Result<()> {
    if n0 == 0 || phi.n() <= n0 {
        return Err(Error::Precondition(format!(
            "need conductor exponent n > n0 >= 1, got n = {}, n0 = {n0}",
            phi.n()
        )));
    }
    Ok(())
}

/// b ↦ φ(1 + p^{n-n₀} b) is a homomorphism on ℤ/p^{n₀} only when n ≥ 2n₀;
/// for n₀ < n < 2n₀ no such c exists and this returns a precondition error.
pub fn additive_parameter(phi: &CharacterTable, n0: u32) -> Result<AdditiveParameter> {
    require_depth(phi, n0)?;
    let p = phi.p();
    let n = phi.n();
    if n < 2 * n0 {
        return Err(Error::Precondition(format!(
            "b -> phi(1 + p^(n-n0) b) is not additive for n = {n} < 2 n0 = {}",
            2 * n0
        )));
    }
    let step = p.pow(n - n0);
    let x = phi.exponent_at(1 + step as i64).expect("1 + p^k is a unit");
    // 1 + p^{n-n0} has order p^{n0}, so x is a multiple of p^{n-1-n0}
    let scale = p.pow(n - 1 - n0);
    debug_assert_eq!(x % scale, 0);
    let modulus = p.pow(n0);
    Ok(AdditiveParameter { c: (x / scale) % modulus, n0, modulus })
}

/// G(φ) = Σ_a φ(a) e(a/p^n).
pub fn gauss_sum(phi: &CharacterTable) -> Complex64 {
    let m = phi.conductor() as i64;
    (1..m).map(|a| phi.twisted_root(a, a)).sum()
}

/// Σ_{a ≡ c (p^{n₀})} φ(a) e(a/p^n) for an explicit class c.
pub fn partial_gauss_sum_in_class(phi: &CharacterTable, c: u64, n0: u32) -> Result<Complex64> {
    require_depth(phi, n0)?;
    let p = phi.p();
    if gcd(c, p) != 1 {
        return Err(Error::InvalidInput(format!("class {c} is not a unit mod {p}")));
    }
    let step = p.pow(n0) as i64;
    let count = p.pow(phi.n() - n0) as i64;
    let base = (c % p.pow(n0)) as i64;
    Ok((0..count)
        .map(|b| {
            let a = base + step * b;
            phi.twisted_root(a, a)
        })
        .sum())
}

/// G₁(φ): the Gauss sum restricted to a ≡ c_φ (p^{n₀}).
pub fn partial_gauss_sum(phi: &CharacterTable, n0: u32) -> Result<Complex64> {
    let c = additive_parameter(phi, n0)?.c;
    partial_gauss_sum_in_class(phi, c, n0)
}

/// (1/p^n) Σ_{a ≡ c (p^{n₀})} e((a + a^{-1} d)/p^n), a over units mod p^n.
pub fn kloosterman_partial(
    c: i64,
    d: i64,
    setting: &PrimeSetting,
    n: u32,
) -> Result<Complex64> {
    let p = setting.p();
    let n0 = setting.n0();
    if n == 0 || n.div_ceil(2) < n0 {
        return Err(Error::Precondition(format!("need ceil(n/2) >= n0, got n = {n}, n0 = {n0}")));
    }
    let tables = ModulusTables::get(p, n)?;
    let m = tables.modulus();
    let c = c.rem_euclid(m as i64) as u64;
    let d = d.rem_euclid(m as i64) as u64;
    if gcd(c, p) != 1 || gcd(d, p) != 1 {
        return Err(Error::Precondition(format!("c = {c} and d = {d} must be units mod {p}")));
    }
    let step = p.pow(n0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut a = c % step;
    while a < m {
        let inv = inv_mod(a, m).expect("a is a unit");
        let arg = (a as u128 + inv as u128 * d as u128) % m as u128;
        acc += tables.root(arg as i64);
        a += step;
    }
    Ok(acc / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_sum_modulus() {
        let phi = CharacterTable::new(5, 2, 1).unwrap();
        assert!((gauss_sum(&phi).norm_sqr() - 25.0).abs() < 1e-10);
    }

    #[test]
    fn additive_parameter_is_unit() {
        for e in [1, 2, 4, 5, 7, 8] {
            let phi = CharacterTable::new(3, 3, e).unwrap();
            let c = additive_parameter(&phi, 1).unwrap();
            assert!(c.c == 1 || c.c == 2);
        }
        assert!(additive_parameter(&CharacterTable::new(3, 2, 1).unwrap(), 2).is_err());
    }

    #[test]
    fn kloosterman_single_term() {
        let s = PrimeSetting::new(3, 1).unwrap();
        let v = kloosterman_partial(2, 1, &s, 1).unwrap();
        // a = 2, a^{-1} = 2: e(4/3) / 3
        let expect = Complex64::from_polar(1.0 / 3.0, 2.0 * std::f64::consts::PI * 4.0 / 3.0);
        assert!((v - expect).norm() < 1e-15);
    }
}
