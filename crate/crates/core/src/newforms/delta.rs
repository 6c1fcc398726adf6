use num_bigint::BigInt;

use super::series::{CoefficientSeries, NewformSpec};
use crate::error::{Error, Result};

/// Longest series accepted; beyond this τ(n) may leave the i128 range.
pub const DELTA_MAX_BOUND: usize = 2_000_000;

/// Coefficients of Π(1 - q^n) up to q^len, from Euler's pentagonal theorem.
fn euler_product(len: usize) -> Vec<(usize, i128)> {
    let mut out = vec![(0usize, 1i128)];
    let mut j = 1usize;
    loop {
        let a = j * (3 * j - 1) / 2;
        let b = j * (3 * j + 1) / 2;
        if a > len {
            break;
        }
        let sign = if j % 2 == 1 { -1 } else { 1 };
        out.push((a, sign));
        if b <= len {
            out.push((b, sign));
        }
        j += 1;
    }
    out.sort_unstable();
    out
}

/// τ(1..=B) from Δ = q Π(1 - q^n)^24, using the power recurrence
/// n F_n = Σ_k (25k - n) g_k F_{n-k} for F = (Σ g_k q^k)^24.
pub fn delta_series(bound: usize) -> Result<CoefficientSeries> {
    if bound == 0 {
        return Err(Error::InvalidInput("series bound must be at least 1".into()));
    }
    if bound > DELTA_MAX_BOUND {
        return Err(Error::SeriesOverflow(bound));
    }
    let len = bound - 1;
    let g = euler_product(len);
    let mut f = vec![0i128; bound];
    f[0] = 1;
    for n in 1..=len {
        let mut acc = 0i128;
        let mut big: Option<BigInt> = None;
        for &(k, gk) in g.iter().skip(1) {
            if k > n {
                break;
            }
            let coef = (25 * k as i128 - n as i128) * gk;
            let term = coef.checked_mul(f[n - k]).ok_or(Error::SeriesOverflow(bound))?;
            match acc.checked_add(term) {
                Some(v) => acc = v,
                None => {
                    let b = big.get_or_insert_with(|| BigInt::from(0));
                    *b += BigInt::from(acc) + BigInt::from(term);
                    acc = 0;
                }
            }
        }
        f[n] = match big {
            None => {
                debug_assert_eq!(acc % n as i128, 0);
                acc / n as i128
            }
            Some(b) => {
                let total = b + BigInt::from(acc);
                let q = &total / BigInt::from(n);
                debug_assert_eq!(&q * BigInt::from(n), total);
                i128::try_from(&q).map_err(|_| Error::SeriesOverflow(bound))?
            }
        };
    }
    let spec = NewformSpec::new("delta", 12, 1, 1)?;
    CoefficientSeries::new(spec, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_values() {
        let s = delta_series(10).unwrap();
        let expect = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920];
        assert_eq!(s.coefficients(), &expect);
    }

    #[test]
    fn bounds_checked() {
        assert!(delta_series(0).is_err());
        assert!(matches!(delta_series(DELTA_MAX_BOUND + 1), Err(Error::SeriesOverflow(_))));
    }
}
