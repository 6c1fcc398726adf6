use std::collections::HashMap;

use super::series::{CoefficientSeries, NewformSpec};
use crate::arith::{inv_mod, mul_mod, pow_mod, primes_up_to, smallest_prime_factors};
use crate::error::{Error, Result};

/// Weierstrass coefficients [a1, a2, a3, a4, a6].
pub type AInvariants = [i64; 5];

/// Discriminant of y² + a1xy + a3y = x³ + a2x² + a4x + a6.
pub fn discriminant(a: &AInvariants) -> i128 {
    let [a1, a2, a3, a4, a6] = a.map(|v| v as i128);
    let b2 = a1 * a1 + 4 * a2;
    let b4 = 2 * a4 + a1 * a3;
    let b6 = a3 * a3 + 4 * a6;
    let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
    -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
}

fn brute_force_trace(a: &AInvariants, q: i64) -> i64 {
    let [a1, a2, a3, a4, a6] = *a;
    let mut affine = 0;
    for x in 0..q {
        for y in 0..q {
            let lhs = y * y + a1 * x * y + a3 * y;
            let rhs = x * x * x + a2 * x * x + a4 * x + a6;
            if (lhs - rhs).rem_euclid(q) == 0 {
                affine += 1;
            }
        }
    }
    q - affine
}

/// -Σ_x (D(x)/q) with (2y + a1x + a3)² = D(x) = 4x³ + b2x² + 2b4x + b6.
fn legendre_trace(a: &AInvariants, q: u64) -> i64 {
    let qi = q as i64;
    let [a1, a2, a3, a4, a6] = *a;
    let b2 = (a1 * a1 + 4 * a2).rem_euclid(qi);
    let b4 = (2 * a4 + a1 * a3).rem_euclid(qi);
    let b6 = (a3 * a3 + 4 * a6).rem_euclid(qi);
    let mut is_square = vec![-1i8; q as usize];
    is_square[0] = 0;
    for t in 1..=(q / 2) {
        is_square[(t * t % q) as usize] = 1;
    }
    // forward differences of the cubic D at x = 0, 1, 2, ...
    let d = |x: i64| (4 * x * x * x + b2 * x * x + 2 * b4 * x + b6).rem_euclid(qi);
    let (v0, v1, v2, v3) = (d(0), d(1), d(2), d(3));
    let mut f = v0;
    let mut d1 = (v1 - v0).rem_euclid(qi);
    let mut d2 = (v2 - 2 * v1 + v0).rem_euclid(qi);
    let d3 = (v3 - 3 * v2 + 3 * v1 - v0).rem_euclid(qi);
    let mut sum = 0i64;
    for _ in 0..q {
        sum += is_square[f as usize] as i64;
        f += d1;
        if f >= qi {
            f -= qi;
        }
        d1 += d2;
        if d1 >= qi {
            d1 -= qi;
        }
        d2 += d3;
        if d2 >= qi {
            d2 -= qi;
        }
    }
    -sum
}

/// Affine points of y² = x³ + Ax + B over F_q; None is the identity.
type Point = Option<(u64, u64)>;

struct ShortCurve {
    a: u64,
    b: u64,
    q: u64,
}

impl ShortCurve {
    /// Short model of the reduction at q > 3:
    /// y² = x³ - 27c4·x - 54c6.
    fn new(a: &AInvariants, q: u64) -> Self {
        let qi = q as i128;
        let [a1, a2, a3, a4, a6] = a.map(|v| v as i128);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let c4 = b2 * b2 - 24 * b4;
        let c6 = -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6;
        Self {
            a: (-27 * c4).rem_euclid(qi) as u64,
            b: (-54 * c6).rem_euclid(qi) as u64,
            q,
        }
    }

    fn rhs(&self, x: u64) -> u64 {
        let q = self.q;
        (mul_mod(mul_mod(x, x, q), x, q) + mul_mod(self.a, x, q) + self.b) % q
    }

    fn neg(&self, p: Point) -> Point {
        p.map(|(x, y)| (x, (self.q - y) % self.q))
    }

    fn add(&self, p: Point, r: Point) -> Point {
        let q = self.q;
        let ((x1, y1), (x2, y2)) = match (p, r) {
            (None, o) | (o, None) => return o,
            (Some(u), Some(v)) => (u, v),
        };
        let lam = if x1 == x2 {
            if (y1 + y2) % q == 0 {
                return None;
            }
            let num = (3 * mul_mod(x1, x1, q) + self.a) % q;
            mul_mod(num, inv_mod(2 * y1 % q, q)?, q)
        } else {
            mul_mod((y2 + q - y1) % q, inv_mod((x2 + q - x1) % q, q)?, q)
        };
        let x3 = (mul_mod(lam, lam, q) + 2 * q - x1 - x2) % q;
        let y3 = (mul_mod(lam, (x1 + q - x3) % q, q) + q - y1) % q;
        Some((x3, y3))
    }

    fn mul(&self, p: Point, mut n: u64) -> Point {
        let mut acc = None;
        let mut base = p;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            n >>= 1;
        }
        acc
    }

    /// Every m in [lo, hi] with mP = O, by baby-step giant-step. None when P
    /// has order below the baby-step range (too little information).
    fn annihilators(&self, p: Point, lo: u64, hi: u64) -> Option<Vec<u64>> {
        let g = ((hi - lo + 1) as f64).sqrt().ceil() as u64 + 1;
        let mut baby = HashMap::with_capacity(g as usize);
        let mut cur = p;
        for j in 1..g {
            let (x, y) = cur?;
            baby.insert((x, y), j);
            cur = self.add(cur, p);
        }
        let step = self.neg(self.mul(p, g));
        let mut t = self.neg(self.mul(p, lo));
        let mut out = Vec::new();
        let mut m0 = lo;
        while m0 <= hi {
            // (m0 + j)P = O  <=>  jP = -m0·P
            match t {
                None => out.push(m0),
                Some(pt) => {
                    if let Some(&j) = baby.get(&pt) {
                        if m0 + j <= hi {
                            out.push(m0 + j);
                        }
                    }
                }
            }
            t = self.add(t, step);
            m0 += g;
        }
        Some(out)
    }
}

fn sqrt_mod(a: u64, q: u64) -> u64 {
    // Tonelli-Shanks; a is a nonzero square mod the odd prime q
    let mut s = 0;
    let mut odd = q - 1;
    while odd % 2 == 0 {
        odd /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (q - 1) / 2, q) != q - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, odd, q);
    let mut t = pow_mod(a, odd, q);
    let mut r = pow_mod(a, (odd + 1) / 2, q);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, q);
            i += 1;
        }
        let mut b = c;
        for _ in 0..m - i - 1 {
            b = mul_mod(b, b, q);
        }
        m = i;
        c = mul_mod(b, b, q);
        t = mul_mod(t, c, q);
        r = mul_mod(r, b, q);
    }
    r
}

/// #E(F_q) pinned down inside the Hasse interval by the orders of a few
/// points; None if they leave more than one candidate.
fn bsgs_trace(a: &AInvariants, q: u64) -> Option<i64> {
    let curve = ShortCurve::new(a, q);
    let width = ((4 * q) as f64).sqrt().floor() as u64;
    let (lo, hi) = (q + 1 - width, q + 1 + width);
    let mut candidates: Option<Vec<u64>> = None;
    let mut tried = 0;
    for x in 0..q {
        let r = curve.rhs(x);
        if r == 0 || pow_mod(r, (q - 1) / 2, q) != 1 {
            continue;
        }
        let p = Some((x, sqrt_mod(r, q)));
        tried += 1;
        if let Some(found) = curve.annihilators(p, lo, hi) {
            candidates = Some(match candidates {
                None => found,
                Some(prev) => prev.into_iter().filter(|m| found.contains(m)).collect(),
            });
            if let Some([m]) = candidates.as_deref() {
                return Some(q as i64 + 1 - *m as i64);
            }
        }
        if tried >= 12 {
            break;
        }
    }
    None
}

/// Below this the character sum is cheaper than baby-step giant-step.
const BSGS_FROM: u64 = 229;

/// a_q = q + 1 - #E(F_q), counting every projective point of the reduction
/// (so bad primes give +1, -1 or 0 according to the reduction type).
pub fn trace_of_frobenius(a: &AInvariants, q: u64) -> i64 {
    if q <= 3 {
        return brute_force_trace(a, q as i64);
    }
    let good = discriminant(a) % q as i128 != 0;
    if good && q >= BSGS_FROM {
        if let Some(t) = bsgs_trace(a, q) {
            return t;
        }
    }
    legendre_trace(a, q)
}

/// Coefficients of the weight-2 newform attached to a curve of conductor N.
pub fn elliptic_series(
    label: &str,
    a: &AInvariants,
    level: u64,
    bound: usize,
    sign: i8,
) -> Result<CoefficientSeries> {
    if bound == 0 {
        return Err(Error::InvalidInput("series bound must be at least 1".into()));
    }
    let disc = discriminant(a);
    if disc == 0 {
        return Err(Error::InvalidInput("a-invariants define a singular curve".into()));
    }
    let mut c = vec![0i128; bound + 1];
    c[1] = 1;
    for q in primes_up_to(bound) {
        let good = level % q as u64 != 0;
        if good && disc % q as i128 == 0 {
            return Err(Error::SingularReduction(q as u64));
        }
        let aq = trace_of_frobenius(a, q as u64) as i128;
        c[q] = aq;
        let mut prev = 1i128;
        let mut power = q;
        while power <= bound / q {
            let next = power * q;
            c[next] = if good { aq * c[power] - q as i128 * prev } else { aq * c[power] };
            prev = c[power];
            power = next;
        }
    }
    let spf = smallest_prime_factors(bound);
    for n in 2..=bound {
        let q = spf[n] as usize;
        let mut qe = q;
        while (n / qe) % q == 0 {
            qe *= q;
        }
        if qe != n {
            c[n] = c[qe] * c[n / qe];
        }
    }
    c.remove(0);
    let spec = NewformSpec::new(label, 2, level, sign)?;
    CoefficientSeries::new(spec, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E11A: AInvariants = [0, -1, 1, -10, -20];

    #[test]
    fn eleven_a_small_traces() {
        // a_2 = -2, a_3 = -1, a_5 = 1, a_7 = -2 for 11a
        assert_eq!(trace_of_frobenius(&E11A, 2), -2);
        assert_eq!(trace_of_frobenius(&E11A, 3), -1);
        assert_eq!(trace_of_frobenius(&E11A, 5), 1);
        assert_eq!(trace_of_frobenius(&E11A, 7), -2);
        assert_eq!(discriminant(&E11A), -161051);
    }

    #[test]
    fn legendre_count_matches_brute_force() {
        for q in [5u64, 7, 11, 13, 17, 19, 23, 101] {
            assert_eq!(trace_of_frobenius(&E11A, q), brute_force_trace(&E11A, q as i64), "q = {q}");
        }
    }

    #[test]
    fn point_orders_match_character_sum() {
        let curves: [AInvariants; 3] = [E11A, [0, 0, 1, -1, 0], [1, -1, 1, -1, -14]];
        for a in &curves {
            let disc = discriminant(a);
            for q in crate::arith::primes_up_to(6000).into_iter().filter(|&q| q >= 229) {
                if disc % q as i128 == 0 {
                    continue;
                }
                if let Some(t) = bsgs_trace(a, q as u64) {
                    assert_eq!(t, legendre_trace(a, q as u64), "q = {q}");
                }
            }
        }
    }

    #[test]
    fn singular_reduction_rejected() {
        // 11a claimed at level 1: 11 divides the discriminant
        assert!(matches!(
            elliptic_series("bad", &E11A, 1, 20, 1),
            Err(Error::SingularReduction(11))
        ));
    }
}
