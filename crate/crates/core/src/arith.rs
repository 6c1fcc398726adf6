//! Small integer helpers shared by the character and coefficient code.

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Checked p^e.
pub fn checked_pow(p: u64, e: u32) -> Option<u64> {
    p.checked_pow(e)
}

/// Primes up to `bound` by the sieve of Eratosthenes.
pub fn primes_up_to(bound: usize) -> Vec<usize> {
    if bound < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; bound + 1];
    let mut out = Vec::new();
    for i in 2..=bound {
        if !composite[i] {
            out.push(i);
            let mut j = i * i;
            while j <= bound {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Smallest prime factor of every n ≤ bound (0 and 1 map to 0 and 1).
pub fn smallest_prime_factors(bound: usize) -> Vec<u32> {
    let mut spf: Vec<u32> = (0..=bound as u32).collect();
    let mut i = 2;
    while i * i <= bound {
        if spf[i] == i as u32 {
            let mut j = i * i;
            while j <= bound {
                if spf[j] == j as u32 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
        i += 1;
    }
    spf
}

/// Number of divisors d(n) for n ≤ bound; index 0 is unused and set to 0.
pub fn divisor_counts(bound: usize) -> Vec<u32> {
    let mut d = vec![0u32; bound + 1];
    for i in 1..=bound {
        let mut j = i;
        while j <= bound {
            d[j] += 1;
            j += i;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_basics() {
        assert_eq!(gcd(84, 36), 12);
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(inv_mod(2, 25), Some(13));
        assert_eq!(inv_mod(5, 25), None);
        assert!(is_prime(37) && !is_prime(39));
        assert_eq!(prime_factors(360), vec![2, 3, 5]);
    }

    #[test]
    fn sieves_agree_with_trial_division() {
        let spf = smallest_prime_factors(200);
        let primes = primes_up_to(200);
        for n in 2..=200u64 {
            assert_eq!(spf[n as usize] as u64, prime_factors(n)[0]);
            assert_eq!(primes.contains(&(n as usize)), is_prime(n));
        }
        let d = divisor_counts(100);
        assert_eq!(d[1], 1);
        assert_eq!(d[12], 6);
        assert_eq!(d[97], 2);
    }
}
