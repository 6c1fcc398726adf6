use std::fs;

use heckelab_core::characters::CharacterTable;
use heckelab_core::newforms::cache::{cache_file_name, clear, list_entries, read_series, write_series};
use heckelab_core::newforms::*;
use heckelab_core::Error;
use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

fn sigma(n: u64, k: u32) -> BigInt {
    (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(k)).sum()
}

fn mul_trunc(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let len = a.len();
    let mut out = vec![BigInt::from(0); len];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().take(len - i).enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// τ(1..=len-1) from (E₄³ - E₆²)/1728.
fn tau_eisenstein(len: usize) -> Vec<BigInt> {
    let e4: Vec<BigInt> = (0..len)
        .map(|n| if n == 0 { BigInt::from(1) } else { 240 * sigma(n as u64, 3) })
        .collect();
    let e6: Vec<BigInt> = (0..len)
        .map(|n| if n == 0 { BigInt::from(1) } else { -504 * sigma(n as u64, 5) })
        .collect();
    let cube = mul_trunc(&mul_trunc(&e4, &e4), &e4);
    let square = mul_trunc(&e6, &e6);
    cube.iter().zip(&square).map(|(a, b)| (a - b) / 1728).collect()
}

/// q Π(1 - q^n)^24 by repeated multiplication.
fn tau_eta(len: usize) -> Vec<i128> {
    let mut f = vec![0i128; len];
    f[0] = 1;
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                f[i] -= f[i - n];
            }
        }
    }
    let mut out = vec![0i128; len + 1];
    out[1..].copy_from_slice(&f);
    out
}

/// Points on the reduction of y² + a1xy + a3y = x³ + a2x² + a4x + a6 mod q.
fn naive_count(a: &AInvariants, q: i64) -> i64 {
    let [a1, a2, a3, a4, a6] = a.map(|v| v.rem_euclid(q));
    let mut count = 1;
    for x in 0..q {
        let rhs = (((x + a2) * x % q + a4) * x + a6) % q;
        for y in 0..q {
            if (y * y + (a1 * x + a3) % q * y - rhs).rem_euclid(q) == 0 {
                count += 1;
            }
        }
    }
    count
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn elliptic(label: &str) -> Provider {
    *lookup(label).unwrap()
}

fn invariants(p: &Provider) -> AInvariants {
    match p.kind {
        ProviderKind::Elliptic { a, .. } => a,
        ProviderKind::Delta => panic!("not a curve"),
    }
}

#[test]
fn tau_matches_eisenstein_oracle() {
    let len = 300;
    let s = delta_series(len).unwrap();
    let want = tau_eisenstein(len + 1);
    for n in 1..=len {
        assert_eq!(BigInt::from(s.a(n)), want[n], "n = {n}");
    }
    assert_eq!(s.a(2), -24);
    assert_eq!(s.a(3), 252);
    assert_eq!(s.a(6), s.a(2) * s.a(3));
}

#[test]
fn tau_matches_eta_product() {
    let s = delta_series(100).unwrap();
    let want = tau_eta(100);
    assert_eq!(s.coefficients(), &want[1..]);
}

#[test]
fn delta_invariants_hold() {
    let s = delta_series(20_000).unwrap();
    assert_eq!(s.check_multiplicativity(), None);
    assert_eq!(s.check_hecke(), None);
    assert_eq!(s.check_coefficient_bound(), None);
    assert_eq!(s.a(1), 1);
}

#[test]
fn curve_traces_match_naive_count() {
    for label in ["11a", "14a", "15a", "17a", "37a"] {
        let p = elliptic(label);
        let a = invariants(&p);
        let s = p.compute(1000).unwrap();
        for q in (2..1000u64).filter(|q| is_prime(*q)) {
            if q > 400 && q % 7 != 3 {
                continue;
            }
            let want = q as i64 + 1 - naive_count(&a, q as i64);
            assert_eq!(trace_of_frobenius(&a, q), want, "{label}, q = {q}");
            assert_eq!(s.a(q as usize), want as i128, "{label}, q = {q}");
        }
    }
}

#[test]
fn eleven_a_examples() {
    let s = elliptic("11a").compute(150).unwrap();
    assert_eq!(s.a(2), -2);
    assert_eq!(s.a(4), 2);
    assert_eq!(s.a(4), s.a(2) * s.a(2) - 2);
    assert_eq!(s.a(11), 1);
    assert_eq!(s.a(121), 1);
}

#[test]
fn curve_invariants_hold() {
    for label in ["11a", "14a", "15a", "17a", "37a"] {
        let s = elliptic(label).compute(50_000).unwrap();
        assert_eq!(s.check_multiplicativity(), None, "{label}");
        assert_eq!(s.check_hecke(), None, "{label}");
        assert_eq!(s.check_coefficient_bound(), None, "{label}");
    }
}

#[test]
fn hasse_bound() {
    for label in ["11a", "14a", "15a", "17a", "37a"] {
        let p = elliptic(label);
        let s = p.compute(1000).unwrap();
        for q in (2..=1000usize).filter(|q| is_prime(*q as u64) && p.level % *q as u64 != 0) {
            let a = s.a(q) as f64;
            assert!(a * a <= 4.0 * q as f64, "{label}, q = {q}");
        }
    }
}

#[test]
fn rational_torsion_divides_point_counts() {
    for (label, torsion) in [("11a", 5i64), ("14a", 6), ("15a", 8), ("17a", 4)] {
        let p = elliptic(label);
        let s = p.compute(3000).unwrap();
        for q in (5..=3000usize).filter(|q| is_prime(*q as u64) && p.level % *q as u64 != 0) {
            let count = q as i128 + 1 - s.a(q);
            assert_eq!(count % torsion as i128, 0, "{label}, q = {q}");
        }
    }
}

#[test]
fn wrong_conductor_detected() {
    // 11a has bad reduction at 11; claiming level 1 must fail
    let a = invariants(&elliptic("11a"));
    assert!(matches!(elliptic_series("x", &a, 1, 20, 1), Err(Error::SingularReduction(11))));
    assert!(elliptic_series("x", &[0, 0, 0, 0, 0], 1, 20, 1).is_err());
    assert!(delta_series(0).is_err());
    assert!(matches!(delta_series(DELTA_MAX_BOUND + 1), Err(Error::SeriesOverflow(_))));
}

#[test]
fn providers_and_lookup() {
    assert_eq!(lookup("11a1").unwrap().label, "11a");
    assert_eq!(lookup("tau").unwrap().label, "delta");
    assert!(matches!(lookup("99z"), Err(Error::UnknownForm(_))));
    for p in PROVIDERS {
        if let ProviderKind::Elliptic { a, level } = p.kind {
            let disc = discriminant(&a);
            assert_ne!(disc, 0);
            // every prime of bad reduction divides the conductor and vice versa
            for q in (2..=level).filter(|q| is_prime(*q)) {
                assert_eq!(disc % q as i128 == 0, level % q == 0, "{}", p.label);
            }
        }
    }
}

#[test]
fn spec_validation() {
    assert!(NewformSpec::new("f", 3, 1, 1).is_err());
    assert!(NewformSpec::new("f", 2, 0, 1).is_err());
    assert!(NewformSpec::new("f", 2, 11, 0).is_err());
    let spec = NewformSpec::new("f", 2, 11, 1).unwrap();
    assert!(CoefficientSeries::new(spec.clone(), vec![2, 1]).is_err());
    assert!(CoefficientSeries::new(spec, vec![1, -2]).is_ok());
}

#[test]
fn twisted_coefficients() {
    let delta = delta_series(30).unwrap();
    let phi = CharacterTable::new(3, 2, 1).unwrap();
    let tw = twist_coefficients(&delta, Some(&phi));
    assert_eq!(tw.a(1), Complex64::new(1.0, 0.0));
    assert_eq!(tw.a(3), Complex64::new(0.0, 0.0));
    assert_eq!(tw.a(9), Complex64::new(0.0, 0.0));
    assert!((tw.a(2) - phi.value(2) * -24.0).norm() < 1e-12);
    let plain = twist_coefficients(&delta, None);
    assert_eq!(plain.a(2), Complex64::new(-24.0, 0.0));
    assert_eq!(plain.bound(), 30);
}

#[test]
fn fricke_signs_of_providers() {
    for p in PROVIDERS {
        let series = p.compute(20_000).unwrap();
        assert_eq!(fricke_sign(&series).unwrap(), p.sign, "{}", p.label);
    }
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = elliptic("17a").compute(500).unwrap();
    let path = write_series(dir.path(), &s).unwrap();
    assert_eq!(path.file_name().unwrap().to_str().unwrap(), cache_file_name("17a", 500));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("heckelab-coeffs v1 17a 2 17 500\n1\n-1\n"));
    assert!(text.lines().all(|l| l == l.trim_end()));
    assert_eq!(text.lines().count(), 501);
    let back = read_series(&path, s.spec()).unwrap();
    assert_eq!(back, s);
    let entries = list_entries(dir.path(), Some("17a")).unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].1, 500);
    // no leftovers from the atomic write
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn cache_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let s = elliptic("11a").compute(100).unwrap();
    let path = write_series(dir.path(), &s).unwrap();
    let good = fs::read_to_string(&path).unwrap();
    let spec = s.spec().clone();

    let bad_value = good.replacen("\n-2\n", "\nminus two\n", 1);
    fs::write(&path, bad_value).unwrap();
    assert!(matches!(read_series(&path, &spec), Err(Error::CacheFormat { .. })));

    let truncated: String = good.lines().take(60).map(|l| format!("{l}\n")).collect();
    fs::write(&path, truncated).unwrap();
    assert!(matches!(read_series(&path, &spec), Err(Error::CacheFormat { .. })));

    fs::write(&path, good.replacen("heckelab-coeffs v1", "heckelab-coeffs v9", 1)).unwrap();
    assert!(matches!(read_series(&path, &spec), Err(Error::CacheFormat { .. })));

    fs::write(&path, &good).unwrap();
    let other = elliptic("37a").spec();
    assert!(matches!(read_series(&path, &other), Err(Error::CacheFormat { .. })));
    assert!(read_series(&path, &spec).is_ok());

    fs::write(&path, "").unwrap();
    assert!(matches!(read_series(&path, &spec), Err(Error::CacheFormat { .. })));
}

#[test]
fn load_series_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let big = load_series("14a", 800, Some(dir.path())).unwrap();
    let small = load_series("14a1", 300, Some(dir.path())).unwrap();
    assert_eq!(small.coefficients(), &big.coefficients()[..300]);
    assert_eq!(list_entries(dir.path(), None).unwrap().len(), 1);
    // a tampered entry is served back, showing the cache was consulted
    let path = dir.path().join(cache_file_name("14a", 800));
    let text = fs::read_to_string(&path).unwrap().replacen("\n-1\n", "\n-7\n", 1);
    fs::write(&path, text).unwrap();
    let served = load_series("14a", 10, Some(dir.path())).unwrap();
    assert_eq!(served.a(2), -7);
    // a larger request computes and adds a new entry
    load_series("14a", 1200, Some(dir.path())).unwrap();
    assert_eq!(list_entries(dir.path(), Some("14a")).unwrap().len(), 2);
    load_series("delta", 50, Some(dir.path())).unwrap();
    assert_eq!(clear(dir.path(), Some("14a")).unwrap(), 2);
    assert_eq!(clear(dir.path(), None).unwrap(), 1);
    assert!(matches!(load_series("nope", 10, Some(dir.path())), Err(Error::UnknownForm(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn delta_multiplicative(m in 1usize..150, n in 1usize..150) {
        let s = delta_series(150 * 150).unwrap();
        let g = (1..=m.min(n)).rev().find(|d| m % d == 0 && n % d == 0).unwrap();
        prop_assume!(g == 1);
        prop_assert_eq!(s.a(m * n), s.a(m) * s.a(n));
    }

    #[test]
    fn curve_hecke_at_random_prime(idx in 0usize..4, q in 2u64..200) {
        prop_assume!(is_prime(q));
        let p = PROVIDERS[idx + 1];
        let s = p.compute(q as usize * q as usize).unwrap();
        let q2 = (q * q) as usize;
        let expect = if p.level % q == 0 {
            s.a(q as usize).pow(2)
        } else {
            s.a(q as usize).pow(2) - q as i128
        };
        prop_assert_eq!(s.a(q2), expect);
    }
}
