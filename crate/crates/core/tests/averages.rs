use std::f64::consts::PI;
use std::sync::OnceLock;

use heckelab_core::averages::*;
use heckelab_core::characters::CharacterTable;
use heckelab_core::lfunctions::{afe_value, DEFAULT_TOL};
use heckelab_core::newforms::{delta_series, lookup, CoefficientSeries};
use heckelab_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn delta() -> &'static CoefficientSeries {
    static S: OnceLock<CoefficientSeries> = OnceLock::new();
    S.get_or_init(|| delta_series(100_000).unwrap())
}

fn curve(label: &str) -> CoefficientSeries {
    lookup(label).unwrap().compute(100_000).unwrap()
}

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// The defining double sum: (1/|G|p^n) Σ_{a ≡ c (p^{n₀})} Σ_σ ψ(a) e(-a/p^n)
/// ψ̄(r) G(ψ̄) L(k/2, f ⊗ ψ), with every ingredient recomputed by brute force.
fn double_sum_oracle(f: &CoefficientSeries, phi: &CharacterTable, r: u64, n0: u32) -> Complex64 {
    let p = phi.p();
    let n = phi.n();
    let m = p.pow(n);
    let pn0 = p.pow(n0);
    // c_φ from φ(1 + p^{n-n₀} b) = e(b c / p^{n₀})
    let c = (1..pn0)
        .find(|c| {
            (0..pn0).all(|b| (phi.value((1 + p.pow(n - n0) * b) as i64) - e((b * c) as f64 / pn0 as f64)).norm() < 1e-9)
        })
        .unwrap();
    let orbit: Vec<CharacterTable> =
        (0..phi.order()).filter(|t| t % pn0 == 1 % pn0).map(|t| phi.pow(t)).collect();
    let s = Complex64::new(f.weight() as f64 / 2.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for psi in &orbit {
        let bar = psi.conj();
        let g_bar: Complex64 = (1..m as i64).map(|a| bar.value(a) * e(a as f64 / m as f64)).sum();
        let l = afe_value(f, Some(psi), s, None, DEFAULT_TOL).unwrap().value;
        for a in (1..m).filter(|a| a % p != 0 && a % pn0 == c) {
            acc += psi.value(a as i64) * e(-(a as f64) / m as f64) * bar.value(r as i64) * g_bar * l;
        }
    }
    acc / (orbit.len() as f64 * m as f64)
}

#[test]
fn matches_double_sum_oracle() {
    let f = delta();
    for (n, r) in [(2u32, 2u64), (3, 2), (3, 5), (4, 1)] {
        let phi = CharacterTable::new(3, n, 1).unwrap();
        let report = l_average(f, &phi, r, 1, DEFAULT_TOL).unwrap();
        let want = double_sum_oracle(f, &phi, r, 1);
        assert!((report.l_av - want).norm() < 1e-10 * want.norm().max(1.0), "n = {n}, r = {r}");
        assert_eq!(report.target, f.a(r as usize));
        let rk = (r as f64).powi(6);
        assert!((report.recovered - report.l_av * rk).norm() < 1e-12 * rk);
        assert!((report.abs_error - (report.recovered - report.target as f64).norm()).abs() < 1e-12);
    }
    let phi = CharacterTable::new(5, 3, 2).unwrap();
    let eleven = curve("11a");
    let got = l_average(&eleven, &phi, 3, 1, DEFAULT_TOL).unwrap().l_av;
    assert!((got - double_sum_oracle(&eleven, &phi, 3, 1)).norm() < 1e-10);
}

#[test]
fn split_reproduces_average() {
    for (f, n, r) in [(delta().clone(), 3u32, 2u64), (curve("11a"), 4, 2), (curve("17a"), 3, 5)] {
        let phi = CharacterTable::new(3, n, 1).unwrap();
        let total = l_average(&f, &phi, r, 1, DEFAULT_TOL).unwrap().l_av;
        for y in [scheduled_y(3, n), 3f64.powi(n as i32) * 1.7, 40.0] {
            let split = l_average_split(&f, &phi, r, 1, y, DEFAULT_TOL).unwrap();
            assert_eq!(split.y, y);
            assert!((split.total() - total).norm() < 1e-6 * (1.0 + total.norm()), "{} y = {y}", f.label());
            assert!((split.total() - total).norm() < 1e-11 * (1.0 + total.norm()));
        }
    }
}

#[test]
fn split_with_n0_two() {
    let f = curve("11a");
    let phi = CharacterTable::new(3, 4, 1).unwrap();
    let total = l_average(&f, &phi, 2, 2, DEFAULT_TOL).unwrap().l_av;
    let split = l_average_split(&f, &phi, 2, 2, 200.0, DEFAULT_TOL).unwrap();
    assert!((split.total() - total).norm() < 1e-11);
}

#[test]
fn periodic_in_r() {
    let f = delta();
    let phi = CharacterTable::new(3, 3, 1).unwrap();
    let a = l_average(f, &phi, 2, 1, DEFAULT_TOL).unwrap();
    let b = l_average(f, &phi, 2 + 27 * 4, 1, DEFAULT_TOL).unwrap();
    assert_eq!(a.l_av, b.l_av);
    assert_ne!(a.target, b.target);
}

#[test]
fn linear_in_coefficients() {
    let f = delta();
    let phi = CharacterTable::new(3, 3, 1).unwrap();
    let base = l_average(f, &phi, 2, 1, DEFAULT_TOL).unwrap().l_av;
    let tripled = f.sum(&f.scaled(2)).unwrap();
    let v = l_average(&tripled, &phi, 2, 1, DEFAULT_TOL).unwrap().l_av;
    assert!((v - base * 3.0).norm() < 1e-12 * base.norm().max(1.0));
    let split = l_average_split(&tripled, &phi, 2, 1, 100.0, DEFAULT_TOL).unwrap();
    assert!((split.total() - base * 3.0).norm() < 1e-10 * base.norm().max(1.0));
}

#[test]
fn pruned_first_sum_agrees() {
    // G_av(φ, ·) vanishes off a^{p-1} ≡ 1 mod p^{n-n₀}, so dropping those
    // terms leaves the first sum unchanged
    let f = curve("11a");
    let phi = CharacterTable::new(3, 4, 1).unwrap();
    let y = scheduled_y(3, 4);
    let split = l_average_split(&f, &phi, 2, 1, y, DEFAULT_TOL).unwrap();
    let mut coeffs = f.coefficients().to_vec();
    let modulus = 27u64;
    let r_inv = 14u64; // 2·14 ≡ 1 mod 27
    for (i, a) in coeffs.iter_mut().enumerate() {
        let m = (i as u64 + 1) * r_inv % modulus;
        if m % 3 == 0 || m * m % modulus != 1 {
            *a = 0;
        }
    }
    let pruned = CoefficientSeries::from_raw(f.spec().clone(), coeffs);
    let p_split = l_average_split(&pruned, &phi, 2, 1, y, DEFAULT_TOL).unwrap();
    assert!((p_split.first - split.first).norm() < 1e-10);
}

#[test]
fn preconditions() {
    let f = curve("11a");
    let phi = CharacterTable::new(3, 3, 1).unwrap();
    assert!(matches!(l_average(&f, &phi, 6, 1, DEFAULT_TOL), Err(Error::Precondition(_))));
    assert!(matches!(l_average(&f, &phi, 0, 1, DEFAULT_TOL), Err(Error::Precondition(_))));
    assert!(matches!(l_average(&f, &phi, 2, 3, DEFAULT_TOL), Err(Error::Precondition(_))));
    let bad = CharacterTable::new(11, 2, 1).unwrap();
    assert!(matches!(l_average(&f, &bad, 2, 1, DEFAULT_TOL), Err(Error::InvalidInput(_))));
    assert!(l_average_split(&f, &phi, 2, 1, -1.0, DEFAULT_TOL).is_err());
    assert!(matches!(
        convergence_experiment(&f, 3, 2, 1, &[3, 2], DEFAULT_TOL),
        Err(Error::InvalidInput(_))
    ));
    let short = f.truncated(50).unwrap();
    assert!(matches!(l_average(&short, &phi, 2, 1, DEFAULT_TOL), Err(Error::InsufficientCoefficients { .. })));
}

#[test]
fn coefficient_demand_is_sufficient() {
    for n in 2..=5u32 {
        let y = scheduled_y(3, n);
        let need = coefficient_demand(2, 11, 3, n, Some(y), DEFAULT_TOL).unwrap();
        let f = lookup("11a").unwrap().compute(need).unwrap();
        let phi = CharacterTable::new(3, n, 1).unwrap();
        l_average(&f, &phi, 2, 1, DEFAULT_TOL).unwrap();
        l_average_split(&f, &phi, 2, 1, y, DEFAULT_TOL).unwrap();
        let short = f.truncated(need - 1).unwrap();
        let failed = l_average(&short, &phi, 2, 1, DEFAULT_TOL).is_err()
            || l_average_split(&short, &phi, 2, 1, y, DEFAULT_TOL).is_err();
        assert!(failed, "n = {n}: demand {need} is not tight");
    }
}

#[test]
fn convergence_tables() {
    let ns = [2u32, 3, 4, 5, 6];
    for (label, target) in [("delta", -24i128), ("11a", -2)] {
        let provider = lookup(label).unwrap();
        let need = coefficient_demand(provider.weight, provider.level, 3, 6, Some(scheduled_y(3, 6)), DEFAULT_TOL)
            .unwrap();
        let f = provider.compute(need).unwrap();
        let table = convergence_experiment(&f, 3, 2, 1, &ns, DEFAULT_TOL).unwrap();
        assert_eq!(table.rows.iter().map(|r| r.n).collect::<Vec<_>>(), ns);
        for (row, y) in table.rows.iter().zip(&table.schedule) {
            assert_eq!(row.target, target);
            assert_eq!(*y, scheduled_y(3, row.n));
            let split = row.split.unwrap();
            assert!((split.total() - row.l_av).norm() < 1e-6 * (1.0 + row.l_av.norm()));
            assert_eq!(row.orbit_size, 3usize.pow(row.n - 2));
        }
        assert!(table.non_increasing_from(3), "{}: {:?}", f.label(), table.errors());
        assert!(table.n_bend().unwrap() <= 3);
        let last = table.rows.last().unwrap().relative_error();
        let first = table.rows[1].relative_error();
        assert!(last < first);
    }
}

#[test]
fn unit_target() {
    let f = delta();
    let phi = CharacterTable::new(3, 4, 1).unwrap();
    let report = l_average(f, &phi, 1, 1, DEFAULT_TOL).unwrap();
    assert_eq!(report.target, 1);
    assert_eq!(report.recovered, report.l_av);
}

#[test]
fn scan_pairs_conjugates() {
    let f = curve("11a");
    let report = nonvanishing_scan(&f, 3, 4, 1, DEFAULT_TOL).unwrap();
    assert_eq!(report.rows.len(), 2 + 6 + 18);
    assert_eq!(report.flag_count(), 0);
    for row in &report.rows {
        let order = 3u64.pow(row.n - 1);
        let partner = report
            .rows
            .iter()
            .find(|o| o.n == row.n && o.phi_exponent == order - row.phi_exponent)
            .unwrap();
        assert!((partner.value - row.value.conj()).norm() < 1e-12);
        assert!((partner.weighted_abs - row.weighted_abs).abs() < 1e-10);
        let g = 3f64.powf(row.n as f64 / 2.0);
        assert!((row.weighted_abs - g * row.value.norm()).abs() < 1e-9 * g);
    }
    assert!(report.min_weighted_abs() > 0.0);
}

#[test]
fn scan_odd_sign_control() {
    let f = curve("37a");
    let report = nonvanishing_scan(&f, 5, 3, 1, DEFAULT_TOL).unwrap();
    assert!(report.untwisted.value.norm() < 1e-6);
    assert_eq!(report.flag_count(), 0);
    assert!(report.rows.iter().all(|r| r.value.norm() > 1e-3));
}

#[test]
fn scan_flags_vanishing_twists() {
    // 37a ⊗ ψ vanishes at the centre for all six ψ of conductor 27
    let f = curve("37a");
    let report = nonvanishing_scan(&f, 3, 3, 1, DEFAULT_TOL).unwrap();
    let flagged: Vec<(u32, u64)> =
        report.rows.iter().filter(|r| r.flagged).map(|r| (r.n, r.phi_exponent)).collect();
    assert_eq!(flagged, vec![(3, 1), (3, 2), (3, 4), (3, 5), (3, 7), (3, 8)]);
    for row in report.rows.iter().filter(|r| r.flagged) {
        assert!(row.value.norm() < 1e-11);
    }
    for row in report.rows.iter().filter(|r| !r.flagged) {
        assert!(row.value.norm() > 1e-2);
    }
}

#[test]
fn determination_controls() {
    let a = curve("11a");
    let b = curve("17a");
    let same = determination_experiment(&a, &a, 3, 4, 1, &[1, 2, 5], DEFAULT_TOL).unwrap();
    for row in &same.rows {
        assert_eq!(row.recovered_gap, 0.0);
        assert_eq!(row.coefficient_gap, 0.0);
    }
    let diff = determination_experiment(&a, &b, 3, 4, 1, &[1, 2], DEFAULT_TOL).unwrap();
    assert_eq!(diff.rows[0].coefficient_gap, 0.0);
    assert!(diff.rows[0].recovered_gap < 1e-12 + (diff.rows[0].recovered1 - diff.rows[0].recovered2).norm());
    assert_eq!((diff.rows[1].a1, diff.rows[1].a2), (-2, -1));
    assert_eq!(diff.rows[1].coefficient_gap, 1.0);
    assert!(determination_experiment(&a, delta(), 3, 4, 1, &[2], DEFAULT_TOL).is_err());
}

#[test]
#[ignore = "asymptotic bound: the measured log-log slope of |L_av,2| in y is 0.19 at n = 3"]
fn second_sum_decay_exponent() {
    let f = curve("11a");
    for n in [3u32, 4] {
        let phi = CharacterTable::new(3, n, 1).unwrap();
        let pn = 3f64.powi(n as i32);
        let (y1, y2) = (pn.powf(1.1), pn.powf(1.8));
        let a = l_average_split(&f, &phi, 2, 1, y1, DEFAULT_TOL).unwrap().second.norm();
        let b = l_average_split(&f, &phi, 2, 1, y2, DEFAULT_TOL).unwrap().second.norm();
        let slope = -(b / a).ln() / (y2 / y1).ln();
        assert!(slope >= 39.0 / 64.0 - 0.05, "n = {n}: slope {slope}");
    }
}

#[test]
#[ignore = "asymptotic: at desk scale the first-sum residual is not monotone in y on (p^n, p^2n)"]
fn first_sum_residual_shrinks_with_y() {
    let f = curve("11a");
    for n in [3u32, 4] {
        let phi = CharacterTable::new(3, n, 1).unwrap();
        let pn = 3f64.powi(n as i32);
        let errs: Vec<f64> = [1.1, 1.4, 1.7, 1.95]
            .iter()
            .map(|t| {
                let s = l_average_split(&f, &phi, 2, 1, pn.powf(*t), DEFAULT_TOL).unwrap();
                (s.first * 2.0 + 2.0).norm()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "n = {n}: {errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn split_identity_random(e in 1u64..27, r in 1u64..60, t in 0.9f64..1.9) {
        prop_assume!(e % 3 != 0 && r % 3 != 0);
        let f = delta();
        let phi = CharacterTable::new(3, 4, e).unwrap();
        let total = l_average(f, &phi, r, 1, DEFAULT_TOL).unwrap().l_av;
        let split = l_average_split(f, &phi, r, 1, 81f64.powf(t), DEFAULT_TOL).unwrap();
        prop_assert!((split.total() - total).norm() < 1e-6 * (1.0 + total.norm()));
    }

    #[test]
    fn orbit_members_share_average(k in 0u64..3, r in 1u64..40) {
        // φ and φ^{1+3k} have the same orbit, hence the same L_av
        prop_assume!(r % 3 != 0);
        let f = delta();
        let phi = CharacterTable::new(3, 3, 1).unwrap();
        let a = l_average(f, &phi, r, 1, DEFAULT_TOL).unwrap().l_av;
        let b = l_average(f, &phi.pow(1 + 3 * k), r, 1, DEFAULT_TOL).unwrap().l_av;
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }
}
