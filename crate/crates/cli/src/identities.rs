//! Exhaustive checks of the character-average identities and bounds.
//!
//! G_av, φ_av and the ι-average are sums over a Galois orbit, so they are
//! evaluated once per orbit (representative exponent e mod p^{n₀}) and
//! compared against every member.

use std::sync::Arc;

use heckelab_core::arith::{gcd, pow_mod};
use heckelab_core::characters::{
    gauss_sum, kloosterman_partial, phi_average, CharacterTable, GaloisAverager, ModulusTables,
    PrimeSetting,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::report::{num, Report, Row};

pub const IDENTITY_TOL: f64 = 1e-10;
const GAUSS_TOL: f64 = 1e-9;
const KLOOSTERMAN_SAMPLES: usize = 50;
/// Exhaust (c, d) when p^{2n} is at most this.
const KLOOSTERMAN_EXHAUSTIVE: u64 = 10_000_000;

fn arguments(p: u64) -> Vec<i64> {
    (1..=20).filter(|a| a % p as i64 != 0).collect()
}

fn characters(p: u64, n: u32, corrupt: Option<(u64, u32)>) -> anyhow::Result<Vec<CharacterTable>> {
    let mut tables = ModulusTables::get(p, n)?;
    if let Some((residue, log)) = corrupt {
        tables = tables.corrupted(residue, log);
    }
    Ok((1..tables.order())
        .filter(|e| e % p != 0)
        .map(|e| CharacterTable::with_tables(Arc::clone(&tables), e))
        .collect())
}

/// One line of the identity report.
struct Check {
    name: &'static str,
    n: u32,
    n0: Option<u32>,
    level: Option<u64>,
    cases: usize,
    violations: usize,
    max_observed: f64,
    threshold: f64,
    first_violation: Option<String>,
    undefined: Option<String>,
    sampled: bool,
}

impl Check {
    fn new(name: &'static str, n: u32, n0: Option<u32>, threshold: f64) -> Self {
        Self {
            name,
            n,
            n0,
            level: None,
            cases: 0,
            violations: 0,
            max_observed: 0.0,
            threshold,
            first_violation: None,
            undefined: None,
            sampled: false,
        }
    }

    fn undefined(name: &'static str, n: u32, n0: u32, why: String) -> Self {
        let mut c = Self::new(name, n, Some(n0), 0.0);
        c.undefined = Some(why);
        c
    }

    fn observe(&mut self, observed: f64, violated: bool, case: impl FnOnce() -> String) {
        self.cases += 1;
        if observed > self.max_observed || observed.is_nan() {
            self.max_observed = observed;
        }
        if violated {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(case());
            }
        }
    }

    fn merge(&mut self, other: Check) {
        self.cases += other.cases;
        self.violations += other.violations;
        if other.max_observed > self.max_observed || other.max_observed.is_nan() {
            self.max_observed = other.max_observed;
        }
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
    }

    fn row(self, p: u64) -> Row {
        let defined = self.undefined.is_none();
        let status = match (&self.undefined, self.violations) {
            (Some(_), _) => "undefined",
            (None, 0) => "ok",
            _ => "violated",
        };
        let mut row = Row::new()
            .set("check", self.name)
            .set("p", p)
            .set("n", self.n)
            .set("n0", self.n0.map_or(Value::Null, Value::from))
            .set("level", self.level.map_or(Value::Null, Value::from))
            .set("status", status)
            .set("cases", self.cases)
            .set("violations", self.violations)
            .set("sampled", self.sampled)
            .set("max_observed", if defined { num(self.max_observed) } else { Value::Null })
            .set("threshold", if defined { num(self.threshold) } else { Value::Null })
            .set("first_violation", self.first_violation.clone().map_or(Value::Null, Value::from))
            .set("note", self.undefined.clone().map_or(Value::Null, Value::from));
        if self.violations > 0 {
            row.flag(format!(
                "{} violated in {} of {} cases; first at {}",
                self.name,
                self.violations,
                self.cases,
                self.first_violation.as_deref().unwrap_or("?")
            ));
        }
        row
    }
}

/// Orbit representatives: exponents below p^{n₀} coprime to p.
fn representatives<'a>(chars: &'a [CharacterTable], p: u64, n0: u32) -> Vec<&'a CharacterTable> {
    let step = p.pow(n0);
    chars.iter().filter(|c| c.exponent() < step).collect()
}

fn g_average_check(chars: &[CharacterTable], p: u64, n: u32, n0: u32) -> anyhow::Result<Check> {
    let name = "g_average_equals_phi_average";
    if n < 2 * n0 || n <= n0 {
        return Ok(Check::undefined(name, n, n0, format!("c_phi needs n >= 2 n0 and n > n0; here n = {n}, n0 = {n0}")));
    }
    let args = arguments(p);
    let step = p.pow(n0);
    let reps = representatives(chars, p, n0);
    let tables: Vec<(u64, Vec<Complex64>)> = reps
        .par_iter()
        .map(|rep| {
            let av = GaloisAverager::new(rep, n0, None)?;
            Ok((rep.exponent(), args.iter().map(|&a| av.g_average(a)).collect()))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut check = Check::new(name, n, Some(n0), IDENTITY_TOL);
    for phi in chars {
        let (_, g) = tables.iter().find(|(e, _)| *e == phi.exponent() % step).expect("orbit representative");
        for (&a, g_av) in args.iter().zip(g) {
            let dev = (g_av - phi_average(phi, a, n0)?).norm();
            check.observe(dev, !(dev <= IDENTITY_TOL), || format!("phi_exponent={} a={a}", phi.exponent()));
        }
    }
    Ok(check)
}

/// φ_av(a) as the literal orbit mean, its support a^{p-1} ≡ 1 (p^{n-n₀}),
/// and agreement with the closed form.
fn support_check(chars: &[CharacterTable], p: u64, n: u32, n0: u32) -> anyhow::Result<Check> {
    let name = "phi_average_support";
    if n <= n0 {
        return Ok(Check::undefined(name, n, n0, format!("needs n > n0; here n = {n}, n0 = {n0}")));
    }
    let args = arguments(p);
    let size = p.pow(n - 1 - n0);
    let step = p.pow(n0);
    let sub = p.pow(n - n0);
    let parts: Vec<Check> = chars
        .par_iter()
        .map(|phi| {
            let mut c = Check::new(name, n, Some(n0), 1e-12);
            for &a in &args {
                let mean: Complex64 =
                    (0..size).map(|i| phi.pow(1 + step * i).value(a)).sum::<Complex64>() / size as f64;
                let closed = phi_average(phi, a, n0)?;
                let supported = pow_mod(a as u64, p - 1, sub) == 1;
                let dev = (mean - closed).norm();
                let wrong_support = (closed.norm() > 0.5) != supported;
                c.observe(dev, !(dev <= 1e-12) || wrong_support, || {
                    format!("phi_exponent={} a={a}", phi.exponent())
                });
            }
            Ok(c)
        })
        .collect::<anyhow::Result<_>>()?;
    let mut check = Check::new(name, n, Some(n0), 1e-12);
    for part in parts {
        check.merge(part);
    }
    Ok(check)
}

/// max |K(c, d)|·p^{n/2-2}, exhaustive over c mod p^{n₀} and d mod p^n when
/// small, otherwise over a seeded sample.
fn kloosterman_check(p: u64, n: u32, n0: u32) -> anyhow::Result<Check> {
    let name = "kloosterman_bound";
    if n.div_ceil(2) < n0 {
        return Ok(Check::undefined(name, n, n0, format!("needs ceil(n/2) >= n0; here n = {n}, n0 = {n0}")));
    }
    let setting = PrimeSetting::new(p, n0)?;
    let m = p.pow(n);
    let scale = (p as f64).powf(n as f64 / 2.0 - 2.0);
    let exhaustive = p.saturating_pow(2 * n) <= KLOOSTERMAN_EXHAUSTIVE;
    let pairs: Vec<(i64, i64)> = if exhaustive {
        let cs = (1..p.pow(n0)).filter(|c| c % p != 0);
        cs.flat_map(|c| (1..m).filter(|d| d % p != 0).map(move |d| (c as i64, d as i64))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(p << 32 | (n as u64) << 8 | n0 as u64);
        let mut unit = || loop {
            let x = rng.random_range(1..m);
            if x % p != 0 {
                return x as i64;
            }
        };
        (0..KLOOSTERMAN_SAMPLES).map(|_| (unit(), unit())).collect()
    };
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(c, d)| Ok(kloosterman_partial(c, d, &setting, n)?.norm() * scale))
        .collect::<anyhow::Result<_>>()?;
    let mut check = Check::new(name, n, Some(n0), 1.0);
    check.sampled = !exhaustive;
    for (&(c, d), v) in pairs.iter().zip(values) {
        check.observe(v, !(v <= 1.0 + 1e-12), || format!("c={c} d={d}"));
    }
    Ok(check)
}

/// max |G^ι_av(φ, a)| / ((p-1) p^{n₀+2-n/2}) for n > 2n₀.
fn iota_check(chars: &[CharacterTable], p: u64, n: u32, n0: u32, level: u64) -> anyhow::Result<Check> {
    let name = "iota_average_bound";
    if n <= 2 * n0 {
        let mut c = Check::undefined(name, n, n0, format!("bound stated for n > 2 n0; here n = {n}, n0 = {n0}"));
        c.level = Some(level);
        return Ok(c);
    }
    let bound = (p - 1) as f64 * (p as f64).powf(n0 as f64 + 2.0 - n as f64 / 2.0);
    let args = arguments(p);
    let step = p.pow(n0);
    let reps = representatives(chars, p, n0);
    let values: Vec<(u64, Vec<f64>)> = reps
        .par_iter()
        .map(|rep| {
            let av = GaloisAverager::new(rep, n0, Some(level))?;
            let v = args.iter().map(|&a| Ok(av.g_average_iota(a)?.norm() / bound)).collect::<anyhow::Result<_>>()?;
            Ok((rep.exponent(), v))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut check = Check::new(name, n, Some(n0), 1.0);
    check.level = Some(level);
    for phi in chars {
        let (_, v) = values.iter().find(|(e, _)| *e == phi.exponent() % step).expect("orbit representative");
        for (&a, &ratio) in args.iter().zip(v) {
            check.observe(ratio, !(ratio <= 1.0 + 1e-12), || format!("phi_exponent={} a={a}", phi.exponent()));
        }
    }
    Ok(check)
}

fn gauss_check(chars: &[CharacterTable], p: u64, n: u32) -> Check {
    let m = p.pow(n) as f64;
    let devs: Vec<f64> = chars.par_iter().map(|phi| (gauss_sum(phi).norm_sqr() - m).abs() / m).collect();
    let mut check = Check::new("gauss_sum_modulus", n, None, GAUSS_TOL);
    for (phi, dev) in chars.iter().zip(devs) {
        check.observe(dev, !(dev <= GAUSS_TOL), || format!("phi_exponent={}", phi.exponent()));
    }
    check
}

pub fn run(cfg: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let p = cfg.p;
    let mut ns = cfg.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut n0s = cfg.n0s.clone();
    n0s.sort_unstable();
    n0s.dedup();
    let mut total_cases = 0usize;
    let mut total_violations = 0usize;
    let mut kloost_max = 0.0f64;
    let mut iota_max = 0.0f64;
    for &n in &ns {
        if n < 2 {
            continue;
        }
        let chars = characters(p, n, cfg.corrupt)?;
        let mut checks = vec![gauss_check(&chars, p, n)];
        for &n0 in &n0s {
            checks.push(g_average_check(&chars, p, n, n0)?);
            checks.push(support_check(&chars, p, n, n0)?);
            checks.push(kloosterman_check(p, n, n0)?);
            for &level in &cfg.levels {
                checks.push(iota_check(&chars, p, n, n0, level)?);
            }
        }
        for c in checks {
            total_cases += c.cases;
            total_violations += c.violations;
            if c.undefined.is_none() {
                match c.name {
                    "kloosterman_bound" => kloost_max = kloost_max.max(c.max_observed),
                    "iota_average_bound" => iota_max = iota_max.max(c.max_observed),
                    _ => {}
                }
            }
            report.rows.push(c.row(p));
        }
    }
    report.summary = serde_json::json!({
        "cases": total_cases,
        "violations": total_violations,
        "max_kloosterman_ratio": num(kloost_max),
        "max_iota_ratio": num(iota_max),
    });
    Ok(())
}

pub fn validate_levels(cfg: &ExperimentConfig) -> Result<(), crate::config::Diagnostic> {
    for &l in &cfg.levels {
        if l == 0 || gcd(l, cfg.p) != 1 {
            return Err(crate::config::Diagnostic::new(
                "LEVEL_NOT_COPRIME",
                format!("level {l} must be a positive integer coprime to p = {}", cfg.p),
            ));
        }
    }
    Ok(())
}
