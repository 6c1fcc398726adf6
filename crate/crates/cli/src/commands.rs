//! The experiment subcommands. Each fills a [`Report`]; exit policy is
//! decided by the caller.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use heckelab_core::averages::{
    coefficient_demand, l_average_split, nonvanishing_scan, determination_experiment,
    ConvergenceTable, OrbitValues,
};
use heckelab_core::characters::{enumerate_characters, CharacterTable, PrimeSetting};
use heckelab_core::lfunctions::{
    fe_check, AfePlan, LValueResult, TwistedFESpec, DEFAULT_TOL, FE_TEST_Y_FACTOR,
};
use heckelab_core::newforms::{cache, load_series, lookup, CoefficientSeries, PROVIDERS};
use heckelab_core::numerics::{ln_gamma_factor, SmoothingKernel};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Diagnostic, ExperimentConfig};
use crate::report::{int, num, Report, Row};

/// Residual above which an FE check flags its row.
pub const FE_FLAG: f64 = 1e-6;
/// |L_av,1 + L_av,2 - L_av| above this (relative) flags a convergence row.
pub const SPLIT_FLAG: f64 = 1e-8;

/// Wall-clock phases, recorded only when timings are requested.
#[derive(Default)]
pub struct Timer {
    enabled: bool,
    spans: BTreeMap<String, Duration>,
}

impl Timer {
    pub fn new(enabled: bool) -> Self {
        Self { enabled, spans: BTreeMap::new() }
    }

    pub fn time<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            *self.spans.entry(key.to_string()).or_default() += start.elapsed();
        }
        out
    }

    pub fn finish(self) -> Option<BTreeMap<String, Duration>> {
        self.enabled.then_some(self.spans)
    }
}

fn load(cfg: &ExperimentConfig, label: &str, bound: usize, timer: &mut Timer) -> anyhow::Result<CoefficientSeries> {
    let dir = cfg.cache_dir.as_deref();
    Ok(timer.time("coefficients", || load_series(label, bound.max(2), dir))?)
}

fn sorted_ns(cfg: &ExperimentConfig) -> Vec<u32> {
    let mut ns = cfg.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    ns
}

/// n must admit c_φ: n > n₀ and n ≥ 2n₀.
fn require_average_range(cfg: &ExperimentConfig, n0: u32) -> Result<(), Diagnostic> {
    for &n in &cfg.ns {
        if n <= n0 || n < 2 * n0 {
            return Err(Diagnostic::new(
                "N_RANGE_INVALID",
                format!("averaging needs n > n0 and n >= 2 n0; got n = {n}, n0 = {n0}"),
            ));
        }
    }
    Ok(())
}

fn value_flags(row: &mut Row, l: &LValueResult, tol: f64) {
    if l.tail_estimate >= tol {
        row.flag(format!("tail estimate {:.3e} not below tol {tol:.0e}", l.tail_estimate));
    }
    if l.value.norm() < 10.0 * (l.tail_estimate + l.rounding_estimate) {
        row.flag("value indistinguishable from zero at its error estimate");
    }
}

fn lvalue_row(label: &str, p: Option<u64>, phi: Option<&CharacterTable>, l: &LValueResult) -> Row {
    Row::new()
        .set("form", label)
        .set("p", p.map_or(Value::Null, Value::from))
        .set("n", phi.map_or(0, |c| c.n()))
        .set("phi_exponent", phi.map_or(Value::Null, |c| c.exponent().into()))
        .set("r", Value::Null)
        .complex("s", l.s)
        .complex("value", l.value)
        .float("tail_estimate", l.tail_estimate)
        .float("rounding_estimate", l.rounding_estimate)
        .float("y", l.y)
        .float("conductor", l.conductor)
        .set("terms_first", l.terms_first)
        .set("terms_second", l.terms_second)
}

fn fe_columns(row: Row, series: &CoefficientSeries, phi: Option<&CharacterTable>, s: Complex64) -> anyhow::Result<Row> {
    let fe = fe_check(series, phi, s, None, &SmoothingKernel::default())?;
    let mut row = row.float("fe_residual", fe.residual).float("fe_raw_residual", fe.raw_residual);
    if !(fe.residual < FE_FLAG) {
        row.flag(format!("functional-equation residual {:.3e} exceeds {FE_FLAG:.0e}", fe.residual));
    }
    Ok(row)
}

struct PlannedBatch {
    s: Complex64,
    plan: AfePlan,
    chars: Option<Vec<CharacterTable>>,
}

/// L(s, f ⊗ φ) for every selected character and point.
pub fn lvalue(cfg: &ExperimentConfig, report: &mut Report, timer: &mut Timer) -> anyhow::Result<()> {
    let ns = sorted_ns(cfg);
    if ns.iter().any(|&n| n >= 2) {
        cfg.require_coprime_levels()?;
    }
    let ker = SmoothingKernel::default();
    let setting = PrimeSetting::new(cfg.p, 1)?;
    for label in &cfg.forms {
        let provider = lookup(label)?;
        let (k, level) = (provider.weight, provider.level as f64);
        let mut batches = Vec::new();
        let mut need = 0usize;
        for point in &cfg.s {
            let s = point.at(k);
            let mut conductors = Vec::new();
            if cfg.untwisted {
                conductors.push((level, None));
            }
            for &n in ns.iter().filter(|&&n| n >= 2) {
                let mut chars = enumerate_characters(&setting, n)?;
                if let Some(keep) = &cfg.phi {
                    chars.retain(|c| keep.contains(&c.exponent()));
                }
                conductors.push((level * (cfg.p as f64).powi(2 * n as i32), Some(chars)));
            }
            for (q, chars) in conductors {
                let plan = timer.time("plans", || AfePlan::new(k, s, q.sqrt(), q, cfg.tol, &ker))?;
                need = need.max(plan.required_bound());
                if cfg.check_fe {
                    let k_minus = Complex64::new(k as f64, 0.0) - s;
                    for w in [s, k_minus] {
                        let y = FE_TEST_Y_FACTOR * q.sqrt();
                        need = need.max(AfePlan::new(k, w, y, q, DEFAULT_TOL, &ker)?.required_bound());
                    }
                }
                batches.push(PlannedBatch { s, plan, chars });
            }
        }
        let series = load(cfg, provider.label, need, timer)?;
        for batch in &batches {
            match &batch.chars {
                None => {
                    let root = TwistedFESpec::new(&series, None)?.constant();
                    let l = timer.time("evaluate", || batch.plan.evaluate(&series, None, root))?;
                    let mut row = lvalue_row(provider.label, None, None, &l);
                    if cfg.check_fe {
                        row = timer.time("fe_check", || fe_columns(row, &series, None, batch.s))?;
                    }
                    value_flags(&mut row, &l, cfg.tol);
                    report.rows.push(row);
                }
                Some(chars) => {
                    let rows: Vec<Row> = timer.time("evaluate", || {
                        chars
                            .par_iter()
                            .map(|phi| {
                                let root = TwistedFESpec::new(&series, Some(phi))?.constant();
                                let l = batch.plan.evaluate(&series, Some(phi), root)?;
                                let mut row = lvalue_row(provider.label, Some(cfg.p), Some(phi), &l);
                                if cfg.check_fe {
                                    row = fe_columns(row, &series, Some(phi), batch.s)?;
                                }
                                value_flags(&mut row, &l, cfg.tol);
                                Ok(row)
                            })
                            .collect::<anyhow::Result<_>>()
                    })?;
                    report.rows.extend(rows);
                }
            }
        }
    }
    let max_fe = report
        .rows
        .iter()
        .filter_map(|r| r.get_f64("fe_residual"))
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    report.summary = json!({
        "rows": report.rows.len(),
        "flagged_rows": report.flag_count(),
        "max_fe_residual": max_fe.map_or(Value::Null, num),
    });
    Ok(())
}

/// r^{k/2} L_av(f, φ, r) against a_f(r) over the n-range, with the split.
pub fn converge(cfg: &ExperimentConfig, report: &mut Report, timer: &mut Timer) -> anyhow::Result<()> {
    cfg.require_r()?;
    cfg.require_coprime_levels()?;
    let n0 = cfg.n0s[0];
    require_average_range(cfg, n0)?;
    let ns = sorted_ns(cfg);
    let mut tables = Vec::new();
    for label in &cfg.forms {
        let provider = lookup(label)?;
        let mut need = *cfg.rs.iter().max().expect("validated") as usize;
        for &n in &ns {
            need = need.max(coefficient_demand(provider.weight, provider.level, cfg.p, n, Some(cfg.y_of(n)), cfg.tol)?);
        }
        let series = load(cfg, provider.label, need, timer)?;
        let mut per_r: Vec<ConvergenceTable> = cfg
            .rs
            .iter()
            .map(|&r| ConvergenceTable {
                form: provider.label.to_string(),
                p: cfg.p,
                r,
                n0,
                schedule: Vec::new(),
                rows: Vec::new(),
            })
            .collect();
        for &n in &ns {
            let phi = CharacterTable::new(cfg.p, n, 1)?;
            let orbit = timer.time("orbit_values", || OrbitValues::new(&series, &phi, n0, cfg.tol))?;
            for table in per_r.iter_mut() {
                let r = table.r;
                let y = cfg.y_of(n);
                let mut rep = orbit.report(r, series.a(r as usize))?;
                rep.split = Some(timer.time("split", || l_average_split(&series, &phi, r, n0, y, cfg.tol))?);
                table.schedule.push(y);
                table.rows.push(rep);
            }
        }
        for table in &per_r {
            for rep in &table.rows {
                let split = rep.split.expect("split computed");
                let gap = (split.total() - rep.l_av).norm();
                let mut row = Row::new()
                    .set("form", rep.form.as_str())
                    .set("p", rep.p)
                    .set("n", rep.n)
                    .set("phi_exponent", rep.phi_exponent)
                    .set("r", rep.r)
                    .float("s_re", provider.weight as f64 / 2.0)
                    .float("s_im", 0.0)
                    .complex("value", rep.l_av)
                    .float("tail_estimate", rep.tail_estimate)
                    .set("n0", rep.n0)
                    .set("orbit_size", rep.orbit_size)
                    .set("target", int(rep.target))
                    .complex("recovered", rep.recovered)
                    .float("abs_error", rep.abs_error)
                    .float("relative_error", rep.relative_error())
                    .float("y", split.y)
                    .complex("split_first", split.first)
                    .complex("split_second", split.second)
                    .float("split_gap", gap);
                if !(rep.tail_estimate < cfg.tol) {
                    row.flag(format!("tail estimate {:.3e} not below tol {:.0e}", rep.tail_estimate, cfg.tol));
                }
                if !(gap <= SPLIT_FLAG * rep.l_av.norm().max(1.0)) {
                    row.flag(format!("two-sum split differs from the average by {gap:.3e}"));
                }
                report.rows.push(row);
            }
            let last = table.rows.last().expect("nonempty n-range");
            tables.push(json!({
                "form": table.form,
                "r": table.r,
                "n0": table.n0,
                "errors": table.errors().into_iter().map(num).collect::<Vec<_>>(),
                "n_bend": table.n_bend(),
                "non_increasing_from_3": table.non_increasing_from(3),
                "final_n": last.n,
                "final_relative_error": num(last.relative_error()),
            }));
        }
    }
    report.summary = json!({ "tables": tables, "flagged_rows": report.flag_count() });
    Ok(())
}

/// Every primitive twist of conductor p^n, 2 ≤ n ≤ max n, plus the
/// untwisted value.
pub fn scan(cfg: &ExperimentConfig, report: &mut Report, timer: &mut Timer) -> anyhow::Result<()> {
    cfg.require_coprime_levels()?;
    let n0 = cfg.n0s[0];
    let n_max = cfg.n_max();
    let ker = SmoothingKernel::default();
    let mut summary = Vec::new();
    for label in &cfg.forms {
        let provider = lookup(label)?;
        let k = provider.weight;
        let s = Complex64::new(k as f64 / 2.0, 0.0);
        let level = provider.level as f64;
        let mut need = AfePlan::new(k, s, level.sqrt(), level, cfg.tol, &ker)?.required_bound();
        if n_max >= 2 {
            let q = level * (cfg.p as f64).powi(2 * n_max as i32);
            need = need.max(AfePlan::new(k, s, q.sqrt(), q, cfg.tol, &ker)?.required_bound());
        }
        let series = load(cfg, provider.label, need, timer)?;
        let scan = timer.time("scan", || nonvanishing_scan(&series, cfg.p, n_max, n0, cfg.tol))?;
        let u = &scan.untwisted;
        let lambda = (ln_gamma_factor(s)? + s * 0.5 * level.ln()).exp() * u.value;
        let mut row = lvalue_row(provider.label, None, None, u)
            .float("weighted_abs", u.value.norm())
            .float("lambda_abs", lambda.norm());
        value_flags(&mut row, u, cfg.tol);
        let lambda_abs = lambda.norm();
        report.rows.push(row);
        for r in &scan.rows {
            let mut row = Row::new()
                .set("form", provider.label)
                .set("p", cfg.p)
                .set("n", r.n)
                .set("phi_exponent", r.phi_exponent)
                .set("r", Value::Null)
                .complex("s", s)
                .complex("value", r.value)
                .float("tail_estimate", r.tail_estimate)
                .float("rounding_estimate", r.rounding_estimate)
                .float("weighted_abs", r.weighted_abs);
            if r.flagged {
                row.flag("value indistinguishable from zero at its error estimate");
            }
            report.rows.push(row);
        }
        summary.push(json!({
            "form": provider.label,
            "p": cfg.p,
            "n_max": n_max,
            "twists": scan.rows.len(),
            "min_weighted_abs": num(scan.min_weighted_abs()),
            "flagged_twists": scan.flag_count(),
            "untwisted_abs": num(u.value.norm()),
            "untwisted_lambda_abs": num(lambda_abs),
        }));
    }
    report.summary = json!({ "forms": summary, "flagged_rows": report.flag_count() });
    Ok(())
}

/// Recovered coefficients of two forms against the same characters.
pub fn determine(cfg: &ExperimentConfig, report: &mut Report, timer: &mut Timer) -> anyhow::Result<()> {
    if cfg.forms.len() != 2 {
        return Err(Diagnostic::new("FORM_COUNT", format!("determine needs exactly two forms, got {}", cfg.forms.len())).into());
    }
    cfg.require_r()?;
    cfg.require_coprime_levels()?;
    let n0 = cfg.n0s[0];
    require_average_range(cfg, n0)?;
    let (p1, p2) = (lookup(&cfg.forms[0])?, lookup(&cfg.forms[1])?);
    if p1.weight != p2.weight {
        return Err(Diagnostic::new("WEIGHT_MISMATCH", format!("{} has weight {}, {} has weight {}", p1.label, p1.weight, p2.label, p2.weight)).into());
    }
    let ns = sorted_ns(cfg);
    let mut need = *cfg.rs.iter().max().expect("validated") as usize;
    for &n in &ns {
        for pr in [p1, p2] {
            need = need.max(coefficient_demand(pr.weight, pr.level, cfg.p, n, None, cfg.tol)?);
        }
    }
    let f1 = load(cfg, p1.label, need, timer)?;
    let f2 = if p1.label == p2.label { f1.clone() } else { load(cfg, p2.label, need, timer)? };
    let mut per_n = Vec::new();
    for &n in &ns {
        let det = timer.time("determine", || determination_experiment(&f1, &f2, cfg.p, n, n0, &cfg.rs, cfg.tol))?;
        let mut worst = 0.0f64;
        for r in &det.rows {
            let gap_error = (r.recovered_gap - r.coefficient_gap).abs();
            worst = worst.max(gap_error);
            let mut row = Row::new()
                .set("form", p1.label)
                .set("form_2", p2.label)
                .set("p", cfg.p)
                .set("n", n)
                .set("phi_exponent", 1)
                .set("r", r.r)
                .float("s_re", p1.weight as f64 / 2.0)
                .float("s_im", 0.0)
                .complex("value", r.recovered1)
                .complex("value_2", r.recovered2)
                .set("tail_estimate", Value::Null)
                .set("n0", n0)
                .set("a_1", int(r.a1))
                .set("a_2", int(r.a2))
                .float("coefficient_gap", r.coefficient_gap)
                .float("recovered_gap", r.recovered_gap)
                .float("gap_error", gap_error);
            if r.coefficient_gap > 0.0 && r.recovered_gap < 0.5 * r.coefficient_gap {
                row.flag("recovered values do not separate forms with distinct coefficients");
            }
            report.rows.push(row);
        }
        per_n.push(json!({ "n": n, "max_gap_error": num(worst) }));
    }
    report.summary = json!({ "per_n": per_n, "flagged_rows": report.flag_count() });
    Ok(())
}

fn cache_dir(cfg: &ExperimentConfig) -> Result<&Path, Diagnostic> {
    cfg.cache_dir.as_deref().ok_or_else(|| {
        Diagnostic::new("CACHE_DIR_UNSET", "no cache directory: pass --cache-dir or set HECKELAB_CACHE")
    })
}

/// One row per cache file, with its validation outcome.
pub fn cache_inspect(cfg: &ExperimentConfig, report: &mut Report) -> anyhow::Result<()> {
    let dir = cache_dir(cfg)?;
    let mut valid = 0usize;
    for (label, bound, path) in cache::list_entries(dir, None)? {
        let bytes = std::fs::metadata(&path)?.len();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut row = Row::new().set("form", label.as_str()).set("bound", bound).set("file", name).set("bytes", bytes);
        match PROVIDERS.iter().find(|p| p.label == label) {
            None => row.flag(format!("no registered form with label {label:?}")),
            Some(p) => match cache::read_series(&path, &p.spec()) {
                Ok(_) => valid += 1,
                Err(e) => row.flag(e.to_string()),
            },
        }
        report.rows.push(row);
    }
    report.summary = json!({ "entries": report.rows.len(), "valid": valid });
    Ok(())
}

pub fn cache_clear(cfg: &ExperimentConfig, label: Option<&str>, report: &mut Report) -> anyhow::Result<()> {
    let dir = cache_dir(cfg)?;
    let label = label.map(|l| lookup(l).map(|p| p.label)).transpose()?;
    let removed = cache::clear(dir, label)?;
    report.summary = json!({ "removed": removed });
    Ok(())
}
