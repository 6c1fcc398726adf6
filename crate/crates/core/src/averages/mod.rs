//! Galois-averaged, additively twisted central values
//!
//! L_av(f, φ, r) = (1/|G|p^n) Σ_σ conj(G₁(ψ̄) G(ψ)) ψ̄(r) L(k/2, f ⊗ ψ),
//! ψ = φ^σ, together with its two-sum decomposition and the experiments
//! that track r^{k/2} L_av against a_f(r).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{gcd, inv_mod};
use crate::characters::{enumerate_characters, CharacterTable, GaloisAverager, PrimeSetting};
use crate::error::{Error, Result};
use crate::lfunctions::{AfePlan, LValueResult, TwistedFESpec};
use crate::newforms::CoefficientSeries;
use crate::numerics::SmoothingKernel;

/// Balance parameter y = p^{55n/39} used by the convergence schedule.
pub fn scheduled_y(p: u64, n: u32) -> f64 {
    (p as f64).powf(55.0 * n as f64 / 39.0)
}

/// L_av,1 and L_av,2 at a recorded y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitValue {
    pub y: f64,
    pub first: Complex64,
    pub second: Complex64,
}

impl SplitValue {
    pub fn total(&self) -> Complex64 {
        self.first + self.second
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageReport {
    pub form: String,
    pub p: u64,
    pub n0: u32,
    pub n: u32,
    pub phi_exponent: u64,
    pub r: u64,
    pub orbit_size: usize,
    pub l_av: Complex64,
    pub split: Option<SplitValue>,
    /// a_f(r), exact.
    pub target: i128,
    /// r^{k/2} L_av: the quantity whose limit is a_f(r) for f normalized
    /// with a_f(n) ~ n^{(k-1)/2}.
    pub recovered: Complex64,
    /// |recovered - a_f(r)|.
    pub abs_error: f64,
    pub tail_estimate: f64,
}

impl AverageReport {
    pub fn relative_error(&self) -> f64 {
        self.abs_error / (self.target as f64).abs().max(1.0)
    }
}

fn check_r(p: u64, r: u64) -> Result<()> {
    if r == 0 || gcd(r, p) != 1 {
        return Err(Error::Precondition(format!("r = {r} must be a positive integer coprime to p = {p}")));
    }
    Ok(())
}

fn center(series: &CoefficientSeries) -> Complex64 {
    Complex64::new(series.weight() as f64 / 2.0, 0.0)
}

fn conductor(series: &CoefficientSeries, phi: &CharacterTable) -> f64 {
    let q = phi.conductor() as f64;
    series.level() as f64 * q * q
}

fn averager(series: &CoefficientSeries, phi: &CharacterTable, r: u64, n0: u32) -> Result<GaloisAverager> {
    check_r(phi.p(), r)?;
    if r as usize > series.bound() {
        return Err(Error::InsufficientCoefficients { needed: r as usize, available: series.bound() });
    }
    GaloisAverager::new(phi, n0, Some(series.level()))
}

/// Coefficients consumed by [`l_average`] (and by [`l_average_split`] when
/// `y` is given) for a form of this weight and level.
pub fn coefficient_demand(
    weight: u32,
    level: u64,
    p: u64,
    n: u32,
    y: Option<f64>,
    tol: f64,
) -> Result<usize> {
    let q = level as f64 * (p as f64).powi(2 * n as i32);
    let s = Complex64::new(weight as f64 / 2.0, 0.0);
    let ker = SmoothingKernel::default();
    let mut need = AfePlan::new(weight, s, q.sqrt(), q, tol, &ker)?.required_bound();
    if let Some(y) = y {
        need = need.max(AfePlan::new(weight, s, y, q, tol, &ker)?.required_bound());
    }
    Ok(need)
}

/// L(k/2, f ⊗ ψ) for every ψ in the orbit of φ, from one shared plan.
fn orbit_values(
    series: &CoefficientSeries,
    av: &GaloisAverager,
    plan: &AfePlan,
) -> Result<Vec<LValueResult>> {
    av.orbit()
        .par_iter()
        .map(|psi| {
            let root = TwistedFESpec::new(series, Some(psi))?.constant();
            plan.evaluate(series, Some(psi), root)
        })
        .collect()
}

/// Central values L(k/2, f ⊗ ψ) over the orbit of φ, computed once and
/// shared by every r.
#[derive(Clone, Debug)]
pub struct OrbitValues {
    form: String,
    weight: u32,
    phi: CharacterTable,
    n0: u32,
    averager: GaloisAverager,
    values: Vec<LValueResult>,
}

impl OrbitValues {
    pub fn new(series: &CoefficientSeries, phi: &CharacterTable, n0: u32, tol: f64) -> Result<Self> {
        let averager = GaloisAverager::new(phi, n0, Some(series.level()))?;
        let q = conductor(series, phi);
        let plan =
            AfePlan::new(series.weight(), center(series), q.sqrt(), q, tol, &SmoothingKernel::default())?;
        let values = orbit_values(series, &averager, &plan)?;
        Ok(Self {
            form: series.label().to_string(),
            weight: series.weight(),
            phi: phi.clone(),
            n0,
            averager,
            values,
        })
    }

    pub fn values(&self) -> &[LValueResult] {
        &self.values
    }

    pub fn averager(&self) -> &GaloisAverager {
        &self.averager
    }

    /// The averaged value at r; `target` is a_f(r).
    pub fn report(&self, r: u64, target: i128) -> Result<AverageReport> {
        check_r(self.phi.p(), r)?;
        let av = &self.averager;
        let norm = av.orbit().len() as f64 * self.phi.conductor() as f64;
        let mut total = Complex64::new(0.0, 0.0);
        let mut tail = 0.0;
        for (((psi, g), g1), l) in
            av.orbit().iter().zip(av.gauss_sums()).zip(av.partial_sums()).zip(&self.values)
        {
            let w = (g1 * g).conj() * psi.value(r as i64).conj();
            total += w * l.value;
            tail += w.norm() * l.tail_estimate;
        }
        let l_av = total / norm;
        let recovered = l_av * (r as f64).powf(self.weight as f64 / 2.0);
        Ok(AverageReport {
            form: self.form.clone(),
            p: self.phi.p(),
            n0: self.n0,
            n: self.phi.n(),
            phi_exponent: self.phi.exponent(),
            r,
            orbit_size: av.orbit().len(),
            l_av,
            split: None,
            target,
            recovered,
            abs_error: (recovered - target as f64).norm(),
            tail_estimate: tail / norm,
        })
    }
}

/// The averaged value with each orbit L-value computed once; the a-sum is
/// the partial Gauss sum G₁ carried by the averager.
pub fn l_average(
    series: &CoefficientSeries,
    phi: &CharacterTable,
    r: u64,
    n0: u32,
    tol: f64,
) -> Result<AverageReport> {
    averager(series, phi, r, n0)?;
    OrbitValues::new(series, phi, n0, tol)?.report(r, series.a(r as usize))
}

/// Residue tables a ↦ G_av(φ, a) and a ↦ G^ι_av(φ, a) mod p^n.
fn average_tables(av: &GaloisAverager, modulus: u64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut g = vec![Complex64::new(0.0, 0.0); modulus as usize];
    let mut iota = g.clone();
    for a in 1..modulus {
        if gcd(a, modulus) == 1 {
            g[a as usize] = av.g_average(a as i64);
            iota[a as usize] = av.g_average_iota(a as i64)?;
        }
    }
    Ok((g, iota))
}

/// L_av,1 = (1/Γ) Σ_m a(m) G_av(φ, m r^{-1}) m^{-k/2} V₁(m/y),
/// L_av,2 = (ε/Γ) Σ_m a(m) G^ι_av(φ, r m) m^{-k/2} V₂(m y / N p^{2n}).
pub fn l_average_split(
    series: &CoefficientSeries,
    phi: &CharacterTable,
    r: u64,
    n0: u32,
    y: f64,
    tol: f64,
) -> Result<SplitValue> {
    let av = averager(series, phi, r, n0)?;
    let q = conductor(series, phi);
    let plan = AfePlan::new(series.weight(), center(series), y, q, tol, &SmoothingKernel::default())?;
    let modulus = phi.conductor();
    let (g, iota) = average_tables(&av, modulus)?;
    let r_mod = r % modulus;
    let r_inv = inv_mod(r_mod, modulus).expect("r is a unit");
    let (first, second) = plan.weighted_sums(
        series,
        |m| g[(m as u64 % modulus * r_inv % modulus) as usize],
        |m| iota[(m as u64 % modulus * r_mod % modulus) as usize],
    )?;
    Ok(SplitValue { y, first, second: second * series.sign() as f64 })
}

/// Rows over increasing n for the character of exponent 1, with the split
/// evaluated at y = p^{55n/39}.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub form: String,
    pub p: u64,
    pub r: u64,
    pub n0: u32,
    pub schedule: Vec<f64>,
    pub rows: Vec<AverageReport>,
}

impl ConvergenceTable {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.abs_error).collect()
    }

    /// Smallest n from which the error never increases again.
    pub fn n_bend(&self) -> Option<u32> {
        let e = self.errors();
        if e.is_empty() {
            return None;
        }
        let mut start = e.len() - 1;
        while start > 0 && e[start] <= e[start - 1] {
            start -= 1;
        }
        Some(self.rows[start].n)
    }

    /// Errors non-increasing over every row with n ≥ `from`.
    pub fn non_increasing_from(&self, from: u32) -> bool {
        let e: Vec<f64> = self.rows.iter().filter(|r| r.n >= from).map(|r| r.abs_error).collect();
        e.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn convergence_experiment(
    series: &CoefficientSeries,
    p: u64,
    r: u64,
    n0: u32,
    ns: &[u32],
    tol: f64,
) -> Result<ConvergenceTable> {
    convergence_experiment_with(series, p, r, n0, ns, tol, |n| scheduled_y(p, n))
}

/// As [`convergence_experiment`] with the split evaluated at `y_of(n)`.
pub fn convergence_experiment_with(
    series: &CoefficientSeries,
    p: u64,
    r: u64,
    n0: u32,
    ns: &[u32],
    tol: f64,
    y_of: impl Fn(u32) -> f64,
) -> Result<ConvergenceTable> {
    check_r(p, r)?;
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("n-range must be nonempty and strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    let mut schedule = Vec::with_capacity(ns.len());
    for &n in ns {
        let phi = CharacterTable::new(p, n, 1)?;
        let y = y_of(n);
        let mut report = l_average(series, &phi, r, n0, tol)?;
        report.split = Some(l_average_split(series, &phi, r, n0, y, tol)?);
        schedule.push(y);
        rows.push(report);
    }
    Ok(ConvergenceTable { form: series.label().to_string(), p, r, n0, schedule, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub n: u32,
    pub phi_exponent: u64,
    pub value: Complex64,
    /// |G(φ) L(k/2, f ⊗ φ)|.
    pub weighted_abs: f64,
    pub tail_estimate: f64,
    pub rounding_estimate: f64,
    /// |L| below 10× its error estimate (tail plus rounding).
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    pub form: String,
    pub p: u64,
    pub untwisted: LValueResult,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn min_weighted_abs(&self) -> f64 {
        self.rows.iter().map(|r| r.weighted_abs).fold(f64::INFINITY, f64::min)
    }

    pub fn flag_count(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }
}

/// Central values of every primitive p-power-order twist of conductor p^n,
/// 2 ≤ n ≤ n_max, plus the untwisted value.
pub fn nonvanishing_scan(
    series: &CoefficientSeries,
    p: u64,
    n_max: u32,
    n0: u32,
    tol: f64,
) -> Result<ScanReport> {
    let setting = PrimeSetting::new(p, n0)?;
    let s = center(series);
    let ker = SmoothingKernel::default();
    let level = series.level() as f64;
    let untwisted = AfePlan::new(series.weight(), s, level.sqrt(), level, tol, &ker)?.evaluate(
        series,
        None,
        TwistedFESpec::new(series, None)?.constant(),
    )?;
    let mut rows = Vec::new();
    for n in 2..=n_max {
        let chars = enumerate_characters(&setting, n)?;
        let q = level * (p as f64).powi(2 * n as i32);
        let plan = AfePlan::new(series.weight(), s, q.sqrt(), q, tol, &ker)?;
        let batch: Result<Vec<ScanRow>> = chars
            .par_iter()
            .map(|phi| {
                let l = plan.evaluate(series, Some(phi), TwistedFESpec::new(series, Some(phi))?.constant())?;
                let g = crate::characters::gauss_sum(phi);
                Ok(ScanRow {
                    n,
                    phi_exponent: phi.exponent(),
                    value: l.value,
                    weighted_abs: (g * l.value).norm(),
                    tail_estimate: l.tail_estimate,
                    rounding_estimate: l.rounding_estimate,
                    flagged: l.value.norm() < 10.0 * (l.tail_estimate + l.rounding_estimate),
                })
            })
            .collect();
        rows.extend(batch?);
    }
    Ok(ScanReport { form: series.label().to_string(), p, untwisted, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminationRow {
    pub r: u64,
    pub a1: i128,
    pub a2: i128,
    pub recovered1: Complex64,
    pub recovered2: Complex64,
    /// |a1 - a2|.
    pub coefficient_gap: f64,
    /// |recovered1 - recovered2|.
    pub recovered_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminationReport {
    pub forms: (String, String),
    pub p: u64,
    pub n: u32,
    pub n0: u32,
    pub rows: Vec<DeterminationRow>,
}

/// Averaged values of two forms against the same character, one row per r.
pub fn determination_experiment(
    f1: &CoefficientSeries,
    f2: &CoefficientSeries,
    p: u64,
    n: u32,
    n0: u32,
    rs: &[u64],
    tol: f64,
) -> Result<DeterminationReport> {
    if f1.weight() != f2.weight() {
        return Err(Error::InvalidInput("forms must share the weight".into()));
    }
    let phi = CharacterTable::new(p, n, 1)?;
    for &r in rs {
        averager(f1, &phi, r, n0)?;
        averager(f2, &phi, r, n0)?;
    }
    let o1 = OrbitValues::new(f1, &phi, n0, tol)?;
    let o2 = if f1 == f2 { o1.clone() } else { OrbitValues::new(f2, &phi, n0, tol)? };
    let mut rows = Vec::with_capacity(rs.len());
    for &r in rs {
        let a = o1.report(r, f1.a(r as usize))?;
        let b = o2.report(r, f2.a(r as usize))?;
        rows.push(DeterminationRow {
            r,
            a1: a.target,
            a2: b.target,
            recovered1: a.recovered,
            recovered2: b.recovered,
            coefficient_gap: (a.target - b.target).unsigned_abs() as f64,
            recovered_gap: (a.recovered - b.recovered).norm(),
        });
    }
    Ok(DeterminationReport {
        forms: (f1.label().to_string(), f2.label().to_string()),
        p,
        n,
        n0,
        rows,
    })
}
