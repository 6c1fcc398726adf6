//! The cutoff function V_{j,w}(x) = (1/2πi) ∫ Φ(±t) Γ(w+t, f) x^{-t} dt/t.
//!
//! The defining line is Re t = 2. For x < 1 the integral is evaluated on a
//! line left of the origin and the crossed residues are added back, which
//! avoids the x^{-2} cancellation on the defining line.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::gamma::{gamma_factor, ln_gamma_factor, GammaFactorSpec};
use super::kernel::{mellin_phi, SmoothingKernel};
use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

const LEFT_CANDIDATES: [f64; 5] = [-2.5, -2.0, -1.5, -1.0, -0.5];
const POLE_CLEARANCE: f64 = 0.25;
const ENDPOINT_RATIO: f64 = 1e-16;

/// One evaluation of V with its a-posteriori truncation estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffValue {
    pub value: Complex64,
    pub tail_estimate: f64,
    pub flagged: bool,
}

/// A pole of the integrand left of the defining line: contributes
/// `coef · x^{-t0}` to V.
#[derive(Clone, Copy, Debug)]
struct Pole {
    t0: Complex64,
    coef: Complex64,
}

/// Quadrature of ∫ g(t) x^{-t} along one vertical line.
#[derive(Clone, Debug)]
struct LineRule {
    abscissa: f64,
    ts: Vec<Complex64>,
    gs: Vec<Complex64>,
    // only τ ≥ 0 stored; the integral is 2·Re of the stored half
    conj_symmetric: bool,
    tail_coef: f64,
}

fn sign_of(j: u8) -> Result<f64> {
    match j {
        1 => Ok(1.0),
        2 => Ok(-1.0),
        _ => Err(Error::InvalidInput(format!("cutoff index j must be 1 or 2, got {j}"))),
    }
}

fn shifted(w: Complex64, spec: &GammaFactorSpec) -> Complex64 {
    w - spec.m_shift() as f64
}

/// Real parts of the poles of t ↦ Γ(w+t)/t that could lie right of `floor`.
fn pole_real_parts(w: Complex64, floor: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut j = 0.0;
    while -w.re - j > floor - 1.0 {
        out.push(-w.re - j);
        j += 1.0;
    }
    out
}

fn clear_of_poles(a: f64, w: Complex64) -> bool {
    pole_real_parts(w, a).iter().all(|r| (a - r).abs() >= POLE_CLEARANCE)
}

impl LineRule {
    fn integrand_weight(
        sigma: f64,
        w: Complex64,
        t: Complex64,
        ker: &SmoothingKernel,
    ) -> Result<Complex64> {
        let phi = mellin_phi(t * sigma, ker);
        let g = ln_gamma_factor(w + t)?.exp();
        Ok(phi * g / t)
    }

    fn build(sigma: f64, w: Complex64, a: f64, ker: &SmoothingKernel) -> Result<Self> {
        let conj_symmetric = w.im == 0.0;
        let width = ker.panel_width();
        let max_h = ker.max_height();
        let at = |tau: f64| Self::integrand_weight(sigma, w, Complex64::new(a, tau), ker);

        // Walk outwards panel by panel until the integrand is negligible.
        let reach = |dir: f64| -> Result<(f64, f64, f64)> {
            let mut peak = 0.0f64;
            let mut tau = 0.0;
            loop {
                let m = at(dir * tau)?.norm();
                peak = peak.max(m);
                if (m < ENDPOINT_RATIO * peak && tau > 0.0) || tau >= max_h {
                    return Ok((tau, m, peak));
                }
                tau += width;
            }
        };
        let (t_up, m_up, _) = reach(1.0)?;
        let (t_down, m_down) = if conj_symmetric {
            (0.0, 0.0)
        } else {
            let (t, m, _) = reach(-1.0)?;
            (t, m)
        };

        let rule = GaussLegendre::new(ker.nodes_per_panel());
        let mut ts = Vec::new();
        let mut gs = Vec::new();
        let mut push = |lo: f64, hi: f64| -> Result<()> {
            let panels = ((hi - lo) / width).round().max(1.0) as usize;
            let (taus, ws) = rule.composite(lo, hi, panels);
            for (tau, wt) in taus.into_iter().zip(ws) {
                let t = Complex64::new(a, tau);
                ts.push(t);
                gs.push(Self::integrand_weight(sigma, w, t, ker)? * (wt / (2.0 * PI)));
            }
            Ok(())
        };
        if t_down > 0.0 {
            push(-t_down, 0.0)?;
        }
        push(0.0, t_up)?;
        let tail_coef = if conj_symmetric { 2.0 * m_up } else { m_up + m_down } / (2.0 * PI);
        Ok(Self { abscissa: a, ts, gs, conj_symmetric, tail_coef })
    }

    fn eval(&self, ln_x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, g) in self.ts.iter().zip(&self.gs) {
            acc += g * (-t * ln_x).exp();
        }
        if self.conj_symmetric {
            Complex64::new(2.0 * acc.re, 0.0)
        } else {
            acc
        }
    }

    fn tail(&self, ln_x: f64) -> f64 {
        self.tail_coef * (-self.abscissa * ln_x).exp()
    }

    /// Values at ln x = u0 + m·h for m in 0..len, by multiplicative stepping.
    fn eval_uniform(&self, u0: f64, h: f64, len: usize) -> Vec<Complex64> {
        const RESEED: usize = 256;
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        for (t, g) in self.ts.iter().zip(&self.gs) {
            let step = (-t * h).exp();
            let mut start = 0;
            while start < len {
                let end = (start + RESEED).min(len);
                let mut z = g * (-t * (u0 + start as f64 * h)).exp();
                for slot in &mut acc[start..end] {
                    *slot += z;
                    z *= step;
                }
                start = end;
            }
        }
        if self.conj_symmetric {
            for v in &mut acc {
                *v = Complex64::new(2.0 * v.re, 0.0);
            }
        }
        acc
    }
}

/// Precomputed contour data for one (j, w).
#[derive(Clone, Debug)]
pub struct CutoffIntegrator {
    sigma: f64,
    w: Complex64,
    gamma_w: Complex64,
    tolerance: f64,
    right: LineRule,
    left: Option<(LineRule, Vec<Pole>)>,
}

fn poles_between(
    sigma: f64,
    w: Complex64,
    lo: f64,
    hi: f64,
    ker: &SmoothingKernel,
) -> Result<Vec<Pole>> {
    let mut poles = Vec::new();
    if lo < 0.0 && 0.0 < hi {
        poles.push(Pole {
            t0: Complex64::new(0.0, 0.0),
            coef: mellin_phi(Complex64::new(0.0, 0.0), ker) * ln_gamma_factor(w)?.exp(),
        });
    }
    let mut j = 0u32;
    let mut j_fact = 1.0f64;
    loop {
        let t0 = -w - j as f64;
        if t0.re <= lo {
            break;
        }
        if t0.re < hi {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let coef = mellin_phi(t0 * sigma, ker) * sign / j_fact
                * (2.0 * PI).powi(j as i32)
                / t0;
            poles.push(Pole { t0, coef });
        }
        j += 1;
        j_fact *= j as f64;
    }
    Ok(poles)
}

fn residue_sum(poles: &[Pole], ln_x: f64) -> Complex64 {
    poles.iter().map(|p| p.coef * (-p.t0 * ln_x).exp()).sum()
}

impl CutoffIntegrator {
    pub fn new(
        j: u8,
        w: Complex64,
        ker: &SmoothingKernel,
        spec: &GammaFactorSpec,
    ) -> Result<Self> {
        let sigma = sign_of(j)?;
        let w = shifted(w, spec);
        let gamma_w = ln_gamma_factor(w)?.exp();
        let a = ker.abscissa();
        if !clear_of_poles(a, w) {
            return Err(Error::Precondition(format!(
                "contour Re t = {a} passes too close to a pole for w = {w}"
            )));
        }
        let right = LineRule::build(sigma, w, a, ker)?;
        let left = match LEFT_CANDIDATES.iter().copied().find(|&b| clear_of_poles(b, w)) {
            Some(b) => {
                let rule = LineRule::build(sigma, w, b, ker)?;
                let poles = poles_between(sigma, w, b, a, ker)?;
                Some((rule, poles))
            }
            None => None,
        };
        Ok(Self { sigma, w, gamma_w, tolerance: ker.tolerance(), right, left })
    }

    /// Γ(w, f), the x → 0 limit of V.
    pub fn gamma_w(&self) -> Complex64 {
        self.gamma_w
    }

    pub fn w(&self) -> Complex64 {
        self.w
    }

    /// +1 for j = 1, -1 for j = 2.
    pub fn sign(&self) -> f64 {
        self.sigma
    }

    /// Abscissa of the line used for x < 1, if one was found.
    pub fn left_abscissa(&self) -> Option<f64> {
        self.left.as_ref().map(|(r, _)| r.abscissa)
    }

    fn finish(&self, value: Complex64, tail: f64) -> CutoffValue {
        CutoffValue {
            value,
            tail_estimate: tail,
            flagged: !(tail <= self.tolerance * self.gamma_w.norm()),
        }
    }

    pub fn eval(&self, x: f64) -> CutoffValue {
        let ln_x = x.ln();
        match &self.left {
            Some((rule, poles)) if ln_x < 0.0 => {
                self.finish(rule.eval(ln_x) + residue_sum(poles, ln_x), rule.tail(ln_x))
            }
            _ => self.finish(self.right.eval(ln_x), self.right.tail(ln_x)),
        }
    }
}

/// V_{j,w}(x) by direct contour quadrature.
pub fn cutoff_v(
    j: u8,
    w: Complex64,
    x: f64,
    ker: &SmoothingKernel,
    spec: &GammaFactorSpec,
) -> Result<CutoffValue> {
    check_x(x)?;
    Ok(CutoffIntegrator::new(j, w, ker, spec)?.eval(x))
}

/// V_{j,w}(x) integrated on the line Re t = `abscissa`, with the residues
/// between that line and the defining line accounted for.
pub fn cutoff_v_on_line(
    j: u8,
    w: Complex64,
    x: f64,
    abscissa: f64,
    ker: &SmoothingKernel,
    spec: &GammaFactorSpec,
) -> Result<CutoffValue> {
    check_x(x)?;
    let sigma = sign_of(j)?;
    let w = shifted(w, spec);
    if !clear_of_poles(abscissa, w) {
        return Err(Error::Precondition(format!(
            "line Re t = {abscissa} passes too close to a pole for w = {w}"
        )));
    }
    let a = ker.abscissa();
    let rule = LineRule::build(sigma, w, abscissa, ker)?;
    let ln_x = x.ln();
    let mut value = rule.eval(ln_x);
    if abscissa < a {
        value += residue_sum(&poles_between(sigma, w, abscissa, a, ker)?, ln_x);
    } else if abscissa > a {
        value -= residue_sum(&poles_between(sigma, w, a, abscissa, ker)?, ln_x);
    }
    let tail = rule.tail(ln_x);
    let scale = gamma_factor(w, spec)?.norm();
    Ok(CutoffValue { value, tail_estimate: tail, flagged: !(tail <= ker.tolerance() * scale) })
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("cutoff argument must be positive and finite, got {x}")))
    }
}

/// V_{j,w} tabulated on a uniform grid in log x with cubic interpolation.
/// Below the grid the integrator is called directly; above it V is below
/// 1e-18·|Γ(w, f)| and is returned as zero.
#[derive(Debug)]
pub struct CutoffGrid {
    integrator: CutoffIntegrator,
    u_min: f64,
    step: f64,
    values: Vec<Complex64>,
    x_max: f64,
}

pub const GRID_X_MIN: f64 = 1e-9;
pub const GRID_STEPS_PER_UNIT: f64 = 1024.0;

impl CutoffGrid {
    pub fn build(
        j: u8,
        w: Complex64,
        ker: &SmoothingKernel,
        spec: &GammaFactorSpec,
    ) -> Result<Self> {
        let integrator = CutoffIntegrator::new(j, w, ker, spec)?;
        let h = 1.0 / GRID_STEPS_PER_UNIT;
        let threshold = 1e-18 * integrator.gamma_w.norm();
        let mut x_max = 2.0;
        while integrator.eval(x_max).value.norm() >= threshold && x_max < 1024.0 {
            x_max *= 2.0;
        }
        let m_lo = (GRID_X_MIN.ln() / h).floor() as i64 - 2;
        let m_hi = (x_max.ln() / h).ceil() as i64 + 2;
        let u_min = m_lo as f64 * h;
        let len = (m_hi - m_lo + 1) as usize;
        let split = (-m_lo) as usize; // index of u = 0

        let mut values = Vec::with_capacity(len);
        match &integrator.left {
            Some((rule, poles)) => {
                let lower = rule.eval_uniform(u_min, h, split);
                for (m, v) in lower.into_iter().enumerate() {
                    values.push(v + residue_sum(poles, u_min + m as f64 * h));
                }
                values.extend(integrator.right.eval_uniform(0.0, h, len - split));
            }
            None => values.extend(integrator.right.eval_uniform(u_min, h, len)),
        }
        Ok(Self { integrator, u_min, step: h, values, x_max })
    }

    /// Shared grid for (j, w, kernel, weight spec), built once per process.
    pub fn shared(
        j: u8,
        w: Complex64,
        ker: &SmoothingKernel,
        spec: &GammaFactorSpec,
    ) -> Result<Arc<Self>> {
        type Key = (u8, u64, u64, [u64; 7], u32);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<CutoffGrid>>>> = OnceLock::new();
        let key = (j, w.re.to_bits(), w.im.to_bits(), ker.fingerprint(), spec.m_shift());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(g) = guard.get(&key) {
            return Ok(Arc::clone(g));
        }
        let grid = Arc::new(Self::build(j, w, ker, spec)?);
        guard.insert(key, Arc::clone(&grid));
        Ok(grid)
    }

    pub fn integrator(&self) -> &CutoffIntegrator {
        &self.integrator
    }

    pub fn gamma_w(&self) -> Complex64 {
        self.integrator.gamma_w
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.u_min.exp(), self.x_max)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Interpolated V(x).
    pub fn value(&self, x: f64) -> Complex64 {
        if x >= self.x_max {
            return Complex64::new(0.0, 0.0);
        }
        let u = x.ln();
        let pos = (u - self.u_min) / self.step;
        if pos < 1.0 {
            return self.integrator.eval(x).value;
        }
        let m = (pos.floor() as usize).min(self.values.len() - 3);
        let f = pos - m as f64;
        let v = &self.values[m - 1..m + 3];
        // Lagrange weights for nodes -1, 0, 1, 2
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        v[0] * w0 + v[1] * w1 + v[2] * w2 + v[3] * w3
    }

    /// Direct quadrature at x, bypassing the table.
    pub fn direct(&self, x: f64) -> CutoffValue {
        self.integrator.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_bad_arguments() {
        let ker = SmoothingKernel::default();
        let spec = GammaFactorSpec::new(12).unwrap();
        assert!(cutoff_v(3, c(6.0), 1.0, &ker, &spec).is_err());
        assert!(cutoff_v(1, c(6.0), 0.0, &ker, &spec).is_err());
        assert!(cutoff_v(1, c(0.0), 1.0, &ker, &spec).is_err());
    }

    #[test]
    fn real_weight_gives_real_values() {
        let ker = SmoothingKernel::default();
        let spec = GammaFactorSpec::new(12).unwrap();
        let v = cutoff_v(1, c(6.0), 0.3, &ker, &spec).unwrap();
        assert_eq!(v.value.im, 0.0);
        assert!(!v.flagged);
    }
}
