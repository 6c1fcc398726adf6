use num_complex::Complex64;

use crate::characters::CharacterTable;
use crate::newforms::CoefficientSeries;

/// Whether Re s lies in the half-plane of absolute convergence, Re s > k/2 + 1.
pub fn in_convergence_region(weight: u32, s: Complex64) -> bool {
    s.re > weight as f64 / 2.0 + 1.0
}

fn twisted(series: &CoefficientSeries, phi: Option<&CharacterTable>, m: usize) -> Complex64 {
    let a = series.a(m) as f64;
    match phi {
        Some(c) => c.value(m as i64) * a,
        None => Complex64::new(a, 0.0),
    }
}

/// Partial Dirichlet sum Σ_{m ≤ terms} a(m) ψ(m) m^{-s}, summed in order.
/// Meaningful only when [`in_convergence_region`] holds; `terms` is capped
/// at the series bound.
pub fn direct_value(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
    terms: usize,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..=terms.min(series.bound()) {
        acc += twisted(series, phi, m) * (-s * (m as f64).ln()).exp();
    }
    acc
}

/// Smooth step equal to 1 on [0, 1] and 0 on [2, ∞), C^∞ in between.
pub fn smooth_step(t: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let a = h(2.0 - t);
        a / (a + h(t - 1.0))
    }
}

/// Σ a(m) ψ(m) m^{-s} w(m / length) with the C^∞ cutoff [`smooth_step`].
/// In the region of absolute convergence this differs from L(s) by
/// O(length^{-A}) for every A, without using any functional equation.
/// Needs coefficients up to 2·length; returns None if the series is shorter.
pub fn smoothed_direct_value(
    series: &CoefficientSeries,
    phi: Option<&CharacterTable>,
    s: Complex64,
    length: usize,
) -> Option<Complex64> {
    let top = 2 * length;
    if series.bound() < top {
        return None;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..top {
        let w = smooth_step(m as f64 / length as f64);
        if w == 0.0 {
            continue;
        }
        acc += twisted(series, phi, m) * (-s * (m as f64).ln()).exp() * w;
    }
    Some(acc)
}
