//! The smoothing bump Ψ and its Mellin transform Φ.

use num_complex::Complex64;

use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

/// Bump Ψ(u) = c·exp(-1/(1 - v²)) on a log-interval, plus the contour
/// configuration used when integrating against Φ.
#[derive(Clone, Debug)]
pub struct SmoothingKernel {
    lower: f64,
    upper: f64,
    normalization: f64,
    abscissa: f64,
    max_height: f64,
    panel_width: f64,
    nodes_per_panel: usize,
    mellin_panels: usize,
    mellin_nodes: usize,
    tolerance: f64,
    // Φ(t) = Σ weights[i]·exp(t·log_nodes[i])
    log_nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for SmoothingKernel {
    fn default() -> Self {
        Self::new(0.5, 2.0).expect("default support is valid")
    }
}

/// exp(-1/(1 - v²)) on (-1, 1), zero outside.
pub fn bump_profile(v: f64) -> f64 {
    if v.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - v * v)).exp()
    }
}

impl SmoothingKernel {
    /// Bump supported on `(lower, upper)` with default contour settings.
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        Self::with_config(lower, upper, 2.0, 200.0, 16, 48, 20)
    }

    /// Full configuration: contour abscissa, maximal truncation height,
    /// Gauss nodes per contour panel, and the Mellin panel layout.
    pub fn with_config(
        lower: f64,
        upper: f64,
        abscissa: f64,
        max_height: f64,
        nodes_per_panel: usize,
        mellin_panels: usize,
        mellin_nodes: usize,
    ) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bump support must satisfy 0 < lower < upper, got ({lower}, {upper})"
            )));
        }
        if abscissa <= 0.0 || max_height <= 0.0 || nodes_per_panel == 0 {
            return Err(Error::InvalidInput("contour configuration must be positive".into()));
        }
        if mellin_panels == 0 || mellin_nodes == 0 {
            return Err(Error::InvalidInput("Mellin rule needs at least one node".into()));
        }
        let mid = 0.5 * (upper.ln() + lower.ln());
        let half = 0.5 * (upper.ln() - lower.ln());
        let rule = GaussLegendre::new(mellin_nodes);
        let (vs, ws) = rule.composite(-1.0, 1.0, mellin_panels);
        let mut log_nodes = Vec::with_capacity(vs.len());
        let mut weights = Vec::with_capacity(vs.len());
        for (v, w) in vs.iter().zip(&ws) {
            let b = bump_profile(*v);
            if b == 0.0 {
                continue;
            }
            log_nodes.push(mid + half * v);
            weights.push(half * w * b);
        }
        let mass: f64 = weights.iter().sum();
        let normalization = 1.0 / mass;
        for w in &mut weights {
            *w *= normalization;
        }
        Ok(Self {
            lower,
            upper,
            normalization,
            abscissa,
            max_height,
            panel_width: 0.5,
            nodes_per_panel,
            mellin_panels,
            mellin_nodes,
            tolerance: 1e-12,
            log_nodes,
            weights,
        })
    }

    /// Tolerance used to flag cutoff values, relative to |Γ(w, f)|.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    pub fn max_height(&self) -> f64 {
        self.max_height
    }

    pub fn panel_width(&self) -> f64 {
        self.panel_width
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn mellin_rule(&self) -> (usize, usize) {
        (self.mellin_panels, self.mellin_nodes)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// True when Ψ(1/u) = Ψ(u), in which case Φ is even.
    pub fn is_symmetric(&self) -> bool {
        (self.lower * self.upper - 1.0).abs() < 1e-15
    }

    /// Ψ(u).
    pub fn psi(&self, u: f64) -> f64 {
        if u <= self.lower || u >= self.upper {
            return 0.0;
        }
        let mid = 0.5 * (self.upper.ln() + self.lower.ln());
        let half = 0.5 * (self.upper.ln() - self.lower.ln());
        self.normalization * bump_profile((u.ln() - mid) / half)
    }

    /// Bit pattern identifying every numerical setting; used as a cache key.
    pub(crate) fn fingerprint(&self) -> [u64; 7] {
        [
            self.lower.to_bits(),
            self.upper.to_bits(),
            self.abscissa.to_bits(),
            self.max_height.to_bits(),
            self.nodes_per_panel as u64,
            (self.mellin_panels as u64) << 32 | self.mellin_nodes as u64,
            self.tolerance.to_bits(),
        ]
    }
}

/// Φ(t) = ∫ Ψ(y) y^t dy/y, by composite Gauss–Legendre in log y.
pub fn mellin_phi(t: Complex64, ker: &SmoothingKernel) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in ker.log_nodes.iter().zip(&ker.weights) {
        acc += *w * (t * *x).exp();
    }
    acc
}

/// ∫ Ψ(y) y^{Re t} dy/y, which bounds |Φ(t)| and is the natural scale for
/// its absolute error.
pub fn mellin_phi_scale(t: Complex64, ker: &SmoothingKernel) -> f64 {
    mellin_phi(Complex64::new(t.re, 0.0), ker).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_at_zero() {
        let ker = SmoothingKernel::default();
        let v = mellin_phi(Complex64::new(0.0, 0.0), &ker);
        assert!((v.re - 1.0).abs() < 1e-14 && v.im == 0.0);
        assert!(ker.is_symmetric());
    }

    #[test]
    fn rejects_bad_support() {
        assert!(SmoothingKernel::new(2.0, 0.5).is_err());
        assert!(SmoothingKernel::new(0.0, 2.0).is_err());
    }

    #[test]
    fn psi_vanishes_outside_support() {
        let ker = SmoothingKernel::default();
        assert_eq!(ker.psi(0.5), 0.0);
        assert_eq!(ker.psi(2.5), 0.0);
        assert!(ker.psi(1.0) > 0.0);
        assert!((ker.psi(1.3) - ker.psi(1.0 / 1.3)).abs() < 1e-15);
    }
}
