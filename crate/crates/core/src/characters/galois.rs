//! Averages over the orbit of φ under Gal(ℚ(φ)/ℚ(μ_{p^{n₀}})), which acts by
//! φ ↦ φ^t with t ≡ 1 mod p^{n₀}.

use num_complex::Complex64;

use super::gauss::{additive_parameter, gauss_sum, partial_gauss_sum_in_class};
use super::table::CharacterTable;
use crate::arith::gcd;
use crate::error::{Error, Result};

fn require_depth(phi: &CharacterTable, n0: u32) -> Result<()> {
    if n0 == 0 || phi.n() <= n0 {
        return Err(Error::Precondition(format!(
            "need conductor exponent n > n0 >= 1, got n = {}, n0 = {n0}",
            phi.n()
        )));
    }
    Ok(())
}

/// The exponents t ≡ 1 (p^{n₀}) taken mod p^{n-1}.
fn orbit_multipliers(phi: &CharacterTable, n0: u32) -> Vec<u64> {
    let p = phi.p();
    let size = p.pow(phi.n() - 1 - n0);
    let step = p.pow(n0);
    (0..size).map(|i| 1 + step * i).collect()
}

pub fn galois_orbit(phi: &CharacterTable, n0: u32) -> Result<Vec<CharacterTable>> {
    require_depth(phi, n0)?;
    Ok(orbit_multipliers(phi, n0).into_iter().map(|t| phi.pow(t)).collect())
}

/// φ_av(a): ζ^x if p^{n-1-n₀} divides the exponent x of φ(a), else 0.
pub fn phi_average(phi: &CharacterTable, a: i64, n0: u32) -> Result<Complex64> {
    require_depth(phi, n0)?;
    let scale = phi.p().pow(phi.n() - 1 - n0);
    Ok(match phi.exponent_at(a) {
        Some(x) if x % scale == 0 => phi.tables().zeta_pow(x),
        _ => Complex64::new(0.0, 0.0),
    })
}

/// W(ψ) = p^{-n} G(ψ)² ψ(N): the character part of the root number of the
/// twist by ψ of a level-N form.
pub fn twist_root_number(psi: &CharacterTable, level: u64) -> Result<Complex64> {
    if gcd(level, psi.p()) != 1 {
        return Err(Error::InvalidInput(format!(
            "level {level} must be coprime to p = {}",
            psi.p()
        )));
    }
    let g = gauss_sum(psi);
    Ok(g * g * psi.value(level as i64) / psi.conductor() as f64)
}

/// Per-orbit Gauss data, computed once and reused for every argument.
#[derive(Clone, Debug)]
pub struct GaloisAverager {
    orbit: Vec<CharacterTable>,
    modulus: f64,
    // G₁^{c_φ}(ψ̄)·G(ψ)
    g1g: Vec<Complex64>,
    gauss: Vec<Complex64>,
    g1_conj: Vec<Complex64>,
    root_numbers: Option<Vec<Complex64>>,
    level: Option<u64>,
}

impl GaloisAverager {
    /// `level` is needed only for the ι-average.
    pub fn new(phi: &CharacterTable, n0: u32, level: Option<u64>) -> Result<Self> {
        let c = additive_parameter(phi, n0)?.c;
        let orbit = galois_orbit(phi, n0)?;
        let mut g1g = Vec::with_capacity(orbit.len());
        let mut gauss = Vec::with_capacity(orbit.len());
        let mut g1_conj = Vec::with_capacity(orbit.len());
        for psi in &orbit {
            let g = gauss_sum(psi);
            let g1 = partial_gauss_sum_in_class(&psi.conj(), c, n0)?;
            gauss.push(g);
            g1_conj.push(g1);
            g1g.push(g1 * g);
        }
        let root_numbers = match level {
            Some(nl) => {
                if gcd(nl, phi.p()) != 1 {
                    return Err(Error::InvalidInput(format!(
                        "level {nl} must be coprime to p = {}",
                        phi.p()
                    )));
                }
                Some(
                    orbit
                        .iter()
                        .zip(&gauss)
                        .map(|(psi, g)| g * g * psi.value(nl as i64) / psi.conductor() as f64)
                        .collect(),
                )
            }
            None => None,
        };
        Ok(Self {
            modulus: phi.conductor() as f64,
            orbit,
            g1g,
            gauss,
            g1_conj,
            root_numbers,
            level,
        })
    }

    pub fn orbit(&self) -> &[CharacterTable] {
        &self.orbit
    }

    pub fn gauss_sums(&self) -> &[Complex64] {
        &self.gauss
    }

    pub fn level(&self) -> Option<u64> {
        self.level
    }

    fn norm(&self) -> f64 {
        self.orbit.len() as f64 * self.modulus
    }

    /// (1/|G|p^n) Σ_σ G₁(ψ̄) G(ψ) ψ(a).
    pub fn g_average(&self, a: i64) -> Complex64 {
        let s: Complex64 =
            self.orbit.iter().zip(&self.g1g).map(|(psi, w)| w * psi.value(a)).sum();
        s / self.norm()
    }

    fn roots(&self) -> Result<&[Complex64]> {
        self.root_numbers
            .as_deref()
            .ok_or_else(|| Error::Precondition("averager was built without a level".into()))
    }

    /// (1/|G|p^n) Σ_σ conj(G₁(ψ̄) G(ψ)) W(ψ) ψ̄(a), W(ψ) = p^{-n} G(ψ)² ψ(N).
    pub fn g_average_iota(&self, a: i64) -> Result<Complex64> {
        let roots = self.roots()?;
        let s: Complex64 = self
            .orbit
            .iter()
            .zip(&self.g1g)
            .zip(roots)
            .map(|((psi, w), r)| w.conj() * r * psi.value(a).conj())
            .sum();
        Ok(s / self.norm())
    }

    /// The ι-average with the factors in the adelic normalization:
    /// (1/|G|p^n) Σ_σ G₁(ψ̄) G(ψ) p^{-n} G(ψ̄)² ψ(N) ψ̄(a).
    pub fn g_average_iota_displayed(&self, a: i64) -> Result<Complex64> {
        let nl = self
            .level
            .ok_or_else(|| Error::Precondition("averager was built without a level".into()))?;
        let s: Complex64 = self
            .orbit
            .iter()
            .zip(&self.g1g)
            .zip(&self.gauss)
            .map(|((psi, w), g)| {
                // G(ψ̄) = conj G(ψ) for even ψ
                let gb = g.conj();
                w * gb * gb * psi.value(nl as i64) * psi.value(a).conj() / self.modulus
            })
            .sum();
        Ok(s / self.norm())
    }

    /// G₁^{c_φ}(ψ̄) for each orbit member.
    pub fn partial_sums(&self) -> &[Complex64] {
        &self.g1_conj
    }
}

/// G_av(φ, a) = (1/|G|p^n) Σ_σ G₁(φ̄^σ) G(φ^σ) φ^σ(a).
pub fn g_average(phi: &CharacterTable, a: i64, n0: u32) -> Result<Complex64> {
    Ok(GaloisAverager::new(phi, n0, None)?.g_average(a))
}

/// G^ι_av(φ, a) for a form of level N coprime to p.
pub fn g_average_iota(phi: &CharacterTable, a: i64, n0: u32, level: u64) -> Result<Complex64> {
    GaloisAverager::new(phi, n0, Some(level))?.g_average_iota(a)
}
