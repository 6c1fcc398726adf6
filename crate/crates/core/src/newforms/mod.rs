//! Exact Fourier coefficients of desk-scale newforms over ℚ.

pub mod cache;
mod delta;
mod elliptic;
mod series;

use std::path::Path;

pub use delta::{delta_series, DELTA_MAX_BOUND};
pub use elliptic::{discriminant, elliptic_series, trace_of_frobenius, AInvariants};
pub use series::{twist_coefficients, CoefficientSeries, NewformSpec, TwistedCoefficients};

pub use crate::lfunctions::fricke_sign;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProviderKind {
    Delta,
    Elliptic { a: AInvariants, level: u64 },
}

/// A registered coefficient provider.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provider {
    pub label: &'static str,
    pub aliases: &'static [&'static str],
    pub weight: u32,
    pub level: u64,
    pub sign: i8,
    pub kind: ProviderKind,
}

/// Δ and the optimal curves 11a1, 14a1, 15a1, 17a1, 37a1 (Cremona labels).
pub const PROVIDERS: [Provider; 6] = [
    Provider { label: "delta", aliases: &["Delta", "tau"], weight: 12, level: 1, sign: 1, kind: ProviderKind::Delta },
    Provider {
        label: "11a",
        aliases: &["11a1"],
        weight: 2,
        level: 11,
        sign: 1,
        kind: ProviderKind::Elliptic { a: [0, -1, 1, -10, -20], level: 11 },
    },
    Provider {
        label: "14a",
        aliases: &["14a1"],
        weight: 2,
        level: 14,
        sign: 1,
        kind: ProviderKind::Elliptic { a: [1, 0, 1, 4, -6], level: 14 },
    },
    Provider {
        label: "15a",
        aliases: &["15a1"],
        weight: 2,
        level: 15,
        sign: 1,
        kind: ProviderKind::Elliptic { a: [1, 1, 1, -10, -10], level: 15 },
    },
    Provider {
        label: "17a",
        aliases: &["17a1"],
        weight: 2,
        level: 17,
        sign: 1,
        kind: ProviderKind::Elliptic { a: [1, -1, 1, -1, -14], level: 17 },
    },
    Provider {
        label: "37a",
        aliases: &["37a1"],
        weight: 2,
        level: 37,
        sign: -1,
        kind: ProviderKind::Elliptic { a: [0, 0, 1, -1, 0], level: 37 },
    },
];

pub fn lookup(label: &str) -> Result<&'static Provider> {
    PROVIDERS
        .iter()
        .find(|p| p.label == label || p.aliases.contains(&label))
        .ok_or_else(|| Error::UnknownForm(label.to_string()))
}

impl Provider {
    pub fn spec(&self) -> NewformSpec {
        NewformSpec {
            label: self.label.to_string(),
            weight: self.weight,
            level: self.level,
            sign: self.sign,
        }
    }

    pub fn compute(&self, bound: usize) -> Result<CoefficientSeries> {
        match self.kind {
            ProviderKind::Delta => delta_series(bound),
            ProviderKind::Elliptic { a, level } => {
                elliptic_series(self.label, &a, level, bound, self.sign)
            }
        }
    }
}

/// Coefficients of `label` up to `bound`, reusing any cache entry with a
/// bound at least as large and writing a new entry otherwise.
pub fn load_series(label: &str, bound: usize, cache_dir: Option<&Path>) -> Result<CoefficientSeries> {
    let provider = lookup(label)?;
    let Some(dir) = cache_dir else {
        return provider.compute(bound);
    };
    let spec = provider.spec();
    for (_, b, path) in cache::list_entries(dir, Some(provider.label))? {
        if b >= bound {
            return cache::read_series(&path, &spec)?.truncated(bound);
        }
    }
    let series = provider.compute(bound)?;
    cache::write_series(dir, &series)?;
    Ok(series)
}
