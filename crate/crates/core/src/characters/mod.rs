//! Primitive Dirichlet characters of p-power order and conductor p^n, their
//! Gauss sums, and Galois averages.

mod galois;
mod gauss;
mod setting;
mod table;

pub use galois::{
    g_average, g_average_iota, galois_orbit, phi_average, twist_root_number, GaloisAverager,
};
pub use gauss::{
    additive_parameter, gauss_sum, kloosterman_partial, partial_gauss_sum,
    partial_gauss_sum_in_class, AdditiveParameter,
};
pub use setting::{
    cone_bound_check, power_congruence_floor, BaseFieldQ, ConeCount, PowerCongruence,
    PrimeSetting, TeichmullerSet,
};
pub use table::{
    enumerate_characters, evaluate, primitive_root, CharValue, CharacterTable, ModulusTables,
};
