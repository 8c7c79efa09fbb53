//! The modified energies `E²_I, E³_I, E⁴_I`, their multipliers and checks.

mod bounds;
mod energy;
mod multipliers;

pub use bounds::{
    dyadic, verify_mvt_control, verify_pointwise_bounds, BlockStat, BoundKind, BoundScanConfig,
    DyadicBoundReport, MvtConfig, MvtReport,
};
pub use energy::{
    derivative_chain, eval_e2, eval_e3, eval_e4, hamiltonian_energy, ChainReport, EnergyLedger,
    HAMILTONIAN_CUBIC_COEFF,
};
pub use multipliers::{
    m3_closed, m4_real_common_denominator, m4_real_two_term, resonant_pairings, sigma3_closed,
    HierarchyMultipliers, HierarchyOptions, ResonantConvention,
};

use crate::spectral::EnergyMultiplier;

/// Hierarchy with default options (no band, `limit` convention).
pub fn build_hierarchy(m: EnergyMultiplier) -> HierarchyMultipliers {
    HierarchyMultipliers::build(m, HierarchyOptions::default())
}

pub fn build_hierarchy_with(m: EnergyMultiplier, opts: HierarchyOptions) -> HierarchyMultipliers {
    HierarchyMultipliers::build(m, opts)
}

#[cfg(test)]
mod tests;
