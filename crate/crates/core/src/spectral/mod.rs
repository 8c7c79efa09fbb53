//! Periodic grids, Fourier coefficient fields and the energy multiplier.

mod field;
mod grid;
mod multiplier;

pub use field::{FftPair, SpectralField};
pub use grid::{DealiasRule, PeriodicGrid};
pub use multiplier::{BridgeRule, Cutoff, EnergyMultiplier, SobolevIndex};
