pub mod error;
pub mod experiments;
pub mod forms;
pub mod hierarchy;
pub mod lattice;
pub mod miura;
pub mod numerics;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use forms::{KMultiplier, SharedMultiplier};
pub use spectral::{
    BridgeRule, Cutoff, DealiasRule, EnergyMultiplier, PeriodicGrid, SobolevIndex, SpectralField,
};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
