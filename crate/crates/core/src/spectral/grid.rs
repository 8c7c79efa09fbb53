use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{contract, Result};

/// A uniform discretization of the torus `[0, period)`.
///
/// Lattice index `j` corresponds to the angular frequency `2πj/period`.
/// Coefficient storage follows FFT order: slot `i < M/2` holds `j = i`,
/// slot `i > M/2` holds `j = i - M`, and slot `M/2` (the Nyquist mode)
/// is never populated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    period: f64,
    mode_count: usize,
}

impl PeriodicGrid {
    pub fn new(period: f64, mode_count: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(contract(format!("period must be positive, got {period}")));
        }
        if mode_count < 4 || !mode_count.is_multiple_of(2) {
            return Err(contract(format!(
                "mode count must be even and at least 4, got {mode_count}"
            )));
        }
        Ok(Self { period, mode_count })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Frequency spacing `2π/λ`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn frequency(&self, j: i64) -> f64 {
        j as f64 * self.spacing()
    }

    /// Largest lattice index that may carry energy (Nyquist excluded).
    pub fn max_index(&self) -> i64 {
        self.mode_count as i64 / 2 - 1
    }

    pub fn index_of_slot(&self, slot: usize) -> i64 {
        let m = self.mode_count as i64;
        let s = slot as i64;
        if s < m / 2 {
            s
        } else {
            s - m
        }
    }

    /// Storage slot for lattice index `j`, or `None` if `j` is outside the
    /// retained range or is the Nyquist index.
    pub fn slot_of(&self, j: i64) -> Option<usize> {
        if j.abs() > self.max_index() {
            return None;
        }
        let m = self.mode_count as i64;
        Some(if j >= 0 { j as usize } else { (j + m) as usize })
    }

    /// Collocation nodes `x_n = nλ/M`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.period / self.mode_count as f64;
        (0..self.mode_count).map(|n| n as f64 * h).collect()
    }

    /// Largest retained index under a dealiasing rule.
    pub fn dealias_band(&self, rule: DealiasRule) -> i64 {
        let m = self.mode_count as i64;
        match rule {
            DealiasRule::TwoThirds => (m - 1) / 3,
            DealiasRule::Half => (m - 1) / 4,
        }
    }

    /// Same period, different resolution.
    pub fn with_mode_count(&self, mode_count: usize) -> Result<Self> {
        Self::new(self.period, mode_count)
    }
}

/// Dealiasing rules for pseudospectral products.
///
/// `TwoThirds` keeps `|j| < M/3`, which makes the truncated quadratic
/// product exact; `Half` keeps `|j| < M/4`, exact for cubic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DealiasRule {
    TwoThirds,
    Half,
}

impl DealiasRule {
    /// Highest polynomial degree the rule resolves exactly.
    pub fn degree(self) -> usize {
        match self {
            DealiasRule::TwoThirds => 2,
            DealiasRule::Half => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_roundtrip() {
        let g = PeriodicGrid::new(2.0 * PI, 16).unwrap();
        for slot in 0..16 {
            let j = g.index_of_slot(slot);
            if slot == 8 {
                assert_eq!(g.slot_of(j), None);
            } else {
                assert_eq!(g.slot_of(j), Some(slot));
            }
        }
        assert!((g.spacing() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_odd_modes() {
        assert!(PeriodicGrid::new(1.0, 15).is_err());
        assert!(PeriodicGrid::new(-1.0, 16).is_err());
    }

    #[test]
    fn dealias_bands() {
        let g = PeriodicGrid::new(1.0, 32).unwrap();
        assert_eq!(g.dealias_band(DealiasRule::TwoThirds), 10);
        assert_eq!(g.dealias_band(DealiasRule::Half), 7);
        let g = PeriodicGrid::new(1.0, 64).unwrap();
        assert_eq!(g.dealias_band(DealiasRule::TwoThirds), 21);
        assert_eq!(g.dealias_band(DealiasRule::Half), 15);
    }
}
