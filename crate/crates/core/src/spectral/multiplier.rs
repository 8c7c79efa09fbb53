use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{contract, Result};

/// Where the energy multiplier stops being the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    Finite(f64),
    /// `N = ∞`: the operator `I` is the identity.
    Infinite,
}

/// Interpolation of `m` across `N ≤ |ξ| ≤ 2N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BridgeRule {
    /// `m = (|ξ|/N)^s` for every `|ξ| > N`; continuous with a kink at `N`.
    #[default]
    Sharp,
    /// `log m` is the cubic Hermite interpolant in `log2(|ξ|/N)` matching
    /// value and slope at both ends; `m` is C¹ and monotone.
    CubicLog,
}

/// The even 1-multiplier `m(ξ; N, s)` defining the smoothing operator `I`.
///
/// `m = 1` for `|ξ| ≤ N` and `m = N^{-s}|ξ|^s` for `|ξ| ≥ 2N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMultiplier {
    cutoff: Cutoff,
    exponent: f64,
    bridge: BridgeRule,
}

impl EnergyMultiplier {
    pub fn new(cutoff: f64, exponent: f64, bridge: BridgeRule) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff >= 1.0) {
            return Err(contract(format!("cutoff N must be >= 1, got {cutoff}")));
        }
        if !(exponent > -1.5 && exponent < 1.0) {
            return Err(contract(format!(
                "exponent s must lie in (-3/2, 1), got {exponent}"
            )));
        }
        Ok(Self {
            cutoff: Cutoff::Finite(cutoff),
            exponent,
            bridge,
        })
    }

    pub fn sharp(cutoff: f64, exponent: f64) -> Result<Self> {
        Self::new(cutoff, exponent, BridgeRule::Sharp)
    }

    /// The identity multiplier (`N = ∞`).
    pub fn identity() -> Self {
        Self {
            cutoff: Cutoff::Infinite,
            exponent: 0.0,
            bridge: BridgeRule::Sharp,
        }
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn bridge(&self) -> BridgeRule {
        self.bridge
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.cutoff, Cutoff::Infinite)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let n = match self.cutoff {
            Cutoff::Infinite => return 1.0,
            Cutoff::Finite(n) => n,
        };
        let a = xi.abs();
        if a <= n {
            return 1.0;
        }
        let s = self.exponent;
        match self.bridge {
            BridgeRule::Sharp => (a / n).powf(s),
            BridgeRule::CubicLog => {
                if a >= 2.0 * n {
                    (a / n).powf(s)
                } else {
                    let t = (a / n).log2();
                    (s * LN_2 * (2.0 * t * t - t * t * t)).exp()
                }
            }
        }
    }

    pub fn eval_sq(&self, xi: f64) -> f64 {
        let m = self.eval(xi);
        m * m
    }
}

/// Sobolev regularity index with the bracket `⟨ξ⟩ = 2 + |ξ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex(pub f64);

impl SobolevIndex {
    pub fn bracket(xi: f64) -> f64 {
        2.0 + xi.abs()
    }

    /// `⟨ξ⟩^{2s}`
    pub fn weight_sq(&self, xi: f64) -> f64 {
        Self::bracket(xi).powf(2.0 * self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes() {
        let m = EnergyMultiplier::sharp(8.0, -0.5).unwrap();
        assert_eq!(m.eval(3.0), 1.0);
        assert_eq!(m.eval(-8.0), 1.0);
        let at_2n = m.eval(16.0);
        assert!((at_2n - 2f64.powf(-0.5)).abs() < 1e-15);
        assert!((m.eval(100.0) - 8f64.powf(0.5) * 100f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn cubic_bridge_is_continuous_and_matches_ends() {
        let m = EnergyMultiplier::new(4.0, -0.74, BridgeRule::CubicLog).unwrap();
        let eps = 1e-9;
        assert!((m.eval(4.0 + eps) - 1.0).abs() < 1e-8);
        assert!((m.eval(8.0 - eps) - m.eval(8.0 + eps)).abs() < 1e-8);
        // slope continuity at 2N
        let h = 1e-5;
        let left = (m.eval(8.0) - m.eval(8.0 - h)) / h;
        let right = (m.eval(8.0 + h) - m.eval(8.0)) / h;
        assert!((left - right).abs() < 1e-4);
    }

    #[test]
    fn monotone_and_bounded_for_negative_s() {
        for bridge in [BridgeRule::Sharp, BridgeRule::CubicLog] {
            let m = EnergyMultiplier::new(5.0, -1.2, bridge).unwrap();
            let mut prev = 1.0;
            for i in 0..2000 {
                let xi = i as f64 * 0.05;
                let v = m.eval(xi);
                assert!(v > 0.0 && v <= 1.0);
                assert!(v <= prev + 1e-15);
                assert_eq!(v, m.eval(-xi));
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(EnergyMultiplier::sharp(0.5, -0.5).is_err());
        assert!(EnergyMultiplier::sharp(4.0, -1.5).is_err());
        assert!(EnergyMultiplier::sharp(4.0, 1.0).is_err());
    }

    #[test]
    fn identity_sentinel() {
        let m = EnergyMultiplier::identity();
        assert_eq!(m.eval(1e9), 1.0);
    }
}
