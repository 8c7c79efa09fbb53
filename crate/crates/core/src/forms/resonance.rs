use num_complex::Complex64;

use super::{KMultiplier, SharedMultiplier};

/// `α_k(ξ) = i(ξ₁³ + ⋯ + ξ_k³)`
pub fn alpha(xi: &[f64]) -> Complex64 {
    Complex64::new(0.0, xi.iter().map(|x| x * x * x).sum())
}

/// `3iξ₁ξ₂ξ₃`, equal to `α₃` on the hyperplane.
pub fn alpha3_factored(xi: &[f64]) -> Complex64 {
    Complex64::new(0.0, 3.0 * xi[0] * xi[1] * xi[2])
}

/// `3i(ξ₁+ξ₂)(ξ₁+ξ₃)(ξ₁+ξ₄)`, equal to `α₄` on the hyperplane.
pub fn alpha4_factored(xi: &[f64]) -> Complex64 {
    Complex64::new(
        0.0,
        3.0 * (xi[0] + xi[1]) * (xi[0] + xi[2]) * (xi[0] + xi[3]),
    )
}

/// `Σ j_i³` in exact integer arithmetic.
pub fn resonance_int(idx: &[i64]) -> i128 {
    idx.iter().map(|&j| (j as i128).pow(3)).sum()
}

/// `j₁³+j₂³+j₃³ = 3j₁j₂j₃` for a zero-sum triple.
pub fn fact_three_holds(j: [i64; 3]) -> bool {
    debug_assert_eq!(j.iter().sum::<i64>(), 0);
    resonance_int(&j) == 3 * j[0] as i128 * j[1] as i128 * j[2] as i128
}

/// `Σ j_i³ = 3(j₁+j₂)(j₁+j₃)(j₁+j₄)` for a zero-sum quadruple.
pub fn fact_four_holds(j: [i64; 4]) -> bool {
    debug_assert_eq!(j.iter().sum::<i64>(), 0);
    let [a, b, c, d] = j.map(|x| x as i128);
    resonance_int(&j) == 3 * (a + b) * (a + c) * (a + d)
}

/// `α_k` as a multiplier.
#[derive(Debug, Clone, Copy)]
pub struct ResonanceWeight {
    pub arity: usize,
}

impl KMultiplier for ResonanceWeight {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        alpha(xi)
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `m · α_k`
pub struct WithResonance(pub SharedMultiplier);

impl KMultiplier for WithResonance {
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.0.eval(xi) * alpha(xi)
    }
    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }
    fn requires_mean_zero(&self) -> bool {
        self.0.requires_mean_zero()
    }
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let s3 = spacing * spacing * spacing;
        let a = resonance_int(idx) as f64 * s3;
        self.0.eval_lattice(idx, spacing) * Complex64::new(0.0, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn factorizations_exact(a in -10_000i64..10_000, b in -10_000i64..10_000, c in -10_000i64..10_000) {
            prop_assert!(fact_three_holds([a, b, -a - b]));
            prop_assert!(fact_four_holds([a, b, c, -a - b - c]));
        }

        #[test]
        fn float_factorizations(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
            let xi3 = [a, b, -a - b];
            let xi4 = [a, b, c, -a - b - c];
            let scale = 3.0 * 150f64.powi(3);
            prop_assert!((alpha(&xi3) - alpha3_factored(&xi3)).norm() <= 1e-12 * scale);
            prop_assert!((alpha(&xi4) - alpha4_factored(&xi4)).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn alpha_two_vanishes() {
        assert_eq!(alpha(&[3.5, -3.5]).norm(), 0.0);
    }
}
