use num_complex::Complex64;
use std::sync::Arc;

use super::{symmetrize_full, FnMultiplier, KMultiplier, SharedMultiplier, MAX_ARITY};
use crate::error::{contract, Error, Result};

/// Constant `c` in `d/dt Λ_k(σ) = Λ_k(σα_k) + c Λ_{k+1}([σ(…, ξ_k+ξ_{k+1})(ξ_k+ξ_{k+1})]_sym)`
/// for `∂_t u + ∂_x³u + ½∂_x(u²) = 0` under the `e^{-iξx}` transform:
/// `c = -ik/2`.
pub fn prop1_constant(k: usize) -> Complex64 {
    Complex64::new(0.0, -(k as f64) / 2.0)
}

/// Unordered pairs `(a, b)`, `a < b`, of `0..n`.
pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            v.push((a, b));
        }
    }
    v
}

/// The `(k+1)`-multiplier produced from a symmetric `k`-multiplier by the
/// derivative rule, evaluated as an average over the fused pair.
pub struct BoundaryMultiplier {
    sigma: SharedMultiplier,
    constant: Complex64,
    pairs: Vec<(usize, usize)>,
}

impl BoundaryMultiplier {
    pub fn sigma(&self) -> &SharedMultiplier {
        &self.sigma
    }

    pub fn constant(&self) -> Complex64 {
        self.constant
    }

    /// `|c| · mean_pairs |σ(…)(ξ_a+ξ_b)|`, the size of the terms whose
    /// average is [`KMultiplier::eval`]; the natural scale for round-off.
    pub fn term_scale(&self, xi: &[f64]) -> f64 {
        let k = self.sigma.arity();
        let mut buf = [0.0; MAX_ARITY];
        let mut acc = 0.0;
        for &p in &self.pairs {
            let fused = Self::fuse(xi, p, &mut buf);
            if fused != 0.0 {
                acc += (self.sigma.eval(&buf[..k]) * fused).norm();
            }
        }
        acc * self.constant.norm() / self.pairs.len() as f64
    }

    fn fuse<T: Copy + std::ops::Add<Output = T>>(
        args: &[T],
        (a, b): (usize, usize),
        out: &mut [T; MAX_ARITY],
    ) -> T {
        let mut w = 0;
        for (i, &x) in args.iter().enumerate() {
            if i != a && i != b {
                out[w] = x;
                w += 1;
            }
        }
        let fused = args[a] + args[b];
        out[w] = fused;
        fused
    }
}

impl KMultiplier for BoundaryMultiplier {
    fn arity(&self) -> usize {
        self.sigma.arity() + 1
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let k = self.sigma.arity();
        let mut buf = [0.0; MAX_ARITY];
        let mut acc = Complex64::new(0.0, 0.0);
        for &p in &self.pairs {
            let fused = Self::fuse(xi, p, &mut buf);
            if fused != 0.0 {
                acc += self.sigma.eval(&buf[..k]) * fused;
            }
        }
        acc * self.constant / self.pairs.len() as f64
    }

    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let k = self.sigma.arity();
        let mut buf = [0i64; MAX_ARITY];
        let mut acc = Complex64::new(0.0, 0.0);
        for &p in &self.pairs {
            let fused = Self::fuse(idx, p, &mut buf);
            if fused != 0 {
                acc += self.sigma.eval_lattice(&buf[..k], spacing) * (fused as f64 * spacing);
            }
        }
        acc * self.constant / self.pairs.len() as f64
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn requires_mean_zero(&self) -> bool {
        self.sigma.requires_mean_zero()
    }
}

fn check_sigma(sigma: &SharedMultiplier) -> Result<usize> {
    let k = sigma.arity();
    if !(2..=4).contains(&k) {
        return Err(Error::UnsupportedArity(k));
    }
    if !sigma.is_symmetric() {
        return Err(contract("derivative rule requires a symmetric multiplier"));
    }
    Ok(k)
}

/// The boundary multiplier of a symmetric `σ`, arity `k ≤ 4`, using the
/// reduced `C(k+1, 2)`-term average. Pairs whose fused frequency vanishes
/// contribute zero (the factor `ξ_a+ξ_b` kills them).
pub fn prop1_boundary(sigma: SharedMultiplier) -> Result<BoundaryMultiplier> {
    let k = check_sigma(&sigma)?;
    Ok(BoundaryMultiplier {
        constant: prop1_constant(k),
        pairs: pair_list(k + 1),
        sigma,
    })
}

/// Same multiplier via the full `(k+1)!`-term permutation average.
pub fn prop1_boundary_full(sigma: SharedMultiplier) -> Result<SharedMultiplier> {
    let k = check_sigma(&sigma)?;
    let c = prop1_constant(k);
    let s = sigma.clone();
    let mean_zero = sigma.requires_mean_zero();
    let raw = FnMultiplier::new(k + 1, move |xi: &[f64]| {
        let fused = xi[k - 1] + xi[k];
        if fused == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut buf = [0.0; MAX_ARITY];
        buf[..k - 1].copy_from_slice(&xi[..k - 1]);
        buf[k - 1] = fused;
        c * s.eval(&buf[..k]) * fused
    });
    let raw: SharedMultiplier = if mean_zero {
        Arc::new(raw.mean_zero())
    } else {
        Arc::new(raw)
    };
    symmetrize_full(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{Constant, TensorPower};
    use crate::spectral::EnergyMultiplier;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hyperplane(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(-20.0..20.0)).collect();
        v.push(-v.iter().sum::<f64>());
        v
    }

    #[test]
    fn constant_sigma_gives_sum_of_frequencies() {
        // σ ≡ 1, k = 2: boundary is -i·(2/3)(ξ₁+ξ₂+ξ₃), zero on the hyperplane
        let b = prop1_boundary(Arc::new(Constant::new(2, 1.0))).unwrap();
        let xi = [1.0, 2.0, 4.0];
        let expect = Complex64::new(0.0, -1.0) * (2.0 * 7.0 / 3.0);
        assert!((b.eval(&xi) - expect).norm() < 1e-14);
        assert!(b.eval(&[1.0, 2.0, -3.0]).norm() < 1e-14);
        // σ constant, k = 3: boundary ∝ ξ₁+⋯+ξ₄
        let b = prop1_boundary(Arc::new(Constant::new(3, 1.0 / 3.0))).unwrap();
        assert!(b.eval(&[1.0, 2.0, -5.0, 2.0]).norm() < 1e-14);
    }

    #[test]
    fn identity_tensor_gives_zero_m3() {
        let m = EnergyMultiplier::identity();
        let b = prop1_boundary(Arc::new(TensorPower { m, arity: 2 })).unwrap();
        assert!(b.eval(&[1.5, -4.0, 2.5]).norm() < 1e-14);
    }

    #[test]
    fn reduced_matches_full_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 2..=4 {
            let sigma: SharedMultiplier = Arc::new(
                FnMultiplier::new(k, |x: &[f64]| {
                    let p2: f64 = x.iter().map(|v| v * v).sum();
                    let p3: f64 = x.iter().map(|v| v * v * v).sum();
                    Complex64::new(p2.sqrt().cos() + 0.1 * p3, p2 * 0.01)
                })
                .symmetric(),
            );
            let red = prop1_boundary(sigma.clone()).unwrap();
            let full = prop1_boundary_full(sigma).unwrap();
            for _ in 0..50 {
                let xi = hyperplane(&mut rng, k + 1);
                let (a, b) = (red.eval(&xi), full.eval(&xi));
                assert!(
                    (a - b).norm() <= 1e-11 * b.norm().max(1.0),
                    "k={k}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let s: SharedMultiplier =
            Arc::new(FnMultiplier::new(2, |x: &[f64]| Complex64::new(x[0], 0.0)));
        assert!(prop1_boundary(s).is_err());
        assert!(matches!(
            prop1_boundary(Arc::new(Constant::new(5, 1.0))),
            Err(Error::UnsupportedArity(5))
        ));
    }

    #[test]
    fn constant_regression() {
        assert_eq!(prop1_constant(2), Complex64::new(0.0, -1.0));
        assert_eq!(prop1_constant(3), Complex64::new(0.0, -1.5));
        assert_eq!(prop1_constant(4), Complex64::new(0.0, -2.0));
    }
}
