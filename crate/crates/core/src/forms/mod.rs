//! Frequency k-multipliers, symmetrization, the k-linear forms `Λ_k` and
//! the derivative rule that generates the modified-energy hierarchy.

mod boundary;
mod check;
mod lambda;
mod resonance;

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{EnergyMultiplier, PeriodicGrid};

pub use boundary::{
    pair_list, prop1_boundary, prop1_boundary_full, prop1_constant, BoundaryMultiplier,
};
pub use check::{time_derivative_check, DerivativeReport};
pub use lambda::{
    brute_force_lambda, eval_lambda, eval_lambda_real, eval_lambda_serial, eval_lambda_uniform,
    eval_lambda_uniform_real, LambdaValue,
};
pub use resonance::{
    alpha, alpha3_factored, alpha4_factored, fact_four_holds, fact_three_holds, resonance_int,
    ResonanceWeight, WithResonance,
};

/// Largest supported arity.
pub const MAX_ARITY: usize = 5;

/// A complex function of `k` frequencies.
///
/// Only values on the hyperplane `ξ₁+⋯+ξ_k = 0` enter `Λ_k`.
pub trait KMultiplier: Send + Sync {
    fn arity(&self) -> usize;

    fn eval(&self, xi: &[f64]) -> Complex64;

    fn is_symmetric(&self) -> bool {
        false
    }

    /// Whether the multiplier divides by frequencies and so needs every
    /// field to have a vanishing mean mode.
    fn requires_mean_zero(&self) -> bool {
        false
    }

    /// Evaluate at lattice indices `j_i` with `ξ_i = j_i · spacing`.
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let mut xi = [0.0; MAX_ARITY];
        for (x, &j) in xi.iter_mut().zip(idx) {
            *x = j as f64 * spacing;
        }
        self.eval(&xi[..idx.len()])
    }
}

pub type SharedMultiplier = Arc<dyn KMultiplier>;

impl fmt::Debug for dyn KMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "KMultiplier(arity={}, symmetric={})",
            self.arity(),
            self.is_symmetric()
        )
    }
}

pub(crate) fn check_arity(k: usize) -> Result<()> {
    if (2..=MAX_ARITY).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedArity(k))
    }
}

/// A multiplier given by a closure.
pub struct FnMultiplier<F> {
    arity: usize,
    symmetric: bool,
    mean_zero: bool,
    f: F,
}

impl<F> FnMultiplier<F>
where
    F: Fn(&[f64]) -> Complex64 + Send + Sync,
{
    pub fn new(arity: usize, f: F) -> Self {
        Self {
            arity,
            symmetric: false,
            mean_zero: false,
            f,
        }
    }

    /// Declare the closure permutation invariant (caller's responsibility).
    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn mean_zero(mut self) -> Self {
        self.mean_zero = true;
        self
    }
}

impl<F> KMultiplier for FnMultiplier<F>
where
    F: Fn(&[f64]) -> Complex64 + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.f)(xi)
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    fn requires_mean_zero(&self) -> bool {
        self.mean_zero
    }
}

/// The constant multiplier.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub arity: usize,
    pub value: Complex64,
}

impl Constant {
    pub fn new(arity: usize, value: f64) -> Self {
        Self {
            arity,
            value: Complex64::new(value, 0.0),
        }
    }
}

impl KMultiplier for Constant {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, _xi: &[f64]) -> Complex64 {
        self.value
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `m(ξ₁)m(ξ₂)⋯m(ξ_k)` for one energy multiplier.
#[derive(Debug, Clone, Copy)]
pub struct TensorPower {
    pub m: EnergyMultiplier,
    pub arity: usize,
}

impl KMultiplier for TensorPower {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(xi.iter().map(|&x| self.m.eval(x)).product(), 0.0)
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Zero whenever some argument exceeds `max_freq` in modulus.
///
/// Wrapping a multiplier this way makes the derivative rule exact for the
/// Galerkin-truncated flow, whose nonlinearity is projected onto the band.
pub struct BandLimited {
    inner: SharedMultiplier,
    max_freq: f64,
}

impl BandLimited {
    pub fn new(inner: SharedMultiplier, max_freq: f64) -> Self {
        Self { inner, max_freq }
    }

    /// Band `|j| ≤ band` on `grid`, with a half-spacing margin.
    pub fn on_grid(inner: SharedMultiplier, grid: &PeriodicGrid, band: i64) -> Self {
        Self::new(inner, (band as f64 + 0.5) * grid.spacing())
    }

    pub fn max_freq(&self) -> f64 {
        self.max_freq
    }
}

impl KMultiplier for BandLimited {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        if xi.iter().any(|x| x.abs() > self.max_freq) {
            Complex64::new(0.0, 0.0)
        } else {
            self.inner.eval(xi)
        }
    }
    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }
    fn requires_mean_zero(&self) -> bool {
        self.inner.requires_mean_zero()
    }
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        if idx
            .iter()
            .any(|&j| (j as f64 * spacing).abs() > self.max_freq)
        {
            Complex64::new(0.0, 0.0)
        } else {
            self.inner.eval_lattice(idx, spacing)
        }
    }
}

/// All permutations of `0..k`, lexicographic.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Full `(1/k!) Σ_σ m∘σ`.
pub struct Symmetrized {
    inner: SharedMultiplier,
    perms: Vec<Vec<usize>>,
}

impl KMultiplier for Symmetrized {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let k = xi.len();
        let mut buf = [0.0; MAX_ARITY];
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.perms {
            for (slot, &src) in p.iter().enumerate() {
                buf[slot] = xi[src];
            }
            acc += self.inner.eval(&buf[..k]);
        }
        acc / self.perms.len() as f64
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn requires_mean_zero(&self) -> bool {
        self.inner.requires_mean_zero()
    }
}

/// Full permutation average. Symmetric inputs are returned unchanged.
pub fn symmetrize(m: SharedMultiplier) -> Result<SharedMultiplier> {
    let k = m.arity();
    if k > MAX_ARITY {
        return Err(Error::UnsupportedArity(k));
    }
    if m.is_symmetric() {
        return Ok(m);
    }
    Ok(Arc::new(Symmetrized {
        perms: permutations(k),
        inner: m,
    }))
}

/// Full permutation average even for inputs flagged symmetric; test oracle.
pub fn symmetrize_full(m: SharedMultiplier) -> Result<SharedMultiplier> {
    let k = m.arity();
    if k > MAX_ARITY {
        return Err(Error::UnsupportedArity(k));
    }
    Ok(Arc::new(Symmetrized {
        perms: permutations(k),
        inner: m,
    }))
}
