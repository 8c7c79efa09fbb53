use num_complex::Complex64;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::forms::{
    prop1_boundary, BoundaryMultiplier, KMultiplier, SharedMultiplier, TensorPower,
};
use crate::spectral::{Cutoff, EnergyMultiplier, PeriodicGrid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const RESONANCE_REL_TOL: f64 = 1e-9;

/// Value assigned to `σ₄` where `α₄` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ResonantConvention {
    /// Extrapolated limit of `−M₄/α₄` approaching the resonant point.
    #[default]
    Limit,
    Zero,
}

/// Options for [`build_hierarchy_with`](super::build_hierarchy_with).
#[derive(Debug, Clone, Copy, Default)]
pub struct HierarchyOptions {
    pub convention: ResonantConvention,
    /// Retained band `|ξ| ≤ max_freq` of a Galerkin-truncated flow. When set,
    /// `σ₃` and `σ₄` vanish as soon as one argument leaves the band, which
    /// makes the derivative identities exact for the truncated dynamics.
    pub band_freq: Option<f64>,
    /// Lattice on which `m²` is tabulated.
    pub lattice: Option<PeriodicGrid>,
}

impl HierarchyOptions {
    /// Options matching a solver that keeps `|j| ≤ band` on `grid`.
    pub fn for_band(grid: PeriodicGrid, band: i64, convention: ResonantConvention) -> Self {
        Self {
            convention,
            band_freq: Some((band as f64 + 0.5) * grid.spacing()),
            lattice: Some(grid),
        }
    }

    pub fn for_lattice(grid: PeriodicGrid, convention: ResonantConvention) -> Self {
        Self {
            convention,
            band_freq: None,
            lattice: Some(grid),
        }
    }
}

/// `m²` with an optional table on a lattice.
#[derive(Debug)]
pub(crate) struct Core {
    pub m: EnergyMultiplier,
    pub convention: ResonantConvention,
    pub band_freq: Option<f64>,
    spacing: f64,
    table: Vec<f64>,
    pub double_resonance_hits: AtomicUsize,
}

impl Core {
    fn new(m: EnergyMultiplier, opts: &HierarchyOptions) -> Self {
        let (spacing, table) = match opts.lattice {
            Some(g) => {
                let jmax = 4 * (g.max_index() + 1) as usize;
                let t = (0..=jmax)
                    .map(|j| m.eval_sq(g.frequency(j as i64)))
                    .collect();
                (g.spacing(), t)
            }
            None => (0.0, Vec::new()),
        };
        Self {
            m,
            convention: opts.convention,
            band_freq: opts.band_freq,
            spacing,
            table,
            double_resonance_hits: AtomicUsize::new(0),
        }
    }

    #[inline]
    pub fn m2(&self, xi: f64) -> f64 {
        self.m.eval_sq(xi)
    }

    #[inline]
    pub fn m2_lattice(&self, j: i64, spacing: f64) -> f64 {
        let a = j.unsigned_abs() as usize;
        if spacing == self.spacing && a < self.table.len() {
            self.table[a]
        } else {
            self.m.eval_sq(j as f64 * spacing)
        }
    }

    #[inline]
    fn out_of_band(&self, xi: &[f64]) -> bool {
        match self.band_freq {
            Some(b) => xi.iter().any(|x| x.abs() > b),
            None => false,
        }
    }

    /// Largest `|ξ|` on which `m ≡ 1`.
    fn flat_radius(&self) -> f64 {
        match self.m.cutoff() {
            Cutoff::Infinite => f64::INFINITY,
            Cutoff::Finite(n) => n,
        }
    }
}

// ---- closed forms on plain values ----

/// `M₃ = (i/3) Σ m²(ξ_i) ξ_i`.
pub fn m3_closed(xi: [f64; 3], m2: [f64; 3]) -> Complex64 {
    Complex64::new(0.0, (m2[0] * xi[0] + m2[1] * xi[1] + m2[2] * xi[2]) / 3.0)
}

/// `σ₃ = −M₃/α₃ = −Σ m²(ξ_i)ξ_i / (9ξ₁ξ₂ξ₃)`; zero when an argument is zero.
pub fn sigma3_closed(xi: [f64; 3], m2: [f64; 3]) -> f64 {
    let p = xi[0] * xi[1] * xi[2];
    if p == 0.0 {
        return 0.0;
    }
    -(m2[0] * xi[0] + m2[1] * xi[1] + m2[2] * xi[2]) / (9.0 * p)
}

/// Pair sums `(ξ₁+ξ₂, ξ₁+ξ₃, ξ₁+ξ₄)`.
fn pair_sums(xi: &[f64; 4]) -> [f64; 3] {
    [xi[0] + xi[1], xi[0] + xi[2], xi[0] + xi[3]]
}

/// The real `R` with `M₄ = −iR`, written as a resonant part plus a sum of
/// `m²(ξ)/ξ` terms:
/// `R = −(1/108)(a/ξ₁ξ₂ξ₃ξ₄)[Σm²(ξ_i) − Σ_pairs m²(ξ₁+ξ_j)] + (1/36)Σ m²(ξ_i)/ξ_i`
/// with `a = 3(ξ₁+ξ₂)(ξ₁+ξ₃)(ξ₁+ξ₄) = Σξ_i³`.
///
/// The second sum is grouped along the pairing with the smallest pair sum so
/// that the two cancelling pairs meet first; on an exact pair resonance the
/// result is exactly zero.
pub fn m4_real_two_term(xi: [f64; 4], m2: [f64; 4], m2_pairs: [f64; 3]) -> f64 {
    let s = pair_sums(&xi);
    let prod = xi[0] * xi[1] * xi[2] * xi[3];
    let a = 3.0 * s[0] * s[1] * s[2];
    let bracket = m2.iter().sum::<f64>() - m2_pairs.iter().sum::<f64>();
    let first = -(a / prod) * bracket / 108.0;
    let t: [f64; 4] = std::array::from_fn(|i| m2[i] / xi[i]);
    let p = (0..3)
        .min_by(|&i, &j| s[i].abs().total_cmp(&s[j].abs()))
        .unwrap_or(0);
    let (x, y, z) = match p {
        0 => (1, 2, 3),
        1 => (2, 1, 3),
        _ => (3, 1, 2),
    };
    let second = ((t[0] + t[x]) + (t[y] + t[z])) / 36.0;
    first + second
}

/// The real `R` with `M₄ = −iR` as a single fraction over `ξ₁ξ₂ξ₃ξ₄`.
pub fn m4_real_common_denominator(xi: [f64; 4], m2: [f64; 4], m2_pairs: [f64; 3]) -> f64 {
    let pairs: f64 = m2_pairs.iter().sum();
    let prod = xi[0] * xi[1] * xi[2] * xi[3];
    let mut acc = 0.0;
    for skip in (0..4).rev() {
        let mut tp = 1.0;
        let mut ms = 0.0;
        for i in 0..4 {
            if i != skip {
                tp *= xi[i];
                ms += m2[i];
            }
        }
        acc += tp * (ms - pairs);
    }
    -acc / (36.0 * prod)
}

// ---- multiplier objects ----

/// Three-term closed form of `M₃`.
pub struct M3Closed(pub(crate) Arc<Core>);

impl KMultiplier for M3Closed {
    fn arity(&self) -> usize {
        3
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let x = [xi[0], xi[1], xi[2]];
        m3_closed(x, x.map(|v| self.0.m2(v)))
    }
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let x = [idx[0], idx[1], idx[2]].map(|j| j as f64 * spacing);
        let m2 = [idx[0], idx[1], idx[2]].map(|j| self.0.m2_lattice(j, spacing));
        m3_closed(x, m2)
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

pub struct Sigma3(pub(crate) Arc<Core>);

impl KMultiplier for Sigma3 {
    fn arity(&self) -> usize {
        3
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        if self.0.out_of_band(xi) {
            return ZERO;
        }
        let x = [xi[0], xi[1], xi[2]];
        Complex64::new(sigma3_closed(x, x.map(|v| self.0.m2(v))), 0.0)
    }
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let x = [idx[0], idx[1], idx[2]].map(|j| j as f64 * spacing);
        if self.0.out_of_band(&x) {
            return ZERO;
        }
        let m2 = [idx[0], idx[1], idx[2]].map(|j| self.0.m2_lattice(j, spacing));
        Complex64::new(sigma3_closed(x, m2), 0.0)
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn requires_mean_zero(&self) -> bool {
        true
    }
}

/// `M₄`: closed form without a band, boundary average of the banded `σ₃`
/// otherwise.
pub struct M4 {
    core: Arc<Core>,
    banded: Option<BoundaryMultiplier>,
}

impl M4 {
    fn flat(&self, xi: &[f64; 4]) -> bool {
        let r = self.core.flat_radius();
        let s = pair_sums(xi);
        xi.iter().chain(&s).all(|v| v.abs() <= r)
    }

    fn closed(&self, xi: [f64; 4], m2: [f64; 4], m2p: [f64; 3]) -> Complex64 {
        if xi.contains(&0.0) {
            return ZERO;
        }
        Complex64::new(0.0, -m4_real_two_term(xi, m2, m2p))
    }
}

impl KMultiplier for M4 {
    fn arity(&self) -> usize {
        4
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let x = [xi[0], xi[1], xi[2], xi[3]];
        if self.flat(&x) {
            return ZERO;
        }
        match &self.banded {
            Some(b) => b.eval(xi),
            None => {
                let c = &self.core;
                self.closed(x, x.map(|v| c.m2(v)), pair_sums(&x).map(|v| c.m2(v)))
            }
        }
    }
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let x = [idx[0], idx[1], idx[2], idx[3]].map(|j| j as f64 * spacing);
        if self.flat(&x) {
            return ZERO;
        }
        match &self.banded {
            Some(b) => b.eval_lattice(idx, spacing),
            None => {
                let c = &self.core;
                let m2 = [idx[0], idx[1], idx[2], idx[3]].map(|j| c.m2_lattice(j, spacing));
                let m2p = [idx[0] + idx[1], idx[0] + idx[2], idx[0] + idx[3]]
                    .map(|j| c.m2_lattice(j, spacing));
                self.closed(x, m2, m2p)
            }
        }
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn requires_mean_zero(&self) -> bool {
        true
    }
}

/// Which pair sums of a quadruple vanish (pairings `12|34`, `13|24`, `14|23`).
pub fn resonant_pairings(xi: &[f64; 4]) -> [bool; 3] {
    let scale = xi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    pair_sums(xi).map(|s| s.abs() <= RESONANCE_REL_TOL * scale)
}

pub struct Sigma4 {
    core: Arc<Core>,
    m4: Arc<M4>,
}

impl Sigma4 {
    /// `−M₄/α₄` off resonance, `α₄ = 3i(ξ₁+ξ₂)(ξ₁+ξ₃)(ξ₁+ξ₄)`.
    fn quotient(&self, xi: [f64; 4], m4: Complex64) -> f64 {
        let s = pair_sums(&xi);
        let a = 3.0 * s[0] * s[1] * s[2];
        // M₄ = −iR, α₄ = ia  ⇒  −M₄/α₄ = R/a
        (m4 * Complex64::new(0.0, 1.0)).re / a
    }

    fn off_lattice(&self, xi: [f64; 4]) -> f64 {
        self.quotient(xi, self.m4.eval(&xi))
    }

    /// Richardson-extrapolated one-sided limit of `−M₄/α₄`, averaged over
    /// every perturbation `ξ_x += h, ξ_y −= h` that moves each vanishing pair
    /// sum off zero.
    fn limit(&self, xi: [f64; 4], resonant: [bool; 3]) -> f64 {
        let scale = xi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let h = 1e-3 * scale;
        let pairings: [[usize; 2]; 3] = [[0, 1], [0, 2], [0, 3]];
        let mut total = 0.0;
        let mut paths = 0usize;
        for x in 0..4 {
            for y in 0..4 {
                if x == y {
                    continue;
                }
                let moves_all = pairings.iter().zip(&resonant).all(|(p, &r)| {
                    !r || {
                        let d = p.contains(&x) as i32 - p.contains(&y) as i32;
                        d != 0
                    }
                });
                if !moves_all {
                    continue;
                }
                let f = |hh: f64| {
                    let mut z = xi;
                    z[x] += hh;
                    z[y] -= hh;
                    self.off_lattice(z)
                };
                let (f1, f2, f4) = (f(h), f(h / 2.0), f(h / 4.0));
                let r1 = 2.0 * f2 - f1;
                let r2 = 2.0 * f4 - f2;
                total += (4.0 * r2 - r1) / 3.0;
                paths += 1;
            }
        }
        if paths == 0 {
            0.0
        } else {
            total / paths as f64
        }
    }

    fn resolve(&self, xi: [f64; 4], m4: impl FnOnce() -> Complex64) -> Complex64 {
        if xi.contains(&0.0) || self.core.out_of_band(&xi) {
            return ZERO;
        }
        let res = resonant_pairings(&xi);
        let hits = res.iter().filter(|&&r| r).count();
        if hits == 0 {
            return Complex64::new(self.quotient(xi, m4()), 0.0);
        }
        match self.core.convention {
            ResonantConvention::Zero => ZERO,
            ResonantConvention::Limit => {
                if hits > 1 {
                    self.core
                        .double_resonance_hits
                        .fetch_add(1, Ordering::Relaxed);
                }
                Complex64::new(self.limit(xi, res), 0.0)
            }
        }
    }
}

impl KMultiplier for Sigma4 {
    fn arity(&self) -> usize {
        4
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let x = [xi[0], xi[1], xi[2], xi[3]];
        self.resolve(x, || self.m4.eval(xi))
    }
    fn eval_lattice(&self, idx: &[i64], spacing: f64) -> Complex64 {
        let x = [idx[0], idx[1], idx[2], idx[3]].map(|j| j as f64 * spacing);
        self.resolve(x, || self.m4.eval_lattice(idx, spacing))
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn requires_mean_zero(&self) -> bool {
        true
    }
}

/// The full hierarchy generated from one energy multiplier.
pub struct HierarchyMultipliers {
    pub(crate) core: Arc<Core>,
    /// `m(ξ₁)m(ξ₂)`, so that `Λ₂` of it is `E²_I`.
    pub e2: SharedMultiplier,
    pub m3: SharedMultiplier,
    pub sigma3: SharedMultiplier,
    pub m4: SharedMultiplier,
    pub sigma4: SharedMultiplier,
    pub m5: SharedMultiplier,
    sigma4_typed: Arc<Sigma4>,
    m5_typed: Arc<BoundaryMultiplier>,
}

impl std::fmt::Debug for HierarchyMultipliers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HierarchyMultipliers")
            .field("m", &self.core.m)
            .field("convention", &self.core.convention)
            .field("band_freq", &self.core.band_freq)
            .finish()
    }
}

impl HierarchyMultipliers {
    pub(crate) fn build(m: EnergyMultiplier, opts: HierarchyOptions) -> Self {
        let core = Arc::new(Core::new(m, &opts));
        let sigma3 = Arc::new(Sigma3(core.clone()));
        let banded = opts
            .band_freq
            .map(|_| prop1_boundary(sigma3.clone()).expect("σ₃ is symmetric of arity 3"));
        let m4 = Arc::new(M4 {
            core: core.clone(),
            banded,
        });
        let sigma4 = Arc::new(Sigma4 {
            core: core.clone(),
            m4: m4.clone(),
        });
        let m5 = Arc::new(prop1_boundary(sigma4.clone()).expect("σ₄ is symmetric of arity 4"));
        Self {
            e2: Arc::new(TensorPower { m, arity: 2 }),
            m3: Arc::new(M3Closed(core.clone())),
            sigma3,
            m4,
            sigma4: sigma4.clone(),
            m5: m5.clone(),
            m5_typed: m5,
            sigma4_typed: sigma4,
            core,
        }
    }

    pub fn energy_multiplier(&self) -> EnergyMultiplier {
        self.core.m
    }

    pub fn convention(&self) -> ResonantConvention {
        self.core.convention
    }

    pub fn band_freq(&self) -> Option<f64> {
        self.core.band_freq
    }

    /// `σ₄` at a hyperplane quadruple with the configured resonant rule.
    pub fn sigma4_at(&self, xi: [f64; 4]) -> crate::Result<Complex64> {
        if xi.contains(&0.0) {
            return Err(crate::Error::ZeroFrequency);
        }
        Ok(self.sigma4_typed.eval(&xi))
    }

    /// Number of doubly resonant points at which the `limit` rule averaged
    /// over paths since the hierarchy was built.
    pub fn double_resonance_hits(&self) -> usize {
        self.core.double_resonance_hits.load(Ordering::Relaxed)
    }

    /// `M₃` built by the generic derivative rule from `m⊗m`.
    pub fn m3_generic(&self) -> SharedMultiplier {
        Arc::new(prop1_boundary(self.e2.clone()).expect("symmetric"))
    }

    /// `M₄` built by the generic derivative rule from `σ₃`.
    pub fn m4_generic(&self) -> SharedMultiplier {
        Arc::new(prop1_boundary(self.sigma3.clone()).expect("symmetric"))
    }

    /// Size of the pair terms averaged in `M₅` (scale for round-off).
    pub fn m5_term_scale(&self, xi: &[f64]) -> f64 {
        self.m5_typed.term_scale(xi)
    }

    /// `M₅` from the full 120-term permutation average.
    pub fn m5_full(&self) -> SharedMultiplier {
        crate::forms::prop1_boundary_full(self.sigma4.clone()).expect("symmetric")
    }

    /// `M₄` on the unbanded closed form with pair-sum form written out.
    pub fn m4_common_denominator(&self, xi: [f64; 4]) -> Complex64 {
        if xi.contains(&0.0) {
            return ZERO;
        }
        let c = &self.core;
        let m2 = xi.map(|v| c.m2(v));
        let m2p = pair_sums(&xi).map(|v| c.m2(v));
        Complex64::new(0.0, -m4_real_common_denominator(xi, m2, m2p))
    }

    /// `M₄` from the two-term closed form, ignoring any band.
    pub fn m4_two_term(&self, xi: [f64; 4]) -> Complex64 {
        if xi.contains(&0.0) {
            return ZERO;
        }
        let c = &self.core;
        let m2 = xi.map(|v| c.m2(v));
        let m2p = pair_sums(&xi).map(|v| c.m2(v));
        Complex64::new(0.0, -m4_real_two_term(xi, m2, m2p))
    }
}
