use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

use super::{build_hierarchy_with, resonant_pairings, HierarchyOptions, ResonantConvention};
use crate::forms::KMultiplier;
use crate::spectral::{EnergyMultiplier, PeriodicGrid};

/// Dyadic size `2^⌊log₂|x|⌋` of a nonzero value (0 for 0).
pub fn dyadic(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else {
        2f64.powi(a.log2().floor() as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundKind {
    /// `|M₃| ≤ min(N₁, N₂, N₃)`
    M3,
    /// `|M₄| ≲ |α₄| m²(min(N_i, N_jk)) / Π(N + N_i)`
    M4,
    /// `|M₅| ≲ [m²(N_{*45}) N₄₅ / ((N+N₁)(N+N₂)(N+N₃)(N+N₄₅))]_sym`
    M5,
}

impl BoundKind {
    fn arity(self) -> usize {
        match self {
            BoundKind::M3 => 3,
            BoundKind::M4 => 4,
            BoundKind::M5 => 5,
        }
    }
}

/// Sampling plan on the integer lattice (`λ = 2π`, so `ξ ∈ ℤ`).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BoundScanConfig {
    /// Total sample budget spread evenly over the dyadic blocks.
    pub samples: usize,
    /// Coordinates range over `2^min_exp ≤ |ξ| < 2^(max_exp+1)`.
    pub min_exp: u32,
    pub max_exp: u32,
    pub seed: u64,
    pub convention: ResonantConvention,
}

impl BoundScanConfig {
    /// Exponent range covering `N/8 … 64N` for dyadic `N`.
    pub fn covering(n: f64, samples: usize, seed: u64) -> Self {
        let e = n.log2().round() as i64;
        Self {
            samples,
            min_exp: (e - 3).max(0) as u32,
            max_exp: (e + 6) as u32,
            seed,
            convention: ResonantConvention::Limit,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BlockStat {
    /// Sorted dyadic exponents of `|ξ_i|`.
    pub key: Vec<u32>,
    pub samples: usize,
    /// Points skipped because both sides vanish (resonant `M₄`).
    pub excluded: usize,
    pub sup_ratio: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DyadicBoundReport {
    pub kind: BoundKind,
    pub cutoff: f64,
    pub exponent: f64,
    pub blocks: Vec<BlockStat>,
    pub total_samples: usize,
    /// Median of the positive block sups.
    pub median_sup: f64,
    pub global_sup: f64,
    /// Blocks whose sup exceeds ten times the median.
    pub flagged: Vec<Vec<u32>>,
    pub all_finite: bool,
}

impl DyadicBoundReport {
    pub fn passes_constant_alarm(&self) -> bool {
        self.all_finite && self.flagged.is_empty()
    }
}

/// Nondecreasing exponent tuples of length `len` in `lo..=hi`.
fn strata(len: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    fn rec(cur: &mut Vec<u32>, len: usize, lo: u32, hi: u32, out: &mut Vec<Vec<u32>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(lo);
        for e in start..=hi {
            cur.push(e);
            rec(cur, len, lo, hi, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), len, lo, hi, &mut out);
    out
}

fn exponent_of(j: i64) -> u32 {
    63 - j.unsigned_abs().leading_zeros()
}

struct BoundEval {
    n: f64,
    m: EnergyMultiplier,
}

impl BoundEval {
    fn m2(&self, x: f64) -> f64 {
        if x == 0.0 {
            1.0
        } else {
            self.m.eval_sq(x)
        }
    }

    fn m3(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|&x| dyadic(x)).fold(f64::INFINITY, f64::min)
    }

    fn m4(&self, xi: &[f64]) -> f64 {
        let a = 3.0 * (xi[0] + xi[1]) * (xi[0] + xi[2]) * (xi[0] + xi[3]);
        let sizes = xi
            .iter()
            .copied()
            .chain([xi[0] + xi[1], xi[0] + xi[2], xi[0] + xi[3]])
            .map(dyadic)
            .fold(f64::INFINITY, f64::min);
        let den: f64 = xi.iter().map(|&x| self.n + dyadic(x)).product();
        a.abs() * self.m2(sizes) / den
    }

    fn m5(&self, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut terms = 0;
        for a in 0..5 {
            for b in a + 1..5 {
                terms += 1;
                let rest: Vec<f64> = (0..5)
                    .filter(|&i| i != a && i != b)
                    .map(|i| xi[i])
                    .collect();
                let n45 = dyadic(xi[a] + xi[b]);
                if n45 == 0.0 {
                    continue;
                }
                let nstar = [
                    dyadic(rest[0]),
                    dyadic(rest[1]),
                    dyadic(rest[2]),
                    n45,
                    dyadic(rest[0] + rest[1]),
                    dyadic(rest[0] + rest[2]),
                    dyadic(rest[1] + rest[2]),
                ]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
                let den = (self.n + dyadic(rest[0]))
                    * (self.n + dyadic(rest[1]))
                    * (self.n + dyadic(rest[2]))
                    * (self.n + n45);
                acc += self.m2(nstar) * n45 / den;
            }
        }
        acc / terms as f64
    }
}

/// Sampled sup of `|M_k| / bound` per dyadic block, for `m` with a finite
/// cutoff `N`.
pub fn verify_pointwise_bounds(
    m: EnergyMultiplier,
    kind: BoundKind,
    cfg: &BoundScanConfig,
) -> crate::Result<DyadicBoundReport> {
    let n = match m.cutoff() {
        crate::spectral::Cutoff::Finite(n) => n,
        crate::spectral::Cutoff::Infinite => {
            return Err(crate::error::contract("bound scans need a finite cutoff"))
        }
    };
    let k = kind.arity();
    let tab = 1usize << (cfg.max_exp + 4);
    let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, tab)?;
    let h = build_hierarchy_with(m, HierarchyOptions::for_lattice(grid, cfg.convention));
    let target: &dyn KMultiplier = match kind {
        BoundKind::M3 => h.m3.as_ref(),
        BoundKind::M4 => h.m4.as_ref(),
        BoundKind::M5 => h.m5.as_ref(),
    };
    let be = BoundEval { n, m };
    let strata = strata(k - 1, cfg.min_exp, cfg.max_exp);
    let per = (cfg.samples / strata.len()).max(1);
    let (lo, hi) = (1i64 << cfg.min_exp, 1i64 << (cfg.max_exp + 1));

    let partial: Vec<BTreeMap<Vec<u32>, BlockStat>> = strata
        .par_iter()
        .enumerate()
        .map(|(si, exps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ (si as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut blocks: BTreeMap<Vec<u32>, BlockStat> = BTreeMap::new();
            let mut idx = vec![0i64; k];
            let mut drawn = 0;
            let mut attempts = 0;
            while drawn < per && attempts < 20 * per {
                attempts += 1;
                for (slot, &e) in exps.iter().enumerate() {
                    let mag = rng.gen_range(1i64 << e..1i64 << (e + 1));
                    idx[slot] = if rng.gen_bool(0.5) { mag } else { -mag };
                }
                let last = -idx[..k - 1].iter().sum::<i64>();
                if last.abs() < lo || last.abs() >= hi {
                    continue;
                }
                idx[k - 1] = last;
                drawn += 1;
                let xi: Vec<f64> = idx.iter().map(|&j| j as f64).collect();
                let mut key: Vec<u32> = idx.iter().map(|&j| exponent_of(j)).collect();
                key.sort_unstable();
                let stat = blocks.entry(key.clone()).or_insert(BlockStat {
                    key,
                    samples: 0,
                    excluded: 0,
                    sup_ratio: 0.0,
                });
                stat.samples += 1;
                let bound = match kind {
                    BoundKind::M3 => be.m3(&xi),
                    BoundKind::M4 => {
                        let x4 = [xi[0], xi[1], xi[2], xi[3]];
                        if resonant_pairings(&x4).iter().any(|&r| r) {
                            stat.excluded += 1;
                            continue;
                        }
                        be.m4(&xi)
                    }
                    BoundKind::M5 => be.m5(&xi),
                };
                let value = target.eval_lattice(&idx, 1.0).norm();
                let ratio = if bound > 0.0 {
                    value / bound
                } else if value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                stat.sup_ratio = stat.sup_ratio.max(ratio);
            }
            blocks
        })
        .collect();

    let mut merged: BTreeMap<Vec<u32>, BlockStat> = BTreeMap::new();
    for part in partial {
        for (key, s) in part {
            let e = merged.entry(key.clone()).or_insert(BlockStat {
                key,
                samples: 0,
                excluded: 0,
                sup_ratio: 0.0,
            });
            e.samples += s.samples;
            e.excluded += s.excluded;
            e.sup_ratio = e.sup_ratio.max(s.sup_ratio);
        }
    }
    let blocks: Vec<BlockStat> = merged.into_values().collect();
    let mut positive: Vec<f64> = blocks
        .iter()
        .map(|b| b.sup_ratio)
        .filter(|&r| r > 0.0)
        .collect();
    positive.sort_by(f64::total_cmp);
    let median_sup = if positive.is_empty() {
        0.0
    } else if positive.len() % 2 == 1 {
        positive[positive.len() / 2]
    } else {
        0.5 * (positive[positive.len() / 2 - 1] + positive[positive.len() / 2])
    };
    let global_sup = blocks.iter().map(|b| b.sup_ratio).fold(0.0, f64::max);
    let all_finite = blocks.iter().all(|b| b.sup_ratio.is_finite());
    let flagged = blocks
        .iter()
        .filter(|b| b.sup_ratio.is_nan() || b.sup_ratio > 10.0 * median_sup)
        .map(|b| b.key.clone())
        .collect();
    Ok(DyadicBoundReport {
        kind,
        cutoff: n,
        exponent: m.exponent(),
        total_samples: blocks.iter().map(|b| b.samples).sum(),
        blocks,
        median_sup,
        global_sup,
        flagged,
        all_finite,
    })
}

/// Scan for the mean-value estimates on a weight `a`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MvtConfig {
    pub xi_min: f64,
    pub xi_max: f64,
    /// `|η|, |λ'| ≤ eta_fraction · |ξ|`
    pub eta_fraction: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for MvtConfig {
    fn default() -> Self {
        Self {
            xi_min: 1.0,
            xi_max: 1e4,
            eta_fraction: 0.125,
            samples: 200_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MvtReport {
    /// `sup |a(ξ+η) − a(ξ)| / (|η| a(ξ)/|ξ|)`
    pub first_sup: f64,
    /// `sup |a(ξ+η+λ') − a(ξ+η) − a(ξ+λ') + a(ξ)| / (|η||λ'| a(ξ)/|ξ|²)`
    pub second_sup: f64,
    pub samples: usize,
}

/// Empirical constants in the first and second mean-value estimates for `a`,
/// with `ξ` log-uniform in `[xi_min, xi_max]` and both signs.
pub fn verify_mvt_control<F>(a: F, cfg: &MvtConfig) -> MvtReport
where
    F: Fn(f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (l0, l1) = (cfg.xi_min.ln(), cfg.xi_max.ln());
    let mut first = 0.0f64;
    let mut second = 0.0f64;
    for _ in 0..cfg.samples {
        let mag = rng.gen_range(l0..=l1).exp();
        let xi = if rng.gen_bool(0.5) { mag } else { -mag };
        let r = cfg.eta_fraction * mag;
        let eta = rng.gen_range(-r..=r);
        let lam = rng.gen_range(-r..=r);
        if eta == 0.0 || lam == 0.0 {
            continue;
        }
        let a0 = a(xi);
        let d1 = (a(xi + eta) - a0).abs();
        first = first.max(d1 / (eta.abs() * a0 / mag));
        let d2 = (a(xi + eta + lam) - a(xi + eta) - a(xi + lam) + a0).abs();
        second = second.max(d2 / (eta.abs() * lam.abs() * a0 / (mag * mag)));
    }
    MvtReport {
        first_sup: first,
        second_sup: second,
        samples: cfg.samples,
    }
}
