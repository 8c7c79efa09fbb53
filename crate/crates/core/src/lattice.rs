//! Exact lattice counts on the rational lattice `Z/λ` behind the periodic
//! L⁴ Strichartz bound and the μ-set measure bound.
//!
//! Frequencies here are `k = a/λ` with integer `a`; this module does not use
//! the `2π/λ` spacing of the spectral grid.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{contract, Result};

/// Scan configuration for [`strichartz_count`].
#[derive(Debug, Clone, Serialize)]
pub struct CountConfig {
    /// Total τ-window width.
    pub window: u32,
    /// Extra widths reported alongside the main one.
    pub extra_windows: Vec<u32>,
    /// Only `|k| ≥ k_min_frac·N` enters the sup. `0` scans every `|k| ≤ 4N`.
    pub k_min_frac: f64,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            window: 2,
            extra_windows: vec![1, 4],
            k_min_frac: 1.0,
        }
    }
}

/// Best `(k, τ)` found for one window width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSup {
    pub window: u32,
    /// Exact number of lattice points `k₁`.
    pub count: u64,
    /// Numerator of `k` (`k = k_num/λ`).
    pub k_num: i64,
    /// Window center.
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub n: f64,
    pub lambda: u64,
    pub config: CountConfig,
    pub main: WindowSup,
    pub extra: Vec<WindowSup>,
    /// `count/λ` for the main window.
    pub m_sup: f64,
    /// `1` for `N ≤ 1`, else `1/√N + 1/λ`.
    pub bound: f64,
    pub ratio: f64,
}

impl CountReport {
    pub fn k_at_sup(&self) -> f64 {
        self.main.k_num as f64 / self.lambda as f64
    }

    pub fn csv_header() -> &'static str {
        "N,lambda,k_at_sup,tau_at_sup,count,bound,ratio"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.17e},{},{:.17e},{:.17e}",
            self.n,
            self.lambda,
            self.k_at_sup(),
            self.main.tau,
            self.main.count,
            self.bound,
            self.ratio
        )
    }
}

pub fn write_count_csv<W: Write>(reports: &[CountReport], mut w: W) -> Result<()> {
    writeln!(w, "{}", CountReport::csv_header())?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// `2Nλ` as an integer; `N` must be a power of two with `N ≥ 1/2`.
fn shell_twice(n: f64, lambda: u64) -> Result<i64> {
    if !(n >= 0.5 && n.is_finite() && (n.log2().fract() == 0.0)) {
        return Err(contract(format!("N must be dyadic and >= 1/2, got {n}")));
    }
    if lambda == 0 {
        return Err(contract("lambda must be >= 1"));
    }
    let v = 2.0 * n * lambda as f64;
    if v > (1u64 << 40) as f64 {
        return Err(contract("N·λ too large for the exhaustive count"));
    }
    Ok(v as i64)
}

/// `|b|` in the shell `[N, 2N)` on the lattice `Z/λ`, given `2Nλ`.
#[inline]
fn in_shell(b: i64, two_nl: i64) -> bool {
    let t = 2 * b.abs();
    t >= two_nl && t < 2 * two_nl
}

/// `λ³(k³ − 3kk₁(k − k₁))` for `k = a/λ`, `k₁ = b/λ`.
#[inline]
pub fn cubic_value(a: i64, b: i64) -> i128 {
    let (a, b) = (a as i128, b as i128);
    a * a * a - 3 * a * b * (a - b)
}

/// Weighted sorted cubic values for fixed `a ≥ 0`.
///
/// The cubic is symmetric under `b ↦ a − b` and increasing in `b` for
/// `b ≥ a/2`, as is the shell condition, so only that half is generated.
fn sorted_values(a: i64, two_nl: i64) -> Vec<(i128, u64)> {
    debug_assert!(a >= 0);
    let hi = two_nl; // |b| < 2N·λ
    let start = (a + 1) / 2;
    let mut out = Vec::new();
    for b in start..=(a + hi) {
        if in_shell(b, two_nl) && in_shell(a - b, two_nl) {
            let w = if 2 * b == a { 1 } else { 2 };
            out.push((cubic_value(a, b), w));
        }
    }
    out
}

/// Heaviest closed window of integer width `width` over sorted weighted
/// values; returns `(weight, lowest value in the window)`.
fn sliding_max(vals: &[(i128, u64)], width: i128) -> (u64, i128) {
    let mut best = (0u64, 0i128);
    let mut lo = 0;
    let mut acc = 0u64;
    for hi in 0..vals.len() {
        acc += vals[hi].1;
        while vals[hi].0 - vals[lo].0 > width {
            acc -= vals[lo].1;
            lo += 1;
        }
        if acc > best.0 {
            best = (acc, vals[lo].0);
        }
    }
    best
}

/// Exact count of `k₁ ∈ Z/λ` with `|k₁|, |k − k₁| ∈ [N, 2N)` and
/// `k³ − 3kk₁(k − k₁)` inside a τ-window, for one `k = a/λ` and width.
pub fn count_at(a: i64, n: f64, lambda: u64, window: u32) -> Result<WindowSup> {
    let two_nl = shell_twice(n, lambda)?;
    let l3 = (lambda as i128).pow(3);
    // k ↦ −k maps the count at τ to the count at −τ
    let vals = sorted_values(a.abs(), two_nl);
    let (count, low) = sliding_max(&vals, window as i128 * l3);
    let mut tau = if count == 0 {
        0.0
    } else {
        (low as f64 + 0.5 * window as f64 * l3 as f64) / l3 as f64
    };
    if a < 0 {
        tau = -tau;
    }
    Ok(WindowSup {
        window,
        count,
        k_num: a,
        tau,
    })
}

/// `C(N, λ)⁴`: `1` for `N ≤ 1`, `1/√N + 1/λ` otherwise.
pub fn strichartz_bound(n: f64, lambda: u64) -> f64 {
    if n <= 1.0 {
        1.0
    } else {
        1.0 / n.sqrt() + 1.0 / lambda as f64
    }
}

/// Sup over `k` (and τ) of the normalized count.
///
/// Counts are symmetric under `k ↦ −k`, so only `k ≥ 0` is scanned. Ties
/// resolve to the smallest `k`.
pub fn strichartz_count(n: f64, lambda: u64, cfg: &CountConfig) -> Result<CountReport> {
    let two_nl = shell_twice(n, lambda)?;
    if cfg.window == 0 || cfg.extra_windows.contains(&0) {
        return Err(contract("window widths must be positive"));
    }
    if !(cfg.k_min_frac >= 0.0 && cfg.k_min_frac < 4.0) {
        return Err(contract("k_min_frac must lie in [0, 4)"));
    }
    // |k| < 4N
    let a_max = 2 * two_nl - 1;
    let a_min = (cfg.k_min_frac * n * lambda as f64).ceil() as i64;
    let l3 = (lambda as i128).pow(3);
    let mut widths = vec![cfg.window];
    widths.extend(cfg.extra_windows.iter().copied());
    let per_a: Vec<Vec<(u64, i128)>> = (a_min..=a_max)
        .into_par_iter()
        .map(|a| {
            let vals = sorted_values(a, two_nl);
            widths
                .iter()
                .map(|&w| sliding_max(&vals, w as i128 * l3))
                .collect()
        })
        .collect();
    let sups: Vec<WindowSup> = widths
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let mut best = WindowSup {
                window: w,
                count: 0,
                k_num: a_min,
                tau: 0.0,
            };
            for (i, row) in per_a.iter().enumerate() {
                let (c, low) = row[wi];
                if c > best.count {
                    best = WindowSup {
                        window: w,
                        count: c,
                        k_num: a_min + i as i64,
                        tau: (low as f64 + 0.5 * w as f64 * l3 as f64) / l3 as f64,
                    };
                }
            }
            best
        })
        .collect();
    let main = sups[0];
    let m_sup = main.count as f64 / lambda as f64;
    let bound = strichartz_bound(n, lambda);
    Ok(CountReport {
        n,
        lambda,
        config: cfg.clone(),
        main,
        extra: sups[1..].to_vec(),
        m_sup,
        bound,
        ratio: m_sup / bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MuSetReport {
    /// `ξ = xi_num/λ`
    pub xi_num: i64,
    pub m: f64,
    pub lambda: u64,
    /// Number of `ξ₁` whose interval meets the shell.
    pub intervals: usize,
    pub measure: f64,
    /// `λM^{3/4}`
    pub bound: f64,
    pub ratio: f64,
}

impl MuSetReport {
    pub fn csv_header() -> &'static str {
        "xi,M,lambda,intervals,measure,bound,ratio"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.17e},{:.17e},{:.17e}",
            self.xi_num as f64 / self.lambda as f64,
            self.m,
            self.lambda,
            self.intervals,
            self.measure,
            self.bound,
            self.ratio
        )
    }
}

fn bracket(x: f64) -> f64 {
    2.0 + x.abs()
}

/// Measure of `{μ : |μ| ∈ [M, 2M), μ = −3ξξ₁ξ₂ + O(⟨ξξ₁ξ₂⟩^{1/100})}` over
/// `ξ₁, ξ₂ ∈ Z/λ \ {0}` with `ξ₁ + ξ₂ = ξ`.
///
/// Each `ξ₁` contributes the interval of half-width `⟨ξξ₁ξ₂⟩^{1/100}`
/// about `−3ξξ₁ξ₂`; the union is measured by a sorted endpoint sweep.
pub fn mu_set_measure(xi_num: i64, m: f64, lambda: u64) -> Result<MuSetReport> {
    if xi_num == 0 {
        return Err(contract("xi must be nonzero"));
    }
    if lambda == 0 {
        return Err(contract("lambda must be >= 1"));
    }
    if !(m >= 1.0 && m.is_finite() && m.log2().fract() == 0.0) {
        return Err(contract(format!("M must be dyadic and >= 1, got {m}")));
    }
    let l = lambda as f64;
    let xi = xi_num as f64 / l;
    let mu_of = |b: i64| -3.0 * xi * (b as f64 / l) * ((xi_num - b) as f64 / l);
    let radius = |mu: f64| bracket(mu / 3.0).powf(0.01);
    // |μ| grows like 3|ξ|ξ₁² away from the vertex at ξ/2
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut push = |mu: f64| {
        let r = radius(mu);
        let (lo, hi) = (mu - r, mu + r);
        for (slo, shi) in [(m, 2.0 * m), (-2.0 * m, -m)] {
            let (a, b) = (lo.max(slo), hi.min(shi));
            if b > a {
                pieces.push((a, b));
            }
        }
    };
    let center = xi_num / 2;
    for dir in [1i64, -1] {
        let mut b = if dir > 0 { center + 1 } else { center };
        loop {
            let mu = mu_of(b);
            if mu.abs() - radius(mu) >= 2.0 * m && (b - center).abs() > 1 {
                break;
            }
            if b != 0 && b != xi_num {
                push(mu);
            }
            b += dir;
        }
    }
    let intervals = pieces.len();
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut measure = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in pieces {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                measure += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = cur {
        measure += cb - ca;
    }
    let bound = l * m.powf(0.75);
    Ok(MuSetReport {
        xi_num,
        m,
        lambda,
        intervals,
        measure,
        bound,
        ratio: measure / bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: i64, n: f64, lambda: u64, window: u32) -> u64 {
        let two_nl = shell_twice(n, lambda).unwrap();
        let l3 = (lambda as i128).pow(3);
        let w = window as i128 * l3;
        let vals: Vec<i128> = (-2 * two_nl..=2 * two_nl)
            .filter(|&b| in_shell(b, two_nl) && in_shell(a - b, two_nl))
            .map(|b| cubic_value(a, b))
            .collect();
        vals.iter()
            .map(|&lo| vals.iter().filter(|&&v| v >= lo && v - lo <= w).count() as u64)
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn matches_brute_force() {
        for (n, lambda) in [(0.5, 4u64), (1.0, 3), (2.0, 5), (4.0, 1), (4.0, 2)] {
            let two_nl = shell_twice(n, lambda).unwrap();
            for a in -(2 * two_nl)..=(2 * two_nl) {
                for w in [1, 2, 4] {
                    let c = count_at(a, n, lambda, w).unwrap();
                    assert_eq!(c.count, brute(a, n, lambda, w), "a={a} N={n} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn symmetric_in_k() {
        for a in 0..40 {
            let p = count_at(a, 2.0, 3, 2).unwrap();
            let m = count_at(-a, 2.0, 3, 2).unwrap();
            assert_eq!(p.count, m.count);
            // the mirrored window holds the same points
            let vals: Vec<i128> = (-16..=16)
                .filter(|&b| in_shell(b, 12) && in_shell(-a - b, 12))
                .map(|b| cubic_value(-a, b))
                .collect();
            let l3 = 27.0;
            let inside = vals
                .iter()
                .filter(|&&v| (v as f64 / l3 + p.tau).abs() <= 1.0 + 1e-12)
                .count() as u64;
            assert_eq!(inside, p.count);
        }
    }

    #[test]
    fn window_monotone() {
        for a in 0..64 {
            let c1 = count_at(a, 4.0, 2, 1).unwrap().count;
            let c2 = count_at(a, 4.0, 2, 2).unwrap().count;
            let c4 = count_at(a, 4.0, 2, 4).unwrap().count;
            assert!(c1 <= c2 && c2 <= 2 * c1 + 2 && c2 <= c4 && c4 <= 2 * c2 + 2);
        }
    }

    #[test]
    fn low_shell_is_order_one() {
        let r = strichartz_count(
            0.5,
            4,
            &CountConfig {
                k_min_frac: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.bound, 1.0);
        assert!(r.m_sup <= 1.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(strichartz_count(3.0, 1, &CountConfig::default()).is_err());
        assert!(strichartz_count(0.25, 1, &CountConfig::default()).is_err());
        assert!(strichartz_count(4.0, 0, &CountConfig::default()).is_err());
        assert!(mu_set_measure(0, 16.0, 1).is_err());
        assert!(mu_set_measure(1, 12.0, 1).is_err());
    }

    #[test]
    fn mu_set_sweep() {
        // ξ = 1, ξ₁ ∈ Z: μ = −3ξ₁(1 − ξ₁) ∈ {6, 18, 36, 60, ...}
        let r = mu_set_measure(1, 16.0, 1).unwrap();
        // only μ = 18 (ξ₁ = −2, 3) lands in [16, 32)
        let rad = (2.0f64 + 6.0).powf(0.01);
        assert!((r.measure - 2.0 * rad).abs() < 1e-12, "{}", r.measure);
        let neg = mu_set_measure(-1, 16.0, 1).unwrap();
        assert!((neg.measure - r.measure).abs() < 1e-12);
        // M = 1: μ = 6 is outside [1, 2) ∪ (−2, −1] with its unit-size halo
        assert_eq!(mu_set_measure(1, 1.0, 1).unwrap().measure, 0.0);
    }
}
