//! Independent oracles: exact rational arithmetic for the multiplier
//! hierarchy, brute-force lattice counts, and finite differences along
//! solver output.

use std::sync::Arc;

use imethod_core::forms::{time_derivative_check, Constant, SharedMultiplier};
use imethod_core::hierarchy::{
    build_hierarchy, build_hierarchy_with, HierarchyOptions, ResonantConvention,
};
use imethod_core::lattice::{count_at, cubic_value, strichartz_count, CountConfig};
use imethod_core::numerics::CenteredStencil;
use imethod_core::solver::{generate_datum, solve, Equation, EvolutionSpec};
use imethod_core::{EnergyMultiplier, PeriodicGrid, SobolevIndex};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: i64 = 8;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `m²` for the sharp multiplier with `s = −1/2`: `1` up to `N`, `N/|ξ|` beyond.
fn m2(x: i64) -> BigRational {
    if x.abs() <= N {
        q(1)
    } else {
        BigRational::new(BigInt::from(N), BigInt::from(x.abs()))
    }
}

fn cubes(x: &[i64]) -> BigRational {
    x.iter().map(|&v| q(v * v * v)).sum()
}

/// Tuples obtained by fusing each unordered pair, with the fused value.
fn fusions(x: &[i64]) -> Vec<(Vec<i64>, i64)> {
    let mut out = Vec::new();
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let mut rest: Vec<i64> = (0..x.len())
                .filter(|&i| i != a && i != b)
                .map(|i| x[i])
                .collect();
            rest.push(x[a] + x[b]);
            out.push((rest, x[a] + x[b]));
        }
    }
    out
}

/// `R₃` with `M₃ = iR₃`: `(1/3)Σ m²(ξ_i) ξ_i`.
fn r3(x: &[i64]) -> BigRational {
    x.iter().map(|&v| m2(v) * q(v)).sum::<BigRational>() / q(3)
}

/// `σ₃ = −M₃/α₃` with `α₃ = iΣξ³`.
fn sigma3(x: &[i64]) -> BigRational {
    -r3(x) / cubes(x)
}

/// `R₄` with `M₄ = −iR₄`; `M₄ = (−3i/2)·mean_pairs σ₃(…, ξ_a+ξ_b)(ξ_a+ξ_b)`.
fn r4(x: &[i64]) -> BigRational {
    let terms = fusions(x);
    let n = terms.len() as i64;
    let sum: BigRational = terms
        .into_iter()
        .filter(|(_, f)| *f != 0)
        .map(|(t, f)| sigma3(&t) * q(f))
        .sum();
    sum * q(3) / (q(2) * q(n))
}

/// `σ₄ = −M₄/α₄ = R₄/Σξ³`.
fn sigma4(x: &[i64]) -> BigRational {
    r4(x) / cubes(x)
}

/// `R₅` with `M₅ = −iR₅`; `M₅ = −2i·mean_pairs σ₄(…)(ξ_a+ξ_b)`.
fn r5(x: &[i64]) -> BigRational {
    let terms = fusions(x);
    let n = terms.len() as i64;
    let sum: BigRational = terms
        .into_iter()
        .filter(|(_, f)| *f != 0)
        .map(|(t, f)| sigma4(&t) * q(f))
        .sum();
    sum * q(2) / q(n)
}

fn pair_resonant(x: &[i64]) -> bool {
    (0..x.len()).any(|i| (i + 1..x.len()).any(|j| x[i] + x[j] == 0))
}

fn hyperplane(rng: &mut ChaCha8Rng, k: usize, r: i64) -> Vec<i64> {
    loop {
        let mut v: Vec<i64> = (0..k - 1).map(|_| rng.gen_range(-r..=r)).collect();
        v.push(-v.iter().sum::<i64>());
        if v.iter().all(|&x| x != 0) {
            return v;
        }
    }
}

fn f(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

fn floats(x: &[i64]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).collect()
}

#[test]
fn hierarchy_matches_exact_rationals() {
    let h = build_hierarchy(EnergyMultiplier::sharp(N as f64, -0.5).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(21);

    for _ in 0..500 {
        let x = hyperplane(&mut rng, 3, 100);
        let exact = r3(&x);
        let got = h.m3.eval(&floats(&x));
        assert!(
            (got.im - f(&exact)).abs() <= 1e-13 * f(&exact.abs()).max(1.0),
            "M3 {x:?}"
        );
        assert!(got.re.abs() < 1e-13);
        let s = f(&sigma3(&x));
        let gs = h.sigma3.eval(&floats(&x)).re;
        assert!(
            (gs - s).abs() <= 1e-12 * s.abs().max(1e-12),
            "sigma3 {x:?}: {gs} vs {s}"
        );
    }

    let mut checked = 0;
    while checked < 300 {
        let x = hyperplane(&mut rng, 4, 100);
        if pair_resonant(&x) {
            continue;
        }
        checked += 1;
        let exact = f(&r4(&x));
        let got = h.m4.eval(&floats(&x));
        let scale = fusions(&x)
            .iter()
            .filter(|(_, fu)| *fu != 0)
            .map(|(t, fu)| f(&(sigma3(t) * q(*fu))).abs())
            .fold(0.0, f64::max);
        assert!(
            (-got.im - exact).abs() <= 1e-12 * scale.max(1e-300),
            "M4 {x:?}: {got} vs {exact}"
        );
        let s = f(&sigma4(&x));
        let gs = h.sigma4.eval(&floats(&x)).re;
        assert!(
            (gs - s).abs() <= 1e-11 * (scale / f(&cubes(&x)).abs()),
            "sigma4 {x:?}: {gs} vs {s}"
        );
    }

    let mut checked = 0;
    while checked < 200 {
        let x = hyperplane(&mut rng, 5, 60);
        // every σ₄ argument must avoid pair resonances
        if fusions(&x)
            .iter()
            .any(|(t, fu)| *fu != 0 && pair_resonant(t))
        {
            continue;
        }
        checked += 1;
        let exact = f(&r5(&x));
        let got = h.m5.eval(&floats(&x));
        let scale = h.m5_term_scale(&floats(&x));
        assert!(
            (-got.im - exact).abs() <= 1e-11 * scale.max(1e-300),
            "M5 {x:?}: {got} vs {exact}"
        );
    }
}

#[test]
fn m4_vanishes_below_quarter_cutoff() {
    let h = build_hierarchy(EnergyMultiplier::sharp(64.0, -0.5).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..2000 {
        let x = hyperplane(&mut rng, 4, 15);
        if x.iter().any(|v| v.abs() >= 16) {
            continue;
        }
        assert!(h.m4.eval(&floats(&x)).norm() == 0.0, "{x:?}");
    }
}

/// Direct enumeration: every `b` with `|b|, |a − b| ∈ [Nλ, 2Nλ)`, closed
/// windows of width `window·λ³`, `0 ≤ a < 4Nλ`.
fn brute_sup(n: f64, lambda: u64, window: u32) -> u64 {
    let nl = (n * lambda as f64) as i64;
    let shell = |b: i64| b.abs() >= nl && b.abs() < 2 * nl;
    let w = window as i128 * (lambda as i128).pow(3);
    let mut best = 0;
    for a in 0..4 * nl {
        let mut vals: Vec<i128> = (-2 * nl..2 * nl)
            .filter(|&b| shell(b) && shell(a - b))
            .map(|b| cubic_value(a, b))
            .collect();
        vals.sort_unstable();
        for i in 0..vals.len() {
            let c = vals[i..].iter().take_while(|&&v| v - vals[i] <= w).count();
            best = best.max(c as u64);
        }
    }
    best
}

#[test]
fn strichartz_matches_brute_force() {
    for (n, lambda) in [(2.0, 1u64), (4.0, 1), (2.0, 3), (4.0, 2)] {
        let cfg = CountConfig {
            k_min_frac: 0.0,
            ..Default::default()
        };
        let r = strichartz_count(n, lambda, &cfg).unwrap();
        assert_eq!(
            r.main.count,
            brute_sup(n, lambda, cfg.window),
            "N = {n}, lambda = {lambda}"
        );
        let at = count_at(r.main.k_num, n, lambda, cfg.window).unwrap();
        assert_eq!(at.count, r.main.count);
    }
}

#[test]
fn strichartz_refinement_tracks_bound() {
    // refining the lattice keeps the normalized sup within a fixed multiple
    // of the bound
    for n in [4.0, 16.0] {
        let mut ratios = Vec::new();
        for lambda in [1u64, 2, 4, 8, 16] {
            ratios.push(
                strichartz_count(n, lambda, &CountConfig::default())
                    .unwrap()
                    .ratio,
            );
        }
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 3.0, "N = {n}: {ratios:?}");
    }
}

#[test]
fn derivative_rule_along_kdv() {
    let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, 32).unwrap();
    let band = grid.dealias_band(Equation::Kdv.natural_dealias());
    let u0 = generate_datum(9, SobolevIndex(0.0), 2.0, grid, Some(band)).unwrap();
    let dt = 1e-4;
    let t = solve(&u0, &EvolutionSpec::new(Equation::Kdv, dt, 12.0 * dt)).unwrap();
    let h = build_hierarchy_with(
        EnergyMultiplier::sharp(4.0, -0.5).unwrap(),
        HierarchyOptions::for_band(grid, band, ResonantConvention::Limit),
    );
    let cubic: SharedMultiplier = Arc::new(Constant::new(3, 1.0));
    for (name, m) in [("cubic", cubic), ("sigma3", h.sigma3.clone())] {
        let r =
            time_derivative_check(m, &t.samples, dt, CenteredStencil::Order8, Some(band)).unwrap();
        assert!(r.sup_rel_mismatch < 1e-7, "{name}: {}", r.sup_rel_mismatch);
    }
}

#[test]
fn zero_rationals_stay_zero() {
    // sanity of the oracle itself: below the cutoff M₄ is identically zero
    assert!(r4(&[1, 2, -4, 1]).is_zero());
    assert!(r4(&[3, -1, -1, -1]).is_zero());
}
