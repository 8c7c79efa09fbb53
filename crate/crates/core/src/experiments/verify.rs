//! Self-check suites across modules, with a golden file of regression
//! constants.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use super::Check;
use crate::error::{Error, Result};
use crate::forms::{
    brute_force_lambda, eval_lambda, fact_four_holds, fact_three_holds, prop1_boundary_full,
};
use crate::hierarchy::{
    build_hierarchy, build_hierarchy_with, derivative_chain, hamiltonian_energy,
    verify_pointwise_bounds, BoundKind, BoundScanConfig, HierarchyOptions, ResonantConvention,
};
use crate::lattice::{mu_set_measure, strichartz_count, CountConfig};
use crate::miura::{miura_transform, MiuraVariant};
use crate::numerics::CenteredStencil;
use crate::solver::{generate_datum, solve, Equation, EvolutionSpec};
use crate::spectral::{BridgeRule, EnergyMultiplier, PeriodicGrid, SobolevIndex, SpectralField};

/// Regression constants shipped with the crate.
pub const GOLDEN_DEFAULT: &str = include_str!("golden.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerifyLevel {
    Quick,
    Full,
}

/// `key = value` regression constants.
#[derive(Debug, Clone)]
pub struct Golden(BTreeMap<String, String>);

impl Golden {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Manifest(format!("golden line {}: expected `key = value`", n + 1))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
            None => Self::parse(GOLDEN_DEFAULT),
        }
    }

    /// Compare a computed value (already formatted) with the stored one.
    pub fn check(&self, key: &str, computed: &str) -> Result<()> {
        match self.0.get(key) {
            Some(v) if v == computed => Ok(()),
            stored => Err(Error::GoldenMismatch {
                key: key.to_string(),
                stored: stored.cloned().unwrap_or_else(|| "<missing>".into()),
                computed: computed.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// `name,passed,detail` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,passed,detail\n");
        for c in &self.checks {
            s.push_str(&format!(
                "{},{},\"{}\"\n",
                c.name,
                c.passed,
                c.detail.replace('"', "'")
            ));
        }
        s
    }
}

fn run(checks: &mut Vec<Check>, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
    let c = match f() {
        Ok((ok, detail)) => Check::new(name, ok, detail),
        Err(e) => Check::new(name, false, format!("error: {e}")),
    };
    checks.push(c);
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

/// Exact golden string for a float.
fn g(x: f64) -> String {
    format!("{x:.12e}")
}

/// Run the self-check suite. `Full` adds the `M = 64` five-linear identity.
pub fn verify_all(level: VerifyLevel, golden: &Golden) -> VerifyReport {
    let start = Instant::now();
    let mut checks = Vec::new();

    run(&mut checks, "resonance_factorizations", || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = if level == VerifyLevel::Full {
            100_000
        } else {
            10_000
        };
        let ok = (0..n).all(|_| {
            let a = hyperplane(&mut rng, 3, 1 << 20);
            let b = hyperplane(&mut rng, 4, 1 << 15);
            fact_three_holds([a[0], a[1], a[2]]) && fact_four_holds([b[0], b[1], b[2], b[3]])
        });
        Ok((ok, format!("{n} integer tuples per arity")))
    });

    run(&mut checks, "m4_resonant_zero", || {
        let h = build_hierarchy(EnergyMultiplier::sharp(16.0, -0.5)?);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut bad = 0;
        for _ in 0..2000 {
            let a = rng.gen_range(1..200) as f64;
            let b = rng.gen_range(1..200) as f64;
            if h.m4.eval(&[a, -a, b, -b]) != Complex64::new(0.0, 0.0) {
                bad += 1;
            }
            let v = hyperplane(&mut rng, 4, 3);
            let x: Vec<f64> = v.iter().map(|&j| j as f64).collect();
            if h.m4.eval(&x) != Complex64::new(0.0, 0.0) {
                bad += 1;
            }
        }
        Ok((bad == 0, format!("{bad} nonzero values")))
    });

    run(&mut checks, "lambda_vs_brute_force", || {
        let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, 16)?;
        let h = build_hierarchy_with(
            EnergyMultiplier::sharp(2.0, -0.5)?,
            HierarchyOptions::for_lattice(grid, ResonantConvention::Limit),
        );
        let u = generate_datum(3, SobolevIndex(0.0), 1.0, grid, None)?;
        let mut worst = 0.0f64;
        for m in [&h.sigma3, &h.sigma4, &h.m5] {
            let k = m.arity();
            let fields = vec![&u; k];
            let fast = eval_lambda(m.as_ref(), &fields)?;
            let slow = brute_force_lambda(m.as_ref(), &fields)?;
            worst = worst.max((fast.value - slow).norm() / fast.magnitude.max(1e-300));
        }
        Ok((
            worst <= 1e-12,
            format!("max relative difference {worst:.2e}"),
        ))
    });

    run(&mut checks, "pair_symmetrization", || {
        // resonant σ₄ values under the limit convention are extrapolated
        // numerically, so that convention is compared off resonance only
        let mut worst = 0.0f64;
        for conv in [ResonantConvention::Zero, ResonantConvention::Limit] {
            let h = build_hierarchy_with(
                EnergyMultiplier::sharp(8.0, -0.5)?,
                HierarchyOptions {
                    convention: conv,
                    ..Default::default()
                },
            );
            let full = prop1_boundary_full(h.sigma4.clone())?;
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for _ in 0..300 {
                let v = hyperplane(&mut rng, 5, 60);
                let resonant = (0..5).any(|i| (i + 1..5).any(|j| v[i] + v[j] == 0));
                if conv == ResonantConvention::Limit && resonant {
                    continue;
                }
                let x: Vec<f64> = v.iter().map(|&j| j as f64).collect();
                let d = (h.m5.eval(&x) - full.eval(&x)).norm() / h.m5_term_scale(&x).max(1e-300);
                worst = worst.max(d);
            }
        }
        Ok((
            worst <= 1e-11,
            format!("max difference / term scale {worst:.2e}"),
        ))
    });

    run(&mut checks, "hamiltonian_conservation", || {
        let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, 32)?;
        let u0 = generate_datum(5, SobolevIndex(0.0), 1.0, grid, Some(8))?;
        let t = solve(
            &u0,
            &EvolutionSpec::new(Equation::Kdv, 1e-4, 0.05).with_stride(100),
        )?;
        let h0 = hamiltonian_energy(&t.samples[0])?;
        let drift = t
            .samples
            .iter()
            .map(|u| hamiltonian_energy(u).map(|h| (h - h0).abs() / h0.abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok((drift < 1e-9, format!("relative drift {drift:.2e}")))
    });

    run(&mut checks, "derivative_chain", || {
        let m = if level == VerifyLevel::Full { 64 } else { 32 };
        let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, m)?;
        let band = grid.dealias_band(Equation::Kdv.natural_dealias());
        let u0 = generate_datum(5, SobolevIndex(-0.5), 1.0, grid, Some(band))?;
        let u0 = u0.scaled(Complex64::new(10.0 / u0.l2_norm(), 0.0));
        let dt = if m == 64 { 1e-5 } else { 1e-4 };
        let t = solve(&u0, &EvolutionSpec::new(Equation::Kdv, dt, 16.0 * dt))?;
        let h = build_hierarchy_with(
            EnergyMultiplier::sharp(8.0, -0.5)?,
            HierarchyOptions::for_band(grid, band, ResonantConvention::Limit),
        );
        let r = derivative_chain(&t.samples, dt, &h, CenteredStencil::Order8, &[8])?;
        let worst = r.max_rel_error.iter().copied().fold(0.0, f64::max);
        Ok((
            worst < 1e-5,
            format!("M = {m}: relative errors {:?}", r.max_rel_error),
        ))
    });

    run(&mut checks, "m3_pointwise_bound", || {
        let cfg = BoundScanConfig::covering(8.0, 5000, 3);
        let r = verify_pointwise_bounds(
            EnergyMultiplier::new(8.0, -0.5, BridgeRule::CubicLog)?,
            BoundKind::M3,
            &cfg,
        )?;
        Ok((
            r.global_sup <= 1.0 + 1e-12,
            format!("sup ratio {:.6}", r.global_sup),
        ))
    });

    run(&mut checks, "miura_cosine", || {
        let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, 16)?;
        let pi = std::f64::consts::PI;
        let u = SpectralField::from_modes(grid, &[(1, Complex64::new(pi, 0.0))], true)?;
        let v = miura_transform(&u, MiuraVariant::Defocusing)?;
        let expect = SpectralField::from_modes(
            grid,
            &[
                (0, Complex64::new(pi, 0.0)),
                (1, Complex64::new(0.0, pi)),
                (2, Complex64::new(pi / 2.0, 0.0)),
            ],
            true,
        )?;
        let d = v.sub(&expect)?.l2_norm();
        Ok((d < 1e-12, format!("difference {d:.2e}")))
    });

    run(&mut checks, "golden_strichartz", || {
        let r = strichartz_count(4.0, 1, &CountConfig::default())?;
        golden.check("strichartz_n4_lambda1_count", &r.main.count.to_string())?;
        let all = strichartz_count(
            4.0,
            1,
            &CountConfig {
                k_min_frac: 0.0,
                ..Default::default()
            },
        )?;
        golden.check(
            "strichartz_n4_lambda1_full_count",
            &all.main.count.to_string(),
        )?;
        golden.check("strichartz_n4_lambda1_k", &r.main.k_num.to_string())?;
        Ok((
            true,
            format!("count {} at k = {}", r.main.count, r.main.k_num),
        ))
    });

    run(&mut checks, "golden_mu_measure", || {
        let r = mu_set_measure(1, 256.0, 1)?;
        golden.check("mu_xi1_m256_lambda1_measure", &g(r.measure))?;
        let r8 = mu_set_measure(8, 256.0, 8)?;
        golden.check("mu_xi1_m256_lambda8_measure", &g(r8.measure))?;
        Ok((
            true,
            format!("measures {:.6}, {:.6}", r.measure, r8.measure),
        ))
    });

    run(&mut checks, "golden_datum", || {
        let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, 16)?;
        let u = generate_datum(42, SobolevIndex(0.0), 1.0, grid, None)?;
        golden.check("datum_seed42_mode1_re", &g(u.coeff(1).re))?;
        golden.check("datum_seed42_mode1_im", &g(u.coeff(1).im))?;
        Ok((true, "seeded datum reproduced".into()))
    });

    VerifyReport {
        level,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}
