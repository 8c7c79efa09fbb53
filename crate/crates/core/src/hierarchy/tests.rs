use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::forms::alpha4_factored;
use crate::spectral::{BridgeRule, EnergyMultiplier};

fn hyperplane_ints(rng: &mut ChaCha8Rng, k: usize, r: i64) -> Vec<i64> {
    loop {
        let mut v: Vec<i64> = (0..k - 1).map(|_| rng.gen_range(-r..=r)).collect();
        let last = -v.iter().sum::<i64>();
        v.push(last);
        if v.iter().all(|&x| x != 0) {
            return v;
        }
    }
}

fn off_resonant4(rng: &mut ChaCha8Rng, r: i64) -> [f64; 4] {
    loop {
        let v = hyperplane_ints(rng, 4, r);
        let x = [v[0] as f64, v[1] as f64, v[2] as f64, v[3] as f64];
        if !resonant_pairings(&x).iter().any(|&b| b) {
            return x;
        }
    }
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}

#[test]
fn identity_multiplier_gives_trivial_hierarchy() {
    let h = build_hierarchy(EnergyMultiplier::identity());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v = hyperplane_ints(&mut rng, 5, 40);
        let x: Vec<f64> = v.iter().map(|&j| j as f64).collect();
        assert!(h.m3.eval(&x[..3]).norm() < 1e-12 || (x[0] + x[1] + x[2]) != 0.0);
        let x3 = [x[0], x[1], -x[0] - x[1]];
        if x3[2] != 0.0 {
            assert!(h.m3.eval(&x3).norm() < 1e-12);
            assert!(h.sigma3.eval(&x3).norm() < 1e-12);
        }
        assert_eq!(h.m5.eval(&x), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn m3_closed_matches_generic() {
    let m = EnergyMultiplier::sharp(8.0, -0.5).unwrap();
    let h = build_hierarchy(m);
    let g = h.m3_generic();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let v = hyperplane_ints(&mut rng, 3, 100);
        let x: Vec<f64> = v.iter().map(|&j| j as f64 * 0.7).collect();
        let scale: f64 = x.iter().map(|t| m.eval_sq(*t) * t.abs()).sum();
        assert!((h.m3.eval(&x) - g.eval(&x)).norm() <= 1e-12 * scale);
    }
}

#[test]
fn sigma_cancellation_identities() {
    let m = EnergyMultiplier::sharp(8.0, -0.6).unwrap();
    let h = build_hierarchy(m);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let v = hyperplane_ints(&mut rng, 3, 200);
        let x: Vec<f64> = v.iter().map(|&j| j as f64).collect();
        let a3 = Complex64::new(0.0, x.iter().map(|t| t * t * t).sum());
        let lhs = h.sigma3.eval(&x) * a3 + h.m3.eval(&x);
        assert!(lhs.norm() <= 1e-12 * h.m3.eval(&x).norm().max(1.0));
        let x4 = off_resonant4(&mut rng, 200);
        let lhs = h.sigma4.eval(&x4) * alpha4_factored(&x4) + h.m4.eval(&x4);
        assert!(lhs.norm() <= 1e-12 * h.m4.eval(&x4).norm().max(1e-300));
    }
}

#[test]
fn m4_closed_forms_agree_with_generic() {
    for (n, s) in [(8.0, -0.5), (16.0, -0.74), (4.0, 0.3)] {
        let m = EnergyMultiplier::sharp(n, s).unwrap();
        let h = build_hierarchy(m);
        let g = h.m4_generic();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3000 {
            let x = off_resonant4(&mut rng, 150);
            let a = h.m4_two_term(x);
            let b = h.m4_common_denominator(x);
            let c = g.eval(&x);
            let scale = a.norm().max(c.norm());
            if scale == 0.0 {
                continue;
            }
            assert!(close(a, b, 1e-10), "{x:?}: {a} vs {b}");
            assert!(close(a, c, 1e-10), "{x:?}: {a} vs {c}");
        }
    }
}

#[test]
fn m4_vanishes_at_resonance_and_low_frequencies() {
    let m = EnergyMultiplier::sharp(32.0, -0.5).unwrap();
    let h = build_hierarchy(m);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let a = rng.gen_range(1..300) as f64;
        let b = rng.gen_range(1..300) as f64;
        let x = [a, -a, b, -b];
        assert_eq!(h.m4.eval(&x), Complex64::new(0.0, 0.0));
        let x = [a, b, -a, -b];
        assert_eq!(h.m4.eval(&x), Complex64::new(0.0, 0.0));
        let v = hyperplane_ints(&mut rng, 4, 7);
        let x: Vec<f64> = v.iter().map(|&j| j as f64).collect();
        if x.iter().all(|t| t.abs() < 8.0) {
            assert_eq!(h.m4.eval(&x), Complex64::new(0.0, 0.0));
        }
    }
}

#[test]
fn sigma4_limit_is_symmetric_and_bounded() {
    let m = EnergyMultiplier::sharp(4.0, -0.5).unwrap();
    let h = build_hierarchy(m);
    let x = [9.0, -9.0, 5.0, -5.0];
    let v = h.sigma4_at(x).unwrap();
    assert!(v.re.is_finite() && v.im == 0.0);
    let y = h.sigma4_at([5.0, 9.0, -9.0, -5.0]).unwrap();
    assert!((v - y).norm() <= 1e-9 * v.norm());
    let near = h.sigma4.eval(&[9.0 + 1e-5, -9.0, 5.0 - 1e-5, -5.0]);
    assert!((near - v).norm() < 1e-3 * v.norm());
    let z = build_hierarchy_with(
        m,
        HierarchyOptions {
            convention: ResonantConvention::Zero,
            ..Default::default()
        },
    );
    assert_eq!(z.sigma4_at(x).unwrap(), Complex64::new(0.0, 0.0));
    assert!(matches!(
        h.sigma4_at([0.0, 1.0, -1.0, 0.0]),
        Err(crate::Error::ZeroFrequency)
    ));
}

#[test]
fn double_resonance_is_flagged() {
    let m = EnergyMultiplier::sharp(2.0, -0.5).unwrap();
    let h = build_hierarchy(m);
    let v = h.sigma4_at([7.0, -7.0, -7.0, 7.0]).unwrap();
    assert!(v.re.is_finite());
    assert_eq!(h.double_resonance_hits(), 1);
}

#[test]
fn m5_reduced_matches_full_average() {
    let m = EnergyMultiplier::new(4.0, -0.5, BridgeRule::Sharp).unwrap();
    let h = build_hierarchy(m);
    let full = h.m5_full();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..300 {
        let v = hyperplane_ints(&mut rng, 5, 40);
        let x: Vec<f64> = v.iter().map(|&j| j as f64).collect();
        let (a, b) = (h.m5.eval(&x), full.eval(&x));
        let scale = h.m5_term_scale(&x);
        assert!((a - b).norm() <= 1e-11 * scale, "{x:?} {a} {b} {scale}");
    }
}

#[test]
fn hamiltonian_of_cosine() {
    use crate::spectral::{PeriodicGrid, SpectralField};
    let g = PeriodicGrid::new(2.0 * std::f64::consts::PI, 16).unwrap();
    let pi = std::f64::consts::PI;
    let u = SpectralField::from_modes(g, &[(1, Complex64::new(pi, 0.0))], true).unwrap();
    assert!((hamiltonian_energy(&u).unwrap() - pi).abs() < 1e-13);
    assert_eq!(
        hamiltonian_energy(&SpectralField::zeros(g, true)).unwrap(),
        0.0
    );
}

#[test]
fn energies_of_low_mode_field() {
    use crate::spectral::{PeriodicGrid, SpectralField};
    let g = PeriodicGrid::new(2.0 * std::f64::consts::PI, 32).unwrap();
    let m = EnergyMultiplier::sharp(32.0, -0.5).unwrap();
    let h = build_hierarchy_with(
        m,
        HierarchyOptions::for_lattice(g, ResonantConvention::Limit),
    );
    let u = SpectralField::from_modes(
        g,
        &[
            (1, Complex64::new(0.3, 0.1)),
            (3, Complex64::new(-0.2, 0.4)),
            (4, Complex64::new(0.1, 0.0)),
        ],
        true,
    )
    .unwrap();
    let e2 = eval_e2(&u, &h).unwrap();
    let e3 = eval_e3(&u, &h).unwrap();
    let e4 = eval_e4(&u, &h).unwrap();
    assert!((e2 - u.l2_norm_sq()).abs() < 1e-15);
    assert_eq!(e3, e4);
    let z = SpectralField::zeros(g, true);
    assert_eq!(eval_e4(&z, &h).unwrap(), 0.0);
}

#[test]
fn mvt_scans() {
    let cfg = MvtConfig {
        samples: 20_000,
        ..Default::default()
    };
    let flat = verify_mvt_control(|_| 2.0, &cfg);
    assert_eq!(flat.first_sup, 0.0);
    assert_eq!(flat.second_sup, 0.0);
    let m = EnergyMultiplier::sharp(16.0, -0.5).unwrap();
    let r = verify_mvt_control(|x| m.eval_sq(x), &cfg);
    assert!(r.first_sup.is_finite() && r.second_sup.is_finite());
    let fine = MvtConfig {
        eta_fraction: 1e-5,
        samples: 20_000,
        ..Default::default()
    };
    let p = verify_mvt_control(|x: f64| x.abs().powf(-1.0), &fine);
    assert!((p.first_sup - 1.0).abs() < 1e-3, "{}", p.first_sup);
}

#[test]
fn m3_bound_holds_on_samples() {
    let m = EnergyMultiplier::sharp(16.0, -0.5).unwrap();
    let r = verify_pointwise_bounds(
        m,
        BoundKind::M3,
        &BoundScanConfig::covering(16.0, 20_000, 1),
    )
    .unwrap();
    assert!(r.global_sup <= 1.0, "{}", r.global_sup);
    assert!(r.total_samples > 10_000);
}
