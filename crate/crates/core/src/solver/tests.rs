use super::*;
use crate::spectral::SobolevIndex;
use std::f64::consts::PI;

fn grid(m: usize) -> PeriodicGrid {
    PeriodicGrid::new(2.0 * PI, m).unwrap()
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn zero_datum_stays_zero() {
    let u = SpectralField::zeros(grid(32), true);
    let t = solve(&u, &EvolutionSpec::new(Equation::Kdv, 1e-2, 0.1)).unwrap();
    assert_eq!(t.samples.len(), 11);
    assert!(t
        .samples
        .iter()
        .all(|f| f.coeffs().iter().all(|c| c.norm() == 0.0)));
}

#[test]
fn first_sample_is_datum() {
    let g = grid(32);
    let u = generate_datum(3, SobolevIndex(0.0), 1.0, g, Some(10)).unwrap();
    let t = solve(&u, &EvolutionSpec::new(Equation::Kdv, 1e-3, 0.01)).unwrap();
    assert_eq!(t.samples[0], u);
    assert!(t.advisories.is_empty());
}

#[test]
fn linear_flow_is_airy() {
    let g = grid(32);
    let u = generate_datum(4, SobolevIndex(0.0), 1.0, g, Some(10)).unwrap();
    let t = solve(&u, &EvolutionSpec::new(Equation::Linear, 1e-2, 0.5)).unwrap();
    let exact = u.airy_propagate(0.5);
    assert!(max_diff(t.last(), &exact) < 1e-12);
}

#[test]
fn fourth_order_convergence() {
    let g = grid(32);
    let u = generate_datum(5, SobolevIndex(0.0), 2.0, g, Some(10)).unwrap();
    let run = |dt: f64| {
        solve(
            &u,
            &EvolutionSpec::new(Equation::Kdv, dt, 0.2).with_stride(10_000),
        )
        .unwrap()
    };
    let reference = run(2.5e-5);
    let e1 = max_diff(run(4e-4).last(), reference.last());
    let e2 = max_diff(run(2e-4).last(), reference.last());
    let ratio = e1 / e2;
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

#[test]
fn hermitian_and_mean_preserved() {
    let g = grid(64);
    let u = generate_datum(6, SobolevIndex(0.0), 1.0, g, Some(21)).unwrap();
    let t = solve(
        &u,
        &EvolutionSpec::new(Equation::MkdvDefocusing, 1e-3, 0.05),
    )
    .unwrap();
    for f in &t.samples {
        assert_eq!(f.hermitian_defect(), 0.0);
        assert_eq!(f.mean_mode(), Complex64::new(0.0, 0.0));
        assert!(f.support_band() <= 15);
    }
}

#[test]
fn time_reversal() {
    let g = grid(32);
    let u = generate_datum(7, SobolevIndex(0.0), 1.0, g, Some(10)).unwrap();
    let spec = EvolutionSpec::new(Equation::Kdv, 1e-2, 0.2);
    let fwd = solve(&u, &spec).unwrap();
    let reference = solve(&u, &EvolutionSpec::new(Equation::Kdv, 1e-4, 0.2)).unwrap();
    let one_way = max_diff(fwd.last(), reference.last());
    let back = solve(fwd.last(), &spec.reversed()).unwrap();
    let round_trip = max_diff(back.last(), &u);
    assert!(round_trip < 3.0 * one_way, "{round_trip} vs {one_way}");
    assert!((back.times.last().unwrap() + 0.2).abs() < 1e-12);
}

#[test]
fn rejects_bad_specs() {
    let u = SpectralField::zeros(grid(32), true);
    assert!(solve(&u, &EvolutionSpec::new(Equation::Kdv, 0.0, 1.0)).is_err());
    assert!(solve(&u, &EvolutionSpec::new(Equation::Kdv, 0.3, 1.0)).is_err());
    let bad =
        EvolutionSpec::new(Equation::MkdvFocusing, 0.1, 1.0).with_dealias(DealiasRule::TwoThirds);
    assert!(solve(&u, &bad).is_err());
    let c = SpectralField::zeros(grid(32), false);
    assert!(matches!(
        solve(&c, &EvolutionSpec::new(Equation::Kdv, 0.1, 1.0)),
        Err(Error::RealRequired)
    ));
}

#[test]
fn blow_up_guard() {
    let g = grid(32);
    let u = generate_datum(8, SobolevIndex(0.0), 1e6, g, Some(10)).unwrap();
    let r = solve(&u, &EvolutionSpec::new(Equation::MkdvFocusing, 0.1, 100.0));
    match r {
        Err(Error::NonFinite { snapshot, .. }) => assert_eq!(snapshot.grid(), &g),
        other => panic!("expected blow-up, got {:?}", other.map(|t| t.times.len())),
    }
}

#[test]
fn phase_advisory() {
    let g = grid(64);
    let u = generate_datum(9, SobolevIndex(0.0), 1.0, g, Some(21)).unwrap();
    let t = solve(&u, &EvolutionSpec::new(Equation::Kdv, 0.01, 0.01)).unwrap();
    assert_eq!(t.advisories.len(), 1);
}

#[test]
fn datum_properties() {
    let g = grid(64);
    let a = generate_datum(10, SobolevIndex(-0.5), 0.7, g, None).unwrap();
    let b = generate_datum(10, SobolevIndex(-0.5), 0.7, g, None).unwrap();
    assert_eq!(a, b);
    assert!((a.sobolev_norm(SobolevIndex(-0.5)) - 0.7).abs() < 1e-12);
    assert!(a.is_mean_zero() && a.is_real_valued());
    let z = generate_datum(10, SobolevIndex(-0.5), 0.0, g, None).unwrap();
    assert_eq!(z.l2_norm(), 0.0);
}

#[test]
fn rescale_identity_and_amplitude() {
    let g = grid(32);
    let u = generate_datum(11, SobolevIndex(0.0), 1.0, g, Some(10)).unwrap();
    assert_eq!(rescale(&u, 1.0, None).unwrap(), u);
    let v = rescale(&u, 4.0, None).unwrap();
    assert!((v.grid().period() - 8.0 * PI).abs() < 1e-12);
    // ‖u_λ‖² = λ^{-3} ‖u‖²
    assert!((v.l2_norm_sq() - u.l2_norm_sq() / 64.0).abs() < 1e-14);
    assert!(rescale(&u, 2.0, Some(16)).is_err());
}

#[test]
fn rescale_commutes_with_flow() {
    let g = grid(64);
    let u = generate_datum(12, SobolevIndex(0.0), 1.0, g, Some(21)).unwrap();
    let lam = 2.0;
    let t = 0.05;
    let a = solve(&u, &EvolutionSpec::new(Equation::Kdv, t / 500.0, t)).unwrap();
    let a = rescale(a.last(), lam, None).unwrap();
    let v = rescale(&u, lam, None).unwrap();
    let tl = t * lam.powi(3);
    let b = solve(&v, &EvolutionSpec::new(Equation::Kdv, tl / 500.0, tl)).unwrap();
    let scale = a.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(max_diff(&a, b.last()) < 1e-12 * scale);
}

#[test]
fn run_dir_roundtrip() {
    let g = grid(16);
    let u = generate_datum(13, SobolevIndex(0.0), 1.0, g, Some(5)).unwrap();
    let t = solve(&u, &EvolutionSpec::new(Equation::Kdv, 1e-2, 0.05)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &t, Some(13)).unwrap();
    let back = read_snapshots(&dir.path().join("snapshots.bin")).unwrap();
    assert_eq!(back, t.samples);
    let meta: RunMeta =
        serde_json::from_reader(std::fs::File::open(dir.path().join("meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta.snapshot_count, 6);
    let bytes = std::fs::metadata(dir.path().join("snapshots.bin"))
        .unwrap()
        .len();
    assert_eq!(bytes, 24 + 6 * 16 * 16);
}
