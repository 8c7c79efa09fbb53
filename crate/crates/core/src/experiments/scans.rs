//! Solver-driven experiments: decay scans, energy tracking, norm growth.

use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

use crate::error::{contract, Error, Result};
use crate::hierarchy::{build_hierarchy_with, EnergyLedger, HierarchyOptions, ResonantConvention};
use crate::numerics::{fit_power_law, CenteredStencil, LineFit};
use crate::solver::{generate_datum, solve, Equation, EvolutionSpec, Trajectory};
use crate::spectral::{BridgeRule, EnergyMultiplier, PeriodicGrid, SobolevIndex, SpectralField};

/// Period of the torus as a function of the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LambdaRule {
    Fixed(f64),
    /// `period = base · 2^round(log2(coeff · N^{-s/(s+3/2)}))`; rounding to a
    /// power of two keeps the rescaled lattice nested.
    Coupled {
        base: f64,
        coeff: f64,
    },
}

impl LambdaRule {
    pub fn period(&self, cutoff: f64, s: f64) -> f64 {
        match *self {
            LambdaRule::Fixed(p) => p,
            LambdaRule::Coupled { base, coeff } => {
                if !cutoff.is_finite() {
                    return base;
                }
                let raw = coeff * cutoff.powf(-s / (s + 1.5));
                base * 2f64.powf(raw.log2().round())
            }
        }
    }
}

fn multiplier(cutoff: f64, s: f64, bridge: BridgeRule) -> Result<EnergyMultiplier> {
    if cutoff.is_infinite() {
        Ok(EnergyMultiplier::identity())
    } else {
        EnergyMultiplier::new(cutoff, s, bridge)
    }
}

/// Largest resonance phase rate `3k(k/2)²` on the band.
fn alpha_max(grid: &PeriodicGrid, band: i64) -> f64 {
    let k = grid.frequency(band);
    3.0 * k * (k / 2.0) * (k / 2.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayScanConfig {
    pub s: f64,
    /// `f64::INFINITY` selects the identity multiplier.
    pub cutoffs: Vec<f64>,
    pub bridge: BridgeRule,
    pub lambda_rule: LambdaRule,
    pub modes: usize,
    /// `dt = cfl / max|α₃|` on the retained band.
    pub cfl: f64,
    pub t_end: f64,
    pub seed: u64,
    /// `‖Iφ‖_{L²}` of the datum.
    pub eps0: f64,
    /// Spectral exponent of the datum (`−1/2` is flat).
    pub datum_s: f64,
    /// Energy samples per run.
    pub samples: usize,
    pub convention: ResonantConvention,
}

impl Default for DecayScanConfig {
    fn default() -> Self {
        Self {
            s: -0.5,
            cutoffs: vec![4.0, 8.0, 16.0, 32.0],
            bridge: BridgeRule::Sharp,
            lambda_rule: LambdaRule::Fixed(std::f64::consts::PI),
            modes: 64,
            cfl: 0.15,
            t_end: 1.0,
            seed: 7,
            eps0: 0.5,
            datum_s: -0.5,
            samples: 100,
            convention: ResonantConvention::Zero,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub cutoff: f64,
    pub period: f64,
    pub dt: f64,
    pub steps: usize,
    pub e4_initial: f64,
    pub e4_excursion: f64,
    pub e2_excursion: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub config: DecayScanConfig,
    pub rows: Vec<DecayRow>,
    /// Power-law fit of the `E⁴` excursion against finite cutoffs.
    pub e4_fit: Option<LineFit>,
    pub e2_fit: Option<LineFit>,
    pub notes: Vec<String>,
    /// Solver failure that stopped the scan; rows hold the finished runs.
    pub aborted: Option<String>,
}

impl DecayReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "N,period,dt,steps,E4_initial,E4_excursion,E2_excursion")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e}",
                r.cutoff, r.period, r.dt, r.steps, r.e4_initial, r.e4_excursion, r.e2_excursion
            )?;
        }
        Ok(())
    }

    pub fn write_fit_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "quantity,slope,stderr,intercept")?;
        for (name, fit) in [("E4", &self.e4_fit), ("E2", &self.e2_fit)] {
            if let Some(f) = fit {
                writeln!(
                    w,
                    "{name},{:.17e},{:.17e},{:.17e}",
                    f.slope, f.slope_stderr, f.intercept
                )?;
            }
        }
        Ok(())
    }
}

fn decay_run(cfg: &DecayScanConfig, cutoff: f64) -> Result<DecayRow> {
    let period = cfg.lambda_rule.period(cutoff, cfg.s);
    let grid = PeriodicGrid::new(period, cfg.modes)?;
    let eq = Equation::Kdv;
    let band = grid.dealias_band(eq.natural_dealias());
    let m = multiplier(cutoff, cfg.s, cfg.bridge)?;
    let base = generate_datum(cfg.seed, SobolevIndex(cfg.datum_s), 1.0, grid, Some(band))?;
    let u0 = base.scaled(Complex64::new(cfg.eps0 / base.apply_i(&m).l2_norm(), 0.0));
    let steps = (cfg.t_end * alpha_max(&grid, band) / cfg.cfl)
        .ceil()
        .max(1.0) as usize;
    let dt = cfg.t_end / steps as f64;
    let mut spec =
        EvolutionSpec::new(eq, dt, cfg.t_end).with_stride((steps / cfg.samples.max(1)).max(1));
    // dt is chosen from the same phase bound
    spec.phase_threshold = f64::INFINITY;
    let traj = solve(&u0, &spec)?;
    let h = build_hierarchy_with(m, HierarchyOptions::for_band(grid, band, cfg.convention));
    let led = EnergyLedger::track(&traj.times, &traj.samples, &h, None)?;
    Ok(DecayRow {
        cutoff,
        period,
        dt,
        steps,
        e4_initial: led.e4[0],
        e4_excursion: led.e4_excursion(),
        e2_excursion: led.e2_excursion(),
    })
}

/// `sup_t |E⁴_I(t) − E⁴_I(0)|` over a unit window for each cutoff, with a
/// log–log fit against `N`.
pub fn decay_scan(cfg: &DecayScanConfig) -> Result<DecayReport> {
    if cfg.cutoffs.is_empty() {
        return Err(contract("decay scan needs at least one cutoff"));
    }
    if !(cfg.cfl > 0.0 && cfg.eps0 > 0.0 && cfg.t_end > 0.0) {
        return Err(contract("cfl, eps0 and t_end must be positive"));
    }
    let finite: Vec<f64> = cfg
        .cutoffs
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .collect();
    if finite.windows(2).any(|w| w[1] <= w[0]) {
        return Err(contract("cutoffs must be ascending"));
    }
    let mut notes = Vec::new();
    if let LambdaRule::Coupled { .. } = cfg.lambda_rule {
        for &n in &cfg.cutoffs {
            notes.push(format!(
                "N = {n}: period {} (power-of-two rounding)",
                cfg.lambda_rule.period(n, cfg.s)
            ));
        }
    }
    let mut rows = Vec::new();
    let mut aborted = None;
    for &n in &cfg.cutoffs {
        match decay_run(cfg, n) {
            Ok(r) => rows.push(r),
            Err(e @ Error::NonFinite { .. }) => {
                aborted = Some(format!("N = {n}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let fit = |f: fn(&DecayRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.cutoff.is_finite() && f(r) > 0.0)
            .map(|r| (r.cutoff, f(r)))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        fit_power_law(&x, &y).ok()
    };
    let e4_fit = fit(|r| r.e4_excursion);
    let e2_fit = fit(|r| r.e2_excursion);
    if finite.len() >= 3 && e4_fit.is_none() && aborted.is_none() {
        notes.push("fewer than three positive excursions; slope not fitted".into());
    }
    Ok(DecayReport {
        config: cfg.clone(),
        rows,
        e4_fit,
        e2_fit,
        notes,
        aborted,
    })
}

/// Datum and time stepping shared by the trajectory experiments.
#[derive(Debug, Clone, Serialize)]
pub struct RunSetup {
    pub equation: Equation,
    pub period: f64,
    pub modes: usize,
    pub datum_s: f64,
    /// `H^{datum_s}` norm of the datum.
    pub amplitude: f64,
    pub seed: u64,
    /// Highest datum mode; defaults to the dealiased band.
    pub datum_band: Option<i64>,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for RunSetup {
    fn default() -> Self {
        Self {
            equation: Equation::Kdv,
            period: 2.0 * std::f64::consts::PI,
            modes: 64,
            datum_s: 0.0,
            amplitude: 1.0,
            seed: 1,
            datum_band: None,
            dt: 1e-4,
            t_end: 0.01,
            stride: 1,
        }
    }
}

impl RunSetup {
    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.period, self.modes)
    }

    pub fn spec(&self) -> EvolutionSpec {
        EvolutionSpec::new(self.equation, self.dt, self.t_end).with_stride(self.stride)
    }

    pub fn datum(&self) -> Result<SpectralField> {
        let grid = self.grid()?;
        let band = self
            .datum_band
            .unwrap_or_else(|| grid.dealias_band(self.equation.natural_dealias()));
        let mut u = generate_datum(
            self.seed,
            SobolevIndex(self.datum_s),
            self.amplitude,
            grid,
            Some(band),
        )?;
        if !self.equation.is_real() {
            u.set_real_valued(false);
        }
        Ok(u)
    }

    pub fn run(&self) -> Result<Trajectory> {
        solve(&self.datum()?, &self.spec())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyTrackConfig {
    pub setup: RunSetup,
    pub cutoff: f64,
    pub s: f64,
    pub bridge: BridgeRule,
    pub convention: ResonantConvention,
    /// Hierarchy matched to the solver's dealiased band.
    pub banded: bool,
    /// FD derivative of `E⁴` every `n`-th interior sample.
    pub derivative: Option<(CenteredStencil, usize)>,
}

/// The energy ledger along one KdV trajectory.
pub fn energy_track(cfg: &EnergyTrackConfig) -> Result<(Trajectory, EnergyLedger)> {
    if cfg.setup.equation != Equation::Kdv {
        return Err(contract("energy tracking needs a KdV trajectory"));
    }
    let traj = cfg.setup.run()?;
    let grid = cfg.setup.grid()?;
    let m = multiplier(cfg.cutoff, cfg.s, cfg.bridge)?;
    let opts = if cfg.banded {
        HierarchyOptions::for_band(grid, traj.band, cfg.convention)
    } else {
        HierarchyOptions::for_lattice(grid, cfg.convention)
    };
    let h = build_hierarchy_with(m, opts);
    let mut led = EnergyLedger::track(&traj.times, &traj.samples, &h, cfg.derivative)?;
    let p = &mut led.parameters;
    p.insert("cutoff".into(), cfg.cutoff.to_string());
    p.insert("s".into(), cfg.s.to_string());
    p.insert("dt".into(), cfg.setup.dt.to_string());
    p.insert("modes".into(), cfg.setup.modes.to_string());
    p.insert("period".into(), cfg.setup.period.to_string());
    p.insert("seed".into(), cfg.setup.seed.to_string());
    p.insert("band".into(), traj.band.to_string());
    p.insert("convention".into(), format!("{:?}", cfg.convention));
    Ok((traj, led))
}

/// Largest `|dE⁴_fd − Λ₅(M₅)| / |Λ₅(M₅)|` in a ledger.
pub fn ledger_chain_error(led: &EnergyLedger) -> Option<f64> {
    let errs: Vec<f64> = led
        .de4_fd
        .iter()
        .zip(&led.lambda5_m5)
        .filter_map(|(d, l)| match (d, l) {
            (Some(d), Some(l)) if *l != 0.0 => Some((d - l).abs() / l.abs()),
            _ => None,
        })
        .collect();
    if errs.is_empty() {
        None
    } else {
        Some(errs.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthConfig {
    pub setup: RunSetup,
    /// Sobolev index of the tracked norm.
    pub s: f64,
    /// Step budget; longer runs are cut short and flagged.
    pub max_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Power law over the second half of the positive times.
    pub fit: Option<LineFit>,
    pub truncated: bool,
}

impl GrowthReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,hs_norm")?;
        for (t, n) in self.times.iter().zip(&self.norms) {
            writeln!(w, "{t:.17e},{n:.17e}")?;
        }
        Ok(())
    }

    /// Largest relative deviation from the initial norm.
    pub fn relative_variation(&self) -> f64 {
        let n0 = self.norms[0];
        self.norms
            .iter()
            .map(|n| (n - n0).abs() / n0)
            .fold(0.0, f64::max)
    }
}

/// `‖u(t)‖_{H^s}` along a long solve.
pub fn growth_track(cfg: &GrowthConfig) -> Result<GrowthReport> {
    let mut setup = cfg.setup.clone();
    let steps = (setup.t_end / setup.dt).round() as usize;
    let truncated = steps > cfg.max_steps;
    if truncated {
        let kept = cfg.max_steps - cfg.max_steps % setup.stride.max(1);
        if kept == 0 {
            return Err(contract("step budget smaller than one output stride"));
        }
        setup.t_end = kept as f64 * setup.dt;
    }
    let traj = setup.run()?;
    let s = SobolevIndex(cfg.s);
    let norms: Vec<f64> = traj.samples.iter().map(|u| u.sobolev_norm(s)).collect();
    let t_last = *traj.times.last().unwrap_or(&0.0);
    let tail: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&norms)
        .filter(|(t, _)| **t > 0.0 && **t >= 0.5 * t_last)
        .map(|(t, n)| (*t, *n))
        .collect();
    let fit = if tail.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
        fit_power_law(&x, &y).ok()
    } else {
        None
    };
    Ok(GrowthReport {
        times: traj.times,
        norms,
        fit,
        truncated,
    })
}
