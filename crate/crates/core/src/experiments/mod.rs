//! Manifest-driven experiments behind the command-line front end.
//!
//! Every run writes CSV files with headers plus `manifest.txt`, a verbatim
//! copy of its manifest, into the output directory.

mod manifest;
mod scans;
mod verify;

pub use manifest::{Manifest, MANIFEST_VERSION};
pub use scans::{
    decay_scan, energy_track, growth_track, ledger_chain_error, DecayReport, DecayRow,
    DecayScanConfig, EnergyTrackConfig, GrowthConfig, GrowthReport, LambdaRule, RunSetup,
};
pub use verify::{verify_all, Golden, VerifyLevel, VerifyReport, GOLDEN_DEFAULT};

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{contract, Error, Result};
use crate::hierarchy::{verify_pointwise_bounds, BoundKind, BoundScanConfig, ResonantConvention};
use crate::lattice::{mu_set_measure, strichartz_count, write_count_csv, CountConfig, MuSetReport};
use crate::miura::{miura_convergence, MiuraVariant};
use crate::numerics::{fit_line, CenteredStencil};
use crate::solver::{write_run, Diagnostics, Equation};
use crate::spectral::{BridgeRule, EnergyMultiplier};

/// One named pass/fail outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Result of a manifest run.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub kind: String,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Kinds accepted by [`run_manifest`].
pub const KINDS: &[&str] = &[
    "solve",
    "energy-track",
    "decay-scan",
    "growth-track",
    "bound-scan",
    "count-strichartz",
    "mu-measure",
    "miura-check",
];

pub fn parse_equation(s: &str) -> Result<Equation> {
    Ok(match s {
        "kdv" => Equation::Kdv,
        "mkdv-focusing" => Equation::MkdvFocusing,
        "mkdv-defocusing" => Equation::MkdvDefocusing,
        "complex-kdv" => Equation::ComplexKdv,
        "linear" => Equation::Linear,
        _ => return Err(Error::Manifest(format!("unknown equation `{s}`"))),
    })
}

pub fn parse_convention(s: &str) -> Result<ResonantConvention> {
    match s {
        "limit" => Ok(ResonantConvention::Limit),
        "zero" => Ok(ResonantConvention::Zero),
        _ => Err(Error::Manifest(format!("unknown convention `{s}`"))),
    }
}

pub fn parse_bridge(s: &str) -> Result<BridgeRule> {
    match s {
        "sharp" => Ok(BridgeRule::Sharp),
        "cubic-log" => Ok(BridgeRule::CubicLog),
        _ => Err(Error::Manifest(format!("unknown bridge `{s}`"))),
    }
}

pub fn parse_stencil(order: usize) -> Result<CenteredStencil> {
    Ok(match order {
        2 => CenteredStencil::Order2,
        4 => CenteredStencil::Order4,
        6 => CenteredStencil::Order6,
        8 => CenteredStencil::Order8,
        _ => {
            return Err(Error::Manifest(format!(
                "no centered stencil of order {order}"
            )))
        }
    })
}

/// `inf` parses as the identity sentinel.
fn parse_cutoffs(m: &Manifest, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    m.list_or(key, default)
}

const SETUP_KEYS: &[&str] = &[
    "equation",
    "period",
    "modes",
    "datum_s",
    "amplitude",
    "seed",
    "datum_band",
    "dt",
    "t_end",
    "stride",
];

fn setup_from(m: &Manifest, equation_default: &str) -> Result<RunSetup> {
    let d = RunSetup::default();
    Ok(RunSetup {
        equation: parse_equation(&m.get_or("equation", equation_default.to_string())?)?,
        period: m.get_or("period", d.period)?,
        modes: m.get_or("modes", d.modes)?,
        datum_s: m.get_or("datum_s", d.datum_s)?,
        amplitude: m.get_or("amplitude", d.amplitude)?,
        seed: m.get_or("seed", d.seed)?,
        datum_band: m.get("datum_band")?,
        dt: m.get_or("dt", d.dt)?,
        t_end: m.get_or("t_end", d.t_end)?,
        stride: m.get_or("stride", d.stride)?,
    })
}

fn keys(extra: &[&'static str], with_setup: bool) -> Vec<&'static str> {
    let mut v = extra.to_vec();
    if with_setup {
        v.extend_from_slice(SETUP_KEYS);
    }
    v
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Out<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }
}

/// Run a manifest, writing outputs into `out_dir`.
pub fn run_manifest(m: &Manifest, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = Out {
        dir: out_dir,
        files: Vec::new(),
    };
    out.create("manifest.txt")?.write_all(m.text().as_bytes())?;
    let checks = match m.kind() {
        "solve" => run_solve(m, &mut out)?,
        "energy-track" => run_energy_track(m, &mut out)?,
        "decay-scan" => run_decay_scan(m, &mut out)?,
        "growth-track" => run_growth(m, &mut out)?,
        "bound-scan" => run_bound_scan(m, &mut out)?,
        "count-strichartz" => run_count(m, &mut out)?,
        "mu-measure" => run_mu(m, &mut out)?,
        "miura-check" => run_miura(m, &mut out)?,
        k => return Err(Error::Manifest(format!("unknown kind `{k}`"))),
    };
    Ok(RunOutcome {
        kind: m.kind().to_string(),
        checks,
        files: out.files,
    })
}

fn run_solve(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&keys(
        &["l2_drift_tol", "mass_drift_tol", "hamiltonian_drift_tol"],
        true,
    ))?;
    let setup = setup_from(m, "kdv")?;
    let traj = setup.run()?;
    write_run(out.dir, &traj, Some(setup.seed))?;
    out.files
        .extend(["meta.json", "diagnostics.csv", "snapshots.bin"].map(String::from));
    let d = &traj.diagnostics;
    let l0 = d[0].l2;
    let drift = |f: &dyn Fn(&Diagnostics) -> f64, scale: f64| {
        let x0 = f(&d[0]);
        d.iter()
            .map(|x| (f(x) - x0).abs() / scale)
            .fold(0.0, f64::max)
    };
    let mut checks = Vec::new();
    if let Some(tol) = m.get::<f64>("l2_drift_tol")? {
        let r = drift(&|x| x.l2, l0);
        checks.push(Check::new(
            "l2_drift",
            r <= tol,
            format!("{r:.3e} (tol {tol:.1e})"),
        ));
    }
    if let Some(tol) = m.get::<f64>("mass_drift_tol")? {
        // a mean-zero datum has no mass to be relative to
        let r = drift(&|x| x.mass, d[0].mass.abs().max(l0));
        checks.push(Check::new(
            "mass_drift",
            r <= tol,
            format!("{r:.3e} (tol {tol:.1e})"),
        ));
    }
    if let Some(tol) = m.get::<f64>("hamiltonian_drift_tol")? {
        let h0 = d[0]
            .hamiltonian
            .ok_or_else(|| contract("hamiltonian drift needs a KdV run"))?;
        let r = drift(&|x| x.hamiltonian.unwrap_or(f64::NAN), h0.abs());
        let ok = r <= tol;
        checks.push(Check::new(
            "hamiltonian_drift",
            ok,
            format!("{r:.3e} (tol {tol:.1e})"),
        ));
    }
    Ok(checks)
}

fn run_energy_track(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&keys(
        &[
            "cutoff",
            "s",
            "bridge",
            "convention",
            "banded",
            "fd_order",
            "fd_every",
            "chain_tol",
        ],
        true,
    ))?;
    let fd_every: usize = m.get_or("fd_every", 0)?;
    let derivative = if fd_every > 0 {
        Some((parse_stencil(m.get_or("fd_order", 8)?)?, fd_every))
    } else {
        None
    };
    let cfg = EnergyTrackConfig {
        setup: setup_from(m, "kdv")?,
        cutoff: m.require("cutoff")?,
        s: m.get_or("s", -0.5)?,
        bridge: parse_bridge(&m.get_or("bridge", "sharp".to_string())?)?,
        convention: parse_convention(&m.get_or("convention", "limit".to_string())?)?,
        banded: m.get_or("banded", true)?,
        derivative,
    };
    let (_, led) = energy_track(&cfg)?;
    let mut w = out.create("energy.csv")?;
    led.write_csv(&mut w)?;
    w.flush()?;
    let mut checks = Vec::new();
    if let Some(tol) = m.get::<f64>("chain_tol")? {
        match ledger_chain_error(&led) {
            Some(e) => checks.push(Check::new(
                "dE4_vs_lambda5",
                e <= tol,
                format!("{e:.3e} (tol {tol:.1e})"),
            )),
            None => checks.push(Check::new(
                "dE4_vs_lambda5",
                false,
                "no derivative samples (set fd_every)",
            )),
        }
    }
    Ok(checks)
}

fn run_decay_scan(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&[
        "s",
        "cutoffs",
        "bridge",
        "lambda_rule",
        "period",
        "lambda_coeff",
        "modes",
        "cfl",
        "t_end",
        "seed",
        "eps0",
        "datum_s",
        "samples",
        "convention",
        "max_slope",
    ])?;
    let d = DecayScanConfig::default();
    let period: f64 = m.get_or("period", std::f64::consts::PI)?;
    let lambda_rule = match m.get_or("lambda_rule", "fixed".to_string())?.as_str() {
        "fixed" => LambdaRule::Fixed(period),
        "coupled" => LambdaRule::Coupled {
            base: period,
            coeff: m.get_or("lambda_coeff", 1.0)?,
        },
        r => return Err(Error::Manifest(format!("unknown lambda_rule `{r}`"))),
    };
    let cfg = DecayScanConfig {
        s: m.get_or("s", d.s)?,
        cutoffs: parse_cutoffs(m, "cutoffs", d.cutoffs.clone())?,
        bridge: parse_bridge(&m.get_or("bridge", "sharp".to_string())?)?,
        lambda_rule,
        modes: m.get_or("modes", d.modes)?,
        cfl: m.get_or("cfl", d.cfl)?,
        t_end: m.get_or("t_end", d.t_end)?,
        seed: m.get_or("seed", d.seed)?,
        eps0: m.get_or("eps0", d.eps0)?,
        datum_s: m.get_or("datum_s", d.datum_s)?,
        samples: m.get_or("samples", d.samples)?,
        convention: parse_convention(&m.get_or("convention", "zero".to_string())?)?,
    };
    let rep = decay_scan(&cfg)?;
    let mut w = out.create("decay.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    let mut w = out.create("fit.csv")?;
    rep.write_fit_csv(&mut w)?;
    w.flush()?;
    let mut checks = Vec::new();
    if let Some(a) = &rep.aborted {
        checks.push(Check::new("solver", false, a.clone()));
    }
    if let Some(max) = m.get::<f64>("max_slope")? {
        match &rep.e4_fit {
            Some(f) => checks.push(Check::new(
                "e4_slope",
                f.slope <= max,
                format!("{:.3} ± {:.3} (max {max})", f.slope, f.slope_stderr),
            )),
            None => checks.push(Check::new("e4_slope", false, "slope not fitted")),
        }
    }
    Ok(checks)
}

fn run_growth(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&keys(
        &["s", "max_steps", "max_exponent", "max_variation"],
        true,
    ))?;
    let cfg = GrowthConfig {
        setup: setup_from(m, "kdv")?,
        s: m.get_or("s", -0.5)?,
        max_steps: m.get_or("max_steps", 10_000_000)?,
    };
    let rep = growth_track(&cfg)?;
    let mut w = out.create("growth.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    let mut checks = vec![Check::new(
        "budget",
        !rep.truncated,
        if rep.truncated {
            "series truncated at max_steps"
        } else {
            "complete"
        },
    )];
    if let Some(max) = m.get::<f64>("max_exponent")? {
        let e = rep.fit.as_ref().map(|f| f.slope);
        checks.push(Check::new(
            "growth_exponent",
            e.is_some_and(|e| e <= max),
            format!("{e:?} (max {max})"),
        ));
    }
    if let Some(max) = m.get::<f64>("max_variation")? {
        let v = rep.relative_variation();
        checks.push(Check::new(
            "norm_variation",
            v <= max,
            format!("{v:.3e} (max {max:.1e})"),
        ));
    }
    Ok(checks)
}

fn run_bound_scan(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&[
        "kinds",
        "cutoff",
        "s",
        "bridge",
        "samples",
        "seed",
        "convention",
    ])?;
    let n: f64 = m.get_or("cutoff", 8.0)?;
    let s: f64 = m.get_or("s", -0.5)?;
    let mut cfg = BoundScanConfig::covering(n, m.get_or("samples", 20_000)?, m.get_or("seed", 1)?);
    cfg.convention = parse_convention(&m.get_or("convention", "limit".to_string())?)?;
    let mult = EnergyMultiplier::new(
        n,
        s,
        parse_bridge(&m.get_or("bridge", "cubic-log".to_string())?)?,
    )?;
    let kinds: Vec<String> = m.list_or("kinds", vec!["m3".into(), "m4".into(), "m5".into()])?;
    let mut w = out.create("bounds.csv")?;
    writeln!(w, "kind,block,samples,excluded,sup_ratio")?;
    let mut checks = Vec::new();
    for k in kinds {
        let kind = match k.as_str() {
            "m3" => BoundKind::M3,
            "m4" => BoundKind::M4,
            "m5" => BoundKind::M5,
            _ => return Err(Error::Manifest(format!("unknown bound kind `{k}`"))),
        };
        let rep = verify_pointwise_bounds(mult, kind, &cfg)?;
        for b in &rep.blocks {
            let key: Vec<String> = b.key.iter().map(u32::to_string).collect();
            writeln!(
                w,
                "{k},{},{},{},{:.17e}",
                key.join("-"),
                b.samples,
                b.excluded,
                b.sup_ratio
            )?;
        }
        if kind == BoundKind::M3 {
            checks.push(Check::new(
                "m3_bound",
                rep.all_finite && rep.global_sup <= 1.0 + 1e-12,
                format!("sup |M3|/min(N1,N2,N3) = {:.6}", rep.global_sup),
            ));
        } else {
            checks.push(Check::new(
                format!("{k}_constant"),
                rep.passes_constant_alarm(),
                format!(
                    "global sup {:.3e}, median {:.3e}, {} flagged",
                    rep.global_sup,
                    rep.median_sup,
                    rep.flagged.len()
                ),
            ));
        }
    }
    w.flush()?;
    Ok(checks)
}

fn run_count(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&[
        "cutoffs",
        "lambdas",
        "window",
        "extra_windows",
        "k_min_frac",
        "max_ratio",
    ])?;
    let cfg = CountConfig {
        window: m.get_or("window", 2)?,
        extra_windows: m.list_or("extra_windows", vec![1, 4])?,
        k_min_frac: m.get_or("k_min_frac", 1.0)?,
    };
    let mut reports = Vec::new();
    for n in m.list_or("cutoffs", vec![4.0, 16.0, 64.0])? {
        for l in m.list_or("lambdas", vec![1u64, 16, 64])? {
            reports.push(strichartz_count(n, l, &cfg)?);
        }
    }
    let mut w = out.create("strichartz.csv")?;
    write_count_csv(&reports, &mut w)?;
    w.flush()?;
    let mut checks = Vec::new();
    if let Some(max) = m.get::<f64>("max_ratio")? {
        let worst = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
        checks.push(Check::new(
            "count_ratio",
            worst <= max,
            format!("max ratio {worst:.3} (max {max})"),
        ));
    }
    Ok(checks)
}

/// Least-squares slope of `log ratio` against `log M` over the nonzero
/// entries.
pub fn mu_trend(reports: &[MuSetReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.ratio > 0.0)
        .map(|r| (r.m.ln(), r.ratio.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_line(&x, &y).ok().map(|f| f.slope)
}

fn run_mu(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&["xis", "lambdas", "min_exp", "max_exp", "max_ratio"])?;
    let min_exp: i32 = m.get_or("min_exp", 4)?;
    let max_exp: i32 = m.get_or("max_exp", 12)?;
    let max_ratio: f64 = m.get_or("max_ratio", 1.0)?;
    let mut w = out.create("mu_measure.csv")?;
    writeln!(w, "{}", MuSetReport::csv_header())?;
    let mut checks = Vec::new();
    for xi in m.list_or("xis", vec![1.0, 2.0, 5.0])? {
        for l in m.list_or("lambdas", vec![1u64, 8])? {
            let num = xi * l as f64;
            if num.fract() != 0.0 {
                return Err(Error::Manifest(format!(
                    "xi = {xi} is not on the lattice Z/{l}"
                )));
            }
            let reps: Vec<MuSetReport> = (min_exp..=max_exp)
                .map(|e| mu_set_measure(num as i64, 2f64.powi(e), l))
                .collect::<Result<_>>()?;
            for r in &reps {
                writeln!(w, "{}", r.csv_row())?;
            }
            let worst = reps.iter().map(|r| r.ratio).fold(0.0, f64::max);
            let trend = mu_trend(&reps);
            checks.push(Check::new(
                format!("mu_xi{xi}_lambda{l}"),
                worst <= max_ratio && trend.is_some_and(|t| t < 0.0),
                format!("max ratio {worst:.4}, log-log trend {trend:?}"),
            ));
        }
    }
    w.flush()?;
    Ok(checks)
}

fn run_miura(m: &Manifest, out: &mut Out) -> Result<Vec<Check>> {
    m.check_keys(&keys(
        &["variants", "strides", "fd_order", "min_order"],
        true,
    ))?;
    let min_order: f64 = m.get_or("min_order", 1.9)?;
    let strides: Vec<usize> = m.list_or("strides", vec![40, 20, 10])?;
    let stencil = parse_stencil(m.get_or("fd_order", 2)?)?;
    let mut w = out.create("miura.csv")?;
    writeln!(w, "variant,t,stride,residual,order")?;
    let mut checks = Vec::new();
    for v in m.list_or(
        "variants",
        vec!["defocusing".to_string(), "focusing".to_string()],
    )? {
        let variant = match v.as_str() {
            "defocusing" => MiuraVariant::Defocusing,
            "focusing" => MiuraVariant::Focusing,
            _ => return Err(Error::Manifest(format!("unknown variant `{v}`"))),
        };
        let mut setup = setup_from(m, "kdv")?;
        setup.equation = variant.source_equation();
        let traj = setup.run()?;
        let c = miura_convergence(&traj, variant, stencil, &strides)?;
        let mut buf = Vec::new();
        c.write_csv(&mut buf)?;
        // drop the per-variant header
        let text = String::from_utf8_lossy(&buf);
        for line in text.lines().skip(1) {
            writeln!(w, "{line}")?;
        }
        checks.push(Check::new(
            format!("{v}_order"),
            c.min_order() >= min_order,
            format!("orders {:?} (min {min_order})", c.orders),
        ));
    }
    w.flush()?;
    Ok(checks)
}
