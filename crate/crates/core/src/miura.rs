//! Miura maps from mKdV to (complex) KdV, residual checks along solver
//! output and ensemble probes of the squared-field estimates.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{contract, Error, Result};
use crate::numerics::{fit_line, fit_power_law, CenteredStencil, LineFit};
use crate::solver::{generate_datum, Equation, EvolutionSpec, Trajectory};
use crate::spectral::{EnergyMultiplier, PeriodicGrid, SobolevIndex, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum MiuraVariant {
    /// `v = ∂_x u + u²`, mapping `∂_t u + ∂_x³u − 6u²∂_x u = 0` to
    /// `∂_t v + ∂_x³v − 6v∂_x v = 0`
    Defocusing,
    /// `v = ∂_x u + iu²`, mapping `∂_t u + ∂_x³u + 6u²∂_x u = 0` to
    /// `∂_t v + ∂_x³v − 6iv∂_x v = 0`
    Focusing,
}

impl MiuraVariant {
    pub fn source_equation(self) -> Equation {
        match self {
            MiuraVariant::Defocusing => Equation::MkdvDefocusing,
            MiuraVariant::Focusing => Equation::MkdvFocusing,
        }
    }

    fn coupling(self) -> Complex64 {
        match self {
            MiuraVariant::Defocusing => Complex64::new(1.0, 0.0),
            MiuraVariant::Focusing => Complex64::new(0.0, 1.0),
        }
    }
}

/// `∂_x u + u²` or `∂_x u + iu²` on `u`'s grid; errors if `u²` does not fit.
pub fn miura_transform(u: &SpectralField, variant: MiuraVariant) -> Result<SpectralField> {
    if !u.is_real_valued() {
        return Err(Error::RealRequired);
    }
    let sq = u.product(u)?;
    let mut v = u.derivative().add(&sq.scaled(variant.coupling()))?;
    v.set_real_valued(variant == MiuraVariant::Defocusing);
    Ok(v)
}

/// Per-instant residual of the target KdV equation.
#[derive(Debug, Clone, Serialize)]
pub struct MiuraResidual {
    pub times: Vec<f64>,
    /// `‖∂_t v + ∂_x³v − 6c v∂_x v‖_{L²}` with `∂_t` by centered differences
    pub residual: Vec<f64>,
    /// `‖∂_t v‖_{L²}` at the same instants, for scale
    pub dvdt_norm: Vec<f64>,
    pub max_residual: f64,
}

/// Residual of `v = Miura(u)` in the matching KdV equation at every
/// interior output of `traj`.
pub fn miura_residual(
    traj: &Trajectory,
    variant: MiuraVariant,
    stencil: CenteredStencil,
) -> Result<MiuraResidual> {
    let need = (2 * stencil.half_width() + 1).max(3);
    if traj.samples.len() < need {
        return Err(Error::TooFewSamples {
            needed: need,
            got: traj.samples.len(),
        });
    }
    if traj.spec.equation != variant.source_equation() {
        return Err(contract(format!(
            "{variant:?} Miura map needs a {:?} trajectory",
            variant.source_equation()
        )));
    }
    let dt = traj.output_dt();
    let vs: Vec<SpectralField> = traj
        .samples
        .iter()
        .map(|u| miura_transform(u, variant))
        .collect::<Result<_>>()?;
    let centers: Vec<usize> = stencil
        .interior(vs.len())
        .filter(|&c| {
            // the final output may sit off the uniform spacing
            c + stencil.half_width() < vs.len() - 1
                || (traj.times[vs.len() - 1] - traj.times[vs.len() - 2] - dt).abs() < 1e-12 * dt
        })
        .collect();
    let grid = *vs[0].grid();
    let weights = stencil.weights();
    let p = stencil.half_width();
    let coupling = 6.0 * variant.coupling();
    let rows: Vec<(f64, f64, f64)> = centers
        .par_iter()
        .map(|&c| -> Result<(f64, f64, f64)> {
            let mut dv = SpectralField::zeros(grid, false);
            for (i, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    dv = dv.add(&vs[c + i - p].scaled(Complex64::new(w / dt, 0.0)))?;
                }
            }
            let v = &vs[c];
            let nonlinear = v.product_exact(&v.derivative())?.scaled(-coupling);
            let wide = *nonlinear.grid();
            let linear = dv.add(&v.derivative().derivative().derivative())?;
            let r = linear.regrid(wide)?.add(&nonlinear)?;
            Ok((traj.times[c], r.l2_norm(), dv.l2_norm()))
        })
        .collect::<Result<_>>()?;
    let max_residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(MiuraResidual {
        times: rows.iter().map(|r| r.0).collect(),
        residual: rows.iter().map(|r| r.1).collect(),
        dvdt_norm: rows.iter().map(|r| r.2).collect(),
        max_residual,
    })
}

/// Ensemble for the squared-field probes.
#[derive(Debug, Clone, Serialize)]
pub struct SquareProbeConfig {
    pub s: f64,
    pub seeds: usize,
    pub base_seed: u64,
    pub grid_modes: usize,
    /// Fields use spectral decay exponents drawn from this range.
    pub decay_range: (f64, f64),
    /// Cutoffs for the `‖I(u²)‖` vs `‖I∂_x u‖` probe.
    pub cutoffs: Vec<f64>,
}

impl Default for SquareProbeConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            seeds: 500,
            base_seed: 1,
            grid_modes: 256,
            decay_range: (-0.4, 1.5),
            cutoffs: vec![8.0, 16.0, 32.0, 64.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareProbeRow {
    pub seed: u64,
    /// `‖u‖_{H^s}`
    pub hs_norm: f64,
    /// `‖u²‖_{H^{s−1}}`
    pub square_norm: f64,
    /// `(‖I∂_x u‖, ‖I(u²)‖)` per cutoff
    pub i_pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareProbeReport {
    pub config: SquareProbeConfig,
    pub rows: Vec<SquareProbeRow>,
    /// Power-law fit of `‖u²‖_{H^{s−1}}` against `‖u‖_{H^s}`.
    pub exponent_fit: LineFit,
    /// Linear fit `‖I(u²)‖ ≈ ε‖I∂_x u‖ + C` per cutoff.
    pub epsilon_fits: Vec<(f64, LineFit)>,
}

impl SquareProbeReport {
    /// CSV `(seed, s, lhs, rhs, fitted_exponent)` with `lhs = ‖u²‖_{H^{s−1}}`,
    /// `rhs = ‖u‖_{H^s}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "seed,s,lhs,rhs,fitted_exponent")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{:.17e},{:.17e},{:.17e}",
                r.seed, self.config.s, r.square_norm, r.hs_norm, self.exponent_fit.slope
            )?;
        }
        Ok(())
    }

    /// CSV `(seed, s, lhs, rhs, fitted_exponent)` per cutoff with
    /// `lhs = ‖I(u²)‖`, `rhs = ‖I∂_x u‖` and the fitted slope `ε(N)`.
    pub fn write_epsilon_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "N,seed,s,lhs,rhs,fitted_exponent")?;
        for (ci, (n, fit)) in self.epsilon_fits.iter().enumerate() {
            for r in &self.rows {
                let (x, y) = r.i_pairs[ci];
                writeln!(
                    w,
                    "{n},{},{},{y:.17e},{x:.17e},{:.17e}",
                    r.seed, self.config.s, fit.slope
                )?;
            }
        }
        Ok(())
    }
}

/// Seeded real fields with `‖u‖_{L²} = 1` and varied spectral decay.
pub fn probe_square_bounds(cfg: &SquareProbeConfig) -> Result<SquareProbeReport> {
    if cfg.seeds < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: cfg.seeds,
        });
    }
    let grid = PeriodicGrid::new(2.0 * std::f64::consts::PI, cfg.grid_modes)?;
    let band = (cfg.grid_modes as i64 - 1) / 4;
    let s = SobolevIndex(cfg.s);
    let s1 = SobolevIndex(cfg.s - 1.0);
    let ms: Vec<EnergyMultiplier> = cfg
        .cutoffs
        .iter()
        .map(|&n| EnergyMultiplier::sharp(n, cfg.s - 1.0))
        .collect::<Result<_>>()?;
    let rows: Vec<SquareProbeRow> = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|i| -> Result<SquareProbeRow> {
            let seed = cfg.base_seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let decay = rng.gen_range(cfg.decay_range.0..=cfg.decay_range.1);
            let u = generate_datum(seed, SobolevIndex(decay), 1.0, grid, Some(band))?;
            let u = u.scaled(Complex64::new(1.0 / u.l2_norm(), 0.0));
            let sq = u.product(&u)?;
            let ux = u.derivative();
            let i_pairs = ms
                .iter()
                .map(|m| (ux.apply_i(m).l2_norm(), sq.apply_i(m).l2_norm()))
                .collect();
            Ok(SquareProbeRow {
                seed,
                hs_norm: u.sobolev_norm(s),
                square_norm: sq.sobolev_norm(s1),
                i_pairs,
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.hs_norm).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.square_norm).collect();
    let exponent_fit = fit_power_law(&xs, &ys)?;
    let mut epsilon_fits = Vec::new();
    for (ci, &n) in cfg.cutoffs.iter().enumerate() {
        let x: Vec<f64> = rows.iter().map(|r| r.i_pairs[ci].0).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.i_pairs[ci].1).collect();
        epsilon_fits.push((n, fit_line(&x, &y)?));
    }
    Ok(SquareProbeReport {
        config: cfg.clone(),
        rows,
        exponent_fit,
        epsilon_fits,
    })
}

/// Residual of the Miura field at one instant for a sequence of output
/// strides, and the observed FD orders between successive strides.
#[derive(Debug, Clone, Serialize)]
pub struct MiuraConvergence {
    pub variant: MiuraVariant,
    pub time: f64,
    pub strides: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `log2(r_i / r_{i+1})`, meaningful when successive strides halve.
    pub orders: Vec<f64>,
}

impl MiuraConvergence {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "variant,t,stride,residual,order")?;
        for (i, (s, r)) in self.strides.iter().zip(&self.residuals).enumerate() {
            let o = if i > 0 {
                format!("{:.17e}", self.orders[i - 1])
            } else {
                String::new()
            };
            writeln!(w, "{:?},{:.17e},{s},{r:.17e},{o}", self.variant, self.time)?;
        }
        Ok(())
    }
}

/// Evaluate the residual of `traj` (recorded at every step or at a stride
/// dividing all of `strides`) at the latest instant reachable by every
/// stencil near the middle of the run.
pub fn miura_convergence(
    traj: &Trajectory,
    variant: MiuraVariant,
    stencil: CenteredStencil,
    strides: &[usize],
) -> Result<MiuraConvergence> {
    let base = traj.spec.output_stride;
    if strides.is_empty() || strides.iter().any(|s| *s == 0 || s % base != 0) {
        return Err(contract(
            "strides must be positive multiples of the output stride",
        ));
    }
    let big = *strides.iter().max().unwrap() / base;
    let p = stencil.half_width();
    let uniform = traj.samples.len() - 1;
    let center = (uniform / 2 / big) * big;
    if center < p * big || center + p * big > uniform {
        return Err(Error::TooFewSamples {
            needed: 2 * p * big + 1,
            got: traj.samples.len(),
        });
    }
    let mut residuals = Vec::new();
    for &s in strides {
        let step = s / base;
        let idx: Vec<usize> = (0..=2 * p).map(|i| center + i * step - p * step).collect();
        let sub = Trajectory {
            spec: EvolutionSpec {
                output_stride: s,
                ..traj.spec
            },
            band: traj.band,
            times: idx.iter().map(|&i| traj.times[i]).collect(),
            samples: idx.iter().map(|&i| traj.samples[i].clone()).collect(),
            diagnostics: Vec::new(),
            advisories: Vec::new(),
        };
        let r = miura_residual(&sub, variant, stencil)?;
        residuals.push(r.residual[0]);
    }
    let orders = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(MiuraConvergence {
        variant,
        time: traj.times[center],
        strides: strides.to_vec(),
        residuals,
        orders,
    })
}

/// `(|∫(Iv)² dx|^{1/2}, (∫|Iv|² dx)^{1/2})` for a complex field `v`.
pub fn square_vs_modulus(v: &SpectralField, m: &EnergyMultiplier) -> Result<(f64, f64)> {
    let iv = v.apply_i(m);
    let sq = iv.product_exact(&iv)?;
    Ok((sq.mean_mode().norm().sqrt(), iv.l2_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cosine_transform() {
        let g = PeriodicGrid::new(2.0 * PI, 16).unwrap();
        let u = SpectralField::from_modes(g, &[(1, c(PI, 0.0))], true).unwrap();
        let v = miura_transform(&u, MiuraVariant::Defocusing).unwrap();
        // −sin x + 1/2 + cos(2x)/2
        let expect = SpectralField::from_modes(
            g,
            &[(0, c(PI, 0.0)), (1, c(0.0, PI)), (2, c(PI / 2.0, 0.0))],
            true,
        )
        .unwrap();
        for (a, b) in v.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        let z = SpectralField::zeros(g, true);
        assert_eq!(
            miura_transform(&z, MiuraVariant::Focusing)
                .unwrap()
                .l2_norm(),
            0.0
        );
    }

    #[test]
    fn polarization_split() {
        let g = PeriodicGrid::new(3.0, 32).unwrap();
        let u = generate_datum(1, SobolevIndex(0.0), 1.0, g, Some(7)).unwrap();
        let k = 1.7;
        for variant in [MiuraVariant::Defocusing, MiuraVariant::Focusing] {
            let lhs = miura_transform(&u.scaled(c(k, 0.0)), variant).unwrap();
            let sq = u.product(&u).unwrap().scaled(variant.coupling() * k * k);
            let rhs = u.derivative().scaled(c(k, 0.0)).add(&sq).unwrap();
            for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_trajectory_residual() {
        let g = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let u = SpectralField::zeros(g, true);
        let t = solve(
            &u,
            &EvolutionSpec::new(Equation::MkdvDefocusing, 1e-3, 0.01),
        )
        .unwrap();
        let r = miura_residual(&t, MiuraVariant::Defocusing, CenteredStencil::Order2).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(miura_residual(&t, MiuraVariant::Focusing, CenteredStencil::Order2).is_err());
    }

    #[test]
    fn square_modulus_ratio() {
        let g = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let u = generate_datum(2, SobolevIndex(0.0), 1.0, g, Some(7)).unwrap();
        let v = miura_transform(&u, MiuraVariant::Focusing).unwrap();
        let m = EnergyMultiplier::sharp(4.0, -0.5).unwrap();
        let (sq, md) = square_vs_modulus(&v, &m).unwrap();
        assert!(sq > 0.0 && sq <= md * (1.0 + 1e-12));
    }
}
