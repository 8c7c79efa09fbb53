use std::collections::BTreeMap;
use std::io::Write;

use super::HierarchyMultipliers;
use crate::error::{Error, Result};
use crate::forms::{eval_lambda_uniform_real, Constant};
use crate::numerics::CenteredStencil;
use crate::spectral::SpectralField;

/// Coefficient `c₃` in the conserved energy `‖∂_x u‖² + c₃ ∫u³` of
/// `∂_t u + ∂_x³u + ½∂_x(u²) = 0`.
pub const HAMILTONIAN_CUBIC_COEFF: f64 = -1.0 / 3.0;

fn require_real_mean_zero(u: &SpectralField) -> Result<()> {
    if !u.is_real_valued() {
        return Err(Error::RealRequired);
    }
    if !u.is_mean_zero() {
        return Err(Error::MeanZeroRequired { slot: 0 });
    }
    Ok(())
}

/// `E²_I = ‖Iu‖²_{L²}`
pub fn eval_e2(u: &SpectralField, h: &HierarchyMultipliers) -> Result<f64> {
    require_real_mean_zero(u)?;
    Ok(u.apply_i(&h.energy_multiplier()).l2_norm_sq())
}

/// `E³_I = E²_I + Λ₃(σ₃)`
pub fn eval_e3(u: &SpectralField, h: &HierarchyMultipliers) -> Result<f64> {
    Ok(eval_e2(u, h)? + eval_lambda_uniform_real(h.sigma3.as_ref(), u)?)
}

/// `E⁴_I = E³_I + Λ₄(σ₄)`
pub fn eval_e4(u: &SpectralField, h: &HierarchyMultipliers) -> Result<f64> {
    Ok(eval_e3(u, h)? + eval_lambda_uniform_real(h.sigma4.as_ref(), u)?)
}

/// `‖∂_x u‖²_{L²} − (1/3)∫u³ dx`
pub fn hamiltonian_energy(u: &SpectralField) -> Result<f64> {
    if !u.is_real_valued() {
        return Err(Error::RealRequired);
    }
    let cubic = eval_lambda_uniform_real(&Constant::new(3, 1.0), u)?;
    Ok(u.derivative().l2_norm_sq() + HAMILTONIAN_CUBIC_COEFF * cubic)
}

/// FD derivatives of `E²,E³,E⁴` against `Λ₃(M₃), Λ₄(M₄), Λ₅(M₅)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainReport {
    pub centers: Vec<usize>,
    /// `fd[level][i]`, level 0..3 for `E², E³, E⁴`
    pub fd: [Vec<f64>; 3],
    pub form: [Vec<f64>; 3],
    /// Largest `|fd − form| / |form|` per level.
    pub max_rel_error: [f64; 3],
}

/// Check `d/dt E^{k}_I = Λ_{k+1}(M_{k+1})` for `k = 2, 3, 4` along uniformly
/// spaced samples, at the given stencil centers.
pub fn derivative_chain(
    samples: &[SpectralField],
    dt: f64,
    h: &HierarchyMultipliers,
    stencil: CenteredStencil,
    centers: &[usize],
) -> Result<ChainReport> {
    let p = stencil.half_width();
    for &c in centers {
        if c < p || c + p >= samples.len() {
            return Err(Error::TooFewSamples {
                needed: c + p + 1,
                got: samples.len(),
            });
        }
    }
    let mut needed = vec![false; samples.len()];
    for &c in centers {
        for flag in &mut needed[c - p..=c + p] {
            *flag = true;
        }
    }
    let mut levels = vec![[f64::NAN; 3]; samples.len()];
    for (i, u) in samples.iter().enumerate() {
        if needed[i] {
            let e2 = eval_e2(u, h)?;
            let e3 = e2 + eval_lambda_uniform_real(h.sigma3.as_ref(), u)?;
            let e4 = e3 + eval_lambda_uniform_real(h.sigma4.as_ref(), u)?;
            levels[i] = [e2, e3, e4];
        }
    }
    let mut fd: [Vec<f64>; 3] = Default::default();
    let mut form: [Vec<f64>; 3] = Default::default();
    let mut max_rel = [0.0f64; 3];
    let forms = [&h.m3, &h.m4, &h.m5];
    for &c in centers {
        let u = &samples[c];
        for l in 0..3 {
            let series: Vec<f64> = levels.iter().map(|v| v[l]).collect();
            let d = stencil.apply(&series, dt, c)?;
            let f = eval_lambda_uniform_real(forms[l].as_ref(), u)?;
            let rel = if f != 0.0 {
                (d - f).abs() / f.abs()
            } else {
                (d - f).abs()
            };
            max_rel[l] = max_rel[l].max(rel);
            fd[l].push(d);
            form[l].push(f);
        }
    }
    Ok(ChainReport {
        centers: centers.to_vec(),
        fd,
        form,
        max_rel_error: max_rel,
    })
}

/// Time series of the modified energies along a trajectory.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub e2: Vec<f64>,
    pub e3: Vec<f64>,
    pub e4: Vec<f64>,
    /// `E⁴(t_{i+1}) − E⁴(t_i)`
    pub increments: Vec<f64>,
    /// FD estimate of `d/dt E⁴` where a centered stencil fits.
    pub de4_fd: Vec<Option<f64>>,
    /// `Λ₅(M₅)` at the same instants as `de4_fd`.
    pub lambda5_m5: Vec<Option<f64>>,
    pub parameters: BTreeMap<String, String>,
}

impl EnergyLedger {
    /// Energies at every sample; with `derivative = Some((stencil, every))`
    /// also the FD derivative of `E⁴` and `Λ₅(M₅)` at every `every`-th
    /// interior sample (uniform spacing assumed).
    pub fn track(
        times: &[f64],
        samples: &[SpectralField],
        h: &HierarchyMultipliers,
        derivative: Option<(CenteredStencil, usize)>,
    ) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(Error::SizeMismatch {
                expected: samples.len(),
                got: times.len(),
            });
        }
        let mut led = EnergyLedger {
            times: times.to_vec(),
            ..Default::default()
        };
        for u in samples {
            let e2 = eval_e2(u, h)?;
            let e3 = e2 + eval_lambda_uniform_real(h.sigma3.as_ref(), u)?;
            let e4 = e3 + eval_lambda_uniform_real(h.sigma4.as_ref(), u)?;
            led.e2.push(e2);
            led.e3.push(e3);
            led.e4.push(e4);
        }
        led.increments = led.e4.windows(2).map(|w| w[1] - w[0]).collect();
        led.de4_fd = vec![None; samples.len()];
        led.lambda5_m5 = vec![None; samples.len()];
        if let Some((stencil, every)) = derivative {
            if samples.len() >= 2 {
                let dt = times[1] - times[0];
                for c in stencil.interior(samples.len()).step_by(every.max(1)) {
                    led.de4_fd[c] = Some(stencil.apply(&led.e4, dt, c)?);
                    led.lambda5_m5[c] = Some(eval_lambda_uniform_real(h.m5.as_ref(), &samples[c])?);
                }
            }
        }
        Ok(led)
    }

    /// `sup_t |E⁴(t) − E⁴(0)|`
    pub fn e4_excursion(&self) -> f64 {
        excursion(&self.e4)
    }

    /// `sup_t |E²(t) − E²(0)|`
    pub fn e2_excursion(&self) -> f64 {
        excursion(&self.e2)
    }

    /// CSV with columns `t, E2, E4, dE4_fd, lambda5_M5, residual`; the last
    /// three are blank where no derivative was evaluated.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,E2,E4,dE4_fd,lambda5_M5,residual")?;
        for i in 0..self.times.len() {
            let (d, l, r) = match (self.de4_fd[i], self.lambda5_m5[i]) {
                (Some(d), Some(l)) => (
                    format!("{d:.17e}"),
                    format!("{l:.17e}"),
                    format!("{:.17e}", d - l),
                ),
                _ => (String::new(), String::new(), String::new()),
            };
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{d},{l},{r}",
                self.times[i], self.e2[i], self.e4[i]
            )?;
        }
        Ok(())
    }
}

fn excursion(v: &[f64]) -> f64 {
    match v.first() {
        Some(&v0) => v.iter().map(|x| (x - v0).abs()).fold(0.0, f64::max),
        None => 0.0,
    }
}
