use num_complex::Complex64;
use std::sync::Arc;

use super::{eval_lambda_uniform, prop1_boundary, BandLimited, SharedMultiplier, WithResonance};
use crate::error::{contract, Error, Result};
use crate::numerics::CenteredStencil;
use crate::spectral::SpectralField;

/// Finite-difference derivative of `Λ_k(m; u(t))` against the form
/// prediction `Λ_k(mα_k) + Λ_{k+1}(boundary(m))` at interior samples.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DerivativeReport {
    pub centers: Vec<usize>,
    pub fd: Vec<Complex64>,
    pub predicted: Vec<Complex64>,
    /// `max_i |fd_i − pred_i| / |pred_i|`
    pub max_rel_mismatch: f64,
    /// `max_i |fd_i − pred_i| / max_i |pred_i|`
    pub sup_rel_mismatch: f64,
    pub max_abs_mismatch: f64,
}

/// Check the derivative rule along uniformly spaced solver output `samples`
/// (spacing `dt`). With `band = Some(K)` the boundary term is computed for
/// the Galerkin flow truncated to `|j| ≤ K`, which is what a dealiased solver
/// integrates.
pub fn time_derivative_check(
    m: SharedMultiplier,
    samples: &[SpectralField],
    dt: f64,
    stencil: CenteredStencil,
    band: Option<i64>,
) -> Result<DerivativeReport> {
    let need = 2 * stencil.half_width() + 1;
    if samples.len() < need.max(3) {
        return Err(Error::TooFewSamples {
            needed: need.max(3),
            got: samples.len(),
        });
    }
    if !m.is_symmetric() {
        return Err(contract("derivative check requires a symmetric multiplier"));
    }
    let grid = *samples[0].grid();
    let banded: SharedMultiplier = match band {
        Some(b) => Arc::new(BandLimited::on_grid(m.clone(), &grid, b)),
        None => m.clone(),
    };
    let boundary = prop1_boundary(banded)?;
    let linear = WithResonance(m.clone());

    let mut re = Vec::with_capacity(samples.len());
    let mut im = Vec::with_capacity(samples.len());
    for u in samples {
        let v = eval_lambda_uniform(m.as_ref(), u)?.value;
        re.push(v.re);
        im.push(v.im);
    }
    let centers: Vec<usize> = stencil.interior(samples.len()).collect();
    let mut fd = Vec::with_capacity(centers.len());
    let mut predicted = Vec::with_capacity(centers.len());
    for &c in &centers {
        fd.push(Complex64::new(
            stencil.apply(&re, dt, c)?,
            stencil.apply(&im, dt, c)?,
        ));
        let u = &samples[c];
        predicted.push(
            eval_lambda_uniform(&linear, u)?.value + eval_lambda_uniform(&boundary, u)?.value,
        );
    }
    let sup_pred = predicted.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut max_rel = 0.0f64;
    let mut max_abs = 0.0f64;
    for (a, b) in fd.iter().zip(&predicted) {
        let d = (a - b).norm();
        max_abs = max_abs.max(d);
        max_rel = max_rel.max(if b.norm() > 0.0 {
            d / b.norm()
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    let sup_rel = if sup_pred > 0.0 {
        max_abs / sup_pred
    } else {
        max_abs
    };
    Ok(DerivativeReport {
        centers,
        fd,
        predicted,
        max_rel_mismatch: max_rel,
        sup_rel_mismatch: sup_rel,
        max_abs_mismatch: max_abs,
    })
}
