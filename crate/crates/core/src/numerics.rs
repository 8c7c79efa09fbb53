//! Small numerical helpers: centered finite-difference stencils and
//! ordinary least-squares line fits.

use crate::error::{Error, Result};

/// Centered first-derivative stencils on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CenteredStencil {
    Order2,
    Order4,
    Order6,
    Order8,
}

impl CenteredStencil {
    /// Weights for offsets `-p..=p`, to be divided by the spacing.
    pub fn weights(self) -> &'static [f64] {
        match self {
            CenteredStencil::Order2 => &[-0.5, 0.0, 0.5],
            CenteredStencil::Order4 => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
            CenteredStencil::Order6 => &[
                -1.0 / 60.0,
                3.0 / 20.0,
                -3.0 / 4.0,
                0.0,
                3.0 / 4.0,
                -3.0 / 20.0,
                1.0 / 60.0,
            ],
            CenteredStencil::Order8 => &[
                1.0 / 280.0,
                -4.0 / 105.0,
                1.0 / 5.0,
                -4.0 / 5.0,
                0.0,
                4.0 / 5.0,
                -1.0 / 5.0,
                4.0 / 105.0,
                -1.0 / 280.0,
            ],
        }
    }

    pub fn half_width(self) -> usize {
        self.weights().len() / 2
    }

    pub fn order(self) -> usize {
        2 * self.half_width()
    }

    /// Derivative estimate at `center` from uniformly spaced `values`.
    pub fn apply(self, values: &[f64], spacing: f64, center: usize) -> Result<f64> {
        let p = self.half_width();
        if center < p || center + p >= values.len() {
            return Err(Error::TooFewSamples {
                needed: 2 * p + 1,
                got: values.len(),
            });
        }
        let w = self.weights();
        let mut acc = 0.0;
        for (i, wi) in w.iter().enumerate() {
            acc += wi * values[center + i - p];
        }
        Ok(acc / spacing)
    }

    /// Centers at which the stencil fits inside `len` samples.
    pub fn interior(self, len: usize) -> std::ops::Range<usize> {
        let p = self.half_width();
        if len < 2 * p + 1 {
            return 0..0;
        }
        p..len - p
    }
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::SizeMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(crate::error::contract("abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Fit `log y = c + p log x`; all inputs must be positive.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(crate::error::contract("power-law fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_differentiate_polynomials_exactly() {
        for (st, deg) in [
            (CenteredStencil::Order2, 2),
            (CenteredStencil::Order4, 4),
            (CenteredStencil::Order6, 6),
            (CenteredStencil::Order8, 8),
        ] {
            let h = 0.1;
            let vals: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(deg)).collect();
            let d = st.apply(&vals, h, 5).unwrap();
            let exact = deg as f64 * (0.5f64).powi(deg - 1);
            assert!((d - exact).abs() < 1e-9, "{st:?}: {d} vs {exact}");
        }
    }

    #[test]
    fn stencil_order_observed() {
        let f = |t: f64| t.sin();
        let err = |h: f64| {
            let vals: Vec<f64> = (0..9).map(|i| f(1.0 + (i as f64 - 4.0) * h)).collect();
            (CenteredStencil::Order4.apply(&vals, h, 4).unwrap() - 1f64.cos()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio.log2() - 4.0).abs() < 0.1);
    }

    #[test]
    fn line_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-12);
        let p = fit_power_law(&[4.0, 8.0, 16.0], &[1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0]).unwrap();
        assert!((p.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few() {
        assert!(CenteredStencil::Order8.apply(&[0.0; 5], 1.0, 2).is_err());
        assert!(fit_line(&[1.0], &[1.0]).is_err());
    }
}
