use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

use super::{EnergyMultiplier, PeriodicGrid, SobolevIndex};
use crate::error::{contract, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Cached forward/inverse FFT plans for one transform length.
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(len), p.plan_fft_inverse(len))
        });
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// Unnormalized `Σ_n x_n e^{-2πi jn/M}` in place.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Unnormalized `Σ_j x_j e^{+2πi jn/M}` in place.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }
}

/// A function on the λ-torus held by its Fourier coefficients
/// `û(ξ) = ∫_0^λ e^{-iξx} u(x) dx`, so that `u(x) = (1/λ) Σ û(ξ) e^{iξx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
    real_valued: bool,
}

const HERMITIAN_TOL: f64 = 1e-10;

impl SpectralField {
    pub fn zeros(grid: PeriodicGrid, real_valued: bool) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.mode_count()],
            real_valued,
        }
    }

    /// Build from FFT-ordered coefficients. For real fields the Hermitian
    /// pairing is checked and then imposed exactly; the Nyquist slot is zeroed.
    pub fn from_coeffs(
        grid: PeriodicGrid,
        mut coeffs: Vec<Complex64>,
        real_valued: bool,
    ) -> Result<Self> {
        if coeffs.len() != grid.mode_count() {
            return Err(Error::SizeMismatch {
                expected: grid.mode_count(),
                got: coeffs.len(),
            });
        }
        coeffs[grid.mode_count() / 2] = Complex64::new(0.0, 0.0);
        let mut f = Self {
            grid,
            coeffs,
            real_valued,
        };
        if real_valued {
            let scale = f.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let defect = f.hermitian_defect();
            if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(contract(format!(
                    "coefficients are not Hermitian (defect {defect:.3e})"
                )));
            }
            f.impose_hermitian();
        }
        Ok(f)
    }

    /// Build from `(j, û(ξ_j))` pairs; for real fields the conjugate partner
    /// `-j` is filled in automatically.
    pub fn from_modes(
        grid: PeriodicGrid,
        modes: &[(i64, Complex64)],
        real_valued: bool,
    ) -> Result<Self> {
        let mut f = Self::zeros(grid, real_valued);
        for &(j, c) in modes {
            f.set_coeff(j, c)?;
            if real_valued {
                if j == 0 {
                    f.set_coeff(0, Complex64::new(c.re, 0.0))?;
                } else {
                    f.set_coeff(-j, c.conj())?;
                }
            }
        }
        Ok(f)
    }

    /// Transform real samples at the collocation nodes.
    pub fn forward_transform(samples: &[f64], grid: PeriodicGrid) -> Result<Self> {
        let complex: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut f = Self::forward_transform_complex(&complex, grid)?;
        f.real_valued = true;
        f.impose_hermitian();
        Ok(f)
    }

    pub fn forward_transform_complex(samples: &[Complex64], grid: PeriodicGrid) -> Result<Self> {
        let m = grid.mode_count();
        if samples.len() != m {
            return Err(Error::SizeMismatch {
                expected: m,
                got: samples.len(),
            });
        }
        let mut buf = samples.to_vec();
        FftPair::new(m).forward(&mut buf);
        let scale = grid.period() / m as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf[m / 2] = Complex64::new(0.0, 0.0);
        Ok(Self {
            grid,
            coeffs: buf,
            real_valued: false,
        })
    }

    /// Values at the collocation nodes.
    pub fn inverse_transform(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        FftPair::new(buf.len()).inverse(&mut buf);
        let scale = 1.0 / self.grid.period();
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    /// Real parts of the node values.
    pub fn real_samples(&self) -> Vec<f64> {
        self.inverse_transform().into_iter().map(|c| c.re).collect()
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0] == Complex64::new(0.0, 0.0)
    }

    pub fn set_real_valued(&mut self, real: bool) {
        self.real_valued = real;
        if real {
            self.impose_hermitian();
        }
    }

    /// Coefficient at lattice index `j` (zero outside the retained range).
    pub fn coeff(&self, j: i64) -> Complex64 {
        match self.grid.slot_of(j) {
            Some(s) => self.coeffs[s],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set_coeff(&mut self, j: i64, c: Complex64) -> Result<()> {
        let slot = self
            .grid
            .slot_of(j)
            .ok_or_else(|| contract(format!("index {j} outside retained range")))?;
        self.coeffs[slot] = c;
        Ok(())
    }

    /// `(j, û_j)` for every non-Nyquist slot, ascending in `j`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k = self.grid.max_index();
        (-k..=k).map(move |j| (j, self.coeff(j)))
    }

    /// Largest `|j|` carrying a nonzero coefficient (0 for the zero field).
    pub fn support_band(&self) -> i64 {
        let zero = Complex64::new(0.0, 0.0);
        self.modes()
            .filter(|(_, c)| *c != zero)
            .map(|(j, _)| j.abs())
            .max()
            .unwrap_or(0)
    }

    /// Largest `|û(ξ_j) - conj(û(ξ_{-j}))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let k = self.grid.max_index();
        let mut d = self.coeff(0).im.abs();
        for j in 1..=k {
            d = d.max((self.coeff(j) - self.coeff(-j).conj()).norm());
        }
        d
    }

    fn impose_hermitian(&mut self) {
        let k = self.grid.max_index();
        let c0 = self.coeff(0);
        self.coeffs[0] = Complex64::new(c0.re, 0.0);
        let m = self.grid.mode_count();
        for j in 1..=k as usize {
            let avg = (self.coeffs[j] + self.coeffs[m - j].conj()) * 0.5;
            self.coeffs[j] = avg;
            self.coeffs[m - j] = avg.conj();
        }
    }

    /// `‖u‖²_{L²} = (1/λ) Σ |û|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.period()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `( (1/λ) Σ ⟨ξ⟩^{2s} |û(ξ)|² )^{1/2}`
    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        let sum: f64 = self
            .modes()
            .map(|(j, c)| s.weight_sq(self.grid.frequency(j)) * c.norm_sqr())
            .sum();
        (sum / self.grid.period()).sqrt()
    }

    /// Parseval pairing `∫ f ḡ dx = (1/λ) Σ f̂ conj(ĝ)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s / self.grid.period())
    }

    /// Spatial integral `∫_0^λ u dx = û(0)`.
    pub fn mean_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Exact Airy flow `û(ξ) ↦ e^{iξ³t} û(ξ)`, the solution operator of
    /// `∂_t w + ∂_x³ w = 0`.
    pub fn airy_propagate(&self, t: f64) -> Self {
        let mut out = self.clone();
        for (slot, c) in out.coeffs.iter_mut().enumerate() {
            let xi = self.grid.frequency(self.grid.index_of_slot(slot));
            *c *= Complex64::from_polar(1.0, xi * xi * xi * t);
        }
        if out.real_valued {
            out.impose_hermitian();
        }
        out
    }

    /// `(Iu)^(ξ) = m(ξ) û(ξ)`.
    pub fn apply_i(&self, m: &EnergyMultiplier) -> Self {
        let mut out = self.clone();
        for (slot, c) in out.coeffs.iter_mut().enumerate() {
            let xi = self.grid.frequency(self.grid.index_of_slot(slot));
            *c *= m.eval(xi);
        }
        out
    }

    /// `∂_x u`
    pub fn derivative(&self) -> Self {
        let mut out = self.clone();
        for (slot, c) in out.coeffs.iter_mut().enumerate() {
            let xi = self.grid.frequency(self.grid.index_of_slot(slot));
            *c *= Complex64::new(0.0, xi);
        }
        out
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= factor;
        }
        if factor.im != 0.0 {
            out.real_valued = false;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        out.real_valued = self.real_valued && other.real_valued;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Zero every mode with `|j| > band`.
    pub fn truncated(&self, band: i64) -> Self {
        let mut out = self.clone();
        for (slot, c) in out.coeffs.iter_mut().enumerate() {
            if self.grid.index_of_slot(slot).abs() > band {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn with_zero_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Copy onto another grid with the same period. Fails if a nonzero mode
    /// does not fit.
    pub fn regrid(&self, target: PeriodicGrid) -> Result<Self> {
        if target.period() != self.grid.period() {
            return Err(Error::ResolutionLoss(format!(
                "period {} does not match target period {}",
                self.grid.period(),
                target.period()
            )));
        }
        let mut out = Self::zeros(target, self.real_valued);
        for (j, c) in self.modes() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.set_coeff(j, c).map_err(|_| {
                Error::ResolutionLoss(format!(
                    "mode {j} does not fit a grid of {} modes",
                    target.mode_count()
                ))
            })?;
        }
        Ok(out)
    }

    /// Exact pointwise product, returned on a grid (same period) wide enough
    /// to hold every product mode without aliasing.
    pub fn product_exact(&self, other: &Self) -> Result<Self> {
        self.check_period(other)?;
        let ka = self.support_band();
        let kb = other.support_band();
        let need = 2 * (ka + kb) + 2;
        let mut p = self.grid.mode_count().max(other.grid.mode_count());
        while (p as i64) < need {
            p *= 2;
        }
        let wide = self.grid.with_mode_count(p)?;
        let a = self.regrid(wide)?.inverse_transform();
        let b = other.regrid(wide)?.inverse_transform();
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut out = Self::forward_transform_complex(&prod, wide)?;
        if self.real_valued && other.real_valued {
            out.real_valued = true;
            out.impose_hermitian();
        }
        Ok(out)
    }

    /// Exact product kept on `self`'s grid; errors if any product mode
    /// would fall outside it.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let wide = self.product_exact(other)?;
        let band = wide.support_band();
        if band > self.grid.max_index() {
            return Err(Error::ResolutionLoss(format!(
                "product reaches index {band}, grid holds {}",
                self.grid.max_index()
            )));
        }
        wide.regrid(self.grid)
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn check_period(&self, other: &Self) -> Result<()> {
        if self.grid.period() != other.grid.period() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_samples() {
        let g = PeriodicGrid::new(3.0, 16).unwrap();
        let f = SpectralField::forward_transform(&[2.5; 16], g).unwrap();
        assert!((f.coeff(0).re - 2.5 * 3.0).abs() < 1e-13);
        for j in 1..=7 {
            assert!(f.coeff(j).norm() < 1e-13);
        }
        assert!(f.is_real_valued());
    }

    #[test]
    fn cosine_samples() {
        let lam = 5.0;
        let g = PeriodicGrid::new(lam, 32).unwrap();
        let xs: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| (2.0 * PI * x / lam).cos())
            .collect();
        let f = SpectralField::forward_transform(&xs, g).unwrap();
        for j in -15i64..=15 {
            let expect = if j.abs() == 1 { lam / 2.0 } else { 0.0 };
            assert!((f.coeff(j) - c(expect, 0.0)).norm() < 1e-13, "j={j}");
        }
    }

    /// Direct O(M²) DFT.
    fn direct_dft(samples: &[f64], lam: f64) -> Vec<Complex64> {
        let m = samples.len();
        (0..m)
            .map(|k| {
                let mut s = c(0.0, 0.0);
                for (n, &x) in samples.iter().enumerate() {
                    let ang = -2.0 * PI * (k * n) as f64 / m as f64;
                    s += Complex64::from_polar(x, ang);
                }
                s * (lam / m as f64)
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft_and_plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lam = 7.3;
        let g = PeriodicGrid::new(lam, 24).unwrap();
        // zero the Nyquist content so the two routes agree exactly
        let xs: Vec<f64> = (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f0 = SpectralField::forward_transform(&xs, g).unwrap();
        let xs: Vec<f64> = f0.real_samples();
        let f = SpectralField::forward_transform(&xs, g).unwrap();
        let direct = direct_dft(&xs, lam);
        for (slot, d) in direct.iter().enumerate() {
            if slot == 12 {
                continue;
            }
            assert!((f.coeffs()[slot] - d).norm() < 1e-12);
        }
        let quad: f64 = xs.iter().map(|x| x * x).sum::<f64>() * lam / 24.0;
        assert!((f.l2_norm_sq() - quad).abs() < 1e-12 * quad);
    }

    #[test]
    fn roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = PeriodicGrid::new(2.0, 32).unwrap();
        let modes: Vec<(i64, Complex64)> = (1..=15)
            .map(|j| (j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let f = SpectralField::from_modes(g, &modes, true).unwrap();
        let back = SpectralField::forward_transform(&f.real_samples(), g).unwrap();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sobolev_cosine() {
        let g = PeriodicGrid::new(2.0 * PI, 16).unwrap();
        let u = SpectralField::from_modes(g, &[(1, c(PI, 0.0))], true).unwrap();
        assert!((u.sobolev_norm(SobolevIndex(0.0)) - PI.sqrt()).abs() < 1e-14);
        assert!((u.sobolev_norm(SobolevIndex(1.0)) - 3.0 * PI.sqrt()).abs() < 1e-13);
        assert_eq!(
            SpectralField::zeros(g, true).sobolev_norm(SobolevIndex(1.0)),
            0.0
        );
    }

    #[test]
    fn airy_phase() {
        let g = PeriodicGrid::new(2.0 * PI, 16).unwrap();
        let u = SpectralField::from_modes(g, &[(1, c(1.0, 0.0))], false).unwrap();
        let w = u.airy_propagate(PI);
        assert!((w.coeff(1) - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(u.airy_propagate(0.0), u);
    }

    #[test]
    fn product_matches_collocation() {
        let g = PeriodicGrid::new(3.0, 32).unwrap();
        let a = SpectralField::from_modes(g, &[(2, c(1.0, 0.5)), (3, c(0.2, -1.0))], true).unwrap();
        let b = SpectralField::from_modes(g, &[(1, c(0.3, 0.1)), (4, c(-0.7, 0.0))], true).unwrap();
        let p = a.product(&b).unwrap();
        let direct: Vec<f64> = a
            .real_samples()
            .iter()
            .zip(b.real_samples())
            .map(|(x, y)| x * y)
            .collect();
        let q = SpectralField::forward_transform(&direct, g).unwrap();
        for (x, y) in p.coeffs().iter().zip(q.coeffs()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn product_reports_resolution_loss() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        let a = SpectralField::from_modes(g, &[(3, c(1.0, 0.0))], true).unwrap();
        assert!(matches!(a.product(&a), Err(Error::ResolutionLoss(_))));
        assert_eq!(a.product_exact(&a).unwrap().support_band(), 6);
    }

    #[test]
    fn size_mismatch() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        assert!(matches!(
            SpectralField::forward_transform(&[0.0; 7], g),
            Err(Error::SizeMismatch { .. })
        ));
    }
}
