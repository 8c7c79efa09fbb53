use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{contract, Error, Result};
use crate::spectral::{PeriodicGrid, SobolevIndex, SpectralField};

/// Seeded real mean-zero field with `û(ξ_j) ∝ g_j ⟨ξ_j⟩^{-s-1/2}` on
/// `1 ≤ |j| ≤ band` (`g_j` standard complex Gaussians, Hermitian paired),
/// scaled so that its `H^s` norm equals `amplitude`.
pub fn generate_datum(
    seed: u64,
    s: SobolevIndex,
    amplitude: f64,
    grid: PeriodicGrid,
    band: Option<i64>,
) -> Result<SpectralField> {
    let band = band.unwrap_or(grid.max_index());
    if band < 1 || band > grid.max_index() {
        return Err(contract(format!(
            "band {band} outside 1..={}",
            grid.max_index()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut modes = Vec::with_capacity(band as usize);
    for j in 1..=band {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let w = SobolevIndex::bracket(grid.frequency(j)).powf(-s.0 - 0.5);
        modes.push((j, Complex64::new(re * half, im * half) * w));
    }
    let raw = SpectralField::from_modes(grid, &modes, true)?;
    let norm = raw.sobolev_norm(s);
    if amplitude == 0.0 || norm == 0.0 {
        return Ok(SpectralField::zeros(grid, true));
    }
    Ok(raw.scaled(Complex64::new(amplitude / norm, 0.0)))
}

/// `u_λ(x) = λ^{-2} u(x/λ)` on the torus of length `λ·period`.
///
/// Index `j` on the old grid maps to the same index on the new one
/// (`ξ ↦ ξ/λ`) with coefficient `û(ξ)/λ`. `mode_count` defaults to the
/// source resolution.
pub fn rescale(u: &SpectralField, factor: f64, mode_count: Option<usize>) -> Result<SpectralField> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(contract(format!(
            "scale factor must be positive, got {factor}"
        )));
    }
    let g = u.grid();
    let target = PeriodicGrid::new(g.period() * factor, mode_count.unwrap_or(g.mode_count()))?;
    let band = u.support_band();
    if band > target.max_index() {
        return Err(Error::ResolutionLoss(format!(
            "mode {band} does not fit {} target modes",
            target.mode_count()
        )));
    }
    let mut out = SpectralField::zeros(target, u.is_real_valued());
    let inv = 1.0 / factor;
    for (j, c) in u.modes() {
        if j.abs() <= band {
            out.set_coeff(j, c * inv)?;
        }
    }
    Ok(out)
}
