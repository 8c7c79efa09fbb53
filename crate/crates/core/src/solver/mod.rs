//! Integrating-factor RK4 pseudospectral solver for periodic KdV-type
//! equations, seeded data and the scaling map.

mod datum;
mod io;

pub use datum::{generate_datum, rescale};
pub use io::{read_snapshots, write_run, RunMeta};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::hierarchy::hamiltonian_energy;
use crate::spectral::{DealiasRule, FftPair, PeriodicGrid, SpectralField};

/// The evolution equations. All share the dispersive part `∂_t u + ∂_x³u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    /// `∂_t u + ∂_x³u + ½∂_x(u²) = 0`
    Kdv,
    /// `∂_t u + ∂_x³u + 6u²∂_x u = 0`
    MkdvFocusing,
    /// `∂_t u + ∂_x³u − 6u²∂_x u = 0`
    MkdvDefocusing,
    /// `∂_t v + ∂_x³v − 6iv∂_x v = 0`, complex valued
    ComplexKdv,
    /// `∂_t u + ∂_x³u = 0`
    Linear,
}

impl Equation {
    pub fn is_real(self) -> bool {
        !matches!(self, Equation::ComplexKdv)
    }

    /// Dealiasing rule matched to the degree of the nonlinearity.
    pub fn natural_dealias(self) -> DealiasRule {
        match self {
            Equation::MkdvFocusing | Equation::MkdvDefocusing => DealiasRule::Half,
            _ => DealiasRule::TwoThirds,
        }
    }

    fn degree(self) -> usize {
        match self {
            Equation::MkdvFocusing | Equation::MkdvDefocusing => 3,
            Equation::Linear => 1,
            _ => 2,
        }
    }
}

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub equation: Equation,
    /// Step size magnitude.
    pub dt: f64,
    /// Integration length (positive).
    pub t_end: f64,
    pub dealias: DealiasRule,
    /// Record every `output_stride`-th step (the last step is always kept).
    pub output_stride: usize,
    /// Integrate toward negative times.
    pub backward: bool,
    /// Advisory threshold on `dt · max|α₃|`, the largest interaction phase
    /// swept per step.
    pub phase_threshold: f64,
}

impl EvolutionSpec {
    pub fn new(equation: Equation, dt: f64, t_end: f64) -> Self {
        Self {
            equation,
            dt,
            t_end,
            dealias: equation.natural_dealias(),
            output_stride: 1,
            backward: false,
            phase_threshold: 1.0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn with_dealias(mut self, rule: DealiasRule) -> Self {
        self.dealias = rule;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.backward = !self.backward;
        self
    }

    fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(contract(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(contract(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.output_stride == 0 {
            return Err(contract("output stride must be at least 1"));
        }
        if self.dealias.degree() < self.equation.degree() {
            return Err(contract(format!(
                "{:?} dealiasing does not resolve a degree-{} nonlinearity",
                self.dealias,
                self.equation.degree()
            )));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(contract("t_end must be an integer multiple of dt"));
        }
        Ok(steps as usize)
    }
}

/// Conserved-quantity diagnostics at one output instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    /// `∫u dx = û(0)` (real part; the imaginary part is zero for real runs)
    pub mass: f64,
    pub l2: f64,
    /// `‖∂_x u‖² − (1/3)∫u³` for KdV runs.
    pub hamiltonian: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spec: EvolutionSpec,
    /// Retained band `|j| ≤ band`.
    pub band: i64,
    pub times: Vec<f64>,
    pub samples: Vec<SpectralField>,
    pub diagnostics: Vec<Diagnostics>,
    pub advisories: Vec<String>,
}

impl Trajectory {
    /// Spacing between consecutive outputs (uniform except possibly the last).
    pub fn output_dt(&self) -> f64 {
        self.spec.dt * self.spec.output_stride as f64
    }

    pub fn last(&self) -> &SpectralField {
        self.samples
            .last()
            .expect("trajectory holds at least the datum")
    }
}

fn diagnostics(u: &SpectralField, t: f64, eq: Equation) -> Result<Diagnostics> {
    Ok(Diagnostics {
        t,
        mass: u.mean_mode().re,
        l2: u.l2_norm(),
        hamiltonian: if eq == Equation::Kdv {
            Some(hamiltonian_energy(u)?)
        } else {
            None
        },
    })
}

/// Right-hand side evaluator with cached transforms.
struct Rhs {
    eq: Equation,
    grid: PeriodicGrid,
    band: i64,
    fft: FftPair,
    buf: Vec<Complex64>,
    /// `factor[slot]` multiplies `F[u^p]` in the nonlinear term
    factor: Vec<Complex64>,
    keep: Vec<bool>,
}

impl Rhs {
    fn new(eq: Equation, grid: PeriodicGrid, band: i64) -> Self {
        let m = grid.mode_count();
        let mut factor = vec![Complex64::new(0.0, 0.0); m];
        let mut keep = vec![false; m];
        for slot in 0..m {
            let j = grid.index_of_slot(slot);
            let xi = grid.frequency(j);
            keep[slot] = j != 0 && j.abs() <= band && slot != m / 2;
            factor[slot] = match eq {
                Equation::Kdv => Complex64::new(0.0, -xi / 2.0),
                Equation::MkdvFocusing => Complex64::new(0.0, -2.0 * xi),
                Equation::MkdvDefocusing => Complex64::new(0.0, 2.0 * xi),
                Equation::ComplexKdv => Complex64::new(-3.0 * xi, 0.0),
                Equation::Linear => Complex64::new(0.0, 0.0),
            };
        }
        Self {
            eq,
            grid,
            band,
            fft: FftPair::new(m),
            buf: vec![Complex64::new(0.0, 0.0); m],
            factor,
            keep,
        }
    }

    /// Nonlinear part of `∂_t û` (the linear part is handled exactly).
    fn eval(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        if self.eq == Equation::Linear {
            out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            return;
        }
        let m = self.grid.mode_count();
        let lam = self.grid.period();
        let inv = 1.0 / lam;
        for (b, c) in self.buf.iter_mut().zip(u) {
            *b = c * inv;
        }
        self.fft.inverse(&mut self.buf);
        let real = self.eq.is_real();
        for b in self.buf.iter_mut() {
            if real {
                b.im = 0.0;
            }
            *b = if self.eq.degree() == 3 {
                *b * *b * *b
            } else {
                *b * *b
            };
        }
        self.fft.forward(&mut self.buf);
        let scale = lam / m as f64;
        for (slot, o) in out.iter_mut().enumerate().take(m) {
            *o = if self.keep[slot] {
                self.factor[slot] * self.buf[slot] * scale
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }

    fn project(&self, u: &mut [Complex64]) {
        for (slot, c) in u.iter_mut().enumerate() {
            if !self.keep[slot] {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        if self.eq.is_real() {
            let m = self.grid.mode_count();
            for j in 1..=self.band as usize {
                let avg = (u[j] + u[m - j].conj()) * 0.5;
                u[j] = avg;
                u[m - j] = avg.conj();
            }
        }
    }
}

/// Integrate `datum` with classical RK4 in the Airy interaction frame.
///
/// The datum is projected onto the dealiased band and its mean removed
/// before the first step; every step re-projects.
pub fn solve(datum: &SpectralField, spec: &EvolutionSpec) -> Result<Trajectory> {
    let steps = spec.validate()?;
    let eq = spec.equation;
    if eq.is_real() && !datum.is_real_valued() {
        return Err(Error::RealRequired);
    }
    let grid = *datum.grid();
    let band = grid.dealias_band(spec.dealias);
    let m = grid.mode_count();
    let mut advisories = Vec::new();

    let mut rhs = Rhs::new(eq, grid, band);
    let mut u: Vec<Complex64> = datum.coeffs().to_vec();
    let before = u.clone();
    rhs.project(&mut u);
    if u.iter().zip(&before).any(|(a, b)| a != b) {
        advisories.push(format!("datum projected onto mean-zero band |j| <= {band}"));
    }

    let kmax = grid.frequency(band);
    let phase = spec.dt * 3.0 * kmax * (kmax / 2.0) * (kmax / 2.0);
    if phase > spec.phase_threshold {
        advisories.push(format!(
            "interaction phase per step {phase:.3} exceeds threshold {:.3}",
            spec.phase_threshold
        ));
    }

    let h = if spec.backward { -spec.dt } else { spec.dt };
    let mut e_half = vec![Complex64::new(0.0, 0.0); m];
    let mut e_full = vec![Complex64::new(0.0, 0.0); m];
    for slot in 0..m {
        let xi = grid.frequency(grid.index_of_slot(slot));
        let w = xi * xi * xi;
        e_half[slot] = Complex64::from_polar(1.0, w * h / 2.0);
        e_full[slot] = Complex64::from_polar(1.0, w * h);
    }

    let field = |c: &[Complex64]| -> Result<SpectralField> {
        let mut f = SpectralField::from_coeffs(grid, c.to_vec(), false)?;
        if eq.is_real() {
            f.set_real_valued(true);
        }
        Ok(f)
    };

    let mut times = vec![0.0];
    let first = field(&u)?;
    let mut diags = vec![diagnostics(&first, 0.0, eq)?];
    let mut samples = vec![first];

    let z = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![z; m], vec![z; m], vec![z; m], vec![z; m]);
    let mut tmp = vec![z; m];
    for step in 1..=steps {
        rhs.eval(&u, &mut k1);
        for s in 0..m {
            tmp[s] = e_half[s] * (u[s] + k1[s] * (h / 2.0));
        }
        rhs.eval(&tmp, &mut k2);
        for s in 0..m {
            tmp[s] = e_half[s] * u[s] + k2[s] * (h / 2.0);
        }
        rhs.eval(&tmp, &mut k3);
        for s in 0..m {
            tmp[s] = e_full[s] * u[s] + e_half[s] * k3[s] * h;
        }
        rhs.eval(&tmp, &mut k4);
        let mut finite = true;
        for s in 0..m {
            let next = e_full[s] * u[s]
                + (e_full[s] * k1[s] + e_half[s] * (k2[s] + k3[s]) * 2.0 + k4[s]) * (h / 6.0);
            finite &= next.re.is_finite() && next.im.is_finite();
            tmp[s] = next;
        }
        let t = step as f64 * h;
        if !finite {
            return Err(Error::NonFinite {
                step,
                time: t,
                snapshot: Box::new(field(&u)?),
            });
        }
        std::mem::swap(&mut u, &mut tmp);
        rhs.project(&mut u);
        if step % spec.output_stride == 0 || step == steps {
            let f = field(&u)?;
            diags.push(diagnostics(&f, t, eq)?);
            samples.push(f);
            times.push(t);
        }
    }
    Ok(Trajectory {
        spec: *spec,
        band,
        times,
        samples,
        diagnostics: diags,
        advisories,
    })
}

#[cfg(test)]
mod tests;
