use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_arity, KMultiplier, MAX_ARITY};
use crate::error::{Error, Result};
use crate::spectral::{PeriodicGrid, SpectralField};

/// A form value together with `Σ|terms|`, the natural scale for judging
/// round-off in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaValue {
    pub value: Complex64,
    pub magnitude: f64,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const REAL_RESIDUE_TOL: f64 = 1e-10;

struct Plan<'a> {
    k: usize,
    spacing: f64,
    supports: Vec<Vec<(i64, Complex64)>>,
    /// `tail[d]`: largest `|Σ_{i>d} j_i|` reachable by the slots after `d`
    tail: [i64; MAX_ARITY],
    last: &'a SpectralField,
    m: &'a dyn KMultiplier,
}

fn prepare<'a>(m: &'a dyn KMultiplier, fields: &[&'a SpectralField]) -> Result<Plan<'a>> {
    let k = m.arity();
    check_arity(k)?;
    if fields.len() != k {
        return Err(Error::SizeMismatch {
            expected: k,
            got: fields.len(),
        });
    }
    let grid: &PeriodicGrid = fields[0].grid();
    for f in fields {
        if f.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    if m.requires_mean_zero() {
        for (slot, f) in fields.iter().enumerate() {
            if !f.is_mean_zero() {
                return Err(Error::MeanZeroRequired { slot });
            }
        }
    }
    let supports: Vec<Vec<(i64, Complex64)>> = fields
        .iter()
        .map(|f| f.modes().filter(|(_, c)| *c != ZERO).collect())
        .collect();
    let bands: Vec<i64> = supports
        .iter()
        .map(|s| s.iter().map(|(j, _)| j.abs()).max().unwrap_or(0))
        .collect();
    let mut tail = [0i64; MAX_ARITY];
    for d in (0..k).rev() {
        tail[d] = if d + 1 < k {
            tail[d + 1] + bands[d + 1]
        } else {
            0
        };
    }
    Ok(Plan {
        k,
        spacing: grid.spacing(),
        supports,
        tail,
        last: fields[k - 1],
        m,
    })
}

impl Plan<'_> {
    fn scale(&self) -> f64 {
        self.last.grid().period().powi(-(self.k as i32 - 1))
    }

    /// Sum over every tuple whose first index is `supports[0][i0]`.
    fn partial(&self, i0: usize) -> (Complex64, f64) {
        let mut idx = [0i64; MAX_ARITY];
        let (j0, c0) = self.supports[0][i0];
        idx[0] = j0;
        let mut acc = (ZERO, 0.0);
        if (j0).abs() <= self.tail[0] {
            self.descend(1, j0, c0, &mut idx, &mut acc);
        }
        acc
    }

    fn descend(
        &self,
        depth: usize,
        partial: i64,
        prod: Complex64,
        idx: &mut [i64; MAX_ARITY],
        acc: &mut (Complex64, f64),
    ) {
        let k = self.k;
        if depth == k - 1 {
            let j = -partial;
            let c = self.last.coeff(j);
            if c == ZERO {
                return;
            }
            idx[depth] = j;
            let term = self.m.eval_lattice(&idx[..k], self.spacing) * prod * c;
            acc.0 += term;
            acc.1 += term.norm();
            return;
        }
        for &(j, c) in &self.supports[depth] {
            let p = partial + j;
            if p.abs() > self.tail[depth] {
                continue;
            }
            idx[depth] = j;
            self.descend(depth + 1, p, prod * c, idx, acc);
        }
    }

    fn finish(&self, partials: Vec<(Complex64, f64)>) -> LambdaValue {
        let mut value = ZERO;
        let mut magnitude = 0.0;
        for (v, a) in partials {
            value += v;
            magnitude += a;
        }
        let s = self.scale();
        LambdaValue {
            value: value * s,
            magnitude: magnitude * s,
        }
    }
}

/// `Λ_k(m; f₁,…,f_k) = λ^{-(k-1)} Σ_{ξ₁+⋯+ξ_k=0} m(ξ) Π f̂_i(ξ_i)`.
///
/// The outer index is split across rayon workers; per-index partial sums are
/// combined in a fixed order, so the result is bit-identical to
/// [`eval_lambda_serial`].
pub fn eval_lambda(m: &dyn KMultiplier, fields: &[&SpectralField]) -> Result<LambdaValue> {
    let plan = prepare(m, fields)?;
    let partials: Vec<(Complex64, f64)> = (0..plan.supports[0].len())
        .into_par_iter()
        .map(|i| plan.partial(i))
        .collect();
    Ok(plan.finish(partials))
}

pub fn eval_lambda_serial(m: &dyn KMultiplier, fields: &[&SpectralField]) -> Result<LambdaValue> {
    let plan = prepare(m, fields)?;
    let partials: Vec<(Complex64, f64)> = (0..plan.supports[0].len())
        .map(|i| plan.partial(i))
        .collect();
    Ok(plan.finish(partials))
}

/// `Λ_k(m; u, …, u)`
pub fn eval_lambda_uniform(m: &dyn KMultiplier, u: &SpectralField) -> Result<LambdaValue> {
    let fields = vec![u; m.arity()];
    eval_lambda(m, &fields)
}

/// Real part of a form that is real in exact arithmetic; the imaginary
/// residue must stay below `1e-10 · Σ|terms|`.
pub fn eval_lambda_real(m: &dyn KMultiplier, fields: &[&SpectralField]) -> Result<f64> {
    real_part(eval_lambda(m, fields)?)
}

pub fn eval_lambda_uniform_real(m: &dyn KMultiplier, u: &SpectralField) -> Result<f64> {
    real_part(eval_lambda_uniform(m, u)?)
}

fn real_part(v: LambdaValue) -> Result<f64> {
    let residue = v.value.im.abs();
    if residue > REAL_RESIDUE_TOL * v.magnitude.max(f64::MIN_POSITIVE) {
        return Err(Error::ImaginaryResidue {
            value: v.value.re,
            residue,
        });
    }
    Ok(v.value.re)
}

/// Direct enumeration of every index tuple in the grid's retained range,
/// testing the zero-sum condition explicitly; an oracle for [`eval_lambda`].
pub fn brute_force_lambda(m: &dyn KMultiplier, fields: &[&SpectralField]) -> Result<Complex64> {
    let k = m.arity();
    check_arity(k)?;
    if fields.len() != k {
        return Err(Error::SizeMismatch {
            expected: k,
            got: fields.len(),
        });
    }
    let grid = *fields[0].grid();
    let kmax = grid.max_index();
    let width = (2 * kmax + 1) as usize;
    let total = width.pow(k as u32);
    let mut acc = ZERO;
    let mut idx = vec![0i64; k];
    for code in 0..total {
        let mut rest = code;
        for slot in idx.iter_mut() {
            *slot = (rest % width) as i64 - kmax;
            rest /= width;
        }
        if idx.iter().sum::<i64>() != 0 {
            continue;
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for (f, &j) in fields.iter().zip(&idx) {
            prod *= f.coeff(j);
        }
        if prod == ZERO {
            continue;
        }
        let xi: Vec<f64> = idx.iter().map(|&j| grid.frequency(j)).collect();
        acc += m.eval(&xi) * prod;
    }
    Ok(acc * grid.period().powi(-(k as i32 - 1)))
}
