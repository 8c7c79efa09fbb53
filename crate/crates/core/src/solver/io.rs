use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EvolutionSpec, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{PeriodicGrid, SpectralField};

/// Run manifest written as `meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub grid: PeriodicGrid,
    pub spec: EvolutionSpec,
    pub band: i64,
    pub seed: Option<u64>,
    pub snapshot_count: usize,
    pub advisories: Vec<String>,
}

/// Write `meta.json`, `diagnostics.csv` and `snapshots.bin` into `dir`.
///
/// `snapshots.bin` is little-endian: `λ: f64`, `M: u64`, `count: u64`, then
/// for each snapshot `M` pairs `(re, im): (f64, f64)` in FFT slot order.
/// Snapshot times are the `t` column of `diagnostics.csv`.
pub fn write_run(dir: &Path, traj: &Trajectory, seed: Option<u64>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let grid = *traj.samples[0].grid();
    let meta = RunMeta {
        version: crate::VERSION.to_string(),
        grid,
        spec: traj.spec,
        band: traj.band,
        seed,
        snapshot_count: traj.samples.len(),
        advisories: traj.advisories.clone(),
    };
    serde_json::to_writer_pretty(File::create(dir.join("meta.json"))?, &meta)?;

    let mut w = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
    writeln!(w, "t,mass,l2,hamiltonian")?;
    for d in &traj.diagnostics {
        let h = d
            .hamiltonian
            .map(|v| format!("{v:.17e}"))
            .unwrap_or_default();
        writeln!(w, "{:.17e},{:.17e},{:.17e},{h}", d.t, d.mass, d.l2)?;
    }
    w.flush()?;

    let mut b = BufWriter::new(File::create(dir.join("snapshots.bin"))?);
    b.write_f64::<LittleEndian>(grid.period())?;
    b.write_u64::<LittleEndian>(grid.mode_count() as u64)?;
    b.write_u64::<LittleEndian>(traj.samples.len() as u64)?;
    for f in &traj.samples {
        for c in f.coeffs() {
            b.write_f64::<LittleEndian>(c.re)?;
            b.write_f64::<LittleEndian>(c.im)?;
        }
    }
    b.flush()?;
    Ok(())
}

/// Read a `snapshots.bin` file. Fields are flagged real when Hermitian.
pub fn read_snapshots(path: &Path) -> Result<Vec<SpectralField>> {
    let mut r = BufReader::new(File::open(path)?);
    let period = r.read_f64::<LittleEndian>()?;
    let m = r.read_u64::<LittleEndian>()? as usize;
    let count = r.read_u64::<LittleEndian>()? as usize;
    let grid = PeriodicGrid::new(period, m)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut coeffs = Vec::with_capacity(m);
        for _ in 0..m {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            coeffs.push(Complex64::new(re, im));
        }
        let f = SpectralField::from_coeffs(grid, coeffs, false)?;
        let real = f.hermitian_defect() == 0.0;
        let mut f = f;
        if real {
            f.set_real_valued(true);
        }
        out.push(f);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Contract(format!(
            "{} trailing bytes in snapshot file",
            rest.len()
        )));
    }
    Ok(out)
}
