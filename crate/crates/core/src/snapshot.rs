//! Binary `.psdf` snapshots and the `norms.csv` export.
//!
//! Layout (little-endian): `b"PSDF"`, version `u32`, `d`, `m`, `N` as `u32`,
//! `L` as `f64`, then `m·N^d` complex coefficients as `(re, im)` `f64` pairs,
//! component-major, row-major in the FFT frequency order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::{log_lyapunov, TrajectoryRecord};
use crate::Complex64;

pub const MAGIC: &[u8; 4] = b"PSDF";
pub const VERSION: u32 = 1;

pub fn write_psdf(w: &mut impl Write, u: &SpectralField) -> Result<()> {
    let g = u.grid();
    w.write_all(MAGIC)?;
    for v in [VERSION, g.dim() as u32, u.components() as u32, g.n() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&g.period().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * u.coeffs().len());
    for c in u.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_psdf(r: &mut impl Read) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (d, m, n) = (read_u32(r)? as usize, read_u32(r)? as usize, read_u32(r)? as usize);
    let period = read_f64(r)?;
    let grid = Grid::new(d, n, period)?;
    let mut coeffs = Vec::with_capacity(m * grid.len());
    for _ in 0..m * grid.len() {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        coeffs.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    SpectralField::new(grid, m, coeffs)
}

/// `t,h_theta,h_s0,w_l_inf,v_trace,flags` with full round-trip precision.
pub fn write_norms_csv(w: &mut impl Write, rec: &TrajectoryRecord) -> Result<()> {
    writeln!(w, "t,h_theta,h_s0,w_l_inf,v_trace,flags")?;
    for i in 0..rec.times.len() {
        let h = rec.h_theta[i];
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            rec.times[i],
            h,
            rec.h_s0[i],
            rec.w_l_inf[i],
            log_lyapunov(h * h),
            rec.flags[i]
        )?;
    }
    Ok(())
}
