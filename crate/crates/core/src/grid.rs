//! Uniform collocation grids on the d-torus.
//!
//! Coefficients are stored in FFT order along every axis: index `i` on an
//! axis carries the integer frequency `i` for `i <= N/2` and `i - N` above,
//! so the per-axis frequency set is `{-N/2+1, ..., N/2}`. Multi-dimensional
//! arrays are row-major with the first axis slowest.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A uniform `N^d` grid with period `L` along every axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    period: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("points per axis must be even and >= 4, got {n}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, n, period })
    }

    /// Grid on the standard torus of period 2π.
    pub fn torus(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of grid points (and of Fourier modes), `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `(L/N)^d`.
    pub fn cell_volume(&self) -> f64 {
        (self.period / self.n as f64).powi(self.dim as i32)
    }

    /// Torus volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// `2π / L`, the spacing of the wavenumber lattice.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Signed integer frequency stored at position `i` of one axis.
    #[inline]
    pub fn axis_frequency(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Position on one axis of the integer frequency `k` (taken mod N).
    #[inline]
    pub fn axis_position(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Per-axis positions of a flat index.
    #[inline]
    pub fn positions(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        let mut rest = idx;
        for a in (0..self.dim).rev() {
            out[a] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    #[inline]
    pub fn flat_index(&self, pos: &[usize]) -> usize {
        pos.iter().take(self.dim).fold(0, |acc, &p| acc * self.n + p)
    }

    /// Integer frequency vector of a flat index (unused axes are zero).
    #[inline]
    pub fn frequency(&self, idx: usize) -> [i64; MAX_DIM] {
        let pos = self.positions(idx);
        let mut k = [0i64; MAX_DIM];
        for a in 0..self.dim {
            k[a] = self.axis_frequency(pos[a]);
        }
        k
    }

    /// Flat index of an integer frequency vector (each entry taken mod N).
    #[inline]
    pub fn index_of(&self, k: &[i64]) -> usize {
        let mut pos = [0usize; MAX_DIM];
        for a in 0..self.dim {
            pos[a] = self.axis_position(k[a]);
        }
        self.flat_index(&pos)
    }

    /// Flat index of the frequency `-k`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let k = self.frequency(idx);
        let neg = [-k[0], -k[1], -k[2]];
        self.index_of(&neg)
    }

    /// Physical wavevector `2πk/L` of a flat index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; MAX_DIM] {
        let k = self.frequency(idx);
        let unit = self.wavenumber_unit();
        [k[0] as f64 * unit, k[1] as f64 * unit, k[2] as f64 * unit]
    }

    /// Squared modulus of the wavevector.
    #[inline]
    pub fn wavevector_norm2(&self, idx: usize) -> f64 {
        let w = self.wavevector(idx);
        w[..self.dim].iter().map(|v| v * v).sum()
    }

    /// True when some axis of the mode sits at the Nyquist frequency `N/2`.
    #[inline]
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        let pos = self.positions(idx);
        pos[..self.dim].contains(&(self.n / 2))
    }

    /// Physical coordinates of grid point `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let pos = self.positions(idx);
        let h = self.period / self.n as f64;
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = pos[a] as f64 * h;
        }
        x
    }

    /// Smallest mollification level `n` with `J_n` equal to the identity on
    /// every mode of this grid.
    pub fn identity_mollifier_level(&self) -> usize {
        let r = (self.n as f64 / 2.0) * (self.dim as f64).sqrt();
        r.ceil() as usize
    }

    /// The same grid refined (or coarsened) to `m` points per axis.
    pub fn with_points(&self, m: usize) -> Result<Self> {
        Self::new(self.dim, m, self.period)
    }
}
