//! Zero-padded pseudospectral products.
//!
//! Inputs are lifted to an `M^d` grid with their Nyquist modes dropped,
//! combined pointwise, transformed back and truncated to `|k_i| < N/2`.
//! With `M ≥ (p+1)N/2` a degree-`p` product is alias-free.

use crate::error::Result;
use crate::field::{pad_spectrum, truncate_spectrum, RealField, SpectralField};
use crate::grid::Grid;

/// Padded evaluation grid for products on a fixed base grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dealiaser {
    base: Grid,
    fine: Grid,
}

impl Dealiaser {
    /// Padding to `M = ceil(factor·N)` rounded up to an even count.
    pub fn with_factor(base: Grid, factor: f64) -> Result<Self> {
        let mut m = (factor * base.n() as f64).ceil() as usize;
        m += m % 2;
        let fine = base.with_points(m.max(base.n()))?;
        Ok(Self { base, fine })
    }

    /// The 3/2 rule for quadratic products.
    pub fn quadratic(base: Grid) -> Self {
        Self::with_factor(base, 1.5).expect("valid padded grid")
    }

    /// Padding factor 3, alias-free up to quartic and quintic terms.
    pub fn quartic(base: Grid) -> Self {
        Self::with_factor(base, 3.0).expect("valid padded grid")
    }

    pub fn base(&self) -> &Grid {
        &self.base
    }

    pub fn fine(&self) -> &Grid {
        &self.fine
    }

    /// Physical values of `u` on the padded grid.
    pub fn lift(&self, u: &SpectralField) -> Result<RealField> {
        pad_spectrum(u, &self.fine, false).to_real()
    }

    /// Project padded physical values back to the base grid.
    pub fn lower(&self, r: &RealField) -> SpectralField {
        truncate_spectrum(&r.to_spectral(), &self.base)
    }

    /// Dealiased `f(u(x), v(x))` for single-component fields.
    pub fn combine2(&self, u: &SpectralField, v: &SpectralField, f: impl Fn(f64, f64) -> f64) -> Result<SpectralField> {
        let (ru, rv) = (self.lift(u)?, self.lift(v)?);
        let vals: Vec<f64> = ru.values().iter().zip(rv.values()).map(|(&a, &b)| f(a, b)).collect();
        let r = RealField::new(self.fine, u.components(), vals)?;
        Ok(self.lower(&r))
    }

    /// Dealiased pointwise product, component by component.
    pub fn multiply(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        u.check_same_shape(v)?;
        self.combine2(u, v, |a, b| a * b)
    }

    /// Dealiased `f(u(x))`, component by component.
    pub fn map(&self, u: &SpectralField, f: impl Fn(f64) -> f64) -> Result<SpectralField> {
        let ru = self.lift(u)?;
        let vals: Vec<f64> = ru.values().iter().map(|&a| f(a)).collect();
        Ok(self.lower(&RealField::new(self.fine, u.components(), vals)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_sine_is_exact() {
        let g = Grid::torus(1, 16).unwrap();
        let u = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
        let p = Dealiaser::quadratic(g).multiply(&u, &u).unwrap();
        let want = SpectralField::from_fn(g, 1, |_, x| 0.5 - 0.5 * (2.0 * x[0]).cos()).unwrap();
        assert!((&p - &want).max_abs_coeff() < 1e-12);
    }

    #[test]
    fn high_modes_do_not_alias() {
        // sin(7x)^2 on N=16: the 14-mode must vanish, not fold onto k=2
        let g = Grid::torus(1, 16).unwrap();
        let u = SpectralField::from_fn(g, 1, |_, x| (7.0 * x[0]).sin()).unwrap();
        let p = Dealiaser::quadratic(g).multiply(&u, &u).unwrap();
        assert!((p.coeff(0, &[0]).re - std::f64::consts::PI).abs() < 1e-12);
        for k in 1..8 {
            assert!(p.coeff(0, &[k]).norm() < 1e-12, "k={k}");
        }
    }
}
