//! Real and spectral fields, the discrete Fourier pair and the Sobolev and
//! `W^{l,∞}` norms.
//!
//! The transform pair follows the torus convention
//! `û(k) = ∫ u(x) e^{-ik·x} dx`, `u(x) = L^{-d} Σ_k û(k) e^{ik·x}`,
//! discretized with the rectangle rule, so coefficients of a band-limited
//! field do not depend on `N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{Grid, MAX_DIM};

/// Relative tolerance on the imaginary residue accepted by [`SpectralField::to_real`].
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// A real `m`-component field sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || values.len() != components * grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {} components, got {}",
                components * grid.len(),
                components,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real field"));
        }
        Ok(Self { grid, components, values })
    }

    /// Sample `f(component, x)` at every grid point.
    pub fn from_fn(grid: Grid, components: usize, f: impl Fn(usize, &[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(components * grid.len());
        for j in 0..components {
            for idx in 0..grid.len() {
                let x = grid.point(idx);
                values.push(f(j, &x[..grid.dim()]));
            }
        }
        Self::new(grid, components, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, j: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[j * len..(j + 1) * len]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Forward transform; the result is Hermitian because the input is real.
    pub fn to_spectral(&self) -> SpectralField {
        let len = self.grid.len();
        let w = self.grid.cell_volume();
        let mut coeffs = Vec::with_capacity(self.values.len());
        for j in 0..self.components {
            let mut buf: Vec<Complex64> = self.component(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft::transform(&mut buf, self.grid.dim(), self.grid.n(), FftDirection::Forward);
            coeffs.extend(buf.into_iter().map(|c| c * w));
        }
        debug_assert_eq!(coeffs.len(), self.components * len);
        let mut out = SpectralField { grid: self.grid, components: self.components, coeffs };
        out.symmetrize();
        out
    }

    /// Rectangle-rule `L²` inner product.
    pub fn inner_l2(&self, other: &RealField) -> f64 {
        let w = self.grid.cell_volume();
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * w
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients of a real `m`-component field; component-major,
/// FFT order within a component.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients for {} components, got {}",
                components * grid.len(),
                components,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("spectral field"));
        }
        Ok(Self { grid, components, coeffs })
    }

    pub fn zeros(grid: Grid, components: usize) -> Self {
        Self { grid, components, coeffs: vec![Complex64::default(); components * grid.len()] }
    }

    /// Build from `(component, frequency) -> coefficient`; symmetry is not
    /// enforced.
    pub fn from_modes(grid: Grid, components: usize, f: impl Fn(usize, &[i64]) -> Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(components * grid.len());
        for j in 0..components {
            for idx in 0..grid.len() {
                let k = grid.frequency(idx);
                coeffs.push(f(j, &k[..grid.dim()]));
            }
        }
        Self { grid, components, coeffs }
    }

    /// Sample and transform `f(component, x)`.
    pub fn from_fn(grid: Grid, components: usize, f: impl Fn(usize, &[f64]) -> f64) -> Result<Self> {
        Ok(RealField::from_fn(grid, components, f)?.to_spectral())
    }

    pub(crate) fn from_raw(grid: Grid, components: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), components * grid.len());
        Self { grid, components, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[j * len..(j + 1) * len]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[j * len..(j + 1) * len]
    }

    /// Coefficient of component `j` at integer frequency `k`.
    pub fn coeff(&self, j: usize, k: &[i64]) -> Complex64 {
        let mut kk = [0i64; MAX_DIM];
        kk[..k.len()].copy_from_slice(k);
        self.coeffs[j * self.grid.len() + self.grid.index_of(&kk)]
    }

    pub fn set_coeff(&mut self, j: usize, k: &[i64], value: Complex64) {
        let mut kk = [0i64; MAX_DIM];
        kk[..k.len()].copy_from_slice(k);
        let idx = j * self.grid.len() + self.grid.index_of(&kk);
        self.coeffs[idx] = value;
    }

    /// Extract components `range` as a new field.
    pub fn slice_components(&self, start: usize, count: usize) -> SpectralField {
        let len = self.grid.len();
        SpectralField {
            grid: self.grid,
            components: count,
            coeffs: self.coeffs[start * len..(start + count) * len].to_vec(),
        }
    }

    /// Concatenate fields on the same grid along the component axis.
    pub fn stack(parts: &[SpectralField]) -> Result<SpectralField> {
        let first = parts.first().ok_or_else(|| Error::ShapeMismatch("empty stack".into()))?;
        let mut coeffs = Vec::new();
        let mut components = 0;
        for p in parts {
            first.check_grid(p)?;
            coeffs.extend_from_slice(&p.coeffs);
            components += p.components;
        }
        Ok(SpectralField { grid: first.grid, components, coeffs })
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &SpectralField) -> Result<()> {
        self.check_grid(other)?;
        if self.components != other.components {
            return Err(Error::ShapeMismatch(format!("{} vs {} components", self.components, other.components)));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|û(j,k) - conj(û(j,-k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.len();
        let mut worst = 0.0f64;
        for j in 0..self.components {
            let c = &self.coeffs[j * len..(j + 1) * len];
            for idx in 0..len {
                let cj = self.grid.conjugate_index(idx);
                worst = worst.max((c[idx] - c[cj].conj()).norm());
            }
        }
        worst
    }

    /// Project onto Hermitian-symmetric coefficients, `û ← (û(k) + conj û(-k))/2`.
    pub fn symmetrize(&mut self) {
        let len = self.grid.len();
        for j in 0..self.components {
            let c = &mut self.coeffs[j * len..(j + 1) * len];
            for idx in 0..len {
                let cj = self.grid.conjugate_index(idx);
                if cj < idx {
                    continue;
                }
                if cj == idx {
                    c[idx].im = 0.0;
                } else {
                    let avg = (c[idx] + c[cj].conj()) * 0.5;
                    c[idx] = avg;
                    c[cj] = avg.conj();
                }
            }
        }
    }

    fn inverse_complex(&self) -> Vec<Complex64> {
        let len = self.grid.len();
        let scale = 1.0 / self.grid.volume();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for j in 0..self.components {
            let mut buf = self.component(j).to_vec();
            fft::transform(&mut buf, self.grid.dim(), self.grid.n(), FftDirection::Inverse);
            out.extend(buf.into_iter().map(|c| c * scale));
        }
        debug_assert_eq!(out.len(), self.components * len);
        out
    }

    /// Inverse transform. An imaginary residue above
    /// `REALITY_TOLERANCE * max(1, max|u|)` is an error.
    pub fn to_real(&self) -> Result<RealField> {
        let vals = self.inverse_complex();
        let scale = vals.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
        let residue = vals.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if !residue.is_finite() || residue > REALITY_TOLERANCE * scale {
            return Err(Error::SymmetryViolation { residue });
        }
        RealField::new(self.grid, self.components, vals.into_iter().map(|c| c.re).collect())
    }

    /// Evaluate the trigonometric interpolant on a finer `m^d` grid.
    /// Nyquist coefficients are split evenly between `±N/2`.
    pub fn to_real_oversampled(&self, m: usize) -> Result<RealField> {
        let fine = self.grid.with_points(m)?;
        if m < self.grid.n() {
            return Err(Error::InvalidParameter("oversampling below native resolution".into()));
        }
        let padded = pad_spectrum(self, &fine, true);
        padded.to_real()
    }

    /// `Σ_k` weighted inner product `L^{-d} Σ_{j,k} w(k) û conj(v̂)`, real part.
    fn weighted_inner(&self, other: &SpectralField, weight: impl Fn(usize) -> f64) -> Result<f64> {
        self.check_same_shape(other)?;
        let len = self.grid.len();
        let mut acc = 0.0;
        for j in 0..self.components {
            let a = self.component(j);
            let b = other.component(j);
            for idx in 0..len {
                let p = a[idx] * b[idx].conj();
                acc += weight(idx) * p.re;
            }
        }
        Ok(acc / self.grid.volume())
    }

    /// `H^s` inner product with weight `(1+|k|²)^s`.
    pub fn sobolev_inner(&self, other: &SpectralField, s: f64) -> Result<f64> {
        if s == 0.0 {
            return self.weighted_inner(other, |_| 1.0);
        }
        let g = self.grid;
        self.weighted_inner(other, |idx| (1.0 + g.wavevector_norm2(idx)).powf(s))
    }

    pub fn inner_l2(&self, other: &SpectralField) -> Result<f64> {
        self.sobolev_inner(other, 0.0)
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_inner(self, s).expect("same shape").max(0.0).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Grid approximation of `‖u‖_{W^{l,∞}} = Σ_j Σ_{|α|≤l} max_x |∂^α u_j|`.
    pub fn wk_inf_norm(&self, l: usize) -> Result<f64> {
        self.wk_inf_norm_sampled(l, None)
    }

    /// As [`Self::wk_inf_norm`], optionally evaluated on an `m`-point grid.
    pub fn wk_inf_norm_sampled(&self, l: usize, oversample: Option<usize>) -> Result<f64> {
        let dim = self.grid.dim();
        let mut total = 0.0;
        for alpha in multi_indices(dim, l) {
            let d = self.partial(&alpha);
            let r = match oversample {
                Some(m) => d.to_real_oversampled(m)?,
                None => d.to_real()?,
            };
            for j in 0..self.components {
                total += r.component(j).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("W^{l,inf} norm"));
        }
        Ok(total)
    }

    /// `∂^α u` via the multiplier `(iκ)^α`; odd orders vanish on Nyquist modes.
    pub fn partial(&self, alpha: &[usize]) -> SpectralField {
        let g = self.grid;
        let len = g.len();
        let mut out = self.clone();
        if alpha.iter().all(|&a| a == 0) {
            return out;
        }
        let mut sym = vec![Complex64::default(); len];
        for (idx, s) in sym.iter_mut().enumerate() {
            let kv = g.wavevector(idx);
            let pos = g.positions(idx);
            let mut v = Complex64::new(1.0, 0.0);
            for (a, &p) in alpha.iter().enumerate().take(g.dim()) {
                if p == 0 {
                    continue;
                }
                if pos[a] == g.n() / 2 && p % 2 == 1 {
                    v = Complex64::default();
                    break;
                }
                v *= Complex64::new(0.0, kv[a]).powu(p as u32);
            }
            *s = v;
        }
        for j in 0..self.components {
            for (c, s) in out.component_mut(j).iter_mut().zip(&sym) {
                *c *= s;
            }
        }
        out
    }

    /// Derivative along one axis.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let mut alpha = [0usize; MAX_DIM];
        alpha[axis] = 1;
        self.partial(&alpha[..self.grid.dim()])
    }

    /// Spatial mean of component `j`.
    pub fn mean(&self, j: usize) -> f64 {
        self.component(j)[0].re / self.grid.volume()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.coeffs {
            *c *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// Zero all coefficients touching a Nyquist frequency.
    pub fn drop_nyquist(&mut self) {
        let len = self.grid.len();
        for idx in 0..len {
            if self.grid.touches_nyquist(idx) {
                for j in 0..self.components {
                    self.coeffs[j * len + idx] = Complex64::default();
                }
            }
        }
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "shape mismatch in field addition");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "shape mismatch in field subtraction");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// All multi-indices in `dim` variables with `|α|₁ ≤ order`.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; dim];
    fn rec(a: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if a == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[a] = v;
            rec(a + 1, left - v, cur, out);
        }
        cur[a] = 0;
    }
    rec(0, order, &mut cur, &mut out);
    out
}

/// Copy the spectrum of `u` into the (larger) grid `target`.
///
/// With `split_nyquist` the Nyquist coefficients are shared between `±N/2`
/// so the real interpolant is preserved; otherwise they are dropped.
pub(crate) fn pad_spectrum(u: &SpectralField, target: &Grid, split_nyquist: bool) -> SpectralField {
    let src = *u.grid();
    let dim = src.dim();
    let half = src.n() / 2;
    let mut out = SpectralField::zeros(*target, u.components());
    let (slen, tlen) = (src.len(), target.len());
    for idx in 0..slen {
        let pos = src.positions(idx);
        let k = src.frequency(idx);
        let nyq_axes: Vec<usize> = (0..dim).filter(|&a| pos[a] == half).collect();
        if !nyq_axes.is_empty() && !split_nyquist {
            continue;
        }
        let copies = 1usize << nyq_axes.len();
        let w = 1.0 / copies as f64;
        for mask in 0..copies {
            let mut kk = k;
            for (b, &a) in nyq_axes.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    kk[a] = -kk[a];
                }
            }
            let t = target.index_of(&kk);
            for j in 0..u.components() {
                out.coeffs[j * tlen + t] += u.coeffs[j * slen + idx] * w;
            }
        }
    }
    out
}

/// Restrict a spectrum on a larger grid to `target`, keeping only modes with
/// `|k_i| < N/2` (Nyquist modes of the target are zeroed).
pub(crate) fn truncate_spectrum(u: &SpectralField, target: &Grid) -> SpectralField {
    let src = *u.grid();
    let mut out = SpectralField::zeros(*target, u.components());
    let (slen, tlen) = (src.len(), target.len());
    for idx in 0..tlen {
        if target.touches_nyquist(idx) {
            continue;
        }
        let k = target.frequency(idx);
        let s = src.index_of(&k);
        for j in 0..u.components() {
            out.coeffs[j * tlen + idx] = u.coeffs[j * slen + s];
        }
    }
    out
}

/// Random band-limited real field: modes with `max|k_i| ≤ band` get complex
/// Gaussian coefficients scaled by `(1+|k|²)^{-decay/2}`; the mean is removed
/// when `zero_mean` is set. Deterministic in `seed`.
pub fn random_field(grid: Grid, components: usize, band: i64, decay: f64, zero_mean: bool, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = band.min(grid.nyquist() - 1);
    let mut u = SpectralField::zeros(grid, components);
    let len = grid.len();
    for j in 0..components {
        for idx in 0..len {
            let k = grid.frequency(idx);
            let inside = k[..grid.dim()].iter().all(|v| v.abs() <= band);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if !inside || (zero_mean && idx == 0) {
                continue;
            }
            let amp = (1.0 + grid.wavevector_norm2(idx)).powf(-decay / 2.0);
            u.coeffs[j * len + idx] = Complex64::new(re, im) * amp * grid.volume().sqrt();
        }
    }
    u.symmetrize();
    u
}

/// `sup |u| ≤ C ‖u‖_{H^σ}` constant for fields on `grid`:
/// `C = (L^{-d} Σ_k (1+|κ|²)^{-σ})^{1/2}` (Cauchy–Schwarz, attained).
pub fn sobolev_embedding_constant(grid: &Grid, sigma: f64) -> f64 {
    let sum: f64 = (0..grid.len()).map(|idx| (1.0 + grid.wavevector_norm2(idx)).powf(-sigma)).sum();
    (sum / grid.volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1(n: usize) -> Grid {
        Grid::torus(1, n).unwrap()
    }

    #[test]
    fn constant_transform() {
        let u = SpectralField::from_fn(g1(16), 1, |_, _| 1.0).unwrap();
        assert!((u.coeff(0, &[0]).re - 2.0 * PI).abs() < 1e-13);
        for k in 1..8 {
            assert!(u.coeff(0, &[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn sine_transform() {
        let u = SpectralField::from_fn(g1(16), 1, |_, x| x[0].sin()).unwrap();
        let c1 = u.coeff(0, &[1]);
        let cm1 = u.coeff(0, &[-1]);
        assert!((c1 - Complex64::new(0.0, -PI)).norm() < 1e-13);
        assert!((cm1 - Complex64::new(0.0, PI)).norm() < 1e-13);
    }

    #[test]
    fn inverse_of_sine_coefficients() {
        let g = g1(32);
        let mut u = SpectralField::zeros(g, 1);
        u.set_coeff(0, &[1], Complex64::new(0.0, -PI));
        u.set_coeff(0, &[-1], Complex64::new(0.0, PI));
        let r = u.to_real().unwrap();
        for idx in 0..g.len() {
            let x = g.point(idx)[0];
            assert!((r.values()[idx] - x.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let g = g1(16);
        let mut u = SpectralField::zeros(g, 1);
        u.set_coeff(0, &[1], Complex64::new(1.0, 0.0));
        assert!(matches!(u.to_real(), Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = g1(8);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(RealField::new(g, 1, v).is_err());
    }

    #[test]
    fn sobolev_inner_single_mode() {
        let u = SpectralField::from_fn(g1(32), 1, |_, x| x[0].sin()).unwrap();
        assert!((u.sobolev_inner(&u, 0.0).unwrap() - PI).abs() < 1e-12);
        assert!((u.sobolev_inner(&u, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let v = SpectralField::from_fn(g1(32), 1, |_, x| (3.0 * x[0]).cos()).unwrap();
        assert!(u.sobolev_inner(&v, 1.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sobolev_inner_grid_mismatch() {
        let u = SpectralField::zeros(g1(8), 1);
        let v = SpectralField::zeros(g1(16), 1);
        assert!(u.sobolev_inner(&v, 0.0).is_err());
    }

    #[test]
    fn wk_inf_of_sine() {
        let u = SpectralField::from_fn(g1(32), 1, |_, x| x[0].sin()).unwrap();
        assert!((u.wk_inf_norm(0).unwrap() - 1.0).abs() < 1e-8);
        assert!((u.wk_inf_norm(1).unwrap() - 2.0).abs() < 1e-8);
        assert_eq!(SpectralField::zeros(g1(32), 1).wk_inf_norm(2).unwrap(), 0.0);
    }

    #[test]
    fn oversampled_evaluation_matches_function() {
        let g = g1(16);
        let u = SpectralField::from_fn(g, 1, |_, x| (x[0] + 0.3).sin() + 0.2 * (5.0 * x[0]).cos()).unwrap();
        let r = u.to_real_oversampled(32).unwrap();
        let fine = g.with_points(32).unwrap();
        for idx in 0..fine.len() {
            let x = fine.point(idx)[0];
            let want = (x + 0.3).sin() + 0.2 * (5.0 * x).cos();
            assert!((r.values()[idx] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(1, 2).len(), 3);
        assert_eq!(multi_indices(2, 1).len(), 3);
        assert_eq!(multi_indices(3, 2).len(), 10);
    }

    #[test]
    fn embedding_constant_bounds_sup() {
        let g = Grid::torus(2, 16).unwrap();
        let c = sobolev_embedding_constant(&g, 1.5);
        for seed in 0..5 {
            let u = random_field(g, 1, 7, 0.5, false, seed);
            let sup = u.wk_inf_norm(0).unwrap();
            assert!(sup <= c * u.sobolev_norm(1.5) * (1.0 + 1e-12));
        }
    }
}
