//! Pseudo-differential operators on the truncated frequency box.
//!
//! An [`Operator`] is either a Fourier multiplier (scalar or matrix symbol
//! tabulated once per grid), a dense Galerkin quantization of an
//! `x`-dependent symbol, or a linear combination of products of those.
//! Symbols are closures of the physical wavevector `κ = 2πk/L`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::SpectralField;
use crate::grid::{Grid, MAX_DIM};

/// `κ ↦` symbol entries (row-major, `rows·cols` values).
pub type SymbolFn = Arc<dyn Fn(&[f64]) -> Vec<Complex64> + Send + Sync>;
/// `(x, κ) ↦` symbol entries (row-major).
pub type XSymbolFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<Complex64> + Send + Sync>;

/// Largest `|α|₁`, `|β|₁` accepted by [`symbol_seminorm`].
pub const SEMINORM_CAP: usize = 3;
/// Growth factor between nested boxes below which a seminorm counts as bounded.
pub const BOUNDED_GROWTH: f64 = 1.2;
/// Upper bound on dense matrix entries.
pub const DENSE_ENTRY_LIMIT: usize = 1 << 24;

/// Largest grid admitted for dense quantization in dimension `d`.
pub fn dense_max_points(dim: usize) -> usize {
    match dim {
        1 => 64,
        2 => 32,
        _ => 8,
    }
}

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Mollifier profile: 1 on `|y| ≤ 1`, 0 on `|y| ≥ 2`, quintic in between.
pub fn mollifier_profile(r: f64) -> f64 {
    1.0 - smoothstep(r.abs() - 1.0)
}

/// Symbol shape: a scalar acting on every component, or an explicit matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Matrix { rows: usize, cols: usize },
}

impl Shape {
    fn entries(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Matrix { rows, cols } => rows * cols,
        }
    }

    fn output_components(&self, m_in: usize) -> Result<usize> {
        match *self {
            Shape::Scalar => Ok(m_in),
            Shape::Matrix { rows, cols } if cols == m_in => Ok(rows),
            Shape::Matrix { cols, .. } => {
                Err(Error::ShapeMismatch(format!("operator expects {cols} components, field has {m_in}")))
            }
        }
    }
}

/// Treatment of modes touching the Nyquist frequency, where `k` and `-k`
/// share a storage slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NyquistRule {
    /// Average the symbol over the sign flips of the Nyquist axes.
    Symmetrize,
    /// Set the symbol to zero.
    Zero,
}

/// Fourier multiplier tabulated on a grid.
#[derive(Clone)]
pub struct Multiplier {
    label: String,
    order: f64,
    shape: Shape,
    grid: Grid,
    symbol: SymbolFn,
    table: Arc<Vec<Complex64>>,
}

impl Multiplier {
    pub fn new(
        grid: Grid,
        label: impl Into<String>,
        order: f64,
        shape: Shape,
        symbol: SymbolFn,
        rule: NyquistRule,
    ) -> Result<Self> {
        let label = label.into();
        let e = shape.entries();
        let dim = grid.dim();
        let half = grid.n() / 2;
        let mut table = vec![Complex64::default(); grid.len() * e];
        for idx in 0..grid.len() {
            let kv = grid.wavevector(idx);
            let pos = grid.positions(idx);
            let nyq: Vec<usize> = (0..dim).filter(|&a| pos[a] == half).collect();
            let slot = &mut table[idx * e..(idx + 1) * e];
            if nyq.is_empty() {
                let v = symbol(&kv[..dim]);
                check_entries(&label, &v, e)?;
                slot.copy_from_slice(&v);
                continue;
            }
            if rule == NyquistRule::Zero {
                continue;
            }
            let copies = 1usize << nyq.len();
            for mask in 0..copies {
                let mut kk = kv;
                for (b, &a) in nyq.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        kk[a] = -kk[a];
                    }
                }
                let v = symbol(&kk[..dim]);
                check_entries(&label, &v, e)?;
                for (s, x) in slot.iter_mut().zip(&v) {
                    *s += x / copies as f64;
                }
            }
        }
        let m = Self { label, order, shape, grid, symbol, table: Arc::new(table) };
        m.check_reality()?;
        Ok(m)
    }

    /// Scalar multiplier from a real-valued or complex scalar symbol.
    pub fn scalar(
        grid: Grid,
        label: impl Into<String>,
        order: f64,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(grid, label, order, Shape::Scalar, Arc::new(move |k| vec![f(k)]), NyquistRule::Symmetrize)
    }

    fn check_reality(&self) -> Result<()> {
        let e = self.shape.entries();
        let scale = self.table.iter().fold(1.0f64, |m, c| m.max(c.norm()));
        for idx in 0..self.grid.len() {
            let cj = self.grid.conjugate_index(idx);
            for r in 0..e {
                let d = self.table[idx * e + r] - self.table[cj * e + r].conj();
                if d.norm() > 1e-12 * scale {
                    return Err(Error::Reality(self.label.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Tabulated symbol entries at a flat index.
    pub fn entries_at(&self, idx: usize) -> &[Complex64] {
        let e = self.shape.entries();
        &self.table[idx * e..(idx + 1) * e]
    }

    /// Evaluate the underlying symbol off-grid.
    pub fn symbol(&self, kappa: &[f64]) -> Vec<Complex64> {
        (self.symbol)(kappa)
    }

    pub fn symbol_fn(&self) -> SymbolFn {
        self.symbol.clone()
    }

    /// Largest entry modulus on the grid.
    pub fn max_abs(&self) -> f64 {
        self.table.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        if *u.grid() != self.grid {
            return Err(Error::ShapeMismatch(format!("{} built for another grid", self.label)));
        }
        let m_in = u.components();
        let m_out = self.shape.output_components(m_in)?;
        let len = self.grid.len();
        let mut out = SpectralField::zeros(self.grid, m_out);
        match self.shape {
            Shape::Scalar => {
                for j in 0..m_in {
                    let src = u.component(j);
                    for ((o, s), t) in out.component_mut(j).iter_mut().zip(src).zip(self.table.iter()) {
                        *o = s * t;
                    }
                }
            }
            Shape::Matrix { rows, cols } => {
                let e = rows * cols;
                let c = out.coeffs_mut();
                for r in 0..rows {
                    for col in 0..cols {
                        let src = u.component(col);
                        for idx in 0..len {
                            c[r * len + idx] += self.table[idx * e + r * cols + col] * src[idx];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Multiplier {
        let e = self.shape.entries();
        let (shape, table, symbol): (Shape, Vec<Complex64>, SymbolFn) = match self.shape {
            Shape::Scalar => {
                let f = self.symbol.clone();
                (
                    Shape::Scalar,
                    self.table.iter().map(|c| c.conj()).collect(),
                    Arc::new(move |k| f(k).into_iter().map(|c| c.conj()).collect()),
                )
            }
            Shape::Matrix { rows, cols } => {
                let mut t = vec![Complex64::default(); self.table.len()];
                for idx in 0..self.grid.len() {
                    for r in 0..rows {
                        for c in 0..cols {
                            t[idx * e + c * rows + r] = self.table[idx * e + r * cols + c].conj();
                        }
                    }
                }
                let f = self.symbol.clone();
                (
                    Shape::Matrix { rows: cols, cols: rows },
                    t,
                    Arc::new(move |k| {
                        let v = f(k);
                        let mut w = vec![Complex64::default(); v.len()];
                        for r in 0..rows {
                            for c in 0..cols {
                                w[c * rows + r] = v[r * cols + c].conj();
                            }
                        }
                        w
                    }),
                )
            }
        };
        Multiplier {
            label: format!("({})*", self.label),
            order: self.order,
            shape,
            grid: self.grid,
            symbol,
            table: Arc::new(table),
        }
    }

    /// `self ∘ inner` as a single multiplier, when the shapes chain.
    pub fn compose(&self, inner: &Multiplier) -> Option<Multiplier> {
        if self.grid != inner.grid {
            return None;
        }
        let (a, b) = (self.shape, inner.shape);
        let shape = match (a, b) {
            (Shape::Scalar, s) | (s, Shape::Scalar) => s,
            (Shape::Matrix { rows, cols }, Shape::Matrix { rows: r2, cols: c2 }) if cols == r2 => {
                Shape::Matrix { rows, cols: c2 }
            }
            _ => return None,
        };
        let (ea, eb, eo) = (a.entries(), b.entries(), shape.entries());
        let mut table = vec![Complex64::default(); self.grid.len() * eo];
        for idx in 0..self.grid.len() {
            let out = matmul(a, &self.table[idx * ea..(idx + 1) * ea], b, &inner.table[idx * eb..(idx + 1) * eb]);
            table[idx * eo..(idx + 1) * eo].copy_from_slice(&out);
        }
        let (f, g) = (self.symbol.clone(), inner.symbol.clone());
        let symbol: SymbolFn = Arc::new(move |k| matmul(a, &f(k), b, &g(k)));
        Some(Multiplier {
            label: format!("{}·{}", self.label, inner.label),
            order: self.order + inner.order,
            shape,
            grid: self.grid,
            symbol,
            table: Arc::new(table),
        })
    }

    /// `α·self + β·other` as a single multiplier, when shapes agree.
    pub fn combine(&self, alpha: f64, other: &Multiplier, beta: f64) -> Option<Multiplier> {
        if self.grid != other.grid {
            return None;
        }
        let shape = match (self.shape, other.shape) {
            (x, y) if x == y => x,
            (Shape::Scalar, s @ Shape::Matrix { rows, cols }) | (s @ Shape::Matrix { rows, cols }, Shape::Scalar)
                if rows == cols =>
            {
                s
            }
            _ => return None,
        };
        let eo = shape.entries();
        let (sa, sb) = (self.shape, other.shape);
        let expand = move |s: Shape, v: &[Complex64]| -> Vec<Complex64> {
            match (s, shape) {
                (Shape::Scalar, Shape::Matrix { rows, .. }) => {
                    let mut w = vec![Complex64::default(); rows * rows];
                    for r in 0..rows {
                        w[r * rows + r] = v[0];
                    }
                    w
                }
                _ => v.to_vec(),
            }
        };
        let (ea, eb) = (sa.entries(), sb.entries());
        let mut table = vec![Complex64::default(); self.grid.len() * eo];
        for idx in 0..self.grid.len() {
            let x = expand(sa, &self.table[idx * ea..(idx + 1) * ea]);
            let y = expand(sb, &other.table[idx * eb..(idx + 1) * eb]);
            for r in 0..eo {
                table[idx * eo + r] = x[r] * alpha + y[r] * beta;
            }
        }
        let (f, g) = (self.symbol.clone(), other.symbol.clone());
        let symbol: SymbolFn = Arc::new(move |k| {
            let x = expand(sa, &f(k));
            let y = expand(sb, &g(k));
            x.iter().zip(&y).map(|(p, q)| p * alpha + q * beta).collect()
        });
        Some(Multiplier {
            label: format!("{alpha}·{} + {beta}·{}", self.label, other.label),
            order: self.order.max(other.order),
            shape,
            grid: self.grid,
            symbol,
            table: Arc::new(table),
        })
    }
}

impl Multiplier {
    /// `exp(s·m(κ))` mode by mode (matrix exponential for matrix symbols).
    pub fn exponential(&self, s: f64) -> Result<Multiplier> {
        let shape = self.shape;
        let n = match shape {
            Shape::Scalar => 1,
            Shape::Matrix { rows, cols } if rows == cols => rows,
            Shape::Matrix { .. } => {
                return Err(Error::ShapeMismatch(format!("exponential of non-square {}", self.label)));
            }
        };
        let e = n * n;
        let mut table = Vec::with_capacity(self.table.len());
        for idx in 0..self.grid.len() {
            table.extend(expm(&self.table[idx * e..(idx + 1) * e], n, s));
        }
        if table.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("multiplier exponential"));
        }
        let f = self.symbol.clone();
        Ok(Multiplier {
            label: format!("exp({s}·{})", self.label),
            order: 0.0,
            shape,
            grid: self.grid,
            symbol: Arc::new(move |k| expm(&f(k), n, s)),
            table: Arc::new(table),
        })
    }
}

/// `exp(s·A)` for a small row-major complex matrix, by scaling and squaring.
fn expm(a: &[Complex64], n: usize, s: f64) -> Vec<Complex64> {
    if n == 1 {
        return vec![(a[0] * s).exp()];
    }
    let norm = a.iter().map(|c| c.norm()).sum::<f64>() * s.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = s / 2f64.powi(squarings);
    let shape = Shape::Matrix { rows: n, cols: n };
    let scaled: Vec<Complex64> = a.iter().map(|c| c * scale).collect();
    let mut result = vec![Complex64::default(); n * n];
    let mut term = vec![Complex64::default(); n * n];
    for i in 0..n {
        result[i * n + i] = Complex64::new(1.0, 0.0);
        term[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for j in 1..=18 {
        term = matmul(shape, &term, shape, &scaled).into_iter().map(|c| c / j as f64).collect();
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = matmul(shape, &result, shape, &result);
    }
    result
}

fn check_entries(label: &str, v: &[Complex64], e: usize) -> Result<()> {
    if v.len() != e {
        return Err(Error::ShapeMismatch(format!("symbol {label} returned {} entries, expected {e}", v.len())));
    }
    if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("symbol evaluation"));
    }
    Ok(())
}

fn matmul(a: Shape, x: &[Complex64], b: Shape, y: &[Complex64]) -> Vec<Complex64> {
    match (a, b) {
        (Shape::Scalar, _) => y.iter().map(|v| v * x[0]).collect(),
        (_, Shape::Scalar) => x.iter().map(|v| v * y[0]).collect(),
        (Shape::Matrix { rows, cols }, Shape::Matrix { cols: c2, .. }) => {
            let mut out = vec![Complex64::default(); rows * c2];
            for r in 0..rows {
                for c in 0..c2 {
                    let mut s = Complex64::default();
                    for t in 0..cols {
                        s += x[r * cols + t] * y[t * c2 + c];
                    }
                    out[r * c2 + c] = s;
                }
            }
            out
        }
    }
}

/// `x`-dependent symbol `℘(x, κ)`.
#[derive(Clone)]
pub struct XSymbol {
    pub label: String,
    pub order: f64,
    pub rows: usize,
    pub cols: usize,
    f: XSymbolFn,
}

impl XSymbol {
    pub fn new(label: impl Into<String>, order: f64, rows: usize, cols: usize, f: XSymbolFn) -> Self {
        Self { label: label.into(), order, rows, cols, f }
    }

    pub fn scalar(
        label: impl Into<String>,
        order: f64,
        f: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, order, 1, 1, Arc::new(move |x, k| vec![f(x, k)]))
    }

    pub fn eval(&self, x: &[f64], kappa: &[f64]) -> Vec<Complex64> {
        (self.f)(x, kappa)
    }
}

impl From<&Multiplier> for XSymbol {
    fn from(m: &Multiplier) -> Self {
        let (rows, cols) = match m.shape {
            Shape::Scalar => (1, 1),
            Shape::Matrix { rows, cols } => (rows, cols),
        };
        let f = m.symbol.clone();
        XSymbol::new(m.label.clone(), m.order, rows, cols, Arc::new(move |_x, k| f(k)))
    }
}

/// Dense Galerkin matrix on the Nyquist-free modes.
#[derive(Clone)]
pub struct DenseOperator {
    label: String,
    order: f64,
    grid: Grid,
    m_out: usize,
    m_in: usize,
    matrix: Arc<Vec<Complex64>>,
}

impl DenseOperator {
    fn cols(&self) -> usize {
        self.m_in * self.grid.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components_in(&self) -> usize {
        self.m_in
    }

    pub fn components_out(&self) -> usize {
        self.m_out
    }

    /// Matrix entry coupling input `(c, k)` to output `(r, k')`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.cols() + col]
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        if *u.grid() != self.grid {
            return Err(Error::ShapeMismatch(format!("{} built for another grid", self.label)));
        }
        if self.m_in == 1 && self.m_out == 1 && u.components() > 1 {
            // scalar operator acting diagonally on every component
            let parts =
                (0..u.components()).map(|j| self.apply(&u.slice_components(j, 1))).collect::<Result<Vec<_>>>()?;
            return SpectralField::stack(&parts);
        }
        if u.components() != self.m_in {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} components, field has {}",
                self.label,
                self.m_in,
                u.components()
            )));
        }
        let cols = self.cols();
        let src = u.coeffs();
        let out: Vec<Complex64> = self
            .matrix
            .par_chunks(cols)
            .map(|row| row.iter().zip(src).fold(Complex64::default(), |s, (a, b)| s + a * b))
            .collect();
        Ok(SpectralField::from_raw(self.grid, self.m_out, out))
    }

    pub fn adjoint(&self) -> DenseOperator {
        let (rows, cols) = (self.m_out * self.grid.len(), self.cols());
        let mut t = vec![Complex64::default(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = self.matrix[r * cols + c].conj();
            }
        }
        DenseOperator {
            label: format!("({})*", self.label),
            order: self.order,
            grid: self.grid,
            m_out: self.m_in,
            m_in: self.m_out,
            matrix: Arc::new(t),
        }
    }
}

/// Linear combination `Σ c_i · (A_{i,1} ∘ A_{i,2} ∘ …)`.
#[derive(Clone)]
pub struct Composite {
    terms: Vec<(f64, Vec<Operator>)>,
}

/// A linear operator on spectral fields.
#[derive(Clone)]
pub enum Operator {
    Multiplier(Multiplier),
    Dense(DenseOperator),
    Composite(Composite),
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("label", &self.label)
            .field("order", &self.order)
            .field("shape", &self.shape)
            .finish()
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}, order {})", self.label(), self.order())
    }
}

impl From<Multiplier> for Operator {
    fn from(m: Multiplier) -> Self {
        Operator::Multiplier(m)
    }
}

impl From<DenseOperator> for Operator {
    fn from(d: DenseOperator) -> Self {
        Operator::Dense(d)
    }
}

impl Operator {
    pub fn label(&self) -> String {
        match self {
            Operator::Multiplier(m) => m.label.clone(),
            Operator::Dense(d) => d.label.clone(),
            Operator::Composite(c) => c
                .terms
                .iter()
                .map(|(a, ops)| {
                    let p: Vec<String> = ops.iter().map(|o| o.label()).collect();
                    format!("{a}·{}", p.join("∘"))
                })
                .collect::<Vec<_>>()
                .join(" + "),
        }
    }

    /// Declared order; for combinations the largest order of a product term.
    pub fn order(&self) -> f64 {
        match self {
            Operator::Multiplier(m) => m.order,
            Operator::Dense(d) => d.order,
            Operator::Composite(c) => c
                .terms
                .iter()
                .map(|(_, ops)| ops.iter().map(|o| o.order()).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn grid(&self) -> Option<Grid> {
        match self {
            Operator::Multiplier(m) => Some(m.grid),
            Operator::Dense(d) => Some(d.grid),
            Operator::Composite(c) => c.terms.iter().flat_map(|(_, o)| o.iter()).find_map(|o| o.grid()),
        }
    }

    pub fn as_multiplier(&self) -> Option<&Multiplier> {
        match self {
            Operator::Multiplier(m) => Some(m),
            _ => None,
        }
    }

    /// True for diagonal (scalar) Fourier multipliers.
    pub fn is_scalar_multiplier(&self) -> bool {
        matches!(self, Operator::Multiplier(m) if m.shape == Shape::Scalar)
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        match self {
            Operator::Multiplier(m) => m.apply(u),
            Operator::Dense(d) => d.apply(u),
            Operator::Composite(c) => {
                let mut acc: Option<SpectralField> = None;
                for (a, ops) in &c.terms {
                    let mut v = u.clone();
                    for op in ops.iter().rev() {
                        v = op.apply(&v)?;
                    }
                    match acc.as_mut() {
                        None => acc = Some(v.scaled(*a)),
                        Some(s) => {
                            s.check_same_shape(&v)?;
                            s.axpy(*a, &v)
                        }
                    }
                }
                Ok(acc.unwrap_or_else(|| SpectralField::zeros(*u.grid(), u.components())))
            }
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Multiplier(m) => Operator::Multiplier(m.adjoint()),
            Operator::Dense(d) => Operator::Dense(d.adjoint()),
            Operator::Composite(c) => Operator::Composite(Composite {
                terms: c.terms.iter().map(|(a, ops)| (*a, ops.iter().rev().map(|o| o.adjoint()).collect())).collect(),
            }),
        }
    }

    /// `self ∘ inner`; multipliers are fused.
    pub fn compose(&self, inner: &Operator) -> Operator {
        if let (Operator::Multiplier(a), Operator::Multiplier(b)) = (self, inner) {
            if let Some(m) = a.compose(b) {
                return Operator::Multiplier(m);
            }
        }
        Operator::Composite(Composite { terms: vec![(1.0, vec![self.clone(), inner.clone()])] })
    }

    /// `self ∘ self`.
    pub fn squared(&self) -> Operator {
        self.compose(self)
    }

    /// `alpha · self`.
    pub fn scaled(&self, alpha: f64) -> Operator {
        match self {
            Operator::Multiplier(m) => {
                let z = m.combine(alpha, m, 0.0).expect("same shape");
                Operator::Multiplier(Multiplier { label: format!("{alpha}·{}", m.label), ..z })
            }
            Operator::Composite(c) => Operator::Composite(Composite {
                terms: c.terms.iter().map(|(a, ops)| (a * alpha, ops.clone())).collect(),
            }),
            Operator::Dense(_) => Operator::Composite(Composite { terms: vec![(alpha, vec![self.clone()])] }),
        }
    }

    /// `alpha·self + beta·other`; multipliers are fused.
    pub fn combine(&self, alpha: f64, other: &Operator, beta: f64) -> Operator {
        if let (Operator::Multiplier(a), Operator::Multiplier(b)) = (self, other) {
            if let Some(m) = a.combine(alpha, b, beta) {
                return Operator::Multiplier(m);
            }
        }
        let mut terms = Vec::new();
        for (op, w) in [(self, alpha), (other, beta)] {
            match op {
                Operator::Composite(c) => terms.extend(c.terms.iter().map(|(a, o)| (a * w, o.clone()))),
                _ => terms.push((w, vec![op.clone()])),
            }
        }
        Operator::Composite(Composite { terms })
    }

    /// Sum of a list of operators; `None` for an empty list.
    pub fn sum(ops: &[Operator]) -> Option<Operator> {
        let mut it = ops.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, o| acc.combine(1.0, o, 1.0)))
    }

    /// Dense matrix of the operator restricted to Nyquist-free modes, built
    /// by applying it to unit coefficient vectors.
    pub fn to_dense(&self, grid: &Grid, m_in: usize) -> Result<DenseOperator> {
        guard_dense(grid, m_in)?;
        let len = grid.len();
        let cols = m_in * len;
        let mut columns: Vec<Option<Vec<Complex64>>> = vec![None; cols];
        let mut m_out = None;
        for (col, slot) in columns.iter_mut().enumerate() {
            let idx = col % len;
            if grid.touches_nyquist(idx) {
                continue;
            }
            let mut e = SpectralField::zeros(*grid, m_in);
            e.coeffs_mut()[col] = Complex64::new(1.0, 0.0);
            let mut v = self.apply(&e)?;
            v.drop_nyquist();
            m_out = Some(v.components());
            *slot = Some(v.into_coeffs());
        }
        let m_out = m_out.unwrap_or(m_in);
        let rows = m_out * len;
        let mut matrix = vec![Complex64::default(); rows * cols];
        for (c, col) in columns.iter().enumerate() {
            if let Some(col) = col {
                for r in 0..rows {
                    matrix[r * cols + c] = col[r];
                }
            }
        }
        Ok(DenseOperator {
            label: self.label(),
            order: self.order(),
            grid: *grid,
            m_out,
            m_in,
            matrix: Arc::new(matrix),
        })
    }
}

/// `ABf − BAf`.
pub fn commutator_apply(a: &Operator, b: &Operator, f: &SpectralField) -> Result<SpectralField> {
    let ab = a.apply(&b.apply(f)?)?;
    let ba = b.apply(&a.apply(f)?)?;
    ab.check_same_shape(&ba)?;
    Ok(&ab - &ba)
}

fn guard_dense(grid: &Grid, m: usize) -> Result<()> {
    let limit = dense_max_points(grid.dim());
    if grid.n() > limit {
        return Err(Error::MemoryGuard { requested: grid.len(), limit: limit.pow(grid.dim() as u32) });
    }
    let entries = (m * grid.len()).pow(2);
    if entries > DENSE_ENTRY_LIMIT {
        return Err(Error::MemoryGuard { requested: entries, limit: DENSE_ENTRY_LIMIT });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// named multipliers

pub fn identity(grid: &Grid) -> Operator {
    Multiplier::scalar(*grid, "I", 0.0, |_| Complex64::new(1.0, 0.0)).expect("real symbol").into()
}

pub fn zero(grid: &Grid) -> Operator {
    Multiplier::scalar(*grid, "0", 0.0, |_| Complex64::default()).expect("real symbol").into()
}

/// Bessel potential `D^s`, symbol `(1+|κ|²)^{s/2}`.
pub fn bessel_potential(grid: &Grid, s: f64) -> Operator {
    Multiplier::scalar(*grid, format!("D^{s}"), s, move |k| Complex64::new((1.0 + norm2(k)).powf(s / 2.0), 0.0))
        .expect("real symbol")
        .into()
}

/// `Λ^s = (−Δ)^{s/2}`, symbol `|κ|^s`, zero on the mean mode for every `s`.
pub fn fractional_laplacian(grid: &Grid, s: f64) -> Operator {
    Multiplier::scalar(*grid, format!("Λ^{s}"), s, move |k| {
        let r2 = norm2(k);
        if r2 == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(r2.powf(s / 2.0), 0.0)
        }
    })
    .expect("real symbol")
    .into()
}

/// `∂_axis`, symbol `iκ_axis`.
pub fn derivative(grid: &Grid, axis: usize) -> Result<Operator> {
    if axis >= grid.dim() {
        return Err(Error::Dimension(format!("axis {axis} on a {}-d grid", grid.dim())));
    }
    Ok(Multiplier::scalar(*grid, format!("∂{}", axis + 1), 1.0, move |k| Complex64::new(0.0, k[axis]))?.into())
}

/// `Π₀`: removes the mean.
pub fn zero_average_projection(grid: &Grid) -> Operator {
    Multiplier::scalar(*grid, "Π0", 0.0, |k| Complex64::new(if norm2(k) == 0.0 { 0.0 } else { 1.0 }, 0.0))
        .expect("real symbol")
        .into()
}

/// Leray projection `δ_ij − κ_iκ_j/|κ|²` on `d`-component fields; identity
/// at `k = 0` unless `zero_average`, then composed with `Π₀`. Zero on
/// Nyquist-touching modes so that it stays an orthogonal projection.
pub fn leray_projection(grid: &Grid, components: usize, zero_average: bool) -> Result<Operator> {
    let d = grid.dim();
    if d < 2 || components != d {
        return Err(Error::Dimension(format!("Leray projection needs m = d ≥ 2, got m = {components}, d = {d}")));
    }
    let symbol: SymbolFn = Arc::new(move |k| {
        let r2 = norm2(k);
        let mut v = vec![Complex64::default(); d * d];
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                v[i * d + j] = Complex64::new(
                    if r2 == 0.0 {
                        if zero_average {
                            0.0
                        } else {
                            delta
                        }
                    } else {
                        delta - k[i] * k[j] / r2
                    },
                    0.0,
                );
            }
        }
        v
    });
    let label = if zero_average { "Π_d∘Π0" } else { "Π_d" };
    Ok(Multiplier::new(*grid, label, 0.0, Shape::Matrix { rows: d, cols: d }, symbol, NyquistRule::Zero)?.into())
}

/// Block-diagonal Leray projection acting on `blocks` stacked `d`-vectors.
pub fn block_leray_projection(grid: &Grid, blocks: usize, zero_average: bool) -> Result<Operator> {
    let d = grid.dim();
    let single = leray_projection(grid, d, zero_average)?;
    let single = single.as_multiplier().expect("multiplier").symbol_fn();
    let m = d * blocks;
    let symbol: SymbolFn = Arc::new(move |k| {
        let p = single(k);
        let mut v = vec![Complex64::default(); m * m];
        for b in 0..blocks {
            for i in 0..d {
                for j in 0..d {
                    v[(b * d + i) * m + b * d + j] = p[i * d + j];
                }
            }
        }
        v
    });
    let label = if zero_average { "diag(Π_d∘Π0)" } else { "diag(Π_d)" };
    Ok(Multiplier::new(*grid, label, 0.0, Shape::Matrix { rows: m, cols: m }, symbol, NyquistRule::Zero)?.into())
}

/// `ℛ⊥ = (−∂₂Λ⁻¹, ∂₁Λ⁻¹)`: scalar to 2-vector, zero at `k = 0`.
pub fn riesz_perp(grid: &Grid) -> Result<Operator> {
    if grid.dim() != 2 {
        return Err(Error::Dimension(format!("perpendicular Riesz transform needs d = 2, got {}", grid.dim())));
    }
    let symbol: SymbolFn = Arc::new(|k| {
        let r = norm2(k).sqrt();
        if r == 0.0 {
            return vec![Complex64::default(); 2];
        }
        vec![Complex64::new(0.0, -k[1] / r), Complex64::new(0.0, k[0] / r)]
    });
    Ok(Multiplier::new(*grid, "R⊥", 0.0, Shape::Matrix { rows: 2, cols: 1 }, symbol, NyquistRule::Symmetrize)?.into())
}

/// Friedrichs mollifier `J_n`, symbol `φ(κ/n)`.
pub fn mollifier(grid: &Grid, n: usize) -> Result<Operator> {
    if n == 0 {
        return Err(Error::InvalidParameter("mollifier level must be ≥ 1".into()));
    }
    let nf = n as f64;
    Ok(Multiplier::scalar(*grid, format!("J_{n}"), 0.0, move |k| {
        Complex64::new(mollifier_profile(norm2(k).sqrt() / nf), 0.0)
    })?
    .into())
}

/// `sup_k |φ(κ/l) − φ(κ/n)| (1+|κ|²)^{(s₂−s₁)/2} · (l∧n)^{s₁−s₂}`: the
/// sharp grid constant in `‖(J_l − J_n)u‖_{H^{s₂}} ≤ C (l∧n)^{−(s₁−s₂)} ‖u‖_{H^{s₁}}`.
pub fn mollifier_difference_constant(grid: &Grid, n: usize, l: usize, s1: f64, s2: f64) -> f64 {
    let m = n.min(l) as f64;
    let mut sup = 0.0f64;
    for idx in 0..grid.len() {
        let r = grid.wavevector_norm2(idx).sqrt();
        let d = (mollifier_profile(r / l as f64) - mollifier_profile(r / n as f64)).abs();
        sup = sup.max(d * (1.0 + r * r).powf((s2 - s1) / 2.0));
    }
    sup * m.powf(s1 - s2)
}

fn norm2(k: &[f64]) -> f64 {
    k.iter().map(|v| v * v).sum()
}

// ---------------------------------------------------------------------------
// x-dependent quantization

/// Dense Galerkin quantization `[OP(℘)f](x) = L^{-d} Σ_k ℘(x,κ) f̂(k) e^{ik·x}`
/// restricted to Nyquist-free modes; output frequencies outside the box are
/// discarded rather than aliased.
pub fn quantize(sym: &XSymbol, grid: &Grid) -> Result<Operator> {
    guard_dense(grid, sym.cols.max(sym.rows))?;
    let dim = grid.dim();
    let len = grid.len();
    let half = grid.nyquist();
    let (rows, cols) = (sym.rows, sym.cols);
    let e = rows * cols;
    check_x_reality(sym, grid)?;
    let w = grid.cell_volume() / grid.volume();
    let mcols = cols * len;
    let mut matrix = vec![Complex64::default(); rows * len * mcols];
    let points: Vec<[f64; MAX_DIM]> = (0..len).map(|i| grid.point(i)).collect();
    for kin in 0..len {
        if grid.touches_nyquist(kin) {
            continue;
        }
        let kv = grid.wavevector(kin);
        let k = grid.frequency(kin);
        // per-entry samples over x, transformed to ℘̂(m, k)
        let mut hat = vec![vec![Complex64::default(); len]; e];
        for (xi, x) in points.iter().enumerate() {
            let v = sym.eval(&x[..dim], &kv[..dim]);
            check_entries(&sym.label, &v, e)?;
            for r in 0..e {
                hat[r][xi] = v[r];
            }
        }
        for h in &mut hat {
            fft::transform(h, dim, grid.n(), FftDirection::Forward);
        }
        for kout in 0..len {
            if grid.touches_nyquist(kout) {
                continue;
            }
            let ko = grid.frequency(kout);
            let mut m = [0i64; MAX_DIM];
            let mut inside = true;
            for a in 0..dim {
                m[a] = ko[a] - k[a];
                inside &= m[a].abs() < half;
            }
            if !inside {
                continue;
            }
            let midx = grid.index_of(&m);
            for r in 0..rows {
                for c in 0..cols {
                    matrix[(r * len + kout) * mcols + c * len + kin] = hat[r * cols + c][midx] * w;
                }
            }
        }
    }
    Ok(Operator::Dense(DenseOperator {
        label: sym.label.clone(),
        order: sym.order,
        grid: *grid,
        m_out: rows,
        m_in: cols,
        matrix: Arc::new(matrix),
    }))
}

fn check_x_reality(sym: &XSymbol, grid: &Grid) -> Result<()> {
    let dim = grid.dim();
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for kin in 0..grid.len() {
        if grid.touches_nyquist(kin) {
            continue;
        }
        let kv = grid.wavevector(kin);
        let neg: Vec<f64> = kv[..dim].iter().map(|v| -v).collect();
        for xi in 0..grid.len() {
            let x = grid.point(xi);
            let a = sym.eval(&x[..dim], &kv[..dim]);
            let b = sym.eval(&x[..dim], &neg);
            for (p, q) in a.iter().zip(&b) {
                worst = worst.max((p - q.conj()).norm());
                scale = scale.max(p.norm());
            }
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::Reality(sym.label.clone()));
    }
    Ok(())
}

/// Multiplication by a real function `g(x)`.
pub fn multiplication(grid: &Grid, label: &str, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Operator> {
    let sym = XSymbol::scalar(label, 0.0, move |x, _| Complex64::new(g(x), 0.0));
    quantize(&sym, grid)
}

/// Transport operator `g(x)∂_axis`.
pub fn transport(
    grid: &Grid,
    axis: usize,
    label: &str,
    g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
) -> Result<Operator> {
    if axis >= grid.dim() {
        return Err(Error::Dimension(format!("axis {axis} on a {}-d grid", grid.dim())));
    }
    let sym = XSymbol::scalar(label, 1.0, move |x, k| Complex64::new(0.0, g(x) * k[axis]));
    quantize(&sym, grid)
}

// ---------------------------------------------------------------------------
// seminorms

/// `sup_{x, |k_i| ≤ radius} |Δ^α_k ∂^β_x ℘(x,κ)| / (1+|κ|)^{s−|α|}` with
/// forward differences in the integer frequency and spectral `x`-derivatives.
pub fn symbol_seminorm_on_box(
    sym: &XSymbol,
    grid: &Grid,
    beta: &[usize],
    alpha: &[usize],
    s: f64,
    radius: i64,
) -> Result<f64> {
    let dim = grid.dim();
    let na: usize = alpha.iter().sum();
    let nb: usize = beta.iter().sum();
    if na > SEMINORM_CAP || nb > SEMINORM_CAP {
        return Err(Error::SeminormCap { cap: SEMINORM_CAP });
    }
    if alpha.len() > dim || beta.len() > dim {
        return Err(Error::Dimension("multi-index longer than the dimension".into()));
    }
    let unit = grid.wavenumber_unit();
    let e = sym.rows * sym.cols;
    let len = grid.len();
    let points: Vec<[f64; MAX_DIM]> = (0..len).map(|i| grid.point(i)).collect();
    // difference stencil: shifts γ ≤ α with weights (−1)^{|α−γ|} C(α,γ)
    let mut stencil: Vec<([i64; MAX_DIM], f64)> = vec![([0; MAX_DIM], 1.0)];
    for (a, &order) in alpha.iter().enumerate() {
        let mut next = Vec::new();
        for (shift, w) in &stencil {
            for g in 0..=order {
                let mut sh = *shift;
                sh[a] += g as i64;
                let sign = if (order - g) % 2 == 0 { 1.0 } else { -1.0 };
                next.push((sh, w * sign * binomial(order, g)));
            }
        }
        stencil = next;
    }
    let box_side = (2 * radius + 1) as usize;
    let total = box_side.pow(dim as u32);
    let beta_full: Vec<usize> = (0..dim).map(|a| beta.get(a).copied().unwrap_or(0)).collect();
    let deriv: Option<Vec<Complex64>> = if nb == 0 {
        None
    } else {
        Some(
            (0..len)
                .map(|idx| {
                    let kv = grid.wavevector(idx);
                    let pos = grid.positions(idx);
                    let mut v = Complex64::new(1.0, 0.0);
                    for a in 0..dim {
                        if beta_full[a] == 0 {
                            continue;
                        }
                        if pos[a] == grid.n() / 2 && beta_full[a] % 2 == 1 {
                            return Complex64::default();
                        }
                        v *= Complex64::new(0.0, kv[a]).powu(beta_full[a] as u32);
                    }
                    v / len as f64
                })
                .collect(),
        )
    };
    let sup = (0..total)
        .into_par_iter()
        .map(|flat| -> f64 {
            let mut k = [0i64; MAX_DIM];
            let mut rest = flat;
            for a in (0..dim).rev() {
                k[a] = (rest % box_side) as i64 - radius;
                rest /= box_side;
            }
            let kabs = k[..dim].iter().map(|v| (*v as f64 * unit).powi(2)).sum::<f64>().sqrt();
            let denom = (1.0 + kabs).powf(s - na as f64);
            // samples of Δ^α ℘(x, ·) at this k over all x
            let mut samples = vec![vec![Complex64::default(); len]; e];
            for (shift, w) in &stencil {
                let kk: Vec<f64> = (0..dim).map(|a| (k[a] + shift[a]) as f64 * unit).collect();
                for (xi, x) in points.iter().enumerate() {
                    let v = sym.eval(&x[..dim], &kk);
                    for r in 0..e {
                        samples[r][xi] += v[r] * *w;
                    }
                }
            }
            let mut best = 0.0f64;
            for mut smp in samples {
                if let Some(dv) = &deriv {
                    fft::transform(&mut smp, dim, grid.n(), FftDirection::Forward);
                    for (c, d) in smp.iter_mut().zip(dv) {
                        *c *= d;
                    }
                    fft::transform(&mut smp, dim, grid.n(), FftDirection::Inverse);
                }
                for c in smp {
                    best = best.max(c.norm());
                }
            }
            best / denom
        })
        .reduce(|| 0.0, f64::max);
    if !sup.is_finite() {
        return Err(Error::NonFinite("symbol seminorm"));
    }
    Ok(sup)
}

/// Seminorm on the full Nyquist-free box `|k_i| ≤ N/2 − 1`.
pub fn symbol_seminorm(sym: &XSymbol, grid: &Grid, beta: &[usize], alpha: &[usize], s: f64) -> Result<f64> {
    symbol_seminorm_on_box(sym, grid, beta, alpha, s, grid.nyquist() - 1)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Seminorm evaluated on two nested boxes with radius ratio 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Boundedness {
    pub inner: f64,
    pub outer: f64,
    pub growth: f64,
    pub bounded: bool,
}

pub fn check_bounded(sym: &XSymbol, grid: &Grid, beta: &[usize], alpha: &[usize], s: f64) -> Result<Boundedness> {
    let outer_r = grid.nyquist() - 1;
    let inner_r = (outer_r / 2).max(1);
    let inner = symbol_seminorm_on_box(sym, grid, beta, alpha, s, inner_r)?;
    let outer = symbol_seminorm_on_box(sym, grid, beta, alpha, s, outer_r)?;
    let growth = if inner == 0.0 {
        if outer == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        outer / inner
    };
    Ok(Boundedness { inner, outer, growth, bounded: growth < BOUNDED_GROWTH })
}

// ---------------------------------------------------------------------------
// operator norms

/// Largest singular value of `D^{t} A D^{-q}` on Nyquist-free modes, i.e.
/// the `H^q → H^t` norm of `A`, by power iteration on the dense matrix.
pub fn sobolev_operator_norm(a: &DenseOperator, q: f64, t: f64) -> f64 {
    sobolev_operator_norm_on_band(a, q, t, a.grid.nyquist() - 1)
}

/// As [`sobolev_operator_norm`] with inputs restricted to `max|k_i| ≤ band`.
pub fn sobolev_operator_norm_on_band(a: &DenseOperator, q: f64, t: f64, band: i64) -> f64 {
    let g = a.grid;
    let dim = g.dim();
    let outside = |c: usize| g.touches_nyquist(c) || g.frequency(c)[..dim].iter().any(|k| k.abs() > band);
    let len = g.len();
    let weight = |idx: usize, s: f64| (1.0 + g.wavevector_norm2(idx)).powf(s / 2.0);
    let cols = a.cols();
    let rows = a.m_out * len;
    let mut b = vec![Complex64::default(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if !outside(c % len) {
                b[r * cols + c] = a.matrix[r * cols + c] * weight(r % len, t) / weight(c % len, q);
            }
        }
    }
    let mut v: Vec<Complex64> = (0..cols)
        .map(
            |c| if outside(c % len) { Complex64::default() } else { Complex64::new(1.0 + 0.1 * (c as f64).sin(), 0.0) },
        )
        .collect();
    let mut sigma = 0.0;
    for _ in 0..500 {
        let bv: Vec<Complex64> = (0..rows)
            .map(|r| b[r * cols..(r + 1) * cols].iter().zip(&v).fold(Complex64::default(), |s, (x, y)| s + x * y))
            .collect();
        let mut w = vec![Complex64::default(); cols];
        for r in 0..rows {
            for c in 0..cols {
                w[c] += b[r * cols + c].conj() * bv[r];
            }
        }
        let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (next - sigma).abs() <= 1e-12 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma
}

/// Order-reduction smoke test for `[Q₁, Q₂]` between two grid sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderReduction {
    pub points: Vec<usize>,
    pub norms: Vec<f64>,
    pub growth: f64,
    pub bounded: bool,
}

/// `‖[Q₁,Q₂]‖_{H^q → H^{q−r₁−r₂+1}}` at `n` and `2n` points (d = 1): the
/// commutator gains one order when the norm does not grow. Inputs are
/// restricted to the inner half `|k| ≤ n/4` of each box, so that truncation
/// at the box edge (which breaks the cancellation for trigonometric `x`-
/// dependence reaching past it) does not enter.
pub fn commutator_order_check(q1: &XSymbol, q2: &XSymbol, q: f64, n: usize) -> Result<OrderReduction> {
    let target = q - q1.order - q2.order + 1.0;
    let mut norms = Vec::new();
    let points = vec![n, 2 * n];
    for &pts in &points {
        let grid = Grid::torus(1, pts)?;
        let a = quantize(q1, &grid)?;
        let b = quantize(q2, &grid)?;
        let c = a.compose(&b).combine(1.0, &b.compose(&a), -1.0).to_dense(&grid, 1)?;
        norms.push(sobolev_operator_norm_on_band(&c, q, target, (pts / 4) as i64));
    }
    let growth = if norms[0] == 0.0 { 1.0 } else { norms[1] / norms[0] };
    Ok(OrderReduction { points, norms, growth, bounded: growth < BOUNDED_GROWTH })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_field;

    fn g1(n: usize) -> Grid {
        Grid::torus(1, n).unwrap()
    }

    #[test]
    fn bessel_minus_two_halves_mode_one() {
        let g = g1(16);
        let u = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
        let v = bessel_potential(&g, -2.0).apply(&u).unwrap();
        assert!((&v - &u.scaled(0.5)).max_abs_coeff() < 1e-13);
    }

    #[test]
    fn smoothstep_profile() {
        assert_eq!(mollifier_profile(0.7), 1.0);
        assert_eq!(mollifier_profile(2.0), 0.0);
        assert_eq!(mollifier_profile(4.0), 0.0);
        assert!((mollifier_profile(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mollifier_kills_mode_four_at_level_one() {
        let g = g1(16);
        let u = SpectralField::from_fn(g, 1, |_, x| (4.0 * x[0]).sin()).unwrap();
        let v = mollifier(&g, 1).unwrap().apply(&u).unwrap();
        assert!(v.max_abs_coeff() < 1e-13);
        assert!(mollifier(&g, 0).is_err());
    }

    #[test]
    fn riesz_perp_mode_one() {
        let g = Grid::torus(2, 8).unwrap();
        let u = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
        let v = riesz_perp(&g).unwrap().apply(&u).unwrap();
        let want = SpectralField::from_fn(g, 2, |j, x| if j == 1 { x[0].cos() } else { 0.0 }).unwrap();
        assert!((&v - &want).max_abs_coeff() < 1e-12);
        assert!(riesz_perp(&g1(8)).is_err());
    }

    #[test]
    fn leray_requires_matching_components() {
        let g = Grid::torus(2, 8).unwrap();
        assert!(leray_projection(&g, 3, false).is_err());
        assert!(leray_projection(&g1(8), 1, false).is_err());
    }

    #[test]
    fn quantized_identity_and_transport() {
        let g = g1(16);
        let id = quantize(&XSymbol::scalar("1", 0.0, |_, _| Complex64::new(1.0, 0.0)), &g).unwrap();
        let u = random_field(g, 1, 7, 1.0, false, 3);
        assert!((&id.apply(&u).unwrap() - &u).max_abs_coeff() < 1e-12);

        let t = transport(&g, 0, "g∂", |x| 1.0 + 0.5 * x[0].cos()).unwrap();
        let a = t.apply(&u).unwrap();
        // oracle: exact Fourier convolution of g = 1 + ½cos with ∂u, truncated
        let du = u.derivative(0);
        let mut want = du.clone();
        for k in -7i64..=7 {
            let mut c = du.coeff(0, &[k]);
            for s in [-1i64, 1] {
                let src = k - s;
                if src.abs() <= 7 {
                    c += du.coeff(0, &[src]) * 0.25;
                }
            }
            want.set_coeff(0, &[k], c);
        }
        assert!((&a - &want).max_abs_coeff() < 1e-9);
    }

    #[test]
    fn reality_violation_detected() {
        let g = g1(8);
        let bad = Multiplier::scalar(g, "i", 0.0, |_| Complex64::new(0.0, 1.0));
        assert!(matches!(bad, Err(Error::Reality(_))));
        let sym = XSymbol::scalar("i", 0.0, |_, _| Complex64::new(0.0, 1.0));
        assert!(matches!(quantize(&sym, &g), Err(Error::Reality(_))));
    }

    #[test]
    fn dense_guard() {
        let g = g1(128);
        let sym = XSymbol::scalar("1", 0.0, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(quantize(&sym, &g), Err(Error::MemoryGuard { .. })));
    }

    #[test]
    fn seminorm_cap_and_zero() {
        let g = g1(16);
        let z = XSymbol::scalar("0", 0.0, |_, _| Complex64::default());
        assert_eq!(symbol_seminorm(&z, &g, &[0], &[0], 0.0).unwrap(), 0.0);
        assert!(matches!(symbol_seminorm(&z, &g, &[0], &[4], 0.0), Err(Error::SeminormCap { .. })));
    }

    #[test]
    fn seminorm_growth_detection() {
        let g = g1(64);
        let s = 1.0;
        let bessel = bessel_potential(&g, s);
        let b = check_bounded(&XSymbol::from(bessel.as_multiplier().unwrap()), &g, &[0], &[0], s).unwrap();
        assert!(b.bounded && b.outer <= 1.0 + 1e-12);
        let over = XSymbol::scalar("|k|^2", s, move |_, k| Complex64::new(k[0].abs().powf(s + 1.0), 0.0));
        let b = check_bounded(&over, &g, &[0], &[0], s).unwrap();
        assert!(!b.bounded, "growth {}", b.growth);
    }

    #[test]
    fn x_derivative_of_symbol() {
        // ℘ = sin(x)·ik, ∂_x ℘ = cos(x)·ik; seminorm with s = 1 is sup |k|/(1+|k|)
        let g = g1(32);
        let sym = XSymbol::scalar("sin·ik", 1.0, |x, k| Complex64::new(0.0, x[0].sin() * k[0]));
        let v = symbol_seminorm(&sym, &g, &[1], &[0], 1.0).unwrap();
        assert!((v - 15.0 / 16.0).abs() < 1e-9);
    }
}
