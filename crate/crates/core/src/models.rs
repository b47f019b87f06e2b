//! Drift triples `(ℰ, b̃, g̃)` and projections of the concrete equations,
//! evaluated pseudospectrally with dealiased products.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::dealias::Dealiaser;
use crate::error::{Error, Result};
use crate::field::{random_field, SpectralField};
use crate::grid::Grid;
use crate::psdo::{self, Multiplier, Operator};

/// Equations with a built-in drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// No nonlinearity: `dX = ℰX dt + noise` (heat equation, linear transport noise).
    Linear,
    Burgers,
    Ch,
    Mch,
    Kdv,
    Mhd,
    Ad,
    Sqg,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Linear,
        ModelKind::Burgers,
        ModelKind::Ch,
        ModelKind::Mch,
        ModelKind::Kdv,
        ModelKind::Mhd,
        ModelKind::Ad,
        ModelKind::Sqg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Burgers => "burgers",
            ModelKind::Ch => "ch",
            ModelKind::Mch => "mch",
            ModelKind::Kdv => "kdv",
            ModelKind::Mhd => "mhd",
            ModelKind::Ad => "ad",
            ModelKind::Sqg => "sqg",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("model.name: unknown model `{s}`")))
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn yes() -> bool {
    true
}

/// Model constants; unused entries are ignored by a given model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Dissipation `−μΛ^{2α}` (first block for MHD).
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Second-block dissipation for MHD.
    #[serde(default)]
    pub mu2: f64,
    #[serde(default = "one")]
    pub alpha2: f64,
    /// Aggregation coefficient of AD.
    #[serde(default = "one")]
    pub gamma: f64,
    /// AD interaction kernel `Φ̂ = (1+|κ|²)^{−phi_order/2}` (Bessel for 2).
    #[serde(default = "two")]
    pub phi_order: f64,
    /// CH coefficients `a₁..a₄` and `a`.
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
    #[serde(default)]
    pub a3: f64,
    #[serde(default)]
    pub a4: f64,
    #[serde(default)]
    pub a: f64,
    /// Compose the Leray projection with `Π₀` (MHD) / use `Π₀` (SQG).
    #[serde(default = "yes")]
    pub zero_average: bool,
    /// Components of the linear model.
    #[serde(default = "one_usize")]
    pub components: usize,
}

fn one_usize() -> usize {
    1
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            alpha: 1.0,
            mu2: 0.0,
            alpha2: 1.0,
            gamma: 1.0,
            phi_order: 2.0,
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            a4: 0.0,
            a: 0.0,
            zero_average: true,
            components: 1,
        }
    }
}

/// Orders attached to a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Orders {
    /// Dissipation order `p₀` (`ℰ ∈ OP S^{2p₀}`).
    pub p0: f64,
    /// Derivative loss `q₀` of the singular drift.
    pub q0: f64,
    /// Index `l` of the `W^{l,∞}` blow-up norm.
    pub l: usize,
}

/// A concrete model on a grid.
#[derive(Clone, Debug)]
pub struct Model {
    kind: ModelKind,
    grid: Grid,
    components: usize,
    params: ModelParams,
    dissipation: Operator,
    skew_linear: Option<Operator>,
    projection: Operator,
    orders: Orders,
    phi: Option<Multiplier>,
    quadratic: Dealiaser,
    quartic: Dealiaser,
}

impl Model {
    pub fn new(kind: ModelKind, grid: Grid, params: ModelParams) -> Result<Self> {
        let d = grid.dim();
        let one_d = |name: &str| -> Result<()> {
            if d != 1 {
                return Err(Error::Dimension(format!("{name} is posed on the 1-torus, grid has d = {d}")));
            }
            Ok(())
        };
        let (components, orders) = match kind {
            ModelKind::Linear => (params.components.max(1), Orders { p0: params.alpha, q0: 0.0, l: 1 }),
            ModelKind::Burgers | ModelKind::Ch => {
                one_d(kind.name())?;
                (1, Orders { p0: params.alpha, q0: 1.0, l: 1 })
            }
            ModelKind::Mch => {
                one_d("mch")?;
                (1, Orders { p0: params.alpha, q0: 1.0, l: 3 })
            }
            ModelKind::Kdv => {
                one_d("kdv")?;
                (1, Orders { p0: params.alpha, q0: 3.0, l: 1 })
            }
            ModelKind::Mhd => {
                if d < 2 {
                    return Err(Error::Dimension("mhd needs d ≥ 2".into()));
                }
                (2 * d, Orders { p0: params.alpha.max(params.alpha2), q0: 1.0, l: 1 })
            }
            ModelKind::Ad => (1, Orders { p0: params.alpha, q0: 1.0, l: 1 }),
            ModelKind::Sqg => {
                if d != 2 {
                    return Err(Error::Dimension(format!("sqg is posed on the 2-torus, grid has d = {d}")));
                }
                (1, Orders { p0: params.alpha, q0: 1.0, l: 1 })
            }
        };
        let dissipation = match kind {
            ModelKind::Mhd => {
                dissipation_blocks(&grid, &[(params.mu, params.alpha, d), (params.mu2, params.alpha2, d)])?
            }
            _ => dissipation_blocks(&grid, &[(params.mu, params.alpha, components)])?,
        };
        let skew_linear = match kind {
            ModelKind::Kdv => {
                let d3 = Multiplier::scalar(grid, "−∂³", 3.0, |k| Complex64::new(0.0, k[0] * k[0] * k[0]))?;
                Some(Operator::Multiplier(d3))
            }
            _ => None,
        };
        let projection = match kind {
            ModelKind::Mhd => psdo::block_leray_projection(&grid, 2, params.zero_average)?,
            ModelKind::Sqg if params.zero_average => psdo::zero_average_projection(&grid),
            _ => psdo::identity(&grid),
        };
        let phi = match kind {
            ModelKind::Ad => Some(interaction_kernel(&grid, params.phi_order)?),
            _ => None,
        };
        Ok(Self {
            kind,
            grid,
            components,
            params,
            dissipation,
            skew_linear,
            projection,
            orders,
            phi,
            quadratic: Dealiaser::quadratic(grid),
            quartic: Dealiaser::quartic(grid),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn orders(&self) -> Orders {
        self.orders
    }

    /// `ℰ`, negative semi-definite.
    pub fn dissipation(&self) -> &Operator {
        &self.dissipation
    }

    /// `Π̃`.
    pub fn projection(&self) -> &Operator {
        &self.projection
    }

    /// Linear multiplier part of `g̃` (`−∂³` for KdV), if any.
    pub fn skew_linear(&self) -> Option<&Operator> {
        self.skew_linear.as_ref()
    }

    /// Regular drift `b̃`.
    pub fn regular_drift(&self, x: &SpectralField) -> Result<SpectralField> {
        self.check(x)?;
        match self.kind {
            ModelKind::Ch => ch_regular(&self.quartic, x, &self.params),
            ModelKind::Mch => mch_regular(&self.quadratic, x),
            _ => Ok(SpectralField::zeros(self.grid, self.components)),
        }
    }

    /// Nonlinear part of the singular drift `g̃` (excludes [`Self::skew_linear`]).
    pub fn transport_drift(&self, x: &SpectralField) -> Result<SpectralField> {
        self.check(x)?;
        match self.kind {
            ModelKind::Linear => Ok(SpectralField::zeros(self.grid, self.components)),
            ModelKind::Burgers | ModelKind::Ch | ModelKind::Mch | ModelKind::Kdv => burgers_term(&self.quadratic, x),
            ModelKind::Mhd => mhd_term(&self.quadratic, &self.projection, x),
            ModelKind::Ad => ad_term(&self.quadratic, x, self.phi.as_ref().expect("ad kernel"), self.params.gamma),
            ModelKind::Sqg => sqg_term(&self.quadratic, x, &self.projection),
        }
    }

    /// Full singular drift `g̃`.
    pub fn singular_drift(&self, x: &SpectralField) -> Result<SpectralField> {
        let mut g = self.transport_drift(x)?;
        if let Some(l) = &self.skew_linear {
            g += &l.apply(x)?;
        }
        Ok(g)
    }

    fn check(&self, x: &SpectralField) -> Result<()> {
        if *x.grid() != self.grid || x.components() != self.components {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} components on its grid, got {}",
                self.kind,
                self.components,
                x.components()
            )));
        }
        Ok(())
    }
}

/// `−diag(μ_b Λ^{2α_b})` over consecutive component blocks.
pub fn dissipation_blocks(grid: &Grid, blocks: &[(f64, f64, usize)]) -> Result<Operator> {
    for &(mu, alpha, _) in blocks {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("negative viscosity {mu}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("dissipation order α = {alpha} outside [0, 1]")));
        }
    }
    let first = blocks[0];
    if blocks.iter().all(|b| b.0 == first.0 && b.1 == first.1) {
        let (mu, alpha) = (first.0, first.1);
        if mu == 0.0 {
            return Ok(psdo::zero(grid));
        }
        return Ok(psdo::fractional_laplacian(grid, 2.0 * alpha).scaled(-mu));
    }
    let m: usize = blocks.iter().map(|b| b.2).sum();
    let mut diag: Vec<(f64, f64)> = Vec::with_capacity(m);
    for &(mu, alpha, count) in blocks {
        diag.extend(std::iter::repeat_n((mu, alpha), count));
    }
    let order = blocks.iter().filter(|b| b.0 > 0.0).map(|b| 2.0 * b.1).fold(0.0, f64::max);
    let symbol: psdo::SymbolFn = std::sync::Arc::new(move |k| {
        let r2: f64 = k.iter().map(|v| v * v).sum();
        let mut v = vec![Complex64::default(); m * m];
        for (i, &(mu, alpha)) in diag.iter().enumerate() {
            if mu != 0.0 && r2 != 0.0 {
                v[i * m + i] = Complex64::new(-mu * r2.powf(alpha), 0.0);
            }
        }
        v
    });
    Ok(Operator::Multiplier(Multiplier::new(
        *grid,
        "−diag(μΛ^{2α})",
        order,
        psdo::Shape::Matrix { rows: m, cols: m },
        symbol,
        psdo::NyquistRule::Symmetrize,
    )?))
}

/// `Φ̂(κ) = (1+|κ|²)^{−s/2}`; order `−s` must be ≤ −2.
pub fn interaction_kernel(grid: &Grid, s: f64) -> Result<Multiplier> {
    if s < 2.0 {
        return Err(Error::InvalidParameter(format!("interaction kernel of order −{s} is not in S^−2")));
    }
    Multiplier::scalar(*grid, format!("Φ̂ = D^-{s}"), -s, move |k| {
        let r2: f64 = k.iter().map(|v| v * v).sum();
        Complex64::new((1.0 + r2).powf(-s / 2.0), 0.0)
    })
}

fn check_scalar_1d(x: &SpectralField, name: &str) -> Result<()> {
    if x.grid().dim() != 1 || x.components() != 1 {
        return Err(Error::Dimension(format!(
            "{name} needs d = m = 1, got d = {}, m = {}",
            x.grid().dim(),
            x.components()
        )));
    }
    Ok(())
}

fn burgers_term(da: &Dealiaser, x: &SpectralField) -> Result<SpectralField> {
    let sq = da.map(x, |u| u * u)?;
    Ok(sq.derivative(0).scaled(-0.5))
}

/// `−X∂X = −½∂(X²)`.
pub fn drift_burgers(x: &SpectralField) -> Result<SpectralField> {
    check_scalar_1d(x, "burgers")?;
    burgers_term(&Dealiaser::quadratic(*x.grid()), x)
}

/// `−∂D^{−2}` applied to `f`.
fn minus_d_dminus(f: &SpectralField, power: f64) -> SpectralField {
    let g = *f.grid();
    let mut out = f.derivative(0);
    for idx in 0..g.len() {
        let w = (1.0 + g.wavevector_norm2(idx)).powf(-power / 2.0);
        out.coeffs_mut()[idx] *= -w;
    }
    out
}

fn ch_regular(da: &Dealiaser, x: &SpectralField, p: &ModelParams) -> Result<SpectralField> {
    let dx = x.derivative(0);
    let c = [p.a1, p.a2, p.a3, p.a4];
    if c.iter().all(|&v| v == 0.0) && p.a == 0.0 {
        return Ok(SpectralField::zeros(*x.grid(), 1));
    }
    let inner = da.combine2(x, &dx, |u, v| {
        let poly = ((c[3] * u + c[2]) * u + c[1]) * u * u + c[0] * u;
        poly + p.a * v * v
    })?;
    Ok(minus_d_dminus(&inner, 2.0))
}

/// CH drift: `(b, g)` with `b = −∂D^{−2}(Σa_iX^i + a|∂X|²)`, `g = −X∂X`.
pub fn drift_ch(x: &SpectralField, p: &ModelParams) -> Result<(SpectralField, SpectralField)> {
    check_scalar_1d(x, "ch")?;
    let g = *x.grid();
    Ok((ch_regular(&Dealiaser::quartic(g), x, p)?, burgers_term(&Dealiaser::quadratic(g), x)?))
}

fn mch_regular(da: &Dealiaser, x: &SpectralField) -> Result<SpectralField> {
    let d1 = x.derivative(0);
    let d2 = d1.derivative(0);
    let d3 = d2.derivative(0);
    let x2 = da.multiply(x, x)?;
    let d1sq = da.multiply(&d1, &d1)?;
    let d2sq = da.multiply(&d2, &d2)?;
    let xd3 = da.multiply(x, &d3)?.derivative(0);
    // −∂D^{−4}[X² + 2(∂X)² − 7/2(∂²X)² − 3∂(X∂³X)]
    let mut inner = x2;
    inner.axpy(2.0, &d1sq);
    inner.axpy(-3.5, &d2sq);
    inner.axpy(-3.0, &xd3);
    Ok(minus_d_dminus(&inner, 4.0))
}

/// MCH drift `(b, g)`.
pub fn drift_mch(x: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    check_scalar_1d(x, "mch")?;
    let da = Dealiaser::quadratic(*x.grid());
    Ok((mch_regular(&da, x)?, burgers_term(&da, x)?))
}

/// `−X∂X − ∂³X`.
pub fn drift_kdv(x: &SpectralField) -> Result<SpectralField> {
    check_scalar_1d(x, "kdv")?;
    let mut out = burgers_term(&Dealiaser::quadratic(*x.grid()), x)?;
    out -= &x.derivative(0).derivative(0).derivative(0);
    Ok(out)
}

/// `(u·∇)w` for `d`-vector fields, dealiased.
fn advect(da: &Dealiaser, u: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    let d = u.grid().dim();
    let ur = da.lift(u)?;
    let fine = *da.fine();
    let flen = fine.len();
    let mut vals = vec![0.0; d * flen];
    for j in 0..d {
        let dw = da.lift(&w.derivative(j))?;
        let uj = ur.component(j);
        for i in 0..d {
            let dwi = dw.component(i);
            let slot = &mut vals[i * flen..(i + 1) * flen];
            for p in 0..flen {
                slot[p] += uj[p] * dwi[p];
            }
        }
    }
    Ok(da.lower(&crate::field::RealField::new(fine, d, vals)?))
}

/// Largest `|∇·u|` coefficient of each `d`-block, relative to the field size.
pub fn divergence_residue(x: &SpectralField) -> f64 {
    let g = *x.grid();
    let d = g.dim();
    let blocks = x.components() / d;
    let mut worst = 0.0f64;
    let scale = x.max_abs_coeff().max(1e-300);
    for b in 0..blocks {
        for idx in 0..g.len() {
            let kv = g.wavevector(idx);
            let mut div = Complex64::default();
            for i in 0..d {
                div += Complex64::new(0.0, kv[i]) * x.component(b * d + i)[idx];
            }
            worst = worst.max(div.norm() / scale);
        }
    }
    worst
}

fn mhd_term(da: &Dealiaser, proj: &Operator, x: &SpectralField) -> Result<SpectralField> {
    let d = x.grid().dim();
    let v = x.slice_components(0, d);
    let m = x.slice_components(d, d);
    let mut first = advect(da, &m, &m)?;
    first -= &advect(da, &v, &v)?;
    let mut second = advect(da, &m, &v)?;
    second -= &advect(da, &v, &m)?;
    proj.apply(&SpectralField::stack(&[first, second])?)
}

/// MHD drift `(Π(M·∇)M − Π(V·∇)V, (M·∇)V − (V·∇)M)` for `X = (V, M)`.
pub fn drift_mhd(x: &SpectralField, zero_average: bool) -> Result<SpectralField> {
    let g = *x.grid();
    let d = g.dim();
    if d < 2 || x.components() != 2 * d {
        return Err(Error::Dimension(format!("mhd needs d ≥ 2 and m = 2d, got d = {d}, m = {}", x.components())));
    }
    let res = divergence_residue(x);
    if res > 1e-8 {
        return Err(Error::Precondition(format!("mhd input has divergence residue {res:.3e}")));
    }
    let proj = psdo::block_leray_projection(&g, 2, zero_average)?;
    mhd_term(&Dealiaser::quadratic(g), &proj, x)
}

fn ad_term(da: &Dealiaser, x: &SpectralField, phi: &Multiplier, gamma: f64) -> Result<SpectralField> {
    let g = *x.grid();
    let d = g.dim();
    let pot = phi.apply(x)?;
    let mut out = SpectralField::zeros(g, 1);
    for j in 0..d {
        let flux = da.multiply(x, &pot.derivative(j))?;
        out.axpy(-gamma, &flux.derivative(j));
    }
    Ok(out)
}

/// `−γ∇·(X ∇[Φ⋆X])` with `Φ̂` given as a multiplier of order ≤ −2.
pub fn drift_ad(x: &SpectralField, phi: &Multiplier, gamma: f64) -> Result<SpectralField> {
    if x.components() != 1 {
        return Err(Error::Dimension("ad needs a scalar density".into()));
    }
    let sym = psdo::XSymbol::from(phi);
    let b = psdo::check_bounded(&sym, x.grid(), &[], &[], -2.0)?;
    if !b.bounded || phi.order() > -2.0 {
        return Err(Error::Precondition(format!("interaction kernel {} is not of order −2", phi.label())));
    }
    ad_term(&Dealiaser::quadratic(*x.grid()), x, phi, gamma)
}

fn sqg_term(da: &Dealiaser, x: &SpectralField, proj: &Operator) -> Result<SpectralField> {
    let g = *x.grid();
    let u = psdo::riesz_perp(&g)?.apply(x)?;
    let ur = da.lift(&u)?;
    let gx = da.lift(&x.derivative(0))?;
    let gy = da.lift(&x.derivative(1))?;
    let vals: Vec<f64> = (0..da.fine().len())
        .map(|p| -(ur.component(0)[p] * gx.values()[p] + ur.component(1)[p] * gy.values()[p]))
        .collect();
    let out = da.lower(&crate::field::RealField::new(*da.fine(), 1, vals)?);
    proj.apply(&out)
}

/// `−(ℛ⊥X)·∇X`, then `Π₀`.
pub fn drift_sqg(x: &SpectralField) -> Result<SpectralField> {
    let g = *x.grid();
    if g.dim() != 2 || x.components() != 1 {
        return Err(Error::Dimension("sqg needs d = 2, m = 1".into()));
    }
    let scale = x.max_abs_coeff().max(1.0);
    if x.coeffs()[0].norm() > 1e-10 * scale {
        return Err(Error::Precondition("sqg input must have zero mean".into()));
    }
    sqg_term(&Dealiaser::quadratic(g), x, &psdo::zero_average_projection(&g))
}

// ---------------------------------------------------------------------------
// initial data

/// Named initial conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `amplitude · sin(mode·x₁ + phase)` in every component.
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_i64")]
        mode: i64,
        #[serde(default)]
        phase: f64,
    },
    /// Sum of cosines `Σ c_j cos(j x₁)`, `j = 1..`.
    Cosines { coeffs: Vec<f64> },
    /// Taylor–Green velocity, optional magnetic field `(sin x₂, sin x₁)`.
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        magnetic: f64,
    },
    /// Smooth positive CH profile `amplitude / (2 − cos x)`.
    ChSmooth {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Zero-mean shear layer `−cos x₂ + 0.1 sin x₁ sin x₂` (scaled).
    SqgShear {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `mean + amplitude · exp(−|x − c|²/width²)`.
    Bump {
        #[serde(default = "one")]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Random band-limited data.
    Random {
        #[serde(default = "four")]
        band: i64,
        #[serde(default = "two")]
        decay: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn one_i64() -> i64 {
    1
}

fn four() -> i64 {
    4
}

impl InitialData {
    /// Sample on `grid` with `m` components; Nyquist modes are removed.
    pub fn build(&self, grid: &Grid, m: usize) -> Result<SpectralField> {
        let d = grid.dim();
        let c = grid.period() / 2.0;
        let w = grid.wavenumber_unit();
        let mut u = match self {
            InitialData::Sine { amplitude, mode, phase } => {
                let (a, k, ph) = (*amplitude, *mode as f64, *phase);
                SpectralField::from_fn(*grid, m, |_, x| a * (k * w * x[0] + ph).sin())?
            }
            InitialData::Cosines { coeffs } => SpectralField::from_fn(*grid, m, |_, x| {
                coeffs.iter().enumerate().map(|(j, cj)| cj * ((j + 1) as f64 * w * x[0]).cos()).sum()
            })?,
            InitialData::TaylorGreen { amplitude, magnetic } => {
                if d != 2 || (m != 2 && m != 4) {
                    return Err(Error::Config("initial.kind = taylor-green needs d = 2 and m ∈ {2, 4}".into()));
                }
                let (a, b) = (*amplitude, *magnetic);
                SpectralField::from_fn(*grid, m, |j, x| {
                    let (x1, x2) = (w * x[0], w * x[1]);
                    match j {
                        0 => a * x1.sin() * x2.cos(),
                        1 => -a * x1.cos() * x2.sin(),
                        2 => b * x2.sin(),
                        _ => b * x1.sin(),
                    }
                })?
            }
            InitialData::ChSmooth { amplitude } => {
                let a = *amplitude;
                SpectralField::from_fn(*grid, m, |_, x| a / (2.0 - (w * x[0]).cos()))?
            }
            InitialData::SqgShear { amplitude } => {
                if d != 2 {
                    return Err(Error::Config("initial.kind = sqg-shear needs d = 2".into()));
                }
                let a = *amplitude;
                SpectralField::from_fn(*grid, m, |_, x| {
                    a * (-(w * x[1]).cos() + 0.1 * (w * x[0]).sin() * (w * x[1]).sin())
                })?
            }
            InitialData::Bump { mean, amplitude, width } => {
                let (mu, a, wd) = (*mean, *amplitude, *width);
                SpectralField::from_fn(*grid, m, |_, x| {
                    let r2: f64 = x[..d].iter().map(|v| (v - c).powi(2)).sum();
                    mu + a * (-r2 / (wd * wd)).exp()
                })?
            }
            InitialData::Random { band, decay, amplitude, seed } => {
                let mut u = random_field(*grid, m, *band, *decay, true, *seed);
                let n = u.l2_norm();
                if n > 0.0 {
                    u.scale(*amplitude / n);
                }
                u
            }
        };
        u.drop_nyquist();
        if matches!(self, InitialData::SqgShear { .. } | InitialData::Random { .. }) {
            for j in 0..m {
                u.component_mut(j)[0] = Default::default();
            }
        }
        Ok(u)
    }
}
