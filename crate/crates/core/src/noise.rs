//! Noise families `({a_k, 𝒥_k}, {q_k, 𝒦_k}, {h̃_k})`, their structural
//! validation, the Stratonovich-to-Itô correction and Brownian increments.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{random_field, RealField, SpectralField};
use crate::grid::Grid;
use crate::psdo::{self, Operator, XSymbol};

/// Pointwise nonlinearity of the regular noise.
#[derive(Clone, Debug, PartialEq)]
pub enum Sigma {
    /// `σ(u) = u`.
    Linear,
    /// `σ(u) = Σ_i p_i v^i` with `v = clamp(u, −clip, clip)`; Lipschitz.
    ClippedPolynomial { coeffs: Vec<f64>, clip: f64 },
}

impl Sigma {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Sigma::Linear => u,
            Sigma::ClippedPolynomial { coeffs, clip } => {
                let v = u.clamp(-clip, *clip);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * v + c)
            }
        }
    }
}

/// `h̃_k(t, X) = c_k (1 + ε sin ωt) σ(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularNoise {
    pub c: Vec<f64>,
    pub sigma: Sigma,
    pub epsilon: f64,
    pub omega: f64,
}

impl RegularNoise {
    pub fn linear(c: Vec<f64>) -> Self {
        Self { c, sigma: Sigma::Linear, epsilon: 0.0, omega: 0.0 }
    }

    pub fn modes(&self) -> usize {
        self.c.len()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.epsilon != 0.0 && self.omega != 0.0
    }

    /// `σ(X)` (evaluated on the collocation grid for nonlinear `σ`).
    pub fn profile(&self, x: &SpectralField) -> Result<SpectralField> {
        match &self.sigma {
            Sigma::Linear => Ok(x.clone()),
            s => {
                let r = x.to_real()?;
                let vals = r.values().iter().map(|&u| s.eval(u)).collect();
                let mut out = RealField::new(*x.grid(), x.components(), vals)?.to_spectral();
                out.drop_nyquist();
                Ok(out)
            }
        }
    }

    /// Time factor `1 + ε sin ωt`.
    pub fn modulation(&self, t: f64) -> f64 {
        1.0 + self.epsilon * (self.omega * t).sin()
    }
}

/// A truncated noise family on one grid.
#[derive(Clone, Debug)]
pub struct NoiseFamily {
    pub a: Vec<f64>,
    pub j_ops: Vec<Operator>,
    pub q: Vec<f64>,
    pub k_ops: Vec<Operator>,
    pub h: Option<RegularNoise>,
    pub projection: Operator,
    /// Declared orders `r₁` (for `𝒦_k`) and `r₂` (for `𝒥_k`).
    pub r1: f64,
    pub r2: f64,
    /// Documented tail decay exponent of `a_k`, `q_k`.
    pub decay_exponent: f64,
}

impl NoiseFamily {
    /// Family with no noise at all.
    pub fn none(grid: &Grid) -> Self {
        Self {
            a: vec![],
            j_ops: vec![],
            q: vec![],
            k_ops: vec![],
            h: None,
            projection: psdo::identity(grid),
            r1: 0.0,
            r2: 0.0,
            decay_exponent: 1.0,
        }
    }

    /// One transport mode `a·𝒥` driven by a single Brownian motion.
    pub fn single(grid: &Grid, a: f64, j: Operator) -> Self {
        let r2 = j.order();
        Self {
            a: vec![a],
            j_ops: vec![j],
            q: vec![0.0],
            k_ops: vec![psdo::zero(grid)],
            h: None,
            projection: psdo::identity(grid),
            r1: 0.0,
            r2,
            decay_exponent: 1.0,
        }
    }

    /// One `x`-dependent mode `q·𝒦`.
    pub fn single_x(grid: &Grid, q: f64, k: Operator) -> Self {
        let r1 = k.order();
        Self {
            a: vec![0.0],
            j_ops: vec![psdo::zero(grid)],
            q: vec![q],
            k_ops: vec![k],
            h: None,
            projection: psdo::identity(grid),
            r1,
            r2: r1,
            decay_exponent: 1.0,
        }
    }

    pub fn with_projection(mut self, p: Operator) -> Self {
        self.projection = p;
        self
    }

    pub fn with_regular(mut self, h: RegularNoise) -> Self {
        self.h = Some(h);
        self
    }

    /// Number of transport modes `K`.
    pub fn modes(&self) -> usize {
        self.a.len()
    }

    /// Structural checks that make the family usable: lengths agree and
    /// `a_k q_k = 0`.
    pub fn check_structure(&self) -> Result<()> {
        let k = self.a.len();
        if self.q.len() != k || self.j_ops.len() != k || self.k_ops.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "noise family lengths differ: a={}, q={}, J={}, K={}",
                k,
                self.q.len(),
                self.j_ops.len(),
                self.k_ops.len()
            )));
        }
        if let Some(i) = (0..k).find(|&i| self.a[i] * self.q[i] != 0.0) {
            return Err(Error::Precondition(format!("a_k·q_k ≠ 0 at k = {}", i + 1)));
        }
        if self.a.iter().chain(&self.q).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("noise amplitudes"));
        }
        Ok(())
    }

    /// Transport operators `𝒴_k` with their Brownian channel index: the
    /// nonzero one of `a_kΠ̃𝒥_k`, `q_kΠ̃𝒦_k` for each `k`.
    pub fn transport_operators(&self) -> Result<Vec<(usize, Operator)>> {
        self.check_structure()?;
        let mut out = Vec::new();
        for k in 0..self.modes() {
            if self.a[k] != 0.0 {
                out.push((k, self.projection.compose(&self.j_ops[k]).scaled(self.a[k])));
            } else if self.q[k] != 0.0 {
                out.push((k, self.projection.compose(&self.k_ops[k]).scaled(self.q[k])));
            }
        }
        Ok(out)
    }
}

/// `½ Σ_k [(a_kΠ̃𝒥_k)² + (q_kΠ̃𝒦_k)²]`.
pub fn ito_correction(fam: &NoiseFamily, grid: &Grid) -> Result<Operator> {
    let squares: Vec<Operator> = fam.transport_operators()?.into_iter().map(|(_, y)| y.squared()).collect();
    Ok(match Operator::sum(&squares) {
        Some(s) => s.scaled(0.5),
        None => psdo::zero(grid),
    })
}

/// Skew-defect estimate for one operator of the family.
#[derive(Clone, Debug, Serialize)]
pub struct SkewDefect {
    pub k: usize,
    pub family: &'static str,
    /// Estimated order of `𝒰* + 𝒰`.
    pub order_estimate: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub orthogonality: bool,
    pub skew_defects: Vec<SkewDefect>,
    pub projection_scalar: bool,
    pub projection_residual: f64,
    pub projection_ok: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.orthogonality && self.projection_ok && self.skew_defects.iter().all(|d| d.pass)
    }
}

/// Orders below this count as "order ≤ 0" for the skew-defect check.
pub const DEFECT_ORDER_TOLERANCE: f64 = 0.25;

/// Order of an operator estimated from its action on unit modes at radii
/// `R/2` and `R`: `log₂(‖T e_R‖ / ‖T e_{R/2}‖)`, `−∞` when it vanishes.
pub fn estimate_order(op: &Operator, grid: &Grid, components: usize) -> Result<f64> {
    let r = grid.nyquist() - 2;
    let probe = |k: i64| -> Result<f64> {
        let mut best = 0.0f64;
        for j in 0..components {
            let mut e = SpectralField::zeros(*grid, components);
            let mut kk = [0i64; 3];
            kk[0] = k;
            e.set_coeff(j, &kk[..grid.dim()], rustfft::num_complex::Complex64::new(1.0, 0.0));
            let v = op.apply(&e)?;
            best = best.max(v.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        }
        Ok(best)
    };
    let (lo, hi) = (probe(r / 2)?, probe(r)?);
    let scale = lo.max(hi);
    if scale < 1e-12 {
        return Ok(f64::NEG_INFINITY);
    }
    if lo < 1e-14 * scale {
        return Ok(f64::INFINITY);
    }
    let rad_lo = (r / 2) as f64 * grid.wavenumber_unit();
    let rad_hi = r as f64 * grid.wavenumber_unit();
    Ok((hi / lo).ln() / ((1.0 + rad_hi) / (1.0 + rad_lo)).ln())
}

/// Check a family against the structure assumptions: `a_k q_k = 0`,
/// skew defects of order ≤ 0, and compatibility of the projection.
pub fn validate_noise(fam: &NoiseFamily, grid: &Grid, components: usize) -> ValidationReport {
    let mut messages = Vec::new();
    let orthogonality = match fam.check_structure() {
        Ok(()) => true,
        Err(e) => {
            messages.push(e.to_string());
            false
        }
    };
    let mut skew_defects = Vec::new();
    let mut used: Vec<(&'static str, usize, &Operator)> = Vec::new();
    for k in 0..fam.modes().min(fam.j_ops.len()).min(fam.k_ops.len()) {
        if fam.a.get(k).copied().unwrap_or(0.0) != 0.0 {
            used.push(("J", k, &fam.j_ops[k]));
        }
        if fam.q.get(k).copied().unwrap_or(0.0) != 0.0 {
            used.push(("K", k, &fam.k_ops[k]));
        }
    }
    for &(family, k, op) in &used {
        let defect = op.adjoint().combine(1.0, op, 1.0);
        match estimate_order(&defect, grid, components) {
            Ok(o) => {
                skew_defects.push(SkewDefect { k: k + 1, family, order_estimate: o, pass: o <= DEFECT_ORDER_TOLERANCE })
            }
            Err(e) => {
                messages.push(format!("{family}_{}: {e}", k + 1));
                skew_defects.push(SkewDefect { k: k + 1, family, order_estimate: f64::NAN, pass: false });
            }
        }
        if family == "J" && !op.is_scalar_multiplier() {
            messages.push(format!("J_{} is not an x-independent diagonal multiplier", k + 1));
            if let Some(d) = skew_defects.last_mut() {
                d.pass = false;
            }
        }
    }
    let projection_scalar = fam.projection.is_scalar_multiplier();
    let mut projection_residual = 0.0f64;
    if !projection_scalar {
        for &(_, _, op) in &used {
            let t = op.adjoint().combine(1.0, op, 1.0);
            for u_op in [op, &t] {
                for seed in 0..3u64 {
                    let u = random_field(*grid, components, grid.nyquist() / 2, 1.0, true, 900 + seed);
                    let res = fam.projection.apply(&u).and_then(|pu| {
                        let a = u_op.apply(&pu)?;
                        let b = fam.projection.apply(&a)?;
                        Ok((&b - &a).l2_norm() / (1.0 + a.l2_norm()))
                    });
                    match res {
                        Ok(r) => projection_residual = projection_residual.max(r),
                        Err(e) => {
                            messages.push(format!("projection check: {e}"));
                            projection_residual = f64::INFINITY;
                        }
                    }
                }
            }
        }
    }
    let projection_ok = projection_scalar || projection_residual <= 1e-9;
    ValidationReport { orthogonality, skew_defects, projection_scalar, projection_residual, projection_ok, messages }
}

/// Symbol of a transport operator `g(x)∂_axis` as an [`XSymbol`].
pub fn transport_symbol(axis: usize, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> XSymbol {
    XSymbol::scalar("g∂", 1.0, move |x, k| rustfft::num_complex::Complex64::new(0.0, g(x) * k[axis]))
}

// ---------------------------------------------------------------------------
// Brownian increments

/// Brownian channel of the transport noise `k` (0-based).
pub fn transport_channel(k: usize) -> u64 {
    2 * k as u64
}

/// Brownian channel of the regular noise `h̃_k` (0-based).
pub fn regular_channel(k: usize) -> u64 {
    2 * k as u64 + 1
}

/// Counter-based Brownian increments: the draw for `(channel, step)` is a
/// pure function of the seed, independent of every other channel and step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BrownianPath {
    pub seed: u64,
    dt_bits: u64,
}

impl BrownianPath {
    pub fn new(seed: u64, dt: f64) -> Self {
        Self { seed, dt_bits: dt.to_bits() }
    }

    pub fn dt(&self) -> f64 {
        f64::from_bits(self.dt_bits)
    }

    /// Standard normal for `(channel, step)` via Box–Muller on two words of
    /// the ChaCha stream `channel` at position `step`.
    pub fn normal(&self, channel: u64, step: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(channel);
        rng.set_word_pos(4 * step as u128);
        let a = rng.next_u64();
        let b = rng.next_u64();
        let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// `ΔW = √dt · Z` for one channel and step.
    pub fn increment(&self, channel: u64, step: u64) -> f64 {
        let dt = self.dt();
        if dt == 0.0 {
            return 0.0;
        }
        dt.sqrt() * self.normal(channel, step)
    }

    /// `W(n·dt)` on one channel.
    pub fn value(&self, channel: u64, steps: u64) -> f64 {
        (0..steps).map(|s| self.increment(channel, s)).sum()
    }
}

/// Increments of the channels `modes` at one step.
pub fn sample_increments(path: &BrownianPath, step: u64, modes: std::ops::Range<u64>) -> Vec<f64> {
    modes.map(|c| path.increment(c, step)).collect()
}

/// Seed of path `index` in an ensemble with base seed `base` (SplitMix64).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
