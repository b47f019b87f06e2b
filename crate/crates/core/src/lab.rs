//! Mollified systems `(g_n, h_n)`, the (R4) and LAK cancellation checks,
//! Cauchy gaps between mollification levels and the Burgers gauge test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::{RunSettings, Scheme, Stepper, System};
use crate::models::{Model, ModelKind, ModelParams};
use crate::noise::{self, derive_seed, BrownianPath, NoiseFamily};
use crate::psdo::{self, Operator};

/// Spread factor accepted as "uniform in n".
pub const SPREAD_LIMIT: f64 = 1.5;
/// Accepted growth of a LAK ratio across the frequency probes.
pub const PROBE_GROWTH_LIMIT: f64 = 2.0;
/// Frequencies of the LAK probes `cos kx₁ + sin(k+1)x₁`.
pub const PROBE_MODES: [i64; 3] = [4, 8, 16];
/// Ratios below this are treated as exact zeros.
pub const ZERO_TOLERANCE: f64 = 1e-10;
/// Cap on `√(2μ)|W(t)| max|k|^{2α}` in the gauge test.
pub const GAUGE_EXPONENT_CAP: f64 = 40.0;

/// `max|r| / min|r|`; 1 when every entry vanishes.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if hi <= ZERO_TOLERANCE {
        return 1.0;
    }
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    hi / lo
}

/// The regularized system at mollification level `n`.
#[derive(Clone, Debug)]
pub struct RegularizedSystem {
    pub n: usize,
    pub mollifier: Operator,
    pub system: System,
    noise: NoiseFamily,
}

/// Assemble `g_n` and `h_n` for `model` and `noise` at level `n`.
pub fn assemble_gn(model: &Model, noise: &NoiseFamily, n: usize) -> Result<RegularizedSystem> {
    let j = psdo::mollifier(model.grid(), n)?;
    let mut fam = noise.clone();
    fam.projection = model.projection().clone();
    let system = System::assemble(model, &fam, Some(&j))?;
    Ok(RegularizedSystem { n, mollifier: j, system, noise: fam })
}

impl RegularizedSystem {
    /// `g_n(X)`.
    pub fn g(&self, x: &SpectralField) -> Result<SpectralField> {
        self.system.ito_drift(x)
    }

    /// Components `h_n(t, X)e_k`: first the transport modes `J𝒴_kJX`, then
    /// the regular modes `Π̃h̃_k(t, X)`.
    pub fn h(&self, t: f64, x: &SpectralField) -> Result<Vec<SpectralField>> {
        let mut out = Vec::new();
        for (_, y) in self.system.transport() {
            out.push(y.apply(x)?);
        }
        if let Some(h) = &self.noise.h {
            let base = self.noise.projection.apply(&h.profile(x)?)?;
            for c in &h.c {
                out.push(base.scaled(c * h.modulation(t)));
            }
        }
        Ok(out)
    }

    /// Number of transport components in [`Self::h`].
    pub fn transport_modes(&self) -> usize {
        self.system.transport().len()
    }
}

// ---------------------------------------------------------------------------
// (R4)

#[derive(Clone, Debug, Serialize)]
pub struct R4Sample {
    /// `Σ_k⟨h_n e_k, X⟩²_{H^{s₀}} / (1 + ‖X‖⁴)` per level.
    pub q1: Vec<f64>,
    /// `(2⟨g_n, X⟩_{H^{s₀}} + Σ_k‖h_n e_k‖²_{H^{s₀}}) / (1 + ‖X‖²)` per level.
    pub q2: Vec<f64>,
    /// Largest transport-only share of `q1`.
    pub transport_q1: f64,
    pub spread_q1: f64,
    pub spread_q2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct R4Report {
    pub s0: f64,
    pub n_list: Vec<usize>,
    pub samples: Vec<R4Sample>,
    /// Per-level constants (sup over samples) of `|q1|` and `|q2|`.
    pub constants: [Vec<f64>; 2],
    pub spreads: [f64; 2],
    /// All transport operators are `x`-independent (`𝒥` slots only).
    pub x_independent: bool,
    pub pass: bool,
    pub messages: Vec<String>,
}

/// Evaluate the (R4) quantities for each level and sample.
pub fn check_r4(
    model: &Model,
    noise: &NoiseFamily,
    n_list: &[usize],
    samples: &[SpectralField],
    s0: f64,
) -> Result<R4Report> {
    let systems: Vec<RegularizedSystem> =
        n_list.iter().map(|&n| assemble_gn(model, noise, n)).collect::<Result<_>>()?;
    let x_independent = noise.q.iter().all(|&q| q == 0.0);
    let mut out = Vec::new();
    let mut messages = Vec::new();
    let mut pass = true;
    for (si, x) in samples.iter().enumerate() {
        let nx2 = x.sobolev_norm(s0).powi(2);
        let (mut q1, mut q2) = (Vec::new(), Vec::new());
        let mut transport_q1 = 0.0f64;
        for sys in &systems {
            let hs = sys.h(0.0, x)?;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            let mut tq = 0.0;
            for (k, h) in hs.iter().enumerate() {
                let ip = h.sobolev_inner(x, s0)?;
                s1 += ip * ip;
                if k < sys.transport_modes() {
                    tq += ip * ip;
                }
                s2 += h.sobolev_norm(s0).powi(2);
            }
            s2 += 2.0 * sys.g(x)?.sobolev_inner(x, s0)?;
            q1.push(s1 / (1.0 + nx2 * nx2));
            q2.push(s2 / (1.0 + nx2));
            transport_q1 = transport_q1.max(tq / (1.0 + nx2 * nx2));
        }
        if q1.iter().chain(&q2).any(|v| !v.is_finite()) {
            pass = false;
            messages.push(format!("sample {si}: non-finite ratio"));
        }
        if x_independent && transport_q1 > ZERO_TOLERANCE {
            pass = false;
            messages.push(format!("sample {si}: skew transport share {transport_q1:.3e} does not vanish"));
        }
        out.push(R4Sample { spread_q1: spread(&q1), spread_q2: spread(&q2), q1, q2, transport_q1 });
    }
    let levels = n_list.len();
    let constants = [
        (0..levels).map(|i| out.iter().map(|s| s.q1[i].abs()).fold(0.0, f64::max)).collect::<Vec<_>>(),
        (0..levels).map(|i| out.iter().map(|s| s.q2[i].abs()).fold(0.0, f64::max)).collect::<Vec<_>>(),
    ];
    let spreads = [spread(&constants[0]), spread(&constants[1])];
    for (name, sp) in ["Q1", "Q2"].iter().zip(spreads) {
        if !(sp < SPREAD_LIMIT) {
            pass = false;
            messages.push(format!("{name} constant varies by {sp:.3} over n"));
        }
    }
    messages.push("(R3) is only exercised along the mollifier sequence itself".into());
    Ok(R4Report { s0, n_list: n_list.to_vec(), samples: out, constants, spreads, x_independent, pass, messages })
}

// ---------------------------------------------------------------------------
// LAK

/// Ratios `(LO1/‖X‖⁴, LO2/‖X‖², LO3/‖X‖²)` at level `j` for the operators `ys`,
/// plus the uncancelled `Σ|⟨J𝒴²X, JX⟩|/‖X‖²`.
fn lak_ratios(ys: &[Operator], j: &Operator, x: &SpectralField, sigma: f64) -> Result<[f64; 4]> {
    let jx = j.apply(x)?;
    let (mut lo1, mut lo2, mut lo3, mut naive) = (0.0, 0.0, 0.0, 0.0);
    for y in ys {
        let yx = y.apply(x)?;
        let jyx = j.apply(&yx)?;
        let yjx = y.apply(&jx)?;
        let jyjx = j.apply(&yjx)?;
        let a = jyx.sobolev_inner(&jx, sigma)?;
        let b = jyjx.sobolev_inner(x, sigma)?;
        lo1 += a * a + b * b;
        let jy2x = j.apply(&y.apply(&yx)?)?;
        let t = jy2x.sobolev_inner(&jx, sigma)?;
        lo2 += (t + jyx.sobolev_norm(sigma).powi(2)).abs();
        naive += t.abs();
        let j3y2jx = j.apply(&j.apply(&j.apply(&y.apply(&yjx)?)?)?)?;
        lo3 += (j3y2jx.sobolev_inner(x, sigma)? + jyjx.sobolev_norm(sigma).powi(2)).abs();
    }
    let n2 = x.sobolev_norm(sigma).powi(2);
    Ok([lo1 / (n2 * n2), lo2 / n2, lo3 / n2, naive / n2])
}

#[derive(Clone, Debug, Serialize)]
pub struct LakSample {
    pub lo1: Vec<f64>,
    pub lo2: Vec<f64>,
    pub lo3: Vec<f64>,
    pub spreads: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct LakReport {
    pub sigma: f64,
    pub n_list: Vec<usize>,
    pub samples: Vec<LakSample>,
    /// Per-level constants `C_n` (sup of each ratio over the samples).
    pub constants: [Vec<f64>; 3],
    /// `max/min` of each constant over the levels.
    pub spreads: [f64; 3],
    pub x_independent: bool,
    /// Largest LO1 ratio over all samples and levels.
    pub lo1_max: f64,
    /// Probe frequencies and LO1/LO2/LO3 growth across them at the top level.
    pub probe_modes: Vec<i64>,
    pub probe_growth: [f64; 3],
    /// Growth of the uncancelled first LO2 term across the probes.
    pub naive_growth: f64,
    pub pass: bool,
    pub messages: Vec<String>,
}

/// Frequency probes `cos kx₁ + sin(k+1)x₁`.
pub fn probe_field(grid: &Grid, components: usize, k: i64) -> Result<SpectralField> {
    let w = grid.wavenumber_unit();
    SpectralField::from_fn(*grid, components, |_, x| (k as f64 * w * x[0]).cos() + ((k + 1) as f64 * w * x[0]).sin())
}

/// Evaluate the LAK quantities of `fam` on `samples` over `n_list`.
pub fn check_lak(
    fam: &NoiseFamily,
    grid: &Grid,
    sigma: f64,
    samples: &[SpectralField],
    n_list: &[usize],
) -> Result<LakReport> {
    let ys: Vec<Operator> = fam.transport_operators()?.into_iter().map(|(_, y)| y).collect();
    let x_independent = fam.q.iter().all(|&q| q == 0.0);
    let js: Vec<Operator> = n_list.iter().map(|&n| psdo::mollifier(grid, n)).collect::<Result<_>>()?;
    let mut messages = Vec::new();
    let r0 = fam.r1.max(fam.r2);
    let budget = (grid.nyquist() as f64).powf(sigma + 2.0 * r0);
    if budget > 1e12 {
        messages.push(format!(
            "σ + 2r₀ = {} exceeds the double-precision smoothness budget at this grid",
            sigma + 2.0 * r0
        ));
    }
    let mut pass = true;
    let mut out = Vec::new();
    for x in samples {
        let mut s = LakSample { lo1: vec![], lo2: vec![], lo3: vec![], spreads: [1.0; 3] };
        for j in &js {
            let r = lak_ratios(&ys, j, x, sigma)?;
            s.lo1.push(r[0]);
            s.lo2.push(r[1]);
            s.lo3.push(r[2]);
        }
        s.spreads = [spread(&s.lo1), spread(&s.lo2), spread(&s.lo3)];
        out.push(s);
    }
    // constants C_n = sup over samples, one per level
    let sup = |f: fn(&LakSample) -> &Vec<f64>| -> Vec<f64> {
        (0..js.len()).map(|i| out.iter().map(|s| f(s)[i].abs()).fold(0.0, f64::max)).collect()
    };
    let constants = [sup(|s| &s.lo1), sup(|s| &s.lo2), sup(|s| &s.lo3)];
    let spreads = [spread(&constants[0]), spread(&constants[1]), spread(&constants[2])];
    let lo1_max = constants[0].iter().fold(0.0f64, |m, v| m.max(*v));
    for (name, sp) in ["LO1", "LO2", "LO3"].iter().zip(spreads) {
        if !(sp < SPREAD_LIMIT) {
            pass = false;
            messages.push(format!("{name} constant varies by {sp:.3} over n"));
        }
    }
    if x_independent && lo1_max > ZERO_TOLERANCE {
        pass = false;
        messages.push(format!("LO1 = {lo1_max:.3e} does not vanish for an x-independent family"));
    }
    // frequency probes at the finest level
    let probe_modes: Vec<i64> = PROBE_MODES.into_iter().filter(|&k| k + 1 < grid.nyquist()).collect();
    let mut probe_growth = [1.0; 3];
    let mut naive_growth = 1.0;
    if let (Some(j), true) = (js.last(), probe_modes.len() >= 2) {
        let m = samples.first().map(|x| x.components()).unwrap_or(1);
        let mut rows = Vec::new();
        for &k in &probe_modes {
            rows.push(lak_ratios(&ys, j, &probe_field(grid, m, k)?, sigma)?);
        }
        for q in 0..3 {
            probe_growth[q] = spread(&rows.iter().map(|r| r[q]).collect::<Vec<_>>());
        }
        naive_growth = spread(&rows.iter().map(|r| r[3]).collect::<Vec<_>>());
        for (name, g) in ["LO1", "LO2", "LO3"].iter().zip(probe_growth) {
            if !(g < PROBE_GROWTH_LIMIT) {
                pass = false;
                messages.push(format!("{name} grows by {g:.3} across probe frequencies {probe_modes:?}"));
            }
        }
    }
    Ok(LakReport {
        sigma,
        n_list: n_list.to_vec(),
        samples: out,
        constants,
        spreads,
        x_independent,
        lo1_max,
        probe_modes,
        probe_growth,
        naive_growth,
        pass,
        messages,
    })
}

// ---------------------------------------------------------------------------
// Cauchy gaps

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub l: usize,
    pub theta: f64,
    /// `sup_t ‖X_n(t) − X_l(t)‖_{H^θ}` per path.
    pub per_path: Vec<f64>,
    pub mean: f64,
    /// Paths stopped early by the exit radius.
    pub stopped: usize,
}

/// Run levels `n` and `l` on shared Brownian paths and return the sup gap.
/// Paths stop once either state leaves the `H^θ` ball of radius `exit_radius`.
#[allow(clippy::too_many_arguments)]
pub fn cauchy_gap(
    model: &Model,
    noise: &NoiseFamily,
    x0: &SpectralField,
    n: usize,
    l: usize,
    settings: &RunSettings,
    paths: usize,
    exit_radius: Option<f64>,
) -> Result<GapReport> {
    if n > l {
        return Err(Error::InvalidParameter(format!("cauchy_gap needs n ≤ l, got n = {n}, l = {l}")));
    }
    let sn = assemble_gn(model, noise, n)?;
    let sl = assemble_gn(model, noise, l)?;
    let theta = settings.theta;
    let results: Vec<(f64, bool)> = (0..paths.max(1))
        .into_par_iter()
        .map(|p| -> Result<(f64, bool)> {
            let mut s = settings.clone();
            s.seed = derive_seed(settings.seed, p as u64);
            let mut a = Stepper::new(&sn.system, &s, x0)?;
            let mut b = Stepper::new(&sl.system, &s, x0)?;
            let (mut xa, mut xb) = (x0.clone(), x0.clone());
            let mut gap = 0.0f64;
            for step in 0..s.steps() {
                xa = a.advance(&xa, step)?.0;
                xb = b.advance(&xb, step)?.0;
                if !(xa.is_finite() && xb.is_finite()) {
                    return Err(Error::NonFinite("cauchy gap trajectory"));
                }
                if let Some(r) = exit_radius {
                    if xa.sobolev_norm(theta).max(xb.sobolev_norm(theta)) >= r {
                        return Ok((gap, true));
                    }
                }
                gap = gap.max((&xa - &xb).sobolev_norm(theta));
            }
            Ok((gap, false))
        })
        .collect::<Result<_>>()?;
    let per_path: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean = per_path.iter().sum::<f64>() / per_path.len() as f64;
    Ok(GapReport { n, l, theta, stopped: results.iter().filter(|r| r.1).count(), per_path, mean })
}

// ---------------------------------------------------------------------------
// gauge transform

#[derive(Clone, Debug, Serialize)]
pub struct GaugeOutcome {
    /// `sup_t ‖Ξ(t)X(t) − Y(t)‖_{L²}`; `None` when the overflow guard fired.
    pub discrepancy: Option<f64>,
    pub max_exponent: f64,
    pub aborted: bool,
}

/// Numerics of [`burgers_gauge_test`].
#[derive(Clone, Copy, Debug)]
pub struct GaugeSetup {
    pub n_grid: usize,
    pub dt: f64,
    pub t_end: f64,
}

/// Compare `dX + X∂X dt = √(2μ)Λ^{2α}X∘dW` (route A) with the gauge-transformed
/// random PDE `dY/dt = −Ξ(Ξ⁻¹Y ∂Ξ⁻¹Y)`, `Ξ = exp(−√(2μ)W Λ^{2α})` (route B),
/// on one Brownian path.
pub fn burgers_gauge_test(
    mu: f64,
    alpha: f64,
    seed: u64,
    x0: &SpectralField,
    setup: GaugeSetup,
) -> Result<GaugeOutcome> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("μ = {mu} must be non-negative")));
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParameter(format!("α = {alpha} outside (0, 1/2]")));
    }
    let grid = *x0.grid();
    if grid.n() != setup.n_grid || grid.dim() != 1 {
        return Err(Error::ShapeMismatch("x0 must live on the 1-d gauge grid".into()));
    }
    let c = (2.0 * mu).sqrt();
    let lam = psdo::fractional_laplacian(&grid, 2.0 * alpha);
    let model = Model::new(ModelKind::Burgers, grid, ModelParams::default())?;
    let fam = if c > 0.0 { NoiseFamily::single(&grid, c, lam.clone()) } else { NoiseFamily::none(&grid) };
    let sys = System::assemble(&model, &fam, None)?;
    let mut settings = RunSettings::new(setup.dt, setup.t_end, Scheme::SemiImplicitIto);
    settings.seed = seed;
    let mut stepper = Stepper::new(&sys, &settings, x0)?;
    let path = BrownianPath::new(seed, setup.dt);
    let channel = noise::transport_channel(0);
    let kmax = lam.as_multiplier().expect("multiplier").max_abs();

    let xi = |w: f64| -> Result<(Operator, Operator)> {
        let m = lam.as_multiplier().expect("multiplier");
        Ok((Operator::Multiplier(m.exponential(-c * w)?), Operator::Multiplier(m.exponential(c * w)?)))
    };
    let rhs = |y: &SpectralField, ops: &(Operator, Operator)| -> Result<SpectralField> {
        let x = ops.1.apply(y)?;
        ops.0.apply(&sys.nonlinear(&x)?)
    };

    let steps = settings.steps();
    let (mut x, mut y) = (x0.clone(), x0.clone());
    let mut disc = 0.0f64;
    let mut max_exponent = 0.0f64;
    let mut w_now = 0.0;
    let mut ops_now = xi(0.0)?;
    for step in 0..steps {
        let w_next = w_now + path.increment(channel, step);
        let exponent = c * w_next.abs() * kmax;
        max_exponent = max_exponent.max(exponent);
        if exponent > GAUGE_EXPONENT_CAP {
            return Ok(GaugeOutcome { discrepancy: None, max_exponent, aborted: true });
        }
        let ops_next = xi(w_next)?;
        let advanced = (|| -> Result<(SpectralField, SpectralField)> {
            // route A
            let xa = stepper.advance(&x, step)?.0;
            // route B, Heun with Ξ frozen at the step ends
            let k1 = rhs(&y, &ops_now)?;
            let mut pred = y.clone();
            pred.axpy(setup.dt, &k1);
            let k2 = rhs(&pred, &ops_next)?;
            let mut yb = y.clone();
            yb.axpy(0.5 * setup.dt, &k1);
            yb.axpy(0.5 * setup.dt, &k2);
            let mut yb = sys.projection().apply(&yb)?;
            yb.symmetrize();
            yb.drop_nyquist();
            Ok((xa, yb))
        })();
        match advanced {
            Ok((xa, yb)) if xa.is_finite() && yb.is_finite() => (x, y) = (xa, yb),
            Ok(_) | Err(Error::NonFinite(_)) => {
                return Ok(GaugeOutcome { discrepancy: None, max_exponent, aborted: true })
            }
            Err(e) => return Err(e),
        }
        disc = disc.max((&ops_next.0.apply(&x)? - &y).l2_norm());
        w_now = w_next;
        ops_now = ops_next;
    }
    Ok(GaugeOutcome { discrepancy: Some(disc), max_exponent, aborted: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_field;

    #[test]
    fn identity_level_matches_integrator_exactly() {
        let g = Grid::torus(1, 32).unwrap();
        let m = Model::new(ModelKind::Ch, g, ModelParams { mu: 0.1, a2: 1.5, a: 0.5, ..Default::default() }).unwrap();
        let fam = NoiseFamily::single(&g, 0.3, psdo::derivative(&g, 0).unwrap());
        let x = random_field(g, 1, 6, 2.0, false, 3);
        let full = System::assemble(&m, &fam, None).unwrap();
        let reg = assemble_gn(&m, &fam, g.identity_mollifier_level()).unwrap();
        let (a, b) = (full.ito_drift(&x).unwrap(), reg.g(&x).unwrap());
        assert!(a.coeffs().iter().zip(b.coeffs()).all(|(p, q)| p == q));
    }

    #[test]
    fn heat_gn_on_one_mode() {
        let g = Grid::torus(1, 32).unwrap();
        let m = Model::new(ModelKind::Linear, g, ModelParams { mu: 1.0, ..Default::default() }).unwrap();
        let x = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
        for n in [1, 2, 4] {
            let r = assemble_gn(&m, &NoiseFamily::none(&g), n).unwrap();
            let phi = psdo::mollifier_profile(1.0 / n as f64);
            assert!((&r.g(&x).unwrap() + &x.scaled(phi * phi)).max_abs_coeff() < 1e-14);
        }
    }

    #[test]
    fn spread_conventions() {
        assert_eq!(spread(&[0.0, 0.0]), 1.0);
        assert_eq!(spread(&[2.0, -1.0]), 2.0);
    }

    #[test]
    fn equal_levels_have_zero_gap() {
        let g = Grid::torus(1, 16).unwrap();
        let m = Model::new(ModelKind::Burgers, g, ModelParams::default()).unwrap();
        let fam = NoiseFamily::single(&g, 0.2, psdo::derivative(&g, 0).unwrap());
        let x0 = SpectralField::from_fn(g, 1, |_, x| 0.5 * x[0].sin()).unwrap();
        let s = RunSettings::new(1e-3, 0.05, Scheme::SemiImplicitIto);
        let r = cauchy_gap(&m, &fam, &x0, 4, 4, &s, 2, None).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn gauge_zero_data_and_zero_noise() {
        let g = Grid::torus(1, 32).unwrap();
        let setup = GaugeSetup { n_grid: 32, dt: 1e-3, t_end: 0.05 };
        let zero = SpectralField::zeros(g, 1);
        assert_eq!(burgers_gauge_test(0.05, 0.5, 1, &zero, setup).unwrap().discrepancy, Some(0.0));
        let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
        assert_eq!(burgers_gauge_test(0.0, 0.5, 1, &x0, setup).unwrap().discrepancy, Some(0.0));
        assert!(burgers_gauge_test(0.05, 0.75, 1, &x0, setup).is_err());
    }
}
