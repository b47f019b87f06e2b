//! Time stepping of the Itô system
//! `dX = (ℰ + b̃ + g̃ + ½Σ𝒴_k²)X dt + Σ𝒴_kX dW_k + ΣΠ̃h̃_k(t, X) dW̃_k`
//! with optional cut-off localization and blow-up monitors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::models::Model;
use crate::noise::{self, BrownianPath, NoiseFamily, RegularNoise};
use crate::psdo::{self, Multiplier, Operator};

/// Explicit schemes must satisfy `dt · max|L̂| ≤ STABILITY_CAP`.
pub const STABILITY_CAP: f64 = 1.5;
/// Default blow-up thresholds for `W^{l,∞}` and `H^{s₀}`.
pub const DEFAULT_WK_THRESHOLD: f64 = 1e3;
pub const DEFAULT_SOBOLEV_THRESHOLD: f64 = 1e6;

pub type NonlinearFn = Arc<dyn Fn(&SpectralField) -> Result<SpectralField> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler–Maruyama on the Itô form.
    ItoEuler,
    /// Heun predictor-corrector on the Stratonovich form.
    StratHeun,
    /// Integrating factor `e^{L dt}` on the linear part, Heun on the rest,
    /// Euler–Itô noise.
    SemiImplicitIto,
}

/// `χ_R(‖X(t) − X(0)‖_{H^θ})` localization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub radius: f64,
    pub theta: f64,
}

/// `1` on `[0, R]`, `0` on `[2R, ∞)`, quintic smoothstep in between.
pub fn chi_r(r: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("cut-off radius R = {radius} must be positive")));
    }
    Ok(1.0 - psdo::smoothstep((r.abs() - radius) / radius))
}

/// Quantity watched by a [`Monitor`].
#[derive(Clone)]
pub enum Functional {
    Sobolev(f64),
    WkInf(usize),
    Custom(String, Arc<dyn Fn(&SpectralField) -> f64 + Send + Sync>),
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Sobolev(s) => format!("H^{s}"),
            Functional::WkInf(l) => format!("W^{{{l},inf}}"),
            Functional::Custom(name, _) => name.clone(),
        }
    }

    /// `‖∇X‖_∞`: largest first derivative over axes and components.
    pub fn gradient() -> Self {
        Functional::Custom(
            "grad_inf".into(),
            Arc::new(|x: &SpectralField| {
                (0..x.grid().dim())
                    .map(|i| x.derivative(i).to_real().map(|r| r.max_abs()).unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max)
            }),
        )
    }

    pub fn eval(&self, x: &SpectralField) -> f64 {
        match self {
            Functional::Sobolev(s) => x.sobolev_norm(*s),
            Functional::WkInf(l) => x.wk_inf_norm(*l).unwrap_or(f64::INFINITY),
            Functional::Custom(_, f) => f(x),
        }
    }
}

/// Fires when its functional exceeds `threshold`.
#[derive(Clone, Debug)]
pub struct Monitor {
    pub functional: Functional,
    pub threshold: f64,
}

impl Monitor {
    pub fn new(functional: Functional, threshold: f64) -> Self {
        Self { functional, threshold }
    }
}

fn default_monitors(l: usize, s0: f64) -> Vec<Monitor> {
    vec![
        Monitor::new(Functional::WkInf(l), DEFAULT_WK_THRESHOLD),
        Monitor::new(Functional::Sobolev(s0), DEFAULT_SOBOLEV_THRESHOLD),
    ]
}

/// Numerical parameters of one run.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub cutoff: Option<Cutoff>,
    /// `None` selects the default blow-up monitors; `Some(vec![])` disables them.
    pub monitors: Option<Vec<Monitor>>,
    pub seed: u64,
    pub record_every: usize,
    pub snapshot_every: Option<usize>,
    /// Norm indices recorded: `H^θ`, `H^{s₀}` and `W^{l,∞}`.
    pub theta: f64,
    pub s0: f64,
    pub l: usize,
}

impl RunSettings {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            t_end,
            scheme,
            cutoff: None,
            monitors: None,
            seed: 0,
            record_every: 1,
            snapshot_every: None,
            theta: 1.0,
            s0: 2.0,
            l: 1,
        }
    }

    pub fn steps(&self) -> u64 {
        ((self.t_end / self.dt) - 1e-9).ceil().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("run.dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("run.t_end = {} must be non-negative", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("run.record_every must be at least 1".into()));
        }
        if let Some(c) = &self.cutoff {
            chi_r(0.0, c.radius)
                .map_err(|_| Error::Config(format!("cutoff.radius = {} must be positive", c.radius)))?;
            if self.scheme == Scheme::StratHeun {
                return Err(Error::Config("cutoff is only supported by the Itô schemes".into()));
            }
        }
        Ok(())
    }
}

/// A complete run: model, noise, initial state and numerics.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub model: Model,
    pub noise: NoiseFamily,
    pub initial: SpectralField,
    pub run: RunSettings,
}

impl SimConfig {
    pub fn grid(&self) -> &Grid {
        self.model.grid()
    }
}

// ---------------------------------------------------------------------------
// assembled system

/// Operator form of the Itô system, optionally mollified by `J`:
/// linear part `JLJ`, nonlinearity `b̃ + Jg̃(J·)`, correction `J³(½Σ𝒴²)J`
/// and transport noise `J𝒴_kJ`.
#[derive(Clone)]
pub struct System {
    grid: Grid,
    components: usize,
    linear: Multiplier,
    correction: Option<Operator>,
    stiff: Multiplier,
    correction_in_stiff: bool,
    nonlinear: NonlinearFn,
    transport: Vec<(u64, Operator)>,
    regular: Option<RegularNoise>,
    projection: Operator,
    mollifier: Option<Operator>,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("grid", &self.grid)
            .field("components", &self.components)
            .field("linear", &self.linear)
            .field("correction", &self.correction)
            .field("transport", &self.transport.len())
            .field("mollifier", &self.mollifier)
            .finish()
    }
}

fn sandwich(j: Option<&Operator>, op: Operator, left_power: usize) -> Operator {
    match j {
        None => op,
        Some(j) => {
            let mut left = j.clone();
            for _ in 1..left_power {
                left = left.compose(j);
            }
            left.compose(&op).compose(j)
        }
    }
}

impl System {
    /// The Itô system of `model` driven by `noise`; with `mollifier = Some(J)`
    /// the regularized system.
    pub fn assemble(model: &Model, noise: &NoiseFamily, mollifier: Option<&Operator>) -> Result<Self> {
        let grid = *model.grid();
        noise.check_structure()?;
        if let Some(j) = mollifier {
            if !j.is_scalar_multiplier() || j.grid() != Some(grid) {
                return Err(Error::Precondition("mollifier must be a scalar multiplier on the model grid".into()));
            }
        }
        let mut linear = model.dissipation().clone();
        if let Some(s) = model.skew_linear() {
            linear = linear.combine(1.0, s, 1.0);
        }
        let linear = sandwich(mollifier, linear, 1);
        let linear = linear
            .as_multiplier()
            .cloned()
            .ok_or_else(|| Error::Precondition("linear drift must be a Fourier multiplier".into()))?;
        let ys = noise.transport_operators()?;
        for (_, y) in &ys {
            if let Some(g) = y.grid() {
                if g != grid {
                    return Err(Error::ShapeMismatch(format!("noise operator {} is on another grid", y.label())));
                }
            }
        }
        let correction =
            if ys.is_empty() { None } else { Some(sandwich(mollifier, noise::ito_correction(noise, &grid)?, 3)) };
        let (stiff, correction_in_stiff) = match correction.as_ref().and_then(|c| c.as_multiplier()) {
            Some(c) => match linear.combine(1.0, c, 1.0) {
                Some(m) => (m, true),
                None => (linear.clone(), false),
            },
            None => (linear.clone(), false),
        };
        let transport = ys.into_iter().map(|(k, y)| (noise::transport_channel(k), sandwich(mollifier, y, 1))).collect();
        let m = model.clone();
        let nonlinear: NonlinearFn = match mollifier {
            None => Arc::new(move |x| {
                let g = m.transport_drift(x)?;
                let mut out = m.regular_drift(x)?;
                out += &g;
                Ok(out)
            }),
            Some(j) => {
                let j = j.clone();
                Arc::new(move |x| {
                    let g = j.apply(&m.transport_drift(&j.apply(x)?)?)?;
                    let mut out = m.regular_drift(x)?;
                    out += &g;
                    Ok(out)
                })
            }
        };
        Ok(Self {
            grid,
            components: model.components(),
            linear,
            correction,
            stiff,
            correction_in_stiff,
            nonlinear,
            transport,
            regular: noise.h.clone(),
            projection: model.projection().clone(),
            mollifier: mollifier.cloned(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn projection(&self) -> &Operator {
        &self.projection
    }

    pub fn mollifier(&self) -> Option<&Operator> {
        self.mollifier.as_ref()
    }

    /// Linear drift multiplier (dissipation plus linear transport terms).
    pub fn linear(&self) -> &Multiplier {
        &self.linear
    }

    pub fn correction(&self) -> Option<&Operator> {
        self.correction.as_ref()
    }

    /// Transport noise operators with their Brownian channels.
    pub fn transport(&self) -> &[(u64, Operator)] {
        &self.transport
    }

    pub fn regular_noise(&self) -> Option<&RegularNoise> {
        self.regular.as_ref()
    }

    /// Nonlinear drift part (`b̃ + g̃` without its linear terms).
    pub fn nonlinear(&self, x: &SpectralField) -> Result<SpectralField> {
        (self.nonlinear)(x)
    }

    fn correction_apply(&self, x: &SpectralField) -> Result<Option<SpectralField>> {
        match &self.correction {
            Some(c) if !self.correction_in_stiff => Ok(Some(c.apply(x)?)),
            _ => Ok(None),
        }
    }

    /// Full Itô drift `(L + ½Σ𝒴²)X + N(X)`.
    pub fn ito_drift(&self, x: &SpectralField) -> Result<SpectralField> {
        let mut out = self.stiff.apply(x)?;
        if let Some(c) = self.correction_apply(x)? {
            out += &c;
        }
        out += &self.nonlinear(x)?;
        Ok(out)
    }

    /// Stratonovich drift `LX + N(X)`.
    pub fn strat_drift(&self, x: &SpectralField) -> Result<SpectralField> {
        let mut out = self.linear.apply(x)?;
        out += &self.nonlinear(x)?;
        Ok(out)
    }

    /// Drift left after removing the integrating-factor multiplier.
    fn nonstiff_drift(&self, x: &SpectralField) -> Result<SpectralField> {
        let mut out = self.nonlinear(x)?;
        if let Some(c) = self.correction_apply(x)? {
            out += &c;
        }
        Ok(out)
    }

    fn transport_noise(&self, x: &SpectralField, path: &BrownianPath, step: u64) -> Result<Option<SpectralField>> {
        let mut acc: Option<SpectralField> = None;
        for (ch, y) in &self.transport {
            let dw = path.increment(*ch, step);
            let v = y.apply(x)?;
            match acc.as_mut() {
                None => acc = Some(v.scaled(dw)),
                Some(a) => a.axpy(dw, &v),
            }
        }
        Ok(acc)
    }

    fn regular_term(&self, t: f64, x: &SpectralField, path: &BrownianPath, step: u64) -> Result<Option<SpectralField>> {
        let Some(h) = &self.regular else { return Ok(None) };
        if h.c.is_empty() {
            return Ok(None);
        }
        let base = self.projection.apply(&h.profile(x)?)?;
        let mut w = 0.0;
        for (k, c) in h.c.iter().enumerate() {
            w += c * path.increment(noise::regular_channel(k), step);
        }
        Ok(Some(base.scaled(w * h.modulation(t))))
    }

    /// Largest modulus of the multiplier that an explicit scheme steps with.
    pub fn stiffness(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::ItoEuler => self.stiff.max_abs(),
            Scheme::StratHeun => self.linear.max_abs(),
            Scheme::SemiImplicitIto => 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// stepping

/// One-step map of a scheme on a fixed system and Brownian path.
pub struct Stepper<'a> {
    sys: &'a System,
    scheme: Scheme,
    dt: f64,
    path: BrownianPath,
    cutoff: Option<Cutoff>,
    x0: SpectralField,
    factor: Option<(u64, Multiplier)>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a System, settings: &RunSettings, x0: &SpectralField) -> Result<Self> {
        settings.validate()?;
        let cap = settings.dt * sys.stiffness(settings.scheme);
        if cap > STABILITY_CAP {
            return Err(Error::Precondition(format!(
                "dt·max|L| = {cap:.3} exceeds the stability cap {STABILITY_CAP} of {:?}; use semi_implicit_ito or a smaller dt",
                settings.scheme
            )));
        }
        if x0.components() != sys.components || *x0.grid() != sys.grid {
            return Err(Error::ShapeMismatch("initial state does not match the system".into()));
        }
        Ok(Self {
            sys,
            scheme: settings.scheme,
            dt: settings.dt,
            path: BrownianPath::new(settings.seed, settings.dt),
            cutoff: settings.cutoff,
            x0: x0.clone(),
            factor: None,
        })
    }

    pub fn path(&self) -> &BrownianPath {
        &self.path
    }

    /// `χ_R` at state `x` (1 without cut-off).
    pub fn chi(&self, x: &SpectralField) -> f64 {
        match &self.cutoff {
            None => 1.0,
            Some(c) => {
                let r = (x - &self.x0).sobolev_norm(c.theta);
                chi_r(r, c.radius).unwrap_or(1.0)
            }
        }
    }

    fn integrating_factor(&mut self, chi2: f64) -> Result<Multiplier> {
        let key = chi2.to_bits();
        if let Some((k, m)) = &self.factor {
            if *k == key {
                return Ok(m.clone());
            }
        }
        let m = self.sys.stiff.exponential(chi2 * self.dt)?;
        self.factor = Some((key, m.clone()));
        Ok(m)
    }

    /// Advance `x` from `t = step·dt` by one step; returns the new state and
    /// the cut-off factor used.
    pub fn advance(&mut self, x: &SpectralField, step: u64) -> Result<(SpectralField, f64)> {
        let sys = self.sys;
        let dt = self.dt;
        let t = step as f64 * dt;
        let chi = self.chi(x);
        let chi2 = chi * chi;
        let mut next = match self.scheme {
            Scheme::ItoEuler => {
                let mut out = x.clone();
                out.axpy(chi2 * dt, &sys.ito_drift(x)?);
                if let Some(n) = sys.transport_noise(x, &self.path, step)? {
                    out.axpy(chi, &n);
                }
                if let Some(h) = sys.regular_term(t, x, &self.path, step)? {
                    out.axpy(chi, &h);
                }
                out
            }
            Scheme::StratHeun => {
                let f0 = sys.strat_drift(x)?;
                let g0 = sys.transport_noise(x, &self.path, step)?;
                let h0 = sys.regular_term(t, x, &self.path, step)?;
                let mut pred = x.clone();
                pred.axpy(dt, &f0);
                if let Some(g) = &g0 {
                    pred += g;
                }
                if let Some(h) = &h0 {
                    pred += h;
                }
                let f1 = sys.strat_drift(&pred)?;
                let g1 = sys.transport_noise(&pred, &self.path, step)?;
                let mut out = x.clone();
                out.axpy(0.5 * dt, &f0);
                out.axpy(0.5 * dt, &f1);
                if let (Some(a), Some(b)) = (&g0, &g1) {
                    out.axpy(0.5, a);
                    out.axpy(0.5, b);
                }
                if let Some(h) = &h0 {
                    out += h;
                }
                out
            }
            Scheme::SemiImplicitIto => {
                let e = self.integrating_factor(chi2)?;
                let f0 = sys.nonstiff_drift(x)?;
                let mut noise = sys.transport_noise(x, &self.path, step)?;
                if let Some(h) = sys.regular_term(t, x, &self.path, step)? {
                    match noise.as_mut() {
                        None => noise = Some(h),
                        Some(n) => *n += &h,
                    }
                }
                let mut base = x.clone();
                if let Some(n) = &noise {
                    base.axpy(chi, n);
                }
                let mut pred = base.clone();
                pred.axpy(chi2 * dt, &f0);
                let pred = e.apply(&pred)?;
                let f1 = sys.nonstiff_drift(&pred)?;
                base.axpy(0.5 * chi2 * dt, &f0);
                let mut out = e.apply(&base)?;
                out.axpy(0.5 * chi2 * dt, &f1);
                out
            }
        };
        next = sys.projection.apply(&next)?;
        next.symmetrize();
        next.drop_nyquist();
        Ok((next, chi))
    }
}

// ---------------------------------------------------------------------------
// trajectories

/// Final state of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// A monitor fired at `t_star`; `last_safe` is the previous record.
    BlownUp {
        t_star: f64,
        last_safe: f64,
        monitor: String,
    },
    Unstable {
        t: f64,
        reason: String,
    },
    Error {
        message: String,
    },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::BlownUp { .. } => "blown_up",
            Status::Unstable { .. } => "unstable",
            Status::Error { .. } => "error",
        }
    }

    pub fn t_star(&self) -> Option<f64> {
        match self {
            Status::BlownUp { t_star, .. } => Some(*t_star),
            _ => None,
        }
    }
}

/// Values of one monitor over the recorded times.
#[derive(Clone, Debug, Serialize)]
pub struct MonitorLog {
    pub name: String,
    pub threshold: f64,
    pub values: Vec<f64>,
    /// First record above `threshold / 10`.
    pub warning_time: Option<f64>,
    pub fire_time: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub h_theta: Vec<f64>,
    pub h_s0: Vec<f64>,
    pub w_l_inf: Vec<f64>,
    /// Bit `i` set: monitor `i` above `threshold/10`; bit `16 + i`: fired.
    pub flags: Vec<u32>,
    pub monitors: Vec<MonitorLog>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, SpectralField)>,
    #[serde(skip)]
    pub final_state: Option<SpectralField>,
    pub status: Status,
    pub steps: u64,
    /// Smallest cut-off factor applied.
    pub chi_min: f64,
}

impl TrajectoryRecord {
    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// `V(‖X(t)‖²_{H^θ})` along a record.
pub fn lyapunov_trace(record: &TrajectoryRecord, v: impl Fn(f64) -> f64) -> Vec<f64> {
    record.h_theta.iter().map(|h| v(h * h)).collect()
}

/// `V(x) = log(e + x)`.
pub fn log_lyapunov(x: f64) -> f64 {
    (E + x).ln()
}

struct Recorder<'a> {
    settings: &'a RunSettings,
    monitors: Vec<Monitor>,
    rec: TrajectoryRecord,
}

impl<'a> Recorder<'a> {
    fn new(settings: &'a RunSettings) -> Self {
        let monitors = settings.monitors.clone().unwrap_or_else(|| default_monitors(settings.l, settings.s0));
        let logs = monitors
            .iter()
            .map(|m| MonitorLog {
                name: m.functional.name(),
                threshold: m.threshold,
                values: vec![],
                warning_time: None,
                fire_time: None,
            })
            .collect();
        Self {
            settings,
            monitors,
            rec: TrajectoryRecord {
                times: vec![],
                h_theta: vec![],
                h_s0: vec![],
                w_l_inf: vec![],
                flags: vec![],
                monitors: logs,
                snapshots: vec![],
                final_state: None,
                status: Status::Completed,
                steps: 0,
                chi_min: 1.0,
            },
        }
    }

    /// Record `x` at `t`; returns the name of a fired monitor.
    fn record(&mut self, t: f64, x: &SpectralField) -> Option<String> {
        let s = self.settings;
        self.rec.times.push(t);
        self.rec.h_theta.push(x.sobolev_norm(s.theta));
        self.rec.h_s0.push(x.sobolev_norm(s.s0));
        self.rec.w_l_inf.push(x.wk_inf_norm(s.l).unwrap_or(f64::INFINITY));
        let mut flags = 0u32;
        let mut fired = None;
        for (i, (m, log)) in self.monitors.iter().zip(self.rec.monitors.iter_mut()).enumerate() {
            let v = m.functional.eval(x);
            log.values.push(v);
            if !(v <= m.threshold / 10.0) {
                flags |= 1 << i;
                log.warning_time.get_or_insert(t);
            }
            if !(v <= m.threshold) {
                flags |= 1 << (16 + i);
                log.fire_time.get_or_insert(t);
                fired.get_or_insert_with(|| log.name.clone());
            }
        }
        self.rec.flags.push(flags);
        fired
    }
}

/// Integrate an assembled system from `x0`.
pub fn integrate_system(sys: &System, x0: &SpectralField, settings: &RunSettings) -> Result<TrajectoryRecord> {
    let mut stepper = Stepper::new(sys, settings, x0)?;
    let mut recorder = Recorder::new(settings);
    let steps = settings.steps();
    let mut x = x0.clone();
    let dt = settings.dt;
    let snapshot = |rec: &mut TrajectoryRecord, step: u64, t: f64, x: &SpectralField| {
        if let Some(every) = settings.snapshot_every {
            if every > 0 && step.is_multiple_of(every as u64) {
                rec.snapshots.push((t, x.clone()));
            }
        }
    };
    if let Some(name) = recorder.record(0.0, &x) {
        recorder.rec.status = Status::BlownUp { t_star: 0.0, last_safe: 0.0, monitor: name };
        recorder.rec.final_state = Some(x);
        return Ok(recorder.rec);
    }
    snapshot(&mut recorder.rec, 0, 0.0, &x);
    let has_monitors = !recorder.monitors.is_empty();
    for step in 0..steps {
        let t_next = (step + 1) as f64 * dt;
        let (next, chi) = match stepper.advance(&x, step) {
            Ok(v) => v,
            // a non-finite intermediate is reported like a non-finite state
            Err(Error::NonFinite(_)) => (SpectralField::zeros(sys.grid, sys.components).scaled(f64::NAN), 1.0),
            Err(e) => return Err(e),
        };
        recorder.rec.steps = step + 1;
        recorder.rec.chi_min = recorder.rec.chi_min.min(chi);
        if !next.is_finite() {
            let last_safe = recorder.rec.final_time();
            recorder.rec.status = if has_monitors {
                Status::BlownUp { t_star: t_next, last_safe, monitor: "non-finite".into() }
            } else {
                Status::Unstable { t: t_next, reason: "non-finite state".into() }
            };
            recorder.rec.final_state = Some(x);
            return Ok(recorder.rec);
        }
        x = next;
        let last = step + 1 == steps;
        if (step + 1) % settings.record_every as u64 == 0 || last {
            let last_safe = recorder.rec.final_time();
            if let Some(name) = recorder.record(t_next, &x) {
                recorder.rec.status = Status::BlownUp { t_star: t_next, last_safe, monitor: name };
                recorder.rec.final_state = Some(x);
                return Ok(recorder.rec);
            }
            snapshot(&mut recorder.rec, step + 1, t_next, &x);
        }
    }
    recorder.rec.final_state = Some(x);
    Ok(recorder.rec)
}

/// Integrate a full configuration.
pub fn integrate(config: &SimConfig) -> Result<TrajectoryRecord> {
    let mut noise = config.noise.clone();
    noise.projection = config.model.projection().clone();
    let sys = System::assemble(&config.model, &noise, None)?;
    integrate_system(&sys, &config.initial, &config.run)
}

/// `paths` independent trajectories with seeds derived from the base seed,
/// run in parallel.
pub fn run_ensemble(config: &SimConfig, paths: usize) -> Result<Vec<TrajectoryRecord>> {
    let mut noise = config.noise.clone();
    noise.projection = config.model.projection().clone();
    let sys = System::assemble(&config.model, &noise, None)?;
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut s = config.run.clone();
            s.seed = noise::derive_seed(config.run.seed, i as u64);
            integrate_system(&sys, &config.initial, &s)
        })
        .collect()
}

/// `sup_t Σ_k (‖Π̃h̃_k(t,X)‖²_{H^θ} − 2⟨Π̃h̃_k(t,X), X⟩²_{H^θ}/(e + ‖X‖²_{H^θ}))`
/// over `samples` equispaced times in `[0, T]`.
pub fn psi_functional(x: &SpectralField, theta: f64, fam: &NoiseFamily, t_max: f64, samples: usize) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("θ = {theta} must be positive")));
    }
    let Some(h) = &fam.h else { return Ok(0.0) };
    if h.c.iter().all(|&c| c == 0.0) {
        return Ok(0.0);
    }
    let base = fam.projection.apply(&h.profile(x)?)?;
    let nb2 = base.sobolev_norm(theta).powi(2);
    let ip = base.sobolev_inner(x, theta)?;
    let nx2 = x.sobolev_norm(theta).powi(2);
    let times: Vec<f64> = if h.is_time_dependent() && samples > 1 {
        (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
    } else {
        vec![0.0]
    };
    let mut best = f64::NEG_INFINITY;
    for t in times {
        let m2 = h.modulation(t).powi(2);
        let v: f64 = h.c.iter().map(|c| c * c * m2 * (nb2 - 2.0 * ip * ip / (E + nx2))).sum();
        best = best.max(v);
    }
    Ok(best)
}

/// Exact solution `exp(a W 𝒥) X₀` of `dX = a𝒥X ∘ dW` for a multiplier `𝒥`.
pub fn exact_multiplier_solution(j: &Multiplier, a: f64, w: f64, x0: &SpectralField) -> Result<SpectralField> {
    j.exponential(a * w)?.apply(x0)
}

/// Least-squares slope of `log err` against `log dt`.
pub fn observed_order(dts: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = dts.iter().zip(errors).map(|(d, e)| (d.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
