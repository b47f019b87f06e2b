//! TOML experiment configuration.
//!
//! ```toml
//! [grid]
//! dim = 1
//! n = 64            # points per axis
//! period = 6.283185307179586   # optional, 2π
//!
//! [model]
//! name = "burgers"  # linear | burgers | ch | mch | kdv | mhd | ad | sqg
//! mu = 0.1          # further model parameters, see `ModelParams`
//!
//! [initial]
//! kind = "sine"     # sine | cosines | taylor-green | ch-smooth | sqg-shear | bump | random
//!
//! [noise]           # optional
//! K = 2
//! a_profile = { kind = "power", a0 = 0.5, gamma = 1.0 }   # a_k = a0·k^−γ
//! q_profile = { kind = "list", values = [0.0, 0.2] }
//! J = [{ kind = "derivative", axis = 0 }]                   # length 1 (shared) or K
//! Kops = [{ kind = "transport", axis = 0, g = { mean = 1.0, cos = [0.5] } }]
//! h = { c = [0.1], epsilon = 0.0, omega = 0.0 }
//!
//! [run]
//! dt = 1e-3
//! t_end = 1.0
//! scheme = "semi_implicit_ito"   # ito_euler | strat_heun | semi_implicit_ito
//! seed = 1
//!
//! [cutoff]          # optional
//! radius = 10.0
//! theta = 1.0
//!
//! [[monitors]]      # optional; omitted → default thresholds, [] → none
//! functional = "gradient"   # sobolev (s) | wk_inf (l) | gradient
//! threshold = 50.0
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::{Cutoff, Functional, Monitor, RunSettings, Scheme, SimConfig};
use crate::models::{InitialData, Model, ModelKind, ModelParams};
use crate::noise::{NoiseFamily, RegularNoise, Sigma};
use crate::psdo::{self, Operator};

fn tau() -> f64 {
    TAU
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "tau")]
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelKind,
    #[serde(flatten)]
    pub params: ModelParams,
}

/// Amplitudes `a_k` / `q_k` for `k = 1..K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `a0·k^{−γ}`.
    Power {
        a0: f64,
        #[serde(default = "one")]
        gamma: f64,
    },
    List {
        values: Vec<f64>,
    },
}

impl Profile {
    fn values(&self, k: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            Profile::Power { a0, gamma } => Ok((1..=k).map(|i| a0 * (i as f64).powf(-gamma)).collect()),
            Profile::List { values } if values.len() == k => Ok(values.clone()),
            Profile::List { values } => {
                Err(Error::Config(format!("noise.{key}.values has {} entries, K = {k}", values.len())))
            }
        }
    }

    fn decay(&self) -> Option<f64> {
        match self {
            Profile::Power { gamma, .. } => Some(*gamma),
            Profile::List { .. } => None,
        }
    }
}

/// `g(x) = mean + Σ_j cos_j cos(j x_var) + sin_j sin(j x_var)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    #[serde(default)]
    pub var: usize,
}

impl TrigSpec {
    fn function(&self, grid: &Grid) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + 'static> {
        if self.var >= grid.dim() {
            return Err(Error::Config(format!("g.var = {} on a {}-d grid", self.var, grid.dim())));
        }
        let (mean, c, s, var, w) = (self.mean, self.cos.clone(), self.sin.clone(), self.var, grid.wavenumber_unit());
        Ok(move |x: &[f64]| {
            let t = w * x[var];
            let cs: f64 = c.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * t).cos()).sum();
            let sn: f64 = s.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * t).sin()).sum();
            mean + cs + sn
        })
    }
}

/// Operator declared by name and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity {
        #[serde(default = "one")]
        scale: f64,
    },
    Derivative {
        axis: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `Λ^s`.
    FracLaplacian {
        s: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(1 − Δ)^{s/2}`.
    Bessel {
        s: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    RieszPerp {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `g(x)∂_axis`, quantized densely.
    Transport {
        axis: usize,
        g: TrigSpec,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Multiplication by `g(x)`.
    Multiplication {
        g: TrigSpec,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `ops[0] ∘ ops[1] ∘ …`.
    Compose {
        ops: Vec<OperatorSpec>,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl OperatorSpec {
    pub fn build(&self, grid: &Grid) -> Result<Operator> {
        let (op, scale) = match self {
            OperatorSpec::Identity { scale } => (psdo::identity(grid), *scale),
            OperatorSpec::Derivative { axis, scale } => (psdo::derivative(grid, *axis)?, *scale),
            OperatorSpec::FracLaplacian { s, scale } => (psdo::fractional_laplacian(grid, *s), *scale),
            OperatorSpec::Bessel { s, scale } => (psdo::bessel_potential(grid, *s), *scale),
            OperatorSpec::RieszPerp { scale } => (psdo::riesz_perp(grid)?, *scale),
            OperatorSpec::Transport { axis, g, scale } => {
                (psdo::transport(grid, *axis, "g(x)∂", g.function(grid)?)?, *scale)
            }
            OperatorSpec::Multiplication { g, scale } => {
                (psdo::multiplication(grid, "g(x)", g.function(grid)?)?, *scale)
            }
            OperatorSpec::Compose { ops, scale } => {
                let built: Vec<Operator> = ops.iter().map(|o| o.build(grid)).collect::<Result<_>>()?;
                let mut it = built.into_iter();
                let first = it.next().ok_or_else(|| Error::Config("compose.ops is empty".into()))?;
                (it.fold(first, |acc, o| acc.compose(&o)), *scale)
            }
        };
        Ok(if scale == 1.0 { op } else { op.scaled(scale) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    Linear,
    ClippedPolynomial { coeffs: Vec<f64>, clip: f64 },
}

/// `h̃_k(t, X) = c_k(1 + ε sin ωt)σ(X)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularSpec {
    pub c: Vec<f64>,
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(rename = "K", default)]
    pub modes: usize,
    #[serde(default)]
    pub a_profile: Option<Profile>,
    #[serde(default)]
    pub q_profile: Option<Profile>,
    #[serde(rename = "J", default)]
    pub j: Vec<OperatorSpec>,
    #[serde(rename = "Kops", default)]
    pub kops: Vec<OperatorSpec>,
    #[serde(default)]
    pub h: Option<RegularSpec>,
}

fn operator_list(specs: &[OperatorSpec], k: usize, key: &str, grid: &Grid) -> Result<Vec<Operator>> {
    let built: Vec<Operator> = specs
        .iter()
        .map(|s| s.build(grid).map_err(|e| Error::Config(format!("noise.{key}: {e}"))))
        .collect::<Result<_>>()?;
    match built.len() {
        1 => Ok(vec![built[0].clone(); k]),
        n if n == k => Ok(built),
        n => Err(Error::Config(format!("noise.{key} has {n} entries, expected 1 or K = {k}"))),
    }
}

impl NoiseSpec {
    pub fn build(&self, grid: &Grid) -> Result<NoiseFamily> {
        let k = self.modes;
        let mut fam = NoiseFamily::none(grid);
        let zeros = vec![0.0; k];
        let a = match &self.a_profile {
            Some(p) => p.values(k, "a_profile")?,
            None => zeros.clone(),
        };
        let q = match &self.q_profile {
            Some(p) => p.values(k, "q_profile")?,
            None => zeros,
        };
        let needs = |v: &[f64]| v.iter().any(|&x| x != 0.0);
        fam.j_ops = if needs(&a) {
            if self.j.is_empty() {
                return Err(Error::Config("noise.J is required when a_profile is nonzero".into()));
            }
            operator_list(&self.j, k, "J", grid)?
        } else {
            vec![psdo::zero(grid); k]
        };
        fam.k_ops = if needs(&q) {
            if self.kops.is_empty() {
                return Err(Error::Config("noise.Kops is required when q_profile is nonzero".into()));
            }
            operator_list(&self.kops, k, "Kops", grid)?
        } else {
            vec![psdo::zero(grid); k]
        };
        fam.r2 = fam.j_ops.iter().map(|o| o.order()).fold(0.0, f64::max);
        fam.r1 = fam.k_ops.iter().map(|o| o.order()).fold(0.0, f64::max);
        fam.decay_exponent = self
            .a_profile
            .as_ref()
            .and_then(Profile::decay)
            .or(self.q_profile.as_ref().and_then(Profile::decay))
            .unwrap_or(1.0);
        fam.a = a;
        fam.q = q;
        if let Some(h) = &self.h {
            let sigma = match &h.sigma {
                None | Some(SigmaSpec::Linear) => Sigma::Linear,
                Some(SigmaSpec::ClippedPolynomial { coeffs, clip }) => {
                    if !(*clip > 0.0) {
                        return Err(Error::Config("noise.h.sigma.clip must be positive".into()));
                    }
                    Sigma::ClippedPolynomial { coeffs: coeffs.clone(), clip: *clip }
                }
            };
            fam.h = Some(RegularNoise { c: h.c.clone(), sigma, epsilon: h.epsilon, omega: h.omega });
        }
        fam.check_structure().map_err(|e| Error::Config(format!("noise: {e}")))?;
        Ok(fam)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default = "two")]
    pub s0: f64,
    #[serde(default = "one_usize")]
    pub l: usize,
}

fn default_scheme() -> Scheme {
    Scheme::SemiImplicitIto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonitorSpec {
    Sobolev { s: f64, threshold: f64 },
    WkInf { l: usize, threshold: f64 },
    Gradient { threshold: f64 },
}

impl MonitorSpec {
    pub fn build(&self) -> Monitor {
        match self {
            MonitorSpec::Sobolev { s, threshold } => Monitor::new(Functional::Sobolev(*s), *threshold),
            MonitorSpec::WkInf { l, threshold } => Monitor::new(Functional::WkInf(*l), *threshold),
            MonitorSpec::Gradient { threshold } => Monitor::new(Functional::gradient(), *threshold),
        }
    }
}

/// A parsed configuration file; serializes back to the same tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub initial: InitialData,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    pub run: RunSpec,
    #[serde(default)]
    pub cutoff: Option<Cutoff>,
    #[serde(default)]
    pub monitors: Option<Vec<MonitorSpec>>,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Self::from_value(toml::Value::Table(table))
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        value.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n, self.grid.period).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn settings(&self) -> Result<RunSettings> {
        let r = &self.run;
        let mut s = RunSettings::new(r.dt, r.t_end, r.scheme);
        s.seed = r.seed;
        s.record_every = r.record_every;
        s.snapshot_every = r.snapshot_every;
        s.theta = r.theta;
        s.s0 = r.s0;
        s.l = r.l;
        s.cutoff = self.cutoff;
        s.monitors = self.monitors.as_ref().map(|ms| ms.iter().map(MonitorSpec::build).collect());
        s.validate()?;
        Ok(s)
    }

    /// Assemble model, noise and initial state. The initial state is
    /// projected onto the range of the model projection.
    pub fn build(&self) -> Result<SimConfig> {
        let grid = self.grid()?;
        let model = Model::new(self.model.name, grid, self.model.params.clone())
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        let noise = match &self.noise {
            Some(n) => n.build(&grid)?,
            None => NoiseFamily::none(&grid),
        }
        .with_projection(model.projection().clone());
        let raw = self.initial.build(&grid, model.components()).map_err(|e| Error::Config(format!("initial: {e}")))?;
        let mut initial = model.projection().apply(&raw)?;
        initial.symmetrize();
        initial.drop_nyquist();
        Ok(SimConfig { model, noise, initial, run: self.settings()? })
    }
}

/// Replace the numeric value at a dotted key path (e.g. `run.dt`).
pub fn set_numeric(tree: &mut toml::Value, key: &str, value: f64) -> Result<()> {
    let mut node = tree;
    for part in key.split('.') {
        node = node.get_mut(part).ok_or_else(|| Error::Config(format!("{key}: no such key in the configuration")))?;
    }
    *node = match node {
        toml::Value::Float(_) => toml::Value::Float(value),
        toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9e15 => toml::Value::Integer(value as i64),
        toml::Value::Integer(_) => return Err(Error::Config(format!("{key}: integer key given {value}"))),
        _ => return Err(Error::Config(format!("{key}: not a numeric key"))),
    };
    Ok(())
}
