//! Run and sweep orchestration with a deterministic output layout:
//! `norms.csv`, `manifest.json` and `snapshots/*.psdf`.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::{set_numeric, ConfigFile};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::integrator::{self, SimConfig, Status, System, TrajectoryRecord};
use crate::models::ModelKind;
use crate::noise::{self, BrownianPath};
use crate::snapshot;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    /// SHA-256 of the canonical (sorted-key, compact) JSON of `config`.
    pub hash: String,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub status: Status,
    pub steps: u64,
    pub final_time: f64,
    pub outputs: Vec<String>,
}

/// Canonical JSON: object keys sorted, no whitespace.
pub fn canonical_json(cfg: &ConfigFile) -> Result<serde_json::Value> {
    // serde_json's map is ordered by key
    serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))
}

pub fn content_hash(cfg: &ConfigFile) -> Result<String> {
    let text = serde_json::to_string(&canonical_json(cfg)?).map_err(|e| Error::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

pub struct RunOutcome {
    pub record: TrajectoryRecord,
    pub manifest: RunManifest,
    pub initial: SpectralField,
}

/// Integrate `cfg` and write its artifacts under `out`.
pub fn run(cfg: &ConfigFile, out: &Path) -> Result<RunOutcome> {
    let sim = cfg.build()?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let record = integrator::integrate(&sim).unwrap_or_else(|e| failed_record(&e));
    fs::create_dir_all(out)?;
    let mut outputs = vec!["norms.csv".to_string()];
    let mut w = BufWriter::new(File::create(out.join("norms.csv"))?);
    snapshot::write_norms_csv(&mut w, &record)?;
    w.flush()?;
    if !record.snapshots.is_empty() {
        fs::create_dir_all(out.join("snapshots"))?;
        for (i, (_, u)) in record.snapshots.iter().enumerate() {
            let name = format!("snapshots/{i:06}.psdf");
            let mut w = BufWriter::new(File::create(out.join(&name))?);
            snapshot::write_psdf(&mut w, u)?;
            w.flush()?;
            outputs.push(name);
        }
    }
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        tool: "psdoflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: canonical_json(cfg)?,
        hash: content_hash(cfg)?,
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
        status: record.status.clone(),
        steps: record.steps,
        final_time: record.final_time(),
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(out.join("manifest.json"), text + "\n")?;
    Ok(RunOutcome { record, manifest, initial: sim.initial })
}

fn failed_record(e: &Error) -> TrajectoryRecord {
    TrajectoryRecord {
        times: vec![],
        h_theta: vec![],
        h_s0: vec![],
        w_l_inf: vec![],
        flags: vec![],
        monitors: vec![],
        snapshots: vec![],
        final_state: None,
        status: Status::Error { message: e.to_string() },
        steps: 0,
        chi_min: 1.0,
    }
}

/// Closed-form solution `exp(tL + Σ_k W_k(t)𝒴_k)X₀` after `steps` steps on
/// the path of `seed`, when the system is linear with commuting multiplier
/// transport noise and no regular noise.
pub fn exact_linear_solution(sim: &SimConfig, seed: u64, steps: u64) -> Result<Option<SpectralField>> {
    if sim.model.kind() != ModelKind::Linear || sim.noise.h.is_some() {
        return Ok(None);
    }
    let mut noise = sim.noise.clone();
    noise.projection = sim.model.projection().clone();
    let sys = System::assemble(&sim.model, &noise, None)?;
    let path = BrownianPath::new(seed, sim.run.dt);
    let mut gen = sys.linear().clone();
    let mut scale = steps as f64 * sim.run.dt;
    for (ch, y) in sys.transport() {
        let Some(m) = y.as_multiplier() else { return Ok(None) };
        let w = path.value(*ch, steps);
        match gen.combine(scale, m, w) {
            Some(c) => gen = c,
            None => return Ok(None),
        }
        scale = 1.0;
    }
    let mut x = gen.exponential(scale)?.apply(&sim.initial)?;
    x = sys.projection().apply(&x)?;
    x.symmetrize();
    x.drop_nyquist();
    Ok(Some(x))
}

/// Paths averaged by [`strong_error`].
pub const STRONG_ERROR_PATHS: usize = 32;

/// `E‖X(T) − X_exact(T)‖_{L²}` over [`STRONG_ERROR_PATHS`] ensemble members,
/// when a closed form exists and every member completes.
pub fn strong_error(sim: &SimConfig) -> Result<Option<f64>> {
    if exact_linear_solution(sim, sim.run.seed, 0)?.is_none() {
        return Ok(None);
    }
    let records = integrator::run_ensemble(sim, STRONG_ERROR_PATHS)?;
    let mut total = 0.0;
    for (i, rec) in records.iter().enumerate() {
        let (Status::Completed, Some(x)) = (&rec.status, &rec.final_state) else { return Ok(None) };
        let seed = noise::derive_seed(sim.run.seed, i as u64);
        let Some(exact) = exact_linear_solution(sim, seed, rec.steps)? else { return Ok(None) };
        total += (x - &exact).l2_norm();
    }
    Ok(Some(total / records.len() as f64))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub t_star: Option<f64>,
    pub final_time: f64,
    pub h_theta: f64,
    pub h_s0: f64,
    pub w_l_inf: f64,
    /// Ensemble-mean `‖X(T) − X_exact(T)‖_{L²}`, when a closed form exists.
    pub strong_error: Option<f64>,
}

/// One run per value of the numeric key `axis`, sharing the base seed; rows
/// are written to `out/summary.csv` and each run to `out/run_<i>/`.
pub fn sweep(base: &toml::Value, axis: &str, values: &[f64], out: &Path) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep: empty values list".into()));
    }
    let configs: Vec<ConfigFile> = values
        .iter()
        .map(|&v| {
            let mut tree = base.clone();
            set_numeric(&mut tree, axis, v)?;
            ConfigFile::from_value(tree)
        })
        .collect::<Result<_>>()?;
    fs::create_dir_all(out)?;
    let rows: Vec<SweepRow> = configs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (cfg, &v))| {
            let dir = out.join(format!("run_{i:03}"));
            let o = run(cfg, &dir)?;
            let rec = &o.record;
            let strong_error = strong_error(&cfg.build()?)?;
            let last = |s: &[f64]| s.last().copied().unwrap_or(f64::NAN);
            Ok(SweepRow {
                value: v,
                status: rec.status.name().into(),
                t_star: rec.status.t_star(),
                final_time: rec.final_time(),
                h_theta: last(&rec.h_theta),
                h_s0: last(&rec.h_s0),
                w_l_inf: last(&rec.w_l_inf),
                strong_error,
            })
        })
        .collect::<Result<_>>()?;
    let mut w = BufWriter::new(File::create(out.join("summary.csv"))?);
    writeln!(w, "{axis},status,t_star,final_time,h_theta,h_s0,w_l_inf,strong_error")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for r in &rows {
        writeln!(
            w,
            "{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            r.value,
            r.status,
            opt(r.t_star),
            r.final_time,
            r.h_theta,
            r.h_s0,
            r.w_l_inf,
            opt(r.strong_error)
        )?;
    }
    w.flush()?;
    Ok(rows)
}
