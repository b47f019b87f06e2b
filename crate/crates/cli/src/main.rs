use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use psdoflow::config::ConfigFile;
use psdoflow::experiment;
use psdoflow::integrator::Status;
use psdoflow::verify::{self, Suite};

/// Pseudospectral SPDE experiments on the torus.
#[derive(Parser)]
#[command(name = "psdoflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write norms.csv, manifest.json and snapshots.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: out/<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite: ops, lak, r4, gauge or all.
    Verify {
        suite: String,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Check the model and noise family of this configuration instead of
        /// the built-in families (lak and r4 suites).
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// One run per value of a numeric key; writes summary.csv.
    Sweep {
        config: PathBuf,
        /// Dotted key, e.g. run.dt or noise.a_profile.a0.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_out(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from("out").join(format!("{stem}{suffix}"))
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<u8> {
    let mut cfg = ConfigFile::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    let out = out.unwrap_or_else(|| default_out(config, ""));
    let o = experiment::run(&cfg, &out)?;
    let rec = &o.record;
    let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
    println!("status: {}", rec.status.name());
    match &rec.status {
        Status::BlownUp { t_star, last_safe, monitor } => {
            println!("t*: {t_star} (monitor {monitor}, last safe record {last_safe})");
            for m in &rec.monitors {
                if let Some(w) = m.warning_time {
                    println!("  {} reached threshold/10 = {:.3e} at t = {w}", m.name, m.threshold / 10.0);
                }
            }
        }
        Status::Unstable { t, reason } => println!("unstable at t = {t}: {reason}"),
        Status::Error { message } => println!("error: {message}"),
        Status::Completed => {}
    }
    println!(
        "t = {:.6}, |X|_H^theta = {:.6e}, |X|_H^s0 = {:.6e}, |X|_W^l,inf = {:.6e}",
        rec.final_time(),
        last(&rec.h_theta),
        last(&rec.h_s0),
        last(&rec.w_l_inf)
    );
    println!("hash {}", o.manifest.hash);
    println!("wrote {}", out.display());
    Ok(match rec.status {
        Status::Completed => 0,
        Status::BlownUp { .. } => 2,
        _ => 1,
    })
}

fn cmd_verify(suite: &str, json: Option<PathBuf>, noise: Option<PathBuf>) -> Result<u8> {
    let suite: Suite = suite.parse()?;
    let subject = match &noise {
        Some(p) => Some(ConfigFile::load(p).with_context(|| format!("loading {}", p.display()))?.build()?),
        None => None,
    };
    let report = verify::run_suite(suite, subject.as_ref())?;
    for c in &report.checks {
        let q: Vec<String> = c.quantities.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        println!("{:<28} {}  {}", c.name, if c.pass { "PASS" } else { "FAIL" }, q.join(" "));
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    if let Some(path) = json {
        std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}: {}", report.suite, if report.pass { "pass" } else { "fail" });
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_sweep(config: &Path, axis: &str, values: &[String], seed: Option<u64>, out: Option<PathBuf>) -> Result<u8> {
    if values.is_empty() {
        bail!("sweep: empty values list");
    }
    let vals: Vec<f64> = values
        .iter()
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("--values: `{v}` is not a number")))
        .collect::<Result<_>>()?;
    let text = std::fs::read_to_string(config).with_context(|| format!("loading {}", config.display()))?;
    let mut tree: toml::Table = text.parse().context("parsing configuration")?;
    if let Some(s) = seed {
        if let Some(run) = tree.get_mut("run").and_then(|r| r.as_table_mut()) {
            run.insert("seed".into(), toml::Value::Integer(s as i64));
        }
    }
    let out = out.unwrap_or_else(|| default_out(config, "-sweep"));
    let rows = experiment::sweep(&toml::Value::Table(tree), axis, &vals, &out)?;
    for r in &rows {
        let err = r.strong_error.map(|e| format!(", strong error {e:.3e}")).unwrap_or_default();
        println!("{axis} = {}: {} at t = {:.4}, |X|_H^theta = {:.4e}{err}", r.value, r.status, r.final_time, r.h_theta);
    }
    println!("wrote {}", out.join("summary.csv").display());
    Ok(0)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PSDOFLOW_THREADS") {
        let n: usize = v.parse().with_context(|| format!("PSDOFLOW_THREADS = `{v}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out),
        Command::Verify { suite, json, noise } => cmd_verify(&suite, json, noise),
        Command::Sweep { config, axis, values, seed, out } => cmd_sweep(&config, &axis, &values, seed, out),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
