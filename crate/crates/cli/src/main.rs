use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use tmcert_cli::report::table;
use tmcert_cli::runner::preset_spectrum;
use tmcert_cli::{paper_table, run_config, Numerics, Report, RunConfig, SuiteName};
use tmcert_core::certificates::kappa;
use tmcert_core::{BoundaryCondition, Preset};

#[derive(Parser)]
#[command(name = "tmcert", version, about = "Spectral certificates for trapped modes in waveguides")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bc {
    Dirichlet,
    Neumann,
    Mixed,
}

impl From<Bc> for BoundaryCondition {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Dirichlet => BoundaryCondition::Dirichlet,
            Bc::Neumann => BoundaryCondition::Neumann,
            Bc::Mixed => BoundaryCondition::MixedByTag,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every job of a JSON configuration.
    Run {
        config: PathBuf,
        /// Jobs in flight at once.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "tmcert-out")]
        out: PathBuf,
    },
    /// Recompute every published number and compare.
    Suite {
        name: String,
        #[arg(long, default_value_t = tmcert_cli::suite::REFERENCE_H)]
        h: f64,
        /// Also write suite.json and suite.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Root of √κ·tan(√κ/2) = a.
    Kappa { a: f64 },
    /// Laplacian eigenvalues on a preset domain.
    Spectrum {
        preset: String,
        #[arg(long, value_enum, default_value_t = Bc::Dirichlet)]
        bc: Bc,
        #[arg(long, default_value_t = tmcert_core::geometry::DEFAULT_H)]
        h: f64,
        #[arg(long = "T", default_value_t = tmcert_core::geometry::DEFAULT_TRUNCATION)]
        t: f64,
        #[arg(short, default_value_t = 4)]
        k: usize,
        /// Preset parameter, `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        json: bool,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.to_string(), v))
}

fn run(config: PathBuf, jobs: usize, out: PathBuf) -> Result<ExitCode> {
    let cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return Ok(ExitCode::from(2));
        }
    };
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let start = Instant::now();
    let report = Report::new(run_config(&cfg, &out, jobs));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = json!({
        "tmcert_version": env!("CARGO_PKG_VERSION"),
        "config": config.display().to_string(),
        "started_unix": stamp,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "workers": jobs,
    });
    report.write(&out, &meta)?;
    print!("{}", report.to_text());
    let errored = report.errored();
    if errored > 0 {
        eprintln!("{errored} of {} jobs failed with errors", report.jobs.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { config, jobs, out } => run(config, jobs, out),
        Command::Suite { name, h, out } => (|| {
            let SuiteName::PaperTable = name.parse()?;
            let r = paper_table(h)?;
            print!("{}", r.to_text());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("suite.json"), r.to_json())?;
                std::fs::write(dir.join("suite.txt"), r.to_text())?;
            }
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Kappa { a } => (|| {
            let k = kappa(a)?;
            println!("kappa({}) = {:?}  residual {:.2e}", k.a, k.kappa, k.residual);
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Spectrum { preset, bc, h, t, k, params, json } => (|| {
            let preset: Preset = preset.parse()?;
            let params: BTreeMap<String, f64> = params.into_iter().collect();
            let n = Numerics { h, t, k, ..Numerics::default() };
            let r = preset_spectrum(preset, &params, bc.into(), &n)?;
            if json {
                let v = json!({
                    "preset": preset.name(),
                    "eigenvalues": r.eigenvalues,
                    "extrapolated": r.extrapolated,
                    "discretization_error": r.discretization_error,
                    "truncation_sensitivity": r.truncation_sensitivity,
                });
                println!("{}", serde_json::to_string_pretty(&v)?);
                return Ok(ExitCode::SUCCESS);
            }
            let col = |v: &Option<Vec<f64>>, i: usize, p: usize| {
                v.as_ref().and_then(|v| v.get(i)).map_or(String::from("-"), |x| format!("{x:.p$e}"))
            };
            let rows: Vec<[String; 5]> = (0..r.eigenvalues.len())
                .map(|i| {
                    [
                        i.to_string(),
                        format!("{:.8}", r.eigenvalues[i]),
                        r.extrapolated.as_ref().map_or("-".into(), |v| format!("{:.8}", v[i])),
                        col(&r.discretization_error, i, 2),
                        col(&r.truncation_sensitivity, i, 2),
                    ]
                })
                .collect();
            print!("{}", table(&["#", "lambda", "extrapolated", "h error", "T sensitivity"], &rows));
            Ok(ExitCode::SUCCESS)
        })(),
    };
    res.unwrap_or_else(|e: anyhow::Error| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

