//! Run configuration: a single JSON document with a version and a job list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tmcert_core::geometry::{DEFAULT_H, DEFAULT_TRUNCATION};
use tmcert_core::{BoundaryCondition, Preset};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Spectrum,
    Kappa,
    Certificate,
    ModesExport,
    FullPipeline,
}

impl fmt::Display for JobKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobKind::Spectrum => "spectrum",
            JobKind::Kappa => "kappa",
            JobKind::Certificate => "certificate",
            JobKind::ModesExport => "modes_export",
            JobKind::FullPipeline => "full_pipeline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub k: usize,
    pub tol: f64,
    #[serde(rename = "N_series")]
    pub n_series: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            h: DEFAULT_H,
            t: DEFAULT_TRUNCATION,
            k: 4,
            tol: 1e-10,
            n_series: tmcert_core::certificates::DEFAULT_SERIES_TERMS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    /// CSV export, relative to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub kind: JobKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Certificate or test-field id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

impl Job {
    pub fn new(kind: JobKind) -> Self {
        Self {
            kind,
            name: None,
            id: None,
            preset: None,
            bc: None,
            params: BTreeMap::new(),
            numerics: Numerics::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| {
            let what = self.id.as_deref().or(self.preset.as_deref()).unwrap_or("");
            if what.is_empty() {
                format!("{index}:{}", self.kind)
            } else {
                format!("{index}:{}:{what}", self.kind)
            }
        })
    }

    pub fn preset(&self) -> Option<Preset> {
        self.preset.as_deref().and_then(|p| p.parse().ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub jobs: Vec<Job>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    /// JSON syntax or shape error at a line and column.
    Parse { line: usize, column: usize, message: String },
    /// Semantic error at a field path such as `jobs[2].numerics.h`.
    Field { path: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            ConfigError::Field { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn field(path: String, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        path,
        message: message.into(),
    }
}

const CERTIFICATE_IDS: [&str; 8] = [
    "cuboid",
    "te_resonator",
    "tem",
    "tm",
    "big_resonator",
    "cube_inclusion",
    "sixlegs",
    "tripode",
];
const FIELD_IDS: [&str; 4] = ["cuboid", "te_resonator", "tem", "tm"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path).map_err(ConfigError::Io)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(field("version".into(), format!("unsupported version {}, expected {CONFIG_VERSION}", self.version)));
        }
        for (i, job) in self.jobs.iter().enumerate() {
            let at = |f: &str| format!("jobs[{i}].{f}");
            let n = &job.numerics;
            for (name, v) in [("h", n.h), ("T", n.t), ("tol", n.tol)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(field(at(&format!("numerics.{name}")), format!("must be positive, got {v}")));
                }
            }
            if n.k == 0 {
                return Err(field(at("numerics.k"), "must be positive"));
            }
            if n.n_series == 0 {
                return Err(field(at("numerics.N_series"), "must be positive"));
            }
            if let Some(p) = &job.preset {
                if p.parse::<Preset>().is_err() {
                    let known: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                    return Err(field(at("preset"), format!("unknown preset {p:?}, expected one of {}", known.join(", "))));
                }
            }
            for (k, v) in &job.params {
                if !v.is_finite() {
                    return Err(field(at(&format!("params.{k}")), "must be finite"));
                }
            }
            if let Some(csv) = &job.outputs.csv {
                let p = Path::new(csv);
                if csv.is_empty() || p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                    return Err(field(at("outputs.csv"), "must be a relative path inside the output directory"));
                }
            }
            let id = job.id.as_deref();
            match job.kind {
                JobKind::Spectrum | JobKind::FullPipeline if job.preset.is_none() => {
                    return Err(field(at("preset"), format!("required for {} jobs", job.kind)));
                }
                JobKind::Kappa if !job.params.contains_key("a") => {
                    return Err(field(at("params.a"), "required for kappa jobs"));
                }
                JobKind::Certificate => match id {
                    Some(id) if CERTIFICATE_IDS.contains(&id) => {}
                    _ => {
                        return Err(field(at("id"), format!("expected one of {}", CERTIFICATE_IDS.join(", "))));
                    }
                },
                JobKind::ModesExport => match id {
                    Some(id) if FIELD_IDS.contains(&id) => {}
                    _ => return Err(field(at("id"), format!("expected one of {}", FIELD_IDS.join(", ")))),
                },
                JobKind::FullPipeline if !matches!(job.preset(), Some(Preset::LShape | Preset::XShape)) => {
                    return Err(field(at("preset"), "full_pipeline needs l_shape or x_shape"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
