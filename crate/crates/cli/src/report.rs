//! Report types and writers. `report.json` holds only computed content so
//! that identical runs give identical bytes; wall-clock data goes to
//! `report.meta.json`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tmcert_core::{BoundaryCondition, Certificate, KappaRoot, TripodeConstants};

use crate::config::JobKind;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub preset: String,
    pub bc: BoundaryCondition,
    pub h: f64,
    pub truncation: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub extrapolated: Option<Vec<f64>>,
    pub discretization_error: Option<Vec<f64>>,
    pub truncation_sensitivity: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientSummary {
    pub field: String,
    pub value: f64,
    pub error: f64,
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub index: usize,
    pub name: String,
    pub kind: JobKind,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa: Vec<KappaRoot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tripode: Option<TripodeConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotient: Option<QuotientSummary>,
    /// Files written, relative to the output directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

impl JobReport {
    pub fn new(index: usize, name: String, kind: JobKind) -> Self {
        Self {
            index,
            name,
            kind,
            status: JobStatus::Ok,
            error: None,
            certificates: Vec::new(),
            spectrum: None,
            kappa: Vec::new(),
            tripode: None,
            quotient: None,
            artifacts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub jobs: Vec<JobReport>,
}

impl Report {
    pub fn new(jobs: Vec<JobReport>) -> Self {
        Self {
            version: REPORT_VERSION,
            jobs,
        }
    }

    pub fn errored(&self) -> usize {
        self.jobs.iter().filter(|j| j.status == JobStatus::Error).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per certificate, eigenvalue list, root or quotient.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<[String; 6]> = Vec::new();
        for j in &self.jobs {
            let row = |item: String, value: String, margin: String, unc: String, verdict: String| {
                [j.name.clone(), item, value, margin, unc, verdict]
            };
            if let Some(e) = &j.error {
                rows.push(row("error".into(), e.clone(), String::new(), String::new(), "error".into()));
                continue;
            }
            if let Some(s) = &j.spectrum {
                let vals: Vec<String> = s.eigenvalues.iter().map(|v| format!("{v:.6}")).collect();
                let err = s
                    .discretization_error
                    .as_ref()
                    .and_then(|e| e.first())
                    .map_or(String::new(), |e| format!("{e:.2e}"));
                rows.push(row(format!("{} {} h={}", s.preset, bc_name(s.bc), s.h), vals.join(" "), String::new(), err, String::new()));
            }
            for k in &j.kappa {
                rows.push(row(format!("kappa(a={:.6})", k.a), format!("{:.8}", k.kappa), String::new(), format!("{:.1e}", k.residual.abs()), String::new()));
            }
            if let Some(t) = &j.tripode {
                rows.push(row(
                    "C2 C_sq 2C_sq C2-6".into(),
                    format!("{:.5} {:.5} {:.5}", t.c2, t.c_square, t.tail_limit),
                    String::new(),
                    format!("{:.1e}", t.c_square_tail),
                    String::new(),
                ));
            }
            if let Some(q) = &j.quotient {
                let expected = q.expected.map_or(String::new(), |e| format!(" (closed form {e:.8})"));
                rows.push(row(format!("quotient {}", q.field), format!("{:.8}{expected}", q.value), String::new(), format!("{:.1e}", q.error), String::new()));
            }
            for c in &j.certificates {
                rows.push(row(
                    c.id.clone(),
                    c.lhs.map_or(String::new(), |v| format!("{v:.6}")),
                    format!("{:.6}", c.margin),
                    format!("{:.2e}", c.uncertainty),
                    c.verdict.to_string(),
                ));
            }
        }
        table(&["job", "item", "value", "margin", "uncertainty", "verdict"], &rows)
    }

    /// Writes `report.json`, `report.txt` and `report.meta.json` into `out`.
    pub fn write(&self, out: &Path, meta: &serde_json::Value) -> Result<()> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let put = |name: &str, body: String| {
            let p = out.join(name);
            std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
        };
        put("report.json", self.to_json())?;
        put("report.txt", self.to_text())?;
        put("report.meta.json", serde_json::to_string_pretty(meta)? + "\n")
    }
}

fn bc_name(bc: BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::Dirichlet => "dirichlet",
        BoundaryCondition::Neumann => "neumann",
        BoundaryCondition::MixedByTag => "mixed",
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut width = header.map(str::len);
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == N {
                s.push_str(c);
            } else {
                let pad = width[i] - c.chars().count();
                s.push_str(c);
                s.push_str(&" ".repeat(pad + 2));
            }
        }
        let _ = writeln!(out, "{}", s.trim_end());
    };
    line(header.to_vec());
    line(width.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
    out
}
