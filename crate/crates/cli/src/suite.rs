//! Built-in reproduction suites.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, Result};
use serde::{Deserialize, Serialize};
use tmcert_core::certificates::{cert_sixlegs, kappa, tripode_constants, DEFAULT_SERIES_TERMS};
use tmcert_core::geometry::DEFAULT_TRUNCATION;
use tmcert_core::{BoundaryCondition, Preset, Quantity};

use crate::config::Numerics;
use crate::report::table;
use crate::runner::preset_spectrum;

const PI2: f64 = PI * PI;

/// Element size the published tolerances refer to.
pub const REFERENCE_H: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    PaperTable,
}

impl FromStr for SuiteName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_table" => Ok(SuiteName::PaperTable),
            _ => Err(anyhow!("unknown suite {s:?}, expected paper_table")),
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("paper_table")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub criterion: usize,
    pub quantity: String,
    pub reference: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// What the computed value was derived from.
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.criterion.to_string(),
                    r.quantity.clone(),
                    format!("{}", r.reference),
                    format!("{:.6}", r.computed),
                    format!("{:.1e}", r.tolerance),
                    if r.pass { "pass" } else { "FAIL" }.to_string(),
                    r.input.clone(),
                ]
            })
            .collect();
        let mut s = format!("{} at h = {}, T = {}\n", self.suite, self.h, self.t);
        s.push_str(&table(&["#", "quantity", "reference", "computed", "tolerance", "status", "input"], &rows));
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serializes") + "\n"
    }
}

fn row(criterion: usize, quantity: &str, reference: f64, computed: f64, tolerance: f64, input: String) -> SuiteRow {
    SuiteRow {
        criterion,
        quantity: quantity.to_string(),
        reference,
        computed,
        tolerance,
        pass: (computed - reference).abs() <= tolerance,
        input,
    }
}

/// Every published number next to its recomputed value. Tolerances of
/// mesh-dependent rows scale with `(h/REFERENCE_H)²` when `h` is coarser.
pub fn paper_table(h: f64) -> Result<SuiteReport> {
    let t = DEFAULT_TRUNCATION;
    let n = Numerics { h, t, k: 1, ..Numerics::default() };
    let widen = (h / REFERENCE_H).powi(2).max(1.0);
    let none = BTreeMap::new();
    let (l, x) = std::thread::scope(|s| {
        let l = s.spawn(|| preset_spectrum(Preset::LShape, &none, BoundaryCondition::Dirichlet, &n));
        let x = preset_spectrum(Preset::XShape, &none, BoundaryCondition::Dirichlet, &n);
        (l.join().map_err(|_| anyhow!("solver thread panicked")), x)
    });
    let (l, x) = (l??, x?);
    let (lam_l, lam_x) = (l.eigenvalues[0], x.eigenvalues[0]);
    let fem = |name: &str| format!("FEM {name}, h = {h}, T = {t}");

    let kp = kappa(PI)?;
    let k5 = kappa((5.0 * PI2).sqrt())?;
    let six = cert_sixlegs(Quantity::fem(lam_x, x.uncertainty(0)), &kp, &k5)?;
    // C₂ moves by 3Δλ, so the quoted constants are recomputed at the
    // published eigenvalue
    let tri = tripode_constants(9.1722, DEFAULT_SERIES_TERMS)?;
    let published = format!("published lambda_L = 9.1722, N = {DEFAULT_SERIES_TERMS}");

    let rows = vec![
        row(1, "lambda L-shape", 9.1722, lam_l, 5e-3 * 9.1722 * widen, fem("l_shape")),
        row(1, "lambda L-shape / pi^2", 0.9293, lam_l / PI2, 5e-3 * 0.9293 * widen, fem("l_shape")),
        row(2, "lambda X-shape", 6.5186, lam_x, 5e-3 * 6.5186 * widen, fem("x_shape")),
        row(2, "lambda X-shape / pi^2", 0.6605, lam_x / PI2, 5e-3 * 0.6605 * widen, fem("x_shape")),
        row(3, "kappa(pi)", 4.0214, kp.kappa, 1e-3, "root finder".into()),
        row(3, "kappa(sqrt(5) pi)", 6.0827, k5.kappa, 1e-3, "root finder".into()),
        row(4, "six-legs margin", -1.0355, six.margin, 0.02 * widen, fem("x_shape")),
        row(5, "C2", 3.571, tri.c2, 5e-3, published.clone()),
        row(5, "C_sq", 0.3052, tri.c_square, 1e-3, published.clone()),
        row(5, "2 C_sq C2 - 6", -3.8205, tri.tail_limit, 0.02, published),
    ];
    Ok(SuiteReport {
        suite: SuiteName::PaperTable,
        h,
        t,
        rows,
    })
}
