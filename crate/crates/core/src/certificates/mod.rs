//! Existence criteria evaluated as signed margins.
//!
//! Every certificate reports `margin = lhs − rhs`; a negative margin means
//! the criterion holds. The verdict is `pass` only when the margin clears
//! the propagated input uncertainty.

mod kappa;
mod material;
mod resonator;
mod sixlegs;
mod symmetry;
mod tripode;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kappa::{kappa, KappaRoot};
pub use material::{
    cert_material_aniso, cert_material_general, cert_material_magnetic, cert_material_signs, cert_material_zeps,
    AnisoProfile, MaterialProfile, SectionQuadrature,
};
pub use resonator::{
    cert_big_resonator, cert_cuboid, cert_te_resonator, cert_tem, cert_tm, cube_inclusion, tm_min_length, tm_quotient,
};
pub use sixlegs::{cert_sixlegs, friedrichs_1d_check, Friedrichs1dReport, lemma_checks_sixlegs, sixlegs_margin, SixLegsLemmaReport};
pub use symmetry::embed_by_symmetry;
pub use tripode::{
    cert_tripode, tripode_constants, tripode_energy_identity_check, TripodeConstants, TripodeIdentityReport,
    DEFAULT_SERIES_TERMS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("invalid input `{name}` = {value}: {reason}")]
    Invalid {
        name: String,
        value: f64,
        reason: String,
    },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Fem(#[from] crate::fem2d::FemError),
}

pub(crate) fn invalid(name: &str, value: f64, reason: impl Into<String>) -> CertError {
    CertError::Invalid {
        name: name.into(),
        value,
        reason: reason.into(),
    }
}

/// Origin of a numeric constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Closed-form formula.
    Analytic,
    /// Finite-element computation.
    Fem,
    /// Tabulated special-function value.
    Tabulated,
    /// Supplied by the caller.
    Input,
    /// Computed from other quantities (root finding, series, quadrature).
    Derived,
    /// Published reference value.
    Paper,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::Fem => "fem",
            Provenance::Tabulated => "tabulated",
            Provenance::Input => "input",
            Provenance::Derived => "derived",
            Provenance::Paper => "paper",
        })
    }
}

/// A value with its provenance and an absolute uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub provenance: Provenance,
    pub uncertainty: f64,
}

impl Quantity {
    pub fn new(value: f64, provenance: Provenance, uncertainty: f64) -> Self {
        Self {
            value,
            provenance,
            uncertainty: uncertainty.abs(),
        }
    }

    pub fn analytic(value: f64) -> Self {
        Self::new(value, Provenance::Analytic, 0.0)
    }

    pub fn input(value: f64) -> Self {
        Self::new(value, Provenance::Input, 0.0)
    }

    pub fn fem(value: f64, uncertainty: f64) -> Self {
        Self::new(value, Provenance::Fem, uncertainty)
    }

    pub fn derived(value: f64, uncertainty: f64) -> Self {
        Self::new(value, Provenance::Derived, uncertainty)
    }

    pub fn paper(value: f64) -> Self {
        Self::new(value, Provenance::Paper, 0.0)
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::input(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

impl Verdict {
    /// Pass iff `margin < −uncertainty`, fail iff `margin > uncertainty`.
    pub fn from_margin(margin: f64, uncertainty: f64) -> Self {
        if !margin.is_finite() || !uncertainty.is_finite() {
            Verdict::Inconclusive
        } else if margin < -uncertainty {
            Verdict::Pass
        } else if margin > uncertainty {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Margin response to perturbing one input by `±tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub input: String,
    pub tau: f64,
    pub margin_minus: f64,
    pub margin_plus: f64,
    /// `max(|m(x±τ) − m(x)|)/τ`.
    pub lipschitz: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub entries: Vec<Sensitivity>,
}

impl SafetyReport {
    /// Largest margin change over all single-input perturbations.
    pub fn max_shift(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.lipschitz * e.tau)
            .fold(0.0, f64::max)
    }
}

/// Relative perturbation used by the safety report when an input carries no
/// uncertainty of its own.
pub const DEFAULT_REL_TAU: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub id: String,
    pub inputs: BTreeMap<String, Quantity>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub margin: f64,
    pub uncertainty: f64,
    pub verdict: Verdict,
    pub safety_report: SafetyReport,
    pub notes: Vec<String>,
}

/// Named inputs.
pub type Inputs = BTreeMap<String, Quantity>;

pub(crate) fn inputs<const N: usize>(pairs: [(&str, Quantity); N]) -> Inputs {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl Certificate {
    /// Evaluates `margin = f(inputs)` and propagates input uncertainties to
    /// first order by central differences. `extra_uncertainty` covers errors
    /// not attached to an input (quadrature, series tails).
    pub fn evaluate<F>(id: &str, inputs: Inputs, extra_uncertainty: f64, f: F) -> Certificate
    where
        F: Fn(&BTreeMap<String, f64>) -> f64,
    {
        let base: BTreeMap<String, f64> = inputs.iter().map(|(k, q)| (k.clone(), q.value)).collect();
        let margin = f(&base);
        let eval_at = |name: &str, v: f64| {
            let mut x = base.clone();
            x.insert(name.to_string(), v);
            f(&x)
        };
        let mut uncertainty = extra_uncertainty.abs();
        let mut entries = Vec::new();
        for (name, q) in &inputs {
            if q.uncertainty > 0.0 {
                let u = q.uncertainty;
                let (mp, mm) = (eval_at(name, q.value + u), eval_at(name, q.value - u));
                let shift = 0.5 * (mp - mm).abs();
                uncertainty += if shift.is_finite() { shift } else { f64::INFINITY };
            }
            let tau = if q.uncertainty > 0.0 {
                q.uncertainty
            } else {
                DEFAULT_REL_TAU * q.value.abs().max(1e-12)
            };
            let (mm, mp) = (eval_at(name, q.value - tau), eval_at(name, q.value + tau));
            let lipschitz = (mp - margin).abs().max((mm - margin).abs()) / tau;
            entries.push(Sensitivity {
                input: name.clone(),
                tau,
                margin_minus: mm,
                margin_plus: mp,
                lipschitz,
            });
        }
        Certificate {
            id: id.to_string(),
            inputs,
            lhs: None,
            rhs: None,
            margin,
            uncertainty,
            verdict: Verdict::from_margin(margin, uncertainty),
            safety_report: SafetyReport { entries },
            notes: Vec::new(),
        }
    }

    pub fn with_sides(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// Replaces the verdict, recording why.
    pub fn override_verdict(mut self, verdict: Verdict, reason: impl Into<String>) -> Self {
        self.verdict = verdict;
        self.notes.push(reason.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_margin(-1.0, 0.5), Verdict::Pass);
        assert_eq!(Verdict::from_margin(1.0, 0.5), Verdict::Fail);
        assert_eq!(Verdict::from_margin(0.2, 0.5), Verdict::Inconclusive);
        assert_eq!(Verdict::from_margin(0.0, 0.0), Verdict::Inconclusive);
        assert_eq!(Verdict::from_margin(f64::NAN, 0.0), Verdict::Inconclusive);
    }

    #[test]
    fn evaluate_propagates_uncertainty() {
        let c = Certificate::evaluate(
            "t",
            inputs([("x", Quantity::fem(2.0, 0.1)), ("y", Quantity::analytic(3.0))]),
            0.0,
            |v| v["x"] * v["x"] - v["y"],
        );
        assert!((c.margin - 1.0).abs() < 1e-15);
        assert!((c.uncertainty - 0.4).abs() < 1e-12);
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.safety_report.entries.len(), 2);
    }

    #[test]
    fn safety_report_bounds_three_point_samples() {
        let c = Certificate::evaluate("t", inputs([("x", Quantity::input(1.5))]), 0.0, |v| v["x"].sin());
        for e in &c.safety_report.entries {
            assert!((e.margin_plus - c.margin).abs() <= e.lipschitz * e.tau * (1.0 + 1e-12));
            assert!((e.margin_minus - c.margin).abs() <= e.lipschitz * e.tau * (1.0 + 1e-12));
        }
    }

    #[test]
    fn json_shape() {
        let c = Certificate::evaluate("t", inputs([("x", Quantity::input(1.0))]), 0.0, |v| -v["x"]).note("n");
        let j = serde_json::to_value(&c).unwrap();
        for key in ["id", "inputs", "margin", "verdict", "notes"] {
            assert!(j.get(key).is_some(), "{key}");
        }
        assert_eq!(j["verdict"], "pass");
        assert_eq!(j["inputs"]["x"]["provenance"], "input");
        let back: Certificate = serde_json::from_value(j).unwrap();
        assert_eq!(back, c);
    }
}
