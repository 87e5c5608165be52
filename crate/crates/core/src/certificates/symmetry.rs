//! Embedded eigenvalues through a reflection symmetry: a mode trapped in
//! the half guide (with a symmetry wall) extends by reflection to an
//! eigenfunction of the full guide, whose essential spectrum starts at 0
//! when the full section is not simply connected.

use super::{Certificate, Verdict};
use crate::spectra::{classify_eigenvalue, EssentialSpectrum, SpectralClass};

pub fn embed_by_symmetry(half_cert: &Certificate, half_simply_connected: bool, full_simply_connected: bool) -> Certificate {
    let mut c = Certificate {
        id: format!("{}_embedded", half_cert.id),
        inputs: half_cert.inputs.clone(),
        lhs: half_cert.lhs,
        rhs: Some(0.0),
        margin: half_cert.margin,
        uncertainty: half_cert.uncertainty,
        verdict: Verdict::Inconclusive,
        safety_report: half_cert.safety_report.clone(),
        notes: vec![format!("derived from half-geometry certificate `{}`", half_cert.id)],
    };
    if !half_cert.passed() {
        c.notes.push(format!("half-geometry certificate did not pass ({})", half_cert.verdict));
        return c;
    }
    if !half_simply_connected {
        c.notes.push("half section must be simply connected".into());
        return c;
    }
    if full_simply_connected {
        c.notes.push("full section is simply connected, so the essential spectrum does not start at 0".into());
        return c;
    }
    let ess = EssentialSpectrum { threshold: 0.0 };
    // the Rayleigh quotient bounds the trapped eigenvalue from above and is positive
    let lambda = half_cert.lhs.unwrap_or(f64::NAN);
    match classify_eigenvalue(lambda.max(0.0), &ess) {
        SpectralClass::Embedded => {
            c.verdict = Verdict::Pass;
            c.notes.push(format!(
                "eigenvalue below {lambda:.6} is embedded in the essential spectrum [0, inf)"
            ));
        }
        SpectralClass::Discrete => c.notes.push("eigenvalue not classified as embedded".into()),
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{cert_cuboid, Quantity};
    use std::f64::consts::PI;

    #[test]
    fn cases() {
        let pass = cert_cuboid(2.0, 2.0, Quantity::analytic(PI * PI)).unwrap();
        let e = embed_by_symmetry(&pass, true, false);
        assert_eq!(e.verdict, Verdict::Pass);
        assert_eq!(embed_by_symmetry(&pass, true, true).verdict, Verdict::Inconclusive);
        let fail = cert_cuboid(1.0, 1.0, Quantity::analytic(PI * PI)).unwrap();
        assert_eq!(embed_by_symmetry(&fail, true, false).verdict, Verdict::Inconclusive);
    }
}
