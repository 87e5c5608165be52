//! Resonator criteria: a bounded cavity attached to a guide traps a mode when
//! a test-field Rayleigh quotient drops below the guide's Neumann threshold.

use std::f64::consts::PI;

use super::{inputs, invalid, CertError, Certificate, Quantity};

const PI2: f64 = PI * PI;

fn positive(name: &str, v: f64) -> Result<(), CertError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, v, "must be positive"))
    }
}

/// Cuboid resonator of side `a` and length `l`:
/// `π²/a² + π²/L² − λ_N(guide)`.
pub fn cert_cuboid(a: f64, l: f64, lambda_n_guide: Quantity) -> Result<Certificate, CertError> {
    positive("a", a)?;
    positive("L", l)?;
    positive("lambda_N_guide", lambda_n_guide.value)?;
    let c = Certificate::evaluate(
        "cuboid",
        inputs([("a", a.into()), ("L", l.into()), ("lambda_N_guide", lambda_n_guide)]),
        0.0,
        |v| PI2 / v["a"].powi(2) + PI2 / v["L"].powi(2) - v["lambda_N_guide"],
    );
    let lhs = PI2 / (a * a) + PI2 / (l * l);
    Ok(c.with_sides(lhs, lambda_n_guide.value))
}

/// Resonator with Neumann section eigenvalue `λ_N(S_R)` and length `L`:
/// `λ_N(S_R) + π²/L² − λ_N(guide)`. `higher` lists further positive
/// Neumann eigenvalues of the resonator section; each one that also clears
/// the bound adds to the guaranteed multiplicity.
pub fn cert_te_resonator(
    lambda_n_res: Quantity,
    l: f64,
    lambda_n_guide: Quantity,
    higher: &[f64],
) -> Result<Certificate, CertError> {
    positive("lambda_N_res", lambda_n_res.value)?;
    positive("L", l)?;
    positive("lambda_N_guide", lambda_n_guide.value)?;
    let c = Certificate::evaluate(
        "te_resonator",
        inputs([
            ("lambda_N_res", lambda_n_res),
            ("L", l.into()),
            ("lambda_N_guide", lambda_n_guide),
        ]),
        0.0,
        |v| v["lambda_N_res"] + PI2 / v["L"].powi(2) - v["lambda_N_guide"],
    );
    let lhs = lambda_n_res.value + PI2 / (l * l);
    let mut c = c.with_sides(lhs, lambda_n_guide.value);
    if c.passed() {
        let count = 1 + higher
            .iter()
            .filter(|&&x| x + PI2 / (l * l) < lambda_n_guide.value)
            .count();
        c = c.note(format!("discrete spectrum has total multiplicity at least {count}"));
    }
    Ok(c)
}

/// Coaxial resonator of length `L`: `π²/L² − λ_N(guide)`.
pub fn cert_tem(l: f64, lambda_n_guide: Quantity) -> Result<Certificate, CertError> {
    positive("L", l)?;
    positive("lambda_N_guide", lambda_n_guide.value)?;
    let c = Certificate::evaluate(
        "tem",
        inputs([("L", l.into()), ("lambda_N_guide", lambda_n_guide)]),
        0.0,
        |v| PI2 / v["L"].powi(2) - v["lambda_N_guide"],
    );
    Ok(c
        .with_sides(PI2 / (l * l), lambda_n_guide.value)
        .note("only the resonator length enters; the shape of the annular section is irrelevant"))
}

/// Rayleigh quotient of the TM resonator test field of length `L`.
pub fn tm_quotient(lambda_d: f64, l: f64) -> f64 {
    let num = 3.0 * l.powi(3) * lambda_d.powi(3) / (2.0 * PI2) + l * lambda_d.powi(2) + PI2 * lambda_d / (2.0 * l);
    let den = 3.0 * l.powi(3) * lambda_d.powi(2) / (2.0 * PI2) + l * lambda_d / 2.0;
    num / den
}

/// Smallest `L` with `R(L) < λ_N(guide)`, by bisection on the decreasing
/// quotient. Exists only when `λ_D(S_R) < λ_N(guide)`.
pub fn tm_min_length(lambda_d: f64, lambda_n_guide: f64) -> Result<f64, CertError> {
    positive("lambda_D_res", lambda_d)?;
    positive("lambda_N_guide", lambda_n_guide)?;
    if lambda_d >= lambda_n_guide {
        return Err(CertError::Precondition(format!(
            "no finite length: lambda_D_res = {lambda_d} >= lambda_N_guide = {lambda_n_guide}"
        )));
    }
    let f = |l: f64| tm_quotient(lambda_d, l) - lambda_n_guide;
    let mut lo = 1e-6;
    while f(lo) <= 0.0 {
        lo /= 2.0;
    }
    let mut hi = 1.0;
    while f(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(CertError::Precondition("quotient never drops below the threshold".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// TM resonator at length `L`: `R(L) − λ_N(guide)`, plus the smallest
/// admissible length.
pub fn cert_tm(lambda_d_res: Quantity, lambda_n_guide: Quantity, l: f64) -> Result<(Certificate, f64), CertError> {
    positive("L", l)?;
    let l_min = tm_min_length(lambda_d_res.value, lambda_n_guide.value)?;
    let c = Certificate::evaluate(
        "tm",
        inputs([
            ("lambda_D_res", lambda_d_res),
            ("lambda_N_guide", lambda_n_guide),
            ("L", l.into()),
        ]),
        0.0,
        |v| tm_quotient(v["lambda_D_res"], v["L"]) - v["lambda_N_guide"],
    );
    let r = tm_quotient(lambda_d_res.value, l);
    Ok((
        c.with_sides(r, lambda_n_guide.value)
            .note(format!("smallest admissible length {l_min:.6}")),
        l_min,
    ))
}

/// Domain containing a large Dirichlet resonator: `λ_D(Ω) − λ_N(guide)`.
pub fn cert_big_resonator(lambda_d_domain: Quantity, lambda_n_guide: Quantity) -> Result<Certificate, CertError> {
    positive("lambda_D_domain", lambda_d_domain.value)?;
    positive("lambda_N_guide", lambda_n_guide.value)?;
    let c = Certificate::evaluate(
        "big_resonator",
        inputs([("lambda_D_domain", lambda_d_domain), ("lambda_N_guide", lambda_n_guide)]),
        0.0,
        |v| v["lambda_D_domain"] - v["lambda_N_guide"],
    );
    Ok(c.with_sides(lambda_d_domain.value, lambda_n_guide.value))
}

/// A cube of side `a` inside the domain bounds `λ_D(Ω) ≤ 3π²/a²` by Dirichlet
/// domain monotonicity: `3π²/a² − λ_N(guide)`.
pub fn cube_inclusion(a_cube: f64, lambda_n_guide: Quantity) -> Result<Certificate, CertError> {
    positive("a_cube", a_cube)?;
    positive("lambda_N_guide", lambda_n_guide.value)?;
    let c = Certificate::evaluate(
        "cube_inclusion",
        inputs([("a_cube", a_cube.into()), ("lambda_N_guide", lambda_n_guide)]),
        0.0,
        |v| 3.0 * PI2 / v["a_cube"].powi(2) - v["lambda_N_guide"],
    );
    Ok(c
        .with_sides(3.0 * PI2 / (a_cube * a_cube), lambda_n_guide.value)
        .note("first Dirichlet eigenvalue decreases under domain inclusion"))
}
