//! Six-legs guide (cross-shaped section in every coordinate plane): margin
//! from the 2D eigenvalue of the X-shaped section and the two Friedrichs
//! constants, and numerical checks of the supporting inequalities.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{inputs, invalid, CertError, Certificate, KappaRoot};
use crate::fem2d::{integrate_elementwise, FEFunction};

const PI2: f64 = PI * PI;

/// `λ − π² + π²λ / (κ(π)(√2π + s))` with `s = √(2κ₅)` when `sharp`, else
/// `s = √κ₅`. The second form is a weaker bound (smaller denominator) and
/// is the one used for the verdict.
pub fn sixlegs_margin(lambda: f64, kappa_pi: f64, kappa_5: f64, sharp: bool) -> f64 {
    let s = if sharp { (2.0 * kappa_5).sqrt() } else { kappa_5.sqrt() };
    lambda - PI2 + PI2 * lambda / (kappa_pi * (SQRT_2 * PI + s))
}

pub fn cert_sixlegs(
    lambda_x: super::Quantity,
    kappa_pi: &KappaRoot,
    kappa_5: &KappaRoot,
) -> Result<Certificate, CertError> {
    if !(lambda_x.value > 0.0) || lambda_x.value >= PI2 {
        return Err(invalid("lambda_X", lambda_x.value, "must lie in (0, pi^2)"));
    }
    let c = Certificate::evaluate(
        "sixlegs",
        inputs([
            ("lambda_X", lambda_x),
            ("kappa_pi", kappa_pi.quantity()),
            ("kappa_5", kappa_5.quantity()),
        ]),
        0.0,
        |v| sixlegs_margin(v["lambda_X"], v["kappa_pi"], v["kappa_5"], false),
    );
    let sharp = sixlegs_margin(lambda_x.value, kappa_pi.kappa, kappa_5.kappa, true);
    let lhs = lambda_x.value + PI2 * lambda_x.value / (kappa_pi.kappa * (SQRT_2 * PI + kappa_5.kappa.sqrt()));
    Ok(c.with_sides(lhs, PI2)
        .note("margin uses sqrt(kappa_5) in the trace constant, a weaker bound than sqrt(2 kappa_5)")
        .note(format!("margin with sqrt(2 kappa_5): {sharp:.6}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SixLegsLemmaReport {
    /// `∫_□ φ²` over the central square.
    pub square_l2: f64,
    /// `∫_X |∇φ|²`.
    pub energy: f64,
    /// `energy / (2κ(π))`.
    pub bound: f64,
    /// `bound − square_l2`.
    pub slack: f64,
    /// `slack / bound`.
    pub relative_slack: f64,
    pub holds: bool,
}

/// Checks `∫_□ φ² ≤ (2κ(π))⁻¹ ∫_X |∇φ|²` for a function on a truncated X
/// mesh; `□ = (−1/2, 1/2)²`.
pub fn lemma_checks_sixlegs(phi: &FEFunction, kappa_pi: &KappaRoot) -> Result<SixLegsLemmaReport, CertError> {
    let mesh = &phi.mesh;
    let inside = |t: usize| {
        let c = mesh.centroid(t);
        c[0].abs() < 0.5 && c[1].abs() < 0.5
    };
    let square_l2 = integrate_elementwise(mesh, |t, _, l| if inside(t) { phi.value_in(t, l).powi(2) } else { 0.0 })?;
    let energy = phi.energy();
    let bound = energy / (2.0 * kappa_pi.kappa);
    let slack = bound - square_l2;
    Ok(SixLegsLemmaReport {
        square_l2,
        energy,
        bound,
        slack,
        relative_slack: if bound > 0.0 { slack / bound } else { 0.0 },
        holds: slack > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Friedrichs1dReport {
    pub samples: usize,
    /// Smallest `(rhs − lhs)/rhs` over the samples.
    pub min_relative_slack: f64,
    pub holds: bool,
}

/// Samples random smooth decaying `φ(t) = p(t)·e^{−rt}` (random cubic `p`,
/// random rate) and checks
/// `κ(a)∫₀^{1/2} φ² ≤ ∫₀^∞ φ′² + a²∫_{1/2}^∞ φ²`.
pub fn friedrichs_1d_check(root: &KappaRoot, samples: usize, seed: u64) -> Friedrichs1dReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a2 = root.a * root.a;
    let mut min_slack = f64::INFINITY;
    for _ in 0..samples {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let r = rng.random_range(0.2..4.0);
        let f = |t: f64| (c[0] + t * (c[1] + t * (c[2] + t * c[3]))) * (-r * t).exp();
        let df = |t: f64| {
            let p = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
            let dp = c[1] + t * (2.0 * c[2] + 3.0 * t * c[3]);
            (dp - r * p) * (-r * t).exp()
        };
        let end = 0.5 + 60.0 / r;
        let inner = simpson(|t| f(t).powi(2), 0.0, 0.5, 2000);
        let outer = simpson(|t| f(t).powi(2), 0.5, end, 20000);
        let grad = simpson(|t| df(t).powi(2), 0.0, 0.5, 2000) + simpson(|t| df(t).powi(2), 0.5, end, 20000);
        let lhs = root.kappa * inner;
        let rhs = grad + a2 * outer;
        min_slack = min_slack.min((rhs - lhs) / rhs);
    }
    Friedrichs1dReport {
        samples,
        min_relative_slack: min_slack,
        holds: min_slack >= -1e-10,
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
