//! Tripode guide (three half-infinite square branches meeting at a cube):
//! Fourier-series constants built from the L-shaped section eigenvalue and
//! the resulting bound on the energy quotient.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::{inputs, invalid, CertError, Certificate, Quantity, Verdict};
use crate::fem2d::{integrate_elementwise, FEFunction};
use crate::summation::CompensatedSum;

const PI2: f64 = PI * PI;

/// Default number of series terms.
pub const DEFAULT_SERIES_TERMS: usize = 10_000;

/// Number of leading `q(n)` values kept in the report.
const Q_REPORTED: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripodeConstants {
    pub lambda: f64,
    /// `3(λ − π²)`.
    pub c1: f64,
    /// `3(λ − π²) + 12√2π/(8 + √2)`.
    pub c2: f64,
    /// Partial sum of `Σ 2n²π²/((n²+1)π² − λ)²` up to `n_terms`.
    pub c_square: f64,
    /// Bound on the omitted tail, `2/(π²N)`.
    pub c_square_tail: f64,
    pub n_terms: usize,
    /// `4C₁ + C₂`; must be negative.
    pub precondition: f64,
    /// `q(n)` for `n = 1..` (first few, with `C_□` replaced by its upper bound).
    pub q: Vec<f64>,
    /// `max_{n ≤ N} q(n)`.
    pub q_max: f64,
    pub q_argmax: usize,
    /// `2C_□C₂ − 6`, the `n → ∞` limit of `q(n)`.
    pub tail_limit: f64,
    /// Upper bound of `q(n)` over `n > N`.
    pub tail_bound: f64,
    /// `max(q_max, tail_bound)`.
    pub sup_bound: f64,
    /// `C₁/β_n + C₂e^{2β_n}/(4 sinh²(β_n) β_n)` at `n = 1`.
    pub exp_term_first: f64,
    /// Number of `n ≤ N` where that term is positive.
    pub exp_term_positive: usize,
}

fn beta(n: usize, lambda: f64) -> f64 {
    ((n * n) as f64 * PI2 - lambda).sqrt()
}

/// `(e^{2β} − e^{−2β} − 4β)/(4 sinh²(β) β)`, written as
/// `coth(β)/β − 1/sinh²(β)`.
fn h(beta: f64) -> f64 {
    1.0 / (beta * beta.tanh()) - 1.0 / beta.sinh().powi(2)
}

fn c_square_partial(lambda: f64, n: usize) -> f64 {
    // smallest terms first
    let mut s = CompensatedSum::new();
    for k in (1..=n).rev() {
        let kf = k as f64;
        s.add(2.0 * kf * kf * PI2 / ((kf * kf + 1.0) * PI2 - lambda).powi(2));
    }
    s.value()
}

pub fn tripode_constants(lambda: f64, n_terms: usize) -> Result<TripodeConstants, CertError> {
    if !(lambda > 0.0) || lambda >= PI2 {
        return Err(invalid("lambda_L", lambda, "must lie in (0, pi^2)"));
    }
    if n_terms < 10 {
        return Err(invalid("N", n_terms as f64, "at least 10 series terms"));
    }
    let c1 = 3.0 * (lambda - PI2);
    let c2 = c1 + 12.0 * SQRT_2 * PI / (8.0 + SQRT_2);
    let c_square = c_square_partial(lambda, n_terms);
    let c_square_tail = 2.0 / (PI2 * n_terms as f64);
    let c_up = c_square + c_square_tail;
    let q_of = |n: usize| {
        let b = beta(n, lambda);
        c1 / b + c2 * (2.0 * c_up + h(b)) - 6.0
    };
    let exp_term = |n: usize| {
        let b = beta(n, lambda);
        (c1 + c2 / (1.0 - (-2.0 * b).exp()).powi(2)) / b
    };
    let mut q = Vec::with_capacity(Q_REPORTED);
    let (mut q_max, mut q_argmax) = (f64::NEG_INFINITY, 0);
    let mut exp_term_positive = 0;
    for n in 1..=n_terms {
        let v = q_of(n);
        if n <= Q_REPORTED {
            q.push(v);
        }
        if v > q_max {
            q_max = v;
            q_argmax = n;
        }
        if exp_term(n) > 0.0 {
            exp_term_positive += 1;
        }
    }
    // n > N: C₁/β_n < 0 is dropped, h decreases in β and β_n increases in n
    let tail_bound = c2 * (2.0 * c_up + h(beta(n_terms, lambda))) - 6.0;
    Ok(TripodeConstants {
        lambda,
        c1,
        c2,
        c_square,
        c_square_tail,
        n_terms,
        precondition: 4.0 * c1 + c2,
        q,
        q_max,
        q_argmax,
        tail_limit: 2.0 * c_square * c2 - 6.0,
        tail_bound,
        sup_bound: q_max.max(tail_bound),
        exp_term_first: exp_term(1),
        exp_term_positive,
    })
}

/// Margin `sup_n q(n)` (bounded over `n ≤ N` exactly and beyond `N` by the
/// tail bound). Requires `4C₁ + C₂ < 0`, otherwise inconclusive.
pub fn cert_tripode(lambda_l: Quantity, n_terms: usize) -> Result<(TripodeConstants, Certificate), CertError> {
    let k = tripode_constants(lambda_l.value, n_terms)?;
    let c = Certificate::evaluate("tripode", inputs([("lambda_L", lambda_l)]), 0.0, |v| {
        tripode_constants(v["lambda_L"], n_terms).map_or(f64::NAN, |k| k.sup_bound)
    });
    let mut c = c
        .with_sides(k.sup_bound + 6.0, 6.0)
        .note(format!(
            "sup q(n) attained at n = {} (q = {:.6}); n -> infinity limit 2 C_sq C2 - 6 = {:.6}",
            k.q_argmax, k.q_max, k.tail_limit
        ))
        .note(format!(
            "terms n > {} bounded by dropping C1/beta_n < 0 and freezing the decreasing beta term at n = {}",
            n_terms, n_terms
        ))
        .note(format!(
            "C1/beta_n + C2 e^(2 beta_n)/(4 sinh^2(beta_n) beta_n) is positive for {} of {} indices (n = 1: {:.6}); q(n) is evaluated exactly instead",
            k.exp_term_positive, n_terms, k.exp_term_first
        ));
    if k.precondition >= 0.0 {
        c = c.override_verdict(
            Verdict::Inconclusive,
            format!("precondition 4 C1 + C2 < 0 violated ({:.6})", k.precondition),
        );
    }
    Ok((k, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripodeIdentityReport {
    /// `max|φ(x,y) − φ(y,x)| / max|φ|` before symmetrization.
    pub symmetry_deviation: f64,
    /// Same after symmetrization.
    pub symmetrized_deviation: f64,
    /// `min φ / max|φ|` of the symmetrized function.
    pub min_relative_value: f64,
    pub norm_l: f64,
    pub norm_lplus: f64,
    pub norm_square: f64,
    /// `|‖φ‖²_L − 2‖φ‖²_{L+} − ‖φ‖²_□|`.
    pub decomposition_residual: f64,
    /// `∫₀¹ φ(1, y)² dy`.
    pub edge_trace: f64,
    /// `2C₁‖φ‖²_{L+} + C₂‖φ‖²_□ − 6∫φ(1,y)²` for the given constants.
    pub energy_bound: Option<f64>,
}

/// Checks, on a function over the truncated L-shaped section (corner square
/// `(0,1)²`, arms along `+x` and `+y`), the reflection symmetry, positivity
/// and the L² decomposition across the diagonal.
pub fn tripode_energy_identity_check(
    phi: &FEFunction,
    constants: Option<&TripodeConstants>,
) -> Result<TripodeIdentityReport, CertError> {
    let mesh = &phi.mesh;
    let key = |p: [f64; 2]| (p[0].to_bits(), p[1].to_bits());
    let index: HashMap<(u64, u64), usize> = mesh.nodes.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
    let scale = phi.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return Err(CertError::Precondition("function vanishes identically".into()));
    }
    let mut dev: f64 = 0.0;
    let mut sym = phi.values.clone();
    for (i, p) in mesh.nodes.iter().enumerate() {
        let swapped = match index.get(&key([p[1], p[0]])) {
            Some(&j) => phi.values[j],
            None => phi.eval([p[1], p[0]]),
        };
        dev = dev.max((phi.values[i] - swapped).abs());
        sym[i] = 0.5 * (phi.values[i] + swapped);
    }
    let sym_phi = FEFunction::new(mesh.clone(), sym)?;
    let mut sym_dev: f64 = 0.0;
    for p in &mesh.nodes {
        if let (Some(&i), Some(&j)) = (index.get(&key(*p)), index.get(&key([p[1], p[0]]))) {
            sym_dev = sym_dev.max((sym_phi.values[i] - sym_phi.values[j]).abs());
        }
    }
    let min_val = sym_phi.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));

    let region = |t: usize| {
        let c = mesh.centroid(t);
        if c[0] < 1.0 && c[1] < 1.0 {
            0
        } else if c[0] > 1.0 {
            1
        } else {
            2
        }
    };
    let norm_on = |want: Option<u8>| {
        integrate_elementwise(mesh, |t, _, l| {
            if want.is_none_or(|w| region(t) == w) {
                sym_phi.value_in(t, l).powi(2)
            } else {
                0.0
            }
        })
    };
    let norm_l = norm_on(None)?;
    let norm_square = norm_on(Some(0))?;
    let norm_lplus = norm_on(Some(1))?;

    // φ is linear between consecutive nodes of the grid line x = 1
    let mut edge: Vec<(f64, f64)> = mesh
        .nodes
        .iter()
        .zip(&sym_phi.values)
        .filter(|(p, _)| p[0] == 1.0 && p[1] >= 0.0 && p[1] <= 1.0)
        .map(|(p, &v)| (p[1], v))
        .collect();
    edge.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut trace = CompensatedSum::new();
    for w in edge.windows(2) {
        let ((y0, a), (y1, b)) = (w[0], w[1]);
        trace.add((y1 - y0) / 3.0 * (a * a + a * b + b * b));
    }
    let edge_trace = trace.value();

    Ok(TripodeIdentityReport {
        symmetry_deviation: dev / scale,
        symmetrized_deviation: sym_dev / scale,
        min_relative_value: min_val / scale,
        norm_l,
        norm_lplus,
        norm_square,
        decomposition_residual: (norm_l - 2.0 * norm_lplus - norm_square).abs(),
        edge_trace,
        energy_bound: constants.map(|k| 2.0 * k.c1 * norm_lplus + k.c2 * norm_square - 6.0 * edge_trace),
    })
}
