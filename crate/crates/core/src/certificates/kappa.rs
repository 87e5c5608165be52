//! Smallest positive root of `√κ·tan(√κ/2) = a`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{invalid, CertError, Provenance, Quantity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRoot {
    pub a: f64,
    pub kappa: f64,
    /// `√κ·tan(√κ/2) − a` evaluated in the form used by the solver.
    pub residual: f64,
}

impl KappaRoot {
    pub fn quantity(&self) -> Quantity {
        // root error ≈ residual / (d/dκ of the left side), the derivative is ≥ 1/2
        Quantity::new(self.kappa, Provenance::Derived, 2.0 * self.residual.abs())
    }
}

/// Root finder in `s = √κ/2 ∈ (0, π/2)`, where `2s·tan s` increases from 0
/// to ∞. For `a ≥ 1` the unknown is `δ = π/2 − s`, which keeps full
/// relative precision near the pole.
pub fn kappa(a: f64) -> Result<KappaRoot, CertError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid("a", a, "must be positive and finite"));
    }
    if a < 1.0 {
        let g = |s: f64| 2.0 * s * s.tan() - a;
        let dg = |s: f64| 2.0 * s.tan() + 2.0 * s / s.cos().powi(2);
        let s = bracketed_root(g, dg, 0.0, FRAC_PI_2, true);
        Ok(KappaRoot {
            a,
            kappa: 4.0 * s * s,
            residual: g(s),
        })
    } else {
        let g = |d: f64| 2.0 * (FRAC_PI_2 - d) * d.cos() / d.sin() - a;
        let dg = |d: f64| {
            let (sn, cs) = d.sin_cos();
            -2.0 * cs / sn - 2.0 * (FRAC_PI_2 - d) / (sn * sn)
        };
        let d = bracketed_root(g, dg, 0.0, FRAC_PI_2, false);
        let s = FRAC_PI_2 - d;
        Ok(KappaRoot {
            a,
            kappa: (2.0 * s).powi(2),
            residual: g(d),
        })
    }
}

/// Root of a monotone `g` on `(lo, hi)`; `increasing` gives its direction.
/// Bisection to a coarse bracket, then Newton steps kept inside the bracket.
fn bracketed_root<G, D>(g: G, dg: D, mut lo: f64, mut hi: f64, increasing: bool) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let below = |v: f64| if increasing { v < 0.0 } else { v > 0.0 };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if below(g(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let v = g(x);
        if v == 0.0 {
            return x;
        }
        if below(v) {
            lo = x;
        } else {
            hi = x;
        }
        let step = v / dg(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= f64::EPSILON * x.abs() {
            break;
        }
        x = next;
    }
    // pick the better end of the final bracket
    [lo, x, hi]
        .into_iter()
        .filter(|&t| t > 0.0 && t < FRAC_PI_2)
        .min_by(|&p, &q| g(p).abs().total_cmp(&g(q).abs()))
        .unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn published_values() {
        assert!((kappa(PI).unwrap().kappa - 4.0214).abs() < 1e-3);
        assert!((kappa((5.0 * PI * PI).sqrt()).unwrap().kappa - 6.0827).abs() < 1e-3);
    }

    #[test]
    fn limits() {
        let k = kappa(1e6).unwrap().kappa;
        assert!(k < PI * PI && k > PI * PI - 1e-4);
        let k = kappa(1e-6).unwrap().kappa;
        assert!((k / 2e-6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(kappa(0.0).is_err());
        assert!(kappa(-1.0).is_err());
        assert!(kappa(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn residual_and_range(a in 1e-6f64..1e6) {
            let r = kappa(a).unwrap();
            prop_assert!(r.kappa > 0.0 && r.kappa < PI * PI);
            prop_assert!(r.residual.abs() <= 1e-12 * (1.0 + a), "a={} res={}", a, r.residual);
            // the direct form of the equation agrees to rounding of tan near the pole
            let s = r.kappa.sqrt();
            let direct = s * (s / 2.0).tan();
            prop_assert!((direct - a).abs() <= 1e-6 * (1.0 + a) * (1.0 + a));
        }

        #[test]
        fn monotone(a in 1e-3f64..1e3, f in 1.001f64..2.0) {
            prop_assert!(kappa(a).unwrap().kappa < kappa(a * f).unwrap().kappa);
        }
    }
}
