//! 1D eigenproblem `−φ″ + a²·1_{(1/2,T)} φ = λ·1_{(0,1/2)} φ` on `(0, T)`,
//! Neumann at 0 and Dirichlet at `T`, with P1 elements.

use super::EigenError;

/// Tridiagonal symmetric matrix.
#[derive(Debug, Clone)]
struct Tridiag {
    diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    off: Vec<f64>,
}

impl Tridiag {
    fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut y: Vec<f64> = (0..n).map(|i| self.diag[i] * x[i]).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// Thomas algorithm; the matrix is symmetric positive definite here.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        d[0] = b[0] / piv;
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / piv;
            piv = self.diag[i] - self.off[i - 1] * c[i - 1];
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

/// Smallest eigenvalue of the weighted 1D problem. The element size is
/// adjusted so that `1/2` is a node.
///
/// The weight on the right vanishes beyond `1/2`, so the pencil
/// `(K + a² M_out, M_in)` is solved by inverse iteration on its
/// positive-definite left matrix.
pub fn fem1d_weighted_eigs(a: f64, t: f64, h: f64) -> Result<f64, EigenError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(EigenError::Degenerate(format!("a = {a} must be positive")));
    }
    if !(t > 0.5) || !t.is_finite() {
        return Err(EigenError::Degenerate(format!("T = {t} must exceed 1/2")));
    }
    if !(h > 0.0) || h > 0.25 {
        return Err(EigenError::Degenerate(format!("h = {h} must lie in (0, 1/4]")));
    }
    let n_in = (0.5 / h).round().max(2.0) as usize;
    let n_out = ((t - 0.5) / h).ceil().max(1.0) as usize;
    let h_in = 0.5 / n_in as f64;
    let h_out = (t - 0.5) / n_out as f64;
    // nodes 0..n_in+n_out, the last one (t = T) constrained
    let n = n_in + n_out;
    let mut lhs = Tridiag::zeros(n);
    let mut rhs = Tridiag::zeros(n);
    for e in 0..n {
        let (len, inner) = if e < n_in { (h_in, true) } else { (h_out, false) };
        let k = 1.0 / len;
        let m_d = len / 3.0;
        let m_o = len / 6.0;
        let nodes = [e, e + 1];
        let (kd, ko) = (k, -k);
        let (mass_d, mass_o) = if inner { (0.0, 0.0) } else { (a * a * m_d, a * a * m_o) };
        for (li, &gi) in nodes.iter().enumerate() {
            if gi >= n {
                continue;
            }
            lhs.diag[gi] += kd + mass_d;
            if inner {
                rhs.diag[gi] += m_d;
            }
            if li == 0 && nodes[1] < n {
                lhs.off[gi] += ko + mass_o;
                if inner {
                    rhs.off[gi] += m_o;
                }
            }
        }
    }

    // elementwise from nodal differences; `uᵀ(K + a²M)u` cancels badly
    // when λ is small
    let energy = |u: &[f64]| -> f64 {
        let mut s = 0.0;
        for e in 0..n {
            let (x0, x1) = (u[e], if e + 1 < n { u[e + 1] } else { 0.0 });
            let len = if e < n_in { h_in } else { h_out };
            s += (x1 - x0).powi(2) / len;
            if e >= n_in {
                s += a * a * len * (x0 * x0 + x0 * x1 + x1 * x1) / 3.0;
            }
        }
        s
    };
    let mut u = vec![1.0; n];
    let mut lambda = f64::INFINITY;
    for _ in 0..20_000 {
        let w = lhs.solve(&rhs.matvec(&u));
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        u = w.into_iter().map(|x| x / nrm).collect();
        let num = energy(&u);
        let den: f64 = u.iter().zip(rhs.matvec(&u)).map(|(x, y)| x * y).sum();
        let next = num / den;
        if (next - lambda).abs() <= 1e-12 * next {
            return Ok(next);
        }
        lambda = next;
    }
    Err(EigenError::NotConverged {
        iterations: 20_000,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Smallest root of 2s·tan s = a on (0, π/2) by plain bisection.
    fn kappa_bisect(a: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, PI / 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * mid * mid.tan() < a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        4.0 * lo * lo
    }

    #[test]
    fn matches_transcendental_root() {
        for a in [PI, (5.0 * PI * PI).sqrt()] {
            let v = fem1d_weighted_eigs(a, 8.0, 1e-3).unwrap();
            assert!((v - kappa_bisect(a)).abs() < 1e-4, "a={a}: {v}");
        }
    }

    #[test]
    fn large_a_tends_to_dirichlet_limit() {
        let v = fem1d_weighted_eigs(1e3, 2.0, 1e-3).unwrap();
        assert!(v < PI * PI * 1.0001 && v > PI * PI * 0.99, "{v}");
    }

    #[test]
    fn small_a_is_linear() {
        let a = 0.01;
        let v = fem1d_weighted_eigs(a, 600.0, 1e-2).unwrap();
        assert!((v / (2.0 * a) - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fem1d_weighted_eigs(0.0, 8.0, 1e-3).is_err());
        assert!(fem1d_weighted_eigs(1.0, 0.5, 1e-3).is_err());
        assert!(fem1d_weighted_eigs(1.0, 8.0, 0.0).is_err());
    }
}
