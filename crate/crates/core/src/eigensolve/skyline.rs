//! Profile (skyline) LDLᵀ factorization of a symmetric sparse matrix under
//! a fill-reducing permutation.

use crate::fem2d::SymSparse;

use super::ordering::reverse_cuthill_mckee;

#[derive(Debug, Clone)]
pub struct SkylineLdl {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of row `i` in `vals`; row `i` holds columns `first[i]..i`.
    start: Vec<usize>,
    /// Strictly lower factor entries, row by row.
    vals: Vec<f64>,
    diag: Vec<f64>,
}

/// Pivot `index` (original numbering) is not positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub index: usize,
    pub pivot: f64,
}

impl SkylineLdl {
    pub fn factor(a: &SymSparse) -> Result<Self, NotPositiveDefinite> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &SymSparse, perm: Vec<usize>) -> Result<Self, NotPositiveDefinite> {
        let n = a.n;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for k in 0..a.nnz() {
            let (r, c) = (inv[a.rows[k]], inv[a.cols[k]]);
            let (hi, lo) = (r.max(c), r.min(c));
            first[hi] = first[hi].min(lo);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i];
        }
        start.push(len);
        let mut vals = vec![0.0; len];
        let mut diag = vec![0.0; n];
        for k in 0..a.nnz() {
            let (r, c) = (inv[a.rows[k]], inv[a.cols[k]]);
            let (hi, lo) = (r.max(c), r.min(c));
            if hi == lo {
                diag[hi] += a.vals[k];
            } else {
                vals[start[hi] + lo - first[hi]] += a.vals[k];
            }
        }

        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = vals.split_at_mut(start[i]);
            let row_i = &mut rest[..i - fi];
            // g_ij = a_ij - sum_k g_ik l_jk, kept in place for j < i
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &done[start[j]..start[j] + (j - fj)];
                let mut s = 0.0;
                for kk in lo..j {
                    s += row_i[kk - fi] * row_j[kk - fj];
                }
                row_i[j - fi] -= s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let g = row_i[j - fi];
                let l = g / diag[j];
                d -= g * l;
                row_i[j - fi] = l;
            }
            if !(d > 1e-14 * scale) || !d.is_finite() {
                return Err(NotPositiveDefinite { index: perm[i], pivot: d });
            }
            diag[i] = d;
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            vals,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn profile_len(&self) -> usize {
        self.vals.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let mut s = 0.0;
            for (k, l) in row.iter().enumerate() {
                s += l * y[fi + k];
            }
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            for (k, l) in row.iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_2d(m: usize) -> SymSparse {
        let id = |i: usize, j: usize| j * m + i;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i + 1 < m {
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < m {
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        SymSparse::from_triplets(m * m, t)
    }

    #[test]
    fn solves_grid_laplacian() {
        let a = laplacian_2d(12);
        let f = SkylineLdl::factor(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..a.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = a.matvec(&x);
        let y = f.solve(&b);
        let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn rejects_indefinite() {
        let a = SymSparse::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(SkylineLdl::factor(&a).is_err());
    }

    #[test]
    fn identity_permutation_matches_rcm() {
        let a = laplacian_2d(6);
        let b: Vec<f64> = (0..a.n).map(|i| i as f64).collect();
        let x1 = SkylineLdl::factor(&a).unwrap().solve(&b);
        let x2 = SkylineLdl::factor_with(&a, (0..a.n).collect()).unwrap().solve(&b);
        assert!(x1.iter().zip(&x2).all(|(p, q)| (p - q).abs() < 1e-12));
    }
}
