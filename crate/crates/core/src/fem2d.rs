//! P1 finite elements on [`TriMesh`]: assembly of stiffness and consistent
//! mass matrices, quadrature and element gradients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{EdgeTag, Point, TriMesh};
use crate::summation::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("no free degrees of freedom")]
    NoFreeDofs,
    #[error("non-finite integrand {value} at ({x}, {y})")]
    NonFinite { value: f64, x: f64, y: f64 },
    #[error("vector length {found} does not match {expected}")]
    Length { found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Every boundary node constrained to zero.
    Dirichlet,
    /// Natural condition on the whole boundary, artificial faces included.
    Neumann,
    /// Per tag: `dirichlet`, `artificial` and the conductor tags are
    /// constrained, `neumann` and `symmetry` are natural.
    MixedByTag,
}

impl BoundaryCondition {
    pub fn constrains(&self, tag: EdgeTag) -> bool {
        match self {
            BoundaryCondition::Dirichlet => true,
            BoundaryCondition::Neumann => false,
            BoundaryCondition::MixedByTag => matches!(
                tag,
                EdgeTag::Dirichlet | EdgeTag::Artificial | EdgeTag::InnerConductor | EdgeTag::OuterConductor
            ),
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            "mixed_by_tag" | "mixed" => Ok(Self::MixedByTag),
            other => Err(format!("unknown boundary condition `{other}`")),
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
            Self::MixedByTag => "mixed_by_tag",
        })
    }
}

/// Node to degree-of-freedom numbering. Constrained nodes carry the value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub node_to_dof: Vec<Option<usize>>,
    pub dof_to_node: Vec<usize>,
    pub constrained: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &TriMesh, bc: BoundaryCondition) -> Self {
        let mut fixed = vec![false; mesh.n_nodes()];
        for e in &mesh.boundary_edges {
            if bc.constrains(e.tag) {
                fixed[e.nodes[0]] = true;
                fixed[e.nodes[1]] = true;
            }
        }
        let mut node_to_dof = vec![None; mesh.n_nodes()];
        let mut dof_to_node = Vec::new();
        let mut constrained = Vec::new();
        for (i, &f) in fixed.iter().enumerate() {
            if f {
                constrained.push(i);
            } else {
                node_to_dof[i] = Some(dof_to_node.len());
                dof_to_node.push(i);
            }
        }
        Self {
            node_to_dof,
            dof_to_node,
            constrained,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_to_dof.len()
    }

    /// Nodal values from free-dof values, zero on constrained nodes.
    pub fn expand(&self, dofs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (d, &n) in self.dof_to_node.iter().enumerate() {
            out[n] = dofs[d];
        }
        out
    }

    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_to_node.iter().map(|&n| nodal[n]).collect()
    }
}

/// Symmetric sparse matrix stored as its lower triangle in coordinate form,
/// sorted by `(row, col)` with duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparse {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SymSparse {
    /// Builds from arbitrary triplets; entries above the diagonal are
    /// mirrored into the lower triangle before merging.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for t in &mut triplets {
            if t.1 > t.0 {
                *t = (t.1, t.0, t.2);
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut rows = Vec::with_capacity(triplets.len());
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        Self { n, rows, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for k in 0..self.nnz() {
            if self.rows[k] == self.cols[k] {
                d[self.rows[k]] += self.vals[k];
            }
        }
        d
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.nnz() {
            let (r, c, v) = (self.rows[k], self.cols[k], self.vals[k]);
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = CompensatedSum::new();
        for k in 0..self.nnz() {
            let (r, c, v) = (self.rows[k], self.cols[k], self.vals[k]);
            s.add(if r == c { v * x[r] * x[r] } else { 2.0 * v * x[r] * x[c] });
        }
        s.value()
    }

    /// `A + s B`.
    pub fn add_scaled(&self, s: f64, other: &SymSparse) -> SymSparse {
        let mut t: Vec<(usize, usize, f64)> = (0..self.nnz()).map(|k| (self.rows[k], self.cols[k], self.vals[k])).collect();
        t.extend((0..other.nnz()).map(|k| (other.rows[k], other.cols[k], s * other.vals[k])));
        SymSparse::from_triplets(self.n.max(other.n), t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for k in 0..self.nnz() {
            let (r, c, v) = (self.rows[k], self.cols[k], self.vals[k]);
            d[r][c] += v;
            if r != c {
                d[c][r] += v;
            }
        }
        d
    }
}

/// Scalar function of the cross-section coordinates.
pub trait ScalarField2D {
    fn value(&self, p: Point) -> f64;
}

impl<F: Fn(Point) -> f64> ScalarField2D for F {
    fn value(&self, p: Point) -> f64 {
        self(p)
    }
}

/// Gradients of the three barycentric coordinates and the area of
/// triangle `t`.
pub fn shape_gradients(mesh: &TriMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = mesh.tris[t].map(|i| mesh.nodes[i]);
    let area = mesh.signed_area(t);
    let s = 1.0 / (2.0 * area);
    (
        [
            [(b[1] - c[1]) * s, (c[0] - b[0]) * s],
            [(c[1] - a[1]) * s, (a[0] - c[0]) * s],
            [(a[1] - b[1]) * s, (b[0] - a[0]) * s],
        ],
        area,
    )
}

/// Stiffness `K`, consistent mass `M` and the dof numbering.
pub fn assemble(mesh: &TriMesh, bc: BoundaryCondition) -> Result<(SymSparse, SymSparse, DofMap), FemError> {
    let dofs = DofMap::new(mesh, bc);
    if dofs.n_dofs() == 0 {
        return Err(FemError::NoFreeDofs);
    }
    let mut kt = Vec::with_capacity(6 * mesh.n_tris());
    let mut mt = Vec::with_capacity(6 * mesh.n_tris());
    for t in 0..mesh.n_tris() {
        let (g, area) = shape_gradients(mesh, t);
        let tri = mesh.tris[t];
        for i in 0..3 {
            let Some(di) = dofs.node_to_dof[tri[i]] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs.node_to_dof[tri[j]] else { continue };
                if dj > di {
                    continue;
                }
                let k = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                let m = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                kt.push((di, dj, k));
                mt.push((di, dj, m));
            }
        }
    }
    let n = dofs.n_dofs();
    Ok((SymSparse::from_triplets(n, kt), SymSparse::from_triplets(n, mt), dofs))
}

/// Edge-midpoint points and barycentric weights; exact for quadratics.
const EDGE_MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

fn bary_point(mesh: &TriMesh, t: usize, l: [f64; 3]) -> Point {
    let [a, b, c] = mesh.tris[t].map(|i| mesh.nodes[i]);
    [
        l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
        l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
    ]
}

/// Integral of an element-aware integrand `g(t, point, barycentric)` by the
/// three-point edge-midpoint rule, summed in element order with
/// compensation.
pub fn integrate_elementwise<G>(mesh: &TriMesh, g: G) -> Result<f64, FemError>
where
    G: Fn(usize, Point, [f64; 3]) -> f64,
{
    let mut sum = CompensatedSum::new();
    for t in 0..mesh.n_tris() {
        let w = mesh.signed_area(t) / 3.0;
        for l in EDGE_MIDPOINTS {
            let p = bary_point(mesh, t, l);
            let v = g(t, p, l);
            if !v.is_finite() {
                return Err(FemError::NonFinite { value: v, x: p[0], y: p[1] });
            }
            sum.add(w * v);
        }
    }
    Ok(sum.value())
}

/// `∫ f` over the mesh.
pub fn integrate<F: ScalarField2D + ?Sized>(mesh: &TriMesh, f: &F) -> Result<f64, FemError> {
    integrate_elementwise(mesh, |_, p, _| f.value(p))
}

/// Piecewise-linear function given by its nodal values.
#[derive(Debug, Clone)]
pub struct FEFunction {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
}

impl FEFunction {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != mesh.n_nodes() {
            return Err(FemError::Length {
                found: values.len(),
                expected: mesh.n_nodes(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn interpolate<F: ScalarField2D + ?Sized>(mesh: Arc<TriMesh>, f: &F) -> Self {
        let values = mesh.nodes.iter().map(|&p| f.value(p)).collect();
        Self { mesh, values }
    }

    pub fn value_in(&self, t: usize, bary: [f64; 3]) -> f64 {
        let tri = self.mesh.tris[t];
        bary[0] * self.values[tri[0]] + bary[1] * self.values[tri[1]] + bary[2] * self.values[tri[2]]
    }

    pub fn gradient_in(&self, t: usize) -> [f64; 2] {
        let (g, _) = shape_gradients(&self.mesh, t);
        let tri = self.mesh.tris[t];
        let mut out = [0.0; 2];
        for i in 0..3 {
            out[0] += self.values[tri[i]] * g[i][0];
            out[1] += self.values[tri[i]] * g[i][1];
        }
        out
    }

    /// Value at `p`, zero outside the mesh.
    pub fn eval(&self, p: Point) -> f64 {
        self.mesh.locate(p).map_or(0.0, |(t, l)| self.value_in(t, l))
    }

    /// Gradient at `p` (from the containing element), zero outside.
    pub fn gradient_at(&self, p: Point) -> [f64; 2] {
        self.mesh.locate(p).map_or([0.0; 2], |(t, _)| self.gradient_in(t))
    }

    /// `∫ u²`, exact.
    pub fn l2_norm_sq(&self) -> f64 {
        integrate_elementwise(&self.mesh, |t, _, l| self.value_in(t, l).powi(2)).unwrap_or(f64::NAN)
    }

    /// `∫ |∇u|²`, exact.
    pub fn energy(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for t in 0..self.mesh.n_tris() {
            let g = self.gradient_in(t);
            s.add(self.mesh.signed_area(t) * (g[0] * g[0] + g[1] * g[1]));
        }
        s.value()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

impl ScalarField2D for FEFunction {
    fn value(&self, p: Point) -> f64 {
        self.eval(p)
    }
}

/// Exact per-element gradient of `u`.
pub fn gradient(u: &FEFunction) -> Vec<[f64; 2]> {
    (0..u.mesh.n_tris()).map(|t| u.gradient_in(t)).collect()
}
