//! Explicit guided modes, trapped-mode fields and resonator test fields as
//! samplable 3D vector fields, with finite-difference Rayleigh quotients and
//! Maxwell residuals.
//!
//! A [`VectorField3`] keeps its smooth closed form separate from its support
//! indicator. Sampling applies the indicator (zero extension); derivatives
//! are taken on the smooth formula, so stencils never straddle the jump.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::eigensolve::SkylineLdl;
use crate::fem2d::{assemble, BoundaryCondition, FEFunction, FemError, SymSparse};
use crate::geometry::{EdgeTag, Point, Rect, TriMesh};
use crate::summation::CompensatedSum;

pub type C64 = Complex64;
pub type Vec3 = [C64; 3];

type Formula = Arc<dyn Fn([f64; 3]) -> Vec3 + Send + Sync>;
type Indicator3 = Arc<dyn Fn([f64; 3]) -> bool + Send + Sync>;
type Indicator2 = Arc<dyn Fn(Point) -> bool + Send + Sync>;
type Scalar2 = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type Gradient2 = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

pub const DEFAULT_H_FD: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ModeError {
    #[error("invalid {name} = {value}: {reason}")]
    Invalid { name: &'static str, value: f64, reason: &'static str },
    #[error("mesh has no boundary edges tagged {0}")]
    MissingTag(EdgeTag),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("Rayleigh quotient denominator vanishes")]
    ZeroDenominator,
    #[error("field has no bounded quadrature box")]
    Unbounded,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ModeError {
    ModeError::Invalid { name, value, reason }
}

/// Declared support of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// Zero outside the box `lo..hi`.
    Bounded { lo: [f64; 3], hi: [f64; 3] },
    /// `|E| ≤ C e^{−rate |s|}` along `axis`, bounded across it.
    Decaying { axis: usize, rate: f64 },
    /// Propagating or z-independent.
    Unbounded,
}

#[derive(Clone)]
pub struct VectorField3 {
    pub name: String,
    formula: Formula,
    region: Option<Indicator3>,
    pub support: Support,
}

impl std::fmt::Debug for VectorField3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField3")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("zero_extended", &self.region.is_some())
            .finish()
    }
}

impl VectorField3 {
    pub fn new<F>(name: impl Into<String>, formula: F, support: Support) -> Self
    where
        F: Fn([f64; 3]) -> Vec3 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            formula: Arc::new(formula),
            region: None,
            support,
        }
    }

    /// Zero outside `region`.
    pub fn with_region<R>(mut self, region: R) -> Self
    where
        R: Fn([f64; 3]) -> bool + Send + Sync + 'static,
    {
        self.region = Some(Arc::new(region));
        self
    }

    pub fn in_region(&self, p: [f64; 3]) -> bool {
        self.region.as_ref().is_none_or(|r| r(p))
    }

    /// Zero-extended value.
    pub fn eval(&self, p: [f64; 3]) -> Vec3 {
        if self.in_region(p) {
            (self.formula)(p)
        } else {
            [C64::new(0.0, 0.0); 3]
        }
    }

    /// Smooth closed form, ignoring the support indicator.
    pub fn eval_formula(&self, p: [f64; 3]) -> Vec3 {
        (self.formula)(p)
    }

    pub fn is_real(&self, p: [f64; 3]) -> bool {
        self.eval(p).iter().all(|c| c.im == 0.0)
    }
}

fn shift(p: [f64; 3], axis: usize, d: f64) -> [f64; 3] {
    let mut q = p;
    q[axis] += d;
    q
}

/// `∂_axis` of component `comp` by central differences of `f`.
fn partial<F: Fn([f64; 3]) -> Vec3>(f: &F, p: [f64; 3], axis: usize, h: f64) -> Vec3 {
    let a = f(shift(p, axis, h));
    let b = f(shift(p, axis, -h));
    std::array::from_fn(|c| (a[c] - b[c]) / (2.0 * h))
}

/// Central-difference curl of `f` at `p`.
pub fn curl_fd<F: Fn([f64; 3]) -> Vec3>(f: &F, p: [f64; 3], h: f64) -> Vec3 {
    let dx = partial(f, p, 0, h);
    let dy = partial(f, p, 1, h);
    let dz = partial(f, p, 2, h);
    [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]]
}

/// Central-difference divergence of `f` at `p`.
pub fn div_fd<F: Fn([f64; 3]) -> Vec3>(f: &F, p: [f64; 3], h: f64) -> C64 {
    partial(f, p, 0, h)[0] + partial(f, p, 1, h)[1] + partial(f, p, 2, h)[2]
}

fn norm_sq(v: &Vec3) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn cross_real(a: &Vec3, n: [f64; 3]) -> Vec3 {
    [a[1] * n[2] - a[2] * n[1], a[2] * n[0] - a[0] * n[2], a[0] * n[1] - a[1] * n[0]]
}

/// Cross-section profile `φ(s, t)` with its gradient.
#[derive(Clone)]
pub struct Profile2D {
    value: Scalar2,
    grad: Gradient2,
    domain: Option<Indicator2>,
    /// Bounding box of the section, when bounded.
    pub bounds: Option<Rect>,
}

impl std::fmt::Debug for Profile2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile2D").field("bounds", &self.bounds).finish()
    }
}

impl Profile2D {
    pub fn closed<V, G>(value: V, grad: G) -> Self
    where
        V: Fn(Point) -> f64 + Send + Sync + 'static,
        G: Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            grad: Arc::new(grad),
            domain: None,
            bounds: None,
        }
    }

    pub fn on_rect(mut self, r: Rect) -> Self {
        self.bounds = Some(r);
        self.domain = Some(Arc::new(move |p| r.contains_closed(p)));
        self
    }

    pub fn with_domain<D>(mut self, bounds: Rect, domain: D) -> Self
    where
        D: Fn(Point) -> bool + Send + Sync + 'static,
    {
        self.bounds = Some(bounds);
        self.domain = Some(Arc::new(domain));
        self
    }

    /// P1 interpolant; gradients are elementwise constant, so FD second
    /// derivatives of the resulting fields are meaningless.
    pub fn from_fe(u: &FEFunction) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &u.mesh.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let (a, b, c) = (u.clone(), u.clone(), u.mesh.clone());
        Self {
            value: Arc::new(move |p| a.eval(p)),
            grad: Arc::new(move |p| b.gradient_at(p)),
            domain: Some(Arc::new(move |p| c.locate(p).is_some())),
            bounds: Rect::new(lo[0], lo[1], hi[0], hi[1]).ok(),
        }
    }

    /// Potential of a circular coaxial capacitor, 1 on `r = r_in`, 0 on
    /// `r = r_out`, centred at the origin.
    pub fn coaxial(r_in: f64, r_out: f64) -> Result<Self, ModeError> {
        if !(r_in > 0.0 && r_out > r_in) {
            return Err(invalid("r_in", r_in, "need 0 < r_in < r_out"));
        }
        let c = 1.0 / (r_in / r_out).ln();
        let bounds = Rect::new(-r_out, -r_out, r_out, r_out).map_err(|_| invalid("r_out", r_out, "bad bounds"))?;
        Ok(Self::closed(
            move |p: Point| c * (p[0].hypot(p[1]) / r_out).ln(),
            move |p: Point| {
                let r2 = p[0] * p[0] + p[1] * p[1];
                [c * p[0] / r2, c * p[1] / r2]
            },
        )
        .with_domain(bounds, move |p| {
            let r = p[0].hypot(p[1]);
            r > r_in && r < r_out
        }))
    }

    pub fn value(&self, p: Point) -> f64 {
        (self.value)(p)
    }

    pub fn grad(&self, p: Point) -> [f64; 2] {
        (self.grad)(p)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.domain.as_ref().is_none_or(|d| d(p))
    }
}

/// `e^{i s β z}` with `β` the principal root of `λ − cutoff`; below cutoff
/// this is the decaying exponential `e^{−s√(cutoff−λ) z}`.
fn propagation(lambda: f64, cutoff: f64) -> C64 {
    C64::new(lambda - cutoff, 0.0).sqrt()
}

fn z_support(beta: C64) -> Support {
    if beta.im > 0.0 {
        Support::Decaying { axis: 2, rate: beta.im }
    } else {
        Support::Unbounded
    }
}

fn sign_of(sign: i8) -> f64 {
    if sign < 0 {
        -1.0
    } else {
        1.0
    }
}

/// TE mode `((∂_yφ_N, −∂_xφ_N), 0) e^{±iβ_N z}`.
pub fn te_mode(phi_n: &Profile2D, lambda_n: f64, lambda: f64, sign: i8) -> Result<VectorField3, ModeError> {
    if !(lambda_n > 0.0) {
        return Err(invalid("lambda_N", lambda_n, "must be positive"));
    }
    let beta = propagation(lambda, lambda_n);
    let s = sign_of(sign);
    let phi = phi_n.clone();
    Ok(VectorField3::new(
        format!("te_mode{}", if s > 0.0 { "+" } else { "-" }),
        move |p| {
            let g = phi.grad([p[0], p[1]]);
            let e = (C64::i() * s * beta * p[2]).exp();
            [e * g[1], -e * g[0], C64::new(0.0, 0.0)]
        },
        z_support(beta),
    ))
}

/// TM mode `(∇φ_D, ∓iβ_D⁻¹λ_Dφ_D) e^{±iβ_D z}`.
pub fn tm_mode(phi_d: &Profile2D, lambda_d: f64, lambda: f64, sign: i8) -> Result<VectorField3, ModeError> {
    if !(lambda_d > 0.0) {
        return Err(invalid("lambda_D", lambda_d, "must be positive"));
    }
    if lambda == lambda_d {
        return Err(invalid("lambda", lambda, "equals lambda_D, where the longitudinal factor is singular"));
    }
    let beta = propagation(lambda, lambda_d);
    let s = sign_of(sign);
    let phi = phi_d.clone();
    Ok(VectorField3::new(
        format!("tm_mode{}", if s > 0.0 { "+" } else { "-" }),
        move |p| {
            let q = [p[0], p[1]];
            let g = phi.grad(q);
            let e = (C64::i() * s * beta * p[2]).exp();
            let ez = -C64::i() * s * lambda_d * phi.value(q) / beta;
            [e * g[0], e * g[1], e * ez]
        },
        z_support(beta),
    ))
}

/// TEM mode `(∇φ, 0) e^{±i√λ z}`.
pub fn tem_mode(phi: &Profile2D, lambda: f64, sign: i8) -> Result<VectorField3, ModeError> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", lambda, "must be positive"));
    }
    let k = lambda.sqrt() * sign_of(sign);
    let phi = phi.clone();
    Ok(VectorField3::new(
        "tem_mode",
        move |p| {
            let g = phi.grad([p[0], p[1]]);
            let e = C64::new(0.0, k * p[2]).exp();
            [e * g[0], e * g[1], C64::new(0.0, 0.0)]
        },
        Support::Unbounded,
    ))
}

/// Potential between the inner and outer conductors of an annular section.
#[derive(Debug, Clone)]
pub struct CapacitorPotential {
    pub phi: FEFunction,
    /// `∫|∇φ|²`.
    pub energy: f64,
    /// Max-norm of the discrete Laplace residual at free nodes.
    pub residual: f64,
}

impl CapacitorPotential {
    pub fn profile(&self) -> Profile2D {
        Profile2D::from_fe(&self.phi)
    }
}

/// P1 solve of `Δφ = 0`, `φ = 1` on the inner conductor and `φ = 0` on the
/// outer conductor.
pub fn capacitor_potential(mesh: Arc<TriMesh>) -> Result<CapacitorPotential, ModeError> {
    let n = mesh.n_nodes();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut seen = [false; 2];
    for e in &mesh.boundary_edges {
        let v = match e.tag {
            EdgeTag::InnerConductor => {
                seen[0] = true;
                1.0
            }
            EdgeTag::OuterConductor => {
                seen[1] = true;
                0.0
            }
            _ => continue,
        };
        for &i in &e.nodes {
            // a node touching both conductors keeps the outer value
            if fixed[i] != Some(0.0) {
                fixed[i] = Some(v);
            }
        }
    }
    if !seen[0] {
        return Err(ModeError::MissingTag(EdgeTag::InnerConductor));
    }
    if !seen[1] {
        return Err(ModeError::MissingTag(EdgeTag::OuterConductor));
    }
    let (k, _, _) = assemble(&mesh, BoundaryCondition::Neumann)?;
    let mut free_index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for i in 0..n {
        if fixed[i].is_none() {
            free_index[i] = free.len();
            free.push(i);
        }
    }
    let mut values: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    if !free.is_empty() {
        let mut trip = Vec::new();
        let mut rhs = vec![0.0; free.len()];
        for idx in 0..k.nnz() {
            let (r, c, v) = (k.rows[idx], k.cols[idx], k.vals[idx]);
            match (free_index[r] != usize::MAX, free_index[c] != usize::MAX) {
                (true, true) => trip.push((free_index[r], free_index[c], v)),
                (true, false) => rhs[free_index[r]] -= v * values[c],
                (false, true) => rhs[free_index[c]] -= v * values[r],
                (false, false) => {}
            }
        }
        let kff = SymSparse::from_triplets(free.len(), trip);
        let ldl = SkylineLdl::factor(&kff).map_err(|e| ModeError::Solver(format!("{e:?}")))?;
        let u = ldl.solve(&rhs);
        for (j, &i) in free.iter().enumerate() {
            values[i] = u[j];
        }
    }
    let ku = k.matvec(&values);
    let residual = free.iter().map(|&i| ku[i].abs()).fold(0.0, f64::max);
    let energy = k.quad_form(&values);
    Ok(CapacitorPotential {
        phi: FEFunction::new(mesh, values)?,
        energy,
        residual,
    })
}

/// Field in a guide along `x` with section coordinates `(y, z)`, built from
/// a Dirichlet eigenfunction `−Δφ = λ•φ`:
/// `(cos(mπx/a)φ, −(mπ/(aλ•)) sin(mπx/a)∇φ)`, eigenvalue `λ• + m²π²/a²`.
pub fn trapped_mode_dirichlet(phi: &Profile2D, lambda_bullet: f64, m: u32, a: f64) -> Result<(VectorField3, f64), ModeError> {
    if !(lambda_bullet > 0.0) {
        return Err(invalid("lambda_bullet", lambda_bullet, "must be positive"));
    }
    if !(a > 0.0) {
        return Err(invalid("a", a, "must be positive"));
    }
    let k = m as f64 * PI / a;
    let c = k / lambda_bullet;
    let phi = phi.clone();
    let field = VectorField3::new(
        format!("trapped_dirichlet_m{m}"),
        move |p| {
            let q = [p[1], p[2]];
            let g = phi.grad(q);
            let (s, co) = (k * p[0]).sin_cos();
            [
                C64::new(co * phi.value(q), 0.0),
                C64::new(-c * s * g[0], 0.0),
                C64::new(-c * s * g[1], 0.0),
            ]
        },
        Support::Unbounded,
    );
    Ok((field, lambda_bullet + k * k))
}

/// Field in a guide along `x` from a Neumann eigenfunction:
/// `(0, sin(mπx/a)∂_zφ, −sin(mπx/a)∂_yφ)`, eigenvalue `λ• + m²π²/a²`.
pub fn trapped_mode_neumann(phi: &Profile2D, lambda_bullet: f64, m: u32, a: f64) -> Result<(VectorField3, f64), ModeError> {
    if m == 0 {
        return Err(invalid("m", 0.0, "m = 0 gives the null field"));
    }
    if !(lambda_bullet >= 0.0) {
        return Err(invalid("lambda_bullet", lambda_bullet, "must be nonnegative"));
    }
    if !(a > 0.0) {
        return Err(invalid("a", a, "must be positive"));
    }
    let k = m as f64 * PI / a;
    let phi = phi.clone();
    let field = VectorField3::new(
        format!("trapped_neumann_m{m}"),
        move |p| {
            let g = phi.grad([p[1], p[2]]);
            let s = (k * p[0]).sin();
            [C64::new(0.0, 0.0), C64::new(s * g[1], 0.0), C64::new(-s * g[0], 0.0)]
        },
        Support::Unbounded,
    );
    Ok((field, lambda_bullet + k * k))
}

/// Resonator test fields, supported in `section × (−L, 0)` and zero in the
/// guide `z > 0`.
#[derive(Debug, Clone)]
pub enum TestFieldKind {
    /// `(0, cos(πx/a) sin(πz/L), 0)` on `(−a/2, a/2) × (−b/2, b/2) × (−L, 0)`.
    CuboidTe { a: f64, b: f64, l: f64 },
    /// `(curl₂φ_N, 0) sin(πz/L)`.
    TeResonator { phi_n: Profile2D, l: f64 },
    /// `(∇φ, 0) sin(πz/L)` with `φ` the capacitor potential.
    TemResonator { phi: Profile2D, l: f64 },
    /// `(∇φ_D sin(πz/L), αφ_D(1 − cos(πz/L)))`, `α = Lλ_D/π`.
    TmResonator { phi_d: Profile2D, lambda_d: f64, l: f64 },
}

fn section_box(phi: &Profile2D, l: f64) -> Result<Support, ModeError> {
    let r = phi.bounds.ok_or(ModeError::Unbounded)?;
    Ok(Support::Bounded {
        lo: [r.x0, r.y0, -l],
        hi: [r.x1, r.y1, 0.0],
    })
}

fn check_length(l: f64) -> Result<(), ModeError> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(invalid("L", l, "must be positive"))
    }
}

pub fn testfield(kind: &TestFieldKind) -> Result<VectorField3, ModeError> {
    let zero = C64::new(0.0, 0.0);
    match kind.clone() {
        TestFieldKind::CuboidTe { a, b, l } => {
            if !(a > 0.0) {
                return Err(invalid("a", a, "must be positive"));
            }
            if !(b > 0.0) {
                return Err(invalid("b", b, "must be positive"));
            }
            check_length(l)?;
            let (ka, kz) = (PI / a, PI / l);
            Ok(VectorField3::new(
                "cuboid_te",
                move |p| [zero, C64::new((ka * p[0]).cos() * (kz * p[2]).sin(), 0.0), zero],
                Support::Bounded {
                    lo: [-a / 2.0, -b / 2.0, -l],
                    hi: [a / 2.0, b / 2.0, 0.0],
                },
            )
            .with_region(move |p| p[0].abs() < a / 2.0 && p[1].abs() < b / 2.0 && p[2] > -l && p[2] < 0.0))
        }
        TestFieldKind::TeResonator { phi_n, l } => {
            check_length(l)?;
            let support = section_box(&phi_n, l)?;
            let kz = PI / l;
            let (f, d) = (phi_n.clone(), phi_n);
            Ok(VectorField3::new(
                "te_resonator",
                move |p| {
                    let g = f.grad([p[0], p[1]]);
                    let s = (kz * p[2]).sin();
                    [C64::new(g[1] * s, 0.0), C64::new(-g[0] * s, 0.0), zero]
                },
                support,
            )
            .with_region(move |p| p[2] > -l && p[2] < 0.0 && d.contains([p[0], p[1]])))
        }
        TestFieldKind::TemResonator { phi, l } => {
            check_length(l)?;
            let support = section_box(&phi, l)?;
            let kz = PI / l;
            let (f, d) = (phi.clone(), phi);
            Ok(VectorField3::new(
                "tem_resonator",
                move |p| {
                    let g = f.grad([p[0], p[1]]);
                    let s = (kz * p[2]).sin();
                    [C64::new(g[0] * s, 0.0), C64::new(g[1] * s, 0.0), zero]
                },
                support,
            )
            .with_region(move |p| p[2] > -l && p[2] < 0.0 && d.contains([p[0], p[1]])))
        }
        TestFieldKind::TmResonator { phi_d, lambda_d, l } => {
            check_length(l)?;
            if !(lambda_d > 0.0) {
                return Err(invalid("lambda_D", lambda_d, "must be positive"));
            }
            let support = section_box(&phi_d, l)?;
            let kz = PI / l;
            let alpha = l * lambda_d / PI;
            let (f, d) = (phi_d.clone(), phi_d);
            Ok(VectorField3::new(
                "tm_resonator",
                move |p| {
                    let q = [p[0], p[1]];
                    let g = f.grad(q);
                    let (s, c) = (kz * p[2]).sin_cos();
                    [
                        C64::new(g[0] * s, 0.0),
                        C64::new(g[1] * s, 0.0),
                        C64::new(alpha * f.value(q) * (1.0 - c), 0.0),
                    ]
                },
                support,
            )
            .with_region(move |p| p[2] > -l && p[2] < 0.0 && d.contains([p[0], p[1]])))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighQuotient {
    pub value: f64,
    /// `|q_n − q_{n/2}|` plus the truncated tail for decaying fields.
    pub error: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Midpoint tensor grid on a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl QuadratureGrid {
    pub fn for_support(support: &Support, n: [usize; 3]) -> Result<Self, ModeError> {
        match *support {
            Support::Bounded { lo, hi } => Ok(Self { lo, hi, n }),
            _ => Err(ModeError::Unbounded),
        }
    }

    fn coarsened(&self) -> Self {
        Self {
            n: self.n.map(|k| (k / 2).max(1)),
            ..*self
        }
    }

    fn cell_volume(&self) -> f64 {
        (0..3).map(|k| (self.hi[k] - self.lo[k]) / self.n[k] as f64).product()
    }

    fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let idx = [i, j, k];
        std::array::from_fn(|a| self.lo[a] + (idx[a] as f64 + 0.5) * (self.hi[a] - self.lo[a]) / self.n[a] as f64)
    }
}

/// `(∫|curl E|², ∫|E|²)` on the grid; x-slabs are summed in parallel and
/// combined in a fixed order.
fn quotient_sums(e: &VectorField3, grid: &QuadratureGrid, h_fd: f64) -> (f64, f64) {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(grid.n[0]).max(1);
    let chunk = grid.n[0].div_ceil(threads);
    let formula = |p: [f64; 3]| e.eval_formula(p);
    let slabs: Vec<(f64, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let formula = &formula;
                s.spawn(move || {
                    let (mut num, mut den) = (CompensatedSum::new(), CompensatedSum::new());
                    for i in (t * chunk)..((t + 1) * chunk).min(grid.n[0]) {
                        for j in 0..grid.n[1] {
                            for k in 0..grid.n[2] {
                                let p = grid.point(i, j, k);
                                if !e.in_region(p) {
                                    continue;
                                }
                                den.add(norm_sq(&formula(p)));
                                num.add(norm_sq(&curl_fd(formula, p, h_fd)));
                            }
                        }
                    }
                    (num.value(), den.value())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("quadrature worker panicked")).collect()
    });
    let (mut num, mut den) = (CompensatedSum::new(), CompensatedSum::new());
    for (a, b) in slabs {
        num.add(a);
        den.add(b);
    }
    let v = grid.cell_volume();
    (num.value() * v, den.value() * v)
}

/// `∫|curl E|² / ∫|E|²` by the midpoint rule with FD curl. The error
/// estimate compares against the grid with half the points per axis; for a
/// decaying field the mass beyond the box is bounded through the declared
/// rate and added.
pub fn rayleigh_quotient(e: &VectorField3, grid: &QuadratureGrid, h_fd: f64) -> Result<RayleighQuotient, ModeError> {
    if !(h_fd > 0.0) {
        return Err(invalid("h_fd", h_fd, "must be positive"));
    }
    let (num, den) = quotient_sums(e, grid, h_fd);
    if !(den > 0.0) {
        return Err(ModeError::ZeroDenominator);
    }
    let value = num / den;
    let (cn, cd) = quotient_sums(e, &grid.coarsened(), h_fd);
    let mut error = if cd > 0.0 { (cn / cd - value).abs() } else { value.abs() };
    if let Support::Decaying { axis, rate } = e.support {
        let reach = grid.lo[axis].abs().min(grid.hi[axis].abs());
        error += value.abs() * (-2.0 * rate * reach).exp();
    }
    Ok(RayleighQuotient {
        value,
        error,
        numerator: num,
        denominator: den,
    })
}

/// Max-norm FD residuals of `curl curl E = λE`, `div E = 0` in the interior
/// and `E × ν = 0` on the boundary samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellResidual {
    pub pde: f64,
    pub div: f64,
    pub trace: f64,
}

/// `interior` points must keep a `2h_fd` stencil inside the smooth part of
/// the field. `boundary` pairs a point with its unit normal.
pub fn maxwell_residual(
    e: &VectorField3,
    lambda: f64,
    interior: &[[f64; 3]],
    boundary: &[([f64; 3], [f64; 3])],
    h_fd: f64,
) -> MaxwellResidual {
    let f = |p: [f64; 3]| e.eval_formula(p);
    let curl = |p: [f64; 3]| curl_fd(&f, p, h_fd);
    let mut out = MaxwellResidual {
        pde: 0.0,
        div: 0.0,
        trace: 0.0,
    };
    for &p in interior {
        let cc = curl_fd(&curl, p, h_fd);
        let v = f(p);
        let r: Vec3 = std::array::from_fn(|c| cc[c] - lambda * v[c]);
        out.pde = out.pde.max(norm_sq(&r).sqrt());
        out.div = out.div.max(div_fd(&f, p, h_fd).norm());
    }
    for &(p, n) in boundary {
        out.trace = out.trace.max(norm_sq(&cross_real(&f(p), n)).sqrt());
    }
    out
}

/// Writes `x,y,z,Ex_re,Ex_im,Ey_re,Ey_im,Ez_re,Ez_im` rows for the
/// zero-extended field.
pub fn write_csv<W: Write>(e: &VectorField3, points: &[[f64; 3]], mut w: W) -> Result<(), ModeError> {
    writeln!(w, "x,y,z,Ex_re,Ex_im,Ey_re,Ey_im,Ez_re,Ez_im")?;
    for &p in points {
        let v = e.eval(p);
        writeln!(
            w,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            p[0], p[1], p[2], v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im
        )?;
    }
    Ok(())
}
