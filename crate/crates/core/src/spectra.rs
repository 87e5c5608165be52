//! Cross-section spectra: analytic rectangle and disk values, FEM
//! eigenvalues of rectilinear domains, and the essential spectrum of the
//! waveguide operator.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{Provenance, Quantity};
use crate::eigensolve::{smallest_eigenpairs, EigenError, EigenResult, DEFAULT_TOL};
use crate::fem2d::{assemble, BoundaryCondition, FemError};
use crate::geometry::{triangulate, GeometryError, RectilinearDomain2D, TriMesh};

/// First zero of `J1'`; `j'²/R²` is the first positive Neumann eigenvalue of
/// the disk of radius `R`.
pub const BESSEL_J1_PRIME_ZERO: f64 = 1.841_183_781_340_659_3;
/// First zero of `J0`; `j²/R²` is the first Dirichlet eigenvalue of the disk.
pub const BESSEL_J0_ZERO: f64 = 2.404_825_557_695_773;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("Neumann/Dirichlet ordering violated: lambda_N = {lambda_n} >= lambda_D = {lambda_d}")]
    Filonov { lambda_n: f64, lambda_d: f64 },
}

/// Sorted eigenvalues of the Laplacian on `(0,a) × (0,b)`.
///
/// Neumann includes the zero eigenvalue; Dirichlet starts at `m = n = 1`.
/// Mixed conditions are not covered by this formula.
pub fn rect_spectrum(a: f64, b: f64, bc: BoundaryCondition, count: usize) -> Result<Vec<f64>, SpectraError> {
    if !(a >= b && b > 0.0) {
        return Err(SpectraError::Invalid(format!("rectangle sides need a >= b > 0, got a = {a}, b = {b}")));
    }
    let lo = match bc {
        BoundaryCondition::Dirichlet => 1,
        BoundaryCondition::Neumann => 0,
        BoundaryCondition::MixedByTag => {
            return Err(SpectraError::Invalid("no closed form for mixed conditions".into()));
        }
    };
    let mut vals = Vec::with_capacity((count + 1) * (count + 1));
    for m in lo..=lo + count {
        for n in lo..=lo + count {
            vals.push((m as f64 * PI / a).powi(2) + (n as f64 * PI / b).powi(2));
        }
    }
    vals.sort_by(f64::total_cmp);
    vals.truncate(count);
    Ok(vals)
}

/// A waveguide cross-section with its first Neumann and Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub name: String,
    pub simply_connected: bool,
    /// First positive Neumann eigenvalue.
    pub lambda_n: Quantity,
    /// First Dirichlet eigenvalue.
    pub lambda_d: Quantity,
    /// Second positive Neumann eigenvalue, when known.
    pub lambda_n2: Option<Quantity>,
}

impl CrossSection {
    /// Rectangle of sides `a`, `b` (any order).
    pub fn rectangle(a: f64, b: f64) -> Result<Self, SpectraError> {
        let (a, b) = (a.max(b), a.min(b));
        let n = rect_spectrum(a, b, BoundaryCondition::Neumann, 3)?;
        let d = rect_spectrum(a, b, BoundaryCondition::Dirichlet, 1)?;
        Ok(Self {
            name: format!("rectangle {a}x{b}"),
            simply_connected: true,
            lambda_n: Quantity::analytic(n[1]),
            lambda_d: Quantity::analytic(d[0]),
            lambda_n2: Some(Quantity::analytic(n[2])),
        })
    }

    /// Disk of radius `r`; Bessel zeros are tabulated.
    pub fn disk(r: f64) -> Result<Self, SpectraError> {
        if !(r > 0.0) {
            return Err(SpectraError::Invalid(format!("disk radius {r} must be positive")));
        }
        Ok(Self {
            name: format!("disk r={r}"),
            simply_connected: true,
            lambda_n: disk_neumann_eigenvalue(r),
            lambda_d: Quantity::new(BESSEL_J0_ZERO.powi(2) / (r * r), Provenance::Tabulated, 0.0),
            lambda_n2: None,
        })
    }

    /// Section that is not simply connected (e.g. a coaxial annulus). Its
    /// Neumann kernel contributes a TEM branch down to zero.
    pub fn multiply_connected(name: impl Into<String>, lambda_n: Quantity, lambda_d: Quantity) -> Self {
        Self {
            name: name.into(),
            simply_connected: false,
            lambda_n,
            lambda_d,
            lambda_n2: None,
        }
    }

    /// FEM values on a bounded domain; uncertainties from the refinement
    /// estimate.
    pub fn from_fem(dom: &RectilinearDomain2D, h: f64) -> Result<Self, SpectraError> {
        let n = laplacian_eigs(dom, BoundaryCondition::Neumann, 2, h, None)?;
        let d = laplacian_eigs(dom, BoundaryCondition::Dirichlet, 1, h, None)?;
        Ok(Self {
            name: dom.name.clone(),
            simply_connected: dom.holes == 0,
            lambda_n: Quantity::new(n.eigenvalues[0], Provenance::Fem, n.uncertainty(0)),
            lambda_d: Quantity::new(d.eigenvalues[0], Provenance::Fem, d.uncertainty(0)),
            lambda_n2: Some(Quantity::new(n.eigenvalues[1], Provenance::Fem, n.uncertainty(1))),
        })
    }
}

/// `j'_{1,1}²/r²`, tagged tabulated.
pub fn disk_neumann_eigenvalue(r: f64) -> Quantity {
    Quantity::new(BESSEL_J1_PRIME_ZERO.powi(2) / (r * r), Provenance::Tabulated, 0.0)
}

/// Bottom of the essential spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssentialSpectrum {
    pub threshold: f64,
}

/// `0` if a section is not simply connected, otherwise the smallest first
/// Neumann eigenvalue.
pub fn essential_threshold(sections: &[CrossSection]) -> Result<EssentialSpectrum, SpectraError> {
    if sections.is_empty() {
        return Err(SpectraError::Invalid("no cross-sections".into()));
    }
    let threshold = if sections.iter().any(|s| !s.simply_connected) {
        0.0
    } else {
        sections.iter().map(|s| s.lambda_n.value).fold(f64::INFINITY, f64::min)
    };
    Ok(EssentialSpectrum { threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralClass {
    Discrete,
    Embedded,
}

/// Discrete iff `λ < λ_ess`; no tolerance.
pub fn classify_eigenvalue(lambda: f64, ess: &EssentialSpectrum) -> SpectralClass {
    if lambda < ess.threshold {
        SpectralClass::Discrete
    } else {
        SpectralClass::Embedded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductFamily {
    /// From a Dirichlet eigenvalue of the 2D section, `m >= 0`.
    Dirichlet,
    /// From a Neumann eigenvalue of the 2D section, `m >= 1`.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductEigenvalue {
    pub value: f64,
    pub family: ProductFamily,
    /// Index into the 2D list.
    pub index: usize,
    pub m: usize,
    pub class: SpectralClass,
}

/// Eigenvalues `λ_2D + (mπ/a)²` of a product guide `Ω_2D × (0, a)` up to
/// `cutoff`, ascending, each classified against `min(π²/H_max², π²/a²)`.
pub fn product_spectrum(
    a: f64,
    h_max: f64,
    eigs_d: &[f64],
    eigs_n: &[f64],
    cutoff: f64,
) -> Result<Vec<ProductEigenvalue>, SpectraError> {
    if !(a > 0.0 && h_max > 0.0) {
        return Err(SpectraError::Invalid(format!("a = {a} and H_max = {h_max} must be positive")));
    }
    let ess = EssentialSpectrum {
        threshold: (PI * PI / (h_max * h_max)).min(PI * PI / (a * a)),
    };
    let mut out = Vec::new();
    let mut push = |list: &[f64], family: ProductFamily, m0: usize| {
        for (index, &l) in list.iter().enumerate() {
            let mut m = m0;
            loop {
                let value = l + (m as f64 * PI / a).powi(2);
                if value > cutoff {
                    break;
                }
                out.push(ProductEigenvalue {
                    value,
                    family,
                    index,
                    m,
                    class: classify_eigenvalue(value, &ess),
                });
                m += 1;
            }
        }
    };
    push(eigs_d, ProductFamily::Dirichlet, 0);
    push(eigs_n, ProductFamily::Neumann, 1);
    out.sort_by(|x, y| x.value.total_cmp(&y.value).then(x.m.cmp(&y.m)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilonovReport {
    /// `λ_N − λ_D` (negative when the ordering holds).
    pub margin: f64,
    /// `λ_N2 − λ_D` when the second Neumann eigenvalue is known.
    pub second_margin: Option<f64>,
}

/// Checks `λ_N < λ_D`; a violation is a hard error.
pub fn filonov_check(section: &CrossSection) -> Result<FilonovReport, SpectraError> {
    let (ln, ld) = (section.lambda_n.value, section.lambda_d.value);
    if !(ln < ld) {
        return Err(SpectraError::Filonov { lambda_n: ln, lambda_d: ld });
    }
    Ok(FilonovReport {
        margin: ln - ld,
        second_margin: section.lambda_n2.as_ref().map(|q| q.value - ld),
    })
}

/// Assemble and solve on a given mesh, attaching the mesh and dof map.
pub fn solve_on_mesh(mesh: Arc<TriMesh>, bc: BoundaryCondition, k: usize, tol: f64) -> Result<EigenResult, SpectraError> {
    let (kk, mm, dofs) = assemble(&mesh, bc)?;
    let mut r = smallest_eigenpairs(&kk, &mm, k, tol, bc == BoundaryCondition::Neumann)?;
    r.bc = Some(bc);
    r.h = Some(mesh.h);
    r.mesh = Some(mesh);
    r.dofs = Some(dofs);
    Ok(r)
}

/// Knobs for [`laplacian_eigs_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianOptions {
    pub tol: f64,
    /// Also solve at `2h` for the Richardson value and the error estimate.
    pub refinement_estimate: bool,
    /// Also solve at truncation `T + 1` when the domain has ports.
    pub truncation_estimate: bool,
}

impl Default for LaplacianOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            refinement_estimate: true,
            truncation_estimate: true,
        }
    }
}

/// `k` smallest eigenpairs of the Laplacian on `dom` (ports truncated at
/// `t` when given), with refinement and truncation estimates.
pub fn laplacian_eigs(
    dom: &RectilinearDomain2D,
    bc: BoundaryCondition,
    k: usize,
    h: f64,
    t: Option<f64>,
) -> Result<EigenResult, SpectraError> {
    laplacian_eigs_with(dom, bc, k, h, t, LaplacianOptions::default())
}

pub fn laplacian_eigs_with(
    dom: &RectilinearDomain2D,
    bc: BoundaryCondition,
    k: usize,
    h: f64,
    t: Option<f64>,
    opts: LaplacianOptions,
) -> Result<EigenResult, SpectraError> {
    let dom = match t {
        Some(t) if !dom.ports.is_empty() => dom.with_truncation(t)?,
        _ => dom.clone(),
    };
    let mesh = Arc::new(triangulate(&dom, h)?);
    let coarse_ok = opts.refinement_estimate && 2.0 * h <= dom.min_feature_size() / 2.0 * (1.0 + 1e-9);
    let longer = match dom.truncation() {
        Some(t) if opts.truncation_estimate => Some(dom.with_truncation(t + 1.0)?),
        _ => None,
    };

    let (fine, coarse, extended) = std::thread::scope(|s| {
        let coarse = coarse_ok.then(|| {
            s.spawn(|| -> Result<EigenResult, SpectraError> {
                let m = Arc::new(triangulate(&dom, 2.0 * h)?);
                solve_on_mesh(m, bc, k, opts.tol)
            })
        });
        let extended = longer.as_ref().map(|d| {
            s.spawn(move || -> Result<EigenResult, SpectraError> {
                let m = Arc::new(triangulate(d, h)?);
                solve_on_mesh(m, bc, k, opts.tol)
            })
        });
        let fine = solve_on_mesh(mesh.clone(), bc, k, opts.tol);
        let join = |hdl: std::thread::ScopedJoinHandle<'_, Result<EigenResult, SpectraError>>| {
            hdl.join().unwrap_or_else(|_| Err(SpectraError::Invalid("solver thread panicked".into())))
        };
        (fine, coarse.map(join), extended.map(join))
    });
    let mut fine = fine?;
    fine.truncation = dom.truncation();
    if let Some(coarse) = coarse.transpose()? {
        fine.extrapolated = Some(
            fine.eigenvalues
                .iter()
                .zip(&coarse.eigenvalues)
                .map(|(f, c)| (4.0 * f - c) / 3.0)
                .collect(),
        );
        fine.discretization_error = Some(
            fine.eigenvalues
                .iter()
                .zip(&coarse.eigenvalues)
                .map(|(f, c)| (c - f).abs())
                .collect(),
        );
    }
    if let Some(ext) = extended.transpose()? {
        fine.truncation_sensitivity = Some(
            fine.eigenvalues
                .iter()
                .zip(&ext.eigenvalues)
                .map(|(f, e)| (f - e).abs())
                .collect(),
        );
    }
    Ok(fine)
}
