//! Criteria for guides filled with a compactly supported inhomogeneous
//! material. Integrals over `Ω = S × ℝ` are tensorized: the section rule of
//! [`integrate_elementwise`] times a composite midpoint rule on the axial
//! support. The quadrature uncertainty is the change when the axial rule is
//! halved.

use std::sync::Arc;

use super::{inputs, invalid, CertError, Certificate, Quantity, Verdict};
use crate::fem2d::{integrate_elementwise, FEFunction};

pub type Sampler3 = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

/// Scalar permittivity and permeability; both equal 1 outside
/// `z ∈ (z0, z1)`.
#[derive(Clone)]
pub struct MaterialProfile {
    pub eps: Sampler3,
    pub mu: Sampler3,
    pub z_support: (f64, f64),
    /// Axial quadrature points.
    pub nz: usize,
}

impl std::fmt::Debug for MaterialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaterialProfile")
            .field("z_support", &self.z_support)
            .field("nz", &self.nz)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_NZ: usize = 64;

impl MaterialProfile {
    pub fn new(eps: Sampler3, mu: Sampler3, z0: f64, z1: f64) -> Result<Self, CertError> {
        if !(z0 < z1) {
            return Err(invalid("z1", z1, "support must satisfy z0 < z1"));
        }
        Ok(Self {
            eps,
            mu,
            z_support: (z0, z1),
            nz: DEFAULT_NZ,
        })
    }

    /// Vacuum everywhere.
    pub fn vacuum() -> Self {
        Self::slab(1.0, 1.0, 0.0, 1.0).expect("valid slab")
    }

    /// Constant `eps`, `mu` on `z ∈ (z0, z1)`.
    pub fn slab(eps: f64, mu: f64, z0: f64, z1: f64) -> Result<Self, CertError> {
        Self::new(Arc::new(move |_| eps), Arc::new(move |_| mu), z0, z1)
    }

    pub fn with_nz(mut self, nz: usize) -> Self {
        self.nz = nz.max(2);
        self
    }
}

/// Section mesh with the normalized first Neumann eigenfunction.
#[derive(Debug, Clone)]
pub struct SectionQuadrature {
    pub phi: FEFunction,
    pub lambda_n: Quantity,
}

impl SectionQuadrature {
    /// Rescales `phi` to unit L² norm on the section.
    pub fn new(phi: &FEFunction, lambda_n: Quantity) -> Result<Self, CertError> {
        let n = phi.l2_norm_sq();
        if !(n > 0.0) {
            return Err(CertError::Precondition("eigenfunction has zero norm".into()));
        }
        Ok(Self {
            phi: phi.scaled(1.0 / n.sqrt()),
            lambda_n,
        })
    }
}

/// Pointwise data at a quadrature node.
struct Sample {
    p: [f64; 3],
    phi2: f64,
    grad2: f64,
}

/// `∫_S ∫_{z0}^{z1} g dz dS` with `nz` and `nz/2` axial points.
fn tensor_integral<G>(sec: &SectionQuadrature, support: (f64, f64), nz: usize, g: &G) -> Result<(f64, f64), CertError>
where
    G: Fn(&Sample) -> Result<f64, CertError>,
{
    let one = |nz: usize| -> Result<f64, CertError> {
        let dz = (support.1 - support.0) / nz as f64;
        let err = std::cell::RefCell::new(None);
        let v = integrate_elementwise(&sec.phi.mesh, |t, p, l| {
            let phi = sec.phi.value_in(t, l);
            let gr = sec.phi.gradient_in(t);
            let mut acc = 0.0;
            for k in 0..nz {
                let z = support.0 + (k as f64 + 0.5) * dz;
                let s = Sample {
                    p: [p[0], p[1], z],
                    phi2: phi * phi,
                    grad2: gr[0] * gr[0] + gr[1] * gr[1],
                };
                match g(&s) {
                    Ok(v) => acc += v,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                    }
                }
            }
            acc * dz
        })?;
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    };
    let fine = one(nz)?;
    let coarse = one((nz / 2).max(1))?;
    Ok((fine, (fine - coarse).abs()))
}

fn checked(name: &str, v: f64, p: [f64; 3]) -> Result<f64, CertError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, v, format!("must be positive, at ({}, {}, {})", p[0], p[1], p[2])))
    }
}

fn quadrature_cert(id: &str, value: f64, err: f64, extra: Vec<(&str, Quantity)>) -> Certificate {
    let mut ins = inputs([("integral", Quantity::derived(value, err))]);
    for (k, q) in extra {
        ins.insert(k.to_string(), q);
    }
    Certificate::evaluate(id, ins, 0.0, |v| v["integral"])
}

/// `ε = ε(z)`: margin `∫ ((εμ)⁻¹ − 1) ε φ_N²`. The variant
/// `∫ (εμ⁻¹ − 1) ε φ_N²` is reported in the notes.
pub fn cert_material_zeps(profile: &MaterialProfile, sec: &SectionQuadrature) -> Result<Certificate, CertError> {
    // ε must not depend on the section coordinates
    let mesh = &sec.phi.mesh;
    let (z0, z1) = profile.z_support;
    for k in 0..8 {
        let z = z0 + (k as f64 + 0.5) / 8.0 * (z1 - z0);
        let e0 = (profile.eps)([mesh.nodes[0][0], mesh.nodes[0][1], z]);
        for p in mesh.nodes.iter().step_by((mesh.nodes.len() / 17).max(1)) {
            let e = (profile.eps)([p[0], p[1], z]);
            if (e - e0).abs() > 1e-12 * e0.abs() {
                return Err(CertError::Precondition(format!(
                    "permittivity varies across the section at z = {z}"
                )));
            }
        }
    }
    let derivation = |s: &Sample| -> Result<f64, CertError> {
        let e = checked("eps", (profile.eps)(s.p), s.p)?;
        let m = checked("mu", (profile.mu)(s.p), s.p)?;
        Ok((1.0 / (e * m) - 1.0) * e * s.phi2)
    };
    let statement = |s: &Sample| -> Result<f64, CertError> {
        let e = (profile.eps)(s.p);
        let m = (profile.mu)(s.p);
        Ok((e / m - 1.0) * e * s.phi2)
    };
    let (v, err) = tensor_integral(sec, profile.z_support, profile.nz, &derivation)?;
    let (alt, _) = tensor_integral(sec, profile.z_support, profile.nz, &statement)?;
    Ok(quadrature_cert("material_zeps", v, err, vec![])
        .note(format!("integrand ((eps mu)^-1 - 1) eps phi_N^2; variant (eps mu^-1 - 1) eps phi_N^2 gives {alt:.6e}")))
}

/// `∫ (μ⁻¹ − 1) λ_N φ_N² + ¼(ε − 1)(ε − 4)|∇φ_N|²`; assumes `ε ≥ 1`.
pub fn cert_material_general(profile: &MaterialProfile, sec: &SectionQuadrature) -> Result<Certificate, CertError> {
    let lambda = sec.lambda_n.value;
    let min_eps = std::cell::Cell::new(f64::INFINITY);
    let g = |s: &Sample| -> Result<f64, CertError> {
        let e = checked("eps", (profile.eps)(s.p), s.p)?;
        let m = checked("mu", (profile.mu)(s.p), s.p)?;
        min_eps.set(min_eps.get().min(e));
        Ok((1.0 / m - 1.0) * lambda * s.phi2 + 0.25 * (e - 1.0) * (e - 4.0) * s.grad2)
    };
    let (v, err) = tensor_integral(sec, profile.z_support, profile.nz, &g)?;
    let mut c = quadrature_cert("material_general", v, err, vec![("lambda_N", sec.lambda_n)]);
    if min_eps.get() < 1.0 {
        c = c.override_verdict(
            Verdict::Inconclusive,
            format!("criterion assumes eps >= 1; minimum sampled eps = {:.6}", min_eps.get()),
        );
    } else if c.verdict == Verdict::Fail {
        c = c.note("positive margin: the criterion is silent, not a proof of absence");
    }
    Ok(c)
}

/// `μ ≡ 1`: `∫ (ε⁻¹ − 1)|∇φ_N|²`.
pub fn cert_material_magnetic(profile: &MaterialProfile, sec: &SectionQuadrature) -> Result<Certificate, CertError> {
    let g = |s: &Sample| -> Result<f64, CertError> {
        let m = (profile.mu)(s.p);
        if m != 1.0 {
            return Err(CertError::Precondition(format!("criterion requires mu = 1, found {m}")));
        }
        let e = checked("eps", (profile.eps)(s.p), s.p)?;
        Ok((1.0 / e - 1.0) * s.grad2)
    };
    let (v, err) = tensor_integral(sec, profile.z_support, profile.nz, &g)?;
    Ok(quadrature_cert("material_magnetic", v, err, vec![]))
}

/// Pointwise `ε ≥ 1`, `μ ≥ 1` with strict excess on a set of positive
/// measure. Margin: the largest deficit below 1 when one exists, otherwise
/// minus the measure of the strict set.
pub fn cert_material_signs(profile: &MaterialProfile, sec: &SectionQuadrature) -> Result<Certificate, CertError> {
    let mesh = &sec.phi.mesh;
    let (z0, z1) = profile.z_support;
    let nz = profile.nz;
    let dz = (z1 - z0) / nz as f64;
    let deficit = std::cell::Cell::new(0.0f64);
    let strict = integrate_elementwise(mesh, |_, p, _| {
        let mut acc = 0.0;
        for k in 0..nz {
            let q = [p[0], p[1], z0 + (k as f64 + 0.5) * dz];
            let (e, m) = ((profile.eps)(q), (profile.mu)(q));
            deficit.set(deficit.get().max(1.0 - e).max(1.0 - m));
            if e > 1.0 || m > 1.0 {
                acc += dz;
            }
        }
        acc
    })?;
    let (margin, verdict, why) = if deficit.get() > 0.0 {
        (deficit.get(), Verdict::Fail, "eps or mu drops below 1")
    } else if strict > 0.0 {
        (-strict, Verdict::Pass, "eps, mu >= 1 with strict excess on a set of positive measure")
    } else {
        (0.0, Verdict::Fail, "no set where eps > 1 or mu > 1")
    };
    let c = Certificate::evaluate(
        "material_signs",
        inputs([("strict_measure", Quantity::derived(strict, 0.0)), ("max_deficit", Quantity::derived(deficit.get(), 0.0))]),
        0.0,
        |_| margin,
    );
    Ok(c.override_verdict(verdict, why))
}

/// Permittivity with scalar transverse block `ε̃(z)` and diagonal
/// permeability.
#[derive(Clone)]
pub struct AnisoProfile {
    pub eps_t: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Diagonal of μ.
    pub mu_diag: Arc<dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync>,
    pub z_support: (f64, f64),
    pub nz: usize,
}

impl std::fmt::Debug for AnisoProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnisoProfile")
            .field("z_support", &self.z_support)
            .field("nz", &self.nz)
            .finish_non_exhaustive()
    }
}

/// `∫ (ε̃⁻¹ (μ⁻¹)_zz − 1) ε̃ φ_N²`, and when `μ = I` also the second criterion
/// `∫ (ε̃⁻¹ − 1)|∇φ_N|²`.
pub fn cert_material_aniso(
    profile: &AnisoProfile,
    sec: &SectionQuadrature,
) -> Result<(Certificate, Option<Certificate>), CertError> {
    let mut identity_mu = true;
    let first = |s: &Sample| -> Result<f64, CertError> {
        let e = checked("eps_t", (profile.eps_t)(s.p[2]), s.p)?;
        let m = (profile.mu_diag)(s.p);
        let mzz = checked("mu_zz", m[2], s.p)?;
        Ok((1.0 / (e * mzz) - 1.0) * e * s.phi2)
    };
    let (v, err) = tensor_integral(sec, profile.z_support, profile.nz, &first)?;
    let (z0, z1) = profile.z_support;
    for p in &sec.phi.mesh.nodes {
        for k in 0..profile.nz {
            let z = z0 + (k as f64 + 0.5) / profile.nz as f64 * (z1 - z0);
            if (profile.mu_diag)([p[0], p[1], z]) != [1.0; 3] {
                identity_mu = false;
            }
        }
    }
    let c1 = quadrature_cert("material_aniso", v, err, vec![]);
    let c2 = if identity_mu {
        let g = |s: &Sample| -> Result<f64, CertError> {
            let e = checked("eps_t", (profile.eps_t)(s.p[2]), s.p)?;
            Ok((1.0 / e - 1.0) * s.grad2)
        };
        let (v, err) = tensor_integral(sec, profile.z_support, profile.nz, &g)?;
        Some(quadrature_cert("material_aniso_gradient", v, err, vec![]))
    } else {
        None
    };
    Ok((c1, c2))
}
