//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines show up in plain `cargo test` output; exits
//! non-zero when any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use tmcert_core::certificates::{
    cert_cuboid, cert_material_aniso, cert_material_general, cert_material_magnetic, cert_material_signs,
    cert_material_zeps, cert_sixlegs, cert_te_resonator, cert_tem, cert_tm, cert_tripode, kappa,
    lemma_checks_sixlegs, tm_quotient, tripode_energy_identity_check, AnisoProfile, MaterialProfile,
    SectionQuadrature, DEFAULT_SERIES_TERMS,
};
use tmcert_core::eigensolve::fem1d_weighted_eigs;
use tmcert_core::geometry::{preset_domain, triangulate, PresetParams};
use tmcert_core::modes::{
    maxwell_residual, rayleigh_quotient, te_mode, tem_mode, testfield, tm_mode, trapped_mode_dirichlet,
    trapped_mode_neumann, Profile2D, QuadratureGrid, TestFieldKind, VectorField3,
};
use tmcert_core::spectra::{filonov_check, laplacian_eigs, rect_spectrum, solve_on_mesh, CrossSection};
use tmcert_core::{BoundaryCondition, EigenResult, Preset, Quantity, Rect, Verdict};

const PI2: f64 = PI * PI;
const H: f64 = 1.0 / 64.0;
const T: f64 = 4.0;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn params(t: f64) -> PresetParams {
    PresetParams::from([("T".to_string(), t)])
}

fn dirichlet(preset: Preset, h: f64) -> EigenResult {
    let dom = preset_domain(preset, &params(T)).expect("preset");
    laplacian_eigs(&dom, BoundaryCondition::Dirichlet, 1, h, Some(T)).expect("FEM solve")
}

fn dirichlet_plain(preset: Preset, h: f64) -> EigenResult {
    let dom = preset_domain(preset, &params(T)).expect("preset");
    let mesh = Arc::new(triangulate(&dom, h).expect("mesh"));
    solve_on_mesh(mesh, BoundaryCondition::Dirichlet, 1, 1e-10).expect("FEM solve")
}

fn criterion_1(l: &EigenResult, l32: &EigenResult) -> Outcome {
    let v = l.eigenvalues[0];
    let rel = (v - 9.1722).abs() / 9.1722;
    let coarse_extrap = l32.extrapolated.as_ref().expect("extrapolation")[0];
    check(
        rel < 5e-3 && v >= coarse_extrap,
        format!("lambda(1/64) = {v:.5} (rel {rel:.2e}), h=1/32 extrapolation {coarse_extrap:.5} <= lambda(1/64)"),
    )
}

fn criterion_2(x: &EigenResult) -> Outcome {
    let v = x.eigenvalues[0];
    let rel = (v - 6.5186).abs() / 6.5186;
    check(rel < 5e-3, format!("lambda = {v:.5} (rel {rel:.2e})"))
}

fn criterion_3() -> Outcome {
    let kp = kappa(PI).map_err(|e| e.to_string())?;
    let k5 = kappa((5.0 * PI2).sqrt()).map_err(|e| e.to_string())?;
    let o1 = fem1d_weighted_eigs(PI, 8.0, 1e-3).map_err(|e| e.to_string())?;
    let o5 = fem1d_weighted_eigs((5.0 * PI2).sqrt(), 8.0, 1e-3).map_err(|e| e.to_string())?;
    check(
        (kp.kappa - 4.0214).abs() < 1e-3
            && (k5.kappa - 6.0827).abs() < 1e-3
            && (o1 - kp.kappa).abs() < 1e-2
            && (o5 - k5.kappa).abs() < 1e-2,
        format!(
            "kappa(pi) = {:.5}, kappa(sqrt5 pi) = {:.5}; 1D FEM {o1:.5}, {o5:.5}",
            kp.kappa, k5.kappa
        ),
    )
}

fn criterion_4(x: &EigenResult) -> Outcome {
    let kp = kappa(PI).map_err(|e| e.to_string())?;
    let k5 = kappa((5.0 * PI2).sqrt()).map_err(|e| e.to_string())?;
    let lam = Quantity::fem(x.eigenvalues[0], x.uncertainty(0));
    let c = cert_sixlegs(lam, &kp, &k5).map_err(|e| e.to_string())?;
    check(
        (c.margin + 1.0355).abs() < 0.02 && c.verdict == Verdict::Pass,
        format!("margin {:.4} +- {:.1e}, verdict {}", c.margin, c.uncertainty, c.verdict),
    )
}

/// The quoted constants belong to the published eigenvalue; C₂ moves by
/// 3·Δλ, so the FEM value (0.1% high) is run separately and must pass too.
fn criterion_5(l: &EigenResult) -> Outcome {
    let (k, c) = cert_tripode(Quantity::paper(9.1722), DEFAULT_SERIES_TERMS).map_err(|e| e.to_string())?;
    let lam = Quantity::fem(l.eigenvalues[0], l.uncertainty(0));
    let (kf, cf) = cert_tripode(lam, DEFAULT_SERIES_TERMS).map_err(|e| e.to_string())?;
    check(
        (k.c2 - 3.571).abs() < 5e-3
            && (k.c_square - 0.3052).abs() < 1e-3
            && (k.tail_limit + 3.8205).abs() < 0.02
            && k.precondition < 0.0
            && c.verdict == Verdict::Pass
            && kf.precondition < 0.0
            && cf.verdict == Verdict::Pass,
        format!(
            "C2 = {:.4}, C_sq = {:.4}, 2 C_sq C2 - 6 = {:.4}, 4C1+C2 = {:.3}, sup q <= {:.4}, verdict {}; FEM input {:.5}: sup q <= {:.4}, verdict {}",
            k.c2, k.c_square, k.tail_limit, k.precondition, k.sup_bound, c.verdict, lam.value, kf.sup_bound, cf.verdict
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (a, b) in [(1.0, 1.0), (2.0, 1.0)] {
        let dom = preset_domain(Preset::Rectangle, &PresetParams::from([("a".into(), a), ("b".into(), b)]))
            .map_err(|e| e.to_string())?;
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let r = laplacian_eigs(&dom, bc, 3, 1.0 / 32.0, None).map_err(|e| e.to_string())?;
            let exact = rect_spectrum(a, b, bc, 4).map_err(|e| e.to_string())?;
            let exact = if bc == BoundaryCondition::Neumann { &exact[1..] } else { &exact[..3] };
            let est = r.discretization_error.as_ref().expect("estimate");
            for i in 0..3 {
                let err = r.eigenvalues[i] - exact[i];
                // conforming: upper bound, error inside the O(h^2) estimate
                if !(err >= -1e-9 && err <= est[i]) {
                    return Err(format!("{a}x{b} {bc} #{i}: error {err:.3e} vs estimate {:.3e}", est[i]));
                }
                worst = worst.max(err / est[i]);
            }
        }
        let sec = CrossSection::from_fem(&dom, 1.0 / 32.0).map_err(|e| e.to_string())?;
        let f = filonov_check(&sec).map_err(|e| e.to_string())?;
        lines.push(format!("{a}x{b}: lambda_N - lambda_D = {:.3}", f.margin));
    }
    for sec in [CrossSection::rectangle(3.0, 0.5), CrossSection::disk(1.0)] {
        let sec = sec.map_err(|e| e.to_string())?;
        filonov_check(&sec).map_err(|e| e.to_string())?;
    }
    let lsec = preset_domain(Preset::LShape, &params(1.0)).map_err(|e| e.to_string())?;
    let sec = CrossSection::from_fem(&lsec, 1.0 / 16.0).map_err(|e| e.to_string())?;
    let f = filonov_check(&sec).map_err(|e| e.to_string())?;
    lines.push(format!("truncated L: {:.3}", f.margin));
    check(true, format!("max error/estimate {worst:.3}; Filonov {}", lines.join(", ")))
}

fn quotient(e: &VectorField3, n: [usize; 3]) -> Result<f64, String> {
    let g = QuadratureGrid::for_support(&e.support, n).map_err(|e| e.to_string())?;
    Ok(rayleigh_quotient(e, &g, 1e-4).map_err(|e| e.to_string())?.value)
}

fn criterion_7() -> Outcome {
    let mut rows = Vec::new();
    let guide = Quantity::analytic(PI2);

    let (a, b, l) = (1.5, 1.0, 2.0);
    let q = quotient(&testfield(&TestFieldKind::CuboidTe { a, b, l }).map_err(|e| e.to_string())?, [32, 4, 32])?;
    let c = cert_cuboid(a, l, guide).map_err(|e| e.to_string())?;
    rows.push(("cuboid", q, PI2 / (a * a) + PI2 / (l * l), c.lhs));

    let (sa, sb, l) = (2.0, 1.0, 3.0);
    let rect = Rect::new(0.0, 0.0, sa, sb).map_err(|e| e.to_string())?;
    let phi_n = Profile2D::closed(move |p| (PI * p[0] / sa).cos(), move |p| [-PI / sa * (PI * p[0] / sa).sin(), 0.0]).on_rect(rect);
    let ln = PI2 / (sa * sa);
    let q = quotient(&testfield(&TestFieldKind::TeResonator { phi_n, l }).map_err(|e| e.to_string())?, [32, 16, 32])?;
    let c = cert_te_resonator(Quantity::analytic(ln), l, guide, &[]).map_err(|e| e.to_string())?;
    rows.push(("te_resonator", q, ln + PI2 / (l * l), c.lhs));

    let l = 2.0;
    let phi = Profile2D::coaxial(0.5, 1.5).map_err(|e| e.to_string())?;
    let q = quotient(&testfield(&TestFieldKind::TemResonator { phi, l }).map_err(|e| e.to_string())?, [48, 48, 32])?;
    let c = cert_tem(l, guide).map_err(|e| e.to_string())?;
    rows.push(("tem", q, PI2 / (l * l), c.lhs));

    let (sa, sb, l) = (1.2, 0.8, 1.5);
    let rect = Rect::new(0.0, 0.0, sa, sb).map_err(|e| e.to_string())?;
    let (ka, kb) = (PI / sa, PI / sb);
    let phi_d = Profile2D::closed(
        move |p| (ka * p[0]).sin() * (kb * p[1]).sin(),
        move |p| [ka * (ka * p[0]).cos() * (kb * p[1]).sin(), kb * (ka * p[0]).sin() * (kb * p[1]).cos()],
    )
    .on_rect(rect);
    let ld = ka * ka + kb * kb;
    let q = quotient(&testfield(&TestFieldKind::TmResonator { phi_d, lambda_d: ld, l }).map_err(|e| e.to_string())?, [24, 24, 32])?;
    let (c, _) = cert_tm(Quantity::analytic(ld), Quantity::analytic(ld * 1.5), l).map_err(|e| e.to_string())?;
    rows.push(("tm", q, tm_quotient(ld, l), c.lhs));

    let mut ok = true;
    let mut detail = Vec::new();
    for (name, q, want, lhs) in rows {
        let rel = (q - want).abs() / want;
        let consistent = lhs.is_some_and(|v| (v - q).abs() <= 1e-3 * want);
        ok &= rel < 1e-3 && consistent;
        detail.push(format!("{name} {q:.6} vs {want:.6} (rel {rel:.1e})"));
    }
    check(ok, detail.join("; "))
}

/// Residuals at `h_fd` and `h_fd/10`; passes when every residual drops by
/// `10^1.5` or sits at the roundoff floor of its stencil.
fn order_check(
    name: &str,
    e: &VectorField3,
    lambda: f64,
    interior: &[[f64; 3]],
    boundary: &[([f64; 3], [f64; 3])],
) -> Result<String, String> {
    let scale = interior
        .iter()
        .map(|&p| e.eval_formula(p).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(1.0);
    let (h1, h2) = (1e-3, 1e-4);
    let r1 = maxwell_residual(e, lambda, interior, boundary, h1);
    let r2 = maxwell_residual(e, lambda, interior, boundary, h2);
    let eps = 4.0 * f64::EPSILON * scale;
    let floors = [eps / (h2 * h2), eps / h2, eps];
    let pairs = [(r1.pde, r2.pde), (r1.div, r2.div), (r1.trace, r2.trace)];
    let mut orders = Vec::new();
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let order = if b > 0.0 && a > 0.0 { (a / b).log10() } else { f64::INFINITY };
        if !(order >= 1.5 || b <= floors[k]) {
            return Err(format!("{name}: residual {k} {a:.2e} -> {b:.2e} (order {order:.2})"));
        }
        orders.push(if b <= floors[k] { "floor".to_string() } else { format!("{order:.2}") });
    }
    Ok(format!("{name} pde {}, div {}, trace {}", orders[0], orders[1], orders[2]))
}

fn criterion_8() -> Outcome {
    let mut out = Vec::new();
    let err = |e: tmcert_core::modes::ModeError| e.to_string();
    let pts = [[0.31, 0.27, 0.43], [0.62, 0.71, 0.18], [0.45, 0.55, 0.77]];

    // square section (0,1)²: φ_N = cos(πx), φ_D = sin(πx) sin(πy)
    let cos_x = Profile2D::closed(|p| (PI * p[0]).cos(), |p| [-PI * (PI * p[0]).sin(), 0.0]);
    let sin_sin = Profile2D::closed(
        |p| (PI * p[0]).sin() * (PI * p[1]).sin(),
        |p| [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()],
    );
    let walls_xy = [
        ([0.0, 0.4, 0.3], [-1.0, 0.0, 0.0]),
        ([1.0, 0.6, 0.3], [1.0, 0.0, 0.0]),
        ([0.3, 0.0, 0.5], [0.0, -1.0, 0.0]),
        ([0.7, 1.0, 0.5], [0.0, 1.0, 0.0]),
    ];
    let te = te_mode(&cos_x, PI2, 15.0, 1).map_err(err)?;
    out.push(order_check("te", &te, 15.0, &pts, &walls_xy)?);
    let tm = tm_mode(&sin_sin, 2.0 * PI2, 25.0, -1).map_err(err)?;
    out.push(order_check("tm", &tm, 25.0, &pts, &walls_xy)?);

    let coax = Profile2D::coaxial(0.5, 1.5).map_err(err)?;
    let tem = tem_mode(&coax, 3.0, 1).map_err(err)?;
    let ring = [[0.9, 0.2, 0.1], [-0.3, 0.8, 0.6], [0.1, -1.1, 0.3]];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ring_bnd = [([0.5, 0.0, 0.2], [-1.0, 0.0, 0.0]), ([1.5 * s, 1.5 * s, 0.4], [s, s, 0.0])];
    out.push(order_check("tem", &tem, 3.0, &ring, &ring_bnd)?);

    // guide along x with section (0,1)² in (y, z)
    let walls_yz = [
        ([0.3, 0.0, 0.4], [0.0, -1.0, 0.0]),
        ([0.6, 1.0, 0.4], [0.0, 1.0, 0.0]),
        ([0.2, 0.5, 0.0], [0.0, 0.0, -1.0]),
        ([0.8, 0.5, 1.0], [0.0, 0.0, 1.0]),
    ];
    let (td, ld) = trapped_mode_dirichlet(&sin_sin, 2.0 * PI2, 1, 1.0).map_err(err)?;
    let x_walls = [([0.0, 0.3, 0.6], [-1.0, 0.0, 0.0]), ([1.0, 0.7, 0.2], [1.0, 0.0, 0.0])];
    let all: Vec<_> = walls_yz.iter().chain(&x_walls).copied().collect();
    out.push(order_check("trapped_dirichlet", &td, ld, &pts, &all)?);
    let cos_y = Profile2D::closed(|p| (PI * p[0]).cos(), |p| [-PI * (PI * p[0]).sin(), 0.0]);
    let (tn, ln) = trapped_mode_neumann(&cos_y, PI2, 1, 1.0).map_err(err)?;
    out.push(order_check("trapped_neumann", &tn, ln, &pts, &x_walls)?);
    check(true, out.join("; "))
}

fn unit_square_section() -> Result<SectionQuadrature, String> {
    let dom = preset_domain(Preset::Rectangle, &PresetParams::new()).map_err(|e| e.to_string())?;
    let mesh = Arc::new(triangulate(&dom, 1.0 / 16.0).map_err(|e| e.to_string())?);
    let r = solve_on_mesh(mesh, BoundaryCondition::Neumann, 1, 1e-10).map_err(|e| e.to_string())?;
    let phi = r.eigenfunction(0).ok_or("no eigenfunction")?;
    SectionQuadrature::new(&phi, Quantity::fem(r.eigenvalues[0], 0.0)).map_err(|e| e.to_string())
}

fn criterion_9() -> Outcome {
    let sec = unit_square_section()?;
    let e = |x: tmcert_core::certificates::CertError| x.to_string();
    let vac = MaterialProfile::vacuum();
    let zero = [
        cert_material_zeps(&vac, &sec).map_err(e)?,
        cert_material_general(&vac, &sec).map_err(e)?,
        cert_material_magnetic(&vac, &sec).map_err(e)?,
        cert_material_signs(&vac, &sec).map_err(e)?,
    ];
    if zero.iter().any(|c| c.margin != 0.0) {
        return Err(format!("vacuum margins {:?}", zero.iter().map(|c| c.margin).collect::<Vec<_>>()));
    }
    let identity = AnisoProfile {
        eps_t: Arc::new(|_| 1.0),
        mu_diag: Arc::new(|_| [1.0; 3]),
        z_support: (0.0, 1.0),
        nz: 16,
    };
    let (a1, a2) = cert_material_aniso(&identity, &sec).map_err(e)?;
    if a1.margin != 0.0 || a2.is_none_or(|c| c.margin != 0.0) {
        return Err("identity anisotropic profile has nonzero margin".into());
    }

    let slab = MaterialProfile::slab(2.0, 1.0, 0.0, 1.0).map_err(e)?;
    let passes = [
        cert_material_zeps(&slab, &sec).map_err(e)?,
        cert_material_general(&slab, &sec).map_err(e)?,
        cert_material_magnetic(&slab, &sec).map_err(e)?,
    ];
    if let Some(c) = passes.iter().find(|c| !c.passed()) {
        return Err(format!("{} on eps = 2 slab: margin {:.3e}, {}", c.id, c.margin, c.verdict));
    }

    let bump = MaterialProfile::new(
        Arc::new(|_| 1.0),
        Arc::new(|p: [f64; 3]| 1.0 + (-(p[2] - 0.5).powi(2) * 20.0).exp()),
        0.0,
        1.0,
    )
    .map_err(e)?;
    let dip = MaterialProfile::new(Arc::new(|p: [f64; 3]| if p[2] < 0.5 { 0.9 } else { 2.0 }), Arc::new(|_| 1.0), 0.0, 1.0)
        .map_err(e)?;
    let signs = [
        cert_material_signs(&bump, &sec).map_err(e)?.verdict,
        cert_material_signs(&dip, &sec).map_err(e)?.verdict,
        cert_material_signs(&vac, &sec).map_err(e)?.verdict,
    ];
    check(
        signs == [Verdict::Pass, Verdict::Fail, Verdict::Fail],
        format!(
            "vacuum margins 0; eps=2 slab margins {:.3e}, {:.3e}, {:.3e}; sign cases {:?}",
            passes[0].margin, passes[1].margin, passes[2].margin, signs
        ),
    )
}

fn criterion_10(x64: &EigenResult, l64: &EigenResult) -> Outcome {
    let kp = kappa(PI).map_err(|e| e.to_string())?;
    let mut six = Vec::new();
    let mut tri = Vec::new();
    let mut decomp: f64 = 0.0;
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let (x, l) = if h == H {
            (x64.clone(), l64.clone())
        } else {
            (dirichlet_plain(Preset::XShape, h), dirichlet_plain(Preset::LShape, h))
        };
        let r = lemma_checks_sixlegs(&x.eigenfunction(0).ok_or("no X eigenfunction")?, &kp).map_err(|e| e.to_string())?;
        if !r.holds {
            return Err(format!("X lemma fails at h = {h}: slack {:.3e}", r.slack));
        }
        six.push(r.relative_slack);
        let t = tripode_energy_identity_check(&l.eigenfunction(0).ok_or("no L eigenfunction")?, None).map_err(|e| e.to_string())?;
        decomp = decomp.max(t.decomposition_residual / t.norm_l);
        tri.push(t.norm_square / t.norm_l);
    }
    let converging = |v: &[f64]| (v[2] - v[1]).abs() < (v[1] - v[0]).abs();
    check(
        decomp < 1e-10 && converging(&six) && converging(&tri),
        format!(
            "X relative slack {:.4} {:.4} {:.4}; L square share {:.5} {:.5} {:.5}; decomposition residual {decomp:.1e}",
            six[0], six[1], six[2], tri[0], tri[1], tri[2]
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (l64, l32, x64) = std::thread::scope(|s| {
        let a = s.spawn(|| dirichlet(Preset::LShape, H));
        let b = s.spawn(|| dirichlet(Preset::LShape, 2.0 * H));
        let c = s.spawn(|| dirichlet(Preset::XShape, H));
        (a.join().unwrap(), b.join().unwrap(), c.join().unwrap())
    });
    let results: Vec<(usize, Outcome)> = vec![
        (1, criterion_1(&l64, &l32)),
        (2, criterion_2(&x64)),
        (3, criterion_3()),
        (4, criterion_4(&x64)),
        (5, criterion_5(&l64)),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10(&x64, &l64)),
    ];
    let mut failed = 0;
    for (i, r) in &results {
        match r {
            Ok(d) => println!("PASS criterion {i}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {i}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1?}", results.len() - failed, start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
