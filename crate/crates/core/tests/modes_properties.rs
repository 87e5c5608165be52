use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use tmcert_core::geometry::{preset_domain, triangulate, PresetParams};
use tmcert_core::modes::{
    capacitor_potential, div_fd, maxwell_residual, rayleigh_quotient, te_mode, tem_mode, testfield,
    trapped_mode_dirichlet, trapped_mode_neumann, Profile2D, QuadratureGrid, TestFieldKind, VectorField3, C64,
};
use tmcert_core::Preset;

const PI2: f64 = PI * PI;

fn norm(v: &[C64; 3]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn rect_dirichlet(a: f64, b: f64) -> Profile2D {
    let (ka, kb) = (PI / a, PI / b);
    Profile2D::closed(
        move |p| (ka * p[0]).sin() * (kb * p[1]).sin(),
        move |p| [ka * (ka * p[0]).cos() * (kb * p[1]).sin(), kb * (ka * p[0]).sin() * (kb * p[1]).cos()],
    )
    .on_rect(tmcert_core::Rect::new(0.0, 0.0, a, b).unwrap())
}

fn quotient(e: &VectorField3, n: [usize; 3]) -> f64 {
    let g = QuadratureGrid::for_support(&e.support, n).unwrap();
    rayleigh_quotient(e, &g, 1e-4).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cuboid_quotient_ignores_b(a in 0.5f64..3.0, l in 0.5f64..4.0, b1 in 0.2f64..2.0, b2 in 0.2f64..2.0) {
        let q1 = quotient(&testfield(&TestFieldKind::CuboidTe { a, b: b1, l }).unwrap(), [16, 2, 16]);
        let q2 = quotient(&testfield(&TestFieldKind::CuboidTe { a, b: b2, l }).unwrap(), [16, 2, 16]);
        let want = PI2 / (a * a) + PI2 / (l * l);
        prop_assert!((q1 - q2).abs() < 1e-6 * want);
        prop_assert!((q1 - want).abs() < 1e-6 * want);
    }

    #[test]
    fn testfields_vanish_on_the_interface(x in 0.05f64..0.95, y in 0.05f64..0.95, l in 0.5f64..3.0) {
        let kinds = [
            TestFieldKind::CuboidTe { a: 1.0, b: 1.0, l },
            TestFieldKind::TmResonator { phi_d: rect_dirichlet(1.0, 1.0), lambda_d: 2.0 * PI2, l },
        ];
        for k in &kinds {
            let e = testfield(k).unwrap();
            let (px, py) = if matches!(k, TestFieldKind::CuboidTe { .. }) { (x - 0.5, y - 0.5) } else { (x, y) };
            // z = 0⁻ from the smooth formula; the guide side is zero by extension
            prop_assert!(norm(&e.eval_formula([px, py, 0.0])) < 1e-12);
            prop_assert!(norm(&e.eval([px, py, 1e-9])) == 0.0);
        }
    }

    #[test]
    fn testfields_are_divergence_free(x in 0.1f64..0.9, y in 0.1f64..0.9, s in 0.1f64..0.9) {
        let l = 1.7;
        let z = -s * l;
        let cos_x = Profile2D::closed(|p| (PI * p[0]).cos(), |p| [-PI * (PI * p[0]).sin(), 0.0])
            .on_rect(tmcert_core::Rect::new(0.0, 0.0, 1.0, 1.0).unwrap());
        let kinds = [
            TestFieldKind::CuboidTe { a: 1.0, b: 1.0, l },
            TestFieldKind::TeResonator { phi_n: cos_x, l },
            TestFieldKind::TemResonator { phi: Profile2D::coaxial(0.2, 1.5).unwrap(), l },
            TestFieldKind::TmResonator { phi_d: rect_dirichlet(1.0, 1.0), lambda_d: 2.0 * PI2, l },
        ];
        for k in &kinds {
            let e = testfield(k).unwrap();
            let f = |p: [f64; 3]| e.eval_formula(p);
            let scale = norm(&f([x, y, z])).max(1.0);
            prop_assert!(div_fd(&f, [x, y, z], 1e-4).norm() < 1e-6 * scale, "{}", e.name);
        }
    }

    #[test]
    fn te_mode_residual_small(lambda in 10.0f64..40.0, y in 0.1f64..0.9, z in -1.0f64..1.0) {
        let cos_x = Profile2D::closed(|p| (PI * p[0]).cos(), |p| [-PI * (PI * p[0]).sin(), 0.0]);
        let e = te_mode(&cos_x, PI2, lambda, 1).unwrap();
        let r = maxwell_residual(&e, lambda, &[[0.37, y, z]], &[], 1e-3);
        prop_assert!(r.pde < 1e-4 * lambda * lambda && r.div < 1e-8);
    }
}

#[test]
fn tem_limit_is_z_independent() {
    let e = tem_mode(&Profile2D::coaxial(0.5, 1.5).unwrap(), 1e-16, 1).unwrap();
    let a = e.eval([0.8, 0.3, 0.0]);
    let b = e.eval([0.8, 0.3, 3.0]);
    assert!((0..3).all(|c| (a[c] - b[c]).norm() < 1e-7));
}

#[test]
fn trapped_neumann_wall_trace_and_residual() {
    let cos_y = Profile2D::closed(|p| (PI * p[0]).cos(), |p| [-PI * (PI * p[0]).sin(), 0.0]);
    let (e, lambda) = trapped_mode_neumann(&cos_y, PI2, 1, 1.0).unwrap();
    assert!((lambda - 2.0 * PI2).abs() < 1e-12);
    let walls = [([0.0, 0.3, 0.4], [-1.0, 0.0, 0.0]), ([1.0, 0.6, 0.2], [1.0, 0.0, 0.0])];
    let r = maxwell_residual(&e, lambda, &[[0.4, 0.3, 0.5]], &walls, 1e-3);
    assert!(r.trace < 1e-15 && r.div < 1e-12 && r.pde < 1e-3, "{r:?}");
}

#[test]
fn negative_control_wrong_lambda() {
    let (e, lambda) = trapped_mode_dirichlet(&rect_dirichlet(1.0, 1.0), 2.0 * PI2, 1, 1.0).unwrap();
    let good = maxwell_residual(&e, lambda, &[[0.3, 0.4, 0.6]], &[], 1e-3);
    let bad = maxwell_residual(&e, lambda + 1.0, &[[0.3, 0.4, 0.6]], &[], 1e-3);
    assert!(bad.pde > 1e3 * good.pde, "{} vs {}", bad.pde, good.pde);
}

#[test]
fn gradient_field_has_no_curl_curl() {
    // E = ∇(xyz(1−x)(1−y)(1−z)) with λ = 0
    let g = |p: [f64; 3]| {
        let f = |t: f64| t * (1.0 - t);
        let df = |t: f64| 1.0 - 2.0 * t;
        [
            C64::new(df(p[0]) * f(p[1]) * f(p[2]), 0.0),
            C64::new(f(p[0]) * df(p[1]) * f(p[2]), 0.0),
            C64::new(f(p[0]) * f(p[1]) * df(p[2]), 0.0),
        ]
    };
    let e = VectorField3::new("grad", g, tmcert_core::modes::Support::Unbounded);
    let r = maxwell_residual(&e, 0.0, &[[0.3, 0.6, 0.2], [0.7, 0.1, 0.5]], &[], 1e-3);
    assert!(r.pde < 1e-8, "{r:?}");
}

fn annulus_potential(inner: f64, h: f64) -> tmcert_core::modes::CapacitorPotential {
    let p = PresetParams::from([("outer".into(), 3.0), ("inner".into(), inner)]);
    let dom = preset_domain(Preset::SquareAnnulus, &p).unwrap();
    capacitor_potential(Arc::new(triangulate(&dom, h).unwrap())).unwrap()
}

#[test]
fn capacitor_energy_grows_as_gap_shrinks() {
    let wide = annulus_potential(1.0, 1.0 / 8.0);
    let narrow = annulus_potential(2.0, 1.0 / 8.0);
    assert!(narrow.energy > wide.energy, "{} vs {}", narrow.energy, wide.energy);
}

/// Max deviation under the transpose and the half-turn (which map the
/// diagonal split onto itself) and under the axis reflections (which do not).
fn symmetry_deviation(c: &tmcert_core::modes::CapacitorPotential) -> (f64, f64) {
    let (lo, hi) = c.phi.mesh.nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[0]), h.max(p[0])));
    let m = 0.5 * (lo + hi);
    let (mut exact, mut mirror): (f64, f64) = (0.0, 0.0);
    for &q in &[[0.2, 0.1], [0.35, -0.7], [1.1, 0.9], [-0.6, 1.2], [1.3, -0.2]] {
        let p = [m + q[0], m + q[1]];
        let v = c.phi.eval(p);
        for r in [[p[1], p[0]], [2.0 * m - p[0], 2.0 * m - p[1]]] {
            exact = exact.max((c.phi.eval(r) - v).abs());
        }
        for r in [[2.0 * m - p[0], p[1]], [p[0], 2.0 * m - p[1]]] {
            mirror = mirror.max((c.phi.eval(r) - v).abs());
        }
    }
    (exact, mirror)
}

#[test]
fn capacitor_has_dihedral_symmetry() {
    let (e8, m8) = symmetry_deviation(&annulus_potential(1.0, 1.0 / 8.0));
    let (e16, m16) = symmetry_deviation(&annulus_potential(1.0, 1.0 / 16.0));
    assert!(e8 < 1e-9 && e16 < 1e-9, "{e8} {e16}");
    assert!(m8 < 1e-2 && m16 < 0.5 * m8, "{m8} {m16}");
}

#[test]
fn tem_flux_matches_capacitor_energy() {
    let c = annulus_potential(1.0, 1.0 / 8.0);
    // ∫|∇φ|² from the sampled TEM field equals the FEM energy
    let e = tem_mode(&c.profile(), 1.0, 1).unwrap();
    let energy = tmcert_core::fem2d::integrate_elementwise(&c.phi.mesh, |_, p, _| {
        let v = e.eval([p[0], p[1], 0.0]);
        v[0].norm_sqr() + v[1].norm_sqr()
    })
    .unwrap();
    assert!((energy - c.energy).abs() < 1e-8 * c.energy, "{energy} vs {}", c.energy);
}
