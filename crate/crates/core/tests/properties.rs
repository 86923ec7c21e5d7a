//! Randomized invariants that span modules: curvature bookkeeping for every
//! surface kind, congruence equivariance, sphere identities, and mesh
//! quadrature convergence.

use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI, TAU};
use std::sync::OnceLock;
use toruslab_core::catalog;
use toruslab_core::sample;
use toruslab_core::sphere::{
    circle_curvature, intrinsic_distance, rotation_about_geodesic, signed_height, Congruence,
    Equator, GeodesicCircle, SpherePoint,
};
use toruslab_core::torus::{Bump, BumpTerm, Surface};
use toruslab_core::vec4::{dist, norm};

fn specimens() -> &'static Vec<Surface> {
    static CELL: OnceLock<Vec<Surface>> = OnceLock::new();
    CELL.get_or_init(|| {
        let bump = Bump::new(vec![BumpTerm { m: 1, k: 0, amplitude: 1e-3, phase: 0.0 }]);
        vec![
            Surface::clifford(),
            Surface::homogeneous(FRAC_PI_6).unwrap(),
            Surface::homogeneous(0.9).unwrap(),
            catalog::default_cyclide(),
            catalog::elliptic_cyclide(),
            Surface::perturb_normal(Surface::clifford(), bump).unwrap(),
        ]
    })
}

fn random_geodesic(rng: &mut impl rand::Rng) -> GeodesicCircle {
    let pole = sample::random_sphere_point(rng);
    let center = SpherePoint::new(sample::random_unit_tangent(rng, &pole)).unwrap();
    GeodesicCircle::new(Equator::new(pole), center, FRAC_PI_2).unwrap()
}

fn random_congruence(rng: &mut impl rand::Rng) -> Congruence {
    let a = rotation_about_geodesic(&random_geodesic(rng), rng.gen_range(-PI..PI)).unwrap();
    let b = rotation_about_geodesic(&random_geodesic(rng), rng.gen_range(-PI..PI)).unwrap();
    a.compose(&b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curvature_fields_stay_consistent(
        u in 0.0..TAU,
        v in 0.0..TAU,
        idx in 0usize..6,
    ) {
        let g = specimens()[idx].geometry_at(u, v);
        prop_assert!((norm(&g.position) - 1.0).abs() < 1e-10);
        prop_assert!((g.k1 * g.k2 - g.extrinsic).abs() < 1e-9);
        prop_assert!((0.5 * (g.k1 + g.k2) - g.mean).abs() < 1e-9);
        prop_assert!((g.intrinsic - (1.0 + g.extrinsic)).abs() < 1e-9);
    }

    #[test]
    fn clifford_is_minimal_and_flat(u in 0.0..TAU, v in 0.0..TAU) {
        let g = Surface::clifford().geometry_at(u, v);
        prop_assert!(g.mean.abs() < 1e-9);
        prop_assert!(g.intrinsic.abs() < 1e-9);
    }

    #[test]
    fn tubes_are_flat_without_umbilics(
        r in 0.05..1.52_f64,
        u in 0.0..TAU,
        v in 0.0..TAU,
    ) {
        let g = Surface::homogeneous(r).unwrap().geometry_at(u, v);
        prop_assert!((g.extrinsic + 1.0).abs() < 1e-9);
        prop_assert!(g.intrinsic.abs() < 1e-9);
        prop_assert!((g.k1 - g.k2) * (g.k1 - g.k2) > 0.1);
    }

    #[test]
    fn congruences_preserve_curvatures(
        seed in 0u64..1u64 << 48,
        u in 0.0..TAU,
        v in 0.0..TAU,
        idx in 0usize..4,
    ) {
        let mut rng = sample::rng_from_seed(seed);
        let motion = random_congruence(&mut rng);
        let base = specimens()[idx].clone();
        let moved = Surface::rotated(base.clone(), motion);
        let a = base.geometry_at(u, v);
        let b = moved.geometry_at(u, v);
        prop_assert!((a.k1 - b.k1).abs() < 1e-8, "k1 {} vs {}", a.k1, b.k1);
        prop_assert!((a.k2 - b.k2).abs() < 1e-8);
        prop_assert!((a.mean - b.mean).abs() < 1e-8);
    }

    #[test]
    fn congruences_preserve_distances(seed in 0u64..1u64 << 48) {
        let mut rng = sample::rng_from_seed(seed);
        let motion = random_congruence(&mut rng);
        let p = sample::random_sphere_point(&mut rng);
        let q = sample::random_sphere_point(&mut rng);
        let before = intrinsic_distance(&p, &q);
        let after = intrinsic_distance(&motion.apply(&p), &motion.apply(&q));
        prop_assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn height_is_odd_under_antipody(seed in 0u64..1u64 << 48) {
        let mut rng = sample::rng_from_seed(seed);
        let eq = Equator::new(sample::random_sphere_point(&mut rng));
        let p = sample::random_sphere_point(&mut rng);
        let direct = signed_height(&eq, &p);
        let mirrored = signed_height(&eq, &p.antipodal());
        prop_assert!((direct + mirrored).abs() < 1e-15);
    }

    #[test]
    fn rotation_angles_add(
        seed in 0u64..1u64 << 48,
        a in -2.0..2.0_f64,
        b in -2.0..2.0_f64,
    ) {
        let mut rng = sample::rng_from_seed(seed);
        let g = random_geodesic(&mut rng);
        let split = rotation_about_geodesic(&g, a)
            .unwrap()
            .compose(&rotation_about_geodesic(&g, b).unwrap());
        let direct = rotation_about_geodesic(&g, a + b).unwrap();
        let p = sample::random_sphere_point(&mut rng);
        prop_assert!(dist(&split.apply(&p).coords(), &direct.apply(&p).coords()) < 1e-10);
    }
}

#[test]
fn circle_curvature_decreases_with_radius() {
    let mut prev = f64::INFINITY;
    for k in 1..=64 {
        let r = FRAC_PI_2 * k as f64 / 64.0;
        let c = circle_curvature(r).unwrap();
        assert!(c < prev, "curvature should drop at radius {r}");
        prev = c;
    }
    assert!(prev.abs() < 1e-12, "geodesics have zero curvature");
}

#[test]
fn small_bump_keeps_mean_curvature_proportional() {
    let eps = 1e-3;
    let bump = Bump::new(vec![BumpTerm { m: 1, k: 0, amplitude: eps, phase: 0.0 }]);
    let surface = Surface::perturb_normal(Surface::clifford(), bump).unwrap();
    let n = 96;
    let mut max = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let g = surface.geometry_at(TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
            max = max.max(g.mean.abs());
        }
    }
    assert!(max <= 10.0 * eps, "max |H| = {max} for amplitude {eps}");
    assert!(max > 0.1 * eps, "the bump should actually move the surface");
}

#[test]
fn percent_level_bump_stays_negatively_curved() {
    let bump = Bump::new(vec![BumpTerm { m: 1, k: 0, amplitude: 1e-2, phase: 0.0 }]);
    let surface = Surface::perturb_normal(Surface::clifford(), bump).unwrap();
    let n = 256;
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let s = surface
                .geometry_at(TAU * i as f64 / n as f64, TAU * j as f64 / n as f64)
                .extrinsic;
            max = max.max(s);
        }
    }
    assert!(max < 0.0, "expected S < 0 everywhere, got max {max}");
}

#[test]
fn mesh_area_converges_on_curved_specimens() {
    let surface = catalog::default_cyclide();
    let reference = surface.sample_mesh(512, 512).area;
    let errors: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| (surface.sample_mesh(n, n).area - reference).abs())
        .collect();
    assert!(errors[1] <= errors[0] / 2.0, "32->64: {errors:?}");
    assert!(errors[2] <= errors[1] / 2.0, "64->128: {errors:?}");

    let clifford = Surface::clifford().sample_mesh(64, 64);
    assert!((clifford.area - 2.0 * PI * PI).abs() < 2.0 * PI * PI * 1e-3);
    for r in [FRAC_PI_6, 0.9] {
        let tube = Surface::homogeneous(r).unwrap().sample_mesh(64, 64);
        let expect = 2.0 * PI * PI * (2.0 * r).sin();
        assert!((tube.area - expect).abs() < expect * 1e-3);
    }
}
