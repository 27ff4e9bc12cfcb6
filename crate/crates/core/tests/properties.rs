use std::f64::consts::TAU;

use normed_billiards::dynamics::{reflect, run_trajectory, TrajectoryState};
use normed_billiards::experiments::{duality_residual, registered_bodies};
use normed_billiards::gauge::{
    dual_gauge_numeric, make_centered_ellipsoid, make_euclidean_ball, make_focal_ellipsoid, Body,
    BodyDescriptor, Gauge, GaugeBody, Reversed,
};
use normed_billiards::linalg::{pairing, ray_angle, Covector, Vector};
use normed_billiards::projective::ProjectiveMap;
use normed_billiards::table::{inward_normal, EllipsoidTable, ImplicitTable, Table, TOL_SURFACE};
use proptest::prelude::*;

fn polar(theta: f64) -> Vector {
    Vector::from([theta.cos(), theta.sin()])
}

fn planar_base(kind: u8, a1: f64, a2: f64, ecc: f64, axis: f64) -> Body {
    match kind % 3 {
        0 => make_euclidean_ball(2).unwrap(),
        1 => make_centered_ellipsoid(vec![a1, a2]).unwrap(),
        _ => make_focal_ellipsoid(polar(axis), a1, ecc * a1, 2).unwrap(),
    }
}

/// Map with `dual_K(−v) = rho·(t − 0.05)`.
fn map_for(base: &Body, t: f64, dir: f64, rho: f64) -> ProjectiveMap {
    let d = polar(dir).flat();
    let reach = base.dual_gauge(&-&d);
    ProjectiveMap::new(t, d.scale(rho * (t - 0.05) / reach)).unwrap()
}

/// Incidence `(u, n)` with `n(u) ≤ −0.01`.
fn incidence(normal_angle: f64, offset: f64) -> (Vector, Covector) {
    let n = polar(normal_angle).flat();
    // offset in (−π/2, π/2) away from the tangent direction
    let u = polar(normal_angle + std::f64::consts::PI + offset);
    (u, n)
}

fn body_strategy() -> impl Strategy<Value = Body> {
    (
        0u8..3,
        0.5f64..2.0,
        0.5f64..2.0,
        0.0f64..0.9,
        0.0..TAU,
        any::<bool>(),
        0.5f64..2.0,
        0.0..TAU,
        0.0f64..1.0,
    )
        .prop_map(|(kind, a1, a2, ecc, axis, imaged, t, dir, rho)| {
            let base = planar_base(kind, a1, a2, ecc, axis);
            if imaged {
                let m = map_for(&base, t, dir, rho);
                base.image(m).unwrap()
            } else {
                base
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn euler_identity_and_homogeneity(body in body_strategy(), theta in 0.0..TAU, r in 0.01f64..100.0, s in 0.01f64..100.0) {
        let x = polar(theta).scale(r);
        let g = body.gauge(&x);
        prop_assert!(g > 0.0);
        prop_assert!((pairing(&body.gauge_grad(&x), &x) - g).abs() <= 1e-12 * g);
        prop_assert!((body.gauge(&x.scale(s)) - s * g).abs() <= 1e-12 * s * g);
        prop_assert!(body.gauge_grad(&x.scale(s)).max_abs_diff(&body.gauge_grad(&x)) <= 1e-12 * body.gauge_grad(&x).norm());
    }

    #[test]
    fn momentum_is_dual_unit_and_inverts(body in body_strategy(), theta in 0.0..TAU, r in 0.1f64..10.0) {
        let x = polar(theta).scale(r);
        prop_assert!(duality_residual(&body, &x).unwrap() <= 1e-9);
    }

    #[test]
    fn dual_gauge_matches_numeric_maximization(body in body_strategy(), theta in 0.0..TAU, r in 0.1f64..10.0) {
        let p = polar(theta).flat().scale(r);
        let closed = body.dual_gauge(&p);
        let numeric = dual_gauge_numeric(&body, &p).unwrap();
        prop_assert!((closed - numeric).abs() <= 1e-8 * closed, "{} vs {}", closed, numeric);
    }

    #[test]
    fn image_momentum_is_affine_in_base_momentum(
        kind in 0u8..3, a1 in 0.5f64..2.0, a2 in 0.5f64..2.0, ecc in 0.0f64..0.9, axis in 0.0..TAU,
        t in 0.5f64..2.0, dir in 0.0..TAU, rho in 0.0f64..1.0, theta in 0.0..TAU,
    ) {
        let base = planar_base(kind, a1, a2, ecc, axis);
        let map = map_for(&base, t, dir, rho);
        let image = base.clone().image(map.clone()).unwrap();
        let u = polar(theta);
        let expected = base.momentum(&u).unwrap().scale(map.t) + map.v.clone();
        prop_assert!(image.momentum(&u).unwrap().max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn dual_gauge_of_image_is_homothety(
        kind in 0u8..3, a1 in 0.5f64..2.0, a2 in 0.5f64..2.0, ecc in 0.0f64..0.9, axis in 0.0..TAU,
        t in 0.5f64..2.0, dir in 0.0..TAU, rho in 0.0f64..1.0, theta in 0.0..TAU,
    ) {
        // the polar of the image is t·K° + v, so q ∈ ∂K° maps to t·q + v ∈ ∂T°
        let base = planar_base(kind, a1, a2, ecc, axis);
        let map = map_for(&base, t, dir, rho);
        let image = base.clone().image(map.clone()).unwrap();
        let q = polar(theta).flat();
        let q = q.scale(1.0 / base.dual_gauge(&q));
        let p = q.scale(map.t) + map.v.clone();
        prop_assert!((image.dual_gauge(&p) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn reflection_rays_agree_under_projective_images(
        kind in 0u8..3, a1 in 0.5f64..2.0, a2 in 0.5f64..2.0, ecc in 0.0f64..0.9, axis in 0.0..TAU,
        t in 0.5f64..2.0, dir in 0.0..TAU, rho in 0.0f64..1.0, nt in 0.0..TAU, off in -1.5f64..1.5,
    ) {
        let base = planar_base(kind, a1, a2, ecc, axis);
        let image = base.clone().image(map_for(&base, t, dir, rho)).unwrap();
        let (u, n) = incidence(nt, off);
        let (out_k, _) = reflect(&base, &u, &n).unwrap();
        let (out_t, _) = reflect(&image, &u, &n).unwrap();
        prop_assert!(ray_angle(&out_k, &out_t) <= 1e-9);
    }

    #[test]
    fn reflection_keeps_unit_speed_and_turns_inward(body in body_strategy(), nt in 0.0..TAU, off in -1.5f64..1.5) {
        let (u, n) = incidence(nt, off);
        let (out, diag) = reflect(&body, &u, &n).unwrap();
        prop_assert!((body.gauge(&out) - 1.0).abs() <= 1e-9);
        prop_assert!(pairing(&n, &out) > 0.0);
        prop_assert!(diag.lambda > 0.0);
        let p1 = body.momentum(&u).unwrap();
        prop_assert!((body.dual_gauge(&(p1 + n.scale(diag.lambda))) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn reversed_path_reflects_under_reversed_body(body in body_strategy(), nt in 0.0..TAU, off in -1.5f64..1.5) {
        let (u, n) = incidence(nt, off);
        let (out, _) = reflect(&body, &u, &n).unwrap();
        let reversed = Reversed(body.clone());
        let (back, _) = reflect(&reversed, &-&out, &n).unwrap();
        prop_assert!(ray_angle(&back, &-&u) <= 1e-9);
    }

    #[test]
    fn ellipse_hits_lie_on_the_wall(
        a in 0.5f64..3.0, b in 0.5f64..3.0, cx in -1.0f64..1.0, cy in -1.0f64..1.0,
        w in 0.0f64..0.99, wt in 0.0..TAU, dt in 0.0..TAU,
    ) {
        let table = EllipsoidTable::new(Vector::from([cx, cy]), vec![a, b]).unwrap();
        let q = Vector::from([cx + a * w * wt.cos(), cy + b * w * wt.sin()]);
        let d = polar(dt);
        let (x, s) = table.intersect_ray(&q, &d).unwrap();
        prop_assert!(table.level(&x).abs() <= 1e-12);
        prop_assert!(s > 0.0);
        prop_assert!(pairing(&inward_normal(&table, &x).unwrap(), &d) < 0.0);
    }

    #[test]
    fn generic_intersection_matches_closed_form(
        a in 0.5f64..3.0, b in 0.5f64..3.0, w in 0.0f64..0.9, wt in 0.0..TAU, dt in 0.0..TAU,
    ) {
        let table = EllipsoidTable::centered(vec![a, b]).unwrap();
        let implicit = ImplicitTable::new(
            2,
            move |x: &Vector| x[0] * x[0] / (a * a) + x[1] * x[1] / (b * b) - 1.0,
            move |x: &Vector| Covector::from([2.0 * x[0] / (a * a), 2.0 * x[1] / (b * b)]),
            a.max(b),
        ).unwrap();
        let q = Vector::from([a * w * wt.cos(), b * w * wt.sin()]);
        let d = polar(dt);
        let (x1, _) = table.intersect_ray(&q, &d).unwrap();
        let (x2, _) = implicit.intersect_ray(&q, &d).unwrap();
        prop_assert!(x1.max_abs_diff(&x2) <= 1e-10);
    }

    #[test]
    fn trajectories_stay_on_the_table(body in body_strategy(), a in 1.0f64..3.0, b in 1.0f64..3.0, dt in 0.0..TAU) {
        let table = EllipsoidTable::centered(vec![a, b]).unwrap();
        let start = TrajectoryState::new(Vector::from([0.1 * a, -0.2 * b]), polar(dt)).unwrap();
        if let Ok(traj) = run_trajectory(&body, &table, &start, 20) {
            for x in traj.positions().skip(1) {
                prop_assert!(table.level(x).abs() <= TOL_SURFACE);
            }
            for s in &traj.states[1..] {
                prop_assert!((body.gauge(&s.direction) - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn descriptors_round_trip(body in body_strategy()) {
        let desc = body.descriptor();
        let text = serde_json::to_string(&desc).unwrap();
        let back: BodyDescriptor = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &desc);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

#[test]
fn registered_bodies_are_smooth_and_dual() {
    for body in registered_bodies() {
        let dim = body.dim();
        for i in 0..dim {
            let x = Vector::basis(dim, i).scale(1.7) + Vector::new(vec![0.3; dim]);
            assert!(duality_residual(&body, &x).unwrap() <= 1e-12);
        }
    }
}

#[test]
fn focal_ellipsoid_is_a_ball_image() {
    let body = make_focal_ellipsoid(Vector::from([0.6, 0.8]), 2.0, 1.2, 2).unwrap();
    let Body::Focal(f) = &body else { panic!() };
    let image = make_euclidean_ball(2)
        .unwrap()
        .image(f.as_ball_image())
        .unwrap();
    for k in 0..32 {
        let x = polar(TAU * k as f64 / 32.0);
        assert!((image.gauge(&x) - body.gauge(&x)).abs() <= 1e-14);
        let p = x.flat();
        assert!((image.dual_gauge(&p) - body.dual_gauge(&p)).abs() <= 1e-13);
    }
}
