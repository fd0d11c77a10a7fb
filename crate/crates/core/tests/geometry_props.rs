use lwire::geometry::*;
use proptest::prelude::*;

fn curve() -> impl Strategy<Value = CurveSpec> {
    prop_oneof![
        (0.05f64..1.5).prop_map(|b| CurveSpec::wedge(b).unwrap()),
        (0.05f64..1.5, 0.05f64..3.0).prop_map(|(b, r)| CurveSpec::filleted(b, r).unwrap()),
    ]
}

fn point() -> impl Strategy<Value = Point> {
    (-20.0f64..20.0, -20.0f64..20.0).prop_map(|(x, y)| [x, y])
}

proptest! {
    #[test]
    fn unit_speed(c in curve(), s in -30.0f64..30.0) {
        let eps = 1e-6;
        let speed = dist(point_at(&c, s + eps), point_at(&c, s)) / eps;
        prop_assert!((speed - 1.0).abs() < 1e-4, "speed {}", speed);
    }

    #[test]
    fn points_on_the_curve_have_zero_distance(c in curve(), s in -30.0f64..30.0) {
        let p = point_at(&c, s);
        let (d, _) = distance_to_curve(&c, p);
        prop_assert!(d <= on_curve_tolerance(p), "d = {}", d);
        prop_assert_eq!(classify_region(&c, p), RegionLabel::OnCurve);
    }

    #[test]
    fn nearest_point_realizes_the_distance(c in curve(), p in point()) {
        let (d, s) = distance_to_curve(&c, p);
        prop_assert!((dist(p, point_at(&c, s)) - d).abs() < 1e-9);
        // no sampled curve point is closer
        for k in -400..=400 {
            let q = point_at(&c, k as f64 * 0.1);
            prop_assert!(dist(p, q) >= d - 1e-9);
        }
    }

    #[test]
    fn labels_agree_with_distance(c in curve(), p in point()) {
        let (d, _) = distance_to_curve(&c, p);
        let on = classify_region(&c, p) == RegionLabel::OnCurve;
        prop_assert_eq!(on, d <= on_curve_tolerance(p));
    }

    #[test]
    fn interior_is_convex(c in curve(), p in point(), q in point(), t in 0.0f64..1.0) {
        if classify_region(&c, p) == RegionLabel::Interior && classify_region(&c, q) == RegionLabel::Interior {
            let m = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            prop_assert_ne!(classify_region(&c, m), RegionLabel::Exterior);
        }
    }

    #[test]
    fn mirror_commutes(c in curve(), p in point(), s in -30.0f64..30.0) {
        prop_assert_eq!(classify_region(&c, mirror(p)), classify_region(&c, p));
        let (d0, s0) = distance_to_curve(&c, p);
        let (d1, s1) = distance_to_curve(&c, mirror(p));
        prop_assert!((d0 - d1).abs() < 1e-12 * d0.max(1.0));
        prop_assert!(dist(point_at(&c, s0), mirror(point_at(&c, s1))) < 1e-9);
        prop_assert!(dist(point_at(&c, -s), mirror(point_at(&c, s))) < 1e-12 * s.abs().max(1.0));
        let n0 = c.inward_normal(s);
        let n1 = c.inward_normal(-s);
        if s.abs() > 1e-9 {
            prop_assert!(dist(n1, mirror(n0)) < 1e-12);
        }
        let bx = Aabb::new(p[0] - 3.0, p[0] + 2.0, p[1] - 1.0, p[1] + 4.0);
        let mb = Aabb::new(p[0] - 3.0, p[0] + 2.0, -p[1] - 4.0, -p[1] + 1.0);
        prop_assert!((length_in_box(&c, &bx) - length_in_box(&c, &mb)).abs() < 1e-9);
    }

    #[test]
    fn fillet_coincides_with_asymptotes(b in 0.05f64..1.5, r in 0.05f64..3.0, ds in 1e-6f64..30.0, up in any::<bool>()) {
        let c = CurveSpec::filleted(b, r).unwrap();
        let s = if up { c.s_compact() + ds } else { -c.s_compact() - ds };
        let p = point_at(&c, s);
        let (sb, cb) = b.sin_cos();
        // on the half-line through the vertex at angle ±β
        prop_assert!(p[0] > 0.0);
        prop_assert!((p[0] * sb - p[1].abs() * cb).abs() <= 1e-12 * p[0].hypot(p[1]).max(1.0));
        prop_assert!(curvature_radius(&c, s).unwrap().is_infinite());
    }

    #[test]
    fn clipped_length_is_additive(c in curve(), x0 in -10.0f64..0.0, y0 in -10.0f64..0.0, w in 1.0f64..20.0, cut in 0.1f64..0.9) {
        let whole = Aabb::new(x0, x0 + w, y0, y0 + w);
        let xm = x0 + cut * w;
        let left = Aabb::new(x0, xm, y0, y0 + w);
        let right = Aabb::new(xm, x0 + w, y0, y0 + w);
        let sum = length_in_box(&c, &left) + length_in_box(&c, &right);
        prop_assert!((sum - length_in_box(&c, &whole)).abs() < 1e-9 * w);
    }
}

#[test]
fn random_points_partition() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let curves = [
        CurveSpec::wedge(0.4).unwrap(),
        CurveSpec::filleted(1.0, 2.0).unwrap(),
    ];
    for c in &curves {
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            let p = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let k = match classify_region(c, p) {
                RegionLabel::Interior => 0,
                RegionLabel::Exterior => 1,
                RegionLabel::OnCurve => 2,
            };
            counts[k] += 1;
            // the foot-point offset of an interior point follows the inward
            // normal, of an exterior point the outward one
            let (_, s) = distance_to_curve(c, p);
            if k < 2 && !(c.kind == CurveKind::Wedge && s == 0.0) {
                let l = point_at(c, s);
                let n = c.inward_normal(s);
                let side = n[0] * (p[0] - l[0]) + n[1] * (p[1] - l[1]);
                assert_eq!(side > 0.0, k == 0, "p = {p:?}");
            }
        }
        assert_eq!(counts.iter().sum::<usize>(), 10_000);
        assert!(counts[0] > 0 && counts[1] > 0);
    }
}
