use hbilinear::group::koranyi_ball_volume;
use hbilinear::GroupPoint;
use proptest::prelude::*;

fn point(n: usize) -> impl Strategy<Value = GroupPoint> {
    (prop::collection::vec(-20.0f64..20.0, 2 * n), -200.0f64..200.0)
        .prop_map(|(z, t)| GroupPoint::new(z, t).unwrap())
}

fn triple() -> impl Strategy<Value = (GroupPoint, GroupPoint, GroupPoint)> {
    (1usize..=3).prop_flat_map(|n| (point(n), point(n), point(n)))
}

fn scale(ps: &[&GroupPoint]) -> f64 {
    ps.iter()
        .flat_map(|p| p.coords())
        .fold(1.0f64, |m, c| m.max(c.abs()))
        .powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn associativity((x, y, z) in triple()) {
        let l = x.multiply(&y).unwrap().multiply(&z).unwrap();
        let r = x.multiply(&y.multiply(&z).unwrap()).unwrap();
        prop_assert!(l.max_abs_diff(&r) <= 1e-12 * scale(&[&x, &y, &z]));
    }

    #[test]
    fn identity_and_inverse((x, _, _) in triple()) {
        let e = GroupPoint::identity(x.n());
        prop_assert_eq!(x.multiply(&e).unwrap(), x.clone());
        prop_assert_eq!(e.multiply(&x).unwrap(), x.clone());
        prop_assert!(x.multiply(&x.inverse()).unwrap().max_abs_diff(&e) <= 1e-12 * scale(&[&x]));
        prop_assert!(x.inverse().multiply(&x).unwrap().max_abs_diff(&e) <= 1e-12 * scale(&[&x]));
    }

    #[test]
    fn gauge_symmetry((x, _, _) in triple()) {
        prop_assert_eq!(x.inverse().knorm(), x.knorm());
    }

    #[test]
    fn dilation_homogeneity((x, _, _) in triple(), r in 1e-3f64..1e3) {
        let d = x.dilate(r).unwrap();
        prop_assert!((d.knorm() - r * x.knorm()).abs() <= 1e-12 * r * x.knorm().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn dilation_is_an_automorphism((x, y, _) in triple(), r in 0.1f64..10.0) {
        let l = x.multiply(&y).unwrap().dilate(r).unwrap();
        let rr = x.dilate(r).unwrap().multiply(&y.dilate(r).unwrap()).unwrap();
        prop_assert!(l.max_abs_diff(&rr) <= 1e-12 * r * r * scale(&[&x, &y]));
    }

    #[test]
    fn triangle_inequality((x, y, _) in triple()) {
        prop_assert!(x.multiply(&y).unwrap().knorm() <= x.knorm() + y.knorm() + 1e-12 * (x.knorm() + y.knorm()).max(1.0));
    }

    #[test]
    fn sandwich_is_euclidean((x, xi, _) in triple()) {
        let s = x.sandwich(&xi).unwrap();
        let direct = x.multiply(&xi).unwrap().multiply(&x).unwrap();
        let euclid = x.euclid_scale(2.0).euclid_add(&xi).unwrap();
        prop_assert!(s.max_abs_diff(&euclid) <= 1e-12 * scale(&[&x, &xi]));
        prop_assert!(direct.max_abs_diff(&euclid) <= 1e-12 * scale(&[&x, &xi]));
    }
}

#[test]
fn ball_volume_n1() {
    assert!((koranyi_ball_volume(1) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
}
