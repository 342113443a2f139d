use cluster_limit::measure::{Interval, PointMeasure, Region, Space, TestFunction};
use proptest::prelude::*;

fn line_atoms() -> impl Strategy<Value = Vec<(f64, u64)>> {
    prop::collection::vec(
        (prop_oneof![0.01f64..100.0, -100.0f64..-0.01], 1u64..4),
        0..12,
    )
}

fn line_measure() -> impl Strategy<Value = PointMeasure> {
    line_atoms().prop_map(|a| PointMeasure::new(Space::punctured_line(), a).unwrap())
}

proptest! {
    #[test]
    fn rescale_composes(mu in line_measure(), y in 0.1f64..10.0, z in 0.1f64..10.0) {
        prop_assume!(!mu.is_null());
        let two = mu.rescale(y).unwrap().rescale(z).unwrap();
        let one = mu.rescale(y * z).unwrap();
        prop_assert_eq!(two.total_count(), one.total_count());
        for (a, b) in two.atoms().iter().zip(one.atoms()) {
            prop_assert!((a.0 - b.0).abs() <= 1e-12 * a.0.abs());
            prop_assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn normalized_shape_has_unit_max(mu in line_measure()) {
        prop_assume!(!mu.is_null());
        let s = mu.normalize_by_max().unwrap();
        prop_assert!((s.sup_modulus().unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(s.is_normalized_shape());
        prop_assert_eq!(s.total_count(), mu.total_count());
    }

    #[test]
    fn counts_add_over_disjoint_regions(mu in line_measure(), c in 0.05f64..50.0) {
        let closed = Region::single(Interval { lo: -c, hi: c, lo_closed: true, hi_closed: true });
        let inside = mu.count(&closed).unwrap();
        let above = mu.count(&Region::modulus_above(mu.space(), c)).unwrap();
        prop_assert_eq!(above, mu.count_modulus_above(c));
        prop_assert_eq!(inside + above, mu.total_count());
    }

    #[test]
    fn superposition_adds(a in line_measure(), b in line_measure(), x in 0.05f64..20.0) {
        let s = a.superpose(&b).unwrap();
        prop_assert_eq!(s.count_modulus_above(x), a.count_modulus_above(x) + b.count_modulus_above(x));
        let f = TestFunction::trapezoid(1.0, 3.0, 2.0, 0.5).unwrap();
        prop_assert!((s.pair(&f) - a.pair(&f) - b.pair(&f)).abs() < 1e-9);
    }

    #[test]
    fn restriction_keeps_mass_above(mu in line_measure(), x in 0.05f64..20.0) {
        let r = mu.restrict_modulus_above(x);
        prop_assert_eq!(r.count_modulus_above(x), mu.count_modulus_above(x));
        prop_assert_eq!(r.total_count(), mu.count_modulus_above(x));
        prop_assert_eq!(r.in_mx(x), mu.in_mx(x));
    }

    #[test]
    fn json_round_trips(mu in line_measure()) {
        let back: PointMeasure = serde_json::from_str(&mu.to_json()).unwrap();
        prop_assert_eq!(back, mu);
    }

    #[test]
    fn pairing_vanishes_below_inner_gap(mu in line_measure(), lo in 0.5f64..5.0, w in 0.1f64..5.0) {
        let f = TestFunction::trapezoid(lo, lo + w, 1.0, 0.25).unwrap();
        let below = mu.restrict_modulus_above(f.inner_gap());
        prop_assert!((mu.pair(&f) - below.pair(&f)).abs() < 1e-12);
    }
}

#[test]
fn mx_membership_is_strict() {
    let mu = PointMeasure::from_points(Space::punctured_line(), [2.0, -0.5]).unwrap();
    assert!(mu.in_mx(1.9));
    assert!(!mu.in_mx(2.0));
    assert_eq!(mu.count_modulus_above(0.5), 1);
}

#[test]
fn unit_interval_rejects_line_atoms() {
    assert!(PointMeasure::from_points(Space::unit_interval(), [1.5]).is_err());
    assert!(PointMeasure::from_points(Space::unit_interval(), [0.0]).is_err());
    assert!(PointMeasure::from_points(Space::unit_interval(), [1.0]).is_ok());
}

#[test]
fn near_indicator_dominates_nothing_below_level() {
    let sp = Space::punctured_line();
    let ramp = TestFunction::default_ramp(&sp);
    let f = TestFunction::near_indicator(&sp, 2.0, ramp, 50.0).unwrap();
    assert_eq!(f.eval(1.99), 0.0);
    assert_eq!(f.eval(2.0 + ramp), 50.0);
    assert!(f.inner_gap() >= 2.0);
}
