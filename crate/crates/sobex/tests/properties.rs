//! Property-based tests for the geometric core: boundary distances,
//! Whitney decomposition invariants, path-cost additivity, and norm
//! homogeneity under randomized inputs.

use proptest::prelude::*;

use sobex::extend::{sample, sobolev_seminorm, NormRegion, TestFamily};
use sobex::geom::{DomainSpec, Point, RegionTag};
use sobex::metricpath::{path_cost, CostFunctional};
use sobex::whitney::{decompose, Side};

fn finite_point() -> impl Strategy<Value = Point> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Distance to a circle boundary has the closed form ||p - c| - r|.
    #[test]
    fn disk_boundary_distance_closed_form(
        p in finite_point(),
        cx in -1.0..1.0f64,
        cy in -1.0..1.0f64,
        r in 0.2..2.0f64,
    ) {
        let d = DomainSpec::disk(Point::new(cx, cy), r);
        let expect = (p.dist(&Point::new(cx, cy)) - r).abs();
        let got = d.distance_to_boundary(&p);
        prop_assert!((got - expect).abs() <= 1e-9 * (1.0 + expect));
    }

    /// Region classification agrees with the sign of the radial distance.
    #[test]
    fn disk_classification_matches_radius(
        p in finite_point(),
        r in 0.2..2.0f64,
    ) {
        let d = DomainSpec::disk(Point::new(0.0, 0.0), r);
        let rad = p.norm();
        match d.classify(&p) {
            RegionTag::Interior => prop_assert!(rad < r + 1e-9),
            RegionTag::Exterior => prop_assert!(rad > r - 1e-9),
            RegionTag::Boundary => prop_assert!((rad - r).abs() <= 1e-6),
        }
    }

    /// Segment costs are additive under splitting at an interior parameter.
    #[test]
    fn path_cost_is_additive(
        t in 0.1..0.9f64,
        p in 1.1..1.9f64,
    ) {
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(p).unwrap();
        let a = Point::new(1.5, -0.5);
        let b = Point::new(2.5, 1.5);
        let m = a.lerp(&b, t);
        let whole = path_cost(&[a, b], &d, &f).unwrap();
        let split = path_cost(&[a, m, b], &d, &f).unwrap();
        prop_assert!((whole - split).abs() <= 1e-6 * whole);
    }

    /// The discrete Sobolev seminorm is absolutely homogeneous.
    #[test]
    fn seminorm_is_homogeneous(
        c in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0]),
        p in 1.1..1.9f64,
    ) {
        let d = DomainSpec::unit_disk();
        let u = sample(&d, TestFamily::LinearX, 1.0 / 32.0).unwrap();
        let mut v = u.clone();
        for val in &mut v.values {
            *val *= c;
        }
        let nu = sobolev_seminorm(&u, p, NormRegion::Interior).unwrap();
        let nv = sobolev_seminorm(&v, p, NormRegion::Interior).unwrap();
        let expect: f64 = c.abs() * nu.seminorm;
        prop_assert!((nv.seminorm - expect).abs() <= 1e-9 * (1.0 + expect));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Whitney squares of a random disk keep the distance-to-side bounds,
    /// and point lookup returns a square containing the query point.
    #[test]
    fn whitney_invariants_on_random_disks(
        cx in -0.5..0.5f64,
        cy in -0.5..0.5f64,
        r in 0.4..1.6f64,
        qx in -1.0..1.0f64,
        qy in -1.0..1.0f64,
    ) {
        let d = DomainSpec::disk(Point::new(cx, cy), r);
        let w = decompose(&d, Side::Interior, 5).unwrap();
        prop_assert!(!w.is_empty());
        for q in &w.squares {
            let side = q.side();
            let dist = d.distance_to_boundary(&q.center());
            prop_assert!(dist >= 0.5 * side, "square too close: {} < {}", dist, side);
            prop_assert!(dist <= 5.0 * std::f64::consts::SQRT_2 * side);
        }
        let query = Point::new(cx + qx * 0.6 * r, cy + qy * 0.6 * r);
        if let Some(id) = w.find(&query) {
            prop_assert!(w.squares[id].contains(&query));
        }
    }
}
