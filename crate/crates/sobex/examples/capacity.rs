//! Estimate the condenser capacity between two circles inside a domain and
//! compare the concentric case with the analytic annulus value.

use std::f64::consts::TAU;

use sobex::capacity::{circle_polyline, estimate_capacity, separation_ratio, CapacityProblem};
use sobex::geom::{DomainSpec, Point};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let h: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0 / 96.0);

    // Concentric circles of radii 1 and e inside a large disk: the capacity
    // of the annulus is 2*pi / log(e) = 2*pi.
    let d = DomainSpec::disk(Point::new(0.0, 0.0), 4.0);
    let inner = circle_polyline(Point::new(0.0, 0.0), 1.0, 256);
    let outer = circle_polyline(Point::new(0.0, 0.0), std::f64::consts::E, 256);
    let prob = CapacityProblem {
        e: inner,
        f: outer,
        domain: d.clone(),
        h,
    };
    let est = estimate_capacity(&prob).unwrap();
    println!(
        "annulus (1, e): capacity {:.5} vs 2*pi = {:.5} ({} iterations, residual {:.2e})",
        est.value,
        TAU,
        est.iterations,
        est.residual
    );

    // Two small disks inside the unit disk: capacity falls as the plates
    // separate.
    let d = DomainSpec::unit_disk();
    for sep in [0.4, 0.6, 0.8] {
        let e = circle_polyline(Point::new(-0.5 * sep, 0.0), 0.1, 128);
        let f = circle_polyline(Point::new(0.5 * sep, 0.0), 0.1, 128);
        let ratio = separation_ratio(&e, &f, &d).unwrap();
        let prob = CapacityProblem {
            e,
            f,
            domain: d.clone(),
            h,
        };
        let est = estimate_capacity(&prob).unwrap();
        println!(
            "plates at separation {:.1}: capacity {:.5}, separation ratio {:.3}",
            sep, est.value, ratio
        );
    }
}
