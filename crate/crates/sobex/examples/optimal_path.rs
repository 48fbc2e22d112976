//! Find the cheapest complement curve between two points under the
//! distance-weighted cost and compare the ratio against the straddling
//! geometry of a slit disk.

use sobex::geom::{DomainSpec, Point};
use sobex::metricpath::{optimal_path_at_depth, CostFunctional};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let depth: i32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);
    let f = CostFunctional::complement(p).unwrap();

    // A pair far from the unit disk: the straight segment is essentially
    // optimal and the ratio stays modest.
    let d = DomainSpec::unit_disk();
    let z1 = Point::new(2.0, 0.0);
    let z2 = Point::new(0.0, 2.0);
    let r = optimal_path_at_depth(&z1, &z2, &d, &f, depth).unwrap();
    println!(
        "disk complement ({:.1},{:.1})->({:.1},{:.1}): cost {:.5}, length {:.4}, {} vertices",
        z1.x,
        z1.y,
        z2.x,
        z2.y,
        r.cost,
        r.length,
        r.path.len()
    );
    println!(
        "  ratio = {:.4}",
        r.cost / z1.dist(&z2).powf(f.target_exponent)
    );

    // A pair straddling the slit of a slit disk: the curve must round the
    // slit tip and the ratio blows up as the separation shrinks.
    let slit = DomainSpec::slit_disk(1.0, 0.5).unwrap();
    for k in [4, 5, 6, 7] {
        let gap = slit.diameter() * (2.0f64).powi(-k);
        let a = Point::new(0.75, 0.5 * gap);
        let b = Point::new(0.75, -0.5 * gap);
        let r = optimal_path_at_depth(&a, &b, &slit, &f, k).unwrap();
        println!(
            "slit straddle gap {:.5}: cost {:.5}, ratio {:.4}",
            gap,
            r.cost,
            r.cost / gap.powf(f.target_exponent)
        );
    }
}
