//! Build the interior and exterior conformal maps for a domain, print the
//! boundary correspondence, and spot-check the Koebe-style derivative
//! distortion on nearby interior points.

use sobex::conformal::{build_map, correspondence_table, evaluate, MapSide};
use sobex::geom::{DomainSpec, Point};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("square");
    let tol: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let d = match kind {
        "disk" => DomainSpec::unit_disk(),
        "lshape" => DomainSpec::l_shape(),
        _ => DomainSpec::unit_square(),
    };
    let t0 = std::time::Instant::now();
    let mi = build_map(&d, MapSide::Interior, tol).unwrap();
    let me = build_map(&d, MapSide::Exterior, tol).unwrap();
    println!("maps built in {:?}", t0.elapsed());

    let rows = correspondence_table(&mi, 8).unwrap();
    println!("interior boundary correspondence (8 angles):");
    for r in &rows {
        println!(
            "  angle {:.4} -> ({:+.4}, {:+.4}), arc length {:.4}",
            r.angle, r.image.x, r.image.y, r.arc_length
        );
    }
    let rows = correspondence_table(&me, 4).unwrap();
    println!("exterior boundary correspondence (4 angles):");
    for r in &rows {
        println!(
            "  angle {:.4} -> ({:+.4}, {:+.4})",
            r.angle, r.image.x, r.image.y
        );
    }

    // Derivative distortion between points at bounded hyperbolic distance.
    let z1 = Point::new(0.3, 0.1);
    let z2 = Point::new(0.35, 0.12);
    let (w1, d1) = evaluate(&mi, z1).unwrap();
    let (w2, d2) = evaluate(&mi, z2).unwrap();
    println!(
        "interior map: ({:.2},{:.2}) -> ({:.4},{:.4}), ({:.2},{:.2}) -> ({:.4},{:.4})",
        z1.x, z1.y, w1.x, w1.y, z2.x, z2.y, w2.x, w2.y
    );
    println!(
        "derivative moduli {:.5} and {:.5}, ratio {:.4}",
        d1.norm(),
        d2.norm(),
        d1.norm() / d2.norm()
    );
}
