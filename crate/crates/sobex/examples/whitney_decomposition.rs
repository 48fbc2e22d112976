//! Decompose a domain into Whitney squares on both sides and print level
//! statistics, then trace a sample curve and report its weighted square sum.

use std::collections::BTreeMap;

use sobex::geom::{DomainSpec, Point};
use sobex::whitney::{decompose, whitney_sum, Side};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("disk");
    let depth: i32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let d = match kind {
        "square" => DomainSpec::unit_square(),
        "lshape" => DomainSpec::l_shape(),
        "slit" => DomainSpec::slit_disk(1.0, 0.5).unwrap(),
        _ => DomainSpec::unit_disk(),
    };
    for side in [Side::Interior, Side::ExteriorBounded] {
        let w = decompose(&d, side, depth).unwrap();
        let mut levels: BTreeMap<i32, usize> = BTreeMap::new();
        for q in &w.squares {
            *levels.entry(q.level).or_insert(0) += 1;
        }
        println!("{:?}: {} squares, collar area {:.2e}", side, w.len(), w.collar_area);
        for (level, count) in levels {
            println!("  level {:>3}: {}", level, count);
        }
    }
    // Weighted sum over squares met by an exterior arc, the discrete
    // counterpart of the path-cost integral.
    let we = decompose(&d, Side::ExteriorBounded, depth).unwrap();
    let arc: Vec<Point> = (0..=64)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / 64.0;
            let r = 0.75 * d.diameter();
            let c = d.base_point();
            Point::new(c.x + r * t.cos(), c.y + r * t.sin())
        })
        .collect();
    let trace = we.trace_curve(&arc).unwrap();
    println!(
        "exterior arc meets {} squares, whitney_sum(0.5) = {:.4}",
        trace.hits.len(),
        whitney_sum(&trace, 0.5)
    );
}
