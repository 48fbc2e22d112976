//! Extend a function known on an inner core of the domain across the
//! boundary collar using dyadic sector averages in map coordinates.

use sobex::conformal::{build_map, MapSide};
use sobex::extend::{
    inner_extend, parse_family, sample_inner, sobolev_seminorm, NormRegion,
};
use sobex::geom::DomainSpec;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("disk");
    let family = parse_family(args.get(2).map(String::as_str).unwrap_or("x")).unwrap();
    let p: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let eps: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.125);
    let h: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1.0 / 192.0);
    let d = match kind {
        "square" => DomainSpec::unit_square(),
        _ => DomainSpec::unit_disk(),
    };

    let mi = build_map(&d, MapSide::Interior, 1e-3).unwrap();
    let u = sample_inner(&d, &mi, family, h, eps).unwrap();
    let core = sobolev_seminorm(&u, p, NormRegion::Interior).unwrap();
    let t0 = std::time::Instant::now();
    let v = inner_extend(&u, eps, &mi, &d).unwrap();
    println!("collar filled in {:?}", t0.elapsed());
    let full = sobolev_seminorm(&v, p, NormRegion::Interior).unwrap();
    println!(
        "core norm {:.5} -> extended norm {:.5}, ratio {:.4} (eps = {})",
        core.norm,
        full.norm,
        full.norm / core.norm,
        eps
    );
}
