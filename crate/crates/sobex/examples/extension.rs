//! Run the full extension pipeline: sample a test function on a domain,
//! build the Whitney reflection and partition of unity, extend to the
//! complement, and compare Sobolev norms.

use sobex::conformal::{build_map, MapSide};
use sobex::extend::{
    build_pou, extend_exterior, parse_family, sample, sobolev_seminorm, NormRegion,
};
use sobex::geom::DomainSpec;
use sobex::reflect::build_reflection;
use sobex::whitney::{decompose, Side};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("disk");
    let family = parse_family(args.get(2).map(String::as_str).unwrap_or("x")).unwrap();
    let p: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let h: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1.0 / 128.0);
    let depth: i32 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(6);
    let d = match kind {
        "square" => DomainSpec::unit_square(),
        "lshape" => DomainSpec::l_shape(),
        _ => DomainSpec::unit_disk(),
    };

    let t0 = std::time::Instant::now();
    let mi = build_map(&d, MapSide::Interior, 1e-3).unwrap();
    let me = build_map(&d, MapSide::Exterior, 1e-3).unwrap();
    let wi = decompose(&d, Side::Interior, depth).unwrap();
    let we = decompose(&d, Side::ExteriorBounded, depth).unwrap();
    let r = build_reflection(&wi, &we, &mi, &me).unwrap();
    let pou = build_pou(&we, &r);
    println!(
        "setup in {:?}: {} interior / {} exterior squares, kappa {:.2}",
        t0.elapsed(),
        wi.len(),
        we.len(),
        pou.kappa
    );

    let u = sample(&d, family, h).unwrap();
    let eu = extend_exterior(&u, &d, &r, &wi, &pou).unwrap();
    let nu = sobolev_seminorm(&u, p, NormRegion::Interior).unwrap();
    let ne = sobolev_seminorm(&eu, p, NormRegion::All).unwrap();
    println!(
        "input norm {:.5} (seminorm {:.5}) on {}x{} grid",
        nu.norm, nu.seminorm, u.nx, u.ny
    );
    println!(
        "extension norm {:.5} (seminorm {:.5}) on {}x{} grid",
        ne.norm, ne.seminorm, eu.nx, eu.ny
    );
    println!("norm ratio {:.4}", ne.norm / nu.norm);
}
