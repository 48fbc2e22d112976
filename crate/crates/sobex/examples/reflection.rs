//! Build the exterior-to-interior Whitney reflection for a domain and print
//! family statistics and the sum-estimate ratios.

use sobex::conformal::{build_map, MapSide};
use sobex::geom::DomainSpec;
use sobex::reflect::{build_reflection, verify_sum_estimate};
use sobex::whitney::{decompose, Side};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("disk");
    let depth: i32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let d = match kind {
        "square" => DomainSpec::unit_square(),
        "lshape" => DomainSpec::l_shape(),
        _ => DomainSpec::unit_disk(),
    };
    let t0 = std::time::Instant::now();
    let mi = build_map(&d, MapSide::Interior, 1e-3).unwrap();
    let me = build_map(&d, MapSide::Exterior, 1e-3).unwrap();
    println!("maps built in {:?}", t0.elapsed());
    let wi = decompose(&d, Side::Interior, depth).unwrap();
    let we = decompose(&d, Side::ExteriorBounded, depth).unwrap();
    println!(
        "interior squares: {}, exterior squares: {}",
        wi.len(),
        we.len()
    );
    let t1 = std::time::Instant::now();
    let r = build_reflection(&wi, &we, &mi, &me).unwrap();
    println!("reflection built in {:?}", t1.elapsed());
    let sizes: Vec<usize> = r.families.iter().map(|f| f.members.len()).collect();
    println!(
        "families: {}, largest family: {}",
        sizes.len(),
        sizes.iter().max().unwrap()
    );
    for s in [1.2, 1.5, 1.8] {
        let rep = verify_sum_estimate(&r, &wi, &we, s).unwrap();
        println!("s = {}: max family ratio {:.4}", s, rep.max_ratio);
    }
}
