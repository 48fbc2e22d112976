//! Estimate the curve-condition constant for a domain over a sweep of
//! exponents and report the refinement trend, verdicts, and the duality
//! check at p = 1.5.

use sobex::geom::DomainSpec;
use sobex::metricpath::{duality_check, exponent_sweep, PathSide, SamplingPlan};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("disk");
    let d = match kind {
        "square" => DomainSpec::unit_square(),
        "lshape" => DomainSpec::l_shape(),
        "slit" => DomainSpec::slit_disk(1.0, 0.5).unwrap(),
        "cusp" => DomainSpec::power_cusp(2.0, 1.0).unwrap(),
        _ => DomainSpec::unit_disk(),
    };
    let plan = SamplingPlan::default();
    let t0 = std::time::Instant::now();
    let entries = exponent_sweep(&d, PathSide::Complement, &[1.2, 1.5, 1.8], &plan).unwrap();
    println!("complement sweep in {:?}", t0.elapsed());
    for e in &entries {
        let trend: Vec<String> = e.trend.iter().map(|r| format!("{:.3}", r)).collect();
        println!(
            "p = {}: max ratio {:.4}, trend [{}], verdict {:?}",
            e.exponent,
            e.max_ratio,
            trend.join(", "),
            e.verdict
        );
    }
    let t1 = std::time::Instant::now();
    let dual = duality_check(&d, 1.5, &plan).unwrap();
    println!(
        "duality p = {} (q = {}): complement {:?}, interior {:?}, agree = {} ({:?})",
        dual.p,
        dual.q,
        dual.complement.verdict,
        dual.interior.verdict,
        dual.agree,
        t1.elapsed()
    );
}
