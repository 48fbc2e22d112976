//! Build the necessity test function for a boundary pair, report its
//! gradient energy against the separation power, and run the projection
//! lower-bound check on a sharp transition.

use sobex::extend::{
    lower_bound_check, necessity_test_function, sample, sobolev_seminorm, NormRegion,
    TestFamily,
};
use sobex::geom::{DomainSpec, Point};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let h: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0 / 256.0);
    let d = DomainSpec::unit_disk();

    // Boundary pairs at dyadic separations straddling the point (1, 0).
    for j in 1..=4 {
        let sep = (2.0f64).powi(-j);
        let t = (0.5 * sep).asin();
        let z1 = Point::new(t.cos(), t.sin());
        let z2 = Point::new(t.cos(), -t.sin());
        let rep = necessity_test_function(&d, &z1, &z2, 1.0, h).unwrap();
        let n = sobolev_seminorm(&rep.phi, p, NormRegion::Interior).unwrap();
        let energy = n.seminorm.powf(p);
        println!(
            "sep {:.4}: c0 {:.3} (John surrogate {:.3}), P1 diam {:.4}, energy/sep^(2-p) = {:.4}",
            sep,
            rep.c0,
            rep.j_est,
            rep.p1_diam,
            energy / sep.powf(2.0 - p)
        );
    }

    // The projection lower bound applies once both level sets are thick.
    let u = sample(&d, TestFamily::LinearX, 1.0 / 128.0).unwrap();
    let mut v = u.clone();
    for val in &mut v.values {
        *val = if *val > 0.25 { 1.0 } else { 0.0 };
    }
    let lb = lower_bound_check(&v, p, 0.25).unwrap();
    println!(
        "step function: applicable {}, projections {:?} / {:?}, ratio {:.4}",
        lb.applicable, lb.proj0, lb.proj1, lb.ratio
    );
}
