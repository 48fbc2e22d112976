//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (run with `--nocapture` to see the lines for passing
//! criteria).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sobex::capacity::{circle_polyline, estimate_capacity, CapacityProblem};
use sobex::conformal::{build_map, evaluate, hyperbolic_distance_disk, MapSide};
use sobex::extend::{
    build_pou, extend_exterior, inner_extend, necessity_test_function, sample, sample_inner,
    sobolev_seminorm, NormRegion, TestFamily,
};
use sobex::geom::{DomainSpec, Point};
use sobex::metricpath::{
    duality_check, exponent_sweep, path_cost, CostFunctional, PathSide, SamplingPlan, Verdict,
};
use sobex::reflect::{build_reflection, verify_sum_estimate};
use sobex::whitney::{decompose, whitney_sum, Side};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {}: {} ({})",
        criterion,
        if pass { "pass" } else { "FAIL" },
        detail
    );
    assert!(pass, "criterion {} failed: {}", criterion, detail);
}

fn suite_domains() -> Vec<(&'static str, DomainSpec)> {
    vec![
        ("disk", DomainSpec::unit_disk()),
        ("square", DomainSpec::unit_square()),
        ("l_shape", DomainSpec::l_shape()),
        ("slit_disk", DomainSpec::slit_disk(1.0, 0.5).unwrap()),
        ("power_cusp", DomainSpec::power_cusp(2.0, 1.0).unwrap()),
    ]
}

#[test]
fn criterion_1_whitney_invariants() {
    let mut worst = String::new();
    let mut pass = true;
    for (name, d) in suite_domains() {
        let t0 = Instant::now();
        for depth in 6..=8 {
            let w = decompose(&d, Side::Interior, depth).unwrap();
            for (id, q) in w.squares.iter().enumerate() {
                let (x0, y0, x1, y1) = q.bounds();
                let dist = d.distance_box_to_boundary(x0, y0, x1, y1);
                let l = q.side();
                if !(l <= dist * (1.0 + 1e-9) && dist <= 4.0 * 2f64.sqrt() * l * (1.0 + 1e-9)) {
                    pass = false;
                    worst = format!("{} depth {} square {}: l={} dist={}", name, depth, id, l, dist);
                }
                for &nb in w.neighbors(id).unwrap() {
                    let ratio = w.squares[nb].side() / l;
                    if !(0.25 - 1e-12..=4.0 + 1e-12).contains(&ratio) {
                        pass = false;
                        worst = format!("{} depth {}: neighbor ratio {}", name, depth, ratio);
                    }
                }
            }
        }
        let dt = t0.elapsed();
        if dt.as_secs_f64() > 10.0 {
            pass = false;
            worst = format!("{} took {:?} for depths 6-8", name, dt);
        }
    }
    report(
        "1 whitney invariants",
        pass,
        if pass { "5 domains, depths 6-8" } else { &worst },
    );
}

#[test]
fn criterion_2_quadrature_oracle() {
    let d = DomainSpec::unit_disk();
    let f = CostFunctional::complement(1.5).unwrap();
    let seg = [Point::new(2.0, 0.0), Point::new(3.0, 0.0)];
    let cost = path_cost(&seg, &d, &f).unwrap();
    let oracle = 2.0 * (2f64.sqrt() - 1.0);
    let err = (cost - oracle).abs();
    report(
        "2 quadrature oracle",
        err < 1e-5,
        &format!("cost {} vs {} (err {:.2e})", cost, oracle, err),
    );
}

#[test]
fn criterion_3_condition_verdicts() {
    let exps = [1.2, 1.5, 1.8];
    let plan = SamplingPlan::default();
    let mut pass = true;
    let mut detail = String::new();
    for (name, d) in [
        ("disk", DomainSpec::unit_disk()),
        ("square", DomainSpec::unit_square()),
    ] {
        let t0 = Instant::now();
        let entries = exponent_sweep(&d, PathSide::Complement, &exps, &plan).unwrap();
        for e in &entries {
            if e.verdict != Verdict::Bounded {
                pass = false;
                detail = format!("{} p={} verdict {:?}", name, e.exponent, e.verdict);
            }
        }
        if t0.elapsed().as_secs_f64() > 60.0 {
            pass = false;
            detail = format!("{} sweep exceeded 60 s", name);
        }
    }
    let slit = DomainSpec::slit_disk(1.0, 0.5).unwrap();
    let t0 = Instant::now();
    let entries = exponent_sweep(&slit, PathSide::Complement, &exps, &plan).unwrap();
    for e in &entries {
        if e.verdict != Verdict::Growing {
            pass = false;
            detail = format!("slit p={} verdict {:?}", e.exponent, e.verdict);
        }
    }
    // Straddling pairs across the slit: halving the pair separation must
    // grow the condition ratio by at least 1.5x.
    let diam = slit.diameter();
    for &p in &exps {
        let f = CostFunctional::complement(p).unwrap();
        let mut ratios = Vec::new();
        for depth in [6, 7, 8] {
            let gap = diam * 2f64.powi(-depth);
            let z1 = Point::new(0.75, 0.5 * gap);
            let z2 = Point::new(0.75, -0.5 * gap);
            let r = sobex::metricpath::optimal_path_at_depth(&z1, &z2, &slit, &f, depth).unwrap();
            ratios.push(r.cost / z1.dist(&z2).powf(f.target_exponent));
        }
        for w in ratios.windows(2) {
            let growth = w[1] / w[0];
            if growth < 1.5 {
                pass = false;
                detail = format!("slit p={} straddling growth {} per halving", p, growth);
            }
        }
    }
    if t0.elapsed().as_secs_f64() > 60.0 {
        pass = false;
        detail = "slit sweep exceeded 60 s".into();
    }
    report(
        "3 condition verdicts",
        pass,
        if pass {
            "disk/square Bounded, slit Growing with >=1.5x growth"
        } else {
            &detail
        },
    );
}

#[test]
fn criterion_4_sum_integral_equivalence() {
    let d = DomainSpec::unit_disk();
    let p = 1.5;
    let we = decompose(&d, Side::ExteriorBounded, 7).unwrap();
    let f = CostFunctional::complement(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut pass = true;
    let mut detail = String::new();
    let mut done = 0;
    while done < 20 {
        // Random arc-like polyline in the exterior annulus 1.1 <= r <= 2.2.
        let r0 = rng.gen_range(1.1..2.0);
        let a0 = rng.gen_range(0.0..std::f64::consts::TAU);
        let span = rng.gen_range(0.3..2.0);
        let drift = rng.gen_range(-0.3..0.3f64);
        let n = 24;
        let curve: Vec<Point> = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                let r = (r0 + drift * t).clamp(1.1, 2.2);
                let a = a0 + span * t;
                Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let trace = match we.trace_curve(&curve) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let sum = whitney_sum(&trace, 2.0 - p);
        let cost = path_cost(&curve, &d, &f).unwrap();
        let ratio = sum / cost;
        if !(1.0 / 30.0..=30.0).contains(&ratio) {
            pass = false;
            detail = format!("curve {}: sum/cost = {}", done, ratio);
        }
        done += 1;
    }
    report(
        "4 sum-integral equivalence",
        pass,
        if pass { "20 curves within [1/30, 30]" } else { &detail },
    );
}

#[test]
fn criterion_5_capacity_oracle() {
    let r = 1.0;
    let big_r = std::f64::consts::E;
    let d = DomainSpec::annulus(r, big_r).unwrap();
    let h = 1.0 / 128.0;
    let prob = CapacityProblem {
        e: circle_polyline(Point::new(0.0, 0.0), r, 256),
        f: circle_polyline(Point::new(0.0, 0.0), big_r, 256),
        domain: d,
        h,
    };
    let est = estimate_capacity(&prob).unwrap();
    let oracle = std::f64::consts::TAU;
    let rel = (est.value - oracle).abs() / oracle;

    // Monotonicity: the same pair of continua in a larger domain has larger
    // capacity.
    let small = DomainSpec::disk(Point::new(0.0, 0.0), 1.0);
    let large = DomainSpec::disk(Point::new(0.0, 0.0), 1.5);
    let e = circle_polyline(Point::new(-0.4, 0.0), 0.15, 96);
    let f = circle_polyline(Point::new(0.4, 0.0), 0.15, 96);
    let cap = |dom: DomainSpec| {
        estimate_capacity(&CapacityProblem {
            e: e.clone(),
            f: f.clone(),
            domain: dom,
            h: 1.0 / 96.0,
        })
        .unwrap()
        .value
    };
    let c_small = cap(small);
    let c_large = cap(large);
    let pass = rel < 0.05 && c_large > c_small;
    report(
        "5 capacity oracle",
        pass,
        &format!(
            "annulus {} vs 2pi (rel {:.3}); monotone {} < {}",
            est.value, rel, c_small, c_large
        ),
    );
}

#[test]
fn criterion_6_conformal_distortion() {
    let d = DomainSpec::unit_square();
    let m = build_map(&d, MapSide::Interior, 1e-4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut violations = 0;
    let mut done = 0;
    while done < 200 {
        let z = Point::new(rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95));
        let w = Point::new(rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95));
        if z.norm() >= 0.97 || w.norm() >= 0.97 {
            continue;
        }
        let dh = hyperbolic_distance_disk(z, w).unwrap();
        if dh > 1.0 {
            continue;
        }
        let (_, dz) = evaluate(&m, z).unwrap();
        let (_, dw) = evaluate(&m, w).unwrap();
        let ratio = dz.norm() / dw.norm();
        if !((-3f64).exp()..=3f64.exp()).contains(&ratio) {
            violations += 1;
        }
        done += 1;
    }
    report(
        "6 conformal distortion",
        violations == 0,
        &format!("{} violations over 200 pairs", violations),
    );
}

#[test]
fn criterion_7_reflection_sum_estimates() {
    let mut pass = true;
    let mut detail = String::new();
    for (name, d) in [
        ("disk", DomainSpec::unit_disk()),
        ("square", DomainSpec::unit_square()),
    ] {
        let mi = build_map(&d, MapSide::Interior, 1e-3).unwrap();
        let me = build_map(&d, MapSide::Exterior, 1e-3).unwrap();
        let mut ratios = Vec::new();
        for depth in [6, 7] {
            let wi = decompose(&d, Side::Interior, depth).unwrap();
            let we = decompose(&d, Side::ExteriorBounded, depth).unwrap();
            let r = build_reflection(&wi, &we, &mi, &me).unwrap();
            ratios.push(verify_sum_estimate(&r, &wi, &we, 1.5).unwrap().max_ratio);
        }
        let change = (ratios[0] - ratios[1]).abs() / ratios[1];
        if change > 0.25 {
            pass = false;
            detail = format!("{}: {} -> {} ({:.0}% change)", name, ratios[0], ratios[1], 100.0 * change);
        }
    }
    report(
        "7 reflection sum estimates",
        pass,
        if pass { "max family ratio stable 6 -> 7" } else { &detail },
    );
}

#[test]
fn criterion_8_extension_operator() {
    let p = 1.5;
    let families = [
        ("one", TestFamily::One),
        ("x", TestFamily::LinearX),
        ("re_z2", TestFamily::ReSquare),
        ("pow_0.6", TestFamily::PowerDist { a: 0.6 }),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, d) in [
        ("disk", DomainSpec::unit_disk()),
        ("square", DomainSpec::unit_square()),
    ] {
        let mi = build_map(&d, MapSide::Interior, 1e-3).unwrap();
        let me = build_map(&d, MapSide::Exterior, 1e-3).unwrap();
        let wi = decompose(&d, Side::Interior, 6).unwrap();
        let we = decompose(&d, Side::ExteriorBounded, 6).unwrap();
        let r = build_reflection(&wi, &we, &mi, &me).unwrap();
        let pou = build_pou(&we, &r);
        for (fname, fam) in families {
            let mut ratios = Vec::new();
            for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
                let u = sample(&d, fam, h).unwrap();
                let eu = extend_exterior(&u, &d, &r, &wi, &pou).unwrap();
                if fam == TestFamily::One {
                    for (v, m) in eu.values.iter().zip(&eu.mask) {
                        if *m != sobex::RegionTag::Boundary && (v - 1.0).abs() > 1e-12 {
                            pass = false;
                            detail = format!("{} E(1) = {} somewhere", name, v);
                        }
                    }
                }
                let nu = sobolev_seminorm(&u, p, NormRegion::Interior).unwrap();
                let ne = sobolev_seminorm(&eu, p, NormRegion::All).unwrap();
                ratios.push(ne.norm / nu.norm);
            }
            let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
                / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread > 2.0 {
                pass = false;
                detail = format!("{} u={} ratios {:?} spread {:.2}", name, fname, ratios, spread);
            }
        }
    }
    report(
        "8 extension operator",
        pass,
        if pass { "norm ratios stable, constants exact" } else { &detail },
    );
}

#[test]
fn criterion_9_inner_extension() {
    let d = DomainSpec::unit_disk();
    let mi = build_map(&d, MapSide::Interior, 1e-4).unwrap();
    let p = 1.5;
    let h = 1.0 / 192.0;
    let mut ratios = Vec::new();
    for eps in [0.25, 0.125, 0.0625] {
        let u = sample_inner(&d, &mi, TestFamily::LinearX, h, eps).unwrap();
        let eu = inner_extend(&u, eps, &mi, &d).unwrap();
        let nu = sobolev_seminorm(&u, p, NormRegion::Interior).unwrap();
        let ne = sobolev_seminorm(&eu, p, NormRegion::Interior).unwrap();
        ratios.push(ne.norm / nu.norm);
    }
    let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        "9 inner extension",
        spread <= 2.0,
        &format!("ratios {:?} spread {:.2}", ratios, spread),
    );
}

#[test]
fn criterion_10_necessity_test_function() {
    let d = DomainSpec::unit_disk();
    let p = 1.5;
    let h = 1.0 / 256.0;
    let mut ratios = Vec::new();
    for j in 1..=4 {
        let sep = 2f64.powi(-j);
        // Boundary points symmetric about (1, 0) at chord distance sep.
        let t = (0.5 * sep).asin();
        let z1 = Point::new(t.cos(), t.sin());
        let z2 = Point::new(t.cos(), -t.sin());
        let rep = necessity_test_function(&d, &z1, &z2, 1.0, h).unwrap();
        let norm = sobolev_seminorm(&rep.phi, p, NormRegion::Interior).unwrap();
        let energy = norm.seminorm.powf(p);
        ratios.push(energy / z1.dist(&z2).powf(2.0 - p));
    }
    let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        "10 necessity test function",
        spread <= 2.0,
        &format!("ratios {:?} spread {:.2}", ratios, spread),
    );
}

#[test]
fn criterion_11_duality_consistency() {
    let plan = SamplingPlan::default();
    let mut pass = true;
    let mut detail = String::new();
    for (name, d) in [
        ("disk", DomainSpec::unit_disk()),
        ("square", DomainSpec::unit_square()),
    ] {
        let rep = duality_check(&d, 1.5, &plan).unwrap();
        if rep.complement.verdict != Verdict::Bounded || rep.interior.verdict != Verdict::Bounded {
            pass = false;
            detail = format!(
                "{}: complement {:?}, interior {:?}",
                name, rep.complement.verdict, rep.interior.verdict
            );
        }
    }
    report(
        "11 duality consistency",
        pass,
        if pass { "disk and square both Bounded at p=1.5, q=3" } else { &detail },
    );
}
