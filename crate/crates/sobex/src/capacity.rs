//! Discrete conformal-capacity estimation: Dirichlet-energy minimization of
//! the 5-point Laplacian with u = 1 on one continuum and u = 0 on another,
//! natural (reflecting) conditions on the rest of the boundary.

use crate::error::{Result, SobexError};
use crate::geom::{point_segment_distance, DomainSpec, Point};
use crate::metricpath::{CostFunctional, PathGrid, PathSide};

/// A capacity problem: two disjoint continua inside (or on the boundary of)
/// a domain, and a grid spacing.
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    pub e: Vec<Point>,
    pub f: Vec<Point>,
    pub domain: DomainSpec,
    pub h: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CapacityEstimate {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Distance from a point to a polyline (a single point is a degenerate one).
fn polyline_distance(p: &Point, poly: &[Point]) -> f64 {
    if poly.len() == 1 {
        return p.dist(&poly[0]);
    }
    poly.windows(2)
        .map(|w| point_segment_distance(p, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn polyline_min_distance(a: &[Point], b: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        best = best.min(polyline_distance(p, b));
    }
    for p in b {
        best = best.min(polyline_distance(p, a));
    }
    best
}

/// Estimate the capacity `inf { ||grad u||^2 : u = 1 on E, u = 0 on F }` by
/// solving the 5-point Laplace equation on grid cells inside the domain.
pub fn estimate_capacity(prob: &CapacityProblem) -> Result<CapacityEstimate> {
    if prob.e.is_empty() || prob.f.is_empty() {
        return Err(SobexError::Config("E and F must be nonempty".into()));
    }
    if prob.h <= 0.0 {
        return Err(SobexError::Config("grid spacing must be positive".into()));
    }
    let sep = polyline_min_distance(&prob.e, &prob.f);
    if prob.h > sep / 4.0 {
        return Err(SobexError::Resolution(format!(
            "h = {} exceeds a quarter of the E-F separation {sep}",
            prob.h
        )));
    }
    let d = &prob.domain;
    let h = prob.h;
    let (bx0, by0, bx1, by1) = d.boundary_bbox();
    let ox = bx0 - h;
    let oy = by0 - h;
    let nx = (((bx1 + h - ox) / h).ceil() as usize).max(1);
    let ny = (((by1 + h - oy) / h).ceil() as usize).max(1);
    if nx * ny > 40_000_000 {
        return Err(SobexError::Resolution(format!(
            "capacity grid would need {} cells",
            nx * ny
        )));
    }
    // Cell states: -1 inactive, 0 unknown, 1 fixed-one (E), 2 fixed-zero (F).
    let mut state = vec![-1i8; nx * ny];
    let mut unknown_ids = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let c = Point::new(ox + (ix as f64 + 0.5) * h, oy + (iy as f64 + 0.5) * h);
            if !d.is_inside(&c) {
                continue;
            }
            let id = iy * nx + ix;
            let de = polyline_distance(&c, &prob.e);
            let df = polyline_distance(&c, &prob.f);
            state[id] = match (de <= 0.5 * h, df <= 0.5 * h) {
                (true, true) => {
                    return Err(SobexError::Resolution(
                        "a grid cell touches both E and F".into(),
                    ))
                }
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => {
                    unknown_ids.push(id);
                    0
                }
            };
        }
    }
    if !state.contains(&1) || !state.contains(&2) {
        return Err(SobexError::Resolution(
            "E or F meets no grid cell inside the domain".into(),
        ));
    }
    // Map cell -> unknown index.
    let mut uidx = vec![u32::MAX; nx * ny];
    for (k, &id) in unknown_ids.iter().enumerate() {
        uidx[id] = k as u32;
    }
    let n = unknown_ids.len();
    let value_of = |st: i8| -> f64 {
        match st {
            1 => 1.0,
            _ => 0.0,
        }
    };
    // Assemble b and the matrix-free graph Laplacian over unknown cells.
    let neighbors = |id: usize| -> [Option<usize>; 4] {
        let ix = id % nx;
        let iy = id / nx;
        [
            (ix + 1 < nx).then(|| id + 1),
            (ix > 0).then(|| id - 1),
            (iy + 1 < ny).then(|| id + nx),
            (iy > 0).then(|| id - nx),
        ]
    };
    let mut diag = vec![0.0f64; n];
    let mut b = vec![0.0f64; n];
    for (k, &id) in unknown_ids.iter().enumerate() {
        for nb in neighbors(id).into_iter().flatten() {
            match state[nb] {
                -1 => {}
                0 => diag[k] += 1.0,
                st => {
                    diag[k] += 1.0;
                    b[k] += value_of(st);
                }
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, &id) in unknown_ids.iter().enumerate() {
            let mut v = diag[k] * x[k];
            for nb in neighbors(id).into_iter().flatten() {
                if state[nb] == 0 {
                    v -= x[uidx[nb] as usize];
                }
            }
            out[k] = v;
        }
    };
    // Conjugate gradients to relative residual 1e-8.
    let mut x = vec![0.0f64; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0f64; n];
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut rs = r.iter().map(|v| v * v).sum::<f64>();
    let max_iter = 20 * (n as f64).sqrt() as usize + 200;
    let mut iterations = 0;
    while rs.sqrt() / b_norm > 1e-8 && iterations < max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rs / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rs_new = r.iter().map(|v| v * v).sum::<f64>();
        let beta = rs_new / rs;
        rs = rs_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        iterations += 1;
    }
    let residual = rs.sqrt() / b_norm;
    if residual > 1e-6 {
        return Err(SobexError::NonConvergence(residual));
    }
    // Dirichlet energy: sum of squared differences over active edges.
    let u_of = |id: usize| -> f64 {
        match state[id] {
            0 => x[uidx[id] as usize],
            st => value_of(st),
        }
    };
    let mut energy = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let id = iy * nx + ix;
            if state[id] < 0 {
                continue;
            }
            if ix + 1 < nx && state[id + 1] >= 0 {
                let du = u_of(id) - u_of(id + 1);
                energy += du * du;
            }
            if iy + 1 < ny && state[id + nx] >= 0 {
                let du = u_of(id) - u_of(id + nx);
                energy += du * du;
            }
        }
    }
    Ok(CapacityEstimate {
        value: energy,
        residual,
        iterations,
    })
}

/// `min(diam_in(E), diam_in(F)) / dist_in(E, F)` with inner (inside-the-
/// domain) distances measured by shortest admissible path length.
pub fn separation_ratio(e: &[Point], f: &[Point], d: &DomainSpec) -> Result<f64> {
    if e.is_empty() || f.is_empty() {
        return Err(SobexError::Config("E and F must be nonempty".into()));
    }
    let floor = d.diameter() / 128.0;
    let grid = PathGrid::build(d, PathSide::Interior, floor)?;
    let len = CostFunctional::length(PathSide::Interior);
    let weights = grid.node_weights(&len);
    let samples = |poly: &[Point]| -> Vec<Point> {
        if poly.len() <= 6 {
            poly.to_vec()
        } else {
            let step = poly.len() / 6;
            poly.iter().step_by(step).copied().collect()
        }
    };
    let se = samples(e);
    let sf = samples(f);
    let inner = |a: &Point, b: &Point| -> Result<f64> {
        let path = grid.shortest_path(d, &weights, a, b)?;
        let smooth = grid.smooth(&path, d, &len)?;
        Ok(smooth.windows(2).map(|w| w[0].dist(&w[1])).sum())
    };
    let inner_diam = |pts: &[Point]| -> Result<f64> {
        if pts.len() < 2 {
            return Ok(0.0);
        }
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(inner(&pts[i], &pts[j])?);
            }
        }
        Ok(best)
    };
    let de = inner_diam(&se)?;
    let df = inner_diam(&sf)?;
    let mut dist = f64::INFINITY;
    for a in &se {
        for b in &sf {
            dist = dist.min(inner(a, b)?);
        }
    }
    if !dist.is_finite() || dist <= 0.0 {
        return Err(SobexError::Config(
            "E and F have no positive inner separation".into(),
        ));
    }
    Ok(de.min(df) / dist)
}

/// Circle polyline helper used by benchmarks and the CLI.
pub fn circle_polyline(center: Point, radius: f64, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / n as f64;
            Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn annulus_problem(h: f64) -> CapacityProblem {
        let r = 1.0;
        let big = std::f64::consts::E;
        CapacityProblem {
            e: circle_polyline(Point::new(0.0, 0.0), r, 512),
            f: circle_polyline(Point::new(0.0, 0.0), big, 512),
            domain: DomainSpec::annulus(r, big).unwrap(),
            h,
        }
    }

    #[test]
    fn annulus_capacity_matches_analytic_value() {
        // Cap = 2 pi / log(R/r) = 2 pi for R/r = e.
        let est = estimate_capacity(&annulus_problem(1.0 / 64.0)).unwrap();
        assert_relative_eq!(est.value, std::f64::consts::TAU, max_relative = 0.05);
        assert!(est.residual <= 1e-6);
    }

    #[test]
    fn capacity_is_scaling_invariant() {
        let base = estimate_capacity(&annulus_problem(1.0 / 48.0)).unwrap();
        let s = 2.0;
        let scaled = CapacityProblem {
            e: circle_polyline(Point::new(0.0, 0.0), s, 512),
            f: circle_polyline(Point::new(0.0, 0.0), s * std::f64::consts::E, 512),
            domain: DomainSpec::annulus(s, s * std::f64::consts::E).unwrap(),
            h: s / 48.0,
        };
        let est = estimate_capacity(&scaled).unwrap();
        assert_relative_eq!(est.value, base.value, max_relative = 0.01);
    }

    #[test]
    fn capacity_monotone_in_domain() {
        // Same E, F in a disk and in a larger disk: more room, more capacity.
        let e = circle_polyline(Point::new(-0.5, 0.0), 0.15, 128);
        let f = circle_polyline(Point::new(0.5, 0.0), 0.15, 128);
        let small = CapacityProblem {
            e: e.clone(),
            f: f.clone(),
            domain: DomainSpec::unit_disk(),
            h: 1.0 / 64.0,
        };
        let large = CapacityProblem {
            e,
            f,
            domain: DomainSpec::disk(Point::new(0.0, 0.0), 2.0),
            h: 1.0 / 64.0,
        };
        let cs = estimate_capacity(&small).unwrap();
        let cl = estimate_capacity(&large).unwrap();
        assert!(
            cl.value >= cs.value - 0.02 * cs.value,
            "monotonicity violated: {} < {}",
            cl.value,
            cs.value
        );
    }

    #[test]
    fn capacity_decreases_with_separation() {
        let mk = |gap: f64| CapacityProblem {
            e: circle_polyline(Point::new(-gap / 2.0, 0.0), 0.1, 96),
            f: circle_polyline(Point::new(gap / 2.0, 0.0), 0.1, 96),
            domain: DomainSpec::disk(Point::new(0.0, 0.0), 2.0),
            h: 1.0 / 48.0,
        };
        let near = estimate_capacity(&mk(0.6)).unwrap();
        let far = estimate_capacity(&mk(1.6)).unwrap();
        assert!(
            far.value < near.value,
            "capacity did not decrease: {} vs {}",
            far.value,
            near.value
        );
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let prob = CapacityProblem {
            e: vec![Point::new(-0.1, 0.0)],
            f: vec![Point::new(0.1, 0.0)],
            domain: DomainSpec::unit_disk(),
            h: 0.1,
        };
        assert!(matches!(
            estimate_capacity(&prob),
            Err(SobexError::Resolution(_))
        ));
    }

    #[test]
    fn separation_ratio_for_opposite_arcs() {
        let d = DomainSpec::unit_disk();
        let arc = |mid: f64| -> Vec<Point> {
            (0..=16)
                .map(|j| {
                    let t = mid - 0.2 + 0.4 * j as f64 / 16.0;
                    Point::new(0.95 * t.cos(), 0.95 * t.sin())
                })
                .collect()
        };
        let ratio = separation_ratio(&arc(0.0), &arc(std::f64::consts::PI), &d).unwrap();
        assert!(ratio >= 0.1, "ratio {ratio}");
    }

    #[test]
    fn separation_ratio_vanishes_for_distant_small_sets() {
        let d = DomainSpec::disk(Point::new(0.0, 0.0), 4.0);
        let e = vec![Point::new(-3.0, 0.0), Point::new(-2.95, 0.0)];
        let f = vec![Point::new(3.0, 0.0), Point::new(2.95, 0.0)];
        let ratio = separation_ratio(&e, &f, &d).unwrap();
        assert!(ratio < 0.05, "ratio {ratio}");
    }
}
