//! Path costs with boundary-distance weights and estimation of the
//! condition constant for the curve criterion.
//!
//! The cost of a curve gamma is the line integral of
//! `dist(z, boundary)^w ds` for a weight exponent `w` determined by the
//! integrability exponent, and the condition ratio of a point pair compares
//! the cheapest admissible curve against a power of the pair separation.

use crate::error::{Result, SobexError};
use crate::geom::{point_segment_distance, DomainKind, DomainSpec, Point};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BinaryHeap;

/// Which side of the boundary curves are required to stay on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathSide {
    Interior,
    Complement,
}

/// Weight and target exponents for one curve condition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CostFunctional {
    pub side: PathSide,
    /// The integrability exponent this functional encodes (p or its dual q).
    pub exponent: f64,
    /// Exponent on the boundary distance inside the line integral.
    pub weight_exponent: f64,
    /// Exponent on the pair separation in the condition ratio denominator.
    pub target_exponent: f64,
}

impl CostFunctional {
    /// Complement-side functional for `p` in `[1, 2)`: weight exponent
    /// `1 - p`, target exponent `2 - p`. `p = 1` degenerates to arc length.
    pub fn complement(p: f64) -> Result<CostFunctional> {
        if !(1.0..2.0).contains(&p) {
            return Err(SobexError::Config(format!(
                "complement functional needs p in [1, 2), got {p}"
            )));
        }
        Ok(CostFunctional {
            side: PathSide::Complement,
            exponent: p,
            weight_exponent: 1.0 - p,
            target_exponent: 2.0 - p,
        })
    }

    /// Interior-side functional for the dual exponent `q > 2`: weight
    /// exponent `1/(1-q)`, target exponent `(q-2)/(q-1)`.
    pub fn interior(q: f64) -> Result<CostFunctional> {
        if q <= 2.0 {
            return Err(SobexError::Config(format!(
                "interior functional needs q > 2, got {q}"
            )));
        }
        Ok(CostFunctional {
            side: PathSide::Interior,
            exponent: q,
            weight_exponent: 1.0 / (1.0 - q),
            target_exponent: (q - 2.0) / (q - 1.0),
        })
    }

    /// Pure arc-length functional on the requested side.
    pub fn length(side: PathSide) -> CostFunctional {
        CostFunctional {
            side,
            exponent: 1.0,
            weight_exponent: 0.0,
            target_exponent: 1.0,
        }
    }
}

/// A discrete optimal-path answer.
#[derive(Debug, Clone, Serialize)]
pub struct PathResult {
    pub path: Vec<Point>,
    pub cost: f64,
    pub length: f64,
}

/// Verdict of a refinement study of condition ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

/// One evaluated point pair, reported at the finest refinement level.
#[derive(Debug, Clone, Serialize)]
pub struct PairSample {
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    pub cost: f64,
    pub ratio: f64,
}

/// Result of estimating the condition constant over a pair family.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub exponent: f64,
    pub side: PathSide,
    pub max_ratio: f64,
    /// Max ratio per refinement level, coarse to fine.
    pub trend: Vec<f64>,
    pub verdict: Verdict,
    pub pairs: Vec<PairSample>,
}

/// Pair-sampling and refinement configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingPlan {
    /// Finest grid depth: the grid spacing is `diam * 2^-depth`.
    pub depth: i32,
    /// Number of refinement levels ending at `depth`.
    pub levels: usize,
    /// Seeded random pairs with separation at least `diam / 8`.
    pub n_random: usize,
    /// Pairs sampled per boundary-offset ring.
    pub ring_pairs: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> SamplingPlan {
        SamplingPlan {
            depth: 7,
            levels: 3,
            n_random: 24,
            ring_pairs: 3,
            seed: 0x5eed,
        }
    }
}

/// Relative tolerance for adaptive quadrature of segment costs.
const QUAD_REL_TOL: f64 = 1e-8;
const DEFAULT_DEPTH: i32 = 7;
/// Verdict thresholds: max deviation from the finest level for `Bounded`,
/// minimal overall growth factor for `Growing`.
const STABILITY_TOL: f64 = 0.25;
const GROWTH_FACTOR: f64 = 2.0;

fn region_description(side: PathSide) -> &'static str {
    match side {
        PathSide::Interior => "domain interior",
        PathSide::Complement => "domain complement",
    }
}

/// True when `p` lies on the required side, up to a loose tolerance that
/// permits boundary touching and the near-slit band used by discrete paths.
fn on_side(p: &Point, d: &DomainSpec, side: PathSide, slack: f64) -> bool {
    let inside = d.is_inside(p);
    match side {
        PathSide::Interior => inside || d.distance_to_boundary(p) <= slack,
        PathSide::Complement => !inside || d.distance_to_boundary(p) <= slack,
    }
}

/// Cost of a polyline under the functional, by adaptive quadrature with
/// endpoint desingularization. Vertices deep on the wrong side are rejected.
pub fn path_cost(curve: &[Point], d: &DomainSpec, f: &CostFunctional) -> Result<f64> {
    if curve.len() < 2 {
        return Err(SobexError::Config(
            "path must contain at least two vertices".into(),
        ));
    }
    let diam = d.diameter();
    let deep = 0.05 * diam;
    for p in curve {
        if !on_side(p, d, f.side, deep) {
            return Err(SobexError::WrongRegion(
                p.x,
                p.y,
                region_description(f.side).into(),
            ));
        }
    }
    let mut total = 0.0;
    for w in curve.windows(2) {
        total += segment_cost(&w[0], &w[1], d, f)?;
    }
    Ok(total)
}

/// Cost of the straight segment `[a, b]`.
fn segment_cost(a: &Point, b: &Point, d: &DomainSpec, f: &CostFunctional) -> Result<f64> {
    let len = a.dist(b);
    if len == 0.0 {
        return Ok(0.0);
    }
    if f.weight_exponent == 0.0 {
        return Ok(len);
    }
    let diam = d.diameter();
    let sing_tol = 1e-7 * diam;
    let da = d.distance_to_boundary(a);
    let db = d.distance_to_boundary(b);
    let sing_a = da <= sing_tol;
    let sing_b = db <= sing_tol;
    if sing_a && sing_b {
        let mid = a.lerp(b, 0.5);
        return Ok(segment_cost(a, &mid, d, f)? + segment_cost(&mid, b, d, f)?);
    }
    if sing_b {
        return segment_cost(b, a, d, f);
    }
    if !sing_a {
        // A boundary touch can also occur in the segment interior, e.g.
        // where a path leaves a slit along its mouth. Locate it and split so
        // both halves see the touch as an endpoint.
        if let Some(t) = interior_touch(a, b, d, sing_tol) {
            let mid = a.lerp(b, t);
            return Ok(segment_cost(a, &mid, d, f)? + segment_cost(&mid, b, d, f)?);
        }
    }
    let g = |t: f64| {
        let p = a.lerp(b, t);
        d.distance_to_boundary(&p).powf(f.weight_exponent) * len
    };
    let value = if sing_a {
        // Substitute t = s^m so the integrand is bounded at the touch point.
        // Pick m so the substituted integrand vanishes at least like s^1.5;
        // lower powers make the quadrature converge too slowly at s = 0.
        let m = (2.5 / (1.0 + f.weight_exponent)).ceil().max(3.0);
        let h_direct = |s: f64| g(s.powf(m)) * m * s.powf(m - 1.0);
        // Below s_min the lerp parameter s^m drops under coordinate
        // resolution and the boundary distance degenerates; continue with
        // the local power law h ~ s^(m(1+w)-1) instead.
        let s_min = 1e-9f64.powf(1.0 / m);
        let h_ref = h_direct(s_min);
        let e0 = m * (1.0 + f.weight_exponent) - 1.0;
        let h = move |s: f64| {
            if s <= 0.0 {
                0.0
            } else if s <= s_min {
                h_ref * (s / s_min).powf(e0)
            } else {
                h_direct(s)
            }
        };
        adaptive_simpson(&h, 0.0, 1.0)?
    } else {
        adaptive_simpson(&g, 0.0, 1.0)?
    };
    if !value.is_finite() {
        return Err(SobexError::Inconclusive { partial: value });
    }
    Ok(value)
}

/// Parameter of a boundary touch strictly inside the segment, if any.
fn interior_touch(a: &Point, b: &Point, d: &DomainSpec, tol: f64) -> Option<f64> {
    let n = 24usize;
    let mut t_best = 0.5;
    let mut d_best = f64::INFINITY;
    for i in 1..n {
        let t = i as f64 / n as f64;
        let dist = d.distance_to_boundary(&a.lerp(b, t));
        if dist < d_best {
            d_best = dist;
            t_best = t;
        }
    }
    if d_best > 0.1 * d.diameter() {
        return None;
    }
    // Golden-section refine around the coarse minimum.
    let mut lo = (t_best - 1.0 / n as f64).max(0.0);
    let mut hi = (t_best + 1.0 / n as f64).min(1.0);
    let phi = 0.618_033_988_749_894_8;
    let eval = |t: f64| d.distance_to_boundary(&a.lerp(b, t));
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let t = 0.5 * (lo + hi);
    if eval(t) <= tol && t > 1e-6 && t < 1.0 - 1e-6 {
        Some(t)
    } else {
        None
    }
}

/// Standard adaptive Simpson with relative tolerance and a depth cap.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> std::result::Result<f64, f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a) < 1e-9 {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(left + right);
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        match (l, r) {
            (Ok(x), Ok(y)) => Ok(x + y),
            (x, y) => Err(x.unwrap_or_else(|e| e) + y.unwrap_or_else(|e| e)),
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    let tol = QUAD_REL_TOL * whole.abs().max(1e-12);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
        .map_err(|partial| SobexError::Inconclusive { partial })
}

/// Slit geometry used for the discrete complement of a slit disk: the two
/// banks of the slit are modeled by grid cells within half a spacing of the
/// slit segment, and edges may not cross the slit proper.
#[derive(Debug, Clone, Copy)]
struct SlitInfo {
    tip_x: f64,
    outer_x: f64,
    radius: f64,
}

/// Uniform grid over a neighborhood of the domain, restricted to one side.
pub struct PathGrid {
    side: PathSide,
    floor: f64,
    ox: f64,
    oy: f64,
    nx: usize,
    ny: usize,
    member: Vec<bool>,
    dist: Vec<f64>,
    slit: Option<SlitInfo>,
    diam: f64,
}

impl PathGrid {
    /// Build a grid with spacing `floor` covering the boundary bounding box
    /// padded by one diameter (complement) or a spacing (interior).
    pub fn build(d: &DomainSpec, side: PathSide, floor: f64) -> Result<PathGrid> {
        if floor <= 0.0 {
            return Err(SobexError::Config("grid spacing must be positive".into()));
        }
        let diam = d.diameter();
        let (bx0, by0, bx1, by1) = d.boundary_bbox();
        let pad = match side {
            PathSide::Complement => diam,
            PathSide::Interior => floor,
        };
        // Align the origin to multiples of the spacing so that axis-aligned
        // boundary features (the slit) land on grid lines.
        let ox = ((bx0 - pad) / floor).floor() * floor;
        let oy = ((by0 - pad) / floor).floor() * floor;
        let nx = (((bx1 + pad - ox) / floor).ceil() as usize).max(1);
        let ny = (((by1 + pad - oy) / floor).ceil() as usize).max(1);
        if nx * ny > 40_000_000 {
            return Err(SobexError::Resolution(format!(
                "path grid would need {} nodes",
                nx * ny
            )));
        }
        let slit = match (&d.kind, side) {
            (DomainKind::SlitDisk { radius, slit_depth }, PathSide::Complement) => Some(SlitInfo {
                tip_x: radius - slit_depth,
                outer_x: *radius,
                radius: *radius,
            }),
            _ => None,
        };
        let mut member = vec![false; nx * ny];
        let mut dist = vec![f64::NAN; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let c = Point::new(ox + (ix as f64 + 0.5) * floor, oy + (iy as f64 + 0.5) * floor);
                let inside = d.is_inside(&c);
                let ok = match side {
                    PathSide::Interior => inside,
                    PathSide::Complement => {
                        !inside
                            || slit
                                .map(|s| {
                                    c.norm() < s.radius && slit_distance(&c, &s) <= 0.55 * floor
                                })
                                .unwrap_or(false)
                    }
                };
                if ok {
                    let id = iy * nx + ix;
                    member[id] = true;
                    dist[id] = d.distance_to_boundary(&c);
                }
            }
        }
        Ok(PathGrid {
            side,
            floor,
            ox,
            oy,
            nx,
            ny,
            member,
            dist,
            slit,
            diam,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.floor
    }

    fn center(&self, id: usize) -> Point {
        let ix = id % self.nx;
        let iy = id / self.nx;
        Point::new(
            self.ox + (ix as f64 + 0.5) * self.floor,
            self.oy + (iy as f64 + 0.5) * self.floor,
        )
    }

    /// Nearest member node within three spacings of `p`.
    fn node_near(&self, p: &Point) -> Option<usize> {
        let fx = (p.x - self.ox) / self.floor - 0.5;
        let fy = (p.y - self.oy) / self.floor - 0.5;
        let cx = fx.round() as isize;
        let cy = fy.round() as isize;
        let mut best: Option<(f64, usize)> = None;
        for dy in -3..=3isize {
            for dx in -3..=3isize {
                let ix = cx + dx;
                let iy = cy + dy;
                if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                    continue;
                }
                let id = iy as usize * self.nx + ix as usize;
                if !self.member[id] {
                    continue;
                }
                let dd = self.center(id).dist(p);
                if best.map(|(b, _)| dd < b).unwrap_or(true) {
                    best = Some((dd, id));
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Node weights `clamp(dist, floor/2)^w` for the given functional.
    pub fn node_weights(&self, f: &CostFunctional) -> Vec<f64> {
        let clamp = 0.5 * self.floor;
        self.dist
            .iter()
            .map(|&v| {
                if v.is_nan() {
                    f64::NAN
                } else {
                    v.max(clamp).powf(f.weight_exponent)
                }
            })
            .collect()
    }

    /// Whether the straight grid edge between member nodes is admissible.
    fn edge_ok(&self, a: &Point, b: &Point, d: &DomainSpec, da: f64, db: f64) -> bool {
        if let Some(s) = self.slit {
            return !crosses_slit(a, b, &s);
        }
        let len = a.dist(b);
        if da.min(db) > len {
            return true;
        }
        !d.segment_crosses_boundary(a, b)
    }

    /// Single-source Dijkstra with early exit once every target settles.
    fn dijkstra(
        &self,
        d: &DomainSpec,
        weights: &[f64],
        source: usize,
        targets: &[usize],
    ) -> (Vec<f64>, Vec<u32>) {
        #[derive(PartialEq)]
        struct State {
            cost: f64,
            node: usize,
        }
        impl Eq for State {}
        impl PartialOrd for State {
            fn partial_cmp(&self, other: &State) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for State {
            fn cmp(&self, other: &State) -> std::cmp::Ordering {
                other
                    .cost
                    .partial_cmp(&self.cost)
                    .unwrap_or(std::cmp::Ordering::Equal)
            }
        }
        let n = self.nx * self.ny;
        let mut cost = vec![f64::INFINITY; n];
        let mut prev = vec![u32::MAX; n];
        let mut done = vec![false; n];
        let mut remaining: Vec<usize> = targets.to_vec();
        let mut heap = BinaryHeap::new();
        cost[source] = 0.0;
        heap.push(State {
            cost: 0.0,
            node: source,
        });
        let offs: [(isize, isize); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        while let Some(State { cost: c, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            remaining.retain(|&t| t != node);
            if remaining.is_empty() && !targets.is_empty() {
                break;
            }
            let ix = (node % self.nx) as isize;
            let iy = (node / self.nx) as isize;
            let pa = self.center(node);
            for (dx, dy) in offs {
                let jx = ix + dx;
                let jy = iy + dy;
                if jx < 0 || jy < 0 || jx >= self.nx as isize || jy >= self.ny as isize {
                    continue;
                }
                let nb = jy as usize * self.nx + jx as usize;
                if !self.member[nb] || done[nb] {
                    continue;
                }
                let pb = self.center(nb);
                if !self.edge_ok(&pa, &pb, d, self.dist[node], self.dist[nb]) {
                    continue;
                }
                let len = pa.dist(&pb);
                let w = 0.5 * (weights[node] + weights[nb]);
                let nc = c + len * w;
                if nc < cost[nb] {
                    cost[nb] = nc;
                    prev[nb] = node as u32;
                    heap.push(State { cost: nc, node: nb });
                }
            }
        }
        (cost, prev)
    }

    /// Cheapest grid polyline from `z1` to `z2` (endpoints included).
    pub fn shortest_path(
        &self,
        d: &DomainSpec,
        weights: &[f64],
        z1: &Point,
        z2: &Point,
    ) -> Result<Vec<Point>> {
        let s = self.node_near(z1).ok_or(SobexError::Disconnected)?;
        let t = self.node_near(z2).ok_or(SobexError::Disconnected)?;
        if s == t {
            return Ok(vec![*z1, self.center(s), *z2]);
        }
        let (cost, prev) = self.dijkstra(d, weights, s, &[t]);
        if !cost[t].is_finite() {
            return Err(SobexError::Disconnected);
        }
        let mut nodes = vec![t];
        let mut cur = t;
        while cur != s {
            cur = prev[cur] as usize;
            nodes.push(cur);
        }
        nodes.reverse();
        let mut path = Vec::with_capacity(nodes.len() + 2);
        path.push(*z1);
        for id in nodes {
            path.push(self.center(id));
        }
        path.push(*z2);
        Ok(path)
    }

    /// Whether a straight shortcut stays admissible, tested by sampling at
    /// half-spacing resolution plus an exact crossing test.
    fn segment_admissible(&self, a: &Point, b: &Point, d: &DomainSpec) -> bool {
        let len = a.dist(b);
        let steps = ((len / (0.5 * self.floor)).ceil() as usize).max(1);
        let slack = 1e-9 * self.diam;
        for k in 1..steps {
            let p = a.lerp(b, k as f64 / steps as f64);
            let ok = match (self.side, self.slit) {
                (PathSide::Complement, Some(s)) => {
                    !d.is_inside(&p)
                        || (p.norm() < s.radius && slit_distance(&p, &s) <= 0.55 * self.floor)
                        || d.distance_to_boundary(&p) <= slack
                }
                _ => on_side(&p, d, self.side, slack),
            };
            if !ok {
                return false;
            }
        }
        if let Some(s) = self.slit {
            !crosses_slit(a, b, &s)
        } else {
            // Shrink endpoints a little so that touching the boundary at a
            // vertex does not count as a crossing.
            let a2 = a.lerp(b, 1e-9);
            let b2 = a.lerp(b, 1.0 - 1e-9);
            !d.segment_crosses_boundary(&a2, &b2)
        }
    }

    /// Greedy shortcut smoothing: replace sub-polylines by straight segments
    /// whenever that is admissible and not more expensive under quadrature.
    pub fn smooth(&self, path: &[Point], d: &DomainSpec, f: &CostFunctional) -> Result<Vec<Point>> {
        if path.len() <= 2 {
            return Ok(path.to_vec());
        }
        let mut cum = Vec::with_capacity(path.len());
        cum.push(0.0);
        for w in path.windows(2) {
            let c = segment_cost(&w[0], &w[1], d, f)?;
            cum.push(cum.last().unwrap() + c);
        }
        let mut out = vec![path[0]];
        let mut i = 0usize;
        while i + 1 < path.len() {
            // Doubling search for the farthest acceptable shortcut target.
            let accept = |j: usize| -> bool {
                if j <= i + 1 {
                    return true;
                }
                if !self.segment_admissible(&path[i], &path[j], d) {
                    return false;
                }
                match segment_cost(&path[i], &path[j], d, f) {
                    Ok(c) => c <= (cum[j] - cum[i]) * (1.0 + 1e-6) + 1e-14,
                    Err(_) => false,
                }
            };
            let last = path.len() - 1;
            let mut j = if accept(last) {
                last
            } else {
                let mut step = 1usize;
                let mut best = i + 1;
                while i + step * 2 <= last && accept(i + step * 2) {
                    step *= 2;
                    best = i + step;
                }
                // Binary refine between best and the first failing probe.
                let mut lo = best;
                let mut hi = (i + step * 2).min(last);
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if accept(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            if j <= i {
                j = i + 1;
            }
            out.push(path[j]);
            i = j;
        }
        Ok(out)
    }
}

fn slit_distance(p: &Point, s: &SlitInfo) -> f64 {
    point_segment_distance(p, &Point::new(s.tip_x, 0.0), &Point::new(s.outer_x, 0.0))
}

/// Proper crossing of the open slit `(tip, outer)` on the x-axis.
fn crosses_slit(a: &Point, b: &Point, s: &SlitInfo) -> bool {
    if a.y * b.y >= 0.0 {
        return false;
    }
    let t = -a.y / (b.y - a.y);
    let xc = a.x + t * (b.x - a.x);
    xc > s.tip_x + 1e-12 && xc < s.outer_x - 1e-12
}

/// Cheapest admissible polyline between `z1` and `z2` at the default depth.
pub fn optimal_path(
    z1: &Point,
    z2: &Point,
    d: &DomainSpec,
    f: &CostFunctional,
) -> Result<PathResult> {
    optimal_path_at_depth(z1, z2, d, f, DEFAULT_DEPTH)
}

/// Cheapest admissible polyline with grid spacing `diam * 2^-depth`.
pub fn optimal_path_at_depth(
    z1: &Point,
    z2: &Point,
    d: &DomainSpec,
    f: &CostFunctional,
    depth: i32,
) -> Result<PathResult> {
    let floor = d.diameter() * (2.0f64).powi(-depth);
    let grid = PathGrid::build(d, f.side, floor)?;
    let weights = grid.node_weights(f);
    let raw = grid.shortest_path(d, &weights, z1, z2)?;
    let path = grid.smooth(&raw, d, f)?;
    let cost = path_cost(&path, d, f)?;
    let length = path.windows(2).map(|w| w[0].dist(&w[1])).sum();
    Ok(PathResult { path, cost, length })
}

/// Condition ratio `cost / |z1 - z2|^target` of the cheapest found curve.
pub fn condition_ratio(z1: &Point, z2: &Point, d: &DomainSpec, f: &CostFunctional) -> Result<f64> {
    let sep = z1.dist(z2);
    if sep == 0.0 {
        return Err(SobexError::Config("pair separation is zero".into()));
    }
    let r = optimal_path(z1, z2, d, f)?;
    Ok(r.cost / sep.powf(f.target_exponent))
}

/// Ratio of shortest admissible path length to straight-line distance.
pub fn quasiconvexity_ratio(
    z1: &Point,
    z2: &Point,
    d: &DomainSpec,
    side: PathSide,
) -> Result<f64> {
    let f = CostFunctional::length(side);
    let r = optimal_path(z1, z2, d, &f)?;
    Ok(r.cost / z1.dist(z2))
}

/// Draw the static pair families used across all refinement levels.
fn sample_pairs(d: &DomainSpec, side: PathSide, plan: &SamplingPlan) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let diam = d.diameter();
    let (bx0, by0, bx1, by1) = d.boundary_bbox();
    let pad = match side {
        PathSide::Complement => 0.9 * diam,
        PathSide::Interior => 0.0,
    };
    let (x0, y0, x1, y1) = (bx0 - pad, by0 - pad, bx1 + pad, by1 + pad);
    let ok = |p: &Point| match side {
        PathSide::Interior => d.is_inside(p),
        PathSide::Complement => !d.is_inside(p) && d.distance_to_boundary(p) <= 1.5 * diam,
    };
    let draw = |rng: &mut ChaCha8Rng| -> Point {
        Point::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1))
    };
    let mut pairs = Vec::new();
    // Boundary-offset rings: pairs with both points at comparable distance
    // from the boundary and separation a small multiple of that distance.
    let j_max = (plan.depth - 4).clamp(1, 6);
    for j in 1..=j_max {
        let t = diam * (2.0f64).powi(-j);
        for k in 0..plan.ring_pairs {
            let mut found = None;
            'outer: for _ in 0..400 {
                let z = draw(&mut rng);
                let dz = d.distance_to_boundary(&z);
                if !ok(&z) || !(0.75 * t..=1.5 * t).contains(&dz) {
                    continue;
                }
                let s = if k % 2 == 0 { 2.0 * t } else { 6.0 * t };
                for _ in 0..60 {
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    let w = Point::new(z.x + s * th.cos(), z.y + s * th.sin());
                    let dw = d.distance_to_boundary(&w);
                    if ok(&w) && (0.5 * t..=3.0 * t).contains(&dw) {
                        found = Some((z, w));
                        break 'outer;
                    }
                }
            }
            if let Some(p) = found {
                pairs.push(p);
            }
        }
    }
    // Seeded random pairs with macroscopic separation.
    let mut made = 0usize;
    let mut attempts = 0usize;
    while made < plan.n_random && attempts < 20_000 {
        attempts += 1;
        let z = draw(&mut rng);
        let w = draw(&mut rng);
        if ok(&z) && ok(&w) && z.dist(&w) >= diam / 8.0 {
            pairs.push((z, w));
            made += 1;
        }
    }
    pairs
}

/// Slit straddling pairs tied to one level's grid spacing: matching cell
/// centers on the two banks of the slit.
fn slit_pairs(d: &DomainSpec, grid: &PathGrid) -> Vec<(Point, Point)> {
    let (tip, outer) = match &d.kind {
        DomainKind::SlitDisk { radius, slit_depth } => (radius - slit_depth, *radius),
        _ => return Vec::new(),
    };
    let f = grid.floor;
    let mut out = Vec::new();
    for frac in [0.35, 0.65] {
        let x_target = tip + frac * (outer - tip);
        let ix = ((x_target - grid.ox) / f - 0.5).round();
        let x = grid.ox + (ix + 0.5) * f;
        if x <= tip + f || x >= outer - f {
            continue;
        }
        out.push((Point::new(x, 0.5 * f), Point::new(x, -0.5 * f)));
    }
    out
}

fn max_ratio_at_level(
    d: &DomainSpec,
    f: &CostFunctional,
    grid: &PathGrid,
    pairs: &[(Point, Point)],
    collect: Option<&mut Vec<PairSample>>,
) -> Result<f64> {
    let weights = grid.node_weights(f);
    let mut max_ratio: f64 = 0.0;
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for (z1, z2) in pairs {
        let raw = match grid.shortest_path(d, &weights, z1, z2) {
            Ok(p) => p,
            Err(SobexError::Disconnected) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let path = grid.smooth(&raw, d, f)?;
        let cost = path_cost(&path, d, f)?;
        let ratio = cost / z1.dist(z2).powf(f.target_exponent);
        max_ratio = max_ratio.max(ratio);
        samples.push(PairSample {
            z1: [z1.x, z1.y],
            z2: [z2.x, z2.y],
            cost,
            ratio,
        });
    }
    if skipped * 2 > pairs.len() {
        return Err(SobexError::Disconnected);
    }
    if let Some(store) = collect {
        *store = samples;
    }
    Ok(max_ratio)
}

/// Estimate the condition constant by evaluating the pair families at a
/// sequence of refinement levels and classifying the trend of max ratios.
pub fn estimate_condition_constant(
    d: &DomainSpec,
    f: &CostFunctional,
    plan: &SamplingPlan,
) -> Result<ConditionReport> {
    let grids = build_level_grids(d, f.side, plan)?;
    estimate_with_grids(d, f, plan, &grids)
}

/// Build the grids for every refinement level of the plan, coarse to fine.
pub fn build_level_grids(
    d: &DomainSpec,
    side: PathSide,
    plan: &SamplingPlan,
) -> Result<Vec<PathGrid>> {
    if plan.levels == 0 || plan.depth < plan.levels as i32 + 3 {
        return Err(SobexError::Config(
            "sampling plan needs levels >= 1 and depth >= levels + 3".into(),
        ));
    }
    let diam = d.diameter();
    let mut grids = Vec::new();
    for l in 0..plan.levels {
        let depth = plan.depth - (plan.levels - 1 - l) as i32;
        let floor = diam * (2.0f64).powi(-depth);
        grids.push(PathGrid::build(d, side, floor)?);
    }
    Ok(grids)
}

/// Same as [`estimate_condition_constant`] but reusing prebuilt grids, which
/// lets exponent sweeps share the expensive grid construction.
pub fn estimate_with_grids(
    d: &DomainSpec,
    f: &CostFunctional,
    plan: &SamplingPlan,
    grids: &[PathGrid],
) -> Result<ConditionReport> {
    let pairs = sample_pairs(d, f.side, plan);
    if pairs.is_empty() {
        return Err(SobexError::Config(
            "sampling produced no admissible pairs".into(),
        ));
    }
    let mut trend = Vec::new();
    let mut fine_samples = Vec::new();
    let last = grids.len() - 1;
    for (l, grid) in grids.iter().enumerate() {
        let mut level_pairs = pairs.clone();
        level_pairs.extend(slit_pairs(d, grid));
        let collect = if l == last {
            Some(&mut fine_samples)
        } else {
            None
        };
        trend.push(max_ratio_at_level(d, f, grid, &level_pairs, collect)?);
    }
    let max_ratio = *trend.last().unwrap();
    let verdict = classify_trend(&trend);
    Ok(ConditionReport {
        exponent: f.exponent,
        side: f.side,
        max_ratio,
        trend,
        verdict,
        pairs: fine_samples,
    })
}

/// Bounded when every level agrees with the finest within the stability
/// tolerance; Growing when the trend is monotone with enough overall growth.
fn classify_trend(trend: &[f64]) -> Verdict {
    let last = *trend.last().unwrap();
    let stable = trend
        .iter()
        .all(|&r| (r - last).abs() <= STABILITY_TOL * last.max(1e-300));
    if stable {
        return Verdict::Bounded;
    }
    let monotone = trend.windows(2).all(|w| w[1] > w[0]);
    if monotone && last / trend[0].max(1e-300) >= GROWTH_FACTOR {
        return Verdict::Growing;
    }
    Verdict::Inconclusive
}

/// One row of an exponent sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub exponent: f64,
    pub max_ratio: f64,
    pub trend: Vec<f64>,
    pub verdict: Verdict,
}

/// Run the condition estimate for several exponents on one side, sharing the
/// level grids across exponents.
pub fn exponent_sweep(
    d: &DomainSpec,
    side: PathSide,
    exponents: &[f64],
    plan: &SamplingPlan,
) -> Result<Vec<SweepEntry>> {
    let grids = build_level_grids(d, side, plan)?;
    let mut out = Vec::new();
    for &e in exponents {
        let f = match side {
            PathSide::Complement => CostFunctional::complement(e)?,
            PathSide::Interior => CostFunctional::interior(e)?,
        };
        let rep = estimate_with_grids(d, &f, plan, &grids)?;
        out.push(SweepEntry {
            exponent: e,
            max_ratio: rep.max_ratio,
            trend: rep.trend,
            verdict: rep.verdict,
        });
    }
    Ok(out)
}

/// Joint result of the complement condition at `p` and the interior
/// condition at the dual exponent `q = p / (p - 1)`.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub p: f64,
    pub q: f64,
    pub complement: ConditionReport,
    pub interior: ConditionReport,
    pub agree: bool,
}

/// Check that the two dual curve conditions reach the same verdict.
pub fn duality_check(d: &DomainSpec, p: f64, plan: &SamplingPlan) -> Result<DualityReport> {
    if !(1.0..2.0).contains(&p) || p == 1.0 {
        return Err(SobexError::Config(format!(
            "duality check needs p in (1, 2), got {p}"
        )));
    }
    let q = p / (p - 1.0);
    let complement = estimate_condition_constant(d, &CostFunctional::complement(p)?, plan)?;
    let interior = estimate_condition_constant(d, &CostFunctional::interior(q)?, plan)?;
    let agree = complement.verdict == interior.verdict;
    Ok(DualityReport {
        p,
        q,
        complement,
        interior,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::DomainSpec;
    use approx::assert_relative_eq;

    #[test]
    fn radial_segment_cost_matches_closed_form() {
        // For the unit disk, dist((x,0)) = x - 1 outside, so the weight
        // (x-1)^(-1/2) integrates to 2(sqrt(2) - 1) over [2, 3].
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.5).unwrap();
        let c = path_cost(&[Point::new(2.0, 0.0), Point::new(3.0, 0.0)], &d, &f).unwrap();
        assert_relative_eq!(c, 2.0 * (2.0f64.sqrt() - 1.0), epsilon = 1e-6);
    }

    #[test]
    fn singular_endpoint_cost_matches_closed_form() {
        // Starting on the boundary: integral of (x-1)^(-1/2) over [1, 2] = 2.
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.5).unwrap();
        let c = path_cost(&[Point::new(1.0, 0.0), Point::new(2.0, 0.0)], &d, &f).unwrap();
        assert_relative_eq!(c, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn cost_is_reversal_invariant() {
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.3).unwrap();
        let fwd = vec![
            Point::new(1.5, 0.2),
            Point::new(2.0, 1.0),
            Point::new(1.2, 1.8),
        ];
        let mut bwd = fwd.clone();
        bwd.reverse();
        let a = path_cost(&fwd, &d, &f).unwrap();
        let b = path_cost(&bwd, &d, &f).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn wrong_side_vertex_is_rejected() {
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.5).unwrap();
        let err = path_cost(&[Point::new(0.0, 0.0), Point::new(2.0, 0.0)], &d, &f).unwrap_err();
        assert!(matches!(err, SobexError::WrongRegion(..)));
    }

    #[test]
    fn functional_exponents() {
        let f = CostFunctional::complement(1.5).unwrap();
        assert_relative_eq!(f.weight_exponent, -0.5);
        assert_relative_eq!(f.target_exponent, 0.5);
        let g = CostFunctional::interior(3.0).unwrap();
        assert_relative_eq!(g.weight_exponent, -0.5);
        assert_relative_eq!(g.target_exponent, 0.5);
        assert!(CostFunctional::complement(2.0).is_err());
        assert!(CostFunctional::interior(2.0).is_err());
    }

    #[test]
    fn quasiconvexity_around_disk_matches_tangent_arc_geometry() {
        // Antipodal points just outside the unit circle: the shortest
        // admissible path is tangent-arc-tangent.
        let d = DomainSpec::unit_disk();
        let r = 1.05f64;
        let z1 = Point::new(0.0, r);
        let z2 = Point::new(0.0, -r);
        let tangent = (r * r - 1.0).sqrt();
        let theta = (1.0 / r).acos();
        let exact = 2.0 * tangent + (std::f64::consts::PI - 2.0 * theta);
        let ratio = quasiconvexity_ratio(&z1, &z2, &d, PathSide::Complement).unwrap();
        assert_relative_eq!(ratio, exact / (2.0 * r), max_relative = 0.1);
    }

    #[test]
    fn shortcut_smoothing_does_not_beat_admissible_straight_segment() {
        // When the straight segment itself is admissible, the optimal path
        // should come out essentially straight.
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.5).unwrap();
        let z1 = Point::new(1.5, 0.5);
        let z2 = Point::new(2.5, 1.5);
        let direct = path_cost(&[z1, z2], &d, &f).unwrap();
        let found = optimal_path_at_depth(&z1, &z2, &d, &f, 6).unwrap();
        assert!(found.cost <= direct * 1.02 + 1e-12);
        assert!(found.cost >= direct * 0.7);
    }

    #[test]
    fn optimal_path_cost_is_roughly_symmetric() {
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.5).unwrap();
        let z1 = Point::new(-1.4, 0.3);
        let z2 = Point::new(1.3, -0.8);
        let a = optimal_path_at_depth(&z1, &z2, &d, &f, 6).unwrap();
        let b = optimal_path_at_depth(&z2, &z1, &d, &f, 6).unwrap();
        assert_relative_eq!(a.cost, b.cost, max_relative = 0.05);
    }

    #[test]
    fn disk_complement_condition_is_bounded() {
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::complement(1.5).unwrap();
        let plan = SamplingPlan {
            depth: 6,
            n_random: 10,
            ..SamplingPlan::default()
        };
        let rep = estimate_condition_constant(&d, &f, &plan).unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded);
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        assert_eq!(rep.trend.len(), plan.levels);
    }

    #[test]
    fn slit_disk_complement_condition_grows() {
        let d = DomainSpec::slit_disk(1.0, 0.5).unwrap();
        let f = CostFunctional::complement(1.5).unwrap();
        let plan = SamplingPlan {
            depth: 6,
            n_random: 10,
            ..SamplingPlan::default()
        };
        let rep = estimate_condition_constant(&d, &f, &plan).unwrap();
        assert_eq!(rep.verdict, Verdict::Growing);
    }

    #[test]
    fn disk_interior_condition_is_bounded() {
        let d = DomainSpec::unit_disk();
        let f = CostFunctional::interior(3.0).unwrap();
        let plan = SamplingPlan {
            depth: 6,
            n_random: 10,
            ..SamplingPlan::default()
        };
        let rep = estimate_condition_constant(&d, &f, &plan).unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded);
    }
}
