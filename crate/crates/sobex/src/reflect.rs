//! Shadows of Whitney squares under radial/hyperbolic rays, the exterior ->
//! interior square assignment, families grouped by target, chains of interior
//! squares bridged by fake squares, and numerical checks of the sum estimates
//! that drive the reflection operator.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::Write;

use serde::Serialize;

use crate::conformal::{evaluate, inverse, ConformalMap};
use crate::error::{Result, SobexError};
use crate::geom::Point;
use crate::whitney::{DyadicSquare, WhitneyDecomposition};

/// Radius offset used when pushing a source-circle arc to the boundary.
const BOUNDARY_EPS: f64 = 1e-9;
/// Samples taken on the perimeter of a square when measuring its angular
/// extent in source coordinates.
const SQUARE_SAMPLES_PER_EDGE: usize = 6;
/// Samples along the pushed-forward boundary arc of a shadow.
const ARC_SAMPLES: usize = 17;
/// Arc length on the source circle above which the associated square is the
/// one containing the base point.
const LONG_ARC_CUTOFF: f64 = 0.5;
/// Relative tolerance on the shadow-halving identity for fake squares.
const HALVING_TOL: f64 = 0.25;
/// Shadows of neighboring exterior squares within this factor short-circuit
/// the chain to the two assigned squares.
const COMPARABLE_FACTOR: f64 = 8.0;

/// The set of boundary points hit by radial rays through a set `A`, stored as
/// an angle interval on the source circle together with its boundary image.
#[derive(Debug, Clone)]
pub struct Shadow {
    /// Start angle in `[0, 2*pi)`.
    pub theta_min: f64,
    /// Angular width in `[0, 2*pi]`; the interval is `[theta_min, theta_min + span]`.
    pub span: f64,
    /// Polyline of the arc image on the domain boundary.
    pub image: Vec<Point>,
    /// Euclidean diameter of the boundary image.
    pub diam: f64,
    /// Length of the boundary image measured along the polyline.
    pub inner_diam: f64,
}

impl Shadow {
    /// Chord diameter of the source arc on the unit circle.
    pub fn source_diam(&self) -> f64 {
        if self.span >= std::f64::consts::PI {
            2.0
        } else {
            2.0 * (0.5 * self.span).sin()
        }
    }

    /// Midpoint angle of the arc.
    pub fn mid_angle(&self) -> f64 {
        (self.theta_min + 0.5 * self.span).rem_euclid(TAU)
    }

    /// Intersection with another shadow's arc, as `(start, span)`; when the
    /// arcs meet in two pieces the longer piece is returned.
    pub fn intersect_arc(&self, other: &Shadow) -> Option<(f64, f64)> {
        if self.span >= TAU {
            return Some((other.theta_min, other.span));
        }
        if other.span >= TAU {
            return Some((self.theta_min, self.span));
        }
        let d = (other.theta_min - self.theta_min).rem_euclid(TAU);
        let mut best: Option<(f64, f64)> = None;
        for shift in [0.0, -TAU] {
            let lo = (d + shift).max(0.0);
            let hi = (d + shift + other.span).min(self.span);
            if hi >= lo {
                let cand = (self.theta_min + lo, hi - lo);
                if best.map_or(true, |b| cand.1 > b.1) {
                    best = Some(cand);
                }
            }
        }
        best
    }
}

/// Input set whose shadow is requested.
#[derive(Debug, Clone, Copy)]
pub enum ShadowSource<'a> {
    Square(&'a DyadicSquare),
    Polyline(&'a [Point]),
}

fn source_samples(a: ShadowSource<'_>) -> Vec<Point> {
    match a {
        ShadowSource::Square(q) => {
            let (x0, y0, x1, y1) = q.bounds();
            let n = SQUARE_SAMPLES_PER_EDGE;
            let mut pts = Vec::with_capacity(4 * n);
            for i in 0..n {
                let t = i as f64 / n as f64;
                pts.push(Point::new(x0 + t * (x1 - x0), y0));
                pts.push(Point::new(x1, y0 + t * (y1 - y0)));
                pts.push(Point::new(x1 - t * (x1 - x0), y1));
                pts.push(Point::new(x0, y1 - t * (y1 - y0)));
            }
            pts
        }
        ShadowSource::Polyline(pts) => {
            let mut out = Vec::with_capacity(2 * pts.len());
            for i in 0..pts.len() {
                out.push(pts[i]);
                if i + 1 < pts.len() {
                    out.push(pts[i].lerp(&pts[i + 1], 0.5));
                }
            }
            out
        }
    }
}

/// Smallest arc `[theta_min, theta_min + span]` covering all angles.
fn circular_hull(angles: &mut Vec<f64>) -> (f64, f64) {
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup();
    if angles.len() == 1 {
        return (angles[0], 0.0);
    }
    // The hull is the complement of the largest gap between consecutive
    // angles on the circle.
    let mut max_gap = TAU - angles[angles.len() - 1] + angles[0];
    let mut start = angles[0];
    for w in angles.windows(2) {
        let gap = w[1] - w[0];
        if gap > max_gap {
            max_gap = gap;
            start = w[1];
        }
    }
    if max_gap <= 1e-9 {
        (0.0, TAU)
    } else {
        (start, TAU - max_gap)
    }
}

/// Sample the boundary image of a source arc by evaluating the map just
/// inside (interior maps) or just outside (exterior maps) the unit circle.
fn arc_image(m: &ConformalMap, theta0: f64, span: f64, n: usize) -> Result<Vec<Point>> {
    let rho = match m {
        ConformalMap::ExteriorComposed { .. } => 1.0 + BOUNDARY_EPS,
        _ => 1.0 - BOUNDARY_EPS,
    };
    let n = n.max(2);
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let theta = theta0 + span * k as f64 / (n - 1) as f64;
        let z = Point::new(rho * theta.cos(), rho * theta.sin());
        let (w, _) = evaluate(m, z)?;
        pts.push(w);
    }
    Ok(pts)
}

fn polyline_diam(pts: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(pts[i].dist(&pts[j]));
        }
    }
    d
}

fn polyline_length(pts: &[Point]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(&w[1])).sum()
}

/// Shadow of a square or connected polyline under the radial rays of the
/// map's source disk (rays from the base point for interior maps, from
/// infinity for exterior maps).
pub fn shadow(m: &ConformalMap, a: ShadowSource<'_>) -> Result<Shadow> {
    let samples = source_samples(a);
    if samples.is_empty() {
        return Err(SobexError::Config("empty shadow source".into()));
    }
    let exterior = matches!(m, ConformalMap::ExteriorComposed { .. });
    let mut angles = Vec::with_capacity(samples.len());
    for p in &samples {
        let z = inverse(m, *p)?;
        let r = z.to_complex().norm();
        let ok = if exterior { r > 1.0 - 1e-12 } else { r < 1.0 + 1e-12 };
        if !ok {
            return Err(SobexError::WrongRegion(
                p.x,
                p.y,
                "image region of the conformal map".into(),
            ));
        }
        angles.push(z.y.atan2(z.x).rem_euclid(TAU));
    }
    let (theta_min, span) = circular_hull(&mut angles);
    let image = arc_image(m, theta_min, span, ARC_SAMPLES)?;
    let diam = polyline_diam(&image);
    let inner_diam = polyline_length(&image);
    Ok(Shadow {
        theta_min,
        span,
        image,
        diam,
        inner_diam,
    })
}

/// Cache of interior-square shadows keyed by square id, so repeated
/// associated-square queries do not recompute them.
#[derive(Debug, Default)]
pub struct ShadowCache {
    inner: HashMap<usize, Shadow>,
}

impl ShadowCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(
        &mut self,
        m: &ConformalMap,
        w: &WhitneyDecomposition,
        id: usize,
    ) -> Result<&Shadow> {
        if !self.inner.contains_key(&id) {
            let s = shadow(m, ShadowSource::Square(&w.squares[id]))?;
            self.inner.insert(id, s);
        }
        Ok(&self.inner[&id])
    }
}

/// Interior Whitney square associated to a shadow.
///
/// Long arcs (source length > 1/2) map to the square containing the base
/// point. Otherwise a closed ball tangent to the arc's chord from inside is
/// mapped forward, and among the interior squares met by its image the one
/// whose shadow overlaps `gamma` in the largest boundary diameter wins;
/// ties break to the smallest level, then lexicographic `(m1, m2)`.
pub fn associated_square(
    wi: &WhitneyDecomposition,
    gamma: &Shadow,
    mi: &ConformalMap,
) -> Result<usize> {
    let mut cache = ShadowCache::new();
    associated_square_cached(wi, gamma, mi, &mut cache)
}

pub fn associated_square_cached(
    wi: &WhitneyDecomposition,
    gamma: &Shadow,
    mi: &ConformalMap,
    cache: &mut ShadowCache,
) -> Result<usize> {
    let base = mi.base_point();
    if gamma.span > LONG_ARC_CUTOFF {
        return wi
            .find(&base)
            .ok_or_else(|| SobexError::Config("no interior square contains the base point".into()));
    }
    let half = (0.5 * gamma.span).sin();
    let r = half / (1.0 + 2.0 * half);
    let mid = gamma.mid_angle();
    let c = 1.0 - 2.0 * r;
    let center = Point::new(c * mid.cos(), c * mid.sin());

    // Sample the closed ball B(center, r): boundary circle, a half-radius
    // ring, and the center itself.
    let mut candidates: Vec<usize> = Vec::new();
    let mut push_candidate = |p: Point| -> Result<()> {
        // The decomposition is truncated at max_depth, leaving a collar near
        // the boundary with no squares; walk the sample point radially inward
        // (in source coordinates) until a square is found.
        let mut q = p;
        for _ in 0..200 {
            let (w, _) = evaluate(mi, q)?;
            if let Some(id) = wi.find(&w) {
                if !candidates.contains(&id) {
                    candidates.push(id);
                }
                return Ok(());
            }
            let rad = q.to_complex().norm();
            if rad < 0.25 {
                break;
            }
            let next = 1.0 - 1.5 * (1.0 - rad);
            let scale = next.max(0.0) / rad;
            q = Point::new(q.x * scale, q.y * scale);
        }
        Ok(())
    };
    push_candidate(center)?;
    for ring in [r, 0.5 * r] {
        if ring <= 0.0 {
            continue;
        }
        for k in 0..16 {
            let t = TAU * k as f64 / 16.0;
            let p = Point::new(center.x + ring * t.cos(), center.y + ring * t.sin());
            if p.to_complex().norm() < 1.0 - 1e-12 {
                push_candidate(p)?;
            }
        }
    }
    if candidates.is_empty() {
        return Err(SobexError::Config(
            "no interior Whitney square meets the mapped ball".into(),
        ));
    }

    // Score each candidate by the boundary diameter of S(Q) intersected
    // with gamma.
    let mut best: Option<(usize, f64)> = None;
    for &id in &candidates {
        let sq_shadow = cache.get(mi, wi, id)?.clone();
        let key = match sq_shadow.intersect_arc(gamma) {
            Some((start, span)) => {
                let img = arc_image(mi, start, span, 9)?;
                polyline_diam(&img)
            }
            None => 0.0,
        };
        let better = match best {
            None => true,
            Some((bid, bkey)) => {
                let tol = 1e-9 * bkey.max(key).max(1e-300);
                if (key - bkey).abs() <= tol {
                    let a = &wi.squares[id];
                    let b = &wi.squares[bid];
                    (a.level, a.m1, a.m2) < (b.level, b.m1, b.m2)
                } else {
                    key > bkey
                }
            }
        };
        if better {
            best = Some((id, key));
        }
    }
    Ok(best.unwrap().0)
}

/// One family: all exterior squares sharing a target interior square,
/// ordered by decreasing source-arc diameter of their shadows.
#[derive(Debug, Clone)]
pub struct Family {
    pub target: usize,
    pub members: Vec<usize>,
    /// Ordering key per member: chord diameter of the shadow's source arc.
    pub keys: Vec<f64>,
}

/// Exterior-to-interior square assignment with shadows retained.
#[derive(Debug)]
pub struct ReflectionAssignment {
    /// `targets[j]` is the interior square assigned to exterior square `j`
    /// (`None` only for ineligible squares).
    pub targets: Vec<Option<usize>>,
    pub families: Vec<Family>,
    /// Shadow of each eligible exterior square.
    pub shadows: Vec<Option<Shadow>>,
}

impl ReflectionAssignment {
    pub fn target_of(&self, ext_id: usize) -> Option<usize> {
        self.targets.get(ext_id).copied().flatten()
    }
}

/// Assign an interior square to every eligible exterior square and group the
/// result into families.
pub fn build_reflection(
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
    mi: &ConformalMap,
    me: &ConformalMap,
) -> Result<ReflectionAssignment> {
    let diam = we.domain.diameter();
    let cutoff = 3.0 * diam * (1.0 + 1e-12);
    let mut cache = ShadowCache::new();
    let mut targets = vec![None; we.len()];
    let mut shadows: Vec<Option<Shadow>> = vec![None; we.len()];
    let mut by_target: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut keys = vec![0.0f64; we.len()];

    for (j, q) in we.squares.iter().enumerate() {
        if q.side() > cutoff {
            continue;
        }
        let gamma = shadow(me, ShadowSource::Square(q))?;
        let target = associated_square_cached(wi, &gamma, mi, &mut cache)?;
        keys[j] = gamma.source_diam();
        shadows[j] = Some(gamma);
        targets[j] = Some(target);
        by_target.entry(target).or_default().push(j);
    }

    let mut family_targets: Vec<usize> = by_target.keys().copied().collect();
    family_targets.sort_by_key(|&t| {
        let q = &wi.squares[t];
        (q.level, q.m1, q.m2)
    });
    let mut families = Vec::with_capacity(family_targets.len());
    for t in family_targets {
        let mut members = by_target.remove(&t).unwrap();
        members.sort_by(|&a, &b| {
            keys[b]
                .partial_cmp(&keys[a])
                .unwrap()
                .then_with(|| {
                    let qa = &we.squares[a];
                    let qb = &we.squares[b];
                    (qa.level, qa.m1, qa.m2).cmp(&(qb.level, qb.m1, qb.m2))
                })
        });
        let member_keys = members.iter().map(|&j| keys[j]).collect();
        families.push(Family {
            target: t,
            members,
            keys: member_keys,
        });
    }
    Ok(ReflectionAssignment {
        targets,
        families,
        shadows,
    })
}

/// Chain of interior squares connecting the targets of two neighboring
/// exterior squares, with the fake-square shadow diameters used to build it.
#[derive(Debug, Clone)]
pub struct Chain {
    pub ext1: usize,
    pub ext2: usize,
    /// Interior squares from the target of `ext1` to the target of `ext2`.
    pub interior: Vec<usize>,
    /// Shadow diameters of the fake squares, in construction order.
    pub fake_diams: Vec<f64>,
}

/// Build the chain for a touching pair of eligible exterior squares.
pub fn build_chain(
    q1: usize,
    q2: usize,
    r: &ReflectionAssignment,
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
    mi: &ConformalMap,
    me: &ConformalMap,
) -> Result<Chain> {
    let s1 = we.squares[q1];
    let s2 = we.squares[q2];
    if !s1.touches(&s2) {
        return Err(SobexError::Config(
            "chain endpoints must be touching exterior squares".into(),
        ));
    }
    let t1 = r.target_of(q1).ok_or(SobexError::UnknownSquare(q1))?;
    let t2 = r.target_of(q2).ok_or(SobexError::UnknownSquare(q2))?;
    let sh1 = r.shadows[q1].as_ref().ok_or(SobexError::UnknownSquare(q1))?;
    let sh2 = r.shadows[q2].as_ref().ok_or(SobexError::UnknownSquare(q2))?;
    let d1 = sh1.diam;
    let d2 = sh2.diam;
    let comparable =
        d1 <= COMPARABLE_FACTOR * d2 && d2 <= COMPARABLE_FACTOR * d1;
    if comparable {
        let mut interior = vec![t1];
        if t2 != t1 {
            interior.push(t2);
        }
        return Ok(Chain {
            ext1: q1,
            ext2: q2,
            interior,
            fake_diams: Vec::new(),
        });
    }
    // The square with the larger shadow comes first in the construction.
    let (big, small, flipped) = if d1 >= d2 { (q1, q2, false) } else { (q2, q1, true) };
    let gamma = connecting_polyline(&we.squares[big], &we.squares[small]);
    let small_diam = d1.min(d2);
    let (mut interior, fake_diams) =
        fake_square_chain(&gamma, small_diam, wi, mi, me)?
            .ok_or(SobexError::ChainBisection(q1, q2))?;
    let (tb, ts) = if flipped { (t2, t1) } else { (t1, t2) };
    interior.insert(0, tb);
    interior.push(ts);
    interior.dedup();
    if flipped {
        interior.reverse();
    }
    Ok(Chain {
        ext1: q1,
        ext2: q2,
        interior,
        fake_diams,
    })
}

/// Polyline inside the union of two touching squares, from the far corner of
/// the first through its center and the shared boundary point to the center
/// of the second.
fn connecting_polyline(big: &DyadicSquare, small: &DyadicSquare) -> Vec<Point> {
    let cb = big.center();
    let cs = small.center();
    let (x0, y0, x1, y1) = big.bounds();
    // Corner of the big square farthest from the small square's center.
    let mut far = Point::new(x0, y0);
    for corner in [
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ] {
        if corner.dist(&cs) > far.dist(&cs) {
            far = corner;
        }
    }
    // Point of the big square's boundary closest to the small center: the
    // clamp of the small center onto the big square.
    let shared = Point::new(cs.x.clamp(x0, x1), cs.y.clamp(y0, y1));
    vec![far, cb, shared, cs]
}

fn polyline_point(pts: &[Point], lengths: &[f64], t: f64) -> Point {
    let total = *lengths.last().unwrap();
    let s = t.clamp(0.0, 1.0) * total;
    for i in 1..lengths.len() {
        if s <= lengths[i] || i == lengths.len() - 1 {
            let seg = lengths[i] - lengths[i - 1];
            let u = if seg > 0.0 { (s - lengths[i - 1]) / seg } else { 0.0 };
            return pts[i - 1].lerp(&pts[i], u.clamp(0.0, 1.0));
        }
    }
    *pts.last().unwrap()
}

/// Sub-polyline `gamma[t..1]` sampled with `n` points.
fn tail_samples(pts: &[Point], lengths: &[f64], t: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let u = t + (1.0 - t) * k as f64 / (n - 1) as f64;
            polyline_point(pts, lengths, u)
        })
        .collect()
}

/// Bisect tail parameters so that successive tails of `gamma` have halving
/// shadow diameters, associating an interior square to each tail. Returns
/// `None` when a bisection fails to land inside the tolerance.
fn fake_square_chain(
    gamma: &[Point],
    stop_diam: f64,
    wi: &WhitneyDecomposition,
    mi: &ConformalMap,
    me: &ConformalMap,
) -> Result<Option<(Vec<usize>, Vec<f64>)>> {
    let mut lengths = vec![0.0];
    for w in gamma.windows(2) {
        lengths.push(lengths.last().unwrap() + w[0].dist(&w[1]));
    }
    let tail_diam = |t: f64| -> Result<f64> {
        let pts = tail_samples(gamma, &lengths, t, 25);
        Ok(shadow(me, ShadowSource::Polyline(&pts))?.diam)
    };
    let mut cache = ShadowCache::new();
    let mut interior = Vec::new();
    let mut fake_diams = Vec::new();
    let mut t_lo = 0.0;
    let mut current = tail_diam(0.0)?;
    for _ in 0..64 {
        if current <= 2.0 * stop_diam {
            return Ok(Some((interior, fake_diams)));
        }
        let want = 0.5 * current;
        // Bisect on the tail parameter: diameters shrink as t -> 1.
        let mut lo = t_lo;
        let mut hi = 1.0;
        let mut hit = None;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let d = tail_diam(mid)?;
            if (d - want).abs() <= HALVING_TOL * want {
                hit = Some((mid, d));
                break;
            }
            if d > want {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t_next, d_next) = match hit {
            Some(v) => v,
            None => return Ok(None),
        };
        let pts = tail_samples(gamma, &lengths, t_next, 25);
        let fake_shadow = shadow(me, ShadowSource::Polyline(&pts))?;
        let q = associated_square_cached(wi, &fake_shadow, mi, &mut cache)?;
        interior.push(q);
        fake_diams.push(d_next);
        t_lo = t_next;
        current = d_next;
    }
    Ok(None)
}

/// Chains for every touching pair of eligible exterior squares (each
/// unordered pair once, smaller id first).
pub fn neighbor_chains(
    r: &ReflectionAssignment,
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
    mi: &ConformalMap,
    me: &ConformalMap,
) -> Result<Vec<Chain>> {
    let mut chains = Vec::new();
    for j in 0..we.len() {
        if r.targets[j].is_none() {
            continue;
        }
        for &k in we.neighbors(j)? {
            if k <= j || r.targets[k].is_none() {
                continue;
            }
            chains.push(build_chain(j, k, r, wi, we, mi, me)?);
        }
    }
    Ok(chains)
}

/// Ratio report for one family (or one index set `I(m)`).
#[derive(Debug, Clone, Serialize)]
pub struct FamilyRatio {
    pub target: usize,
    pub size: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SumEstimateReport {
    pub s: f64,
    pub max_ratio: f64,
    pub families: Vec<FamilyRatio>,
}

/// Per-family ratio `sum_j l(Q~_ij)^{2-s} / l(Q_i)^{2-s}`.
pub fn verify_sum_estimate(
    r: &ReflectionAssignment,
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
    s: f64,
) -> Result<SumEstimateReport> {
    if !(1.0 < s && s < 2.0) {
        return Err(SobexError::Config("exponent s must lie in (1, 2)".into()));
    }
    let e = 2.0 - s;
    let mut families = Vec::with_capacity(r.families.len());
    let mut max_ratio = 0.0f64;
    for f in &r.families {
        let num: f64 = f
            .members
            .iter()
            .map(|&j| we.squares[j].side().powf(e))
            .sum();
        let ratio = num / wi.squares[f.target].side().powf(e);
        max_ratio = max_ratio.max(ratio);
        families.push(FamilyRatio {
            target: f.target,
            size: f.members.len(),
            ratio,
        });
    }
    Ok(SumEstimateReport {
        s,
        max_ratio,
        families,
    })
}

/// Strong version: for each interior square `Q_m`, sum `l(Q~_i)^{2-s}` over
/// all exterior squares whose target is `Q_m` or whose chains pass through
/// `Q_m`, against `l(Q_m)^{2-s}`.
pub fn verify_strong_sum_estimate(
    r: &ReflectionAssignment,
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
    chains: &[Chain],
    s: f64,
) -> Result<SumEstimateReport> {
    if !(1.0 < s && s < 2.0) {
        return Err(SobexError::Config("exponent s must lie in (1, 2)".into()));
    }
    let mut index_sets: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut add = |m: usize, i: usize| {
        let v = index_sets.entry(m).or_default();
        if !v.contains(&i) {
            v.push(i);
        }
    };
    for (j, t) in r.targets.iter().enumerate() {
        if let Some(m) = t {
            add(*m, j);
        }
    }
    for c in chains {
        for &m in &c.interior {
            add(m, c.ext1);
            add(m, c.ext2);
        }
    }
    let e = 2.0 - s;
    let mut keys: Vec<usize> = index_sets.keys().copied().collect();
    keys.sort_unstable();
    let mut families = Vec::with_capacity(keys.len());
    let mut max_ratio = 0.0f64;
    for m in keys {
        let set = &index_sets[&m];
        let num: f64 = set.iter().map(|&j| we.squares[j].side().powf(e)).sum();
        let ratio = num / wi.squares[m].side().powf(e);
        max_ratio = max_ratio.max(ratio);
        families.push(FamilyRatio {
            target: m,
            size: set.len(),
            ratio,
        });
    }
    Ok(SumEstimateReport {
        s,
        max_ratio,
        families,
    })
}

/// Write the assignment as CSV rows
/// `ext_level,ext_m1,ext_m2,int_level,int_m1,int_m2`.
pub fn write_assignment_csv<W: Write>(
    r: &ReflectionAssignment,
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
    mut w: W,
) -> Result<()> {
    writeln!(w, "ext_level,ext_m1,ext_m2,int_level,int_m1,int_m2")?;
    let mut rows: Vec<(&DyadicSquare, &DyadicSquare)> = r
        .targets
        .iter()
        .enumerate()
        .filter_map(|(j, t)| t.map(|m| (&we.squares[j], &wi.squares[m])))
        .collect();
    rows.sort_by_key(|(e, _)| (e.level, e.m1, e.m2));
    for (e, i) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.level, e.m1, e.m2, i.level, i.m1, i.m2
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ChainDump {
    ext1: [i64; 3],
    ext2: [i64; 3],
    interior: Vec<[i64; 3]>,
    fake_diams: Vec<f64>,
}

/// Serialize a chain as JSON, identifying squares by `[level, m1, m2]`.
pub fn chain_to_json(
    c: &Chain,
    wi: &WhitneyDecomposition,
    we: &WhitneyDecomposition,
) -> Result<String> {
    let key = |q: &DyadicSquare| [q.level as i64, q.m1, q.m2];
    let dump = ChainDump {
        ext1: key(&we.squares[c.ext1]),
        ext2: key(&we.squares[c.ext2]),
        interior: c.interior.iter().map(|&m| key(&wi.squares[m])).collect(),
        fake_diams: c.fake_diams.clone(),
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}
