//! Planar domains and core geometric queries: boundary distance, containment,
//! inversion, diameters.

use crate::error::{Result, SobexError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// A point of the plane. Coordinates are finite by construction of the
/// public constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Point::new(z.re, z.im)
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Where a point sits relative to a domain. `Boundary` is assigned within the
/// domain's boundary tolerance band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    Interior,
    Exterior,
    Boundary,
}

/// The shape families the toolkit works with.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Simple closed CCW polygon, vertices listed without repetition of the
    /// first vertex.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Disk of the given radius centered at the origin with a radial slit cut
    /// inward from the boundary point `(radius, 0)`. The slit is treated as a
    /// doubled boundary edge.
    SlitDisk {
        radius: f64,
        slit_depth: f64,
    },
    /// Outward power cusp at the origin: the strip `0 < x < scale`,
    /// `|y| < x^alpha`, closed on the right by the half disk of radius
    /// `scale^alpha` centered at `(scale, 0)`.
    PowerCusp {
        alpha: f64,
        scale: f64,
    },
    /// Round annulus centered at the origin; used by the capacity module only.
    Annulus {
        r_inner: f64,
        r_outer: f64,
    },
}

/// A bounded planar domain together with the tolerance band used for
/// boundary classification.
#[derive(Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    /// Width of the boundary classification band. Zero means "use the
    /// default `1e-9 * diam`".
    #[serde(default)]
    pub boundary_tolerance: f64,
    #[serde(skip)]
    cache: OnceLock<BoundaryCache>,
}

impl Clone for DomainSpec {
    fn clone(&self) -> Self {
        DomainSpec {
            kind: self.kind.clone(),
            boundary_tolerance: self.boundary_tolerance,
            cache: OnceLock::new(),
        }
    }
}

/// Precomputed boundary primitives for distance queries.
#[derive(Debug)]
struct BoundaryCache {
    circles: Vec<(Point, f64)>,
    segments: Vec<(Point, Point)>,
    diameter: f64,
    seg_index: Option<SegIndex>,
}

/// Uniform bucket grid over the boundary segments; used when a boundary has
/// many segments so that point/box distance queries stay cheap.
#[derive(Debug)]
struct SegIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegIndex {
    fn build(segments: &[(Point, Point)], diam: f64) -> SegIndex {
        let mut minx = f64::INFINITY;
        let mut miny = f64::INFINITY;
        let mut maxx = f64::NEG_INFINITY;
        let mut maxy = f64::NEG_INFINITY;
        for (a, b) in segments {
            minx = minx.min(a.x).min(b.x);
            miny = miny.min(a.y).min(b.y);
            maxx = maxx.max(a.x).max(b.x);
            maxy = maxy.max(a.y).max(b.y);
        }
        let pad = diam;
        let x0 = minx - pad;
        let y0 = miny - pad;
        let cell = (diam / 48.0).max(1e-12);
        let nx = (((maxx + pad - x0) / cell).ceil() as usize).max(1);
        let ny = (((maxy + pad - y0) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, (a, b)) in segments.iter().enumerate() {
            let ix0 = (((a.x.min(b.x) - x0) / cell).floor() as isize).clamp(0, nx as isize - 1);
            let ix1 = (((a.x.max(b.x) - x0) / cell).floor() as isize).clamp(0, nx as isize - 1);
            let iy0 = (((a.y.min(b.y) - y0) / cell).floor() as isize).clamp(0, ny as isize - 1);
            let iy1 = (((a.y.max(b.y) - y0) / cell).floor() as isize).clamp(0, ny as isize - 1);
            for ix in ix0..=ix1 {
                for iy in iy0..=iy1 {
                    buckets[iy as usize * nx + ix as usize].push(i as u32);
                }
            }
        }
        SegIndex {
            x0,
            y0,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Expanding-ring nearest query. `upper` seeds the search with a distance
    /// already known (from circle primitives).
    fn nearest(&self, segments: &[(Point, Point)], p: &Point, upper: f64) -> f64 {
        let cx = (((p.x - self.x0) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let cy = (((p.y - self.y0) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        let mut best = upper;
        let max_ring = self.nx.max(self.ny) as isize;
        for ring in 0..=max_ring {
            let lb = (ring - 1).max(0) as f64 * self.cell;
            if lb > best {
                break;
            }
            let visit = |ix: isize, iy: isize, best: &mut f64| {
                if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                    return;
                }
                for &si in &self.buckets[iy as usize * self.nx + ix as usize] {
                    let (a, b) = &segments[si as usize];
                    let d = point_segment_distance(p, a, b);
                    if d < *best {
                        *best = d;
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy, &mut best);
            } else {
                for k in -ring..=ring {
                    visit(cx + k, cy - ring, &mut best);
                    visit(cx + k, cy + ring, &mut best);
                    if k > -ring && k < ring {
                        visit(cx - ring, cy + k, &mut best);
                        visit(cx + ring, cy + k, &mut best);
                    }
                }
            }
        }
        best
    }

    /// Segment ids in buckets overlapped by the padded box.
    fn candidates_in_box(&self, x0: f64, y0: f64, x1: f64, y1: f64, pad: f64) -> Vec<u32> {
        let ix0 = (((x0 - pad - self.x0) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let ix1 = (((x1 + pad - self.x0) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let iy0 = (((y0 - pad - self.y0) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        let iy1 = (((y1 + pad - self.y0) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        let mut ids = Vec::new();
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                ids.extend_from_slice(&self.buckets[iy as usize * self.nx + ix as usize]);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

const CUSP_CURVE_SAMPLES: usize = 1500;
const ARC_SAMPLES: usize = 600;

impl DomainSpec {
    pub fn new(kind: DomainKind) -> Result<Self> {
        let mut d = DomainSpec {
            kind,
            boundary_tolerance: 0.0,
            cache: OnceLock::new(),
        };
        d.validate()?;
        if d.boundary_tolerance == 0.0 {
            d.boundary_tolerance = 1e-9 * d.diameter();
        }
        Ok(d)
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        Self::new(DomainKind::Disk {
            center: [center.x, center.y],
            radius,
        })
        .expect("valid disk")
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::new(0.0, 0.0), 1.0)
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Self::new(DomainKind::Polygon {
            vertices: vertices.iter().map(|p| [p.x, p.y]).collect(),
        })
    }

    /// Axis-aligned rectangle [x0,x1] x [y0,y1].
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::polygon(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
        .expect("valid rectangle")
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    /// L-shape: unit square with the upper-right quadrant removed.
    pub fn l_shape() -> Self {
        Self::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 1.0),
            Point::new(0.0, 1.0),
        ])
        .expect("valid L-shape")
    }

    pub fn slit_disk(radius: f64, slit_depth: f64) -> Result<Self> {
        Self::new(DomainKind::SlitDisk { radius, slit_depth })
    }

    pub fn power_cusp(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(DomainKind::PowerCusp { alpha, scale })
    }

    pub fn annulus(r_inner: f64, r_outer: f64) -> Result<Self> {
        Self::new(DomainKind::Annulus { r_inner, r_outer })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut d: DomainSpec = serde_json::from_str(text)?;
        d.validate()?;
        if d.boundary_tolerance == 0.0 {
            d.boundary_tolerance = 1e-9 * d.diameter();
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DomainKind::Disk { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(SobexError::InvalidDomain("radius must be positive".into()));
                }
            }
            DomainKind::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(SobexError::InvalidDomain(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                if signed_area(&pts) <= 0.0 {
                    return Err(SobexError::InvalidDomain(
                        "polygon vertices must be CCW".into(),
                    ));
                }
                if !is_simple(&pts) {
                    return Err(SobexError::InvalidDomain("polygon must be simple".into()));
                }
            }
            DomainKind::SlitDisk { radius, slit_depth } => {
                if *radius <= 0.0 {
                    return Err(SobexError::InvalidDomain("radius must be positive".into()));
                }
                if *slit_depth <= 0.0 || *slit_depth >= *radius {
                    return Err(SobexError::InvalidDomain(
                        "slit_depth must lie in (0, radius)".into(),
                    ));
                }
            }
            DomainKind::PowerCusp { alpha, scale } => {
                if *alpha <= 1.0 {
                    return Err(SobexError::InvalidDomain("alpha must exceed 1".into()));
                }
                if *scale <= 0.0 {
                    return Err(SobexError::InvalidDomain("scale must be positive".into()));
                }
            }
            DomainKind::Annulus { r_inner, r_outer } => {
                if *r_inner <= 0.0 || *r_inner >= *r_outer {
                    return Err(SobexError::InvalidDomain(
                        "annulus needs 0 < r_inner < r_outer".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn cache(&self) -> &BoundaryCache {
        self.cache.get_or_init(|| self.build_cache())
    }

    fn build_cache(&self) -> BoundaryCache {
        let mut circles = Vec::new();
        let mut segments = Vec::new();
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                circles.push((Point::new(center[0], center[1]), *radius));
            }
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                for i in 0..pts.len() {
                    segments.push((pts[i], pts[(i + 1) % pts.len()]));
                }
            }
            DomainKind::SlitDisk { radius, slit_depth } => {
                circles.push((Point::new(0.0, 0.0), *radius));
                segments.push((Point::new(radius - slit_depth, 0.0), Point::new(*radius, 0.0)));
            }
            DomainKind::PowerCusp { alpha, scale } => {
                // Cusp curves y = +-x^alpha, sampled with grading toward the tip.
                let mut upper = Vec::with_capacity(CUSP_CURVE_SAMPLES + 1);
                for j in 0..=CUSP_CURVE_SAMPLES {
                    let t = j as f64 / CUSP_CURVE_SAMPLES as f64;
                    let x = scale * t * t;
                    upper.push(Point::new(x, x.powf(*alpha)));
                }
                for w in upper.windows(2) {
                    segments.push((w[0], w[1]));
                    segments.push((
                        Point::new(w[0].x, -w[0].y),
                        Point::new(w[1].x, -w[1].y),
                    ));
                }
                // Right semicircle from (scale, scale^alpha) to (scale, -scale^alpha).
                let r = scale.powf(*alpha);
                let c = Point::new(*scale, 0.0);
                let mut prev = Point::new(*scale, r);
                for j in 1..=ARC_SAMPLES {
                    let t = std::f64::consts::PI / 2.0
                        - std::f64::consts::PI * j as f64 / ARC_SAMPLES as f64;
                    let p = Point::new(c.x + r * t.cos(), c.y + r * t.sin());
                    segments.push((prev, p));
                    prev = p;
                }
            }
            DomainKind::Annulus { r_inner, r_outer } => {
                circles.push((Point::new(0.0, 0.0), *r_inner));
                circles.push((Point::new(0.0, 0.0), *r_outer));
            }
        }
        let diameter = match &self.kind {
            DomainKind::Disk { radius, .. } => 2.0 * radius,
            DomainKind::Annulus { r_outer, .. } => 2.0 * r_outer,
            DomainKind::SlitDisk { radius, .. } => 2.0 * radius,
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                let mut best: f64 = 0.0;
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        best = best.max(pts[i].dist(&pts[j]));
                    }
                }
                best
            }
            DomainKind::PowerCusp { .. } => {
                // Brute force over the boundary sample.
                let mut pts: Vec<Point> = Vec::new();
                for (a, b) in &segments {
                    pts.push(*a);
                    pts.push(*b);
                }
                let step = (pts.len() / 400).max(1);
                let sampled: Vec<Point> = pts.iter().step_by(step).copied().collect();
                let mut best: f64 = 0.0;
                for i in 0..sampled.len() {
                    for j in i + 1..sampled.len() {
                        best = best.max(sampled[i].dist(&sampled[j]));
                    }
                }
                best
            }
        };
        let seg_index = if segments.len() > 48 {
            Some(SegIndex::build(&segments, diameter))
        } else {
            None
        };
        BoundaryCache {
            circles,
            segments,
            diameter,
            seg_index,
        }
    }

    /// Euclidean distance from `p` to the boundary of the domain.
    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        let c = self.cache();
        let mut best = f64::INFINITY;
        for (center, r) in &c.circles {
            best = best.min((p.dist(center) - r).abs());
        }
        if let Some(index) = &c.seg_index {
            best = index.nearest(&c.segments, p, best);
        } else {
            for (a, b) in &c.segments {
                best = best.min(point_segment_distance(p, a, b));
            }
        }
        best
    }

    /// Minimal distance from the closed box `[x0,x1] x [y0,y1]` to the boundary.
    pub fn distance_box_to_boundary(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        let c = self.cache();
        let mut best = f64::INFINITY;
        for (center, r) in &c.circles {
            let dx = if center.x < x0 {
                x0 - center.x
            } else if center.x > x1 {
                center.x - x1
            } else {
                0.0
            };
            let dy = if center.y < y0 {
                y0 - center.y
            } else if center.y > y1 {
                center.y - y1
            } else {
                0.0
            };
            let dmin = dx.hypot(dy);
            let fx = (center.x - x0).abs().max((center.x - x1).abs());
            let fy = (center.y - y0).abs().max((center.y - y1).abs());
            let dmax = fx.hypot(fy);
            let d = if dmax < *r {
                r - dmax
            } else if dmin > *r {
                dmin - r
            } else {
                0.0
            };
            best = best.min(d);
        }
        if let Some(index) = &c.seg_index {
            // Escalate the search pad until some candidate is certainly within it.
            let mut pad = index.cell;
            loop {
                let ids = index.candidates_in_box(x0, y0, x1, y1, pad);
                for &si in &ids {
                    let (a, b) = &c.segments[si as usize];
                    best = best.min(segment_box_distance(a, b, x0, y0, x1, y1));
                }
                if best <= pad {
                    break;
                }
                let covered = pad > c.diameter * 8.0;
                if covered {
                    break;
                }
                pad *= 2.0;
            }
            best
        } else {
            for (a, b) in &c.segments {
                best = best.min(segment_box_distance(a, b, x0, y0, x1, y1));
                if best == 0.0 {
                    return 0.0;
                }
            }
            best
        }
    }

    /// Whether the open segment `(a, b)` crosses the boundary.
    ///
    /// A circle is crossed when the segment dips strictly inside while at
    /// least one endpoint lies strictly outside; polyline pieces are tested
    /// with exact segment intersection.
    pub fn segment_crosses_boundary(&self, a: &Point, b: &Point) -> bool {
        let c = self.cache();
        for (center, r) in &c.circles {
            let dc = point_segment_distance(center, a, b);
            let far = a.dist(center).max(b.dist(center));
            if dc < *r && far > *r {
                return true;
            }
        }
        if let Some(index) = &c.seg_index {
            let pad = index.cell;
            let ids = index.candidates_in_box(
                a.x.min(b.x),
                a.y.min(b.y),
                a.x.max(b.x),
                a.y.max(b.y),
                pad,
            );
            for &si in &ids {
                let (s, t) = &c.segments[si as usize];
                if segments_intersect(a, b, s, t) {
                    return true;
                }
            }
        } else {
            for (s, t) in &c.segments {
                if segments_intersect(a, b, s, t) {
                    return true;
                }
            }
        }
        false
    }

    /// Strict interior test, ignoring the boundary band.
    pub fn is_inside(&self, p: &Point) -> bool {
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                p.dist(&Point::new(center[0], center[1])) < *radius
            }
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                point_in_polygon(p, &pts)
            }
            DomainKind::SlitDisk { radius, slit_depth } => {
                p.norm() < *radius
                    && point_segment_distance(
                        p,
                        &Point::new(radius - slit_depth, 0.0),
                        &Point::new(*radius, 0.0),
                    ) > 0.0
            }
            DomainKind::PowerCusp { alpha, scale } => {
                let strip = p.x > 0.0 && p.x < *scale && p.y.abs() < p.x.powf(*alpha);
                let cap = p.x >= *scale
                    && (p.x - scale).hypot(p.y) < scale.powf(*alpha);
                strip || cap
            }
            DomainKind::Annulus { r_inner, r_outer } => {
                let r = p.norm();
                r > *r_inner && r < *r_outer
            }
        }
    }

    /// Interior / Exterior / Boundary classification with the tolerance band.
    pub fn classify(&self, p: &Point) -> RegionTag {
        if self.distance_to_boundary(p) <= self.boundary_tolerance {
            RegionTag::Boundary
        } else if self.is_inside(p) {
            RegionTag::Interior
        } else {
            RegionTag::Exterior
        }
    }

    pub fn diameter(&self) -> f64 {
        self.cache().diameter
    }

    /// Axis-aligned bounding box `(x0, y0, x1, y1)` of the boundary.
    pub fn boundary_bbox(&self) -> (f64, f64, f64, f64) {
        let c = self.cache();
        let mut x0 = f64::INFINITY;
        let mut y0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for (center, r) in &c.circles {
            x0 = x0.min(center.x - r);
            y0 = y0.min(center.y - r);
            x1 = x1.max(center.x + r);
            y1 = y1.max(center.y + r);
        }
        for (a, b) in &c.segments {
            x0 = x0.min(a.x).min(b.x);
            y0 = y0.min(a.y).min(b.y);
            x1 = x1.max(a.x).max(b.x);
            y1 = y1.max(a.y).max(b.y);
        }
        (x0, y0, x1, y1)
    }

    /// A representative interior base point (centroid-like).
    pub fn base_point(&self) -> Point {
        match &self.kind {
            DomainKind::Disk { center, .. } => Point::new(center[0], center[1]),
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                let c = polygon_centroid(&pts);
                if self.is_inside(&c) {
                    c
                } else {
                    // Nonconvex polygon whose centroid fell outside; probe
                    // toward the interior along a vertex direction.
                    let mut best = c;
                    let mut best_d = -1.0;
                    for i in 0..pts.len() {
                        let m = pts[i].lerp(&pts[(i + 1) % pts.len()], 0.5);
                        for t in [0.05, 0.1, 0.2, 0.3] {
                            let q = m.lerp(&c, t);
                            if self.is_inside(&q) {
                                let d = self.distance_to_boundary(&q);
                                if d > best_d {
                                    best_d = d;
                                    best = q;
                                }
                            }
                        }
                    }
                    best
                }
            }
            DomainKind::SlitDisk { radius, .. } => Point::new(-radius / 2.0, 0.0),
            DomainKind::PowerCusp { scale, .. } => Point::new(*scale, 0.0),
            DomainKind::Annulus { r_inner, r_outer } => {
                Point::new((r_inner + r_outer) / 2.0, 0.0)
            }
        }
    }

    /// Closed boundary loop, refined so consecutive samples are at most
    /// `max_seg` apart. Only defined for Jordan kinds (disk, polygon).
    pub fn boundary_loop(&self, max_seg: f64) -> Result<Vec<Point>> {
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                let n = ((2.0 * std::f64::consts::PI * radius / max_seg).ceil() as usize).max(16);
                Ok((0..n)
                    .map(|j| {
                        let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                        Point::new(center[0] + radius * t.cos(), center[1] + radius * t.sin())
                    })
                    .collect())
            }
            DomainKind::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                let mut out = Vec::new();
                for i in 0..pts.len() {
                    let a = pts[i];
                    let b = pts[(i + 1) % pts.len()];
                    let n = ((a.dist(&b) / max_seg).ceil() as usize).max(1);
                    for j in 0..n {
                        out.push(a.lerp(&b, j as f64 / n as f64));
                    }
                }
                Ok(out)
            }
            _ => Err(SobexError::InvalidDomain(
                "boundary loop is only defined for disk and polygon kinds".into(),
            )),
        }
    }

    /// Image of the domain boundary under the inversion `i_x(y) = x + (y-x)/|y-x|^2`,
    /// returned as a CCW polygon. The interior of the returned polygon is the
    /// image of the exterior of the domain (plus the point at infinity).
    pub fn invert(&self, x: &Point) -> Result<DomainSpec> {
        self.invert_with_resolution(x, self.diameter() / 512.0)
    }

    pub fn invert_with_resolution(&self, x: &Point, max_seg: f64) -> Result<DomainSpec> {
        if !self.is_inside(x) {
            return Err(SobexError::WrongRegion(
                x.x,
                x.y,
                "inversion center must be interior".into(),
            ));
        }
        let loop_pts = self.boundary_loop(max_seg)?;
        let mut inv: Vec<Point> = loop_pts.iter().map(|p| invert_point(x, p)).collect();
        let mut pts = inv.clone();
        if signed_area(&pts) < 0.0 {
            inv.reverse();
            pts = inv;
        }
        Self::polygon(pts)
    }
}

/// The inversion `i_x(y) = x + (y - x)/|y - x|^2`.
pub fn invert_point(x: &Point, y: &Point) -> Point {
    let d = *y - *x;
    let n2 = d.x * d.x + d.y * d.y;
    assert!(n2 > 0.0, "inversion of the center is undefined");
    Point::new(x.x + d.x / n2, x.y + d.y / n2)
}

pub fn signed_area(pts: &[Point]) -> f64 {
    let mut a = 0.0;
    for i in 0..pts.len() {
        let p = pts[i];
        let q = pts[(i + 1) % pts.len()];
        a += p.x * q.y - q.x * p.y;
    }
    a / 2.0
}

pub fn polygon_centroid(pts: &[Point]) -> Point {
    let a = signed_area(pts);
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..pts.len() {
        let p = pts[i];
        let q = pts[(i + 1) % pts.len()];
        let cross = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    p.dist(&Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Proper or improper intersection test for closed segments.
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point| -> bool {
        orient(p, q, r) == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

fn segment_segment_distance(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn segment_box_distance(a: &Point, b: &Point, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let inside = |p: &Point| p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    if inside(a) || inside(b) {
        return 0.0;
    }
    let corners = [
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ];
    let mut best = f64::INFINITY;
    for i in 0..4 {
        best = best.min(segment_segment_distance(
            a,
            b,
            &corners[i],
            &corners[(i + 1) % 4],
        ));
        if best == 0.0 {
            return 0.0;
        }
    }
    best
}

pub fn point_in_polygon(p: &Point, pts: &[Point]) -> bool {
    let mut inside = false;
    let mut j = pts.len() - 1;
    for i in 0..pts.len() {
        let (pi, pj) = (pts[i], pts[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let xint = pi.x + (p.y - pi.y) / (pj.y - pi.y) * (pj.x - pi.x);
            if p.x < xint {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            // Skip adjacent edges (they share a vertex).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_intersect(&a, &b, &c, &d) {
                return false;
            }
        }
    }
    true
}
