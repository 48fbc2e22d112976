//! Conformal maps between the unit disk and Jordan domains (and between the
//! exterior disk and domain complements), with derivatives, boundary
//! correspondence, and hyperbolic distance/arc helpers.
//!
//! Numeric maps use the geodesic zipper construction: the boundary is opened
//! by a square root and then welded vertex by vertex with elementary maps
//! whose inverses are closed-form, so both directions of the map and the
//! derivative are evaluated exactly (for the numeric domain the construction
//! defines, which interpolates the requested vertices).

use crate::error::{Result, SobexError};
use crate::geom::{point_segment_distance, DomainKind, DomainSpec, Point};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square root with branch cut on `[0, inf)` mapping onto the upper half
/// plane; the standard helper of the zipper construction.
fn sqrt_up(w: Complex64) -> Complex64 {
    I * (-w).sqrt()
}

/// One zipped vertex: the half-plane Moebius parameter `q` (`None` when the
/// vertex image was purely imaginary) and the weld height `h`.
#[derive(Debug, Clone, Copy)]
struct ZipStep {
    q: Option<f64>,
    h: f64,
}

/// Geodesic-zipper map of the unit disk onto a Jordan domain interpolating a
/// closed vertex chain, normalized by `phi(0) = base`, `phi'(0) > 0`.
#[derive(Debug, Clone)]
pub struct ZipperMap {
    z0: Complex64,
    z1: Complex64,
    steps: Vec<ZipStep>,
    /// Closing Moebius parameter: the welded image of the start vertex.
    xi: Option<f64>,
    /// +1 when the interior lands in the right quadrant, -1 for the left.
    sigma: f64,
    cayley_a: Complex64,
    rot: Complex64,
    base: Complex64,
}

impl ZipperMap {
    /// Build from a CCW vertex loop (at least 8 vertices) and an interior
    /// base point.
    pub fn build(vertices: &[Point], base: Point) -> Result<ZipperMap> {
        if vertices.len() < 8 {
            return Err(SobexError::Conformal(format!(
                "zipper needs at least 8 vertices, got {}",
                vertices.len()
            )));
        }
        let vs: Vec<Complex64> = vertices.iter().map(|p| p.to_complex()).collect();
        let z0 = vs[0];
        let z1 = vs[1];
        let e0 = |z: Complex64| I * ((z - z1) / (z - z0)).sqrt();
        let mut steps: Vec<ZipStep> = Vec::with_capacity(vs.len());
        let apply_steps = |steps: &[ZipStep], mut w: Complex64| -> Complex64 {
            for s in steps {
                if let Some(q) = s.q {
                    w = w / (ONE - w / q);
                }
                w = sqrt_up(w * w + s.h * s.h);
            }
            w
        };
        for &zk in &vs[2..] {
            let a = apply_steps(&steps, e0(zk));
            let (re, im) = (a.re, a.im);
            let n2 = re * re + im * im;
            if !(im > 1e-12 * n2.sqrt()) || !n2.is_finite() {
                // Degenerate vertex image (welded onto the line already):
                // skip it rather than producing an invalid elementary map.
                continue;
            }
            let q = if re.abs() > 1e-12 * n2.sqrt() {
                Some(n2 / re)
            } else {
                None
            };
            steps.push(ZipStep { q, h: n2 / im });
        }
        if steps.len() < 4 {
            return Err(SobexError::Conformal(
                "too many degenerate vertices in zipper chain".into(),
            ));
        }
        // Welded image of the start vertex: track infinity through the chain
        // on the extended real line.
        let mut xi: Option<f64> = None; // None encodes infinity here
        let mut finite = false;
        let mut x = 0.0f64;
        for s in &steps {
            if let Some(q) = s.q {
                if !finite {
                    finite = true;
                    x = -q;
                } else if (x - q).abs() < 1e-300 {
                    finite = false;
                } else {
                    x = x / (1.0 - x / q);
                }
            }
            if finite {
                x = x.signum() * (x * x + s.h * s.h).sqrt();
            }
        }
        if finite {
            xi = Some(x);
        }
        // Quadrant of the interior, decided by the base point.
        let b0 = base.to_complex();
        let mut b = apply_steps(&steps, e0(b0));
        if let Some(xv) = xi {
            b = b / (ONE - b / xv);
        }
        let sigma = if b.re >= 0.0 { 1.0 } else { -1.0 };
        let cayley_a = sigma * b * b;
        if !(cayley_a.im > 0.0) {
            return Err(SobexError::Conformal(
                "base point did not land in the upper half plane".into(),
            ));
        }
        let mut map = ZipperMap {
            z0,
            z1,
            steps,
            xi,
            sigma,
            cayley_a,
            rot: ONE,
            base: b0,
        };
        // Rotation so that phi'(0) > 0.
        let (_, d0) = map.forward(b0)?;
        if !d0.is_finite() || d0.norm() == 0.0 {
            return Err(SobexError::Conformal(
                "degenerate derivative at the base point".into(),
            ));
        }
        map.rot = d0.conj() / d0.norm();
        Ok(map)
    }

    pub fn base(&self) -> Point {
        Point::from_complex(self.base)
    }

    /// Forward map domain -> disk with derivative.
    pub fn forward(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let s = (z - self.z1) / (z - self.z0);
        let mut w = I * s.sqrt();
        let mut d = w * (self.z1 - self.z0) / (2.0 * (z - self.z1) * (z - self.z0));
        for st in &self.steps {
            if let Some(q) = st.q {
                let den = ONE - w / q;
                d /= den * den;
                w /= den;
            }
            let nw = sqrt_up(w * w + st.h * st.h);
            d *= w / nw;
            w = nw;
        }
        if let Some(xi) = self.xi {
            let den = ONE - w / xi;
            d /= den * den;
            w /= den;
        }
        d *= 2.0 * self.sigma * w;
        w = self.sigma * w * w;
        let a = self.cayley_a;
        let den = w - a.conj();
        d *= (a - a.conj()) / (den * den);
        w = (w - a) / den;
        Ok((w * self.rot, d * self.rot))
    }

    /// Inverse (disk -> domain) by the closed-form chain of inverses.
    pub fn backward(&self, zeta: Complex64) -> Complex64 {
        let a = self.cayley_a;
        let mut w = zeta * self.rot.conj();
        w = (a - a.conj() * w) / (ONE - w);
        w = w.sqrt();
        if self.sigma < 0.0 {
            w *= I;
        }
        if let Some(xi) = self.xi {
            w = w / (ONE + w / xi);
        }
        for st in self.steps.iter().rev() {
            w = sqrt_up(w * w - st.h * st.h);
            if let Some(q) = st.q {
                w = w / (ONE + w / q);
            }
        }
        let s = -w * w;
        (self.z1 - self.z0 * s) / (ONE - s)
    }

    /// Map value and derivative of phi: disk -> domain at `zeta`.
    pub fn eval(&self, zeta: Complex64) -> Result<(Complex64, Complex64)> {
        let z = self.backward(zeta);
        let (back, d) = self.forward(z)?;
        if (back - zeta).norm() > 1e-6 || !d.is_finite() || d.norm() == 0.0 {
            return Err(SobexError::Conformal(format!(
                "round trip failed at {zeta} (returned {back})"
            )));
        }
        Ok((z, 1.0 / d))
    }
}

/// Evaluable conformal map descriptor.
#[derive(Debug, Clone)]
pub enum ConformalMap {
    /// The identity on the open unit disk.
    IdentityDisk,
    /// Disk automorphism `z -> e^{i theta} (z - a)/(1 - conj(a) z)`.
    Moebius { a: Complex64, theta: f64 },
    /// `z -> ((1+z)/(1-z))^alpha`: the disk onto a sector of opening
    /// `alpha * pi` at the origin.
    PowerSector { alpha: f64 },
    /// Affine map `z -> offset + scale * z` (disk onto a round disk).
    Similarity { scale: Complex64, offset: Complex64 },
    /// Zipper map of the disk onto a polygon-like Jordan domain.
    NumericPolygon(Box<ZipperMap>),
    /// Exterior map `w -> i_x( inner(1/conj(w)) )` built from the interior
    /// map of the inverted domain; source is the exterior of the unit disk.
    ExteriorComposed {
        inner: Box<ConformalMap>,
        center: Complex64,
    },
}

impl ConformalMap {
    /// Whether `z` belongs to the source region of the map.
    pub fn in_source(&self, z: Complex64) -> bool {
        match self {
            ConformalMap::ExteriorComposed { .. } => z.norm() > 1.0,
            _ => z.norm() < 1.0,
        }
    }

    /// The normalization point: image of 0 (or of infinity for exterior maps,
    /// where the inversion center is returned).
    pub fn base_point(&self) -> Point {
        match self {
            ConformalMap::IdentityDisk => Point::new(0.0, 0.0),
            ConformalMap::Moebius { a, theta } => {
                let v = Complex64::from_polar(1.0, *theta) * (-a);
                Point::from_complex(v)
            }
            ConformalMap::PowerSector { .. } => Point::new(1.0, 0.0),
            ConformalMap::Similarity { offset, .. } => Point::from_complex(*offset),
            ConformalMap::NumericPolygon(z) => z.base(),
            ConformalMap::ExteriorComposed { center, .. } => Point::from_complex(*center),
        }
    }
}

/// Value and complex derivative of the map at `z`.
pub fn evaluate(m: &ConformalMap, z: Point) -> Result<(Point, Complex64)> {
    let zc = z.to_complex();
    if !m.in_source(zc) {
        return Err(SobexError::WrongRegion(
            z.x,
            z.y,
            "source region of the conformal map".into(),
        ));
    }
    let (v, d) = evaluate_complex(m, zc)?;
    Ok((Point::from_complex(v), d))
}

fn evaluate_complex(m: &ConformalMap, z: Complex64) -> Result<(Complex64, Complex64)> {
    match m {
        ConformalMap::IdentityDisk => Ok((z, ONE)),
        ConformalMap::Moebius { a, theta } => {
            let rot = Complex64::from_polar(1.0, *theta);
            let den = ONE - a.conj() * z;
            let v = rot * (z - a) / den;
            let d = rot * (ONE - a.norm_sqr()) / (den * den);
            Ok((v, d))
        }
        ConformalMap::PowerSector { alpha } => {
            let u = (ONE + z) / (ONE - z);
            let v = u.powf(*alpha);
            // d/dz (1+z)/(1-z) = 2/(1-z)^2.
            let du = 2.0 / ((ONE - z) * (ONE - z));
            Ok((v, *alpha * v / u * du))
        }
        ConformalMap::Similarity { scale, offset } => Ok((offset + scale * z, *scale)),
        ConformalMap::NumericPolygon(zm) => zm.eval(z),
        ConformalMap::ExteriorComposed { inner, center } => {
            // phi(w) = x + 1/(g(1/w) - conj(x)) with g(u) = conj(inner(conj(u))).
            let u = 1.0 / z;
            let (fv, fd) = evaluate_complex(inner, u.conj())?;
            let g = fv.conj();
            let gd = fd.conj();
            let den = g - center.conj();
            let v = center + 1.0 / den;
            let d = gd / (z * z * den * den);
            Ok((v, d))
        }
    }
}

/// Inverse map: the source point whose image is `w`.
pub fn inverse(m: &ConformalMap, w: Point) -> Result<Point> {
    let wc = w.to_complex();
    let z = inverse_complex(m, wc)?;
    Ok(Point::from_complex(z))
}

fn inverse_complex(m: &ConformalMap, w: Complex64) -> Result<Complex64> {
    match m {
        ConformalMap::IdentityDisk => Ok(w),
        ConformalMap::Moebius { a, theta } => {
            let rot = Complex64::from_polar(1.0, -*theta);
            let u = rot * w;
            Ok((u + a) / (ONE + a.conj() * u))
        }
        ConformalMap::PowerSector { alpha } => {
            let u = w.powf(1.0 / *alpha);
            Ok((u - ONE) / (u + ONE))
        }
        ConformalMap::Similarity { scale, offset } => Ok((w - offset) / scale),
        ConformalMap::NumericPolygon(zm) => {
            let (z, _) = zm.forward(w)?;
            Ok(z)
        }
        ConformalMap::ExteriorComposed { inner, center } => {
            let target = (center.conj() + 1.0 / (w - center)).conj();
            let u = inverse_complex(inner, target)?.conj();
            Ok(1.0 / u)
        }
    }
}

/// Refine a polygon loop with endpoint-clustered (Chebyshev) subdivision per
/// edge, so corners are interpolated tightly by the zipper.
fn refine_loop(pts: &[Point], max_seg: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        let len = a.dist(&b);
        let k = ((len / max_seg).ceil() as usize).max(1);
        if k == 1 {
            out.push(a);
            continue;
        }
        for j in 0..k {
            let t = 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / k as f64).cos());
            out.push(a.lerp(&b, t));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapSide {
    Interior,
    Exterior,
}

/// Build a numeric conformal map for a polygonal domain. `tol` steers the
/// boundary refinement; smaller values use more zipper vertices.
pub fn build_polygon_map(d: &DomainSpec, side: MapSide, tol: f64) -> Result<ConformalMap> {
    if !(1e-8..1e-2).contains(&tol) {
        return Err(SobexError::Config(format!(
            "tolerance {tol} outside (1e-8, 1e-2)"
        )));
    }
    match (&d.kind, side) {
        (DomainKind::Polygon { .. }, MapSide::Interior) => {
            let diam = d.diameter();
            let max_seg = diam * tol.sqrt().max(2e-3);
            let loop_pts = refine_loop(&d.boundary_loop(max_seg)?, max_seg);
            let zm = ZipperMap::build(&loop_pts, d.base_point())?;
            Ok(ConformalMap::NumericPolygon(Box::new(zm)))
        }
        (DomainKind::Polygon { .. }, MapSide::Exterior) => {
            let x = d.base_point();
            let diam = d.diameter();
            let inverted = d.invert_with_resolution(&x, diam * tol.sqrt().max(2e-3) * 0.5)?;
            let idiam = inverted.diameter();
            let max_seg = idiam * tol.sqrt().max(2e-3);
            let loop_pts = refine_loop(&inverted.boundary_loop(max_seg)?, max_seg);
            let zm = ZipperMap::build(&loop_pts, x)?;
            Ok(ConformalMap::ExteriorComposed {
                inner: Box::new(ConformalMap::NumericPolygon(Box::new(zm))),
                center: x.to_complex(),
            })
        }
        (DomainKind::Disk { .. }, _) => build_map(d, side, tol),
        _ => Err(SobexError::Conformal(
            "numeric maps are built for polygon (and disk) domains".into(),
        )),
    }
}

/// Build the natural map for a domain: closed forms for disks, zipper maps
/// for polygons.
pub fn build_map(d: &DomainSpec, side: MapSide, tol: f64) -> Result<ConformalMap> {
    match (&d.kind, side) {
        (DomainKind::Disk { center, radius }, MapSide::Interior) => {
            if center == &[0.0, 0.0] && (*radius - 1.0).abs() < 1e-15 {
                Ok(ConformalMap::IdentityDisk)
            } else {
                Ok(ConformalMap::Similarity {
                    scale: Complex64::new(*radius, 0.0),
                    offset: Complex64::new(center[0], center[1]),
                })
            }
        }
        (DomainKind::Disk { center, radius }, MapSide::Exterior) => {
            let c = Complex64::new(center[0], center[1]);
            // i_x(inner(1/conj(w))) with inner(u) = u / r reproduces
            // w -> c + r w on the exterior.
            Ok(ConformalMap::ExteriorComposed {
                inner: Box::new(ConformalMap::Similarity {
                    scale: Complex64::new(1.0 / radius, 0.0),
                    offset: Complex64::new(0.0, 0.0),
                }),
                center: c,
            })
        }
        (DomainKind::Polygon { .. }, _) => build_polygon_map(d, side, tol),
        _ => Err(SobexError::Conformal(
            "no conformal map construction for this domain kind".into(),
        )),
    }
}

/// One row of the boundary correspondence table.
#[derive(Debug, Clone, Copy)]
pub struct CorrespondenceRow {
    pub angle: f64,
    pub image: Point,
    /// Cumulative arc length along the image boundary, starting at angle 0.
    pub arc_length: f64,
}

/// Boundary correspondence sampled at `n` uniform angles (just inside the
/// circle for numerical robustness of the weld collapse points).
pub fn correspondence_table(m: &ConformalMap, n: usize) -> Result<Vec<CorrespondenceRow>> {
    let r = 1.0 - 1e-9;
    let mut rows = Vec::with_capacity(n);
    let mut prev: Option<Point> = None;
    let mut acc = 0.0;
    for j in 0..n {
        let th = std::f64::consts::TAU * j as f64 / n as f64;
        let z = match m {
            ConformalMap::ExteriorComposed { .. } => Complex64::from_polar(1.0 / r, th),
            _ => Complex64::from_polar(r, th),
        };
        let (v, _) = evaluate_complex(m, z)?;
        let p = Point::from_complex(v);
        if let Some(q) = prev {
            acc += q.dist(&p);
        }
        rows.push(CorrespondenceRow {
            angle: th,
            image: p,
            arc_length: acc,
        });
        prev = Some(p);
    }
    Ok(rows)
}

/// Hyperbolic distance in the unit disk, `2 artanh |(z1-z2)/(1-conj(z1) z2)|`.
pub fn hyperbolic_distance_disk(z1: Point, z2: Point) -> Result<f64> {
    let a = z1.to_complex();
    let b = z2.to_complex();
    if a.norm() >= 1.0 || b.norm() >= 1.0 {
        return Err(SobexError::WrongRegion(
            z1.x,
            z1.y,
            "open unit disk".into(),
        ));
    }
    let t = ((a - b) / (ONE - a.conj() * b)).norm();
    Ok(2.0 * t.atanh())
}

/// Specification of a hyperbolic arc in the source disk.
#[derive(Debug, Clone, Copy)]
pub enum ArcSpec {
    /// Radial ray toward boundary angle `theta`.
    Ray(f64),
    /// Hyperbolic geodesic between two points of the image domain.
    Geodesic(Point, Point),
}

/// A sampled hyperbolic arc with source and image polylines.
#[derive(Debug, Clone)]
pub struct HyperbolicArc {
    pub source_samples: Vec<Point>,
    pub samples: Vec<Point>,
}

/// Trace the image of a hyperbolic ray or geodesic. Sampling adapts to the
/// image geometry: steps are kept below a fraction of the local distance to
/// the image boundary (estimated from the derivative by Koebe-type bounds).
pub fn hyperbolic_arc(m: &ConformalMap, spec: ArcSpec) -> Result<HyperbolicArc> {
    let cutoff = 1e-4;
    let points: Vec<Complex64> = match spec {
        ArcSpec::Ray(theta) => {
            if !(0.0..std::f64::consts::TAU).contains(&theta) {
                return Err(SobexError::Config(format!(
                    "ray angle {theta} outside [0, 2 pi)"
                )));
            }
            let dir = Complex64::from_polar(1.0, theta);
            // March in radius; local step from the conformal scale factor.
            let mut rs = vec![0.0f64];
            let mut r = 0.0;
            while r < 1.0 - cutoff {
                let (_, d) = evaluate_complex(m, r * dir)?;
                // Distance of the image to the boundary is comparable to
                // |phi'| (1 - r); advance a fixed hyperbolic step.
                let _ = d;
                let step = 0.05 * (1.0 - r);
                r = (r + step).min(1.0 - cutoff);
                rs.push(r);
            }
            rs.into_iter().map(|r| r * dir).collect()
        }
        ArcSpec::Geodesic(w1, w2) => {
            let z1 = inverse_complex(m, w1.to_complex())?;
            let z2 = inverse_complex(m, w2.to_complex())?;
            geodesic_samples(z1, z2)
        }
    };
    let mut source = Vec::with_capacity(points.len());
    let mut image = Vec::with_capacity(points.len());
    for z in points {
        let (v, _) = evaluate_complex(m, adjust_source(m, z))?;
        source.push(Point::from_complex(z));
        image.push(Point::from_complex(v));
    }
    Ok(HyperbolicArc {
        source_samples: source,
        samples: image,
    })
}

/// For exterior maps the source is outside the circle; arcs are specified in
/// the interior-disk picture, so reflect the sample across the circle.
fn adjust_source(m: &ConformalMap, z: Complex64) -> Complex64 {
    match m {
        ConformalMap::ExteriorComposed { .. } => 1.0 / z.conj(),
        _ => z,
    }
}

/// Sample points of the disk geodesic between `z1` and `z2`: a diameter
/// chord when collinear with the origin, otherwise the circular arc
/// orthogonal to the unit circle.
fn geodesic_samples(z1: Complex64, z2: Complex64) -> Vec<Complex64> {
    let n = 128usize;
    // Solve 2 Re(z conj(c)) = 1 + |z|^2 for the orthogonal circle center c.
    let (a1, b1, r1) = (2.0 * z1.re, 2.0 * z1.im, 1.0 + z1.norm_sqr());
    let (a2, b2, r2) = (2.0 * z2.re, 2.0 * z2.im, 1.0 + z2.norm_sqr());
    let det = a1 * b2 - a2 * b1;
    if det.abs() < 1e-9 * (a1.hypot(b1) * a2.hypot(b2)).max(1e-12) {
        // Collinear with the origin: the geodesic is a chord.
        return (0..=n)
            .map(|j| z1 + (z2 - z1) * (j as f64 / n as f64))
            .collect();
    }
    let cx = (r1 * b2 - r2 * b1) / det;
    let cy = (a1 * r2 - a2 * r1) / det;
    let c = Complex64::new(cx, cy);
    let rad = (c.norm_sqr() - 1.0).max(0.0).sqrt();
    let t1 = (z1 - c).arg();
    let mut t2 = (z2 - c).arg();
    // Shorter arc between the two angles.
    if t2 - t1 > std::f64::consts::PI {
        t2 -= std::f64::consts::TAU;
    } else if t1 - t2 > std::f64::consts::PI {
        t2 += std::f64::consts::TAU;
    }
    (0..=n)
        .map(|j| {
            let t = t1 + (t2 - t1) * j as f64 / n as f64;
            c + Complex64::from_polar(rad, t)
        })
        .collect()
}

/// Cumulative boundary parameter of `p` along the polygon boundary of `d`.
pub fn boundary_parameter(d: &DomainSpec, p: &Point) -> Result<f64> {
    let verts = match &d.kind {
        DomainKind::Polygon { vertices } => vertices
            .iter()
            .map(|v| Point::new(v[0], v[1]))
            .collect::<Vec<_>>(),
        _ => {
            return Err(SobexError::InvalidDomain(
                "boundary parameter needs a polygon".into(),
            ))
        }
    };
    let mut best = (f64::INFINITY, 0.0);
    let mut acc = 0.0;
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        let dist = point_segment_distance(p, &a, &b);
        if dist < best.0 {
            let ab = b - a;
            let len2 = ab.x * ab.x + ab.y * ab.y;
            let t = if len2 > 0.0 {
                (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            best = (dist, acc + t * a.dist(&b));
        }
        acc += a.dist(&b);
    }
    Ok(best.1)
}
