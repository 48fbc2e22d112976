//! Grid-sampled functions, discrete Sobolev norms, the exterior extension
//! operator driven by the Whitney reflection, the inner extension operator on
//! conformal annuli, and the necessity-side constructions (singular test
//! function and the gradient lower bound on squares).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::TAU;
use std::io::Write;

use serde::Serialize;

use crate::conformal::{inverse, ConformalMap};
use crate::error::{Result, SobexError};
use crate::geom::{DomainSpec, Point, RegionTag};
use crate::metricpath::{CostFunctional, PathGrid, PathSide};
use crate::reflect::ReflectionAssignment;
use crate::whitney::WhitneyDecomposition;

/// A function sampled at cell centers of a uniform grid. `mask` records
/// where the values are meaningful: `Interior` cells carry data, `Exterior`
/// cells carry extension data when present, `Boundary` cells are undefined.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: index `j * nx + i`.
    pub values: Vec<f64>,
    pub mask: Vec<RegionTag>,
}

impl GridFunction {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Cell whose center is nearest to `p`, if inside the grid.
    pub fn locate(&self, p: &Point) -> Option<(usize, usize)> {
        let i = ((p.x - self.origin.x) / self.h - 0.5).round();
        let j = ((p.y - self.origin.y) / self.h - 0.5).round();
        if i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i < self.nx && j < self.ny {
            Some((i, j))
        } else {
            None
        }
    }

    fn defined(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.nx + i] != RegionTag::Boundary
    }
}

/// Named test-function families used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFamily {
    /// Constant 1.
    One,
    /// The coordinate function x.
    LinearX,
    /// Re z^2 = x^2 - y^2.
    ReSquare,
    /// |z - z0|^a with z0 the domain's base point.
    PowerDist { a: f64 },
    /// sin(kx) cos(ky).
    Trig { k: f64 },
}

/// Parse a family id: `one`, `x`, `re_z2`, `pow:A`, `trig:K`.
pub fn parse_family(s: &str) -> Result<TestFamily> {
    let fam = match s {
        "one" | "const" => TestFamily::One,
        "x" | "linear" => TestFamily::LinearX,
        "re_z2" => TestFamily::ReSquare,
        _ => {
            if let Some(a) = s.strip_prefix("pow:") {
                let a: f64 = a
                    .parse()
                    .map_err(|_| SobexError::Config(format!("bad power exponent in '{}'", s)))?;
                if a <= 0.0 {
                    return Err(SobexError::Config("power exponent must be positive".into()));
                }
                TestFamily::PowerDist { a }
            } else if let Some(k) = s.strip_prefix("trig:") {
                let k: f64 = k
                    .parse()
                    .map_err(|_| SobexError::Config(format!("bad frequency in '{}'", s)))?;
                TestFamily::Trig { k }
            } else {
                return Err(SobexError::Config(format!("unknown function family '{}'", s)));
            }
        }
    };
    Ok(fam)
}

/// Evaluate a family at a point, with `z0` the distinguished center.
pub fn family_value(f: TestFamily, p: &Point, z0: &Point) -> f64 {
    match f {
        TestFamily::One => 1.0,
        TestFamily::LinearX => p.x,
        TestFamily::ReSquare => p.x * p.x - p.y * p.y,
        TestFamily::PowerDist { a } => p.dist(z0).powf(a),
        TestFamily::Trig { k } => (k * p.x).sin() * (k * p.y).cos(),
    }
}

/// Sample a family on a grid covering the domain's bounding box; the mask
/// classifies each cell center against the domain.
pub fn sample(d: &DomainSpec, f: TestFamily, h: f64) -> Result<GridFunction> {
    if h <= 0.0 {
        return Err(SobexError::Config("grid spacing must be positive".into()));
    }
    let (x0, y0, x1, y1) = d.boundary_bbox();
    let origin = Point::new(x0 - 2.0 * h, y0 - 2.0 * h);
    let nx = ((x1 - origin.x) / h).ceil() as usize + 2;
    let ny = ((y1 - origin.y) / h).ceil() as usize + 2;
    let z0 = d.base_point();
    let mut values = vec![0.0; nx * ny];
    let mut mask = vec![RegionTag::Boundary; nx * ny];
    let g = GridFunction {
        origin,
        h,
        nx,
        ny,
        values: Vec::new(),
        mask: Vec::new(),
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = g.center(i, j);
            let tag = d.classify(&c);
            mask[j * nx + i] = tag;
            if tag == RegionTag::Interior {
                values[j * nx + i] = family_value(f, &c, &z0);
            }
        }
    }
    Ok(GridFunction {
        origin,
        h,
        nx,
        ny,
        values,
        mask,
    })
}

/// Which cells a norm is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormRegion {
    Interior,
    Exterior,
    /// All defined cells (everything not masked `Boundary`).
    All,
}

impl NormRegion {
    fn admits(&self, tag: RegionTag) -> bool {
        match self {
            NormRegion::Interior => tag == RegionTag::Interior,
            NormRegion::Exterior => tag == RegionTag::Exterior,
            NormRegion::All => tag != RegionTag::Boundary,
        }
    }
}

/// Discrete Sobolev norm of a grid function.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub p: f64,
    pub seminorm: f64,
    pub norm: f64,
    pub h: f64,
    pub region: NormRegion,
}

/// Discrete W^{1,p} seminorm and norm over the cells of a region: central
/// differences on interior stencils, one-sided at mask edges, composite
/// midpoint quadrature.
pub fn sobolev_seminorm(u: &GridFunction, p: f64, region: NormRegion) -> Result<NormReport> {
    if !(1.0 < p) || !p.is_finite() {
        return Err(SobexError::Config("exponent p must lie in (1, inf)".into()));
    }
    let ok = |i: i64, j: i64| -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < u.nx
            && (j as usize) < u.ny
            && region.admits(u.mask[(j as usize) * u.nx + i as usize])
    };
    let val = |i: i64, j: i64| u.values[(j as usize) * u.nx + i as usize];
    let mut grad_sum = 0.0;
    let mut val_sum = 0.0;
    let mut any = false;
    for j in 0..u.ny as i64 {
        for i in 0..u.nx as i64 {
            if !ok(i, j) {
                continue;
            }
            any = true;
            let dx = if ok(i - 1, j) && ok(i + 1, j) {
                (val(i + 1, j) - val(i - 1, j)) / (2.0 * u.h)
            } else if ok(i + 1, j) {
                (val(i + 1, j) - val(i, j)) / u.h
            } else if ok(i - 1, j) {
                (val(i, j) - val(i - 1, j)) / u.h
            } else {
                0.0
            };
            let dy = if ok(i, j - 1) && ok(i, j + 1) {
                (val(i, j + 1) - val(i, j - 1)) / (2.0 * u.h)
            } else if ok(i, j + 1) {
                (val(i, j + 1) - val(i, j)) / u.h
            } else if ok(i, j - 1) {
                (val(i, j) - val(i, j - 1)) / u.h
            } else {
                0.0
            };
            let g = dx.hypot(dy);
            grad_sum += g.powf(p);
            val_sum += val(i, j).abs().powf(p);
        }
    }
    if !any {
        return Err(SobexError::Config("norm region contains no cells".into()));
    }
    let cell = u.h * u.h;
    let seminorm = (grad_sum * cell).powf(1.0 / p);
    let norm = (grad_sum * cell + val_sum * cell).powf(1.0 / p);
    Ok(NormReport {
        p,
        seminorm,
        norm,
        h: u.h,
        region,
    })
}

/// Smoothstep ramp.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Unnormalized tensor bump supported on 1.1 times the square with the given
/// center and side: flat on 0.9 of it, smoothstep ramp across the rest.
fn bump(center: &Point, side: f64, p: &Point) -> f64 {
    let half = 0.55 * side;
    let ramp = 0.1 * side;
    let fx = smoothstep((half - (p.x - center.x).abs()) / ramp);
    let fy = smoothstep((half - (p.y - center.y).abs()) / ramp);
    fx * fy
}

/// Partition of unity subordinate to the eligible exterior Whitney squares,
/// with supports in 1.1 times each square.
#[derive(Debug)]
pub struct PartitionOfUnity {
    /// Exterior square ids carrying bumps.
    pub members: Vec<usize>,
    centers: Vec<Point>,
    sides: Vec<f64>,
    /// Measured sup of |grad phi_j| * l(Q_j) over sampled members.
    pub kappa: f64,
    bucket: f64,
    index: HashMap<(i64, i64), Vec<usize>>,
}

/// Build the partition of unity over all exterior squares with an assigned
/// target.
pub fn build_pou(we: &WhitneyDecomposition, r: &ReflectionAssignment) -> PartitionOfUnity {
    let mut members = Vec::new();
    let mut centers = Vec::new();
    let mut sides = Vec::new();
    for (j, t) in r.targets.iter().enumerate() {
        if t.is_some() {
            members.push(j);
            centers.push(we.squares[j].center());
            sides.push(we.squares[j].side());
        }
    }
    let bucket = sides.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let mut index: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (pos, (c, s)) in centers.iter().zip(&sides).enumerate() {
        let half = 0.55 * s;
        let lo_x = ((c.x - half) / bucket).floor() as i64;
        let hi_x = ((c.x + half) / bucket).floor() as i64;
        let lo_y = ((c.y - half) / bucket).floor() as i64;
        let hi_y = ((c.y + half) / bucket).floor() as i64;
        for bx in lo_x..=hi_x {
            for by in lo_y..=hi_y {
                index.entry((bx, by)).or_default().push(pos);
            }
        }
    }
    let mut pou = PartitionOfUnity {
        members,
        centers,
        sides,
        kappa: 0.0,
        bucket,
        index,
    };
    pou.kappa = pou.measure_kappa();
    pou
}

impl PartitionOfUnity {
    /// Normalized weights `(exterior square id, phi_j(p))` of all bumps that
    /// are nonzero at `p`. Empty when `p` is not covered.
    pub fn eval(&self, p: &Point) -> Vec<(usize, f64)> {
        let bx = (p.x / self.bucket).floor() as i64;
        let by = (p.y / self.bucket).floor() as i64;
        let mut hits: Vec<(usize, f64)> = Vec::new();
        let mut total = 0.0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(cands) = self.index.get(&(bx + dx, by + dy)) else {
                    continue;
                };
                for &pos in cands {
                    let b = bump(&self.centers[pos], self.sides[pos], p);
                    if b > 0.0 && !hits.iter().any(|(m, _)| *m == self.members[pos]) {
                        hits.push((self.members[pos], b));
                        total += b;
                    }
                }
            }
        }
        if total <= 0.0 {
            return Vec::new();
        }
        for h in &mut hits {
            h.1 /= total;
        }
        hits.sort_by_key(|(m, _)| *m);
        hits
    }

    fn phi_at(&self, member_pos: usize, p: &Point) -> f64 {
        let id = self.members[member_pos];
        self.eval(p)
            .into_iter()
            .find(|(m, _)| *m == id)
            .map_or(0.0, |(_, v)| v)
    }

    /// Sampled estimate of `max |grad phi_j| * l(Q_j)`.
    fn measure_kappa(&self) -> f64 {
        let mut kappa = 0.0f64;
        let step = (self.members.len() / 24).max(1);
        for pos in (0..self.members.len()).step_by(step) {
            let c = self.centers[pos];
            let s = self.sides[pos];
            let eps = 1e-5 * s;
            for a in 0..4 {
                for b in 0..4 {
                    let p = Point::new(
                        c.x + (a as f64 / 3.0 - 0.5) * 1.05 * s,
                        c.y + (b as f64 / 3.0 - 0.5) * 1.05 * s,
                    );
                    let gx = (self.phi_at(pos, &Point::new(p.x + eps, p.y))
                        - self.phi_at(pos, &Point::new(p.x - eps, p.y)))
                        / (2.0 * eps);
                    let gy = (self.phi_at(pos, &Point::new(p.x, p.y + eps))
                        - self.phi_at(pos, &Point::new(p.x, p.y - eps)))
                        / (2.0 * eps);
                    kappa = kappa.max(gx.hypot(gy) * s);
                }
            }
        }
        kappa
    }
}

/// Cell averages of `u` over each interior square in `needed`.
fn square_averages(
    u: &GridFunction,
    wi: &WhitneyDecomposition,
    needed: &[usize],
) -> Result<HashMap<usize, f64>> {
    let mut out = HashMap::new();
    for &m in needed {
        if out.contains_key(&m) {
            continue;
        }
        let (x0, y0, x1, y1) = wi.squares[m].bounds();
        let i_lo = (((x0 - u.origin.x) / u.h - 0.5).ceil().max(0.0)) as usize;
        let j_lo = (((y0 - u.origin.y) / u.h - 0.5).ceil().max(0.0)) as usize;
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut j = j_lo;
        while j < u.ny {
            let cy = u.origin.y + (j as f64 + 0.5) * u.h;
            if cy > y1 {
                break;
            }
            let mut i = i_lo;
            while i < u.nx {
                let cx = u.origin.x + (i as f64 + 0.5) * u.h;
                if cx > x1 {
                    break;
                }
                if u.mask[u.idx(i, j)] == RegionTag::Interior {
                    sum += u.values[u.idx(i, j)];
                    count += 1;
                }
                i += 1;
            }
            j += 1;
        }
        if count == 0 {
            return Err(SobexError::Resolution(format!(
                "interior square of side {:.3e} contains no grid cell; refine the grid",
                wi.squares[m].side()
            )));
        }
        out.insert(m, sum / count as f64);
    }
    Ok(out)
}

/// Exterior extension: `Eu = u` on the domain, `Eu = sum_j a_{Q_j} phi_j` on
/// the complement inside `B(x0, 1.5 diam)`, where `a_Q` is the cell average
/// of `u` over the assigned interior square.
pub fn extend_exterior(
    u: &GridFunction,
    d: &DomainSpec,
    r: &ReflectionAssignment,
    wi: &WhitneyDecomposition,
    pou: &PartitionOfUnity,
) -> Result<GridFunction> {
    let needed: Vec<usize> = r.targets.iter().filter_map(|t| *t).collect();
    let averages = square_averages(u, wi, &needed)?;
    let x0 = d.base_point();
    let rad = 1.5 * d.diameter();
    let h = u.h;
    // Align the output grid with the input so interior cells copy directly.
    let ox = u.origin.x + (((x0.x - rad) - u.origin.x) / h).floor() * h;
    let oy = u.origin.y + (((x0.y - rad) - u.origin.y) / h).floor() * h;
    let origin = Point::new(ox, oy);
    let nx = ((x0.x + rad - ox) / h).ceil() as usize + 1;
    let ny = ((x0.y + rad - oy) / h).ceil() as usize + 1;
    let mut out = GridFunction {
        origin,
        h,
        nx,
        ny,
        values: vec![0.0; nx * ny],
        mask: vec![RegionTag::Boundary; nx * ny],
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = out.center(i, j);
            let id = out.idx(i, j);
            match d.classify(&c) {
                RegionTag::Interior => {
                    if let Some((ui, uj)) = u.locate(&c) {
                        if u.mask[u.idx(ui, uj)] == RegionTag::Interior {
                            out.values[id] = u.values[u.idx(ui, uj)];
                            out.mask[id] = RegionTag::Interior;
                        }
                    }
                }
                RegionTag::Exterior => {
                    if c.dist(&x0) > rad {
                        continue;
                    }
                    let weights = pou.eval(&c);
                    if weights.is_empty() {
                        continue;
                    }
                    let mut v = 0.0;
                    for (ext_id, w) in weights {
                        let target = r.targets[ext_id].expect("POU member is assigned");
                        v += w * averages[&target];
                    }
                    out.values[id] = v;
                    out.mask[id] = RegionTag::Exterior;
                }
                RegionTag::Boundary => {}
            }
        }
    }
    Ok(out)
}

/// Sample a family on the conformally shrunk core `Omega_eps = phi(B(0, 1-eps))`.
/// Cells of `Omega` outside the core are masked `Boundary` (to be filled by
/// `inner_extend`); cells outside `Omega` are `Exterior`.
pub fn sample_inner(
    d: &DomainSpec,
    mi: &ConformalMap,
    f: TestFamily,
    h: f64,
    eps: f64,
) -> Result<GridFunction> {
    let mut g = sample(d, f, h)?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let id = g.idx(i, j);
            if g.mask[id] != RegionTag::Interior {
                continue;
            }
            let z = inverse(mi, g.center(i, j))?;
            if z.norm() > 1.0 - eps {
                g.mask[id] = RegionTag::Boundary;
                g.values[id] = 0.0;
            }
        }
    }
    Ok(g)
}

/// Angular bin count of the outermost sector ring for a given `eps`.
fn ring0_sectors(eps: f64) -> usize {
    let k0 = (TAU / eps).log2().ceil().max(2.0) as u32;
    1usize << k0.min(24)
}

/// Sector bump in annulus coordinates: `rho` counts dyadic rings toward the
/// boundary, `theta` is the angle; the sector is ring `k`, slot `s` of
/// `n0 * 2^k` slots.
fn sector_bump(rho: f64, theta: f64, k: usize, s: usize, n0: usize) -> f64 {
    let nk = (n0 << k) as f64;
    let radial = smoothstep((0.55 - (rho - (k as f64 + 0.5)).abs()) / 0.1);
    // Angular offset of theta from the slot center, in slot units.
    let center = (s as f64 + 0.5) / nk * TAU;
    let mut da = (theta - center).rem_euclid(TAU);
    if da > 0.5 * TAU {
        da -= TAU;
    }
    let da_slots = da / (TAU / nk);
    let angular = smoothstep((0.55 - da_slots.abs()) / 0.1);
    radial * angular
}

/// Inner extension: fills the conformal collar `Omega \ Omega_eps` from
/// sector averages of `u` taken on the outer band of `Omega_eps`.
pub fn inner_extend(
    u: &GridFunction,
    eps: f64,
    mi: &ConformalMap,
    d: &DomainSpec,
) -> Result<GridFunction> {
    if !(0.0 < eps && eps < 0.5) {
        return Err(SobexError::Config("eps must lie in (0, 1/2)".into()));
    }
    let n0 = ring0_sectors(eps);
    // Averages of u over the angular bins of the band 1-2eps <= |z| <= 1-eps.
    let mut sums = vec![0.0f64; n0];
    let mut counts = vec![0usize; n0];
    for j in 0..u.ny {
        for i in 0..u.nx {
            let id = u.idx(i, j);
            if u.mask[id] != RegionTag::Interior {
                continue;
            }
            let z = inverse(mi, u.center(i, j))?;
            let r = z.norm();
            if r < 1.0 - 2.0 * eps || r > 1.0 - eps {
                continue;
            }
            let theta = z.y.atan2(z.x).rem_euclid(TAU);
            let bin = ((theta / TAU * n0 as f64) as usize).min(n0 - 1);
            sums[bin] += u.values[id];
            counts[bin] += 1;
        }
    }
    let mut bin_avg = vec![0.0f64; n0];
    for b in 0..n0 {
        if counts[b] == 0 {
            return Err(SobexError::Resolution(format!(
                "sector bin {} of {} holds no grid cell; refine the grid or grow eps",
                b, n0
            )));
        }
        bin_avg[b] = sums[b] / counts[b] as f64;
    }
    // Ring count: stop when ring thickness falls near the grid scale.
    let depth_cap = ((eps * d.diameter() / u.h).log2().floor().max(0.0) as usize).min(14);
    let mut out = u.clone();
    for j in 0..u.ny {
        for i in 0..u.nx {
            let id = u.idx(i, j);
            if u.mask[id] != RegionTag::Boundary {
                continue;
            }
            let c = u.center(i, j);
            if d.classify(&c) != RegionTag::Interior {
                continue;
            }
            let z = inverse(mi, c)?;
            let r = z.norm().min(1.0 - 1e-12);
            let theta = z.y.atan2(z.x).rem_euclid(TAU);
            // Ring coordinate: 0 at |z| = 1-eps, +1 per halving of 1-|z|.
            let rho = ((eps / (1.0 - r)).log2()).clamp(0.0, depth_cap as f64 + 0.99);
            let k_mid = rho.floor() as usize;
            let mut val = 0.0;
            let mut total = 0.0;
            for k in k_mid.saturating_sub(1)..=(k_mid + 1).min(depth_cap) {
                let nk = n0 << k;
                let slot_mid = (theta / TAU * nk as f64).floor() as usize % nk;
                for ds in -1i64..=1 {
                    let s = (slot_mid as i64 + ds).rem_euclid(nk as i64) as usize;
                    let b = sector_bump(rho, theta, k, s, n0);
                    if b > 0.0 {
                        // Ancestor bin of this sector in ring 0.
                        let bin = s >> k;
                        val += b * bin_avg[bin];
                        total += b;
                    }
                }
            }
            if total > 0.0 {
                out.values[id] = val / total;
                out.mask[id] = RegionTag::Interior;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Necessity-side constructions.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.node.cmp(&other.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of the necessity test-function construction.
#[derive(Debug)]
pub struct NecessityReport {
    pub phi: GridFunction,
    /// Truncation level `J/(J+1)` from the measured John surrogate.
    pub c0: f64,
    pub j_est: f64,
    /// diam of the smaller boundary arc `P1`.
    pub p1_diam: f64,
}

fn polyline_min_dist(p: &Point, pts: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for w in pts.windows(2) {
        best = best.min(point_segment(p, &w[0], &w[1]));
    }
    best.min(p.dist(&pts[0]))
}

fn point_segment(p: &Point, a: &Point, b: &Point) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 <= 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.dist(&Point::new(a.x + t * abx, a.y + t * aby))
}

/// Measured John-constant surrogate: along near-geodesic interior paths from
/// the base point to boundary samples, the infimum of
/// `dist(w, boundary) / |w - endpoint|`.
fn john_surrogate(d: &DomainSpec) -> Result<f64> {
    let diam = d.diameter();
    let x0 = d.base_point();
    let grid = PathGrid::build(d, PathSide::Interior, diam / 96.0)?;
    let f = CostFunctional::length(PathSide::Interior);
    let weights = grid.node_weights(&f);
    let loop_pts = d.boundary_loop(diam / 16.0)?;
    let step = (loop_pts.len() / 8).max(1);
    let mut estimates = Vec::new();
    for b in loop_pts.iter().step_by(step) {
        // Nudge the endpoint slightly inside so the path grid can reach it.
        let target = b.lerp(&x0, 0.04);
        let Ok(path) = grid.shortest_path(d, &weights, &x0, &target) else {
            continue;
        };
        let mut worst = f64::INFINITY;
        for w in &path {
            let to_end = w.dist(b);
            if to_end < 0.05 * diam {
                continue;
            }
            let ratio = d.distance_to_boundary(w) / to_end;
            worst = worst.min(ratio);
        }
        if worst.is_finite() {
            estimates.push(worst);
        }
    }
    if estimates.is_empty() {
        return Err(SobexError::Config("no John paths could be traced".into()));
    }
    estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = estimates[estimates.len() / 2];
    Ok(median.clamp(0.02, 1.0))
}

/// The singular test function: `Phi = alpha * min(phi/c0, 1)` where `phi` is
/// the smaller of the weighted distances to the far boundary arc `P2`, the
/// weight being `1/|z - z_i|`, and `alpha` a logarithmic cutoff around `z1`.
pub fn necessity_test_function(
    d: &DomainSpec,
    z1: &Point,
    z2: &Point,
    c1: f64,
    h: f64,
) -> Result<NecessityReport> {
    if c1 < 1.0 {
        return Err(SobexError::Config("c1 must be at least 1".into()));
    }
    let diam = d.diameter();
    let sep = z1.dist(z2);
    if sep <= 0.0 {
        return Err(SobexError::Config("z1 and z2 must be distinct".into()));
    }
    for z in [z1, z2] {
        if d.distance_to_boundary(z) > 1e-6 * diam {
            return Err(SobexError::WrongRegion(z.x, z.y, "domain boundary".into()));
        }
    }
    // Split the boundary at the vertices nearest to z1 and z2.
    let loop_pts = d.boundary_loop((0.5 * h).min(sep / 8.0))?;
    let nearest = |z: &Point| -> usize {
        (0..loop_pts.len())
            .min_by(|&a, &b| {
                loop_pts[a]
                    .dist(z)
                    .partial_cmp(&loop_pts[b].dist(z))
                    .unwrap()
            })
            .unwrap()
    };
    let i1 = nearest(z1);
    let i2 = nearest(z2);
    if i1 == i2 {
        return Err(SobexError::Config(
            "boundary split is degenerate: z1 and z2 resolve to the same vertex".into(),
        ));
    }
    let (lo, hi) = (i1.min(i2), i1.max(i2));
    let arc_a: Vec<Point> = loop_pts[lo..=hi].to_vec();
    let mut arc_b: Vec<Point> = loop_pts[hi..].to_vec();
    arc_b.extend_from_slice(&loop_pts[..=lo]);
    let arc_diam = |pts: &[Point]| -> f64 {
        let mut d = 0.0f64;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                d = d.max(pts[a].dist(&pts[b]));
            }
        }
        d
    };
    let diam_a = arc_diam(&arc_a);
    let diam_b = arc_diam(&arc_b);
    let (p1, p2) = if diam_a <= diam_b {
        (arc_a, arc_b)
    } else {
        (arc_b, arc_a)
    };
    let p1_diam = diam_a.min(diam_b);

    let j_est = john_surrogate(d)?;
    let c0 = j_est / (j_est + 1.0);

    // Interior grid for the weighted Dijkstra.
    let grid = sample(d, TestFamily::One, h)?;
    let nx = grid.nx;
    let ny = grid.ny;
    let active: Vec<bool> = grid
        .mask
        .iter()
        .map(|&t| t == RegionTag::Interior)
        .collect();
    // Sources: interior cells hugging the far arc P2.
    let mut sources = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !active[j * nx + i] {
                continue;
            }
            let c = grid.center(i, j);
            let db = d.distance_to_boundary(&c);
            if db > 1.1 * h {
                continue;
            }
            let d1 = polyline_min_dist(&c, &p1);
            let d2 = polyline_min_dist(&c, &p2);
            if d2 <= d1 {
                sources.push(j * nx + i);
            }
        }
    }
    if sources.is_empty() {
        return Err(SobexError::Config(
            "no grid cells adjacent to the far boundary arc".into(),
        ));
    }
    let run = |zc: &Point| -> Vec<f64> {
        let weight = |node: usize| -> f64 {
            let c = grid.center(node % nx, node / nx);
            1.0 / c.dist(zc).max(0.5 * h)
        };
        let mut cost = vec![f64::INFINITY; nx * ny];
        let mut heap = BinaryHeap::new();
        for &s in &sources {
            cost[s] = 0.0;
            heap.push(HeapEntry { cost: 0.0, node: s });
        }
        let offsets: [(i64, i64, f64); 8] = [
            (1, 0, 1.0),
            (-1, 0, 1.0),
            (0, 1, 1.0),
            (0, -1, 1.0),
            (1, 1, std::f64::consts::SQRT_2),
            (1, -1, std::f64::consts::SQRT_2),
            (-1, 1, std::f64::consts::SQRT_2),
            (-1, -1, std::f64::consts::SQRT_2),
        ];
        while let Some(HeapEntry { cost: c0v, node }) = heap.pop() {
            if c0v > cost[node] {
                continue;
            }
            let (i, j) = ((node % nx) as i64, (node / nx) as i64);
            for (di, dj, len) in offsets {
                let (i2, j2) = (i + di, j + dj);
                if i2 < 0 || j2 < 0 || i2 >= nx as i64 || j2 >= ny as i64 {
                    continue;
                }
                let nb = (j2 as usize) * nx + i2 as usize;
                if !active[nb] {
                    continue;
                }
                let w = 0.5 * (weight(node) + weight(nb));
                let nc = c0v + w * len * h;
                if nc < cost[nb] {
                    cost[nb] = nc;
                    heap.push(HeapEntry { cost: nc, node: nb });
                }
            }
        }
        cost
    };
    let phi1 = run(z1);
    let phi2 = run(z2);

    let mut phi = grid;
    for j in 0..ny {
        for i in 0..nx {
            let id = j * nx + i;
            if !active[id] {
                phi.values[id] = 0.0;
                continue;
            }
            let c = phi.center(i, j);
            let raw = phi1[id].max(phi2[id]);
            let truncated = if raw.is_finite() {
                (raw / c0).min(1.0)
            } else {
                1.0
            };
            let dist1 = c.dist(z1);
            let alpha = if dist1 < c1 * sep {
                1.0
            } else if dist1 <= 2.0 * c1 * sep {
                (2.0 * c1 * sep / dist1).log2()
            } else {
                0.0
            };
            phi.values[id] = alpha * truncated;
        }
    }
    Ok(NecessityReport {
        phi,
        c0,
        j_est,
        p1_diam,
    })
}

/// Report of the gradient lower-bound hypothesis check on a square.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    /// Whether both projection hypotheses hold at level `delta`.
    pub applicable: bool,
    /// Projection measures of `{u <= 0}` onto the x- and y-axes.
    pub proj0: [f64; 2],
    /// Projection measures of `{u >= 1}` onto the x- and y-axes.
    pub proj1: [f64; 2],
    /// Discrete `int |grad u|^p`.
    pub energy: f64,
    /// `energy / l(Q)^{2-p}`.
    pub ratio: f64,
    pub side: f64,
}

/// Check the projection hypotheses of the square lower bound and measure
/// `int |grad u|^p / l(Q)^{2-p}`.
pub fn lower_bound_check(u: &GridFunction, p: f64, delta: f64) -> Result<LowerBoundReport> {
    if !(1.0 <= p && p < 2.0) {
        return Err(SobexError::Config("exponent p must lie in [1, 2)".into()));
    }
    let side = u.nx.min(u.ny) as f64 * u.h;
    let mut cols0 = vec![false; u.nx];
    let mut rows0 = vec![false; u.ny];
    let mut cols1 = vec![false; u.nx];
    let mut rows1 = vec![false; u.ny];
    for j in 0..u.ny {
        for i in 0..u.nx {
            if !u.defined(i, j) {
                continue;
            }
            let v = u.values[u.idx(i, j)];
            if v <= 0.0 {
                cols0[i] = true;
                rows0[j] = true;
            }
            if v >= 1.0 {
                cols1[i] = true;
                rows1[j] = true;
            }
        }
    }
    let measure = |flags: &[bool]| flags.iter().filter(|&&f| f).count() as f64 * u.h;
    let proj0 = [measure(&cols0), measure(&rows0)];
    let proj1 = [measure(&cols1), measure(&rows1)];
    let applicable =
        proj0[0].max(proj0[1]) >= delta * side && proj1[0].max(proj1[1]) >= delta * side;
    let report = sobolev_seminorm(u, p.max(1.0 + 1e-9), NormRegion::All)?;
    let energy = report.seminorm.powf(report.p);
    Ok(LowerBoundReport {
        applicable,
        proj0,
        proj1,
        energy,
        ratio: energy / side.powf(2.0 - p),
        side,
    })
}

/// Write a grid function as CSV `x,y,value,mask` behind a one-line JSON
/// header comment.
pub fn write_grid_csv<W: Write>(u: &GridFunction, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# {{\"origin\":[{},{}],\"h\":{},\"nx\":{},\"ny\":{}}}",
        u.origin.x, u.origin.y, u.h, u.nx, u.ny
    )?;
    writeln!(w, "x,y,value,mask")?;
    for j in 0..u.ny {
        for i in 0..u.nx {
            let c = u.center(i, j);
            let tag = match u.mask[u.idx(i, j)] {
                RegionTag::Interior => "interior",
                RegionTag::Exterior => "exterior",
                RegionTag::Boundary => "undefined",
            };
            writeln!(w, "{},{},{},{}", c.x, c.y, u.values[u.idx(i, j)], tag)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{build_map, MapSide};
    use crate::reflect::build_reflection;
    use crate::whitney::{decompose, Side};

    #[test]
    fn constant_sample_is_one_inside() {
        let d = DomainSpec::unit_disk();
        let g = sample(&d, TestFamily::One, 1.0 / 32.0).unwrap();
        let mut inside = 0;
        for (v, m) in g.values.iter().zip(&g.mask) {
            if *m == RegionTag::Interior {
                assert_eq!(*v, 1.0);
                inside += 1;
            }
        }
        assert!(inside > 2000);
    }

    #[test]
    fn seminorm_of_linear_function() {
        let d = DomainSpec::unit_square();
        let g = sample(&d, TestFamily::LinearX, 1.0 / 64.0).unwrap();
        let r = sobolev_seminorm(&g, 2.0, NormRegion::Interior).unwrap();
        // |grad x| = 1 on the unit square: seminorm^2 = area = 1.
        assert!((r.seminorm - 1.0).abs() < 0.02, "seminorm {}", r.seminorm);
        assert!(r.norm > r.seminorm);
    }

    #[test]
    fn seminorm_of_radial_function_matches_oracle() {
        // |grad |z|| = 1 a.e. on the disk, so int |grad|^{1.5} = pi.
        let d = DomainSpec::unit_disk();
        let g = sample(&d, TestFamily::PowerDist { a: 1.0 }, 1.0 / 128.0).unwrap();
        let r = sobolev_seminorm(&g, 1.5, NormRegion::Interior).unwrap();
        let oracle = std::f64::consts::PI.powf(1.0 / 1.5);
        assert!(
            (r.seminorm - oracle).abs() < 0.02 * oracle,
            "seminorm {} vs {}",
            r.seminorm,
            oracle
        );
    }

    fn disk_setup(
        depth: i32,
    ) -> (
        DomainSpec,
        WhitneyDecomposition,
        WhitneyDecomposition,
        ReflectionAssignment,
        PartitionOfUnity,
    ) {
        let d = DomainSpec::unit_disk();
        let wi = decompose(&d, Side::Interior, depth).unwrap();
        let we = decompose(&d, Side::ExteriorBounded, depth).unwrap();
        let mi = build_map(&d, MapSide::Interior, 1e-4).unwrap();
        let me = build_map(&d, MapSide::Exterior, 1e-4).unwrap();
        let r = build_reflection(&wi, &we, &mi, &me).unwrap();
        let pou = build_pou(&we, &r);
        (d, wi, we, r, pou)
    }

    #[test]
    fn pou_sums_to_one_and_is_local() {
        let (_, _, we, _, pou) = disk_setup(5);
        let mut covered = 0;
        for (j, q) in we.squares.iter().enumerate() {
            if j % 9 != 0 {
                continue;
            }
            let c = q.center();
            let weights = pou.eval(&c);
            if weights.is_empty() {
                continue;
            }
            covered += 1;
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(weights.len() <= 21, "locality violated: {}", weights.len());
        }
        assert!(covered > 20);
        assert!(pou.kappa.is_finite() && pou.kappa > 0.0);
        assert!(pou.kappa < 50.0, "kappa {}", pou.kappa);
    }

    #[test]
    fn extension_preserves_constants_and_is_linear() {
        let (d, wi, _, r, pou) = disk_setup(5);
        let h = 1.0 / 64.0;
        let one = sample(&d, TestFamily::One, h).unwrap();
        let ex1 = extend_exterior(&one, &d, &r, &wi, &pou).unwrap();
        let mut ext_cells = 0;
        for (v, m) in ex1.values.iter().zip(&ex1.mask) {
            if *m != RegionTag::Boundary {
                assert!((v - 1.0).abs() < 1e-12, "Eu(1) = {}", v);
            }
            if *m == RegionTag::Exterior {
                ext_cells += 1;
            }
        }
        assert!(ext_cells > 1000, "exterior coverage {}", ext_cells);

        // Linearity: E(2x + 3*1) = 2 E(x) + 3 E(1) cell by cell.
        let ux = sample(&d, TestFamily::LinearX, h).unwrap();
        let mut combo = ux.clone();
        for (i, v) in combo.values.iter_mut().enumerate() {
            if combo.mask[i] == RegionTag::Interior {
                *v = 2.0 * ux.values[i] + 3.0;
            }
        }
        let ec = extend_exterior(&combo, &d, &r, &wi, &pou).unwrap();
        let ex = extend_exterior(&ux, &d, &r, &wi, &pou).unwrap();
        for i in 0..ec.values.len() {
            if ec.mask[i] != RegionTag::Boundary {
                let want = 2.0 * ex.values[i] + 3.0 * ex1.values[i];
                assert!((ec.values[i] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extension_norm_ratio_is_finite() {
        let (d, wi, _, r, pou) = disk_setup(6);
        let h = 1.0 / 96.0;
        let u = sample(&d, TestFamily::LinearX, h).unwrap();
        let eu = extend_exterior(&u, &d, &r, &wi, &pou).unwrap();
        let nu = sobolev_seminorm(&u, 1.5, NormRegion::Interior).unwrap();
        let ne = sobolev_seminorm(&eu, 1.5, NormRegion::All).unwrap();
        let ratio = ne.norm / nu.norm;
        assert!(ratio.is_finite() && ratio >= 1.0);
        assert!(ratio < 10.0, "norm ratio {}", ratio);
    }

    #[test]
    fn inner_extension_preserves_constants() {
        let d = DomainSpec::unit_disk();
        let mi = build_map(&d, MapSide::Interior, 1e-4).unwrap();
        let u = sample_inner(&d, &mi, TestFamily::One, 1.0 / 64.0, 0.25).unwrap();
        let out = inner_extend(&u, 0.25, &mi, &d).unwrap();
        for (i, m) in out.mask.iter().enumerate() {
            if *m == RegionTag::Interior {
                assert!((out.values[i] - 1.0).abs() < 1e-12);
            }
        }
        // The collar was actually filled.
        let before = u.mask.iter().filter(|m| **m == RegionTag::Interior).count();
        let after = out
            .mask
            .iter()
            .filter(|m| **m == RegionTag::Interior)
            .count();
        assert!(after > before, "no cells filled: {} -> {}", before, after);
    }

    #[test]
    fn inner_extension_norm_is_bounded() {
        let d = DomainSpec::unit_disk();
        let mi = build_map(&d, MapSide::Interior, 1e-4).unwrap();
        let h = 1.0 / 96.0;
        let eps = 0.125;
        let u = sample_inner(&d, &mi, TestFamily::LinearX, h, eps).unwrap();
        let out = inner_extend(&u, eps, &mi, &d).unwrap();
        let nu = sobolev_seminorm(&u, 1.5, NormRegion::Interior).unwrap();
        let ne = sobolev_seminorm(&out, 1.5, NormRegion::Interior).unwrap();
        let ratio = ne.norm / nu.norm;
        assert!(ratio.is_finite() && ratio < 5.0, "ratio {}", ratio);
    }

    #[test]
    fn necessity_function_separates_the_arcs() {
        let d = DomainSpec::unit_disk();
        let t = 0.25f64;
        let z1 = Point::new(t.cos(), t.sin());
        let z2 = Point::new(t.cos(), -t.sin());
        let rep = necessity_test_function(&d, &z1, &z2, 1.0, 1.0 / 128.0).unwrap();
        let sep = z1.dist(&z2);
        let phi = &rep.phi;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for j in 0..phi.ny {
            for i in 0..phi.nx {
                if phi.mask[phi.idx(i, j)] != RegionTag::Interior {
                    continue;
                }
                let c = phi.center(i, j);
                let v = phi.values[phi.idx(i, j)];
                assert!((0.0..=1.0 + 1e-12).contains(&v));
                // Support confined to B(z1, 2 c1 |z1-z2|).
                if c.dist(&z1) > 2.0 * sep + 2.0 / 128.0 {
                    assert_eq!(v, 0.0, "support leak at ({}, {})", c.x, c.y);
                }
                // Near the small arc P1 (through (1,0)) vs the far arc P2.
                if d.distance_to_boundary(&c) < 0.03 && c.dist(&z1) < 0.9 * sep {
                    if c.x > 0.9 && c.y.abs() < 0.8 * t.sin() {
                        hi = hi.max(v);
                    }
                } else if d.distance_to_boundary(&c) < 0.03 && c.x < 0.0 {
                    lo = lo.min(v.abs());
                }
            }
        }
        assert!(hi > 0.9, "P1 side max {}", hi);
        assert!(lo < 0.1, "P2 side min {}", lo);
        assert!(rep.c0 > 0.0 && rep.c0 < 1.0);
    }

    #[test]
    fn lower_bound_linear_ramp() {
        // u = 2x - 0.5 on the unit square: A0 = {x <= 0.25}, A1 = {x >= 0.75}.
        let h = 1.0 / 64.0;
        let n = 64;
        let mut u = GridFunction {
            origin: Point::new(0.0, 0.0),
            h,
            nx: n,
            ny: n,
            values: vec![0.0; n * n],
            mask: vec![RegionTag::Interior; n * n],
        };
        for j in 0..n {
            for i in 0..n {
                let c = u.center(i, j);
                let id = u.idx(i, j);
                u.values[id] = 2.0 * c.x - 0.5;
            }
        }
        let p = 1.5;
        let rep = lower_bound_check(&u, p, 0.2).unwrap();
        assert!(rep.applicable);
        assert!((rep.proj0[0] - 0.25).abs() < 0.03, "proj0 {:?}", rep.proj0);
        assert!((rep.proj1[0] - 0.75).abs() > 0.0, "proj1 {:?}", rep.proj1);
        assert!((rep.proj1[0] - 0.25).abs() < 0.03, "proj1 {:?}", rep.proj1);
        let want = 2f64.powf(p);
        assert!(
            (rep.ratio - want).abs() < 0.05 * want,
            "ratio {} vs {}",
            rep.ratio,
            want
        );
    }

    #[test]
    fn lower_bound_flags_inapplicable() {
        let n = 16;
        let u = GridFunction {
            origin: Point::new(0.0, 0.0),
            h: 1.0 / 16.0,
            nx: n,
            ny: n,
            values: vec![0.5; n * n],
            mask: vec![RegionTag::Interior; n * n],
        };
        let rep = lower_bound_check(&u, 1.5, 0.1).unwrap();
        assert!(!rep.applicable);
        assert_eq!(rep.proj0, [0.0, 0.0]);
        assert_eq!(rep.proj1, [0.0, 0.0]);
    }

    #[test]
    fn smoothed_step_energy_grows_as_width_shrinks() {
        // Heaviside at x = 0.5 smoothed over width w: the 1D oracle gives
        // int |u'|^p = w^{1-p}, so halving w multiplies the ratio by 2^{p-1}.
        let p = 1.5;
        let mut ratios = Vec::new();
        for w in [0.2, 0.1, 0.05] {
            let n = 256;
            let h = 1.0 / n as f64;
            let mut u = GridFunction {
                origin: Point::new(0.0, 0.0),
                h,
                nx: n,
                ny: n,
                values: vec![0.0; n * n],
                mask: vec![RegionTag::Interior; n * n],
            };
            for j in 0..n {
                for i in 0..n {
                    let c = u.center(i, j);
                    let t = ((c.x - 0.5 + 0.5 * w) / w).clamp(0.0, 1.0);
                    let id = u.idx(i, j);
                    u.values[id] = t;
                }
            }
            ratios.push(lower_bound_check(&u, p, 0.2).unwrap().ratio);
        }
        for k in 1..ratios.len() {
            let growth = ratios[k] / ratios[k - 1];
            let want = 2f64.powf(p - 1.0);
            assert!(
                (growth - want).abs() < 0.15 * want,
                "growth {} vs {}",
                growth,
                want
            );
        }
    }

    #[test]
    fn grid_csv_roundtrip_shape() {
        let d = DomainSpec::unit_square();
        let g = sample(&d, TestFamily::LinearX, 0.25).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# {\"origin\""));
        assert_eq!(lines.next().unwrap(), "x,y,value,mask");
        assert_eq!(lines.count(), g.nx * g.ny);
    }
}
