//! Target set families in the plane: squares, disks, simple polygons, Koch
//! snowflake polygons, depth-k Sierpinski carpet approximations, radial
//! shells, and subgraph regions.
//!
//! Each set carries a three-way membership oracle (inside / outside / within
//! the classification band of the boundary), a boundary sampler, a bounding
//! box, and an exact area where one is known. The band half-width is 1e-9 in
//! set units; banded points are excluded from strict containment statistics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{sample_box, BoundingBox, Hyperplane, Point, SampleStream};
use crate::math;

/// Half-width of the boundary classification band.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Three-way membership with an explicit uncertainty band near the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    BoundaryBand,
}

impl Membership {
    pub fn is_inside(self) -> bool {
        self == Membership::Inside
    }

    pub fn is_outside(self) -> bool {
        self == Membership::Outside
    }
}

#[derive(Clone, Debug)]
enum SetKind {
    Polygon {
        vertices: Vec<Point>,
        /// Cumulative edge lengths, `cumlen[i]` = length up to vertex i+1.
        cumlen: Vec<f64>,
        perimeter: f64,
    },
    Disk {
        radius: f64,
    },
    Carpet {
        depth: u32,
    },
    Radial {
        intervals: Vec<(f64, f64)>,
    },
    Subgraph {
        field: fn(&Point) -> f64,
        lip: f64,
        grad_lip: Option<f64>,
        domain: BoundingBox,
        floor: f64,
    },
}

/// A bounded planar set with membership, boundary sampling, and area data.
#[derive(Clone, Debug)]
pub struct SetSpec {
    name: String,
    kind: SetKind,
    bbox: BoundingBox,
    exact_area: Option<f64>,
}

impl SetSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn exact_area(&self) -> Option<f64> {
        self.exact_area
    }

    /// Upper estimate of the boundary length, used for raster bias bands.
    pub fn perimeter_hint(&self) -> f64 {
        match &self.kind {
            SetKind::Polygon { perimeter, .. } => *perimeter,
            SetKind::Disk { radius } => 2.0 * core::f64::consts::PI * radius,
            SetKind::Carpet { depth } => carpet_boundary_length(*depth),
            SetKind::Radial { intervals } => intervals
                .iter()
                .map(|&(lo, hi)| 2.0 * core::f64::consts::PI * (lo + hi))
                .sum(),
            SetKind::Subgraph { lip, domain, floor, .. } => {
                let w = domain.high()[0] - domain.low()[0];
                let h = self.bbox.high()[1] - floor;
                (1.0 + lip) * w + w + 2.0 * h
            }
        }
    }

    /// Three-way membership. Deterministic; points within `BOUNDARY_BAND`
    /// of the (declared) boundary report the band.
    pub fn membership(&self, x: &Point) -> Membership {
        match &self.kind {
            SetKind::Polygon { vertices, .. } => polygon_membership(vertices, x),
            SetKind::Disk { radius } => {
                let r = x.norm();
                if (r - radius).abs() <= BOUNDARY_BAND {
                    Membership::BoundaryBand
                } else if r < *radius {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            SetKind::Carpet { depth } => carpet_membership(*depth, x),
            SetKind::Radial { intervals } => {
                let r = x.norm();
                for &(lo, hi) in intervals {
                    if (r - lo).abs() <= BOUNDARY_BAND || (r - hi).abs() <= BOUNDARY_BAND {
                        return Membership::BoundaryBand;
                    }
                    if r > lo && r < hi {
                        return Membership::Inside;
                    }
                }
                Membership::Outside
            }
            SetKind::Subgraph {
                field,
                domain,
                floor,
                ..
            } => {
                let x0 = Point::from_slice(&[x[0]]);
                let (lo, hi) = (domain.low()[0], domain.high()[0]);
                if x[0] < lo - BOUNDARY_BAND || x[0] > hi + BOUNDARY_BAND {
                    return Membership::Outside;
                }
                if (x[0] - lo).abs() <= BOUNDARY_BAND || (x[0] - hi).abs() <= BOUNDARY_BAND {
                    return Membership::BoundaryBand;
                }
                let fy = field(&x0);
                if (x[1] - fy).abs() <= BOUNDARY_BAND || (x[1] - floor).abs() <= BOUNDARY_BAND {
                    return Membership::BoundaryBand;
                }
                if x[1] > *floor && x[1] < fy {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
        }
    }

    /// `n` points within `BOUNDARY_BAND` of the declared boundary, uniform
    /// over its length (for the subgraph family the declared boundary is the
    /// graph itself).
    pub fn boundary_sample(&self, n: usize, stream: &mut SampleStream) -> Vec<Point> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(match &self.kind {
                SetKind::Polygon {
                    vertices,
                    cumlen,
                    perimeter,
                } => polygon_boundary_point(vertices, cumlen, *perimeter, stream),
                SetKind::Disk { radius } => {
                    let a = stream.range(0.0, 2.0 * core::f64::consts::PI);
                    Point::xy(radius * math::cos(a), radius * math::sin(a))
                }
                SetKind::Carpet { depth } => carpet_boundary_point(*depth, stream),
                SetKind::Radial { intervals } => {
                    let total: f64 = intervals.iter().map(|&(lo, hi)| lo + hi).sum();
                    let mut pick = stream.range(0.0, total);
                    let mut radius = intervals[0].0;
                    'pick: for &(lo, hi) in intervals {
                        for r in [lo, hi] {
                            if pick < r {
                                radius = r;
                                break 'pick;
                            }
                            pick -= r;
                        }
                        radius = hi;
                    }
                    let a = stream.range(0.0, 2.0 * core::f64::consts::PI);
                    Point::xy(radius * math::cos(a), radius * math::sin(a))
                }
                SetKind::Subgraph { field, domain, .. } => {
                    let t = stream.range(domain.low()[0], domain.high()[0]);
                    let x0 = Point::from_slice(&[t]);
                    Point::xy(t, field(&x0))
                }
            });
        }
        out
    }

    /// Radial shell intervals when this is a radial set.
    pub fn radial_intervals(&self) -> Option<&[(f64, f64)]> {
        match &self.kind {
            SetKind::Radial { intervals } => Some(intervals),
            _ => None,
        }
    }

    /// Field, Lipschitz data and domain when this is a subgraph set.
    pub fn subgraph_parts(&self) -> Option<(fn(&Point) -> f64, f64, Option<f64>, BoundingBox)> {
        match &self.kind {
            SetKind::Subgraph {
                field,
                lip,
                grad_lip,
                domain,
                ..
            } => Some((*field, *lip, *grad_lip, *domain)),
            _ => None,
        }
    }

    /// Support lines of the boundary for sets whose boundary is a finite
    /// union of segments; empty when no such description exists.
    pub fn boundary_lines(&self) -> Vec<Hyperplane> {
        match &self.kind {
            SetKind::Polygon { vertices, .. } => {
                let mut lines: Vec<Hyperplane> = Vec::new();
                let n = vertices.len();
                for i in 0..n {
                    let p = vertices[i];
                    let q = vertices[(i + 1) % n];
                    let normal = Point::xy(q[1] - p[1], -(q[0] - p[0]));
                    let Ok(plane) = Hyperplane::new(normal, normal.dot(&p)) else {
                        continue;
                    };
                    let plane = plane.canonical();
                    let dup = lines.iter().any(|l| {
                        (*l.normal() - *plane.normal()).norm() <= 1e-9
                            && (l.offset() - plane.offset()).abs() <= 1e-9
                    });
                    if !dup {
                        lines.push(plane);
                    }
                }
                lines
            }
            SetKind::Carpet { depth } => {
                let cells = 3usize.pow(*depth);
                let g = 1.0 / cells as f64;
                let mut lines = Vec::with_capacity(2 * (cells + 1));
                for i in 0..=cells {
                    let b = i as f64 * g;
                    lines.push(Hyperplane::new(Point::xy(1.0, 0.0), b).expect("unit normal"));
                    lines.push(Hyperplane::new(Point::xy(0.0, 1.0), b).expect("unit normal"));
                }
                lines
            }
            _ => Vec::new(),
        }
    }
}

/// Monte-Carlo area over the bounding box with binomial standard error.
/// Band points count as outside, which is unbiased up to the band measure.
pub fn area_monte_carlo(
    set: &SetSpec,
    n: usize,
    stream: &mut SampleStream,
) -> Result<(f64, f64)> {
    if n < 100 {
        return Err(Error::Precondition("need at least 100 samples".into()));
    }
    let bb = set.bbox();
    let mut vol = 1.0;
    for k in 0..bb.dim() {
        vol *= bb.high()[k] - bb.low()[k];
    }
    let mut hits = 0usize;
    for _ in 0..n {
        let x = sample_box(bb, stream);
        if set.membership(&x).is_inside() {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let stderr = vol * math::sqrt(p * (1.0 - p) / n as f64);
    Ok((p * vol, stderr))
}

/// The unit square `[0, 1]^2`.
pub fn make_square() -> SetSpec {
    let vertices = alloc::vec![
        Point::xy(0.0, 0.0),
        Point::xy(1.0, 0.0),
        Point::xy(1.0, 1.0),
        Point::xy(0.0, 1.0),
    ];
    polygon_spec("square".into(), vertices, false).expect("square is simple")
}

/// Closed disk of radius `r` at the origin.
pub fn make_disk(r: f64) -> Result<SetSpec> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition("disk radius must be positive".into()));
    }
    Ok(SetSpec {
        name: format!("disk r={r}"),
        kind: SetKind::Disk { radius: r },
        bbox: BoundingBox::new(Point::xy(-r, -r), Point::xy(r, r))?,
        exact_area: Some(core::f64::consts::PI * r * r),
    })
}

/// Simple polygon from its vertex list (either orientation).
pub fn make_polygon(vertices: &[Point]) -> Result<SetSpec> {
    polygon_spec(format!("polygon n={}", vertices.len()), vertices.to_vec(), true)
}

/// Depth-`k` Koch snowflake polygon on an equilateral triangle of side 1.
/// The boundary has `3 * 4^k` segments and the area follows the geometric
/// series of the construction.
pub fn make_koch(k: u32) -> Result<SetSpec> {
    if k > 8 {
        return Err(Error::Precondition("koch depth is limited to 8".into()));
    }
    let mut poly = alloc::vec![
        Point::xy(0.0, 0.0),
        Point::xy(1.0, 0.0),
        Point::xy(0.5, math::sqrt(3.0) / 2.0),
    ];
    for _ in 0..k {
        let mut next = Vec::with_capacity(poly.len() * 4);
        let n = poly.len();
        for i in 0..n {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            let d = q - p;
            // Outward spike: rotate the edge direction by -90 degrees
            // (the interior of a counterclockwise polygon lies left).
            let out = Point::xy(d[1], -d[0]);
            let a = p.axpy(1.0 / 3.0, &d);
            let b = p.axpy(2.0 / 3.0, &d);
            let apex = p.axpy(0.5, &d).axpy(math::sqrt(3.0) / 6.0, &out);
            next.push(p);
            next.push(a);
            next.push(apex);
            next.push(b);
        }
        poly = next;
    }
    polygon_spec(format!("koch k={k}"), poly, false)
}

/// Depth-`k` carpet approximation: the unit square with every central ninth
/// removed down to level `k`. Membership is a base-3 digit test; the
/// boundary lies on the `2 (3^k + 1)` grid lines.
pub fn make_carpet(k: u32) -> Result<SetSpec> {
    if k > 6 {
        return Err(Error::Precondition("carpet depth is limited to 6".into()));
    }
    let mut area = 1.0;
    for _ in 0..k {
        area *= 8.0 / 9.0;
    }
    Ok(SetSpec {
        name: format!("carpet k={k}"),
        kind: SetKind::Carpet { depth: k },
        bbox: BoundingBox::new(Point::xy(0.0, 0.0), Point::xy(1.0, 1.0))?,
        exact_area: Some(area),
    })
}

/// Union of radial shells `{ lo_i <= |x| <= hi_i }` in the plane.
pub fn make_radial(intervals: &[(f64, f64)]) -> Result<SetSpec> {
    if intervals.is_empty() {
        return Err(Error::Precondition("radial set needs at least one interval".into()));
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut area = 0.0;
    for &(lo, hi) in &sorted {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Precondition(format!(
                "radial interval [{lo}, {hi}] must satisfy 0 < lo < hi"
            )));
        }
        area += core::f64::consts::PI * (hi * hi - lo * lo);
    }
    for w in sorted.windows(2) {
        if w[0].1 > w[1].0 {
            return Err(Error::Precondition(format!(
                "radial intervals [{}, {}] and [{}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    let rmax = sorted.last().unwrap().1;
    Ok(SetSpec {
        name: format!("radial shells x{}", sorted.len()),
        kind: SetKind::Radial { intervals: sorted },
        bbox: BoundingBox::new(Point::xy(-rmax, -rmax), Point::xy(rmax, rmax))?,
        exact_area: Some(area),
    })
}

/// Region under the graph of `field` over a 1-dimensional box, clipped
/// below at an automatic floor. The declared boundary (what boundary
/// samplers emit and covers must capture) is the graph itself. Pass the
/// gradient-Lipschitz constant when the graph should admit a surface cover.
pub fn make_subgraph(
    field: fn(&Point) -> f64,
    lip: f64,
    grad_lip: Option<f64>,
    domain: &BoundingBox,
) -> Result<SetSpec> {
    if domain.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: domain.dim(),
        });
    }
    if !(lip >= 0.0 && lip.is_finite()) {
        return Err(Error::Precondition(
            "subgraph needs a finite nonnegative Lipschitz constant".into(),
        ));
    }
    let (lo, hi) = (domain.low()[0], domain.high()[0]);
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    for i in 0..=1024 {
        let t = lo + (hi - lo) * i as f64 / 1024.0;
        let v = field(&Point::from_slice(&[t]));
        if !v.is_finite() {
            return Err(Error::Precondition("field is not finite on the domain".into()));
        }
        fmin = fmin.min(v);
        fmax = fmax.max(v);
    }
    let pad = 0.1 * (1.0 + fmax - fmin);
    let floor = fmin - pad;
    Ok(SetSpec {
        name: "subgraph".into(),
        kind: SetKind::Subgraph {
            field,
            lip,
            grad_lip,
            domain: *domain,
            floor,
        },
        bbox: BoundingBox::new(Point::xy(lo, floor), Point::xy(hi, fmax + pad))?,
        exact_area: None,
    })
}

fn polygon_spec(name: String, mut vertices: Vec<Point>, check_simple: bool) -> Result<SetSpec> {
    vertices.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    if vertices.len() >= 2 {
        let n = vertices.len();
        if (vertices[0] - vertices[n - 1]).norm() < 1e-15 {
            vertices.pop();
        }
    }
    if vertices.len() < 3 {
        return Err(Error::Precondition("polygon needs at least 3 vertices".into()));
    }
    for v in &vertices {
        if v.dim() != 2 || !v.is_finite() {
            return Err(Error::Precondition("polygon vertices must be finite points in the plane".into()));
        }
    }
    let signed = shoelace(&vertices);
    if signed.abs() < 1e-300 {
        return Err(Error::Degenerate("polygon has zero area".into()));
    }
    if signed < 0.0 {
        vertices.reverse();
    }
    if check_simple && self_intersects(&vertices) {
        return Err(Error::Precondition("self-intersecting polygon".into()));
    }
    let n = vertices.len();
    let mut cumlen = Vec::with_capacity(n);
    let mut perimeter = 0.0;
    for i in 0..n {
        perimeter += vertices[i].dist(&vertices[(i + 1) % n]);
        cumlen.push(perimeter);
    }
    let bbox = BoundingBox::hull(&vertices)?;
    Ok(SetSpec {
        name,
        exact_area: Some(signed.abs()),
        kind: SetKind::Polygon {
            vertices,
            cumlen,
            perimeter,
        },
        bbox,
    })
}

/// Signed shoelace area (positive for counterclockwise orientation).
fn shoelace(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

/// Proper pairwise edge intersection test for non-adjacent edges.
fn self_intersects(vertices: &[Point]) -> bool {
    let n = vertices.len();
    let seg = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_cross(&a, &b, &c, &d) {
                return true;
            }
        }
    }
    false
}

fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let orient = |p: &Point, q: &Point, r: &Point| -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn polygon_membership(vertices: &[Point], x: &Point) -> Membership {
    let n = vertices.len();
    // Band test against every edge first.
    for i in 0..n {
        if point_segment_dist(x, &vertices[i], &vertices[(i + 1) % n]) <= BOUNDARY_BAND {
            return Membership::BoundaryBand;
        }
    }
    // Even-odd crossing count of the ray towards +x.
    let mut inside = false;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        if (p[1] > x[1]) != (q[1] > x[1]) {
            let t = (x[1] - p[1]) / (q[1] - p[1]);
            if x[0] < p[0] + t * (q[0] - p[0]) {
                inside = !inside;
            }
        }
    }
    if inside {
        Membership::Inside
    } else {
        Membership::Outside
    }
}

fn point_segment_dist(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len2 = ab.norm2();
    if len2 < 1e-300 {
        return x.dist(a);
    }
    let t = ((*x - *a).dot(&ab) / len2).clamp(0.0, 1.0);
    x.dist(&a.axpy(t, &ab))
}

fn polygon_boundary_point(
    vertices: &[Point],
    cumlen: &[f64],
    perimeter: f64,
    stream: &mut SampleStream,
) -> Point {
    let pos = stream.range(0.0, perimeter);
    let idx = cumlen.partition_point(|&c| c < pos).min(vertices.len() - 1);
    let start = if idx == 0 { 0.0 } else { cumlen[idx - 1] };
    let p = vertices[idx];
    let q = vertices[(idx + 1) % vertices.len()];
    let len = q.dist(&p).max(1e-300);
    p.axpy(((pos - start) / len).clamp(0.0, 1.0), &(q - p))
}

fn carpet_membership(depth: u32, x: &Point) -> Membership {
    let b = BOUNDARY_BAND;
    if x[0] < -b || x[0] > 1.0 + b || x[1] < -b || x[1] > 1.0 + b {
        return Membership::Outside;
    }
    // Points near any finest-level grid line classify as banded: every
    // boundary segment of the construction lies on those lines, and the
    // digit test below is unstable there.
    let g = 1.0 / 3u64.pow(depth as u32) as f64;
    for k in 0..2 {
        let snapped = math::floor(x[k] / g + 0.5) * g;
        if (x[k] - snapped).abs() <= b {
            return Membership::BoundaryBand;
        }
    }
    let mut fx = x[0];
    let mut fy = x[1];
    for _ in 0..depth {
        fx *= 3.0;
        fy *= 3.0;
        let dx = (math::floor(fx) as i64).clamp(0, 2);
        let dy = (math::floor(fy) as i64).clamp(0, 2);
        if dx == 1 && dy == 1 {
            return Membership::Outside;
        }
        fx -= dx as f64;
        fy -= dy as f64;
    }
    Membership::Inside
}

/// Total boundary length of the depth-`k` carpet: the outer square plus the
/// perimeters of all removed squares.
fn carpet_boundary_length(depth: u32) -> f64 {
    let mut total = 4.0;
    let mut count = 1.0;
    let mut side = 1.0 / 3.0;
    for _ in 0..depth {
        total += count * 4.0 * side;
        count *= 8.0;
        side /= 3.0;
    }
    total
}

/// Uniform point on the carpet boundary: the outer perimeter or a removed
/// square's perimeter, chosen by length, with the removed square located by
/// decoding a base-8 prefix (the 8 kept digit pairs per level).
fn carpet_boundary_point(depth: u32, stream: &mut SampleStream) -> Point {
    const KEPT: [(f64, f64); 8] = [
        (0.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (0.0, 1.0),
        (2.0, 1.0),
        (0.0, 2.0),
        (1.0, 2.0),
        (2.0, 2.0),
    ];
    let total = carpet_boundary_length(depth);
    let mut pick = stream.range(0.0, total);
    if pick < 4.0 || depth == 0 {
        return square_perimeter_point(Point::xy(0.0, 0.0), 1.0, stream);
    }
    pick -= 4.0;
    let mut count = 1.0f64;
    let mut side = 1.0 / 3.0;
    let mut level = 1u32;
    while level < depth && pick >= count * 4.0 * side {
        pick -= count * 4.0 * side;
        count *= 8.0;
        side /= 3.0;
        level += 1;
    }
    // Decode which removed square: a (level-1)-digit base-8 index selects
    // the kept cell prefix; the removed square is its central ninth.
    let mut ox = 0.0;
    let mut oy = 0.0;
    let mut cell = 1.0;
    let mut idx = stream.index(8usize.pow(level - 1) as usize) as u64;
    for _ in 1..level {
        cell /= 3.0;
        let (dx, dy) = KEPT[(idx % 8) as usize];
        idx /= 8;
        ox += dx * cell;
        oy += dy * cell;
    }
    let inner = cell / 3.0;
    square_perimeter_point(Point::xy(ox + inner, oy + inner), inner, stream)
}

fn square_perimeter_point(origin: Point, side: f64, stream: &mut SampleStream) -> Point {
    let pos = stream.range(0.0, 4.0 * side);
    let (dx, dy) = if pos < side {
        (pos, 0.0)
    } else if pos < 2.0 * side {
        (side, pos - side)
    } else if pos < 3.0 * side {
        (3.0 * side - pos, side)
    } else {
        (0.0, 4.0 * side - pos)
    };
    Point::xy(origin[0] + dx, origin[1] + dy)
}
