//! Strip covers for explicit families of sets: neighborhoods of convex
//! bodies, graphs of differences of polyhedral functions, graphs of C^2
//! fields, and radial shells.
//!
//! Every constructor returns certified width bounds computed from stored
//! gradients, and `CoverResult` carries a containment sample count so the
//! claimed cover is re-verified on the declared target set.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{sample_box, AffineFunc, BoundingBox, Point, SampleStream};
use crate::gstrip::GenStrip;
use crate::math;
use crate::polyfun::{PolyhedralFunc, Tolerances};

/// A bounded convex body, given either as a finite point cloud (its convex
/// hull is the body) or as a membership oracle with a bounding box.
pub enum ConvexSupport<'a> {
    Cloud(&'a [Point]),
    Oracle {
        contains: &'a dyn Fn(&Point) -> bool,
        bbox: BoundingBox,
    },
}

pub struct ConvexBody<'a> {
    support: ConvexSupport<'a>,
}

impl<'a> ConvexBody<'a> {
    /// Body as the convex hull of a nonempty finite cloud.
    pub fn cloud(points: &'a [Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("point cloud is empty".into()));
        }
        let dim = points[0].dim();
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(Error::Precondition("point cloud has non-finite entries".into()));
            }
        }
        Ok(ConvexBody {
            support: ConvexSupport::Cloud(points),
        })
    }

    /// Body as a membership oracle on a bounding box.
    pub fn oracle(contains: &'a dyn Fn(&Point) -> bool, bbox: BoundingBox) -> Self {
        ConvexBody {
            support: ConvexSupport::Oracle { contains, bbox },
        }
    }

    pub fn dim(&self) -> usize {
        match &self.support {
            ConvexSupport::Cloud(pts) => pts[0].dim(),
            ConvexSupport::Oracle { bbox, .. } => bbox.dim(),
        }
    }
}

/// A scalar field on a box: an evaluator, an optional gradient evaluator,
/// a declared Lipschitz constant, and an optional gradient-Lipschitz
/// constant.
pub struct ScalarField<'a> {
    eval: &'a dyn Fn(&Point) -> f64,
    gradient: Option<&'a dyn Fn(&Point) -> Point>,
    lip: f64,
    grad_lip: Option<f64>,
}

impl<'a> ScalarField<'a> {
    pub fn new(eval: &'a dyn Fn(&Point) -> f64, lip: f64) -> Self {
        ScalarField {
            eval,
            gradient: None,
            lip,
            grad_lip: None,
        }
    }

    pub fn with_gradient(mut self, gradient: &'a dyn Fn(&Point) -> Point) -> Self {
        self.gradient = Some(gradient);
        self
    }

    pub fn with_grad_lip(mut self, grad_lip: f64) -> Self {
        self.grad_lip = Some(grad_lip);
        self
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn grad_lip(&self) -> Option<f64> {
        self.grad_lip
    }

    /// Gradient from the evaluator when present, else central finite
    /// differences with step `1e-6 * scale`.
    pub fn subgradient(&self, x: &Point, scale: f64) -> Point {
        if let Some(g) = self.gradient {
            return g(x);
        }
        let h = 1e-6 * scale.max(1e-12);
        let mut out = Point::zeros(x.dim());
        for k in 0..x.dim() {
            let mut a = *x;
            let mut b = *x;
            a[k] -= h;
            b[k] += h;
            out[k] = ((self.eval)(&b) - (self.eval)(&a)) / (2.0 * h);
        }
        out
    }
}

/// A verified strip cover of a described target set.
#[derive(Clone, Debug)]
pub struct CoverResult {
    pub strips: Vec<GenStrip>,
    /// Sum of the strips' width bounds.
    pub total_width_bound: f64,
    /// Portion of the bound attributable to the construction tolerance
    /// `eps`, reported separately so the bound is auditable.
    pub slack: f64,
    pub target_description: String,
    pub containment_samples_checked: usize,
    pub violations: usize,
}

impl CoverResult {
    fn new(strips: Vec<GenStrip>, slack: f64, target: String, checked: usize, violations: usize) -> Self {
        let total = strips.iter().map(|s| s.width_bound()).sum();
        CoverResult {
            strips,
            total_width_bound: total,
            slack,
            target_description: target,
            containment_samples_checked: checked,
            violations,
        }
    }
}

/// Internal geometry of a convex body after netting: an interval on the
/// line or a counterclockwise convex polygon in the plane.
enum BodyGeom {
    Interval(f64, f64),
    Polygon(Vec<Point>),
}

impl BodyGeom {
    fn center(&self) -> Point {
        match self {
            BodyGeom::Interval(lo, hi) => Point::from_slice(&[0.5 * (lo + hi)]),
            BodyGeom::Polygon(v) => {
                let mut c = Point::zeros(2);
                for p in v {
                    c = c + *p;
                }
                c * (1.0 / v.len() as f64)
            }
        }
    }

    /// First boundary hit of the ray `center + t * dir`, `t > 0`.
    fn boundary_hit(&self, dir: &Point) -> Point {
        let c = self.center();
        match self {
            BodyGeom::Interval(lo, hi) => {
                if dir[0] >= 0.0 {
                    Point::from_slice(&[*hi])
                } else {
                    Point::from_slice(&[*lo])
                }
            }
            BodyGeom::Polygon(v) => {
                let mut best_t = f64::INFINITY;
                let n = v.len();
                for i in 0..n {
                    let p = v[i];
                    let q = v[(i + 1) % n];
                    // Solve c + t*dir = p + s*(q - p) for t > 0, s in [0,1].
                    let ex = q[0] - p[0];
                    let ey = q[1] - p[1];
                    let det = dir[0] * (-ey) - dir[1] * (-ex);
                    if det.abs() < 1e-300 {
                        continue;
                    }
                    let rx = p[0] - c[0];
                    let ry = p[1] - c[1];
                    let t = (rx * (-ey) - ry * (-ex)) / det;
                    let s = (dir[0] * ry - dir[1] * rx) / det;
                    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) && t < best_t {
                        best_t = t;
                    }
                }
                if !best_t.is_finite() {
                    // Center sits on the boundary of a degenerate polygon.
                    return c;
                }
                c.axpy(best_t, dir)
            }
        }
    }
}

/// Greedy farthest-point insertion until the covering radius over `pts`
/// drops below `radius`.
fn greedy_net(pts: &[Point], radius: f64) -> Vec<Point> {
    let mut net = Vec::new();
    if pts.is_empty() {
        return net;
    }
    let mut nearest = alloc::vec![f64::INFINITY; pts.len()];
    let mut next = 0usize;
    loop {
        let chosen = pts[next];
        net.push(chosen);
        let mut far = 0.0;
        let mut far_idx = 0;
        for (i, p) in pts.iter().enumerate() {
            let d = p.dist(&chosen);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > far {
                far = nearest[i];
                far_idx = i;
            }
        }
        if far <= radius {
            return net;
        }
        next = far_idx;
    }
}

/// Monotone-chain convex hull, counterclockwise, no repeated endpoint.
fn hull2d(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(a[1].partial_cmp(&b[1]).unwrap())
    });
    pts.dedup_by(|a, b| a[0] == b[0] && a[1] == b[1]);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: &Point, a: &Point, b: &Point| -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Resolves a body into netted geometry. Oracle bodies are ray-cast from
/// the box center and their boundary samples are thinned by a greedy net;
/// clouds are used as given (the hull is exact).
fn body_geom(body: &ConvexBody, eps: f64) -> Result<BodyGeom> {
    match &body.support {
        ConvexSupport::Cloud(pts) => match body.dim() {
            1 => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in *pts {
                    lo = lo.min(p[0]);
                    hi = hi.max(p[0]);
                }
                if !(hi > lo) {
                    return Err(Error::Degenerate(
                        "cloud spans a single point; thicken the input".into(),
                    ));
                }
                Ok(BodyGeom::Interval(lo, hi))
            }
            2 => {
                let hull = hull2d(pts);
                if hull.len() < 3 {
                    return Err(Error::Degenerate(
                        "cloud hull is lower-dimensional; thicken the input".into(),
                    ));
                }
                Ok(BodyGeom::Polygon(hull))
            }
            d => Err(Error::Precondition(format!(
                "convex covers support dimensions 1 and 2, got {d}"
            ))),
        },
        ConvexSupport::Oracle { contains, bbox } => match body.dim() {
            1 => {
                let c = bbox.center();
                if !contains(&c) {
                    return Err(Error::Degenerate(
                        "oracle box center lies outside the body".into(),
                    ));
                }
                let lo = bisect_boundary(contains, &c, &Point::from_slice(&[-1.0]), bbox)?;
                let hi = bisect_boundary(contains, &c, &Point::from_slice(&[1.0]), bbox)?;
                Ok(BodyGeom::Interval(lo[0], hi[0]))
            }
            2 => {
                let c = bbox.center();
                if !contains(&c) {
                    return Err(Error::Degenerate(
                        "oracle box center lies outside the body".into(),
                    ));
                }
                let rmax = bbox.circumradius();
                // Boundary samples at arc spacing <= eps/4, thinned by a
                // greedy net to 3*eps/4: the boundary covering radius stays
                // at most eps.
                let k = (math::ceil(8.0 * core::f64::consts::PI * rmax / eps) as usize)
                    .clamp(64, 1 << 20);
                let mut samples = Vec::with_capacity(k);
                for i in 0..k {
                    let a = 2.0 * core::f64::consts::PI * i as f64 / k as f64;
                    let dir = Point::xy(math::cos(a), math::sin(a));
                    samples.push(bisect_boundary(contains, &c, &dir, bbox)?);
                }
                let net = greedy_net(&samples, 0.75 * eps);
                let hull = hull2d(&net);
                if hull.len() < 3 {
                    return Err(Error::Degenerate(
                        "oracle body is lower-dimensional; thicken the input".into(),
                    ));
                }
                Ok(BodyGeom::Polygon(hull))
            }
            d => Err(Error::Precondition(format!(
                "convex covers support dimensions 1 and 2, got {d}"
            ))),
        },
    }
}

/// Boundary point along `center + t * dir` by doubling then bisection.
fn bisect_boundary(
    contains: &dyn Fn(&Point) -> bool,
    center: &Point,
    dir: &Point,
    bbox: &BoundingBox,
) -> Result<Point> {
    let mut t_hi = 1e-3 * (1.0 + bbox.circumradius());
    let cap = 4.0 * (1.0 + bbox.circumradius());
    while contains(&center.axpy(t_hi, dir)) {
        t_hi *= 2.0;
        if t_hi > cap {
            return Err(Error::Degenerate(
                "membership oracle extends beyond its bounding box".into(),
            ));
        }
    }
    let mut t_lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (t_lo + t_hi);
        if contains(&center.axpy(mid, dir)) {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    Ok(center.axpy(0.5 * (t_lo + t_hi), dir))
}

/// Outward halfspace pieces of the geometry, rescaled to gradient norm
/// `scale`; the body satisfies every `piece <= 0`.
/// Rescales `v` to length `target`, nudging down so the norm as measured
/// by `Point::norm` never exceeds `target`: callers quote `2 * target` as
/// an exact width bound, so a one-ulp overshoot would break it.
fn scaled_to(v: &Point, target: f64) -> Point {
    let mut out = *v * (target / v.norm());
    for _ in 0..4 {
        let n = out.norm();
        if n <= target {
            return out;
        }
        out = out * (target / n);
    }
    while out.norm() > target {
        out = out * (1.0 - 1e-15);
    }
    out
}

fn halfspace_pieces(geom: &BodyGeom, scale: f64) -> Vec<AffineFunc> {
    match geom {
        BodyGeom::Interval(lo, hi) => alloc::vec![
            AffineFunc::new(Point::from_slice(&[scale]), -scale * hi),
            AffineFunc::new(Point::from_slice(&[-scale]), scale * lo),
        ],
        BodyGeom::Polygon(v) => {
            let n = v.len();
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let p = v[i];
                let q = v[(i + 1) % n];
                // Outward normal of a counterclockwise edge.
                let nx = q[1] - p[1];
                let ny = -(q[0] - p[0]);
                let len = math::sqrt(nx * nx + ny * ny);
                if len < 1e-300 {
                    continue;
                }
                let normal = Point::xy(nx / len, ny / len);
                let b = normal.dot(&p);
                out.push(AffineFunc::new(scaled_to(&normal, scale), -scale * b));
            }
            out
        }
    }
}

/// Strip covering the outer shell of depth `r` around a convex body.
///
/// Builds the netted polytope `P`, expresses it as halfspaces `f_i <= 0`
/// rescaled so `|v_i| = r + eps`, and returns `S(max(0, max_i f_i))`. The
/// strip contains every point outside the interior of the body within
/// distance `r` of it, and its width bound is exactly `2 (r + eps)`.
pub fn convex_neighborhood_cover(
    body: &ConvexBody,
    r: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverResult> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition("shell depth r must be positive".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let geom = body_geom(body, eps)?;
    let strip = shell_strip(&geom, body.dim(), r, eps)?;

    // Containment check on the shell: a boundary point pushed outward by
    // s in (0, r). The offsets stay clear of the classification band by
    // construction, which stands in for resampling banded points.
    let mut stream = SampleStream::new(seed);
    let tol = Tolerances::default();
    let mut violations = 0;
    for _ in 0..samples {
        let dir = stream.unit_vector(body.dim());
        let p = geom.boundary_hit(&dir);
        let s = stream.range(1e-6 * r, r * (1.0 - 1e-6));
        let x = p.axpy(s, &dir);
        if !strip.member(&x, &tol)? {
            violations += 1;
        }
    }
    Ok(CoverResult::new(
        alloc::vec![strip],
        2.0 * eps,
        format!("outer shell of depth {r} around a convex body"),
        samples,
        violations,
    ))
}

fn shell_strip(geom: &BodyGeom, dim: usize, r: f64, eps: f64) -> Result<GenStrip> {
    let mut pieces = halfspace_pieces(geom, r + eps);
    pieces.push(AffineFunc::new(Point::zeros(dim), 0.0));
    Ok(GenStrip::new(PolyhedralFunc::new(dim, pieces)?))
}

/// Polyhedral under-approximation of a convex field by supporting tangents
/// on a lattice net of `u`.
///
/// The net's covering radius defaults to `eps / (2 L)`; the result `g`
/// satisfies `g <= f <= g + eps` (verified on samples) with
/// `g(x_i) = f(x_i)` at the net points.
pub fn convex_polyhedral_approx(
    field: &ScalarField,
    u: &BoundingBox,
    eps: f64,
    net_radius: Option<f64>,
) -> Result<PolyhedralFunc> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    if !(field.lip() > 0.0) {
        return Err(Error::Precondition(
            "field needs a positive Lipschitz constant".into(),
        ));
    }
    let d = u.dim();
    let radius = net_radius.unwrap_or(eps / (2.0 * field.lip()));
    if !(radius > 0.0) {
        return Err(Error::Precondition("net radius must be positive".into()));
    }
    spot_check_convexity(field, u, 2000, 0x636f6e76)?;

    // Lattice whose per-axis half-step keeps the covering radius under the
    // requested value.
    let step = 2.0 * radius / math::sqrt(d as f64);
    let mut counts = [0usize; crate::geom::MAX_DIM];
    let mut total = 1usize;
    for k in 0..d {
        let extent = u.high()[k] - u.low()[k];
        let n = if extent <= step {
            1
        } else {
            (extent / step) as usize + 1
        };
        counts[k] = n;
        total = total.saturating_mul(n);
        if total > 1_000_000 {
            return Err(Error::Budget(
                "approximation net exceeds 1e6 points; coarsen eps or the net radius".into(),
            ));
        }
    }
    let scale = 2.0 * u.circumradius();
    let mut pieces = Vec::with_capacity(total);
    let mut idx = [0usize; crate::geom::MAX_DIM];
    loop {
        let mut x = Point::zeros(d);
        for k in 0..d {
            let extent = u.high()[k] - u.low()[k];
            let margin = (step / 2.0).min(extent / 2.0);
            x[k] = if counts[k] == 1 {
                u.low()[k] + extent / 2.0
            } else {
                let inner = extent - 2.0 * margin;
                u.low()[k] + margin + inner * idx[k] as f64 / (counts[k] - 1) as f64
            };
        }
        let v = field.subgradient(&x, scale);
        let c = field.eval(&x) - v.dot(&x);
        pieces.push(AffineFunc::new(v, c));
        let mut k = 0;
        loop {
            if k == d {
                let g = PolyhedralFunc::new(d, pieces)?;
                verify_approx(field, u, eps, &g)?;
                return Ok(g);
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Midpoint-convexity spot check; errors identify the violating triple.
fn spot_check_convexity(field: &ScalarField, u: &BoundingBox, pairs: usize, seed: u64) -> Result<()> {
    let mut stream = SampleStream::new(seed);
    for _ in 0..pairs {
        let a = sample_box(u, &mut stream);
        let b = sample_box(u, &mut stream);
        let mid = (a + b) * 0.5;
        let fa = field.eval(&a);
        let fb = field.eval(&b);
        let fm = field.eval(&mid);
        let slack = 1e-9 * (1.0 + fa.abs().max(fb.abs()));
        if fm > 0.5 * (fa + fb) + slack {
            return Err(Error::Precondition(format!(
                "field is not midpoint convex: f({:?}) = {fm} exceeds the average of \
                 f({:?}) = {fa} and f({:?}) = {fb}",
                mid.as_slice(),
                a.as_slice(),
                b.as_slice()
            )));
        }
    }
    Ok(())
}

fn verify_approx(field: &ScalarField, u: &BoundingBox, eps: f64, g: &PolyhedralFunc) -> Result<()> {
    let mut stream = SampleStream::new(0x61707072);
    for _ in 0..1000 {
        let x = sample_box(u, &mut stream);
        let fx = field.eval(&x);
        let gx = g.eval(&x).0;
        let slack = 1e-9 * (1.0 + fx.abs());
        if gx > fx + slack {
            return Err(Error::Precondition(format!(
                "tangent approximation exceeds the field at {:?}: {gx} > {fx}; \
                 the field is not convex or its gradient is inconsistent",
                x.as_slice()
            )));
        }
        if fx > gx + eps + slack {
            return Err(Error::Precondition(format!(
                "approximation gap {:.3e} exceeds eps = {eps} at {:?}; \
                 declared Lipschitz constant is likely understated",
                fx - gx,
                x.as_slice()
            )));
        }
    }
    Ok(())
}

/// Strip covering the band `{ |y - (g - h)(x)| <= eps }` around the graph
/// of a difference of 1/3-Lipschitz polyhedral functions.
///
/// Returns `S(F)` for `F(x, y) = 2 eps * max(2 g(x) - y, y + 2 h(x))` on
/// one more dimension; the width bound is at most `8 eps`.
pub fn dc_graph_cover(g: &PolyhedralFunc, h: &PolyhedralFunc, eps: f64) -> Result<GenStrip> {
    if g.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: h.dim(),
        });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let d = g.dim() + 1;
    if d > crate::geom::MAX_DIM {
        return Err(Error::Precondition(format!(
            "lifted dimension {d} exceeds the supported maximum"
        )));
    }
    for (name, f) in [("g", g), ("h", h)] {
        let lip = f.lip();
        if !(lip <= 1.0 / 3.0) {
            return Err(Error::Precondition(format!(
                "{name} must be 1/3-Lipschitz, got gradient norm {lip}"
            )));
        }
    }
    let mut pieces = Vec::with_capacity(g.piece_count() + h.piece_count());
    for p in g.pieces() {
        // 2 eps (2 g_i(x) - y): gradient (4 eps v_i, -2 eps), offset 4 eps c_i.
        let mut grad = Point::zeros(d);
        for k in 0..d - 1 {
            grad[k] = 4.0 * eps * p.gradient[k];
        }
        grad[d - 1] = -2.0 * eps;
        pieces.push(AffineFunc::new(grad, 4.0 * eps * p.offset));
    }
    for p in h.pieces() {
        // 2 eps (y + 2 h_j(x)): gradient (4 eps u_j, 2 eps), offset 4 eps e_j.
        let mut grad = Point::zeros(d);
        for k in 0..d - 1 {
            grad[k] = 4.0 * eps * p.gradient[k];
        }
        grad[d - 1] = 2.0 * eps;
        pieces.push(AffineFunc::new(grad, 4.0 * eps * p.offset));
    }
    let strip = GenStrip::new(PolyhedralFunc::new(d, pieces)?);
    debug_assert!(strip.width_bound() <= 8.0 * eps + 1e-12);
    Ok(strip)
}

/// Strip covering the graph of a C^2 field over a box `w`.
///
/// Splits `f = g - h` with `h = M |x|^2 / 2` (so `g = f + h` is convex),
/// approximates both by 1/3-Lipschitz polyhedral functions with gap `eps`,
/// and covers the graph band of the difference; the width bound is at most
/// `16 eps`. Requires `|grad f| <= 1/6` on `w`, a declared gradient-Lipschitz
/// constant `M`, and `w` inside the ball of radius `1/(6M)`.
pub fn surface_cover(
    field: &ScalarField,
    w: &BoundingBox,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let Some(m_const) = field.grad_lip() else {
        return Err(Error::Precondition(
            "surface cover needs a declared gradient-Lipschitz constant".into(),
        ));
    };
    if !(m_const > 0.0 && m_const.is_finite()) {
        return Err(Error::Precondition(
            "gradient-Lipschitz constant must be positive".into(),
        ));
    }
    let d = w.dim() + 1;
    if d > crate::geom::MAX_DIM {
        return Err(Error::Precondition(format!(
            "lifted dimension {d} exceeds the supported maximum"
        )));
    }
    // Hypotheses: |grad f| <= 1/6 sampled on w, and w inside B(0, 1/(6M))
    // checked exactly on the box corners.
    let scale = 2.0 * w.circumradius();
    let mut stream = SampleStream::new(seed ^ 0x67726164);
    for _ in 0..1000 {
        let x = sample_box(w, &mut stream);
        let gnorm = field.subgradient(&x, scale).norm();
        if gnorm > 1.0 / 6.0 + 1e-9 {
            return Err(Error::Precondition(format!(
                "gradient bound violated: |grad f| = {gnorm} > 1/6 at {:?}",
                x.as_slice()
            )));
        }
    }
    let ball = 1.0 / (6.0 * m_const);
    let mut far: f64 = 0.0;
    for corner in w.corners() {
        far = far.max(corner.norm());
    }
    if far > ball {
        return Err(Error::Precondition(format!(
            "domain reaches radius {far}, outside the ball of radius {ball} = 1/(6M)"
        )));
    }

    // Central differences are exact for the quadratic part, so the split
    // fields lean on the finite-difference subgradient path.
    let g_eval = |x: &Point| field.eval(x) + 0.5 * m_const * x.norm2();
    let h_eval = |x: &Point| 0.5 * m_const * x.norm2();
    let lip_g = (1.0 / 6.0 + m_const * far).max(1e-9);
    let g_field = ScalarField::new(&g_eval, lip_g);
    let h_field = ScalarField::new(&h_eval, (m_const * far).max(1e-9));

    let poly_g = convex_polyhedral_approx(&g_field, w, eps, None)?;
    let poly_h = convex_polyhedral_approx(&h_field, w, eps, None)?;
    for (name, f) in [("g", &poly_g), ("h", &poly_h)] {
        if !(f.lip() <= 1.0 / 3.0) {
            return Err(Error::Precondition(format!(
                "approximated {name} is not 1/3-Lipschitz (norm {}); \
                 rescale coordinates and retry",
                f.lip()
            )));
        }
    }
    // Each approximation is within eps, so the graph of f stays within eps
    // of the polyhedral difference; cover that band with margin 2 eps.
    let strip = dc_graph_cover(&poly_g, &poly_h, 2.0 * eps)?;

    let tol = Tolerances::default();
    let mut stream = SampleStream::new(seed);
    let mut violations = 0;
    for _ in 0..samples {
        let x = sample_box(w, &mut stream);
        let mut lifted = Point::zeros(d);
        for k in 0..d - 1 {
            lifted[k] = x[k];
        }
        lifted[d - 1] = field.eval(&x);
        if !strip.member(&lifted, &tol)? {
            violations += 1;
        }
    }
    Ok(CoverResult::new(
        alloc::vec![strip],
        16.0 * eps,
        format!("graph of a C^2 field over a box of circumradius {}", w.circumradius()),
        samples,
        violations,
    ))
}

/// Covers the radial shells `{ x : |x| in I_i }` in the plane, one strip
/// per interval via the convex shell cover of the inner ball. The total
/// width bound is at most `2 sum |I_i| + 2 k eps`.
pub fn radial_cover(
    radii: &[(f64, f64)],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let mut sorted: Vec<(f64, f64)> = radii.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        if w[0].1 > w[1].0 {
            return Err(Error::Precondition(format!(
                "radial intervals [{}, {}] and [{}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    let mut strips = Vec::with_capacity(sorted.len());
    let mut spans = Vec::with_capacity(sorted.len());
    for &(lo, hi) in &sorted {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Precondition(format!(
                "radial interval [{lo}, {hi}] must satisfy 0 < lo < hi"
            )));
        }
        let r = hi - lo;
        // Inscribed polygon of the inner circle with chordal covering
        // radius eps, then the shell strip of depth r around it.
        let k = circle_net_count(lo, eps)?;
        let mut ring = Vec::with_capacity(k);
        for i in 0..k {
            let a = 2.0 * core::f64::consts::PI * i as f64 / k as f64;
            ring.push(Point::xy(lo * math::cos(a), lo * math::sin(a)));
        }
        let geom = BodyGeom::Polygon(hull2d(&ring));
        strips.push(shell_strip(&geom, 2, r, eps)?);
        spans.push((lo, hi));
    }

    let tol = Tolerances::default();
    let mut stream = SampleStream::new(seed);
    let mut violations = 0;
    let mut checked = 0;
    if !spans.is_empty() {
        for _ in 0..samples {
            let which = stream.index(spans.len());
            let (lo, hi) = spans[which];
            let rr = stream.range(lo * (1.0 + 1e-9), hi * (1.0 - 1e-9));
            let a = stream.range(0.0, 2.0 * core::f64::consts::PI);
            let x = Point::xy(rr * math::cos(a), rr * math::sin(a));
            if !strips[which].member(&x, &tol)? {
                violations += 1;
            }
            checked += 1;
        }
    }
    Ok(CoverResult::new(
        strips,
        2.0 * eps * sorted.len() as f64,
        format!("{} radial shells in the plane", sorted.len()),
        checked,
        violations,
    ))
}

/// Points needed so the vertices of an inscribed regular polygon form an
/// eps-net of the circle of radius `rho`: angular spacing `2 eps / rho`
/// keeps every boundary point within arc length eps of a vertex.
fn circle_net_count(rho: f64, eps: f64) -> Result<usize> {
    let k = (math::ceil(core::f64::consts::PI * rho / eps) as usize).max(8);
    if k > (1 << 20) {
        return Err(Error::Budget(
            "circle net exceeds 2^20 points; raise eps".into(),
        ));
    }
    Ok(k)
}
