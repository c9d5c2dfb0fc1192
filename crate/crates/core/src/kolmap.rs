//! End-to-end pipeline: cover the boundary of a bounded set by generalized
//! strips with total width under a displacement budget, merge them into one
//! strip `S(f)`, and verify that `F = prox_f` is a 1-Lipschitz near-identity
//! map that flattens the covered boundary onto finitely many hyperplanes
//! with `O(lip f)` measure loss.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::covers::{convex_neighborhood_cover, surface_cover, ConvexBody, CoverResult, ScalarField};
use crate::error::{Error, Result};
use crate::geom::{sample_box, BoundingBox, ClassicalStrip, Point, SampleStream};
use crate::gstrip::{merge_all, GenStrip};
use crate::math;
use crate::polyfun::{prox, PolyhedralFunc, Tolerances};
use crate::setlib::SetSpec;

/// Fraction of the width budget held back so strict inequalities in the
/// budget check survive floating-point evaluation.
pub const BUDGET_MARGIN: f64 = 0.005;

/// How the boundary of the target set is covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverStrategy {
    /// One classical slab per boundary support line (squares, polygons,
    /// carpet approximations).
    GridLines,
    /// A single shell strip around a convex set.
    Convex,
    /// A graph cover of a C^2 subgraph boundary.
    Surface,
    /// Annulus strips for radial sets.
    Radial,
    /// Strips supplied externally through the config.
    External,
}

/// Pipeline parameters; `eps_target` is the displacement budget.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub eps_target: f64,
    pub strategy: CoverStrategy,
    pub boundary_samples: usize,
    pub verify_samples: usize,
    pub area_samples: usize,
    pub piece_cap: usize,
    pub tol: Tolerances,
    pub seed: u64,
    /// Used by `CoverStrategy::External`.
    pub external_strips: Vec<GenStrip>,
}

impl PipelineConfig {
    pub fn new(eps_target: f64, strategy: CoverStrategy) -> Self {
        PipelineConfig {
            eps_target,
            strategy,
            boundary_samples: 10_000,
            verify_samples: 10_000,
            area_samples: 100_000,
            piece_cap: crate::gstrip::DEFAULT_PIECE_CAP,
            tol: Tolerances::default(),
            seed: 0,
            external_strips: Vec::new(),
        }
    }
}

/// Verification summary of one pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineReport {
    /// `2 * lip` of the merged strip function.
    pub strip_width_bound: f64,
    /// Sum of the cover strips' width bounds (before merging).
    pub cover_total_width: f64,
    pub cover_violations: usize,
    /// `lip` of the merged function; at most `eps_target`.
    pub lip_bound: f64,
    pub max_displacement: f64,
    pub lipschitz_pair_violations: usize,
    /// Largest distance from the image of an inside-strip sample to the
    /// nearest piece-equality hyperplane through its prox support.
    pub flatten_residual: f64,
    pub inside_strip_samples: usize,
    /// Outside-strip clusters whose displacement was not constant.
    pub translation_violations: usize,
    pub area_before: (f64, f64),
    pub image_area: f64,
    pub raster_bias: f64,
    pub loss_estimate: f64,
    /// Documented constant `C(d, r) = d * omega_d * r^(d-1)`.
    pub measure_loss_bound_constant: f64,
    pub loss_bound: f64,
    pub bound_check: bool,
}

/// Builds the boundary cover for `a` under the configured strategy and
/// verifies it on freshly sampled boundary points. The strips' total width
/// bound stays strictly below `2 * eps_target`.
pub fn build_boundary_cover(a: &SetSpec, cfg: &PipelineConfig) -> Result<CoverResult> {
    if !(cfg.eps_target > 0.0 && cfg.eps_target.is_finite()) {
        return Err(Error::Precondition("eps_target must be positive".into()));
    }
    let budget = 2.0 * cfg.eps_target * (1.0 - BUDGET_MARGIN);
    let (strips, slack): (Vec<GenStrip>, f64) = match cfg.strategy {
        CoverStrategy::GridLines => {
            let lines = a.boundary_lines();
            if lines.is_empty() {
                return Err(Error::Precondition(format!(
                    "the grid-lines strategy needs a boundary on finitely many lines; \
                     {} has none",
                    a.name()
                )));
            }
            let width = budget / lines.len() as f64;
            if width < 1e-12 {
                return Err(Error::Budget(format!(
                    "{} boundary lines need a budget of at least {:.3e}; eps_target {} is too small",
                    lines.len(),
                    lines.len() as f64 * 1e-12 / (1.0 - BUDGET_MARGIN) / 2.0,
                    cfg.eps_target
                )));
            }
            let mut strips = Vec::with_capacity(lines.len());
            for line in &lines {
                strips.push(GenStrip::from_classical(&ClassicalStrip::around(line, width)?)?);
            }
            (strips, 0.0)
        }
        CoverStrategy::Convex => {
            let contains = |x: &Point| !a.membership(x).is_outside();
            let body = ConvexBody::oracle(&contains, *a.bbox());
            let r = budget / 4.0;
            let eps = budget / 4.0;
            let cover = convex_neighborhood_cover(&body, r, eps, 0, cfg.seed)?;
            (cover.strips, cover.slack)
        }
        CoverStrategy::Surface => {
            let Some((field_fn, lip, grad_lip, domain)) = a.subgraph_parts() else {
                return Err(Error::Precondition(format!(
                    "the surface strategy needs a subgraph set, got {}",
                    a.name()
                )));
            };
            let Some(m_const) = grad_lip else {
                return Err(Error::Precondition(
                    "the subgraph set has no declared gradient-Lipschitz constant".into(),
                ));
            };
            let eval = move |x: &Point| field_fn(x);
            let field = ScalarField::new(&eval, lip.max(1e-9)).with_grad_lip(m_const);
            let eps = budget / 16.0;
            let cover = surface_cover(&field, &domain, eps, 0, cfg.seed)?;
            (cover.strips, cover.slack)
        }
        CoverStrategy::Radial => {
            let Some(intervals) = a.radial_intervals() else {
                return Err(Error::Precondition(format!(
                    "the radial strategy needs a radial set, got {}",
                    a.name()
                )));
            };
            let base: f64 = intervals.iter().map(|&(lo, hi)| 2.0 * (hi - lo)).sum();
            let room = budget - base;
            if room <= 0.0 {
                return Err(Error::Budget(format!(
                    "radial shells alone cost a width of {base:.6}; the minimum achievable \
                     budget is eps_target > {:.6}",
                    base / (2.0 * (1.0 - BUDGET_MARGIN))
                )));
            }
            let eps = room / (2.0 * intervals.len() as f64);
            let cover = crate::covers::radial_cover(intervals, eps, 0, cfg.seed)?;
            (cover.strips, cover.slack)
        }
        CoverStrategy::External => {
            if cfg.external_strips.is_empty() {
                return Err(Error::Precondition(
                    "the external strategy needs strips in the config".into(),
                ));
            }
            (cfg.external_strips.clone(), 0.0)
        }
    };

    let total: f64 = strips.iter().map(|s| s.width_bound()).sum();
    if !(total < 2.0 * cfg.eps_target) {
        return Err(Error::Budget(format!(
            "cover width bound {total} does not stay below 2 * eps_target = {}; \
             the minimum achievable budget is eps_target > {:.6}",
            2.0 * cfg.eps_target,
            total / 2.0
        )));
    }

    // Unified containment check: freshly sampled boundary points of `a`
    // must fall inside the union of the strips.
    let mut stream = SampleStream::new(cfg.seed ^ 0x626f756e);
    let pts = a.boundary_sample(cfg.boundary_samples, &mut stream);
    let mut violations = 0;
    for x in &pts {
        let mut covered = false;
        for s in &strips {
            if s.member(x, &cfg.tol)? {
                covered = true;
                break;
            }
        }
        if !covered {
            violations += 1;
        }
    }
    Ok(CoverResult {
        total_width_bound: total,
        strips,
        slack,
        target_description: format!("boundary of {}", a.name()),
        containment_samples_checked: pts.len(),
        violations,
    })
}

/// Runs the full pipeline: cover, merge, and verify. Returns the merged
/// strip (whose prox is the near-identity map) and the report.
pub fn run_pipeline(a: &SetSpec, cfg: &PipelineConfig) -> Result<(GenStrip, PipelineReport)> {
    let cover = build_boundary_cover(a, cfg)?;
    if cover.violations > 0 {
        return Err(Error::Invariant(format!(
            "boundary cover missed {} of {} sampled boundary points",
            cover.violations, cover.containment_samples_checked
        )));
    }
    let merged = merge_all(&cover.strips, cfg.piece_cap)?;
    let f = merged.func();
    let lip = f.lip();
    if !(lip <= cfg.eps_target) {
        return Err(Error::Invariant(format!(
            "merged strip function has lip {lip}, above the displacement budget {}",
            cfg.eps_target
        )));
    }

    // Sampling domain: the set's box inflated past the strip's reach.
    let domain = a.bbox().inflate(2.0 * lip + 0.5);
    let mut stream = SampleStream::new(cfg.seed ^ 0x70697065);

    // Displacement bound |F(x) - x| <= lip f.
    let mut max_displacement: f64 = 0.0;
    for _ in 0..cfg.verify_samples {
        let x = sample_box(&domain, &mut stream);
        let y = prox(f, &x, &cfg.tol)?.point;
        max_displacement = max_displacement.max(y.dist(&x));
    }
    if max_displacement > lip + 1e-9 {
        return Err(Error::Invariant(format!(
            "observed displacement {max_displacement} exceeds lip f = {lip}"
        )));
    }

    // Pairwise 1-Lipschitz check.
    let map = |x: &Point| prox(f, x, &cfg.tol).map(|r| r.point);
    let lipschitz_pair_violations = verify_lipschitz(
        &map,
        &domain,
        cfg.verify_samples.min(2000).max(2),
        &mut stream.split(),
    )?;
    if lipschitz_pair_violations > 0 {
        return Err(Error::Invariant(format!(
            "{lipschitz_pair_violations} sampled pairs violated the 1-Lipschitz bound"
        )));
    }

    // Flattening: inside-strip samples map onto piece-equality hyperplanes;
    // outside-strip samples move by a translation constant per cluster.
    let mut flatten_residual: f64 = 0.0;
    let mut inside_strip_samples = 0usize;
    let mut outside: Vec<(Vec<usize>, Point)> = Vec::new();
    let mut stream_flat = SampleStream::new(cfg.seed ^ 0x666c6174);
    for _ in 0..cfg.verify_samples {
        let x = sample_box(&domain, &mut stream_flat);
        let res = prox(f, &x, &cfg.tol)?;
        if crate::polyfun::differentiable_at(f, &res.point, &cfg.tol) {
            let sig = res.active.clone();
            outside.push((sig, res.point - x));
        } else {
            inside_strip_samples += 1;
            flatten_residual = flatten_residual.max(support_plane_residual(f, &res));
        }
    }
    let translation_violations = translation_cluster_violations(outside, f.dim());

    // Areas and measure loss.
    let mut stream_area = SampleStream::new(cfg.seed ^ 0x61726561);
    let r = a.bbox().center().norm() + a.bbox().circumradius();
    let loss = verify_measure_loss(a, &map, lip, r, cfg.area_samples, &mut stream_area)?;

    let report = PipelineReport {
        strip_width_bound: merged.width_bound(),
        cover_total_width: cover.total_width_bound,
        cover_violations: cover.violations,
        lip_bound: lip,
        max_displacement,
        lipschitz_pair_violations,
        flatten_residual,
        inside_strip_samples,
        translation_violations,
        area_before: (loss.area_estimate, loss.area_stderr),
        image_area: loss.image_area,
        raster_bias: loss.raster_bias,
        loss_estimate: loss.loss_estimate,
        measure_loss_bound_constant: loss.constant,
        loss_bound: loss.loss_bound,
        bound_check: loss.bound_check,
    };
    Ok((merged, report))
}

/// Distance from `res.point` to the nearest piece-equality hyperplane
/// through a pair of support pieces with distinct gradients. The dual
/// weights certify joint activity, so that hyperplane belongs to the
/// strip's image-plane family.
fn support_plane_residual(f: &PolyhedralFunc, res: &crate::polyfun::ProxResult) -> f64 {
    let pieces = f.pieces();
    let y = &res.point;
    let mut best = f64::INFINITY;
    let support = &res.dual_weights;
    for a in 0..support.len() {
        for b in a + 1..support.len() {
            let (i, _) = support[a];
            let (j, _) = support[b];
            let dg = pieces[i].gradient - pieces[j].gradient;
            let denom = dg.norm();
            if denom <= 1e-12 {
                continue;
            }
            let gap = (pieces[i].eval(y) - pieces[j].eval(y)).abs();
            best = best.min(gap / denom);
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Groups outside-strip samples by their active-piece signature. Off the
/// strip the map is `x - v` for the active gradient `v`, so displacements
/// within one signature group must agree to solver precision: a translation.
/// Counts groups whose per-coordinate displacement variance exceeds 1e-12.
fn translation_cluster_violations(outside: Vec<(Vec<usize>, Point)>, d: usize) -> usize {
    if outside.is_empty() {
        return 0;
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<Point>> = BTreeMap::new();
    for (sig, disp) in outside {
        groups.entry(sig).or_default().push(disp);
    }
    let mut violations = 0;
    for disps in groups.values() {
        if disps.len() < 2 {
            continue;
        }
        let n = disps.len() as f64;
        let mut bad = false;
        for k in 0..d {
            let mean: f64 = disps.iter().map(|p| p[k]).sum::<f64>() / n;
            let var: f64 = disps.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<f64>() / n;
            if var > 1e-12 {
                bad = true;
            }
        }
        if bad {
            violations += 1;
        }
    }
    violations
}

/// Counts sampled pairs violating `|F(x) - F(x')| <= |x - x'| + 1e-9`.
/// All pairs are tested up to 1e5; beyond that a random subset of 1e5
/// pairs is used.
pub fn verify_lipschitz<F: Fn(&Point) -> Result<Point>>(
    map: &F,
    domain: &BoundingBox,
    n: usize,
    stream: &mut SampleStream,
) -> Result<usize> {
    if n < 2 {
        return Err(Error::Precondition("need at least 2 samples".into()));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sample_box(domain, stream);
        ys.push(map(&x)?);
        xs.push(x);
    }
    let total_pairs = n * (n - 1) / 2;
    let mut violations = 0;
    if total_pairs <= 100_000 {
        for i in 0..n {
            for j in i + 1..n {
                if ys[i].dist(&ys[j]) > xs[i].dist(&xs[j]) + 1e-9 {
                    violations += 1;
                }
            }
        }
    } else {
        for _ in 0..100_000 {
            let i = stream.index(n);
            let mut j = stream.index(n);
            if j == i {
                j = (j + 1) % n;
            }
            if ys[i].dist(&ys[j]) > xs[i].dist(&xs[j]) + 1e-9 {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

/// Measure-loss verdict from the raster image estimate.
#[derive(Clone, Debug)]
pub struct MeasureLoss {
    pub area_estimate: f64,
    pub area_stderr: f64,
    pub image_area: f64,
    pub raster_bias: f64,
    pub loss_estimate: f64,
    /// `C(d, r) = d * omega_d * r^(d-1)`.
    pub constant: f64,
    pub loss_bound: f64,
    pub bound_check: bool,
}

/// Estimates the measure lost by mapping `a` through the 1-Lipschitz map:
/// Monte-Carlo area of `a` minus a raster estimate of the image area. The
/// image is rasterized from a half-cell-dense lattice of `a` into cells of
/// side `delta` with a documented bias band of `4 * perimeter * delta`, and
/// the loss must stay below `C(d, r) * lip + 4 * stderr + bias`.
pub fn verify_measure_loss<F: Fn(&Point) -> Result<Point>>(
    a: &SetSpec,
    map: &F,
    lip: f64,
    r: f64,
    n: usize,
    stream: &mut SampleStream,
) -> Result<MeasureLoss> {
    let d = a.dim();
    let reach = a.bbox().center().norm() + a.bbox().circumradius();
    if reach > r + 1e-9 {
        return Err(Error::Precondition(format!(
            "the set reaches radius {reach}, beyond the stated ball radius {r}"
        )));
    }
    let (area_estimate, area_stderr) = crate::setlib::area_monte_carlo(a, n, stream)?;

    // Lattice step delta/2 keeps the image delta/2-dense in the true image,
    // so a hit-cell sum over cells of side delta over-counts by at most the
    // cells meeting the image boundary. Both effects sit inside the bias.
    let diam = 2.0 * a.bbox().circumradius();
    let delta = 2.0 * diam / math::sqrt(n as f64).max(2.0);
    if lip > 0.0 && delta > 0.5 * lip {
        let needed = (4.0 * diam / lip) * (4.0 * diam / lip);
        return Err(Error::Precondition(format!(
            "raster cell {delta:.3e} is too coarse for lip {lip}; request at least \
             {} samples",
            needed as usize + 1
        )));
    }
    let step = delta / 2.0;
    let low = *a.bbox().low();
    let high = *a.bbox().high();
    let mut counts = [0usize; crate::geom::MAX_DIM];
    let mut total = 1usize;
    for k in 0..d {
        counts[k] = (math::ceil((high[k] - low[k]) / step) as usize).max(1) + 1;
        total = total.saturating_mul(counts[k]);
        if total > 50_000_000 {
            return Err(Error::Budget("raster lattice exceeds 5e7 points".into()));
        }
    }
    let map_low = low;
    let inv = 1.0 / delta;
    let mut hits: Vec<u64> = Vec::new();
    let mut idx = [0usize; crate::geom::MAX_DIM];
    loop {
        let mut x = Point::zeros(d);
        for k in 0..d {
            x[k] = low[k] + step * idx[k] as f64;
        }
        if a.membership(&x).is_inside() {
            let y = map(&x)?;
            let mut key = 0u64;
            for k in 0..d {
                // Images stay within lip of the box; offset keeps indices
                // nonnegative.
                let c = ((y[k] - map_low[k] + 2.0 * (lip + delta)) * inv) as u64;
                key = key.wrapping_mul(0x100000) ^ (c & 0xfffff);
            }
            hits.push(key);
        }
        let mut k = 0;
        loop {
            if k == d {
                hits.sort_unstable();
                hits.dedup();
                let image_area = hits.len() as f64 * powi(delta, d as i32);
                let raster_bias = 4.0 * a.perimeter_hint() * delta;
                let constant = ball_shrink_constant(d, r);
                let loss_estimate = area_estimate - image_area;
                let loss_bound = constant * lip + 4.0 * area_stderr + raster_bias;
                return Ok(MeasureLoss {
                    area_estimate,
                    area_stderr,
                    image_area,
                    raster_bias,
                    loss_estimate,
                    constant,
                    loss_bound,
                    bound_check: loss_estimate <= loss_bound,
                });
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

/// `C(d, r) = d * omega_d * r^(d-1)`: shrinking a ball of radius `r` by a
/// width `w` strip removes at most `C * w / 2 * ...` volume; in the plane
/// this is `2 pi r`.
pub fn ball_shrink_constant(d: usize, r: f64) -> f64 {
    let omega = unit_ball_volume(d);
    d as f64 * omega * powi(r, d as i32 - 1)
}

/// Volume of the unit ball in dimensions 1 through 8.
pub fn unit_ball_volume(d: usize) -> f64 {
    use core::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        5 => 8.0 * PI * PI / 15.0,
        6 => PI * PI * PI / 6.0,
        7 => 16.0 * PI * PI * PI / 105.0,
        8 => PI * PI * PI * PI / 24.0,
        _ => f64::NAN,
    }
}

fn powi(x: f64, n: i32) -> f64 {
    let mut out = 1.0;
    for _ in 0..n.max(0) {
        out *= x;
    }
    out
}

/// Applies the near-identity map of a strip: `x -> prox_f(x)`.
pub fn apply_map(strip: &GenStrip, x: &Point, tol: &Tolerances) -> Result<Point> {
    Ok(prox(strip.func(), x, tol)?.point)
}

/// Human-readable single-line summary for logs.
pub fn report_summary(report: &PipelineReport) -> String {
    format!(
        "width {:.6} | lip {:.6} | disp {:.6} | pairs {} | flatten {:.3e} | loss {:.6} <= {:.6} ({})",
        report.strip_width_bound,
        report.lip_bound,
        report.max_displacement,
        report.lipschitz_pair_violations,
        report.flatten_residual,
        report.loss_estimate,
        report.loss_bound,
        if report.bound_check { "ok" } else { "FAIL" }
    )
}
