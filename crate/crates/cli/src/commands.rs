//! Implementations behind the subcommands. Each builds on the library
//! operations, writes any requested artifact files, prints a one-line
//! JSON summary to stdout and maps failures to the documented exit codes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gstrip_core::covers::{
    convex_neighborhood_cover, radial_cover, surface_cover, ConvexBody, CoverResult, ScalarField,
};
use gstrip_core::geom::{BoundingBox, ClassicalStrip, Point, SampleStream};
use gstrip_core::gstrip::{merge_all, GenStrip};
use gstrip_core::kolmap::{run_pipeline, CoverStrategy, PipelineConfig, PipelineReport};
use gstrip_core::polyfun::{prox, prox_oracle, PolyhedralFunc, Tolerances};
use gstrip_core::setlib::SetSpec;

use crate::formats::{read_cover, read_func, write_json, CoverFile, FuncFile};
use crate::render::{render_svg, SvgScene};
use crate::sets::parse_set;
use crate::CliError;

/// CLI pass thresholds applied on top of the library's own invariants:
/// flatten residuals above this fail a pipeline run.
pub const FLATTEN_PASS: f64 = 1e-7;

pub fn parse_point(text: &str, expected_dim: Option<usize>) -> Result<Point, CliError> {
    let coords: Result<Vec<f64>, _> = text.split(',').map(str::parse::<f64>).collect();
    let coords =
        coords.map_err(|_| CliError::parse(format!("point '{text}' is not a number list")))?;
    if coords.is_empty() || coords.len() > gstrip_core::geom::MAX_DIM {
        return Err(CliError::parse(format!(
            "point '{text}' must have 1..={} coordinates",
            gstrip_core::geom::MAX_DIM
        )));
    }
    if let Some(d) = expected_dim {
        if coords.len() != d {
            return Err(CliError::dimension(d, coords.len()));
        }
    }
    Ok(Point::from_slice(&coords))
}

pub fn parse_bbox(text: &str) -> Result<BoundingBox, CliError> {
    let coords: Result<Vec<f64>, _> = text.split(',').map(str::parse::<f64>).collect();
    let coords =
        coords.map_err(|_| CliError::parse(format!("bbox '{text}' is not a number list")))?;
    if coords.len() != 4 {
        return Err(CliError::parse(format!(
            "bbox '{text}' must be x0,y0,x1,y1"
        )));
    }
    BoundingBox::new(
        Point::xy(coords[0], coords[1]),
        Point::xy(coords[2], coords[3]),
    )
    .map_err(CliError::from)
}

pub fn check_dim(f: &PolyhedralFunc, expected: Option<usize>) -> Result<(), CliError> {
    if let Some(d) = expected {
        if f.dim() != d {
            return Err(CliError::dimension(d, f.dim()));
        }
    }
    Ok(())
}

fn print_summary<T: Serialize>(value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value)
        .map_err(|e| CliError::parse(format!("cannot serialize summary: {e}")))?;
    println!("{line}");
    Ok(())
}

#[derive(Serialize)]
struct ProxOutput {
    point: Vec<f64>,
    value: f64,
    prox: Vec<f64>,
    displacement: f64,
    active: Vec<usize>,
    differentiable: bool,
    dual_weights: Vec<(usize, f64)>,
    in_strip: bool,
}

pub fn cmd_prox(
    func: &Path,
    point: &str,
    tol: Tolerances,
    dim: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let f = read_func(func)?;
    check_dim(&f, dim)?;
    let x = parse_point(point, Some(f.dim()))?;
    let res = prox(&f, &x, &tol)?;
    let output = ProxOutput {
        point: x.as_slice().to_vec(),
        value: f.eval(&x).0,
        prox: res.point.as_slice().to_vec(),
        displacement: res.point.dist(&x),
        active: res.active.clone(),
        differentiable: res.differentiable,
        dual_weights: res.dual_weights.clone(),
        in_strip: !res.differentiable,
    };
    if let Some(path) = out {
        write_json(path, &output)?;
    }
    print_summary(&output)
}

#[derive(Serialize)]
struct MemberOutput {
    point: Vec<f64>,
    inside: bool,
    width_bound: f64,
}

pub fn cmd_member(
    func: &Path,
    point: &str,
    tol: Tolerances,
    dim: Option<usize>,
) -> Result<(), CliError> {
    let f = read_func(func)?;
    check_dim(&f, dim)?;
    let x = parse_point(point, Some(f.dim()))?;
    let strip = GenStrip::new(f);
    let output = MemberOutput {
        point: x.as_slice().to_vec(),
        inside: strip.member(&x, &tol)?,
        width_bound: strip.width_bound(),
    };
    print_summary(&output)
}

#[derive(Serialize)]
struct MergeOutput {
    inputs: usize,
    pieces: usize,
    width_bound: f64,
    lip: f64,
}

pub fn cmd_merge(inputs: &[PathBuf], cap: usize, out: &Path) -> Result<(), CliError> {
    if inputs.len() < 2 {
        return Err(CliError::precondition(
            "merge needs at least two input function files".into(),
        ));
    }
    let mut strips = Vec::with_capacity(inputs.len());
    for path in inputs {
        strips.push(GenStrip::new(read_func(path)?));
    }
    let merged = merge_all(&strips, cap)?;
    write_json(out, &FuncFile::from_func(merged.func(), None))?;
    print_summary(&MergeOutput {
        inputs: inputs.len(),
        pieces: merged.func().piece_count(),
        width_bound: merged.width_bound(),
        lip: merged.func().lip(),
    })
}

#[derive(Serialize)]
struct CoverOutput {
    target: String,
    strips: usize,
    total_width_bound: f64,
    slack: f64,
    containment_samples: usize,
    violations: usize,
}

pub enum CoverKind {
    Grid,
    Convex { r: f64 },
    Surface,
    Radial,
}

pub fn cmd_cover(
    kind: CoverKind,
    set_spec: &str,
    eps: f64,
    samples: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let (set, _) = parse_set(set_spec)?;
    let cover = build_cover(&kind, &set, eps, samples, seed)?;
    let file = CoverFile::from_strips(set_spec.to_string(), &cover.strips);
    write_json(out, &file)?;
    print_summary(&CoverOutput {
        target: set_spec.to_string(),
        strips: cover.strips.len(),
        total_width_bound: cover.total_width_bound,
        slack: cover.slack,
        containment_samples: cover.containment_samples_checked,
        violations: cover.violations,
    })?;
    if cover.violations > 0 {
        return Err(CliError::invariant(format!(
            "{} of {} containment samples escaped the cover",
            cover.violations, cover.containment_samples_checked
        )));
    }
    Ok(())
}

fn build_cover(
    kind: &CoverKind,
    set: &SetSpec,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverResult, CliError> {
    match kind {
        CoverKind::Grid => grid_cover(set, eps, samples, seed),
        CoverKind::Convex { r } => {
            let membership = |x: &Point| set.membership(x).is_inside();
            let body = ConvexBody::oracle(&membership, set.bbox().clone());
            convex_neighborhood_cover(&body, *r, eps, samples, seed).map_err(CliError::from)
        }
        CoverKind::Surface => {
            let Some((field, lip, grad_lip, domain)) = set.subgraph_parts() else {
                return Err(CliError::precondition(format!(
                    "set '{}' has no graph boundary; the surface strategy needs one",
                    set.name()
                )));
            };
            let Some(m_const) = grad_lip else {
                return Err(CliError::precondition(
                    "surface cover needs a declared gradient-Lipschitz constant".into(),
                ));
            };
            let eval = move |x: &Point| field(x);
            let sf = ScalarField::new(&eval, lip.max(1e-12)).with_grad_lip(m_const);
            surface_cover(&sf, &domain, eps, samples, seed).map_err(CliError::from)
        }
        CoverKind::Radial => {
            let Some(intervals) = set.radial_intervals() else {
                return Err(CliError::precondition(format!(
                    "set '{}' is not radial",
                    set.name()
                )));
            };
            radial_cover(intervals, eps, samples, seed).map_err(CliError::from)
        }
    }
}

/// One classical slab of width `eps` per boundary support line; the
/// whole width is construction tolerance, reported as slack.
fn grid_cover(
    set: &SetSpec,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverResult, CliError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CliError::precondition("eps must be positive".into()));
    }
    let lines = set.boundary_lines();
    if lines.is_empty() {
        return Err(CliError::precondition(format!(
            "set '{}' has no boundary support lines; use another strategy",
            set.name()
        )));
    }
    let mut strips = Vec::with_capacity(lines.len());
    for line in &lines {
        let cs = ClassicalStrip::around(line, eps)?;
        strips.push(GenStrip::from_classical(&cs)?);
    }
    let tol = Tolerances::default();
    let mut stream = SampleStream::new(seed);
    let mut violations = 0;
    for p in set.boundary_sample(samples, &mut stream) {
        let mut covered = false;
        for s in &strips {
            if s.member(&p, &tol)? {
                covered = true;
                break;
            }
        }
        violations += usize::from(!covered);
    }
    let total: f64 = strips.iter().map(|s| s.width_bound()).sum();
    Ok(CoverResult {
        strips,
        total_width_bound: total,
        slack: total,
        target_description: set.name().to_string(),
        containment_samples_checked: samples,
        violations,
    })
}

/// Pipeline report as written to disk; augments the in-memory report
/// with the run parameters so files are self-describing.
#[derive(Serialize, Deserialize)]
pub struct ReportFile {
    pub target: String,
    pub strategy: String,
    pub eps_target: f64,
    pub seed: u64,
    pub pieces: usize,
    pub strip_width_bound: f64,
    pub cover_total_width: f64,
    pub cover_violations: usize,
    pub lip_bound: f64,
    pub max_displacement: f64,
    pub lipschitz_pair_violations: usize,
    pub flatten_residual: f64,
    pub inside_strip_samples: usize,
    pub translation_violations: usize,
    pub area_estimate: f64,
    pub area_stderr: f64,
    pub image_area: f64,
    pub raster_bias: f64,
    pub loss_estimate: f64,
    pub measure_loss_bound_constant: f64,
    pub loss_bound: f64,
    pub bound_check: bool,
    pub passed: bool,
}

fn strategy_name(s: CoverStrategy) -> &'static str {
    match s {
        CoverStrategy::GridLines => "grid",
        CoverStrategy::Convex => "convex",
        CoverStrategy::Surface => "surface",
        CoverStrategy::Radial => "radial",
        CoverStrategy::External => "external",
    }
}

pub fn parse_strategy(name: &str) -> Result<CoverStrategy, CliError> {
    match name {
        "grid" => Ok(CoverStrategy::GridLines),
        "convex" => Ok(CoverStrategy::Convex),
        "surface" => Ok(CoverStrategy::Surface),
        "radial" => Ok(CoverStrategy::Radial),
        "external" => Ok(CoverStrategy::External),
        other => Err(CliError::parse(format!(
            "unknown strategy '{other}' (expected grid, convex, surface, radial or external)"
        ))),
    }
}

/// Pass rules applied to a finished pipeline run, beyond the hard
/// invariants the library itself enforces.
fn pipeline_failures(report: &PipelineReport, eps: f64) -> Vec<String> {
    let mut failures = Vec::new();
    if report.max_displacement > eps + 1e-9 {
        failures.push(format!(
            "max displacement {} exceeds eps {eps}",
            report.max_displacement
        ));
    }
    if report.lipschitz_pair_violations > 0 {
        failures.push(format!(
            "{} Lipschitz pair violations",
            report.lipschitz_pair_violations
        ));
    }
    if report.flatten_residual > FLATTEN_PASS {
        failures.push(format!(
            "flatten residual {} above {FLATTEN_PASS}",
            report.flatten_residual
        ));
    }
    if report.translation_violations > 0 {
        failures.push(format!(
            "{} outside-strip clusters moved non-rigidly",
            report.translation_violations
        ));
    }
    if !report.bound_check {
        failures.push(format!(
            "measure loss estimate {} exceeds bound {}",
            report.loss_estimate, report.loss_bound
        ));
    }
    failures
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_pipeline(
    set_spec: &str,
    eps: f64,
    strategy: Option<&str>,
    cover_path: Option<&Path>,
    report_path: Option<&Path>,
    svg_path: Option<&Path>,
    seed: u64,
    samples: Option<usize>,
    area_samples: Option<usize>,
    cap: Option<usize>,
    px: usize,
) -> Result<(), CliError> {
    let (set, natural_strategy) = parse_set(set_spec)?;
    let mut strategy = match strategy {
        Some(name) => parse_strategy(name)?,
        None => natural_strategy,
    };
    let mut external_strips = Vec::new();
    if let Some(path) = cover_path {
        let (_, strips) = read_cover(path)?;
        external_strips = strips;
        strategy = CoverStrategy::External;
    } else if strategy == CoverStrategy::External {
        return Err(CliError::precondition(
            "the external strategy needs --cover".into(),
        ));
    }

    let mut cfg = PipelineConfig::new(eps, strategy);
    cfg.seed = seed;
    cfg.external_strips = external_strips;
    if let Some(n) = samples {
        cfg.verify_samples = n;
        cfg.boundary_samples = n;
    }
    if let Some(n) = area_samples {
        cfg.area_samples = n;
    }
    if let Some(n) = cap {
        cfg.piece_cap = n;
    }

    let (strip, report) = run_pipeline(&set, &cfg)?;
    let failures = pipeline_failures(&report, eps);
    let file = ReportFile {
        target: set_spec.to_string(),
        strategy: strategy_name(strategy).to_string(),
        eps_target: eps,
        seed,
        pieces: strip.func().piece_count(),
        strip_width_bound: report.strip_width_bound,
        cover_total_width: report.cover_total_width,
        cover_violations: report.cover_violations,
        lip_bound: report.lip_bound,
        max_displacement: report.max_displacement,
        lipschitz_pair_violations: report.lipschitz_pair_violations,
        flatten_residual: report.flatten_residual,
        inside_strip_samples: report.inside_strip_samples,
        translation_violations: report.translation_violations,
        area_estimate: report.area_before.0,
        area_stderr: report.area_before.1,
        image_area: report.image_area,
        raster_bias: report.raster_bias,
        loss_estimate: report.loss_estimate,
        measure_loss_bound_constant: report.measure_loss_bound_constant,
        loss_bound: report.loss_bound,
        bound_check: report.bound_check,
        passed: failures.is_empty(),
    };
    if let Some(path) = report_path {
        write_json(path, &file)?;
    }
    if let Some(path) = svg_path {
        let pad = 0.25 * set.bbox().circumradius() + report.strip_width_bound;
        let mut stream = SampleStream::new(seed ^ 0x7376675f);
        let scene = SvgScene {
            strip: &strip,
            bbox: set.bbox().inflate(pad),
            px,
            tol: cfg.tol,
            draw_planes: strip.func().piece_count() <= 64,
            points: set.boundary_sample(600, &mut stream),
        };
        let (svg, _) = render_svg(&scene)?;
        std::fs::write(path, svg)
            .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display())))?;
    }
    print_summary(&file)?;
    if !failures.is_empty() {
        return Err(CliError::invariant(failures.join("; ")));
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyFuncOutput {
    pieces: usize,
    lip: f64,
    pairs_checked: usize,
    contraction_violations: usize,
    max_displacement: f64,
    displacement_bound: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyCoverOutput {
    target: String,
    strips: usize,
    claimed_width_bound: f64,
    recomputed_width_bound: f64,
    containment_samples: usize,
    containment_violations: Option<usize>,
    passed: bool,
}

pub fn cmd_verify(
    func: Option<&Path>,
    cover: Option<&Path>,
    samples: usize,
    seed: u64,
    dim: Option<usize>,
) -> Result<(), CliError> {
    if func.is_none() && cover.is_none() {
        return Err(CliError::precondition(
            "verify needs --func or --cover".into(),
        ));
    }
    if let Some(path) = func {
        verify_func(path, samples, seed, dim)?;
    }
    if let Some(path) = cover {
        verify_cover(path, samples, seed)?;
    }
    Ok(())
}

/// Samples pairs in a window spanning the kink region and rechecks the
/// contraction and displacement bounds of the proximal map.
fn verify_func(path: &Path, samples: usize, seed: u64, dim: Option<usize>) -> Result<(), CliError> {
    let f = read_func(path)?;
    check_dim(&f, dim)?;
    let strip = GenStrip::new(f);
    let f = strip.func();
    let tol = Tolerances::default();
    let radius = 2.0 * f.lip() + 1.0;
    let low = Point::from_slice(&vec![-radius; f.dim()]);
    let high = Point::from_slice(&vec![radius; f.dim()]);
    let window = BoundingBox::new(low, high)?;
    let mut stream = SampleStream::new(seed);
    let mut contraction_violations = 0;
    let mut max_displacement: f64 = 0.0;
    let pairs = samples.max(1);
    for _ in 0..pairs {
        let x = gstrip_core::geom::sample_box(&window, &mut stream);
        let z = gstrip_core::geom::sample_box(&window, &mut stream);
        let px = prox(f, &x, &tol)?.point;
        let pz = prox(f, &z, &tol)?.point;
        if px.dist(&pz) > x.dist(&z) + 1e-9 {
            contraction_violations += 1;
        }
        max_displacement = max_displacement.max(px.dist(&x)).max(pz.dist(&z));
    }
    let displacement_bound = f.lip() + 1e-9;
    let passed = contraction_violations == 0 && max_displacement <= displacement_bound;
    print_summary(&VerifyFuncOutput {
        pieces: f.piece_count(),
        lip: f.lip(),
        pairs_checked: pairs,
        contraction_violations,
        max_displacement,
        displacement_bound,
        passed,
    })?;
    if !passed {
        return Err(CliError::invariant(format!(
            "{contraction_violations} contraction violations, max displacement {max_displacement} \
             against bound {displacement_bound}"
        )));
    }
    Ok(())
}

/// Rechecks a cover file: the width-bound claim is validated during
/// parsing, and when the target description is a recognizable set the
/// cover is resampled for boundary containment.
fn verify_cover(path: &Path, samples: usize, seed: u64) -> Result<(), CliError> {
    let (file, strips) = read_cover(path)?;
    let recomputed: f64 = strips.iter().map(|s| s.width_bound()).sum();
    let tol = Tolerances::default();
    let mut containment_violations = None;
    if let Ok((set, _)) = parse_set(&file.target) {
        let mut stream = SampleStream::new(seed);
        let mut violations = 0;
        for p in set.boundary_sample(samples, &mut stream) {
            let mut covered = false;
            for s in &strips {
                if s.member(&p, &tol)? {
                    covered = true;
                    break;
                }
            }
            violations += usize::from(!covered);
        }
        containment_violations = Some(violations);
    }
    let passed = containment_violations.unwrap_or(0) == 0;
    print_summary(&VerifyCoverOutput {
        target: file.target.clone(),
        strips: strips.len(),
        claimed_width_bound: file.total_width_bound,
        recomputed_width_bound: recomputed,
        containment_samples: samples,
        containment_violations,
        passed,
    })?;
    if !passed {
        return Err(CliError::invariant(format!(
            "{} boundary samples escaped the cover",
            containment_violations.unwrap_or(0)
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct RenderOutput {
    width: usize,
    height: usize,
    regions: usize,
    strip_fraction: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_render(
    func: &Path,
    bbox: &str,
    out: &Path,
    px: usize,
    tol: Tolerances,
    planes: bool,
    dim: Option<usize>,
) -> Result<(), CliError> {
    let f = read_func(func)?;
    check_dim(&f, dim)?;
    let strip = GenStrip::new(f);
    let scene = SvgScene {
        strip: &strip,
        bbox: parse_bbox(bbox)?,
        px,
        tol,
        draw_planes: planes && strip.func().piece_count() <= 64,
        points: Vec::new(),
    };
    let (svg, stats) = render_svg(&scene)?;
    std::fs::write(out, svg)
        .map_err(|e| CliError::parse(format!("cannot write {}: {e}", out.display())))?;
    print_summary(&RenderOutput {
        width: stats.width,
        height: stats.height,
        regions: stats.regions,
        strip_fraction: stats.strip_fraction,
    })
}

#[derive(Serialize)]
struct OracleOutput {
    point: Vec<f64>,
    prox: Vec<f64>,
    oracle: Vec<f64>,
    deviation: f64,
}

pub fn cmd_oracle(
    func: &Path,
    point: &str,
    levels: usize,
    radius: Option<f64>,
    max_dev: Option<f64>,
    dim: Option<usize>,
) -> Result<(), CliError> {
    let f = read_func(func)?;
    check_dim(&f, dim)?;
    let x = parse_point(point, Some(f.dim()))?;
    let tol = Tolerances::default();
    let solved = prox(&f, &x, &tol)?.point;
    let grid_radius = radius.unwrap_or(2.0 * f.lip() + 1.0);
    let oracle = prox_oracle(&f, &x, grid_radius, levels)?;
    let deviation = solved.dist(&oracle);
    print_summary(&OracleOutput {
        point: x.as_slice().to_vec(),
        prox: solved.as_slice().to_vec(),
        oracle: oracle.as_slice().to_vec(),
        deviation,
    })?;
    if let Some(bound) = max_dev {
        if deviation > bound {
            return Err(CliError::invariant(format!(
                "solver and oracle disagree by {deviation}, above {bound}"
            )));
        }
    }
    Ok(())
}
