//! SVG 1.1 figures of strip decompositions.
//!
//! The raster colors each pixel by the sorted active-piece signature of
//! the proximal point, so the strip, its translation components and any
//! collapse regions appear as distinct flat regions. Boundaries between
//! strip and non-strip pixels are overdrawn as a thin path, and the
//! piece-equality hyperplanes of the image as dashed lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use gstrip_core::geom::{BoundingBox, Point};
use gstrip_core::gstrip::GenStrip;
use gstrip_core::polyfun::{prox, Tolerances};

use crate::CliError;

/// One renderable figure: a 2D window onto a strip with optional overlays.
pub struct SvgScene<'a> {
    pub strip: &'a GenStrip,
    pub bbox: BoundingBox,
    /// Raster width in pixels; height follows the window's aspect ratio.
    pub px: usize,
    pub tol: Tolerances,
    /// Dashed piece-equality lines of the image (skipped for large piece
    /// counts by the callers; the pair enumeration is quadratic).
    pub draw_planes: bool,
    /// Extra sample points, drawn as dots (for example boundary samples
    /// of the target set).
    pub points: Vec<Point>,
}

struct Pixel {
    signature: Vec<usize>,
    in_strip: bool,
}

/// Raster facts reported alongside the figure.
pub struct RenderStats {
    pub width: usize,
    pub height: usize,
    /// Distinct active-piece signatures seen across the raster.
    pub regions: usize,
    /// Fraction of pixels inside the strip.
    pub strip_fraction: f64,
}

pub fn render_svg(scene: &SvgScene) -> Result<(String, RenderStats), CliError> {
    if scene.bbox.dim() != 2 || scene.strip.dim() != 2 {
        return Err(CliError::precondition(
            "rendering is limited to two-dimensional scenes".into(),
        ));
    }
    if scene.px < 8 || scene.px > 4096 {
        return Err(CliError::precondition(format!(
            "raster width {} outside the supported range 8..=4096",
            scene.px
        )));
    }
    let (x0, y0) = (scene.bbox.low()[0], scene.bbox.low()[1]);
    let (x1, y1) = (scene.bbox.high()[0], scene.bbox.high()[1]);
    let w = scene.px;
    let h = ((w as f64 * (y1 - y0) / (x1 - x0)).round() as usize).max(8);
    let sx = (x1 - x0) / w as f64;
    let sy = (y1 - y0) / h as f64;

    let f = scene.strip.func();
    let rows: Result<Vec<Vec<Pixel>>, CliError> = (0..h)
        .into_par_iter()
        .map(|row| {
            // Rows scan top-down so the raster matches SVG pixel space.
            let y = y1 - (row as f64 + 0.5) * sy;
            let mut out = Vec::with_capacity(w);
            for col in 0..w {
                let x = x0 + (col as f64 + 0.5) * sx;
                let res = prox(f, &Point::xy(x, y), &scene.tol)?;
                let in_strip = !res.differentiable;
                out.push(Pixel {
                    signature: res.active,
                    in_strip,
                });
            }
            Ok(out)
        })
        .collect();
    let rows = rows?;

    let mut signatures: BTreeMap<&[usize], ()> = BTreeMap::new();
    let mut strip_pixels = 0usize;
    for pixels in &rows {
        for p in pixels {
            signatures.insert(&p.signature, ());
            strip_pixels += p.in_strip as usize;
        }
    }
    let stats = RenderStats {
        width: w,
        height: h,
        regions: signatures.len(),
        strip_fraction: strip_pixels as f64 / (w * h) as f64,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(svg, "<!-- gstrip {} -->", env!("CARGO_PKG_VERSION"));

    // Region layer: horizontal runs of equal signature, one rect per run.
    let _ = writeln!(svg, "<g shape-rendering=\"crispEdges\">");
    for (row, pixels) in rows.iter().enumerate() {
        let mut start = 0;
        while start < w {
            let mut end = start + 1;
            while end < w
                && pixels[end].signature == pixels[start].signature
                && pixels[end].in_strip == pixels[start].in_strip
            {
                end += 1;
            }
            let color = signature_color(&pixels[start].signature, pixels[start].in_strip);
            let _ = writeln!(
                svg,
                "<rect x=\"{start}\" y=\"{row}\" width=\"{}\" height=\"1\" fill=\"{color}\"/>",
                end - start
            );
            start = end;
        }
    }
    let _ = writeln!(svg, "</g>");

    boundary_layer(&mut svg, &rows, w, h);

    if scene.draw_planes {
        plane_layer(&mut svg, scene, w as f64, h as f64, x0, y1, sx, sy);
    }

    if !scene.points.is_empty() {
        let _ = writeln!(svg, "<g fill=\"#1a1a1a\">");
        for p in &scene.points {
            let cx = (p[0] - x0) / sx;
            let cy = (y1 - p[1]) / sy;
            let _ = writeln!(svg, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"1.1\"/>");
        }
        let _ = writeln!(svg, "</g>");
    }

    svg.push_str("</svg>\n");
    Ok((svg, stats))
}

/// Thin dark path along pixel edges where strip membership flips.
fn boundary_layer(svg: &mut String, rows: &[Vec<Pixel>], w: usize, h: usize) {
    let mut path = String::new();
    for row in 0..h {
        for col in 0..w {
            let here = rows[row][col].in_strip;
            if col + 1 < w && rows[row][col + 1].in_strip != here {
                let x = col + 1;
                let _ = write!(path, "M{x} {row}V{}", row + 1);
            }
            if row + 1 < h && rows[row + 1][col].in_strip != here {
                let y = row + 1;
                let _ = write!(path, "M{col} {y}H{}", col + 1);
            }
        }
    }
    if !path.is_empty() {
        let _ = writeln!(
            svg,
            "<path d=\"{path}\" stroke=\"#222222\" stroke-width=\"0.35\" fill=\"none\"/>"
        );
    }
}

/// Dashed piece-equality lines clipped to the window.
fn plane_layer(
    svg: &mut String,
    scene: &SvgScene,
    w: f64,
    h: f64,
    x0: f64,
    y1: f64,
    sx: f64,
    sy: f64,
) {
    let planes = scene.strip.image_hyperplanes(&scene.tol);
    let _ = writeln!(
        svg,
        "<g stroke=\"#333333\" stroke-width=\"0.8\" stroke-dasharray=\"5 4\" fill=\"none\">"
    );
    for entry in &planes.planes {
        let n = entry.plane.normal();
        let b = entry.plane.offset();
        // Intersections of <n, p> = b with the window edges, in pixel
        // coordinates; a line crosses a rectangle in at most two points.
        let corners = scene.bbox.corners();
        let mut hits: Vec<(f64, f64)> = Vec::new();
        let edges = [(0usize, 1usize), (1, 3), (3, 2), (2, 0)];
        for (a, bi) in edges {
            let pa = corners[a];
            let pb = corners[bi];
            let da = n.dot(&pa) - b;
            let db = n.dot(&pb) - b;
            if (da <= 0.0) == (db <= 0.0) || da == db {
                continue;
            }
            let t = da / (da - db);
            let px = pa[0] + t * (pb[0] - pa[0]);
            let py = pa[1] + t * (pb[1] - pa[1]);
            hits.push(((px - x0) / sx, (y1 - py) / sy));
        }
        hits.retain(|&(cx, cy)| cx >= -1.0 && cx <= w + 1.0 && cy >= -1.0 && cy <= h + 1.0);
        hits.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        if hits.len() >= 2 {
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>",
                hits[0].0, hits[0].1, hits[1].0, hits[1].1
            );
        }
    }
    let _ = writeln!(svg, "</g>");
}

/// Deterministic fill color for an active-piece signature. Strip pixels
/// get saturated tones, translation components light ones.
fn signature_color(signature: &[usize], in_strip: bool) -> String {
    let mut hash = 0xcbf29ce484222325u64;
    for &i in signature {
        hash = (hash ^ i as u64).wrapping_mul(0x100000001b3);
    }
    let hue = (hash % 360) as f64;
    let (s, l) = if in_strip { (0.68, 0.50) } else { (0.42, 0.86) };
    let (r, g, b) = hsl_to_rgb(hue, s, l);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to_byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to_byte(r), to_byte(g), to_byte(b))
}
