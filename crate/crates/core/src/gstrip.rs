//! Generalized strips.
//!
//! The generalized strip of a polyhedral function `f` is the set of points
//! `x` where `f` is not differentiable at `prox(f, x)`. Classical strips
//! embed exactly (`f = |<v, x> + c|` with `|v| = width/2`), and two strips
//! merge into one whose function is
//!
//! ```text
//! h = max_{i,j} (f_i + g_j + <v_i, u_j>),
//! ```
//!
//! which satisfies `lip(h) <= lip(f) + lip(g)` and contains both inputs.
//! Width is tracked as the representation bound `2 * lip(f)`; the true
//! infimum over all representations is not computed.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{AffineFunc, ClassicalStrip, Hyperplane, Point, SampleStream};
use crate::lp::domination_certificate;
use crate::polyfun::{differentiable_at, prox, PolyhedralFunc, Tolerances};

/// Default bound on piece counts after pruning in `merge` / `merge_all`.
pub const DEFAULT_PIECE_CAP: usize = 4096;

/// Hard bound on the raw product size a single merge may build.
const MERGE_PRODUCT_LIMIT: usize = 1 << 22;

/// Pairs beyond this count skip the exact joint-activity filter in
/// `image_hyperplanes` (the unfiltered set is still a valid superset).
const ACTIVITY_FILTER_LIMIT: usize = 2000;

/// A generalized strip `S(f)` together with its certified width bound.
#[derive(Clone, Debug)]
pub struct GenStrip {
    f: PolyhedralFunc,
    width_bound: f64,
}

/// One hyperplane containing part of the prox image, with the piece pairs
/// that generate it.
#[derive(Clone, Debug)]
pub struct ImagePlane {
    pub plane: Hyperplane,
    /// Generating piece pairs `(i, j)` with distinct gradients, ascending.
    pub pairs: Vec<(usize, usize)>,
}

/// The hyperplanes `{x : f_i(x) = f_j(x)}` over jointly active piece pairs
/// with distinct gradients; their union contains `prox(f, S(f))`.
#[derive(Clone, Debug)]
pub struct ImageHyperplanes {
    pub planes: Vec<ImagePlane>,
}

impl GenStrip {
    /// Wraps a polyhedral function as the strip `S(f)`.
    pub fn new(f: PolyhedralFunc) -> Self {
        let width_bound = 2.0 * f.lip();
        GenStrip { f, width_bound }
    }

    /// Embeds a classical strip `{|<n, x> - b| <= w/2}` as `S(f)` for
    /// `f = |<v, x> + c|` with `v = (w/2) n` and `c = -(w/2) b`; membership
    /// in `S(f)` then coincides with the slab inequality and the width
    /// bound equals `w`.
    pub fn from_classical(s: &ClassicalStrip) -> Result<GenStrip> {
        if !(s.width() > 0.0) {
            return Err(Error::Precondition("strip width must be positive".into()));
        }
        let half = s.width() / 2.0;
        let v = *s.normal() * half;
        let c = -half * s.center();
        let f = PolyhedralFunc::new(
            s.dim(),
            [AffineFunc::new(v, c), AffineFunc::new(-v, -c)].into(),
        )?;
        Ok(GenStrip::new(f))
    }

    pub fn func(&self) -> &PolyhedralFunc {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `2 * lip(f)`, an upper bound on the width of the strip.
    pub fn width_bound(&self) -> f64 {
        self.width_bound
    }

    /// Membership: `f` is not differentiable at `prox(f, x)`.
    pub fn member(&self, x: &Point, tol: &Tolerances) -> Result<bool> {
        let res = prox(&self.f, x, tol)?;
        Ok(!differentiable_at(&self.f, &res.point, tol))
    }

    /// Merges two strips with the default piece cap.
    pub fn merge(&self, other: &GenStrip) -> Result<GenStrip> {
        self.merge_with_cap(other, DEFAULT_PIECE_CAP)
    }

    /// Builds `h = max_{i,j} (f_i + g_j + <v_i, u_j>)`, prunes redundant
    /// pieces, and errors if more than `cap` pieces remain.
    pub fn merge_with_cap(&self, other: &GenStrip, cap: usize) -> Result<GenStrip> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let m = self.f.piece_count();
        let n = other.f.piece_count();
        if m.saturating_mul(n) > MERGE_PRODUCT_LIMIT {
            return Err(Error::Budget(format!(
                "merge product {m} x {n} exceeds the construction limit; \
                 merge smaller groups first"
            )));
        }
        let mut pieces = Vec::with_capacity(m * n);
        for a in self.f.pieces() {
            for b in other.f.pieces() {
                let grad = a.gradient + b.gradient;
                let off = a.offset + b.offset + a.gradient.dot(&b.gradient);
                pieces.push(AffineFunc::new(grad, off));
            }
        }
        let mut h = prune(&PolyhedralFunc::new(self.dim(), pieces)?);
        if h.piece_count() > cap {
            // A wider certificate search may still fit under the cap.
            h = prune_with_ladder(&h, &[512, 4096]);
        }
        if h.piece_count() > cap {
            return Err(Error::Budget(format!(
                "merged strip has {} pieces after pruning, cap is {cap}; \
                 merge in balanced order or raise the cap",
                h.piece_count()
            )));
        }
        Ok(GenStrip::new(h))
    }

    /// The piece-equality hyperplanes that contain the prox image of the
    /// strip. Pairs whose pieces are certified never jointly active are
    /// dropped; parallel duplicates are reported once with merged
    /// provenance.
    pub fn image_hyperplanes(&self, tol: &Tolerances) -> ImageHyperplanes {
        let pieces = self.f.pieces();
        let m = pieces.len();
        let mut distinct: Vec<(usize, usize)> = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let dg = pieces[i].gradient - pieces[j].gradient;
                if dg.norm() > tol.grad_tol {
                    distinct.push((i, j));
                }
            }
        }
        let filter = distinct.len() <= ACTIVITY_FILTER_LIMIT;
        let cscale = pieces
            .iter()
            .fold(1.0f64, |acc, p| acc.max(p.offset.abs()));

        let mut planes: Vec<ImagePlane> = Vec::new();
        for (i, j) in distinct {
            if filter && !self.pair_active(i, j, 1e-8 * cscale) {
                continue;
            }
            let n = pieces[i].gradient - pieces[j].gradient;
            let b = pieces[j].offset - pieces[i].offset;
            let Ok(plane) = Hyperplane::new(n, b) else {
                continue;
            };
            let plane = plane.canonical();
            let mut merged = false;
            for known in planes.iter_mut() {
                if (*known.plane.normal() - *plane.normal()).norm() <= 1e-9
                    && (known.plane.offset() - plane.offset()).abs()
                        <= 1e-9 * (1.0 + plane.offset().abs())
                {
                    known.pairs.push((i, j));
                    merged = true;
                    break;
                }
            }
            if !merged {
                planes.push(ImagePlane {
                    plane,
                    pairs: [(i, j)].into(),
                });
            }
        }
        ImageHyperplanes { planes }
    }

    /// Whether pieces `i` and `j` can be simultaneously active. Certified
    /// exclusion requires the other pieces to beat the tie value by
    /// `margin` everywhere on the tie hyperplane; inconclusive answers
    /// count as active (a superset of planes stays correct).
    fn pair_active(&self, i: usize, j: usize, margin: f64) -> bool {
        let pieces = self.f.pieces();
        let mut grads = Vec::with_capacity(pieces.len() - 2);
        let mut offs = Vec::with_capacity(pieces.len() - 2);
        for (k, p) in pieces.iter().enumerate() {
            if k != i && k != j {
                grads.push(p.gradient);
                offs.push(p.offset);
            }
        }
        if grads.is_empty() {
            return true;
        }
        let mid_grad = (pieces[i].gradient + pieces[j].gradient) * 0.5;
        let mid_off = 0.5 * (pieces[i].offset + pieces[j].offset);
        // On the tie hyperplane <v_i - v_j, x> = c_j - c_i the combination
        // sum mu_l f_l + tau (f_i - f_j) is still a bound on max f_l, which
        // adds the free column tau * (v_i - v_j) with objective
        // tau * (c_i - c_j).
        let dir = pieces[i].gradient - pieces[j].gradient;
        let cost = pieces[i].offset - pieces[j].offset;
        domination_certificate(
            &grads,
            &offs,
            &[(dir, cost)],
            &mid_grad,
            mid_off,
            margin,
        )
        .is_none()
    }
}

/// Balanced binary merge of all strips under one piece cap.
pub fn merge_all(strips: &[GenStrip], cap: usize) -> Result<GenStrip> {
    if strips.is_empty() {
        return Err(Error::Precondition("merge_all needs at least one strip".into()));
    }
    let dim = strips[0].dim();
    for s in strips {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
    }
    let mut layer: Vec<GenStrip> = strips.to_vec();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len() / 2 + 1);
        let mut it = layer.chunks(2);
        for pair in &mut it {
            match pair {
                [a, b] => next.push(a.merge_with_cap(b, cap)?),
                [a] => next.push(a.clone()),
                _ => unreachable!(),
            }
        }
        layer = next;
    }
    Ok(layer.pop().expect("nonempty"))
}

/// Sum of width bounds over a cover: a certified upper bound on the strip
/// measure of anything the cover contains. Empty covers cost 0.
pub fn gamma_upper_bound(cover: &[GenStrip]) -> f64 {
    cover.iter().map(|s| s.width_bound()).sum()
}

/// Removes pieces that are provably redundant: exact duplicates and pieces
/// whose graph lies below a certified convex combination of nearby others.
/// The returned function evaluates identically to the input (certified
/// domination holds strictly), and pruning is skipped whenever a certificate
/// is inconclusive, so the result may keep more pieces than the minimum but
/// never fewer.
pub fn prune(f: &PolyhedralFunc) -> PolyhedralFunc {
    prune_with_ladder(f, &[48, 512])
}

/// Certificate support has at most `dim + 1` pieces and its gradients hull
/// the candidate's, so dominators cluster near the candidate in gradient
/// space; the ladder widens the searched neighborhood on a miss.
fn prune_with_ladder(f: &PolyhedralFunc, ladder: &[usize]) -> PolyhedralFunc {
    let mut pieces = dedup_exact(f.pieces());
    if pieces.len() <= 1 {
        return PolyhedralFunc::new(f.dim(), pieces).expect("dedup keeps one piece");
    }

    let cscale = pieces
        .iter()
        .fold(1.0f64, |acc, p| acc.max(p.offset.abs()));
    let margin = 1e-8 * cscale;

    pieces = collapse_near_duplicates(pieces, margin);
    let m = pieces.len();
    if m <= 1 {
        return PolyhedralFunc::new(f.dim(), pieces).expect("collapse keeps one piece");
    }

    let keeper = winner_flags(f.dim(), &pieces);

    let index = GradIndex::build(&pieces);
    let mut alive = alloc::vec![true; m];
    let mut live = m;
    let mut near: Vec<u32> = Vec::new();
    // Each certified drop preserves the max pointwise, so later candidates
    // are tested against an equal function.
    for k in 0..m {
        if keeper[k] || live <= 1 {
            continue;
        }
        for &width in ladder {
            index.nearest(&pieces, &alive, k, width, &mut near);
            if near.is_empty() {
                break;
            }
            if certified_drop(&pieces, &near, k, margin) {
                alive[k] = false;
                live -= 1;
                break;
            }
            if near.len() >= live - 1 {
                break;
            }
        }
    }
    let kept: Vec<AffineFunc> = pieces
        .iter()
        .zip(&alive)
        .filter_map(|(p, &a)| a.then_some(*p))
        .collect();
    PolyhedralFunc::new(f.dim(), kept).expect("prune keeps at least one piece")
}

fn certified_drop(pieces: &[AffineFunc], others: &[u32], k: usize, margin: f64) -> bool {
    let grads: Vec<Point> = others.iter().map(|&i| pieces[i as usize].gradient).collect();
    let offs: Vec<f64> = others.iter().map(|&i| pieces[i as usize].offset).collect();
    let cert = domination_certificate(
        &grads,
        &offs,
        &[],
        &pieces[k].gradient,
        pieces[k].offset,
        margin,
    );
    if let Some(cert) = &cert {
        debug_assert!(!cert.weights.is_empty());
        debug_assert!(cert.objective >= pieces[k].offset);
        debug_assert!(cert.equality_residual.is_finite());
    }
    cert.is_some()
}

/// Nearest-neighbor lookup over piece gradients: a uniform grid for low
/// dimensions at scale, a linear scan otherwise.
enum GradIndex {
    Scan,
    Grid {
        low: [f64; 3],
        cell: f64,
        map: BTreeMap<u64, Vec<u32>>,
        d: usize,
    },
}

impl GradIndex {
    fn build(pieces: &[AffineFunc]) -> GradIndex {
        let m = pieces.len();
        let d = pieces[0].gradient.dim();
        if m <= 4096 || d > 3 {
            return GradIndex::Scan;
        }
        let mut low = [f64::INFINITY; 3];
        let mut high = [f64::NEG_INFINITY; 3];
        for p in pieces {
            for k in 0..d {
                low[k] = low[k].min(p.gradient[k]);
                high[k] = high[k].max(p.gradient[k]);
            }
        }
        let mut extent: f64 = 0.0;
        let mut gscale: f64 = 1.0;
        for k in 0..d {
            extent = extent.max(high[k] - low[k]);
            gscale = gscale.max(low[k].abs()).max(high[k].abs());
        }
        let per_axis = match d {
            1 => m as f64,
            2 => crate::math::sqrt(m as f64),
            _ => crate::math::sqrt(crate::math::sqrt(m as f64) * crate::math::sqrt(m as f64) + 1.0),
        };
        let cell = (extent / per_axis.max(1.0)).max(1e-12 * gscale);
        let mut map: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for (idx, p) in pieces.iter().enumerate() {
            map.entry(Self::key(&p.gradient, &low, cell, d))
                .or_default()
                .push(idx as u32);
        }
        GradIndex::Grid { low, cell, map, d }
    }

    fn key(g: &Point, low: &[f64; 3], cell: f64, d: usize) -> u64 {
        let mut key = 0u64;
        for k in 0..d {
            let i = (((g[k] - low[k]) / cell) as i64).clamp(0, (1 << 20) - 1) as u64;
            key = (key << 21) | i;
        }
        key
    }

    /// Fills `out` with up to `want` live neighbors of piece `k`, nearest by
    /// gradient distance. The grid search expands rings until no unexplored
    /// ring can beat the current furthest pick.
    fn nearest(
        &self,
        pieces: &[AffineFunc],
        alive: &[bool],
        k: usize,
        want: usize,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let g = &pieces[k].gradient;
        let mut cand: Vec<(f64, u32)> = Vec::new();
        match self {
            GradIndex::Scan => {
                for (idx, p) in pieces.iter().enumerate() {
                    if idx != k && alive[idx] {
                        cand.push(((p.gradient - *g).norm2(), idx as u32));
                    }
                }
            }
            GradIndex::Grid { low, cell, map, d } => {
                let mut base = [0i64; 3];
                for a in 0..*d {
                    base[a] = (((g[a] - low[a]) / cell) as i64).clamp(0, (1 << 20) - 1);
                }
                let mut ring = 0i64;
                loop {
                    let mut in_bounds = false;
                    Self::for_ring(&base, ring, *d, |cellpos| {
                        let mut key = 0u64;
                        for a in 0..*d {
                            if cellpos[a] < 0 || cellpos[a] >= (1 << 20) {
                                return;
                            }
                            key = (key << 21) | cellpos[a] as u64;
                        }
                        in_bounds = true;
                        if let Some(ids) = map.get(&key) {
                            for &idx in ids {
                                if idx as usize != k && alive[idx as usize] {
                                    cand.push((
                                        (pieces[idx as usize].gradient - *g).norm2(),
                                        idx,
                                    ));
                                }
                            }
                        }
                    });
                    // A cell at ring r+1 holds no point closer than r*cell,
                    // so the k-th pick is final once it is at most that.
                    if cand.len() >= want {
                        let kth = kth_smallest(&mut cand, want - 1);
                        if crate::math::sqrt(kth) <= ring as f64 * cell {
                            break;
                        }
                    }
                    // Rings past the grid span stay out of bounds forever.
                    if !in_bounds && ring > 0 {
                        break;
                    }
                    ring += 1;
                }
            }
        }
        let take = want.min(cand.len());
        if take == 0 {
            return;
        }
        kth_smallest(&mut cand, take - 1);
        cand.truncate(take);
        cand.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
        out.extend(cand.iter().map(|&(_, i)| i));
    }

    /// Visits every cell whose Chebyshev distance from `base` is exactly
    /// `ring`.
    fn for_ring(base: &[i64; 3], ring: i64, d: usize, mut visit: impl FnMut(&[i64; 3])) {
        let mut pos = [0i64; 3];
        match d {
            1 => {
                if ring == 0 {
                    visit(base);
                } else {
                    pos = *base;
                    pos[0] = base[0] - ring;
                    visit(&pos);
                    pos[0] = base[0] + ring;
                    visit(&pos);
                }
            }
            2 => {
                if ring == 0 {
                    visit(base);
                    return;
                }
                for dx in -ring..=ring {
                    pos[0] = base[0] + dx;
                    if dx.abs() == ring {
                        for dy in -ring..=ring {
                            pos[1] = base[1] + dy;
                            visit(&pos);
                        }
                    } else {
                        pos[1] = base[1] - ring;
                        visit(&pos);
                        pos[1] = base[1] + ring;
                        visit(&pos);
                    }
                }
            }
            _ => {
                for dx in -ring..=ring {
                    pos[0] = base[0] + dx;
                    for dy in -ring..=ring {
                        pos[1] = base[1] + dy;
                        if dx.abs() == ring || dy.abs() == ring {
                            for dz in -ring..=ring {
                                pos[2] = base[2] + dz;
                                visit(&pos);
                            }
                        } else {
                            pos[2] = base[2] - ring;
                            visit(&pos);
                            pos[2] = base[2] + ring;
                            visit(&pos);
                        }
                    }
                }
            }
        }
    }
}

/// Value of the `k`-th smallest key after partially partitioning `cand`
/// so entries `0..=k` are the `k + 1` smallest.
fn kth_smallest(cand: &mut [(f64, u32)], k: usize) -> f64 {
    cand.select_nth_unstable_by(k, |a, b| {
        a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal)
    });
    cand[k].0
}

/// Collapses gradient clusters closer than the certificate tolerance: merge
/// products of same-direction slabs breed thousands of pieces whose
/// gradients differ only in accumulated rounding, and they crowd the
/// neighborhood search. Within each cluster the highest offset dominates
/// the rest through a single-column certificate; inconclusive members stay.
fn collapse_near_duplicates(pieces: Vec<AffineFunc>, margin: f64) -> Vec<AffineFunc> {
    let gmax = pieces
        .iter()
        .fold(0.0f64, |acc, p| acc.max(p.gradient.norm()));
    let q = 2e-12 * (1.0 + gmax);
    let mut sites: BTreeMap<[i64; 8], Vec<u32>> = BTreeMap::new();
    for (idx, p) in pieces.iter().enumerate() {
        let mut key = [0i64; 8];
        for (k, &c) in p.gradient.as_slice().iter().enumerate() {
            key[k] = (c / q) as i64;
        }
        sites.entry(key).or_default().push(idx as u32);
    }
    let mut drop = alloc::vec![false; pieces.len()];
    for members in sites.values() {
        if members.len() < 2 {
            continue;
        }
        let rep = *members
            .iter()
            .max_by(|&&a, &&b| {
                pieces[a as usize]
                    .offset
                    .partial_cmp(&pieces[b as usize].offset)
                    .expect("finite offsets")
            })
            .expect("nonempty site");
        let grads = [pieces[rep as usize].gradient];
        let offs = [pieces[rep as usize].offset];
        for &idx in members {
            if idx == rep {
                continue;
            }
            let p = &pieces[idx as usize];
            if domination_certificate(&grads, &offs, &[], &p.gradient, p.offset, margin)
                .is_some()
            {
                drop[idx as usize] = true;
            }
        }
    }
    pieces
        .into_iter()
        .zip(&drop)
        .filter_map(|(p, &d)| (!d).then_some(p))
        .collect()
}

/// Drops bitwise-duplicate gradients, keeping the highest offset (lower
/// copies are dominated by the survivor alone). Order is otherwise stable.
fn dedup_exact(pieces: &[AffineFunc]) -> Vec<AffineFunc> {
    let mut best: BTreeMap<[u64; 8], (usize, f64)> = BTreeMap::new();
    for (idx, p) in pieces.iter().enumerate() {
        let mut key = [0u64; 8];
        for (k, &c) in p.gradient.as_slice().iter().enumerate() {
            key[k] = c.to_bits();
        }
        match best.get_mut(&key) {
            Some(entry) => {
                if p.offset > entry.1 {
                    *entry = (idx, p.offset);
                }
            }
            None => {
                best.insert(key, (idx, p.offset));
            }
        }
    }
    let mut keep: Vec<usize> = best.values().map(|&(idx, _)| idx).collect();
    keep.sort_unstable();
    keep.iter().map(|&idx| pieces[idx]).collect()
}

/// Marks pieces that strictly win at some probe point; such pieces cannot be
/// dominated, so their linear programs are skipped. Marking too few pieces
/// only costs time, never correctness.
fn winner_flags(dim: usize, pieces: &[AffineFunc]) -> Vec<bool> {
    let m = pieces.len();
    let gscale = pieces.iter().fold(1.0f64, |acc, p| acc.max(p.gradient.norm()));
    let cscale = pieces.iter().fold(1.0f64, |acc, p| acc.max(p.offset.abs()));
    let radius = 10.0 * (1.0 + cscale / gscale);

    let mut probes: Vec<Point> = Vec::new();
    probes.push(Point::zeros(dim));
    if m <= 1024 {
        for p in pieces {
            if let Ok(dir) = p.gradient.normalized() {
                probes.push(dir * radius);
            }
        }
    }
    let mut stream = SampleStream::new(0x5EED);
    // Cap total evaluation work near 2e8 so huge merge products stay cheap;
    // unmarked winners are still kept, they just cost a certificate attempt.
    let budget = ((200_000_000 / m).max(64)).min(4096);
    let random = (4 * m).min(budget);
    for _ in 0..random {
        probes.push(stream.unit_vector(dim) * radius);
    }

    let mut flags = alloc::vec![false; m];
    for x in &probes {
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        let mut arg = 0;
        for (idx, p) in pieces.iter().enumerate() {
            let v = p.eval(x);
            if v > best {
                second = best;
                best = v;
                arg = idx;
            } else if v > second {
                second = v;
            }
        }
        if best > second + 1e-9 * (1.0 + best.abs()) {
            flags[arg] = true;
        }
    }
    flags
}
