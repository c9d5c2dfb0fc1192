//! Active-set solver for `min h(l) = |x - V l|^2 / 2 - <c, l>` over the
//! probability simplex.
//!
//! This is the dual of the proximal problem for `f = max_i (<v_i, .> + c_i)`:
//! the primal minimizer is `y = x - V l*` and the optimal weights certify
//! `x - y` as a convex combination of active gradients. The scheme is Wolfe's
//! minimum-norm-point dance adapted to the extra linear term: grow a working
//! set by the steepest vertex, minimize over its affine hull, step back to the
//! face when the affine minimizer leaves it, and drop zeroed indices.
//!
//! The duality gap at `l` equals `sum_i l_i (f(y) - f_i(y)) >= 0`, so the
//! termination test is a complementarity residual and the final face solve
//! makes the support's piece values agree to machine precision.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::Point;

/// Relative duality-gap tolerance for termination.
const GAP_TOL: f64 = 1e-12;
/// Pivot threshold (relative to the largest diagonal) below which the face
/// system is treated as rank-deficient.
const PIVOT_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub(crate) struct QpSolution {
    /// Support indices with strictly positive weights, ascending.
    pub weights: Vec<(usize, f64)>,
    /// `V l` = sum of weighted gradients; the proximal point is `x - combo`.
    pub combo: Point,
    /// Final duality gap `f(y) - sum_i l_i f_i(y)`.
    pub gap: f64,
    pub iterations: usize,
}

pub(crate) enum QpOutcome {
    Converged(QpSolution),
    /// Iteration cap reached; carries the best iterate seen.
    Stalled(QpSolution),
}

/// Result of minimizing the objective over the affine hull of a face.
enum FaceStep {
    /// Affine minimizer, as full barycentric weights over the working set.
    Minimizer(Vec<f64>),
    /// Unbounded descent direction within the affine hull (sums to zero).
    Ray(Vec<f64>),
}

/// Solves the face problem on working set `w`: minimize the objective over
/// `{sum mu_i = 1}` with support restricted to `w`. Reduces out the simplex
/// constraint against pivot `w[0]`, leaving normal equations `M z = b` with
/// `M = D^T D`, `D` the gradient differences. Rank-deficient systems get the
/// particular solution with free variables zero; inconsistent ones yield a
/// descent ray along the null space.
fn face_solve(grads: &[Point], offs: &[f64], x: &Point, w: &[usize]) -> FaceStep {
    let k = w.len();
    if k == 1 {
        return FaceStep::Minimizer(vec![1.0]);
    }
    let n = k - 1;
    let vp = grads[w[0]];
    let cp = offs[w[0]];
    let xp = *x - vp;

    // M = D^T D and b = D^T (x - v_p) + e, with D_t = v_t - v_p, e_t = c_t - c_p.
    let mut d: Vec<Point> = Vec::with_capacity(n);
    let mut b = vec![0.0; n];
    for t in 0..n {
        let col = grads[w[t + 1]] - vp;
        b[t] = col.dot(&xp) + (offs[w[t + 1]] - cp);
        d.push(col);
    }
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = d[i].dot(&d[j]);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }

    match solve_psd(&mut m, &mut b, n) {
        PsdSolve::Solved(z) => {
            let mut mu = Vec::with_capacity(k);
            let s: f64 = z.iter().sum();
            mu.push(1.0 - s);
            mu.extend_from_slice(&z);
            FaceStep::Minimizer(mu)
        }
        PsdSolve::Descent(nvec) => {
            let mut dir = Vec::with_capacity(k);
            let s: f64 = nvec.iter().sum();
            dir.push(-s);
            dir.extend_from_slice(&nvec);
            FaceStep::Ray(dir)
        }
    }
}

enum PsdSolve {
    Solved(Vec<f64>),
    /// `n` with `M n ~ 0` and `<b, n> > 0`: a strict descent direction.
    Descent(Vec<f64>),
}

/// Gaussian elimination with full pivoting on a symmetric PSD system,
/// rank-revealing. Consistent systems return the particular solution with
/// free variables set to zero; inconsistent ones return a descent ray.
fn solve_psd(m: &mut [f64], b: &mut [f64], n: usize) -> PsdSolve {
    let b0 = b.to_vec();
    let m0 = m.to_vec();
    let mut col_of = (0..n).collect::<Vec<_>>(); // col_of[slot] = original column
    let mut row_of = (0..n).collect::<Vec<_>>();
    let scale = (0..n)
        .map(|i| m[i * n + i])
        .fold(0.0f64, |a, x| if x > a { x } else { a })
        .max(1e-300);
    let tol = PIVOT_TOL * scale;

    let mut rank = n;
    for step in 0..n {
        // Full pivot search over the untouched block.
        let (mut pi, mut pj, mut pv) = (step, step, 0.0f64);
        for i in step..n {
            for j in step..n {
                let v = m[row_of[i] * n + col_of[j]].abs();
                if v > pv {
                    pv = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if pv <= tol {
            rank = step;
            break;
        }
        row_of.swap(step, pi);
        col_of.swap(step, pj);
        let prow = row_of[step];
        let pcol = col_of[step];
        let piv = m[prow * n + pcol];
        for i in (step + 1)..n {
            let r = row_of[i];
            let factor = m[r * n + pcol] / piv;
            if factor == 0.0 {
                continue;
            }
            for j in step..n {
                let c = col_of[j];
                m[r * n + c] -= factor * m[prow * n + c];
            }
            b[r] -= factor * b[prow];
        }
    }

    if rank < n {
        // Check consistency: remaining rows must have ~zero right-hand side.
        let rhs_scale = b0.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for i in rank..n {
            if b[row_of[i]].abs() > 1e-9 * rhs_scale {
                // Inconsistent: build a null vector through free column i and
                // orient it to descend. Null vector: x[free] = 1, solve the
                // rank x rank triangular block for the pivot variables.
                for free in rank..n {
                    let fcol = col_of[free];
                    let mut x = vec![0.0; n];
                    x[fcol] = 1.0;
                    for step in (0..rank).rev() {
                        let r = row_of[step];
                        let c = col_of[step];
                        let mut s = 0.0;
                        for j in (step + 1)..n {
                            let cj = col_of[j];
                            s += m[r * n + cj] * x[cj];
                        }
                        x[c] = -s / m[r * n + c];
                    }
                    // Verify it is a genuine descent null direction of the
                    // original system.
                    let bdotn: f64 = b0.iter().zip(&x).map(|(bi, xi)| bi * xi).sum();
                    let mut mn2 = 0.0f64;
                    for r in 0..n {
                        let mut s = 0.0;
                        for j in 0..n {
                            s += m0[r * n + j] * x[j];
                        }
                        mn2 += s * s;
                    }
                    let xn2: f64 = x.iter().map(|v| v * v).sum();
                    if bdotn.abs() > 1e-9 * rhs_scale * crate::math::sqrt(xn2.max(1e-30))
                        && mn2 <= 1e-14 * scale * scale * xn2
                    {
                        if bdotn < 0.0 {
                            for v in &mut x {
                                *v = -*v;
                            }
                        }
                        return PsdSolve::Descent(x);
                    }
                }
                break;
            }
        }
    }

    // Back substitution; free variables stay zero.
    let mut x = vec![0.0; n];
    for step in (0..rank).rev() {
        let r = row_of[step];
        let c = col_of[step];
        let mut s = b[r];
        for j in (step + 1)..n {
            let cj = col_of[j];
            s -= m[r * n + cj] * x[cj];
        }
        x[c] = s / m[r * n + c];
    }
    PsdSolve::Solved(x)
}

fn combo_of(grads: &[Point], w: &[usize], lam: &[f64], dim: usize) -> Point {
    let mut combo = Point::zeros(dim);
    for (i, &idx) in w.iter().enumerate() {
        combo = combo.axpy(lam[i], &grads[idx]);
    }
    combo
}

/// Evaluates all pieces at `y = x - combo`, returning the lowest argmax and
/// the weighted support value `sum_i l_i f_i(y)`.
fn gap_state(
    grads: &[Point],
    offs: &[f64],
    x: &Point,
    combo: &Point,
    w: &[usize],
    lam: &[f64],
) -> (usize, f64, f64) {
    let y = *x - *combo;
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, g) in grads.iter().enumerate() {
        let v = g.dot(&y) + offs[i];
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let mut support_val = 0.0;
    for (i, &idx) in w.iter().enumerate() {
        support_val += lam[i] * (grads[idx].dot(&y) + offs[idx]);
    }
    (best, best_val, support_val)
}

/// Minimizes `|x - V l|^2 / 2 - <c, l>` over the simplex.
///
/// `start` is the warm-start vertex (typically the argmax piece at `x`).
pub(crate) fn min_quadratic_over_simplex(
    grads: &[Point],
    offs: &[f64],
    x: &Point,
    start: usize,
    max_iter: usize,
) -> QpOutcome {
    let dim = x.dim();
    let mut w: Vec<usize> = vec![start];
    let mut lam: Vec<f64> = vec![1.0];
    let mut combo = grads[start];
    let mut iterations = 0usize;

    let mut best: Option<(f64, QpSolution)> = None;

    loop {
        let (jmax, fmax, sval) = gap_state(grads, offs, x, &combo, &w, &lam);
        let gap = fmax - sval;
        let scale = 1.0 + fmax.abs() + 0.5 * combo.norm2();

        let snapshot = |gap: f64, iterations: usize| {
            let mut weights: Vec<(usize, f64)> = w
                .iter()
                .copied()
                .zip(lam.iter().copied())
                .filter(|&(_, l)| l > 0.0)
                .collect();
            weights.sort_unstable_by_key(|&(i, _)| i);
            QpSolution {
                weights,
                combo,
                gap,
                iterations,
            }
        };

        if gap <= GAP_TOL * scale {
            return QpOutcome::Converged(snapshot(gap, iterations));
        }
        if best.as_ref().map_or(true, |(g, _)| gap < *g) {
            best = Some((gap, snapshot(gap, iterations)));
        }
        if iterations >= max_iter || w.contains(&jmax) {
            // Adding a vertex already in the working set cannot make progress;
            // report the best iterate seen.
            return QpOutcome::Stalled(best.map(|(_, s)| s).unwrap_or_else(|| snapshot(gap, 0)));
        }

        w.push(jmax);
        lam.push(0.0);

        // Minor cycles: pull the iterate to the face minimizer.
        loop {
            iterations += 1;
            match face_solve(grads, offs, x, &w) {
                FaceStep::Minimizer(mu) => {
                    if mu.iter().all(|&v| v >= -1e-14) {
                        lam = mu.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
                        let total: f64 = lam.iter().sum();
                        if total > 0.0 {
                            for v in &mut lam {
                                *v /= total;
                            }
                        }
                        drop_zeros(&mut w, &mut lam);
                        combo = combo_of(grads, &w, &lam, dim);
                        break;
                    }
                    // Step from lam toward mu until a coordinate hits zero.
                    let mut t = 1.0f64;
                    let mut block = usize::MAX;
                    for i in 0..w.len() {
                        let d = mu[i] - lam[i];
                        if d < 0.0 {
                            let ti = lam[i] / (lam[i] - mu[i]);
                            if ti < t {
                                t = ti;
                                block = i;
                            }
                        }
                    }
                    for i in 0..w.len() {
                        lam[i] += t * (mu[i] - lam[i]);
                    }
                    if block != usize::MAX {
                        lam[block] = 0.0;
                    }
                    drop_zeros(&mut w, &mut lam);
                    if w.len() == 1 {
                        lam = vec![1.0];
                        combo = grads[w[0]];
                        break;
                    }
                }
                FaceStep::Ray(dir) => {
                    // Walk the descent ray to the boundary of the face.
                    let mut t = f64::INFINITY;
                    let mut block = usize::MAX;
                    for i in 0..w.len() {
                        if dir[i] < -1e-300 {
                            let ti = -lam[i] / dir[i];
                            if ti < t {
                                t = ti;
                                block = i;
                            }
                        }
                    }
                    if !(t.is_finite()) || block == usize::MAX {
                        // No blocking coordinate: numerically spurious ray.
                        return QpOutcome::Stalled(
                            best.map(|(_, s)| s)
                                .expect("stall without any recorded iterate"),
                        );
                    }
                    for i in 0..w.len() {
                        lam[i] += t * dir[i];
                        if lam[i] < 0.0 {
                            lam[i] = 0.0;
                        }
                    }
                    lam[block] = 0.0;
                    drop_zeros(&mut w, &mut lam);
                    if w.len() == 1 {
                        lam = vec![1.0];
                        combo = grads[w[0]];
                        break;
                    }
                }
            }
            if iterations >= max_iter + w.len() + 2 {
                return QpOutcome::Stalled(
                    best.map(|(_, s)| s)
                        .expect("stall without any recorded iterate"),
                );
            }
        }
    }
}

fn drop_zeros(w: &mut Vec<usize>, lam: &mut Vec<f64>) {
    let mut i = 0;
    while i < w.len() {
        if lam[i] <= 0.0 && w.len() > 1 {
            w.swap_remove(i);
            lam.swap_remove(i);
        } else {
            i += 1;
        }
    }
}

/// Exhaustive face enumeration for small piece counts: solves every support
/// subset, keeps feasible candidates, and returns the best primal objective.
/// Used as a fallback when the active-set loop stalls and `m <= 12`.
pub(crate) fn enumerate_supports(grads: &[Point], offs: &[f64], x: &Point) -> Option<QpSolution> {
    let m = grads.len();
    debug_assert!(m <= 12);
    let dim = x.dim();
    let mut best: Option<(f64, QpSolution)> = None;
    for mask in 1u32..(1u32 << m) {
        let w: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if w.len() > dim + 1 {
            // An optimal dual vertex has support bounded by Caratheodory.
            continue;
        }
        let mu = match face_solve(grads, offs, x, &w) {
            FaceStep::Minimizer(mu) => mu,
            FaceStep::Ray(_) => continue,
        };
        if mu.iter().any(|&v| v < -1e-10) {
            continue;
        }
        let lam: Vec<f64> = mu.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = lam.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let lam: Vec<f64> = lam.iter().map(|v| v / total).collect();
        let combo = combo_of(grads, &w, &lam, dim);
        let y = *x - combo;
        let fval = grads
            .iter()
            .zip(offs)
            .map(|(g, c)| g.dot(&y) + c)
            .fold(f64::NEG_INFINITY, f64::max);
        let objective = fval + 0.5 * combo.norm2();
        if best.as_ref().map_or(true, |(o, _)| objective < *o) {
            let mut weights: Vec<(usize, f64)> = w
                .iter()
                .copied()
                .zip(lam.iter().copied())
                .filter(|&(_, l)| l > 0.0)
                .collect();
            weights.sort_unstable_by_key(|&(i, _)| i);
            let mut sval = 0.0;
            for &(i, l) in &weights {
                sval += l * (grads[i].dot(&y) + offs[i]);
            }
            best = Some((
                objective,
                QpSolution {
                    weights,
                    combo,
                    gap: fval - sval,
                    iterations: 0,
                },
            ));
        }
    }
    best.map(|(_, s)| s)
}
