//! Dense two-phase simplex for piece-domination linear programs.
//!
//! A piece `(v, c)` of a max-of-affine function is redundant exactly when
//! some convex combination of the remaining pieces matches its gradient and
//! reaches at least its offset:
//!
//! ```text
//! exists mu >= 0:  sum mu_j v_j = v,  sum mu_j = 1,  sum mu_j c_j >= c.
//! ```
//!
//! We maximize `sum mu_j c_j` under the equality constraints and report a
//! certificate only when the optimum clears `c` by the caller's margin and
//! the certificate re-verifies in plain arithmetic. A `None` answer is always
//! safe: the caller keeps the piece.
//!
//! The same program with an extra sign-free column `tau * (n, 0)` (cost
//! `tau * b`) decides domination restricted to the hyperplane `<n, x> = b`,
//! by LP duality; that variant backs the joint-activity filter for piece
//! pairs.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::Point;

const PIVOT_TOL: f64 = 1e-11;
/// Gradient-match residual allowed in a verified certificate, relative to
/// the gradient scale. Kept far below the offset margin so that certified
/// domination stays strict over any realistic evaluation domain.
const EQ_TOL: f64 = 1e-11;

/// Verified convex-combination certificate that a piece is redundant.
pub(crate) struct DominationCert {
    /// Sparse weights over the candidate pieces, ascending by index.
    pub weights: Vec<(usize, f64)>,
    /// Certified combined offset (including any free-column contribution).
    pub objective: f64,
    /// Residual of the re-verified gradient match.
    pub equality_residual: f64,
}

/// Searches for a convex combination of `(grads[j], offs[j])`, plus optional
/// sign-free directions `free_cols` of the form `(direction, cost)`, that
/// dominates the piece `(v, c)` by at least `margin`:
///
/// ```text
/// sum mu_j v_j + sum tau_k dir_k = v,   sum mu_j = 1,
/// sum mu_j c_j + sum tau_k cost_k >= c + margin.
/// ```
///
/// The certificate is re-verified independently of the solver state before
/// it is returned.
pub(crate) fn domination_certificate(
    grads: &[Point],
    offs: &[f64],
    free_cols: &[(Point, f64)],
    v: &Point,
    c: f64,
    margin: f64,
) -> Option<DominationCert> {
    let n = grads.len();
    if n == 0 {
        return None;
    }
    let d = v.dim();
    let m = d + 1;
    let nf = 2 * free_cols.len();
    let ntot = n + nf;

    // Column gradient/offset access: originals first, then +/- pairs for
    // each free direction. Free columns do not enter the simplex row.
    let col_grad = |j: usize, row: usize| -> f64 {
        if j < n {
            grads[j][row]
        } else {
            let (dir, _) = &free_cols[(j - n) / 2];
            if (j - n) % 2 == 0 {
                dir[row]
            } else {
                -dir[row]
            }
        }
    };
    let col_sum = |j: usize| -> f64 {
        if j < n {
            1.0
        } else {
            0.0
        }
    };
    let col_cost = |j: usize| -> f64 {
        if j < n {
            offs[j]
        } else {
            let (_, cost) = free_cols[(j - n) / 2];
            if (j - n) % 2 == 0 {
                cost
            } else {
                -cost
            }
        }
    };

    // Row scaling keeps the tableau well conditioned; scaling an equality row
    // by a positive factor leaves the constraint unchanged.
    let mut scale = vec![1.0f64; m];
    for row in 0..d {
        let mut mx = v[row].abs();
        for j in 0..ntot {
            mx = mx.max(col_grad(j, row).abs());
        }
        if mx > 0.0 {
            scale[row] = 1.0 / mx;
        }
    }

    // Tableau columns: ntot structural, m artificials, then the rhs.
    let width = ntot + m + 1;
    let mut t = vec![0.0f64; m * width];
    let at = |row: usize, col: usize| row * width + col;
    for row in 0..m {
        for j in 0..ntot {
            let a = if row < d { col_grad(j, row) } else { col_sum(j) };
            t[at(row, j)] = a * scale[row];
        }
        let b = if row < d { v[row] } else { 1.0 };
        t[at(row, ntot + m)] = b * scale[row];
        // Flip the row so the rhs is nonnegative for phase 1.
        if t[at(row, ntot + m)] < 0.0 {
            for col in 0..width {
                t[at(row, col)] = -t[at(row, col)];
            }
        }
        t[at(row, ntot + row)] = 1.0;
    }
    let mut basis: Vec<usize> = (ntot..ntot + m).collect();

    // Phase 1: drive the artificial variables to zero.
    let phase1_cost = |col: usize| if col >= ntot { -1.0 } else { 0.0 };
    if !run_simplex(&mut t, &mut basis, m, ntot + m, width, &phase1_cost, None) {
        return None;
    }
    let mut infeas = 0.0;
    for (row, &bv) in basis.iter().enumerate() {
        if bv >= ntot {
            infeas += t[at(row, ntot + m)];
        }
    }
    if infeas > 1e-9 {
        return None;
    }
    // Pivot leftover degenerate artificials out where possible; rows that
    // cannot be cleared are redundant constraints and stay inert because the
    // artificial column is never allowed to re-enter.
    for row in 0..m {
        if basis[row] >= ntot {
            for col in 0..ntot {
                if t[at(row, col)].abs() > PIVOT_TOL {
                    pivot(&mut t, &mut basis, m, width, row, col);
                    break;
                }
            }
        }
    }

    // Phase 2: maximize the combined offset, stopping early once the target
    // is cleared (simplex objectives never decrease between pivots).
    let cscale = {
        let mut mx = c.abs().max(1.0);
        for j in 0..ntot {
            mx = mx.max(col_cost(j).abs());
        }
        mx
    };
    let phase2_cost = |col: usize| {
        if col < ntot {
            col_cost(col) / cscale
        } else {
            0.0
        }
    };
    let target = (c + margin) / cscale;
    if !run_simplex(&mut t, &mut basis, m, ntot, width, &phase2_cost, Some(target)) {
        return None;
    }

    // Extract the basic solution.
    let mut x = vec![0.0f64; ntot];
    for (row, &bv) in basis.iter().enumerate() {
        if bv < ntot {
            x[bv] = t[at(row, ntot + m)];
        }
    }

    // Independent re-verification of the certificate in plain arithmetic.
    let mut combo = Point::zeros(d);
    let mut total = 0.0;
    let mut objective = 0.0;
    let mut weights = Vec::new();
    for (j, &w) in x.iter().enumerate() {
        if w != 0.0 {
            if j < n && w < 0.0 {
                return None;
            }
            for row in 0..d {
                combo[row] += w * col_grad(j, row);
            }
            total += w * col_sum(j);
            objective += w * col_cost(j);
            if j < n && w > 0.0 {
                weights.push((j, w));
            }
        }
    }
    if (total - 1.0).abs() > 1e-10 {
        return None;
    }
    let gscale = {
        let mut mx = v.norm().max(1.0);
        for j in 0..ntot {
            let mut s = 0.0;
            for row in 0..d {
                s += col_grad(j, row) * col_grad(j, row);
            }
            mx = mx.max(crate::math::sqrt(s));
        }
        mx
    };
    let equality_residual = (combo - *v).norm();
    if equality_residual > EQ_TOL * gscale {
        return None;
    }
    if objective < c + 0.5 * margin {
        return None;
    }
    Some(DominationCert {
        weights,
        objective,
        equality_residual,
    })
}

/// Primal simplex with Bland's rule on the dense tableau. `ncols` limits the
/// columns eligible to enter (phase 2 excludes artificials). Returns false if
/// the iteration cap is hit or the problem is unbounded; the caller treats
/// false as "no certificate", which is always safe.
fn run_simplex<C: Fn(usize) -> f64>(
    t: &mut [f64],
    basis: &mut [usize],
    m: usize,
    ncols: usize,
    width: usize,
    cost: &C,
    early_target: Option<f64>,
) -> bool {
    let rhs = width - 1;
    let cap = 50 * (ncols + m) + 200;
    for _ in 0..cap {
        if let Some(target) = early_target {
            let z: f64 = basis
                .iter()
                .enumerate()
                .map(|(row, &bv)| cost(bv) * t[row * width + rhs])
                .sum();
            if z >= target {
                return true;
            }
        }
        // Reduced costs r_j = c_j - c_B (B^-1 a_j), with B^-1 a_j read off
        // the canonical tableau column.
        let mut entering = None;
        'cols: for col in 0..ncols {
            if basis.contains(&col) {
                continue;
            }
            let mut r = cost(col);
            for (row, &bv) in basis.iter().enumerate() {
                r -= cost(bv) * t[row * width + col];
            }
            if r > PIVOT_TOL {
                entering = Some(col);
                break 'cols;
            }
        }
        let Some(col) = entering else {
            return true;
        };
        // Min-ratio leaving row, ties broken by lowest basis index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for row in 0..m {
            let a = t[row * width + col];
            if a > PIVOT_TOL {
                let ratio = t[row * width + rhs] / a;
                match leave {
                    None => leave = Some((row, ratio)),
                    Some((lrow, lratio)) => {
                        if ratio < lratio - 1e-15
                            || (ratio <= lratio + 1e-15 && basis[row] < basis[lrow])
                        {
                            leave = Some((row, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return false;
        };
        pivot(t, basis, m, width, row, col);
    }
    false
}

fn pivot(t: &mut [f64], basis: &mut [usize], m: usize, width: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for c in 0..width {
        t[row * width + c] /= p;
    }
    for r in 0..m {
        if r != row {
            let factor = t[r * width + col];
            if factor != 0.0 {
                for c in 0..width {
                    t[r * width + c] -= factor * t[row * width + c];
                }
            }
        }
    }
    basis[row] = col;
}
