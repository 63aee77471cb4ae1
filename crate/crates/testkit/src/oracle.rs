//! Independent reference computations.
//!
//! Nothing here touches the production ROC, hull, or LP code. ROC points
//! come from direct counting, hull membership from pairwise segment
//! envelopes, and optima from grid enumeration, so agreement with the
//! solver is evidence rather than tautology.

use eqodds::data::{LabeledPredictions, LossSpec};

/// Resolution of the brute-force grid over (FPR, TPR) space.
pub const GRID_STEP: f64 = 0.02;
const CELLS: usize = 51;

fn group_names(data: &LabeledPredictions) -> Vec<String> {
    let mut names = Vec::new();
    for row in data.rows() {
        if !names.contains(&row.group) {
            names.push(row.group.clone());
        }
    }
    names
}

fn split_scores(data: &LabeledPredictions, group: &str) -> (Vec<f64>, Vec<f64>) {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for row in data.rows() {
        if row.group == group {
            if row.label == 0 {
                neg.push(row.score);
            } else {
                pos.push(row.score);
            }
        }
    }
    (neg, pos)
}

/// Empirical ROC points of one group by direct counting: one point per
/// distinct score threshold plus the two constant classifiers.
pub fn roc_points_direct(neg: &[f64], pos: &[f64]) -> Vec<[f64; 2]> {
    assert!(!neg.is_empty() && !pos.is_empty(), "degenerate group");
    let mut cuts: Vec<f64> = neg.iter().chain(pos).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut points = vec![[0.0, 0.0], [1.0, 1.0]];
    for c in cuts {
        let fp = neg.iter().filter(|s| **s >= c).count();
        let tp = pos.iter().filter(|s| **s >= c).count();
        points.push([fp as f64 / neg.len() as f64, tp as f64 / pos.len() as f64]);
    }
    points
}

/// Lower and upper boundaries of the convex hull of `points`, sampled at
/// the 51 grid abscissas. The upper boundary at x is the maximum over all
/// point-pair segments spanning x; the lower boundary is the minimum.
fn grid_envelopes(points: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    let mut lower = vec![f64::INFINITY; CELLS];
    let mut upper = vec![f64::NEG_INFINITY; CELLS];
    for i in 0..CELLS {
        let x = i as f64 * GRID_STEP;
        for (k, a) in points.iter().enumerate() {
            if (a[0] - x).abs() <= 1e-12 {
                upper[i] = upper[i].max(a[1]);
                lower[i] = lower[i].min(a[1]);
            }
            for b in &points[k + 1..] {
                let (p, q) = if a[0] <= b[0] { (a, b) } else { (b, a) };
                if x < p[0] - 1e-12 || x > q[0] + 1e-12 {
                    continue;
                }
                let span = q[0] - p[0];
                if span <= 1e-12 {
                    continue;
                }
                let t = ((x - p[0]) / span).clamp(0.0, 1.0);
                let y = p[1] + t * (q[1] - p[1]);
                upper[i] = upper[i].max(y);
                lower[i] = lower[i].min(y);
            }
        }
    }
    (lower, upper)
}

struct GridCosts {
    /// `cost[g][i][j]`; infinity marks cells outside group g's hull.
    cost: Vec<Vec<Vec<f64>>>,
    /// Constant part of the loss, added back after minimization.
    offset: f64,
}

fn grid_costs(data: &LabeledPredictions, loss: &LossSpec) -> GridCosts {
    let rows = data.rows();
    let n = rows.len() as f64;
    let n0 = rows.iter().filter(|r| r.label == 0).count();
    let n1 = rows.len() - n0;
    assert!(n0 > 0 && n1 > 0, "degenerate labels");
    let p0 = n0 as f64 / n;
    let p1 = n1 as f64 / n;

    let mut cost = Vec::new();
    for name in group_names(data) {
        let (neg, pos) = split_scores(data, &name);
        let points = roc_points_direct(&neg, &pos);
        let (lower, upper) = grid_envelopes(&points);
        let w_fp = loss.fp_cost * p0 * (neg.len() as f64 / n0 as f64);
        let w_tp = loss.fn_cost * p1 * (pos.len() as f64 / n1 as f64);
        let mut grid = vec![vec![f64::INFINITY; CELLS]; CELLS];
        for (i, col) in grid.iter_mut().enumerate() {
            for (j, cell) in col.iter_mut().enumerate() {
                let y = j as f64 * GRID_STEP;
                if y >= lower[i] - 1e-9 && y <= upper[i] + 1e-9 {
                    *cell = w_fp * (i as f64 * GRID_STEP) - w_tp * y;
                }
            }
        }
        cost.push(grid);
    }
    GridCosts {
        cost,
        offset: loss.fn_cost * p1,
    }
}

fn window_cells(alpha: f64) -> usize {
    assert!((0.0..=1.0).contains(&alpha));
    (alpha / GRID_STEP + 1e-9).floor() as usize
}

/// Brute-force optimum of the relaxed problem over the 0.02 grid: each
/// group picks an in-hull grid cell, and all picks must fit inside a
/// common window of `floor(alpha / 0.02)` cells per coordinate. Sliding a
/// window anchor over the grid enumerates exactly the combinations whose
/// pairwise index spans stay within the window, which for grid-aligned
/// alphas is exactly the relaxed constraint.
pub fn grid_oracle_loss(data: &LabeledPredictions, loss: &LossSpec, alpha: f64) -> f64 {
    let GridCosts { cost, offset } = grid_costs(data, loss);
    let w = window_cells(alpha);

    // Separable window minima: first over j, then over i.
    let window_min = |grid: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let mut rows_min = vec![vec![f64::INFINITY; CELLS]; CELLS];
        for (min_row, grid_row) in rows_min.iter_mut().zip(grid) {
            for (j0, out) in min_row.iter_mut().enumerate() {
                *out = grid_row[j0..(j0 + w + 1).min(CELLS)]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
            }
        }
        let mut full = vec![vec![f64::INFINITY; CELLS]; CELLS];
        for (i0, full_row) in full.iter_mut().enumerate() {
            for (j0, out) in full_row.iter_mut().enumerate() {
                *out = rows_min[i0..(i0 + w + 1).min(CELLS)]
                    .iter()
                    .map(|row| row[j0])
                    .fold(f64::INFINITY, f64::min);
            }
        }
        full
    };
    let minima: Vec<Vec<Vec<f64>>> = cost.iter().map(window_min).collect();

    let mut best = f64::INFINITY;
    for i0 in 0..CELLS {
        for j0 in 0..CELLS {
            let total: f64 = minima.iter().map(|m| m[i0][j0]).sum();
            best = best.min(total);
        }
    }
    best + offset
}

/// Literal form of the grid oracle for two-group data: enumerate every
/// pair of in-hull cells and keep those whose coordinate spans stay within
/// the window. Exponential in the group count, so only the validation
/// suite uses it, to confirm the windowed form.
pub fn grid_oracle_loss_literal(data: &LabeledPredictions, loss: &LossSpec, alpha: f64) -> f64 {
    let GridCosts { cost, offset } = grid_costs(data, loss);
    assert_eq!(cost.len(), 2, "literal oracle supports exactly two groups");
    let w = window_cells(alpha) as isize;

    let cells = |grid: &Vec<Vec<f64>>| -> Vec<(isize, isize, f64)> {
        let mut out = Vec::new();
        for (i, col) in grid.iter().enumerate() {
            for (j, &c) in col.iter().enumerate() {
                if c.is_finite() {
                    out.push((i as isize, j as isize, c));
                }
            }
        }
        out
    };
    let a = cells(&cost[0]);
    let b = cells(&cost[1]);
    let mut best = f64::INFINITY;
    for &(ia, ja, ca) in &a {
        for &(ib, jb, cb) in &b {
            if (ia - ib).abs() <= w && (ja - jb).abs() <= w {
                best = best.min(ca + cb);
            }
        }
    }
    best + offset
}

/// The accuracy at which the 0.02 grid can track the continuous optimum:
/// one grid step of movement in each coordinate, weighted by the loss.
pub fn lipschitz_slack(data: &LabeledPredictions, loss: &LossSpec) -> f64 {
    let rows = data.rows();
    let n1 = rows.iter().filter(|r| r.label == 1).count() as f64;
    let p1 = n1 / rows.len() as f64;
    GRID_STEP * (loss.fp_cost * (1.0 - p1) + loss.fn_cost * p1)
}

/// Unconstrained optimum by direct enumeration: each group independently
/// picks the threshold (any distinct score, or predicting all-negative)
/// with the lowest counted cost. Mixtures cannot beat the best threshold
/// because the loss is linear in the rates.
pub fn unprocessed_loss_oracle(data: &LabeledPredictions, loss: &LossSpec) -> f64 {
    let n = data.rows().len() as f64;
    let mut total = 0.0;
    for name in group_names(data) {
        let (neg, pos) = split_scores(data, &name);
        assert!(!neg.is_empty() && !pos.is_empty(), "degenerate group");
        let mut cuts: Vec<f64> = neg.iter().chain(&pos).copied().collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut best = loss.fn_cost * pos.len() as f64;
        for c in cuts {
            let fp = neg.iter().filter(|s| **s >= c).count() as f64;
            let fn_ = pos.iter().filter(|s| **s < c).count() as f64;
            best = best.min(loss.fp_cost * fp + loss.fn_cost * fn_);
        }
        total += best;
    }
    total / n
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 <= 1e-30 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Sutherland-Hodgman clip of one convex polygon by another. Both are
/// counterclockwise vertex lists; the result is the (possibly degenerate)
/// intersection, again counterclockwise.
pub fn convex_intersection(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = subject.to_vec();
    for e in 0..clip.len() {
        let a = clip[e];
        let b = clip[(e + 1) % clip.len()];
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let edge = [b[0] - a[0], b[1] - a[1]];
        let side = |p: [f64; 2]| edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0]);
        for i in 0..input.len() {
            let cur = input[i];
            let nxt = input[(i + 1) % input.len()];
            let s_cur = side(cur);
            let s_nxt = side(nxt);
            if s_cur >= -1e-12 {
                out.push(cur);
            }
            if (s_cur >= -1e-12) != (s_nxt >= -1e-12) {
                let d = [nxt[0] - cur[0], nxt[1] - cur[1]];
                let denom = edge[0] * d[1] - edge[1] * d[0];
                if denom.abs() > 1e-15 {
                    // A detected crossing has its intersection on the
                    // segment; clamping guards the near-parallel case where
                    // roundoff pushes the parameter outside it.
                    let t = (-s_cur / denom).clamp(0.0, 1.0);
                    out.push([cur[0] + t * d[0], cur[1] + t * d[1]]);
                }
            }
        }
    }
    dedupe_ring(out)
}

/// Collapses consecutive near-identical vertices (clipping two polygons
/// that share corners emits them) so downstream edge tests never see
/// micro-edges made of roundoff noise.
fn dedupe_ring(points: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|q| dist(*q, p) > 1e-9) {
            out.push(p);
        }
    }
    while out.len() > 1 && dist(out[0], *out.last().unwrap()) <= 1e-9 {
        out.pop();
    }
    out
}

/// Distance-tolerant membership in a convex counterclockwise polygon,
/// degrading gracefully for degenerate (segment or point) outputs of
/// clipping.
pub fn in_convex_polygon(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => dist(poly[0], p) <= tol,
        2 => dist_to_segment(p, poly[0], poly[1]) <= tol,
        m => {
            let area2: f64 = (0..m)
                .map(|i| {
                    let a = poly[i];
                    let b = poly[(i + 1) % m];
                    a[0] * b[1] - b[0] * a[1]
                })
                .sum();
            if area2.abs() <= 1e-12 {
                return (0..m).any(|i| dist_to_segment(p, poly[i], poly[(i + 1) % m]) <= tol);
            }
            (0..m).all(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % m];
                let len = dist(a, b);
                // Edges at roundoff scale have meaningless directions and
                // carry no area; the neighboring real edges decide.
                len <= 1e-9 || cross(a, b, p) >= -tol * len
            })
        }
    }
}
