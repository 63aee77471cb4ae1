//! The relaxed equalized-odds linear program.
//!
//! Each group's operating point is a convex combination of its ROC hull
//! vertices; the combination weights are the LP variables. The objective is
//! the prevalence-weighted misclassification cost of the global operating
//! point, and the constraint bounds every pairwise group difference in FPR
//! and TPR by the slack `alpha`. Unprocessing is the unconstrained special
//! case and reduces to independent per-group vertex minimizations.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{prevalences, LabeledPredictions, LossSpec, Prevalences};
use crate::error::{Error, Result};
use crate::lp;
use crate::roc::{
    build_hull, build_roc, contains, decompose, MixtureEntry, RocCurve, RocHull, RocPoint,
    VertexMixture,
};

/// The slack of the relaxed constraint: a finite bound in `[0, 1]` or the
/// distinguished unconstrained marker used for unprocessing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Bounded(f64),
    Unconstrained,
}

impl Alpha {
    /// A finite slack, validated to lie in `[0, 1]`.
    pub fn bounded(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain {
                line: 0,
                reason: format!("alpha {alpha} not in [0, 1]"),
            });
        }
        Ok(Alpha::Bounded(alpha))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Alpha::Bounded(a) => Some(*a),
            Alpha::Unconstrained => None,
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Bounded(a) => serializer.serialize_f64(*a),
            Alpha::Unconstrained => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Name(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(a) => Alpha::bounded(a).map_err(serde::de::Error::custom),
            Raw::Name(s) if s == "inf" => Ok(Alpha::Unconstrained),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("invalid alpha `{s}`"))),
        }
    }
}

/// Options controlling problem construction from raw data.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    /// When a group lacks positives or negatives its ROC is undefined. By
    /// default that aborts constrained solving; with this flag the group
    /// gets a diagonal segment hull and the constraints on its undefined
    /// coordinate are dropped.
    pub allow_degenerate_groups: bool,
}

/// A fully specified instance of the relaxed program.
#[derive(Debug, Clone)]
pub struct RelaxedProblem {
    pub hulls: Vec<RocHull>,
    pub prevalences: Prevalences,
    pub loss: LossSpec,
    pub alpha: Alpha,
}

impl RelaxedProblem {
    pub fn new(
        hulls: Vec<RocHull>,
        prevalences: Prevalences,
        loss: LossSpec,
        alpha: Alpha,
    ) -> Result<Self> {
        if hulls.is_empty() {
            return Err(Error::Domain {
                line: 0,
                reason: "problem requires at least one group hull".to_string(),
            });
        }
        if hulls.len() != prevalences.p_s_given_y.len() {
            return Err(Error::Domain {
                line: 0,
                reason: format!(
                    "{} hulls but prevalences describe {} groups",
                    hulls.len(),
                    prevalences.p_s_given_y.len()
                ),
            });
        }
        for (i, h) in hulls.iter().enumerate() {
            if hulls[..i].iter().any(|g| g.group == h.group) {
                return Err(Error::Domain {
                    line: 0,
                    reason: format!("duplicate group `{}` in hull list", h.group),
                });
            }
        }
        Ok(Self {
            hulls,
            prevalences,
            loss,
            alpha,
        })
    }

    /// Builds hulls and prevalences from a dataset.
    pub fn from_data(
        data: &LabeledPredictions,
        loss: LossSpec,
        alpha: Alpha,
        options: &SolverOptions,
    ) -> Result<Self> {
        let prev = prevalences(data)?;
        let geometry = group_geometry(data, options.allow_degenerate_groups)?;
        let hulls = geometry.into_iter().map(|(_, hull)| hull).collect();
        Self::new(hulls, prev, loss, alpha)
    }
}

/// Builds the ROC curve and hull of every group, in `group_index` order.
/// Degenerate groups either abort or receive the synthetic diagonal,
/// depending on `allow_degenerate`.
pub fn group_geometry(
    data: &LabeledPredictions,
    allow_degenerate: bool,
) -> Result<Vec<(RocCurve, RocHull)>> {
    data.group_index()
        .iter()
        .map(|group| match build_roc(data, group) {
            Ok(curve) => {
                let hull = build_hull(&curve);
                Ok((curve, hull))
            }
            Err(Error::DegenerateGroup { .. }) if allow_degenerate => {
                let hull = RocHull::degenerate_diagonal(group);
                let curve = RocCurve {
                    group: group.clone(),
                    thresholds: hull.vertex_thresholds.clone(),
                    points: hull.vertices.clone(),
                };
                Ok((curve, hull))
            }
            Err(e) => Err(e),
        })
        .collect()
}

/// The optimizer's answer: per-group operating points with their realizing
/// threshold mixtures, the global point, and certificates.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    /// Group identifiers, aligned with all per-group vectors below.
    pub groups: Vec<String>,
    pub group_points: Vec<RocPoint>,
    pub group_mixtures: Vec<VertexMixture>,
    pub global_point: RocPoint,
    pub expected_loss: f64,
    /// The maximum pairwise rate gap actually attained (over coordinates
    /// whose conditional rates are defined); 0 with fewer than two groups.
    pub certified_alpha: f64,
    pub alpha_requested: Alpha,
}

/// The prevalence-weighted global operating point.
pub fn global_point(points: &[RocPoint], prev: &Prevalences) -> RocPoint {
    let mut g = [0.0, 0.0];
    for (s, p) in points.iter().enumerate() {
        g[0] += prev.p_s_given_y[s][0] * p[0];
        g[1] += prev.p_s_given_y[s][1] * p[1];
    }
    g
}

/// Expected misclassification cost of a global operating point.
pub fn expected_loss_at(global: RocPoint, prev: &Prevalences, loss: &LossSpec) -> f64 {
    loss.fp_cost * prev.p_y[0] * global[0] + loss.fn_cost * prev.p_y[1] * (1.0 - global[1])
}

/// Maximum absolute pairwise difference across groups and coordinates,
/// restricted to cells marked defined.
pub(crate) fn max_pairwise_gap(points: &[RocPoint], defined: &[[bool; 2]]) -> f64 {
    let mut worst = 0.0f64;
    for y in 0..2 {
        for a in 0..points.len() {
            if !defined[a][y] {
                continue;
            }
            for b in a + 1..points.len() {
                if !defined[b][y] {
                    continue;
                }
                worst = worst.max((points[a][y] - points[b][y]).abs());
            }
        }
    }
    worst
}

fn defined_cells(prev: &Prevalences) -> Vec<[bool; 2]> {
    prev.p_s_given_y
        .iter()
        .map(|p| [p[0] > 0.0, p[1] > 0.0])
        .collect()
}

/// Per-vertex contribution of group `s` to the LP objective. The constant
/// `fn_cost * p_1` is omitted; it cancels in comparisons and the reported
/// loss is recomputed from the global point.
fn vertex_costs(hull: &RocHull, prev: &Prevalences, s: usize, loss: &LossSpec) -> Vec<f64> {
    let w0 = loss.fp_cost * prev.p_y[0] * prev.p_s_given_y[s][0];
    let w1 = loss.fn_cost * prev.p_y[1] * prev.p_s_given_y[s][1];
    hull.vertices
        .iter()
        .map(|v| w0 * v[0] - w1 * v[1])
        .collect()
}

/// Solves the relaxed program. With a finite `alpha` this is a two-stage
/// solve: minimize expected loss, then minimize the attained maximum gap
/// among (numerically) loss-optimal solutions. The unconstrained marker
/// delegates to [`unprocess`].
pub fn solve_relaxed(problem: &RelaxedProblem) -> Result<RelaxedSolution> {
    match problem.alpha {
        Alpha::Unconstrained => unprocess(&problem.hulls, &problem.prevalences, &problem.loss),
        Alpha::Bounded(alpha) => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::Domain {
                    line: 0,
                    reason: format!("alpha {alpha} not in [0, 1]"),
                });
            }
            solve_bounded(problem, alpha)
        }
    }
}

/// Unconstrained loss minimization: picks each group's cheapest hull vertex
/// (lowest index on ties), so every mixture is a single deterministic
/// threshold. The certified slack reports the disparity this incurs.
pub fn unprocess(
    hulls: &[RocHull],
    prev: &Prevalences,
    loss: &LossSpec,
) -> Result<RelaxedSolution> {
    let problem = RelaxedProblem::new(hulls.to_vec(), prev.clone(), *loss, Alpha::Unconstrained)?;
    let mut points = Vec::with_capacity(hulls.len());
    let mut mixtures = Vec::with_capacity(hulls.len());
    for (s, hull) in problem.hulls.iter().enumerate() {
        let costs = vertex_costs(hull, &problem.prevalences, s, loss);
        let mut best = 0;
        for (k, &c) in costs.iter().enumerate() {
            if c < costs[best] {
                best = k;
            }
        }
        points.push(hull.vertices[best]);
        mixtures.push(VertexMixture {
            entries: vec![MixtureEntry {
                vertex: best,
                weight: 1.0,
            }],
        });
    }
    Ok(assemble(&problem, points, mixtures, Alpha::Unconstrained))
}

/// Strict equalized odds: the relaxed program at `alpha = 0`. All group
/// points coincide at a point of the intersection of the hulls.
pub fn solve_strict(
    hulls: &[RocHull],
    prev: &Prevalences,
    loss: &LossSpec,
) -> Result<RelaxedSolution> {
    let problem = RelaxedProblem::new(hulls.to_vec(), prev.clone(), *loss, Alpha::Bounded(0.0))?;
    solve_relaxed(&problem)
}

struct Layout {
    offsets: Vec<usize>,
    n_weights: usize,
}

impl Layout {
    fn new(hulls: &[RocHull]) -> Self {
        let mut offsets = Vec::with_capacity(hulls.len());
        let mut n = 0;
        for hull in hulls {
            offsets.push(n);
            n += hull.vertices.len();
        }
        Self {
            offsets,
            n_weights: n,
        }
    }
}

/// Unordered group pairs and coordinates with both rates defined.
fn constraint_cells(prev: &Prevalences) -> Vec<(usize, usize, usize)> {
    let defined = defined_cells(prev);
    let n = defined.len();
    let mut cells = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for (y, (&da, &db)) in defined[a].iter().zip(&defined[b]).enumerate() {
                if da && db {
                    cells.push((a, b, y));
                }
            }
        }
    }
    cells
}

fn gap_row(
    layout: &Layout,
    hulls: &[RocHull],
    width: usize,
    a: usize,
    b: usize,
    y: usize,
) -> Vec<f64> {
    let mut row = vec![0.0; width];
    for (k, v) in hulls[a].vertices.iter().enumerate() {
        row[layout.offsets[a] + k] = v[y];
    }
    for (k, v) in hulls[b].vertices.iter().enumerate() {
        row[layout.offsets[b] + k] = -v[y];
    }
    row
}

fn convexity_rows(layout: &Layout, hulls: &[RocHull], width: usize) -> Vec<lp::Constraint> {
    hulls
        .iter()
        .enumerate()
        .map(|(s, hull)| {
            let mut row = vec![0.0; width];
            for k in 0..hull.vertices.len() {
                row[layout.offsets[s] + k] = 1.0;
            }
            lp::Constraint::eq(row, 1.0)
        })
        .collect()
}

fn solve_bounded(problem: &RelaxedProblem, alpha: f64) -> Result<RelaxedSolution> {
    let hulls = &problem.hulls;
    let prev = &problem.prevalences;
    let layout = Layout::new(hulls);
    let cells = constraint_cells(prev);

    let mut objective = vec![0.0; layout.n_weights];
    for (s, hull) in hulls.iter().enumerate() {
        let costs = vertex_costs(hull, prev, s, &problem.loss);
        objective[layout.offsets[s]..layout.offsets[s] + costs.len()].copy_from_slice(&costs);
    }

    // Stage 1: minimize expected loss subject to the gap constraints.
    let mut constraints = convexity_rows(&layout, hulls, layout.n_weights);
    for &(a, b, y) in &cells {
        let row = gap_row(&layout, hulls, layout.n_weights, a, b, y);
        let negated: Vec<f64> = row.iter().map(|v| -v).collect();
        constraints.push(lp::Constraint::le(row, alpha));
        constraints.push(lp::Constraint::le(negated, alpha));
    }
    let stage1 = lp::Problem {
        minimize: objective.clone(),
        constraints,
    };
    let sol1 = lp::solve(&stage1).map_err(lp_failure)?;

    // Stage 2: among (numerically) loss-optimal solutions, minimize the
    // attained maximum gap. The loss cap uses a slack of 1e-10, an order
    // below the 1e-9 optimality contract, so the tie-break can never push
    // the reported loss past that contract.
    let weights = if hulls.len() >= 2 && !cells.is_empty() {
        let tau = layout.n_weights;
        let width = layout.n_weights + 1;
        let mut constraints = convexity_rows(&layout, hulls, width);
        for &(a, b, y) in &cells {
            let mut row = gap_row(&layout, hulls, width, a, b, y);
            row[tau] = -1.0;
            let mut negated: Vec<f64> = row.iter().map(|v| -v).collect();
            negated[tau] = -1.0;
            constraints.push(lp::Constraint::le(row, 0.0));
            constraints.push(lp::Constraint::le(negated, 0.0));
        }
        let mut tau_bound = vec![0.0; width];
        tau_bound[tau] = 1.0;
        constraints.push(lp::Constraint::le(tau_bound, alpha));
        let mut loss_cap = vec![0.0; width];
        loss_cap[..layout.n_weights].copy_from_slice(&objective);
        constraints.push(lp::Constraint::le(loss_cap, sol1.objective + 1e-10));
        let mut minimize = vec![0.0; width];
        minimize[tau] = 1.0;
        let stage2 = lp::Problem {
            minimize,
            constraints,
        };
        let sol2 = lp::solve(&stage2).map_err(lp_failure)?;

        // Stage 3: the (loss, gap)-optimal face can still contain many
        // placements, and an arbitrary basic solution may park a group
        // strictly inside its hull. Maximizing total true-positive rate
        // over that face pushes every group onto its hull frontier, where
        // mixtures need at most two thresholds.
        let tau_star = sol2.objective.max(0.0);
        let mut constraints = convexity_rows(&layout, hulls, layout.n_weights);
        for &(a, b, y) in &cells {
            let row = gap_row(&layout, hulls, layout.n_weights, a, b, y);
            let negated: Vec<f64> = row.iter().map(|v| -v).collect();
            constraints.push(lp::Constraint::le(row, tau_star + 1e-10));
            constraints.push(lp::Constraint::le(negated, tau_star + 1e-10));
        }
        constraints.push(lp::Constraint::le(
            objective.clone(),
            sol1.objective + 1e-10,
        ));
        let mut minimize = vec![0.0; layout.n_weights];
        for (s, hull) in hulls.iter().enumerate() {
            for (k, v) in hull.vertices.iter().enumerate() {
                minimize[layout.offsets[s] + k] = -v[1];
            }
        }
        let stage3 = lp::Problem {
            minimize,
            constraints,
        };
        let sol3 = lp::solve(&stage3).map_err(lp_failure)?;
        sol3.x
    } else {
        sol1.x
    };

    // Extract per-group points, canonicalize their mixtures, and certify.
    let mut points = Vec::with_capacity(hulls.len());
    let mut mixtures = Vec::with_capacity(hulls.len());
    for (s, hull) in hulls.iter().enumerate() {
        let raw = &weights[layout.offsets[s]..layout.offsets[s] + hull.vertices.len()];
        let clamped: Vec<f64> = raw.iter().map(|w| w.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Solver(format!(
                "group `{}` weights sum to {total}, expected 1",
                hull.group
            )));
        }
        let mut target = [0.0, 0.0];
        for (k, w) in clamped.iter().enumerate() {
            target[0] += w / total * hull.vertices[k][0];
            target[1] += w / total * hull.vertices[k][1];
        }
        let mixture = decompose(hull, target).map_err(|e| {
            Error::Solver(format!(
                "could not realize optimal point for group `{}`: {e}",
                hull.group
            ))
        })?;
        // Snap the reported point to what the mixture actually realizes so
        // certification re-derives it exactly.
        let snapped = mixture.realize(hull);
        debug_assert!(contains(hull, snapped, 1e-7));
        points.push(snapped);
        mixtures.push(mixture);
    }

    let solution = assemble(problem, points, mixtures, Alpha::Bounded(alpha));
    if solution.certified_alpha > alpha + 1e-6 {
        return Err(Error::Solver(format!(
            "attained gap {} exceeds requested alpha {alpha}",
            solution.certified_alpha
        )));
    }
    Ok(solution)
}

fn assemble(
    problem: &RelaxedProblem,
    points: Vec<RocPoint>,
    mixtures: Vec<VertexMixture>,
    alpha: Alpha,
) -> RelaxedSolution {
    let prev = &problem.prevalences;
    let global = global_point(&points, prev);
    let expected_loss = expected_loss_at(global, prev, &problem.loss);
    let certified_alpha = max_pairwise_gap(&points, &defined_cells(prev));
    RelaxedSolution {
        groups: problem.hulls.iter().map(|h| h.group.clone()).collect(),
        group_points: points,
        group_mixtures: mixtures,
        global_point: global,
        expected_loss,
        certified_alpha,
        alpha_requested: alpha,
    }
}

fn lp_failure(e: lp::LpError) -> Error {
    Error::Solver(e.to_string())
}
