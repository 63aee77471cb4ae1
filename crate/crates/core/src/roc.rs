//! Per-group ROC curves, their convex hulls, and mixture decomposition.
//!
//! The ROC curve of a group traces the empirical (FPR, TPR) pairs obtained
//! by thresholding scores with the closed rule `predict 1 iff score >= t`.
//! Its convex hull is the set of operating points achievable by randomizing
//! among threshold classifiers; the solver optimizes over these hulls and
//! [`decompose`] turns a chosen interior point back into an executable
//! mixture of at most three thresholds.

use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::LabeledPredictions;
use crate::error::{Error, Result};
use crate::fmt::format_sig12;

/// An operating point `[fpr, tpr]`; index `y` holds the rate conditioned on
/// label `y`, matching the coordinate convention used by the solver.
pub type RocPoint = [f64; 2];

/// Cross products below this magnitude are treated as collinear during hull
/// construction. Empirical rates are rationals with denominator at most the
/// per-group sample count, so genuine turns produce much larger values.
pub const COLLINEARITY_TOL: f64 = 1e-12;

/// Default slack for point-in-hull tests.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Precondition slack for [`decompose`]: inputs may sit this far outside the
/// hull (numerical dust from the LP) and are projected onto the boundary.
pub const DECOMPOSE_INPUT_TOL: f64 = 1e-7;

/// A mixture must reproduce its target within this bound per coordinate.
pub const MIXTURE_TOL: f64 = 1e-9;

/// A decision threshold. `Cut(t)` predicts positive iff `score >= t`; the
/// sentinels are constant classifiers generating the ROC corners (0,0) and
/// (1,1) regardless of score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    AlwaysNegative,
    Cut(f64),
    AlwaysPositive,
}

impl Threshold {
    /// Applies the closed decision rule to a score.
    pub fn decide(&self, score: f64) -> u8 {
        match self {
            Threshold::AlwaysNegative => 0,
            Threshold::Cut(t) => u8::from(score >= *t),
            Threshold::AlwaysPositive => 1,
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::AlwaysNegative => f.write_str("always_negative"),
            Threshold::Cut(t) => f.write_str(&format_sig12(*t)),
            Threshold::AlwaysPositive => f.write_str("always_positive"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::AlwaysNegative => serializer.serialize_str("always_negative"),
            Threshold::Cut(t) => serializer.serialize_f64(*t),
            Threshold::AlwaysPositive => serializer.serialize_str("always_positive"),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Name(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(t) => Ok(Threshold::Cut(t)),
            Raw::Name(s) if s == "always_negative" => Ok(Threshold::AlwaysNegative),
            Raw::Name(s) if s == "always_positive" => Ok(Threshold::AlwaysPositive),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "unknown threshold sentinel `{s}`"
            ))),
        }
    }
}

/// The empirical ROC curve of one group.
///
/// `thresholds` is strictly decreasing: the `AlwaysNegative` sentinel, then
/// each distinct score in descending order, with the final cut (which always
/// reproduces the corner (1,1)) replaced by the `AlwaysPositive` sentinel.
/// `points[k]` is the operating point of `thresholds[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub group: String,
    pub thresholds: Vec<Threshold>,
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Checks the structural invariants; used by tests and debug assertions.
    pub fn validate(&self) -> Result<()> {
        let err = |reason: String| Error::Domain { line: 0, reason };
        if self.points.len() != self.thresholds.len() || self.points.len() < 2 {
            return Err(err("curve must pair >= 2 thresholds with points".into()));
        }
        if self.points[0] != [0.0, 0.0] || *self.points.last().unwrap() != [1.0, 1.0] {
            return Err(err("curve must run from (0,0) to (1,1)".into()));
        }
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b[0] < a[0] || b[1] < a[1] || a == b {
                return Err(err("curve points must be monotone and distinct".into()));
            }
        }
        for p in &self.points {
            if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
                return Err(err("curve coordinates must lie in [0,1]".into()));
            }
        }
        Ok(())
    }
}

/// The convex hull of a group's ROC curve, as a counter-clockwise polygon.
///
/// Vertices are a subset of the curve's points, each carrying the threshold
/// that generates it; (0,0) and (1,1) are always vertices. When every curve
/// point is on the diagonal the hull degenerates to that segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RocHull {
    pub group: String,
    pub vertices: Vec<RocPoint>,
    pub vertex_thresholds: Vec<Threshold>,
}

impl RocHull {
    /// A diagonal segment hull for groups whose conditional rates are
    /// partially undefined; it commits to FPR = TPR without using scores.
    pub fn degenerate_diagonal(group: &str) -> Self {
        Self {
            group: group.to_string(),
            vertices: vec![[0.0, 0.0], [1.0, 1.0]],
            vertex_thresholds: vec![Threshold::AlwaysNegative, Threshold::AlwaysPositive],
        }
    }

    /// Checks convexity, corner membership, and threshold pairing.
    pub fn validate(&self) -> Result<()> {
        let err = |reason: String| Error::Domain { line: 0, reason };
        let m = self.vertices.len();
        if m < 2 || self.vertex_thresholds.len() != m {
            return Err(err("hull must pair >= 2 vertices with thresholds".into()));
        }
        if !self.vertices.contains(&[0.0, 0.0]) || !self.vertices.contains(&[1.0, 1.0]) {
            return Err(err("hull must contain the corners (0,0) and (1,1)".into()));
        }
        if m > 2 {
            for i in 0..m {
                let (a, b, c) = (
                    self.vertices[i],
                    self.vertices[(i + 1) % m],
                    self.vertices[(i + 2) % m],
                );
                if cross(a, b, c) <= 0.0 {
                    return Err(err("hull vertices must be strictly convex CCW".into()));
                }
            }
        }
        Ok(())
    }
}

/// A convex combination of at most three hull vertices realizing a target
/// operating point. Entries are sorted by vertex index with weights > 0
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMixture {
    pub entries: Vec<MixtureEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureEntry {
    pub vertex: usize,
    pub weight: f64,
}

impl VertexMixture {
    /// Clamps stray negative weights, drops zeros, renormalizes, and sorts.
    fn from_weights(raw: &[(usize, f64)]) -> Self {
        let mut entries: Vec<MixtureEntry> = raw
            .iter()
            .map(|&(vertex, weight)| MixtureEntry {
                vertex,
                weight: weight.max(0.0),
            })
            .filter(|e| e.weight > 1e-15)
            .collect();
        if entries.is_empty() {
            // All weights were clamped away; fall back to the heaviest input.
            let &(vertex, _) = raw
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("mixture construction requires at least one weight");
            entries.push(MixtureEntry {
                vertex,
                weight: 1.0,
            });
        }
        entries.sort_by_key(|e| e.vertex);
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        for e in &mut entries {
            e.weight /= total;
        }
        Self { entries }
    }

    /// The point this mixture realizes over the given hull.
    pub fn realize(&self, hull: &RocHull) -> RocPoint {
        let mut p = [0.0, 0.0];
        for e in &self.entries {
            let v = hull.vertices[e.vertex];
            p[0] += e.weight * v[0];
            p[1] += e.weight * v[1];
        }
        p
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

fn cross(o: RocPoint, a: RocPoint, b: RocPoint) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist_to_segment(p: RocPoint, a: RocPoint, b: RocPoint) -> f64 {
    segment_projection(p, a, b).1
}

/// Returns the clamped projection parameter `t` of `p` onto segment `a`-`b`
/// (so the closest point is `a + t (b - a)`) and the distance to it.
fn segment_projection(p: RocPoint, a: RocPoint, b: RocPoint) -> (f64, f64) {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    let dist = ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt();
    (t, dist)
}

/// Builds the empirical ROC curve of `group` under the closed rule
/// `predict 1 iff score >= t`, sweeping thresholds from above the maximum
/// score down through every distinct score. Duplicate operating points are
/// collapsed, which replaces the minimum-score cut (always the corner (1,1))
/// with the `AlwaysPositive` sentinel.
pub fn build_roc(data: &LabeledPredictions, group: &str) -> Result<RocCurve> {
    if data.group_position(group).is_none() {
        return Err(Error::UnknownGroup(group.to_string()));
    }
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for row in data.rows() {
        if row.group == group {
            match row.label {
                1 => pos.push(row.score),
                _ => neg.push(row.score),
            }
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateGroup {
            group: group.to_string(),
            missing_label: u8::from(pos.is_empty()),
        });
    }

    let mut cuts: Vec<f64> = pos.iter().chain(neg.iter()).copied().collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));

    let mut thresholds = vec![Threshold::AlwaysNegative];
    let mut points: Vec<RocPoint> = vec![[0.0, 0.0]];
    let (mut np, mut nn) = (0usize, 0usize);
    for (k, &t) in cuts.iter().enumerate() {
        while np < pos.len() && pos[np] >= t {
            np += 1;
        }
        while nn < neg.len() && neg[nn] >= t {
            nn += 1;
        }
        if k + 1 == cuts.len() {
            // The lowest cut admits every sample, landing exactly on (1,1);
            // attribute that corner to the sentinel classifier instead.
            debug_assert_eq!(np, pos.len());
            debug_assert_eq!(nn, neg.len());
            thresholds.push(Threshold::AlwaysPositive);
            points.push([1.0, 1.0]);
        } else {
            thresholds.push(Threshold::Cut(t));
            points.push([nn as f64 / neg.len() as f64, np as f64 / pos.len() as f64]);
        }
    }
    let curve = RocCurve {
        group: group.to_string(),
        thresholds,
        points,
    };
    debug_assert!(curve.validate().is_ok());
    Ok(curve)
}

/// Computes the convex hull of a curve with Andrew's monotone chain. Curve
/// points are already sorted lexicographically (both coordinates are
/// non-decreasing and consecutive points differ), so no sorting pass is
/// needed. Collinear points are dropped at [`COLLINEARITY_TOL`].
pub fn build_hull(curve: &RocCurve) -> RocHull {
    let pts = &curve.points;
    let chain = |indices: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        let mut hull: Vec<usize> = Vec::new();
        for i in indices {
            while hull.len() >= 2
                && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i])
                    <= COLLINEARITY_TOL
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull
    };
    let mut lower = chain(&mut (0..pts.len()));
    let mut upper = chain(&mut (0..pts.len()).rev());
    lower.pop();
    upper.pop();
    let hull_indices: Vec<usize> = lower.into_iter().chain(upper).collect();

    let hull = RocHull {
        group: curve.group.clone(),
        vertices: hull_indices.iter().map(|&i| pts[i]).collect(),
        vertex_thresholds: hull_indices.iter().map(|&i| curve.thresholds[i]).collect(),
    };
    debug_assert!(hull.validate().is_ok());
    hull
}

/// Tests whether `point` lies inside the hull or within `tol` of it. For a
/// CCW polygon this checks the signed distance to every edge's supporting
/// line; a two-vertex hull degenerates to segment distance.
pub fn contains(hull: &RocHull, point: RocPoint, tol: f64) -> bool {
    let v = &hull.vertices;
    if v.len() == 2 {
        return dist_to_segment(point, v[0], v[1]) <= tol;
    }
    for i in 0..v.len() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        let edge_len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if cross(a, b, point) < -tol * edge_len {
            return false;
        }
    }
    true
}

/// Expresses `point` as a convex combination of at most three hull vertices.
///
/// The result is deterministic: a vertex within [`MIXTURE_TOL`] wins (lowest
/// index first), then an edge within the same tolerance (weights from the
/// projection parameter), then the lowest-index triangle of the fan rooted
/// at vertex 0 that contains the point. Inputs up to
/// [`DECOMPOSE_INPUT_TOL`] outside the hull are projected onto the boundary;
/// anything farther away is rejected.
pub fn decompose(hull: &RocHull, point: RocPoint) -> Result<VertexMixture> {
    if !contains(hull, point, DECOMPOSE_INPUT_TOL) {
        return Err(Error::OutsideHull {
            point: (point[0], point[1]),
        });
    }
    let v = &hull.vertices;
    let m = v.len();

    for (i, &vert) in v.iter().enumerate() {
        if (vert[0] - point[0]).abs() <= MIXTURE_TOL && (vert[1] - point[1]).abs() <= MIXTURE_TOL {
            return Ok(VertexMixture::from_weights(&[(i, 1.0)]));
        }
    }

    if m == 2 {
        let (t, _) = segment_projection(point, v[0], v[1]);
        return Ok(VertexMixture::from_weights(&[(0, 1.0 - t), (1, t)]));
    }

    for i in 0..m {
        let j = (i + 1) % m;
        let (t, dist) = segment_projection(point, v[i], v[j]);
        if dist <= MIXTURE_TOL {
            return Ok(VertexMixture::from_weights(&[(i, 1.0 - t), (j, t)]));
        }
    }

    for i in 1..m - 1 {
        let (a, b, c) = (v[0], v[i], v[i + 1]);
        let det = cross(a, b, c);
        if det <= COLLINEARITY_TOL {
            continue;
        }
        let l1 = cross(a, point, c) / det;
        let l2 = cross(a, b, point) / det;
        let l0 = 1.0 - l1 - l2;
        if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
            return Ok(VertexMixture::from_weights(&[
                (0, l0),
                (i, l1),
                (i + 1, l2),
            ]));
        }
    }

    // The point passed the (slackened) containment precondition but missed
    // every fan triangle, so it is marginally outside: realize the nearest
    // boundary point instead.
    let mut best = (0usize, 0.0f64, f64::INFINITY);
    for i in 0..m {
        let j = (i + 1) % m;
        let (t, dist) = segment_projection(point, v[i], v[j]);
        if dist < best.2 {
            best = (i, t, dist);
        }
    }
    let (i, t, _) = best;
    Ok(VertexMixture::from_weights(&[
        (i, 1.0 - t),
        ((i + 1) % m, t),
    ]))
}

/// Writes the debug export of curves and hulls: one row per curve point with
/// columns `group,fpr,tpr,threshold,is_vertex`.
pub fn write_debug_csv(groups: &[(RocCurve, RocHull)], writer: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["group", "fpr", "tpr", "threshold", "is_vertex"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for (curve, hull) in groups {
        for (k, p) in curve.points.iter().enumerate() {
            let is_vertex = hull.vertices.iter().any(|v| v == p);
            csv.write_record([
                curve.group.clone(),
                format_sig12(p[0]),
                format_sig12(p[1]),
                curve.thresholds[k].to_string(),
                is_vertex.to_string(),
            ])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
    }
    csv.flush()?;
    Ok(())
}
