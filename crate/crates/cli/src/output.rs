//! JSON document schemas for CLI outputs.
//!
//! Every JSON artifact embeds a schema version and the resolved run
//! configuration, and all floating-point values are rounded to 12
//! significant digits before serialization so reruns produce byte-identical
//! files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use eqodds::fmt::round_sig12;
use eqodds::policy::{EvalReport, ThresholdPolicy, ThresholdWeight};
use eqodds::roc::{RocHull, Threshold};
use eqodds::solver::{Alpha, RelaxedSolution};
use eqodds::{CandidateScore, ModelSelection};

pub const SCHEMA_VERSION: u32 = 1;

/// The resolved run configuration, echoed into JSON outputs. Fields that
/// do not apply to the command are omitted.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_data: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub fp_cost: f64,
    pub fn_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_n: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub format: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureEntryDoc {
    pub threshold: Threshold,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSolutionDoc {
    pub point: [f64; 2],
    pub mixture: Vec<MixtureEntryDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub groups: BTreeMap<String, GroupSolutionDoc>,
    pub global_point: [f64; 2],
    pub expected_loss: f64,
    pub certified_alpha: f64,
    pub alpha_requested: Alpha,
}

#[derive(Serialize)]
pub struct FitDoc {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub solution: SolutionDoc,
}

/// Reader-side view of a solution file; tolerates extra fields.
#[derive(Deserialize)]
pub struct SolutionFile {
    pub solution: SolutionDoc,
}

#[derive(Serialize)]
pub struct EvalDoc {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub report: EvalReportDoc,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReportDoc {
    pub accuracy: f64,
    pub expected_loss: f64,
    pub per_group_rates: BTreeMap<String, [f64; 2]>,
    pub violation: f64,
    pub n: usize,
}

#[derive(Serialize)]
pub struct SelectDoc {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub selection: SelectionDoc,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionDoc {
    pub candidates: Vec<CandidateDoc>,
    pub winner: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateDoc {
    pub model_id: String,
    pub unprocessed_accuracy: f64,
    pub unprocessed_violation: f64,
}

fn round_threshold(t: Threshold) -> Threshold {
    match t {
        Threshold::Cut(v) => Threshold::Cut(round_sig12(v)),
        other => other,
    }
}

pub fn solution_doc(solution: &RelaxedSolution, hulls: &[RocHull]) -> SolutionDoc {
    let groups = solution
        .groups
        .iter()
        .zip(&solution.group_points)
        .zip(&solution.group_mixtures)
        .zip(hulls)
        .map(|(((group, point), mixture), hull)| {
            let entries = mixture
                .entries
                .iter()
                .map(|e| MixtureEntryDoc {
                    threshold: round_threshold(hull.vertex_thresholds[e.vertex]),
                    weight: round_sig12(e.weight),
                })
                .collect();
            (
                group.clone(),
                GroupSolutionDoc {
                    point: [round_sig12(point[0]), round_sig12(point[1])],
                    mixture: entries,
                },
            )
        })
        .collect();
    SolutionDoc {
        groups,
        global_point: [
            round_sig12(solution.global_point[0]),
            round_sig12(solution.global_point[1]),
        ],
        expected_loss: round_sig12(solution.expected_loss),
        certified_alpha: round_sig12(solution.certified_alpha),
        alpha_requested: solution.alpha_requested,
    }
}

/// Rebuilds an executable policy from a solution document.
pub fn policy_from_doc(doc: &SolutionDoc, seed: u64) -> eqodds::Result<ThresholdPolicy> {
    let per_group = doc
        .groups
        .iter()
        .map(|(group, g)| {
            let entries = g
                .mixture
                .iter()
                .map(|e| ThresholdWeight {
                    threshold: e.threshold,
                    weight: e.weight,
                })
                .collect();
            (group.clone(), entries)
        })
        .collect();
    ThresholdPolicy::new(per_group, seed)
}

pub fn eval_report_doc(report: &EvalReport) -> EvalReportDoc {
    EvalReportDoc {
        accuracy: round_sig12(report.accuracy),
        expected_loss: round_sig12(report.expected_loss),
        per_group_rates: report
            .per_group_rates
            .iter()
            .map(|(g, r)| (g.clone(), [round_sig12(r[0]), round_sig12(r[1])]))
            .collect(),
        violation: round_sig12(report.violation),
        n: report.n,
    }
}

pub fn selection_doc(selection: &ModelSelection) -> SelectionDoc {
    SelectionDoc {
        candidates: selection
            .candidates
            .iter()
            .map(|c: &CandidateScore| CandidateDoc {
                model_id: c.model_id.clone(),
                unprocessed_accuracy: round_sig12(c.unprocessed_accuracy),
                unprocessed_violation: round_sig12(c.unprocessed_violation),
            })
            .collect(),
        winner: selection.winner.clone(),
    }
}
