//! Fairness-accuracy frontiers, model selection, and bootstrap intervals.
//!
//! A sweep fits the relaxed program on one dataset for every slack on a
//! grid and evaluates each resulting policy on another, tracing the
//! frontier between constraint violation and accuracy. Selection
//! unprocesses candidate models on shared validation rows and picks the
//! one whose unconstrained form is most accurate. The bootstrap holds a
//! policy fixed and resamples evaluation rows, so intervals reflect
//! evaluation uncertainty only.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::{prevalences, LabeledPredictions, LossSpec, PredictionRow};
use crate::error::{Error, Result};
use crate::fmt::format_sig12;
use crate::policy::{evaluate_policy, policy_from_solution, EvalIndex, ThresholdPolicy};
use crate::rng;
use crate::solver::{group_geometry, solve_relaxed, unprocess, Alpha, RelaxedProblem};

/// One sweep result: the requested slack and the policy's metrics on the
/// evaluation data, with optional bootstrap percentile bands.
#[derive(Debug, Clone, Serialize)]
pub struct FrontierPoint {
    pub alpha: f64,
    pub accuracy: f64,
    pub expected_loss: f64,
    pub violation: f64,
    /// Metric name to (2.5th, 97.5th) bootstrap percentiles.
    pub ci: Option<BTreeMap<String, (f64, f64)>>,
}

/// Sweep knobs beyond the datasets and loss.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub grid_step: f64,
    /// Upper end of the slack grid; defaults to the unprocessed solution's
    /// violation on the fit data, beyond which the constraint is inactive.
    pub alpha_max: Option<f64>,
    /// Number of bootstrap resamples per point; 0 disables the bands.
    pub bootstrap_n: usize,
    pub seed: u64,
    pub stratified: bool,
    pub allow_degenerate_groups: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            alpha_max: None,
            bootstrap_n: 0,
            seed: 42,
            stratified: false,
            allow_degenerate_groups: false,
        }
    }
}

/// Fits the relaxed program on `data_fit` for every slack in
/// `{0, grid_step, 2*grid_step, ...}` up to the configured maximum, and
/// evaluates each fitted policy on `data_eval`. Grid values are exact
/// multiples of the step; a maximum that falls between multiples truncates
/// the grid rather than appending an off-grid point.
pub fn sweep(
    data_fit: &LabeledPredictions,
    data_eval: &LabeledPredictions,
    loss: &LossSpec,
    config: &SweepConfig,
) -> Result<Vec<FrontierPoint>> {
    if !(config.grid_step > 0.0 && config.grid_step <= 1.0) {
        return Err(Error::Domain {
            line: 0,
            reason: format!("grid_step {} not in (0, 1]", config.grid_step),
        });
    }
    let mut fit_groups = data_fit.group_index().to_vec();
    let mut eval_groups = data_eval.group_index().to_vec();
    fit_groups.sort();
    eval_groups.sort();
    if fit_groups != eval_groups {
        return Err(Error::Domain {
            line: 0,
            reason: "fit and eval data disagree on the set of groups".to_string(),
        });
    }

    let prev = prevalences(data_fit)?;
    let hulls: Vec<_> = group_geometry(data_fit, config.allow_degenerate_groups)?
        .into_iter()
        .map(|(_, hull)| hull)
        .collect();
    let alpha_max = match config.alpha_max {
        Some(a) => {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Domain {
                    line: 0,
                    reason: format!("alpha_max {a} not in [0, 1]"),
                });
            }
            a
        }
        None => unprocess(&hulls, &prev, loss)?.certified_alpha,
    };

    let eval_index = EvalIndex::new(data_eval)?;
    let mut points = Vec::new();
    let mut k = 0u32;
    loop {
        let alpha = (f64::from(k) * config.grid_step).min(1.0);
        if f64::from(k) * config.grid_step > alpha_max + 1e-12 {
            break;
        }
        let problem =
            RelaxedProblem::new(hulls.clone(), prev.clone(), *loss, Alpha::Bounded(alpha))?;
        let solution = solve_relaxed(&problem)?;
        let policy = policy_from_solution(&solution, &hulls, config.seed)?;
        let report = eval_index.evaluate(&policy, loss)?;
        let ci = if config.bootstrap_n > 0 {
            Some(bootstrap(
                data_eval,
                &policy,
                loss,
                config.bootstrap_n,
                config.seed,
                config.stratified,
            )?)
        } else {
            None
        };
        points.push(FrontierPoint {
            alpha,
            accuracy: report.accuracy,
            expected_loss: report.expected_loss,
            violation: report.violation,
            ci,
        });
        k += 1;
    }
    Ok(points)
}

/// A candidate's unprocessed metrics on the shared validation rows.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateScore {
    pub model_id: String,
    pub unprocessed_accuracy: f64,
    pub unprocessed_violation: f64,
}

/// Outcome of model selection by unprocessed accuracy.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSelection {
    /// All candidates in lexicographic id order.
    pub candidates: Vec<CandidateScore>,
    pub winner: String,
}

/// Unprocesses every candidate on its (shared) validation rows and picks
/// the winner by highest unprocessed accuracy, breaking ties by lowest
/// violation and then lexicographic id.
pub fn select_best(
    models: &BTreeMap<String, LabeledPredictions>,
    loss: &LossSpec,
) -> Result<ModelSelection> {
    if models.is_empty() {
        return Err(Error::Domain {
            line: 0,
            reason: "selection requires at least one candidate".to_string(),
        });
    }
    let reference = models.values().next().expect("nonempty").rows();
    for data in models.values() {
        let rows = data.rows();
        if rows.len() != reference.len() {
            return Err(Error::MismatchedRows {
                row: reference.len().min(rows.len()),
                reason: "candidates have different row counts".to_string(),
            });
        }
        for (i, (a, b)) in reference.iter().zip(rows).enumerate() {
            if a.label != b.label || a.group != b.group {
                return Err(Error::MismatchedRows {
                    row: i,
                    reason: "candidates disagree on labels or groups".to_string(),
                });
            }
        }
    }

    let mut candidates = Vec::with_capacity(models.len());
    for (id, data) in models {
        let prev = prevalences(data)?;
        let hulls: Vec<_> = group_geometry(data, false)?
            .into_iter()
            .map(|(_, hull)| hull)
            .collect();
        let solution = unprocess(&hulls, &prev, loss)?;
        let policy = policy_from_solution(&solution, &hulls, 0)?;
        let report = evaluate_policy(&policy, data, loss)?;
        candidates.push(CandidateScore {
            model_id: id.clone(),
            unprocessed_accuracy: report.accuracy,
            unprocessed_violation: report.violation,
        });
    }
    let mut winner = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let best = &candidates[winner];
        if c.unprocessed_accuracy > best.unprocessed_accuracy
            || (c.unprocessed_accuracy == best.unprocessed_accuracy
                && c.unprocessed_violation < best.unprocessed_violation)
        {
            winner = i;
        }
    }
    Ok(ModelSelection {
        winner: candidates[winner].model_id.clone(),
        candidates,
    })
}

/// Percentile bands for a fixed policy under row resampling. Returns
/// `accuracy`, `violation`, and `expected_loss`, each mapped to its
/// empirical (2.5th, 97.5th) percentiles over `n_resamples` resamples.
/// A resample that empties some group's label cell is redrawn, up to 100
/// attempts, after which the degeneracy error surfaces.
pub fn bootstrap(
    data: &LabeledPredictions,
    policy: &ThresholdPolicy,
    loss: &LossSpec,
    n_resamples: usize,
    seed: u64,
    stratified: bool,
) -> Result<BTreeMap<String, (f64, f64)>> {
    if n_resamples == 0 {
        return Err(Error::Domain {
            line: 0,
            reason: "bootstrap requires at least one resample".to_string(),
        });
    }
    let strata: Vec<Vec<usize>> = if stratified {
        let mut by_group = vec![Vec::new(); data.group_index().len()];
        for (i, row) in data.rows().iter().enumerate() {
            by_group[data.group_position(&row.group).expect("indexed group")].push(i);
        }
        by_group
    } else {
        vec![(0..data.n()).collect()]
    };

    let mut accuracy = Vec::with_capacity(n_resamples);
    let mut violation = Vec::with_capacity(n_resamples);
    let mut expected_loss = Vec::with_capacity(n_resamples);
    for r in 0..n_resamples {
        let resample_seed = rng::derive(seed, r as u64);
        let mut attempt = 0u64;
        let report = loop {
            let attempt_seed = rng::derive(resample_seed, attempt);
            let sample = resample_rows(data, &strata, attempt_seed);
            // A group that vanished from the resample has both label cells
            // empty; evaluation alone would silently skip it, so it counts
            // as a degeneracy and triggers the same redraw.
            let outcome = match data
                .group_index()
                .iter()
                .find(|g| sample.group_position(g).is_none())
            {
                Some(group) => Err(Error::DegenerateGroup {
                    group: group.clone(),
                    missing_label: 1,
                }),
                None => evaluate_policy(policy, &sample, loss),
            };
            match outcome {
                Ok(report) => break report,
                Err(Error::DegenerateGroup { .. } | Error::DegenerateLabel { .. })
                    if attempt < 99 =>
                {
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        accuracy.push(report.accuracy);
        violation.push(report.violation);
        expected_loss.push(report.expected_loss);
    }

    let mut out = BTreeMap::new();
    out.insert("accuracy".to_string(), percentile_band(&mut accuracy));
    out.insert("violation".to_string(), percentile_band(&mut violation));
    out.insert(
        "expected_loss".to_string(),
        percentile_band(&mut expected_loss),
    );
    Ok(out)
}

/// Draws one resample with replacement. Within each stratum the draw for
/// slot `i` derives from `(seed, i)`, so resamples are reproducible and
/// independent of traversal order.
fn resample_rows(
    data: &LabeledPredictions,
    strata: &[Vec<usize>],
    seed: u64,
) -> LabeledPredictions {
    let rows = data.rows();
    let mut sampled: Vec<PredictionRow> = Vec::with_capacity(rows.len());
    for (g, members) in strata.iter().enumerate() {
        let stratum_seed = rng::derive(seed, g as u64);
        for i in 0..members.len() {
            let pick = rng::sample_index(stratum_seed, i as u64, members.len());
            sampled.push(rows[members[pick]].clone());
        }
    }
    LabeledPredictions::new(sampled).expect("resampled rows stay individually valid")
}

fn percentile_band(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
    (
        percentile_linear(values, 0.025),
        percentile_linear(values, 0.975),
    )
}

/// Linear-interpolation percentile of pre-sorted values at quantile `q`.
fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Writes frontier points as CSV. Percentile columns are left empty when a
/// point carries no bootstrap bands.
pub fn write_frontier_csv<W: std::io::Write>(points: &[FrontierPoint], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "alpha",
        "accuracy",
        "violation",
        "expected_loss",
        "accuracy_p2_5",
        "accuracy_p97_5",
        "violation_p2_5",
        "violation_p97_5",
    ])
    .map_err(crate::data::csv_io_error)?;
    for p in points {
        let band = |metric: &str| -> (String, String) {
            p.ci.as_ref()
                .and_then(|ci| ci.get(metric))
                .map(|&(lo, hi)| (format_sig12(lo), format_sig12(hi)))
                .unwrap_or_default()
        };
        let (acc_lo, acc_hi) = band("accuracy");
        let (vio_lo, vio_hi) = band("violation");
        out.write_record([
            format_sig12(p.alpha),
            format_sig12(p.accuracy),
            format_sig12(p.violation),
            format_sig12(p.expected_loss),
            acc_lo,
            acc_hi,
            vio_lo,
            vio_hi,
        ])
        .map_err(crate::data::csv_io_error)?;
    }
    out.flush()?;
    Ok(())
}
