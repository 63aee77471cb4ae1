//! Executable randomized threshold policies and their evaluation.
//!
//! A policy assigns each group a weighted list of thresholds. Per-instance
//! prediction draws one threshold by inverse CDF; evaluation mixes each
//! threshold's empirical rates analytically by its weight instead, which
//! keeps certification free of Monte Carlo noise. Analytic evaluation on
//! the fit data reproduces the solver's reported loss and attained gap
//! because both sides divide and sum the very same quantities.

use std::collections::BTreeMap;

use crate::data::{prevalences, LabeledPredictions, LossSpec, PredictionRow, Prevalences};
use crate::error::{Error, Result};
use crate::rng;
use crate::roc::{RocHull, RocPoint, Threshold};
use crate::solver::{expected_loss_at, global_point, max_pairwise_gap, RelaxedSolution};

/// One arm of a group's randomized threshold rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdWeight {
    pub threshold: Threshold,
    pub weight: f64,
}

/// A groupwise randomized threshold classifier.
#[derive(Debug, Clone)]
pub struct ThresholdPolicy {
    groups: Vec<String>,
    entries: Vec<Vec<ThresholdWeight>>,
    index: BTreeMap<String, usize>,
    seed: u64,
}

impl ThresholdPolicy {
    /// Builds a policy from per-group threshold lists. Each group needs at
    /// least one entry, nonnegative weights, and a total weight of 1 within
    /// 1e-9.
    pub fn new(per_group: Vec<(String, Vec<ThresholdWeight>)>, seed: u64) -> Result<Self> {
        let mut groups = Vec::with_capacity(per_group.len());
        let mut entries = Vec::with_capacity(per_group.len());
        let mut index = BTreeMap::new();
        for (group, list) in per_group {
            if list.is_empty() {
                return Err(Error::Domain {
                    line: 0,
                    reason: format!("group `{group}` has no thresholds"),
                });
            }
            let total: f64 = list.iter().map(|e| e.weight).sum();
            let invalid = |w: f64| !w.is_finite() || w < 0.0;
            if list.iter().any(|e| invalid(e.weight)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Domain {
                    line: 0,
                    reason: format!("group `{group}` weights must be nonnegative and sum to 1"),
                });
            }
            if index.insert(group.clone(), groups.len()).is_some() {
                return Err(Error::Domain {
                    line: 0,
                    reason: format!("duplicate group `{group}` in policy"),
                });
            }
            groups.push(group);
            entries.push(list);
        }
        if groups.is_empty() {
            return Err(Error::Domain {
                line: 0,
                reason: "policy requires at least one group".to_string(),
            });
        }
        Ok(Self {
            groups,
            entries,
            index,
            seed,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn group_entries(&self, group: &str) -> Result<&[ThresholdWeight]> {
        self.index
            .get(group)
            .map(|&i| self.entries[i].as_slice())
            .ok_or_else(|| Error::UnknownGroup(group.to_string()))
    }

    /// Selects a threshold by inverse CDF over the group's weights. The last
    /// entry absorbs any rounding shortfall in the cumulative sum.
    pub fn threshold_for_draw(&self, group: &str, draw: f64) -> Result<Threshold> {
        let entries = self.group_entries(group)?;
        let mut cumulative = 0.0;
        for e in entries {
            cumulative += e.weight;
            if draw < cumulative {
                return Ok(e.threshold);
            }
        }
        Ok(entries[entries.len() - 1].threshold)
    }

    /// Predicts a label from an explicit uniform draw in `[0, 1)`.
    pub fn predict(&self, score: f64, group: &str, draw: f64) -> Result<u8> {
        Ok(self.threshold_for_draw(group, draw)?.decide(score))
    }

    /// Predicts a label for one data row, deriving the draw from the policy
    /// seed and the row index so batch order never matters. Also returns the
    /// threshold that was drawn.
    pub fn predict_row(&self, row_index: u64, score: f64, group: &str) -> Result<(u8, Threshold)> {
        let draw = rng::unit(self.seed, row_index);
        let threshold = self.threshold_for_draw(group, draw)?;
        Ok((threshold.decide(score), threshold))
    }
}

/// Converts a solution's vertex mixtures into executable thresholds using
/// the hulls' vertex-to-threshold maps. Hull corners carry the constant
/// sentinels, so corner vertices come out as always-negative or
/// always-positive rules.
pub fn policy_from_solution(
    solution: &RelaxedSolution,
    hulls: &[RocHull],
    seed: u64,
) -> Result<ThresholdPolicy> {
    if hulls.len() != solution.groups.len()
        || hulls
            .iter()
            .zip(&solution.groups)
            .any(|(h, g)| &h.group != g)
    {
        return Err(Error::Domain {
            line: 0,
            reason: "hulls do not match the solution's groups".to_string(),
        });
    }
    let per_group = solution
        .groups
        .iter()
        .zip(&solution.group_mixtures)
        .zip(hulls)
        .map(|((group, mixture), hull)| {
            let list = mixture
                .entries
                .iter()
                .map(|e| ThresholdWeight {
                    threshold: hull.vertex_thresholds[e.vertex],
                    weight: e.weight,
                })
                .collect();
            (group.clone(), list)
        })
        .collect();
    ThresholdPolicy::new(per_group, seed)
}

/// Evaluation results of a policy on labeled data.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub expected_loss: f64,
    /// Group identifier to (FPR, TPR) of the policy on this data.
    pub per_group_rates: BTreeMap<String, [f64; 2]>,
    pub violation: f64,
    pub n: usize,
}

/// The smallest slack under which per-group rates satisfy the relaxed
/// constraint: the maximum over coordinates and unordered group pairs of
/// the absolute rate difference. Zero with a single group.
pub fn violation(rates: &[[f64; 2]]) -> f64 {
    max_pairwise_gap(rates, &vec![[true, true]; rates.len()])
}

/// Sorted per-group score lists for repeated policy evaluation on one
/// dataset. Building the index once amortizes the sort across a sweep.
pub struct EvalIndex {
    groups: Vec<String>,
    neg_scores: Vec<Vec<f64>>,
    pos_scores: Vec<Vec<f64>>,
    prevalences: Prevalences,
    n: usize,
}

impl EvalIndex {
    pub fn new(data: &LabeledPredictions) -> Result<Self> {
        let prev = prevalences(data)?;
        let groups = data.group_index().to_vec();
        let mut neg_scores = vec![Vec::new(); groups.len()];
        let mut pos_scores = vec![Vec::new(); groups.len()];
        for row in data.rows() {
            let s = data.group_position(&row.group).expect("indexed group");
            if row.label == 0 {
                neg_scores[s].push(row.score);
            } else {
                pos_scores[s].push(row.score);
            }
        }
        for list in neg_scores.iter_mut().chain(pos_scores.iter_mut()) {
            list.sort_by(|a, b| a.partial_cmp(b).expect("validated scores"));
        }
        Ok(Self {
            groups,
            neg_scores,
            pos_scores,
            prevalences: prev,
            n: data.n(),
        })
    }

    /// Empirical (FPR, TPR) of a single threshold on one group, by counting
    /// scores at or above the cut.
    fn threshold_rates(&self, s: usize, threshold: &Threshold) -> Result<RocPoint> {
        let neg = &self.neg_scores[s];
        let pos = &self.pos_scores[s];
        let missing = if neg.is_empty() {
            Some(0u8)
        } else if pos.is_empty() {
            Some(1u8)
        } else {
            None
        };
        if let Some(missing_label) = missing {
            return Err(Error::DegenerateGroup {
                group: self.groups[s].clone(),
                missing_label,
            });
        }
        Ok(match threshold {
            Threshold::AlwaysNegative => [0.0, 0.0],
            Threshold::AlwaysPositive => [1.0, 1.0],
            Threshold::Cut(t) => {
                let fp = neg.len() - neg.partition_point(|x| x < t);
                let tp = pos.len() - pos.partition_point(|x| x < t);
                [fp as f64 / neg.len() as f64, tp as f64 / pos.len() as f64]
            }
        })
    }

    /// Analytic evaluation: mixes each threshold's empirical rates by its
    /// weight, then derives global loss and violation from the group rates.
    pub fn evaluate(&self, policy: &ThresholdPolicy, loss: &LossSpec) -> Result<EvalReport> {
        let mut group_rates = Vec::with_capacity(self.groups.len());
        for (s, group) in self.groups.iter().enumerate() {
            let entries = policy.group_entries(group)?;
            let mut rate = [0.0, 0.0];
            for e in entries {
                let r = self.threshold_rates(s, &e.threshold)?;
                rate[0] += e.weight * r[0];
                rate[1] += e.weight * r[1];
            }
            group_rates.push(rate);
        }
        let global = global_point(&group_rates, &self.prevalences);
        let expected_loss = expected_loss_at(global, &self.prevalences, loss);
        let accuracy = 1.0 - expected_loss_at(global, &self.prevalences, &LossSpec::symmetric());
        Ok(EvalReport {
            accuracy,
            expected_loss,
            per_group_rates: self
                .groups
                .iter()
                .cloned()
                .zip(group_rates.iter().copied())
                .collect(),
            violation: violation(&group_rates),
            n: self.n,
        })
    }
}

/// One-shot analytic evaluation of a policy on labeled data.
pub fn evaluate_policy(
    policy: &ThresholdPolicy,
    data: &LabeledPredictions,
    loss: &LossSpec,
) -> Result<EvalReport> {
    EvalIndex::new(data)?.evaluate(policy, loss)
}

/// Evaluation from one sampled realization of the policy instead of the
/// analytic mixture: every row gets the single prediction drawn from
/// `(policy seed, row index)`, and rates are counted from those predictions.
pub fn evaluate_policy_sampled(
    policy: &ThresholdPolicy,
    data: &LabeledPredictions,
    loss: &LossSpec,
) -> Result<EvalReport> {
    let prev = prevalences(data)?;
    let groups = data.group_index().to_vec();
    // counts[s][y] = (instances, predicted positive)
    let mut counts = vec![[[0usize; 2]; 2]; groups.len()];
    for (i, row) in data.rows().iter().enumerate() {
        let s = data.group_position(&row.group).expect("indexed group");
        let (pred, _) = policy.predict_row(i as u64, row.score, &row.group)?;
        let cell = &mut counts[s][usize::from(row.label)];
        cell[0] += 1;
        cell[1] += usize::from(pred == 1);
    }
    let mut group_rates = Vec::with_capacity(groups.len());
    for (s, group) in groups.iter().enumerate() {
        for (y, cell) in counts[s].iter().enumerate() {
            if cell[0] == 0 {
                return Err(Error::DegenerateGroup {
                    group: group.clone(),
                    missing_label: y as u8,
                });
            }
        }
        group_rates.push([
            counts[s][0][1] as f64 / counts[s][0][0] as f64,
            counts[s][1][1] as f64 / counts[s][1][0] as f64,
        ]);
    }
    let global = global_point(&group_rates, &prev);
    let expected_loss = expected_loss_at(global, &prev, loss);
    let accuracy = 1.0 - expected_loss_at(global, &prev, &LossSpec::symmetric());
    Ok(EvalReport {
        accuracy,
        expected_loss,
        per_group_rates: groups
            .iter()
            .cloned()
            .zip(group_rates.iter().copied())
            .collect(),
        violation: violation(&group_rates),
        n: data.n(),
    })
}

/// Writes batch predictions as CSV with columns
/// `row_index,group,score,prediction,threshold_drawn`.
pub fn write_predictions_csv<W: std::io::Write>(
    policy: &ThresholdPolicy,
    rows: &[PredictionRow],
    writer: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "row_index",
        "group",
        "score",
        "prediction",
        "threshold_drawn",
    ])
    .map_err(crate::data::csv_io_error)?;
    for (i, row) in rows.iter().enumerate() {
        let (pred, threshold) = policy.predict_row(i as u64, row.score, &row.group)?;
        out.write_record([
            i.to_string(),
            row.group.clone(),
            crate::fmt::format_sig12(row.score),
            pred.to_string(),
            threshold.to_string(),
        ])
        .map_err(crate::data::csv_io_error)?;
    }
    out.flush()?;
    Ok(())
}
