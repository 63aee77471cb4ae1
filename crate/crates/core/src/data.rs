//! Prediction datasets and population-level summaries.
//!
//! A dataset is an immutable table of `(score, label, group)` rows. Scores
//! must lie in `[0, 1]`, labels are binary, and group identifiers are opaque
//! strings indexed in order of first appearance.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored, labeled observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub score: f64,
    pub label: u8,
    pub group: String,
}

/// An immutable, validated table of prediction rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPredictions {
    rows: Vec<PredictionRow>,
    group_index: Vec<String>,
}

impl LabeledPredictions {
    /// Validates rows and assigns group indices by first appearance.
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain {
                line: 0,
                reason: "dataset contains no rows".to_string(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            validate_row(row, i + 1)?;
        }
        let mut group_index = Vec::new();
        for row in &rows {
            if !group_index.contains(&row.group) {
                group_index.push(row.group.clone());
            }
        }
        Ok(Self { rows, group_index })
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    /// Distinct group identifiers in first-appearance order.
    pub fn group_index(&self) -> &[String] {
        &self.group_index
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// The index of `group` in `group_index`, if present.
    pub fn group_position(&self, group: &str) -> Option<usize> {
        self.group_index.iter().position(|g| g == group)
    }
}

fn validate_row(row: &PredictionRow, line: usize) -> Result<()> {
    if !(row.score >= 0.0 && row.score <= 1.0) {
        return Err(Error::Domain {
            line,
            reason: format!("score {} not in [0, 1]", row.score),
        });
    }
    if row.label > 1 {
        return Err(Error::Domain {
            line,
            reason: format!("label {} not in {{0, 1}}", row.label),
        });
    }
    if row.group.is_empty() {
        return Err(Error::Domain {
            line,
            reason: "empty group identifier".to_string(),
        });
    }
    Ok(())
}

/// Input/output encodings for prediction tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

/// Loads a prediction table from a byte stream.
///
/// CSV requires a header with columns `score`, `label`, `group` (extra
/// columns are ignored). JSON expects an array of objects with those keys.
/// Rows violating the invariants are rejected, not dropped.
pub fn load_predictions(reader: impl Read, format: DataFormat) -> Result<LabeledPredictions> {
    let rows = match format {
        DataFormat::Csv => load_csv(reader)?,
        DataFormat::Json => load_json(reader)?,
    };
    LabeledPredictions::new(rows)
}

fn load_csv(reader: impl Read) -> Result<Vec<PredictionRow>> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })
    };
    let (score_col, label_col, group_col) = (col("score")?, col("label")?, col("group")?);

    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rows.len() + 2),
            reason: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::Parse {
                line,
                reason: format!("missing field {idx}"),
            })
        };
        let score: f64 = field(score_col)?.trim().parse().map_err(|_| Error::Parse {
            line,
            reason: format!("invalid score `{}`", field(score_col).unwrap_or("")),
        })?;
        let label_text = field(label_col)?.trim();
        let label: i64 = label_text.parse().map_err(|_| Error::Parse {
            line,
            reason: format!("invalid label `{label_text}`"),
        })?;
        if label != 0 && label != 1 {
            return Err(Error::Domain {
                line,
                reason: format!("label {label} not in {{0, 1}}"),
            });
        }
        let row = PredictionRow {
            score,
            label: label as u8,
            group: field(group_col)?.to_string(),
        };
        validate_row(&row, line)?;
        rows.push(row);
    }
    Ok(rows)
}

fn load_json(reader: impl Read) -> Result<Vec<PredictionRow>> {
    #[derive(Deserialize)]
    struct RawRow {
        score: f64,
        label: i64,
        group: String,
    }
    let raw: Vec<RawRow> = serde_json::from_reader(reader).map_err(|e| Error::Parse {
        line: e.line(),
        reason: e.to_string(),
    })?;
    let mut rows = Vec::with_capacity(raw.len());
    for (i, r) in raw.into_iter().enumerate() {
        if r.label != 0 && r.label != 1 {
            return Err(Error::Domain {
                line: i + 1,
                reason: format!("label {} not in {{0, 1}}", r.label),
            });
        }
        let row = PredictionRow {
            score: r.score,
            label: r.label as u8,
            group: r.group,
        };
        validate_row(&row, i + 1)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes a prediction table so that loading it back yields an equal value.
pub fn write_predictions(
    data: &LabeledPredictions,
    format: DataFormat,
    mut writer: impl Write,
) -> Result<()> {
    match format {
        DataFormat::Csv => {
            let mut csv = csv::Writer::from_writer(writer);
            csv.write_record(["score", "label", "group"])
                .map_err(csv_io_error)?;
            for row in data.rows() {
                // `{}` on f64 prints the shortest string that parses back
                // exactly, which is what makes the round-trip lossless.
                csv.write_record([
                    format!("{}", row.score),
                    format!("{}", row.label),
                    row.group.clone(),
                ])
                .map_err(csv_io_error)?;
            }
            csv.flush()?;
        }
        DataFormat::Json => {
            serde_json::to_writer_pretty(&mut writer, data.rows())
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            writeln!(writer)?;
        }
    }
    Ok(())
}

pub(crate) fn csv_io_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Label prevalences and group-conditional weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prevalences {
    /// `p_y[y]` is the fraction of rows with label `y`.
    pub p_y: [f64; 2],
    /// `p_s_given_y[s][y]` is the fraction of label-`y` rows in group `s`,
    /// indexed like the dataset's `group_index`.
    pub p_s_given_y: Vec<[f64; 2]>,
}

/// Computes label prevalences and per-group conditional weights.
///
/// Fails with `DegenerateLabel` when a label class is empty, since the
/// loss objective is then ill-posed.
pub fn prevalences(data: &LabeledPredictions) -> Result<Prevalences> {
    let n_groups = data.group_index().len();
    let mut label_counts = [0usize; 2];
    let mut cell_counts = vec![[0usize; 2]; n_groups];
    for row in data.rows() {
        let s = data
            .group_position(&row.group)
            .expect("row group is always indexed");
        label_counts[row.label as usize] += 1;
        cell_counts[s][row.label as usize] += 1;
    }
    for (y, &count) in label_counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::DegenerateLabel { label: y as u8 });
        }
    }
    let n = data.n() as f64;
    let p_y = [label_counts[0] as f64 / n, label_counts[1] as f64 / n];
    let p_s_given_y = cell_counts
        .iter()
        .map(|cell| {
            [
                cell[0] as f64 / label_counts[0] as f64,
                cell[1] as f64 / label_counts[1] as f64,
            ]
        })
        .collect();
    Ok(Prevalences { p_y, p_s_given_y })
}

/// Misclassification costs: `fp_cost` is the price of a false positive
/// (predicting 1 on a true 0) and `fn_cost` of a false negative. Correct
/// predictions cost zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub fp_cost: f64,
    pub fn_cost: f64,
}

impl LossSpec {
    pub fn new(fp_cost: f64, fn_cost: f64) -> Result<Self> {
        let valid = fp_cost.is_finite()
            && fn_cost.is_finite()
            && fp_cost >= 0.0
            && fn_cost >= 0.0
            && fp_cost + fn_cost > 0.0;
        if !valid {
            return Err(Error::Domain {
                line: 0,
                reason: format!(
                    "invalid loss costs ({fp_cost}, {fn_cost}): both must be nonnegative with a positive sum"
                ),
            });
        }
        Ok(Self { fp_cost, fn_cost })
    }

    /// Unit costs for both error kinds; expected loss then equals error rate.
    pub fn symmetric() -> Self {
        Self {
            fp_cost: 1.0,
            fn_cost: 1.0,
        }
    }

    /// The loss-minimizing decision threshold on calibrated scores.
    pub fn calibrated_threshold(&self) -> f64 {
        self.fp_cost / (self.fp_cost + self.fn_cost)
    }
}
