//! CSV dataset ingestion against a JSON schema naming the label column and
//! the normal-class value.
//!
//! Features must be numeric. Empty cells, "?" and "NA" mark missing values:
//! such rows are rejected and counted. Any other non-numeric feature cell is
//! a parse error naming the row and column. Every non-normal label is
//! anomalous (one-vs-rest) unless the schema enumerates admissible anomaly
//! values. Feature scaling happens later, fitted on the training slice of
//! each split.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub label_column: String,
    pub normal_value: String,
    /// Column subset to use as features; all non-label columns when absent.
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    /// Admissible anomaly label values; any value when absent (one-vs-rest).
    #[serde(default)]
    pub anomaly_values: Option<Vec<String>>,
    /// Raw-file sample count to validate against (before missing-row
    /// rejection).
    #[serde(default)]
    pub expected_samples: Option<usize>,
    #[serde(default)]
    pub expected_normals: Option<usize>,
    #[serde(default)]
    pub provenance: Option<String>,
}

impl DatasetSchema {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: "<schema>".into(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// n x f feature matrix, rows with missing values already dropped.
    pub features: DMatrix<f64>,
    /// +1 normal, -1 anomalous, aligned with feature rows.
    pub labels: Vec<i8>,
    /// Rows dropped for missing feature values.
    pub rejected_rows: usize,
    pub provenance: String,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_normals(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?" || cell == "NA"
}

pub fn load_dataset(csv_path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let text = fs::read_to_string(csv_path)?;
    let path_str = csv_path.display().to_string();
    let mut lines = text.lines();

    let header_line = lines
        .next()
        .ok_or_else(|| Error::InvalidInput(format!("{path_str}: empty file")))?;
    let header: Vec<String> = header_line
        .trim_end_matches('\r')
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();

    let label_idx = header
        .iter()
        .position(|c| c == &schema.label_column)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "{path_str}: label column {:?} not in header",
                schema.label_column
            ))
        })?;

    let feature_idx: Vec<usize> = match &schema.feature_columns {
        Some(names) => {
            let mut idx = Vec::with_capacity(names.len());
            for name in names {
                let pos = header.iter().position(|c| c == name).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{path_str}: feature column {name:?} not in header"
                    ))
                })?;
                idx.push(pos);
            }
            idx
        }
        None => (0..header.len()).filter(|&i| i != label_idx).collect(),
    };
    if feature_idx.is_empty() {
        return Err(Error::InvalidInput(format!("{path_str}: no feature columns")));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<i8> = Vec::new();
    let mut raw_rows = 0usize;
    let mut raw_normals = 0usize;
    let mut rejected = 0usize;

    for (lineno, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row_number = lineno + 1; // 1-based over data rows
        let cells: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if cells.len() != header.len() {
            return Err(Error::Parse {
                path: path_str.clone(),
                row: row_number,
                column: "<row>".into(),
                message: format!("expected {} cells, found {}", header.len(), cells.len()),
            });
        }

        let label_cell = cells[label_idx];
        if label_cell.is_empty() {
            return Err(Error::Parse {
                path: path_str.clone(),
                row: row_number,
                column: schema.label_column.clone(),
                message: "empty label".into(),
            });
        }
        let label: i8 = if label_cell == schema.normal_value {
            1
        } else {
            if let Some(allowed) = &schema.anomaly_values {
                if !allowed.iter().any(|v| v == label_cell) {
                    return Err(Error::Parse {
                        path: path_str.clone(),
                        row: row_number,
                        column: schema.label_column.clone(),
                        message: format!("label {label_cell:?} outside schema"),
                    });
                }
            }
            -1
        };
        raw_rows += 1;
        if label == 1 {
            raw_normals += 1;
        }

        if feature_idx.iter().any(|&i| is_missing(cells[i])) {
            rejected += 1;
            continue;
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let v: f64 = cells[i].parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                row: row_number,
                column: header[i].clone(),
                message: format!("not a number: {:?}", cells[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path_str.clone(),
                    row: row_number,
                    column: header[i].clone(),
                    message: format!("non-finite value: {v}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{path_str}: no usable rows ({rejected} rejected)"
        )));
    }

    if let Some(expected) = schema.expected_samples {
        if raw_rows != expected {
            return Err(Error::InvalidInput(format!(
                "{path_str}: {raw_rows} samples but schema declares {expected}"
            )));
        }
    }
    if let Some(expected) = schema.expected_normals {
        if raw_normals != expected {
            return Err(Error::InvalidInput(format!(
                "{path_str}: {raw_normals} normals but schema declares {expected}"
            )));
        }
    }

    let f = feature_idx.len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Dataset {
        name: schema.name.clone(),
        features: DMatrix::from_row_slice(rows.len(), f, &flat),
        labels,
        rejected_rows: rejected,
        provenance: schema.provenance.clone().unwrap_or_default(),
    })
}
