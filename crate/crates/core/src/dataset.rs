use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labeled design matrix. Rows are observations, labels are class indices
/// in `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
    /// One identifier per row, e.g. `left|right` for clip pairs.
    pub row_ids: Vec<String>,
    /// Grouping key per row for grouped cross-validation.
    pub groups: Vec<String>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        let row_ids = (0..x.len()).map(|i| i.to_string()).collect::<Vec<_>>();
        let groups = row_ids.clone();
        let ds = Self {
            feature_names,
            x,
            y,
            n_classes,
            row_ids,
            groups,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if self.y.len() != n || self.row_ids.len() != n || self.groups.len() != n {
            return Err(Error::InvalidArgument(format!(
                "dataset has {n} rows but {} labels, {} ids, {} groups",
                self.y.len(),
                self.row_ids.len(),
                self.groups.len()
            )));
        }
        let d = self.feature_names.len();
        for (i, row) in self.x.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate(format!("row {i} has a non-finite value")));
            }
        }
        if let Some(&bad) = self.y.iter().find(|&&c| c >= self.n_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside 0..{}",
                self.n_classes
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
        }
    }
}
