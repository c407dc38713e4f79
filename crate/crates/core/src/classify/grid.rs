use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, CvReport, FoldMode};
use super::{Family, Hyper};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureSetId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub feature_set: FeatureSetId,
    pub family: Family,
    /// The report, or the error message for a failed cell.
    pub result: std::result::Result<CvReport, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyGrid {
    pub feature_sets: Vec<FeatureSetId>,
    pub families: Vec<Family>,
    /// Row-major: `cells[i * families.len() + j]`.
    pub cells: Vec<GridCell>,
}

impl AccuracyGrid {
    pub fn cell(&self, set: FeatureSetId, family: Family) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.feature_set == set && c.family == family)
    }

    /// Feature sets down, families across, mean accuracy to 4 decimals;
    /// failed cells read `ERR`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature_set");
        for f in &self.families {
            out.push(',');
            out.push_str(f.as_str());
        }
        out.push('\n');
        for (i, s) in self.feature_sets.iter().enumerate() {
            out.push_str(s.as_str());
            for j in 0..self.families.len() {
                out.push(',');
                match &self.cells[i * self.families.len() + j].result {
                    Ok(r) => out.push_str(&format!("{:.4}", r.mean_accuracy)),
                    Err(_) => out.push_str("ERR"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Cross-validates every (feature set, family) cell. A failing cell is
/// recorded, never fatal.
pub fn accuracy_grid(
    datasets: &[(FeatureSetId, Dataset)],
    families: &[Family],
    hyper: &Hyper,
    n_folds: usize,
    mode: FoldMode,
    seed: u64,
) -> AccuracyGrid {
    let jobs: Vec<(usize, Family)> = (0..datasets.len())
        .flat_map(|i| families.iter().map(move |f| (i, *f)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(i, family)| {
            let (set, ds) = &datasets[i];
            let result = cross_validate(ds, family, hyper, n_folds, mode, seed)
                .map(|mut r| {
                    r.feature_set = Some(set.to_string());
                    r
                })
                .map_err(|e| e.to_string());
            GridCell {
                feature_set: *set,
                family,
                result,
            }
        })
        .collect();
    AccuracyGrid {
        feature_sets: datasets.iter().map(|d| d.0).collect(),
        families: families.to_vec(),
        cells,
    }
}
