//! The four classifier families and the cross-validation harness.
//!
//! Trees (boosted and random forest) take raw feature values; KNN and
//! logistic regression standardize with statistics from their own training
//! rows only. Argmax ties resolve to the lowest class index.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub mod binning;
pub mod cv;
pub mod forest;
pub mod gbt;
pub mod grid;
pub mod knn;
pub mod logistic;
pub mod scaler;
pub mod tree;

pub use cv::{assign_folds, cross_validate, cross_validate_fn, CvReport, FoldMode};
pub use forest::{ForestModel, RfParams};
pub use gbt::{GbtModel, GbtParams};
pub use grid::{accuracy_grid, AccuracyGrid, GridCell};
pub use knn::{KnnModel, KnnParams};
pub use logistic::{LrModel, LrParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GradientBoostedTrees,
    KNearestNeighbors,
    LogisticRegression,
    RandomForest,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::GradientBoostedTrees,
        Family::KNearestNeighbors,
        Family::LogisticRegression,
        Family::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::GradientBoostedTrees => "gradient_boosted_trees",
            Family::KNearestNeighbors => "k_nearest_neighbors",
            Family::LogisticRegression => "logistic_regression",
            Family::RandomForest => "random_forest",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Family::GradientBoostedTrees => "gbt",
            Family::KNearestNeighbors => "knn",
            Family::LogisticRegression => "lr",
            Family::RandomForest => "rf",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s || f.short() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model family '{s}'")))
    }
}

/// Hyperparameters for every family; `train` reads the one it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub gbt: GbtParams,
    pub knn: KnnParams,
    pub lr: LrParams,
    pub rf: RfParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "state", rename_all = "snake_case")]
pub enum ModelParams {
    GradientBoostedTrees(GbtModel),
    KNearestNeighbors(KnnModel),
    LogisticRegression(LrModel),
    RandomForest(ForestModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: Family,
    pub n_classes: usize,
    pub n_features: usize,
    pub hyper: Hyper,
    pub seed: u64,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::GradientBoostedTrees(m) => m.predict_proba(row),
            ModelParams::KNearestNeighbors(m) => m.predict_proba(row),
            ModelParams::LogisticRegression(m) => m.predict_proba(row),
            ModelParams::RandomForest(m) => m.predict_proba(row),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        self.predict_proba(row).map(|p| argmax(&p))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        if f.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "model format {} is not supported",
                f.format_version
            )));
        }
        Ok(f.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub fn train(family: Family, data: &Dataset, hyper: &Hyper, seed: u64) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(Error::Degenerate("no training rows".into()));
    }
    if data.n_classes < 2 {
        return Err(Error::InvalidArgument("at least two classes are required".into()));
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 && matches!(family, Family::GradientBoostedTrees | Family::LogisticRegression) {
        return Err(Error::Degenerate(format!(
            "{family} needs at least two classes in the training data"
        )));
    }
    let (x, y, k) = (&data.x, &data.y, data.n_classes);
    let params = match family {
        Family::GradientBoostedTrees => ModelParams::GradientBoostedTrees(gbt::train_gbt(x, y, k, &hyper.gbt, seed)?),
        Family::KNearestNeighbors => ModelParams::KNearestNeighbors(knn::train_knn(x, y, k, &hyper.knn)?),
        Family::LogisticRegression => ModelParams::LogisticRegression(logistic::train_lr(x, y, k, &hyper.lr)?),
        Family::RandomForest => ModelParams::RandomForest(forest::train_forest(x, y, k, &hyper.rf, seed)?),
    };
    Ok(TrainedModel {
        family,
        n_classes: k,
        n_features: data.dim(),
        hyper: hyper.clone(),
        seed,
        params,
    })
}

pub fn softmax(s: &[f64]) -> Vec<f64> {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// `-log softmax(s)[c]`, computed stably.
pub fn cross_entropy(s: &[f64], c: usize) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - s[c]
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(seed: u64, per_class: usize, sep: f64) -> Dataset {
        let mut r = rng::rng(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for c in 0..4 {
            for _ in 0..per_class {
                let centre = [(c % 2) as f64 * sep, (c / 2) as f64 * sep, 0.0];
                x.push(centre.iter().map(|m| m + noise.sample(&mut r)).collect());
                y.push(c);
            }
        }
        Dataset::new(vec!["a".into(), "b".into(), "c".into()], x, y, 4).unwrap()
    }

    #[test]
    fn separable_blobs_are_fit_by_every_family() {
        let ds = blobs(1, 30, 20.0);
        for fam in Family::ALL {
            let m = train(fam, &ds, &Hyper::default(), 0).unwrap();
            for (row, &c) in ds.x.iter().zip(&ds.y) {
                let p = m.predict_proba(row).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert_eq!(argmax(&p), c, "{fam}");
            }
        }
    }

    #[test]
    fn single_class_rejected_for_lr_and_gbt() {
        let ds = Dataset::new(vec!["a".into()], vec![vec![0.0], vec![1.0]], vec![2, 2], 4).unwrap();
        for fam in [Family::GradientBoostedTrees, Family::LogisticRegression] {
            assert!(matches!(train(fam, &ds, &Hyper::default(), 0), Err(Error::Degenerate(_))));
        }
    }

    #[test]
    fn dimension_checked_at_prediction() {
        let ds = blobs(2, 5, 5.0);
        let m = train(Family::KNearestNeighbors, &ds, &Hyper::default(), 0).unwrap();
        assert!(matches!(m.predict_proba(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let ds = blobs(3, 10, 3.0);
        let mut h = Hyper::default();
        h.gbt.rounds = 10;
        h.rf.n_trees = 10;
        for fam in Family::ALL {
            let m = train(fam, &ds, &h, 5).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn family_names() {
        for f in Family::ALL {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
            assert_eq!(f.short().parse::<Family>().unwrap(), f);
        }
        assert_eq!(argmax(&[0.3, 0.3, 0.1]), 0);
    }
}
