use serde::{Deserialize, Serialize};

use crate::classify::{FoldMode, Family, Hyper};
use crate::error::{Error, Result};
use crate::explain::ShapConfig;
use crate::features::FeatureSetId;
use crate::pairing::DEFAULT_COS_THRESHOLD;
use crate::segment::SegmentationConfig;
use crate::syllables::OscillatorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairingConfig {
    pub per_class_quota: Option<usize>,
    pub cos_threshold: f64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            per_class_quota: None,
            cos_threshold: DEFAULT_COS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    pub families: Vec<Family>,
    pub folds: usize,
    pub fold_mode: FoldMode,
    pub hyper: Hyper,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            folds: 5,
            fold_mode: FoldMode::Stratified,
            hyper: Hyper::default(),
        }
    }
}

/// What the explained model is trained on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMode {
    /// Single dog clips labelled by language environment.
    #[default]
    Clip,
    /// Context-matched pairs with the four pair classes; the `_left` and
    /// `_right` attributions of each dimension are summed.
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub feature_set: FeatureSetId,
    pub family: Family,
    pub mode: ExplainMode,
    pub shap: ShapConfig,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            feature_set: FeatureSetId::GemapsLite,
            family: Family::GradientBoostedTrees,
            mode: ExplainMode::Clip,
            shap: ShapConfig::default(),
        }
    }
}

/// Settings for every stage; the manifest header carries defaults and
/// command-line flags override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub segmentation: SegmentationConfig,
    pub feature_sets: Vec<FeatureSetId>,
    pub pairing: PairingConfig,
    pub classify: ClassifyConfig,
    pub explain: ExplainConfig,
    pub syllables: OscillatorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segmentation: SegmentationConfig::default(),
            feature_sets: FeatureSetId::ALL.to_vec(),
            pairing: PairingConfig::default(),
            classify: ClassifyConfig::default(),
            explain: ExplainConfig::default(),
            syllables: OscillatorConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        self.syllables.validate()?;
        if self.feature_sets.is_empty() {
            return Err(Error::InvalidArgument("no feature sets selected".into()));
        }
        if self.classify.families.is_empty() {
            return Err(Error::InvalidArgument("no model families selected".into()));
        }
        if self.classify.folds < 2 {
            return Err(Error::InvalidArgument("need at least 2 folds".into()));
        }
        if !(-1.0..=1.0).contains(&self.pairing.cos_threshold) {
            return Err(Error::InvalidArgument(format!(
                "cosine threshold {} outside [-1, 1]",
                self.pairing.cos_threshold
            )));
        }
        if self.explain.mode == ExplainMode::Pair && !self.feature_sets.contains(&self.explain.feature_set) {
            return Err(Error::InvalidArgument(format!(
                "pair-mode attribution needs {} among the feature sets",
                self.explain.feature_set
            )));
        }
        if !(self.explain.shap.prominence_cutoff >= 0.0) || self.explain.shap.n_permutations == 0 {
            return Err(Error::InvalidArgument("bad attribution settings".into()));
        }
        Ok(())
    }
}
