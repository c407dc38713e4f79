use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::GEMAPS_LITE_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DimType {
    Energy,
    Frequency,
    Temporal,
    Spectral,
}

impl fmt::Display for DimType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Dimensions whose type is fixed by the published prominent-dimension
/// table. Note the two slope rows there are typed Temporal.
const LISTED: [(&str, DimType); 10] = [
    ("loudness_sma3_amean", DimType::Energy),
    ("F0semitoneFrom27.5Hz_sma3nz_percentile50.0", DimType::Frequency),
    ("loudness_sma3_meanRisingSlope", DimType::Energy),
    ("logRelF0-H1-A3_sma3nz_stddevNorm", DimType::Frequency),
    ("loudnessPeaksPerSec", DimType::Temporal),
    ("F0semitoneFrom27.5Hz_sma3nz_percentile80.0", DimType::Frequency),
    ("hammarbergIndexV_sma3nz_stddevNorm", DimType::Spectral),
    ("slopeV0-500_sma3nz_amean", DimType::Temporal),
    ("loudness_sma3_percentile80.0", DimType::Energy),
    ("slopeV500-1500_sma3nz_stddevNorm", DimType::Temporal),
];

/// Type of a GeMAPS-lite dimension. Pair-feature names with a `_left` or
/// `_right` suffix are typed by their base name; other names get `None`.
pub fn dim_type(name: &str) -> Option<DimType> {
    let base = name
        .strip_suffix("_left")
        .or_else(|| name.strip_suffix("_right"))
        .unwrap_or(name);
    if !GEMAPS_LITE_NAMES.contains(&base) {
        return None;
    }
    if let Some((_, t)) = LISTED.iter().find(|(n, _)| *n == base) {
        return Some(*t);
    }
    Some(if base.starts_with("loudness") {
        DimType::Energy
    } else if base.starts_with("F0semitone") || base.starts_with("logRelF0") {
        DimType::Frequency
    } else if base.starts_with("slope") || base.starts_with("hammarberg") || base.starts_with("alpha") {
        DimType::Spectral
    } else {
        DimType::Temporal
    })
}
