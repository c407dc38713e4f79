//! Shapley attribution of trained models and correlation of dog-vocal
//! features with host speech.

mod correlate;
mod dims;
mod pearson;
mod shapley;

use std::path::Path;

use crate::error::{Error, Result};

pub use correlate::{correlate_pairs, write_correlation_csv, PearsonRow, VideoFeatures, SIGNIFICANCE};
pub use dims::{dim_type, DimType};
pub use pearson::{inc_beta, ln_gamma, pearson, pearson_p, pearson_r};
pub use shapley::{
    argmax_probability, efficiency_residual, explain_row, mean_abs_shap, shapley_exact, shapley_values, ShapConfig,
    ShapRow, MAX_EXACT_FEATURES,
};

/// Sums the `_left` and `_right` attributions of each base dimension of a
/// pair model, re-flags prominence and re-sorts.
pub fn fold_sides(rows: &[ShapRow], prominence_cutoff: f64) -> Vec<ShapRow> {
    let mut sums: std::collections::BTreeMap<&str, f64> = std::collections::BTreeMap::new();
    for r in rows {
        let base = r
            .feature_name
            .strip_suffix("_left")
            .or_else(|| r.feature_name.strip_suffix("_right"))
            .unwrap_or(&r.feature_name);
        *sums.entry(base).or_default() += r.mean_abs_shap;
    }
    let mut out: Vec<ShapRow> = sums
        .into_iter()
        .map(|(name, m)| ShapRow {
            feature_name: name.to_string(),
            mean_abs_shap: m,
            dim_type: dim_type(name),
            prominent: m > prominence_cutoff,
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_abs_shap
            .total_cmp(&a.mean_abs_shap)
            .then_with(|| a.feature_name.cmp(&b.feature_name))
    });
    out
}

/// `feature_name,dim_type,mean_abs_shap,prominent`, in the given order.
pub fn write_attribution_csv(rows: &[ShapRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature_name", "dim_type", "mean_abs_shap", "prominent"])?;
    for r in rows {
        w.write_record([
            r.feature_name.clone(),
            r.dim_type.map(|t| t.to_string()).unwrap_or_default(),
            r.mean_abs_shap.to_string(),
            r.prominent.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
