//! Model-agnostic Shapley attribution.
//!
//! The value of a coalition `S` is the model output on a row that takes
//! features in `S` from the explained instance and the rest from a
//! background row. The Monte-Carlo estimator walks random feature orderings,
//! each paired with one background row; background rows are visited in a
//! seeded shuffled order and cycled, so when the permutation count is a
//! multiple of the background size the attributions sum exactly to
//! `f(x) - mean f(background)`.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{argmax, TrainedModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

use super::dims::{dim_type, DimType};

/// Exhaustive subset enumeration is limited to this many features.
pub const MAX_EXACT_FEATURES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapConfig {
    pub n_permutations: usize,
    pub background_size: usize,
    /// Rows whose attributions are averaged; `None` uses every row.
    pub sample_size: Option<usize>,
    pub prominence_cutoff: f64,
    /// Use exact subset enumeration instead of sampling (small `d` only).
    pub exact: bool,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            n_permutations: 200,
            background_size: 100,
            sample_size: Some(500),
            prominence_cutoff: 0.04,
            exact: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRow {
    pub feature_name: String,
    pub mean_abs_shap: f64,
    /// `None` for names outside the GeMAPS-lite vocabulary.
    pub dim_type: Option<DimType>,
    pub prominent: bool,
}

fn check(background: &[Vec<f64>], x: &[f64]) -> Result<()> {
    if background.is_empty() {
        return Err(Error::InvalidArgument("background set is empty".into()));
    }
    for b in background {
        if b.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: b.len(),
            });
        }
    }
    Ok(())
}

/// Monte-Carlo permutation estimate of the Shapley values of `value` at `x`.
pub fn shapley_values<F>(value: &F, background: &[Vec<f64>], x: &[f64], n_permutations: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    check(background, x)?;
    if n_permutations == 0 {
        return Err(Error::InvalidArgument("need at least one permutation".into()));
    }
    let d = x.len();
    let mut r = rng::rng(seed);
    let mut bg_order: Vec<usize> = (0..background.len()).collect();
    bg_order.shuffle(&mut r);
    let mut order: Vec<usize> = (0..d).collect();
    let mut phi = vec![0.0; d];
    for t in 0..n_permutations {
        order.shuffle(&mut r);
        let mut z = background[bg_order[t % background.len()]].clone();
        let mut prev = value(&z);
        for &i in &order {
            z[i] = x[i];
            let cur = value(&z);
            phi[i] += cur - prev;
            prev = cur;
        }
    }
    phi.iter_mut().for_each(|p| *p /= n_permutations as f64);
    Ok(phi)
}

/// Exact Shapley values by enumerating all `2^d` coalitions, each valued
/// as the mean over the whole background set.
pub fn shapley_exact<F>(value: &F, background: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    check(background, x)?;
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::InvalidArgument(format!(
            "exact Shapley values are limited to {MAX_EXACT_FEATURES} features, got {d}"
        )));
    }
    let v: Vec<f64> = (0..1usize << d)
        .map(|mask| {
            background
                .iter()
                .map(|b| {
                    let z: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { x[i] } else { b[i] }).collect();
                    value(&z)
                })
                .sum::<f64>()
                / background.len() as f64
        })
        .collect();
    // weight(|S|) = |S|! (d - |S| - 1)! / d!
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let weights: Vec<f64> = (0..d).map(|s| fact(s) * fact(d - s - 1) / fact(d)).collect();
    let mut phi = vec![0.0; d];
    for mask in 0..1usize << d {
        let s = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p += weights[s] * (v[mask | 1 << i] - v[mask]);
            }
        }
    }
    Ok(phi)
}

/// `|sum(phi) - (f(x) - mean f(background))|`.
pub fn efficiency_residual<F>(value: &F, background: &[Vec<f64>], x: &[f64], phi: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let base = background.iter().map(|b| value(b)).sum::<f64>() / background.len() as f64;
    (phi.iter().sum::<f64>() - (value(x) - base)).abs()
}

/// Value function explained for a row: the model probability of the class
/// it predicts for that row.
pub fn argmax_probability<'a>(model: &'a TrainedModel, x: &[f64]) -> Result<impl Fn(&[f64]) -> f64 + Sync + 'a> {
    let class = argmax(&model.predict_proba(x)?);
    Ok(move |z: &[f64]| model.predict_proba(z).map(|p| p[class]).unwrap_or(f64::NAN))
}

pub fn explain_row(model: &TrainedModel, background: &[Vec<f64>], x: &[f64], config: &ShapConfig, seed: u64) -> Result<Vec<f64>> {
    let f = argmax_probability(model, x)?;
    if config.exact {
        shapley_exact(&f, background, x)
    } else {
        shapley_values(&f, background, x, config.n_permutations, seed)
    }
}

/// Mean absolute attribution per feature over sampled rows, sorted from
/// high to low (ties by name).
pub fn mean_abs_shap(model: &TrainedModel, data: &Dataset, config: &ShapConfig, seed: u64) -> Result<Vec<ShapRow>> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no rows to explain".into()));
    }
    let n = data.len();
    let mut r = rng::rng(rng::sub_seed(seed, u64::MAX));
    let pick = |r: &mut _, k: usize| -> Vec<usize> {
        let mut v = sample(r, n, k.min(n)).into_vec();
        v.sort_unstable();
        v
    };
    let rows = pick(&mut r, config.sample_size.unwrap_or(n));
    let background: Vec<Vec<f64>> = pick(&mut r, config.background_size.max(1))
        .into_iter()
        .map(|i| data.x[i].clone())
        .collect();
    let per_row: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&i| explain_row(model, &background, &data.x[i], config, rng::sub_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for phi in &per_row {
        for (m, p) in mean.iter_mut().zip(phi) {
            *m += p.abs() / per_row.len() as f64;
        }
    }
    let mut out: Vec<ShapRow> = data
        .feature_names
        .iter()
        .zip(mean)
        .map(|(name, m)| ShapRow {
            feature_name: name.clone(),
            mean_abs_shap: m,
            dim_type: dim_type(name),
            prominent: m > config.prominence_cutoff,
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_abs_shap
            .total_cmp(&a.mean_abs_shap)
            .then_with(|| a.feature_name.cmp(&b.feature_name))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train, Family, Hyper};
    use rand::Rng;

    fn random_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut r = rng::rng(seed);
        (0..n).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
    }

    /// Shapley values by averaging marginal contributions over all d!
    /// orderings, coalitions valued against the full background.
    fn all_orderings<F: Fn(&[f64]) -> f64>(f: &F, bg: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let head = rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, head);
                    out.push(p);
                }
            }
            out
        }
        let d = x.len();
        let v = |set: &[usize]| {
            bg.iter()
                .map(|b| {
                    let mut z = b.clone();
                    set.iter().for_each(|&i| z[i] = x[i]);
                    f(&z)
                })
                .sum::<f64>()
                / bg.len() as f64
        };
        let ps = perms((0..d).collect());
        let mut phi = vec![0.0; d];
        for p in &ps {
            for k in 0..d {
                phi[p[k]] += v(&p[..=k]) - v(&p[..k]);
            }
        }
        phi.iter().map(|s| s / ps.len() as f64).collect()
    }

    #[test]
    fn linear_model_matches_closed_form() {
        let w = [0.7, -1.3, 2.0];
        let f = |z: &[f64]| 0.5 + z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let bg = random_rows(1, 25, 3);
        let x = [0.3, -0.8, 0.9];
        let means: Vec<f64> = (0..3).map(|j| bg.iter().map(|r| r[j]).sum::<f64>() / 25.0).collect();
        let closed: Vec<f64> = (0..3).map(|j| w[j] * (x[j] - means[j])).collect();
        let oracle = all_orderings(&f, &bg, &x);
        let exact = shapley_exact(&f, &bg, &x).unwrap();
        for j in 0..3 {
            assert!((oracle[j] - closed[j]).abs() < 1e-12);
            assert!((exact[j] - closed[j]).abs() < 1e-12);
        }
        // Linear models have no interactions, so every sampled ordering
        // gives the closed form for its background row.
        let mc = shapley_values(&f, &bg, &x, 250, 3).unwrap();
        for j in 0..3 {
            assert!((mc[j] - closed[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_matches_ordering_oracle_on_nonlinear_model() {
        let f = |z: &[f64]| (z[0] * z[1]).tanh() + z[2].max(0.0) * z[3] - (z[1] > 0.2) as u8 as f64;
        let bg = random_rows(2, 6, 4);
        let x = [0.4, 0.9, -0.3, 0.8];
        let exact = shapley_exact(&f, &bg, &x).unwrap();
        let oracle = all_orderings(&f, &bg, &x);
        for j in 0..4 {
            assert!((exact[j] - oracle[j]).abs() < 1e-12);
        }
        assert!(efficiency_residual(&f, &bg, &x, &exact) < 1e-9);
    }

    #[test]
    fn efficiency_in_sampling_mode() {
        let f = |z: &[f64]| z.iter().enumerate().map(|(i, v)| (v * (i + 1) as f64).sin()).product::<f64>();
        let bg = random_rows(3, 100, 20);
        let x = random_rows(4, 1, 20).remove(0);
        let phi = shapley_values(&f, &bg, &x, 2000, 5).unwrap();
        assert!(efficiency_residual(&f, &bg, &x, &phi) < 0.02);
    }

    #[test]
    fn null_and_dummy_features() {
        let bg = random_rows(5, 40, 5);
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        let c = |_: &[f64]| 0.7;
        let phi = shapley_values(&c, &bg, &x, 2000, 1).unwrap();
        assert!(phi.iter().all(|p| p.abs() < 1e-3));
        assert!(efficiency_residual(&c, &bg, &x, &phi) < 1e-15);
        let g = |z: &[f64]| (z[0] * 3.0).sin() + z[1] * z[2];
        let phi = shapley_values(&g, &bg, &x, 2000, 2).unwrap();
        assert!(phi[3].abs() < 1e-3 && phi[4].abs() < 1e-3);
    }

    #[test]
    fn duplicated_column_shares_credit() {
        let f = |z: &[f64]| 0.5 * (z[0] + z[1]) + 0.2 * z[2];
        let mut bg = random_rows(6, 50, 3);
        bg.iter_mut().for_each(|r| r[1] = r[0]);
        let x = [0.8, 0.8, -0.1];
        let phi = shapley_values(&f, &bg, &x, 2000, 4).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-3);
    }

    #[test]
    fn threshold_model_concentrates_mass() {
        let mut x = random_rows(7, 200, 4);
        let y: Vec<usize> = x.iter().map(|r| usize::from(r[2] > 0.0)).collect();
        x.iter_mut().for_each(|r| r[0] *= 0.5);
        let names = (0..4).map(|i| format!("f{i}")).collect();
        let ds = Dataset::new(names, x, y, 2).unwrap();
        let mut h = Hyper::default();
        h.gbt.rounds = 20;
        h.gbt.max_depth = 1;
        let m = train(Family::GradientBoostedTrees, &ds, &h, 0).unwrap();
        let cfg = ShapConfig {
            sample_size: Some(50),
            background_size: 50,
            n_permutations: 100,
            ..Default::default()
        };
        let rows = mean_abs_shap(&m, &ds, &cfg, 1).unwrap();
        let total: f64 = rows.iter().map(|r| r.mean_abs_shap).sum();
        assert_eq!(rows[0].feature_name, "f2");
        assert!(rows[0].mean_abs_shap >= 0.95 * total);
        assert_eq!(mean_abs_shap(&m, &ds, &cfg, 1).unwrap(), rows);
    }

    #[test]
    fn mismatched_background_rejected() {
        let f = |_: &[f64]| 0.0;
        assert!(shapley_values(&f, &[vec![0.0; 2]], &[0.0; 3], 10, 0).is_err());
        assert!(shapley_values(&f, &[], &[0.0; 3], 10, 0).is_err());
    }
}
