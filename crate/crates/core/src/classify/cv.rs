use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, train, Family, Hyper};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Classes spread evenly over folds.
    #[default]
    Stratified,
    /// Rows sharing a group key (the left clip of a pair) stay in one fold.
    Grouped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub feature_set: Option<String>,
    pub family: Option<Family>,
    pub fold_mode: FoldMode,
    /// False when stratification was requested but some class had fewer
    /// rows than folds, so a plain shuffled split was used instead.
    pub stratified: bool,
    pub fold_sizes: Vec<usize>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

/// Partitions `0..n` into `n_folds` disjoint folds.
///
/// Stratified: each class is shuffled and dealt round-robin, continuing the
/// dealer position across classes so fold sizes differ by at most one.
/// Grouped: shuffled groups go to the currently smallest fold.
pub fn assign_folds(
    y: &[usize],
    groups: &[String],
    n_folds: usize,
    mode: FoldMode,
    seed: u64,
) -> Result<(Vec<Vec<usize>>, bool)> {
    let n = y.len();
    if n_folds < 2 || n < n_folds {
        return Err(Error::InvalidArgument(format!(
            "{n_folds} folds need at least {n_folds} rows, got {n}"
        )));
    }
    let mut r = rng::rng(seed);
    let mut folds = vec![Vec::new(); n_folds];
    let mut stratified = false;
    match mode {
        FoldMode::Stratified => {
            let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &c) in y.iter().enumerate() {
                by_class.entry(c).or_default().push(i);
            }
            if by_class.values().all(|v| v.len() >= n_folds) {
                stratified = true;
                let mut pos = 0;
                for mut idx in by_class.into_values() {
                    idx.shuffle(&mut r);
                    for i in idx {
                        folds[pos % n_folds].push(i);
                        pos += 1;
                    }
                }
            } else {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut r);
                for (p, i) in idx.into_iter().enumerate() {
                    folds[p % n_folds].push(i);
                }
            }
        }
        FoldMode::Grouped => {
            let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, g) in groups.iter().enumerate() {
                by_group.entry(g.as_str()).or_default().push(i);
            }
            if by_group.len() < n_folds {
                return Err(Error::InvalidArgument(format!(
                    "{} groups cannot fill {n_folds} folds",
                    by_group.len()
                )));
            }
            let mut gs: Vec<Vec<usize>> = by_group.into_values().collect();
            gs.shuffle(&mut r);
            for g in gs {
                let smallest = (0..n_folds).min_by_key(|&f| (folds[f].len(), f)).unwrap();
                folds[smallest].extend(g);
            }
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok((folds, stratified))
}

/// Cross-validation with an arbitrary fit function returning a predictor.
/// Fold `i` is trained with seed `sub_seed(seed, i)`.
pub fn cross_validate_fn<F, P>(data: &Dataset, n_folds: usize, mode: FoldMode, seed: u64, fit: F) -> Result<CvReport>
where
    F: Fn(&Dataset, u64) -> Result<P> + Sync,
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (folds, stratified) = assign_folds(&data.y, &data.groups, n_folds, mode, rng::sub_seed(seed, u64::MAX))?;
    let k = data.n_classes;
    let per_fold: Vec<Result<Vec<Vec<u64>>>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; data.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
            let predictor = fit(&data.subset(&train_idx), rng::sub_seed(seed, f as u64))?;
            let mut conf = vec![vec![0u64; k]; k];
            for &i in test {
                let p = predictor(&data.x[i])?;
                conf[data.y[i]][argmax(&p)] += 1;
            }
            Ok(conf)
        })
        .collect();
    let mut confusion = vec![vec![0u64; k]; k];
    let mut fold_accuracies = Vec::with_capacity(n_folds);
    for conf in per_fold {
        let conf = conf?;
        let total: u64 = conf.iter().flatten().sum();
        let correct: u64 = (0..k).map(|c| conf[c][c]).sum();
        fold_accuracies.push(correct as f64 / total as f64);
        for a in 0..k {
            for b in 0..k {
                confusion[a][b] += conf[a][b];
            }
        }
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvReport {
        feature_set: None,
        family: None,
        fold_mode: mode,
        stratified,
        fold_sizes: folds.iter().map(Vec::len).collect(),
        fold_accuracies,
        mean_accuracy,
        confusion,
    })
}

pub fn cross_validate(
    data: &Dataset,
    family: Family,
    hyper: &Hyper,
    n_folds: usize,
    mode: FoldMode,
    seed: u64,
) -> Result<CvReport> {
    let mut rep = cross_validate_fn(data, n_folds, mode, seed, |train_set, s| {
        let m = train(family, train_set, hyper, s)?;
        Ok(move |row: &[f64]| m.predict_proba(row))
    })?;
    rep.family = Some(family);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tests::blobs;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn hundred_rows_give_five_twenties() {
        let y: Vec<usize> = (0..100).map(|i| i % 4).collect();
        let g: Vec<String> = (0..100).map(|i| i.to_string()).collect();
        let (folds, strat) = assign_folds(&y, &g, 5, FoldMode::Stratified, 1).unwrap();
        assert!(strat);
        assert!(folds.iter().all(|f| f.len() == 20));
    }

    #[test]
    fn rare_class_falls_back_to_plain_split() {
        let mut y = vec![0; 30];
        y[0] = 1;
        let g: Vec<String> = (0..30).map(|i| i.to_string()).collect();
        let (folds, strat) = assign_folds(&y, &g, 5, FoldMode::Stratified, 1).unwrap();
        assert!(!strat);
        assert_eq!(folds.iter().map(Vec::len).sum::<usize>(), 30);
    }

    #[test]
    fn constant_predictor_scores_majority_share() {
        // 40 % of rows are class 2.
        let y: Vec<usize> = (0..100).map(|i| if i % 5 < 2 { 2 } else { i % 2 }).collect();
        let majority = y.iter().filter(|&&c| c == 2).count() as f64 / 100.0;
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let ds = Dataset::new(vec!["i".into()], x, y, 4).unwrap();
        let rep = cross_validate_fn(&ds, 5, FoldMode::Stratified, 3, |_, _| {
            Ok(|_: &[f64]| Ok(vec![0.0, 0.0, 1.0, 0.0]))
        })
        .unwrap();
        // Stratified folds of 20 rows: the majority share per fold is exact
        // up to one row.
        assert!((rep.mean_accuracy - majority).abs() <= 1.0 / 20.0);
        for a in &rep.fold_accuracies {
            assert!((a - majority).abs() <= 1.0 / 20.0 + 1e-12);
        }
        let row_sums: Vec<u64> = rep.confusion.iter().map(|r| r.iter().sum()).collect();
        let counts: Vec<u64> = ds.class_counts().iter().map(|&c| c as u64).collect();
        assert_eq!(row_sums, counts);
    }

    #[test]
    fn chance_level_on_noise() {
        let mut accs = Vec::new();
        let mut h = Hyper::default();
        h.gbt.rounds = 30;
        h.rf.n_trees = 30;
        for seed in 0..10 {
            let mut r = rng::rng(100 + seed);
            let x: Vec<Vec<f64>> = (0..200).map(|_| (0..6).map(|_| r.random::<f64>()).collect()).collect();
            let y: Vec<usize> = (0..200).map(|i| i % 4).collect();
            let ds = Dataset::new((0..6).map(|i| format!("f{i}")).collect(), x, y, 4).unwrap();
            for fam in Family::ALL {
                accs.push(cross_validate(&ds, fam, &h, 5, FoldMode::Stratified, seed).unwrap().mean_accuracy);
            }
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - 0.25).abs() <= 0.05, "{mean}");
    }

    #[test]
    fn deterministic_reports() {
        let ds = blobs(4, 15, 2.0);
        let mut h = Hyper::default();
        h.gbt.rounds = 10;
        h.rf.n_trees = 10;
        for fam in Family::ALL {
            let a = cross_validate(&ds, fam, &h, 5, FoldMode::Stratified, 8).unwrap();
            let b = cross_validate(&ds, fam, &h, 5, FoldMode::Stratified, 8).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn folds_partition_rows(
            y in prop::collection::vec(0usize..4, 15..80),
            n_folds in 2usize..6,
            grouped in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let groups: Vec<String> = (0..y.len()).map(|i| (i / 3).to_string()).collect();
            let mode = if grouped { FoldMode::Grouped } else { FoldMode::Stratified };
            let (folds, _) = assign_folds(&y, &groups, n_folds, mode, seed).unwrap();
            prop_assert_eq!(folds.len(), n_folds);
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            if grouped {
                for f in &folds {
                    for &i in f {
                        for g in &folds {
                            if !std::ptr::eq(f, g) {
                                prop_assert!(g.iter().all(|&j| groups[j] != groups[i]));
                            }
                        }
                    }
                }
            } else {
                let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }
}
