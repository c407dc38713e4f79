//! Random forest: bootstrap-sampled gini trees with a random feature subset
//! at every split. Class probabilities are vote fractions.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinMapper;
use super::tree::{push_placeholder, Node, Tree};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_features: None,
            max_depth: 32,
            min_samples_split: 2,
            bootstrap: true,
        }
    }
}

/// Leaves hold the voted class index as `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            p[t.predict(row) as usize] += 1.0;
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}

pub fn train_forest(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &RfParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let d = x[0].len();
    let m = params
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().round() as usize)
        .clamp(1, d);
    let mapper = BinMapper::fit(x);
    let bins = mapper.transform(x);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::sub_rng(seed, t as u64);
            let n = x.len();
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| r.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                bins: &bins,
                mapper: &mapper,
                y,
                n_classes,
                m,
                params,
                nodes: Vec::new(),
            };
            let root = push_placeholder(&mut b.nodes);
            b.grow(root, rows, 0, &mut r);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel { n_classes, trees })
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n * gini impurity
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct Builder<'a> {
    bins: &'a [Vec<u8>],
    mapper: &'a BinMapper,
    y: &'a [usize],
    n_classes: usize,
    m: usize,
    params: &'a RfParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, slot: usize, rows: Vec<usize>, depth: usize, r: &mut impl Rng) {
        let mut counts = vec![0usize; self.n_classes];
        for &i in &rows {
            counts[self.y[i]] += 1;
        }
        let majority = counts
            .iter()
            .enumerate()
            .fold((0, 0), |best, (k, &c)| if c > best.1 { (k, c) } else { best })
            .0;
        let leaf = Node::Leaf { value: majority as f64 };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            self.nodes[slot] = leaf;
            return;
        }
        let d = self.bins.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for f in sample(r, d, self.m).into_iter() {
            let nb = self.mapper.n_bins(f);
            if nb < 2 {
                continue;
            }
            let mut hist = vec![0usize; nb * self.n_classes];
            for &i in &rows {
                hist[self.bins[f][i] as usize * self.n_classes + self.y[i]] += 1;
            }
            let mut left = vec![0usize; self.n_classes];
            let mut nl = 0;
            for b in 0..nb - 1 {
                for k in 0..self.n_classes {
                    let c = hist[b * self.n_classes + k];
                    left[k] += c;
                    nl += c;
                }
                if nl == 0 || nl == rows.len() {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
                let imp = gini_sum(&left, nl) + gini_sum(&right, rows.len() - nl);
                if best.is_none_or(|(bi, _, _)| imp < bi) {
                    best = Some((imp, f, b));
                }
            }
        }
        let Some((_, f, b)) = best else {
            self.nodes[slot] = leaf;
            return;
        };
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.bins[f][i] as usize <= b);
        let left = push_placeholder(&mut self.nodes);
        let right = push_placeholder(&mut self.nodes);
        self.nodes[slot] = Node::Split {
            feature: f,
            threshold: self.mapper.thresholds[f][b],
            left,
            right,
        };
        self.grow(left, l_rows, depth + 1, r);
        self.grow(right, r_rows, depth + 1, r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_counts() {
        assert_eq!(gini_sum(&[5, 0], 5), 0.0);
        assert!((gini_sum(&[2, 2], 4) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn xor_is_learned_and_votes_sum_to_one() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let a = (i % 2) as f64 + 0.01 * (i % 7) as f64;
            let b = ((i / 2) % 2) as f64 + 0.01 * (i % 5) as f64;
            x.push(vec![a, b]);
            y.push(((i % 2) ^ ((i / 2) % 2)) as usize);
        }
        let p = RfParams {
            n_trees: 25,
            max_features: Some(2),
            ..Default::default()
        };
        let m = train_forest(&x, &y, 2, &p, 9).unwrap();
        for (r, &c) in x.iter().zip(&y) {
            let pr = m.predict_proba(r);
            assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(pr[c] > 0.5);
        }
        assert_eq!(m, train_forest(&x, &y, 2, &p, 9).unwrap());
    }
}
