//! Multiclass gradient-boosted trees on the softmax cross-entropy.
//!
//! Each round fits one regression tree per class to the gradient and
//! hessian at the current scores, with Newton leaf values
//! `-lr * G / (H + lambda)` and split gain
//! `G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)`.
//! Candidate thresholds come from a histogram of at most 256 bins per
//! feature.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinMapper;
use super::tree::{push_placeholder, Node, Tree};
use super::{cross_entropy, softmax};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_hessian: f64,
    /// Fraction of rows drawn without replacement for each round.
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            max_depth: 4,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_hessian: 1e-3,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_classes: usize,
    /// `rounds[r][k]` is the tree added to class `k`'s score in round `r`.
    pub rounds: Vec<Vec<Tree>>,
    /// Mean training cross-entropy before the first round and after each.
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        for round in &self.rounds {
            for (k, t) in round.iter().enumerate() {
                s[k] += t.predict(row);
            }
        }
        s
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(row))
    }
}

pub fn train_gbt(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &GbtParams, seed: u64) -> Result<GbtModel> {
    if params.max_depth == 0 || !(params.learning_rate > 0.0) || !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::InvalidArgument(format!("invalid boosting parameters {params:?}")));
    }
    let n = x.len();
    let mapper = BinMapper::fit(x);
    let bins = mapper.transform(x);
    let mut scores = vec![vec![0.0; n_classes]; n];
    let loss = |scores: &[Vec<f64>]| -> f64 {
        scores.iter().zip(y).map(|(s, &c)| cross_entropy(s, c)).sum::<f64>() / n as f64
    };
    let mut train_loss = vec![loss(&scores)];
    let mut rounds = Vec::with_capacity(params.rounds);
    let mut rng = rng::rng(seed);

    for _ in 0..params.rounds {
        let rows: Vec<usize> = if params.subsample < 1.0 {
            let m = ((n as f64 * params.subsample).round() as usize).max(1);
            let mut r = sample(&mut rng, n, m).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let trees: Vec<Tree> = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let g: Vec<f64> = (0..n)
                    .map(|i| probs[i][k] - if y[i] == k { 1.0 } else { 0.0 })
                    .collect();
                let h: Vec<f64> = (0..n).map(|i| (probs[i][k] * (1.0 - probs[i][k])).max(1e-16)).collect();
                let mut b = Builder {
                    bins: &bins,
                    mapper: &mapper,
                    g: &g,
                    h: &h,
                    params,
                    nodes: Vec::new(),
                };
                let root = push_placeholder(&mut b.nodes);
                b.grow(root, rows.clone(), 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        for (i, s) in scores.iter_mut().enumerate() {
            for (k, t) in trees.iter().enumerate() {
                s[k] += t.predict(&x[i]);
            }
        }
        train_loss.push(loss(&scores));
        rounds.push(trees);
    }
    Ok(GbtModel {
        n_classes,
        rounds,
        train_loss,
    })
}

struct Builder<'a> {
    bins: &'a [Vec<u8>],
    mapper: &'a BinMapper,
    g: &'a [f64],
    h: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn grow(&mut self, slot: usize, rows: Vec<usize>, depth: usize) {
        let gs: f64 = rows.iter().map(|&i| self.g[i]).sum();
        let hs: f64 = rows.iter().map(|&i| self.h[i]).sum();
        let leaf = Node::Leaf {
            value: -self.params.learning_rate * gs / (hs + self.params.lambda),
        };
        if depth >= self.params.max_depth || rows.len() < 2 {
            self.nodes[slot] = leaf;
            return;
        }
        let parent = self.score(gs, hs);
        let mut best: Option<(f64, usize, usize)> = None;
        for (f, col) in self.bins.iter().enumerate() {
            let nb = self.mapper.n_bins(f);
            if nb < 2 {
                continue;
            }
            let mut hg = vec![0.0; nb];
            let mut hh = vec![0.0; nb];
            let mut hc = vec![0usize; nb];
            for &i in &rows {
                let b = col[i] as usize;
                hg[b] += self.g[i];
                hh[b] += self.h[i];
                hc[b] += 1;
            }
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for b in 0..nb - 1 {
                gl += hg[b];
                hl += hh[b];
                cl += hc[b];
                if cl == 0 || cl == rows.len() {
                    continue;
                }
                let hr = hs - hl;
                if hl < self.params.min_child_hessian || hr < self.params.min_child_hessian {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gs - gl, hr) - parent;
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, b));
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
        self.grow(left, l_rows, depth + 1);
        self.grow(right, r_rows, depth + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::argmax;
    use rand::Rng;

    fn threshold_data() -> (Vec<Vec<f64>>, Vec<usize>) {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 100.0]).collect();
        let y = (0..100).map(|i| i / 25).collect();
        (x, y)
    }

    #[test]
    fn stumps_fit_threshold_data_quickly() {
        let (x, y) = threshold_data();
        let p = GbtParams {
            rounds: 5,
            max_depth: 1,
            ..Default::default()
        };
        let m = train_gbt(&x, &y, 4, &p, 0).unwrap();
        let acc = x.iter().zip(&y).filter(|(r, &c)| argmax(&m.predict_proba(r)) == c).count();
        assert_eq!(acc, 100);
        assert!(m.rounds.iter().flatten().all(|t| t.depth() <= 1));
    }

    /// Independent traversal: recursive, reading the arena directly.
    fn traverse(t: &Tree, i: usize, row: &[f64]) -> f64 {
        match &t.nodes[i] {
            Node::Leaf { value } => *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] > *threshold {
                    traverse(t, *right, row)
                } else {
                    traverse(t, *left, row)
                }
            }
        }
    }

    #[test]
    fn prediction_matches_traversal_oracle() {
        let mut r = rng::rng(4);
        let x: Vec<Vec<f64>> = (0..120).map(|_| (0..3).map(|_| r.random::<f64>()).collect()).collect();
        let y: Vec<usize> = x.iter().map(|v| ((v[0] + v[1] * 2.0) * 1.5) as usize % 3).collect();
        let p = GbtParams {
            rounds: 15,
            ..Default::default()
        };
        let m = train_gbt(&x, &y, 3, &p, 1).unwrap();
        for _ in 0..50 {
            let row: Vec<f64> = (0..3).map(|_| r.random::<f64>() * 1.2 - 0.1).collect();
            let mut s = [0.0; 3];
            for round in &m.rounds {
                for k in 0..3 {
                    s[k] += traverse(&round[k], 0, &row);
                }
            }
            let z: f64 = s.iter().map(|v| v.exp()).sum();
            let want: Vec<f64> = s.iter().map(|v| v.exp() / z).collect();
            for (a, b) in m.predict_proba(&row).iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_loss_never_increases() {
        for seed in 0..5 {
            let mut r = rng::rng(seed);
            let x: Vec<Vec<f64>> = (0..150).map(|_| (0..4).map(|_| r.random::<f64>()).collect()).collect();
            let y: Vec<usize> = (0..150).map(|_| r.random_range(0..4)).collect();
            let p = GbtParams {
                rounds: 40,
                ..Default::default()
            };
            let m = train_gbt(&x, &y, 4, &p, seed).unwrap();
            assert_eq!(m.train_loss.len(), 41);
            assert!((m.train_loss[0] - 4f64.ln()).abs() < 1e-12);
            for w in m.train_loss.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{w:?}");
            }
        }
    }

    #[test]
    fn subsampling_is_seeded() {
        let (x, y) = threshold_data();
        let p = GbtParams {
            rounds: 5,
            subsample: 0.5,
            ..Default::default()
        };
        assert_eq!(train_gbt(&x, &y, 4, &p, 3).unwrap(), train_gbt(&x, &y, 4, &p, 3).unwrap());
        assert_ne!(train_gbt(&x, &y, 4, &p, 3).unwrap(), train_gbt(&x, &y, 4, &p, 4).unwrap());
    }
}
