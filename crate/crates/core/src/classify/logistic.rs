//! Multinomial logistic regression with an L2 penalty on the weights (not
//! the intercepts), fitted by gradient descent with Barzilai-Borwein step
//! sizes and Armijo backtracking until the largest gradient component falls
//! below the tolerance.

use serde::{Deserialize, Serialize};

use super::scaler::Standardizer;
use super::softmax;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            tolerance: 1e-7,
            max_iter: 5000,
        }
    }
}

/// Weights are stored class-major: class `k` owns
/// `weights[k * (d + 1)..(k + 1) * (d + 1)]`, intercept last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub n_classes: usize,
    pub n_features: usize,
    pub scaler: Standardizer,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LrModel {
    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        Self {
            n_classes,
            n_features,
            scaler: Standardizer {
                mean: vec![0.0; n_features],
                scale: vec![1.0; n_features],
            },
            weights: vec![0.0; n_classes * (n_features + 1)],
            iterations: 0,
            converged: true,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let z = self.scaler.transform_row(row);
        softmax(&logits(&self.weights, &z, self.n_classes))
    }
}

fn logits(w: &[f64], z: &[f64], k: usize) -> Vec<f64> {
    let d = z.len();
    (0..k)
        .map(|c| {
            let wc = &w[c * (d + 1)..(c + 1) * (d + 1)];
            wc[d] + wc[..d].iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

/// Mean cross-entropy plus `lambda / 2 * |W|^2` and its gradient.
pub fn loss_grad(w: &[f64], x: &[Vec<f64>], y: &[usize], n_classes: usize, lambda: f64) -> (f64, Vec<f64>) {
    let d = x[0].len();
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; w.len()];
    for (row, &c) in x.iter().zip(y) {
        let s = logits(w, row, n_classes);
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - s[c];
        for k in 0..n_classes {
            let r = (s[k] - lse).exp() - if k == c { 1.0 } else { 0.0 };
            let gk = &mut grad[k * (d + 1)..(k + 1) * (d + 1)];
            for j in 0..d {
                gk[j] += r * row[j];
            }
            gk[d] += r;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for k in 0..n_classes {
        for j in 0..d {
            let i = k * (d + 1) + j;
            loss += 0.5 * lambda * w[i] * w[i];
            grad[i] += lambda * w[i];
        }
    }
    (loss, grad)
}

pub fn train_lr(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &LrParams) -> Result<LrModel> {
    if !(params.lambda >= 0.0) || !(params.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid regression parameters {params:?}")));
    }
    let d = x[0].len();
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let mut w = vec![0.0; n_classes * (d + 1)];
    let (mut f, mut g) = loss_grad(&w, &z, y, n_classes, params.lambda);
    let mut step = 1.0;
    let mut converged = false;
    let mut it = 0;
    while it < params.max_iter {
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax < params.tolerance {
            converged = true;
            break;
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut t = step;
        let (w_new, f_new, g_new) = loop {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let (fc, gc) = loss_grad(&cand, &z, y, n_classes, params.lambda);
            if fc <= f - 1e-4 * t * gg || t < 1e-18 {
                break (cand, fc, gc);
            }
            t *= 0.5;
        };
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..w.len() {
            let s = w_new[i] - w[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { 1.0 };
        let stalled = f_new >= f && t < 1e-18;
        w = w_new;
        f = f_new;
        g = g_new;
        it += 1;
        if stalled {
            break;
        }
    }
    Ok(LrModel {
        n_classes,
        n_features: d,
        scaler,
        weights: w,
        iterations: it,
        converged,
    })
}
