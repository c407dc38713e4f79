use serde::{Deserialize, Serialize};

/// At most this many bins per feature, so bin indices fit in a `u8`.
pub const MAX_BINS: usize = 256;

/// Per-feature split thresholds. A value falls in bin `b` when exactly `b`
/// thresholds are below it, so "bin <= b" is the same test as
/// "x <= thresholds[b]".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub thresholds: Vec<Vec<f64>>,
}

impl BinMapper {
    /// Thresholds are midpoints between adjacent distinct values; features
    /// with more than 256 distinct values use evenly spaced quantiles of the
    /// distinct values.
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let thresholds = (0..d)
            .map(|f| {
                let mut u: Vec<f64> = x.iter().map(|r| r[f]).collect();
                u.sort_by(f64::total_cmp);
                u.dedup();
                if u.len() <= MAX_BINS {
                    u.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
                } else {
                    let mut t: Vec<f64> = (1..MAX_BINS)
                        .map(|q| {
                            let i = q * u.len() / MAX_BINS;
                            0.5 * (u[i - 1] + u[i])
                        })
                        .collect();
                    t.dedup();
                    t
                }
            })
            .collect();
        Self { thresholds }
    }

    pub fn n_bins(&self, f: usize) -> usize {
        self.thresholds[f].len() + 1
    }

    pub fn bin(&self, f: usize, v: f64) -> u8 {
        self.thresholds[f].partition_point(|&t| t < v) as u8
    }

    /// Column-major bin indices.
    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<u8>> {
        (0..self.thresholds.len())
            .map(|f| x.iter().map(|r| self.bin(f, r[f])).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bin_test_matches_threshold_test(col in prop::collection::vec(-100.0f64..100.0, 2..600)) {
            let x: Vec<Vec<f64>> = col.iter().map(|v| vec![*v]).collect();
            let m = BinMapper::fit(&x);
            prop_assert!(m.n_bins(0) <= MAX_BINS);
            for &v in &col {
                let b = m.bin(0, v) as usize;
                for (j, t) in m.thresholds[0].iter().enumerate() {
                    prop_assert_eq!(b <= j, v <= *t);
                }
            }
        }
    }

    #[test]
    fn distinct_values_get_distinct_bins() {
        let x: Vec<Vec<f64>> = [3.0, 1.0, 2.0, 2.0].iter().map(|v| vec![*v]).collect();
        let m = BinMapper::fit(&x);
        assert_eq!(m.thresholds[0], vec![1.5, 2.5]);
        assert_eq!(m.transform(&x)[0], vec![2, 0, 1, 1]);
    }
}
