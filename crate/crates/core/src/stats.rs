//! Small descriptive-statistics helpers shared across modules.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn mean_or_zero(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        mean(x)
    }
}

/// Population standard deviation; 0 for fewer than two values.
pub fn std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// `std / |mean|`, 0 for empty input or a zero mean.
pub fn stddev_norm(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x).abs();
    if m < 1e-300 {
        0.0
    } else {
        std(x) / m
    }
}

pub fn median(x: &[f64]) -> f64 {
    percentile(x, 50.0)
}

/// Percentile with linear interpolation between order statistics
/// (`p` in 0..=100). NaN for empty input.
pub fn percentile(x: &[f64], p: f64) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Centered 3-point moving average; edge points average what is available.
pub fn moving_average3(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(n);
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Slopes of maximal strictly rising and strictly falling runs, as
/// `(end - start) / (steps * step_s)`. Falling slopes are negative.
pub fn monotone_run_slopes(x: &[f64], step_s: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rise = Vec::new();
    let mut fall = Vec::new();
    let mut i = 0;
    while i + 1 < x.len() {
        let up = x[i + 1] > x[i];
        let down = x[i + 1] < x[i];
        if !up && !down {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < x.len() && ((up && x[i + 1] > x[i]) || (down && x[i + 1] < x[i])) {
            i += 1;
        }
        let slope = (x[i] - x[start]) / ((i - start) as f64 * step_s);
        if up {
            rise.push(slope);
        } else {
            fall.push(slope);
        }
    }
    (rise, fall)
}

/// Peaks that rise at least `delta` above the preceding trough and are
/// followed by a drop of at least `delta`, or by the end of the sequence
/// after a drop of at least `delta`.
pub fn count_peaks(x: &[f64], delta: f64) -> usize {
    if x.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut looking_for_peak = true;
    let mut lo = x[0];
    let mut hi = x[0];
    for &v in &x[1..] {
        if looking_for_peak {
            if v > hi {
                hi = v;
            }
            if v < lo {
                lo = v;
                hi = v;
            }
            if hi - lo >= delta && hi - v >= delta {
                count += 1;
                looking_for_peak = false;
                lo = v;
            }
        } else {
            if v < lo {
                lo = v;
            }
            if v - lo >= delta {
                looking_for_peak = true;
                hi = v;
            }
        }
    }
    count
}
