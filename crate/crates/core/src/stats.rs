//! Small sample-statistics helpers.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn std_err(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    std_dev(x) / (x.len() as f64).sqrt()
}

/// Standard error of the mean of a correlated time series, estimated from
/// `n_bins` consecutive block averages.
pub fn binned_std_err(x: &[f64], n_bins: usize) -> f64 {
    let n_bins = n_bins.min(x.len()).max(1);
    let width = x.len() / n_bins;
    if width == 0 || n_bins < 2 {
        return std_err(x);
    }
    let blocks: Vec<f64> = x.chunks_exact(width).take(n_bins).map(mean).collect();
    std_err(&blocks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub err: f64,
}

impl Estimate {
    pub fn from_samples(x: &[f64]) -> Self {
        Estimate {
            mean: mean(x),
            err: std_err(x),
        }
    }
}
