//! Order-free statistical summaries of an instance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

pub const FEATURE_COUNT: usize = 10;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mean_over_c",
    "std_over_c",
    "max_over_c",
    "min_over_c",
    "median_over_c",
    "max_over_min",
    "ratio_small",
    "ratio_medium",
    "ratio_large",
    "ratio_huge",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_over_c: f64,
    pub std_over_c: f64,
    pub max_over_c: f64,
    pub min_over_c: f64,
    pub median_over_c: f64,
    pub max_over_min: f64,
    /// `w <= C/4`
    pub ratio_small: f64,
    /// `C/4 < w <= C/3`
    pub ratio_medium: f64,
    /// `C/3 < w <= C/2`
    pub ratio_large: f64,
    /// `w > C/2`
    pub ratio_huge: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.mean_over_c,
            self.std_over_c,
            self.max_over_c,
            self.min_over_c,
            self.median_over_c,
            self.max_over_min,
            self.ratio_small,
            self.ratio_medium,
            self.ratio_large,
            self.ratio_huge,
        ]
    }
}

/// Divisor used for the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1 (population convention for n = 1).
    Sample,
}

pub fn extract_features(instance: &Instance) -> Result<FeatureVector> {
    extract_features_with(instance, StdConvention::Population)
}

pub fn extract_features_with(instance: &Instance, std: StdConvention) -> Result<FeatureVector> {
    let items = instance.items();
    if items.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let n = items.len();
    let nf = n as f64;
    let c = f64::from(instance.capacity());
    let cap = u64::from(instance.capacity());

    // Integer moments keep every statistic independent of item order:
    // var = (n * sum(w^2) - sum(w)^2) / (n * divisor).
    let total = u128::from(instance.total_weight());
    let squares: u128 = items.iter().map(|&w| u128::from(w) * u128::from(w)).sum();
    let spread = n as u128 * squares - total * total;
    let divisor = match std {
        StdConvention::Sample if n > 1 => n - 1,
        _ => n,
    };
    let mean = total as f64 / nf;
    let sd = (spread as f64 / (nf * divisor as f64)).sqrt();

    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    let min = f64::from(sorted[0]);
    let max = f64::from(sorted[n - 1]);
    let median = if n % 2 == 1 {
        f64::from(sorted[n / 2])
    } else {
        (f64::from(sorted[n / 2 - 1]) + f64::from(sorted[n / 2])) / 2.0
    };

    // Class boundaries compared exactly: 4w <= C, 3w <= C, 2w <= C.
    let mut counts = [0usize; 4];
    for &w in items {
        let w = u64::from(w);
        let class = if 4 * w <= cap {
            0
        } else if 3 * w <= cap {
            1
        } else if 2 * w <= cap {
            2
        } else {
            3
        };
        counts[class] += 1;
    }

    Ok(FeatureVector {
        mean_over_c: mean / c,
        std_over_c: sd / c,
        max_over_c: max / c,
        min_over_c: min / c,
        median_over_c: median / c,
        max_over_min: max / min,
        ratio_small: counts[0] as f64 / nf,
        ratio_medium: counts[1] as f64 / nf,
        ratio_large: counts[2] as f64 / nf,
        ratio_huge: counts[3] as f64 / nf,
    })
}
