//! Algorithm selectors: a recurrent network over raw item sequences and
//! classical classifiers over instance features.

pub mod adam;
pub mod error;
pub mod recurrent;
pub mod tabular;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use error::{ModelError, Result};
pub use recurrent::{train_recurrent, CellKind, EpochStats, OneHotTarget, RecurrentNetwork, TrainConfig};
pub use tabular::{fit_features, fit_tabular, TabularKind, TabularModel, TabularModelSpec};

/// Number of candidate heuristics a selector scores.
pub const OUTPUTS: usize = 4;

/// Index of the largest score; ties go to the earliest position, which is the
/// BF, FF, NF, WF order.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn log_softmax(logits: &[f64; OUTPUTS]) -> [f64; OUTPUTS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.map(|l| l - lse)
}

pub(crate) fn softmax(logits: &[f64; OUTPUTS]) -> [f64; OUTPUTS] {
    log_softmax(logits).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.3, 0.3, 0.2, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax(&[0.0, 0.0, 0.0, 1.0]), 3);
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0, 0.0, -1000.0, 999.0]);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
