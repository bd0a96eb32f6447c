use binsel_core::HeuristicKind;
use binsel_models::recurrent::{cross_entropy_from_logits, SequenceExample};
use binsel_models::{CellKind, RecurrentNetwork};
use proptest::prelude::*;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn mean_loss(net: &RecurrentNetwork, batch: &[SequenceExample]) -> f64 {
    batch
        .iter()
        .map(|e| cross_entropy_from_logits(&net.logits(&e.inputs), e.target))
        .sum::<f64>()
        / batch.len() as f64
}

/// Largest relative error between the analytic gradient and central
/// differences. Magnitudes below 1e-6 are compared absolutely.
fn worst_relative_error(mut net: RecurrentNetwork, batch: &[SequenceExample]) -> f64 {
    let analytic = net.backward_batch(batch).grads;
    let mut worst: f64 = 0.0;
    for i in 0..net.n_params() {
        let original = net.params()[i];
        net.params_mut()[i] = original + STEP;
        let up = mean_loss(&net, batch);
        net.params_mut()[i] = original - STEP;
        let down = mean_loss(&net, batch);
        net.params_mut()[i] = original;
        let numeric = (up - down) / (2.0 * STEP);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

fn example(inputs: Vec<f64>, class: usize) -> SequenceExample {
    SequenceExample {
        inputs,
        target: HeuristicKind::ALL[class].into(),
    }
}

#[test]
fn one_unit_three_steps() {
    for cell in [CellKind::Gru, CellKind::Lstm] {
        let net = RecurrentNetwork::new(cell, &[1, 1], 5);
        let batch = [example(vec![0.3, 0.8, 0.5], 2)];
        let err = worst_relative_error(net, &batch);
        assert!(err < TOLERANCE, "{cell}: {err}");
    }
}

#[test]
fn randomised_biases_are_checked_too() {
    // Glorot leaves biases at zero; perturb every parameter so all code paths
    // see generic values.
    for cell in [CellKind::Gru, CellKind::Lstm] {
        let mut net = RecurrentNetwork::new(cell, &[3, 2], 8);
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            *p += 0.1 * ((i * 37 % 11) as f64 - 5.0) / 5.0;
        }
        let batch = [example(vec![0.9, 0.1, 0.4, 0.6], 0), example(vec![0.2, 0.7], 3)];
        let err = worst_relative_error(net, &batch);
        assert!(err < TOLERANCE, "{cell}: {err}");
    }
}

fn arb_cell() -> impl Strategy<Value = CellKind> {
    prop_oneof![Just(CellKind::Gru), Just(CellKind::Lstm)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_matches_finite_differences(
        cell in arb_cell(),
        widths in prop::collection::vec(1usize..=4, 1..=2),
        seed in any::<u64>(),
        sequences in prop::collection::vec(
            (prop::collection::vec(0.0f64..1.0, 2..=5), 0usize..4),
            1..=3,
        ),
    ) {
        let net = RecurrentNetwork::new(cell, &widths, seed);
        let batch: Vec<_> = sequences.into_iter().map(|(x, c)| example(x, c)).collect();
        let err = worst_relative_error(net, &batch);
        prop_assert!(err < TOLERANCE, "relative error {}", err);
    }
}
