//! Classical selectors over feature vectors: k-nearest neighbours, Gaussian
//! naive Bayes, CART trees, random forests and a small ReLU network.

use binsel_core::features::FeatureVector;
use binsel_core::generate::stream_seed;
use binsel_core::HeuristicKind;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::error::{ModelError, Result};
use crate::{argmax, OUTPUTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TabularKind {
    Knn,
    Gnb,
    Tree,
    Forest,
    Mlp,
}

impl TabularKind {
    pub const ALL: [TabularKind; 5] = [
        TabularKind::Knn,
        TabularKind::Gnb,
        TabularKind::Tree,
        TabularKind::Forest,
        TabularKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TabularKind::Knn => "knn",
            TabularKind::Gnb => "gnb",
            TabularKind::Tree => "tree",
            TabularKind::Forest => "forest",
            TabularKind::Mlp => "mlp",
        }
    }
}

impl std::fmt::Display for TabularKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TabularKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        TabularKind::ALL
            .into_iter()
            .find(|k| k.as_str() == lower)
            .ok_or_else(|| format!("unknown tabular model {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnWeighting {
    Uniform,
    /// Votes weighted by `1 / distance`.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Features sampled at each split (all of them when this exceeds the
    /// feature count).
    pub max_features: usize,
    pub min_leaf: usize,
    pub min_split: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TabularModelSpec {
    Knn {
        k: usize,
        weighting: KnnWeighting,
        /// Minkowski exponent.
        p: u32,
    },
    Gnb {
        var_smoothing: f64,
    },
    Tree(TreeParams),
    Forest {
        tree: TreeParams,
        n_estimators: usize,
    },
    Mlp {
        hidden: Vec<usize>,
        epochs: usize,
        batch_size: usize,
        adam: AdamConfig,
    },
}

impl TabularModelSpec {
    /// Tuned settings for each model family.
    pub fn default_for(kind: TabularKind) -> Self {
        match kind {
            TabularKind::Knn => TabularModelSpec::Knn {
                k: 26,
                weighting: KnnWeighting::Distance,
                p: 1,
            },
            TabularKind::Gnb => TabularModelSpec::Gnb { var_smoothing: 1e-9 },
            TabularKind::Tree => TabularModelSpec::Tree(TreeParams {
                max_depth: 30,
                max_features: 5,
                min_leaf: 10,
                min_split: 100,
            }),
            TabularKind::Forest => TabularModelSpec::Forest {
                tree: TreeParams {
                    max_depth: 50,
                    max_features: 3,
                    min_leaf: 2,
                    min_split: 50,
                },
                n_estimators: 64,
            },
            TabularKind::Mlp => TabularModelSpec::Mlp {
                hidden: vec![10, 15],
                epochs: 3000,
                batch_size: 32,
                adam: AdamConfig::default(),
            },
        }
    }

    pub fn kind(&self) -> TabularKind {
        match self {
            TabularModelSpec::Knn { .. } => TabularKind::Knn,
            TabularModelSpec::Gnb { .. } => TabularKind::Gnb,
            TabularModelSpec::Tree(_) => TabularKind::Tree,
            TabularModelSpec::Forest { .. } => TabularKind::Forest,
            TabularModelSpec::Mlp { .. } => TabularKind::Mlp,
        }
    }

    /// Rejects settings outside the searched hyperparameter grid.
    pub fn validate(&self) -> Result<()> {
        fn within<T: PartialOrd + std::fmt::Display>(name: &str, v: T, lo: T, hi: T) -> Result<()> {
            if v < lo || v > hi {
                return Err(ModelError::InvalidConfig(format!("{name} = {v} outside [{lo}, {hi}]")));
            }
            Ok(())
        }
        fn tree(t: &TreeParams) -> Result<()> {
            within("max_depth", t.max_depth, 5, 100)?;
            within("max_features", t.max_features, 1, 10)?;
            within("min_leaf", t.min_leaf, 2, 100)?;
            within("min_split", t.min_split, 2, 100)
        }
        match self {
            TabularModelSpec::Knn { k, p, .. } => {
                within("k", *k, 1, 30)?;
                within("p", *p, 1, 5)
            }
            TabularModelSpec::Gnb { var_smoothing } => within("var_smoothing", *var_smoothing, 1e-9, 1e-1),
            TabularModelSpec::Tree(t) => tree(t),
            TabularModelSpec::Forest { tree: t, n_estimators } => {
                tree(t)?;
                within("n_estimators", *n_estimators, 32, 200)
            }
            TabularModelSpec::Mlp {
                hidden,
                epochs,
                batch_size,
                adam,
            } => {
                within("hidden layers", hidden.len(), 2, 3)?;
                for &h in hidden {
                    within("hidden units", h, 6, 64)?;
                }
                within("epochs", *epochs, 1, 3500)?;
                within("batch_size", *batch_size, 1, 4096)?;
                adam.validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Split feature; `None` marks a leaf.
    pub feature: Option<usize>,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Training rows reaching this node, per class.
    pub counts: [usize; OUTPUTS],
    pub depth: usize,
}

impl TreeNode {
    pub fn samples(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    fn leaf(&self, row: &[f64]) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let Some(f) = node.feature {
            node = &self.nodes[if row[f] <= node.threshold { node.left } else { node.right }];
        }
        node
    }

    pub fn probabilities(&self, row: &[f64]) -> [f64; OUTPUTS] {
        let leaf = self.leaf(row);
        let total = leaf.samples() as f64;
        leaf.counts.map(|c| c as f64 / total)
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnedState {
    Knn {
        rows: Vec<Vec<f64>>,
        labels: Vec<HeuristicKind>,
    },
    Gnb {
        priors: [f64; OUTPUTS],
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    Tree(DecisionTree),
    Forest(Vec<DecisionTree>),
    Mlp {
        layers: Vec<DenseLayer>,
        /// Mean training loss per epoch.
        history: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularModel {
    pub spec: TabularModelSpec,
    pub n_features: usize,
    /// Classes present in the training labels.
    pub seen: [bool; OUTPUTS],
    pub state: LearnedState,
}

fn class_presence(labels: &[HeuristicKind]) -> [bool; OUTPUTS] {
    let mut seen = [false; OUTPUTS];
    for l in labels {
        seen[l.index()] = true;
    }
    seen
}

/// Trains a model. Rows must share one width.
pub fn fit_tabular(spec: &TabularModelSpec, rows: &[Vec<f64>], labels: &[HeuristicKind], seed: u64) -> Result<TabularModel> {
    spec.validate()?;
    if rows.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            features: rows.len(),
            labels: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let n_features = rows[0].len();
    if n_features == 0 || rows.iter().any(|r| r.len() != n_features) {
        return Err(ModelError::InvalidConfig("feature rows must be non-empty and of equal width".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(ModelError::InvalidConfig("non-finite feature value".into()));
    }
    let seen = class_presence(labels);
    let distinct = seen.iter().filter(|&&s| s).count();
    let targets: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let state = match spec {
        TabularModelSpec::Knn { .. } => LearnedState::Knn {
            rows: rows.to_vec(),
            labels: labels.to_vec(),
        },
        TabularModelSpec::Gnb { var_smoothing } => {
            if distinct < 2 {
                return Err(ModelError::TooFewClasses(distinct));
            }
            fit_gnb(rows, &targets, *var_smoothing)
        }
        TabularModelSpec::Tree(params) => {
            let all: Vec<usize> = (0..rows.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            LearnedState::Tree(build_tree(rows, &targets, all, params, &mut rng))
        }
        TabularModelSpec::Forest { tree, n_estimators } => {
            let trees = (0..*n_estimators)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, t as u64));
                    let sample: Vec<usize> = (0..rows.len()).map(|_| rng.random_range(0..rows.len())).collect();
                    build_tree(rows, &targets, sample, tree, &mut rng)
                })
                .collect();
            LearnedState::Forest(trees)
        }
        TabularModelSpec::Mlp {
            hidden,
            epochs,
            batch_size,
            adam,
        } => {
            if distinct < 2 {
                return Err(ModelError::TooFewClasses(distinct));
            }
            fit_mlp(rows, &targets, hidden, *epochs, *batch_size, adam, seed)?
        }
    };
    Ok(TabularModel {
        spec: spec.clone(),
        n_features,
        seen,
        state,
    })
}

/// [`fit_tabular`] over extracted instance features.
pub fn fit_features(spec: &TabularModelSpec, features: &[FeatureVector], labels: &[HeuristicKind], seed: u64) -> Result<TabularModel> {
    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.to_array().to_vec()).collect();
    fit_tabular(spec, &rows, labels, seed)
}

impl TabularModel {
    /// Argmax label (restricted to classes seen in training, ties in BF, FF,
    /// NF, WF order) and the normalised class scores.
    pub fn predict(&self, row: &[f64]) -> (HeuristicKind, [f64; OUTPUTS]) {
        assert_eq!(row.len(), self.n_features, "feature width differs from training");
        let mut probs = match &self.state {
            LearnedState::Knn { rows, labels } => match &self.spec {
                TabularModelSpec::Knn { k, weighting, p } => knn_scores(rows, labels, row, *k, *weighting, *p),
                _ => unreachable!("state matches spec"),
            },
            LearnedState::Gnb {
                priors,
                means,
                variances,
            } => gnb_posteriors(priors, means, variances, row),
            LearnedState::Tree(tree) => tree.probabilities(row),
            LearnedState::Forest(trees) => {
                let mut acc = [0.0; OUTPUTS];
                for t in trees {
                    for (a, p) in acc.iter_mut().zip(t.probabilities(row)) {
                        *a += p;
                    }
                }
                acc.map(|a| a / trees.len() as f64)
            }
            LearnedState::Mlp { layers, .. } => mlp_forward(layers, row).probs,
        };
        for (p, &s) in probs.iter_mut().zip(&self.seen) {
            if !s {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        } else {
            let n = self.seen.iter().filter(|&&s| s).count() as f64;
            for (p, &s) in probs.iter_mut().zip(&self.seen) {
                *p = if s { 1.0 / n } else { 0.0 };
            }
        }
        (HeuristicKind::ALL[argmax(&probs)], probs)
    }

    pub fn predict_features(&self, features: &FeatureVector) -> (HeuristicKind, [f64; OUTPUTS]) {
        self.predict(&features.to_array())
    }

    /// Per-epoch mean training loss (MLP only; empty otherwise).
    pub fn loss_history(&self) -> &[f64] {
        match &self.state {
            LearnedState::Mlp { history, .. } => history,
            _ => &[],
        }
    }
}

fn minkowski(a: &[f64], b: &[f64], p: u32) -> f64 {
    match p {
        1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        _ => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powi(p as i32))
            .sum::<f64>()
            .powf(1.0 / f64::from(p)),
    }
}

fn knn_scores(rows: &[Vec<f64>], labels: &[HeuristicKind], query: &[f64], k: usize, weighting: KnnWeighting, p: u32) -> [f64; OUTPUTS] {
    let mut dist: Vec<(f64, usize)> = rows.iter().enumerate().map(|(i, r)| (minkowski(r, query, p), i)).collect();
    let k = k.min(dist.len());
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbours = &dist[..k];
    let mut votes = [0.0; OUTPUTS];
    let exact: Vec<&(f64, usize)> = neighbours.iter().filter(|(d, _)| *d == 0.0).collect();
    if weighting == KnnWeighting::Distance && !exact.is_empty() {
        for &&(_, i) in &exact {
            votes[labels[i].index()] += 1.0;
        }
    } else {
        for &(d, i) in neighbours {
            votes[labels[i].index()] += match weighting {
                KnnWeighting::Uniform => 1.0,
                KnnWeighting::Distance => 1.0 / d,
            };
        }
    }
    let total: f64 = votes.iter().sum();
    votes.map(|v| v / total)
}

fn fit_gnb(rows: &[Vec<f64>], targets: &[usize], var_smoothing: f64) -> LearnedState {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let column_variance = |f: usize| {
        let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
        rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n
    };
    let widest = (0..d).map(column_variance).fold(0.0, f64::max);
    let epsilon = var_smoothing * widest;
    let mut priors = [0.0; OUTPUTS];
    let mut means = vec![vec![0.0; d]; OUTPUTS];
    let mut variances = vec![vec![var_smoothing; d]; OUTPUTS];
    for c in 0..OUTPUTS {
        let members: Vec<&Vec<f64>> = rows.iter().zip(targets).filter(|(_, &t)| t == c).map(|(r, _)| r).collect();
        if members.is_empty() {
            continue;
        }
        let m = members.len() as f64;
        priors[c] = m / n;
        for f in 0..d {
            let mean = members.iter().map(|r| r[f]).sum::<f64>() / m;
            let var = members.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / m;
            means[c][f] = mean;
            variances[c][f] = (var + epsilon).max(var_smoothing);
        }
    }
    LearnedState::Gnb {
        priors,
        means,
        variances,
    }
}

fn gnb_posteriors(priors: &[f64; OUTPUTS], means: &[Vec<f64>], variances: &[Vec<f64>], row: &[f64]) -> [f64; OUTPUTS] {
    let mut log_post = [f64::NEG_INFINITY; OUTPUTS];
    for c in 0..OUTPUTS {
        if priors[c] == 0.0 {
            continue;
        }
        let mut lp = priors[c].ln();
        for f in 0..row.len() {
            let var = variances[c][f];
            let diff = row[f] - means[c][f];
            lp -= 0.5 * (2.0 * std::f64::consts::PI * var).ln() + diff * diff / (2.0 * var);
        }
        log_post[c] = lp;
    }
    let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = log_post.map(|lp| if lp == f64::NEG_INFINITY { 0.0 } else { (lp - max).exp() });
    let total: f64 = weights.iter().sum();
    weights.map(|w| w / total)
}

fn gini(counts: &[usize; OUTPUTS], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn count_classes(targets: &[usize], members: &[usize]) -> [usize; OUTPUTS] {
    let mut counts = [0; OUTPUTS];
    for &i in members {
        counts[targets[i]] += 1;
    }
    counts
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Lowest weighted Gini over midpoints of consecutive distinct values of the
/// sampled features, with at least `min_leaf` rows on each side.
fn best_split(rows: &[Vec<f64>], targets: &[usize], members: &[usize], features: &[usize], min_leaf: usize) -> Option<Split> {
    let n = members.len();
    let total = count_classes(targets, members);
    let mut best: Option<Split> = None;
    let mut sorted = members.to_vec();
    for &f in features {
        sorted.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
        let mut left = [0usize; OUTPUTS];
        for pos in 0..n - 1 {
            left[targets[sorted[pos]]] += 1;
            let (here, next) = (rows[sorted[pos]][f], rows[sorted[pos + 1]][f]);
            let n_left = pos + 1;
            if here == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let mut right = total;
            for c in 0..OUTPUTS {
                right[c] -= left[c];
            }
            let impurity = (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(Split {
                    feature: f,
                    threshold: here + (next - here) / 2.0,
                    impurity,
                });
            }
        }
    }
    best
}

fn build_tree(rows: &[Vec<f64>], targets: &[usize], sample: Vec<usize>, params: &TreeParams, rng: &mut ChaCha8Rng) -> DecisionTree {
    let d = rows[0].len();
    let n_sampled = params.max_features.min(d);
    let mut nodes: Vec<TreeNode> = Vec::new();
    // (node index, members)
    let mut pending: Vec<(usize, Vec<usize>)> = Vec::new();
    nodes.push(TreeNode {
        feature: None,
        threshold: 0.0,
        left: 0,
        right: 0,
        counts: count_classes(targets, &sample),
        depth: 0,
    });
    pending.push((0, sample));
    while let Some((id, members)) = pending.pop() {
        let node = &nodes[id];
        let pure = node.counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || node.depth >= params.max_depth || members.len() < params.min_split {
            continue;
        }
        let mut features: Vec<usize> = index::sample(rng, d, n_sampled).into_vec();
        features.sort_unstable();
        let Some(split) = best_split(rows, targets, &members, &features, params.min_leaf) else {
            continue;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| rows[i][split.feature] <= split.threshold);
        let depth = nodes[id].depth + 1;
        let (l, r) = (nodes.len(), nodes.len() + 1);
        for part in [&left, &right] {
            nodes.push(TreeNode {
                feature: None,
                threshold: 0.0,
                left: 0,
                right: 0,
                counts: count_classes(targets, part),
                depth,
            });
        }
        let parent = &mut nodes[id];
        parent.feature = Some(split.feature);
        parent.threshold = split.threshold;
        parent.left = l;
        parent.right = r;
        pending.push((r, right));
        pending.push((l, left));
    }
    DecisionTree { nodes }
}

struct MlpPass {
    /// Activations of every layer, input first.
    activations: Vec<Vec<f64>>,
    probs: [f64; OUTPUTS],
}

fn mlp_forward(layers: &[DenseLayer], row: &[f64]) -> MlpPass {
    let mut activations = vec![row.to_vec()];
    for (l, layer) in layers.iter().enumerate() {
        let x = activations.last().expect("input present");
        let mut out: Vec<f64> = (0..layer.outputs)
            .map(|j| {
                layer.bias[j]
                    + layer.weights[j * layer.inputs..(j + 1) * layer.inputs]
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect();
        if l + 1 < layers.len() {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        activations.push(out);
    }
    let logits: [f64; OUTPUTS] = activations.last().expect("output").as_slice().try_into().expect("4 outputs");
    MlpPass {
        activations,
        probs: crate::softmax(&logits),
    }
}

fn fit_mlp(
    rows: &[Vec<f64>],
    targets: &[usize],
    hidden: &[usize],
    epochs: usize,
    batch_size: usize,
    adam: &AdamConfig,
    seed: u64,
) -> Result<LearnedState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut widths = vec![rows[0].len()];
    widths.extend_from_slice(hidden);
    widths.push(OUTPUTS);
    let mut layers: Vec<DenseLayer> = widths
        .windows(2)
        .map(|w| {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            DenseLayer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1]).map(|_| rng.random_range(-limit..limit)).collect(),
                bias: vec![0.0; w[1]],
            }
        })
        .collect();
    let n_params: usize = layers.iter().map(|l| l.weights.len() + l.bias.len()).sum();
    let mut state = AdamState::new(n_params);
    let mut flat = vec![0.0; n_params];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch_size) {
            let mut grads: Vec<DenseLayer> = layers
                .iter()
                .map(|l| DenseLayer {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                    ..*l
                })
                .collect();
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let pass = mlp_forward(&layers, &rows[i]);
                loss_sum -= pass.probs[targets[i]].max(f64::MIN_POSITIVE).ln();
                let mut delta: Vec<f64> = (0..OUTPUTS)
                    .map(|o| (pass.probs[o] - if o == targets[i] { 1.0 } else { 0.0 }) * scale)
                    .collect();
                for l in (0..layers.len()).rev() {
                    let input = &pass.activations[l];
                    let layer = &layers[l];
                    let g = &mut grads[l];
                    let mut back = vec![0.0; layer.inputs];
                    for j in 0..layer.outputs {
                        g.bias[j] += delta[j];
                        for k in 0..layer.inputs {
                            g.weights[j * layer.inputs + k] += delta[j] * input[k];
                            back[k] += layer.weights[j * layer.inputs + k] * delta[j];
                        }
                    }
                    if l > 0 {
                        for (b, a) in back.iter_mut().zip(input) {
                            if *a <= 0.0 {
                                *b = 0.0;
                            }
                        }
                    }
                    delta = back;
                }
            }
            let grad_flat: Vec<f64> = grads.iter().flat_map(|g| g.weights.iter().chain(&g.bias).copied()).collect();
            let mut pos = 0;
            for l in &layers {
                for &v in l.weights.iter().chain(&l.bias) {
                    flat[pos] = v;
                    pos += 1;
                }
            }
            adam_step(&mut flat, &grad_flat, &mut state, adam);
            let mut pos = 0;
            for l in &mut layers {
                for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                    *v = flat[pos];
                    pos += 1;
                }
            }
        }
        let loss = loss_sum / rows.len() as f64;
        if !loss.is_finite() {
            return Err(ModelError::Divergence {
                epoch,
                learning_rate: adam.learning_rate,
                loss,
            });
        }
        history.push(loss);
    }
    Ok(LearnedState::Mlp { layers, history })
}
