//! Scoring a selector against the single-best and virtual-best solvers.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::instance::HeuristicKind;
use crate::packing::{bins_all, lower_bound, normalized_excess_bins};
use crate::stats::{bonferroni, wilcoxon_signed_rank, WilcoxonResult};

/// Thresholds always present on the cumulative distance curves.
pub const REPORT_MARKS: [f64; 5] = [0.05, 0.10, 0.20, 0.30, 0.40];

/// Significance level applied to Bonferroni-adjusted p-values.
pub const ALPHA: f64 = 0.05;

/// Heuristic with the highest total stored fitness over the dataset's
/// candidates; ties go to the canonically first heuristic.
pub fn single_best_solver(dataset: &Dataset) -> Result<HeuristicKind> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut best: Option<(HeuristicKind, f64)> = None;
    for &h in &dataset.meta.candidates {
        let total: f64 = dataset.records().iter().map(|r| r.performance.get(h)).sum();
        if best.is_none_or(|(_, t)| total > t) {
            best = Some((h, total));
        }
    }
    best.map(|(h, _)| h).ok_or(Error::EmptyDataset)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub fraction: f64,
}

/// Fraction of `distances` at or below each threshold. The grid is every
/// distinct observed distance plus zero and [`REPORT_MARKS`].
pub fn cumulative_curve(distances: &[f64]) -> Vec<CurvePoint> {
    let mut grid: Vec<f64> = distances.to_vec();
    grid.push(0.0);
    grid.extend_from_slice(&REPORT_MARKS);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1) as f64;
    grid.into_iter()
        .map(|threshold| {
            let count = sorted.partition_point(|&d| d <= threshold);
            CurvePoint {
                threshold,
                fraction: count as f64 / n,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Falkenauer fitness, higher is better.
    Fitness,
    /// Normalised excess bins, lower is better.
    Bins,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Fitness => "fitness",
            Metric::Bins => "bins",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Better,
    Worse,
    Equal,
}

/// One paired comparison `first` vs `second`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub first: String,
    pub second: String,
    pub metric: Metric,
    pub median_first: f64,
    pub median_second: f64,
    /// Whether `first`'s median is better than `second`'s.
    pub direction: Direction,
    pub wilcoxon: WilcoxonResult,
    pub p_adjusted: f64,
}

impl PairedTest {
    pub fn significant(&self) -> bool {
        self.p_adjusted < ALPHA
    }

    /// Compact marker: `up`, `down` or `eq` for the median comparison,
    /// followed by `+` when significant and `-` otherwise.
    pub fn marker(&self) -> String {
        let dir = match self.direction {
            Direction::Better => "up",
            Direction::Worse => "down",
            Direction::Equal => "eq",
        };
        format!("{dir}{}", if self.significant() { '+' } else { '-' })
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Unadjusted comparison; callers fill `p_adjusted` for the whole family.
fn paired(first: &str, a: &[f64], second: &str, b: &[f64], metric: Metric) -> Result<PairedTest> {
    let wilcoxon = wilcoxon_signed_rank(a, b)?;
    let (ma, mb) = (median(a), median(b));
    let direction = if ma == mb {
        Direction::Equal
    } else if (ma > mb) == (metric == Metric::Fitness) {
        Direction::Better
    } else {
        Direction::Worse
    };
    Ok(PairedTest {
        first: first.to_string(),
        second: second.to_string(),
        metric,
        median_first: ma,
        median_second: mb,
        direction,
        p_adjusted: wilcoxon.p_value,
        wilcoxon,
    })
}

fn adjust(tests: &mut [PairedTest]) -> Result<()> {
    let raw: Vec<f64> = tests.iter().map(|t| t.wilcoxon.p_value).collect();
    for (t, p) in tests.iter_mut().zip(bonferroni(&raw)?) {
        t.p_adjusted = p;
    }
    Ok(())
}

/// Every unordered pair of methods on one metric, Bonferroni-adjusted over
/// the whole family of pairs.
pub fn pairwise_tests(methods: &[(String, Vec<f64>)], metric: Metric) -> Result<Vec<PairedTest>> {
    let mut tests = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            let (a, xa) = &methods[i];
            let (b, xb) = &methods[j];
            tests.push(paired(a, xa, b, xb, metric)?);
        }
    }
    adjust(&mut tests)?;
    Ok(tests)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEval {
    pub id: String,
    pub predicted: HeuristicKind,
    pub winners: Vec<HeuristicKind>,
    pub correct: bool,
    pub fitness_selector: f64,
    pub fitness_sbs: f64,
    pub fitness_vbs: f64,
    pub bins_selector: u32,
    pub bins_sbs: u32,
    pub bins_vbs: u32,
    pub lower_bound: u32,
    /// `fitness_vbs - fitness_selector`
    pub d_p: f64,
    /// `bins_selector - bins_vbs`
    pub d_b: u32,
}

impl InstanceEval {
    pub fn normalized_bins(&self, bins: u32) -> f64 {
        normalized_excess_bins(bins, self.lower_bound).expect("bins respect the lower bound")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// Rows are true classes, columns predictions, both in BF, FF, NF, WF order.
    pub confusion: [[usize; 4]; 4],
    pub sbs: HeuristicKind,
    pub total_bins_selector: u64,
    pub total_bins_sbs: u64,
    pub total_bins_vbs: u64,
    pub total_fitness_selector: f64,
    pub total_fitness_sbs: f64,
    pub total_fitness_vbs: f64,
    pub total_normalized_bins_selector: f64,
    pub total_normalized_bins_sbs: f64,
    pub total_normalized_bins_vbs: f64,
    pub dp_curve: Vec<CurvePoint>,
    pub db_curve: Vec<CurvePoint>,
    /// Selector vs SBS and VBS on fitness and normalised bins, adjusted
    /// together.
    pub tests: Vec<PairedTest>,
    pub instances: Vec<InstanceEval>,
}

/// Scores per-instance predictions.
///
/// The virtual best solver takes, per instance, the highest fitness and
/// separately the fewest bins among the dataset's candidates, so both
/// distances are non-negative. A prediction counts as correct when it is in
/// the label's tie-set; in the confusion matrix such a prediction is booked
/// on the diagonal.
pub fn evaluate_selector(predictions: &[HeuristicKind], dataset: &Dataset) -> Result<EvalReport> {
    evaluate_selector_with_sbs(predictions, dataset, single_best_solver(dataset)?)
}

/// As [`evaluate_selector`] with an externally fixed single best solver,
/// e.g. the one determined on the training data.
pub fn evaluate_selector_with_sbs(
    predictions: &[HeuristicKind],
    dataset: &Dataset,
    sbs: HeuristicKind,
) -> Result<EvalReport> {
    if predictions.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            instances: dataset.len(),
        });
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let candidates = &dataset.meta.candidates;
    let mut confusion = [[0usize; 4]; 4];
    let mut instances = Vec::with_capacity(dataset.len());
    for (r, &pred) in dataset.records().iter().zip(predictions) {
        if !candidates.contains(&pred) {
            return Err(Error::PredictionOutsideCandidates {
                id: r.instance.id().to_string(),
                prediction: pred.to_string(),
            });
        }
        let bins = bins_all(&r.instance);
        let lower = lower_bound(&r.instance);
        let (_, fitness_vbs) = r.performance.best_of(candidates).expect("candidates non-empty");
        let bins_vbs = candidates.iter().map(|h| bins[h.index()]).min().expect("candidates non-empty");
        let correct = r.label.contains(pred);
        let truth = if correct { pred } else { r.label.winner() };
        confusion[truth.index()][pred.index()] += 1;
        let fitness_selector = r.performance.get(pred);
        let bins_selector = bins[pred.index()];
        instances.push(InstanceEval {
            id: r.instance.id().to_string(),
            predicted: pred,
            winners: r.label.winners().to_vec(),
            correct,
            fitness_selector,
            fitness_sbs: r.performance.get(sbs),
            fitness_vbs,
            bins_selector,
            bins_sbs: bins[sbs.index()],
            bins_vbs,
            lower_bound: lower,
            d_p: fitness_vbs - fitness_selector,
            d_b: bins_selector - bins_vbs,
        });
    }

    let n = instances.len();
    let correct = instances.iter().filter(|i| i.correct).count();
    let col = |f: fn(&InstanceEval) -> f64| instances.iter().map(f).collect::<Vec<f64>>();
    let fit_sel = col(|i| i.fitness_selector);
    let fit_sbs = col(|i| i.fitness_sbs);
    let fit_vbs = col(|i| i.fitness_vbs);
    let nb_sel = col(|i| i.normalized_bins(i.bins_selector));
    let nb_sbs = col(|i| i.normalized_bins(i.bins_sbs));
    let nb_vbs = col(|i| i.normalized_bins(i.bins_vbs));

    let mut tests = vec![
        paired("selector", &fit_sel, "sbs", &fit_sbs, Metric::Fitness)?,
        paired("selector", &fit_sel, "vbs", &fit_vbs, Metric::Fitness)?,
        paired("selector", &nb_sel, "sbs", &nb_sbs, Metric::Bins)?,
        paired("selector", &nb_sel, "vbs", &nb_vbs, Metric::Bins)?,
    ];
    adjust(&mut tests)?;

    let sum_bins = |f: fn(&InstanceEval) -> u32| instances.iter().map(|i| u64::from(f(i))).sum::<u64>();
    Ok(EvalReport {
        n,
        accuracy: correct as f64 / n as f64,
        confusion,
        sbs,
        total_bins_selector: sum_bins(|i| i.bins_selector),
        total_bins_sbs: sum_bins(|i| i.bins_sbs),
        total_bins_vbs: sum_bins(|i| i.bins_vbs),
        total_fitness_selector: fit_sel.iter().sum(),
        total_fitness_sbs: fit_sbs.iter().sum(),
        total_fitness_vbs: fit_vbs.iter().sum(),
        total_normalized_bins_selector: nb_sel.iter().sum(),
        total_normalized_bins_sbs: nb_sbs.iter().sum(),
        total_normalized_bins_vbs: nb_vbs.iter().sum(),
        dp_curve: cumulative_curve(&col(|i| i.d_p)),
        db_curve: cumulative_curve(&col(|i| f64::from(i.d_b))),
        tests,
        instances,
    })
}

/// Fraction of instances whose distance is within `threshold`, read off a curve.
pub fn fraction_within(curve: &[CurvePoint], threshold: f64) -> f64 {
    curve
        .iter()
        .take_while(|p| p.threshold <= threshold)
        .last()
        .map_or(0.0, |p| p.fraction)
}
