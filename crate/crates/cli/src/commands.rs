use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use binsel_core::eval::{evaluate_selector, EvalReport};
use binsel_core::evolve::generate_evolved;
use binsel_core::features::{extract_features_with, StdConvention, FEATURE_NAMES};
use binsel_core::generate::{generate_structured, merge_datasets, stream_seed, ItemDistribution, StructuredConfig};
use binsel_core::split::{kfold, split_by_counts, split_dataset, SplitSpec};
use binsel_core::stats::{bonferroni, wilcoxon_signed_rank};
use binsel_core::{
    extract_features, generate_random, Dataset, DatasetMeta, EaConfig, GeneratorSpec, HeuristicKind,
};
use binsel_models::{
    fit_features, train_recurrent, AdamConfig, CellKind, EpochStats, RecurrentNetwork, TabularKind,
    TabularModelSpec, TrainConfig,
};

use crate::args::*;
use crate::dataset_file::{dataset_from_str, dataset_to_string, parse_plain_instances, read_dataset, write_dataset, DATASET_FORMAT};
use crate::error::{CliError, CliResult};
use crate::report::{read_csv, summary_text, write_csv, write_csv_to, write_report};
use crate::snapshot::{Selector, Snapshot};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(g) => generate(g),
        Command::Label(a) => label(a),
        Command::Features(a) => features(a),
        Command::Train(t) => train(t),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Stats(s) => stats(s),
    }
}

impl SpecArgs {
    pub fn resolve(&self) -> CliResult<GeneratorSpec> {
        let base = self.preset.map(|p| p.spec());
        fn need<T>(v: Option<T>, name: &str) -> CliResult<T> {
            v.ok_or_else(|| CliError::Usage(format!("--{name} is required without --preset")))
        }
        let spec = GeneratorSpec {
            n_items: need(self.items.or(base.map(|b| b.n_items)), "items")?,
            lower: need(self.lower.or(base.map(|b| b.lower)), "lower")?,
            upper: need(self.upper.or(base.map(|b| b.upper)), "upper")?,
            distribution: self
                .dist
                .or(base.map(|b| b.distribution))
                .unwrap_or(ItemDistribution::Uniform),
            capacity: self.capacity.or(base.map(|b| b.capacity)).unwrap_or(150),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn report_written(path: &Path, dataset: &Dataset) {
    let counts = dataset.class_counts();
    eprintln!(
        "wrote {} instances to {} (BF {} FF {} NF {} WF {})",
        dataset.len(),
        path.display(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
}

fn save(path: &Path, dataset: &Dataset) -> CliResult<()> {
    write_dataset(path, dataset)?;
    report_written(path, dataset);
    Ok(())
}

/// Writes to `out`, or to standard output when no path is given.
fn emit(out: Option<&Path>, dataset: &Dataset) -> CliResult<()> {
    match out {
        Some(path) => save(path, dataset),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(dataset_to_string(dataset).as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn generate(command: GenerateCommand) -> CliResult<()> {
    match command {
        GenerateCommand::Random { spec, count, seed, k, out } => {
            let dataset = generate_random(&spec.resolve()?, count, seed, k)?;
            emit(out.as_deref(), &dataset)
        }
        GenerateCommand::Structured {
            spec,
            tau,
            count_bf,
            count_ff,
            seed,
            k,
            min_rate,
            min_trials,
            out,
        } => {
            let config = structured_config(tau, count_bf, count_ff, seed, k, min_rate, min_trials);
            let dataset = generate_structured(&spec.resolve()?, &config)?;
            emit(out.as_deref(), &dataset)
        }
        GenerateCommand::Evolve {
            spec,
            target,
            count,
            seed,
            population,
            generations,
            mutation_rate,
            swap_probability,
            k,
            out,
        } => {
            let spec = spec.resolve()?;
            let mut template = EaConfig::new(target, &spec, seed);
            template.k = k;
            if let Some(p) = population {
                template.population_size = p;
            }
            if let Some(g) = generations {
                template.generations = g;
            }
            if let Some(m) = mutation_rate {
                template.mutation_rate = m;
            }
            if let Some(s) = swap_probability {
                template.swap_probability = s;
            }
            let dataset = generate_evolved(&spec, &template, count, seed)?;
            emit(out.as_deref(), &dataset)
        }
        GenerateCommand::Merge {
            inputs,
            per_class,
            seed,
            out,
        } => {
            let sources = inputs.iter().map(|p| read_dataset(p)).collect::<CliResult<Vec<_>>>()?;
            let dataset = merge_datasets(&sources, per_class, seed)?;
            emit(out.as_deref(), &dataset)
        }
    }
}

fn structured_config(
    tau: f64,
    count_bf: usize,
    count_ff: usize,
    seed: u64,
    k: f64,
    min_rate: Option<f64>,
    min_trials: Option<usize>,
) -> StructuredConfig {
    let mut config = StructuredConfig::new(tau, count_bf, count_ff, seed);
    config.k = k;
    if let Some(r) = min_rate {
        config.min_acceptance_rate = r;
    }
    if let Some(t) = min_trials {
        config.min_trials = t;
    }
    config
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn looks_like_dataset(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{') && l.contains(DATASET_FORMAT))
}

fn label(args: LabelArgs) -> CliResult<()> {
    if args.candidates.is_empty() {
        return Err(CliError::Usage("--candidates must name at least one heuristic".into()));
    }
    let text = read_text(&args.input)?;
    let origin = args.input.display().to_string();
    let (instances, kind) = if looks_like_dataset(&text) {
        let source = dataset_from_str(&text, &origin)?;
        let instances = source.into_records().into_iter().map(|r| r.instance).collect();
        (instances, "relabelled")
    } else {
        (parse_plain_instances(&text, args.capacity, &origin)?, "imported")
    };
    let meta = DatasetMeta::new(kind, args.k, &args.candidates);
    let dataset = Dataset::from_instances(meta, instances)?;
    emit(args.out.as_deref(), &dataset)
}

fn features(args: FeaturesArgs) -> CliResult<()> {
    let dataset = read_dataset(&args.dataset)?;
    let convention = match args.std {
        StdChoice::Population => StdConvention::Population,
        StdChoice::Sample => StdConvention::Sample,
    };
    let mut rows = Vec::with_capacity(dataset.len() + 1);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    rows.push(header);
    for r in dataset.records() {
        let f = extract_features_with(&r.instance, convention)?;
        let mut row = vec![r.instance.id().to_string(), r.label.winner().to_string()];
        row.extend(f.to_array().iter().map(|x| x.to_string()));
        rows.push(row);
    }
    match &args.out {
        Some(path) => write_csv(path, &rows),
        None => write_csv_to(std::io::stdout().lock(), &rows).map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// How to fit one selector on a dataset.
#[derive(Debug, Clone)]
pub enum SelectorPlan {
    Rnn {
        cell: CellKind,
        hidden: Vec<usize>,
        config: TrainConfig,
    },
    Tabular(TabularModelSpec),
}

impl SelectorPlan {
    pub fn name(&self) -> &'static str {
        match self {
            SelectorPlan::Rnn { cell, .. } => cell.as_str(),
            SelectorPlan::Tabular(spec) => spec.kind().as_str(),
        }
    }

    /// The selector named `name` with default settings; recurrent epochs
    /// follow the sequence length unless given.
    pub fn by_name(name: &str, n_items: usize, epochs: Option<usize>, seed: u64) -> CliResult<Self> {
        if let Ok(cell) = name.parse::<CellKind>() {
            let mut config = TrainConfig::for_length(n_items, seed);
            if let Some(e) = epochs {
                config.epochs = e;
            }
            return Ok(SelectorPlan::Rnn {
                cell,
                hidden: vec![32, 32],
                config,
            });
        }
        let kind: TabularKind = name
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown selector {name:?}")))?;
        Ok(SelectorPlan::Tabular(TabularModelSpec::default_for(kind)))
    }

    /// Fits on `train` and wraps the result as a snapshot. Recurrent
    /// training also returns its per-epoch history.
    pub fn fit(
        &self,
        train: &Dataset,
        monitor: Option<&Dataset>,
        seed: u64,
    ) -> CliResult<(Snapshot, Vec<EpochStats>)> {
        let capacity = train
            .capacity()
            .ok_or_else(|| CliError::Data("training instances disagree on capacity".into()))?;
        let (selector, history) = match self {
            SelectorPlan::Rnn { cell, hidden, config } => {
                let net = RecurrentNetwork::new(*cell, hidden, seed);
                let (net, history) = train_recurrent(net, train, config, monitor)?;
                (Selector::Rnn(net), history)
            }
            SelectorPlan::Tabular(spec) => {
                let rows = train
                    .records()
                    .iter()
                    .map(|r| extract_features(&r.instance))
                    .collect::<binsel_core::Result<Vec<_>>>()?;
                let model = fit_features(spec, &rows, &train.labels(), seed)?;
                (Selector::Tabular(model), Vec::new())
            }
        };
        let snapshot = Snapshot::new(capacity, train.meta.k, train.meta.candidates.clone(), seed, selector);
        Ok((snapshot, history))
    }
}

pub fn predict_all(snapshot: &Snapshot, dataset: &Dataset) -> CliResult<Vec<HeuristicKind>> {
    dataset.records().iter().map(|r| snapshot.predict(&r.instance)).collect()
}

/// Fraction of predictions inside the label tie-set.
fn accuracy(predictions: &[HeuristicKind], dataset: &Dataset) -> f64 {
    let hits = predictions
        .iter()
        .zip(dataset.records())
        .filter(|(p, r)| r.label.contains(**p))
        .count();
    hits as f64 / dataset.len() as f64
}

/// Sibling path `<stem>.<suffix>` next to `out`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn train(command: TrainCommand) -> CliResult<()> {
    let (common, plan) = match command {
        TrainCommand::Rnn {
            common,
            cell,
            epochs,
            batch_size,
            lr,
            hidden,
        } => {
            let dataset = read_dataset(&common.dataset)?;
            let n_items = dataset.records().iter().map(|r| r.instance.len()).max().unwrap_or(0);
            let mut config = TrainConfig::for_length(n_items, common.seed);
            if let Some(e) = epochs {
                config.epochs = e;
            }
            config.batch_size = batch_size;
            config.adam = AdamConfig {
                learning_rate: lr,
                ..AdamConfig::default()
            };
            if hidden.is_empty() || hidden.contains(&0) {
                return Err(CliError::Usage("--hidden needs positive layer widths".into()));
            }
            (common, SelectorPlan::Rnn { cell, hidden, config })
        }
        TrainCommand::Tabular { common, kind, epochs } => {
            let mut spec = TabularModelSpec::default_for(kind);
            if let Some(e) = epochs {
                match &mut spec {
                    TabularModelSpec::Mlp { epochs, .. } => *epochs = e,
                    _ => return Err(CliError::Usage("--epochs only applies to the mlp".into())),
                }
            }
            spec.validate()?;
            (common, SelectorPlan::Tabular(spec))
        }
    };
    run_training(&common, &plan)
}

fn run_training(common: &CommonTrainArgs, plan: &SelectorPlan) -> CliResult<()> {
    let dataset = read_dataset(&common.dataset)?;
    let (train_set, held_out) = match (common.test_fraction, &common.test_out) {
        (Some(f), Some(path)) => {
            let spec = SplitSpec {
                train_fraction: 1.0 - f,
                ..SplitSpec::new(common.seed)
            };
            let (train_set, test_set) = split_dataset(&dataset, &spec)?;
            save(path, &test_set)?;
            (train_set, Some(test_set))
        }
        _ => (dataset, None),
    };

    if common.folds > 0 {
        let folds = kfold(&train_set, common.folds, common.seed)?;
        let mut rows = vec![vec![
            "fold".to_string(),
            "train".to_string(),
            "validation".to_string(),
            "accuracy".to_string(),
        ]];
        let mut accuracies = Vec::with_capacity(folds.len());
        for (i, fold) in folds.iter().enumerate() {
            let train_part = train_set.subset(&fold.train);
            let validation = train_set.subset(&fold.validation);
            let (snapshot, _) = plan.fit(&train_part, None, stream_seed(common.seed, i as u64 + 1))?;
            let acc = accuracy(&predict_all(&snapshot, &validation)?, &validation);
            eprintln!("fold {}/{}: accuracy {acc:.4}", i + 1, folds.len());
            rows.push(vec![
                (i + 1).to_string(),
                fold.train.len().to_string(),
                fold.validation.len().to_string(),
                acc.to_string(),
            ]);
            accuracies.push(acc);
        }
        write_csv(&sibling(&common.out, "folds.csv"), &rows)?;
        let (mean, std) = mean_std(&accuracies);
        println!("fold accuracy: {mean:.4} (+/- {std:.4})");
    }

    let (snapshot, history) = plan.fit(&train_set, held_out.as_ref(), common.seed)?;
    snapshot.write(&common.out)?;
    let history_rows: Vec<Vec<String>> = match &snapshot.selector {
        Selector::Rnn(_) => std::iter::once(
            ["epoch", "loss", "accuracy", "validation_loss", "validation_accuracy"]
                .map(String::from)
                .to_vec(),
        )
        .chain(history.iter().map(|h| {
            vec![
                h.epoch.to_string(),
                h.loss.to_string(),
                h.accuracy.to_string(),
                opt(h.validation_loss),
                opt(h.validation_accuracy),
            ]
        }))
        .collect(),
        Selector::Tabular(model) => std::iter::once(vec!["epoch".to_string(), "loss".to_string()])
            .chain(
                model
                    .loss_history()
                    .iter()
                    .enumerate()
                    .map(|(i, l)| vec![(i + 1).to_string(), l.to_string()]),
            )
            .collect(),
    };
    write_csv(&sibling(&common.out, "history.csv"), &history_rows)?;
    let train_acc = accuracy(&predict_all(&snapshot, &train_set)?, &train_set);
    println!("training accuracy: {train_acc:.4}");
    if let Some(test_set) = &held_out {
        let acc = accuracy(&predict_all(&snapshot, test_set)?, test_set);
        println!("held-out accuracy: {acc:.4}");
    }
    eprintln!("wrote model to {}", common.out.display());
    Ok(())
}

fn read_predictions(path: &Path, dataset: &Dataset) -> CliResult<Vec<HeuristicKind>> {
    let mut by_id = HashMap::new();
    for record in read_csv(path)? {
        let (Some(id), Some(p)) = (record.get(0), record.get(1)) else {
            return Err(CliError::Data(format!("{}: rows need id and prediction", path.display())));
        };
        let h: HeuristicKind = p
            .trim()
            .parse()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        by_id.insert(id.trim().to_string(), h);
    }
    dataset
        .records()
        .iter()
        .map(|r| {
            by_id
                .get(r.instance.id())
                .copied()
                .ok_or_else(|| CliError::Data(format!("no prediction for instance {:?}", r.instance.id())))
        })
        .collect()
}

fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    let dataset = read_dataset(&args.dataset)?;
    let (predictions, default_name) = match (&args.model, &args.predictions) {
        (Some(model), _) => {
            let snapshot = Snapshot::read(model)?;
            let name = match &snapshot.selector {
                Selector::Rnn(net) => net.cell().as_str(),
                Selector::Tabular(m) => m.spec.kind().as_str(),
            };
            (predict_all(&snapshot, &dataset)?, name)
        }
        (None, Some(path)) => (read_predictions(path, &dataset)?, "selector"),
        (None, None) => return Err(CliError::Usage("give --model or --predictions".into())),
    };
    let name = args.name.as_deref().unwrap_or(default_name);
    let report = evaluate_selector(&predictions, &dataset)?;
    write_report(&args.out, &report, name)?;
    print!("{}", summary_text(&report, name));
    Ok(())
}

fn sweep_row(tau: f64, name: &str, n_train: usize, report: &EvalReport) -> Vec<String> {
    let markers = report
        .tests
        .iter()
        .map(|t| format!("{}-{}:{}:{}", t.first, t.second, t.metric.as_str(), t.marker()))
        .collect::<Vec<_>>()
        .join(";");
    vec![
        tau.to_string(),
        name.to_string(),
        n_train.to_string(),
        report.n.to_string(),
        report.accuracy.to_string(),
        report.sbs.to_string(),
        report.total_bins_selector.to_string(),
        report.total_bins_sbs.to_string(),
        report.total_bins_vbs.to_string(),
        report.total_fitness_selector.to_string(),
        report.total_fitness_sbs.to_string(),
        report.total_fitness_vbs.to_string(),
        markers,
    ]
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    let spec = args.spec.resolve()?;
    let plans = args
        .selectors
        .iter()
        .map(|s| SelectorPlan::by_name(s.trim(), spec.n_items, args.epochs, args.seed))
        .collect::<CliResult<Vec<_>>>()?;
    if plans.is_empty() {
        return Err(CliError::Usage("--selectors is empty".into()));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut rows = vec![[
        "tau",
        "selector",
        "train",
        "test",
        "accuracy",
        "sbs",
        "bins_selector",
        "bins_sbs",
        "bins_vbs",
        "fitness_selector",
        "fitness_sbs",
        "fitness_vbs",
        "significance",
    ]
    .map(String::from)
    .to_vec()];
    for (i, &tau) in args.taus.iter().enumerate() {
        let config = structured_config(
            tau,
            args.count_bf,
            args.count_ff,
            stream_seed(args.seed, i as u64),
            binsel_core::packing::DEFAULT_K,
            args.min_rate,
            args.min_trials,
        );
        let dataset = generate_structured(&spec, &config)?;
        let (train_set, test_set) = match (args.train_bf, args.train_ff) {
            (Some(bf), Some(ff)) => split_by_counts(
                &dataset,
                &[(HeuristicKind::BF, bf), (HeuristicKind::FF, ff)],
                args.seed,
            )?,
            _ => split_dataset(&dataset, &SplitSpec::new(args.seed))?,
        };
        if test_set.is_empty() {
            return Err(CliError::Usage(format!("tau {tau}: no instances left for testing")));
        }
        for plan in &plans {
            let (snapshot, _) = plan.fit(&train_set, None, args.seed)?;
            let report = evaluate_selector(&predict_all(&snapshot, &test_set)?, &test_set)?;
            eprintln!(
                "tau {tau}: {} accuracy {:.4}, bins {} (sbs {}, vbs {})",
                plan.name(),
                report.accuracy,
                report.total_bins_selector,
                report.total_bins_sbs,
                report.total_bins_vbs
            );
            rows.push(sweep_row(tau, plan.name(), train_set.len(), &report));
        }
    }
    write_csv(&args.out.join("sweep.csv"), &rows)
}

fn stats(command: StatsCommand) -> CliResult<()> {
    match command {
        StatsCommand::Wilcoxon { input, x, y } => {
            let (x, y) = match input {
                Some(path) => {
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for (line, record) in read_csv(&path)?.iter().enumerate() {
                        let cell = |i: usize| -> CliResult<f64> {
                            record
                                .get(i)
                                .and_then(|s| s.trim().parse().ok())
                                .ok_or_else(|| {
                                    CliError::Data(format!("{}: row {} needs two numbers", path.display(), line + 2))
                                })
                        };
                        xs.push(cell(0)?);
                        ys.push(cell(1)?);
                    }
                    (xs, ys)
                }
                None => (x, y),
            };
            if x.len() != y.len() {
                return Err(CliError::Usage(format!("x has {} values, y has {}", x.len(), y.len())));
            }
            let r = wilcoxon_signed_rank(&x, &y)?;
            println!("statistic: {}", r.statistic);
            println!("w_plus: {}", r.w_plus);
            println!("w_minus: {}", r.w_minus);
            println!("n_used: {}", r.n_used);
            println!("p_value: {}", r.p_value);
            println!("method: {:?}", r.method);
            Ok(())
        }
        StatsCommand::Bonferroni { p } => {
            for (raw, adjusted) in p.iter().zip(bonferroni(&p).map_err(|e| CliError::Usage(e.to_string()))?) {
                println!("{raw} {adjusted}");
            }
            Ok(())
        }
    }
}
