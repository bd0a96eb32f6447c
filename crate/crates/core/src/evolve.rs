//! Evolving instances on which one heuristic beats the rest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, Record};
use crate::error::{Error, Result};
use crate::generate::{sample_items, sample_weight, stream_seed, GeneratorSpec};
use crate::instance::{HeuristicKind, Instance};
use crate::packing::{evaluate_all, PerformanceVector, DEFAULT_K};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EaConfig {
    pub target: HeuristicKind,
    pub population_size: usize,
    pub generations: usize,
    /// Per-gene probability of redrawing the weight.
    pub mutation_rate: f64,
    /// Probability that an offspring additionally swaps two positions.
    pub swap_probability: f64,
    pub seed: u64,
    pub k: f64,
}

impl EaConfig {
    /// Population 50, 200 generations, mutation rate `2 / n_items`.
    pub fn new(target: HeuristicKind, spec: &GeneratorSpec, seed: u64) -> Self {
        Self {
            target,
            population_size: 50,
            generations: 200,
            mutation_rate: (2.0 / spec.n_items as f64).min(1.0),
            swap_probability: 0.1,
            seed,
            k: DEFAULT_K,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidEaConfig("population_size must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::InvalidEaConfig("generations must be at least 1".into()));
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate <= 1.0) {
            return Err(Error::InvalidEaConfig(format!(
                "mutation_rate must lie in (0, 1], got {}",
                self.mutation_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.swap_probability) {
            return Err(Error::InvalidEaConfig(format!(
                "swap_probability must lie in [0, 1], got {}",
                self.swap_probability
            )));
        }
        Ok(())
    }
}

/// `f_target - max_{h != target} f_h`.
pub fn target_gap(performance: &PerformanceVector, target: HeuristicKind) -> f64 {
    let rival = performance
        .iter()
        .filter(|&(h, _)| h != target)
        .map(|(_, f)| f)
        .fold(f64::NEG_INFINITY, f64::max);
    performance.get(target) - rival
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOutcome {
    pub instance: Instance,
    pub gap: f64,
    /// Best gap in the population after initialisation and after each generation.
    pub history: Vec<f64>,
}

struct Individual {
    items: Vec<u32>,
    gap: f64,
}

fn score(spec: &GeneratorSpec, items: &[u32], config: &EaConfig) -> Result<f64> {
    let instance = Instance::new("", spec.capacity, items.to_vec())?;
    Ok(target_gap(&evaluate_all(&instance, config.k)?, config.target))
}

/// Elitist (mu + lambda) search with lambda = mu over fixed-length item
/// sequences drawn from `spec`. Parents are picked by binary tournament.
pub fn evolve_instance(spec: &GeneratorSpec, config: &EaConfig) -> Result<EvolveOutcome> {
    spec.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mu = config.population_size;

    let mut population = Vec::with_capacity(2 * mu);
    for _ in 0..mu {
        let items = sample_items(spec, &mut rng);
        let gap = score(spec, &items, config)?;
        population.push(Individual { items, gap });
    }
    let by_gap = |a: &Individual, b: &Individual| b.gap.total_cmp(&a.gap);
    population.sort_by(by_gap);
    let mut history = vec![population[0].gap];

    for _ in 0..config.generations {
        for _ in 0..mu {
            let a = rng.random_range(0..mu);
            let b = rng.random_range(0..mu);
            let parent = if population[a].gap >= population[b].gap { a } else { b };
            let mut items = population[parent].items.clone();
            for w in items.iter_mut() {
                if rng.random_bool(config.mutation_rate) {
                    *w = sample_weight(spec, &mut rng);
                }
            }
            if items.len() > 1 && rng.random_bool(config.swap_probability) {
                let i = rng.random_range(0..items.len());
                let j = rng.random_range(0..items.len());
                items.swap(i, j);
            }
            let gap = score(spec, &items, config)?;
            population.push(Individual { items, gap });
        }
        // Stable: parents stay ahead of equally fit offspring.
        population.sort_by(by_gap);
        population.truncate(mu);
        history.push(population[0].gap);
    }

    let best = population.swap_remove(0);
    Ok(EvolveOutcome {
        instance: Instance::new(format!("{:016x}", config.seed), spec.capacity, best.items)?,
        gap: best.gap,
        history,
    })
}

/// `count` evolved instances for `template.target`, each from an independent
/// stream `stream_seed(seed, i)`, labelled over all four heuristics.
pub fn generate_evolved(
    spec: &GeneratorSpec,
    template: &EaConfig,
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    spec.validate()?;
    template.validate()?;
    let records = (0..count)
        .into_par_iter()
        .map(|i| {
            let config = EaConfig {
                seed: stream_seed(seed, i as u64),
                ..*template
            };
            let outcome = evolve_instance(spec, &config)?;
            let id = format!("e{}{i:05}", template.target.as_str().to_ascii_lowercase());
            Record::evaluate(outcome.instance.with_id(id), template.k, &HeuristicKind::ALL)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut meta = DatasetMeta::new("evolved", template.k, &HeuristicKind::ALL);
    meta.generator = Some(*spec);
    meta.seed = Some(seed);
    meta.params.insert("target".into(), template.target.to_string());
    meta.params.insert("population".into(), template.population_size.to_string());
    meta.params.insert("generations".into(), template.generations.to_string());
    meta.params.insert("mutation_rate".into(), template.mutation_rate.to_string());
    meta.params.insert("swap_probability".into(), template.swap_probability.to_string());
    Dataset::new(meta, records)
}
