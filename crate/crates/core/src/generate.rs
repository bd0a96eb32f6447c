//! Random and gap-filtered instance generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, Record};
use crate::error::{Error, Result};
use crate::instance::{HeuristicKind, Instance};
use crate::packing::{falkenauer_fitness, pack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemDistribution {
    Uniform,
    Gaussian,
}

impl std::str::FromStr for ItemDistribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            other => Err(format!("unknown distribution {other:?}")),
        }
    }
}

/// Parameters of a random instance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_items: usize,
    pub lower: u32,
    pub upper: u32,
    pub distribution: ItemDistribution,
    pub capacity: u32,
}

/// The four benchmark families; capacity 150 throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Ds1,
    Ds2,
    Ds3,
    Ds4,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ds1" => Ok(Self::Ds1),
            "ds2" => Ok(Self::Ds2),
            "ds3" => Ok(Self::Ds3),
            "ds4" => Ok(Self::Ds4),
            other => Err(format!("unknown preset {other:?} (expected ds1..ds4)")),
        }
    }
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Ds1, Preset::Ds2, Preset::Ds3, Preset::Ds4];

    pub fn spec(self) -> GeneratorSpec {
        let (n_items, lower, upper, distribution) = match self {
            Preset::Ds1 => (120, 40, 60, ItemDistribution::Gaussian),
            Preset::Ds2 => (120, 20, 100, ItemDistribution::Uniform),
            Preset::Ds3 => (250, 40, 60, ItemDistribution::Gaussian),
            Preset::Ds4 => (250, 20, 100, ItemDistribution::Uniform),
        };
        GeneratorSpec {
            n_items,
            lower,
            upper,
            distribution,
            capacity: 150,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_items == 0 {
            return Err(Error::InvalidSpec("n_items must be at least 1".into()));
        }
        if !(1 <= self.lower && self.lower <= self.upper && self.upper <= self.capacity) {
            return Err(Error::InvalidSpec(format!(
                "need 1 <= lower ({}) <= upper ({}) <= capacity ({})",
                self.lower, self.upper, self.capacity
            )));
        }
        Ok(())
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent stream derived from `base`.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index)
}

/// Draws one instance. Gaussian draws use mean `(lower + upper) / 2` and
/// standard deviation `(upper - lower) / 6`, rounded and redrawn until they
/// land inside the bounds.
pub fn sample_instance(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = sample_items(spec, &mut rng);
    Instance::new(format!("{seed:016x}"), spec.capacity, items)
}

pub(crate) fn sample_items(spec: &GeneratorSpec, rng: &mut impl Rng) -> Vec<u32> {
    (0..spec.n_items).map(|_| sample_weight(spec, rng)).collect()
}

pub(crate) fn sample_weight(spec: &GeneratorSpec, rng: &mut impl Rng) -> u32 {
    if spec.lower == spec.upper {
        return spec.lower;
    }
    match spec.distribution {
        ItemDistribution::Uniform => rng.random_range(spec.lower..=spec.upper),
        ItemDistribution::Gaussian => {
            let mean = f64::from(spec.lower + spec.upper) / 2.0;
            let std = f64::from(spec.upper - spec.lower) / 6.0;
            let normal = Normal::new(mean, std).expect("finite positive std");
            loop {
                let w = normal.sample(rng).round();
                if w >= f64::from(spec.lower) && w <= f64::from(spec.upper) {
                    return w as u32;
                }
            }
        }
    }
}

/// `count` unfiltered instances labelled over all four heuristics.
pub fn generate_random(spec: &GeneratorSpec, count: usize, seed: u64, k: f64) -> Result<Dataset> {
    spec.validate()?;
    let records = (0..count)
        .into_par_iter()
        .map(|i| {
            let instance = sample_instance(spec, stream_seed(seed, i as u64))?.with_id(format!("r{i:06}"));
            Record::evaluate(instance, k, &HeuristicKind::ALL)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut meta = DatasetMeta::new("random", k, &HeuristicKind::ALL);
    meta.generator = Some(*spec);
    meta.seed = Some(seed);
    meta.params.insert("count".into(), count.to_string());
    Dataset::new(meta, records)
}

/// Settings for [`generate_structured`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredConfig {
    pub tau: f64,
    pub count_bf: usize,
    pub count_ff: usize,
    pub seed: u64,
    pub k: f64,
    /// Abort once a class still being filled qualifies on fewer trials than
    /// this fraction...
    pub min_acceptance_rate: f64,
    /// ...but only after this many trials.
    pub min_trials: usize,
}

impl StructuredConfig {
    pub fn new(tau: f64, count_bf: usize, count_ff: usize, seed: u64) -> Self {
        Self {
            tau,
            count_bf,
            count_ff,
            seed,
            k: crate::packing::DEFAULT_K,
            min_acceptance_rate: 1e-5,
            min_trials: 100_000,
        }
    }
}

/// Which side of the BF/FF pair an instance falls on at threshold `tau`.
/// Exact ties are never accepted, so tau = 0 keeps strict winners only.
pub fn gap_class(gap: f64, tau: f64) -> Option<HeuristicKind> {
    if gap == 0.0 || gap.abs() < tau {
        None
    } else if gap > 0.0 {
        Some(HeuristicKind::BF)
    } else {
        Some(HeuristicKind::FF)
    }
}

const CHUNK: usize = 256;

/// Samples trial `index` and returns it with its BF - FF fitness gap. Only the
/// two packings the filter needs are computed here.
fn trial(spec: &GeneratorSpec, seed: u64, index: usize, k: f64) -> Result<(Instance, f64)> {
    let instance = sample_instance(spec, stream_seed(seed, index as u64))?.with_id(format!("s{index:07}"));
    let fitness = |h| falkenauer_fitness(&pack(&instance, h), instance.capacity(), k);
    let gap = fitness(HeuristicKind::BF)? - fitness(HeuristicKind::FF)?;
    Ok((instance, gap))
}

/// Samples until `count_bf` instances with `BF - FF >= tau` and `count_ff`
/// with `FF - BF >= tau` are collected. Labels range over {BF, FF} only.
///
/// Trials are evaluated in parallel chunks but consumed strictly in trial
/// order, so the output depends only on the configuration. After
/// `min_trials`, generation aborts as soon as a class that is still short has
/// qualified on fewer than `min_acceptance_rate` of the trials so far.
pub fn generate_structured(spec: &GeneratorSpec, config: &StructuredConfig) -> Result<Dataset> {
    spec.validate()?;
    if !(config.tau >= 0.0 && config.tau.is_finite()) {
        return Err(Error::InvalidTau(config.tau));
    }
    let pair = [HeuristicKind::BF, HeuristicKind::FF];
    let wanted = [config.count_bf, config.count_ff];
    let mut kept: [Vec<Instance>; 2] = [Vec::new(), Vec::new()];
    let mut qualified = [0usize; 2];
    let mut trials = 0usize;
    let mut next = 0usize;
    let done = |kept: &[Vec<Instance>; 2]| kept[0].len() >= wanted[0] && kept[1].len() >= wanted[1];

    while !done(&kept) {
        let chunk = (next..next + CHUNK)
            .into_par_iter()
            .map(|i| trial(spec, config.seed, i, config.k))
            .collect::<Result<Vec<_>>>()?;
        next += CHUNK;
        for (instance, gap) in chunk {
            if done(&kept) {
                break;
            }
            trials += 1;
            if let Some(class) = gap_class(gap, config.tau) {
                let c = class.index();
                qualified[c] += 1;
                if kept[c].len() < wanted[c] {
                    kept[c].push(instance);
                }
            }
            if trials < config.min_trials {
                continue;
            }
            for c in 0..2 {
                let rate = qualified[c] as f64 / trials as f64;
                if kept[c].len() < wanted[c] && rate < config.min_acceptance_rate {
                    return Err(Error::AcceptanceFloor {
                        tau: config.tau,
                        class: pair[c].to_string(),
                        trials,
                        accepted_bf: kept[0].len(),
                        accepted_ff: kept[1].len(),
                        rate,
                        floor: config.min_acceptance_rate,
                    });
                }
            }
        }
    }

    let [bf, ff] = kept;
    let mut records = bf
        .into_iter()
        .chain(ff)
        .map(|i| Record::evaluate(i, config.k, &pair))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.instance.id().cmp(b.instance.id()));

    let mut meta = DatasetMeta::new("structured", config.k, &pair);
    meta.generator = Some(*spec);
    meta.tau = Some(config.tau);
    meta.seed = Some(config.seed);
    meta.params.insert("count_bf".into(), config.count_bf.to_string());
    meta.params.insert("count_ff".into(), config.count_ff.to_string());
    meta.params.insert("trials".into(), trials.to_string());
    Dataset::new(meta, records)
}

/// BF-class and FF-class acceptances at `tau` among the first `budget`
/// trials of the stream that [`generate_structured`] would consume.
pub fn structured_acceptance_counts(
    spec: &GeneratorSpec,
    tau: f64,
    budget: usize,
    seed: u64,
    k: f64,
) -> Result<(usize, usize)> {
    let gaps = (0..budget)
        .into_par_iter()
        .map(|i| trial(spec, seed, i, k).map(|t| t.1))
        .collect::<Result<Vec<_>>>()?;
    Ok(gaps.iter().fold((0, 0), |(b, f), &g| match gap_class(g, tau) {
        Some(HeuristicKind::BF) => (b + 1, f),
        Some(_) => (b, f + 1),
        None => (b, f),
    }))
}

/// Concatenates datasets, prefixing ids with the source position. With
/// `per_class`, draws that many instances of every class present in the
/// candidate set from each source.
pub fn merge_datasets(sources: &[Dataset], per_class: Option<usize>, seed: u64) -> Result<Dataset> {
    let first = sources.first().ok_or(Error::EmptyDataset)?;
    let k = first.meta.k;
    let mut candidates: Vec<HeuristicKind> = Vec::new();
    for d in sources {
        if d.meta.k != k {
            return Err(Error::InvalidSpec(format!(
                "cannot merge datasets with k = {} and k = {}",
                k, d.meta.k
            )));
        }
        for &h in &d.meta.candidates {
            if !candidates.contains(&h) {
                candidates.push(h);
            }
        }
    }
    let mut records = Vec::new();
    for (j, d) in sources.iter().enumerate() {
        let chosen: Vec<usize> = match per_class {
            None => (0..d.len()).collect(),
            Some(m) => {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, j as u64));
                let mut picked = Vec::new();
                for h in HeuristicKind::ALL.iter().filter(|h| d.meta.candidates.contains(h)) {
                    let mut members: Vec<usize> = (0..d.len())
                        .filter(|&i| d.records()[i].label.winner() == *h)
                        .collect();
                    if members.len() < m {
                        return Err(Error::ClassTooSmall {
                            class: h.to_string(),
                            size: members.len(),
                            needed: m,
                        });
                    }
                    members.shuffle(&mut rng);
                    picked.extend_from_slice(&members[..m]);
                }
                picked.sort_unstable();
                picked
            }
        };
        for i in chosen {
            let r = &d.records()[i];
            let instance = r.instance.clone().with_id(format!("d{j}-{}", r.instance.id()));
            records.push(Record::evaluate(instance, k, &candidates)?);
        }
    }
    let mut meta = DatasetMeta::new("merged", k, &candidates);
    meta.seed = Some(seed);
    meta.params.insert("sources".into(), sources.len().to_string());
    if let Some(m) = per_class {
        meta.params.insert("per_class".into(), m.to_string());
    }
    Dataset::new(meta, records)
}
