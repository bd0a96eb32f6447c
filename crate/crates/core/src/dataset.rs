//! Labelled instances and dataset containers.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::GeneratorSpec;
use crate::instance::{HeuristicKind, Instance};
use crate::packing::{evaluate_all, PerformanceVector};

/// Best heuristic(s) for an instance among a candidate set.
///
/// `winners` is the set of candidates sharing the maximal fitness, kept in
/// canonical order. `margin` is the gap from the best fitness to the
/// runner-up candidate, so it is zero exactly when the winner is tied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    winners: Vec<HeuristicKind>,
    margin: f64,
}

impl Label {
    pub fn from_performance(performance: &PerformanceVector, candidates: &[HeuristicKind]) -> Self {
        let candidates = canonical(candidates);
        assert!(!candidates.is_empty(), "label needs at least one candidate");
        let best = candidates
            .iter()
            .map(|&h| performance.get(h))
            .fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<HeuristicKind> = candidates
            .iter()
            .copied()
            .filter(|&h| performance.get(h) == best)
            .collect();
        let margin = if winners.len() > 1 {
            0.0
        } else {
            let runner_up = candidates
                .iter()
                .filter(|&&h| performance.get(h) != best)
                .map(|&h| performance.get(h))
                .fold(f64::NEG_INFINITY, f64::max);
            if runner_up.is_finite() {
                best - runner_up
            } else {
                0.0
            }
        };
        Self { winners, margin }
    }

    /// Builds a label directly from a winner set, e.g. when importing.
    pub fn from_winners(winners: &[HeuristicKind], margin: f64) -> Self {
        Self {
            winners: canonical(winners),
            margin,
        }
    }

    /// Canonical representative: the first tied winner in BF, FF, NF, WF order.
    pub fn winner(&self) -> HeuristicKind {
        self.winners[0]
    }

    pub fn winners(&self) -> &[HeuristicKind] {
        &self.winners
    }

    pub fn contains(&self, heuristic: HeuristicKind) -> bool {
        self.winners.contains(&heuristic)
    }

    pub fn is_tie(&self) -> bool {
        self.winners.len() > 1
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}

fn canonical(set: &[HeuristicKind]) -> Vec<HeuristicKind> {
    HeuristicKind::ALL
        .iter()
        .copied()
        .filter(|h| set.contains(h))
        .collect()
}

/// Evaluates all four heuristics and labels the instance over all of them.
pub fn label_instance(instance: &Instance, k: f64) -> Result<(PerformanceVector, Label)> {
    let performance = evaluate_all(instance, k)?;
    let label = Label::from_performance(&performance, &HeuristicKind::ALL);
    Ok((performance, label))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub instance: Instance,
    pub performance: PerformanceVector,
    pub label: Label,
}

impl Record {
    pub fn evaluate(instance: Instance, k: f64, candidates: &[HeuristicKind]) -> Result<Self> {
        let performance = evaluate_all(&instance, k)?;
        let label = Label::from_performance(&performance, candidates);
        Ok(Self {
            instance,
            performance,
            label,
        })
    }
}

/// Provenance of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// How the dataset was produced: `random`, `structured`, `evolved`,
    /// `merged`, `imported`, ...
    pub kind: String,
    pub generator: Option<GeneratorSpec>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub k: f64,
    /// Heuristics the labels and the virtual best solver range over.
    pub candidates: Vec<HeuristicKind>,
    /// Free-form creation parameters, kept sorted.
    pub params: BTreeMap<String, String>,
}

impl DatasetMeta {
    pub fn new(kind: impl Into<String>, k: f64, candidates: &[HeuristicKind]) -> Self {
        Self {
            kind: kind.into(),
            generator: None,
            tau: None,
            seed: None,
            k,
            candidates: canonical(candidates),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub meta: DatasetMeta,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(meta: DatasetMeta, records: Vec<Record>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.instance.id()) {
                return Err(Error::DuplicateId(r.instance.id().to_string()));
            }
        }
        Ok(Self { meta, records })
    }

    /// Evaluates and labels raw instances over `meta.candidates`.
    pub fn from_instances(meta: DatasetMeta, instances: Vec<Instance>) -> Result<Self> {
        let records = instances
            .into_iter()
            .map(|i| Record::evaluate(i, meta.k, &meta.candidates))
            .collect::<Result<Vec<_>>>()?;
        Self::new(meta, records)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Capacity shared by all instances, if they agree.
    pub fn capacity(&self) -> Option<u32> {
        let first = self.records.first()?.instance.capacity();
        self.records
            .iter()
            .all(|r| r.instance.capacity() == first)
            .then_some(first)
    }

    pub fn labels(&self) -> Vec<HeuristicKind> {
        self.records.iter().map(|r| r.label.winner()).collect()
    }

    /// Records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            meta: self.meta.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Number of records per canonical winner.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for r in &self.records {
            counts[r.label.winner().index()] += 1;
        }
        counts
    }

    /// Re-packs every instance and checks the stored performance and label.
    pub fn verify(&self) -> Result<()> {
        for r in &self.records {
            let fresh = Record::evaluate(r.instance.clone(), self.meta.k, &self.meta.candidates)?;
            if fresh.performance != r.performance {
                return Err(Error::InconsistentRecord {
                    id: r.instance.id().to_string(),
                    reason: format!(
                        "stored fitness {:?} differs from recomputed {:?}",
                        r.performance.fitness, fresh.performance.fitness
                    ),
                });
            }
            if fresh.label.winners() != r.label.winners() {
                return Err(Error::InconsistentRecord {
                    id: r.instance.id().to_string(),
                    reason: format!(
                        "stored label {:?} differs from recomputed {:?}",
                        r.label.winners(),
                        fresh.label.winners()
                    ),
                });
            }
        }
        Ok(())
    }
}
