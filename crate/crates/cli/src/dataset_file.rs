//! Line-oriented dataset files: one JSON header line, then one JSON record
//! per instance.
//!
//! Fitness values and margins are stored as decimal strings with 12
//! significant digits. On load every instance is re-packed and the stored
//! strings must match the recomputed values exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use binsel_core::dataset::{Dataset, DatasetMeta, Record};
use binsel_core::generate::GeneratorSpec;
use binsel_core::{HeuristicKind, Instance};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DATASET_FORMAT: &str = "binsel-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    count: usize,
    capacity: Option<u32>,
    k: f64,
    kind: String,
    generator: Option<GeneratorSpec>,
    tau: Option<f64>,
    seed: Option<u64>,
    candidates: Vec<HeuristicKind>,
    params: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    id: String,
    capacity: u32,
    items: Vec<u32>,
    fitness: BTreeMap<HeuristicKind, String>,
    label: Vec<HeuristicKind>,
    margin: String,
}

/// Shortest decimal that rounds `x` to 12 significant digits.
pub fn sig12(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn line_of(r: &Record) -> Line {
    Line {
        id: r.instance.id().to_string(),
        capacity: r.instance.capacity(),
        items: r.instance.items().to_vec(),
        fitness: r.performance.iter().map(|(h, f)| (h, sig12(f))).collect(),
        label: r.label.winners().to_vec(),
        margin: sig12(r.label.margin()),
    }
}

pub fn dataset_to_string(dataset: &Dataset) -> String {
    let meta = &dataset.meta;
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        count: dataset.len(),
        capacity: dataset.capacity(),
        k: meta.k,
        kind: meta.kind.clone(),
        generator: meta.generator,
        tau: meta.tau,
        seed: meta.seed,
        candidates: meta.candidates.clone(),
        params: meta.params.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in dataset.records() {
        let line = serde_json::to_string(&line_of(r)).expect("record serializes");
        writeln!(out, "{line}").expect("writing to a string");
    }
    out
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> CliResult<()> {
    std::fs::write(path, dataset_to_string(dataset)).map_err(|e| CliError::io(path, e))
}

fn mismatch(what: &str, line: usize, id: &str, stored: impl std::fmt::Debug, fresh: impl std::fmt::Debug) -> CliError {
    CliError::Data(format!(
        "line {line} ({id}): stored {what} {stored:?} does not match recomputed {fresh:?}"
    ))
}

pub fn dataset_from_str(text: &str, origin: &str) -> CliResult<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{origin}: empty dataset file")))?;
    let header: Header = serde_json::from_str(first)
        .map_err(|e| CliError::Data(format!("{origin}: unreadable header: {e}")))?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(CliError::Data(format!(
            "{origin}: expected {DATASET_FORMAT} version {DATASET_VERSION}, found {} version {}",
            header.format, header.version
        )));
    }
    if header.candidates.is_empty() {
        return Err(CliError::Data(format!("{origin}: header lists no candidate heuristics")));
    }
    let mut meta = DatasetMeta::new(header.kind, header.k, &header.candidates);
    meta.generator = header.generator;
    meta.tau = header.tau;
    meta.seed = header.seed;
    meta.params = header.params;

    let mut records = Vec::with_capacity(header.count);
    for (idx, raw) in lines {
        let n = idx + 1;
        let line: Line = serde_json::from_str(raw)
            .map_err(|e| CliError::Data(format!("{origin}: line {n}: {e}")))?;
        let instance = Instance::new(line.id.clone(), line.capacity, line.items)
            .map_err(|e| CliError::Data(format!("{origin}: line {n}: {e}")))?;
        let record = Record::evaluate(instance, meta.k, &meta.candidates)
            .map_err(|e| CliError::Data(format!("{origin}: line {n}: {e}")))?;
        let fresh = line_of(&record);
        if fresh.fitness != line.fitness {
            return Err(mismatch("fitness", n, &line.id, &line.fitness, &fresh.fitness));
        }
        if fresh.label != line.label {
            return Err(mismatch("label", n, &line.id, &line.label, &fresh.label));
        }
        if fresh.margin != line.margin {
            return Err(mismatch("margin", n, &line.id, &line.margin, &fresh.margin));
        }
        records.push(record);
    }
    if records.len() != header.count {
        return Err(CliError::Data(format!(
            "{origin}: header announces {} records, file holds {}",
            header.count,
            records.len()
        )));
    }
    let dataset = Dataset::new(meta, records).map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
    if dataset.capacity() != header.capacity {
        return Err(CliError::Data(format!("{origin}: header capacity disagrees with the records")));
    }
    Ok(dataset)
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    dataset_from_str(&text, &path.display().to_string())
}

/// Parses externally supplied plain-text instances: one instance per line as
/// whitespace-separated integer weights, optionally preceded by `id:`. Blank
/// lines and lines starting with `#` are skipped. Unnamed instances get ids
/// `i000001`, `i000002`, ... by line position.
pub fn parse_plain_instances(text: &str, capacity: u32, origin: &str) -> CliResult<Vec<Instance>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, weights) = match line.split_once(':') {
            Some((id, rest)) => (id.trim().to_string(), rest),
            None => (format!("i{:06}", idx + 1), line),
        };
        let items = weights
            .split_whitespace()
            .map(|w| w.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Data(format!("{origin}: line {}: {e}", idx + 1)))?;
        if items.is_empty() {
            return Err(CliError::Data(format!("{origin}: line {}: no item weights", idx + 1)));
        }
        let instance = Instance::new(id, capacity, items)
            .map_err(|e| CliError::Data(format!("{origin}: line {}: {e}", idx + 1)))?;
        out.push(instance);
    }
    Ok(out)
}
