//! Versioned JSON model snapshots.

use std::path::Path;

use binsel_core::features::extract_features;
use binsel_core::{HeuristicKind, Instance};
use binsel_models::{argmax, RecurrentNetwork, TabularModel, OUTPUTS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MODEL_FORMAT: &str = "binsel-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Selector {
    Rnn(RecurrentNetwork),
    Tabular(TabularModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub capacity: u32,
    pub k: f64,
    /// Heuristics the selector may choose from.
    pub candidates: Vec<HeuristicKind>,
    pub seed: u64,
    pub selector: Selector,
}

impl Snapshot {
    pub fn new(capacity: u32, k: f64, candidates: Vec<HeuristicKind>, seed: u64, selector: Selector) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            capacity,
            k,
            candidates,
            seed,
            selector,
        }
    }

    /// Raw model scores for an instance.
    pub fn scores(&self, instance: &Instance) -> CliResult<[f64; OUTPUTS]> {
        if instance.capacity() != self.capacity {
            return Err(CliError::Data(format!(
                "instance {} has capacity {} but the model was trained for {}",
                instance.id(),
                instance.capacity(),
                self.capacity
            )));
        }
        Ok(match &self.selector {
            Selector::Rnn(net) => {
                if instance.is_empty() {
                    return Err(CliError::Data(format!("instance {} has no items", instance.id())));
                }
                net.predict(instance).1
            }
            Selector::Tabular(model) => model.predict_features(&extract_features(instance)?).1,
        })
    }

    /// Highest-scoring heuristic among the snapshot's candidates.
    pub fn predict(&self, instance: &Instance) -> CliResult<HeuristicKind> {
        let mut scores = self.scores(instance)?;
        for h in HeuristicKind::ALL {
            if !self.candidates.contains(&h) {
                scores[h.index()] = f64::NEG_INFINITY;
            }
        }
        Ok(HeuristicKind::ALL[argmax(&scores)])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> CliResult<Self> {
        #[derive(Deserialize)]
        struct Probe {
            format: String,
            version: u32,
        }
        let probe: Probe = serde_json::from_str(text)
            .map_err(|e| CliError::Data(format!("{origin}: not a model snapshot: {e}")))?;
        if probe.format != MODEL_FORMAT || probe.version != MODEL_VERSION {
            return Err(CliError::Data(format!(
                "{origin}: expected {MODEL_FORMAT} version {MODEL_VERSION}, found {} version {}",
                probe.format, probe.version
            )));
        }
        let snap: Snapshot =
            serde_json::from_str(text).map_err(|e| CliError::Data(format!("{origin}: malformed snapshot: {e}")))?;
        if snap.candidates.is_empty() {
            return Err(CliError::Data(format!("{origin}: snapshot lists no candidates")));
        }
        if let Selector::Rnn(net) = &snap.selector {
            net.validate().map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
        }
        Ok(snap)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
