//! Online one-dimensional bin packing workbench: the four classic packing
//! rules, instance generators, order-free features and the evaluation of
//! per-instance heuristic selectors.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod evolve;
pub mod features;
pub mod generate;
pub mod instance;
pub mod packing;
pub mod split;
pub mod stats;

pub use dataset::{label_instance, Dataset, DatasetMeta, Label, Record};
pub use error::{Error, Result};
pub use eval::{evaluate_selector, single_best_solver, EvalReport};
pub use evolve::{evolve_instance, EaConfig};
pub use features::{extract_features, FeatureVector};
pub use generate::{generate_random, generate_structured, sample_instance, GeneratorSpec, Preset};
pub use instance::{HeuristicKind, Instance};
pub use packing::{evaluate_all, falkenauer_fitness, lower_bound, pack, PackingResult, PerformanceVector};
