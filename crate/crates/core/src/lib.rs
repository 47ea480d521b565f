//! Detects web-page breakage caused by content-filter rules.
//!
//! The crate covers the full pipeline from raw inputs to a trained classifier:
//!
//! * [`filter`] — a documented subset of ABP filter syntax: parsing, request
//!   matching, and block/allow decisions.
//! * [`mining`] — turns a filter-list change log into labeled page examples
//!   (broken vs. working) with the list diff that caused each one.
//! * [`graph`] — the page-behavior graph model (DOM, scripts, network,
//!   storage) and its GraphML serialization.
//! * [`diff`] — extracts the intervention-only subgraph: the part of a page
//!   recording that changes when a filter rule is applied.
//! * [`synth`] — a deterministic generator of labeled synthetic crawls with a
//!   tunable planted signal, for end-to-end pipeline validation.
//! * [`dataset`] — on-disk layout for graph triples and their manifest.
//! * [`features`] — a fixed, versioned feature schema and the extractor that
//!   maps graph triples to numeric rows.
//! * [`ml`] — preprocessing (null/correlation pruning, standardization), a
//!   gradient-boosted decision tree classifier, and ROC analysis.
//! * [`eval`] — nested cross-validation with random hyperparameter search,
//!   leave-one-covariate-out attribution, and learning curves.

pub mod dataset;
pub mod diff;
pub mod eval;
pub mod features;
pub mod filter;
pub mod graph;
pub mod ml;
pub mod mining;
pub mod seeds;
pub mod synth;

pub use dataset::LabeledTriple;
pub use diff::GraphTriple;
pub use features::{FeatureSchema, FeatureSpec};
pub use filter::{BlockDecision, FilterRule, RequestContext, ResourceType};
pub use graph::{EdgeKind, GraphEdge, GraphNode, NodeKind, PageGraph};
pub use mining::Label;
pub use ml::{GbdtModel, Hyperparams, Matrix, PreprocessorModel};
pub use synth::SynthConfig;

/// Library version reported by tools built on this crate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
