//! On-disk layout for labeled graph triples.
//!
//! A dataset directory holds a `manifest.jsonl` plus a `graphs/` folder with
//! three GraphML files per example (`<id>.pre.graphml`, `<id>.post.graphml`,
//! `<id>.intv.graphml`). The manifest is the source of truth for labels and
//! ordering; graph files are referenced by relative path so a dataset
//! directory can be moved wholesale. Loading re-validates every triple, so a
//! hand-edited file that breaks the subgraph relation is rejected rather than
//! silently accepted.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{DiffError, GraphTriple};
use crate::graph::{graphml, GraphError, PageGraph};
use crate::mining::Label;

/// Where an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Generated by the synthetic crawl simulator.
    Synthetic,
    /// Mined from a filter-list change log and recorded with a crawler.
    Mined,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Synthetic => "synthetic",
            Provenance::Mined => "mined",
        })
    }
}

/// A graph triple with its breakage label — one training example.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTriple {
    pub triple: GraphTriple,
    pub label: Label,
    pub provenance: Provenance,
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub example_id: String,
    pub page_url: String,
    pub label: Label,
    pub provenance: Provenance,
    pub pre: String,
    pub post: String,
    pub intervention: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {source}")]
    MalformedManifest {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("example id `{0}` appears more than once")]
    DuplicateExampleId(String),
    #[error("example id `{0}` cannot be used as a file name")]
    InvalidExampleId(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_example_id(id: &str) -> Result<(), DatasetError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.');
    if ok && !id.starts_with('.') {
        Ok(())
    } else {
        Err(DatasetError::InvalidExampleId(id.to_string()))
    }
}

fn write_graph(path: &Path, graph: &PageGraph) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    graphml::save_graphml(graph, &mut writer)?;
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn read_graph(path: &Path) -> Result<PageGraph, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(graphml::load_graphml(BufReader::new(file))?)
}

/// Writes `examples` under `dir`, creating it if needed. Existing files for
/// the same example ids are overwritten.
pub fn save_dataset(dir: &Path, examples: &[LabeledTriple]) -> Result<(), DatasetError> {
    let graphs_dir = dir.join("graphs");
    fs::create_dir_all(&graphs_dir).map_err(io_err(&graphs_dir))?;

    let mut seen = std::collections::HashSet::new();
    let manifest_path = dir.join("manifest.jsonl");
    let manifest = File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut manifest = BufWriter::new(manifest);

    for example in examples {
        let id = &example.triple.example_id;
        check_example_id(id)?;
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateExampleId(id.clone()));
        }
        let record = DatasetRecord {
            example_id: id.clone(),
            page_url: example.triple.pre.page_url().to_string(),
            label: example.label,
            provenance: example.provenance,
            pre: format!("graphs/{id}.pre.graphml"),
            post: format!("graphs/{id}.post.graphml"),
            intervention: format!("graphs/{id}.intv.graphml"),
        };
        write_graph(&dir.join(&record.pre), &example.triple.pre)?;
        write_graph(&dir.join(&record.post), &example.triple.post)?;
        write_graph(&dir.join(&record.intervention), &example.triple.intervention)?;
        serde_json::to_writer(&mut manifest, &record)
            .map_err(|e| DatasetError::MalformedManifest { line: 0, source: e })?;
        manifest.write_all(b"\n").map_err(io_err(&manifest_path))?;
    }
    manifest.flush().map_err(io_err(&manifest_path))?;
    Ok(())
}

/// Reads the manifest rows of a dataset without loading any graphs.
pub fn load_manifest(dir: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let path = dir.join("manifest.jsonl");
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(&line)
            .map_err(|e| DatasetError::MalformedManifest { line: i + 1, source: e })?;
        if !seen.insert(record.example_id.clone()) {
            return Err(DatasetError::DuplicateExampleId(record.example_id));
        }
        records.push(record);
    }
    Ok(records)
}

/// Loads one example given its manifest row.
pub fn load_example(dir: &Path, record: &DatasetRecord) -> Result<LabeledTriple, DatasetError> {
    let pre = read_graph(&dir.join(&record.pre))?;
    let post = read_graph(&dir.join(&record.post))?;
    let intervention = read_graph(&dir.join(&record.intervention))?;
    let triple = GraphTriple::new(record.example_id.clone(), pre, post, intervention)?;
    Ok(LabeledTriple {
        triple,
        label: record.label,
        provenance: record.provenance,
    })
}

/// Loads the whole dataset in manifest order, re-validating every triple.
pub fn load_dataset(dir: &Path) -> Result<Vec<LabeledTriple>, DatasetError> {
    load_manifest(dir)?
        .iter()
        .map(|record| load_example(dir, record))
        .collect()
}
