//! On-disk format for trained classifiers.
//!
//! A model document bundles everything needed to score new recordings:
//! the fitted preprocessor, the boosted trees, and the names of the feature
//! columns the trees index into (the preprocessor's kept columns, in order).
//! The format is versioned JSON; loading validates internal consistency so a
//! hand-edited or truncated file fails loudly instead of mispredicting.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gbdt::GbdtModel;
use super::preprocess::PreprocessorModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedFormatVersion(u32),
    #[error("inconsistent model document: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    /// Version of the library that wrote the document.
    pub library_version: String,
    /// Version of the feature schema the preprocessor was fitted against.
    pub schema_version: u32,
    /// Names of the columns the trees index into, i.e. the preprocessor's
    /// kept columns in kept order.
    pub feature_names: Vec<String>,
    pub preprocessor: PreprocessorModel,
    pub model: GbdtModel,
}

impl ModelDocument {
    pub fn new(
        schema_version: u32,
        feature_names: Vec<String>,
        preprocessor: PreprocessorModel,
        model: GbdtModel,
    ) -> ModelDocument {
        ModelDocument {
            format_version: FORMAT_VERSION,
            library_version: crate::VERSION.to_string(),
            schema_version,
            feature_names,
            preprocessor,
            model,
        }
    }

    /// Checks that the document's parts agree with each other.
    pub fn validate(&self) -> Result<(), ModelIoError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelIoError::UnsupportedFormatVersion(self.format_version));
        }
        if self.feature_names.len() != self.preprocessor.kept.len() {
            return Err(ModelIoError::Inconsistent(format!(
                "{} feature names but {} kept columns",
                self.feature_names.len(),
                self.preprocessor.kept.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &self.feature_names {
            if !seen.insert(name.as_str()) {
                return Err(ModelIoError::Inconsistent(format!(
                    "duplicate feature name `{name}`"
                )));
            }
        }
        let mut used = BTreeSet::new();
        for tree in &self.model.trees {
            tree.features_used(&mut used);
        }
        if let Some(&max) = used.iter().next_back() {
            if max >= self.feature_names.len() {
                return Err(ModelIoError::Inconsistent(format!(
                    "tree references feature index {max} but only {} columns exist",
                    self.feature_names.len()
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelIoError> {
        self.validate()?;
        let wrap = |source| ModelIoError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(wrap)?;
        let mut writer = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n").map_err(wrap)?;
        writer.flush().map_err(wrap)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelDocument, ModelIoError> {
        let file = File::open(path).map_err(|source| ModelIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let doc: ModelDocument = serde_json::from_reader(BufReader::new(file))?;
        doc.validate()?;
        Ok(doc)
    }
}
