//! Canonical on-disk model format: UTF-8 JSON, LF line endings, two-space
//! indentation, one model per file under a `format_version` envelope.
//!
//! Parsing is strict. Unknown keys, unknown enumeration strings, duplicate
//! ids, and dangling links all abort the load; nothing is defaulted or
//! silently dropped. Rendering canonicalizes ordering (blocks by id,
//! relations by kind/source/target, views by name, bindings by block id) so
//! that saving is byte-deterministic and `render` is a fixpoint.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derivation::Selection;
use crate::metamodel::{Id, Model, Scalar};
use crate::validation::Diagnostic;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// E-PARSE: the document is not well-formed under the strict schema.
    #[error("E-PARSE: {0}")]
    Parse(String),
    /// E-KIND: an enumeration string is not one of the known values.
    #[error("E-KIND: {0}")]
    Kind(String),
    /// Structural invariant violations (duplicate ids, dangling links, ...).
    #[error("model violates structural invariants ({} finding(s))", .0.len())]
    Integrity(Vec<Diagnostic>),
}

impl StoreError {
    /// Every load/save failure as diagnostics, for uniform CLI reporting.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            StoreError::Io { path, source } => vec![Diagnostic::error(
                "E-IO",
                Id::new(path.clone()),
                source.to_string(),
            )],
            StoreError::Parse(msg) => {
                vec![Diagnostic::error("E-PARSE", Id::new("document"), msg.clone())]
            }
            StoreError::Kind(msg) => {
                vec![Diagnostic::error("E-KIND", Id::new("document"), msg.clone())]
            }
            StoreError::Integrity(diags) => diags.clone(),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, StoreError::Io { .. })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format_version: u32,
    model: Model,
}

/// Parses a document from text and checks all structural invariants.
pub fn parse_model(text: &str) -> Result<Model, StoreError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(classify_serde_error)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(StoreError::Parse(format!(
            "unsupported format_version {} (expected {})",
            doc.format_version, FORMAT_VERSION
        )));
    }
    let diags = doc.model.integrity();
    if !diags.is_empty() {
        return Err(StoreError::Integrity(diags));
    }
    Ok(doc.model)
}

/// Renders a model in canonical form. The input is canonicalized first, so
/// rendering the parse of this output reproduces it byte for byte.
pub fn render_model(model: &Model) -> Result<String, StoreError> {
    let diags = model.integrity();
    if !diags.is_empty() {
        return Err(StoreError::Integrity(diags));
    }
    let mut canonical = model.clone();
    canonical.canonicalize();
    let doc = ModelDocument {
        format_version: FORMAT_VERSION,
        model: canonical,
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| StoreError::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Loads a model from a file, aborting on any invariant violation.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model, StoreError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

/// Saves a model in canonical form. Refuses models that violate their own
/// invariants (for example a dangling relation endpoint).
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let text = render_model(model)?;
    let mut file = fs::File::create(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a selection file: `{"select": {service: system, ...},
/// "params": {"block.param": value, ...}}`.
pub fn load_selection(path: impl AsRef<Path>) -> Result<Selection, StoreError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(classify_serde_error)
}

/// Loads a run parameter file: a JSON object of name -> value.
pub fn load_params(path: impl AsRef<Path>) -> Result<BTreeMap<String, Scalar>, StoreError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(classify_serde_error)
}

fn classify_serde_error(err: serde_json::Error) -> StoreError {
    let msg = err.to_string();
    if msg.contains("unknown kind") {
        StoreError::Kind(msg)
    } else {
        StoreError::Parse(msg)
    }
}
