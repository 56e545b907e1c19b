//! Function and density documents given on the command line, either inline
//! JSON or a path to a JSON file.

use std::path::Path;

use anyhow::Context;
use fconv_core::{DensitySpec, FunctionSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// `{"dim": 2, "function": {"type": "quadratic"}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub dim: usize,
    pub function: FunctionSpec,
}

fn read_doc<T: DeserializeOwned>(arg: &str, what: &str) -> anyhow::Result<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).with_context(|| format!("reading {what} file {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("malformed {what} spec"))
}

pub fn function_doc(arg: &str) -> anyhow::Result<FunctionDoc> {
    let doc: FunctionDoc = read_doc(arg, "function")?;
    doc.function
        .validate(doc.dim)
        .context("invalid function spec")?;
    Ok(doc)
}

pub fn density_spec(arg: &str) -> anyhow::Result<DensitySpec> {
    read_doc(arg, "density")
}
