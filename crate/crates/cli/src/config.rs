use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fconv_core::{DensitySpec, HarnessConfig, OperatorDescriptor, Suite};
use serde::{Deserialize, Serialize};

pub const DEFAULT_CONFIG: &str = include_str!("../assets/default_config.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Directory receiving one report per suite.
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            path: PathBuf::from("reports"),
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    /// Empty or missing means every suite.
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub operators: Vec<OperatorDescriptor>,
    #[serde(default)]
    pub densities: Vec<DensitySpec>,
    #[serde(default)]
    pub resolutions: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub max_cases: Option<usize>,
    #[serde(default)]
    pub output: Output,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => DEFAULT_CONFIG.to_string(),
        };
        let cfg: RunConfig = serde_json::from_str(&text).context("parsing config")?;
        Ok(cfg)
    }

    pub fn harness(&self) -> HarnessConfig {
        let d = HarnessConfig::default();
        HarnessConfig {
            dims: self.dims.clone().unwrap_or(d.dims),
            operators: self.operators.clone(),
            densities: self.densities.clone(),
            resolutions: self.resolutions.clone().unwrap_or(d.resolutions),
            seed: self.seed.unwrap_or(d.seed),
            tolerances: self.tolerances.clone(),
            max_cases: self.max_cases,
        }
    }

    pub fn suites(&self) -> anyhow::Result<Vec<Suite>> {
        if self.suites.is_empty() {
            return Ok(Suite::ALL.to_vec());
        }
        let mut out: Vec<Suite> = Vec::new();
        for s in &self.suites {
            let suite: Suite = s.parse()?;
            if out.contains(&suite) {
                bail!("suite `{s}` listed twice");
            }
            out.push(suite);
        }
        Ok(out)
    }
}
