//! Self-contained model file: everything `predict` and `evaluate` need.

use std::path::Path;

use rulemine::{Encoding, LvqNetwork, MinerConfig, RuleList};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format_version: u32,
    /// Schema plus the numeric ranges fitted on the training rows.
    pub encoding: Encoding,
    pub network: LvqNetwork,
    pub rules: RuleList,
    /// Rendered rules in list order, for reading without tooling.
    pub rules_text: Vec<String>,
    pub config: MinerConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
}

impl ModelArtifact {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("artifact serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let version: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("model: {e}")))?;
        match version.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(CliError::Input(format!("model: unsupported format_version {v}"))),
            None => return Err(CliError::Input("model: missing format_version".into())),
        }
        let artifact: ModelArtifact = serde_json::from_value(version).map_err(|e| CliError::Input(format!("model: {e}")))?;
        for rule in &artifact.rules.rules {
            rule.validate(artifact.encoding.schema()).map_err(|e| CliError::Input(format!("model: {e}")))?;
        }
        if artifact.rules.default_class >= artifact.encoding.schema().num_classes() {
            return Err(CliError::Input("model: default class out of range".into()));
        }
        Ok(artifact)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}
