//! Versioned JSON report envelopes with a reproducibility block, shared by
//! the command-line front end.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Schema tag embedded in every emitted report.
pub const SCHEMA: &str = "sobex/1";

/// Everything needed to rerun the experiment that produced a report.
#[derive(Debug, Clone, Serialize)]
pub struct Reproducibility {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub tool_version: String,
}

impl Reproducibility {
    pub fn new(seed: Option<u64>, depth: Option<i32>, h: Option<f64>) -> Self {
        Reproducibility {
            seed,
            depth,
            h,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Report envelope: schema version, the command, the fully resolved config,
/// the reproducibility block, and the command-specific result payload.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub config: Value,
    pub reproducibility: Reproducibility,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, config: Value, repro: Reproducibility, result: Value) -> Report {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            config,
            reproducibility: repro,
            result,
        }
    }

    /// Deterministic pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Write to a file, or to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = self.to_json()?;
        match path {
            Some(p) => fs::write(p, text)?,
            None => print!("{}", text),
        }
        Ok(())
    }
}
