use std::time::Instant;

use qcond_core::qobjects::Check;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Running SHA-256 over everything that determines a report: file contents
/// (not their paths) and generator parameters.
pub struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Inputs { hasher }
    }

    pub fn add_file(&mut self, bytes: &[u8]) {
        self.hasher.update(b"file\0");
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn add_param(&mut self, name: &str, value: impl std::fmt::Display) {
        let text = format!("{name}={value}");
        self.hasher.update(b"param\0");
        self.hasher.update((text.len() as u64).to_le_bytes());
        self.hasher.update(text.as_bytes());
    }

    pub fn digest(self) -> String {
        format!("sha256:{}", hex::encode(self.hasher.finalize()))
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub checks: Vec<Check>,
    pub seed: Option<u64>,
    pub elapsed_ms: u64,
    pub pass: bool,
    pub details: Value,
}

/// What a subcommand hands back before the report is stamped.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub seed: Option<u64>,
    pub details: Value,
}

impl Outcome {
    pub fn new(checks: Vec<Check>, details: Value) -> Self {
        Outcome {
            checks,
            seed: None,
            details,
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

impl Report {
    pub fn finish(command: String, inputs: Inputs, outcome: Outcome, tol: Option<f64>, started: Instant) -> Self {
        let checks: Vec<Check> = match tol {
            Some(t) => outcome.checks.iter().map(|c| c.with_tolerance(t)).collect(),
            None => outcome.checks,
        };
        let pass = checks.iter().all(|c| c.pass);
        Report {
            command,
            inputs_digest: inputs.digest(),
            checks,
            seed: outcome.seed,
            elapsed_ms: started.elapsed().as_millis() as u64,
            pass,
            details: outcome.details,
        }
    }
}
