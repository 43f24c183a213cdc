//! Audit record of one run.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cost_model::{PriceBook, PriceBookDoc};
use crate::inter::PlanSettings;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, path: &Path, bytes: &[u8]) -> Self {
        InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ledger {
    /// Compute paid to measure upstream runtimes.
    pub search_cost: Money,
    pub fr_evaluations: usize,
}

/// Everything needed to reproduce a decision: the command, hashes of every
/// input, the effective prices and settings, and the outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub prices: PriceBookDoc,
    pub bandwidth_bytes_per_sec: f64,
    pub result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<Ledger>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: u64, prices: &PriceBook, settings: PlanSettings) -> Self {
        RunReport {
            command,
            seed,
            inputs: Vec::new(),
            prices: prices.to_doc(),
            bandwidth_bytes_per_sec: settings.bandwidth_bytes_per_sec,
            result: serde_json::Value::Null,
            ledger: None,
            warnings: Vec::new(),
        }
    }
}
