//! Schema-versioned JSON run summaries. Timestamps live here and only
//! here; trace CSVs stay byte-reproducible.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use revnet_core::trace::RunVerdict;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub engine: String,
    pub seed: u64,
    pub verdict: String,
    pub iterations: usize,
    pub final_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub trace_path: String,
    pub generated_unix_ms: u128,
}

impl RunSummary {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        engine: &str,
        seed: u64,
        verdict: &RunVerdict,
        iterations: usize,
        final_energy: f64,
        solution: Option<String>,
        confidence: Option<f64>,
        trace_path: &str,
    ) -> Self {
        let (verdict_name, energy_floor) = match verdict {
            RunVerdict::Solved => ("solved".to_string(), None),
            RunVerdict::UnsatEvidence { energy_floor } => (
                "unsat_evidence".to_string(),
                if energy_floor.is_nan() { None } else { Some(*energy_floor) },
            ),
            RunVerdict::BudgetExhausted => ("budget_exhausted".to_string(), None),
        };
        RunSummary {
            schema_version: SCHEMA_VERSION,
            engine: engine.to_string(),
            seed,
            verdict: verdict_name,
            iterations,
            final_energy,
            solution,
            energy_floor,
            confidence,
            trace_path: trace_path.to_string(),
            generated_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    pub fn to_json(&self) -> Result<String, String> {
        serde_json::to_string_pretty(self).map_err(|e| format!("summary serialization: {e}"))
    }
}
