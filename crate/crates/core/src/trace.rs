//! Relaxation traces and run outcomes shared by all engines.

use crate::network::Assignment;

/// One recorded step of a relaxation run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    /// Model time (step · dt for the quantum engines, proposal count for
    /// the classical one).
    pub time: f64,
    /// Expected total energy, links included.
    pub total_energy: f64,
    /// Expected gate-plus-constraint energy.
    pub gate_energy: f64,
    /// Whether the step's energy target was clamped to the reachable floor.
    pub clamped: bool,
    /// Probability weight on the solution subspace, when known (NaN when
    /// the solution set was too large to enumerate).
    pub overlap_solution: f64,
}

/// Time series of a relaxation run.
#[derive(Debug, Clone, Default)]
pub struct RelaxationTrace {
    pub rows: Vec<TraceRow>,
}

impl RelaxationTrace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.rows.last().map(|r| r.total_energy)
    }

    /// Largest per-step energy increase; negative when the trace strictly
    /// descends.
    pub fn max_energy_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].total_energy - w[0].total_energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// How a relaxation run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunVerdict {
    /// Equilibrium reached and a measured assignment solves the network.
    Solved,
    /// The reachable energy floor stayed above zero for the configured
    /// plateau; the floor is reported.
    UnsatEvidence { energy_floor: f64 },
    /// Step budget exhausted without a verdict.
    BudgetExhausted,
}

/// Outcome of a one-way or two-way relaxation run.
#[derive(Debug, Clone)]
pub struct EngineOutcome {
    pub verdict: RunVerdict,
    pub assignment: Option<Assignment>,
    pub steps: usize,
    pub final_energy: f64,
}
