//! Run configuration shared by the relaxation engines.

/// Knobs for the one-way and two-way relaxation engines.
///
/// The heat bath is a regime assumption (temperature well below the gate
/// gaps but nonzero); it enters the simulation only through the random
/// bath angles and the relaxation rate `sigma`, never as an explicit
/// temperature.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Relaxation rate of every gate: ground population follows
    /// 1 − exp(−sigma · t).
    pub sigma: f64,
    /// Model time advanced per step.
    pub dt: f64,
    /// Step budget; exhausting it is an outcome, not an error.
    pub max_steps: usize,
    /// RNG seed; equal seeds replay identical runs.
    pub seed: u64,
    /// Disable the heat bath (one-way bath angles forced to zero).
    pub no_bath: bool,
    /// Tolerance for the equilibrium predicate ‖ÃP ψ − ψ‖.
    pub equilibrium_tol: f64,
    /// Energy-matching tolerance for two-way reduction, as a fraction of
    /// the total gate gap.
    pub energy_tol_factor: f64,
    /// Consecutive clamped steps before declaring unsatisfiability
    /// evidence.
    pub plateau_steps: usize,
    /// Largest state-vector size the quantum engines will attempt.
    pub qubit_limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            sigma: 1.0,
            dt: 0.05,
            max_steps: 10_000,
            seed: 0,
            no_bath: false,
            equilibrium_tol: 1e-8,
            energy_tol_factor: 1e-8,
            plateau_steps: 50,
            qubit_limit: 16,
        }
    }
}

/// Stable seed derivation for fanned-out runs (splitmix64 over the pair),
/// so ensembles aggregate identically regardless of scheduling.
pub fn derive_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
