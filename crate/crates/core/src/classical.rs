//! Classical simulated annealing over the coin-flip landscape, with
//! confidence-based unsatisfiability and a frustration diagnostic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::derive_seed;
use crate::network::{Assignment, EnumerationError, Network};
use crate::trace::{RelaxationTrace, TraceRow};

/// Proposal move set. Single-bit flips are the plain coin-shaking of the
/// baseline; link-pair flips keep every wire satisfied and are used to
/// compare against the one-way engine at matched move rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MoveSet {
    #[default]
    SingleFlip,
    LinkPairFlip,
}

#[derive(Debug, Clone)]
pub struct ClassicalConfig {
    /// Fixed heat-bath temperature (kT) for the Metropolis rule.
    pub temperature: f64,
    /// Proposals per restart.
    pub max_iters: usize,
    /// Independent restarts before giving up.
    pub restarts: usize,
    /// Assumed per-restart success probability behind the reported
    /// confidence (a documented heuristic, not an estimate).
    pub assumed_success: f64,
    /// Optional geometric cooling factor applied to the temperature after
    /// every proposal; `None` keeps the temperature fixed.
    pub cooling: Option<f64>,
    pub moves: MoveSet,
    pub seed: u64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            temperature: 1.0,
            max_iters: 2000,
            restarts: 8,
            assumed_success: 0.5,
            cooling: None,
            moves: MoveSet::SingleFlip,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnealVerdict {
    Solved,
    UnsatWithConfidence,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub verdict: AnnealVerdict,
    pub assignment: Option<Assignment>,
    /// 1 − (1 − assumed_success)^restarts when no solution was found.
    pub confidence: f64,
    /// Total proposals across restarts.
    pub iterations: usize,
}

/// Metropolis annealing: propose a move, accept downhill always and
/// uphill with probability e^{−ΔE/kT}; stop at energy zero; report
/// unsatisfiability with the configured confidence after all restarts
/// fail.
pub fn anneal(net: &Network, cfg: &ClassicalConfig) -> (AnnealOutcome, RelaxationTrace) {
    assert!(cfg.temperature > 0.0, "temperature must be positive");
    let n = net.num_nodes();
    let mut trace = RelaxationTrace::default();
    let mut total_iters = 0usize;
    let solution_indices = crate::oneway::solution_index_set(net);

    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return (
            AnnealOutcome {
                verdict: AnnealVerdict::BudgetExhausted,
                assignment: None,
                confidence: 0.0,
                iterations: 0,
            },
            trace,
        );
    }

    let record = |trace: &mut RelaxationTrace, step: usize, a: &Assignment, energy: f64| {
        let overlap = match &solution_indices {
            Some(set) => set.contains(&a.to_index()) as u8 as f64,
            None => f64::NAN,
        };
        trace.push(TraceRow {
            step,
            time: step as f64,
            total_energy: energy,
            gate_energy: net.gate_energy(a),
            clamped: false,
            overlap_solution: overlap,
        });
    };

    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, restart as u64));
        let mut current = Assignment::new((0..n).map(|_| rng.random::<bool>()).collect());
        let mut energy = net.classical_energy(&current);
        let mut temperature = cfg.temperature;
        record(&mut trace, total_iters, &current, energy);

        for _ in 0..cfg.max_iters {
            if energy == 0.0 {
                debug_assert!(net.is_solution(&current));
                return (
                    AnnealOutcome {
                        verdict: AnnealVerdict::Solved,
                        assignment: Some(current),
                        confidence: 0.0,
                        iterations: total_iters,
                    },
                    trace,
                );
            }
            total_iters += 1;

            let mut candidate = current.clone();
            match cfg.moves {
                MoveSet::SingleFlip => {
                    let bit = rng.random_range(0..n);
                    candidate.bits[bit] = !candidate.bits[bit];
                }
                MoveSet::LinkPairFlip => {
                    let link = &net.links[rng.random_range(0..net.links.len())];
                    candidate.bits[link.a] = !candidate.bits[link.a];
                    candidate.bits[link.b] = !candidate.bits[link.b];
                }
            }
            let candidate_energy = net.classical_energy(&candidate);
            let delta = candidate_energy - energy;
            let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp();
            if accept {
                current = candidate;
                energy = candidate_energy;
            }
            if let Some(factor) = cfg.cooling {
                temperature = (temperature * factor).max(1e-12);
            }
            record(&mut trace, total_iters, &current, energy);
        }

        if energy == 0.0 {
            debug_assert!(net.is_solution(&current));
            return (
                AnnealOutcome {
                    verdict: AnnealVerdict::Solved,
                    assignment: Some(current),
                    confidence: 0.0,
                    iterations: total_iters,
                },
                trace,
            );
        }
    }

    let confidence = 1.0 - (1.0 - cfg.assumed_success).powi(cfg.restarts as i32);
    (
        AnnealOutcome {
            verdict: AnnealVerdict::UnsatWithConfidence,
            assignment: None,
            confidence,
            iterations: total_iters,
        },
        trace,
    )
}

/// Exhaustive census of the single-bit-flip landscape.
#[derive(Debug, Clone)]
pub struct FrustrationReport {
    /// Strict local minima under single-bit flips.
    pub strict_local_minima: usize,
    /// Strict local minima that are not global minima.
    pub non_global_strict_minima: usize,
    pub global_minimum_energy: f64,
    pub global_minima: usize,
    /// The strict local minima themselves, capped at 64 entries.
    pub minima: Vec<Assignment>,
}

/// Scan all 2^N assignments and count strict local minima of the
/// classical energy under the single-bit-flip neighborhood.
pub fn frustration_profile(net: &Network) -> Result<FrustrationReport, EnumerationError> {
    let n = net.num_nodes();
    if n > 20 {
        return Err(EnumerationError::TooLarge(n));
    }
    let dim = 1usize << n;
    let energies: Vec<f64> = (0..dim)
        .map(|idx| net.classical_energy(&Assignment::from_index(idx, n)))
        .collect();
    let global_minimum_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut report = FrustrationReport {
        strict_local_minima: 0,
        non_global_strict_minima: 0,
        global_minimum_energy,
        global_minima: 0,
        minima: Vec::new(),
    };
    for idx in 0..dim {
        if energies[idx] == global_minimum_energy {
            report.global_minima += 1;
        }
        let strict = (0..n).all(|bit| energies[idx ^ (1 << bit)] > energies[idx]);
        if strict {
            report.strict_local_minima += 1;
            if energies[idx] > global_minimum_energy {
                report.non_global_strict_minima += 1;
            }
            if report.minima.len() < 64 {
                report.minima.push(Assignment::from_index(idx, n));
            }
        }
    }
    Ok(report)
}
