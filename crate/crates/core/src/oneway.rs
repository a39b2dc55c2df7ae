//! Conventional forward-propagation dynamics.
//!
//! Rotations factorize over the link qubits, so any infinitesimal rotation
//! leaves the antiparallel subspace orthogonally and the following link
//! projection pulls the state straight back: iterating rotation-then-
//! projection freezes the state (the watchdog effect, [`zeno_iterate`]).
//! A network therefore only relaxes through finite two-step cycles — gate
//! relaxation raising the link energy by a non-infinitesimal amount,
//! bath perturbation, then link re-relaxation onto a single accepted
//! pattern — which reproduces classical annealing statistically.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::EngineConfig;
use crate::hilbert::{apply_projector, HilbertError, ProjectorSpec, StateVector};
use crate::network::{Assignment, Network};
use crate::trace::{EngineOutcome, RelaxationTrace, RunVerdict, TraceRow};

/// Targets of one rotation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationTargets {
    One(usize),
    Pair(usize, usize),
}

/// A real rotation by `phi` applied independently to each target qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationStep {
    pub phi: f64,
    pub targets: RotationTargets,
}

impl RotationStep {
    pub fn apply(&self, s: &StateVector) -> StateVector {
        let mut out = s.clone();
        match self.targets {
            RotationTargets::One(q) => rotate_qubit(&mut out, q, self.phi),
            RotationTargets::Pair(a, b) => {
                assert_ne!(a, b, "pair rotation needs distinct qubits");
                rotate_qubit(&mut out, a, self.phi);
                rotate_qubit(&mut out, b, self.phi);
            }
        }
        out
    }
}

fn rotate_qubit(s: &mut StateVector, qubit: usize, phi: f64) {
    assert!(qubit < s.num_qubits(), "qubit out of range");
    let (sin, cos) = phi.sin_cos();
    let mask = 1usize << qubit;
    let dim = s.dim();
    let amps = s.amplitudes_mut();
    for idx in 0..dim {
        if idx & mask == 0 {
            let a0 = amps[idx];
            let a1 = amps[idx | mask];
            amps[idx] = cos * a0 - sin * a1;
            amps[idx | mask] = sin * a0 + cos * a1;
        }
    }
}

/// R_rs(φ) = R_r(φ) R_s(φ): the factorized pair rotation. Norm preserving.
pub fn rotate_factorized(s: &StateVector, r_node: usize, s_node: usize, phi: f64) -> StateVector {
    RotationStep { phi, targets: RotationTargets::Pair(r_node, s_node) }.apply(s)
}

/// Result of a watchdog iteration.
#[derive(Debug, Clone)]
pub struct ZenoOutcome {
    pub final_state: StateVector,
    /// ‖final − initial‖.
    pub deviation: f64,
    /// Magnitude of the net rotation inside the antiparallel subspace.
    pub in_subspace_angle: f64,
}

/// Iterate rotation by φ/n followed by link projection, n times, starting
/// from cos ϑ |01⟩ + sin ϑ |10⟩ on the pair (spectator qubits at |0⟩).
///
/// The per-step in-subspace rotation is quadratic in φ/n, so the total
/// drift scales as φ²/n and vanishes in the continuous limit: projection
/// freezes the rotation.
pub fn zeno_iterate(
    net: &Network,
    r_node: usize,
    s_node: usize,
    theta: f64,
    phi: f64,
    n: usize,
) -> Result<ZenoOutcome, HilbertError> {
    assert!(n >= 1, "need at least one step");
    assert!(theta >= 0.0 && phi >= 0.0 && theta + phi <= std::f64::consts::FRAC_PI_2 + 1e-12);
    let num_qubits = net.num_nodes();
    let link = net
        .links
        .iter()
        .find(|l| (l.a == r_node && l.b == s_node) || (l.a == s_node && l.b == r_node))
        .expect("nodes are not interlinked");
    // Patterns are named from the (r, s) perspective regardless of the
    // stored endpoint order.
    let spec = ProjectorSpec::link(link);

    let mut amps = vec![Complex64::ZERO; 1usize << num_qubits];
    amps[1 << s_node] = Complex64::new(theta.cos(), 0.0);
    amps[1 << r_node] = Complex64::new(theta.sin(), 0.0);
    let initial = StateVector::from_amplitudes(amps, num_qubits).expect("valid angle");

    let mut state = initial.clone();
    let step = phi / n as f64;
    for _ in 0..n {
        state = rotate_factorized(&state, r_node, s_node, step);
        state = apply_projector(&spec, &state)?;
    }

    let angle = |s: &StateVector| -> f64 {
        let a01 = s.amplitude(1 << s_node).norm();
        let a10 = s.amplitude(1 << r_node).norm();
        a10.atan2(a01)
    };
    let deviation = state.distance(&initial);
    let in_subspace_angle = (angle(&state) - theta).abs();
    Ok(ZenoOutcome { final_state: state, deviation, in_subspace_angle })
}

/// Asymptotic ground-state population of a relaxing gate: 1 − e^{−σt}.
pub fn relaxation_probability(t: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0 && t >= 0.0);
    1.0 - (-sigma * t).exp()
}

/// Gate angle that makes one cycle of length dt track the relaxation law.
pub fn gate_angle_for_step(sigma: f64, dt: f64) -> f64 {
    relaxation_probability(dt, sigma).sqrt().asin()
}

/// One independent gate relaxation step on a single qubit: rotate toward
/// the flipped state by `delta_phi` with a fresh random phase on the
/// generated component, then normalize.
pub fn gate_relax_step<R: Rng + ?Sized>(
    s: &StateVector,
    delta_phi: f64,
    rng: &mut R,
) -> StateVector {
    two_step(s, delta_phi, rng.random::<f64>() * std::f64::consts::TAU)
}

/// One independent heat-bath perturbation on a single qubit: a rotation by
/// a bath angle drawn uniformly from [0, 2π), with a fresh random phase.
/// Returns the perturbed state and the drawn angle.
pub fn bath_perturb_step<R: Rng + ?Sized>(s: &StateVector, rng: &mut R) -> (StateVector, f64) {
    let delta_theta = rng.random::<f64>() * std::f64::consts::TAU;
    let state = two_step(s, delta_theta, rng.random::<f64>() * std::f64::consts::TAU);
    (state, delta_theta)
}

/// cos(angle) ψ + e^{iδ} sin(angle) Xψ, normalized.
fn two_step(s: &StateVector, angle: f64, delta: f64) -> StateVector {
    assert_eq!(s.num_qubits(), 1, "two-step forms act on a single qubit");
    let phase = Complex64::from_polar(1.0, delta);
    let a0 = s.amplitude(0);
    let a1 = s.amplitude(1);
    let amps = vec![
        angle.cos() * a0 + phase * angle.sin() * a1,
        angle.cos() * a1 + phase * angle.sin() * a0,
    ];
    StateVector::from_amplitudes(amps, 1).expect("two-step preserved some amplitude")
}

/// Record of one symmetrized pair step: the gate angle, the drawn bath
/// angle, and the accumulated phase δ″ = δ + δ′ carried by the generated
/// pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStepRecord {
    pub delta_phi: f64,
    pub delta_theta: f64,
    pub delta_second: f64,
}

/// The symmetrized two-step evolution of one link, with explicit angles:
/// from a definite pattern, produce
/// cos Δφ cos Δϑ |pattern⟩ + e^{iδ″} sin Δφ sin Δϑ |flipped⟩, normalized.
///
/// With a silent bath (Δϑ = 0) the output equals the input exactly: the
/// gate alone cannot move the link.
pub fn pair_step_one_way_with_angles(
    state: &StateVector,
    r_node: usize,
    s_node: usize,
    record: PairStepRecord,
) -> Result<StateVector, HilbertError> {
    let n = state.num_qubits();
    assert!(r_node < n && s_node < n && r_node != s_node);
    let r_mask = 1usize << r_node;
    let s_mask = 1usize << s_node;
    let phase = Complex64::from_polar(1.0, record.delta_second);
    let keep = record.delta_phi.cos() * record.delta_theta.cos();
    let flip = record.delta_phi.sin() * record.delta_theta.sin();

    let mut amps = vec![Complex64::ZERO; state.dim()];
    for idx in 0..state.dim() {
        let amp = state.amplitude(idx);
        if amp == Complex64::ZERO {
            continue;
        }
        let r_bit = idx & r_mask != 0;
        let s_bit = idx & s_mask != 0;
        if r_bit == s_bit {
            // Outside the link ground: annihilated by the final
            // symmetrization regardless of angles.
            continue;
        }
        amps[idx] += Complex64::new(keep, 0.0) * amp;
        let flipped = idx ^ r_mask ^ s_mask;
        amps[flipped] += phase * flip * amp;
    }
    StateVector::from_amplitudes(amps, n).ok_or(HilbertError::AnnihilatedState)
}

/// Draw the bath angle and phases, then perform the symmetrized pair step.
/// A (measure-zero) annihilating bath angle is redrawn.
pub fn pair_step_one_way<R: Rng + ?Sized>(
    state: &StateVector,
    r_node: usize,
    s_node: usize,
    delta_phi: f64,
    rng: &mut R,
) -> (StateVector, PairStepRecord) {
    loop {
        let delta_theta = rng.random::<f64>() * std::f64::consts::TAU;
        let delta = rng.random::<f64>() * std::f64::consts::TAU;
        let delta_prime = rng.random::<f64>() * std::f64::consts::TAU;
        let record = PairStepRecord {
            delta_phi,
            delta_theta,
            delta_second: delta + delta_prime,
        };
        if let Ok(next) = pair_step_one_way_with_angles(state, r_node, s_node, record) {
            return (next, record);
        }
    }
}

/// One-way annealing over a network.
///
/// Each step picks a link uniformly, lets the gates drive a pair rotation
/// only when flipping the pair lowers the gate energy (with the angle set
/// so the gate ground population tracks the relaxation law), draws a bath
/// angle for the other endpoint, and then re-relaxes the link onto a
/// single accepted pattern sampled by squared amplitude. Without the bath
/// the state never changes.
pub fn anneal_one_way(
    net: &Network,
    cfg: &EngineConfig,
    initial: Option<&Assignment>,
) -> (RelaxationTrace, EngineOutcome) {
    let n = net.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = RelaxationTrace::default();

    let mut current = match initial {
        Some(a) => {
            assert_eq!(a.bits.len(), n);
            a.clone()
        }
        None => random_link_consistent(net, &mut rng),
    };

    let solution_indices = solution_index_set(net);
    let gate_angle = gate_angle_for_step(cfg.sigma, cfg.dt);

    let record_row = |trace: &mut RelaxationTrace, step: usize, a: &Assignment| {
        let total = net.classical_energy(a);
        let gate = net.gate_energy(a);
        let overlap = match &solution_indices {
            Some(set) => {
                if set.contains(&a.to_index()) {
                    1.0
                } else {
                    0.0
                }
            }
            None => f64::NAN,
        };
        trace.push(TraceRow {
            step,
            time: step as f64 * cfg.dt,
            total_energy: total,
            gate_energy: gate,
            clamped: false,
            overlap_solution: overlap,
        });
    };

    record_row(&mut trace, 0, &current);

    for step in 1..=cfg.max_steps {
        if net.is_solution(&current) {
            debug_assert!(crate::hilbert::equilibrium_check(
                net,
                &StateVector::basis(&current),
                1e-12
            ));
            return (
                trace,
                EngineOutcome {
                    verdict: RunVerdict::Solved,
                    assignment: Some(current),
                    steps: step - 1,
                    final_energy: 0.0,
                },
            );
        }

        let link = &net.links[rng.random_range(0..net.links.len())];
        let mut flipped = current.clone();
        flipped.bits[link.a] = !flipped.bits[link.a];
        flipped.bits[link.b] = !flipped.bits[link.b];
        let gate_delta = net.gate_energy(&flipped) - net.gate_energy(&current);
        let delta_phi = if gate_delta < 0.0 { gate_angle } else { 0.0 };

        // The two-step evolution on the pair, through the state-vector
        // kernel; spectator qubits stay in their basis values, so the pair
        // subsystem carries the whole step.
        let pair_state = pair_local_state(&current, link.a, link.b);
        let (next_pair, _record) = if cfg.no_bath {
            let record = PairStepRecord { delta_phi, delta_theta: 0.0, delta_second: 0.0 };
            (
                pair_step_one_way_with_angles(&pair_state, 0, 1, record)
                    .expect("silent bath keeps the current pattern"),
                record,
            )
        } else {
            pair_step_one_way(&pair_state, 0, 1, delta_phi, &mut rng)
        };

        // Link re-relaxation: collapse onto one accepted pattern by
        // squared amplitude.
        let p_flip = next_pair
            .amplitude(pattern_index(!current.bits[link.a], !current.bits[link.b]))
            .norm_sqr();
        if rng.random::<f64>() < p_flip {
            current = flipped;
        }

        record_row(&mut trace, step, &current);
    }

    let final_energy = net.classical_energy(&current);
    (
        trace,
        EngineOutcome {
            verdict: RunVerdict::BudgetExhausted,
            assignment: None,
            steps: cfg.max_steps,
            final_energy,
        },
    )
}

/// Sample an assignment in which every link already holds an accepted
/// pattern.
pub fn random_link_consistent<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> Assignment {
    let mut bits = vec![false; net.num_nodes()];
    for link in &net.links {
        let a_value = rng.random::<bool>();
        bits[link.a] = a_value;
        bits[link.b] = !a_value;
    }
    Assignment::new(bits)
}

fn pair_local_state(a: &Assignment, node_a: usize, node_b: usize) -> StateVector {
    let pattern = pattern_index(a.bits[node_a], a.bits[node_b]);
    let mut amps = vec![Complex64::ZERO; 4];
    amps[pattern] = Complex64::ONE;
    StateVector::from_amplitudes(amps, 2).unwrap()
}

fn pattern_index(bit_a: bool, bit_b: bool) -> usize {
    (bit_a as usize) | ((bit_b as usize) << 1)
}

/// Solution basis indices when the net is small enough to enumerate.
pub(crate) fn solution_index_set(net: &Network) -> Option<std::collections::BTreeSet<usize>> {
    let n = net.num_nodes();
    if n > 20 {
        return None;
    }
    let mut set = std::collections::BTreeSet::new();
    for idx in 0..(1usize << n) {
        if net.is_solution(&Assignment::from_index(idx, n)) {
            set.insert(idx);
        }
    }
    Some(set)
}
