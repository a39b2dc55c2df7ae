//! Dense state-vector kernel over the qubit basis of network nodes.
//!
//! Basis convention: bit `i` of a basis index holds the Boolean value of
//! the node with index `i`, so `Assignment::from_index` and the amplitudes
//! here agree. All projectors in this module are pattern projectors,
//! diagonal in the computational basis: a link projector accepts exactly
//! the antiparallel patterns of its pair, a gate projector accepts the
//! satisfying rows of its truth table. The double-occupancy and excited
//! antiparallel states of the particle picture never enter the node-qubit
//! space; they live in [`crate::particle`].

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::network::{Assignment, BoundaryConstraint, Gate, Link, Network};

/// Norm tolerance for state invariants.
pub const NORM_TOL: f64 = 1e-12;
/// Below this projected norm a projection is reported as annihilation.
pub const ANNIHILATION_TOL: f64 = 1e-14;
/// Hermiticity / positive-semidefiniteness tolerance for densities.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HilbertError {
    /// The projected state has (numerically) no component left in the
    /// accepted subspace.
    #[error("projection annihilated the state")]
    AnnihilatedState,
    #[error("projector support references qubit {0} outside the state")]
    SupportOutOfRange(usize),
}

/// A normalized complex amplitude vector over the 2^N node-qubit basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// The basis state for one assignment.
    pub fn basis(a: &Assignment) -> Self {
        let n = a.bits.len();
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[a.to_index()] = Complex64::ONE;
        StateVector { amps, num_qubits: n }
    }

    /// Uniform superposition over all 2^N basis states.
    pub fn uniform(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        StateVector { amps: vec![amp; dim], num_qubits }
    }

    /// Build from raw amplitudes, normalizing. `None` if the norm is
    /// numerically zero.
    pub fn from_amplitudes(amps: Vec<Complex64>, num_qubits: usize) -> Option<Self> {
        assert_eq!(amps.len(), 1 << num_qubits, "amplitude length mismatch");
        let mut s = StateVector { amps, num_qubits };
        let norm = s.norm();
        if norm < ANNIHILATION_TOL {
            return None;
        }
        s.scale(1.0 / norm);
        Some(s)
    }

    /// Two-qubit helper: a00|00> + a01|01> + a10|10> + a11|11> with the
    /// bitstring reading "node0 node1".
    pub fn two_qubit(a00: Complex64, a01: Complex64, a10: Complex64, a11: Complex64) -> Self {
        // "01" = node0=0, node1=1 lives at index 0b10.
        StateVector { amps: vec![a00, a10, a01, a11], num_qubits: 2 }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Mutable amplitude access for in-place transforms. Callers own the
    /// norm invariant; transient pre-normalization values are expected.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    /// Amplitude of the basis state written as a bitstring (node 0 first).
    pub fn amplitude_of(&self, bitstring: &str) -> Complex64 {
        let a = Assignment::from_bitstring(bitstring).expect("binary string");
        self.amps[a.to_index()]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            self.scale(1.0 / norm);
        }
        self
    }

    /// 〈self|other〉 with the physics convention (self conjugated).
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Euclidean distance ‖self − other‖.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Expected value of a diagonal operator given entrywise.
    pub fn diagonal_expectation(&self, diag: &[f64]) -> f64 {
        self.amps
            .iter()
            .zip(diag)
            .map(|(a, &e)| a.norm_sqr() * e)
            .sum()
    }

    /// Total probability carried by the given basis indices.
    pub fn probability_of(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.amps[i].norm_sqr()).sum()
    }

    /// Sample a basis index by the Born rule.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut target: f64 = rng.random();
        for (i, a) in self.amps.iter().enumerate() {
            target -= a.norm_sqr();
            if target <= 0.0 {
                return i;
            }
        }
        self.amps.len() - 1
    }

    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

/// Which element a projector enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    /// Link antisymmetry: accepts exactly the antiparallel patterns.
    LinkAntisymmetry,
    /// Gate (or boundary-constraint) ground space.
    GateGround,
}

/// A pattern projector: zeroes every basis state whose support-local
/// pattern is not in `accepted`. Pattern bit `j` is the value of
/// `support[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSpec {
    pub kind: ProjectorKind,
    pub support: Vec<usize>,
    pub accepted: Vec<u32>,
}

impl ProjectorSpec {
    pub fn link(link: &Link) -> Self {
        ProjectorSpec {
            kind: ProjectorKind::LinkAntisymmetry,
            support: vec![link.a, link.b],
            accepted: vec![0b01, 0b10],
        }
    }

    pub fn gate(gate: &Gate) -> Self {
        ProjectorSpec {
            kind: ProjectorKind::GateGround,
            support: gate.support.clone(),
            accepted: gate.satisfying_rows.iter().copied().collect(),
        }
    }

    pub fn constraint(c: &BoundaryConstraint) -> Self {
        ProjectorSpec {
            kind: ProjectorKind::GateGround,
            support: vec![c.node],
            accepted: vec![c.value as u32],
        }
    }

    pub fn local_pattern(&self, basis_index: usize) -> u32 {
        self.support
            .iter()
            .enumerate()
            .fold(0, |p, (j, &q)| p | ((((basis_index >> q) & 1) as u32) << j))
    }

    pub fn accepts(&self, basis_index: usize) -> bool {
        self.accepted.contains(&self.local_pattern(basis_index))
    }
}

fn check_support(p: &ProjectorSpec, s: &StateVector) -> Result<(), HilbertError> {
    for &q in &p.support {
        if q >= s.num_qubits() {
            return Err(HilbertError::SupportOutOfRange(q));
        }
    }
    Ok(())
}

/// Apply one pattern projector followed by renormalization.
pub fn apply_projector(p: &ProjectorSpec, s: &StateVector) -> Result<StateVector, HilbertError> {
    check_support(p, s)?;
    let mut out = s.clone();
    project_in_place(p, &mut out)?;
    let norm = out.norm();
    if norm < ANNIHILATION_TOL {
        return Err(HilbertError::AnnihilatedState);
    }
    out.scale(1.0 / norm);
    Ok(out)
}

/// Zero the rejected amplitudes without renormalizing.
fn project_in_place(p: &ProjectorSpec, s: &mut StateVector) -> Result<(), HilbertError> {
    check_support(p, s)?;
    // Small-support fast path: precompute the accepted lookup.
    let width = p.support.len();
    if width <= 16 {
        let mut table = vec![false; 1 << width];
        for &pat in &p.accepted {
            if (pat as usize) < table.len() {
                table[pat as usize] = true;
            }
        }
        for (i, a) in s.amps.iter_mut().enumerate() {
            if !table[p.local_pattern(i) as usize] {
                *a = Complex64::ZERO;
            }
        }
    } else {
        for (i, a) in s.amps.iter_mut().enumerate() {
            if !p.accepts(i) {
                *a = Complex64::ZERO;
            }
        }
    }
    Ok(())
}

/// Ã: the product of all link projectors, with one renormalization at the
/// end. Annihilation certifies that no link-consistent component exists.
pub fn apply_all_links(net: &Network, s: &StateVector) -> Result<StateVector, HilbertError> {
    apply_product(net.links.iter().map(ProjectorSpec::link), s)
}

/// P: the product of all gate and constraint projectors, with one
/// renormalization at the end. Annihilation certifies that no
/// gate-consistent component exists.
pub fn apply_all_gates(net: &Network, s: &StateVector) -> Result<StateVector, HilbertError> {
    let specs = net
        .gates
        .iter()
        .map(ProjectorSpec::gate)
        .chain(net.constraints.iter().map(ProjectorSpec::constraint));
    apply_product(specs, s)
}

fn apply_product(
    specs: impl Iterator<Item = ProjectorSpec>,
    s: &StateVector,
) -> Result<StateVector, HilbertError> {
    let mut out = s.clone();
    for spec in specs {
        project_in_place(&spec, &mut out)?;
    }
    let norm = out.norm();
    if norm < ANNIHILATION_TOL {
        return Err(HilbertError::AnnihilatedState);
    }
    out.scale(1.0 / norm);
    Ok(out)
}

/// Equilibrium predicate: true iff ‖ÃP s − s‖ ≤ tol, with ÃP applied as a
/// raw (un-renormalized) projector product.
pub fn equilibrium_check(net: &Network, s: &StateVector, tol: f64) -> bool {
    let mut projected = s.clone();
    let specs = net
        .gates
        .iter()
        .map(ProjectorSpec::gate)
        .chain(net.constraints.iter().map(ProjectorSpec::constraint))
        .chain(net.links.iter().map(ProjectorSpec::link));
    for spec in specs {
        if project_in_place(&spec, &mut projected).is_err() {
            return false;
        }
    }
    projected.distance(s) <= tol
}

/// A 2×2 one-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDensity {
    pub m: [[Complex64; 2]; 2],
}

impl ReducedDensity {
    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    /// (population of |0>, population of |1>).
    pub fn diagonal(&self) -> (f64, f64) {
        (self.m[0][0].re, self.m[1][1].re)
    }

    pub fn off_diagonal_magnitude(&self) -> f64 {
        self.m[0][1].norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.m[0][1] - self.m[1][0].conj()).norm() <= tol
            && self.m[0][0].im.abs() <= tol
            && self.m[1][1].im.abs() <= tol
    }

    /// Positive semidefinite within tol: nonnegative diagonal and
    /// determinant (2×2 case).
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let det = (self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]).re;
        self.m[0][0].re >= -tol && self.m[1][1].re >= -tol && det >= -tol
    }
}

/// Standard partial trace down to one qubit.
pub fn partial_trace(s: &StateVector, node: usize) -> ReducedDensity {
    assert!(node < s.num_qubits(), "node out of range");
    let mask = 1usize << node;
    let mut m = [[Complex64::ZERO; 2]; 2];
    for (idx, amp) in s.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let bit = (idx >> node) & 1;
        // Diagonal element.
        m[bit][bit] += amp * amp.conj();
        // Off-diagonal pairs with the same environment.
        if bit == 0 {
            let partner = s.amplitudes()[idx | mask];
            m[0][1] += amp * partner.conj();
            m[1][0] += partner * amp.conj();
        }
    }
    ReducedDensity { m }
}

/// A small dense density matrix for random-phase averages of arbitrary
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i).re).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    max = max.max(self.entry(i, j).norm());
                }
            }
        }
        max
    }

    /// View as a one-qubit density; panics unless dim = 2.
    pub fn as_reduced(&self) -> ReducedDensity {
        assert_eq!(self.dim, 2);
        ReducedDensity {
            m: [
                [self.entry(0, 0), self.entry(0, 1)],
                [self.entry(1, 0), self.entry(1, 1)],
            ],
        }
    }
}

/// Monte Carlo mean of |ψ(δ)⟩⟨ψ(δ)| with δ uniform on [0, 2π).
///
/// The off-diagonal magnitude of the result decays as O(M^{-1/2});
/// diagonal entries that do not depend on δ are reproduced exactly.
pub fn random_phase_average<F, R>(family: F, samples: usize, rng: &mut R) -> DensityMatrix
where
    F: Fn(f64) -> StateVector,
    R: Rng + ?Sized,
{
    assert!(samples >= 1, "need at least one sample");
    let probe = family(0.0);
    let dim = probe.dim();
    let mut data = vec![Complex64::ZERO; dim * dim];
    for _ in 0..samples {
        let delta = rng.random::<f64>() * std::f64::consts::TAU;
        let state = family(delta);
        debug_assert_eq!(state.dim(), dim);
        for i in 0..dim {
            let ai = state.amplitude(i);
            if ai == Complex64::ZERO {
                continue;
            }
            for j in 0..dim {
                data[i * dim + j] += ai * state.amplitude(j).conj();
            }
        }
    }
    let weight = 1.0 / samples as f64;
    for entry in &mut data {
        *entry *= weight;
    }
    DensityMatrix { dim, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::single_link_net;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn link_projector() -> ProjectorSpec {
        ProjectorSpec::link(&crate::network::Link::new(0, 1))
    }

    #[test]
    fn antiparallel_pattern_is_fixed() {
        let s = StateVector::two_qubit(c(0.0), c(1.0), c(0.0), c(0.0));
        let out = apply_projector(&link_projector(), &s).unwrap();
        assert!(out.approx_eq(&s, 1e-15));
    }

    #[test]
    fn parallel_pattern_is_annihilated() {
        let s = StateVector::two_qubit(c(0.0), c(0.0), c(0.0), c(1.0));
        assert_eq!(
            apply_projector(&link_projector(), &s),
            Err(HilbertError::AnnihilatedState)
        );
    }

    #[test]
    fn mixed_state_is_projected_and_renormalized() {
        let r = 1.0 / 2f64.sqrt();
        let s = StateVector::two_qubit(c(0.0), c(r), c(0.0), c(r));
        let out = apply_projector(&link_projector(), &s).unwrap();
        let expected = StateVector::two_qubit(c(0.0), c(1.0), c(0.0), c(0.0));
        assert!(out.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn uniform_superposition_projects_to_link_ground() {
        let net = single_link_net(None, None);
        let out = apply_all_links(&net, &StateVector::uniform(2)).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let expected = StateVector::two_qubit(c(0.0), c(r), c(r), c(0.0));
        assert!(out.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn projector_products_commute_on_random_states() {
        let net = single_link_net(Some(true), Some(false));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let amps: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let s = match StateVector::from_amplitudes(amps, 2) {
                Some(s) => s,
                None => continue,
            };
            let ap = apply_all_links(&net, &s).and_then(|t| apply_all_gates(&net, &t));
            let pa = apply_all_gates(&net, &s).and_then(|t| apply_all_links(&net, &t));
            match (ap, pa) {
                (Ok(x), Ok(y)) => assert!(x.approx_eq(&y, 1e-12)),
                (Err(a), Err(b)) => assert_eq!(a, b),
                other => panic!("order changed the outcome: {other:?}"),
            }
        }
    }

    #[test]
    fn solution_state_is_equilibrium_fixed_point() {
        let net = single_link_net(Some(true), Some(false));
        let s = StateVector::basis(&Assignment::from_bitstring("10").unwrap());
        let gated = apply_all_gates(&net, &s).unwrap();
        let wired = apply_all_links(&net, &gated).unwrap();
        assert!(wired.approx_eq(&s, 1e-15));
        assert!(equilibrium_check(&net, &s, 1e-12));
    }

    #[test]
    fn non_solution_fails_equilibrium() {
        let net = single_link_net(Some(true), Some(false));
        let s = StateVector::basis(&Assignment::from_bitstring("01").unwrap());
        assert!(!equilibrium_check(&net, &s, 1e-12));
    }

    #[test]
    fn link_ground_superposition_is_equilibrium_of_gate_free_net() {
        let net = single_link_net(None, None);
        let r = 1.0 / 2f64.sqrt();
        let s = StateVector::two_qubit(c(0.0), c(r), c(r), c(0.0));
        assert!(equilibrium_check(&net, &s, 1e-12));
    }

    #[test]
    fn partial_trace_of_basis_state() {
        let s = StateVector::two_qubit(c(0.0), c(1.0), c(0.0), c(0.0));
        let rho = partial_trace(&s, 0);
        assert!((rho.diagonal().0 - 1.0).abs() < 1e-15);
        assert!(rho.diagonal().1.abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_balanced_superposition() {
        let r = 1.0 / 2f64.sqrt();
        let s = StateVector::two_qubit(c(0.0), c(r), c(r), c(0.0));
        let rho = partial_trace(&s, 0);
        assert!((rho.diagonal().0 - 0.5).abs() < 1e-12);
        assert!((rho.diagonal().1 - 0.5).abs() < 1e-12);
        // Entangled pair: no coherence on a single qubit.
        assert!(rho.off_diagonal_magnitude() < 1e-12);
        assert!(rho.is_hermitian(1e-12));
        assert!(rho.is_positive_semidefinite(1e-10));
    }

    #[test]
    fn partial_trace_matches_rotated_density_family() {
        // State (ξ'-style): cos(θ+φ)|01> + sin(θ+φ)|10>, reduced on r.
        for (theta, phi) in [(0.0, 0.3), (0.4, 0.7), (0.2, 1.2)] {
            let angle: f64 = theta + phi;
            let s = StateVector::two_qubit(
                c(0.0),
                c(angle.cos()),
                c(angle.sin()),
                c(0.0),
            );
            let rho = partial_trace(&s, 0);
            assert!((rho.diagonal().0 - angle.cos().powi(2)).abs() < 1e-12);
            assert!((rho.diagonal().1 - angle.sin().powi(2)).abs() < 1e-12);
        }
    }

    /// The single-qubit relaxation family: cos Δφ |1> + e^{iδ} sin Δφ |0>.
    fn relax_family(delta_phi: f64) -> impl Fn(f64) -> StateVector {
        move |delta: f64| {
            let phase = Complex64::from_polar(1.0, delta);
            let amps = vec![phase * delta_phi.sin(), c(delta_phi.cos())];
            StateVector { amps, num_qubits: 1 }
        }
    }

    #[test]
    fn random_phase_average_removes_coherence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let delta_phi = std::f64::consts::PI / 6.0;
        let rho = random_phase_average(relax_family(delta_phi), 100_000, &mut rng);
        let diag = rho.diagonal();
        // Populations: sin²(π/6) = 0.25 on |0>, cos²(π/6) = 0.75 on |1>.
        assert!((diag[0] - 0.25).abs() < 0.01);
        assert!((diag[1] - 0.75).abs() < 0.01);
        assert!(rho.max_off_diagonal() < 5.0 / (100_000f64).sqrt());
    }

    #[test]
    fn zero_rotation_gives_exact_pure_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_phase_average(relax_family(0.0), 1000, &mut rng);
        assert!((rho.entry(1, 1).re - 1.0).abs() < 1e-15);
        assert!(rho.entry(0, 0).norm() < 1e-15);
        assert!(rho.max_off_diagonal() < 1e-15);
    }

    #[test]
    fn single_sample_is_a_pure_state_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_phase_average(relax_family(0.7), 1, &mut rng);
        // Purity tr(ρ²) = 1 for a single sample.
        let mut purity = Complex64::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                purity += rho.entry(i, j) * rho.entry(j, i);
            }
        }
        assert!((purity.re - 1.0).abs() < 1e-12);
    }

    fn arb_state(num_qubits: usize) -> impl Strategy<Value = StateVector> {
        proptest::collection::vec(
            (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im)),
            1 << num_qubits,
        )
        .prop_filter_map("norm too small", move |amps| {
            StateVector::from_amplitudes(amps, num_qubits)
        })
    }

    fn arb_projector(num_qubits: usize) -> impl Strategy<Value = ProjectorSpec> {
        let support = proptest::sample::subsequence(
            (0..num_qubits).collect::<Vec<_>>(),
            1..=num_qubits.min(3),
        );
        support.prop_flat_map(|support| {
            let width = support.len();
            let accepted =
                proptest::collection::btree_set(0u32..(1 << width) as u32, 1..(1usize << width));
            accepted.prop_map(move |acc| ProjectorSpec {
                kind: ProjectorKind::GateGround,
                support: support.clone(),
                accepted: acc.into_iter().collect(),
            })
        })
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(
            s in arb_state(3),
            p in arb_projector(3),
        ) {
            if let Ok(once) = apply_projector(&p, &s) {
                let twice = apply_projector(&p, &once).unwrap();
                prop_assert!(twice.approx_eq(&once, 1e-12));
            }
        }

        #[test]
        fn disjoint_projectors_commute(
            s in arb_state(4),
            acc_a in proptest::collection::btree_set(0u32..4, 1..4),
            acc_b in proptest::collection::btree_set(0u32..4, 1..4),
        ) {
            let pa = ProjectorSpec {
                kind: ProjectorKind::GateGround,
                support: vec![0, 1],
                accepted: acc_a.into_iter().collect(),
            };
            let pb = ProjectorSpec {
                kind: ProjectorKind::GateGround,
                support: vec![2, 3],
                accepted: acc_b.into_iter().collect(),
            };
            let ab = apply_projector(&pa, &s).and_then(|t| apply_projector(&pb, &t));
            let ba = apply_projector(&pb, &s).and_then(|t| apply_projector(&pa, &t));
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert!(x.approx_eq(&y, 1e-12)),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "order changed the outcome: {other:?}"),
            }
        }

        #[test]
        fn pattern_projectors_commute_pairwise(
            s in arb_state(3),
            pa in arb_projector(3),
            pb in arb_projector(3),
        ) {
            let ab = apply_projector(&pa, &s).and_then(|t| apply_projector(&pb, &t));
            let ba = apply_projector(&pb, &s).and_then(|t| apply_projector(&pa, &t));
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert!(x.approx_eq(&y, 1e-12)),
                (Err(_), Err(_)) => {}
                // Diagonal projectors: annihilation order is immaterial, a
                // state killed one way is killed the other way too.
                other => prop_assert!(false, "order changed the outcome: {other:?}"),
            }
        }
    }
}
