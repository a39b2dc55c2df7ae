//! Two-fermion representation of a single link.
//!
//! Each link hosts two labeled fermions; each carries a binary spin
//! attribute and a binary site attribute (site r or site s). The link
//! Hamiltonian is the sum of a site part that lifts double occupancy by
//! `energy_lambda` and a spin part that lifts parallel spins by
//! `energy_chi`. Both are diagonal in the product basis used here:
//!
//! index = spin1·8 + spin2·4 + site1·2 + site2, with site r = 0, s = 1.
//!
//! The qubit picture of [`crate::hilbert`] arises from this one through
//! the antisymmetrized (fermionic) embedding: the qubit basis state
//! |ab⟩ over (r, s) corresponds to (|a⟩₁|r⟩₁|b⟩₂|s⟩₂ − |b⟩₁|s⟩₁|a⟩₂|r⟩₂)/√2
//! with the relative phase fixed to zero.

use num_complex::Complex64;
use thiserror::Error;

use crate::hilbert::{StateVector, ANNIHILATION_TOL};

/// Dimension of the two-fermion space: 2 spins × 2 spins × 2 sites × 2 sites.
pub const DIM: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParticleError {
    /// Antisymmetrization removed every component.
    #[error("state has no antisymmetric component")]
    AnnihilatedState,
    /// The state is not expressible in the qubit picture: it has weight on
    /// doubly occupied sites, or it mixes symmetric and antisymmetric
    /// one-particle-per-site components whose qubit reading would be
    /// ambiguous.
    #[error("state is not mappable to the qubit representation")]
    NotMappable,
}

/// State of the two labeled fermions of one link: 16 complex amplitudes
/// over spin ⊗ site, plus the link's energy scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleLinkState {
    pub amps: [Complex64; DIM],
    pub energy_chi: f64,
    pub energy_lambda: f64,
}

fn idx(spin1: usize, spin2: usize, site1: usize, site2: usize) -> usize {
    spin1 * 8 + spin2 * 4 + site1 * 2 + site2
}

impl ParticleLinkState {
    pub fn zero(energy_chi: f64, energy_lambda: f64) -> Self {
        ParticleLinkState {
            amps: [Complex64::ZERO; DIM],
            energy_chi,
            energy_lambda,
        }
    }

    pub fn from_amplitudes(
        amps: [Complex64; DIM],
        energy_chi: f64,
        energy_lambda: f64,
    ) -> Option<Self> {
        let mut state = ParticleLinkState { amps, energy_chi, energy_lambda };
        let norm = state.norm();
        if norm < ANNIHILATION_TOL {
            return None;
        }
        state.scale(1.0 / norm);
        Some(state)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    pub fn inner(&self, other: &ParticleLinkState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &ParticleLinkState) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Diagonal of the site Hamiltonian: `energy_lambda` on doubly
    /// occupied sites.
    pub fn site_energy_diag(&self) -> [f64; 16] {
        let mut diag = [0.0; 16];
        for (i, d) in diag.iter_mut().enumerate() {
            let site1 = (i >> 1) & 1;
            let site2 = i & 1;
            if site1 == site2 {
                *d = self.energy_lambda;
            }
        }
        diag
    }

    /// Diagonal of the spin Hamiltonian: `energy_chi` on parallel spins.
    pub fn spin_energy_diag(&self) -> [f64; 16] {
        let mut diag = [0.0; 16];
        for (i, d) in diag.iter_mut().enumerate() {
            let spin1 = (i >> 3) & 1;
            let spin2 = (i >> 2) & 1;
            if spin1 == spin2 {
                *d = self.energy_chi;
            }
        }
        diag
    }

    /// ⟨L⟩: expectation of the full link Hamiltonian (site + spin parts).
    pub fn link_energy_expect(&self) -> f64 {
        let site = self.site_energy_diag();
        let spin = self.spin_energy_diag();
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (site[i] + spin[i]))
            .sum()
    }

    /// Exchange of the two particle labels (both attributes at once).
    pub fn swapped(&self) -> ParticleLinkState {
        let mut out = self.clone();
        for spin1 in 0..2 {
            for spin2 in 0..2 {
                for site1 in 0..2 {
                    for site2 in 0..2 {
                        out.amps[idx(spin2, spin1, site2, site1)] =
                            self.amps[idx(spin1, spin2, site1, site2)];
                    }
                }
            }
        }
        out
    }

    /// Residual norm outside the antisymmetric sector.
    pub fn symmetric_weight(&self) -> f64 {
        let swapped = self.swapped();
        self.amps
            .iter()
            .zip(&swapped.amps)
            .map(|(a, b)| ((a + b) / 2.0).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_antisymmetric(&self, tol: f64) -> bool {
        self.symmetric_weight() <= tol
    }
}

/// A₁₂ = (1 − P₁₂)/2 followed by renormalization: keep the antisymmetric
/// component of the state.
pub fn antisymmetrize_particles(
    p: &ParticleLinkState,
) -> Result<ParticleLinkState, ParticleError> {
    let swapped = p.swapped();
    let mut out = p.clone();
    for (a, b) in out.amps.iter_mut().zip(&swapped.amps) {
        *a = (*a - b) / 2.0;
    }
    let norm = out.norm();
    if norm < ANNIHILATION_TOL {
        return Err(ParticleError::AnnihilatedState);
    }
    out.scale(1.0 / norm);
    Ok(out)
}

/// The fermionic embedding of the qubit basis state |ab⟩ over (r, s).
fn fermionic_basis(a: usize, b: usize, e_chi: f64, e_lambda: f64) -> ParticleLinkState {
    let mut state = ParticleLinkState::zero(e_chi, e_lambda);
    let w = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    state.amps[idx(a, b, 0, 1)] = w;
    state.amps[idx(b, a, 1, 0)] = -w;
    state
}

/// The symmetric one-particle-per-site state reading |ab⟩ over (r, s);
/// for parallel spins these are the "bad" tensor products that violate
/// antisymmetry.
fn symmetric_basis(a: usize, b: usize, e_chi: f64, e_lambda: f64) -> ParticleLinkState {
    let mut state = ParticleLinkState::zero(e_chi, e_lambda);
    let w = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    state.amps[idx(a, b, 0, 1)] = w;
    state.amps[idx(b, a, 1, 0)] = w;
    state
}

/// The two degenerate antisymmetric ground states of the link
/// Hamiltonian: the spin singlet (minus) and the antiparallel triplet
/// (plus). Construction is verified internally: before the parallel-spin
/// lift the four antisymmetric one-per-site states are all at zero site
/// energy; the lift leaves exactly these two at zero total energy.
pub fn build_link_ground_basis(energy_chi: f64, energy_lambda: f64) -> [ParticleLinkState; 2] {
    assert!(energy_chi > 0.0 && energy_lambda > 0.0);
    let half = Complex64::new(0.5, 0.0);

    // (|01⟩ ∓ |10⟩)(|rs⟩ ± |sr⟩)/2 in spin ⊗ site components.
    let mut minus = ParticleLinkState::zero(energy_chi, energy_lambda);
    minus.amps[idx(0, 1, 0, 1)] = half;
    minus.amps[idx(0, 1, 1, 0)] = half;
    minus.amps[idx(1, 0, 0, 1)] = -half;
    minus.amps[idx(1, 0, 1, 0)] = -half;

    let mut plus = ParticleLinkState::zero(energy_chi, energy_lambda);
    plus.amps[idx(0, 1, 0, 1)] = half;
    plus.amps[idx(0, 1, 1, 0)] = -half;
    plus.amps[idx(1, 0, 0, 1)] = half;
    plus.amps[idx(1, 0, 1, 0)] = -half;

    // The four zero-eigenvalue states of the site Hamiltonian in the
    // antisymmetric sector, before the spin lift.
    let pre_lift = pre_lift_ground_states(energy_chi, energy_lambda);
    for state in &pre_lift {
        debug_assert!(state.is_antisymmetric(1e-12));
        debug_assert!(site_energy_of(state) < 1e-12);
    }
    debug_assert!(minus.link_energy_expect() < 1e-12);
    debug_assert!(plus.link_energy_expect() < 1e-12);

    [minus, plus]
}

fn site_energy_of(p: &ParticleLinkState) -> f64 {
    let site = p.site_energy_diag();
    p.amps
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * site[i])
        .sum()
}

/// The four antisymmetric states at zero site energy, prior to the
/// parallel-spin lift: |00⟩ and |11⟩ spins on the antisymmetric orbital,
/// the symmetric-spin/antisymmetric-orbital combination, and the
/// singlet-spin/symmetric-orbital combination.
pub fn pre_lift_ground_states(energy_chi: f64, energy_lambda: f64) -> [ParticleLinkState; 4] {
    let w = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    let half = Complex64::new(0.5, 0.0);

    let mut spin00 = ParticleLinkState::zero(energy_chi, energy_lambda);
    spin00.amps[idx(0, 0, 0, 1)] = w;
    spin00.amps[idx(0, 0, 1, 0)] = -w;

    let mut spin11 = ParticleLinkState::zero(energy_chi, energy_lambda);
    spin11.amps[idx(1, 1, 0, 1)] = w;
    spin11.amps[idx(1, 1, 1, 0)] = -w;

    let mut triplet = ParticleLinkState::zero(energy_chi, energy_lambda);
    triplet.amps[idx(0, 1, 0, 1)] = half;
    triplet.amps[idx(0, 1, 1, 0)] = -half;
    triplet.amps[idx(1, 0, 0, 1)] = half;
    triplet.amps[idx(1, 0, 1, 0)] = -half;

    let mut singlet = ParticleLinkState::zero(energy_chi, energy_lambda);
    singlet.amps[idx(0, 1, 0, 1)] = half;
    singlet.amps[idx(0, 1, 1, 0)] = half;
    singlet.amps[idx(1, 0, 0, 1)] = -half;
    singlet.amps[idx(1, 0, 1, 0)] = -half;

    [spin00, spin11, triplet, singlet]
}

/// Embed a two-qubit state over (r, s) as the corresponding fermionic
/// (antisymmetric) particle state.
pub fn embed_qubit_state(
    s: &StateVector,
    energy_chi: f64,
    energy_lambda: f64,
) -> ParticleLinkState {
    assert_eq!(s.num_qubits(), 2, "link embedding needs a two-qubit state");
    let mut out = ParticleLinkState::zero(energy_chi, energy_lambda);
    for a in 0..2 {
        for b in 0..2 {
            // hilbert convention: bit 0 of the index is node r.
            let amp = s.amplitude(a | (b << 1));
            if amp == Complex64::ZERO {
                continue;
            }
            let basis = fermionic_basis(a, b, energy_chi, energy_lambda);
            for (dst, src) in out.amps.iter_mut().zip(&basis.amps) {
                *dst += amp * src;
            }
        }
    }
    out
}

/// Map a particle state to its two-qubit picture over (r, s).
///
/// States in the antisymmetric one-particle-per-site span map through the
/// fermionic correspondence (the ground doublet goes to the antiparallel
/// patterns, the lifted antisymmetric states go to |00⟩ and |11⟩). States
/// that are purely symmetric still read as the pattern of their site
/// occupations — the "bad" parallel tensor products read |00⟩ / |11⟩ —
/// because the qubit notation cannot tell the two apart. Anything with
/// weight on doubly occupied sites, or an ambiguous mixture of both
/// symmetry sectors, is not mappable.
pub fn map_particle_to_qubit(p: &ParticleLinkState) -> Result<StateVector, ParticleError> {
    // Reject double occupancy outright.
    let double_weight: f64 = p
        .amps
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let site1 = (i >> 1) & 1;
            let site2 = *i & 1;
            site1 == site2
        })
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if double_weight > 1e-20 {
        return Err(ParticleError::NotMappable);
    }

    let mut fermionic = [Complex64::ZERO; 4];
    let mut symmetric = [Complex64::ZERO; 4];
    for a in 0..2 {
        for b in 0..2 {
            let qubit_index = a | (b << 1);
            let fb = fermionic_basis(a, b, p.energy_chi, p.energy_lambda);
            let sb = symmetric_basis(a, b, p.energy_chi, p.energy_lambda);
            fermionic[qubit_index] = fb.inner(p);
            symmetric[qubit_index] = sb.inner(p);
        }
    }
    let fermionic_norm: f64 = fermionic.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let symmetric_norm: f64 = symmetric.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

    let amps = if symmetric_norm <= 1e-10 {
        fermionic
    } else if fermionic_norm <= 1e-10 {
        symmetric
    } else {
        return Err(ParticleError::NotMappable);
    };
    StateVector::from_amplitudes(amps.to_vec(), 2).ok_or(ParticleError::NotMappable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ground_doublet_has_zero_energy_under_both_hamiltonians() {
        let [minus, plus] = build_link_ground_basis(8.0, 8.0);
        for state in [&minus, &plus] {
            assert!(state.link_energy_expect() < 1e-14);
            assert!(site_energy_of(state) < 1e-14);
            assert!(state.is_antisymmetric(1e-14));
        }
        assert!(minus.inner(&plus).norm() < 1e-14);
    }

    #[test]
    fn singlet_matches_its_displayed_form() {
        // ψ₋ = ½(|0⟩₁|1⟩₂ − |1⟩₁|0⟩₂)(|r⟩₁|s⟩₂ + |s⟩₁|r⟩₂)
        let [minus, _] = build_link_ground_basis(8.0, 8.0);
        assert!((minus.amps[idx(0, 1, 0, 1)] - c(0.5)).norm() < 1e-15);
        assert!((minus.amps[idx(0, 1, 1, 0)] - c(0.5)).norm() < 1e-15);
        assert!((minus.amps[idx(1, 0, 0, 1)] + c(0.5)).norm() < 1e-15);
        assert!((minus.amps[idx(1, 0, 1, 0)] + c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn parallel_spin_triplet_costs_chi() {
        // The lifted antisymmetric |00⟩-spin state sits at E^χ exactly.
        let [spin00, spin11, triplet, singlet] = pre_lift_ground_states(8.0, 8.0);
        assert!((spin00.link_energy_expect() - 8.0).abs() < 1e-12);
        assert!((spin11.link_energy_expect() - 8.0).abs() < 1e-12);
        assert!(triplet.link_energy_expect() < 1e-12);
        assert!(singlet.link_energy_expect() < 1e-12);
    }

    #[test]
    fn ground_doublet_maps_to_antiparallel_superpositions() {
        let [minus, plus] = build_link_ground_basis(8.0, 8.0);
        let r = 1.0 / 2f64.sqrt();
        let q_minus = map_particle_to_qubit(&minus).unwrap();
        let expect_minus = StateVector::two_qubit(c(0.0), c(r), c(-r), c(0.0));
        assert!(q_minus.approx_eq(&expect_minus, 1e-12));
        let q_plus = map_particle_to_qubit(&plus).unwrap();
        let expect_plus = StateVector::two_qubit(c(0.0), c(r), c(r), c(0.0));
        assert!(q_plus.approx_eq(&expect_plus, 1e-12));
    }

    #[test]
    fn bad_symmetric_product_reads_parallel_pattern() {
        let bad = symmetric_basis(0, 0, 8.0, 8.0);
        let q = map_particle_to_qubit(&bad).unwrap();
        let expected = StateVector::two_qubit(c(1.0), c(0.0), c(0.0), c(0.0));
        assert!(q.approx_eq(&expected, 1e-12));
        // It is not an antisymmetric state: A₁₂ annihilates it.
        assert_eq!(
            antisymmetrize_particles(&bad),
            Err(ParticleError::AnnihilatedState)
        );
    }

    #[test]
    fn map_is_linear_on_the_fermionic_span() {
        let alpha = Complex64::new(0.6, 0.1);
        let beta = Complex64::new(0.2, -0.76);
        let psi_prime = fermionic_basis(0, 1, 8.0, 8.0);
        let psi_second = fermionic_basis(1, 0, 8.0, 8.0);
        let mut combo = ParticleLinkState::zero(8.0, 8.0);
        for i in 0..DIM {
            combo.amps[i] = alpha * psi_prime.amps[i] + beta * psi_second.amps[i];
        }
        let q = map_particle_to_qubit(&combo).unwrap();
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        assert!((q.amplitude_of("01") - alpha / norm).norm() < 1e-12);
        assert!((q.amplitude_of("10") - beta / norm).norm() < 1e-12);
    }

    #[test]
    fn embedding_then_mapping_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let amps: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let q = match StateVector::from_amplitudes(amps, 2) {
                Some(q) => q,
                None => continue,
            };
            let p = embed_qubit_state(&q, 8.0, 8.0);
            let back = map_particle_to_qubit(&p).unwrap();
            assert!(back.approx_eq(&q, 1e-12));
        }
    }

    #[test]
    fn doubly_occupied_states_are_not_mappable() {
        let mut p = ParticleLinkState::zero(8.0, 8.0);
        p.amps[idx(0, 1, 0, 0)] = c(1.0);
        assert_eq!(map_particle_to_qubit(&p), Err(ParticleError::NotMappable));
    }

    #[test]
    fn antisymmetrization_fixes_the_singlet() {
        let [minus, _] = build_link_ground_basis(8.0, 8.0);
        let out = antisymmetrize_particles(&minus).unwrap();
        assert!(out.distance(&minus) < 1e-14);
        assert!(out.link_energy_expect() < 1e-14);
    }

    #[test]
    fn equivalence_of_link_projection_and_particle_conditions() {
        // On the fermionic span: (A₁₂ fixed and ⟨L⟩ = 0) iff the qubit
        // image is fixed by the link pattern projector.
        let link = crate::network::Link::new(0, 1);
        let spec = crate::hilbert::ProjectorSpec::link(&link);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut fixed_points = 0;
        for _ in 0..100 {
            // Random state in the antisymmetric one-per-site span,
            // occasionally restricted to the ground doublet.
            let restrict = rng.random::<f64>() < 0.5;
            let coeffs: Vec<Complex64> = (0..4)
                .map(|i| {
                    if restrict && i >= 2 {
                        Complex64::ZERO
                    } else {
                        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                    }
                })
                .collect();
            let basis = [
                fermionic_basis(0, 1, 8.0, 8.0),
                fermionic_basis(1, 0, 8.0, 8.0),
                fermionic_basis(0, 0, 8.0, 8.0),
                fermionic_basis(1, 1, 8.0, 8.0),
            ];
            let mut amps = [Complex64::ZERO; DIM];
            for (coeff, b) in coeffs.iter().zip(&basis) {
                for i in 0..DIM {
                    amps[i] += coeff * b.amps[i];
                }
            }
            let p = match ParticleLinkState::from_amplitudes(amps, 8.0, 8.0) {
                Some(p) => p,
                None => continue,
            };

            let a12_fixed = antisymmetrize_particles(&p)
                .map(|q| q.distance(&p) <= 1e-10)
                .unwrap_or(false);
            let zero_energy = p.link_energy_expect().abs() <= 1e-10;
            let lhs = a12_fixed && zero_energy;

            let q = map_particle_to_qubit(&p).unwrap();
            let rhs = crate::hilbert::apply_projector(&spec, &q)
                .map(|out| out.distance(&q) <= 1e-10)
                .unwrap_or(false);

            assert_eq!(lhs, rhs);
            if lhs {
                fixed_points += 1;
            }
        }
        // The restricted half of the grid consists of fixed points.
        assert!(fixed_points >= 30);
    }
}
