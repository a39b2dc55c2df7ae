//! Reversible Boolean networks: interlinked node pairs, truth-table gates,
//! boundary constraints, and the classical energy landscape over assignments.
//!
//! Every wire carries a NOT relation between its two endpoints, so nodes
//! always come in interlinked pairs; an identity wire has to be compiled as
//! two links in series through an auxiliary pair. Gates are stored by their
//! satisfying rows, which lets reversible gates and irreversible clause
//! gadgets share one representation.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Default energy gap for unsatisfied gates and boundary constraints.
pub const DEFAULT_DELTA_E: f64 = 1.0;
/// Default parallel-spin lift of a link. Keeps the small-gate regime
/// (gate gaps well below the link scale) with the default gate gap.
pub const DEFAULT_E_CHI: f64 = 8.0;
/// Default double-occupancy lift of a link.
pub const DEFAULT_E_LAMBDA: f64 = 8.0;

/// A network node, i.e. one qubit of the simulated lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// Symbolic label, unique within a network.
    pub id: String,
    /// 0-based qubit position; contiguous across the network.
    pub index: usize,
}

/// A wire between two nodes. The endpoints are constrained to opposite
/// Boolean values; violating the relation costs `energy_chi` classically.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub energy_chi: f64,
    pub energy_lambda: f64,
}

impl Link {
    pub fn new(a: usize, b: usize) -> Self {
        Link {
            a,
            b,
            energy_chi: DEFAULT_E_CHI,
            energy_lambda: DEFAULT_E_LAMBDA,
        }
    }
}

/// A gate over an ordered support of nodes, defined by its set of
/// satisfying rows. A row is encoded as a `u32` whose bit `j` holds the
/// value of `support[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub support: Vec<usize>,
    pub satisfying_rows: BTreeSet<u32>,
    pub delta_e: f64,
}

impl Gate {
    pub fn new(name: impl Into<String>, support: Vec<usize>, rows: BTreeSet<u32>) -> Self {
        Gate {
            name: name.into(),
            support,
            satisfying_rows: rows,
            delta_e: DEFAULT_DELTA_E,
        }
    }

    /// Local row of an assignment restricted to this gate's support.
    pub fn local_row(&self, bits: &[bool]) -> u32 {
        self.support
            .iter()
            .enumerate()
            .fold(0, |row, (j, &node)| row | ((bits[node] as u32) << j))
    }

    pub fn is_satisfied(&self, bits: &[bool]) -> bool {
        self.satisfying_rows.contains(&self.local_row(bits))
    }
}

/// A one-qubit gate fixing a boundary node to a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConstraint {
    pub node: usize,
    pub value: bool,
    pub delta_e: f64,
}

impl BoundaryConstraint {
    pub fn new(node: usize, value: bool) -> Self {
        BoundaryConstraint {
            node,
            value,
            delta_e: DEFAULT_DELTA_E,
        }
    }
}

/// A reversible Boolean network: nodes partitioned into interlinked pairs,
/// plus gates and boundary constraints over those nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub gates: Vec<Gate>,
    pub constraints: Vec<BoundaryConstraint>,
}

/// A full Boolean assignment, one bit per node in index order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    /// Assignment corresponding to a computational-basis index, where bit
    /// `i` of the index holds the value of node `i`.
    pub fn from_index(index: usize, num_nodes: usize) -> Self {
        let bits = (0..num_nodes).map(|i| (index >> i) & 1 == 1).collect();
        Assignment { bits }
    }

    /// Basis index of this assignment (inverse of [`Assignment::from_index`]).
    pub fn to_index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    /// Bitstring with node 0 leftmost, e.g. "10" for node0=1, node1=0.
    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Parse a bitstring in node order. Returns `None` on non-binary input.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()?;
        Some(Assignment { bits })
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// One structural violation found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    DuplicateNodeId(String),
    NonContiguousIndex { id: String, index: usize },
    SelfLink { node: String },
    NodeNotLinked { node: String },
    NodeMultiplyLinked { node: String },
    LinkNodeOutOfRange { index: usize },
    GateNodeOutOfRange { gate: String, index: usize },
    GateDuplicateSupport { gate: String },
    GateNoRows { gate: String },
    GateRowOutOfRange { gate: String, row: u32 },
    ConstraintNodeOutOfRange { index: usize },
    DuplicateConstraint { node: String },
    NonPositiveEnergy { what: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::DuplicateNodeId(id) => write!(f, "duplicate node id '{id}'"),
            ValidationIssue::NonContiguousIndex { id, index } => {
                write!(f, "node '{id}' has non-contiguous index {index}")
            }
            ValidationIssue::SelfLink { node } => write!(f, "link joins node '{node}' to itself"),
            ValidationIssue::NodeNotLinked { node } => {
                write!(f, "node '{node}' not in any link")
            }
            ValidationIssue::NodeMultiplyLinked { node } => {
                write!(f, "node '{node}' belongs to more than one link")
            }
            ValidationIssue::LinkNodeOutOfRange { index } => {
                write!(f, "link references node index {index} out of range")
            }
            ValidationIssue::GateNodeOutOfRange { gate, index } => {
                write!(f, "gate '{gate}' references node index {index} out of range")
            }
            ValidationIssue::GateDuplicateSupport { gate } => {
                write!(f, "gate '{gate}' repeats a support node")
            }
            ValidationIssue::GateNoRows { gate } => {
                write!(f, "gate '{gate}' has no satisfying rows")
            }
            ValidationIssue::GateRowOutOfRange { gate, row } => {
                write!(f, "gate '{gate}' row {row:#b} exceeds support width (row length mismatch)")
            }
            ValidationIssue::ConstraintNodeOutOfRange { index } => {
                write!(f, "constraint references node index {index} out of range")
            }
            ValidationIssue::DuplicateConstraint { node } => {
                write!(f, "node '{node}' is constrained more than once")
            }
            ValidationIssue::NonPositiveEnergy { what } => {
                write!(f, "{what} must be positive")
            }
        }
    }
}

/// Outcome of structural validation; empty means the network is valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            f.write_str("valid")
        } else {
            for (i, issue) in self.issues.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{issue}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("network with {0} nodes exceeds the brute-force limit of {MAX_ENUMERATION_NODES}")]
    TooLarge(usize),
}

/// Brute-force enumeration is capped here; 2^24 assignments is the most a
/// desk-scale oracle should ever grind through.
pub const MAX_ENUMERATION_NODES: usize = 24;

impl Network {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.index)
    }

    /// Structural validation: link partition, support sanity, row widths,
    /// constraint uniqueness, energy positivity. Returns all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let n = self.nodes.len();

        let mut seen_ids = BTreeSet::new();
        for node in &self.nodes {
            if !seen_ids.insert(node.id.as_str()) {
                issues.push(ValidationIssue::DuplicateNodeId(node.id.clone()));
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.index != i {
                issues.push(ValidationIssue::NonContiguousIndex {
                    id: node.id.clone(),
                    index: node.index,
                });
            }
        }

        let mut link_count = vec![0usize; n];
        for link in &self.links {
            if link.a >= n || link.b >= n {
                issues.push(ValidationIssue::LinkNodeOutOfRange {
                    index: link.a.max(link.b),
                });
                continue;
            }
            if link.a == link.b {
                issues.push(ValidationIssue::SelfLink {
                    node: self.nodes[link.a].id.clone(),
                });
                continue;
            }
            link_count[link.a] += 1;
            link_count[link.b] += 1;
            if link.energy_chi <= 0.0 || link.energy_lambda <= 0.0 {
                issues.push(ValidationIssue::NonPositiveEnergy {
                    what: format!(
                        "link ({}, {}) energy",
                        self.nodes[link.a].id, self.nodes[link.b].id
                    ),
                });
            }
        }
        for (i, &count) in link_count.iter().enumerate() {
            if count == 0 {
                issues.push(ValidationIssue::NodeNotLinked {
                    node: self.nodes[i].id.clone(),
                });
            } else if count > 1 {
                issues.push(ValidationIssue::NodeMultiplyLinked {
                    node: self.nodes[i].id.clone(),
                });
            }
        }

        for gate in &self.gates {
            let mut seen = BTreeSet::new();
            for &idx in &gate.support {
                if idx >= n {
                    issues.push(ValidationIssue::GateNodeOutOfRange {
                        gate: gate.name.clone(),
                        index: idx,
                    });
                }
                if !seen.insert(idx) {
                    issues.push(ValidationIssue::GateDuplicateSupport {
                        gate: gate.name.clone(),
                    });
                }
            }
            if gate.satisfying_rows.is_empty() {
                issues.push(ValidationIssue::GateNoRows {
                    gate: gate.name.clone(),
                });
            }
            let width = gate.support.len() as u32;
            for &row in &gate.satisfying_rows {
                if width < 32 && row >= (1 << width) {
                    issues.push(ValidationIssue::GateRowOutOfRange {
                        gate: gate.name.clone(),
                        row,
                    });
                }
            }
            if gate.delta_e <= 0.0 {
                issues.push(ValidationIssue::NonPositiveEnergy {
                    what: format!("gate '{}' delta_e", gate.name),
                });
            }
        }

        let mut constrained = BTreeSet::new();
        for c in &self.constraints {
            if c.node >= n {
                issues.push(ValidationIssue::ConstraintNodeOutOfRange { index: c.node });
                continue;
            }
            if !constrained.insert(c.node) {
                issues.push(ValidationIssue::DuplicateConstraint {
                    node: self.nodes[c.node].id.clone(),
                });
            }
            if c.delta_e <= 0.0 {
                issues.push(ValidationIssue::NonPositiveEnergy {
                    what: format!("constraint on '{}' delta_e", self.nodes[c.node].id),
                });
            }
        }

        ValidationReport { issues }
    }

    /// Classical energy of an assignment: the sum of element penalties.
    /// Each unsatisfied gate contributes its gap, each violated constraint
    /// its gap, and each link with equal endpoint bits its parallel-spin
    /// lift. Zero exactly when the assignment solves the network.
    pub fn classical_energy(&self, a: &Assignment) -> f64 {
        debug_assert_eq!(a.bits.len(), self.nodes.len());
        let bits = &a.bits;
        let mut energy = 0.0;
        for gate in &self.gates {
            if !gate.is_satisfied(bits) {
                energy += gate.delta_e;
            }
        }
        for c in &self.constraints {
            if bits[c.node] != c.value {
                energy += c.delta_e;
            }
        }
        for link in &self.links {
            if bits[link.a] == bits[link.b] {
                energy += link.energy_chi;
            }
        }
        energy
    }

    /// Gate-plus-constraint part of the classical energy (links excluded).
    pub fn gate_energy(&self, a: &Assignment) -> f64 {
        let bits = &a.bits;
        let mut energy = 0.0;
        for gate in &self.gates {
            if !gate.is_satisfied(bits) {
                energy += gate.delta_e;
            }
        }
        for c in &self.constraints {
            if bits[c.node] != c.value {
                energy += c.delta_e;
            }
        }
        energy
    }

    pub fn is_solution(&self, a: &Assignment) -> bool {
        self.classical_energy(a) == 0.0
    }

    /// All zero-energy assignments in lexicographic order of their
    /// bitstrings, truncated at `limit`. Brute force; the testing oracle
    /// for every engine in this crate.
    pub fn enumerate_solutions(&self, limit: usize) -> Result<Vec<Assignment>, EnumerationError> {
        let n = self.nodes.len();
        if n > MAX_ENUMERATION_NODES {
            return Err(EnumerationError::TooLarge(n));
        }
        let mut out = Vec::new();
        // Lexicographic order over bitstrings = counting with node 0 as the
        // most significant position.
        for lex in 0..(1usize << n) {
            let bits: Vec<bool> = (0..n).map(|i| (lex >> (n - 1 - i)) & 1 == 1).collect();
            let a = Assignment::new(bits);
            if self.is_solution(&a) {
                out.push(a);
                if out.len() >= limit {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Sum of gate and constraint gaps; the natural scale for energy
    /// tolerances in the relaxation engines.
    pub fn total_gate_gap(&self) -> f64 {
        self.gates.iter().map(|g| g.delta_e).sum::<f64>()
            + self.constraints.iter().map(|c| c.delta_e).sum::<f64>()
    }
}

/// Convenience builder for the nets that appear throughout the tests:
/// a single link (r, s) with optional boundary constraints.
pub fn single_link_net(fix_r: Option<bool>, fix_s: Option<bool>) -> Network {
    let mut net = Network {
        nodes: vec![
            Node { id: "r".into(), index: 0 },
            Node { id: "s".into(), index: 1 },
        ],
        links: vec![Link::new(0, 1)],
        gates: vec![],
        constraints: vec![],
    };
    if let Some(v) = fix_r {
        net.constraints.push(BoundaryConstraint::new(0, v));
    }
    if let Some(v) = fix_s {
        net.constraints.push(BoundaryConstraint::new(1, v));
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fix_net() -> Network {
        single_link_net(Some(true), Some(false))
    }

    #[test]
    fn minimal_net_is_valid() {
        let net = single_link_net(None, None);
        assert!(net.validate().is_valid());
        assert_eq!(net.validate().to_string(), "valid");
    }

    #[test]
    fn unpaired_node_is_reported() {
        let mut net = single_link_net(None, None);
        net.nodes.push(Node { id: "t".into(), index: 2 });
        let report = net.validate();
        assert!(!report.is_valid());
        assert!(report
            .issues
            .contains(&ValidationIssue::NodeNotLinked { node: "t".into() }));
    }

    #[test]
    fn row_length_mismatch_is_reported() {
        let mut net = single_link_net(None, None);
        net.nodes.push(Node { id: "t".into(), index: 2 });
        net.nodes.push(Node { id: "u".into(), index: 3 });
        net.links.push(Link::new(2, 3));
        // Row "01" (= 0b10 local) is fine on 2 nodes, but a 3-node support
        // needs rows below 0b1000; 0b1010 overflows.
        net.gates.push(Gate::new("g", vec![0, 1, 2], BTreeSet::from([0b1010])));
        let report = net.validate();
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::GateRowOutOfRange { .. })));
    }

    #[test]
    fn duplicate_constraint_is_reported() {
        let mut net = fix_net();
        net.constraints.push(BoundaryConstraint::new(0, false));
        assert!(net
            .validate()
            .issues
            .contains(&ValidationIssue::DuplicateConstraint { node: "r".into() }));
    }

    #[test]
    fn energy_of_satisfied_link_is_zero() {
        let net = single_link_net(None, None);
        let a = Assignment::from_bitstring("01").unwrap();
        assert_eq!(net.classical_energy(&a), 0.0);
    }

    #[test]
    fn energy_of_violated_link_is_chi() {
        let mut net = single_link_net(None, None);
        net.links[0].energy_chi = 2.0;
        let a = Assignment::from_bitstring("11").unwrap();
        assert_eq!(net.classical_energy(&a), 2.0);
    }

    #[test]
    fn energy_sums_element_penalties() {
        // link(r,s), fix r=1 (dE=1); bits r=0, s=1: link satisfied, fix
        // violated -> energy 1.
        let net = single_link_net(Some(true), None);
        let a = Assignment::from_bitstring("01").unwrap();
        assert_eq!(net.classical_energy(&a), 1.0);
    }

    #[test]
    fn is_solution_thresholds_at_zero() {
        let net = fix_net();
        assert!(net.is_solution(&Assignment::from_bitstring("10").unwrap()));
        assert!(!net.is_solution(&Assignment::from_bitstring("11").unwrap()));
        assert!(!net.is_solution(&Assignment::from_bitstring("01").unwrap()));
    }

    #[test]
    fn link_net_enumerates_not_relation() {
        let net = single_link_net(None, None);
        let sols = net.enumerate_solutions(usize::MAX).unwrap();
        let strings: Vec<String> = sols.iter().map(|a| a.to_bitstring()).collect();
        assert_eq!(strings, vec!["01", "10"]);
    }

    #[test]
    fn constrained_net_has_unique_solution() {
        let net = fix_net();
        let sols = net.enumerate_solutions(usize::MAX).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].to_bitstring(), "10");
    }

    #[test]
    fn contradiction_net_has_no_solutions() {
        let net = single_link_net(Some(false), Some(false));
        assert!(net.enumerate_solutions(usize::MAX).unwrap().is_empty());
    }

    #[test]
    fn enumeration_rejects_oversized_nets() {
        let mut net = Network::default();
        for i in 0..26 {
            net.nodes.push(Node { id: format!("n{i}"), index: i });
        }
        for i in 0..13 {
            net.links.push(Link::new(2 * i, 2 * i + 1));
        }
        assert_eq!(
            net.enumerate_solutions(1),
            Err(EnumerationError::TooLarge(26))
        );
    }

    #[test]
    fn assignment_index_round_trip() {
        for idx in 0..16 {
            let a = Assignment::from_index(idx, 4);
            assert_eq!(a.to_index(), idx);
        }
        // Node 0 is the leftmost character of the bitstring.
        assert_eq!(Assignment::from_index(1, 2).to_bitstring(), "10");
        assert_eq!(Assignment::from_index(2, 2).to_bitstring(), "01");
    }

    /// Random small valid networks for property tests.
    fn arb_network() -> impl Strategy<Value = Network> {
        (1usize..=3, proptest::collection::vec(any::<bool>(), 0..4)).prop_flat_map(
            |(pairs, fix_values)| {
                let n = 2 * pairs;
                let gate_rows = proptest::collection::btree_set(0u32..4, 1..4);
                (gate_rows, Just(fix_values)).prop_map(move |(rows, fixes)| {
                    let nodes = (0..n)
                        .map(|i| Node { id: format!("n{i}"), index: i })
                        .collect();
                    let links = (0..pairs).map(|i| Link::new(2 * i, 2 * i + 1)).collect();
                    let gates = if n >= 2 {
                        vec![Gate::new("g0", vec![0, 1], rows.clone())]
                    } else {
                        vec![]
                    };
                    let constraints = fixes
                        .iter()
                        .enumerate()
                        .take(n)
                        .map(|(i, &v)| BoundaryConstraint::new(i, v))
                        .collect();
                    Network { nodes, links, gates, constraints }
                })
            },
        )
    }

    proptest! {
        #[test]
        fn links_partition_the_node_set(net in arb_network()) {
            prop_assert!(net.validate().is_valid());
            prop_assert_eq!(2 * net.links.len(), net.num_nodes());
        }

        #[test]
        fn zero_energy_iff_enumerated(net in arb_network()) {
            let sols = net.enumerate_solutions(usize::MAX).unwrap();
            let n = net.num_nodes();
            for idx in 0..(1usize << n) {
                let a = Assignment::from_index(idx, n);
                let listed = sols.contains(&a);
                prop_assert_eq!(net.classical_energy(&a) == 0.0, listed);
            }
        }

        #[test]
        fn energy_invariant_under_relabeling(net in arb_network(), perm_seed in 0u64..1000) {
            let n = net.num_nodes();
            // Apply a seeded permutation consistently to every element.
            let mut perm: Vec<usize> = (0..n).collect();
            let mut state = perm_seed.wrapping_add(0x9e3779b97f4a7c15);
            for i in (1..n).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                perm.swap(i, (state as usize) % (i + 1));
            }
            let mut relabeled = Network::default();
            relabeled.nodes = (0..n)
                .map(|i| Node { id: format!("m{i}"), index: i })
                .collect();
            relabeled.links = net
                .links
                .iter()
                .map(|l| Link { a: perm[l.a], b: perm[l.b], ..l.clone() })
                .collect();
            relabeled.gates = net
                .gates
                .iter()
                .map(|g| Gate {
                    support: g.support.iter().map(|&i| perm[i]).collect(),
                    ..g.clone()
                })
                .collect();
            relabeled.constraints = net
                .constraints
                .iter()
                .map(|c| BoundaryConstraint { node: perm[c.node], ..c.clone() })
                .collect();
            for idx in 0..(1usize << n) {
                let a = Assignment::from_index(idx, n);
                let mut permuted = vec![false; n];
                for i in 0..n {
                    permuted[perm[i]] = a.bits[i];
                }
                let b = Assignment::new(permuted);
                prop_assert_eq!(net.classical_energy(&a), relabeled.classical_energy(&b));
            }
        }
    }
}
