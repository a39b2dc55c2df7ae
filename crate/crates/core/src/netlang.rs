//! Text front end: the native line-oriented network format, a DIMACS CNF
//! subset, and the compiler from CNF instances to partially constrained
//! reversible networks.
//!
//! The network format is line oriented with `#` comments:
//!
//! ```text
//! nodes <id> <id> ...
//! link <id> <id> [Echi] [Elambda]
//! gate <name> <id...> : <row> <row> ... [dE=<x>]
//! fix <id> <0|1> [dE=<x>]
//! ```
//!
//! Rows are bitstrings read in support order. The CNF compiler uses the
//! complement-pair encoding: each variable becomes a linked (x, x̄) pair so
//! the NOT wire itself provides the negative literal, and each clause
//! becomes an at-least-one gate over its literal nodes.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::network::{Assignment, BoundaryConstraint, Gate, Link, Network, Node};

/// A CNF formula in DIMACS convention: positive integers are variables,
/// negative their negations, variables numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    /// Truth-table evaluation of one variable assignment (bit i = var i+1).
    pub fn is_satisfied(&self, values: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let v = values[(lit.unsigned_abs() as usize) - 1];
                if lit > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

/// A token with its 1-based column, for diagnostics.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = 1;
    for piece in line.split_inclusive(char::is_whitespace) {
        let trimmed = piece.trim_end_matches(char::is_whitespace);
        if !trimmed.is_empty() {
            out.push((col, trimmed));
        }
        col += piece.chars().count();
    }
    out
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse the native network format. Diagnostics carry line and column.
pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    let mut net = Network::default();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut linked: BTreeSet<usize> = BTreeSet::new();

    for (line_no, raw_line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        let (kw_col, keyword) = tokens[0];
        let args = &tokens[1..];

        let lookup = |col: usize, id: &str| -> Result<usize, ParseError> {
            index_of
                .get(id)
                .copied()
                .ok_or_else(|| ParseError::new(line_no, col, format!("unknown node '{id}'")))
        };

        match keyword {
            "nodes" => {
                if args.is_empty() {
                    return Err(ParseError::new(line_no, kw_col, "empty nodes line"));
                }
                for &(col, id) in args {
                    if !is_identifier(id) {
                        return Err(ParseError::new(
                            line_no,
                            col,
                            format!("invalid node id '{id}'"),
                        ));
                    }
                    if index_of.contains_key(id) {
                        return Err(ParseError::new(
                            line_no,
                            col,
                            format!("duplicate node id '{id}'"),
                        ));
                    }
                    let index = net.nodes.len();
                    index_of.insert(id.to_string(), index);
                    net.nodes.push(Node { id: id.to_string(), index });
                }
            }
            "link" => {
                if args.len() < 2 || args.len() > 4 {
                    return Err(ParseError::new(
                        line_no,
                        kw_col,
                        "link expects: link <id> <id> [Echi] [Elambda]",
                    ));
                }
                let a = lookup(args[0].0, args[0].1)?;
                let b = lookup(args[1].0, args[1].1)?;
                if a == b {
                    return Err(ParseError::new(
                        line_no,
                        args[1].0,
                        format!("link joins '{}' to itself", args[0].1),
                    ));
                }
                for &idx in &[a, b] {
                    if !linked.insert(idx) {
                        return Err(ParseError::new(
                            line_no,
                            args[if idx == a { 0 } else { 1 }].0,
                            format!("node '{}' already belongs to a link", net.nodes[idx].id),
                        ));
                    }
                }
                let mut link = Link::new(a, b);
                if let Some(&(col, tok)) = args.get(2) {
                    link.energy_chi = parse_energy(line_no, col, tok)?;
                }
                if let Some(&(col, tok)) = args.get(3) {
                    link.energy_lambda = parse_energy(line_no, col, tok)?;
                }
                net.links.push(link);
            }
            "gate" => {
                let colon = args.iter().position(|&(_, t)| t == ":").ok_or_else(|| {
                    ParseError::new(line_no, kw_col, "gate line is missing ':'")
                })?;
                if colon < 2 {
                    return Err(ParseError::new(
                        line_no,
                        kw_col,
                        "gate expects: gate <name> <id...> : <row...> [dE=<x>]",
                    ));
                }
                let (name_col, name) = args[0];
                if !is_identifier(name) {
                    return Err(ParseError::new(
                        line_no,
                        name_col,
                        format!("invalid gate name '{name}'"),
                    ));
                }
                let mut support = Vec::new();
                for &(col, id) in &args[1..colon] {
                    let idx = lookup(col, id)?;
                    if support.contains(&idx) {
                        return Err(ParseError::new(
                            line_no,
                            col,
                            format!("gate '{name}' repeats node '{id}'"),
                        ));
                    }
                    support.push(idx);
                }
                let width = support.len();
                let mut rows = BTreeSet::new();
                let mut delta_e = None;
                for &(col, tok) in &args[colon + 1..] {
                    if let Some(rest) = tok.strip_prefix("dE=") {
                        delta_e = Some(parse_energy(line_no, col + 3, rest)?);
                        continue;
                    }
                    if tok.len() != width || !tok.bytes().all(|b| b == b'0' || b == b'1') {
                        return Err(ParseError::new(
                            line_no,
                            col,
                            format!("row '{tok}' does not match support width {width}"),
                        ));
                    }
                    let mut row = 0u32;
                    for (j, b) in tok.bytes().enumerate() {
                        if b == b'1' {
                            row |= 1 << j;
                        }
                    }
                    rows.insert(row);
                }
                if rows.is_empty() {
                    return Err(ParseError::new(
                        line_no,
                        kw_col,
                        format!("gate '{name}' has no satisfying rows"),
                    ));
                }
                let mut gate = Gate::new(name, support, rows);
                if let Some(de) = delta_e {
                    gate.delta_e = de;
                }
                net.gates.push(gate);
            }
            "fix" => {
                if args.len() < 2 || args.len() > 3 {
                    return Err(ParseError::new(
                        line_no,
                        kw_col,
                        "fix expects: fix <id> <0|1> [dE=<x>]",
                    ));
                }
                let node = lookup(args[0].0, args[0].1)?;
                let value = match args[1].1 {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(ParseError::new(
                            line_no,
                            args[1].0,
                            format!("expected 0 or 1, found '{other}'"),
                        ))
                    }
                };
                if net.constraints.iter().any(|c| c.node == node) {
                    return Err(ParseError::new(
                        line_no,
                        args[0].0,
                        format!("node '{}' is already fixed", args[0].1),
                    ));
                }
                let mut c = BoundaryConstraint::new(node, value);
                if let Some(&(col, tok)) = args.get(2) {
                    let rest = tok.strip_prefix("dE=").ok_or_else(|| {
                        ParseError::new(line_no, col, format!("expected dE=<x>, found '{tok}'"))
                    })?;
                    c.delta_e = parse_energy(line_no, col + 3, rest)?;
                }
                net.constraints.push(c);
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    kw_col,
                    format!("unknown directive '{other}'"),
                ));
            }
        }
    }

    let report = net.validate();
    if !report.is_valid() {
        return Err(ParseError::new(0, 0, report.to_string()));
    }
    Ok(net)
}

fn parse_energy(line: usize, col: usize, tok: &str) -> Result<f64, ParseError> {
    let value: f64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, col, format!("invalid number '{tok}'")))?;
    if !(value > 0.0) || !value.is_finite() {
        return Err(ParseError::new(
            line,
            col,
            format!("energy must be positive and finite, found '{tok}'"),
        ));
    }
    Ok(value)
}

/// Serialize a network so that [`parse_network`] reconstructs it exactly.
/// Energies use shortest round-trip float formatting.
pub fn serialize_network(net: &Network) -> String {
    let mut out = String::new();
    if !net.nodes.is_empty() {
        out.push_str("nodes");
        for node in &net.nodes {
            let _ = write!(out, " {}", node.id);
        }
        out.push('\n');
    }
    for link in &net.links {
        let _ = writeln!(
            out,
            "link {} {} {} {}",
            net.nodes[link.a].id, net.nodes[link.b].id, link.energy_chi, link.energy_lambda
        );
    }
    for gate in &net.gates {
        let _ = write!(out, "gate {}", gate.name);
        for &idx in &gate.support {
            let _ = write!(out, " {}", net.nodes[idx].id);
        }
        out.push_str(" :");
        let width = gate.support.len();
        for &row in &gate.satisfying_rows {
            out.push(' ');
            for j in 0..width {
                out.push(if (row >> j) & 1 == 1 { '1' } else { '0' });
            }
        }
        let _ = writeln!(out, " dE={}", gate.delta_e);
    }
    for c in &net.constraints {
        let _ = writeln!(
            out,
            "fix {} {} dE={}",
            net.nodes[c.node].id,
            if c.value { 1 } else { 0 },
            c.delta_e
        );
    }
    out
}

/// Parse the DIMACS CNF subset: `c` comments, a `p cnf V C` header, and
/// whitespace-separated literals with `0` terminating each clause.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last_pos = (1, 1);

    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        if tokens[0].1.starts_with('c') {
            continue;
        }
        if tokens[0].1 == "p" {
            if header.is_some() {
                return Err(ParseError::new(line_no, tokens[0].0, "duplicate header"));
            }
            if tokens.len() != 4 || tokens[1].1 != "cnf" {
                return Err(ParseError::new(
                    line_no,
                    tokens[0].0,
                    "header must read: p cnf <vars> <clauses>",
                ));
            }
            let vars: usize = tokens[2].1.parse().map_err(|_| {
                ParseError::new(line_no, tokens[2].0, "invalid variable count")
            })?;
            let count: usize = tokens[3].1.parse().map_err(|_| {
                ParseError::new(line_no, tokens[3].0, "invalid clause count")
            })?;
            header = Some((vars, count));
            continue;
        }
        let (vars, _) = header.ok_or_else(|| {
            ParseError::new(line_no, tokens[0].0, "clause before 'p cnf' header")
        })?;
        for &(col, tok) in &tokens {
            let lit: i64 = tok.parse().map_err(|_| {
                ParseError::new(line_no, col, format!("invalid literal '{tok}'"))
            })?;
            last_pos = (line_no, col);
            if lit == 0 {
                if current.is_empty() {
                    return Err(ParseError::new(line_no, col, "empty clause"));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() as usize > vars {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        format!("literal out of range: {lit} exceeds {vars} variables"),
                    ));
                }
                current.push(lit as i32);
            }
        }
    }

    let (vars, count) = header
        .ok_or_else(|| ParseError::new(1, 1, "missing 'p cnf' header"))?;
    if !current.is_empty() {
        return Err(ParseError::new(
            last_pos.0,
            last_pos.1,
            "clause missing terminating 0",
        ));
    }
    if clauses.len() != count {
        return Err(ParseError::new(
            last_pos.0,
            last_pos.1,
            format!("header mismatch: declared {count} clauses, found {}", clauses.len()),
        ));
    }
    Ok(CnfFormula { num_vars: vars, clauses })
}

/// Compile a CNF formula into a reversible network.
///
/// Variable `i` becomes the node pair (`x<i>`, `nx<i>`) joined by a link,
/// so the complement node carries the negative literal for free. Each
/// clause becomes a gate over its literal nodes accepting every row except
/// all-zeros. The solutions of the result, projected onto the variable
/// nodes, are exactly the satisfying assignments of the formula.
pub fn compile_cnf(formula: &CnfFormula) -> Network {
    let v = formula.num_vars;
    let mut net = Network::default();
    for i in 0..v {
        net.nodes.push(Node { id: format!("x{}", i + 1), index: i });
    }
    for i in 0..v {
        net.nodes.push(Node { id: format!("nx{}", i + 1), index: v + i });
    }
    for i in 0..v {
        net.links.push(Link::new(i, v + i));
    }
    for (ci, clause) in formula.clauses.iter().enumerate() {
        let mut support = Vec::new();
        for &lit in clause {
            let var = (lit.unsigned_abs() as usize) - 1;
            let node = if lit > 0 { var } else { v + var };
            if !support.contains(&node) {
                support.push(node);
            }
        }
        let width = support.len();
        let rows: BTreeSet<u32> = (1..(1u32 << width)).collect();
        net.gates.push(Gate::new(format!("c{}", ci + 1), support, rows));
    }
    net
}

/// Project full-network solutions onto the variable nodes of a compiled
/// net and deduplicate. With the complement-pair encoding the projection
/// is simply the first `num_vars` bits.
pub fn project_to_variables(solutions: &[Assignment], num_vars: usize) -> Vec<Vec<bool>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in solutions {
        let head: Vec<bool> = a.bits[..num_vars].to_vec();
        if seen.insert(head.clone()) {
            out.push(head);
        }
    }
    out
}
