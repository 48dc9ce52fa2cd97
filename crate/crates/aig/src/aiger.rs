//! Combinational ASCII AIGER (`aag`) without latches.
//!
//! Import creates the constant node first (only when literal 0/1 is used),
//! then one node per variable in variable order, then the outputs in file
//! order. Export numbers the non-output nodes in storage order, so graphs laid
//! out that way (constant first, outputs last) round-trip exactly.

use std::fmt::Write as _;

use crate::error::{AigError, Result};
use crate::graph::{topological_order, AigGraph, AigNode, Fanin, NodeKind};

fn syntax(line: usize, message: impl Into<String>) -> AigError {
    AigError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy)]
enum VarDef {
    Undefined,
    Input,
    And(u64, u64, usize),
}

pub fn parse_aiger(text: &str) -> Result<AigGraph> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| syntax(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "aag" {
        return Err(syntax(hline, "expected header `aag M I L O A`"));
    }
    let nums: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| syntax(hline, "header fields must be non-negative integers"))?;
    let (max_var, n_in, n_latch, n_out, n_and) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    if n_latch != 0 {
        return Err(syntax(hline, "latches are not supported"));
    }
    if n_in + n_and > max_var {
        return Err(syntax(hline, "M is smaller than I + A"));
    }

    let mut next_numbers = |count: usize, what: &str| -> Result<(usize, Vec<u64>)> {
        let (line, text) = lines
            .by_ref()
            .find(|(_, l)| !l.is_empty())
            .ok_or_else(|| syntax(hline, format!("missing {what} line")))?;
        let vals: Vec<u64> = text
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| syntax(line, format!("malformed {what} line")))?;
        if vals.len() != count {
            return Err(syntax(line, format!("{what} line needs {count} literal(s)")));
        }
        Ok((line, vals))
    };

    let mut defs = vec![VarDef::Undefined; max_var + 1];
    let check_lit = |lit: u64, line: usize| -> Result<()> {
        if (lit >> 1) as usize > max_var {
            Err(syntax(line, format!("literal {lit} exceeds M")))
        } else {
            Ok(())
        }
    };
    for _ in 0..n_in {
        let (line, v) = next_numbers(1, "input")?;
        let lit = v[0];
        check_lit(lit, line)?;
        if lit & 1 == 1 || lit < 2 {
            return Err(syntax(line, "input literal must be a positive even literal"));
        }
        let var = (lit >> 1) as usize;
        if !matches!(defs[var], VarDef::Undefined) {
            return Err(syntax(line, format!("variable {var} defined twice")));
        }
        defs[var] = VarDef::Input;
    }
    let mut outputs = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        let (line, v) = next_numbers(1, "output")?;
        check_lit(v[0], line)?;
        outputs.push((v[0], line));
    }
    for _ in 0..n_and {
        let (line, v) = next_numbers(3, "and")?;
        for &l in &v {
            check_lit(l, line)?;
        }
        if v[0] & 1 == 1 || v[0] < 2 {
            return Err(syntax(line, "and lhs must be a positive even literal"));
        }
        let var = (v[0] >> 1) as usize;
        if !matches!(defs[var], VarDef::Undefined) {
            return Err(syntax(line, format!("variable {var} defined twice")));
        }
        defs[var] = VarDef::And(v[1], v[2], line);
    }
    // Remaining lines are the optional symbol table and comments.

    let uses_constant = outputs.iter().any(|&(l, _)| l < 2)
        || defs
            .iter()
            .any(|d| matches!(d, VarDef::And(a, b, _) if *a < 2 || *b < 2));

    let mut node_of_var = vec![usize::MAX; max_var + 1];
    let mut nodes = Vec::new();
    if uses_constant {
        node_of_var[0] = 0;
        nodes.push(AigNode::constant());
    }
    for (var, def) in defs.iter().enumerate().skip(1) {
        match def {
            VarDef::Undefined => {}
            VarDef::Input => {
                node_of_var[var] = nodes.len();
                nodes.push(AigNode::input());
            }
            VarDef::And(..) => {
                node_of_var[var] = nodes.len();
                nodes.push(AigNode::and(Fanin::buffer(0), Fanin::buffer(0)));
            }
        }
    }
    let fanin = |lit: u64, line: usize| -> Result<Fanin> {
        let var = (lit >> 1) as usize;
        let node = node_of_var[var];
        if node == usize::MAX {
            return Err(AigError::UndefinedSignal {
                name: format!("v{var}"),
                line,
            });
        }
        Ok(Fanin::new(node, lit & 1 == 1))
    };
    for (var, def) in defs.iter().enumerate() {
        if let VarDef::And(a, b, line) = *def {
            let fa = fanin(a, line)?;
            let fb = fanin(b, line)?;
            *nodes[node_of_var[var]].fanins_mut() = vec![fa, fb];
        }
    }
    for &(lit, line) in &outputs {
        nodes.push(AigNode::output(fanin(lit, line)?));
    }
    if let Err(node) = topological_order(&nodes) {
        let var = node_of_var.iter().position(|&n| n == node).unwrap_or(0);
        return Err(AigError::Cycle(format!("v{var}")));
    }
    AigGraph::new("aiger", nodes)
}

/// Writes the graph as ASCII AIGER.
pub fn write_aiger(g: &AigGraph) -> String {
    let mut var_of = vec![0u64; g.num_nodes()];
    let mut next = 1u64;
    for (idx, node) in g.nodes().iter().enumerate() {
        match node.kind {
            NodeKind::Constant => var_of[idx] = 0,
            NodeKind::Input | NodeKind::And => {
                var_of[idx] = next;
                next += 1;
            }
            NodeKind::Output => {}
        }
    }
    let lit = |f: Fanin| (var_of[f.node] << 1) | f.inverted as u64;
    let max_var = next - 1;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "aag {max_var} {} 0 {} {}",
        g.primary_inputs().len(),
        g.primary_outputs().len(),
        g.num_ands()
    );
    for &i in g.primary_inputs() {
        let _ = writeln!(out, "{}", var_of[i] << 1);
    }
    for &o in g.primary_outputs() {
        let _ = writeln!(out, "{}", lit(g.node(o).fanins()[0]));
    }
    for (idx, node) in g.nodes().iter().enumerate() {
        if node.kind == NodeKind::And {
            let f = node.fanins();
            let _ = writeln!(out, "{} {} {}", var_of[idx] << 1, lit(f[0]), lit(f[1]));
        }
    }
    let _ = writeln!(out, "c");
    let _ = writeln!(out, "{}", g.name());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::exhaustive_truth_tables;

    #[test]
    fn parses_and_gate() {
        let g = parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.num_ands(), 1);
        assert_eq!(exhaustive_truth_tables(&g).unwrap(), vec![vec![0b1000]]);
    }

    #[test]
    fn inverted_output_and_constant() {
        let g = parse_aiger("aag 1 1 0 2 0\n2\n3\n1\n").unwrap();
        assert_eq!(g.constant_node(), Some(0));
        assert_eq!(exhaustive_truth_tables(&g).unwrap(), vec![vec![0b01], vec![0b11]]);
    }

    #[test]
    fn rejects_latches() {
        assert!(matches!(
            parse_aiger("aag 1 0 1 0 0\n2 3\n"),
            Err(AigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn undefined_variable() {
        let err = parse_aiger("aag 3 1 0 1 1\n2\n6\n6 2 4\n").unwrap_err();
        assert!(matches!(err, AigError::UndefinedSignal { line: 4, .. }));
    }

    #[test]
    fn cycle_detected() {
        let err = parse_aiger("aag 3 1 0 1 2\n2\n6\n4 2 6\n6 2 4\n").unwrap_err();
        assert!(matches!(err, AigError::Cycle(_)));
    }

    #[test]
    fn round_trip() {
        let text = "aag 5 3 0 2 2\n2\n4\n6\n10\n9\n8 2 5\n10 8 7\n";
        let g = parse_aiger(text).unwrap();
        let back = parse_aiger(&write_aiger(&g)).unwrap();
        assert_eq!(back.nodes(), g.nodes());
    }
}
