//! ISCAS-style BENCH netlists.
//!
//! Supported statements: `INPUT(x)`, `OUTPUT(x)` and `x = GATE(a, b, ...)`
//! with gates AND, NAND, OR, NOR (two or more fan-ins), NOT, BUF/BUFF (one
//! fan-in) and the zero-input constants CONST0/CONST1. Gate names are
//! case-insensitive and `#` starts a comment.
//!
//! Nodes are created in declaration order. Multi-input gates become a
//! left-to-right chain of 2-input ANDs; OR/NOR/NAND are expressed through
//! edge polarities; NOT/BUF only alias a signal and create no node.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{AigError, Result};
use crate::graph::{topological_order, AigGraph, AigNode, Fanin, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GateOp {
    And,
    Nand,
    Or,
    Nor,
}

impl GateOp {
    /// (fan-in edges inverted, gate output inverted)
    fn polarities(self) -> (bool, bool) {
        match self {
            GateOp::And => (false, false),
            GateOp::Nand => (false, true),
            GateOp::Or => (true, true),
            GateOp::Nor => (true, false),
        }
    }
}

#[derive(Debug, Clone)]
enum Def {
    Input(usize),
    Gate {
        op: GateOp,
        args: Vec<String>,
        nodes: Vec<usize>,
        line: usize,
    },
    Alias {
        arg: String,
        invert: bool,
        line: usize,
    },
    Constant {
        invert: bool,
    },
}

struct Statement<'a> {
    lhs: Option<&'a str>,
    head: &'a str,
    args: Vec<&'a str>,
}

fn syntax(line: usize, message: impl Into<String>) -> AigError {
    AigError::Syntax {
        line,
        message: message.into(),
    }
}

fn is_signal_name(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '=' | ','))
}

fn parse_statement(text: &str, line: usize) -> Result<Statement<'_>> {
    let (lhs, rhs) = match text.split_once('=') {
        Some((l, r)) => {
            let l = l.trim();
            if !is_signal_name(l) {
                return Err(syntax(line, format!("invalid signal name `{l}`")));
            }
            (Some(l), r.trim())
        }
        None => (None, text),
    };
    let open = rhs
        .find('(')
        .ok_or_else(|| syntax(line, "expected `(`"))?;
    if !rhs.ends_with(')') {
        return Err(syntax(line, "expected `)` at end of statement"));
    }
    let head = rhs[..open].trim();
    let inner = rhs[open + 1..rhs.len() - 1].trim();
    let args: Vec<&str> = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    for a in &args {
        if !is_signal_name(a) {
            return Err(syntax(line, format!("invalid signal name `{a}`")));
        }
    }
    Ok(Statement { lhs, head, args })
}

/// Parses BENCH text into a validated graph.
pub fn parse_bench(text: &str) -> Result<AigGraph> {
    let mut nodes: Vec<AigNode> = Vec::new();
    let mut node_signal: Vec<String> = Vec::new();
    let mut defs: HashMap<String, Def> = HashMap::new();
    let mut outputs: Vec<(usize, String, usize)> = Vec::new();
    let mut constant: Option<usize> = None;

    let placeholder = Fanin::buffer(usize::MAX);

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let st = parse_statement(content, line)?;
        let head = st.head.to_ascii_uppercase();
        let Some(lhs) = st.lhs else {
            let [name] = st.args.as_slice() else {
                return Err(syntax(line, format!("{head} takes exactly one signal")));
            };
            match head.as_str() {
                "INPUT" => {
                    if defs.contains_key(*name) {
                        return Err(syntax(line, format!("signal `{name}` defined twice")));
                    }
                    defs.insert(name.to_string(), Def::Input(nodes.len()));
                    nodes.push(AigNode::input());
                    node_signal.push(name.to_string());
                }
                "OUTPUT" => {
                    outputs.push((nodes.len(), name.to_string(), line));
                    nodes.push(AigNode::output(placeholder));
                    node_signal.push(name.to_string());
                }
                _ => return Err(syntax(line, format!("unknown declaration `{}`", st.head))),
            }
            continue;
        };

        if defs.contains_key(lhs) {
            return Err(syntax(line, format!("signal `{lhs}` defined twice")));
        }
        let arity = |expected: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(AigError::Arity {
                    gate: head.clone(),
                    line,
                    expected: expected.to_string(),
                    got: st.args.len(),
                })
            }
        };
        let def = match head.as_str() {
            "AND" | "NAND" | "OR" | "NOR" => {
                arity("at least 2", st.args.len() >= 2)?;
                let op = match head.as_str() {
                    "AND" => GateOp::And,
                    "NAND" => GateOp::Nand,
                    "OR" => GateOp::Or,
                    _ => GateOp::Nor,
                };
                let first = nodes.len();
                for _ in 1..st.args.len() {
                    nodes.push(AigNode::and(placeholder, placeholder));
                    node_signal.push(lhs.to_string());
                }
                Def::Gate {
                    op,
                    args: st.args.iter().map(|s| s.to_string()).collect(),
                    nodes: (first..nodes.len()).collect(),
                    line,
                }
            }
            "NOT" | "BUF" | "BUFF" => {
                arity("1", st.args.len() == 1)?;
                Def::Alias {
                    arg: st.args[0].to_string(),
                    invert: head == "NOT",
                    line,
                }
            }
            "CONST0" | "CONST1" => {
                arity("0", st.args.is_empty())?;
                if constant.is_none() {
                    constant = Some(nodes.len());
                    nodes.push(AigNode::constant());
                    node_signal.push(lhs.to_string());
                }
                Def::Constant {
                    invert: head == "CONST1",
                }
            }
            _ => return Err(syntax(line, format!("unsupported gate `{}`", st.head))),
        };
        defs.insert(lhs.to_string(), def);
    }

    let resolve = |name: &str, line: usize| -> Result<Fanin> {
        let mut inverted = false;
        let mut cur = name;
        let mut cur_line = line;
        let mut visited: HashSet<&str> = HashSet::new();
        loop {
            let def = defs.get(cur).ok_or_else(|| AigError::UndefinedSignal {
                name: cur.to_string(),
                line: cur_line,
            })?;
            match def {
                Def::Input(node) => return Ok(Fanin::new(*node, inverted)),
                Def::Gate { op, nodes, .. } => {
                    let out_inv = op.polarities().1;
                    return Ok(Fanin::new(*nodes.last().unwrap(), inverted ^ out_inv));
                }
                Def::Constant { invert } => {
                    return Ok(Fanin::new(constant.unwrap(), inverted ^ invert));
                }
                Def::Alias { arg, invert, line } => {
                    if !visited.insert(cur) {
                        return Err(AigError::Cycle(cur.to_string()));
                    }
                    inverted ^= invert;
                    cur = arg;
                    cur_line = *line;
                }
            }
        }
    };

    // Gates are filled in declaration order so error reporting is deterministic.
    let mut gates: Vec<(&GateOp, &Vec<String>, &Vec<usize>, usize)> = defs
        .values()
        .filter_map(|d| match d {
            Def::Gate {
                op,
                args,
                nodes,
                line,
            } => Some((op, args, nodes, *line)),
            _ => None,
        })
        .collect();
    gates.sort_by_key(|g| g.3);
    for (op, args, chain, line) in gates {
        let in_inv = op.polarities().0;
        let mut leaves = Vec::with_capacity(args.len());
        for a in args {
            let f = resolve(a, line)?;
            leaves.push(Fanin::new(f.node, f.inverted ^ in_inv));
        }
        let mut acc = leaves[0];
        for (i, &node) in chain.iter().enumerate() {
            *nodes[node].fanins_mut() = vec![acc, leaves[i + 1]];
            acc = Fanin::buffer(node);
        }
    }
    for (node, name, line) in &outputs {
        let f = resolve(name, *line)?;
        *nodes[*node].fanins_mut() = vec![f];
    }

    for (idx, node) in nodes.iter().enumerate() {
        if node.fanins().iter().any(|f| f.node == idx) {
            return Err(AigError::Cycle(node_signal[idx].clone()));
        }
    }
    if let Err(node) = topological_order(&nodes) {
        return Err(AigError::Cycle(node_signal[node].clone()));
    }
    AigGraph::new("bench", nodes)
}

fn signal(f: Fanin) -> String {
    if f.inverted {
        format!("n{}_inv", f.node)
    } else {
        format!("n{}", f.node)
    }
}

/// Writes the graph as BENCH text. Lines follow storage order, so parsing the
/// result reproduces the node order, kinds, edges and polarities exactly.
pub fn write_bench(g: &AigGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", g.name());
    let _ = writeln!(
        out,
        "# {} inputs, {} outputs, {} ands",
        g.primary_inputs().len(),
        g.primary_outputs().len(),
        g.num_ands()
    );
    let mut needs_inverse = vec![false; g.num_nodes()];
    for (idx, node) in g.nodes().iter().enumerate() {
        match node.kind {
            NodeKind::Input => {
                let _ = writeln!(out, "INPUT(n{idx})");
            }
            NodeKind::Output => {
                let f = node.fanins()[0];
                needs_inverse[f.node] |= f.inverted;
                let _ = writeln!(out, "OUTPUT({})", signal(f));
            }
            NodeKind::And => {
                let [a, b] = [node.fanins()[0], node.fanins()[1]];
                needs_inverse[a.node] |= a.inverted;
                needs_inverse[b.node] |= b.inverted;
                let _ = writeln!(out, "n{idx} = AND({}, {})", signal(a), signal(b));
            }
            NodeKind::Constant => {
                let _ = writeln!(out, "n{idx} = CONST0()");
            }
        }
    }
    for (idx, needed) in needs_inverse.iter().enumerate() {
        if *needed {
            let _ = writeln!(out, "n{idx}_inv = NOT(n{idx})");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::exhaustive_truth_tables;

    #[test]
    fn smallest_and() {
        let g = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.primary_inputs().len(), 2);
        assert_eq!(g.primary_outputs().len(), 1);
        assert_eq!(g.num_ands(), 1);
        assert!(g.edges().iter().all(|e| !e.polarity.is_inverted()));
    }

    #[test]
    fn nand_puts_inverter_on_output_edge() {
        let g = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n").unwrap();
        let out = g.primary_outputs()[0];
        assert_eq!(g.node(out).inverted_preds(), 1);
        assert_eq!(g.num_ands(), 1);
        // brute-force against NAND semantics
        assert_eq!(exhaustive_truth_tables(&g).unwrap(), vec![vec![0b0111]]);
    }

    #[test]
    fn or_nor_and_multi_input() {
        let src = "# mixed\nINPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(o)\nOUTPUT(n)\nOUTPUT(w)\n\
                   o = or(a, b)\nn = NOR(a, b)\nw = AND(a, b, c)\n";
        let g = parse_bench(src).unwrap();
        let tt = exhaustive_truth_tables(&g).unwrap();
        let mut or = 0u64;
        let mut nor = 0u64;
        let mut and3 = 0u64;
        for p in 0..8u64 {
            let (a, b, c) = (p & 1, (p >> 1) & 1, (p >> 2) & 1);
            or |= (a | b) << p;
            nor |= (1 - (a | b)) << p;
            and3 |= (a & b & c) << p;
        }
        assert_eq!(tt, vec![vec![or], vec![nor], vec![and3]]);
        assert_eq!(g.num_ands(), 4);
    }

    #[test]
    fn not_and_buf_alias_without_nodes() {
        let g = parse_bench("INPUT(a)\nOUTPUT(y)\nt = NOT(a)\ny = BUFF(t)\n").unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.node(1).inverted_preds(), 1);
    }

    #[test]
    fn forward_references_are_allowed() {
        let g = parse_bench("OUTPUT(y)\ny = AND(t, a)\nt = NOT(b)\nINPUT(a)\nINPUT(b)\n").unwrap();
        assert_eq!(g.node(0).kind, NodeKind::Output);
        assert_eq!(g.primary_inputs(), &[2, 3]);
    }

    #[test]
    fn undefined_signal_is_named() {
        let err = parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, z)\n").unwrap_err();
        assert_eq!(
            err,
            AigError::UndefinedSignal {
                name: "z".into(),
                line: 3
            }
        );
    }

    #[test]
    fn syntax_error_has_line_number() {
        let err = parse_bench("INPUT(a)\n\nOUTPUT(y\n").unwrap_err();
        assert!(matches!(err, AigError::Syntax { line: 3, .. }));
        let err = parse_bench("INPUT(a)\ny = XOR(a, a)\n").unwrap_err();
        assert!(matches!(err, AigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn arity_errors() {
        let err = parse_bench("INPUT(a)\ny = AND(a)\n").unwrap_err();
        assert!(matches!(err, AigError::Arity { line: 2, got: 1, .. }));
        let err = parse_bench("INPUT(a)\nINPUT(b)\ny = NOT(a, b)\n").unwrap_err();
        assert!(matches!(err, AigError::Arity { got: 2, .. }));
    }

    #[test]
    fn cyclic_definitions() {
        let err = parse_bench("INPUT(a)\nOUTPUT(x)\nx = AND(a, y)\ny = AND(a, x)\n").unwrap_err();
        assert!(matches!(err, AigError::Cycle(_)));
        let err = parse_bench("OUTPUT(x)\nx = NOT(y)\ny = BUF(x)\n").unwrap_err();
        assert!(matches!(err, AigError::Cycle(_)));
    }

    #[test]
    fn duplicate_definition() {
        let err = parse_bench("INPUT(a)\na = NOT(a)\n").unwrap_err();
        assert!(matches!(err, AigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn round_trip_nand() {
        let g = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n").unwrap();
        let back = parse_bench(&write_bench(&g)).unwrap();
        assert_eq!(back.nodes(), g.nodes());
    }

    #[test]
    fn constants_round_trip() {
        let g = parse_bench("INPUT(a)\nOUTPUT(y)\nOUTPUT(z)\ny = CONST1()\nz = AND(a, k)\nk = const0()\n")
            .unwrap();
        assert_eq!(g.constant_node(), Some(3));
        let back = parse_bench(&write_bench(&g)).unwrap();
        assert_eq!(back.nodes(), g.nodes());
    }
}
