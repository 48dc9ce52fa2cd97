//! Bit-parallel simulation.

use crate::error::{AigError, Result};
use crate::graph::{AigGraph, NodeKind};

/// Largest input count accepted by [`exhaustive_truth_tables`].
pub const MAX_EXHAUSTIVE_INPUTS: usize = 20;

/// Evaluates the graph on one input assignment (one bit per primary input,
/// in primary-input order). Returns one bit per primary output.
pub fn simulate(g: &AigGraph, assignment: &[bool]) -> Result<Vec<bool>> {
    let words: Vec<u64> = assignment.iter().map(|&b| if b { !0 } else { 0 }).collect();
    let out = simulate_words(g, &words)?;
    Ok(out.into_iter().map(|w| w & 1 == 1).collect())
}

/// Evaluates 64 assignments at once: bit `j` of `inputs[i]` is the value of
/// primary input `i` in pattern `j`.
pub fn simulate_words(g: &AigGraph, inputs: &[u64]) -> Result<Vec<u64>> {
    let pis = g.primary_inputs();
    if inputs.len() != pis.len() {
        return Err(AigError::AssignmentLength {
            expected: pis.len(),
            got: inputs.len(),
        });
    }
    let mut value = vec![0u64; g.num_nodes()];
    for (&pi, &w) in pis.iter().zip(inputs) {
        value[pi] = w;
    }
    eval_in_place(g, &mut value);
    Ok(g.primary_outputs().iter().map(|&o| value[o]).collect())
}

fn eval_in_place(g: &AigGraph, value: &mut [u64]) {
    for &v in g.topological_order() {
        let node = g.node(v);
        let lit = |i: usize| {
            let f = node.fanins()[i];
            let w = value[f.node];
            if f.inverted {
                !w
            } else {
                w
            }
        };
        match node.kind {
            NodeKind::Input => {}
            NodeKind::Constant => value[v] = 0,
            NodeKind::And => value[v] = lit(0) & lit(1),
            NodeKind::Output => value[v] = lit(0),
        }
    }
}

/// Fills the simulation words for input `var` of an exhaustive enumeration of
/// `num_inputs` variables. Pattern `p` assigns bit `var` of `p` to the input.
pub fn exhaustive_input_words(var: usize, num_inputs: usize) -> Vec<u64> {
    let patterns = 1usize << num_inputs;
    let words = patterns.div_ceil(64);
    (0..words)
        .map(|w| {
            let mut word = 0u64;
            for bit in 0..64 {
                let p = w * 64 + bit;
                if p < patterns && (p >> var) & 1 == 1 {
                    word |= 1 << bit;
                }
            }
            word
        })
        .collect()
}

/// Complete truth tables of every primary output, one `Vec<u64>` per output
/// (pattern `p` at bit `p % 64` of word `p / 64`; unused high bits are zero).
pub fn exhaustive_truth_tables(g: &AigGraph) -> Result<Vec<Vec<u64>>> {
    let k = g.primary_inputs().len();
    if k > MAX_EXHAUSTIVE_INPUTS {
        return Err(AigError::TooManyInputs(k));
    }
    let patterns = 1usize << k;
    let words = patterns.div_ceil(64);
    let tail_mask = if patterns.is_multiple_of(64) {
        !0u64
    } else {
        (1u64 << (patterns % 64)) - 1
    };
    let input_words: Vec<Vec<u64>> = (0..k).map(|v| exhaustive_input_words(v, k)).collect();
    let mut tables = vec![vec![0u64; words]; g.primary_outputs().len()];
    let mut value = vec![0u64; g.num_nodes()];
    for w in 0..words {
        for (i, &pi) in g.primary_inputs().iter().enumerate() {
            value[pi] = input_words[i][w];
        }
        eval_in_place(g, &mut value);
        for (t, &o) in tables.iter_mut().zip(g.primary_outputs()) {
            t[w] = value[o] & if w + 1 == words { tail_mask } else { !0 };
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AigNode, Fanin};

    fn and2(out_inverted: bool) -> AigGraph {
        AigGraph::new(
            "g",
            vec![
                AigNode::input(),
                AigNode::input(),
                AigNode::and(Fanin::buffer(0), Fanin::buffer(1)),
                AigNode::output(Fanin::new(2, out_inverted)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn and_gate() {
        let g = and2(false);
        assert_eq!(simulate(&g, &[true, true]).unwrap(), vec![true]);
        assert_eq!(simulate(&g, &[true, false]).unwrap(), vec![false]);
    }

    #[test]
    fn assignment_length_checked() {
        assert!(matches!(
            simulate(&and2(false), &[true]),
            Err(AigError::AssignmentLength { .. })
        ));
    }

    #[test]
    fn nand_truth_table() {
        let tt = exhaustive_truth_tables(&and2(true)).unwrap();
        // patterns 00,10,01,11 -> 1,1,1,0
        assert_eq!(tt, vec![vec![0b0111]]);
    }

    #[test]
    fn constant_node_is_false() {
        let g = AigGraph::new(
            "c",
            vec![
                AigNode::constant(),
                AigNode::input(),
                AigNode::output(Fanin::inverter(0)),
                AigNode::output(Fanin::buffer(0)),
            ],
        )
        .unwrap();
        assert_eq!(simulate(&g, &[false]).unwrap(), vec![true, false]);
    }

    #[test]
    fn exhaustive_words_large() {
        let w = exhaustive_input_words(7, 8);
        assert_eq!(w.len(), 4);
        assert_eq!(w, vec![0, 0, !0, !0]);
    }
}
