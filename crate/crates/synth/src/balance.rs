//! Depth-oriented re-association of AND super-gates.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::network::{Builder, Lit, Network};

/// One balancing sweep. A super-gate is a maximal cone of non-complemented,
/// single-fanout ANDs; its leaves are recombined as a minimum-depth tree,
/// pairing the two shallowest operands first.
pub(crate) fn sweep(net: &Network) -> Network {
    let refs = net.refs();
    let mut absorbed = vec![false; net.num_vars()];
    for v in net.and_vars() {
        for f in net.fanins(v) {
            if !f.is_complemented() && net.is_and(f.var()) && refs[f.var() as usize] == 1 {
                absorbed[f.var() as usize] = true;
            }
        }
    }

    let mut b = Builder::new(net.num_inputs());
    let mut map: Vec<Lit> = (0..net.num_vars() as u32).map(|v| Lit::new(v, false)).collect();
    let mut stack = Vec::new();
    let mut leaves = Vec::new();
    for v in net.and_vars() {
        if absorbed[v as usize] {
            continue;
        }
        leaves.clear();
        stack.clear();
        stack.extend(net.fanins(v));
        while let Some(l) = stack.pop() {
            if !l.is_complemented() && absorbed[l.var() as usize] {
                stack.extend(net.fanins(l.var()));
            } else {
                leaves.push(map[l.var() as usize].negate_if(l.is_complemented()));
            }
        }
        map[v as usize] = and_tree(&mut b, &mut leaves);
    }
    let outputs = net
        .outputs()
        .iter()
        .map(|o| map[o.var() as usize].negate_if(o.is_complemented()))
        .collect();
    b.finish(outputs)
}

/// Minimum-depth conjunction of `leaves` (consumed).
pub(crate) fn and_tree(b: &mut Builder, leaves: &mut Vec<Lit>) -> Lit {
    leaves.sort_unstable();
    leaves.dedup();
    if leaves.windows(2).any(|w| w[1] == !w[0]) || leaves.first() == Some(&Lit::FALSE) {
        return Lit::FALSE;
    }
    leaves.retain(|&l| l != Lit::TRUE);
    let mut heap: BinaryHeap<Reverse<(u32, Lit)>> =
        leaves.iter().map(|&l| Reverse((b.level(l), l))).collect();
    loop {
        let Some(Reverse((_, x))) = heap.pop() else {
            return Lit::TRUE;
        };
        let Some(Reverse((_, y))) = heap.pop() else {
            return x;
        };
        let z = b.and(x, y);
        heap.push(Reverse((b.level(z), z)));
    }
}
