//! Cone re-expression over enumerated 4-input cuts.

use std::collections::HashMap;

use crate::network::{Builder, Lit, Network, Probe};
use crate::truth::{build, dry_run, resynthesize, Expr, VAR_TT};

pub(crate) const CUT_SIZE: usize = 4;
pub(crate) const CUTS_PER_NODE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Cut {
    len: u8,
    leaves: [u32; CUT_SIZE],
}

impl Cut {
    fn unit(var: u32) -> Cut {
        let mut leaves = [0; CUT_SIZE];
        leaves[0] = var;
        Cut { len: 1, leaves }
    }

    fn empty() -> Cut {
        Cut {
            len: 0,
            leaves: [0; CUT_SIZE],
        }
    }

    pub(crate) fn leaves(&self) -> &[u32] {
        &self.leaves[..self.len as usize]
    }

    fn merge(a: &Cut, b: &Cut) -> Option<Cut> {
        let (x, y) = (a.leaves(), b.leaves());
        let mut out = Cut::empty();
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            let next = match (x.get(i), y.get(j)) {
                (Some(&p), Some(&q)) if p == q => {
                    i += 1;
                    j += 1;
                    p
                }
                (Some(&p), Some(&q)) if p < q => {
                    i += 1;
                    p
                }
                (Some(&p), None) => {
                    i += 1;
                    p
                }
                (_, Some(&q)) => {
                    j += 1;
                    q
                }
                (None, None) => unreachable!(),
            };
            if out.len as usize == CUT_SIZE {
                return None;
            }
            out.leaves[out.len as usize] = next;
            out.len += 1;
        }
        Some(out)
    }

    fn subset_of(&self, other: &Cut) -> bool {
        self.leaves().iter().all(|l| other.leaves().contains(l))
    }
}

/// Priority cuts per variable. The last entry of every AND's list is its
/// trivial cut.
pub(crate) fn enumerate_cuts(net: &Network) -> Vec<Vec<Cut>> {
    let mut cuts: Vec<Vec<Cut>> = Vec::with_capacity(net.num_vars());
    cuts.push(vec![Cut::empty()]);
    for v in 1..=net.num_inputs() as u32 {
        cuts.push(vec![Cut::unit(v)]);
    }
    for v in net.and_vars() {
        let [a, b] = net.fanins(v);
        let mut found: Vec<Cut> = Vec::new();
        for ca in &cuts[a.var() as usize] {
            for cb in &cuts[b.var() as usize] {
                if let Some(c) = Cut::merge(ca, cb) {
                    found.push(c);
                }
            }
        }
        found.sort_unstable();
        found.dedup();
        let mut kept: Vec<Cut> = Vec::new();
        for c in found {
            if !kept.iter().any(|k| k.subset_of(&c)) {
                kept.push(c);
            }
        }
        kept.truncate(CUTS_PER_NODE);
        kept.push(Cut::unit(v));
        cuts.push(kept);
    }
    cuts
}

/// Truth table of `root` over the leaves of `cut`.
pub(crate) fn cut_truth(net: &Network, root: u32, cut: &Cut) -> u16 {
    fn eval(net: &Network, v: u32, cut: &Cut, memo: &mut HashMap<u32, u16>) -> u16 {
        if let Some(i) = cut.leaves().iter().position(|&l| l == v) {
            return VAR_TT[i];
        }
        if v == 0 {
            return 0;
        }
        if let Some(&t) = memo.get(&v) {
            return t;
        }
        let [a, b] = net.fanins(v);
        let ta = eval(net, a.var(), cut, memo) ^ if a.is_complemented() { 0xFFFF } else { 0 };
        let tb = eval(net, b.var(), cut, memo) ^ if b.is_complemented() { 0xFFFF } else { 0 };
        memo.insert(v, ta & tb);
        ta & tb
    }
    eval(net, root, cut, &mut HashMap::new())
}

/// Nodes of the maximum fan-out-free cone of `root`, stopping at `leaves`.
/// `refs` is restored before returning.
pub(crate) fn mffc(net: &Network, refs: &mut [u32], root: u32, leaves: &[u32]) -> Vec<u32> {
    let mut cone = Vec::new();
    let mut touched = Vec::new();
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        cone.push(v);
        for f in net.fanins(v) {
            let u = f.var();
            if !net.is_and(u) || leaves.contains(&u) {
                continue;
            }
            refs[u as usize] -= 1;
            touched.push(u);
            if refs[u as usize] == 0 {
                stack.push(u);
            }
        }
    }
    for u in touched {
        refs[u as usize] += 1;
    }
    cone
}

pub(crate) fn sweep(net: &Network, zero_gain: bool) -> Network {
    let cuts = enumerate_cuts(net);
    let mut refs = net.refs();
    let mut b = Builder::new(net.num_inputs());
    let mut map: Vec<Lit> = (0..net.num_vars() as u32).map(|v| Lit::new(v, false)).collect();
    let m = |map: &[Lit], l: Lit| map[l.var() as usize].negate_if(l.is_complemented());
    for v in net.and_vars() {
        let [x, y] = net.fanins(v);
        let (mx, my) = (m(&map, x), m(&map, y));
        let default_level = match b.probe(mx, my) {
            Probe::Existing(l) => b.level(l),
            Probe::New { level } => level,
        };
        let node_cuts = &cuts[v as usize];
        let mut best: Option<(i64, u32, Expr, Vec<Lit>)> = None;
        for cut in &node_cuts[..node_cuts.len() - 1] {
            let expr = resynthesize(cut_truth(net, v, cut));
            let leaves: Vec<Lit> = cut.leaves().iter().map(|&u| map[u as usize]).collect();
            let (added, level) = dry_run(&b, &expr, &leaves);
            let saved = mffc(net, &mut refs, v, cut.leaves()).len();
            let gain = saved as i64 - added as i64;
            let acceptable = gain > 0 || (gain == 0 && (level < default_level || zero_gain && level <= default_level));
            if !acceptable {
                continue;
            }
            let better = match &best {
                None => true,
                Some((g, l, _, _)) => (gain, std::cmp::Reverse(level)) > (*g, std::cmp::Reverse(*l)),
            };
            if better {
                best = Some((gain, level, expr, leaves));
            }
        }
        map[v as usize] = match best {
            Some((_, _, expr, leaves)) => build(&mut b, &expr, &leaves),
            None => b.and(mx, my),
        };
    }
    let outputs = net.outputs().iter().map(|&o| m(&map, o)).collect();
    b.finish(outputs)
}
