//! Resubstitution: re-express a node with divisors already in the network.

use std::collections::{HashMap, HashSet, VecDeque};

use lsoformer_aig::sim::exhaustive_input_words;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{lit_value, Builder, Lit, Network, Probe};
use crate::refactor::mffc;

const SIGNATURE_SEED: u64 = 0x5eed_5eed;
pub(crate) const MAX_EXACT_INPUTS: usize = 12;
const DIVISOR_DEPTH: usize = 3;
const MAX_DIVISORS: usize = 24;

/// Sorted primary-input support of every variable, or `None` above the
/// exact-check limit.
fn supports(net: &Network) -> Vec<Option<Vec<u32>>> {
    let mut sup: Vec<Option<Vec<u32>>> = Vec::with_capacity(net.num_vars());
    sup.push(Some(Vec::new()));
    for v in 1..=net.num_inputs() as u32 {
        sup.push(Some(vec![v]));
    }
    for v in net.and_vars() {
        let [a, b] = net.fanins(v);
        let merged = match (&sup[a.var() as usize], &sup[b.var() as usize]) {
            (Some(x), Some(y)) => Some(union(x, y)).filter(|u| u.len() <= MAX_EXACT_INPUTS),
            _ => None,
        };
        sup.push(merged);
    }
    sup
}

fn union(x: &[u32], y: &[u32]) -> Vec<u32> {
    let mut u: Vec<u32> = x.iter().chain(y).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// Exhaustive simulation of `roots` over the union of their supports.
fn exhaustive(net: &Network, sup: &[Option<Vec<u32>>], roots: &[u32]) -> Option<Vec<Vec<u64>>> {
    let mut inputs: Vec<u32> = Vec::new();
    for &r in roots {
        inputs = union(&inputs, sup[r as usize].as_ref()?);
    }
    if inputs.len() > MAX_EXACT_INPUTS {
        return None;
    }
    let k = inputs.len();
    let mut seen = HashSet::new();
    let mut cone = Vec::new();
    let mut stack: Vec<u32> = roots.to_vec();
    while let Some(v) = stack.pop() {
        if !net.is_and(v) || !seen.insert(v) {
            continue;
        }
        cone.push(v);
        stack.extend(net.fanins(v).iter().map(|f| f.var()));
    }
    cone.sort_unstable();
    let words = (1usize << k).div_ceil(64);
    let mut val: HashMap<u32, Vec<u64>> = HashMap::new();
    val.insert(0, vec![0; words]);
    for (i, &pi) in inputs.iter().enumerate() {
        val.insert(pi, exhaustive_input_words(i, k));
    }
    for v in cone {
        let [a, b] = net.fanins(v);
        let word = |l: Lit, i: usize, val: &HashMap<u32, Vec<u64>>| {
            let w = val[&l.var()][i];
            if l.is_complemented() {
                !w
            } else {
                w
            }
        };
        let w: Vec<u64> = (0..words).map(|i| word(a, i, &val) & word(b, i, &val)).collect();
        val.insert(v, w);
    }
    Some(roots.iter().map(|r| val[r].clone()).collect())
}

fn signatures(net: &Network) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SIGNATURE_SEED);
    let inputs: Vec<u64> = (0..net.num_inputs()).map(|_| rng.gen()).collect();
    net.simulate(&inputs)
}

/// Divisors near `root`: its transitive fan-in up to a few levels, minus the
/// cone that dies with it.
fn divisors(net: &Network, root: u32, dying: &HashSet<u32>) -> Vec<u32> {
    let mut out = Vec::new();
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([(root, 0usize)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == DIVISOR_DEPTH || !net.is_and(v) {
            continue;
        }
        for f in net.fanins(v) {
            let u = f.var();
            if u == 0 || !seen.insert(u) {
                continue;
            }
            if !dying.contains(&u) {
                out.push(u);
                if out.len() == MAX_DIVISORS {
                    out.sort_unstable();
                    return out;
                }
            }
            queue.push_back((u, d + 1));
        }
    }
    out.sort_unstable();
    out
}

pub(crate) fn sweep(net: &Network, zero_gain: bool) -> Network {
    let sig = signatures(net);
    let sup = supports(net);
    let mut refs = net.refs();
    let mut b = Builder::new(net.num_inputs());
    let mut map: Vec<Lit> = (0..net.num_vars() as u32).map(|v| Lit::new(v, false)).collect();
    let m = |map: &[Lit], l: Lit| map[l.var() as usize].negate_if(l.is_complemented());
    let norm = |s: u64| if s & 1 == 1 { !s } else { s };

    let mut classes: HashMap<u64, Vec<u32>> = HashMap::new();
    for v in 0..=net.num_inputs() as u32 {
        classes.entry(norm(sig[v as usize])).or_default().push(v);
    }

    for v in net.and_vars() {
        let s = sig[v as usize];
        let [x, y] = net.fanins(v);
        let mut replacement = None;

        if let Some(class) = classes.get(&norm(s)) {
            for &u in class {
                let compl = sig[u as usize] != s;
                if let Some(tt) = exhaustive(net, &sup, &[v, u]) {
                    let same = tt[0].iter().zip(&tt[1]).all(|(p, q)| *p == if compl { !*q } else { *q });
                    if same {
                        replacement = Some(map[u as usize].negate_if(compl));
                        break;
                    }
                }
            }
        }

        if replacement.is_none() {
            let cone = mffc(net, &mut refs, v, &[]);
            let needed = if zero_gain { 1 } else { 2 };
            if cone.len() >= needed {
                let dying: HashSet<u32> = cone.iter().copied().collect();
                replacement = one_resub(net, &sig, &sup, &map, &b, v, &divisors(net, v, &dying), cone.len(), zero_gain)
                    .map(|(p, q, compl)| b.and(p, q).negate_if(compl));
            }
        }

        match replacement {
            Some(l) => map[v as usize] = l,
            None => {
                map[v as usize] = b.and(m(&map, x), m(&map, y));
                classes.entry(norm(s)).or_default().push(v);
            }
        }
    }
    let outputs = net.outputs().iter().map(|&o| m(&map, o)).collect();
    b.finish(outputs)
}

/// Finds `v == (d1 ^ p1) & (d2 ^ p2)` up to output complement. Returns the
/// two mapped operands and the output complement.
#[allow(clippy::too_many_arguments)]
fn one_resub(
    net: &Network,
    sig: &[u64],
    sup: &[Option<Vec<u32>>],
    map: &[Lit],
    b: &Builder,
    v: u32,
    divs: &[u32],
    saved: usize,
    zero_gain: bool,
) -> Option<(Lit, Lit, bool)> {
    let s = sig[v as usize];
    let [x, y] = net.fanins(v);
    for (i, &d1) in divs.iter().enumerate() {
        for &d2 in &divs[i + 1..] {
            for (p1, p2) in [(false, false), (false, true), (true, false), (true, true)] {
                let l1 = Lit::new(d1, p1);
                let l2 = Lit::new(d2, p2);
                let w = lit_value(sig, l1) & lit_value(sig, l2);
                let compl = if w == s {
                    false
                } else if w == !s {
                    true
                } else {
                    continue;
                };
                if !compl && ((l1, l2) == (x, y) || (l2, l1) == (x, y)) {
                    continue;
                }
                let (o1, o2) = (map[d1 as usize].negate_if(p1), map[d2 as usize].negate_if(p2));
                let added = match b.probe(o1, o2) {
                    Probe::Existing(_) => 0,
                    Probe::New { .. } => 1,
                };
                let gain = saved as i64 - added;
                if gain <= 0 && !(zero_gain && gain == 0) {
                    continue;
                }
                let Some(tt) = exhaustive(net, sup, &[v, d1, d2]) else {
                    continue;
                };
                let ok = (0..tt[0].len()).all(|k| {
                    let a = if p1 { !tt[1][k] } else { tt[1][k] };
                    let c = if p2 { !tt[2][k] } else { tt[2][k] };
                    let f = a & c;
                    tt[0][k] == if compl { !f } else { f }
                });
                if ok {
                    return Some((o1, o2, compl));
                }
            }
        }
    }
    None
}
