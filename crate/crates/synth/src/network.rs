//! Compact literal-based AIG used internally by the optimization passes.
//!
//! Variable 0 is constant false, variables `1..=num_inputs` are the primary
//! inputs and every later variable is an AND whose fan-ins have smaller
//! indices. A literal is `var << 1 | complemented`.

use std::collections::HashMap;

use lsoformer_aig::{AigGraph, AigNode, Fanin, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    pub fn new(var: u32, complemented: bool) -> Self {
        Lit(var << 1 | complemented as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn regular(self) -> Lit {
        Lit(self.0 & !1)
    }

    pub fn negate_if(self, c: bool) -> Lit {
        Lit(self.0 ^ c as u32)
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Network {
    num_inputs: usize,
    ands: Vec<[Lit; 2]>,
    outputs: Vec<Lit>,
}

impl Network {
    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_vars(&self) -> usize {
        1 + self.num_inputs + self.ands.len()
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    pub fn outputs(&self) -> &[Lit] {
        &self.outputs
    }

    pub fn first_and(&self) -> u32 {
        (1 + self.num_inputs) as u32
    }

    pub fn is_and(&self, var: u32) -> bool {
        var >= self.first_and()
    }

    pub fn is_input(&self, var: u32) -> bool {
        var >= 1 && (var as usize) <= self.num_inputs
    }

    pub fn fanins(&self, var: u32) -> [Lit; 2] {
        self.ands[(var - self.first_and()) as usize]
    }

    pub fn and_vars(&self) -> std::ops::Range<u32> {
        self.first_and()..self.num_vars() as u32
    }

    /// Per-variable levels (inputs and constant at 0).
    pub fn levels(&self) -> Vec<u32> {
        let mut level = vec![0u32; self.num_vars()];
        for v in self.and_vars() {
            let [a, b] = self.fanins(v);
            level[v as usize] = 1 + level[a.var() as usize].max(level[b.var() as usize]);
        }
        level
    }

    /// Depth of the equivalent [`AigGraph`], output nodes included.
    pub fn depth(&self) -> usize {
        let level = self.levels();
        let ands = level[self.first_and() as usize..].iter().copied().max().unwrap_or(0);
        let outs = self
            .outputs
            .iter()
            .map(|o| level[o.var() as usize] + 1)
            .max()
            .unwrap_or(0);
        ands.max(outs) as usize
    }

    /// Fan-out counts (AND fan-ins and outputs).
    pub fn refs(&self) -> Vec<u32> {
        let mut refs = vec![0u32; self.num_vars()];
        for f in self.ands.iter().flatten() {
            refs[f.var() as usize] += 1;
        }
        for o in &self.outputs {
            refs[o.var() as usize] += 1;
        }
        refs
    }

    /// Removes ANDs that no output depends on, keeping the relative order.
    pub fn cleanup(&self) -> Network {
        let n = self.num_vars();
        let mut live = vec![false; n];
        for o in &self.outputs {
            live[o.var() as usize] = true;
        }
        for v in self.and_vars().rev() {
            if live[v as usize] {
                for f in self.fanins(v) {
                    live[f.var() as usize] = true;
                }
            }
        }
        let mut new_var = vec![0u32; n];
        for (v, nv) in new_var.iter_mut().enumerate().take(1 + self.num_inputs) {
            *nv = v as u32;
        }
        let map = |l: Lit, new_var: &[u32]| Lit::new(new_var[l.var() as usize], l.is_complemented());
        let mut ands = Vec::with_capacity(self.ands.len());
        let mut next = self.first_and();
        for v in self.and_vars() {
            if live[v as usize] {
                let [a, b] = self.fanins(v);
                ands.push([map(a, &new_var), map(b, &new_var)]);
                new_var[v as usize] = next;
                next += 1;
            }
        }
        Network {
            num_inputs: self.num_inputs,
            outputs: self.outputs.iter().map(|&o| map(o, &new_var)).collect(),
            ands,
        }
    }

    /// Imports a graph. ANDs are numbered in the graph's topological order,
    /// inputs and outputs keep their storage order.
    pub fn from_graph(g: &AigGraph) -> Network {
        let mut var_of = vec![0u32; g.num_nodes()];
        for (i, &pi) in g.primary_inputs().iter().enumerate() {
            var_of[pi] = 1 + i as u32;
        }
        let mut next = 1 + g.primary_inputs().len() as u32;
        let mut ands = Vec::with_capacity(g.num_ands());
        let lit = |f: Fanin, var_of: &[u32]| Lit::new(var_of[f.node], f.inverted);
        for &v in g.topological_order() {
            let node = g.node(v);
            if node.kind == NodeKind::And {
                let f = node.fanins();
                ands.push([lit(f[0], &var_of), lit(f[1], &var_of)]);
                var_of[v] = next;
                next += 1;
            }
        }
        let outputs = g
            .primary_outputs()
            .iter()
            .map(|&o| lit(g.node(o).fanins()[0], &var_of))
            .collect();
        Network {
            num_inputs: g.primary_inputs().len(),
            ands,
            outputs,
        }
    }

    /// Exports with the layout: constant (only if referenced), inputs, ANDs,
    /// outputs.
    pub fn to_graph(&self, name: &str) -> AigGraph {
        let uses_const = self
            .ands
            .iter()
            .flatten()
            .chain(&self.outputs)
            .any(|l| l.var() == 0);
        let offset = usize::from(!uses_const);
        let node_of = |var: u32| var as usize - offset;
        let fanin = |l: Lit| Fanin::new(node_of(l.var()), l.is_complemented());
        let mut nodes = Vec::with_capacity(self.num_vars() + self.outputs.len());
        if uses_const {
            nodes.push(AigNode::constant());
        }
        nodes.extend((0..self.num_inputs).map(|_| AigNode::input()));
        for &[a, b] in &self.ands {
            nodes.push(AigNode::and(fanin(a), fanin(b)));
        }
        for &o in &self.outputs {
            nodes.push(AigNode::output(fanin(o)));
        }
        AigGraph::new(name, nodes).expect("network export is always valid")
    }

    /// Bit-parallel simulation of all variables for the given input words.
    pub fn simulate(&self, inputs: &[u64]) -> Vec<u64> {
        let mut value = vec![0u64; self.num_vars()];
        value[1..=self.num_inputs].copy_from_slice(inputs);
        for v in self.and_vars() {
            let [a, b] = self.fanins(v);
            value[v as usize] = lit_value(&value, a) & lit_value(&value, b);
        }
        value
    }
}

pub(crate) fn lit_value(value: &[u64], l: Lit) -> u64 {
    let w = value[l.var() as usize];
    if l.is_complemented() {
        !w
    } else {
        w
    }
}

/// Incremental network construction with structural hashing and the trivial
/// simplifications `x & 0 = 0`, `x & 1 = x`, `x & x = x`, `x & !x = 0`.
#[derive(Debug, Clone)]
pub struct Builder {
    num_inputs: usize,
    ands: Vec<[Lit; 2]>,
    levels: Vec<u32>,
    strash: HashMap<[Lit; 2], u32>,
}

/// Outcome of a builder lookup that does not create anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Existing(Lit),
    New { level: u32 },
}

impl Builder {
    pub fn new(num_inputs: usize) -> Self {
        Builder {
            num_inputs,
            ands: Vec::new(),
            levels: vec![0; 1 + num_inputs],
            strash: HashMap::new(),
        }
    }

    pub fn input(&self, i: usize) -> Lit {
        Lit::new(1 + i as u32, false)
    }

    pub fn level(&self, l: Lit) -> u32 {
        self.levels[l.var() as usize]
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    fn normalize(a: Lit, b: Lit) -> Result<[Lit; 2], Lit> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Lit::FALSE {
            Err(Lit::FALSE)
        } else if a == Lit::TRUE || a == b {
            Err(b)
        } else if a == !b {
            Err(Lit::FALSE)
        } else {
            Ok([a, b])
        }
    }

    /// What `and(a, b)` would return, without creating a node.
    pub fn probe(&self, a: Lit, b: Lit) -> Probe {
        match Self::normalize(a, b) {
            Err(l) => Probe::Existing(l),
            Ok(key) => match self.strash.get(&key) {
                Some(&v) => Probe::Existing(Lit::new(v, false)),
                None => Probe::New {
                    level: 1 + self.level(key[0]).max(self.level(key[1])),
                },
            },
        }
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        match Self::normalize(a, b) {
            Err(l) => l,
            Ok(key) => {
                if let Some(&v) = self.strash.get(&key) {
                    return Lit::new(v, false);
                }
                let var = (1 + self.num_inputs + self.ands.len()) as u32;
                self.levels
                    .push(1 + self.level(key[0]).max(self.level(key[1])));
                self.ands.push(key);
                self.strash.insert(key, var);
                Lit::new(var, false)
            }
        }
    }

    /// Finishes construction and removes dangling nodes.
    pub fn finish(self, outputs: Vec<Lit>) -> Network {
        Network {
            num_inputs: self.num_inputs,
            ands: self.ands,
            outputs,
        }
        .cleanup()
    }
}
