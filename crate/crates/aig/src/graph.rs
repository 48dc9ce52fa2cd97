use crate::error::{AigError, Result};

/// Semantic node type.
///
/// `Constant` is the constant-false node. It only appears when some edge
/// references it and is featurized like a primary input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Input,
    And,
    Output,
    Constant,
}

impl NodeKind {
    /// Categorical node-type feature in `{0, 1, 2}` (input, and, output).
    pub fn type_feature(self) -> usize {
        match self {
            NodeKind::Input | NodeKind::Constant => 0,
            NodeKind::And => 1,
            NodeKind::Output => 2,
        }
    }

    fn expected_fanins(self) -> usize {
        match self {
            NodeKind::Input | NodeKind::Constant => 0,
            NodeKind::And => 2,
            NodeKind::Output => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Buffer,
    Inverter,
}

impl Polarity {
    pub fn from_inverted(inverted: bool) -> Self {
        if inverted {
            Polarity::Inverter
        } else {
            Polarity::Buffer
        }
    }

    pub fn is_inverted(self) -> bool {
        self == Polarity::Inverter
    }
}

/// One incoming edge of a node: the driving node and the edge polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fanin {
    pub node: usize,
    pub inverted: bool,
}

impl Fanin {
    pub fn new(node: usize, inverted: bool) -> Self {
        Fanin { node, inverted }
    }

    pub fn buffer(node: usize) -> Self {
        Fanin::new(node, false)
    }

    pub fn inverter(node: usize) -> Self {
        Fanin::new(node, true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AigNode {
    pub kind: NodeKind,
    fanins: Vec<Fanin>,
}

impl AigNode {
    pub fn input() -> Self {
        AigNode {
            kind: NodeKind::Input,
            fanins: Vec::new(),
        }
    }

    pub fn constant() -> Self {
        AigNode {
            kind: NodeKind::Constant,
            fanins: Vec::new(),
        }
    }

    pub fn and(a: Fanin, b: Fanin) -> Self {
        AigNode {
            kind: NodeKind::And,
            fanins: vec![a, b],
        }
    }

    pub fn output(driver: Fanin) -> Self {
        AigNode {
            kind: NodeKind::Output,
            fanins: vec![driver],
        }
    }

    pub fn fanins(&self) -> &[Fanin] {
        &self.fanins
    }

    pub(crate) fn fanins_mut(&mut self) -> &mut Vec<Fanin> {
        &mut self.fanins
    }

    /// Number of incoming edges carrying an inverter.
    pub fn inverted_preds(&self) -> usize {
        self.fanins.iter().filter(|f| f.inverted).count()
    }
}

/// A directed edge `source -> target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub polarity: Polarity,
}

/// A validated, immutable And-Inverter Graph.
///
/// Node identity is the storage index. Storage order is not required to be
/// topological; a topological order is computed once at construction.
#[derive(Debug, Clone)]
pub struct AigGraph {
    name: String,
    nodes: Vec<AigNode>,
    primary_inputs: Vec<usize>,
    primary_outputs: Vec<usize>,
    topo: Vec<usize>,
}

impl PartialEq for AigGraph {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes
    }
}

impl Eq for AigGraph {}

impl AigGraph {
    pub fn new(name: impl Into<String>, nodes: Vec<AigNode>) -> Result<Self> {
        let n = nodes.len();
        let mut constants = 0;
        for (idx, node) in nodes.iter().enumerate() {
            let expected = node.kind.expected_fanins();
            if node.fanins.len() != expected {
                return Err(AigError::Invalid(format!(
                    "node {idx} ({:?}) has {} fan-ins, expected {expected}",
                    node.kind,
                    node.fanins.len()
                )));
            }
            if node.kind == NodeKind::Constant {
                constants += 1;
            }
            for f in &node.fanins {
                if f.node >= n {
                    return Err(AigError::Invalid(format!(
                        "node {idx} references missing node {}",
                        f.node
                    )));
                }
                if f.node == idx {
                    return Err(AigError::Invalid(format!("node {idx} has a self-loop")));
                }
                if nodes[f.node].kind == NodeKind::Output {
                    return Err(AigError::Invalid(format!(
                        "node {idx} is driven by output node {}",
                        f.node
                    )));
                }
            }
        }
        if constants > 1 {
            return Err(AigError::Invalid("more than one constant node".into()));
        }
        let topo = topological_order(&nodes)
            .map_err(|node| AigError::Cycle(format!("node {node}")))?;
        let primary_inputs = indices_of(&nodes, NodeKind::Input);
        let primary_outputs = indices_of(&nodes, NodeKind::Output);
        Ok(AigGraph {
            name: name.into(),
            nodes,
            primary_inputs,
            primary_outputs,
            topo,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn nodes(&self) -> &[AigNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &AigNode {
        &self.nodes[idx]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.iter().map(|n| n.fanins.len()).sum()
    }

    pub fn num_ands(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::And).count()
    }

    /// Edges grouped by target in storage order, each group in fan-in order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::with_capacity(self.num_edges());
        for (target, node) in self.nodes.iter().enumerate() {
            for f in &node.fanins {
                edges.push(Edge {
                    source: f.node,
                    target,
                    polarity: Polarity::from_inverted(f.inverted),
                });
            }
        }
        edges
    }

    pub fn primary_inputs(&self) -> &[usize] {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &[usize] {
        &self.primary_outputs
    }

    /// Index of the constant node, if the graph has one.
    pub fn constant_node(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == NodeKind::Constant)
    }

    /// A topological order of the nodes (fan-ins before fan-outs).
    ///
    /// When the storage order is already topological this is the identity.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Fan-out lists, indexed by source node.
    pub fn fanouts(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (target, node) in self.nodes.iter().enumerate() {
            for f in &node.fanins {
                out[f.node].push(target);
            }
        }
        out
    }

    /// Relabels nodes: node `i` moves to storage slot `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<AigGraph> {
        let n = self.nodes.len();
        if perm.len() != n {
            return Err(AigError::Invalid("permutation length mismatch".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(AigError::Invalid("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut nodes = vec![AigNode::input(); n];
        for (old, node) in self.nodes.iter().enumerate() {
            nodes[perm[old]] = AigNode {
                kind: node.kind,
                fanins: node
                    .fanins
                    .iter()
                    .map(|f| Fanin::new(perm[f.node], f.inverted))
                    .collect(),
            };
        }
        AigGraph::new(self.name.clone(), nodes)
    }
}

fn indices_of(nodes: &[AigNode], kind: NodeKind) -> Vec<usize> {
    nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == kind)
        .map(|(i, _)| i)
        .collect()
}

/// Stable depth-first topological sort. Visits nodes in storage order and
/// fan-ins in fan-in order, so a storage order that is already topological is
/// returned unchanged. On failure returns a node that lies on a cycle.
pub(crate) fn topological_order(nodes: &[AigNode]) -> std::result::Result<Vec<usize>, usize> {
    const UNSEEN: u8 = 0;
    const OPEN: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![UNSEEN; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..nodes.len() {
        if state[root] != UNSEEN {
            continue;
        }
        state[root] = OPEN;
        stack.push((root, 0));
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(f) = nodes[node].fanins.get(*next) {
                *next += 1;
                match state[f.node] {
                    UNSEEN => {
                        state[f.node] = OPEN;
                        stack.push((f.node, 0));
                    }
                    OPEN => return Err(f.node),
                    _ => {}
                }
            } else {
                state[node] = DONE;
                order.push(node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_and() -> AigGraph {
        AigGraph::new(
            "and2",
            vec![
                AigNode::input(),
                AigNode::input(),
                AigNode::and(Fanin::buffer(0), Fanin::buffer(1)),
                AigNode::output(Fanin::buffer(2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn counts_and_edges() {
        let g = one_and();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.primary_inputs(), &[0, 1]);
        assert_eq!(g.primary_outputs(), &[3]);
        assert_eq!(g.topological_order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn rejects_wrong_fanin_count() {
        let err = AigGraph::new("bad", vec![AigNode::input(), AigNode::output(Fanin::buffer(0)), {
            let mut n = AigNode::output(Fanin::buffer(0));
            n.kind = NodeKind::And;
            n
        }]);
        assert!(matches!(err, Err(AigError::Invalid(_))));
    }

    #[test]
    fn rejects_self_loop_and_cycle() {
        let self_loop = AigGraph::new(
            "s",
            vec![AigNode::input(), AigNode::and(Fanin::buffer(0), Fanin::buffer(1))],
        );
        assert!(matches!(self_loop, Err(AigError::Invalid(_))));

        let cycle = AigGraph::new(
            "c",
            vec![
                AigNode::input(),
                AigNode::and(Fanin::buffer(0), Fanin::buffer(2)),
                AigNode::and(Fanin::buffer(0), Fanin::buffer(1)),
            ],
        );
        assert!(matches!(cycle, Err(AigError::Cycle(_))));
    }

    #[test]
    fn rejects_output_fanout() {
        let g = AigGraph::new(
            "o",
            vec![
                AigNode::input(),
                AigNode::output(Fanin::buffer(0)),
                AigNode::output(Fanin::buffer(1)),
            ],
        );
        assert!(g.is_err());
    }

    #[test]
    fn inverted_preds_counts_inverters() {
        let n = AigNode::and(Fanin::inverter(0), Fanin::inverter(1));
        assert_eq!(n.inverted_preds(), 2);
        assert_eq!(AigNode::output(Fanin::inverter(2)).inverted_preds(), 1);
    }

    #[test]
    fn permutation_remaps_fanins() {
        let g = one_and();
        let p = g.permuted(&[3, 2, 1, 0]).unwrap();
        assert_eq!(p.node(1).kind, NodeKind::And);
        assert_eq!(p.node(1).fanins(), &[Fanin::buffer(3), Fanin::buffer(2)]);
        assert_eq!(p.node(0).fanins(), &[Fanin::buffer(1)]);
        assert_eq!(p.num_edges(), 3);
    }
}
