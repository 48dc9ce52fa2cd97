use crate::graph::AigGraph;

/// Longest-path depth of every node; primary inputs (and the constant) sit
/// at level 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelIndex {
    level_of: Vec<usize>,
    max_depth: usize,
}

impl LevelIndex {
    pub fn level_of(&self, node: usize) -> usize {
        self.level_of[node]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.level_of
    }

    /// `D`, the largest level over all nodes (outputs included).
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Number of populated levels, `D + 1` for non-empty graphs.
    pub fn num_levels(&self) -> usize {
        if self.level_of.is_empty() {
            0
        } else {
            self.max_depth + 1
        }
    }

    /// Node indices partitioned by level, each bucket in storage order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_levels()];
        for (node, &l) in self.level_of.iter().enumerate() {
            groups[l].push(node);
        }
        groups
    }
}

/// Computes node depths in one pass over the graph's topological order.
///
/// Graphs are acyclic by construction, so this cannot fail.
pub fn levelize(g: &AigGraph) -> LevelIndex {
    let mut level_of = vec![0usize; g.num_nodes()];
    let mut max_depth = 0;
    for &v in g.topological_order() {
        let l = g
            .node(v)
            .fanins()
            .iter()
            .map(|f| level_of[f.node] + 1)
            .max()
            .unwrap_or(0);
        level_of[v] = l;
        max_depth = max_depth.max(l);
    }
    LevelIndex {
        level_of,
        max_depth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AigNode, Fanin};

    #[test]
    fn single_and() {
        let g = AigGraph::new(
            "g",
            vec![
                AigNode::input(),
                AigNode::input(),
                AigNode::output(Fanin::buffer(3)),
                AigNode::and(Fanin::buffer(0), Fanin::buffer(1)),
            ],
        )
        .unwrap();
        let l = levelize(&g);
        assert_eq!(l.as_slice(), &[0, 0, 2, 1]);
        assert_eq!(l.max_depth(), 2);
        assert_eq!(l.groups(), vec![vec![0, 1], vec![3], vec![2]]);
    }

    #[test]
    fn chain_of_three() {
        // y = a&b, z = y&c, w = z&d
        let g = AigGraph::new(
            "chain",
            vec![
                AigNode::input(),
                AigNode::input(),
                AigNode::input(),
                AigNode::input(),
                AigNode::and(Fanin::buffer(0), Fanin::buffer(1)),
                AigNode::and(Fanin::buffer(4), Fanin::buffer(2)),
                AigNode::and(Fanin::buffer(5), Fanin::buffer(3)),
                AigNode::output(Fanin::buffer(6)),
            ],
        )
        .unwrap();
        let l = levelize(&g);
        assert_eq!(&l.as_slice()[4..7], &[1, 2, 3]);
        assert_eq!(l.max_depth(), 4);
    }

    #[test]
    fn wire_only() {
        let g = AigGraph::new(
            "wire",
            vec![AigNode::input(), AigNode::output(Fanin::inverter(0))],
        )
        .unwrap();
        assert_eq!(levelize(&g).max_depth(), 1);
    }
}
