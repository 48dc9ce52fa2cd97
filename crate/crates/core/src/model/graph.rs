use lsoformer_aig::{levelize, AigGraph};
use ndarray::Array2;

use crate::tape::Csr;

pub const NODE_FEATURES: usize = 6;

/// Per-circuit tensors the encoder needs, computed once per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub num_nodes: usize,
    /// Symmetrically normalized fanin adjacency with self loops.
    pub adj: Csr,
    /// One-hot node type (3) followed by one-hot inverted-fanin count (3).
    pub features: Array2<f64>,
    /// `adj · features`, the first layer's aggregation.
    pub ax: Array2<f64>,
    /// Node indices per level, `0..=depth`.
    pub levels: Vec<Vec<usize>>,
    pub depth: usize,
}

impl GraphInput {
    pub fn new(g: &AigGraph) -> Self {
        let n = g.num_nodes();
        let mut features = Array2::zeros((n, NODE_FEATURES));
        let mut deg = vec![1.0f64; n];
        for (i, node) in g.nodes().iter().enumerate() {
            features[[i, node.kind.type_feature()]] = 1.0;
            features[[i, 3 + node.inverted_preds().min(2)]] = 1.0;
            deg[i] += node.fanins().len() as f64;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (t, node) in g.nodes().iter().enumerate() {
            indices.push(t);
            values.push(1.0 / deg[t]);
            for f in node.fanins() {
                indices.push(f.node);
                values.push(1.0 / (deg[f.node] * deg[t]).sqrt());
            }
            indptr.push(indices.len());
        }
        let adj = Csr {
            rows: n,
            cols: n,
            indptr,
            indices,
            values,
        };
        let ax = adj.matmul(features.view());
        let lv = levelize(g);
        GraphInput {
            num_nodes: n,
            adj,
            features,
            ax,
            levels: lv.groups(),
            depth: lv.max_depth(),
        }
    }
}
