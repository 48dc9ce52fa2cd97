//! Seeded random AIG generator used for synthetic benchmarks and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{AigGraph, AigNode, Fanin};

/// Shape parameters for [`random_aig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomAigConfig {
    pub num_inputs: usize,
    pub num_ands: usize,
    /// Fan-ins are drawn from the `window` most recent nodes with probability
    /// `locality`, otherwise uniformly from all earlier nodes.
    pub window: usize,
    pub locality: f64,
    pub invert_prob: f64,
}

impl RandomAigConfig {
    pub fn new(num_inputs: usize, num_ands: usize) -> Self {
        RandomAigConfig {
            num_inputs,
            num_ands,
            window: 32,
            locality: 0.5,
            invert_prob: 0.5,
        }
    }

    /// A configuration whose graphs have roughly `total_nodes` nodes
    /// (inputs + ANDs + outputs).
    pub fn for_size(total_nodes: usize, max_inputs: usize) -> Self {
        let inputs = ((total_nodes as f64).sqrt().round() as usize).clamp(4, max_inputs.max(4));
        let ands = (total_nodes.saturating_sub(inputs) as f64 * 0.8).round() as usize;
        RandomAigConfig::new(inputs, ands.max(1))
    }
}

/// Builds a random combinational AIG. Layout: inputs, then ANDs in creation
/// (topological) order, then one output per AND without fan-out.
pub fn random_aig(cfg: &RandomAigConfig, seed: u64) -> AigGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = cfg.num_inputs.max(1);
    let mut nodes: Vec<AigNode> = (0..n_in).map(|_| AigNode::input()).collect();
    let mut has_fanout = vec![false; n_in + cfg.num_ands];
    for _ in 0..cfg.num_ands {
        let available = nodes.len();
        let pick = |rng: &mut ChaCha8Rng| {
            let node = if rng.gen_bool(cfg.locality.clamp(0.0, 1.0)) {
                let w = cfg.window.clamp(1, available);
                available - 1 - rng.gen_range(0..w)
            } else {
                rng.gen_range(0..available)
            };
            Fanin::new(node, rng.gen_bool(cfg.invert_prob.clamp(0.0, 1.0)))
        };
        let a = pick(&mut rng);
        let b = pick(&mut rng);
        has_fanout[a.node] = true;
        has_fanout[b.node] = true;
        nodes.push(AigNode::and(a, b));
    }
    let drivers: Vec<usize> = (n_in..nodes.len()).filter(|&i| !has_fanout[i]).collect();
    for d in drivers {
        let inverted = rng.gen_bool(cfg.invert_prob.clamp(0.0, 1.0));
        nodes.push(AigNode::output(Fanin::new(d, inverted)));
    }
    if cfg.num_ands == 0 {
        nodes.push(AigNode::output(Fanin::buffer(0)));
    }
    AigGraph::new(format!("rand_{seed}"), nodes).expect("generator builds valid graphs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::levelize;

    #[test]
    fn deterministic_per_seed() {
        let cfg = RandomAigConfig::new(8, 100);
        assert_eq!(random_aig(&cfg, 3), random_aig(&cfg, 3));
        assert_ne!(random_aig(&cfg, 3).nodes(), random_aig(&cfg, 4).nodes());
    }

    #[test]
    fn sizes_stay_in_range() {
        for (i, target) in [50usize, 200, 800, 2000].into_iter().enumerate() {
            let g = random_aig(&RandomAigConfig::for_size(target, 48), i as u64);
            assert!(
                (40..=2100).contains(&g.num_nodes()),
                "target {target}: got {}",
                g.num_nodes()
            );
            assert!(!g.primary_outputs().is_empty());
            assert!(levelize(&g).max_depth() >= 2);
        }
    }
}
