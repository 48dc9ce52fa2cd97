//! Deterministic logic-optimization passes over AIGs, QoR proxies and
//! per-step QoR trajectories.
//!
//! Every pass repeats a sweep over the network until the sweep stops
//! improving the pass objective, so each pass is its own fixpoint:
//!
//! * `balance`: depth first, area never grows.
//! * `rw`, `rf`, `rs`: AND count first, then depth.
//! * `_z` variants: local moves may have zero gain, and a sweep is also kept
//!   when it only lowers the summed node levels.

mod balance;
mod error;
mod heuristic;
pub mod network;
mod refactor;
mod resub;
mod rewrite;
mod truth;

pub use error::SynthError;
pub use heuristic::{Heuristic, HeuristicVocab, Metric, QorTrajectory, Recipe};
pub use network::{Lit, Network};

use std::collections::HashMap;

use lsoformer_aig::{levelize, AigGraph};

fn sweep(net: &Network, h: Heuristic) -> Network {
    match h {
        Heuristic::Balance => balance::sweep(net),
        Heuristic::Rewrite | Heuristic::RewriteZ => rewrite::sweep(net, h.zero_gain()),
        Heuristic::Refactor | Heuristic::RefactorZ => refactor::sweep(net, h.zero_gain()),
        Heuristic::Resub | Heuristic::ResubZ => resub::sweep(net, h.zero_gain()),
    }
}

fn level_sum(net: &Network) -> u64 {
    net.levels().iter().map(|&l| l as u64).sum()
}

fn improves(h: Heuristic, next: &Network, cur: &Network) -> bool {
    let (a1, d1) = (next.num_ands(), next.depth());
    let (a0, d0) = (cur.num_ands(), cur.depth());
    match h {
        Heuristic::Balance => a1 <= a0 && (d1, a1) < (d0, a0),
        _ if h.zero_gain() => (a1, d1, level_sum(next)) < (a0, d0, level_sum(cur)),
        _ => (a1, d1) < (a0, d0),
    }
}

/// Runs one heuristic to its fixpoint on a network.
pub fn optimize(net: &Network, h: Heuristic) -> Network {
    let mut cur = net.cleanup();
    loop {
        let next = sweep(&cur, h);
        if improves(h, &next, &cur) {
            cur = next;
        } else {
            return cur;
        }
    }
}

/// Applies the heuristic with token id `token`. The result is functionally
/// equivalent to `g` and laid out as constant (if used), inputs, ANDs,
/// outputs.
pub fn apply_heuristic(g: &AigGraph, token: usize) -> Result<AigGraph, SynthError> {
    let h = Heuristic::from_token(token)?;
    Ok(optimize(&Network::from_graph(g), h).to_graph(g.name()))
}

/// QoR proxy: delay is the graph depth including outputs, area the AND count.
pub fn measure_qor(g: &AigGraph, metric: Metric) -> f64 {
    match metric {
        Metric::Delay => levelize(g).max_depth() as f64,
        Metric::Area => g.num_ands() as f64,
    }
}

/// Same value as [`measure_qor`] on the exported graph.
pub fn measure_network(net: &Network, metric: Metric) -> f64 {
    match metric {
        Metric::Delay => net.depth() as f64,
        Metric::Area => net.num_ands() as f64,
    }
}

/// Applies every recipe step in order and records the QoR after each.
pub fn run_recipe(g: &AigGraph, recipe: &Recipe, metric: Metric) -> QorTrajectory {
    run_recipe_with_states(g, recipe, metric).0
}

/// Like [`run_recipe`], also returning the optimized graph.
pub fn run_recipe_with_states(g: &AigGraph, recipe: &Recipe, metric: Metric) -> (QorTrajectory, AigGraph) {
    let mut net = Network::from_graph(g);
    let mut values = Vec::with_capacity(recipe.len());
    for h in recipe.heuristics() {
        net = optimize(&net, h);
        values.push(measure_network(&net, metric));
    }
    let traj = QorTrajectory {
        circuit_id: 0,
        recipe_id: recipe.id,
        metric,
        values,
        initial: measure_qor(g, metric),
    };
    (traj, net.to_graph(g.name()))
}

/// Runs many recipes on one circuit. Identical (state, heuristic) pairs are
/// optimized once; results equal [`run_recipe`] for each recipe.
pub fn run_recipes(g: &AigGraph, recipes: &[Recipe], metric: Metric) -> Vec<QorTrajectory> {
    let initial = measure_qor(g, metric);
    let mut states: Vec<Network> = vec![Network::from_graph(g)];
    let mut qor: Vec<f64> = vec![initial];
    let mut index: HashMap<Network, usize> = HashMap::new();
    let mut transitions: HashMap<(usize, Heuristic), usize> = HashMap::new();
    recipes
        .iter()
        .map(|recipe| {
            let mut state = 0;
            let values = recipe
                .heuristics()
                .map(|h| {
                    state = match transitions.get(&(state, h)) {
                        Some(&next) => next,
                        None => {
                            let next_net = optimize(&states[state], h);
                            let next = *index.entry(next_net.clone()).or_insert_with(|| {
                                qor.push(measure_network(&next_net, metric));
                                states.push(next_net);
                                states.len() - 1
                            });
                            transitions.insert((state, h), next);
                            next
                        }
                    };
                    qor[state]
                })
                .collect();
            QorTrajectory {
                circuit_id: 0,
                recipe_id: recipe.id,
                metric,
                values,
                initial,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lsoformer_aig::{parse_netlist, NetlistFormat};

    const CHAIN: &str = "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\ny = AND(a, b, c, d)\n";

    #[test]
    fn measure_examples() {
        let one = parse_netlist("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n", NetlistFormat::Bench).unwrap();
        assert_eq!(measure_qor(&one, Metric::Delay), 2.0);
        assert_eq!(measure_qor(&one, Metric::Area), 1.0);
        let chain = parse_netlist(CHAIN, NetlistFormat::Bench).unwrap();
        assert_eq!(measure_qor(&chain, Metric::Delay), 4.0);
        assert_eq!(measure_qor(&chain, Metric::Area), 3.0);
    }

    #[test]
    fn balance_then_balance_is_fixpoint() {
        let chain = parse_netlist(CHAIN, NetlistFormat::Bench).unwrap();
        let r = Recipe::from_heuristics(0, &[Heuristic::Balance, Heuristic::Balance]).unwrap();
        let t = run_recipe(&chain, &r, Metric::Delay);
        assert_eq!(t.values, vec![3.0, 3.0]);
        assert_eq!(t.initial, 4.0);
    }

    #[test]
    fn rw_removes_duplicate_fanin() {
        let g = parse_netlist("INPUT(a)\nOUTPUT(y)\ny = AND(a, a)\n", NetlistFormat::Bench).unwrap();
        let r = Recipe::from_heuristics(0, &[Heuristic::Rewrite]).unwrap();
        assert_eq!(run_recipe(&g, &r, Metric::Area).values, vec![0.0]);
    }

    #[test]
    fn token_out_of_range() {
        let g = parse_netlist(CHAIN, NetlistFormat::Bench).unwrap();
        assert!(matches!(apply_heuristic(&g, 7), Err(SynthError::TokenOutOfRange { .. })));
    }
}
