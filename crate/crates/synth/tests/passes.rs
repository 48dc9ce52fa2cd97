use lsoformer_aig::{exhaustive_truth_tables, levelize, parse_netlist, random_aig, AigGraph, NetlistFormat, RandomAigConfig};
use lsoformer_synth::{
    apply_heuristic, measure_qor, optimize, run_recipe, run_recipes, Heuristic, Metric, Network, Recipe,
};
use proptest::prelude::*;

fn bench(text: &str) -> AigGraph {
    parse_netlist(text, NetlistFormat::Bench).unwrap()
}

fn small_aig(inputs: usize, ands: usize, seed: u64) -> AigGraph {
    random_aig(&RandomAigConfig::new(inputs, ands), seed)
}

#[test]
fn balance_chain_matches_reference_conjunction() {
    let g = bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\ny = AND(a, b, c, d)\n");
    let out = apply_heuristic(&g, Heuristic::Balance.token()).unwrap();
    // Reference: row r sets input i to bit i of r; only row 15 is true.
    let mut expected = 0u64;
    for row in 0..16u64 {
        if (0..4).all(|i| row >> i & 1 == 1) {
            expected |= 1 << row;
        }
    }
    assert_eq!(exhaustive_truth_tables(&out).unwrap(), vec![vec![expected]]);
    assert_eq!(out.num_ands(), 3);
    assert_eq!(levelize(&out).max_depth(), 3);
    assert_eq!(measure_qor(&out, Metric::Delay), 3.0);
}

#[test]
fn rs_merges_duplicated_cone() {
    // Two structurally different realizations of a ^ b feeding separate outputs.
    let g = bench(
        "INPUT(a)\nINPUT(b)\nOUTPUT(y1)\nOUTPUT(y2)\n\
         p = AND(a, nb)\nq = AND(na, b)\ny1 = OR(p, q)\n\
         o = OR(a, b)\nn = NAND(a, b)\ny2 = AND(o, n)\n\
         na = NOT(a)\nnb = NOT(b)\n",
    );
    let before = g.num_ands();
    let out = apply_heuristic(&g, Heuristic::Resub.token()).unwrap();
    assert!(out.num_ands() < before, "{} -> {}", before, out.num_ands());
    assert_eq!(exhaustive_truth_tables(&out).unwrap(), exhaustive_truth_tables(&g).unwrap());
    let drivers: Vec<_> = out.primary_outputs().iter().map(|&o| out.node(o).fanins()[0]).collect();
    assert_eq!(drivers[0], drivers[1]);
}

#[test]
fn rw_on_duplicate_fanin_yields_buffer() {
    let g = bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, a)\n");
    let out = apply_heuristic(&g, Heuristic::Rewrite.token()).unwrap();
    assert_eq!(out.num_ands(), 0);
    let o = out.primary_outputs()[0];
    assert_eq!(out.node(out.node(o).fanins()[0].node).kind, lsoformer_aig::NodeKind::Input);
}

#[test]
fn batched_recipes_match_single_runs() {
    let g = random_aig(&RandomAigConfig::for_size(400, 48), 5);
    let recipes: Vec<Recipe> = (0..12)
        .map(|i| Recipe::new(i, (0..6).map(|k| (i * 3 + k * k + i * k) % 7).collect()).unwrap())
        .collect();
    let batched = run_recipes(&g, &recipes, Metric::Delay);
    for (r, t) in recipes.iter().zip(&batched) {
        assert_eq!(&run_recipe(&g, r, Metric::Delay), t);
    }
}

#[test]
fn trajectories_are_deterministic_and_positive() {
    let g = random_aig(&RandomAigConfig::for_size(300, 48), 9);
    let r = Recipe::parse(0, "rw; rf; balance; rs_z; rw_z; rf_z; rs; balance; rw; rf").unwrap();
    let a = run_recipe(&g, &r, Metric::Area);
    let b = run_recipe(&g, &r, Metric::Area);
    assert_eq!(a, b);
    assert_eq!(a.values.len(), 10);
    assert!(a.values.iter().all(|&v| v > 0.0));
    assert!(a.values.windows(2).all(|w| w[1] <= w[0]));
}

fn heuristic() -> impl Strategy<Value = Heuristic> {
    (0usize..7).prop_map(|t| Heuristic::from_token(t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn passes_preserve_function(
        inputs in 2usize..=12,
        ands in 1usize..120,
        seed in any::<u64>(),
        steps in prop::collection::vec(heuristic(), 1..6),
    ) {
        let g = small_aig(inputs, ands, seed);
        let reference = exhaustive_truth_tables(&g).unwrap();
        let mut cur = g.clone();
        for h in steps {
            let next = apply_heuristic(&cur, h.token()).unwrap();
            prop_assert_eq!(&exhaustive_truth_tables(&next).unwrap(), &reference, "after {}", h);
            prop_assert!(next.num_ands() <= Network::from_graph(&cur).cleanup().num_ands());
            cur = next;
        }
    }

    #[test]
    fn non_zero_passes_never_grow_area(inputs in 2usize..=12, ands in 1usize..150, seed in any::<u64>(), h in heuristic()) {
        prop_assume!(!h.zero_gain());
        let g = small_aig(inputs, ands, seed);
        let out = apply_heuristic(&g, h.token()).unwrap();
        prop_assert!(out.num_ands() <= g.num_ands());
    }

    #[test]
    fn each_pass_is_a_fixpoint(inputs in 2usize..=12, ands in 1usize..150, seed in any::<u64>(), h in heuristic()) {
        let net = Network::from_graph(&small_aig(inputs, ands, seed));
        let once = optimize(&net, h);
        let twice = optimize(&once, h);
        prop_assert_eq!(once.depth(), twice.depth());
        prop_assert_eq!(once.num_ands(), twice.num_ands());
    }

    #[test]
    fn network_depth_matches_levelize(inputs in 1usize..=16, ands in 0usize..200, seed in any::<u64>(), h in heuristic()) {
        let g = small_aig(inputs, ands, seed);
        let net = optimize(&Network::from_graph(&g), h);
        let exported = net.to_graph("x");
        prop_assert_eq!(net.depth(), levelize(&exported).max_depth());
        prop_assert_eq!(Network::from_graph(&exported), net);
    }
}
