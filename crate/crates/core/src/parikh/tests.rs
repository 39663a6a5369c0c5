use super::*;
use crate::corpus;
use crate::omega::{coaccessible_pairs, synchronized_product};
use crate::restrict::{decision_data_set, expand, label_skeleton, STATE_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Build a graph from loose edges, grouping them by source.
fn mk(n: usize, edges: &[(u32, u32, i32)], initial: &[u32], targets: &[u32]) -> WeightedMarkGraph {
    let mut by_src: Vec<Vec<(u32, i32)>> = vec![Vec::new(); n];
    for &(f, t, w) in edges {
        by_src[f as usize].push((t, w));
    }
    let mut out = Vec::new();
    let mut edge_start = vec![0u32];
    for (f, outs) in by_src.iter().enumerate() {
        for &(t, w) in outs {
            out.push(MarkEdge { from: f as u32, to: t, weight: w, sq_edge: 0, ev1: -1, ev2: -1 });
        }
        edge_start.push(out.len() as u32);
    }
    let mut target = vec![false; n];
    for &t in targets {
        target[t as usize] = true;
    }
    WeightedMarkGraph {
        nodes: (0..n as u32).map(|i| (i, 0)).collect(),
        edges: out,
        edge_start,
        initial: initial.to_vec(),
        target,
    }
}

fn ask(g: &WeightedMarkGraph, w: i64) -> Option<PathWitness> {
    target_weight_reachable(&ReachabilityQuery::new(g, w)).unwrap()
}

#[test]
fn a_zero_weight_edge_reaches_the_target() {
    let g = mk(2, &[(0, 1, 0)], &[0], &[1]);
    let w = ask(&g, 0).expect("reachable");
    assert_eq!(g.replay(&w), Some(0));
    assert!(ask(&g, 1).is_none());
}

#[test]
fn a_positive_step_needs_a_negative_cycle_to_cancel() {
    let plain = mk(2, &[(0, 1, 1), (1, 1, 0)], &[0], &[1]);
    assert!(ask(&plain, 0).is_none());
    assert_eq!(plain.replay(&ask(&plain, 1).unwrap()), Some(1));

    let repaired = mk(2, &[(0, 1, 1), (1, 1, -1)], &[0], &[1]);
    let w = ask(&repaired, 0).expect("the negative loop cancels the step");
    assert_eq!(repaired.replay(&w), Some(0));
}

#[test]
fn weight_parity_gaps_are_exact() {
    let g = mk(2, &[(0, 0, 2), (0, 0, -2), (0, 1, 0)], &[0], &[1]);
    assert!(ask(&g, 1).is_none());
    assert!(ask(&g, 3).is_none());
    assert_eq!(g.replay(&ask(&g, -4).unwrap()), Some(-4));
    assert_eq!(g.replay(&ask(&g, 6).unwrap()), Some(6));
}

#[test]
fn three_cycle_classes_can_be_needed_together() {
    // 6 + 10 - 15 = 1; no two of the loop weights can make 1 on their own.
    let all = mk(2, &[(0, 0, 6), (0, 0, 10), (0, 0, -15), (0, 1, 0)], &[0], &[1]);
    assert_eq!(all.replay(&ask(&all, 1).unwrap()), Some(1));
    for drop in [6, 10, -15] {
        let edges: Vec<(u32, u32, i32)> = [(0, 0, 6), (0, 0, 10), (0, 0, -15), (0, 1, 0)]
            .into_iter()
            .filter(|&(_, _, w)| w != drop)
            .collect();
        assert!(ask(&mk(2, &edges, &[0], &[1]), 1).is_none());
    }
}

#[test]
fn rebalancing_may_overshoot_the_required_weight() {
    // Only +3 loops before the step, only -5 loops after: -1 needs 3*3 - 2*5,
    // so partial sums must climb to +9 on the way to -1.
    let g = mk(2, &[(0, 0, 3), (0, 1, 0), (1, 1, -5)], &[0], &[1]);
    let w = ask(&g, -1).expect("reachable with an excursion");
    assert_eq!(g.replay(&w), Some(-1));
}

#[test]
fn the_trivial_path_counts_when_a_source_is_a_target() {
    let g = mk(1, &[(0, 0, 1)], &[0], &[0]);
    let w = ask(&g, 0).expect("empty path");
    assert!(w.edges.is_empty());
    assert_eq!(g.replay(&ask(&g, 2).unwrap()), Some(2));
}

#[test]
fn unreachable_targets_fail_fast() {
    let g = mk(3, &[(0, 1, 0), (2, 2, 1)], &[0], &[2]);
    assert!(ask(&g, 0).is_none());
}

#[test]
fn the_state_cap_aborts_the_search() {
    // Cycles of both signs leave the remaining-weight brackets wide open, so
    // the parity gap can only be established by exhausting the window.
    let g = mk(2, &[(0, 0, 2), (0, 0, -2), (0, 1, 0)], &[0], &[1]);
    let q = ReachabilityQuery { graph: &g, weight: 1, cap: 3 };
    match target_weight_reachable(&q) {
        Err(crate::Error::Resource(_)) => {}
        other => panic!("expected a resource error, got {other:?}"),
    }
    // With room to exhaust the admissible window the answer is exact.
    assert!(ask(&g, 1).is_none());
}

/// Weights reachable at each node by paths of at most `depth` edges.
fn enumerate_paths(
    g: &WeightedMarkGraph,
    depth: usize,
) -> Vec<HashSet<(u32, i64)>> {
    let mut layers = Vec::with_capacity(depth + 1);
    let mut cur: HashSet<(u32, i64)> = g.initial.iter().map(|&s| (s, 0)).collect();
    layers.push(cur.clone());
    for _ in 0..depth {
        let mut next = cur.clone();
        for &(n, w) in &cur {
            for e in g.out_edges(n) {
                next.insert((e.to, w + e.weight as i64));
            }
        }
        layers.push(next.clone());
        cur = next;
    }
    layers
}

#[test]
fn random_graphs_agree_with_exhaustive_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9A11);
    let mut yes = 0usize;
    for _ in 0..250 {
        let n = rng.gen_range(1..=8usize);
        let m = rng.gen_range(0..=14usize);
        let edges: Vec<(u32, u32, i32)> = (0..m)
            .map(|_| {
                (
                    rng.gen_range(0..n as u32),
                    rng.gen_range(0..n as u32),
                    rng.gen_range(-3..=3),
                )
            })
            .collect();
        let initial = vec![rng.gen_range(0..n as u32)];
        let targets: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.3)).collect();
        let g = mk(n, &edges, &initial, &targets);
        let want = rng.gen_range(-4..=4i64);

        let got = ask(&g, want);
        let oracle = enumerate_paths(&g, 12)
            .last()
            .unwrap()
            .iter()
            .any(|&(node, w)| g.target[node as usize] && w == want);

        match &got {
            Some(w) => {
                assert_eq!(g.replay(w), Some(want), "witness must replay to the asked weight");
                yes += 1;
            }
            None => assert!(
                !oracle,
                "enumeration found a path the search missed: n={n} edges={edges:?} want={want}"
            ),
        }
        if oracle {
            assert!(got.is_some(), "search missed an enumerable path");
        }
    }
    assert!(yes > 20, "the case mix should include plenty of reachable instances, saw {yes}");
}

fn squared(t: &crate::model::TransducerSpec) -> (crate::restrict::ExpandedMachine, SquareProduct, Vec<bool>) {
    let data = decision_data_set(t);
    let x = expand(t, &data, STATE_CAP).unwrap();
    let sq = synchronized_product(&x, &x).unwrap();
    let coacc = coaccessible_pairs(&sq, &x);
    (x, sq, coacc)
}

#[test]
fn identical_deterministic_machines_have_no_mismatch() {
    let (x, sq, coacc) = squared(&corpus::swap_labels());
    assert!(mismatch_witness(&sq, &x, &x, &coacc, DEFAULT_SEARCH_CAP).unwrap().is_none());
}

#[test]
fn renaming_with_a_guessed_name_yields_a_mismatch() {
    let (x, sq, coacc) = squared(&corpus::t_rename());
    let found = mismatch_witness(&sq, &x, &x, &coacc, DEFAULT_SEARCH_CAP)
        .unwrap()
        .expect("two renamings of one word must diverge");
    assert_eq!(found.graph.replay(&found.path), Some(0));
    let (ev1, ev2) = concrete_mark_events(&found.graph, &found.path, &x, &x, &sq);
    let (_, _, s1) = ev1.expect("first mark recorded");
    let (_, _, s2) = ev2.expect("second mark recorded");
    assert_eq!(s1, found.letter);
    assert_ne!(s1, s2, "the marked letters must differ");
}

#[test]
fn specific_renamed_letters_appear_as_mismatch_marks() {
    let (x, sq, coacc) = squared(&corpus::t_rename());
    for datum in [2, 3] {
        let letter = (0..x.out_syms.len() as u32)
            .find(|&s| x.out_syms.parts(s) == ("a", Some(crate::model::DataValue(datum))))
            .expect("output symbol present");
        let g = concrete_letter_graph(&sq, &x, &x, &coacc, &coacc, letter);
        let w = target_weight_reachable(&ReachabilityQuery::new(&g, 0))
            .unwrap()
            .expect("a divergence marking this letter exists");
        assert_eq!(g.replay(&w), Some(0));
    }
}

#[test]
fn mismatch_search_respects_acceptance_futures() {
    // Two branches write different renamings, but no state pair across the
    // branches admits a common accepted future; with the real coaccessibility
    // mask the search stays silent, with a permissive mask it fires.
    let t = corpus::t_rename2();
    let data: Vec<crate::model::DataValue> = (0..=4).map(crate::model::DataValue).collect();
    let x = expand(&t, &data, STATE_CAP).unwrap();
    let sq = synchronized_product(&x, &x).unwrap();
    let coacc = coaccessible_pairs(&sq, &x);
    assert!(mismatch_witness(&sq, &x, &x, &coacc, DEFAULT_SEARCH_CAP).unwrap().is_none());

    let permissive = vec![true; sq.nodes.len()];
    let found = mismatch_witness(&sq, &x, &x, &permissive, DEFAULT_SEARCH_CAP)
        .unwrap()
        .expect("branch outputs disagree when futures are ignored");
    assert_eq!(found.graph.replay(&found.path), Some(0));
}

fn skeleton_squared(
    t: &crate::model::TransducerSpec,
) -> (crate::restrict::ExpandedMachine, SquareProduct, Vec<bool>) {
    let sk = label_skeleton(t);
    let sq = synchronized_product(&sk, &sk).unwrap();
    let coacc = coaccessible_pairs(&sq, &sk);
    (sk, sq, coacc)
}

#[test]
fn register_origin_needs_a_test_free_machine() {
    let t = corpus::t_rename();
    let (sk, sq, coacc) = skeleton_squared(&t);
    match register_origin_graph(&t, &sk, &sq, &coacc, &coacc) {
        Err(crate::Error::Precondition(_)) => {}
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn register_origin_needs_plain_assignments() {
    let t = crate::format::parse_transducer(
        "nrt copying {
            registers: r1 r2;
            input: a;
            output: a;
            initial: q0;
            accepting: q0;
            trans q0 -> q0 : on a, test true, store {r1 := r2}, out [a:r1];
        }",
    )
    .unwrap();
    let (sk, sq, coacc) = skeleton_squared(&t);
    match register_origin_graph(&t, &sk, &sq, &coacc, &coacc) {
        Err(crate::Error::Precondition(msg)) => assert!(msg.contains("copies")),
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn distinct_store_steps_are_blocked_only_by_acceptance() {
    let t = corpus::testfree_select();
    let (sk, sq, coacc) = skeleton_squared(&t);
    let g = register_origin_graph(&t, &sk, &sq, &coacc, &coacc).unwrap();
    assert!(ask(&g, 0).is_none(), "the machine is functional");

    // Ignoring futures, the early-store and late-store branches pin the same
    // output position to data stored at different steps.
    let permissive = vec![true; sq.nodes.len()];
    let g = register_origin_graph(&t, &sk, &sq, &permissive, &permissive).unwrap();
    let w = ask(&g, 0).expect("divergent origins exist without the acceptance constraint");
    assert_eq!(g.replay(&w), Some(0));

    // The two store guesses sit at different path steps (or one watch covers
    // the initial fill): walk the phases and compare.
    let k = t.registers.len();
    let mut at = w.start;
    let (mut s1, mut s2) = (None, None);
    let (w1, w2) = ro_split(k, g.nodes[at as usize].1);
    if w1 != 0 {
        s1 = Some(0);
    }
    if w2 != 0 {
        s2 = Some(0);
    }
    for (step, &e) in w.edges.iter().enumerate() {
        let edge = &g.edges[e as usize];
        let (pw1, pw2) = ro_split(k, g.nodes[at as usize].1);
        let (nw1, nw2) = ro_split(k, g.nodes[edge.to as usize].1);
        if pw1 == 0 && nw1 != 0 {
            s1 = Some(step + 1);
        }
        if pw2 == 0 && nw2 != 0 {
            s2 = Some(step + 1);
        }
        at = edge.to;
    }
    assert_ne!(s1.unwrap(), s2.unwrap(), "origin steps must differ");
}

#[test]
fn a_deterministic_chain_has_no_register_origin_witness() {
    // Every emission of the loop reads the datum stored on that same step, so
    // equal output positions force equal store steps and the search must stay
    // silent even when futures are ignored.
    let t = corpus::wide_testfree8();
    let (sk, sq, coacc) = skeleton_squared(&t);
    let g = register_origin_graph(&t, &sk, &sq, &coacc, &coacc).unwrap();
    assert!(ask(&g, 0).is_none());
    let permissive = vec![true; sq.nodes.len()];
    let g = register_origin_graph(&t, &sk, &sq, &permissive, &permissive).unwrap();
    assert!(ask(&g, 0).is_none());
}
