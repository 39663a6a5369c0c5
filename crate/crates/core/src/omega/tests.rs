use super::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(
    n: usize,
    edges: &[(usize, usize)],
    initial: &[usize],
    node_sets: &[Vec<usize>],
) -> BuchiGraph {
    BuchiGraph::new(n, edges.to_vec(), initial.to_vec(), Families::from_node_sets(node_sets))
}

#[test]
fn accepting_self_loop_is_nonempty() {
    let g = graph(1, &[(0, 0)], &[0], &[vec![0]]);
    let lasso = g.nonempty().expect("nonempty");
    assert!(g.validate_lasso(&lasso));
    assert_eq!(lasso.start, 0);
    assert_eq!(lasso.cycle, vec![0]);
}

#[test]
fn acyclic_graph_is_empty() {
    let g = graph(3, &[(0, 1), (1, 2)], &[0], &[vec![2]]);
    assert!(g.nonempty().is_none());
}

#[test]
fn cycle_missing_the_accepting_node_is_empty() {
    // accepting node is reachable but on no cycle
    let g = graph(3, &[(0, 1), (1, 0), (0, 2)], &[0], &[vec![2]]);
    assert!(g.nonempty().is_none());
    let good = graph(3, &[(0, 1), (1, 0), (0, 2), (2, 0)], &[0], &[vec![2]]);
    let lasso = good.nonempty().expect("cycle through accepting node");
    assert!(good.validate_lasso(&lasso));
}

#[test]
fn unreachable_accepting_cycle_is_empty() {
    let g = graph(4, &[(0, 1), (2, 3), (3, 2)], &[0], &[vec![2]]);
    assert!(g.nonempty().is_none());
    assert!(g.nonempty_from(&[2]).is_some());
}

#[test]
fn generalized_acceptance_needs_every_family_on_one_cycle() {
    // two disjoint cycles, one per family: no single cycle covers both
    let split = graph(
        5,
        &[(0, 1), (1, 2), (2, 1), (0, 3), (3, 4), (4, 3)],
        &[0],
        &[vec![2], vec![4]],
    );
    assert!(split.nonempty().is_none());
    // one cycle through both families
    let joint = graph(3, &[(0, 1), (1, 2), (2, 1)], &[0], &[vec![1], vec![2]]);
    let lasso = joint.nonempty().expect("joint cycle");
    assert!(joint.validate_lasso(&lasso));
}

#[test]
fn edge_families_constrain_the_cycle() {
    // node 1 has two self loops; only edge 2 is accepting
    let mut families = Families::default();
    families.push_edge_set(vec![2]);
    let g = BuchiGraph::new(2, vec![(0, 1), (1, 1), (1, 1)], vec![0], families);
    let lasso = g.nonempty().expect("accepting self loop");
    assert!(g.validate_lasso(&lasso));
    assert!(lasso.cycle.contains(&2));

    let mut none = Families::default();
    none.push_edge_set(vec![0]); // the stem edge is on no cycle
    let g = BuchiGraph::new(2, vec![(0, 1), (1, 1)], vec![0], none);
    assert!(g.nonempty().is_none());
}

#[test]
fn zero_families_accept_any_cycle() {
    let g = graph(2, &[(0, 1), (1, 0)], &[0], &[]);
    let lasso = g.nonempty().expect("plain cycle");
    assert!(g.validate_lasso(&lasso));
}

#[test]
fn validate_lasso_rejects_broken_witnesses() {
    let g = graph(3, &[(0, 1), (1, 2), (2, 1)], &[0], &[vec![2]]);
    let good = g.nonempty().unwrap();
    assert!(g.validate_lasso(&good));
    let bad_start = RunLasso { start: 1, ..good.clone() };
    assert!(!g.validate_lasso(&bad_start));
    let broken_cycle = RunLasso { cycle: vec![0], ..good.clone() };
    assert!(!g.validate_lasso(&broken_cycle));
    let empty_cycle = RunLasso { cycle: vec![], ..good };
    assert!(!g.validate_lasso(&empty_cycle));
}

#[test]
fn sccs_partition_a_known_graph() {
    let g = graph(
        6,
        &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 3), (4, 5)],
        &[0],
        &[],
    );
    let scc = g.sccs();
    assert_eq!(scc.comp[0], scc.comp[1]);
    assert_eq!(scc.comp[1], scc.comp[2]);
    assert_eq!(scc.comp[3], scc.comp[4]);
    assert_ne!(scc.comp[0], scc.comp[3]);
    assert_ne!(scc.comp[4], scc.comp[5]);
    assert_eq!(scc.count, 3);
}

/// Reference emptiness: a fair lasso exists iff some strongly connected
/// component reachable from an initial node is nontrivial and contains an
/// internal edge of every family.
fn scc_reference_nonempty(g: &BuchiGraph, num_families: usize) -> bool {
    let scc = g.sccs();
    let mut internal = vec![0u32; scc.count];
    let mut nontrivial = vec![false; scc.count];
    for (e, &(from, to)) in g.edges().iter().enumerate() {
        if scc.comp[from] == scc.comp[to] {
            nontrivial[scc.comp[from]] = true;
            for fam in 0..num_families {
                if g.edge_in_family(e, fam) {
                    internal[scc.comp[from]] |= 1 << fam;
                }
            }
        }
    }
    let full = (1u32 << num_families) - 1;
    // reachability from node 0
    let mut seen = vec![false; g.num_nodes()];
    if g.num_nodes() == 0 {
        return false;
    }
    let mut work = vec![0usize];
    seen[0] = true;
    while let Some(n) = work.pop() {
        if nontrivial[scc.comp[n]] && internal[scc.comp[n]] & full == full {
            return true;
        }
        for &e in g.successors(n) {
            let to = g.edges()[e as usize].1;
            if !seen[to] {
                seen[to] = true;
                work.push(to);
            }
        }
    }
    false
}

#[test]
fn nested_search_matches_the_scc_reference_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1CE);
    for case in 0..600 {
        let n = rng.gen_range(1..=8);
        let num_edges = rng.gen_range(0..=2 * n);
        let edges: Vec<(usize, usize)> = (0..num_edges)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        let num_families = rng.gen_range(0..=2);
        let mut families = Families::default();
        for _ in 0..num_families {
            let set: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            families.push_node_set(set);
        }
        let g = BuchiGraph::new(n, edges, vec![0], families);
        let want = scc_reference_nonempty(&g, num_families);
        match g.nonempty() {
            Some(lasso) => {
                assert!(want, "case {case}: spurious lasso");
                assert!(g.validate_lasso(&lasso), "case {case}: witness fails replay");
            }
            None => assert!(!want, "case {case}: missed a fair lasso"),
        }
    }
}

#[test]
fn coaccessibility_agrees_with_per_node_emptiness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEED);
    for case in 0..300 {
        let n = rng.gen_range(1..=7);
        let num_edges = rng.gen_range(0..=2 * n);
        let edges: Vec<(usize, usize)> = (0..num_edges)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        let num_families = rng.gen_range(0..=2);
        let mut families = Families::default();
        for _ in 0..num_families {
            families.push_node_set((0..n).filter(|_| rng.gen_bool(0.4)).collect());
        }
        let g = BuchiGraph::new(n, edges, vec![0], families);
        let co = g.coaccessible();
        for v in 0..n {
            assert_eq!(
                co[v],
                g.nonempty_from(&[v]).is_some(),
                "case {case}: node {v} disagrees"
            );
        }
    }
}

#[test]
fn square_of_the_renamer_reaches_diverging_pairs() {
    let t = crate::corpus::t_rename();
    let x = crate::restrict::expand(
        &t,
        &crate::restrict::decision_data_set(&t),
        crate::restrict::STATE_CAP,
    )
    .unwrap();
    let sq = synchronized_product(&x, &x).unwrap();
    assert!(!sq.nodes.is_empty());
    // some reachable pair holds different r2 contents in its two components
    let diverged = sq.nodes.iter().any(|&(a, b)| {
        let va = x.full_valuation(a as usize);
        let vb = x.full_valuation(b as usize);
        x.states[a as usize].0 == x.states[b as usize].0 && va.0[1] != vb.0[1]
    });
    assert!(diverged, "two guesses for the free identifier must coexist");
    let co = coaccessible_pairs(&sq, &x);
    assert_eq!(co.len(), sq.nodes.len());
    assert!(co[0], "the initial pair extends to final runs on both sides");
}

#[test]
fn square_requires_matching_input_inventories() {
    let a = crate::restrict::label_skeleton(&crate::corpus::identity());
    let b = crate::restrict::label_skeleton(&crate::corpus::t_rename());
    assert!(synchronized_product(&a, &b).is_err());
}

#[test]
fn square_pairs_transitions_on_equal_symbols() {
    let a = crate::restrict::label_skeleton(&crate::corpus::swap_labels());
    let sq = synchronized_product(&a, &a).unwrap();
    assert_eq!(sq.nodes.len(), 1);
    // two self loops, one per label; only equal-symbol pairings appear
    assert_eq!(sq.edges.len(), 2);
    for e in &sq.edges {
        assert_eq!(a.trans[e.t1 as usize].sym, a.trans[e.t2 as usize].sym);
    }
}
