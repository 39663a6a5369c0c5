//! Random machines, random weighted graphs, and brute-force oracles for the
//! test suite and benchmarks. Nothing here is part of the stable API.

use rand::Rng;

use crate::model::{
    outputs_on, Alphabets, Assignment, DataValue, LabelPattern, LassoWord, Letter, MachineKind,
    OutLabel, OutputItem, TestFormula, TransducerSpec, Transition,
};
use crate::normalize::validate_infinite_output;
use crate::parikh::{MarkEdge, PathWitness, WeightedMarkGraph};
use crate::Result;

// ---------------------------------------------------------------------------
// Random finite transducers

#[derive(Debug, Clone)]
pub struct NftParams {
    pub max_states: usize,
    pub max_in_labels: usize,
    pub max_out_labels: usize,
    pub max_transitions: usize,
    /// Output items per transition.
    pub max_items: usize,
}

impl Default for NftParams {
    fn default() -> Self {
        NftParams {
            max_states: 4,
            max_in_labels: 3,
            max_out_labels: 3,
            max_transitions: 8,
            max_items: 2,
        }
    }
}

/// One random finite transducer. May fail validation or admit accepting runs
/// with finite output; see [`random_productive_nft`] for a filtered draw.
pub fn random_nft(rng: &mut impl Rng, p: &NftParams) -> TransducerSpec {
    let num_states = rng.gen_range(1..=p.max_states);
    let num_in = rng.gen_range(1..=p.max_in_labels);
    let num_out = rng.gen_range(1..=p.max_out_labels);
    let num_trans = rng.gen_range(1..=p.max_transitions);
    let mut transitions = Vec::with_capacity(num_trans);
    for _ in 0..num_trans {
        let items = rng.gen_range(0..=p.max_items);
        transitions.push(Transition {
            source: rng.gen_range(0..num_states),
            label: if rng.gen_bool(0.15) {
                LabelPattern::Any
            } else {
                LabelPattern::One(rng.gen_range(0..num_in))
            },
            test: TestFormula::True,
            assign: Assignment::default(),
            output: (0..items)
                .map(|_| OutputItem {
                    label: OutLabel::Fixed(rng.gen_range(0..num_out)),
                    register: None,
                })
                .collect(),
            target: rng.gen_range(0..num_states),
        });
    }
    let mut accepting = std::collections::BTreeSet::new();
    for q in 0..num_states {
        if rng.gen_bool(0.5) {
            accepting.insert(q);
        }
    }
    accepting.insert(rng.gen_range(0..num_states));
    TransducerSpec {
        kind: MachineKind::Nft,
        name: "random_nft".to_string(),
        states: (0..num_states).map(|q| format!("q{q}")).collect(),
        registers: Vec::new(),
        alphabets: Alphabets {
            input: (0..num_in).map(|l| format!("i{l}")).collect(),
            output: (0..num_out).map(|l| format!("o{l}")).collect(),
        },
        initial: 0,
        accepting,
        transitions,
    }
}

/// Draw random finite transducers until one both validates and admits no
/// accepting run with finite output, so every decision precondition holds.
pub fn random_productive_nft(rng: &mut impl Rng, p: &NftParams, tries: usize) -> TransducerSpec {
    for _ in 0..tries {
        let t = random_nft(rng, p);
        if t.validate().is_ok() && matches!(validate_infinite_output(&t), Ok(None)) {
            return t;
        }
    }
    panic!("no productive machine found in {tries} draws");
}

#[derive(Debug, Clone)]
pub struct TestFreeParams {
    pub max_states: usize,
    pub max_registers: usize,
    pub max_in_labels: usize,
    pub max_out_labels: usize,
    pub max_transitions: usize,
    pub max_items: usize,
}

impl Default for TestFreeParams {
    fn default() -> Self {
        TestFreeParams {
            max_states: 3,
            max_registers: 2,
            max_in_labels: 2,
            max_out_labels: 2,
            max_transitions: 6,
            max_items: 2,
        }
    }
}

/// One random test-free register transducer: trivial tests, random stores,
/// register outputs. May fail validation or productivity; see
/// [`random_productive_testfree`].
pub fn random_testfree_nrt(rng: &mut impl Rng, p: &TestFreeParams) -> TransducerSpec {
    let num_states = rng.gen_range(1..=p.max_states);
    let num_regs = rng.gen_range(1..=p.max_registers);
    let num_in = rng.gen_range(1..=p.max_in_labels);
    let num_out = rng.gen_range(1..=p.max_out_labels);
    let num_trans = rng.gen_range(1..=p.max_transitions);
    let mut transitions = Vec::with_capacity(num_trans);
    for _ in 0..num_trans {
        let mut store = std::collections::BTreeSet::new();
        for r in 0..num_regs {
            if rng.gen_bool(0.4) {
                store.insert(r);
            }
        }
        let items = rng.gen_range(0..=p.max_items);
        transitions.push(Transition {
            source: rng.gen_range(0..num_states),
            label: if rng.gen_bool(0.2) {
                LabelPattern::Any
            } else {
                LabelPattern::One(rng.gen_range(0..num_in))
            },
            test: TestFormula::True,
            assign: Assignment { store_current: store, copies: Vec::new() },
            output: (0..items)
                .map(|_| OutputItem {
                    label: OutLabel::Fixed(rng.gen_range(0..num_out)),
                    register: Some(rng.gen_range(0..num_regs)),
                })
                .collect(),
            target: rng.gen_range(0..num_states),
        });
    }
    let mut accepting = std::collections::BTreeSet::new();
    for q in 0..num_states {
        if rng.gen_bool(0.5) {
            accepting.insert(q);
        }
    }
    accepting.insert(rng.gen_range(0..num_states));
    TransducerSpec {
        kind: MachineKind::Nrt,
        name: "random_testfree".to_string(),
        states: (0..num_states).map(|q| format!("q{q}")).collect(),
        registers: (0..num_regs).map(|r| format!("r{r}")).collect(),
        alphabets: Alphabets {
            input: (0..num_in).map(|l| format!("i{l}")).collect(),
            output: (0..num_out).map(|l| format!("o{l}")).collect(),
        },
        initial: 0,
        accepting,
        transitions,
    }
}

/// Like [`random_productive_nft`] for test-free register machines.
pub fn random_productive_testfree(
    rng: &mut impl Rng,
    p: &TestFreeParams,
    tries: usize,
) -> TransducerSpec {
    for _ in 0..tries {
        let t = random_testfree_nrt(rng, p);
        if t.validate().is_ok() && matches!(validate_infinite_output(&t), Ok(None)) {
            return t;
        }
    }
    panic!("no productive machine found in {tries} draws");
}

/// A random test-free machine built around a blind branch: from the initial
/// state, reading `a` commits either to a branch accepting only `a^ω` or to
/// a branch that must eventually read `b`. The domains are disjoint, so the
/// machine is always functional; whether it is continuous depends on how the
/// randomly chosen stores and outputs of the two branches line up, which
/// exercises the divergence searches on both answers.
pub fn random_branching_testfree(rng: &mut impl Rng, num_regs: usize) -> TransducerSpec {
    let k = num_regs.max(1);
    let mut item = |rng: &mut dyn rand::RngCore| OutputItem {
        label: OutLabel::Fixed(rng.gen_range(0..2)),
        register: Some(rng.gen_range(0..k)),
    };
    let mut store = |rng: &mut dyn rand::RngCore| -> std::collections::BTreeSet<usize> {
        (0..k).filter(|_| rng.gen_bool(0.5)).collect()
    };
    let mut tr = |rng: &mut dyn rand::RngCore,
                  source: usize,
                  label: usize,
                  target: usize,
                  min_items: usize,
                  max_items: usize| {
        let n = rng.gen_range(min_items..=max_items);
        Transition {
            source,
            label: LabelPattern::One(label),
            test: TestFormula::True,
            assign: Assignment { store_current: store(rng), copies: Vec::new() },
            output: (0..n).map(|_| item(rng)).collect(),
            target,
        }
    };
    // States: 0 start, 1 a-loop (accepting), 2 waiting for b, 3 b-reached
    // (accepting). Loops at 1 and 3 must emit so every accepting run has
    // infinite output.
    let into_pure = tr(rng, 0, 0, 1, 0, 2);
    let pure_loop = tr(rng, 1, 0, 1, 1, 2);
    // Sometimes the waiting branch mirrors the a-loop branch on its `a`
    // steps (same stores, same outputs). Mirrored machines keep equal
    // output prefixes along shared input prefixes, so they stay
    // continuous; independently drawn branches almost surely disagree at
    // some fixed output position and are discontinuous.
    let (into_wait, wait_loop) = if rng.gen_bool(0.35) {
        let mut iw = into_pure.clone();
        iw.target = 2;
        let mut wl = pure_loop.clone();
        wl.source = 2;
        wl.target = 2;
        (iw, wl)
    } else {
        (tr(rng, 0, 0, 2, 0, 2), tr(rng, 2, 0, 2, 0, 2))
    };
    let transitions = vec![
        into_pure,
        pure_loop,
        into_wait,
        wait_loop,
        tr(rng, 2, 1, 3, 0, 2),
        tr(rng, 3, 0, 3, 1, 2),
        tr(rng, 3, 1, 3, 1, 2),
    ];
    let t = TransducerSpec {
        kind: MachineKind::Nrt,
        name: "random_branching".to_string(),
        states: vec!["start".into(), "pure".into(), "wait".into(), "seen".into()],
        registers: (0..k).map(|r| format!("r{r}")).collect(),
        alphabets: Alphabets {
            input: vec!["a".into(), "b".into()],
            output: vec!["a".into(), "b".into()],
        },
        initial: 0,
        accepting: [1usize, 3].into_iter().collect(),
        transitions,
    };
    debug_assert!(t.validate().is_ok());
    t
}

// ---------------------------------------------------------------------------
// Brute-force functionality

/// A random input lasso over the machine's labels with the given data pool
/// (data all `0` when the pool is empty).
pub fn random_lasso(
    rng: &mut impl Rng,
    t: &TransducerSpec,
    data: &[DataValue],
    max_prefix: usize,
    max_period: usize,
) -> LassoWord {
    let letter = |rng: &mut dyn rand::RngCore| Letter {
        label: t.alphabets.input[rng.gen_range(0..t.alphabets.input.len())].clone(),
        datum: if data.is_empty() { DataValue::D0 } else { data[rng.gen_range(0..data.len())] },
    };
    let np = rng.gen_range(0..=max_prefix);
    let nv = rng.gen_range(1..=max_period);
    let prefix = (0..np).map(|_| letter(rng)).collect();
    let period = (0..nv).map(|_| letter(rng)).collect();
    LassoWord::new(prefix, period).expect("nonempty period")
}

/// Every label lasso with `|prefix| <= max_prefix`, `1 <= |period| <=
/// max_period`, all data `0`. Complete for label-driven machines of small
/// size, so a decision can be checked against direct enumeration.
pub fn enumerate_label_lassos(
    labels: &[String],
    max_prefix: usize,
    max_period: usize,
) -> Vec<LassoWord> {
    let mut words: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut by_len: Vec<Vec<Vec<Letter>>> = vec![vec![Vec::new()]];
    for len in 1..=max_prefix.max(max_period) {
        let mut next = Vec::new();
        for w in &by_len[len - 1] {
            for l in labels {
                let mut w2 = w.clone();
                w2.push(Letter { label: l.clone(), datum: DataValue::D0 });
                next.push(w2);
            }
        }
        words.extend(next.iter().cloned());
        by_len.push(next);
    }
    let mut out = Vec::new();
    for prefix in words.iter().filter(|w| w.len() <= max_prefix) {
        for period in words.iter().filter(|w| !w.is_empty() && w.len() <= max_period) {
            out.push(
                LassoWord::new(prefix.clone(), period.clone()).expect("nonempty period"),
            );
        }
    }
    out
}

/// Search the given inputs for one admitting two distinct outputs — a direct
/// refutation of functionality.
pub fn functionality_refuter(
    t: &TransducerSpec,
    inputs: &[LassoWord],
) -> Result<Option<LassoWord>> {
    for x in inputs {
        let outs = outputs_on(t, x, 4)?;
        if outs.words.len() >= 2 {
            return Ok(Some(x.clone()));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Random weighted mark graphs

#[derive(Debug, Clone)]
pub struct GraphParams {
    pub max_nodes: usize,
    pub max_out_degree: usize,
    /// Weights are drawn from `-max_weight ..= max_weight`.
    pub max_weight: i32,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams { max_nodes: 8, max_out_degree: 3, max_weight: 3 }
    }
}

/// A random weighted graph in the shape the reachability engine consumes:
/// edges grouped by source, node 0 initial, a random nonempty target set.
pub fn random_mark_graph(rng: &mut impl Rng, p: &GraphParams) -> WeightedMarkGraph {
    let n = rng.gen_range(1..=p.max_nodes);
    let mut edges = Vec::new();
    let mut edge_start = vec![0u32];
    for from in 0..n {
        let deg = rng.gen_range(0..=p.max_out_degree);
        for _ in 0..deg {
            edges.push(MarkEdge {
                from: from as u32,
                to: rng.gen_range(0..n) as u32,
                weight: rng.gen_range(-p.max_weight..=p.max_weight),
                sq_edge: edges.len() as u32,
                ev1: -1,
                ev2: -1,
            });
        }
        edge_start.push(edges.len() as u32);
    }
    let mut target = vec![false; n];
    target[rng.gen_range(0..n)] = true;
    for q in 0..n {
        if rng.gen_bool(0.3) {
            target[q] = true;
        }
    }
    WeightedMarkGraph {
        nodes: (0..n).map(|q| (q as u32, 0)).collect(),
        edges,
        edge_start,
        initial: vec![0],
        target,
    }
}

/// Exhaustive bounded oracle: is some target reachable from an initial node
/// by a path of at most `max_len` edges and total weight `weight`? Dynamic
/// programming over (steps, node, accumulated weight); returns a concrete
/// path when one exists.
pub fn bounded_weight_path(
    g: &WeightedMarkGraph,
    weight: i64,
    max_len: usize,
) -> Option<PathWitness> {
    let n = g.nodes.len();
    let gmax = g.edges.iter().map(|e| e.weight.unsigned_abs() as usize).max().unwrap_or(0);
    let span = gmax * max_len;
    let width = 2 * span + 1;
    let idx = |w: i64| -> Option<usize> {
        let shifted = w + span as i64;
        (0..width as i64).contains(&shifted).then_some(shifted as usize)
    };
    // pred[step][node * width + w] = incoming edge id, u32::MAX for unset,
    // u32::MAX - 1 for "start here".
    const UNSET: u32 = u32::MAX;
    const START: u32 = u32::MAX - 1;
    let mut pred: Vec<Vec<u32>> = vec![vec![UNSET; n * width]; max_len + 1];
    for &s in &g.initial {
        if let Some(wi) = idx(0) {
            pred[0][s as usize * width + wi] = START;
        }
    }
    for step in 0..max_len {
        for node in 0..n {
            for wi in 0..width {
                if pred[step][node * width + wi] == UNSET {
                    continue;
                }
                let w = wi as i64 - span as i64;
                for (eid, e) in g.edges.iter().enumerate() {
                    if e.from as usize != node {
                        continue;
                    }
                    if let Some(wi2) = idx(w + e.weight as i64) {
                        let slot = &mut pred[step + 1][e.to as usize * width + wi2];
                        if *slot == UNSET {
                            *slot = eid as u32;
                        }
                    }
                }
            }
        }
    }
    let goal = idx(weight)?;
    for step in 0..=max_len {
        for node in 0..n {
            if !g.target[node] || pred[step][node * width + goal] == UNSET {
                continue;
            }
            // Walk predecessors back to the start.
            let mut edges = Vec::new();
            let mut at = node;
            let mut wi = goal;
            for s in (1..=step).rev() {
                let eid = pred[s][at * width + wi];
                debug_assert!(eid != UNSET && eid != START);
                let e = &g.edges[eid as usize];
                edges.push(eid);
                at = e.from as usize;
                wi = (wi as i64 - e.weight as i64) as usize;
            }
            edges.reverse();
            return Some(PathWitness { start: at as u32, edges });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Pipeline oracle for composition

/// Treat a produced word as an input word (missing data become `0`, the
/// label-only case).
pub fn output_as_input(y: &LassoWord<OutLetter>) -> LassoWord {
    let conv = |o: &OutLetter| Letter {
        label: o.label.clone(),
        datum: o.datum.unwrap_or(DataValue::D0),
    };
    LassoWord::new(y.prefix().iter().map(conv).collect(), y.period().iter().map(conv).collect())
        .expect("periods stay nonempty")
}

/// Reference composition: run `tg` on `x`, then `tf` on everything it
/// produced. Returns the deduplicated output set and whether both
/// enumerations were exhaustive.
pub fn pipeline_outputs(
    tf: &TransducerSpec,
    tg: &TransducerSpec,
    x: &LassoWord,
    limit: usize,
) -> crate::Result<(Vec<LassoWord<OutLetter>>, bool)> {
    let gs = outputs_on(tg, x, limit)?;
    let mut exhausted = gs.exhausted;
    let mut out: Vec<LassoWord<OutLetter>> = Vec::new();
    for y in &gs.words {
        let fs = outputs_on(tf, &output_as_input(y), limit)?;
        exhausted &= fs.exhausted;
        for w in fs.words {
            if !out.iter().any(|seen| seen.eq_omega(&w)) {
                out.push(w);
            }
        }
    }
    Ok((out, exhausted))
}

/// Set equality of word collections as infinite words.
pub fn same_word_set(a: &[LassoWord<OutLetter>], b: &[LassoWord<OutLetter>]) -> bool {
    a.iter().all(|x| b.iter().any(|y| x.eq_omega(y)))
        && b.iter().all(|x| a.iter().any(|y| x.eq_omega(y)))
}
