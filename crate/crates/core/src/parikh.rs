//! Weighted mark graphs and exact target-weight reachability.
//!
//! The divergence analyses all reduce to one combinatorial question: in a
//! finite directed graph whose edges carry integer weights, can a path from an
//! initial node reach a target node with a prescribed total weight?  The
//! graphs built here pair a square-product node with a small *mark phase*
//! recording which of two positional guesses have been placed.  Edge weights
//! track the difference between the two runs' emission counts, each count
//! frozen once its mark is placed, so a total weight of zero at a target node
//! means the two guessed positions coincide.
//!
//! Two builders produce mismatch graphs over an input-synchronized square:
//!
//! * [`concrete_letter_graph`] guesses an output position in each run and
//!   requires the recorded letters to differ — a weight-zero path to a
//!   coaccessible target is exactly a one-input, two-outputs divergence.
//!   To keep the node space linear the first run's letter is a parameter;
//!   callers loop it over the output alphabet (see [`mismatch_witness`]).
//! * [`register_origin_graph`] works on a test-free machine's label skeleton
//!   and guesses, per run, a register together with its defining store step
//!   and a later emission of that register.  Distinct store steps can always
//!   be fed distinct data (no tests constrain the choice), so a weight-zero
//!   path to a coaccessible target again certifies a divergence — found
//!   without ever expanding the data domain.

use std::collections::HashMap;
use std::collections::VecDeque;

use crate::model::TransducerSpec;
use crate::omega::{SquareEdge, SquareProduct};
use crate::restrict::ExpandedMachine;
use crate::{Error, Result};

/// Mark phases of the concrete-letter graph.
pub const P_NONE: u32 = 0;
/// First mark placed: run 1 recorded the parameter letter.
pub const P_FIRST: u32 = 1;
/// Second mark placed first: run 2 recorded some letter other than the
/// parameter.
pub const P_SECOND: u32 = 2;
/// Both marks placed; counters frozen; target layer.
pub const P_BOTH: u32 = 3;

/// Phases of the escape graphs, which model one run looping forever while the
/// other leaves the loop and diverges on its own.  Shared phases pair with a
/// square node; alone phases pair with a single-machine state.
pub const ESC_SHARED: u32 = 0;
/// Run 1's mark is placed; still synchronized.
pub const ESC_MARKED: u32 = 1;
/// The loop has been crossed; run 2 walks its machine alone.
pub const ESC_ALONE: u32 = 2;
/// Run 2's mark is placed; target layer.
pub const ESC_DONE: u32 = 3;

/// `sq_edge` tag of the loop-crossing edge of an escape graph, which consumes
/// no transition.
pub const CROSS_EDGE: u32 = u32::MAX;

/// One edge of a weighted mark graph.  `sq_edge` names the square-product
/// edge it simulates; `ev1`/`ev2` give the output offset at which run 1 /
/// run 2 places its mark on this edge, or `-1` when no mark is placed.
#[derive(Debug, Clone, Copy)]
pub struct MarkEdge {
    pub from: u32,
    pub to: u32,
    pub weight: i32,
    pub sq_edge: u32,
    pub ev1: i16,
    pub ev2: i16,
}

/// A finite graph over (square node, mark phase) pairs with weighted edges,
/// initial nodes, and target nodes.  Edges are stored grouped by source:
/// those of node `n` occupy `edges[edge_start[n] .. edge_start[n + 1]]`.
#[derive(Debug)]
pub struct WeightedMarkGraph {
    /// `(square node, phase)` per node.
    pub nodes: Vec<(u32, u32)>,
    pub edges: Vec<MarkEdge>,
    pub edge_start: Vec<u32>,
    pub initial: Vec<u32>,
    pub target: Vec<bool>,
}

impl WeightedMarkGraph {
    pub fn out_edges(&self, n: u32) -> &[MarkEdge] {
        &self.edges[self.edge_start[n as usize] as usize..self.edge_start[n as usize + 1] as usize]
    }

    /// Walk a witness: check that it starts at an initial node, follows
    /// adjacent edges, and ends on a target node; return its total weight.
    pub fn replay(&self, w: &PathWitness) -> Option<i64> {
        if !self.initial.contains(&w.start) {
            return None;
        }
        let mut at = w.start;
        let mut total = 0i64;
        for &e in &w.edges {
            let edge = self.edges.get(e as usize)?;
            if edge.from != at {
                return None;
            }
            total += edge.weight as i64;
            at = edge.to;
        }
        if !self.target[at as usize] {
            return None;
        }
        Some(total)
    }
}

/// A reachability question over a weighted mark graph: is some target node
/// reachable from an initial node by a path of total weight `weight`?
/// `cap` bounds the number of `(node, accumulated weight)` pairs explored.
pub struct ReachabilityQuery<'a> {
    pub graph: &'a WeightedMarkGraph,
    pub weight: i64,
    pub cap: usize,
}

pub const DEFAULT_SEARCH_CAP: usize = 10_000_000;

impl<'a> ReachabilityQuery<'a> {
    pub fn new(graph: &'a WeightedMarkGraph, weight: i64) -> Self {
        ReachabilityQuery { graph, weight, cap: DEFAULT_SEARCH_CAP }
    }
}

/// A concrete witness path: edge indices into the graph, starting at
/// `start`.  An empty edge list is the trivial path at `start`.
#[derive(Debug, Clone)]
pub struct PathWitness {
    pub start: u32,
    pub edges: Vec<u32>,
}

/// Decide [`ReachabilityQuery`] exactly, returning a concrete witness path.
///
/// The search is a breadth-first exploration of `(node, accumulated weight)`
/// pairs, so the witness found has the fewest edges among all witnesses.  Two
/// guards make it terminate:
///
/// * accumulated weights are confined to an admissible window around the
///   required weight.  If any witness exists, one exists whose partial sums
///   stay within `|W| + ng + (ng)^3` of the interval `[min(0,W), max(0,W)]`
///   (`n` nodes, `g` the largest absolute edge weight): decompose a witness
///   into a simple skeleton path and simple cycles, solve the cycle-weight
///   equation with small multiplicities, and schedule cycles greedily — each
///   partial sum is then bounded by the skeleton range plus the total cycle
///   mass, which the small-multiplicity bound keeps cubic in `ng`.  The
///   window is additionally clamped to `2^40`; a path whose partial sums
///   left a clamped window would visit more distinct pairs than any
///   realistic `cap` admits, so the clamp never changes an answer that the
///   cap lets us give.
/// * at most `cap` pairs are explored; beyond that the search aborts with a
///   resource error rather than answer heuristically.
///
/// A `None` answer therefore means: no witness whose partial sums stay in
/// the window, which by the bound above means no witness at all.
pub fn target_weight_reachable(q: &ReachabilityQuery) -> Result<Option<PathWitness>> {
    let g = q.graph;
    let want = q.weight;
    let n = g.nodes.len();
    if n == 0 || g.initial.is_empty() {
        return Ok(None);
    }

    // Nodes that can reach a target at all, weights aside.
    let useful = backward_reachable(g);
    if !g.initial.iter().any(|&s| useful[s as usize]) {
        return Ok(None);
    }
    let (rem_lo, rem_hi) = remaining_bounds(g, &useful);

    let gmax = g.edges.iter().map(|e| (e.weight as i64).abs()).max().unwrap_or(0);
    let band = (n as i64).saturating_mul(gmax);
    let delta = want
        .abs()
        .saturating_add(band)
        .saturating_add(band.saturating_mul(band).saturating_mul(band))
        .min(1 << 40);
    let lo = want.min(0).saturating_sub(delta);
    let hi = want.max(0).saturating_add(delta);

    struct Entry {
        node: u32,
        weight: i64,
        parent: u32,
        edge: u32,
    }
    let mut arena: Vec<Entry> = Vec::new();
    let mut seen: HashMap<(u32, i64), ()> = HashMap::new();
    let mut queue: VecDeque<u32> = VecDeque::new();

    let push = |arena: &mut Vec<Entry>,
                    seen: &mut HashMap<(u32, i64), ()>,
                    queue: &mut VecDeque<u32>,
                    node: u32,
                    weight: i64,
                    parent: u32,
                    edge: u32|
     -> Option<u32> {
        if weight < lo || weight > hi || !useful[node as usize] {
            return None;
        }
        // The weight still needed must be attainable from here.
        let need = want - weight;
        if need < rem_lo[node as usize] || need > rem_hi[node as usize] {
            return None;
        }
        if seen.insert((node, weight), ()).is_some() {
            return None;
        }
        arena.push(Entry { node, weight, parent, edge });
        let id = arena.len() as u32 - 1;
        queue.push_back(id);
        Some(id)
    };

    let rebuild = |arena: &Vec<Entry>, mut at: u32| -> PathWitness {
        let mut edges = Vec::new();
        while arena[at as usize].parent != u32::MAX {
            edges.push(arena[at as usize].edge);
            at = arena[at as usize].parent;
        }
        edges.reverse();
        PathWitness { start: arena[at as usize].node, edges }
    };

    for &s in &g.initial {
        if let Some(id) = push(&mut arena, &mut seen, &mut queue, s, 0, u32::MAX, u32::MAX) {
            if g.target[s as usize] && want == 0 {
                return Ok(Some(rebuild(&arena, id)));
            }
        }
    }

    while let Some(cur) = queue.pop_front() {
        let (node, weight) = (arena[cur as usize].node, arena[cur as usize].weight);
        let (b, e) = (g.edge_start[node as usize] as usize, g.edge_start[node as usize + 1] as usize);
        for idx in b..e {
            let edge = &g.edges[idx];
            let next = weight + edge.weight as i64;
            if let Some(id) =
                push(&mut arena, &mut seen, &mut queue, edge.to, next, cur, idx as u32)
            {
                if g.target[edge.to as usize] && next == want {
                    return Ok(Some(rebuild(&arena, id)));
                }
            }
        }
        if arena.len() > q.cap {
            return Err(Error::Resource(format!(
                "weight-tracked reachability explored more than {} states",
                q.cap
            )));
        }
    }
    Ok(None)
}

/// Per node, whether some target node is reachable from it.
fn backward_reachable(g: &WeightedMarkGraph) -> Vec<bool> {
    let n = g.nodes.len();
    // Reverse adjacency in compressed layout.
    let mut count = vec![0u32; n + 1];
    for e in &g.edges {
        count[e.to as usize + 1] += 1;
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut rev = vec![0u32; g.edges.len()];
    let mut fill = count.clone();
    for e in &g.edges {
        rev[fill[e.to as usize] as usize] = e.from;
        fill[e.to as usize] += 1;
    }
    let mut seen: Vec<bool> = g.target.clone();
    let mut stack: Vec<u32> = (0..n as u32).filter(|&i| seen[i as usize]).collect();
    while let Some(v) = stack.pop() {
        for i in count[v as usize]..count[v as usize + 1] {
            let u = rev[i as usize];
            if !seen[u as usize] {
                seen[u as usize] = true;
                stack.push(u);
            }
        }
    }
    seen
}

const REM_INF: i64 = i64::MAX / 4;

/// Conservative per-node bounds on the total weight of any path from the
/// node to a target through useful nodes.  Exact path optima are not needed:
/// the search only requires every achievable remaining weight to lie inside
/// the bracket.  Strongly connected components are condensed; a component
/// holding a positive-weight internal edge may harbor a pumpable
/// positive-weight cycle, so its upper bound saturates (symmetrically for
/// negative edges and the lower bound).  A component free of positive
/// internal edges cannot gain weight internally, so its upper bound is the
/// best over leaving edges and in-component targets; again symmetrically.
/// This is what stops the search from chasing monotone weight drift in
/// regions that can only ever lower (or only raise) the remaining total.
fn remaining_bounds(g: &WeightedMarkGraph, useful: &[bool]) -> (Vec<i64>, Vec<i64>) {
    let n = g.nodes.len();
    let mut lo = vec![REM_INF; n];
    let mut hi = vec![-REM_INF; n];

    // Iterative Tarjan over the useful subgraph; components pop after every
    // component they can reach, so bounds propagate backward as we go.
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut comp = vec![u32::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut next_comp = 0u32;
    let mut comp_lo: Vec<i64> = Vec::new();
    let mut comp_hi: Vec<i64> = Vec::new();
    // Frame: (node, next out-edge offset).
    let mut frames: Vec<(u32, u32)> = Vec::new();

    for root in 0..n as u32 {
        if !useful[root as usize] || index[root as usize] != u32::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        on_stack[root as usize] = true;
        stack.push(root);

        while let Some(&(v, ei)) = frames.last() {
            let base = g.edge_start[v as usize];
            let end = g.edge_start[v as usize + 1];
            if base + ei < end {
                frames.last_mut().unwrap().1 += 1;
                let w = g.edges[(base + ei) as usize].to;
                if !useful[w as usize] {
                    continue;
                }
                if index[w as usize] == u32::MAX {
                    index[w as usize] = next_index;
                    low[w as usize] = next_index;
                    next_index += 1;
                    on_stack[w as usize] = true;
                    stack.push(w);
                    frames.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
            } else {
                frames.pop();
                if let Some(&(p, _)) = frames.last() {
                    low[p as usize] = low[p as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    // Pop the component and compute its bounds.
                    let mut members: Vec<u32> = Vec::new();
                    loop {
                        let m = stack.pop().unwrap();
                        on_stack[m as usize] = false;
                        comp[m as usize] = next_comp;
                        members.push(m);
                        if m == v {
                            break;
                        }
                    }
                    let mut c_hi = -REM_INF;
                    let mut c_lo = REM_INF;
                    let mut pos_internal = false;
                    let mut neg_internal = false;
                    for &m in &members {
                        if g.target[m as usize] {
                            c_hi = c_hi.max(0);
                            c_lo = c_lo.min(0);
                        }
                        for e in g.out_edges(m) {
                            if !useful[e.to as usize] {
                                continue;
                            }
                            if comp[e.to as usize] == next_comp {
                                pos_internal |= e.weight > 0;
                                neg_internal |= e.weight < 0;
                            } else {
                                let t = comp[e.to as usize] as usize;
                                c_hi = c_hi.max((e.weight as i64).saturating_add(comp_hi[t]));
                                c_lo = c_lo.min((e.weight as i64).saturating_add(comp_lo[t]));
                            }
                        }
                    }
                    if pos_internal {
                        c_hi = REM_INF;
                    }
                    if neg_internal {
                        c_lo = -REM_INF;
                    }
                    comp_hi.push(c_hi.clamp(-REM_INF, REM_INF));
                    comp_lo.push(c_lo.clamp(-REM_INF, REM_INF));
                    for &m in &members {
                        hi[m as usize] = comp_hi[next_comp as usize];
                        lo[m as usize] = comp_lo[next_comp as usize];
                    }
                    next_comp += 1;
                }
            }
        }
    }
    (lo, hi)
}

/// Builder that interns (square node, phase) pairs on first use and lays
/// edges out grouped by source as nodes are processed.
struct GraphBuilder {
    nodes: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), u32>,
    edges: Vec<MarkEdge>,
    edge_start: Vec<u32>,
    initial: Vec<u32>,
    target: Vec<bool>,
}

impl GraphBuilder {
    fn new() -> Self {
        GraphBuilder {
            nodes: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            edge_start: vec![0],
            initial: Vec::new(),
            target: Vec::new(),
        }
    }

    fn intern(&mut self, sq: u32, phase: u32, is_target: bool) -> u32 {
        match self.index.get(&(sq, phase)) {
            Some(&id) => {
                if is_target {
                    self.target[id as usize] = true;
                }
                id
            }
            None => {
                let id = self.nodes.len() as u32;
                self.nodes.push((sq, phase));
                self.index.insert((sq, phase), id);
                self.target.push(is_target);
                id
            }
        }
    }

    /// Drive the worklist: `expand(node)` appends all out-edges of `node`
    /// via `edge`.  Nodes are finalized in discovery order, so the edge
    /// array ends up grouped by source.
    fn run(mut self, mut expand: impl FnMut(&mut Self, u32)) -> WeightedMarkGraph {
        let mut done = 0usize;
        while done < self.nodes.len() {
            let id = done as u32;
            debug_assert_eq!(self.edge_start.len(), done + 1);
            expand(&mut self, id);
            self.edge_start.push(self.edges.len() as u32);
            done += 1;
        }
        WeightedMarkGraph {
            nodes: self.nodes,
            edges: self.edges,
            edge_start: self.edge_start,
            initial: self.initial,
            target: self.target,
        }
    }

    fn edge(&mut self, from: u32, to: u32, weight: i64, sq_edge: u32, ev1: i16, ev2: i16) {
        let weight = i32::try_from(weight).expect("mark edge weight fits i32");
        self.edges.push(MarkEdge { from, to, weight, sq_edge, ev1, ev2 });
    }
}

/// Square adjacency helper: edge ids leaving a square node.
fn square_out(square: &SquareProduct, n: u32) -> impl Iterator<Item = (u32, &SquareEdge)> {
    square.succ[n as usize].iter().map(move |&e| (e, &square.edges[e as usize]))
}

/// Build the concrete-letter mismatch graph of a square for one fixed
/// first-run letter.
///
/// Phases: no marks yet, first mark placed (run 1 emitted `letter` at the
/// guessed position), second mark placed first (run 2 emitted something other
/// than `letter`), both marks placed.  While a run's mark is unplaced its
/// emission count grows with every output letter; placing the mark freezes
/// the count at the guessed offset.  Weights carry (run 1 count) − (run 2
/// count), so a weight-zero path into the both-marks layer pins two distinct
/// letters at one common output position.  Both-marks nodes whose square node
/// satisfies `targets` become targets; square nodes outside `keep` are not
/// explored at all.  Callers choose the masks: for functionality both are
/// pair-coaccessibility (witness interiors are themselves coaccessible); for
/// the loop patterns `targets` picks the loop anchors and `keep` is their
/// backward closure.
pub fn concrete_letter_graph(
    square: &SquareProduct,
    m1: &ExpandedMachine,
    m2: &ExpandedMachine,
    keep: &[bool],
    targets: &[bool],
    letter: u32,
) -> WeightedMarkGraph {
    let mut b = GraphBuilder::new();
    if !keep.is_empty() && keep[0] {
        let id = b.intern(0, P_NONE, false);
        b.initial.push(id);
    }
    b.run(|b, id| {
        let (sq, phase) = b.nodes[id as usize];
        for (eid, edge) in square_out(square, sq) {
            if !keep[edge.to as usize] {
                continue;
            }
            let o1 = m1.chunks.get(m1.trans[edge.t1 as usize].chunk);
            let o2 = m2.chunks.get(m2.trans[edge.t2 as usize].chunk);
            let (l1, l2) = (o1.len() as i64, o2.len() as i64);
            match phase {
                P_NONE => {
                    let to = b.intern(edge.to, P_NONE, false);
                    b.edge(id, to, l1 - l2, eid, -1, -1);
                    for (i, &s1) in o1.iter().enumerate() {
                        if s1 != letter {
                            continue;
                        }
                        let to = b.intern(edge.to, P_FIRST, false);
                        b.edge(id, to, i as i64 - l2, eid, i as i16, -1);
                        for (j, &s2) in o2.iter().enumerate() {
                            if s2 == letter {
                                continue;
                            }
                            let to = b.intern(edge.to, P_BOTH, targets[edge.to as usize]);
                            b.edge(id, to, i as i64 - j as i64, eid, i as i16, j as i16);
                        }
                    }
                    for (j, &s2) in o2.iter().enumerate() {
                        if s2 == letter {
                            continue;
                        }
                        let to = b.intern(edge.to, P_SECOND, false);
                        b.edge(id, to, l1 - j as i64, eid, -1, j as i16);
                    }
                }
                P_FIRST => {
                    let to = b.intern(edge.to, P_FIRST, false);
                    b.edge(id, to, -l2, eid, -1, -1);
                    for (j, &s2) in o2.iter().enumerate() {
                        if s2 == letter {
                            continue;
                        }
                        let to = b.intern(edge.to, P_BOTH, targets[edge.to as usize]);
                        b.edge(id, to, -(j as i64), eid, -1, j as i16);
                    }
                }
                P_SECOND => {
                    let to = b.intern(edge.to, P_SECOND, false);
                    b.edge(id, to, l1, eid, -1, -1);
                    for (i, &s1) in o1.iter().enumerate() {
                        if s1 != letter {
                            continue;
                        }
                        let to = b.intern(edge.to, P_BOTH, targets[edge.to as usize]);
                        b.edge(id, to, i as i64, eid, i as i16, -1);
                    }
                }
                // Both marks placed: the positions are fixed, so further
                // synchronized steps shift nothing. The extension edges
                // matter when targets are not suffix-closed (loop anchors
                // lying beyond the mark placement).
                _ => {
                    let to = b.intern(edge.to, P_BOTH, targets[edge.to as usize]);
                    b.edge(id, to, 0, eid, -1, -1);
                }
            }
        }
    })
}

/// A mismatch witness found by [`mismatch_witness`]: the first-run letter it
/// was found under, the graph, and the weight-zero path.
#[derive(Debug)]
pub struct MismatchWitness {
    pub letter: u32,
    pub graph: WeightedMarkGraph,
    pub path: PathWitness,
}

/// Search the square for a one-input, two-outputs divergence: two runs over a
/// common input, both extendable to final runs over a common future, whose
/// outputs differ at some position.  Loops the first-run letter over the
/// output alphabet, building one concrete-letter graph per letter.
pub fn mismatch_witness(
    square: &SquareProduct,
    m1: &ExpandedMachine,
    m2: &ExpandedMachine,
    coacc: &[bool],
    cap: usize,
) -> Result<Option<MismatchWitness>> {
    for letter in 0..m1.out_syms.len() as u32 {
        let graph = concrete_letter_graph(square, m1, m2, coacc, coacc, letter);
        let q = ReachabilityQuery { graph: &graph, weight: 0, cap };
        if let Some(path) = target_weight_reachable(&q)? {
            return Ok(Some(MismatchWitness { letter, graph, path }));
        }
    }
    Ok(None)
}

/// Decode the two mark events of a completed concrete-letter witness:
/// `(square edge, output offset, output symbol)` for run 1 and run 2.
pub fn concrete_mark_events(
    graph: &WeightedMarkGraph,
    path: &PathWitness,
    m1: &ExpandedMachine,
    m2: &ExpandedMachine,
    square: &SquareProduct,
) -> (Option<(u32, usize, u32)>, Option<(u32, usize, u32)>) {
    let mut first = None;
    let mut second = None;
    for &e in &path.edges {
        let edge = &graph.edges[e as usize];
        let sq = &square.edges[edge.sq_edge as usize];
        if edge.ev1 >= 0 {
            let chunk = m1.chunks.get(m1.trans[sq.t1 as usize].chunk);
            first = Some((edge.sq_edge, edge.ev1 as usize, chunk[edge.ev1 as usize]));
        }
        if edge.ev2 >= 0 {
            let chunk = m2.chunks.get(m2.trans[sq.t2 as usize].chunk);
            second = Some((edge.sq_edge, edge.ev2 as usize, chunk[edge.ev2 as usize]));
        }
    }
    (first, second)
}

/// Per-run watch state of the register-origin graph, encoded into a phase.
/// `0` is idle, `1 + r` is watching register `r`, `k + 1` is done.
pub fn ro_phase(num_registers: usize, w1: u32, w2: u32) -> u32 {
    w1 * (num_registers as u32 + 2) + w2
}

pub fn ro_split(num_registers: usize, phase: u32) -> (u32, u32) {
    let base = num_registers as u32 + 2;
    (phase / base, phase % base)
}

/// Alone-phase encoding of the register-origin escape graph: run 2's watch
/// state, offset past the shared phase space.
pub fn ro_escape_phase(num_registers: usize, w2: u32) -> u32 {
    let base = num_registers as u32 + 2;
    base * base + w2
}

/// Split an escape-graph phase: `Ok((w1, w2))` while shared, `Err(w2)` once
/// run 2 walks alone.
pub fn ro_escape_split(num_registers: usize, phase: u32) -> std::result::Result<(u32, u32), u32> {
    let base = num_registers as u32 + 2;
    if phase < base * base {
        Ok(ro_split(num_registers, phase))
    } else {
        Err(phase - base * base)
    }
}

/// Build the register-origin mismatch graph of a test-free machine's label
/// skeleton square.
///
/// Each run guesses a register `r`, the step at which its emitted content was
/// stored, and a later emission of `r`; between store and emission `r` must
/// not be reassigned, and outputs read the post-update valuation, so a store
/// and an emission on one transition pair up as an instant guess.  A watch
/// may also start at the very beginning, covering registers that still hold
/// the initial fill when emitted.  The two store steps must differ — two
/// stores of the current datum at the same step, or two initial fills, can
/// never hold different data — which is enforced by forbidding both runs to
/// place their store guess on one square edge and by never starting both
/// watches at the beginning.  Distinct steps can always be fed distinct data
/// because no tests constrain the input.  Weights freeze each run's emission
/// count at the guessed emission offset, so a weight-zero path into the
/// both-done layer pins two necessarily-different data at one common output
/// position.  Both-done nodes at square nodes satisfying `targets` are
/// targets; square nodes outside `keep` are not explored (see
/// [`concrete_letter_graph`] on choosing the masks).
///
/// Transitions with register-to-register copies are rejected: a copied value's
/// store step is not the copying step, so the watch discipline would
/// misattribute origins.  Run copy removal first.
pub fn register_origin_graph(
    t: &TransducerSpec,
    skeleton: &ExpandedMachine,
    square: &SquareProduct,
    keep: &[bool],
    targets: &[bool],
) -> Result<WeightedMarkGraph> {
    check_register_origin_input(t)?;
    let k = t.registers.len();
    let done = k as u32 + 1;

    let mut b = GraphBuilder::new();
    if !keep.is_empty() && keep[0] {
        for (w1, w2) in watch_starts(k) {
            let id = b.intern(0, ro_phase(k, w1, w2), false);
            b.initial.push(id);
        }
    }
    Ok(b.run(|b, id| {
        let (sq, phase) = b.nodes[id as usize];
        let (w1, w2) = ro_split(k, phase);
        if w1 == done && w2 == done {
            return; // target layer: futures are covered by the target mask
        }
        for (eid, edge) in square_out(square, sq) {
            if !keep[edge.to as usize] {
                continue;
            }
            let tr1 = &t.transitions[skeleton.trans[edge.t1 as usize].orig as usize];
            let tr2 = &t.transitions[skeleton.trans[edge.t2 as usize].orig as usize];
            for o1 in step_options(tr1, w1, k) {
                for o2 in step_options(tr2, w2, k) {
                    if o1.store_here && o2.store_here {
                        continue; // equal store steps can never differ in data
                    }
                    let np = ro_phase(k, o1.watch, o2.watch);
                    let is_target =
                        o1.watch == done && o2.watch == done && targets[edge.to as usize];
                    let to = b.intern(edge.to, np, is_target);
                    b.edge(id, to, o1.contrib - o2.contrib, eid, o1.emit_at, o2.emit_at);
                }
            }
        }
    }))
}

/// Build the concrete-letter escape graph for one fixed first-run letter.
///
/// This models the loop-escape divergence shape: both runs share an input
/// prefix, run 1 places its mark (it emitted `letter`), the pair reaches a
/// square node where run 1 can loop forever through acceptance while run 2's
/// loop output is empty, and run 2 then leaves the loop alone, eventually
/// emitting a different letter at the same frozen position and extending to a
/// final productive run.  `cross` marks the square nodes anchoring such a
/// loop; `target2` marks the single-machine states from which run 2 can
/// finish.  Because run 2 emits nothing on the loop, its emission count is
/// unaffected by how often the loop is pumped, so a weight-zero path certifies
/// the position match for every pump count at once.  The run-2 mark is placed
/// strictly after the loop; divergences whose second mark falls before the
/// loop already complete both marks while synchronized, and a run-2-silent
/// loop is in particular a synchronized loop, so [`concrete_letter_graph`]
/// with loop-anchor targets covers those.
pub fn escape_letter_graph(
    square: &SquareProduct,
    m: &ExpandedMachine,
    cross: &[bool],
    keep: &[bool],
    target2: &[bool],
    letter: u32,
) -> WeightedMarkGraph {
    let mut b = GraphBuilder::new();
    if !keep.is_empty() && keep[0] {
        let id = b.intern(0, ESC_SHARED, false);
        b.initial.push(id);
    }
    b.run(|b, id| {
        let (node, phase) = b.nodes[id as usize];
        match phase {
            ESC_SHARED | ESC_MARKED => {
                for (eid, edge) in square_out(square, node) {
                    if !keep[edge.to as usize] {
                        continue;
                    }
                    let o1 = m.chunks.get(m.trans[edge.t1 as usize].chunk);
                    let l2 = m.chunks.len_of(m.trans[edge.t2 as usize].chunk) as i64;
                    if phase == ESC_SHARED {
                        let to = b.intern(edge.to, ESC_SHARED, false);
                        b.edge(id, to, o1.len() as i64 - l2, eid, -1, -1);
                        for (i, &s1) in o1.iter().enumerate() {
                            if s1 != letter {
                                continue;
                            }
                            let to = b.intern(edge.to, ESC_MARKED, false);
                            b.edge(id, to, i as i64 - l2, eid, i as i16, -1);
                        }
                    } else {
                        let to = b.intern(edge.to, ESC_MARKED, false);
                        b.edge(id, to, -l2, eid, -1, -1);
                    }
                }
                if phase == ESC_MARKED && cross[node as usize] {
                    let state = square.nodes[node as usize].1;
                    let to = b.intern(state, ESC_ALONE, false);
                    b.edge(id, to, 0, CROSS_EDGE, -1, -1);
                }
            }
            ESC_ALONE => {
                // `node` is now a machine state; edge tags are transition ids.
                for (tid, tr) in m.transitions_from(node as usize) {
                    let o2 = m.chunks.get(tr.chunk);
                    let to = b.intern(tr.target, ESC_ALONE, false);
                    b.edge(id, to, -(o2.len() as i64), tid as u32, -1, -1);
                    for (j, &s2) in o2.iter().enumerate() {
                        if s2 == letter {
                            continue;
                        }
                        let is_target = target2[tr.target as usize];
                        let to = b.intern(tr.target, ESC_DONE, is_target);
                        b.edge(id, to, -(j as i64), tid as u32, -1, j as i16);
                    }
                }
            }
            _ => {} // run-2 mark placed: terminal
        }
    })
}

/// Build the register-origin escape graph of a test-free machine's label
/// skeleton square.
///
/// The loop-escape shape of [`escape_letter_graph`] with register-origin
/// marks: run 1's origin guess completes while synchronized, the pair reaches
/// a loop anchor, and run 2 leaves alone to finish its own guess and extend
/// to a final run.  Run 2's watch may be open while crossing the loop, so the
/// anchor condition depends on it: `cross_idle` anchors loops whose run-2
/// output is empty, and `cross_watch[r]` additionally requires that the loop
/// never reassigns `r`, keeping an open watch on `r` valid across any number
/// of pumps.  A watch that both opens and closes after the loop never
/// constrains it, which `cross_idle` covers.  Shared-phase nodes pair with a
/// square node, alone-phase nodes with a skeleton state (see
/// [`ro_escape_split`]); alone-phase edge tags are skeleton transition ids.
pub fn register_origin_escape_graph(
    t: &TransducerSpec,
    skeleton: &ExpandedMachine,
    square: &SquareProduct,
    cross_idle: &[bool],
    cross_watch: &[Vec<bool>],
    keep: &[bool],
    target2: &[bool],
) -> Result<WeightedMarkGraph> {
    check_register_origin_input(t)?;
    let k = t.registers.len();
    let done = k as u32 + 1;

    let mut b = GraphBuilder::new();
    if !keep.is_empty() && keep[0] {
        for (w1, w2) in watch_starts(k) {
            let id = b.intern(0, ro_phase(k, w1, w2), false);
            b.initial.push(id);
        }
    }
    Ok(b.run(|b, id| {
        let (node, phase) = b.nodes[id as usize];
        match ro_escape_split(k, phase) {
            Ok((w1, w2)) => {
                for (eid, edge) in square_out(square, node) {
                    if !keep[edge.to as usize] {
                        continue;
                    }
                    let tr1 = &t.transitions[skeleton.trans[edge.t1 as usize].orig as usize];
                    let tr2 = &t.transitions[skeleton.trans[edge.t2 as usize].orig as usize];
                    for o1 in step_options(tr1, w1, k) {
                        for o2 in step_options(tr2, w2, k) {
                            if o1.store_here && o2.store_here {
                                continue;
                            }
                            if o1.watch == done && o2.watch == done {
                                // Both marks before any loop is a synchronized
                                // divergence, not an escape; prune.
                                continue;
                            }
                            let np = ro_phase(k, o1.watch, o2.watch);
                            let to = b.intern(edge.to, np, false);
                            b.edge(id, to, o1.contrib - o2.contrib, eid, o1.emit_at, o2.emit_at);
                        }
                    }
                }
                if w1 == done && w2 != done {
                    let anchored = if w2 == 0 {
                        cross_idle[node as usize]
                    } else {
                        cross_watch[w2 as usize - 1][node as usize]
                    };
                    if anchored {
                        let state = square.nodes[node as usize].1;
                        let to = b.intern(state, ro_escape_phase(k, w2), false);
                        b.edge(id, to, 0, CROSS_EDGE, -1, -1);
                    }
                }
            }
            Err(w2) if w2 != done => {
                // `node` is a skeleton state; run 2 walks alone.
                for (tid, tr) in skeleton.transitions_from(node as usize) {
                    let orig = &t.transitions[tr.orig as usize];
                    for o2 in step_options(orig, w2, k) {
                        let is_target = o2.watch == done && target2[tr.target as usize];
                        let to = b.intern(tr.target, ro_escape_phase(k, o2.watch), is_target);
                        b.edge(id, to, -o2.contrib, tid as u32, -1, o2.emit_at);
                    }
                }
            }
            Err(_) => {} // run-2 mark placed: terminal
        }
    }))
}

fn check_register_origin_input(t: &TransducerSpec) -> Result<()> {
    if !crate::normalize::is_test_free(t) {
        return Err(Error::Precondition(
            "register-origin analysis needs a test-free machine".into(),
        ));
    }
    if t.transitions.iter().any(|tr| !tr.assign.is_plain()) {
        return Err(Error::Precondition(
            "register-origin analysis needs plain assignments; remove copies first".into(),
        ));
    }
    Ok(())
}

/// Initial watch pairs: at most one run may cover the initial fill.
fn watch_starts(k: usize) -> Vec<(u32, u32)> {
    let mut starts = vec![(0, 0)];
    for r in 0..k as u32 {
        starts.push((1 + r, 0));
        starts.push((0, 1 + r));
    }
    starts
}

/// Options for one run crossing one original transition: successor watch
/// state, emission-count contribution, whether a store guess is placed here,
/// and the emission offset if one is chosen.
struct StepOpt {
    watch: u32,
    contrib: i64,
    store_here: bool,
    emit_at: i16,
}

fn step_options(tr: &crate::model::Transition, watch: u32, k: usize) -> Vec<StepOpt> {
    let idle = 0u32;
    let done = k as u32 + 1;
    let full = tr.output.len() as i64;
    let mut opts = Vec::new();
    if watch == done {
        opts.push(StepOpt { watch: done, contrib: 0, store_here: false, emit_at: -1 });
        return opts;
    }
    if watch == idle {
        opts.push(StepOpt { watch: idle, contrib: full, store_here: false, emit_at: -1 });
        for &r in &tr.assign.store_current {
            opts.push(StepOpt { watch: 1 + r as u32, contrib: full, store_here: true, emit_at: -1 });
            for (o, item) in tr.output.iter().enumerate() {
                if item.register == Some(r) {
                    opts.push(StepOpt {
                        watch: done,
                        contrib: o as i64,
                        store_here: true,
                        emit_at: o as i16,
                    });
                }
            }
        }
    } else {
        let r = watch as usize - 1;
        if tr.assign.targets().any(|x| x == r) {
            return opts; // the watched origin is overwritten: path dies
        }
        opts.push(StepOpt { watch, contrib: full, store_here: false, emit_at: -1 });
        for (o, item) in tr.output.iter().enumerate() {
            if item.register == Some(r) {
                opts.push(StepOpt {
                    watch: done,
                    contrib: o as i64,
                    store_here: false,
                    emit_at: o as i16,
                });
            }
        }
    }
    opts
}

#[cfg(test)]
mod tests;
