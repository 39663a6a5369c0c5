//! Büchi graphs: emptiness with lasso witnesses, strongly connected
//! components, coaccessibility, and synchronized squares.
//!
//! A `BuchiGraph` is a finite directed graph with initial nodes and a family
//! of accepting sets (generalized Büchi). Accepting sets may be given over
//! nodes or over edges; node sets are translated to edge sets (an infinite
//! path visits a node infinitely often iff it takes an edge into it
//! infinitely often), so everything downstream works uniformly on edges.
//!
//! Emptiness runs a nested depth-first search over the implicit
//! degeneralization with a waiting counter: product state `(n, i)` awaits an
//! edge of family `i`; reaching counter `k` (all families seen) is the
//! accepting flag, and the counter resets on the next edge. A reported
//! `RunLasso` replays against the graph and covers every family on its cycle.

use std::collections::HashMap;

use crate::restrict::ExpandedMachine;

/// Accepting structure under construction: node sets are resolved to edge
/// sets when the graph is built.
#[derive(Debug, Clone, Default)]
pub struct Families {
    node_sets: Vec<Vec<usize>>,
    edge_sets: Vec<Vec<usize>>,
}

impl Families {
    pub fn from_node_sets(sets: &[Vec<usize>]) -> Self {
        Families { node_sets: sets.to_vec(), edge_sets: Vec::new() }
    }

    pub fn from_edge_sets(sets: Vec<Vec<usize>>) -> Self {
        Families { node_sets: Vec::new(), edge_sets: sets }
    }

    pub fn push_node_set(&mut self, nodes: Vec<usize>) {
        self.node_sets.push(nodes);
    }

    pub fn push_edge_set(&mut self, edges: Vec<usize>) {
        self.edge_sets.push(edges);
    }

    pub fn len(&self) -> usize {
        self.node_sets.len() + self.edge_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An accepted lasso: `stem` runs from `start` (an initial node) to the head
/// of `cycle`; the cycle closes on itself and carries an edge of every
/// accepting family. Both parts are edge-id sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLasso {
    pub start: usize,
    pub stem: Vec<usize>,
    pub cycle: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BuchiGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    succ: Vec<Vec<u32>>,
    initial: Vec<usize>,
    /// Per edge, bit `i` set when the edge belongs to family `i`.
    edge_mask: Vec<u32>,
    num_families: usize,
}

impl BuchiGraph {
    pub fn new(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        initial: Vec<usize>,
        families: Families,
    ) -> Self {
        let num_families = families.len();
        assert!(num_families <= 32, "at most 32 accepting families");
        let mut edge_mask = vec![0u32; edges.len()];
        let mut bit = 0;
        for set in &families.node_sets {
            let mut member = vec![false; num_nodes];
            for &n in set {
                member[n] = true;
            }
            for (e, &(_, to)) in edges.iter().enumerate() {
                if member[to] {
                    edge_mask[e] |= 1 << bit;
                }
            }
            bit += 1;
        }
        for set in &families.edge_sets {
            for &e in set {
                edge_mask[e] |= 1 << bit;
            }
            bit += 1;
        }
        let mut succ = vec![Vec::new(); num_nodes];
        for (e, &(from, _)) in edges.iter().enumerate() {
            succ[from].push(e as u32);
        }
        BuchiGraph { num_nodes, edges, succ, initial, edge_mask, num_families }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, n: usize) -> &[u32] {
        &self.succ[n]
    }

    pub fn edge_in_family(&self, e: usize, family: usize) -> bool {
        self.edge_mask[e] & (1 << family) != 0
    }

    /// Some accepted lasso, if the ω-language is nonempty.
    pub fn nonempty(&self) -> Option<RunLasso> {
        self.nonempty_from(&self.initial)
    }

    /// Emptiness from the given start nodes instead of the graph's initials.
    pub fn nonempty_from(&self, starts: &[usize]) -> Option<RunLasso> {
        let k = self.num_families;
        // Implicit degeneralization: counter i in 0..=k awaits family i,
        // k means "all seen" (the accepting flag); any edge resets it to 0
        // after advancing as far as the edge's families allow.
        let width = k + 1;
        let pid = |n: usize, i: usize| n * width + i;
        let advance = |mut i: usize, e: usize| {
            if i == k {
                i = 0;
            }
            while i < k && self.edge_in_family(e, i) {
                i += 1;
            }
            i
        };
        let mut blue = vec![WHITE; self.num_nodes * width];
        let mut red = vec![false; self.num_nodes * width];

        for &start in starts {
            let s0 = pid(start, 0);
            if blue[s0] != WHITE {
                continue;
            }
            blue[s0] = GRAY;
            // frames: (node, counter, next successor index)
            let mut stack: Vec<(usize, usize, usize)> = vec![(start, 0, 0)];
            // gray chain as edge ids, parallel to stack[1..]
            let mut path: Vec<usize> = Vec::new();
            while let Some(&(n, i, next)) = stack.last() {
                if next < self.succ[n].len() {
                    stack.last_mut().unwrap().2 += 1;
                    let e = self.succ[n][next] as usize;
                    let (_, to) = self.edges[e];
                    let j = advance(i, e);
                    if blue[pid(to, j)] == WHITE {
                        blue[pid(to, j)] = GRAY;
                        path.push(e);
                        stack.push((to, j, 0));
                    }
                    continue;
                }
                // post-order: red search from accepting nodes
                if i == k {
                    if let Some(lasso) =
                        self.red_search(n, i, &stack, &path, &blue, &mut red, width)
                    {
                        return Some(RunLasso { start, stem: lasso.0, cycle: lasso.1 });
                    }
                }
                blue[pid(n, i)] = BLACK;
                stack.pop();
                path.pop();
            }
        }
        None
    }

    /// Inner search of the nested DFS: from the accepting product node
    /// `(s, si)`, look for a product node on the current gray chain (every
    /// gray node leads back down the chain to `(s, si)`, closing a cycle
    /// through the accepting node). Red marks persist across invocations.
    #[allow(clippy::too_many_arguments)]
    fn red_search(
        &self,
        s: usize,
        si: usize,
        blue_stack: &[(usize, usize, usize)],
        blue_path: &[usize],
        blue: &[u8],
        red: &mut [bool],
        width: usize,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let k = self.num_families;
        let pid = |n: usize, i: usize| n * width + i;
        let advance = |mut i: usize, e: usize| {
            if i == k {
                i = 0;
            }
            while i < k && self.edge_in_family(e, i) {
                i += 1;
            }
            i
        };
        if red[pid(s, si)] {
            return None;
        }
        red[pid(s, si)] = true;
        // frames: (node, counter, next successor index, incoming edge)
        let mut stack: Vec<(usize, usize, usize, usize)> = vec![(s, si, 0, usize::MAX)];
        while let Some(&(n, i, next, _)) = stack.last() {
            if next >= self.succ[n].len() {
                stack.pop();
                continue;
            }
            stack.last_mut().unwrap().2 += 1;
            let e = self.succ[n][next] as usize;
            let (_, to) = self.edges[e];
            let j = advance(i, e);
            let t = pid(to, j);
            if blue[t] == GRAY {
                // Cycle at s: red stack path s -> n, edge e to the gray node
                // (to, j), then the gray chain from (to, j) back down to
                // (s, si). The stem is the whole gray chain from the start.
                let mut cycle: Vec<usize> = stack[1..].iter().map(|f| f.3).collect();
                cycle.push(e);
                let pos = blue_stack
                    .iter()
                    .position(|&(bn, bi, _)| pid(bn, bi) == t)
                    .expect("gray product node is on the blue stack");
                cycle.extend_from_slice(&blue_path[pos..]);
                return Some((blue_path.to_vec(), cycle));
            }
            if !red[t] {
                red[t] = true;
                stack.push((to, j, 0, e));
            }
        }
        None
    }

    /// Nodes from which some accepting infinite path exists: backward closure
    /// of the fair strongly connected components (nontrivial components
    /// containing an internal edge of every family).
    pub fn coaccessible(&self) -> Vec<bool> {
        let scc = self.sccs();
        let mut internal_mask = vec![0u32; scc.count];
        let mut nontrivial = vec![false; scc.count];
        for (e, &(from, to)) in self.edges.iter().enumerate() {
            if scc.comp[from] == scc.comp[to] {
                internal_mask[scc.comp[from]] |= self.edge_mask[e];
                nontrivial[scc.comp[from]] = true;
            }
        }
        let full: u32 = if self.num_families == 32 {
            u32::MAX
        } else {
            (1u32 << self.num_families) - 1
        };
        let mut good = vec![false; self.num_nodes];
        for n in 0..self.num_nodes {
            let c = scc.comp[n];
            if nontrivial[c] && internal_mask[c] & full == full {
                good[n] = true;
            }
        }
        // backward closure over reverse edges
        let mut pred: Vec<Vec<u32>> = vec![Vec::new(); self.num_nodes];
        for (e, &(_, to)) in self.edges.iter().enumerate() {
            pred[to].push(e as u32);
        }
        let mut work: Vec<usize> = (0..self.num_nodes).filter(|&n| good[n]).collect();
        while let Some(n) = work.pop() {
            for &e in &pred[n] {
                let (from, _) = self.edges[e as usize];
                if !good[from] {
                    good[from] = true;
                    work.push(from);
                }
            }
        }
        good
    }

    /// Tarjan's algorithm, iterative.
    pub fn sccs(&self) -> Sccs {
        let n = self.num_nodes;
        let mut comp = vec![usize::MAX; n];
        let mut index = vec![u32::MAX; n];
        let mut lowlink = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0u32;
        let mut count = 0usize;
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != u32::MAX {
                continue;
            }
            call.push((root, 0));
            index[root] = next_index;
            lowlink[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&(v, next)) = call.last() {
                if next < self.succ[v].len() {
                    call.last_mut().unwrap().1 += 1;
                    let w = self.edges[self.succ[v][next] as usize].1;
                    if index[w] == u32::MAX {
                        index[w] = next_index;
                        lowlink[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(index[w]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
        Sccs { comp, count }
    }

    /// Replay a lasso: the stem must run from `start`, the cycle must close,
    /// and the cycle must carry an edge of every family.
    pub fn validate_lasso(&self, l: &RunLasso) -> bool {
        let mut at = l.start;
        if !self.initial.contains(&at) {
            return false;
        }
        for &e in &l.stem {
            if self.edges[e].0 != at {
                return false;
            }
            at = self.edges[e].1;
        }
        let head = at;
        if l.cycle.is_empty() {
            return false;
        }
        let mut seen = 0u32;
        for &e in &l.cycle {
            if self.edges[e].0 != at {
                return false;
            }
            seen |= self.edge_mask[e];
            at = self.edges[e].1;
        }
        let full: u32 = if self.num_families == 32 {
            u32::MAX
        } else {
            (1u32 << self.num_families) - 1
        };
        at == head && seen & full == full
    }
}

const WHITE: u8 = 0;
const GRAY: u8 = 1;
const BLACK: u8 = 2;

#[derive(Debug, Clone)]
pub struct Sccs {
    /// Component id per node, in reverse topological order of discovery.
    pub comp: Vec<usize>,
    pub count: usize,
}

/// Input-synchronized square of two expanded machines: runs of both machines
/// over one input. Nodes are state pairs reachable from the initial pair;
/// edges pair transitions that consume the same input symbol.
#[derive(Debug)]
pub struct SquareProduct {
    pub nodes: Vec<(u32, u32)>,
    pub index: HashMap<(u32, u32), u32>,
    pub edges: Vec<SquareEdge>,
    pub succ: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SquareEdge {
    pub from: u32,
    pub to: u32,
    /// Transition indices into the left and right machines.
    pub t1: u32,
    pub t2: u32,
}

/// Build the square of `a` and `b` from their initial pair. The machines
/// must agree on the input symbol inventory.
pub fn synchronized_product(a: &ExpandedMachine, b: &ExpandedMachine) -> crate::Result<SquareProduct> {
    if !a.in_syms.compatible(&b.in_syms) {
        return Err(crate::Error::Definition(
            "synchronized product needs identical input alphabets".into(),
        ));
    }
    let mut nodes: Vec<(u32, u32)> = vec![(a.initial as u32, b.initial as u32)];
    let mut index = HashMap::new();
    index.insert(nodes[0], 0u32);
    let mut edges: Vec<SquareEdge> = Vec::new();
    let mut succ: Vec<Vec<u32>> = vec![Vec::new()];
    let mut work = vec![0u32];
    while let Some(n) = work.pop() {
        let (s1, s2) = nodes[n as usize];
        for (i1, t1) in a.transitions_from(s1 as usize) {
            for (i2, t2) in b.transitions_from(s2 as usize) {
                if t1.sym != t2.sym {
                    continue;
                }
                let key = (t1.target, t2.target);
                let to = *index.entry(key).or_insert_with(|| {
                    nodes.push(key);
                    succ.push(Vec::new());
                    work.push(nodes.len() as u32 - 1);
                    nodes.len() as u32 - 1
                });
                let e = edges.len() as u32;
                edges.push(SquareEdge { from: n, to, t1: i1 as u32, t2: i2 as u32 });
                succ[n as usize].push(e);
            }
        }
    }
    Ok(SquareProduct { nodes, index, edges, succ })
}

impl SquareProduct {
    /// View as a Büchi graph with the given families.
    pub fn to_buchi(&self, families: Families) -> BuchiGraph {
        BuchiGraph::new(
            self.nodes.len(),
            self.edges.iter().map(|e| (e.from as usize, e.to as usize)).collect(),
            vec![0],
            families,
        )
    }
}

/// For every square node, whether the pair admits final runs of both copies
/// over one common future input: an infinite path visiting accepting-left and
/// accepting-right infinitely often.
pub fn coaccessible_pairs(square: &SquareProduct, m: &ExpandedMachine) -> Vec<bool> {
    coaccessible_pairs2(square, m, m)
}

/// Like [`coaccessible_pairs`] for a square of two different machines.
pub fn coaccessible_pairs2(
    square: &SquareProduct,
    left: &ExpandedMachine,
    right: &ExpandedMachine,
) -> Vec<bool> {
    let f1: Vec<usize> = (0..square.nodes.len())
        .filter(|&n| left.accepting[square.nodes[n].0 as usize])
        .collect();
    let f2: Vec<usize> = (0..square.nodes.len())
        .filter(|&n| right.accepting[square.nodes[n].1 as usize])
        .collect();
    square.to_buchi(Families::from_node_sets(&[f1, f2])).coaccessible()
}

#[cfg(test)]
mod tests;
