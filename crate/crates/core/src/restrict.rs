//! Finite-data restriction.
//!
//! Equality is the only observable on data, so the decision procedures may
//! replace the infinite domain by a small finite set: any counterexample can
//! be renamed, letter by letter, to use at most one fresh datum per register
//! plus the initial datum. Expanding a register machine over such a set
//! yields an ordinary finite transition system (`ExpandedMachine`) on which
//! Büchi machinery applies directly.
//!
//! Registers that are never assigned keep their initial value forever; the
//! expansion tracks valuations only over assigned registers and pins the
//! rest, which keeps the state space at `|Q| · |D|^(assigned)`.

use std::collections::{BTreeSet, HashMap};

use crate::model::{
    Configuration, DataValue, LabelPattern, LassoWord, Letter, MachineKind, RegisterValuation,
    TestFormula, TransducerSpec, Transition,
};
use crate::omega::{BuchiGraph, Families, RunLasso};
use crate::{Error, Result};

/// Hard ceiling on expanded states; crossing it is a resource error rather
/// than a wrong answer.
pub const STATE_CAP: usize = 5_000_000;

/// Data set for the run-comparison analyses (two runs over one input):
/// `{0, …, 2k+2}` for a machine with `k` registers.
pub fn decision_data_set(t: &TransducerSpec) -> Vec<DataValue> {
    let k = t.registers.len() as u64;
    (0..=2 * k + 2).map(DataValue).collect()
}

/// Data set for emptiness of an acceptor: `{0, …, k}`.
pub fn emptiness_data_set(t: &TransducerSpec) -> Vec<DataValue> {
    let k = t.registers.len() as u64;
    (0..=k).map(DataValue).collect()
}

/// Concrete letters over a label inventory: either label-only or one symbol
/// per (label, datum) pair, datum-major within a label. Two tables built
/// from equal inventories and data sets assign equal ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    labels: Vec<String>,
    syms: Vec<(u32, Option<DataValue>)>,
    index: HashMap<(u32, Option<DataValue>), u32>,
}

impl SymbolTable {
    pub fn labels_only(labels: &[String]) -> Self {
        let syms: Vec<(u32, Option<DataValue>)> =
            (0..labels.len() as u32).map(|l| (l, None)).collect();
        Self::finish(labels.to_vec(), syms)
    }

    pub fn with_data(labels: &[String], data: &[DataValue]) -> Self {
        let mut syms = Vec::with_capacity(labels.len() * data.len());
        for l in 0..labels.len() as u32 {
            for &d in data {
                syms.push((l, Some(d)));
            }
        }
        Self::finish(labels.to_vec(), syms)
    }

    fn finish(labels: Vec<String>, syms: Vec<(u32, Option<DataValue>)>) -> Self {
        let index = syms.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        SymbolTable { labels, syms, index }
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    pub fn lookup(&self, label: u32, datum: Option<DataValue>) -> Option<u32> {
        self.index.get(&(label, datum)).copied()
    }

    /// Label name and datum of a symbol.
    pub fn parts(&self, sym: u32) -> (&str, Option<DataValue>) {
        let (l, d) = self.syms[sym as usize];
        (&self.labels[l as usize], d)
    }

    pub fn label_id(&self, sym: u32) -> u32 {
        self.syms[sym as usize].0
    }

    pub fn datum(&self, sym: u32) -> Option<DataValue> {
        self.syms[sym as usize].1
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn compatible(&self, other: &SymbolTable) -> bool {
        self.labels == other.labels && self.syms == other.syms
    }
}

/// Interned output words over output symbols. Id `0` is the empty word.
#[derive(Debug, Clone, Default)]
pub struct ChunkTable {
    chunks: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, u32>,
}

impl ChunkTable {
    pub const EPSILON: u32 = 0;

    pub fn new() -> Self {
        let mut t = ChunkTable { chunks: Vec::new(), index: HashMap::new() };
        t.intern(Vec::new());
        t
    }

    pub fn intern(&mut self, chunk: Vec<u32>) -> u32 {
        if let Some(&id) = self.index.get(&chunk) {
            return id;
        }
        let id = self.chunks.len() as u32;
        self.index.insert(chunk.clone(), id);
        self.chunks.push(chunk);
        id
    }

    pub fn get(&self, id: u32) -> &[u32] {
        &self.chunks[id as usize]
    }

    pub fn len_of(&self, id: u32) -> usize {
        self.chunks[id as usize].len()
    }
}

/// One expanded transition: input symbol, interned output chunk, target
/// expanded state, and the defining transition in the source machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XTrans {
    pub sym: u32,
    pub chunk: u32,
    pub target: u32,
    pub orig: u32,
}

/// A machine expanded over concrete letters: finite states, symbolic data
/// gone. States pair a source-machine state with an interned valuation over
/// the assigned registers; `frozen` pins the never-assigned registers.
#[derive(Debug, Clone)]
pub struct ExpandedMachine {
    pub in_syms: SymbolTable,
    pub out_syms: SymbolTable,
    /// `(source state, valuation id)` per expanded state.
    pub states: Vec<(u32, u32)>,
    pub valuations: Vec<Vec<DataValue>>,
    /// Register ids covered by the valuations, ascending.
    pub assigned: Vec<usize>,
    /// Never-assigned registers and their pinned values.
    pub frozen: Vec<(usize, DataValue)>,
    pub num_registers: usize,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// Transitions in CSR layout: those of state `s` occupy
    /// `trans[trans_start[s] .. trans_start[s+1]]`.
    pub trans: Vec<XTrans>,
    pub trans_start: Vec<u32>,
    pub chunks: ChunkTable,
}

impl ExpandedMachine {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn transitions_from(&self, s: usize) -> impl Iterator<Item = (usize, &XTrans)> {
        (self.trans_start[s] as usize..self.trans_start[s + 1] as usize)
            .map(move |i| (i, &self.trans[i]))
    }

    /// Reconstruct the full register valuation of an expanded state.
    pub fn full_valuation(&self, s: usize) -> RegisterValuation {
        let mut v = RegisterValuation::initial(self.num_registers);
        for (&r, &d) in self.assigned.iter().zip(&self.valuations[self.states[s].1 as usize]) {
            v.0[r] = d;
        }
        for &(r, d) in &self.frozen {
            v.0[r] = d;
        }
        v
    }

    pub fn configuration(&self, s: usize) -> Configuration {
        Configuration { state: self.states[s].0 as usize, valuation: self.full_valuation(s) }
    }

    /// Acceptor view: one Büchi graph whose edge ids equal transition ids.
    pub fn to_buchi(&self) -> BuchiGraph {
        let mut edges = Vec::with_capacity(self.trans.len());
        for s in 0..self.num_states() {
            for (_, tr) in self.transitions_from(s) {
                edges.push((s, tr.target as usize));
            }
        }
        let accepting: Vec<usize> =
            (0..self.num_states()).filter(|&s| self.accepting[s]).collect();
        BuchiGraph::new(
            self.num_states(),
            edges,
            vec![self.initial],
            Families::from_node_sets(&[accepting]),
        )
    }

    /// Input letter consumed by a transition. Label-only symbols read as the
    /// initial datum.
    pub fn input_letter(&self, trans_id: usize) -> Letter {
        let (label, datum) = self.in_syms.parts(self.trans[trans_id].sym);
        Letter { label: label.to_string(), datum: datum.unwrap_or(DataValue::D0) }
    }
}

/// Expand `t` over `data` from the all-initial valuation.
pub fn expand(t: &TransducerSpec, data: &[DataValue], cap: usize) -> Result<ExpandedMachine> {
    expand_from(t, data, &RegisterValuation::initial(t.registers.len()), cap)
}

/// Expand `t` over `data` starting from an arbitrary valuation. Every value
/// of `init` (and the initial datum) must belong to `data`.
pub fn expand_from(
    t: &TransducerSpec,
    data: &[DataValue],
    init: &RegisterValuation,
    cap: usize,
) -> Result<ExpandedMachine> {
    let assigned: Vec<usize> = t.assigned_registers().into_iter().collect();
    let in_set: BTreeSet<DataValue> = data.iter().copied().collect();
    if !in_set.contains(&DataValue::D0) {
        return Err(Error::Precondition("data set must contain the initial datum".into()));
    }
    if init.0.iter().any(|d| !in_set.contains(d)) {
        return Err(Error::Precondition(
            "starting valuation uses data outside the data set".into(),
        ));
    }
    let frozen: Vec<(usize, DataValue)> = (0..t.registers.len())
        .filter(|r| !assigned.contains(r))
        .map(|r| (r, init.0[r]))
        .collect();
    let in_syms = SymbolTable::with_data(&t.alphabets.input, data);
    let out_syms = match t.kind {
        MachineKind::Nft => SymbolTable::labels_only(&t.alphabets.output),
        _ => SymbolTable::with_data(&t.alphabets.output, data),
    };
    let mut chunks = ChunkTable::new();

    let mut valuations: Vec<Vec<DataValue>> = Vec::new();
    let mut val_index: HashMap<Vec<DataValue>, u32> = HashMap::new();
    let mut intern_val = |v: Vec<DataValue>, valuations: &mut Vec<Vec<DataValue>>| -> u32 {
        if let Some(&id) = val_index.get(&v) {
            return id;
        }
        let id = valuations.len() as u32;
        val_index.insert(v.clone(), id);
        valuations.push(v);
        id
    };

    let init_val: Vec<DataValue> = assigned.iter().map(|&r| init.0[r]).collect();
    let v0 = intern_val(init_val, &mut valuations);
    let mut states: Vec<(u32, u32)> = vec![(t.initial as u32, v0)];
    let mut state_index: HashMap<(u32, u32), u32> = HashMap::new();
    state_index.insert(states[0], 0);
    let mut out_trans: Vec<Vec<XTrans>> = vec![Vec::new()];

    // transitions grouped by source state, preserving declaration order
    let mut by_source: Vec<Vec<(usize, &Transition)>> = vec![Vec::new(); t.states.len()];
    for (i, tr) in t.transitions.iter().enumerate() {
        by_source[tr.source].push((i, tr));
    }

    let mut head = 0usize;
    while head < states.len() {
        let s = head;
        head += 1;
        let (q, vid) = states[s];
        let full = {
            let mut v = RegisterValuation::initial(t.registers.len());
            for (&r, &d) in assigned.iter().zip(&valuations[vid as usize]) {
                v.0[r] = d;
            }
            for &(r, d) in &frozen {
                v.0[r] = d;
            }
            v
        };
        for &(ti, tr) in &by_source[q as usize] {
            for sym in 0..in_syms.len() as u32 {
                let label = in_syms.label_id(sym) as usize;
                if !tr.label.matches(label) {
                    continue;
                }
                let datum = in_syms.datum(sym).expect("data table symbols carry data");
                if !tr.test.eval(&full, datum) {
                    continue;
                }
                let updated = tr.assign.apply(&full, datum);
                let new_val: Vec<DataValue> = assigned.iter().map(|&r| updated.0[r]).collect();
                let new_vid = intern_val(new_val, &mut valuations);
                let key = (tr.target as u32, new_vid);
                let target = match state_index.get(&key) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= cap {
                            return Err(Error::Resource(format!(
                                "expansion of `{}` exceeds {cap} states",
                                t.name
                            )));
                        }
                        let id = states.len() as u32;
                        state_index.insert(key, id);
                        states.push(key);
                        out_trans.push(Vec::new());
                        id
                    }
                };
                let mut chunk = Vec::with_capacity(tr.output.len());
                for item in &tr.output {
                    let out_label = t
                        .resolve_out_label(&item.label, label)
                        .expect("validated mirror labels resolve") as u32;
                    let datum = item
                        .register
                        .map(|r| updated.0[r]);
                    let sym = out_syms
                        .lookup(out_label, datum)
                        .expect("emitted data stay within the data set");
                    chunk.push(sym);
                }
                let chunk = chunks.intern(chunk);
                out_trans[s].push(XTrans { sym, chunk, target, orig: ti as u32 });
            }
        }
    }

    let accepting: Vec<bool> =
        states.iter().map(|&(q, _)| t.accepting.contains(&(q as usize))).collect();
    let mut trans = Vec::new();
    let mut trans_start = Vec::with_capacity(states.len() + 1);
    trans_start.push(0u32);
    for list in out_trans {
        trans.extend(list);
        trans_start.push(trans.len() as u32);
    }
    Ok(ExpandedMachine {
        in_syms,
        out_syms,
        states,
        valuations,
        assigned,
        frozen,
        num_registers: t.registers.len(),
        initial: 0,
        accepting,
        trans,
        trans_start,
        chunks,
    })
}

/// Label-level view of a machine: registers and data dropped, one state per
/// source state, outputs kept as label sequences. Sound for the test-free
/// analyses, where label behavior and data behavior are decided separately.
pub fn label_skeleton(t: &TransducerSpec) -> ExpandedMachine {
    let in_syms = SymbolTable::labels_only(&t.alphabets.input);
    let out_syms = SymbolTable::labels_only(&t.alphabets.output);
    let mut chunks = ChunkTable::new();
    let states: Vec<(u32, u32)> = (0..t.states.len() as u32).map(|q| (q, 0)).collect();
    let mut out_trans: Vec<Vec<XTrans>> = vec![Vec::new(); t.states.len()];
    for (ti, tr) in t.transitions.iter().enumerate() {
        let labels: Vec<usize> = match tr.label {
            LabelPattern::Any => (0..t.alphabets.input.len()).collect(),
            LabelPattern::One(l) => vec![l],
        };
        for label in labels {
            let mut chunk = Vec::with_capacity(tr.output.len());
            for item in &tr.output {
                let out_label = t
                    .resolve_out_label(&item.label, label)
                    .expect("validated mirror labels resolve") as u32;
                chunk.push(out_syms.lookup(out_label, None).expect("label symbol exists"));
            }
            let chunk = chunks.intern(chunk);
            out_trans[tr.source].push(XTrans {
                sym: in_syms.lookup(label as u32, None).expect("label symbol exists"),
                chunk,
                target: tr.target as u32,
                orig: ti as u32,
            });
        }
    }
    let accepting: Vec<bool> =
        (0..t.states.len()).map(|q| t.accepting.contains(&q)).collect();
    let mut trans = Vec::new();
    let mut trans_start = Vec::with_capacity(states.len() + 1);
    trans_start.push(0u32);
    for list in out_trans {
        trans.extend(list);
        trans_start.push(trans.len() as u32);
    }
    ExpandedMachine {
        in_syms,
        out_syms,
        states,
        valuations: vec![Vec::new()],
        assigned: Vec::new(),
        frozen: Vec::new(),
        num_registers: t.registers.len(),
        initial: t.initial,
        accepting,
        trans,
        trans_start,
        chunks,
    }
}

/// Emptiness of an acceptor started at `init`: a data set of the initial
/// valuation's range, the initial datum, and one fresh datum per assigned
/// register plus one suffices; return an accepted input lasso if any.
pub fn nra_nonempty_word(
    t: &TransducerSpec,
    init: &RegisterValuation,
    cap: usize,
) -> Result<Option<LassoWord>> {
    let mut data: BTreeSet<DataValue> = init.0.iter().copied().collect();
    data.insert(DataValue::D0);
    let wanted = t.assigned_registers().len() + 1;
    let mut added = 0;
    let mut candidate = 0u64;
    while added < wanted {
        if data.insert(DataValue(candidate)) {
            added += 1;
        }
        candidate += 1;
    }
    let data: Vec<DataValue> = data.into_iter().collect();
    let x = expand_from(t, &data, init, cap)?;
    let Some(lasso) = x.to_buchi().nonempty() else {
        return Ok(None);
    };
    let word = lasso_input_word(&x, &lasso)?;
    Ok(Some(word))
}

/// Input word read along a run lasso of an expanded machine (edge ids are
/// transition ids).
pub fn lasso_input_word(x: &ExpandedMachine, lasso: &RunLasso) -> Result<LassoWord> {
    let prefix: Vec<Letter> = lasso.stem.iter().map(|&e| x.input_letter(e)).collect();
    let period: Vec<Letter> = lasso.cycle.iter().map(|&e| x.input_letter(e)).collect();
    LassoWord::new(prefix, period)
}

/// Materialize an expansion as a plain machine over fused `label@datum`
/// letters: a transducer becomes label-only (`nft`), an acceptor stays an
/// acceptor with no registers. States are named after the source state and
/// the valuation; on a (freak) name collision, positional names are used.
pub fn expanded_to_spec(orig: &TransducerSpec, x: &ExpandedMachine) -> TransducerSpec {
    let fuse = |syms: &SymbolTable| -> Vec<String> {
        (0..syms.len() as u32)
            .map(|s| match syms.parts(s) {
                (l, Some(d)) => format!("{l}@{d}"),
                (l, None) => l.to_string(),
            })
            .collect()
    };
    let input = fuse(&x.in_syms);
    let output = fuse(&x.out_syms);
    let mut names: Vec<String> = x
        .states
        .iter()
        .map(|&(q, vid)| {
            let base = &orig.states[q as usize];
            if x.assigned.is_empty() {
                base.clone()
            } else {
                let vals: Vec<String> =
                    x.valuations[vid as usize].iter().map(|d| d.to_string()).collect();
                format!("{base}#{}", vals.join("."))
            }
        })
        .collect();
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() != names.len() {
        names = (0..x.num_states()).map(|i| format!("s{i}")).collect();
    }
    let mut transitions = Vec::with_capacity(x.trans.len());
    for s in 0..x.num_states() {
        for (_, tr) in x.transitions_from(s) {
            transitions.push(Transition {
                source: s,
                label: LabelPattern::One(tr.sym as usize),
                test: TestFormula::True,
                assign: Default::default(),
                output: x
                    .chunks
                    .get(tr.chunk)
                    .iter()
                    .map(|&o| crate::model::OutputItem {
                        label: crate::model::OutLabel::Fixed(o as usize),
                        register: None,
                    })
                    .collect(),
                target: tr.target as usize,
            });
        }
    }
    TransducerSpec {
        kind: match orig.kind {
            MachineKind::Nra => MachineKind::Nra,
            _ => MachineKind::Nft,
        },
        name: format!("{}_restricted", orig.name),
        states: names,
        registers: Vec::new(),
        alphabets: crate::model::Alphabets { input, output },
        initial: x.initial,
        accepting: (0..x.num_states()).filter(|&s| x.accepting[s]).collect(),
        transitions,
    }
}
