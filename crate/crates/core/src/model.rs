//! Machine model and small-step semantics.
//!
//! Machines read infinite words whose letters pair a finite label with a
//! datum from an infinite domain supporting equality only. Registers store
//! data; a transition fires when its test holds of the current datum against
//! the register valuation, stores the datum into its assignment targets, and
//! emits output letters whose data are read from the valuation *after* the
//! update. The distinguished initial datum `0` fills all registers at start.
//!
//! Three machine kinds share one transition type:
//!
//! * `nrt` — registers, tests, outputs `(label, register)`;
//! * `nra` — an acceptor: registers and tests, empty outputs;
//! * `nft` — a finite transducer: no registers, trivial tests, label-only
//!   outputs.
//!
//! Acceptance is Büchi: a run is final when it visits an accepting state
//! infinitely often. Ultimately periodic words (`LassoWord`) serve as finite
//! witnesses everywhere: membership, output enumeration, and replay of
//! verdicts all operate on lassos.

use std::collections::BTreeSet;
use std::fmt;

use crate::omega::{BuchiGraph, Families};
use crate::{Error, Result};

/// A datum. The domain is the naturals; only equality is observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataValue(pub u64);

impl DataValue {
    /// The distinguished datum filling every register initially.
    pub const D0: DataValue = DataValue(0);
}

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineKind {
    Nrt,
    Nra,
    Nft,
}

impl MachineKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MachineKind::Nrt => "nrt",
            MachineKind::Nra => "nra",
            MachineKind::Nft => "nft",
        }
    }
}

/// Input and output label inventories, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabets {
    pub input: Vec<String>,
    pub output: Vec<String>,
}

/// Register test formula over the current datum.
///
/// `Explicit(E)` is the exact-pattern test: the datum equals the content of
/// every register in `E` and differs from every register outside `E`. It is
/// produced by test expansion and is not part of the surface grammar, though
/// it prints as the equivalent conjunction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestFormula {
    True,
    False,
    Eq(usize),
    Neq(usize),
    And(Box<TestFormula>, Box<TestFormula>),
    Or(Box<TestFormula>, Box<TestFormula>),
    Not(Box<TestFormula>),
    Explicit(BTreeSet<usize>),
}

impl TestFormula {
    pub fn eval(&self, v: &RegisterValuation, d: DataValue) -> bool {
        match self {
            TestFormula::True => true,
            TestFormula::False => false,
            TestFormula::Eq(r) => v.0[*r] == d,
            TestFormula::Neq(r) => v.0[*r] != d,
            TestFormula::And(a, b) => a.eval(v, d) && b.eval(v, d),
            TestFormula::Or(a, b) => a.eval(v, d) || b.eval(v, d),
            TestFormula::Not(a) => !a.eval(v, d),
            TestFormula::Explicit(e) => {
                (0..v.0.len()).all(|r| (v.0[r] == d) == e.contains(&r))
            }
        }
    }

    /// Evaluate under an exact equality pattern: register `r` compares equal
    /// to the datum iff `r ∈ pattern`. Every atom is determined, so the
    /// result is a definite boolean.
    pub fn eval_pattern(&self, pattern: &BTreeSet<usize>) -> bool {
        match self {
            TestFormula::True => true,
            TestFormula::False => false,
            TestFormula::Eq(r) => pattern.contains(r),
            TestFormula::Neq(r) => !pattern.contains(r),
            TestFormula::And(a, b) => a.eval_pattern(pattern) && b.eval_pattern(pattern),
            TestFormula::Or(a, b) => a.eval_pattern(pattern) || b.eval_pattern(pattern),
            TestFormula::Not(a) => !a.eval_pattern(pattern),
            TestFormula::Explicit(e) => e == pattern,
        }
    }

    /// Constant-fold `true`/`false` leaves only; no semantic reasoning.
    pub fn fold_constants(&self) -> TestFormula {
        use TestFormula::*;
        match self {
            And(a, b) => match (a.fold_constants(), b.fold_constants()) {
                (False, _) | (_, False) => False,
                (True, x) | (x, True) => x,
                (x, y) => And(Box::new(x), Box::new(y)),
            },
            Or(a, b) => match (a.fold_constants(), b.fold_constants()) {
                (True, _) | (_, True) => True,
                (False, x) | (x, False) => x,
                (x, y) => Or(Box::new(x), Box::new(y)),
            },
            Not(a) => match a.fold_constants() {
                True => False,
                False => True,
                x => Not(Box::new(x)),
            },
            other => other.clone(),
        }
    }

    /// Registers mentioned by the formula.
    pub fn registers(&self, into: &mut BTreeSet<usize>) {
        match self {
            TestFormula::Eq(r) | TestFormula::Neq(r) => {
                into.insert(*r);
            }
            TestFormula::And(a, b) | TestFormula::Or(a, b) => {
                a.registers(into);
                b.registers(into);
            }
            TestFormula::Not(a) => a.registers(into),
            TestFormula::Explicit(e) => into.extend(e.iter().copied()),
            _ => {}
        }
    }
}

/// Register update of a transition.
///
/// `store_current` registers receive the current datum first; then every
/// `copies` pair `(dst, src)` runs simultaneously, reading the valuation as
/// it stands after the stores. Each register appears at most once as a
/// target across both parts. Plain machines have no copies; copies are
/// introduced by composition and eliminated by reassignment removal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub store_current: BTreeSet<usize>,
    pub copies: Vec<(usize, usize)>,
}

impl Assignment {
    pub fn store(regs: impl IntoIterator<Item = usize>) -> Self {
        Assignment { store_current: regs.into_iter().collect(), copies: Vec::new() }
    }

    pub fn is_plain(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.store_current.iter().copied().chain(self.copies.iter().map(|&(d, _)| d))
    }

    pub fn apply(&self, v: &RegisterValuation, d: DataValue) -> RegisterValuation {
        let mut stored = v.clone();
        for &r in &self.store_current {
            stored.0[r] = d;
        }
        let mut out = stored.clone();
        for &(dst, src) in &self.copies {
            out.0[dst] = stored.0[src];
        }
        out
    }
}

/// Which input labels a transition matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelPattern {
    /// Matches every input label (written `*`).
    Any,
    /// Matches one input label.
    One(usize),
}

impl LabelPattern {
    pub fn matches(&self, label: usize) -> bool {
        match self {
            LabelPattern::Any => true,
            LabelPattern::One(l) => *l == label,
        }
    }
}

/// Output label of one emitted letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutLabel {
    /// Emit the output label spelled like the matched input label (written `*`).
    Same,
    /// A fixed output label.
    Fixed(usize),
}

/// One emitted letter: a label and, for register machines, the register whose
/// post-update content supplies the datum. `register` is `None` exactly for
/// `nft` machines, whose outputs are label-only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputItem {
    pub label: OutLabel,
    pub register: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: usize,
    pub label: LabelPattern,
    pub test: TestFormula,
    pub assign: Assignment,
    pub output: Vec<OutputItem>,
    pub target: usize,
}

/// A machine definition. States, registers, and labels are indices into the
/// name tables; `0` data fills all registers initially.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransducerSpec {
    pub kind: MachineKind,
    pub name: String,
    pub states: Vec<String>,
    pub registers: Vec<String>,
    pub alphabets: Alphabets,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    pub transitions: Vec<Transition>,
}

impl TransducerSpec {
    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn register_id(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|s| s == name)
    }

    pub fn in_label_id(&self, name: &str) -> Option<usize> {
        self.alphabets.input.iter().position(|s| s == name)
    }

    pub fn out_label_id(&self, name: &str) -> Option<usize> {
        self.alphabets.output.iter().position(|s| s == name)
    }

    /// Output-label id for an emitted item, given the matched input label.
    pub fn resolve_out_label(&self, item: &OutLabel, matched_input: usize) -> Option<usize> {
        match item {
            OutLabel::Fixed(l) => Some(*l),
            OutLabel::Same => self.out_label_id(&self.alphabets.input[matched_input]),
        }
    }

    /// Registers that are the target of at least one assignment. Registers
    /// outside this set hold their initial value forever, which finite-data
    /// restriction exploits.
    pub fn assigned_registers(&self) -> BTreeSet<usize> {
        self.transitions.iter().flat_map(|t| t.assign.targets()).collect()
    }

    /// Structural well-formedness. Checks index ranges, name uniqueness, and
    /// the per-kind constraints (`nra`: no outputs; `nft`: no registers and
    /// only trivial tests, label-only outputs; register machines: every
    /// output item names a register).
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Definition(format!("{}: {msg}", self.name)));
        for table in [&self.states, &self.registers, &self.alphabets.input, &self.alphabets.output]
        {
            for (i, name) in table.iter().enumerate() {
                if table[..i].contains(name) {
                    return fail(format!("duplicate identifier `{name}`"));
                }
            }
        }
        if self.initial >= self.states.len() {
            return fail("initial state out of range".into());
        }
        if self.accepting.iter().any(|&q| q >= self.states.len()) {
            return fail("accepting state out of range".into());
        }
        if self.alphabets.input.is_empty() {
            return fail("empty input alphabet".into());
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let tfail = |msg: String| {
                Err(Error::Definition(format!("{}: transition {i}: {msg}", self.name)))
            };
            if t.source >= self.states.len() || t.target >= self.states.len() {
                return tfail("state out of range".into());
            }
            if let LabelPattern::One(l) = t.label {
                if l >= self.alphabets.input.len() {
                    return tfail("input label out of range".into());
                }
            }
            let mut test_regs = BTreeSet::new();
            t.test.registers(&mut test_regs);
            if test_regs.iter().any(|&r| r >= self.registers.len()) {
                return tfail("test register out of range".into());
            }
            let mut seen = BTreeSet::new();
            for r in t.assign.targets() {
                if r >= self.registers.len() {
                    return tfail("assignment register out of range".into());
                }
                if !seen.insert(r) {
                    return tfail(format!(
                        "register `{}` assigned twice",
                        self.registers[r]
                    ));
                }
            }
            for &(_, src) in &t.assign.copies {
                if src >= self.registers.len() {
                    return tfail("copy source register out of range".into());
                }
            }
            for item in &t.output {
                match item.label {
                    OutLabel::Fixed(l) if l >= self.alphabets.output.len() => {
                        return tfail("output label out of range".into());
                    }
                    OutLabel::Same => {
                        let covered: Box<dyn Iterator<Item = usize>> = match t.label {
                            LabelPattern::Any => Box::new(0..self.alphabets.input.len()),
                            LabelPattern::One(l) => Box::new(std::iter::once(l)),
                        };
                        for l in covered {
                            if self.out_label_id(&self.alphabets.input[l]).is_none() {
                                return tfail(format!(
                                    "mirrored output needs `{}` in the output alphabet",
                                    self.alphabets.input[l]
                                ));
                            }
                        }
                    }
                    _ => {}
                }
                match (self.kind, item.register) {
                    (MachineKind::Nft, Some(_)) => {
                        return tfail("nft outputs are label-only".into());
                    }
                    (MachineKind::Nft, None) => {}
                    (_, None) => {
                        return tfail("output item needs a register".into());
                    }
                    (_, Some(r)) if r >= self.registers.len() => {
                        return tfail("output register out of range".into());
                    }
                    _ => {}
                }
            }
            match self.kind {
                MachineKind::Nra => {
                    if !t.output.is_empty() {
                        return tfail("nra transitions have no output".into());
                    }
                }
                MachineKind::Nft => {
                    if !self.registers.is_empty() {
                        return fail("nft machines have no registers".into());
                    }
                    if !matches!(t.test.fold_constants(), TestFormula::True) {
                        return tfail("nft tests must be trivial".into());
                    }
                    if !t.assign.store_current.is_empty() || !t.assign.copies.is_empty() {
                        return tfail("nft transitions assign nothing".into());
                    }
                }
                MachineKind::Nrt => {}
            }
        }
        Ok(())
    }
}

/// Register contents, indexed like `TransducerSpec::registers`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegisterValuation(pub Vec<DataValue>);

impl RegisterValuation {
    /// All registers hold the distinguished initial datum.
    pub fn initial(num_registers: usize) -> Self {
        RegisterValuation(vec![DataValue::D0; num_registers])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: usize,
    pub valuation: RegisterValuation,
}

impl Configuration {
    pub fn initial(t: &TransducerSpec) -> Self {
        Configuration { state: t.initial, valuation: RegisterValuation::initial(t.registers.len()) }
    }
}

/// An input letter: label name and datum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub label: String,
    pub datum: DataValue,
}

impl Letter {
    pub fn new(label: impl Into<String>, datum: u64) -> Self {
        Letter { label: label.into(), datum: DataValue(datum) }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label, self.datum)
    }
}

/// An output letter. `datum` is `None` exactly for `nft` outputs, which are
/// label-only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutLetter {
    pub label: String,
    pub datum: Option<DataValue>,
}

impl OutLetter {
    pub fn new(label: impl Into<String>, datum: u64) -> Self {
        OutLetter { label: label.into(), datum: Some(DataValue(datum)) }
    }
}

impl fmt::Display for OutLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.datum {
            Some(d) => write!(f, "{}:{}", self.label, d),
            None => write!(f, "{}", self.label),
        }
    }
}

/// An ultimately periodic word `prefix · period^ω`. The period is nonempty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LassoWord<L = Letter> {
    prefix: Vec<L>,
    period: Vec<L>,
}

impl<L> LassoWord<L> {
    pub fn new(prefix: Vec<L>, period: Vec<L>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Definition("lasso period must be nonempty".into()));
        }
        Ok(LassoWord { prefix, period })
    }

    pub fn prefix(&self) -> &[L] {
        &self.prefix
    }

    pub fn period(&self) -> &[L] {
        &self.period
    }

    pub fn letter_at(&self, i: usize) -> &L {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// Lasso position reached after reading `i` letters: positions inside the
    /// period wrap.
    pub fn position_after(&self, i: usize) -> usize {
        if i < self.prefix.len() + self.period.len() {
            i
        } else {
            self.prefix.len() + (i - self.prefix.len()) % self.period.len()
        }
    }

    pub fn total_len(&self) -> usize {
        self.prefix.len() + self.period.len()
    }
}

impl<L: Clone> LassoWord<L> {
    pub fn first_n(&self, n: usize) -> Vec<L> {
        (0..n).map(|i| self.letter_at(i).clone()).collect()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl<L: Eq> LassoWord<L> {
    /// First position where the two infinite words differ, if any.
    ///
    /// Two ultimately periodic words agree everywhere iff they agree on the
    /// first `max(prefix lengths) + lcm(period lengths)` positions.
    pub fn mismatch_omega(&self, other: &LassoWord<L>) -> Option<usize> {
        let p = self.prefix.len().max(other.prefix.len());
        let lcm = self.period.len() / gcd(self.period.len(), other.period.len())
            * other.period.len();
        (0..p + lcm).find(|&i| self.letter_at(i) != other.letter_at(i))
    }

    pub fn eq_omega(&self, other: &LassoWord<L>) -> bool {
        self.mismatch_omega(other).is_none()
    }
}

impl LassoWord<Letter> {
    /// Data occurring in the word, in first-occurrence order.
    pub fn data(&self) -> Vec<DataValue> {
        let mut seen = Vec::new();
        for l in self.prefix.iter().chain(self.period.iter()) {
            if !seen.contains(&l.datum) {
                seen.push(l.datum);
            }
        }
        seen
    }
}

impl<L: fmt::Display> fmt::Display for LassoWord<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.prefix {
            write!(f, "{l} ")?;
        }
        write!(f, "(")?;
        let mut first = true;
        for l in &self.period {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{l}")?;
        }
        write!(f, ")w")
    }
}

/// All moves enabled from `c` on the letter `(label, datum)`: successor
/// configuration plus emitted letters. Emitted data are read from the
/// post-update valuation; `nft` machines emit data-less letters.
pub fn step(
    t: &TransducerSpec,
    c: &Configuration,
    label: usize,
    datum: DataValue,
) -> Vec<(Configuration, Vec<OutLetter>)> {
    let mut moves = Vec::new();
    for tr in &t.transitions {
        if tr.source != c.state || !tr.label.matches(label) {
            continue;
        }
        if !tr.test.eval(&c.valuation, datum) {
            continue;
        }
        let valuation = tr.assign.apply(&c.valuation, datum);
        let mut out = Vec::with_capacity(tr.output.len());
        for item in &tr.output {
            let out_label = t
                .resolve_out_label(&item.label, label)
                .expect("validated mirror labels resolve");
            out.push(OutLetter {
                label: t.alphabets.output[out_label].clone(),
                datum: item.register.map(|r| valuation.0[r]),
            });
        }
        moves.push((Configuration { state: tr.target, valuation }, out));
    }
    moves
}

/// Finite product of machine configurations with lasso positions. Only data
/// already in the input (plus the initial datum) can enter a valuation, so
/// the reachable graph is finite.
struct LassoProduct {
    /// (configuration, lasso position) per node.
    nodes: Vec<(Configuration, usize)>,
    graph: BuchiGraph,
    /// Per edge: (source node, emitted letters).
    edge_info: Vec<(usize, Vec<OutLetter>)>,
}

fn lasso_product(t: &TransducerSpec, x: &LassoWord) -> Result<LassoProduct> {
    t.validate()?;
    let labels: Vec<Option<usize>> = (0..x.total_len())
        .map(|i| t.in_label_id(&x.letter_at(i).label))
        .collect();
    let mut nodes: Vec<(Configuration, usize)> = vec![(Configuration::initial(t), 0)];
    let mut index = std::collections::HashMap::new();
    index.insert(nodes[0].clone(), 0usize);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut edge_info: Vec<(usize, Vec<OutLetter>)> = Vec::new();
    let mut work = vec![0usize];
    while let Some(n) = work.pop() {
        let (config, pos) = nodes[n].clone();
        let Some(label) = labels[pos] else { continue };
        let datum = x.letter_at(pos).datum;
        let next_pos = x.position_after(pos + 1);
        for (succ, out) in step(t, &config, label, datum) {
            let key = (succ, next_pos);
            let target = *index.entry(key.clone()).or_insert_with(|| {
                nodes.push(key.clone());
                work.push(nodes.len() - 1);
                nodes.len() - 1
            });
            edges.push((n, target));
            edge_info.push((n, out));
        }
    }
    let accepting: Vec<usize> = (0..nodes.len())
        .filter(|&n| t.accepting.contains(&nodes[n].0.state))
        .collect();
    let graph = BuchiGraph::new(
        nodes.len(),
        edges,
        vec![0],
        Families::from_node_sets(&[accepting.clone()]),
    );
    Ok(LassoProduct { nodes, graph, edge_info })
}

/// Membership of the input lasso in the domain: does some final run exist?
pub fn accepts_lasso(t: &TransducerSpec, x: &LassoWord) -> Result<bool> {
    Ok(lasso_product(t, x)?.graph.nonempty().is_some())
}

/// Outputs of accepting runs on `x`, enumerated over simple run lassos.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub words: Vec<LassoWord<OutLetter>>,
    /// True when every simple run lasso was examined before `limit` hit.
    pub exhausted: bool,
}

/// Enumerate outputs of accepting runs of `t` on `x`.
///
/// The enumeration visits run lassos with a simple stem and a simple cycle
/// through the product of configurations and lasso positions; it is complete
/// for that class when `exhausted` is true. Runs whose cycle emits nothing
/// produce finite outputs and are skipped (a machine passing the
/// infinite-output validation has none). Results are deduplicated as
/// infinite words and sorted.
pub fn outputs_on(t: &TransducerSpec, x: &LassoWord, limit: usize) -> Result<Outputs> {
    let product = lasso_product(t, x)?;
    let succ: Vec<Vec<usize>> = {
        let mut s = vec![Vec::new(); product.nodes.len()];
        for (e, &(from, _)) in product.edge_info.iter().enumerate() {
            s[from].push(e);
        }
        s
    };
    let edge_target = |e: usize| product.graph.edges()[e].1;
    let accepting: Vec<bool> = (0..product.nodes.len())
        .map(|n| t.accepting.contains(&product.nodes[n].0.state))
        .collect();

    let mut words: Vec<LassoWord<OutLetter>> = Vec::new();
    let mut examined = 0usize;
    let mut steps = 0usize;
    let budget = limit.saturating_mul(1000).max(1_000_000);
    let mut exhausted = true;

    // Stems: simple paths from the initial node, explored by iterative DFS.
    // At each stem end, a second DFS enumerates simple cycles rooted there
    // (which may cross the stem).
    let mut stem_edges: Vec<usize> = Vec::new();
    let mut on_stem = vec![false; product.nodes.len()];
    on_stem[0] = true;
    // stack of (node, next successor index to try)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    'outer: loop {
        let Some(&(node, next)) = stack.last() else { break };
        if next == 0 {
            // first visit of this stem end: enumerate cycles rooted here
            let root = node;
            let mut cyc_edges: Vec<usize> = Vec::new();
            let mut on_cyc = vec![false; product.nodes.len()];
            let mut cstack: Vec<(usize, usize)> = vec![(root, 0)];
            loop {
                let Some(&(cn, cnext)) = cstack.last() else { break };
                if cnext >= succ[cn].len() {
                    cstack.pop();
                    if let Some(e) = cyc_edges.pop() {
                        on_cyc[edge_target(e)] = false;
                    }
                    continue;
                }
                cstack.last_mut().unwrap().1 += 1;
                let e = succ[cn][cnext];
                let to = edge_target(e);
                steps += 1;
                if steps > budget {
                    exhausted = false;
                    break 'outer;
                }
                if to == root {
                    // a simple cycle closes; keep its output if accepting
                    examined += 1;
                    if examined > limit {
                        exhausted = false;
                        break 'outer;
                    }
                    let hits_accepting = accepting[root]
                        || cyc_edges.iter().any(|&e| accepting[edge_target(e)]);
                    if hits_accepting {
                        let mut prefix = Vec::new();
                        for &e in &stem_edges {
                            prefix.extend(product.edge_info[e].1.iter().cloned());
                        }
                        let mut period = Vec::new();
                        for &e in cyc_edges.iter().chain(std::iter::once(&e)) {
                            period.extend(product.edge_info[e].1.iter().cloned());
                        }
                        // silent cycles yield finite output; skip them
                        if !period.is_empty() {
                            let w = LassoWord::new(prefix, period).unwrap();
                            if !words.iter().any(|seen| seen.eq_omega(&w)) {
                                words.push(w);
                            }
                        }
                    }
                } else if !on_cyc[to] {
                    on_cyc[to] = true;
                    cyc_edges.push(e);
                    cstack.push((to, 0));
                }
            }
        }
        let (node, next) = *stack.last().unwrap();
        if next < succ[node].len() {
            stack.last_mut().unwrap().1 += 1;
            let e = succ[node][next];
            let to = edge_target(e);
            steps += 1;
            if steps > budget {
                exhausted = false;
                break;
            }
            if !on_stem[to] {
                on_stem[to] = true;
                stem_edges.push(e);
                stack.push((to, 0));
            }
        } else {
            stack.pop();
            if let Some(e) = stem_edges.pop() {
                on_stem[edge_target(e)] = false;
            }
        }
    }
    words.sort();
    Ok(Outputs { words, exhausted })
}

/// Does `t` relate input `x` to output `y`? Decides existence of a final run
/// reading `x` and emitting exactly `y`, via Büchi emptiness on the product
/// of configurations with positions in both lassos.
pub fn relation_member(
    t: &TransducerSpec,
    x: &LassoWord,
    y: &LassoWord<OutLetter>,
) -> Result<bool> {
    t.validate()?;
    let in_labels: Vec<Option<usize>> = (0..x.total_len())
        .map(|i| t.in_label_id(&x.letter_at(i).label))
        .collect();
    type Node = (Configuration, usize, usize);
    let start: Node = (Configuration::initial(t), 0, 0);
    let mut nodes: Vec<Node> = vec![start.clone()];
    let mut index = std::collections::HashMap::new();
    index.insert(start, 0usize);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut emits: Vec<bool> = Vec::new();
    let mut work = vec![0usize];
    while let Some(n) = work.pop() {
        let (config, xpos, ypos) = nodes[n].clone();
        let Some(label) = in_labels[xpos] else { continue };
        let datum = x.letter_at(xpos).datum;
        for (succ, out) in step(t, &config, label, datum) {
            // the emitted chunk must match y at the current output position
            if out.iter().enumerate().any(|(k, letter)| y.letter_at(ypos + k) != letter) {
                continue;
            }
            let key: Node = (
                succ,
                x.position_after(xpos + 1),
                y.position_after(ypos + out.len()),
            );
            let target = *index.entry(key.clone()).or_insert_with(|| {
                nodes.push(key.clone());
                work.push(nodes.len() - 1);
                nodes.len() - 1
            });
            edges.push((n, target));
            emits.push(!out.is_empty());
        }
    }
    let accepting: Vec<usize> = (0..nodes.len())
        .filter(|&n| t.accepting.contains(&nodes[n].0.state))
        .collect();
    // A final run whose total output is exactly y (not a strict prefix of it)
    // must emit infinitely often, so edges with nonempty chunks form a second
    // Büchi family alongside the accepting states.
    let emitting: Vec<usize> = (0..edges.len()).filter(|&e| emits[e]).collect();
    let mut families = Families::from_node_sets(&[accepting]);
    families.push_edge_set(emitting);
    let graph = BuchiGraph::new(nodes.len(), edges, vec![0], families);
    Ok(graph.nonempty().is_some())
}
