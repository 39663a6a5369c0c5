//! Machine composition: from transducers for `f` and `g`, build one
//! transducer computing `x ↦ f(g(x))`.
//!
//! The composed machine simulates both originals in lockstep: one input
//! letter drives a `g`-transition, and the letters `g` emits are consumed
//! immediately by a matching sequence of `f`-transitions. The intermediate
//! letters exist only symbolically — their data are register contents of
//! `g` — so the product cannot evaluate `f`'s equality tests directly.
//! Instead every product state carries the equality partition of the joint
//! register file: two registers share a class exactly when they hold the
//! same datum. The partition decides `f`'s exact tests, is updated by both
//! machines' stores, and tells which stable register can stand in for an
//! `f`-register whose content changes mid-step.
//!
//! `f`-stores become register copies (the stored datum is a `g`-register's
//! content, not the input datum); the copies are eliminated afterwards, so
//! the returned machine is plain.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{
    Assignment, LabelPattern, MachineKind, OutLabel, OutputItem, TestFormula, TransducerSpec,
    Transition,
};
use crate::normalize::{exact_pattern, expand_tests, remove_reassignments};

/// Cap on explored product states before composition gives up.
pub const COMPOSE_STATE_CAP: usize = 200_000;

/// Equality partition over the joint register file, as a class id per
/// register. Canonical form numbers classes by first occurrence.
type Part = Vec<u8>;

fn canonical(part: &[u8]) -> Part {
    let mut map: BTreeMap<u8, u8> = BTreeMap::new();
    let mut next = 0u8;
    part.iter()
        .map(|&c| {
            *map.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// All listed registers now hold the datum of class `dest` (`None` for a
/// datum equal to no tracked register: they form a fresh class).
fn apply_store(part: &[u8], targets: impl IntoIterator<Item = usize>, dest: Option<u8>) -> Part {
    let fresh = part.iter().copied().max().map_or(0, |m| m + 1);
    let cls = dest.unwrap_or(fresh);
    let mut out = part.to_vec();
    for t in targets {
        out[t] = cls;
    }
    out
}

/// Materialize label wildcards into per-label transitions and resolve
/// mirrored output labels against the matched input label, so every label
/// in the machine is concrete.
fn concretize_labels(t: &TransducerSpec) -> TransducerSpec {
    let mut out = t.clone();
    out.transitions = Vec::new();
    for tr in &t.transitions {
        let labels: Vec<usize> = match tr.label {
            LabelPattern::One(l) => vec![l],
            LabelPattern::Any => (0..t.alphabets.input.len()).collect(),
        };
        for l in labels {
            let mut copy = tr.clone();
            copy.label = LabelPattern::One(l);
            for item in &mut copy.output {
                let resolved = t.resolve_out_label(&item.label, l).expect("validated");
                item.label = OutLabel::Fixed(resolved);
            }
            out.transitions.push(copy);
        }
    }
    out
}

/// Bring a machine into the form the product needs: concrete labels,
/// exact-pattern tests, store-only assignments.
fn prepared(t: &TransducerSpec) -> Result<TransducerSpec> {
    let mut c = concretize_labels(t);
    if c.kind == MachineKind::Nrt && !c.registers.is_empty() {
        c = expand_tests(&c);
        if c.transitions.iter().any(|tr| !tr.assign.copies.is_empty()) {
            // Copy elimination leaves conjunction tests that skip registers
            // outside the substitution image; expand again to restore the
            // exact form the product relies on.
            c = remove_reassignments(&c)?;
            c = expand_tests(&c);
        }
    }
    Ok(c)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    /// State of `g`.
    p: usize,
    /// State of `f`.
    q: usize,
    /// Equality partition of the joint register file.
    part: Part,
    /// False: waiting for `g` to accept; true: waiting for `f`.
    w: bool,
    /// True exactly when the last step completed an accept pair; these are
    /// the accepting product states.
    m: bool,
}

/// One fully chosen way to consume a `g`-output chunk: the `f`-transitions
/// taken, and the partition before each step and after the last.
struct ChunkRun {
    seq: Vec<usize>,
    trail: Vec<Part>,
}

/// Enumerate all `f`-transition sequences consuming `items` (label and
/// composite source register per intermediate letter), starting at `q` with
/// partition `part`. The test of each step is forced: it must equal the set
/// of `f`-registers currently sharing the source register's class.
#[allow(clippy::too_many_arguments)]
fn chunk_runs(
    f: &TransducerSpec,
    f_pat: &[BTreeSet<usize>],
    f_by_state: &[Vec<usize>],
    kg: usize,
    items: &[(usize, Option<usize>)],
    q: usize,
    part: Part,
    seq: &mut Vec<usize>,
    trail: &mut Vec<Part>,
    out: &mut Vec<ChunkRun>,
) {
    if seq.len() == items.len() {
        trail.push(part);
        out.push(ChunkRun { seq: seq.clone(), trail: trail.clone() });
        trail.pop();
        return;
    }
    let (label, src) = items[seq.len()];
    let required: BTreeSet<usize> = match src {
        Some(s) => {
            let cls = part[s];
            (0..f.registers.len()).filter(|&r| part[kg + r] == cls).collect()
        }
        None => BTreeSet::new(),
    };
    for &ft in &f_by_state[q] {
        let tr = &f.transitions[ft];
        if !tr.label.matches(label) || f_pat[ft] != required {
            continue;
        }
        let next_part = match src {
            Some(s) => apply_store(
                &part,
                tr.assign.store_current.iter().map(|&r| kg + r),
                Some(part[s]),
            ),
            None => part.clone(),
        };
        seq.push(ft);
        trail.push(part.clone());
        chunk_runs(f, f_pat, f_by_state, kg, items, tr.target, next_part, seq, trail, out);
        trail.pop();
        seq.pop();
    }
}

/// Compose two transducers into one computing `x ↦ f(g(x))`.
///
/// Both machines must be of the same kind (`nrt` with `nrt`, `nft` with
/// `nft`), and every output label of `g` must exist in `f`'s input
/// alphabet. The result reads `g`'s input alphabet and writes `f`'s output
/// alphabet; its relation pairs `x` with `z` whenever some intermediate
/// `y` satisfies both machines. Neither machine needs to be functional.
pub fn compose(tf: &TransducerSpec, tg: &TransducerSpec) -> Result<TransducerSpec> {
    tf.validate()?;
    tg.validate()?;
    if tf.kind == MachineKind::Nra || tg.kind == MachineKind::Nra {
        return Err(Error::Precondition(
            "composition needs transducers; acceptors produce no output".into(),
        ));
    }
    if tf.kind != tg.kind {
        return Err(Error::Definition(format!(
            "composition needs machines of one kind; got {} and {}",
            tf.kind.keyword(),
            tg.kind.keyword()
        )));
    }
    let mut g_out_to_f_in = Vec::with_capacity(tg.alphabets.output.len());
    for name in &tg.alphabets.output {
        match tf.in_label_id(name) {
            Some(id) => g_out_to_f_in.push(id),
            None => {
                return Err(Error::Definition(format!(
                    "composition needs every output label of `{}` in the input alphabet of \
                     `{}`; `{name}` is missing",
                    tg.name, tf.name
                )))
            }
        }
    }

    let g = prepared(tg)?;
    let f = prepared(tf)?;
    let kg = g.registers.len();
    let kf = f.registers.len();
    let n_regs = kg + kf;

    let g_pat: Vec<BTreeSet<usize>> = g
        .transitions
        .iter()
        .map(|tr| exact_pattern(&tr.test, kg).expect("prepared machines carry exact tests"))
        .collect();
    let f_pat: Vec<BTreeSet<usize>> = f
        .transitions
        .iter()
        .map(|tr| exact_pattern(&tr.test, kf).expect("prepared machines carry exact tests"))
        .collect();
    let mut g_by_state: Vec<Vec<usize>> = vec![Vec::new(); g.states.len()];
    for (i, tr) in g.transitions.iter().enumerate() {
        g_by_state[tr.source].push(i);
    }
    let mut f_by_state: Vec<Vec<usize>> = vec![Vec::new(); f.states.len()];
    for (i, tr) in f.transitions.iter().enumerate() {
        f_by_state[tr.source].push(i);
    }

    let init = Key { p: g.initial, q: f.initial, part: vec![0; n_regs], w: false, m: false };
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut states: Vec<Key> = vec![init.clone()];
    index.insert(init, 0);
    let mut work: VecDeque<usize> = VecDeque::from([0]);
    let mut transitions: Vec<Transition> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    // Composite index of the f-register -> helper register slot (numbered
    // after the g- and f-registers, in order of first need).
    let mut helpers: BTreeMap<usize, usize> = BTreeMap::new();

    while let Some(s) = work.pop_front() {
        let Key { p, q, part, w, .. } = states[s].clone();
        for &gt in &g_by_state[p] {
            let gtr = &g.transitions[gt];
            let eg = &g_pat[gt];
            // Which class the input datum belongs to: forced when the test
            // names g-registers, otherwise a free guess among the classes
            // invisible to g (all-f classes) or none at all.
            let choices: Vec<Option<u8>> = if let Some(&r0) = eg.iter().next() {
                let cls = part[r0];
                let class_g: BTreeSet<usize> =
                    (0..kg).filter(|&r| part[r] == cls).collect();
                if class_g != *eg {
                    continue; // test contradicts the current equalities
                }
                vec![Some(cls)]
            } else {
                let mut cs = vec![None];
                let mut f_only: BTreeSet<u8> = (kg..n_regs).map(|r| part[r]).collect();
                for r in 0..kg {
                    f_only.remove(&part[r]);
                }
                cs.extend(f_only.into_iter().map(Some));
                cs
            };
            let LabelPattern::One(sigma) = gtr.label else { unreachable!("concretized") };
            for dest in choices {
                let e_test: BTreeSet<usize> = match dest {
                    Some(c) => (0..n_regs).filter(|&r| part[r] == c).collect(),
                    None => BTreeSet::new(),
                };
                let part2 =
                    apply_store(&part, gtr.assign.store_current.iter().copied(), dest);
                let items: Vec<(usize, Option<usize>)> = gtr
                    .output
                    .iter()
                    .map(|item| {
                        let OutLabel::Fixed(l) = item.label else {
                            unreachable!("concretized")
                        };
                        (g_out_to_f_in[l], item.register)
                    })
                    .collect();
                let mut runs = Vec::new();
                chunk_runs(
                    &f,
                    &f_pat,
                    &f_by_state,
                    kg,
                    &items,
                    q,
                    part2,
                    &mut Vec::new(),
                    &mut Vec::new(),
                    &mut runs,
                );
                for run in runs {
                    let n = run.seq.len();
                    let q_n = run.seq.last().map_or(q, |&ft| f.transitions[ft].target);
                    let fa =
                        run.seq.iter().any(|&ft| f.accepting.contains(&f.transitions[ft].target));
                    let ga = g.accepting.contains(&gtr.target);
                    let (w2, m2) = if w {
                        if fa {
                            (false, true)
                        } else {
                            (true, false)
                        }
                    } else {
                        (ga, false)
                    };

                    // Store steps of each f-register within this chunk.
                    let mut stored_at: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                    for (i, &ft) in run.seq.iter().enumerate() {
                        for &r in &f.transitions[ft].assign.store_current {
                            stored_at.entry(kg + r).or_default().push(i);
                        }
                    }
                    let src_at = |i: usize| items[i].1.expect("stores need a data source");

                    let mut output = Vec::new();
                    let mut copies: Vec<(usize, usize)> = Vec::new();
                    for (i, &ft) in run.seq.iter().enumerate() {
                        for item in &f.transitions[ft].output {
                            let OutLabel::Fixed(l) = item.label else {
                                unreachable!("concretized")
                            };
                            let register = item.register.map(|r| {
                                let rc = kg + r;
                                let steps = stored_at.get(&rc);
                                let before =
                                    steps.and_then(|v| v.iter().rev().find(|&&j| j <= i));
                                let after =
                                    steps.is_some_and(|v| *v.last().unwrap() > i);
                                match (before, after) {
                                    // The value the item reads survives to
                                    // the end of the step: read it in place.
                                    (_, false) => rc,
                                    // Overwritten later, but its source is a
                                    // g-register, stable for the whole step.
                                    (Some(&j0), true) => src_at(j0),
                                    // Overwritten later and predating this
                                    // step: an equal g-register stands in,
                                    // or a snapshot register if none exists.
                                    (None, true) => {
                                        let cls = run.trail[i + 1][rc];
                                        match (0..kg).find(|&rg| run.trail[i + 1][rg] == cls)
                                        {
                                            Some(rg) => rg,
                                            None => {
                                                let next = n_regs + helpers.len();
                                                *helpers.entry(rc).or_insert(next)
                                            }
                                        }
                                    }
                                }
                            });
                            output.push(OutputItem { label: OutLabel::Fixed(l), register });
                        }
                    }
                    for (&rc, steps) in &stored_at {
                        copies.push((rc, src_at(*steps.last().unwrap())));
                    }
                    for item in &output {
                        if let Some(r) = item.register {
                            if r >= n_regs {
                                let (&rc, _) =
                                    helpers.iter().find(|&(_, &h)| h == r).expect("interned");
                                if !copies.contains(&(r, rc)) {
                                    copies.push((r, rc));
                                }
                            }
                        }
                    }

                    let target = Key {
                        p: gtr.target,
                        q: q_n,
                        part: canonical(&run.trail[n]),
                        w: w2,
                        m: m2,
                    };
                    let target_idx = match index.get(&target) {
                        Some(&i) => i,
                        None => {
                            let i = states.len();
                            if i >= COMPOSE_STATE_CAP {
                                return Err(Error::Resource(format!(
                                    "composition product exceeded {COMPOSE_STATE_CAP} states"
                                )));
                            }
                            states.push(target.clone());
                            index.insert(target, i);
                            work.push_back(i);
                            i
                        }
                    };
                    let test = if n_regs == 0 {
                        TestFormula::True
                    } else {
                        TestFormula::Explicit(e_test.clone())
                    };
                    let tr = Transition {
                        source: s,
                        label: LabelPattern::One(sigma),
                        test,
                        assign: Assignment {
                            store_current: gtr.assign.store_current.clone(),
                            copies,
                        },
                        output,
                        target: target_idx,
                    };
                    let key = format!("{tr:?}");
                    if seen.insert(key) {
                        transitions.push(tr);
                    }
                }
            }
        }
    }

    let mut registers: Vec<String> = g.registers.iter().map(|r| format!("g.{r}")).collect();
    registers.extend(f.registers.iter().map(|r| format!("f.{r}")));
    for (&rc, _) in &helpers {
        registers.push(format!("h.{}", f.registers[rc - kg]));
    }
    if !helpers.is_empty() {
        // Explicit tests constrain every register, but nothing is known
        // about a datum's relation to the snapshot registers: spell the
        // tests out over the tracked registers only, then re-expand.
        for tr in &mut transitions {
            let TestFormula::Explicit(e) = tr.test.clone() else { unreachable!() };
            let mut formula = TestFormula::True;
            for r in 0..n_regs {
                let atom = if e.contains(&r) {
                    TestFormula::Eq(r)
                } else {
                    TestFormula::Neq(r)
                };
                formula = TestFormula::And(Box::new(formula), Box::new(atom));
            }
            tr.test = formula;
        }
    }

    let mut product = TransducerSpec {
        kind: tf.kind,
        name: format!("{}_after_{}", tf.name, tg.name),
        states: states
            .iter()
            .enumerate()
            .map(|(i, k)| format!("s{i}.{}.{}", g.states[k.p], f.states[k.q]))
            .collect(),
        registers,
        alphabets: crate::model::Alphabets {
            input: tg.alphabets.input.clone(),
            output: tf.alphabets.output.clone(),
        },
        initial: 0,
        accepting: states
            .iter()
            .enumerate()
            .filter(|(_, k)| k.m)
            .map(|(i, _)| i)
            .collect(),
        transitions,
    };
    if !helpers.is_empty() {
        if product.registers.len() > 20 {
            return Err(Error::Resource(format!(
                "composition needs snapshot registers and test expansion over {} registers",
                product.registers.len()
            )));
        }
        product = expand_tests(&product);
    }
    let final_machine = if product.transitions.iter().any(|tr| !tr.assign.copies.is_empty()) {
        remove_reassignments(&product)?
    } else {
        product
    };
    final_machine.validate().map_err(|e| {
        Error::Definition(format!("internal invariant broken: composed machine invalid: {e}"))
    })?;
    Ok(final_machine)
}

#[cfg(test)]
mod tests;
