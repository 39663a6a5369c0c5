//! Normal forms and structural rewritings of machines: exact-pattern tests,
//! copy-free assignments, removal of useless states, test-freeness
//! detection, and the infinite-output sanity check.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{
    Assignment, DataValue, LassoWord, MachineKind, OutputItem, TestFormula, TransducerSpec,
    Transition,
};
use crate::omega::{BuchiGraph, Families, RunLasso};
use crate::restrict::{self, ChunkTable, STATE_CAP};

/// Rewrite every transition into guarded copies carrying exact equality
/// patterns: one copy per register subset `E` whose pattern (datum equal to
/// exactly the registers in `E`) satisfies the transition's test. For any
/// valuation and datum exactly one subset describes the actual equalities,
/// so at most one copy of each original transition can fire and the
/// recognized relation is unchanged. The transition count grows by a factor
/// of up to `2^|R|`; the state space is untouched. Machines without
/// registers are returned as they are.
pub fn expand_tests(t: &TransducerSpec) -> TransducerSpec {
    let k = t.registers.len();
    if k == 0 {
        return t.clone();
    }
    let mut out = t.clone();
    out.transitions = Vec::new();
    for tr in &t.transitions {
        for bits in 0u64..1u64 << k {
            let e: BTreeSet<usize> = (0..k).filter(|r| bits >> r & 1 == 1).collect();
            if tr.test.eval_pattern(&e) {
                out.transitions
                    .push(Transition { test: TestFormula::Explicit(e), ..tr.clone() });
            }
        }
    }
    out
}

/// Recognize a test in exact-pattern form — a conjunction of equality and
/// inequality atoms covering every register exactly once — and return the
/// set of registers required equal. Both the dedicated `Explicit` variant
/// and its printed conjunction spelling qualify, so machines survive a trip
/// through text; `true` leaves are allowed as neutral conjuncts.
pub fn exact_pattern(test: &TestFormula, num_registers: usize) -> Option<BTreeSet<usize>> {
    if let TestFormula::Explicit(e) = test {
        return Some(e.clone());
    }
    fn collect(f: &TestFormula, into: &mut BTreeMap<usize, bool>) -> bool {
        match f {
            TestFormula::And(a, b) => collect(a, into) && collect(b, into),
            TestFormula::Eq(r) => into.insert(*r, true).is_none(),
            TestFormula::Neq(r) => into.insert(*r, false).is_none(),
            TestFormula::True => true,
            _ => false,
        }
    }
    let mut polarity = BTreeMap::new();
    if !collect(test, &mut polarity) || polarity.len() != num_registers {
        return None;
    }
    Some(polarity.into_iter().filter(|&(_, eq)| eq).map(|(r, _)| r).collect())
}

/// Eliminate register-to-register copies. States of the result pair a state
/// with a substitution telling which physical register currently holds each
/// original register's value; copies become substitution updates instead of
/// data movement. All `:= curr` stores of one transition share a single
/// fresh physical target outside the substitution's image, so the result
/// has exactly one extra register and every produced assignment is a plain
/// store of at most one register.
///
/// Requires exact-pattern tests (run [`expand_tests`] first): each
/// transition's equality constraints must classify every register so they
/// can be rewritten through the substitution. Machines without registers
/// have nothing to eliminate and are returned as they are.
pub fn remove_reassignments(t: &TransducerSpec) -> Result<TransducerSpec> {
    let k = t.registers.len();
    if k == 0 {
        return Ok(t.clone());
    }

    let mut patterns: Vec<BTreeSet<usize>> = Vec::with_capacity(t.transitions.len());
    for tr in &t.transitions {
        let mut seen = BTreeSet::new();
        for target in tr.assign.targets() {
            if !seen.insert(target) {
                return Err(Error::Definition(format!(
                    "register {} is assigned more than once in one transition",
                    t.registers[target]
                )));
            }
        }
        match exact_pattern(&tr.test, k) {
            Some(e) => patterns.push(e),
            None => {
                return Err(Error::Precondition(
                    "copy elimination needs exact-pattern tests; expand tests first".into(),
                ))
            }
        }
    }

    let mut fresh = String::from("s");
    let mut n = 0usize;
    while t.registers.contains(&fresh) {
        n += 1;
        fresh = format!("s{n}");
    }
    let mut registers = t.registers.clone();
    registers.push(fresh);

    let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); t.states.len()];
    for (i, tr) in t.transitions.iter().enumerate() {
        by_source[tr.source].push(i);
    }

    // Breadth-first construction over (state, substitution) pairs, starting
    // from the identity substitution: initially every register holds its own
    // value (all cells carry the initial datum, so any home assignment is
    // consistent).
    let ident: Vec<usize> = (0..k).collect();
    let mut index: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
    let mut states: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert((t.initial, ident.clone()), 0);
    states.push((t.initial, ident));
    queue.push_back(0usize);

    while let Some(id) = queue.pop_front() {
        let (q, lam) = states[id].clone();
        for &ti in &by_source[q] {
            let tr = &t.transitions[ti];

            // Rewrite the equality pattern through the substitution. A clash
            // (one physical register required both equal and different)
            // means two registers sharing a cell — hence equal values — are
            // classified differently, so the transition can never fire here.
            let mut phys: BTreeMap<usize, bool> = BTreeMap::new();
            let mut dead = false;
            for r in 0..k {
                let want = patterns[ti].contains(&r);
                match phys.entry(lam[r]) {
                    Entry::Vacant(v) => {
                        v.insert(want);
                    }
                    Entry::Occupied(o) => {
                        if *o.get() != want {
                            dead = true;
                            break;
                        }
                    }
                }
            }
            if dead {
                continue;
            }
            let mut test: Option<TestFormula> = None;
            for (&p, &eq) in &phys {
                let atom = if eq { TestFormula::Eq(p) } else { TestFormula::Neq(p) };
                test = Some(match test {
                    None => atom,
                    Some(acc) => TestFormula::And(Box::new(acc), Box::new(atom)),
                });
            }
            let test = test.unwrap_or(TestFormula::True);

            // Stores all write the same datum: store it once into a cell
            // outside the current image and point every stored register
            // there. Copies only re-point: a copy from a stored register
            // reads the fresh datum, any other copy reads the source's old
            // home. Untouched registers keep their homes.
            let stores = &tr.assign.store_current;
            let mut lam2 = lam.clone();
            let mut assign = Assignment::default();
            let mut fresh_cell = None;
            if !stores.is_empty() {
                let image: BTreeSet<usize> = lam.iter().copied().collect();
                let p = (0..=k)
                    .find(|p| !image.contains(p))
                    .expect("a substitution over k registers cannot cover k+1 cells");
                assign.store_current.insert(p);
                fresh_cell = Some(p);
                for &r in stores {
                    lam2[r] = p;
                }
            }
            for &(dst, src) in &tr.assign.copies {
                lam2[dst] = if stores.contains(&src) {
                    fresh_cell.expect("copy source is stored, so a store happened")
                } else {
                    lam[src]
                };
            }

            let output: Vec<OutputItem> = tr
                .output
                .iter()
                .map(|o| OutputItem {
                    label: o.label.clone(),
                    register: o.register.map(|r| lam2[r]),
                })
                .collect();

            let key = (tr.target, lam2);
            let next = match index.get(&key) {
                Some(&s) => s,
                None => {
                    let s = states.len();
                    if s >= STATE_CAP {
                        return Err(Error::Resource(format!(
                            "copy elimination exceeded {STATE_CAP} states"
                        )));
                    }
                    index.insert(key.clone(), s);
                    states.push(key);
                    queue.push_back(s);
                    s
                }
            };
            transitions.push(Transition {
                source: id,
                label: tr.label.clone(),
                test,
                assign,
                output,
                target: next,
            });
        }
    }

    let mut names: Vec<String> = states
        .iter()
        .map(|(q, lam)| {
            let homes: Vec<&str> = lam.iter().map(|&p| registers[p].as_str()).collect();
            format!("{}~{}", t.states[*q], homes.join("."))
        })
        .collect();
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() != names.len() {
        names = (0..states.len()).map(|i| format!("s{i}")).collect();
    }
    let accepting: BTreeSet<usize> = states
        .iter()
        .enumerate()
        .filter(|(_, (q, _))| t.accepting.contains(q))
        .map(|(i, _)| i)
        .collect();

    Ok(TransducerSpec {
        kind: t.kind,
        name: t.name.clone(),
        states: names,
        registers,
        alphabets: t.alphabets.clone(),
        initial: 0,
        accepting,
        transitions,
    })
}

/// Remove states and transitions no accepting run can use. A transition
/// survives iff some run from the initial configuration crosses it and can
/// still satisfy the acceptance condition afterwards; a state survives iff
/// it touches a surviving transition (the initial state is always kept, so
/// a machine with empty language trims to a single bare state). Register
/// machines are analyzed over the finite data set `data`; register-free
/// machines need none. The recognized relation is unchanged: every step of
/// every accepting run connects configurations that can still accept.
pub fn trim(t: &TransducerSpec, data: Option<&[DataValue]>) -> Result<TransducerSpec> {
    let default_data = [DataValue::D0];
    let data = match data {
        Some(d) => d,
        None if t.registers.is_empty() => &default_data[..],
        None => {
            return Err(Error::Precondition(
                "trimming a register machine needs a finite data set".into(),
            ))
        }
    };
    let x = restrict::expand(t, data, STATE_CAP)?;
    let co = x.to_buchi().coaccessible();

    let mut used = vec![false; t.transitions.len()];
    let mut keep = vec![false; t.states.len()];
    keep[t.initial] = true;
    for s in 0..x.num_states() {
        if !co[s] {
            continue;
        }
        for (_, tr) in x.transitions_from(s) {
            if co[tr.target as usize] {
                used[tr.orig as usize] = true;
                keep[x.states[s].0 as usize] = true;
                keep[x.states[tr.target as usize].0 as usize] = true;
            }
        }
    }

    let mut remap = vec![usize::MAX; t.states.len()];
    let mut states = Vec::new();
    for (i, name) in t.states.iter().enumerate() {
        if keep[i] {
            remap[i] = states.len();
            states.push(name.clone());
        }
    }
    let transitions: Vec<Transition> = t
        .transitions
        .iter()
        .enumerate()
        .filter(|&(i, _)| used[i])
        .map(|(_, tr)| Transition {
            source: remap[tr.source],
            target: remap[tr.target],
            ..tr.clone()
        })
        .collect();

    Ok(TransducerSpec {
        kind: t.kind,
        name: t.name.clone(),
        states,
        registers: t.registers.clone(),
        alphabets: t.alphabets.clone(),
        initial: remap[t.initial],
        accepting: t.accepting.iter().filter(|&&q| keep[q]).map(|&q| remap[q]).collect(),
        transitions,
    })
}

/// True iff every transition's test constant-folds to `true`. Purely
/// syntactic: boolean constants are folded, but no equivalence reasoning is
/// attempted, so for instance an exact pattern over zero equalities does
/// not count even when no register exists to violate it.
pub fn is_test_free(t: &TransducerSpec) -> bool {
    t.transitions.iter().all(|tr| matches!(tr.test.fold_constants(), TestFormula::True))
}

/// Check that no accepting run emits only finitely many letters. A
/// violation is witnessed by an input lasso whose accepting run eventually
/// crosses silent transitions forever: concretely, a reachable cycle of
/// output-less transitions through an accepting state. The search runs over
/// a concrete data set with one value per register plus the initial datum,
/// which is enough to realize every reachable equality pattern, so absence
/// of a witness there proves absence over all data. Acceptors pass
/// vacuously: they have no output to require.
pub fn validate_infinite_output(t: &TransducerSpec) -> Result<Option<LassoWord>> {
    if t.kind == MachineKind::Nra {
        return Ok(None);
    }
    // Without tests, which transitions a run may cross never depends on
    // data, so the label skeleton settles the question without expanding
    // valuations — machines with many registers stay cheap.
    let x = if is_test_free(t) {
        restrict::label_skeleton(t)
    } else {
        let data = restrict::emptiness_data_set(t);
        restrict::expand(t, &data, STATE_CAP)?
    };
    let n = x.num_states();

    // Two copies of the expansion: the first crosses any transition, the
    // second is entered on a silent transition and only crosses silent
    // ones. Cycles never span both copies, so a fair cycle — one crossing
    // an edge into an accepting state of the second copy — is exactly a run
    // that keeps accepting and stops emitting.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut back: Vec<usize> = Vec::new();
    let mut fair: Vec<usize> = Vec::new();
    for s in 0..n {
        for (eid, tr) in x.transitions_from(s) {
            edges.push((s, tr.target as usize));
            back.push(eid);
            if tr.chunk == ChunkTable::EPSILON {
                for from in [s, n + s] {
                    if x.accepting[tr.target as usize] {
                        fair.push(edges.len());
                    }
                    edges.push((from, n + tr.target as usize));
                    back.push(eid);
                }
            }
        }
    }
    let g = BuchiGraph::new(2 * n, edges, vec![x.initial], Families::from_edge_sets(vec![fair]));
    match g.nonempty() {
        None => Ok(None),
        Some(lasso) => {
            let mapped = RunLasso {
                start: x.initial,
                stem: lasso.stem.iter().map(|&e| back[e]).collect(),
                cycle: lasso.cycle.iter().map(|&e| back[e]).collect(),
            };
            Ok(Some(restrict::lasso_input_word(&x, &mapped)?))
        }
    }
}

#[cfg(test)]
mod tests;
