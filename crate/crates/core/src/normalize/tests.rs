use super::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus;
use crate::format::{parse_lasso, parse_transducer};
use crate::model::{accepts_lasso, outputs_on, Letter, Outputs, RegisterValuation};

fn machine(text: &str) -> TransducerSpec {
    parse_transducer(text).expect("well-formed machine")
}

fn random_lasso(
    rng: &mut ChaCha8Rng,
    labels: &[String],
    max_datum: u64,
    max_prefix: usize,
    max_period: usize,
) -> LassoWord {
    let letter = |rng: &mut ChaCha8Rng| {
        Letter::new(labels[rng.gen_range(0..labels.len())].clone(), rng.gen_range(0..=max_datum))
    };
    let prefix = (0..rng.gen_range(0..=max_prefix)).map(|_| letter(rng)).collect();
    let period = (0..rng.gen_range(1..=max_period)).map(|_| letter(rng)).collect();
    LassoWord::new(prefix, period).unwrap()
}

fn same_outputs(a: &Outputs, b: &Outputs) -> bool {
    a.exhausted == b.exhausted
        && a.words.iter().all(|w| b.words.iter().any(|v| w.eq_omega(v)))
        && b.words.iter().all(|w| a.words.iter().any(|v| w.eq_omega(v)))
}

// ---------------------------------------------------------------------------
// expand_tests

#[test]
fn single_equality_expands_to_the_unique_matching_pattern() {
    let t = machine(
        "nrt tiny { registers: r1; input: a; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test = r1, store {}, out [a:r1]; }",
    );
    let e = expand_tests(&t);
    assert_eq!(e.transitions.len(), 1);
    assert_eq!(e.transitions[0].test, TestFormula::Explicit([0].into()));
}

#[test]
fn disjunction_expands_to_every_satisfying_pattern() {
    let t = machine(
        "nrt two { registers: r1 r2; input: a; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test = r1 | = r2, store {}, out [a:r1]; }",
    );
    let e = expand_tests(&t);
    let sets: Vec<BTreeSet<usize>> = e
        .transitions
        .iter()
        .map(|tr| match &tr.test {
            TestFormula::Explicit(s) => s.clone(),
            other => panic!("expected an exact pattern, got {other:?}"),
        })
        .collect();
    assert_eq!(sets, vec![[0].into(), [1].into(), [0, 1].into()]);
}

#[test]
fn trivial_test_expands_to_the_full_power_set() {
    let t = machine(
        "nrt free { registers: r1 r2; input: a; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test true, store {r1}, out [a:r1]; }",
    );
    assert_eq!(expand_tests(&t).transitions.len(), 4);
}

#[test]
fn expansion_preserves_outputs_on_random_lassos() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE1);
    for t in [corpus::t_rename(), corpus::t_rename2(), corpus::guess_repeat(), corpus::shift_prev()]
    {
        let e = expand_tests(&t);
        e.validate().expect("expansion stays well-formed");
        for _ in 0..25 {
            let x = random_lasso(&mut rng, &t.alphabets.input, 4, 4, 3);
            let before = outputs_on(&t, &x, 64).unwrap();
            let after = outputs_on(&e, &x, 64).unwrap();
            assert!(same_outputs(&before, &after), "outputs changed on {x}");
        }
    }
}

#[test]
fn expanded_copies_fire_exactly_when_the_original_does() {
    // For every valuation and datum, the firing expanded transitions match
    // the firing originals action for action: same nondeterminism, and at
    // most one pattern copy per original.
    let t = corpus::guess_repeat();
    let e = expand_tests(&t);
    let k = t.registers.len();
    let data: Vec<u64> = (0..=k as u64).collect();
    let action = |tr: &Transition| format!("{:?}/{:?}/{:?}/{}", tr.label, tr.assign, tr.output, tr.target);
    let mut vals = vec![RegisterValuation(vec![DataValue(0); k])];
    for r in 0..k {
        vals = vals
            .into_iter()
            .flat_map(|v| {
                data.iter().map(move |&d| {
                    let mut w = v.clone();
                    w.0[r] = DataValue(d);
                    w
                })
            })
            .collect();
    }
    for v in &vals {
        for &d in &data {
            for source in 0..t.states.len() {
                let mut fire_orig: Vec<String> = t
                    .transitions
                    .iter()
                    .filter(|tr| tr.source == source && tr.test.eval(v, DataValue(d)))
                    .map(&action)
                    .collect();
                let mut fire_exp: Vec<String> = e
                    .transitions
                    .iter()
                    .filter(|tr| tr.source == source && tr.test.eval(v, DataValue(d)))
                    .map(&action)
                    .collect();
                fire_orig.sort();
                fire_exp.sort();
                assert_eq!(fire_orig, fire_exp, "at state {source}, valuation {v:?}, datum {d}");
            }
        }
    }
}

#[test]
fn pattern_recognition_accepts_both_spellings() {
    use TestFormula::*;
    assert_eq!(exact_pattern(&Explicit([1].into()), 3), Some([1].into()));
    // printed form: "= r1 & != r2 & != r3" parses to an &-chain of atoms
    let chain = And(Box::new(Eq(0)), Box::new(And(Box::new(Neq(1)), Box::new(Neq(2)))));
    assert_eq!(exact_pattern(&chain, 3), Some([0].into()));
    // patterns must classify every register exactly once
    assert_eq!(exact_pattern(&And(Box::new(Eq(0)), Box::new(Neq(1))), 3), None);
    assert_eq!(exact_pattern(&And(Box::new(Eq(0)), Box::new(Eq(0))), 1), None);
    assert_eq!(exact_pattern(&Or(Box::new(Eq(0)), Box::new(Neq(0))), 1), None);
    assert_eq!(exact_pattern(&True, 1), None);
    assert_eq!(exact_pattern(&True, 0), Some(BTreeSet::new()));
    // true leaves are neutral inside a conjunction
    assert_eq!(exact_pattern(&And(Box::new(True), Box::new(Eq(0))), 1), Some([0].into()));
}

// ---------------------------------------------------------------------------
// remove_reassignments

#[test]
fn copy_free_machines_survive_copy_elimination_unchanged_in_behavior() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE2);
    let t = expand_tests(&corpus::t_rename());
    let r = remove_reassignments(&t).unwrap();
    r.validate().expect("result stays well-formed");
    assert_eq!(r.registers.len(), corpus::t_rename().registers.len() + 1);
    assert!(r.transitions.iter().all(|tr| tr.assign.is_plain()));
    assert!(r.transitions.iter().all(|tr| tr.assign.store_current.len() <= 1));
    for _ in 0..30 {
        let x = random_lasso(&mut rng, &t.alphabets.input, 4, 4, 3);
        let before = outputs_on(&t, &x, 64).unwrap();
        let after = outputs_on(&r, &x, 64).unwrap();
        assert!(same_outputs(&before, &after), "outputs changed on {x}");
    }
}

#[test]
fn stored_and_copied_registers_share_one_cell() {
    // "r1 := r2 while r2 := curr": the copy reads the freshly stored datum,
    // so both registers end up holding the current letter's datum.
    let t = expand_tests(&machine(
        "nrt both { registers: r1 r2; input: a; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test true, store {r2 r1 := r2}, out [a:r1 a:r2]; }",
    ));
    let r = remove_reassignments(&t).unwrap();
    r.validate().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE3);
    for _ in 0..20 {
        let x = random_lasso(&mut rng, &t.alphabets.input, 3, 3, 2);
        assert!(same_outputs(&outputs_on(&t, &x, 64).unwrap(), &outputs_on(&r, &x, 64).unwrap()));
    }
}

#[test]
fn copies_read_the_old_value_of_unstored_sources() {
    // q1 -> q2 copies r1 := r2 without storing, so the emitted datum is the
    // letter stored two steps earlier: a delay line through a copy.
    let t = expand_tests(&machine(
        "nrt delay { registers: r1 r2; input: a; output: a; initial: q0; accepting: q1 q2;
           trans q0 -> q1 : on a, test true, store {r2}, out [];
           trans q1 -> q2 : on a, test true, store {r1 := r2}, out [a:r1];
           trans q2 -> q1 : on a, test true, store {r2}, out []; }",
    ));
    let r = remove_reassignments(&t).unwrap();
    r.validate().unwrap();
    let x = parse_lasso("a:7 (a:3 a:7)w").unwrap();
    let want = outputs_on(&t, &x, 16).unwrap();
    assert!(!want.words.is_empty());
    assert!(same_outputs(&want, &outputs_on(&r, &x, 16).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(0xE4);
    for _ in 0..20 {
        let y = random_lasso(&mut rng, &t.alphabets.input, 3, 3, 2);
        assert!(same_outputs(&outputs_on(&t, &y, 64).unwrap(), &outputs_on(&r, &y, 64).unwrap()));
    }
}

#[test]
fn copy_elimination_requires_exact_patterns() {
    match remove_reassignments(&corpus::t_rename()) {
        Err(Error::Precondition(_)) => {}
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn doubly_assigned_registers_are_rejected() {
    let mut t = machine(
        "nrt dup { registers: r1 r2; input: a; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test true, store {r1}, out [a:r1]; }",
    );
    t.transitions[0].test = TestFormula::Explicit(BTreeSet::new());
    t.transitions[0].assign.copies.push((0, 1));
    match remove_reassignments(&t) {
        Err(Error::Definition(msg)) => assert!(msg.contains("more than once"), "{msg}"),
        other => panic!("expected a definition error, got {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// trim

#[test]
fn unreachable_accepting_states_trim_to_a_bare_machine() {
    let t = machine(
        "nft deadend { registers: ; input: a; output: a; initial: q0; accepting: q1;
           trans q0 -> q0 : on a, test true, store {}, out [a]; }",
    );
    let trimmed = trim(&t, None).unwrap();
    assert_eq!(trimmed.states, vec!["q0".to_string()]);
    assert!(trimmed.transitions.is_empty());
    assert!(trimmed.accepting.is_empty());
}

#[test]
fn useful_machines_trim_to_themselves() {
    let data: Vec<DataValue> = (0..5).map(DataValue).collect();
    let t = corpus::t_rename();
    let trimmed = trim(&t, Some(&data)).unwrap();
    assert_eq!(trimmed, t, "every state and transition is on some accepting run");
    assert_eq!(trim(&trimmed, Some(&data)).unwrap(), trimmed, "trimming is idempotent");
    let s = corpus::swap_labels();
    assert_eq!(trim(&s, None).unwrap(), s);
}

#[test]
fn trimming_preserves_membership() {
    // graft a dead branch onto the renamer: a state with no way back to an
    // accepting cycle and a transition into it
    let mut t = corpus::t_rename();
    t.states.push("junk".into());
    let junk = t.states.len() - 1;
    t.transitions.push(Transition {
        source: t.state_id("q1").unwrap(),
        label: crate::model::LabelPattern::One(0),
        test: TestFormula::True,
        assign: Assignment::store([0]),
        output: vec![],
        target: junk,
    });
    t.validate().unwrap();
    let data: Vec<DataValue> = (0..5).map(DataValue).collect();
    let trimmed = trim(&t, Some(&data)).unwrap();
    assert!(!trimmed.states.iter().any(|s| s == "junk"));
    assert_eq!(trimmed.transitions.len(), t.transitions.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5);
    for _ in 0..100 {
        let x = random_lasso(&mut rng, &t.alphabets.input, 4, 5, 4);
        assert_eq!(
            accepts_lasso(&t, &x).unwrap(),
            accepts_lasso(&trimmed, &x).unwrap(),
            "membership changed on {x}"
        );
    }
}

#[test]
fn trimming_register_machines_needs_a_data_set() {
    match trim(&corpus::t_rename(), None) {
        Err(Error::Precondition(_)) => {}
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// is_test_free

#[test]
fn test_freeness_is_syntactic() {
    assert!(!is_test_free(&corpus::t_rename()));
    assert!(!is_test_free(&corpus::t_rename2()));
    assert!(!is_test_free(&corpus::guess_repeat()));
    assert!(is_test_free(&corpus::testfree_select()));
    assert!(is_test_free(&corpus::wide_testfree8()));
    assert!(is_test_free(&corpus::swap_labels()));
    assert!(is_test_free(&corpus::relabel_ab()));

    let mut t = corpus::relabel_ab();
    t.transitions[0].test = TestFormula::Not(Box::new(TestFormula::False));
    assert!(is_test_free(&t), "boolean constants fold");
    t.transitions[0].test = TestFormula::Explicit(BTreeSet::new());
    assert!(!is_test_free(&t), "no semantic reasoning beyond folding");
}

#[test]
fn test_free_acceptance_ignores_data() {
    let t = corpus::testfree_select();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE6);
    for _ in 0..50 {
        let x = random_lasso(&mut rng, &t.alphabets.input, 5, 4, 4);
        let mut remap =
            |l: &Letter| Letter::new(l.label.clone(), rng.gen_range(0..=9u64));
        let y = LassoWord::new(
            x.prefix().iter().map(&mut remap).collect(),
            x.period().iter().map(&mut remap).collect(),
        )
        .unwrap();
        assert_eq!(
            accepts_lasso(&t, &x).unwrap(),
            accepts_lasso(&t, &y).unwrap(),
            "acceptance depended on data: {x} vs {y}"
        );
    }
}

// ---------------------------------------------------------------------------
// validate_infinite_output

#[test]
fn silent_accepting_cycle_is_reported_with_a_replayable_lasso() {
    let t = machine(
        "nrt silent { registers: r0; input: a; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test true, store {r0}, out []; }",
    );
    let lasso = validate_infinite_output(&t).unwrap().expect("the only run is silent");
    assert!(accepts_lasso(&t, &lasso).unwrap(), "witness must be accepted");
    let outs = outputs_on(&t, &lasso, 8).unwrap();
    assert!(outs.words.is_empty(), "no infinite output exists on the witness");
}

#[test]
fn silent_cycles_off_accepting_states_are_fine() {
    let t = machine(
        "nrt lazy { registers: r0; input: a; output: a; initial: q0; accepting: q1;
           trans q0 -> q0 : on a, test true, store {}, out [];
           trans q0 -> q1 : on a, test true, store {r0}, out [a:r0];
           trans q1 -> q1 : on a, test true, store {r0}, out [a:r0]; }",
    );
    assert_eq!(validate_infinite_output(&t).unwrap(), None);
}

#[test]
fn a_silent_excursion_from_an_accepting_state_is_caught() {
    // the accepting state also has an emitting loop, but a run may instead
    // bounce silently between q0 and q1 forever
    let t = machine(
        "nrt bounce { registers: r0; input: a b; output: a; initial: q0; accepting: q0;
           trans q0 -> q0 : on a, test true, store {r0}, out [a:r0];
           trans q0 -> q1 : on b, test true, store {}, out [];
           trans q1 -> q0 : on b, test true, store {}, out []; }",
    );
    let lasso = validate_infinite_output(&t).unwrap().expect("silent bouncing accepts");
    assert!(accepts_lasso(&t, &lasso).unwrap());
    assert!(lasso.period().iter().all(|l| l.label == "b"), "the silent cycle uses b letters");
}

#[test]
fn corpus_machines_emit_on_every_accepting_cycle() {
    for (name, text) in corpus::ALL {
        let t = parse_transducer(text).unwrap();
        assert_eq!(validate_infinite_output(&t).unwrap(), None, "machine {name}");
    }
}
