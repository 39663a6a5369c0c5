use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus;
use crate::format::{parse_lasso, parse_output_lasso, parse_transducer};
use crate::testkit;

fn replay_ok(t: &TransducerSpec, v: &Verdict) {
    assert!(
        replay_witness(t, v).expect("replay runs"),
        "witness for {} must replay: {:?}",
        t.name,
        v.witness
    );
}

#[test]
fn functionality_verdicts_on_corpus() {
    for t in [
        corpus::t_rename2(),
        corpus::t_rename3(),
        corpus::guess_repeat(),
        corpus::identity(),
        corpus::relabel_ab(),
        corpus::shift_prev(),
        corpus::testfree_select(),
        corpus::swap_labels(),
    ] {
        let v = nrt_functional(&t).expect("decides");
        assert!(v.answer, "{} is functional", t.name);
        assert!(v.witness.is_none());
    }
}

#[test]
fn t_rename_is_not_functional_and_the_witness_replays() {
    let t = corpus::t_rename();
    let v = nrt_functional(&t).expect("decides");
    assert!(!v.answer);
    let Some(Witness::Divergence { input, outputs }) = &v.witness else {
        panic!("expected a divergence, got {:?}", v.witness);
    };
    assert!(!outputs.0.eq_omega(&outputs.1));
    assert!(!input.period().is_empty());
    replay_ok(&t, &v);
}

#[test]
fn verdicts_survive_transition_reordering_and_state_renaming() {
    for source in [corpus::t_rename(), corpus::t_rename2(), corpus::guess_repeat()] {
        let mut shuffled = source.clone();
        shuffled.transitions.reverse();
        shuffled.states = (0..source.states.len()).map(|q| format!("s{q}")).collect();
        let a = nrt_functional(&source).expect("decides");
        let b = nrt_functional(&shuffled).expect("decides");
        assert_eq!(a.answer, b.answer, "{}", source.name);
        if !b.answer {
            replay_ok(&shuffled, &b);
        }
    }
}

#[test]
fn continuity_verdicts_on_corpus() {
    for (t, expect) in [
        (corpus::t_rename2(), false),
        (corpus::t_rename3(), true),
        (corpus::guess_repeat(), false),
        (corpus::identity(), true),
        (corpus::relabel_ab(), true),
        (corpus::shift_prev(), true),
        (corpus::testfree_select(), false),
        (corpus::swap_labels(), true),
    ] {
        let v = nrt_continuous(&t).expect("decides");
        assert_eq!(v.answer, expect, "{} continuity", t.name);
        if expect {
            assert!(v.witness.is_none());
        } else {
            assert!(
                matches!(v.witness, Some(Witness::Pattern(_))),
                "{} should yield a pattern",
                t.name
            );
            replay_ok(&t, &v);
        }
    }
}

#[test]
fn computable_is_an_alias_for_continuous() {
    let t = corpus::t_rename3();
    let a = nrt_continuous(&t).expect("decides");
    let b = nrt_computable(&t).expect("decides");
    assert_eq!(a.answer, b.answer);
}

#[test]
fn continuity_rejects_nonfunctional_machines() {
    let t = corpus::t_rename();
    match nrt_continuous(&t) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("not functional"), "{msg}"),
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn acceptors_are_rejected() {
    let t = corpus::first_repeats();
    assert!(matches!(nrt_functional(&t), Err(Error::Definition(_))));
    assert!(matches!(nrt_continuous(&t), Err(Error::Definition(_))));
}

#[test]
fn machines_with_finite_output_runs_are_rejected() {
    let t = parse_transducer(
        "nrt quiet {
          registers: r;
          input: a;
          output: a;
          initial: q0;
          accepting: q0;
          trans q0 -> q0 : on a, test true, store {r}, out [];
        }",
    )
    .expect("parses");
    match nrt_functional(&t) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("finitely many"), "{msg}"),
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn testfree_procedures_reject_machines_with_tests() {
    let t = corpus::t_rename();
    assert!(matches!(testfree_functional(&t), Err(Error::Precondition(_))));
    let t3 = corpus::t_rename3();
    assert!(matches!(testfree_continuous(&t3), Err(Error::Precondition(_))));
}

#[test]
fn testfree_path_agrees_with_general_path_on_corpus() {
    for t in [
        corpus::identity(),
        corpus::relabel_ab(),
        corpus::shift_prev(),
        corpus::testfree_select(),
        corpus::swap_labels(),
    ] {
        let gf = nrt_functional(&t).expect("general functionality");
        let tf = testfree_functional(&t).expect("test-free functionality");
        assert_eq!(gf.answer, tf.answer, "{} functionality paths disagree", t.name);
        assert_eq!(tf.procedure, Procedure::TestFree);
        if !tf.answer {
            replay_ok(&t, &tf);
        }
        let gc = nrt_continuous(&t).expect("general continuity");
        let tc = testfree_continuous(&t).expect("test-free continuity");
        assert_eq!(gc.answer, tc.answer, "{} continuity paths disagree", t.name);
        if !tc.answer {
            replay_ok(&t, &tc);
            replay_ok(&t, &gc);
        }
    }
}

#[test]
fn eight_register_machine_is_fast_on_the_testfree_path() {
    let t = corpus::wide_testfree8();
    let f = testfree_functional(&t).expect("decides");
    assert!(f.answer, "a deterministic machine is functional");
    let c = testfree_continuous(&t).expect("decides");
    assert!(c.answer, "a fixed-delay shift is continuous");
    // The general path would need 19 data values over 8 registers; its
    // expansion blows past any reasonable state cap.
    let err = crate::restrict::expand(&t, &crate::restrict::decision_data_set(&t), 50_000);
    assert!(matches!(err, Err(Error::Resource(_))));
    assert!(crate::normalize::is_test_free(&t));
}

#[test]
fn equivalence_of_a_machine_with_itself() {
    let t = corpus::identity();
    let v = equivalent_on_common_domain(&t, &t).expect("decides");
    assert!(v.answer);
}

#[test]
fn equivalence_detects_a_renamed_output_register() {
    let t = corpus::t_rename2();
    let mut u = corpus::t_rename2();
    u.name = "T_rename2_swapped".to_string();
    // Swap which of the two guessed targets each branch emits, leaving the
    // domain untouched: registers are r1=0 r2=1 r3=2 r0=3.
    for tr in &mut u.transitions {
        for item in &mut tr.output {
            item.register = match item.register {
                Some(1) => Some(2),
                Some(2) => Some(1),
                other => other,
            };
        }
    }
    assert!(nrt_functional(&u).expect("decides").answer, "the swap preserves functionality");
    let v = equivalent_on_common_domain(&t, &u).expect("decides");
    assert!(!v.answer, "the branches now rename to different targets");
    let joint = common_join(&t, &u).expect("joins");
    replay_ok(&joint, &v);
}

#[test]
fn equivalence_distinguishes_identity_from_relabeling() {
    let v = equivalent_on_common_domain(&corpus::identity(), &corpus::relabel_ab())
        .expect("decides");
    assert!(!v.answer);
    let joint = common_join(&corpus::identity(), &corpus::relabel_ab()).expect("joins");
    replay_ok(&joint, &v);
}

#[test]
fn machines_with_disjoint_domains_are_vacuously_equivalent() {
    let starts_a = parse_transducer(
        "nrt starts_a {
          registers: r0;
          input: a b;
          output: a b;
          initial: s;
          accepting: q0;
          trans s -> q0 : on a, test true, store {r0}, out [a:r0];
          trans q0 -> q0 : on *, test true, store {r0}, out [*:r0];
        }",
    )
    .expect("parses");
    let starts_b = parse_transducer(
        "nrt starts_b {
          registers: r0;
          input: a b;
          output: a b;
          initial: s;
          accepting: q0;
          trans s -> q0 : on b, test true, store {r0}, out [b:r0];
          trans q0 -> q0 : on *, test true, store {r0}, out [b:r0];
        }",
    )
    .expect("parses");
    let v = equivalent_on_common_domain(&starts_a, &starts_b).expect("decides");
    assert!(v.answer, "no input is in both domains");
}

#[test]
fn wildcards_are_materialized_per_machine_before_joining() {
    // `only_a` accepts exactly the words over label a and echoes them. Its
    // wildcard must not start matching label b after the alphabets merge:
    // were it to, only_a would also map b-words (to label a) and disagree
    // with identity on them.
    let only_a = parse_transducer(
        "nrt only_a {
          registers: r0;
          input: a;
          output: a;
          initial: q0;
          accepting: q0;
          trans q0 -> q0 : on *, test true, store {r0}, out [a:r0];
        }",
    )
    .expect("parses");
    let v = equivalent_on_common_domain(&corpus::identity(), &only_a).expect("decides");
    assert!(v.answer, "they agree on the common domain, the a-words");
}

#[test]
fn equivalence_needs_matching_output_kinds() {
    let r = equivalent_on_common_domain(&corpus::t_rename2(), &corpus::swap_labels());
    assert!(matches!(r, Err(Error::Definition(_))));
}

#[test]
fn equivalence_rejects_nonfunctional_inputs() {
    match equivalent_on_common_domain(&corpus::t_rename(), &corpus::identity()) {
        Err(Error::Precondition(msg)) => {
            assert!(msg.contains("left"), "{msg}");
            assert!(msg.contains("not functional"), "{msg}");
        }
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn verdicts_are_stable_under_larger_data_sets() {
    for t in [corpus::t_rename(), corpus::testfree_select()] {
        let k = t.registers.len();
        let baseline = nrt_functional(&t).expect("decides").answer;
        for extra in [1usize, 5] {
            let data: Vec<DataValue> =
                (0..(2 * k + 3 + extra) as u64).map(DataValue).collect();
            let x = crate::restrict::expand(&t, &data, crate::restrict::STATE_CAP)
                .expect("expands");
            let v = nft_functional(&x).expect("decides");
            assert_eq!(v.answer, baseline, "{} at {} data values", t.name, data.len());
        }
    }
    let t = corpus::testfree_select();
    let k = t.registers.len();
    let baseline = nrt_continuous(&t).expect("decides").answer;
    for extra in [1usize, 5] {
        let data: Vec<DataValue> = (0..(2 * k + 3 + extra) as u64).map(DataValue).collect();
        let x = crate::restrict::expand(&t, &data, crate::restrict::STATE_CAP).expect("expands");
        let v = nft_continuous(&x).expect("decides");
        assert_eq!(v.answer, baseline, "{} continuity at {} data values", t.name, data.len());
    }
}

#[test]
fn random_finite_transducers_agree_with_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(415);
    let params = testkit::NftParams::default();
    let (mut yes, mut no) = (0, 0);
    for round in 0..150 {
        let t = testkit::random_productive_nft(&mut rng, &params, 500);
        let mut inputs = testkit::enumerate_label_lassos(&t.alphabets.input, 2, 2);
        for _ in 0..20 {
            inputs.push(testkit::random_lasso(&mut rng, &t, &[], 6, 6));
        }
        let v = nrt_functional(&t).expect("decides");
        if v.answer {
            let refuter = testkit::functionality_refuter(&t, &inputs).expect("enumerates");
            assert!(
                refuter.is_none(),
                "round {round}: declared functional but {} has two outputs\n{t:?}",
                refuter.unwrap()
            );
            yes += 1;
        } else {
            replay_ok(&t, &v);
            no += 1;
        }
    }
    assert!(yes >= 20 && no >= 20, "unbalanced draw: {yes} functional, {no} not");
}

#[test]
fn random_testfree_machines_agree_across_both_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let params = testkit::TestFreeParams::default();
    let data: Vec<DataValue> = (0..3).map(DataValue).collect();
    let (mut fun_yes, mut fun_no) = (0, 0);
    for round in 0..120 {
        let t = testkit::random_productive_testfree(&mut rng, &params, 500);
        let gf = nrt_functional(&t).expect("general functionality");
        let tf = testfree_functional(&t).expect("test-free functionality");
        assert_eq!(gf.answer, tf.answer, "round {round}: functionality paths disagree\n{t:?}");
        if !tf.answer {
            replay_ok(&t, &tf);
            replay_ok(&t, &gf);
            fun_no += 1;
            continue;
        }
        fun_yes += 1;
        // Spot-check against sampled inputs with varied data.
        let mut inputs = Vec::new();
        for _ in 0..15 {
            inputs.push(testkit::random_lasso(&mut rng, &t, &data, 4, 4));
        }
        let refuter = testkit::functionality_refuter(&t, &inputs).expect("enumerates");
        assert!(refuter.is_none(), "round {round}: {} refutes functionality\n{t:?}",
            refuter.map(|x| x.to_string()).unwrap_or_default());

        let gc = nrt_continuous(&t).expect("general continuity");
        let tc = testfree_continuous(&t).expect("test-free continuity");
        assert_eq!(gc.answer, tc.answer, "round {round}: continuity paths disagree\n{t:?}");
        if !tc.answer {
            replay_ok(&t, &tc);
            replay_ok(&t, &gc);
        }
    }
    assert!(fun_yes >= 20 && fun_no >= 20, "unbalanced: {fun_yes} functional, {fun_no} not");
}

#[test]
fn branching_machines_exercise_both_continuity_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9311);
    let (mut cont_yes, mut cont_no) = (0, 0);
    for round in 0..80 {
        let t = testkit::random_branching_testfree(&mut rng, 1 + (round % 2));
        if !matches!(crate::normalize::validate_infinite_output(&t), Ok(None)) {
            continue;
        }
        let gf = nrt_functional(&t).expect("general functionality");
        assert!(gf.answer, "round {round}: disjoint branch domains stay functional\n{t:?}");
        let gc = nrt_continuous(&t).expect("general continuity");
        let tc = testfree_continuous(&t).expect("test-free continuity");
        assert_eq!(gc.answer, tc.answer, "round {round}: continuity paths disagree\n{t:?}");
        if !tc.answer {
            replay_ok(&t, &tc);
            replay_ok(&t, &gc);
            cont_no += 1;
        } else {
            cont_yes += 1;
        }
    }
    assert!(cont_yes >= 5 && cont_no >= 20, "unbalanced: {cont_yes} continuous, {cont_no} not");
}

#[test]
fn wire_verdicts_round_trip_and_stay_parseable() {
    let t = corpus::t_rename();
    let v = nrt_functional(&t).expect("decides");
    let wire = v.to_wire("functional");
    assert_eq!(wire.procedure, "functional");
    assert!(!wire.answer);
    let json = wire.to_json();
    let back = format::Verdict::from_json(&json).expect("parses");
    assert_eq!(back.answer, wire.answer);
    let Some(format::Witness::Outputs { input, outputs }) = &back.witness else {
        panic!("expected an outputs witness");
    };
    parse_lasso(input).expect("witness input parses back");
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        parse_output_lasso(o).expect("witness output parses back");
    }

    let t2 = corpus::testfree_select();
    let c = testfree_continuous(&t2).expect("decides");
    let wire = c.to_wire("continuous");
    assert_eq!(wire.procedure, "continuous-testfree");
    let Some(format::Witness::Pattern { pattern }) = &wire.witness else {
        panic!("expected a pattern witness");
    };
    parse_output_lasso(&pattern.out_z2).expect("tail output parses back");
}

#[test]
fn pattern_families_converge_to_their_limit() {
    let v = nrt_continuous(&corpus::t_rename2()).expect("decides");
    let Some(Witness::Pattern(p)) = &v.witness else {
        panic!("expected a pattern");
    };
    let limit = p.limit_input();
    for n in 1..=3usize {
        let member = p.family_member(n);
        let shared = p.u.len() + n * p.v.len();
        for i in 0..shared {
            assert_eq!(limit.letter_at(i), member.letter_at(i), "prefix agreement at {i}");
        }
    }
    assert!(!p.out_v1.is_empty(), "the limit output must be infinite");
}

#[test]
fn stats_report_the_searched_machine_size() {
    let t = corpus::identity();
    let g = nrt_functional(&t).expect("decides");
    let f = testfree_functional(&t).expect("decides");
    assert!(g.stats.expanded_states >= f.stats.expanded_states);
    assert!(f.stats.expanded_states > 0);
}
