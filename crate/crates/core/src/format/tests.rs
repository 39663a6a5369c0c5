use super::*;
use crate::corpus;
use crate::model::DataValue;

#[test]
fn corpus_files_round_trip_byte_exactly() {
    for &(name, text) in corpus::ALL {
        let t = parse_transducer(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = print_transducer(&t);
        assert_eq!(printed, text, "{name} is not in canonical form");
        let again = parse_transducer(&printed).unwrap();
        assert_eq!(again, t, "{name} re-parse changed the machine");
    }
}

#[test]
fn parse_is_insensitive_to_commas_comments_and_spacing() {
    let canonical = parse_transducer(corpus::SWAP_LABELS).unwrap();
    let noisy = "
        // label swapper
        nft swap_labels {
          registers: ;
          input: a, b;   // commas are optional
          output: a, b;
          initial: q0; accepting: q0;
          trans q0->q0 : on a, test true, store {}, out [b];
          trans q0 -> q0 : on b, test true, store { }, out [ a, ];
        }";
    assert_eq!(parse_transducer(noisy).unwrap(), canonical);
}

#[test]
fn state_order_is_initial_then_accepting_then_transitions() {
    let t = parse_transducer(corpus::T_RENAME2).unwrap();
    assert_eq!(t.states, vec!["q1", "q5", "q7", "q2", "q3", "q4", "q6"]);
    assert_eq!(t.initial, 0);
    let accepting: Vec<usize> = t.accepting.iter().copied().collect();
    assert_eq!(accepting, vec![1, 2]);
}

#[test]
fn reassignment_stores_parse_and_print() {
    let text = "nrt copier {
  registers: p q;
  input: a;
  output: a;
  initial: s0;
  accepting: s0;
  trans s0 -> s0 : on a, test true, store {p := curr q := p}, out [a:q];
}
";
    let t = parse_transducer(text).unwrap();
    let tr = &t.transitions[0];
    assert_eq!(tr.assign.store_current.iter().copied().collect::<Vec<_>>(), vec![0]);
    assert_eq!(tr.assign.copies, vec![(1, 0)]);
    assert_eq!(print_transducer(&t), text);
}

#[test]
fn tests_parse_with_precedence_and_parentheses() {
    let header = "nrt prec {
  registers: x y;
  input: a;
  output: a;
  initial: s;
  accepting: s;
";
    let t = parse_transducer(&format!(
        "{header}  trans s -> s : on a, test = x | = y & != x, store {{}}, out [a:x];\n}}"
    ))
    .unwrap();
    use crate::model::TestFormula::*;
    assert_eq!(
        t.transitions[0].test,
        Or(Box::new(Eq(0)), Box::new(And(Box::new(Eq(1)), Box::new(Neq(0)))))
    );
    let t2 = parse_transducer(&format!(
        "{header}  trans s -> s : on a, test (= x | = y) & != x, store {{}}, out [a:x];\n}}"
    ))
    .unwrap();
    assert_eq!(
        t2.transitions[0].test,
        And(Box::new(Or(Box::new(Eq(0)), Box::new(Eq(1)))), Box::new(Neq(0)))
    );
    // parenthesized prints keep the grouping
    let mut s = String::new();
    print_test(&t2.transitions[0].test, &t2.registers, &mut s, 0);
    assert_eq!(s, "(= x | = y) & != x");
    let reparsed = parse_transducer(&print_transducer(&t2)).unwrap();
    assert_eq!(reparsed.transitions[0].test, t2.transitions[0].test);
}

#[test]
fn explicit_pattern_prints_as_a_full_conjunction() {
    let t = parse_transducer(corpus::T_RENAME).unwrap();
    let explicit = crate::model::TestFormula::Explicit([0].into_iter().collect());
    let mut s = String::new();
    print_test(&explicit, &t.registers, &mut s, 0);
    assert_eq!(s, "= r1 & != r2 & != r0");
}

#[test]
fn parse_errors_carry_positions() {
    let err = parse_transducer("nrt x {\n  registers: r;\n  input: a ]\n").unwrap_err();
    match err {
        crate::Error::Parse { line, col, .. } => {
            assert_eq!(line, 3);
            assert_eq!(col, 12);
        }
        other => panic!("expected parse error, got {other}"),
    }
    let err = parse_transducer(
        "nrt x {
  registers: r;
  input: a;
  output: a;
  initial: s;
  accepting: s;
  trans s -> s : on a, test = nosuch, store {}, out [];
}",
    )
    .unwrap_err();
    assert!(err.to_string().contains("unknown register"), "{err}");
}

#[test]
fn kind_constraints_are_checked_after_parse() {
    // an nft never stores
    let err = parse_transducer(
        "nft x {
  registers: ;
  input: a;
  output: a;
  initial: s;
  accepting: s;
  trans s -> s : on a, test true, store {}, out [a:r];
}",
    )
    .unwrap_err();
    assert!(err.to_string().contains("unknown register"), "{err}");
    let err = parse_transducer(
        "nra x {
  registers: r;
  input: a;
  output: a;
  initial: s;
  accepting: s;
  trans s -> s : on a, test true, store {}, out [a:r];
}",
    )
    .unwrap_err();
    assert!(err.to_string().contains("no output"), "{err}");
}

#[test]
fn lassos_parse_and_display() {
    let x = parse_lasso("del:1 ch:2 (a:3 b:4)w").unwrap();
    assert_eq!(x.to_string(), "del:1 ch:2 (a:3 b:4)w");
    let no_prefix = parse_lasso("(a:0)w").unwrap();
    assert_eq!(no_prefix.to_string(), "(a:0)w");
    assert_eq!(no_prefix.prefix().len(), 0);

    let y = parse_output_lasso("a:1 (b)w").unwrap();
    assert_eq!(y.period()[0], OutLetter { label: "b".into(), datum: None });
    assert_eq!(y.to_string(), "a:1 (b)w");
}

#[test]
fn lasso_parse_errors() {
    assert!(parse_lasso("a:1 ()w").is_err(), "empty period");
    assert!(parse_lasso("a (b:1)w").is_err(), "input letters need data");
    assert!(parse_lasso("(a:1)w b:2").is_err(), "trailing letters");
    assert!(parse_lasso("a:1 b:2").is_err(), "missing period");
    assert!(parse_output_lasso("(a:)w").is_err(), "dangling colon");
}

#[test]
fn segments_render_space_separated() {
    let letters =
        vec![crate::model::Letter::new("a", 1), crate::model::Letter::new("b", 2)];
    assert_eq!(segment_to_string(&letters), "a:1 b:2");
    let out = vec![
        OutLetter::new("a", 1),
        OutLetter { label: "b".into(), datum: None },
    ];
    assert_eq!(segment_to_string(&out), "a:1 b");
    assert_eq!(segment_to_string::<OutLetter>(&[]), "");
}

#[test]
fn verdict_json_round_trips() {
    let mut v = Verdict::new(false, "functional").with_witness(Witness::Outputs {
        input: "del:1 ch:2 ch:3 #:0 (a:1)w".into(),
        outputs: vec!["(a:2)w".into(), "(a:3)w".into()],
    });
    v.stats.expanded_states = 42;
    let json = v.to_json();
    assert!(json.contains("\"answer\":false"));
    assert!(json.contains("\"witness\""));
    assert_eq!(Verdict::from_json(&json).unwrap(), v);

    let plain = Verdict::new(true, "continuous");
    let json = plain.to_json();
    assert!(!json.contains("witness"), "absent witness is omitted: {json}");
    assert_eq!(Verdict::from_json(&json).unwrap(), plain);

    let pat = Verdict::new(false, "continuous").with_witness(Witness::Pattern {
        pattern: PatternWitness {
            u: "a:1".into(),
            v: "a:2".into(),
            w: "a:3".into(),
            z: "(a:4)w".into(),
            out_u1: "a:1".into(),
            out_u2: "".into(),
            out_v1: "a:2".into(),
            out_v2: "".into(),
            out_z2: "a:9 (a:4)w".into(),
        },
    });
    let json = pat.to_json();
    assert_eq!(Verdict::from_json(&json).unwrap(), pat);
}

#[test]
fn verdict_json_is_deterministic_up_to_timing() {
    let mut a = Verdict::new(true, "functional");
    let mut b = Verdict::new(true, "functional");
    a.stats.millis = 3;
    b.stats.millis = 400;
    a.stats.millis = 0;
    b.stats.millis = 0;
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn datum_values_accept_the_full_u64_range() {
    let x = parse_lasso(&format!("(a:{})w", u64::MAX)).unwrap();
    assert_eq!(x.period()[0].datum, DataValue(u64::MAX));
    assert!(parse_lasso("(a:18446744073709551616)w").is_err(), "overflow");
}
