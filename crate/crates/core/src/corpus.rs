//! Built-in machine corpus, embedded from `corpus/` at the repository root.
//!
//! The corpus collects the machines exercised throughout the tests and
//! benchmarks: the three renaming transducers, the infinite-repetition
//! guesser, two test-free machines (one small, one with eight registers whose
//! full expansion is intentionally infeasible), and a handful of single-state
//! utility machines used by the composition tests.

use crate::format::parse_transducer;
use crate::model::TransducerSpec;

pub const T_RENAME: &str = include_str!("../../../corpus/t_rename.nrt");
pub const T_RENAME2: &str = include_str!("../../../corpus/t_rename2.nrt");
pub const T_RENAME3: &str = include_str!("../../../corpus/t_rename3.nrt");
pub const GUESS_REPEAT: &str = include_str!("../../../corpus/guess_repeat.nrt");
pub const TESTFREE_SELECT: &str = include_str!("../../../corpus/testfree_select.nrt");
pub const WIDE_TESTFREE8: &str = include_str!("../../../corpus/wide_testfree8.nrt");
pub const IDENTITY: &str = include_str!("../../../corpus/identity.nrt");
pub const RELABEL_AB: &str = include_str!("../../../corpus/relabel_ab.nrt");
pub const SHIFT_PREV: &str = include_str!("../../../corpus/shift_prev.nrt");
pub const FIRST_REPEATS: &str = include_str!("../../../corpus/first_repeats.nra");
pub const SWAP_LABELS: &str = include_str!("../../../corpus/swap_labels.nft");

/// Every corpus machine as `(file name, source text)`.
pub const ALL: &[(&str, &str)] = &[
    ("t_rename.nrt", T_RENAME),
    ("t_rename2.nrt", T_RENAME2),
    ("t_rename3.nrt", T_RENAME3),
    ("guess_repeat.nrt", GUESS_REPEAT),
    ("testfree_select.nrt", TESTFREE_SELECT),
    ("wide_testfree8.nrt", WIDE_TESTFREE8),
    ("identity.nrt", IDENTITY),
    ("relabel_ab.nrt", RELABEL_AB),
    ("shift_prev.nrt", SHIFT_PREV),
    ("first_repeats.nra", FIRST_REPEATS),
    ("swap_labels.nft", SWAP_LABELS),
];

fn must_parse(text: &str) -> TransducerSpec {
    parse_transducer(text).expect("corpus machine parses")
}

pub fn t_rename() -> TransducerSpec {
    must_parse(T_RENAME)
}

pub fn t_rename2() -> TransducerSpec {
    must_parse(T_RENAME2)
}

pub fn t_rename3() -> TransducerSpec {
    must_parse(T_RENAME3)
}

pub fn guess_repeat() -> TransducerSpec {
    must_parse(GUESS_REPEAT)
}

pub fn testfree_select() -> TransducerSpec {
    must_parse(TESTFREE_SELECT)
}

pub fn wide_testfree8() -> TransducerSpec {
    must_parse(WIDE_TESTFREE8)
}

pub fn identity() -> TransducerSpec {
    must_parse(IDENTITY)
}

pub fn relabel_ab() -> TransducerSpec {
    must_parse(RELABEL_AB)
}

pub fn shift_prev() -> TransducerSpec {
    must_parse(SHIFT_PREV)
}

pub fn first_repeats() -> TransducerSpec {
    must_parse(FIRST_REPEATS)
}

pub fn swap_labels() -> TransducerSpec {
    must_parse(SWAP_LABELS)
}

/// All corpus machines, parsed.
pub fn all_machines() -> Vec<TransducerSpec> {
    ALL.iter().map(|&(_, text)| must_parse(text)).collect()
}
