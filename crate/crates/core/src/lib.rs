//! Register transducers over data words.
//!
//! A data word is an infinite sequence of letters, each a finite label paired
//! with a datum drawn from an infinite domain that supports only equality.
//! Nondeterministic register transducers (NRT) read such words and emit such
//! words, storing data in registers and testing the current datum against them.
//! This crate provides:
//!
//! * the machine model and its small-step semantics ([`model`]),
//! * syntactic normalizations: explicit tests, reassignment removal,
//!   trimming ([`normalize`]),
//! * restriction of a machine to a finite data set, which reduces questions
//!   about infinite-domain machines to finite Büchi transducers ([`restrict`]),
//! * Büchi emptiness, products, and coaccessibility ([`omega`]),
//! * a weighted graph engine deciding output-mismatch reachability ([`parikh`]),
//! * decision procedures: functionality, equivalence on the common domain,
//!   continuity/computability, with polynomial-time paths for test-free
//!   machines ([`decide`]),
//! * composition of transducers ([`compose`]),
//! * a streaming evaluator that emits the longest output prefix implied by the
//!   input consumed so far ([`evaluate`]),
//! * a textual format for machines, lasso words, and verdicts ([`format`]).
//!
//! Decisions about a machine `t` are driven by a finite data set: verdicts on
//! the infinite domain coincide with verdicts on a restriction to
//! `2·|registers| + 3` distinct data values (including the distinguished
//! initial datum `0`), so every search below is over a finite graph and every
//! negative verdict carries a finite, replayable witness.

pub mod compose;
pub mod corpus;
pub mod decide;
pub mod evaluate;
pub mod format;
pub mod model;
pub mod normalize;
pub mod omega;
pub mod parikh;
pub mod restrict;

#[doc(hidden)]
pub mod testkit;

mod error;

pub use error::{Error, Result};
pub use model::{
    Alphabets, Assignment, Configuration, DataValue, LassoWord, Letter, MachineKind, OutLetter,
    RegisterValuation, TestFormula, TransducerSpec, Transition,
};
