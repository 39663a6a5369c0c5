//! Textual formats: machine definition files, lasso words, and the verdict
//! JSON emitted by the command-line tools.
//!
//! Machine files:
//!
//! ```text
//! nrt T_rename {
//!   registers: r1 r2 r3;
//!   input: del ch #;
//!   output: a $;
//!   initial: q0;
//!   accepting: q3;
//!   trans q0 -> q0 : on del, test true, store {r1}, out [];
//! }
//! ```
//!
//! The header keyword picks the machine kind (`nrt`, `nra`, `nft`). States
//! are implicit: they are collected in order of first mention (initial state,
//! accepting list, then transition endpoints). Tests are boolean formulas
//! over `= r` / `!= r` atoms with `!`, `&`, `|` and parentheses. Store
//! entries are plain registers (store the current datum) or reassignments
//! `r := curr` / `r := s`. Output items are `label:register` for register
//! machines or bare labels for `nft`; `*` as an input label matches every
//! label, and `*` as an output label repeats the matched input label.
//! Comments run from `//` to end of line.
//!
//! Lasso words: `item* "(" item+ ")w"` with `item := label ":" natural`, for
//! example `del:1 ch:2 #:0 (a:1)w`. Output lassos of `nft` machines use bare
//! labels.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{
    Alphabets, Assignment, LabelPattern, LassoWord, Letter, MachineKind, OutLabel, OutLetter,
    OutputItem, TestFormula, TransducerSpec, Transition,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Semi,
    Colon,
    Comma,
    Arrow,
    Assign,
    Eq,
    Neq,
    Amp,
    Pipe,
    Bang,
    Star,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c, '_' | '#' | '$' | '@' | '\'')
}

fn ident_continue(c: char) -> bool {
    ident_start(c) || c.is_ascii_digit() || c == '.'
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, chars: src.char_indices().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        next
    }

    fn error(&self, line: usize, col: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line, col, msg: msg.into() }
    }

    /// Tokens with their source positions.
    fn tokenize(mut self) -> Result<Vec<(Tok, usize, usize)>> {
        let mut out = Vec::new();
        loop {
            // skip whitespace and comments
            loop {
                match self.chars.peek() {
                    Some(&(_, c)) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some(&(i, '/')) if self.src[i..].starts_with("//") => {
                        while let Some(&(_, c)) = self.chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    _ => break,
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(&(start, c)) = self.chars.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = if c.is_ascii_digit() {
                let mut end = start;
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_ascii_digit() {
                        end = i + c.len_utf8();
                        self.bump();
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..end];
                let n = text
                    .parse::<u64>()
                    .map_err(|_| self.error(line, col, format!("number `{text}` out of range")))?;
                Tok::Num(n)
            } else if ident_start(c) {
                let mut end = start;
                while let Some(&(i, c)) = self.chars.peek() {
                    if ident_continue(c) {
                        end = i + c.len_utf8();
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(self.src[start..end].to_string())
            } else {
                self.bump();
                match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '*' => Tok::Star,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '=' => Tok::Eq,
                    ':' => {
                        if matches!(self.chars.peek(), Some(&(_, '='))) {
                            self.bump();
                            Tok::Assign
                        } else {
                            Tok::Colon
                        }
                    }
                    '!' => {
                        if matches!(self.chars.peek(), Some(&(_, '='))) {
                            self.bump();
                            Tok::Neq
                        } else {
                            Tok::Bang
                        }
                    }
                    '-' => {
                        if matches!(self.chars.peek(), Some(&(_, '>'))) {
                            self.bump();
                            Tok::Arrow
                        } else {
                            return Err(self.error(line, col, "expected `->`"));
                        }
                    }
                    other => {
                        return Err(self.error(line, col, format!("unexpected character `{other}`")))
                    }
                }
            };
            out.push((tok, line, col));
        }
    }
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser { toks: Lexer::new(text).tokenize()?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn error_here(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Parse { line, col, msg: msg.into() }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<()> {
        if self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.next() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.error_here(format!("expected identifier, found {}", other.describe())))
            }
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => Err(self.error_here(format!("expected `{kw}`, found {}", other.describe()))),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    /// Identifiers up to `;`, commas optional.
    fn ident_list(&mut self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) => {
                    out.push(self.expect_ident()?);
                    self.eat(&Tok::Comma);
                }
                Tok::Semi => {
                    self.next();
                    return Ok(out);
                }
                other => {
                    return Err(self.error_here(format!(
                        "expected identifier or `;`, found {}",
                        other.describe()
                    )))
                }
            }
        }
    }
}

struct MachineParser {
    p: Parser,
    kind: MachineKind,
    name: String,
    states: Vec<String>,
    registers: Vec<String>,
    input: Vec<String>,
    output: Vec<String>,
}

impl MachineParser {
    fn state_id(&mut self, name: String) -> usize {
        if let Some(i) = self.states.iter().position(|s| *s == name) {
            i
        } else {
            self.states.push(name);
            self.states.len() - 1
        }
    }

    fn register_id(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| self.p.error_here(format!("unknown register `{name}`")))
    }

    fn test(&mut self) -> Result<TestFormula> {
        let mut f = self.test_and()?;
        while self.p.eat(&Tok::Pipe) {
            let rhs = self.test_and()?;
            f = TestFormula::Or(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn test_and(&mut self) -> Result<TestFormula> {
        let mut f = self.test_unary()?;
        while self.p.eat(&Tok::Amp) {
            let rhs = self.test_unary()?;
            f = TestFormula::And(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn test_unary(&mut self) -> Result<TestFormula> {
        match self.p.peek().clone() {
            Tok::Bang => {
                self.p.next();
                Ok(TestFormula::Not(Box::new(self.test_unary()?)))
            }
            Tok::Eq => {
                self.p.next();
                let r = self.p.expect_ident()?;
                Ok(TestFormula::Eq(self.register_id(&r)?))
            }
            Tok::Neq => {
                self.p.next();
                let r = self.p.expect_ident()?;
                Ok(TestFormula::Neq(self.register_id(&r)?))
            }
            Tok::LParen => {
                self.p.next();
                let f = self.test()?;
                self.p.expect(&Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.p.next();
                Ok(TestFormula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.p.next();
                Ok(TestFormula::False)
            }
            other => Err(self.p.error_here(format!("expected test, found {}", other.describe()))),
        }
    }

    fn store(&mut self) -> Result<Assignment> {
        self.p.expect(&Tok::LBrace)?;
        let mut asgn = Assignment::default();
        loop {
            match self.p.peek().clone() {
                Tok::RBrace => {
                    self.p.next();
                    return Ok(asgn);
                }
                Tok::Ident(_) => {
                    let dst = self.p.expect_ident()?;
                    let dst = self.register_id(&dst)?;
                    if self.p.eat(&Tok::Assign) {
                        match self.p.peek().clone() {
                            Tok::Ident(s) if s == "curr" => {
                                self.p.next();
                                asgn.store_current.insert(dst);
                            }
                            Tok::Ident(_) => {
                                let src = self.p.expect_ident()?;
                                let src = self.register_id(&src)?;
                                asgn.copies.push((dst, src));
                            }
                            other => {
                                return Err(self.p.error_here(format!(
                                    "expected `curr` or register, found {}",
                                    other.describe()
                                )))
                            }
                        }
                    } else {
                        asgn.store_current.insert(dst);
                    }
                    self.p.eat(&Tok::Comma);
                }
                other => {
                    return Err(self.p.error_here(format!(
                        "expected register or `}}`, found {}",
                        other.describe()
                    )))
                }
            }
        }
    }

    fn out_items(&mut self) -> Result<Vec<OutputItem>> {
        self.p.expect(&Tok::LBrack)?;
        let mut items = Vec::new();
        loop {
            let label = match self.p.peek().clone() {
                Tok::RBrack => {
                    self.p.next();
                    return Ok(items);
                }
                Tok::Star => {
                    self.p.next();
                    OutLabel::Same
                }
                Tok::Ident(_) => {
                    let name = self.p.expect_ident()?;
                    let id = self.output.iter().position(|l| *l == name).ok_or_else(|| {
                        self.p.error_here(format!("unknown output label `{name}`"))
                    })?;
                    OutLabel::Fixed(id)
                }
                other => {
                    return Err(self.p.error_here(format!(
                        "expected output item or `]`, found {}",
                        other.describe()
                    )))
                }
            };
            let register = if self.p.eat(&Tok::Colon) {
                let name = self.p.expect_ident()?;
                Some(self.register_id(&name)?)
            } else {
                None
            };
            items.push(OutputItem { label, register });
            self.p.eat(&Tok::Comma);
        }
    }

    fn transition(&mut self) -> Result<Transition> {
        self.p.expect_keyword("trans")?;
        let source = self.p.expect_ident()?;
        let source = self.state_id(source);
        self.p.expect(&Tok::Arrow)?;
        let target = self.p.expect_ident()?;
        let target = self.state_id(target);
        self.p.expect(&Tok::Colon)?;
        self.p.expect_keyword("on")?;
        let label = match self.p.peek().clone() {
            Tok::Star => {
                self.p.next();
                LabelPattern::Any
            }
            Tok::Ident(_) => {
                let name = self.p.expect_ident()?;
                let id = self
                    .input
                    .iter()
                    .position(|l| *l == name)
                    .ok_or_else(|| self.p.error_here(format!("unknown input label `{name}`")))?;
                LabelPattern::One(id)
            }
            other => {
                return Err(self
                    .p
                    .error_here(format!("expected input label or `*`, found {}", other.describe())))
            }
        };
        self.p.expect(&Tok::Comma)?;
        self.p.expect_keyword("test")?;
        let test = self.test()?;
        self.p.expect(&Tok::Comma)?;
        self.p.expect_keyword("store")?;
        let assign = self.store()?;
        self.p.expect(&Tok::Comma)?;
        self.p.expect_keyword("out")?;
        let output = self.out_items()?;
        self.p.expect(&Tok::Semi)?;
        Ok(Transition { source, label, test, assign, output, target })
    }
}

/// Parse a machine definition and validate it.
pub fn parse_transducer(text: &str) -> Result<TransducerSpec> {
    let mut p = Parser::new(text)?;
    let kind = match p.peek().clone() {
        Tok::Ident(s) if s == "nrt" => MachineKind::Nrt,
        Tok::Ident(s) if s == "nra" => MachineKind::Nra,
        Tok::Ident(s) if s == "nft" => MachineKind::Nft,
        other => {
            return Err(p.error_here(format!(
                "expected `nrt`, `nra` or `nft`, found {}",
                other.describe()
            )))
        }
    };
    p.next();
    let name = p.expect_ident()?;
    p.expect(&Tok::LBrace)?;
    p.expect_keyword("registers")?;
    p.expect(&Tok::Colon)?;
    let registers = p.ident_list()?;
    p.expect_keyword("input")?;
    p.expect(&Tok::Colon)?;
    let input = p.ident_list()?;
    p.expect_keyword("output")?;
    p.expect(&Tok::Colon)?;
    let output = p.ident_list()?;
    p.expect_keyword("initial")?;
    p.expect(&Tok::Colon)?;
    let initial_name = p.expect_ident()?;
    p.expect(&Tok::Semi)?;
    p.expect_keyword("accepting")?;
    p.expect(&Tok::Colon)?;
    let accepting_names = p.ident_list()?;

    let mut mp = MachineParser {
        p,
        kind,
        name,
        states: Vec::new(),
        registers,
        input,
        output,
    };
    let initial = mp.state_id(initial_name);
    let accepting: BTreeSet<usize> =
        accepting_names.into_iter().map(|n| mp.state_id(n)).collect();
    let mut transitions = Vec::new();
    while !mp.p.eat(&Tok::RBrace) {
        transitions.push(mp.transition()?);
    }
    if mp.p.peek() != &Tok::Eof {
        return Err(mp.p.error_here(format!(
            "expected end of input, found {}",
            mp.p.peek().describe()
        )));
    }
    let spec = TransducerSpec {
        kind: mp.kind,
        name: mp.name,
        states: mp.states,
        registers: mp.registers,
        alphabets: Alphabets { input: mp.input, output: mp.output },
        initial,
        accepting,
        transitions,
    };
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Printer

fn print_test(t: &TestFormula, registers: &[String], out: &mut String, parent_prec: u8) {
    let prec = match t {
        TestFormula::Or(..) => 1,
        TestFormula::And(..) | TestFormula::Explicit(_) => 2,
        TestFormula::Not(..) => 3,
        _ => 4,
    };
    let need_parens = prec < parent_prec;
    if need_parens {
        out.push('(');
    }
    match t {
        TestFormula::True => out.push_str("true"),
        TestFormula::False => out.push_str("false"),
        TestFormula::Eq(r) => {
            let _ = write!(out, "= {}", registers[*r]);
        }
        TestFormula::Neq(r) => {
            let _ = write!(out, "!= {}", registers[*r]);
        }
        TestFormula::And(a, b) => {
            print_test(a, registers, out, 2);
            out.push_str(" & ");
            print_test(b, registers, out, 2);
        }
        TestFormula::Or(a, b) => {
            print_test(a, registers, out, 1);
            out.push_str(" | ");
            print_test(b, registers, out, 1);
        }
        TestFormula::Not(a) => {
            out.push('!');
            print_test(a, registers, out, 3);
        }
        TestFormula::Explicit(e) => {
            if registers.is_empty() {
                out.push_str("true");
            } else {
                for (i, r) in registers.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" & ");
                    }
                    let _ = write!(out, "{}{}", if e.contains(&i) { "= " } else { "!= " }, r);
                }
            }
        }
    }
    if need_parens {
        out.push(')');
    }
}

/// Canonical text of a machine. Parsing it back yields the same machine when
/// states are numbered in order of first mention (initial state first); a
/// state mentioned by no transition and neither initial nor accepting would
/// be dropped.
pub fn print_transducer(t: &TransducerSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {{", t.kind.keyword(), t.name);
    let _ = writeln!(s, "  registers: {};", join(&t.registers));
    let _ = writeln!(s, "  input: {};", join(&t.alphabets.input));
    let _ = writeln!(s, "  output: {};", join(&t.alphabets.output));
    let _ = writeln!(s, "  initial: {};", t.states[t.initial]);
    let accepting: Vec<String> =
        t.accepting.iter().map(|&q| t.states[q].clone()).collect();
    let _ = writeln!(s, "  accepting: {};", accepting.join(" "));
    for tr in &t.transitions {
        let label = match tr.label {
            LabelPattern::Any => "*".to_string(),
            LabelPattern::One(l) => t.alphabets.input[l].clone(),
        };
        let mut test = String::new();
        print_test(&tr.test, &t.registers, &mut test, 0);
        let store = if tr.assign.is_plain() {
            let names: Vec<&str> =
                tr.assign.store_current.iter().map(|&r| t.registers[r].as_str()).collect();
            names.join(" ")
        } else {
            let mut entries: Vec<String> = tr
                .assign
                .store_current
                .iter()
                .map(|&r| format!("{} := curr", t.registers[r]))
                .collect();
            entries.extend(
                tr.assign
                    .copies
                    .iter()
                    .map(|&(d, src)| format!("{} := {}", t.registers[d], t.registers[src])),
            );
            entries.join(" ")
        };
        let items: Vec<String> = tr
            .output
            .iter()
            .map(|item| {
                let label = match &item.label {
                    OutLabel::Same => "*".to_string(),
                    OutLabel::Fixed(l) => t.alphabets.output[*l].clone(),
                };
                match item.register {
                    Some(r) => format!("{label}:{}", t.registers[r]),
                    None => label,
                }
            })
            .collect();
        let _ = writeln!(
            s,
            "  trans {} -> {} : on {}, test {}, store {{{}}}, out [{}];",
            t.states[tr.source],
            t.states[tr.target],
            label,
            test,
            store,
            items.join(" ")
        );
    }
    s.push_str("}\n");
    s
}

fn join(items: &[String]) -> String {
    items.join(" ")
}

// ---------------------------------------------------------------------------
// Lassos

/// Parse an input lasso `item* "(" item+ ")w"`; every item is
/// `label ":" natural`.
pub fn parse_lasso(text: &str) -> Result<LassoWord> {
    let (prefix, period) = lasso_items(text, true)?;
    let conv = |items: Vec<(String, Option<u64>)>| -> Vec<Letter> {
        items
            .into_iter()
            .map(|(label, d)| Letter { label, datum: crate::model::DataValue(d.unwrap()) })
            .collect()
    };
    LassoWord::new(conv(prefix), conv(period))
}

/// Parse an output lasso; items may omit the datum (`nft` outputs).
pub fn parse_output_lasso(text: &str) -> Result<LassoWord<OutLetter>> {
    let (prefix, period) = lasso_items(text, false)?;
    let conv = |items: Vec<(String, Option<u64>)>| -> Vec<OutLetter> {
        items
            .into_iter()
            .map(|(label, d)| OutLetter { label, datum: d.map(crate::model::DataValue) })
            .collect()
    };
    LassoWord::new(conv(prefix), conv(period))
}

type Items = Vec<(String, Option<u64>)>;

fn lasso_items(text: &str, datum_required: bool) -> Result<(Items, Items)> {
    let mut p = Parser::new(text)?;
    let item = |p: &mut Parser| -> Result<(String, Option<u64>)> {
        let label = p.expect_ident()?;
        let datum = if p.eat(&Tok::Colon) {
            match p.next() {
                Tok::Num(n) => Some(n),
                other => {
                    p.pos -= 1;
                    return Err(
                        p.error_here(format!("expected datum, found {}", other.describe()))
                    );
                }
            }
        } else if datum_required {
            return Err(p.error_here("expected `:` and a datum"));
        } else {
            None
        };
        Ok((label, datum))
    };
    let mut prefix = Vec::new();
    while matches!(p.peek(), Tok::Ident(_)) {
        prefix.push(item(&mut p)?);
    }
    p.expect(&Tok::LParen)?;
    let mut period = Vec::new();
    while matches!(p.peek(), Tok::Ident(_)) {
        period.push(item(&mut p)?);
    }
    if period.is_empty() {
        return Err(p.error_here("lasso period must be nonempty"));
    }
    p.expect(&Tok::RParen)?;
    p.expect_keyword("w")?;
    if p.peek() != &Tok::Eof {
        return Err(p.error_here(format!("expected end of input, found {}", p.peek().describe())));
    }
    Ok((prefix, period))
}

/// Finite word segment as space-separated items (the lasso item grammar
/// without the periodic part).
pub fn segment_to_string<L: std::fmt::Display>(seg: &[L]) -> String {
    seg.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Verdicts

/// Stable machine-readable result of a decision procedure.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Verdict {
    /// Schema version.
    pub v: u32,
    pub answer: bool,
    /// Which procedure produced the verdict (e.g. `functional`,
    /// `functional-testfree`, `continuous`).
    pub procedure: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub stats: Stats,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct Stats {
    pub expanded_states: u64,
    pub millis: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum Witness {
    /// An input lasso related to several distinct outputs (functionality /
    /// equivalence counterexamples).
    Outputs { input: String, outputs: Vec<String> },
    /// A continuity counterexample: the input family `u·v^n·w·z^ω` converges
    /// to `u·v^ω` while the outputs keep a bounded common prefix.
    Pattern { pattern: PatternWitness },
}

/// Segments of a continuity counterexample. `out_u1`/`out_v1` belong to the
/// run over `u·v^ω`, `out_u2`/`out_v2`/`out_z2` to the runs over
/// `u·v^n·w·z^ω`; `out_z2` is the output lasso over the `w·z^ω` tail.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PatternWitness {
    pub u: String,
    pub v: String,
    pub w: String,
    pub z: String,
    pub out_u1: String,
    pub out_u2: String,
    pub out_v1: String,
    pub out_v2: String,
    pub out_z2: String,
}

impl Verdict {
    pub fn new(answer: bool, procedure: impl Into<String>) -> Self {
        Verdict {
            v: 1,
            answer,
            procedure: procedure.into(),
            witness: None,
            stats: Stats::default(),
        }
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Definition(format!("bad verdict JSON: {e}")))
    }
}

#[cfg(test)]
mod tests;
