//! Text formats for protocols, configurations, predicates, expressions,
//! runs, counter machines and containers.
//!
//! Every parser reports the line and column of the first offending token and
//! never returns a partial value. Every `write_*` function produces text that
//! its parser maps back to an equal value. Grammars are documented in the
//! README.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::container::{Container, NBox};
use crate::gre::{
    build_init_gre, build_output_gre, build_stable_gre, build_unstable_gre, Gre,
};
use crate::predicate::{Interval, IntervalPredicate, SimpleIntervalPredicate, Upper};
use crate::protocol::{Guard, Output, Protocol, StateId, Transition};
use crate::reduction::{Counter, CounterMachine, Instruction};
use crate::run::{AgentDecl, ConcreteRun, RunStep};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// What a source text is supposed to contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Protocol,
    Config,
    Predicate,
    Gre,
    Run,
    CounterMachine,
    Container,
}

impl SourceKind {
    /// Conventional file extension.
    pub fn extension(self) -> &'static str {
        match self {
            SourceKind::Protocol => "pp",
            SourceKind::Config => "cfg",
            SourceKind::Predicate => "pred",
            SourceKind::Gre => "gre",
            SourceKind::Run => "run",
            SourceKind::CounterMachine => "cm",
            SourceKind::Container => "cont",
        }
    }

    pub fn from_extension(ext: &str) -> Option<SourceKind> {
        [
            SourceKind::Protocol,
            SourceKind::Config,
            SourceKind::Predicate,
            SourceKind::Gre,
            SourceKind::Run,
            SourceKind::CounterMachine,
            SourceKind::Container,
        ]
        .into_iter()
        .find(|k| k.extension() == ext)
    }
}

/// A tagged source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceDocument {
    pub kind: SourceKind,
    pub text: String,
}

/// Parsed form of a [`SourceDocument`]. Everything except protocols and
/// counter machines is read relative to a protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Protocol(Protocol),
    Config(CanonicalConfiguration),
    Predicate(IntervalPredicate),
    Gre(Gre),
    Run(ConcreteRun),
    CounterMachine(CounterMachine),
    Container(Container),
}

impl SourceDocument {
    pub fn new(kind: SourceKind, text: impl Into<String>) -> Self {
        SourceDocument { kind, text: text.into() }
    }

    /// Parses the text; `protocol` is required for every kind but protocols
    /// and counter machines.
    pub fn parse(&self, protocol: Option<&Protocol>) -> Result<Document, ParseError> {
        let need = || {
            protocol.ok_or_else(|| ParseError {
                line: 1,
                column: 1,
                message: format!("a protocol is needed to read a .{} file", self.kind.extension()),
            })
        };
        Ok(match self.kind {
            SourceKind::Protocol => Document::Protocol(parse_protocol(&self.text)?),
            SourceKind::CounterMachine => Document::CounterMachine(parse_cm(&self.text)?),
            SourceKind::Config => Document::Config(parse_config(&self.text, need()?)?),
            SourceKind::Predicate => Document::Predicate(parse_predicate(&self.text, need()?)?),
            SourceKind::Gre => Document::Gre(parse_gre(&self.text, need()?)?),
            SourceKind::Run => Document::Run(parse_run(&self.text, need()?)?),
            SourceKind::Container => Document::Container(parse_container(&self.text, need()?)?),
        })
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Sym(&'static str),
    Newline,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(_) => f.write_str("a quoted string"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Newline => f.write_str("end of line"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '@'
}

const SYMBOLS: [&str; 14] = ["->", "!=", ",", "[", "]", "=", "*", "(", ")", ":", ".", "#", "&", "|"];

fn lex(text: &str) -> Result<(Vec<Token>, (usize, usize)), ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            out.push(Token { tok: Tok::Newline, line, col });
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if is_ident_char(c) {
            let mut s = String::new();
            while i < chars.len() && is_ident_char(chars[i]) {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start_line, col: start_col });
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(ParseError { line: start_line, column: start_col, message: "unterminated string".into() })
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                        s.push(chars[i + 1]);
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), line: start_line, col: start_col });
            continue;
        }
        if c == '!' && chars.get(i + 1) != Some(&'=') {
            out.push(Token { tok: Tok::Sym("!"), line, col });
            i += 1;
            col += 1;
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let sc: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&sc)
        });
        match sym {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), line, col });
                i += s.len();
                col += s.len();
            }
            None => return Err(ParseError { line, column: col, message: format!("unexpected character `{c}`") }),
        }
    }
    Ok((out, (line, col)))
}

// ---------------------------------------------------------------------------
// Token cursor

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    fn new(text: &str, keep_newlines: bool) -> Result<Cursor, ParseError> {
        let (mut toks, end) = lex(text)?;
        if !keep_newlines {
            toks.retain(|t| t.tok != Tok::Newline);
        }
        Ok(Cursor { toks, pos: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn error_at(&self, (line, column): (usize, usize), message: impl Into<String>) -> ParseError {
        ParseError { line, column, message: message.into() }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.here(), message)
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.to_string(),
            None => "end of input".into(),
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        self.error(format!("expected {what}, found {}", self.found()))
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{s}`")))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.expected(&format!("`{w}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, (usize, usize)), ParseError> {
        let at = self.here();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, at))
            }
            _ => Err(self.expected(what)),
        }
    }

    fn nat(&mut self) -> Result<u32, ParseError> {
        let at = self.here();
        let (s, _) = self.ident("a number")?;
        if !s.chars().all(|c| c.is_ascii_digit()) {
            return Err(self.error_at(at, format!("expected a number, found `{s}`")));
        }
        s.parse().map_err(|_| self.error_at(at, format!("number `{s}` is too large")))
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.pos += 1;
        }
    }

    fn at_line_end(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Newline))
    }

    fn end_line(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Newline) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.expected("end of line")),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            _ => Err(self.expected("end of input")),
        }
    }
}

fn state_index(p: &Protocol) -> HashMap<&str, StateId> {
    p.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

fn state_ref(c: &mut Cursor, index: &HashMap<&str, StateId>) -> Result<StateId, ParseError> {
    let (name, at) = c.ident("a state")?;
    index.get(name.as_str()).copied().ok_or_else(|| c.error_at(at, format!("unknown state `{name}`")))
}

// ---------------------------------------------------------------------------
// Protocols

pub fn parse_protocol(text: &str) -> Result<Protocol, ParseError> {
    let mut c = Cursor::new(text, true)?;
    let mut states: Option<Vec<String>> = None;
    let mut index: HashMap<String, StateId> = HashMap::new();
    let mut initial: Option<BTreeSet<StateId>> = None;
    let mut output: Vec<Option<Output>> = Vec::new();
    let mut transitions = Vec::new();
    let mut in_trans = false;
    let lookup = |c: &mut Cursor, index: &HashMap<String, StateId>| -> Result<StateId, ParseError> {
        let (name, at) = c.ident("a state")?;
        index.get(&name).copied().ok_or_else(|| c.error_at(at, format!("unknown state `{name}`")))
    };
    loop {
        c.skip_newlines();
        let at = c.here();
        let Some(tok) = c.peek().cloned() else { break };
        let word = match &tok {
            Tok::Ident(w) => w.as_str(),
            _ => "",
        };
        match word {
            "states" => {
                if states.is_some() {
                    return Err(c.error("`states` declared twice"));
                }
                c.bump();
                let mut names = Vec::new();
                while !c.at_line_end() {
                    let (name, nat) = c.ident("a state name")?;
                    if index.insert(name.clone(), names.len()).is_some() {
                        return Err(c.error_at(nat, format!("state `{name}` declared twice")));
                    }
                    names.push(name);
                }
                if names.is_empty() {
                    return Err(c.expected("a state name"));
                }
                output = vec![None; names.len()];
                states = Some(names);
            }
            "init" | "output" | "trans" if states.is_none() => {
                return Err(c.error_at(at, "`states` must come first"));
            }
            "init" => {
                if initial.is_some() {
                    return Err(c.error("`init` declared twice"));
                }
                c.bump();
                let mut set = BTreeSet::new();
                while !c.at_line_end() {
                    set.insert(lookup(&mut c, &index)?);
                }
                if set.is_empty() {
                    return Err(c.expected("an initial state"));
                }
                initial = Some(set);
            }
            "output" => {
                c.bump();
                while !c.at_line_end() {
                    let q = lookup(&mut c, &index)?;
                    c.expect_sym("=")?;
                    let b = if c.is_word("top") {
                        Output::Top
                    } else if c.is_word("bot") {
                        Output::Bot
                    } else {
                        return Err(c.expected("`top` or `bot`"));
                    };
                    c.bump();
                    output[q] = Some(b);
                }
            }
            "trans" => {
                c.bump();
                in_trans = true;
            }
            _ if in_trans => {
                let q1 = lookup(&mut c, &index)?;
                let (pre, post, guard_at);
                if c.eat_sym(",") {
                    let q2 = lookup(&mut c, &index)?;
                    c.expect_sym("->")?;
                    let q3 = lookup(&mut c, &index)?;
                    c.expect_sym(",")?;
                    let q4 = lookup(&mut c, &index)?;
                    pre = [q1, q2];
                    post = [q3, q4];
                } else if c.eat_sym("->") {
                    let to = lookup(&mut c, &index)?;
                    c.expect_word("obs")?;
                    let observed = lookup(&mut c, &index)?;
                    pre = [observed, q1];
                    post = [observed, to];
                } else {
                    return Err(c.expected("`,` or `->`"));
                }
                c.expect_sym("[")?;
                guard_at = c.here();
                let guards: &[Guard] = if c.eat_sym("=") {
                    &[Guard::Eq]
                } else if c.eat_sym("!=") {
                    &[Guard::Neq]
                } else if c.eat_sym("*") {
                    &[Guard::Eq, Guard::Neq]
                } else {
                    return Err(c.error_at(guard_at, format!("expected guard `=`, `!=` or `*`, found {}", c.found())));
                };
                c.expect_sym("]")?;
                for &g in guards {
                    transitions.push(Transition { pre, guard: g, post });
                }
            }
            _ => return Err(c.expected("`states`, `init`, `output` or `trans`")),
        }
        c.end_line()?;
    }
    let Some(states) = states else {
        return Err(c.error_at((1, 1), "missing `states` declaration"));
    };
    let Some(initial) = initial else {
        return Err(c.error_at(c.end, "missing `init` declaration"));
    };
    Ok(Protocol { states, transitions, initial, output })
}

fn guard_text(g: Guard) -> &'static str {
    match g {
        Guard::Eq => "=",
        Guard::Neq => "!=",
    }
}

/// Writes transitions in the general four-state form.
pub fn write_protocol(p: &Protocol) -> String {
    let name = |q: StateId| p.states[q].as_str();
    let mut s = format!("states {}\n", p.states.join(" "));
    let init: Vec<&str> = p.initial.iter().map(|&q| name(q)).collect();
    s += &format!("init {}\n", init.join(" "));
    let outs: Vec<String> = p
        .output
        .iter()
        .enumerate()
        .filter_map(|(q, o)| o.map(|b| format!("{}={}", name(q), if b == Output::Top { "top" } else { "bot" })))
        .collect();
    if !outs.is_empty() {
        s += &format!("output {}\n", outs.join(" "));
    }
    s += "trans\n";
    for t in &p.transitions {
        s += &format!(
            "{}, {} -> {}, {} [{}]\n",
            name(t.pre[0]),
            name(t.pre[1]),
            name(t.post[0]),
            name(t.post[1]),
            guard_text(t.guard)
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Configurations

pub fn parse_config(text: &str, p: &Protocol) -> Result<CanonicalConfiguration, ParseError> {
    let index = state_index(p);
    let mut c = Cursor::new(text, true)?;
    let mut seen = BTreeSet::new();
    let mut profiles = Vec::new();
    loop {
        c.skip_newlines();
        if c.peek().is_none() {
            break;
        }
        c.expect_word("datum")?;
        let (d, at) = c.ident("a datum name")?;
        if !seen.insert(d.clone()) {
            return Err(c.error_at(at, format!("datum `{d}` listed twice")));
        }
        c.expect_sym(":")?;
        let mut counts = vec![0u32; p.num_states()];
        let mut listed = BTreeSet::new();
        loop {
            let at = c.here();
            let q = state_ref(&mut c, &index)?;
            if !listed.insert(q) {
                return Err(c.error_at(at, format!("state `{}` listed twice for datum `{d}`", p.states[q])));
            }
            c.expect_sym("=")?;
            counts[q] = c.nat()?;
            if !c.eat_sym(",") {
                break;
            }
        }
        profiles.push(DatumProfile::from_counts(counts));
        c.end_line()?;
    }
    Ok(CanonicalConfiguration::from_profiles(p.num_states(), profiles))
}

/// Data are named `d1, d2, …` in canonical order; zero counts are omitted.
pub fn write_config(p: &Protocol, c: &CanonicalConfiguration) -> String {
    let mut s = String::new();
    for (i, prof) in c.data().enumerate() {
        let parts: Vec<String> = prof.support().map(|(q, k)| format!("{}={k}", p.states[q])).collect();
        s += &format!("datum d{}: {}\n", i + 1, parts.join(", "));
    }
    s
}

/// One-line form, `datum d1: q=1; datum d2: …`, for reports.
pub fn config_summary(p: &Protocol, c: &CanonicalConfiguration) -> String {
    write_config(p, c).lines().collect::<Vec<_>>().join("; ")
}

// ---------------------------------------------------------------------------
// Predicates

fn predicate_or(c: &mut Cursor, index: &HashMap<&str, StateId>) -> Result<IntervalPredicate, ParseError> {
    let mut left = predicate_and(c, index)?;
    while c.eat_sym("|") {
        left = left.or(predicate_and(c, index)?);
    }
    Ok(left)
}

fn predicate_and(c: &mut Cursor, index: &HashMap<&str, StateId>) -> Result<IntervalPredicate, ParseError> {
    let mut left = predicate_unary(c, index)?;
    while c.eat_sym("&") {
        left = left.and(predicate_unary(c, index)?);
    }
    Ok(left)
}

fn predicate_unary(c: &mut Cursor, index: &HashMap<&str, StateId>) -> Result<IntervalPredicate, ParseError> {
    if c.eat_sym("!") {
        return Ok(predicate_unary(c, index)?.negate());
    }
    if c.eat_sym("(") {
        let inner = predicate_or(c, index)?;
        c.expect_sym(")")?;
        return Ok(inner);
    }
    if c.is_word("true") {
        c.bump();
        return Ok(IntervalPredicate::truth());
    }
    if c.is_word("false") {
        c.bump();
        return Ok(IntervalPredicate::falsity());
    }
    if c.is_word("E") {
        return Ok(simple_predicate(c, index)?.into());
    }
    Err(c.expected("`E`, `!`, `(`, `true` or `false`"))
}

fn simple_predicate(c: &mut Cursor, index: &HashMap<&str, StateId>) -> Result<SimpleIntervalPredicate, ParseError> {
    c.expect_word("E")?;
    let mut vars: Vec<String> = Vec::new();
    while !c.is_sym(".") {
        let (v, at) = c.ident("a variable or `.`")?;
        if vars.contains(&v) {
            return Err(c.error_at(at, format!("variable `{v}` bound twice")));
        }
        vars.push(v);
    }
    c.expect_sym(".")?;
    let mut s = SimpleIntervalPredicate::new(vars.len());
    if c.is_word("true") {
        c.bump();
        return Ok(s);
    }
    let mut seen = BTreeSet::new();
    loop {
        let at = c.here();
        c.expect_sym("#")?;
        c.expect_sym("(")?;
        let q = state_ref(c, index)?;
        c.expect_sym(",")?;
        let (v, vat) = c.ident("a variable")?;
        let var = vars.iter().position(|x| *x == v).ok_or_else(|| c.error_at(vat, format!("unbound variable `{v}`")))?;
        c.expect_sym(")")?;
        if !seen.insert((q, var)) {
            return Err(c.error_at(at, format!("`#({}, {v})` constrained twice", index_name(index, q))));
        }
        c.expect_word("in")?;
        c.expect_sym("[")?;
        let lo = c.nat()?;
        c.expect_sym(",")?;
        let hi_at = c.here();
        let hi = if c.is_word("inf") {
            c.bump();
            Upper::Infinite
        } else {
            Upper::Finite(c.nat()?)
        };
        c.expect_sym("]")?;
        s.constrain(var, q, Interval::new(lo, hi)).map_err(|e| c.error_at(hi_at, e.to_string()))?;
        // `&` followed by `#` continues this conjunction; anything else ends it.
        if c.is_sym("&") && c.peek_at(1) == Some(&Tok::Sym("#")) {
            c.bump();
        } else {
            break;
        }
    }
    Ok(s)
}

fn index_name<'a>(index: &HashMap<&'a str, StateId>, q: StateId) -> &'a str {
    index.iter().find(|(_, &v)| v == q).map_or("?", |(k, _)| k)
}

pub fn parse_predicate(text: &str, p: &Protocol) -> Result<IntervalPredicate, ParseError> {
    let index = state_index(p);
    let mut c = Cursor::new(text, false)?;
    let phi = predicate_or(&mut c, &index)?;
    c.finish()?;
    Ok(phi)
}

fn interval_text(iv: Interval) -> String {
    match iv.hi {
        Upper::Finite(hi) => format!("[{}, {hi}]", iv.lo),
        Upper::Infinite => format!("[{}, inf]", iv.lo),
    }
}

/// Variables are written `x1, x2, …`. Scope states without any constraint
/// are kept as `[0, inf]` conjuncts; a width-0 predicate is written `true`.
pub fn write_simple_predicate(p: &Protocol, s: &SimpleIntervalPredicate) -> String {
    if s.width() == 0 {
        return "true".into();
    }
    let vars: Vec<String> = (1..=s.width()).map(|j| format!("x{j}")).collect();
    let mut atoms = Vec::new();
    for (j, var) in vars.iter().enumerate() {
        for (&q, &iv) in s.column(j) {
            atoms.push(format!("#({}, {var}) in {}", p.states[q], interval_text(iv)));
        }
    }
    for &q in s.scope() {
        if (0..s.width()).all(|j| !s.column(j).contains_key(&q)) {
            atoms.push(format!("#({}, x1) in [0, inf]", p.states[q]));
        }
    }
    if atoms.is_empty() {
        return format!("E {} . true", vars.join(" "));
    }
    format!("E {} . {}", vars.join(" "), atoms.join(" & "))
}

pub fn write_predicate(p: &Protocol, phi: &IntervalPredicate) -> String {
    // precedence: 0 = or, 1 = and, 2 = unary
    fn go(p: &Protocol, phi: &IntervalPredicate, ctx: u8, out: &mut String) {
        let (prec, body) = match phi {
            IntervalPredicate::Simple(s) => (2, write_simple_predicate(p, s)),
            IntervalPredicate::Not(a) => {
                let mut t = String::from("!");
                go(p, a, 2, &mut t);
                (2, t)
            }
            IntervalPredicate::And(a, b) => {
                let mut t = String::new();
                go(p, a, 1, &mut t);
                t += " & ";
                go(p, b, 2, &mut t);
                (1, t)
            }
            IntervalPredicate::Or(a, b) => {
                let mut t = String::new();
                go(p, a, 0, &mut t);
                t += " | ";
                go(p, b, 1, &mut t);
                (0, t)
            }
        };
        // A simple predicate only swallows `& #(`, so it never needs parentheses.
        if prec < ctx {
            *out += &format!("({body})");
        } else {
            *out += &body;
        }
    }
    let mut s = String::new();
    go(p, phi, 0, &mut s);
    s
}

// ---------------------------------------------------------------------------
// Expressions

fn gre_expr(c: &mut Cursor, p: &Protocol) -> Result<Gre, ParseError> {
    let at = c.here();
    let (word, _) = c.ident("an expression")?;
    let arg = |c: &mut Cursor| -> Result<Gre, ParseError> {
        c.expect_sym("(")?;
        let e = gre_expr(c, p)?;
        c.expect_sym(")")?;
        Ok(e)
    };
    let consensus = |c: &mut Cursor| -> Result<Output, ParseError> {
        c.expect_sym("(")?;
        let b = if c.is_word("top") {
            Output::Top
        } else if c.is_word("bot") {
            Output::Bot
        } else {
            return Err(c.expected("`top` or `bot`"));
        };
        c.bump();
        c.expect_sym(")")?;
        Ok(b)
    };
    Ok(match word.as_str() {
        "pred" => {
            let tok = c.bump();
            let Some(Token { tok: Tok::Str(src), line, col }) = tok else {
                c.pos -= 1;
                return Err(c.expected("a quoted predicate"));
            };
            let phi = parse_predicate(&src, p).map_err(|e| ParseError {
                line: line + e.line - 1,
                column: if e.line == 1 { col + e.column } else { e.column },
                message: e.message,
            })?;
            Gre::atom(phi)
        }
        "union" | "inter" => {
            c.expect_sym("(")?;
            let a = gre_expr(c, p)?;
            c.expect_sym(",")?;
            let b = gre_expr(c, p)?;
            c.expect_sym(")")?;
            if word == "union" {
                a.union(b)
            } else {
                a.intersect(b)
            }
        }
        "compl" => arg(c)?.complement(),
        "post" | "pre" => {
            c.expect_sym("*")?;
            let e = arg(c)?;
            if word == "post" {
                e.post_star()
            } else {
                e.pre_star()
            }
        }
        "init" => build_init_gre(p, false),
        "output" => build_output_gre(p, consensus(c)?),
        "stable" => build_stable_gre(p, consensus(c)?),
        "unstable" => build_unstable_gre(p, consensus(c)?),
        _ => {
            return Err(c.error_at(
                at,
                format!("unknown expression `{word}`; expected pred, union, inter, compl, post*, pre*, init, output, stable or unstable"),
            ))
        }
    })
}

/// `init`, `output(b)`, `stable(b)`, `unstable(b)` and `inter(a, b)` are
/// shorthands; they expand to core operators, so writing the result back
/// gives the expanded form.
pub fn parse_gre(text: &str, p: &Protocol) -> Result<Gre, ParseError> {
    let mut c = Cursor::new(text, false)?;
    let e = gre_expr(&mut c, p)?;
    c.finish()?;
    Ok(e)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn write_gre(p: &Protocol, e: &Gre) -> String {
    match e {
        Gre::Atom(phi) => format!("pred {}", quote(&write_predicate(p, phi))),
        Gre::Union(a, b) => format!("union({}, {})", write_gre(p, a), write_gre(p, b)),
        Gre::Complement(a) => format!("compl({})", write_gre(p, a)),
        Gre::PostStar(a) => format!("post*({})", write_gre(p, a)),
        Gre::PreStar(a) => format!("pre*({})", write_gre(p, a)),
    }
}

// ---------------------------------------------------------------------------
// Runs

pub fn parse_run(text: &str, p: &Protocol) -> Result<ConcreteRun, ParseError> {
    let index = state_index(p);
    let mut c = Cursor::new(text, true)?;
    let mut r = ConcreteRun::default();
    let mut names: HashMap<String, usize> = HashMap::new();
    loop {
        c.skip_newlines();
        if c.peek().is_none() {
            break;
        }
        if c.is_word("agent") {
            if !r.steps.is_empty() {
                return Err(c.error("agents must be declared before the first step"));
            }
            c.bump();
            let (name, at) = c.ident("an agent name")?;
            if names.insert(name.clone(), r.agents.len()).is_some() {
                return Err(c.error_at(at, format!("agent `{name}` declared twice")));
            }
            c.expect_word("datum")?;
            let (datum, _) = c.ident("a datum name")?;
            c.expect_word("at")?;
            let start = state_ref(&mut c, &index)?;
            r.agents.push(AgentDecl { name, datum, start });
        } else if c.is_word("step") {
            c.bump();
            let agent = |c: &mut Cursor| -> Result<usize, ParseError> {
                let (name, at) = c.ident("an agent name")?;
                names.get(&name).copied().ok_or_else(|| c.error_at(at, format!("unknown agent `{name}`")))
            };
            let actor = agent(&mut c)?;
            c.expect_word("obs")?;
            let observed = agent(&mut c)?;
            c.expect_word("via")?;
            let at = c.here();
            let transition = c.nat()? as usize;
            if transition >= p.transitions.len() {
                return Err(c.error_at(
                    at,
                    format!("transition index {transition} out of range; the protocol has {}", p.transitions.len()),
                ));
            }
            r.steps.push(RunStep { transition, actor, observed });
        } else {
            return Err(c.expected("`agent` or `step`"));
        }
        c.end_line()?;
    }
    Ok(r)
}

pub fn write_run(p: &Protocol, r: &ConcreteRun) -> String {
    let mut s = String::new();
    for a in &r.agents {
        s += &format!("agent {} datum {} at {}\n", a.name, a.datum, p.states[a.start]);
    }
    for st in &r.steps {
        s += &format!("step {} obs {} via {}\n", r.agents[st.actor].name, r.agents[st.observed].name, st.transition);
    }
    s
}

// ---------------------------------------------------------------------------
// Counter machines

pub fn parse_cm(text: &str) -> Result<CounterMachine, ParseError> {
    let mut c = Cursor::new(text, true)?;
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<(usize, String, (usize, usize))> = Vec::new();
    let mut instructions = Vec::new();
    loop {
        c.skip_newlines();
        if c.peek().is_none() {
            break;
        }
        if matches!(c.peek(), Some(Tok::Ident(_))) && c.peek_at(1) == Some(&Tok::Sym(":")) {
            let (label, at) = c.ident("a label")?;
            c.bump();
            if labels.insert(label.clone(), instructions.len() + 1).is_some() {
                return Err(c.error_at(at, format!("label `{label}` defined twice")));
            }
            c.skip_newlines();
        }
        let counter = |c: &mut Cursor| -> Result<Counter, ParseError> {
            let at = c.here();
            let (name, _) = c.ident("counter `x` or `y`")?;
            match name.as_str() {
                "x" => Ok(Counter::X),
                "y" => Ok(Counter::Y),
                _ => Err(c.error_at(at, format!("expected counter `x` or `y`, found `{name}`"))),
            }
        };
        let at = c.here();
        let (op, _) = c.ident("an instruction")?;
        let ins = match op.as_str() {
            "inc" => Instruction::Inc(counter(&mut c)?),
            "dec" => Instruction::Dec(counter(&mut c)?),
            "halt" => Instruction::Halt,
            "jz" => {
                let ctr = counter(&mut c)?;
                let (target, tat) = c.ident("a jump target")?;
                pending.push((instructions.len(), target, tat));
                Instruction::ZeroTest(ctr, 0)
            }
            _ => return Err(c.error_at(at, format!("unknown instruction `{op}`; expected inc, dec, jz or halt"))),
        };
        instructions.push(ins);
        c.end_line()?;
    }
    if instructions.is_empty() {
        return Err(c.error_at(c.end, "machine has no instructions"));
    }
    let len = instructions.len();
    for (at_ins, target, (line, column)) in pending {
        let k = match labels.get(&target) {
            Some(&k) if k <= len => k,
            Some(_) => return Err(ParseError { line, column, message: format!("label `{target}` marks no instruction") }),
            None if target.chars().all(|ch| ch.is_ascii_digit()) => match target.parse::<usize>() {
                Ok(k) if (1..=len).contains(&k) => k,
                _ => {
                    return Err(ParseError {
                        line,
                        column,
                        message: format!("jump target {target} outside 1..={len}"),
                    })
                }
            },
            None => return Err(ParseError { line, column, message: format!("unknown label `{target}`") }),
        };
        if let Instruction::ZeroTest(ctr, _) = instructions[at_ins] {
            instructions[at_ins] = Instruction::ZeroTest(ctr, k);
        }
    }
    CounterMachine::new(instructions).map_err(|e| ParseError { line: 1, column: 1, message: e.to_string() })
}

/// Jump targets get labels `L<k>`, `k` the 1-based instruction number.
pub fn write_cm(m: &CounterMachine) -> String {
    let targets: BTreeSet<usize> = m
        .instructions
        .iter()
        .filter_map(|i| match i {
            Instruction::ZeroTest(_, k) => Some(*k),
            _ => None,
        })
        .collect();
    let ctr = |c: Counter| if c == Counter::X { "x" } else { "y" };
    let mut s = String::new();
    for (i, ins) in m.instructions.iter().enumerate() {
        if targets.contains(&(i + 1)) {
            s += &format!("L{}: ", i + 1);
        }
        s += &match ins {
            Instruction::Inc(c) => format!("inc {}", ctr(*c)),
            Instruction::Dec(c) => format!("dec {}", ctr(*c)),
            Instruction::ZeroTest(c, k) => format!("jz {} L{k}", ctr(*c)),
            Instruction::Halt => "halt".into(),
        };
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// Containers

pub fn parse_container(text: &str, p: &Protocol) -> Result<Container, ParseError> {
    let index = state_index(p);
    let mut c = Cursor::new(text, true)?;
    c.skip_newlines();
    c.expect_word("container")?;
    let header = |c: &mut Cursor, key: &str| -> Result<u32, ParseError> {
        c.expect_word(key)?;
        c.expect_sym("=")?;
        c.nat()
    };
    let n = header(&mut c, "n")?;
    let m = header(&mut c, "M")?;
    let mut cont = Container::new(p.num_states(), n, m).map_err(|e| c.error(e.to_string()))?;
    c.end_line()?;
    let mut seen = BTreeMap::new();
    loop {
        c.skip_newlines();
        if c.peek().is_none() {
            break;
        }
        let at = c.here();
        c.expect_word("box")?;
        let mut values = vec![0u32; p.num_states()];
        let mut listed = BTreeSet::new();
        if !c.is_sym(":") {
            loop {
                let qat = c.here();
                let q = state_ref(&mut c, &index)?;
                if !listed.insert(q) {
                    return Err(c.error_at(qat, format!("state `{}` listed twice in a box", p.states[q])));
                }
                c.expect_sym("=")?;
                values[q] = c.nat()?;
                if !c.eat_sym(",") {
                    break;
                }
            }
        }
        c.expect_sym(":")?;
        let count_at = c.here();
        let count = c.nat()?;
        let b = NBox::new(n, values).map_err(|e| c.error_at(at, e.to_string()))?;
        if seen.insert(b.clone(), ()).is_some() {
            return Err(c.error_at(at, "box listed twice"));
        }
        cont.set(b, count).map_err(|e| c.error_at(count_at, e.to_string()))?;
        c.end_line()?;
    }
    Ok(cont)
}

/// Boxes in canonical order, zero values omitted.
pub fn write_container(p: &Protocol, cont: &Container) -> String {
    let mut s = format!("container n={} M={}\n", cont.n(), cont.m());
    for (b, k) in cont.counts() {
        let parts: Vec<String> = b
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(q, v)| format!("{}={v}", p.states[q]))
            .collect();
        if parts.is_empty() {
            s += &format!("box : {k}\n");
        } else {
            s += &format!("box {} : {k}\n", parts.join(", "));
        }
    }
    s
}
