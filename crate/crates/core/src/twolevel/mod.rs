//! Two-level morphological rules.
//!
//! A rule file declares an alphabet of feasible lexical:surface pairs, named
//! symbol sets, and declarative rules that constrain where a given pair may
//! or must occur. Rules act as parallel constraints: a pair string is
//! accepted iff every compiled rule accepts it, so rule order never matters.
//!
//! Rule operators:
//!
//! * `=>`  — context requirement: the pair occurs only in the given context.
//! * `<=`  — surface coercion: in the context, the lexical symbol must
//!   surface as stated.
//! * `<=>` — both of the above.
//! * `/<=` — exclusion: the pair never occurs in the context.
//!
//! Context items are explicit pairs (`x:y`, auto-added to the alphabet),
//! bare symbols (`x`, the identity pair, whose character must already be
//! known to the alphabet), or declared set names. A set name matches every
//! feasible pair whose lexical symbol belongs to the set. Items take an
//! optional postfix `*` or `+`, or may be wrapped in `(...)` for an
//! optional item.

mod automata;

pub use automata::PairRecognizer;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Maximum run of NULL-padded pairs on one side during alignment search.
pub const MAX_NULL_RUN: usize = 3;

/// A lexical or surface symbol. `Null` is written `0` in rule files and is
/// distinct from every alphabet character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Null,
    Ch(char),
}

impl Sym {
    pub fn from_char(c: char) -> Sym {
        if c == '0' {
            Sym::Null
        } else {
            Sym::Ch(c)
        }
    }

    pub fn is_null(self) -> bool {
        self == Sym::Null
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Null => write!(f, "0"),
            Sym::Ch(c) => write!(f, "{c}"),
        }
    }
}

/// One lexical:surface correspondence unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairSymbol {
    pub lexical: Sym,
    pub surface: Sym,
}

impl PairSymbol {
    pub fn new(lexical: Sym, surface: Sym) -> PairSymbol {
        PairSymbol { lexical, surface }
    }

    pub fn identity(c: char) -> PairSymbol {
        PairSymbol {
            lexical: Sym::Ch(c),
            surface: Sym::Ch(c),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.lexical == self.surface
    }
}

impl fmt::Display for PairSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            write!(f, "{}", self.lexical)
        } else {
            write!(f, "{}:{}", self.lexical, self.surface)
        }
    }
}

/// Repetition marker on a context item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    One,
    ZeroOrMore,
    OneOrMore,
    Optional,
}

/// An unresolved context item: an explicit pair or a named set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemSpec {
    Pair(PairSymbol),
    Set(String),
}

/// One item of a context pattern with its repetition marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextItem {
    pub spec: ItemSpec,
    pub rep: Rep,
}

/// A sequence of pair-set items; the empty sequence matches the empty string.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextPattern {
    pub items: Vec<ContextItem>,
}

/// Rule operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleOp {
    /// `=>` — pair only in context.
    ContextRequirement,
    /// `<=` — in context, the lexical side must surface as stated.
    SurfaceCoercion,
    /// `<=>` — both directions.
    DoubleArrow,
    /// `/<=` — pair forbidden in context.
    Exclusion,
}

impl fmt::Display for RuleOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleOp::ContextRequirement => "=>",
            RuleOp::SurfaceCoercion => "<=",
            RuleOp::DoubleArrow => "<=>",
            RuleOp::Exclusion => "/<=",
        };
        f.write_str(s)
    }
}

/// A single declarative two-level rule.
#[derive(Debug, Clone)]
pub struct TwoLevelRule {
    pub name: String,
    pub pair: PairSymbol,
    pub op: RuleOp,
    pub left: ContextPattern,
    pub right: ContextPattern,
    /// Applied (and its pair licensed) only when variant analysis is enabled.
    pub variant_only: bool,
}

/// Error position in a rule or lexicon file, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum TwoLevelError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: undefined set `{name}`")]
    UndefinedSet { pos: Pos, name: String },
    #[error("{pos}: duplicate rule name `{name}`")]
    DuplicateRule { pos: Pos, name: String },
    #[error("{pos}: pair with both sides NULL")]
    BothNull { pos: Pos },
    #[error("rule `{rule}`: context pattern compiles to an empty language")]
    EmptyContext { rule: String },
    #[error("rule `{rule}`: context references pair `{pair}` outside the alphabet")]
    UnknownPair { rule: String, pair: String },
    #[error("no alignment of lexical `{lexical}` with surface `{surface}` under the feasible alphabet")]
    NoAlignment { lexical: String, surface: String },
}

/// Parsed rule file: feasible-pair alphabet, named sets, and rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    alphabet: Vec<PairSymbol>,
    pair_index: HashMap<PairSymbol, usize>,
    /// Pairs feasible only under variant analysis.
    variant_pairs: HashSet<usize>,
    sets: BTreeMap<String, BTreeSet<Sym>>,
    rules: Vec<TwoLevelRule>,
}

impl RuleSet {
    /// The feasible-pair alphabet used by alignment search; a superset of
    /// all pairs mentioned by rules.
    pub fn licensed_pairs(&self) -> &[PairSymbol] {
        &self.alphabet
    }

    pub fn rules(&self) -> &[TwoLevelRule] {
        &self.rules
    }

    pub fn sets(&self) -> &BTreeMap<String, BTreeSet<Sym>> {
        &self.sets
    }

    pub fn pair_idx(&self, p: PairSymbol) -> Option<usize> {
        self.pair_index.get(&p).copied()
    }

    /// True when the pair is usable in the given mode.
    pub fn pair_feasible(&self, idx: usize, variants: bool) -> bool {
        variants || !self.variant_pairs.contains(&idx)
    }

    /// Indices of pairs with the given lexical symbol, in alphabet order.
    pub fn pairs_with_lexical(&self, lex: Sym) -> impl Iterator<Item = usize> + '_ {
        self.alphabet
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.lexical == lex)
            .map(|(i, _)| i)
    }

    fn resolve_item(&self, rule: &str, item: &ItemSpec) -> Result<Vec<usize>, TwoLevelError> {
        match item {
            ItemSpec::Pair(p) => match self.pair_idx(*p) {
                Some(i) => Ok(vec![i]),
                None => Err(TwoLevelError::UnknownPair {
                    rule: rule.to_string(),
                    pair: p.to_string(),
                }),
            },
            ItemSpec::Set(name) => {
                let set = &self.sets[name];
                let pairs: Vec<usize> = self
                    .alphabet
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| set.contains(&p.lexical))
                    .map(|(i, _)| i)
                    .collect();
                if pairs.is_empty() {
                    Err(TwoLevelError::EmptyContext {
                        rule: rule.to_string(),
                    })
                } else {
                    Ok(pairs)
                }
            }
        }
    }

    /// Resolve a context pattern into per-item feasible-pair index sets.
    pub(crate) fn resolve_pattern(
        &self,
        rule: &str,
        pat: &ContextPattern,
    ) -> Result<Vec<(Vec<usize>, Rep)>, TwoLevelError> {
        pat.items
            .iter()
            .map(|it| Ok((self.resolve_item(rule, &it.spec)?, it.rep)))
            .collect()
    }

    /// Compile one rule into a deterministic recognizer over the alphabet.
    pub fn compile_rule(&self, rule: &TwoLevelRule) -> Result<PairRecognizer, TwoLevelError> {
        automata::compile_rule(self, rule)
    }

    /// Compile every rule. Recognizers keep their rule's `variant_only` flag.
    pub fn compile(&self) -> Result<CompiledRules, TwoLevelError> {
        let mut recognizers = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            recognizers.push((self.compile_rule(r)?, r.variant_only));
        }
        Ok(CompiledRules {
            rules: self.clone(),
            recognizers,
        })
    }
}

/// A rule set together with its compiled recognizers. Immutable and freely
/// shareable across threads.
#[derive(Debug, Clone)]
pub struct CompiledRules {
    rules: RuleSet,
    recognizers: Vec<(PairRecognizer, bool)>,
}

/// Tracks one DFA state per active rule while scanning a pair string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScanState {
    states: Vec<u32>,
}

impl CompiledRules {
    pub fn rule_set(&self) -> &RuleSet {
        &self.rules
    }

    pub fn recognizers(&self) -> impl Iterator<Item = &PairRecognizer> {
        self.recognizers.iter().map(|(r, _)| r)
    }

    /// Initial scan state; variant recognizers are engaged only in variant mode.
    pub fn start_scan(&self, variants: bool) -> ScanState {
        ScanState {
            states: self
                .recognizers
                .iter()
                .map(|(r, var)| if *var && !variants { u32::MAX } else { r.start() })
                .collect(),
        }
    }

    /// Advance all engaged recognizers by one pair. Returns `None` when some
    /// rule can no longer reach acceptance (dead branch).
    pub fn step_scan(&self, st: &ScanState, pair_idx: usize) -> Option<ScanState> {
        let mut next = Vec::with_capacity(st.states.len());
        for ((rec, _), &s) in self.recognizers.iter().zip(&st.states) {
            if s == u32::MAX {
                next.push(u32::MAX);
                continue;
            }
            let t = rec.step(s, pair_idx);
            if !rec.live(t) {
                return None;
            }
            next.push(t);
        }
        Some(ScanState { states: next })
    }

    pub fn scan_accepting(&self, st: &ScanState) -> bool {
        self.recognizers
            .iter()
            .zip(&st.states)
            .all(|((rec, _), &s)| s == u32::MAX || rec.accepting(s))
    }

    /// Whether a full pair string is feasible and accepted by every engaged rule.
    pub fn accepts_pair_string(&self, pairs: &[PairSymbol], variants: bool) -> bool {
        let mut st = self.start_scan(variants);
        for p in pairs {
            let Some(idx) = self.rules.pair_idx(*p) else {
                return false;
            };
            if !self.rules.pair_feasible(idx, variants) {
                return false;
            }
            match self.step_scan(&st, idx) {
                Some(s) => st = s,
                None => return false,
            }
        }
        self.scan_accepting(&st)
    }

    /// Parallel-constraint acceptance test over lexical/surface sequences.
    ///
    /// Alignments pad either side with NULL (bounded runs); the result is
    /// `true` iff some feasible alignment is accepted by every rule,
    /// `false` if feasible alignments exist but all are rejected, and
    /// `Err(NoAlignment)` when the sequences cannot be aligned at all.
    pub fn check_pairing(
        &self,
        lexical: &str,
        surface: &str,
        variants: bool,
    ) -> Result<bool, TwoLevelError> {
        let lex: Vec<Sym> = lexical.chars().map(Sym::from_char).collect();
        let sur: Vec<Sym> = surface.chars().map(Sym::from_char).collect();
        let mut any_alignment = false;
        let accepted = self.align(
            &lex,
            &sur,
            0,
            0,
            0,
            0,
            variants,
            &mut Vec::new(),
            &mut any_alignment,
        );
        if accepted {
            Ok(true)
        } else if any_alignment {
            Ok(false)
        } else {
            Err(TwoLevelError::NoAlignment {
                lexical: lexical.to_string(),
                surface: surface.to_string(),
            })
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn align(
        &self,
        lex: &[Sym],
        sur: &[Sym],
        li: usize,
        si: usize,
        del_run: usize,
        ins_run: usize,
        variants: bool,
        acc: &mut Vec<PairSymbol>,
        any: &mut bool,
    ) -> bool {
        if li == lex.len() && si == sur.len() {
            *any = true;
            return self.accepts_pair_string(acc, variants);
        }
        let feasible = |p: PairSymbol| {
            self.rules
                .pair_idx(p)
                .is_some_and(|i| self.rules.pair_feasible(i, variants))
        };
        let mut hit = false;
        // Consume one symbol from each side.
        if li < lex.len() && si < sur.len() {
            let p = PairSymbol::new(lex[li], sur[si]);
            if feasible(p) {
                acc.push(p);
                hit = self.align(lex, sur, li + 1, si + 1, 0, 0, variants, acc, any);
                acc.pop();
                if hit {
                    return true;
                }
            }
        }
        // Lexical symbol realized as nothing (surface NULL).
        if li < lex.len() && del_run < MAX_NULL_RUN && !lex[li].is_null() {
            let p = PairSymbol::new(lex[li], Sym::Null);
            if feasible(p) {
                acc.push(p);
                hit = self.align(lex, sur, li + 1, si, del_run + 1, ins_run, variants, acc, any);
                acc.pop();
                if hit {
                    return true;
                }
            }
        }
        // Surface symbol with no lexical counterpart (lexical NULL).
        if si < sur.len() && ins_run < MAX_NULL_RUN && !sur[si].is_null() {
            let p = PairSymbol::new(Sym::Null, sur[si]);
            if feasible(p) {
                acc.push(p);
                hit = self.align(lex, sur, li, si + 1, del_run, ins_run + 1, variants, acc, any);
                acc.pop();
                if hit {
                    return true;
                }
            }
        }
        hit
    }
}

// ---------------------------------------------------------------------------
// Rule file parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Token {
    text: String,
    pos: Pos,
}

fn tokenize_file(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let mut col = 0usize;
        let mut cur = String::new();
        let mut cur_col = 0usize;
        for ch in line.chars() {
            col += 1;
            if ch.is_whitespace() || ch == ';' {
                if !cur.is_empty() {
                    out.push(Token {
                        text: std::mem::take(&mut cur),
                        pos: Pos {
                            line: ln + 1,
                            col: cur_col,
                        },
                    });
                }
                if ch == ';' {
                    out.push(Token {
                        text: ";".to_string(),
                        pos: Pos { line: ln + 1, col },
                    });
                }
            } else {
                if cur.is_empty() {
                    cur_col = col;
                }
                cur.push(ch);
            }
        }
        if !cur.is_empty() {
            out.push(Token {
                text: cur,
                pos: Pos {
                    line: ln + 1,
                    col: cur_col,
                },
            });
        }
    }
    out
}

fn parse_pair_token(tok: &Token) -> Result<PairSymbol, TwoLevelError> {
    let t = &tok.text;
    let syntax = |msg: String| TwoLevelError::Syntax { pos: tok.pos, msg };
    let pair = if let Some((l, s)) = t.split_once(':') {
        let lc: Vec<char> = l.chars().collect();
        let sc: Vec<char> = s.chars().collect();
        if lc.len() != 1 || sc.len() != 1 {
            return Err(syntax(format!("malformed pair `{t}`")));
        }
        PairSymbol::new(Sym::from_char(lc[0]), Sym::from_char(sc[0]))
    } else {
        let c: Vec<char> = t.chars().collect();
        if c.len() != 1 {
            return Err(syntax(format!("malformed pair `{t}`")));
        }
        let s = Sym::from_char(c[0]);
        PairSymbol::new(s, s)
    };
    if pair.lexical.is_null() && pair.surface.is_null() {
        return Err(TwoLevelError::BothNull { pos: tok.pos });
    }
    Ok(pair)
}

/// Context item before alphabet finalization.
#[derive(Debug)]
struct RawItem {
    text: String,
    pos: Pos,
    rep: Rep,
}

#[derive(Debug)]
struct RawRule {
    name: String,
    pair: PairSymbol,
    op: RuleOp,
    left: Vec<RawItem>,
    right: Vec<RawItem>,
    variant_only: bool,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, what: &str) -> Result<Token, TwoLevelError> {
        self.next().ok_or_else(|| TwoLevelError::Syntax {
            pos: self
                .toks
                .last()
                .map(|t| t.pos)
                .unwrap_or(Pos { line: 1, col: 1 }),
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn take_until_semi(&mut self) -> Result<Vec<Token>, TwoLevelError> {
        let mut out = Vec::new();
        loop {
            let t = self.expect("`;`")?;
            if t.text == ";" {
                return Ok(out);
            }
            out.push(t);
        }
    }
}

fn split_raw_item(t: &Token) -> Result<RawItem, TwoLevelError> {
    let mut text = t.text.as_str();
    let mut rep = Rep::One;
    if let Some(stripped) = text.strip_suffix('*') {
        if !stripped.is_empty() {
            rep = Rep::ZeroOrMore;
            text = stripped;
        }
    } else if let Some(stripped) = text.strip_suffix('+') {
        // A bare `+` token is the boundary symbol, not a quantifier.
        if !stripped.is_empty() {
            rep = Rep::OneOrMore;
            text = stripped;
        }
    }
    if let Some(inner) = text.strip_prefix('(') {
        text = inner.strip_suffix(')').ok_or_else(|| TwoLevelError::Syntax {
            pos: t.pos,
            msg: format!("unbalanced parentheses in `{}`", t.text),
        })?;
        rep = Rep::Optional;
    }
    if text.is_empty() {
        return Err(TwoLevelError::Syntax {
            pos: t.pos,
            msg: format!("empty context item `{}`", t.text),
        });
    }
    Ok(RawItem {
        text: text.to_string(),
        pos: t.pos,
        rep,
    })
}

/// Parse a `.rul` file into a [`RuleSet`].
pub fn parse_rules(text: &str) -> Result<RuleSet, TwoLevelError> {
    let mut p = Parser {
        toks: tokenize_file(text),
        at: 0,
    };
    let mut declared: Vec<PairSymbol> = Vec::new();
    let mut sets: BTreeMap<String, BTreeSet<Sym>> = BTreeMap::new();
    let mut raw_rules: Vec<RawRule> = Vec::new();
    let mut rule_names: HashSet<String> = HashSet::new();

    while let Some(tok) = p.next() {
        match tok.text.as_str() {
            "ALPHABET" => {
                for t in p.take_until_semi()? {
                    declared.push(parse_pair_token(&t)?);
                }
            }
            "SET" => {
                let name = p.expect("set name")?;
                let eq = p.expect("`=`")?;
                if eq.text != "=" {
                    return Err(TwoLevelError::Syntax {
                        pos: eq.pos,
                        msg: format!("expected `=`, found `{}`", eq.text),
                    });
                }
                let mut members = BTreeSet::new();
                for t in p.take_until_semi()? {
                    let cs: Vec<char> = t.text.chars().collect();
                    if cs.len() != 1 {
                        return Err(TwoLevelError::Syntax {
                            pos: t.pos,
                            msg: format!("set members are single symbols, found `{}`", t.text),
                        });
                    }
                    members.insert(Sym::from_char(cs[0]));
                }
                sets.insert(name.text, members);
            }
            "RULE" => {
                let name_tok = p.expect("rule name")?;
                let name = name_tok
                    .text
                    .strip_prefix('"')
                    .and_then(|s| s.strip_suffix('"'))
                    .ok_or_else(|| TwoLevelError::Syntax {
                        pos: name_tok.pos,
                        msg: format!("rule name must be quoted, found `{}`", name_tok.text),
                    })?
                    .to_string();
                if !rule_names.insert(name.clone()) {
                    return Err(TwoLevelError::DuplicateRule {
                        pos: name_tok.pos,
                        name,
                    });
                }
                let mut body = p.take_until_semi()?;
                let mut variant_only = false;
                if body.first().is_some_and(|t| t.text == "VARIANT") {
                    variant_only = true;
                    body.remove(0);
                }
                if body.len() < 2 {
                    return Err(TwoLevelError::Syntax {
                        pos: name_tok.pos,
                        msg: format!("rule `{name}` is missing its pair or operator"),
                    });
                }
                let pair = parse_pair_token(&body[0])?;
                let op = match body[1].text.as_str() {
                    "=>" => RuleOp::ContextRequirement,
                    "<=" => RuleOp::SurfaceCoercion,
                    "<=>" => RuleOp::DoubleArrow,
                    "/<=" => RuleOp::Exclusion,
                    other => {
                        return Err(TwoLevelError::Syntax {
                            pos: body[1].pos,
                            msg: format!("unknown operator `{other}`"),
                        })
                    }
                };
                let ctx = &body[2..];
                let slot = ctx.iter().position(|t| t.text == "_").ok_or_else(|| {
                    TwoLevelError::Syntax {
                        pos: body[1].pos,
                        msg: format!("rule `{name}` is missing the `_` context slot"),
                    }
                })?;
                let left = ctx[..slot]
                    .iter()
                    .map(split_raw_item)
                    .collect::<Result<Vec<_>, _>>()?;
                let right = ctx[slot + 1..]
                    .iter()
                    .map(split_raw_item)
                    .collect::<Result<Vec<_>, _>>()?;
                raw_rules.push(RawRule {
                    name,
                    pair,
                    op,
                    left,
                    right,
                    variant_only,
                });
            }
            ";" => {}
            other => {
                return Err(TwoLevelError::Syntax {
                    pos: tok.pos,
                    msg: format!("unknown declaration `{other}`"),
                })
            }
        }
    }

    // Alphabet: declarations, rule pairs, explicit context pairs, then
    // identity pairs for every character seen anywhere.
    let mut alphabet: Vec<PairSymbol> = Vec::new();
    let mut pair_index: HashMap<PairSymbol, usize> = HashMap::new();
    let add = |alphabet: &mut Vec<PairSymbol>,
                   pair_index: &mut HashMap<PairSymbol, usize>,
                   p: PairSymbol| {
        if let std::collections::hash_map::Entry::Vacant(e) = pair_index.entry(p) {
            e.insert(alphabet.len());
            alphabet.push(p);
        }
    };
    for p in &declared {
        add(&mut alphabet, &mut pair_index, *p);
    }
    for r in &raw_rules {
        add(&mut alphabet, &mut pair_index, r.pair);
        for item in r.left.iter().chain(&r.right) {
            if !sets.contains_key(&item.text) && item.text.contains(':') {
                let tok = Token {
                    text: item.text.clone(),
                    pos: item.pos,
                };
                add(&mut alphabet, &mut pair_index, parse_pair_token(&tok)?);
            }
        }
    }
    let mut chars: BTreeSet<char> = BTreeSet::new();
    for p in &alphabet {
        for s in [p.lexical, p.surface] {
            if let Sym::Ch(c) = s {
                chars.insert(c);
            }
        }
    }
    for s in sets.values() {
        for sym in s {
            if let Sym::Ch(c) = sym {
                chars.insert(*c);
            }
        }
    }
    for c in chars.clone() {
        add(&mut alphabet, &mut pair_index, PairSymbol::identity(c));
    }

    // Resolve context items now that the alphabet is final.
    let resolve = |item: &RawItem| -> Result<ContextItem, TwoLevelError> {
        let spec = if sets.contains_key(&item.text) {
            ItemSpec::Set(item.text.clone())
        } else if item.text.contains(':') {
            let tok = Token {
                text: item.text.clone(),
                pos: item.pos,
            };
            ItemSpec::Pair(parse_pair_token(&tok)?)
        } else {
            let cs: Vec<char> = item.text.chars().collect();
            if cs.len() == 1 && chars.contains(&cs[0]) {
                let s = Sym::from_char(cs[0]);
                ItemSpec::Pair(PairSymbol::new(s, s))
            } else {
                return Err(TwoLevelError::UndefinedSet {
                    pos: item.pos,
                    name: item.text.clone(),
                });
            }
        };
        Ok(ContextItem {
            spec,
            rep: item.rep,
        })
    };

    let mut rules = Vec::with_capacity(raw_rules.len());
    let mut variant_rule_pairs: Vec<PairSymbol> = Vec::new();
    let mut standard_rule_pairs: Vec<PairSymbol> = Vec::new();
    for r in &raw_rules {
        let left = ContextPattern {
            items: r.left.iter().map(&resolve).collect::<Result<_, _>>()?,
        };
        let right = ContextPattern {
            items: r.right.iter().map(&resolve).collect::<Result<_, _>>()?,
        };
        if r.variant_only {
            variant_rule_pairs.push(r.pair);
        } else {
            standard_rule_pairs.push(r.pair);
        }
        rules.push(TwoLevelRule {
            name: r.name.clone(),
            pair: r.pair,
            op: r.op,
            left,
            right,
            variant_only: r.variant_only,
        });
    }

    // A non-identity pair used only by VARIANT rules is variant-gated.
    let mut variant_pairs = HashSet::new();
    for p in variant_rule_pairs {
        if !standard_rule_pairs.contains(&p) && !p.is_identity() && !declared.contains(&p) {
            variant_pairs.insert(pair_index[&p]);
        }
    }

    Ok(RuleSet {
        alphabet,
        pair_index,
        variant_pairs,
        sets,
        rules,
    })
}

#[cfg(test)]
mod tests;
