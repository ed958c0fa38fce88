//! Lexicon files and their compiled morphotactic network.
//!
//! A lexicon is a set of named sublexicons. Each entry carries a lexical
//! form (possibly with archiphonemes), optional lemma/gloss and category
//! information, feature contributions, and a continuation: either another
//! sublexicon or the end marker `#`.
//!
//! File format (`.lex`, UTF-8, `#`-comments only at line start):
//!
//! ```text
//! ROOT Root ;                      # optional; defaults to first sublexicon
//! SUBLEXICON Root
//! seme CAT=NOUN -> Decl ;          # lemma defaults to the lexical form
//! da "izan" CAT=AUXILIARY -> # ;   # quoted text overrides lemma (root)
//! SUBLEXICON Decl
//! 0 "abs.mg" F num=MG det=no case=ABS -> # ;     # 0 = empty lexical form
//! A "art" F num=SG det=yes -> SgCase ;
//! GENERIC CAT=NOUN PATTERN=Letter+ -> Decl ;
//! ```
//!
//! Entries outside the root sublexicon are affixes: their quoted text is a
//! gloss and their lemma is empty. `NONSTD` marks dialectal entries that are
//! only reachable in variant mode.

mod network;

pub use network::{CompiledGeneric, ContTarget, ExitArc, MorphNetwork, TrieNode, BOUNDARY};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::tagset::TagsetConfig;
use crate::twolevel::{ContextItem, ContextPattern, Pos, Rep, Sym};

/// Case values whose final occurrence on a path marks a genitive-bearing,
/// re-entrant word-form: the possessive and locative genitives.
pub const GENITIVE_CASES: [&str; 2] = ["GEN", "GEL"];

/// Continuation of a lexicon entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Continuation {
    /// The end marker `#`.
    End,
    Sub(String),
}

impl fmt::Display for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Continuation::End => f.write_str("#"),
            Continuation::Sub(s) => f.write_str(s),
        }
    }
}

/// One lexicon entry.
#[derive(Debug, Clone)]
pub struct LexEntry {
    /// Lexical form; archiphonemes are uppercase symbols, `0` is dropped.
    pub lexical: Vec<char>,
    /// Dictionary citation form; empty for pure affixes.
    pub lemma: String,
    pub gloss: String,
    pub category: Option<String>,
    pub subcategory: Option<String>,
    pub features: Vec<(String, String)>,
    pub continuation: Continuation,
    /// False for dialectal/nonstandard entries (`NONSTD`).
    pub standard: bool,
}

impl LexEntry {
    pub fn lexical_string(&self) -> String {
        self.lexical.iter().collect()
    }

    pub fn case_feature(&self) -> Option<&str> {
        self.features
            .iter()
            .rev()
            .find(|(k, _)| k == "case")
            .map(|(_, v)| v.as_str())
    }
}

/// A generic lemma used by the guesser: any stem matching the phonotactic
/// pattern may continue into the given sublexicon under an open category.
#[derive(Debug, Clone)]
pub struct GenericLemma {
    pub category: String,
    pub pattern: ContextPattern,
    pub continuation: String,
}

#[derive(Debug, Clone)]
pub struct Sublexicon {
    pub name: String,
    pub entries: Vec<LexEntry>,
}

/// Parsed and continuation-checked lexicon.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub sublexicons: Vec<Sublexicon>,
    pub root: String,
    pub generics: Vec<GenericLemma>,
    by_name: HashMap<String, usize>,
}

impl Lexicon {
    pub fn sublexicon(&self, name: &str) -> Option<&Sublexicon> {
        self.by_name.get(name).map(|&i| &self.sublexicons[i])
    }

    pub fn sublexicon_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown continuation `{name}`")]
    UnknownContinuation { pos: Pos, name: String },
    #[error("{pos}: unknown category `{name}`")]
    UnknownCategory { pos: Pos, name: String },
    #[error("{pos}: duplicate entry `{form}` with continuation `{cont}` in sublexicon `{sublexicon}`")]
    DuplicateEntry {
        pos: Pos,
        sublexicon: String,
        form: String,
        cont: String,
    },
    #[error("no root sublexicon")]
    NoRoot,
    #[error("{pos}: duplicate sublexicon `{name}`")]
    DuplicateSublexicon { pos: Pos, name: String },
    #[error("generic lemma category `{0}` is not an open category")]
    ClosedGenericCategory(String),
    #[error("generic pattern references unknown set `{0}`")]
    UnknownPatternSet(String),
}

/// Severity of a [`validate_lexicon`] diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Tok {
    text: String,
    pos: Pos,
}

/// Whitespace tokenizer; a line whose first non-blank character is `#` is a
/// comment. `;` is its own token so statements can span lines.
fn tokenize(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        let mut col = 0usize;
        let mut cur = String::new();
        let mut cur_col = 0usize;
        for ch in line.chars() {
            col += 1;
            if ch.is_whitespace() || ch == ';' {
                if !cur.is_empty() {
                    out.push(Tok {
                        text: std::mem::take(&mut cur),
                        pos: Pos {
                            line: ln + 1,
                            col: cur_col,
                        },
                    });
                }
                if ch == ';' {
                    out.push(Tok {
                        text: ";".into(),
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
            out.push(Tok {
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

/// Parse a `.lex` file, resolving continuations and validating categories
/// against the tagset configuration.
pub fn parse_lexicon(text: &str, tagset: &TagsetConfig) -> Result<Lexicon, LexiconError> {
    let toks = tokenize(text);
    let mut at = 0usize;
    let mut sublexicons: Vec<Sublexicon> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();
    let mut generics: Vec<GenericLemma> = Vec::new();
    let mut root: Option<String> = None;
    let mut current: Option<usize> = None;
    // (pos, name) of every continuation reference, checked at the end.
    let mut cont_refs: Vec<(Pos, String)> = Vec::new();

    while at < toks.len() {
        let tok = &toks[at];
        match tok.text.as_str() {
            ";" => {
                at += 1;
            }
            "ROOT" => {
                let name = toks.get(at + 1).ok_or(LexiconError::NoRoot)?;
                root = Some(name.text.clone());
                at += 2;
                if toks.get(at).is_some_and(|t| t.text == ";") {
                    at += 1;
                }
            }
            "SUBLEXICON" => {
                let name = toks.get(at + 1).ok_or_else(|| LexiconError::Syntax {
                    pos: tok.pos,
                    msg: "SUBLEXICON needs a name".into(),
                })?;
                if by_name.contains_key(&name.text) {
                    return Err(LexiconError::DuplicateSublexicon {
                        pos: name.pos,
                        name: name.text.clone(),
                    });
                }
                by_name.insert(name.text.clone(), sublexicons.len());
                sublexicons.push(Sublexicon {
                    name: name.text.clone(),
                    entries: Vec::new(),
                });
                current = Some(sublexicons.len() - 1);
                if root.is_none() {
                    root = Some(name.text.clone());
                }
                at += 2;
            }
            "GENERIC" => {
                let mut body = Vec::new();
                at += 1;
                while at < toks.len() && toks[at].text != ";" {
                    body.push(&toks[at]);
                    at += 1;
                }
                at += 1;
                let g = parse_generic(tok.pos, &body, tagset, &mut cont_refs)?;
                generics.push(g);
            }
            _ => {
                let mut body = vec![tok];
                at += 1;
                while at < toks.len() && toks[at].text != ";" {
                    body.push(&toks[at]);
                    at += 1;
                }
                at += 1;
                let sub = current.ok_or(LexiconError::NoRoot)?;
                let is_root = root.as_deref() == Some(sublexicons[sub].name.as_str());
                let entry = parse_entry(&body, tagset, is_root, &mut cont_refs)?;
                let dup = sublexicons[sub].entries.iter().any(|e| {
                    e.lexical == entry.lexical && e.continuation == entry.continuation
                });
                if dup {
                    return Err(LexiconError::DuplicateEntry {
                        pos: tok.pos,
                        sublexicon: sublexicons[sub].name.clone(),
                        form: entry.lexical_string(),
                        cont: entry.continuation.to_string(),
                    });
                }
                sublexicons[sub].entries.push(entry);
            }
        }
    }

    let root = root.ok_or(LexiconError::NoRoot)?;
    if !by_name.contains_key(&root) {
        return Err(LexiconError::NoRoot);
    }
    for (pos, name) in cont_refs {
        if name != "#" && !by_name.contains_key(&name) {
            return Err(LexiconError::UnknownContinuation { pos, name });
        }
    }

    Ok(Lexicon {
        sublexicons,
        root,
        generics,
        by_name,
    })
}

fn parse_entry(
    body: &[&Tok],
    tagset: &TagsetConfig,
    in_root: bool,
    cont_refs: &mut Vec<(Pos, String)>,
) -> Result<LexEntry, LexiconError> {
    let head = body[0];
    let lexical: Vec<char> = head.text.chars().filter(|&c| c != '0').collect();
    let mut quoted: Option<String> = None;
    let mut category = None;
    let mut subcategory = None;
    let mut features = Vec::new();
    let mut standard = true;
    let mut continuation: Option<(Pos, String)> = None;

    let mut i = 1;
    while i < body.len() {
        let t = body[i];
        let text = t.text.as_str();
        if let Some(q) = text.strip_prefix('"') {
            let q = q.strip_suffix('"').ok_or_else(|| LexiconError::Syntax {
                pos: t.pos,
                msg: format!("unterminated quote in `{text}`"),
            })?;
            quoted = Some(q.to_string());
        } else if let Some(c) = text.strip_prefix("CAT=") {
            if !tagset.has_category(c) {
                return Err(LexiconError::UnknownCategory {
                    pos: t.pos,
                    name: c.to_string(),
                });
            }
            category = Some(c.to_string());
        } else if let Some(s) = text.strip_prefix("SUB=") {
            subcategory = Some(s.to_string());
        } else if text == "F" {
            // Marker for the feature block; the k=v tokens follow.
        } else if text == "NONSTD" {
            standard = false;
        } else if text == "->" {
            let c = body.get(i + 1).ok_or_else(|| LexiconError::Syntax {
                pos: t.pos,
                msg: "`->` needs a continuation".into(),
            })?;
            continuation = Some((c.pos, c.text.clone()));
            i += 1;
        } else if let Some((k, v)) = text.split_once('=') {
            features.push((k.to_string(), v.to_string()));
        } else {
            return Err(LexiconError::Syntax {
                pos: t.pos,
                msg: format!("unexpected token `{text}` in entry"),
            });
        }
        i += 1;
    }

    let (cpos, cname) = continuation.ok_or_else(|| LexiconError::Syntax {
        pos: head.pos,
        msg: format!("entry `{}` is missing `-> <continuation>`", head.text),
    })?;
    cont_refs.push((cpos, cname.clone()));
    let continuation = if cname == "#" {
        Continuation::End
    } else {
        Continuation::Sub(cname)
    };

    let (lemma, gloss) = if in_root {
        let lemma = quoted.unwrap_or_else(|| lexical.iter().collect());
        (lemma.clone(), lemma)
    } else {
        (String::new(), quoted.unwrap_or_default())
    };

    Ok(LexEntry {
        lexical,
        lemma,
        gloss,
        category,
        subcategory,
        features,
        continuation,
        standard,
    })
}

fn parse_generic(
    pos: Pos,
    body: &[&Tok],
    tagset: &TagsetConfig,
    cont_refs: &mut Vec<(Pos, String)>,
) -> Result<GenericLemma, LexiconError> {
    let mut category = None;
    let mut pattern_items: Vec<ContextItem> = Vec::new();
    let mut continuation = None;
    let mut i = 0;
    while i < body.len() {
        let t = body[i];
        let text = t.text.as_str();
        if let Some(c) = text.strip_prefix("CAT=") {
            if !tagset.has_category(c) {
                return Err(LexiconError::UnknownCategory {
                    pos: t.pos,
                    name: c.to_string(),
                });
            }
            category = Some(c.to_string());
        } else if let Some(p) = text.strip_prefix("PATTERN=") {
            pattern_items.push(parse_pattern_item(t.pos, p)?);
            // Further bare items may follow until `->`.
            while i + 1 < body.len() && body[i + 1].text != "->" {
                i += 1;
                pattern_items.push(parse_pattern_item(body[i].pos, &body[i].text)?);
            }
        } else if text == "->" {
            let c = body.get(i + 1).ok_or_else(|| LexiconError::Syntax {
                pos: t.pos,
                msg: "`->` needs a continuation".into(),
            })?;
            continuation = Some((c.pos, c.text.clone()));
            i += 1;
        } else {
            return Err(LexiconError::Syntax {
                pos: t.pos,
                msg: format!("unexpected token `{text}` in GENERIC"),
            });
        }
        i += 1;
    }
    let category = category.ok_or_else(|| LexiconError::Syntax {
        pos,
        msg: "GENERIC needs CAT=<id>".into(),
    })?;
    let (cpos, cname) = continuation.ok_or_else(|| LexiconError::Syntax {
        pos,
        msg: "GENERIC needs `-> <continuation>`".into(),
    })?;
    if cname == "#" {
        return Err(LexiconError::Syntax {
            pos: cpos,
            msg: "GENERIC must continue into a sublexicon".into(),
        });
    }
    cont_refs.push((cpos, cname.clone()));
    Ok(GenericLemma {
        category,
        pattern: ContextPattern {
            items: pattern_items,
        },
        continuation: cname,
    })
}

fn parse_pattern_item(pos: Pos, text: &str) -> Result<ContextItem, LexiconError> {
    let mut t = text;
    let mut rep = Rep::One;
    if let Some(s) = t.strip_suffix('*') {
        rep = Rep::ZeroOrMore;
        t = s;
    } else if let Some(s) = t.strip_suffix('+') {
        if !s.is_empty() {
            rep = Rep::OneOrMore;
            t = s;
        }
    }
    if let Some(inner) = t.strip_prefix('(') {
        t = inner.strip_suffix(')').ok_or_else(|| LexiconError::Syntax {
            pos,
            msg: format!("unbalanced parentheses in `{text}`"),
        })?;
        rep = Rep::Optional;
    }
    let spec = if t.chars().count() == 1 {
        let c = t.chars().next().unwrap();
        crate::twolevel::ItemSpec::Pair(crate::twolevel::PairSymbol::new(
            Sym::from_char(c),
            Sym::from_char(c),
        ))
    } else {
        crate::twolevel::ItemSpec::Set(t.to_string())
    };
    Ok(ContextItem { spec, rep })
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Collects warnings (unreachable sublexicons, entry shadowing) and errors
/// (cycles of zero-length continuations).
pub fn validate_lexicon(lex: &Lexicon) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    // Reachability from the root via entry and generic continuations.
    let mut reach: HashSet<usize> = HashSet::new();
    let mut stack = vec![lex.sublexicon_index(&lex.root).unwrap()];
    for g in &lex.generics {
        if let Some(i) = lex.sublexicon_index(&g.continuation) {
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        if !reach.insert(i) {
            continue;
        }
        for e in &lex.sublexicons[i].entries {
            if let Continuation::Sub(name) = &e.continuation {
                stack.push(lex.sublexicon_index(name).unwrap());
            }
        }
    }
    for (i, s) in lex.sublexicons.iter().enumerate() {
        if !reach.contains(&i) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("sublexicon `{}` is unreachable from the root", s.name),
            });
        }
    }

    // Shadowing: same form and features but different continuations.
    for s in &lex.sublexicons {
        for (i, a) in s.entries.iter().enumerate() {
            for b in &s.entries[i + 1..] {
                if a.lexical == b.lexical
                    && a.features == b.features
                    && a.category == b.category
                    && a.continuation != b.continuation
                {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        message: format!(
                            "entry `{}` in `{}` shadows an identical entry with continuation `{}`",
                            a.lexical_string(),
                            s.name,
                            b.continuation
                        ),
                    });
                }
            }
        }
    }

    // Cycles along zero-length continuations would loop forever.
    let n = lex.sublexicons.len();
    let mut zero_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in lex.sublexicons.iter().enumerate() {
        for e in &s.entries {
            if e.lexical.is_empty() {
                if let Continuation::Sub(name) = &e.continuation {
                    zero_edges[i].push(lex.sublexicon_index(name).unwrap());
                }
            }
        }
    }
    // DFS cycle detection.
    let mut color = vec![0u8; n];
    fn dfs(v: usize, edges: &[Vec<usize>], color: &mut [u8]) -> bool {
        color[v] = 1;
        for &w in &edges[v] {
            if color[w] == 1 || (color[w] == 0 && dfs(w, edges, color)) {
                return true;
            }
        }
        color[v] = 2;
        false
    }
    for v in 0..n {
        if color[v] == 0 && dfs(v, &zero_edges, &mut color) {
            out.push(Diagnostic {
                severity: Severity::Error,
                message: format!(
                    "cycle of zero-length continuations through sublexicon `{}`",
                    lex.sublexicons[v].name
                ),
            });
            break;
        }
    }

    out
}

/// Feature map helper: last writer wins, preserving a deterministic order.
pub(crate) fn merge_features(into: &mut BTreeMap<String, String>, entry: &LexEntry) {
    if let Some(c) = &entry.category {
        into.insert("cat".into(), c.clone());
    }
    if let Some(s) = &entry.subcategory {
        into.insert("sub".into(), s.clone());
    }
    for (k, v) in &entry.features {
        into.insert(k.clone(), v.clone());
    }
}

#[cfg(test)]
mod tests;
