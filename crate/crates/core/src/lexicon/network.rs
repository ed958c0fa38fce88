//! The compiled morphotactic network: one trie per sublexicon over lexical
//! symbols, continuation links between tries, entry exits, and guesser arcs.
//!
//! Paths from the root trie to an end-marker exit spell sequences of entry
//! lexical forms, with the boundary symbol `+` inserted between consecutive
//! entries (and traversed again on genitive re-entry). Exits whose last
//! case-carrying entry is a genitive re-enter the declension trie during
//! analysis, bounded by the configured ellipsis depth.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};

use thiserror::Error;

use super::{Continuation, GenericLemma, LexEntry, Lexicon, LexiconError};
use crate::tagset::TagsetConfig;
use crate::twolevel::{ItemSpec, Rep, RuleSet, Sym};

/// Morpheme boundary symbol inserted between consecutive entries.
pub const BOUNDARY: char = '+';

const MAGIC: &[u8; 6] = b"EUSNET";
const FORMAT_VERSION: u16 = 1;

/// Continuation target of an exit arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContTarget {
    /// End marker: the word-form may stop here.
    End,
    /// Continue into the trie of the given sublexicon.
    Sub(u32),
}

/// An accepting point in a trie: the spelled path ends one entry here.
#[derive(Debug, Clone, Copy)]
pub struct ExitArc {
    pub entry: u32,
    pub cont: ContTarget,
}

#[derive(Debug, Clone, Default)]
pub struct TrieNode {
    pub edges: BTreeMap<char, u32>,
    pub exits: Vec<ExitArc>,
}

#[derive(Debug, Clone, Default)]
pub struct Trie {
    pub nodes: Vec<TrieNode>,
}

impl Trie {
    fn insert(&mut self, word: &[char]) -> u32 {
        if self.nodes.is_empty() {
            self.nodes.push(TrieNode::default());
        }
        let mut at = 0u32;
        for &c in word {
            let next = match self.nodes[at as usize].edges.get(&c) {
                Some(&n) => n,
                None => {
                    let n = self.nodes.len() as u32;
                    self.nodes.push(TrieNode::default());
                    self.nodes[at as usize].edges.insert(c, n);
                    n
                }
            };
            at = next;
        }
        at
    }
}

/// A guesser arc: stems matching the pattern analyze under an open category.
#[derive(Debug, Clone)]
pub struct CompiledGeneric {
    pub category: String,
    /// Resolved phonotactic pattern over surface characters.
    pub items: Vec<(BTreeSet<char>, Rep)>,
    pub continuation: u32,
}

impl CompiledGeneric {
    /// Lengths of word prefixes matched by the whole pattern.
    pub fn prefix_match_lengths(&self, word: &[char]) -> Vec<usize> {
        // NFA states: (item index, at-least-one-consumed) plus accept at n.
        let n = self.items.len();
        let closure = |states: &mut BTreeSet<(usize, bool)>| {
            let mut stack: Vec<(usize, bool)> = states.iter().copied().collect();
            while let Some((i, sat)) = stack.pop() {
                if i >= n {
                    continue;
                }
                let skip = matches!(self.items[i].1, Rep::Optional | Rep::ZeroOrMore)
                    || (sat && self.items[i].1 == Rep::OneOrMore);
                if skip && states.insert((i + 1, false)) {
                    stack.push((i + 1, false));
                }
            }
        };
        let mut states: BTreeSet<(usize, bool)> = BTreeSet::new();
        states.insert((0, false));
        closure(&mut states);
        let mut out = Vec::new();
        if states.contains(&(n, false)) {
            out.push(0);
        }
        for (len, &c) in word.iter().enumerate() {
            let mut next: BTreeSet<(usize, bool)> = BTreeSet::new();
            for &(i, _) in &states {
                if i >= n || !self.items[i].0.contains(&c) {
                    continue;
                }
                match self.items[i].1 {
                    Rep::One | Rep::Optional => {
                        next.insert((i + 1, false));
                    }
                    Rep::ZeroOrMore => {
                        next.insert((i, false));
                    }
                    Rep::OneOrMore => {
                        next.insert((i, true));
                    }
                }
            }
            closure(&mut next);
            states = next;
            if states.is_empty() {
                break;
            }
            if states.contains(&(n, false)) {
                out.push(len + 1);
            }
        }
        out
    }
}

/// Compiled lexicon. Immutable after construction; safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct MorphNetwork {
    pub(crate) sublex_names: Vec<String>,
    pub(crate) tries: Vec<Trie>,
    pub(crate) root: u32,
    pub(crate) entries: Vec<LexEntry>,
    pub(crate) max_ellipsis_depth: usize,
    pub(crate) generics: Vec<CompiledGeneric>,
}

impl MorphNetwork {
    pub fn root_sublex(&self) -> u32 {
        self.root
    }

    pub fn sublex_count(&self) -> usize {
        self.tries.len()
    }

    pub fn sublex_name(&self, i: u32) -> &str {
        &self.sublex_names[i as usize]
    }

    pub fn node(&self, sublex: u32, node: u32) -> &TrieNode {
        &self.tries[sublex as usize].nodes[node as usize]
    }

    pub fn entry(&self, id: u32) -> &LexEntry {
        &self.entries[id as usize]
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn node_count(&self) -> usize {
        self.tries.iter().map(|t| t.nodes.len()).sum()
    }

    pub fn exit_count(&self) -> usize {
        self.tries
            .iter()
            .flat_map(|t| &t.nodes)
            .map(|n| n.exits.len())
            .sum()
    }

    pub fn max_ellipsis_depth(&self) -> usize {
        self.max_ellipsis_depth
    }

    pub fn generics(&self) -> &[CompiledGeneric] {
        &self.generics
    }

    /// Entry ids of root-sublexicon stems with the given lemma.
    pub fn stem_entries_for_lemma(&self, lemma: &str) -> Vec<u32> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.lemma == lemma)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// Compile a validated lexicon into its morphotactic network.
///
/// `max_ellipsis_depth` bounds how many times genitive-bearing exits may
/// re-enter the declension during one analysis.
pub fn compile_network(
    lex: &Lexicon,
    _rules: &RuleSet,
    max_ellipsis_depth: usize,
) -> Result<MorphNetwork, LexiconError> {
    let mut tries: Vec<Trie> = vec![Trie::default(); lex.sublexicons.len()];
    let mut entries: Vec<LexEntry> = Vec::new();
    for (si, sub) in lex.sublexicons.iter().enumerate() {
        tries[si].insert(&[]); // ensure a root node even for empty sublexicons
        for e in &sub.entries {
            let node = tries[si].insert(&e.lexical);
            let cont = match &e.continuation {
                Continuation::End => ContTarget::End,
                Continuation::Sub(name) => {
                    ContTarget::Sub(lex.sublexicon_index(name).unwrap() as u32)
                }
            };
            let id = entries.len() as u32;
            entries.push(e.clone());
            tries[si].nodes[node as usize].exits.push(ExitArc { entry: id, cont });
        }
    }
    Ok(MorphNetwork {
        sublex_names: lex.sublexicons.iter().map(|s| s.name.clone()).collect(),
        tries,
        root: lex.sublexicon_index(&lex.root).unwrap() as u32,
        entries,
        max_ellipsis_depth,
        generics: Vec::new(),
    })
}

/// Attach guesser arcs for the given generic lemmas. Pattern sets resolve
/// against the rule file's SET declarations; categories must be open.
pub fn attach_guesser(
    mut net: MorphNetwork,
    generics: &[GenericLemma],
    rules: &RuleSet,
    tagset: &TagsetConfig,
) -> Result<MorphNetwork, LexiconError> {
    for g in generics {
        if !tagset.is_open(&g.category) {
            return Err(LexiconError::ClosedGenericCategory(g.category.clone()));
        }
        let mut items = Vec::new();
        for item in &g.pattern.items {
            let class: BTreeSet<char> = match &item.spec {
                ItemSpec::Pair(p) => match p.lexical {
                    Sym::Ch(c) => [c].into_iter().collect(),
                    Sym::Null => BTreeSet::new(),
                },
                ItemSpec::Set(name) => match rules.sets().get(name) {
                    Some(set) => set
                        .iter()
                        .filter_map(|s| match s {
                            Sym::Ch(c) => Some(*c),
                            Sym::Null => None,
                        })
                        .collect(),
                    None => return Err(LexiconError::UnknownPatternSet(name.clone())),
                },
            };
            items.push((class, item.rep));
        }
        let continuation = net
            .sublex_names
            .iter()
            .position(|n| n == &g.continuation)
            .ok_or_else(|| LexiconError::UnknownContinuation {
                pos: crate::twolevel::Pos { line: 0, col: 0 },
                name: g.continuation.clone(),
            })? as u32;
        net.generics.push(CompiledGeneric {
            category: g.category.clone(),
            items,
            continuation,
        });
    }
    Ok(net)
}

// ---------------------------------------------------------------------------
// Versioned binary serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum NetworkIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a compiled network (bad magic)")]
    BadMagic,
    #[error("unsupported network format version {found} (expected {expected}); recompile the lexicon")]
    WrongVersion { found: u16, expected: u16 },
    #[error("corrupt compiled network: {0}")]
    Corrupt(String),
}

struct Bin<'a, W: Write>(&'a mut W);

impl<W: Write> Bin<'_, W> {
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.0.write_all(&[v])
    }
    fn str(&mut self, s: &str) -> io::Result<()> {
        self.u32(s.len() as u32)?;
        self.0.write_all(s.as_bytes())
    }
    fn opt_str(&mut self, s: &Option<String>) -> io::Result<()> {
        match s {
            Some(s) => {
                self.u8(1)?;
                self.str(s)
            }
            None => self.u8(0),
        }
    }
}

struct Un<'a, R: Read>(&'a mut R);

impl<R: Read> Un<'_, R> {
    fn u32(&mut self) -> Result<u32, NetworkIoError> {
        let mut b = [0u8; 4];
        self.0.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u8(&mut self) -> Result<u8, NetworkIoError> {
        let mut b = [0u8; 1];
        self.0.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn str(&mut self) -> Result<String, NetworkIoError> {
        let n = self.u32()? as usize;
        if n > 1 << 24 {
            return Err(NetworkIoError::Corrupt("oversized string".into()));
        }
        let mut buf = vec![0u8; n];
        self.0.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|_| NetworkIoError::Corrupt("invalid utf-8".into()))
    }
    fn opt_str(&mut self) -> Result<Option<String>, NetworkIoError> {
        Ok(if self.u8()? == 1 {
            Some(self.str()?)
        } else {
            None
        })
    }
}

impl MorphNetwork {
    pub fn write_binary<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let mut b = Bin(w);
        b.u32(self.sublex_names.len() as u32)?;
        for (name, trie) in self.sublex_names.iter().zip(&self.tries) {
            b.str(name)?;
            b.u32(trie.nodes.len() as u32)?;
            for node in &trie.nodes {
                b.u32(node.edges.len() as u32)?;
                for (&c, &t) in &node.edges {
                    b.str(&c.to_string())?;
                    b.u32(t)?;
                }
                b.u32(node.exits.len() as u32)?;
                for e in &node.exits {
                    b.u32(e.entry)?;
                    match e.cont {
                        ContTarget::End => b.u32(u32::MAX)?,
                        ContTarget::Sub(s) => b.u32(s)?,
                    }
                }
            }
        }
        b.u32(self.entries.len() as u32)?;
        for e in &self.entries {
            b.str(&e.lexical_string())?;
            b.str(&e.lemma)?;
            b.str(&e.gloss)?;
            b.opt_str(&e.category)?;
            b.opt_str(&e.subcategory)?;
            b.u32(e.features.len() as u32)?;
            for (k, v) in &e.features {
                b.str(k)?;
                b.str(v)?;
            }
            match &e.continuation {
                Continuation::End => b.str("#")?,
                Continuation::Sub(s) => b.str(s)?,
            }
            b.u8(e.standard as u8)?;
        }
        b.u32(self.root)?;
        b.u32(self.max_ellipsis_depth as u32)?;
        b.u32(self.generics.len() as u32)?;
        for g in &self.generics {
            b.str(&g.category)?;
            b.u32(g.items.len() as u32)?;
            for (cls, rep) in &g.items {
                b.str(&cls.iter().collect::<String>())?;
                b.u8(match rep {
                    Rep::One => 0,
                    Rep::ZeroOrMore => 1,
                    Rep::OneOrMore => 2,
                    Rep::Optional => 3,
                })?;
            }
            b.u32(g.continuation)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<MorphNetwork, NetworkIoError> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NetworkIoError::BadMagic);
        }
        let mut ver = [0u8; 2];
        r.read_exact(&mut ver)?;
        let found = u16::from_le_bytes(ver);
        if found != FORMAT_VERSION {
            return Err(NetworkIoError::WrongVersion {
                found,
                expected: FORMAT_VERSION,
            });
        }
        let mut u = Un(r);
        let n_sub = u.u32()? as usize;
        let mut sublex_names = Vec::with_capacity(n_sub);
        let mut tries = Vec::with_capacity(n_sub);
        for _ in 0..n_sub {
            sublex_names.push(u.str()?);
            let n_nodes = u.u32()? as usize;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let n_edges = u.u32()? as usize;
                let mut edges = BTreeMap::new();
                for _ in 0..n_edges {
                    let s = u.str()?;
                    let c = s
                        .chars()
                        .next()
                        .ok_or_else(|| NetworkIoError::Corrupt("empty edge symbol".into()))?;
                    edges.insert(c, u.u32()?);
                }
                let n_exits = u.u32()? as usize;
                let mut exits = Vec::with_capacity(n_exits);
                for _ in 0..n_exits {
                    let entry = u.u32()?;
                    let cont = match u.u32()? {
                        u32::MAX => ContTarget::End,
                        s => ContTarget::Sub(s),
                    };
                    exits.push(ExitArc { entry, cont });
                }
                nodes.push(TrieNode { edges, exits });
            }
            tries.push(Trie { nodes });
        }
        let n_entries = u.u32()? as usize;
        let mut entries = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            let lexical: Vec<char> = u.str()?.chars().collect();
            let lemma = u.str()?;
            let gloss = u.str()?;
            let category = u.opt_str()?;
            let subcategory = u.opt_str()?;
            let n_f = u.u32()? as usize;
            let mut features = Vec::with_capacity(n_f);
            for _ in 0..n_f {
                let k = u.str()?;
                let v = u.str()?;
                features.push((k, v));
            }
            let cont = u.str()?;
            let continuation = if cont == "#" {
                Continuation::End
            } else {
                Continuation::Sub(cont)
            };
            let standard = u.u8()? == 1;
            entries.push(LexEntry {
                lexical,
                lemma,
                gloss,
                category,
                subcategory,
                features,
                continuation,
                standard,
            });
        }
        let root = u.u32()?;
        let max_ellipsis_depth = u.u32()? as usize;
        let n_gen = u.u32()? as usize;
        let mut generics = Vec::with_capacity(n_gen);
        for _ in 0..n_gen {
            let category = u.str()?;
            let n_items = u.u32()? as usize;
            let mut items = Vec::with_capacity(n_items);
            for _ in 0..n_items {
                let cls: BTreeSet<char> = u.str()?.chars().collect();
                let rep = match u.u8()? {
                    0 => Rep::One,
                    1 => Rep::ZeroOrMore,
                    2 => Rep::OneOrMore,
                    3 => Rep::Optional,
                    other => {
                        return Err(NetworkIoError::Corrupt(format!(
                            "bad repetition marker {other}"
                        )))
                    }
                };
                items.push((cls, rep));
            }
            let continuation = u.u32()?;
            generics.push(CompiledGeneric {
                category,
                items,
                continuation,
            });
        }
        if root as usize >= tries.len() {
            return Err(NetworkIoError::Corrupt("root out of range".into()));
        }
        Ok(MorphNetwork {
            sublex_names,
            tries,
            root,
            entries,
            max_ellipsis_depth,
            generics,
        })
    }
}
