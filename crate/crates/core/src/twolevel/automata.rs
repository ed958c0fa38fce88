//! Compilation of two-level rules into deterministic recognizers.
//!
//! The alphabet is the feasible-pair inventory of a [`RuleSet`], addressed
//! by index. Rules compile via a small NFA toolkit: each operator is
//! expressed as the complement of a "violation" language.
//!
//! * `p => L _ R`  rejects `(¬(Σ*L)) p Σ*` and `Σ* p (¬(RΣ*))`.
//! * `p <= L _ R`  rejects `Σ* L p̃ R Σ*` for every p̃ sharing p's lexical
//!   symbol but surfacing differently.
//! * `p /<= L _ R` rejects `Σ* L p R Σ*`.
//! * `<=>` is the intersection of the `=>` and `<=` recognizers.

use std::collections::{BTreeSet, HashMap};

use super::{Rep, RuleOp, RuleSet, TwoLevelError, TwoLevelRule};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct PairBits {
    words: Vec<u64>,
}

impl PairBits {
    fn empty(n: usize) -> PairBits {
        PairBits {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn from_indices(n: usize, idx: &[usize]) -> PairBits {
        let mut b = PairBits::empty(n);
        for &i in idx {
            b.words[i / 64] |= 1 << (i % 64);
        }
        b
    }

    fn full(n: usize) -> PairBits {
        let mut b = PairBits::empty(n);
        for i in 0..n {
            b.words[i / 64] |= 1 << (i % 64);
        }
        b
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }
}

#[derive(Debug, Clone)]
struct Nfa {
    n_pairs: usize,
    trans: Vec<Vec<(PairBits, usize)>>,
    eps: Vec<Vec<usize>>,
    start: usize,
    accepting: Vec<bool>,
}

impl Nfa {
    fn new(n_pairs: usize) -> Nfa {
        Nfa {
            n_pairs,
            trans: vec![Vec::new()],
            eps: vec![Vec::new()],
            start: 0,
            accepting: vec![false],
        }
    }

    fn add_state(&mut self) -> usize {
        self.trans.push(Vec::new());
        self.eps.push(Vec::new());
        self.accepting.push(false);
        self.trans.len() - 1
    }

    /// NFA accepting any single pair from the class.
    fn symbols(n_pairs: usize, cls: PairBits) -> Nfa {
        let mut n = Nfa::new(n_pairs);
        let t = n.add_state();
        n.trans[0].push((cls, t));
        n.accepting[t] = true;
        n
    }

    /// NFA accepting Σ*.
    fn sigma_star(n_pairs: usize) -> Nfa {
        let mut n = Nfa::new(n_pairs);
        n.trans[0].push((PairBits::full(n_pairs), 0));
        n.accepting[0] = true;
        n
    }

    /// Concatenate, consuming both operands.
    fn concat(a: Nfa, b: &Nfa) -> Nfa {
        let mut out = a;
        let off = out.trans.len();
        for s in 0..b.trans.len() {
            out.trans.push(
                b.trans[s]
                    .iter()
                    .map(|(c, t)| (c.clone(), t + off))
                    .collect(),
            );
            out.eps.push(b.eps[s].iter().map(|t| t + off).collect());
            out.accepting.push(b.accepting[s]);
        }
        for s in 0..off {
            if out.accepting[s] {
                out.accepting[s] = false;
                out.eps[s].push(b.start + off);
            }
        }
        out
    }

    /// NFA for a resolved context pattern (sequence of classed items).
    fn from_pattern(n_pairs: usize, items: &[(Vec<usize>, Rep)]) -> Nfa {
        let mut n = Nfa::new(n_pairs);
        let mut cur = n.start;
        for (idx, rep) in items {
            let cls = PairBits::from_indices(n_pairs, idx);
            match rep {
                Rep::One => {
                    let t = n.add_state();
                    n.trans[cur].push((cls, t));
                    cur = t;
                }
                Rep::Optional => {
                    let t = n.add_state();
                    n.trans[cur].push((cls, t));
                    n.eps[cur].push(t);
                    cur = t;
                }
                Rep::ZeroOrMore => {
                    let t = n.add_state();
                    n.trans[cur].push((cls.clone(), cur));
                    n.eps[cur].push(t);
                    cur = t;
                }
                Rep::OneOrMore => {
                    let t = n.add_state();
                    n.trans[cur].push((cls.clone(), t));
                    n.trans[t].push((cls, t));
                    cur = t;
                }
            }
        }
        n.accepting[cur] = true;
        n
    }

    fn closure(&self, states: &mut BTreeSet<usize>) {
        let mut stack: Vec<usize> = states.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &t in &self.eps[s] {
                if states.insert(t) {
                    stack.push(t);
                }
            }
        }
    }

    fn determinize(&self) -> Dfa {
        let mut start: BTreeSet<usize> = BTreeSet::new();
        start.insert(self.start);
        self.closure(&mut start);
        let mut index: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        index.insert(start.clone(), 0);
        let mut order = vec![start];
        let mut trans: Vec<Vec<u32>> = Vec::new();
        let mut accepting: Vec<bool> = Vec::new();
        let mut at = 0;
        while at < order.len() {
            let cur = order[at].clone();
            accepting.push(cur.iter().any(|&s| self.accepting[s]));
            let mut row = Vec::with_capacity(self.n_pairs);
            for p in 0..self.n_pairs {
                let mut next = BTreeSet::new();
                for &s in &cur {
                    for (cls, t) in &self.trans[s] {
                        if cls.contains(p) {
                            next.insert(*t);
                        }
                    }
                }
                self.closure(&mut next);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = order.len();
                        index.insert(next.clone(), id);
                        order.push(next);
                        id
                    }
                };
                row.push(id as u32);
            }
            trans.push(row);
            at += 1;
        }
        Dfa {
            n_pairs: self.n_pairs,
            trans,
            accepting,
        }
    }
}

#[derive(Debug, Clone)]
struct Dfa {
    n_pairs: usize,
    trans: Vec<Vec<u32>>,
    accepting: Vec<bool>,
}

impl Dfa {
    fn complement(mut self) -> Dfa {
        for a in self.accepting.iter_mut() {
            *a = !*a;
        }
        self
    }

    fn to_nfa(&self) -> Nfa {
        let mut n = Nfa::new(self.n_pairs);
        for _ in 1..self.trans.len() {
            n.add_state();
        }
        for (s, row) in self.trans.iter().enumerate() {
            for (p, &t) in row.iter().enumerate() {
                n.trans[s].push((PairBits::from_indices(self.n_pairs, &[p]), t as usize));
            }
            n.accepting[s] = self.accepting[s];
        }
        n
    }

    fn intersect(&self, other: &Dfa) -> Dfa {
        let mut index: HashMap<(u32, u32), usize> = HashMap::new();
        index.insert((0, 0), 0);
        let mut order = vec![(0u32, 0u32)];
        let mut trans = Vec::new();
        let mut accepting = Vec::new();
        let mut at = 0;
        while at < order.len() {
            let (a, b) = order[at];
            accepting.push(self.accepting[a as usize] && other.accepting[b as usize]);
            let mut row = Vec::with_capacity(self.n_pairs);
            for p in 0..self.n_pairs {
                let key = (
                    self.trans[a as usize][p],
                    other.trans[b as usize][p],
                );
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = order.len();
                        index.insert(key, id);
                        order.push(key);
                        id
                    }
                };
                row.push(id as u32);
            }
            trans.push(row);
            at += 1;
        }
        Dfa {
            n_pairs: self.n_pairs,
            trans,
            accepting,
        }
    }

    fn accepts_nothing(&self) -> bool {
        // Reachability is implicit: every constructed state is reachable.
        !self.accepting.iter().any(|&a| a)
    }
}

/// Compiled recognizer for one rule: a total, deterministic automaton over
/// the feasible-pair alphabet. States from which acceptance is unreachable
/// are marked dead so search can prune early.
#[derive(Debug, Clone)]
pub struct PairRecognizer {
    n_pairs: usize,
    start: u32,
    trans: Vec<u32>,
    accepting: Vec<bool>,
    live: Vec<bool>,
}

impl PairRecognizer {
    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn n_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn step(&self, state: u32, pair_idx: usize) -> u32 {
        self.trans[state as usize * self.n_pairs + pair_idx]
    }

    pub fn accepting(&self, state: u32) -> bool {
        self.accepting[state as usize]
    }

    /// Whether any accepting state is still reachable from `state`.
    pub fn live(&self, state: u32) -> bool {
        self.live[state as usize]
    }

    pub fn accepts(&self, pairs: &[usize]) -> bool {
        let mut s = self.start;
        for &p in pairs {
            s = self.step(s, p);
        }
        self.accepting(s)
    }

    fn from_dfa(dfa: Dfa) -> PairRecognizer {
        let n_states = dfa.trans.len();
        let mut live = vec![false; n_states];
        // Backward reachability from accepting states.
        let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n_states];
        for (s, row) in dfa.trans.iter().enumerate() {
            for &t in row {
                rev[t as usize].push(s as u32);
            }
        }
        let mut stack: Vec<u32> = (0..n_states as u32)
            .filter(|&s| dfa.accepting[s as usize])
            .collect();
        for &s in &stack {
            live[s as usize] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &rev[s as usize] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        let mut trans = Vec::with_capacity(n_states * dfa.n_pairs);
        for row in &dfa.trans {
            trans.extend_from_slice(row);
        }
        PairRecognizer {
            n_pairs: dfa.n_pairs,
            start: 0,
            trans,
            accepting: dfa.accepting,
            live,
        }
    }
}

pub(super) fn compile_rule(
    rules: &RuleSet,
    rule: &TwoLevelRule,
) -> Result<PairRecognizer, TwoLevelError> {
    let n = rules.licensed_pairs().len();
    let left = rules.resolve_pattern(&rule.name, &rule.left)?;
    let right = rules.resolve_pattern(&rule.name, &rule.right)?;
    let p_idx = rules
        .pair_idx(rule.pair)
        .ok_or_else(|| TwoLevelError::UnknownPair {
            rule: rule.name.clone(),
            pair: rule.pair.to_string(),
        })?;

    let sigma = Nfa::sigma_star(n);
    let l_nfa = Nfa::from_pattern(n, &left);
    let r_nfa = Nfa::from_pattern(n, &right);
    if l_nfa.determinize().accepts_nothing() || r_nfa.determinize().accepts_nothing() {
        return Err(TwoLevelError::EmptyContext {
            rule: rule.name.clone(),
        });
    }

    // u ∈ Σ*L — "a left context just ended here".
    let left_end = Nfa::concat(sigma.clone(), &l_nfa).determinize();
    // v ∈ RΣ* — "a right context starts here".
    let right_start = Nfa::concat(r_nfa.clone(), &sigma).determinize();

    let symbol = |idx: &[usize]| Nfa::symbols(n, PairBits::from_indices(n, idx));

    let context_requirement = || {
        let bad_left = Nfa::concat(
            Nfa::concat(left_end.clone().complement().to_nfa(), &symbol(&[p_idx])),
            &sigma,
        )
        .determinize()
        .complement();
        let bad_right = Nfa::concat(
            Nfa::concat(sigma.clone(), &symbol(&[p_idx])),
            &right_start.clone().complement().to_nfa(),
        )
        .determinize()
        .complement();
        bad_left.intersect(&bad_right)
    };

    let surface_coercion = || {
        let conflicting: Vec<usize> = rules
            .pairs_with_lexical(rule.pair.lexical)
            .filter(|&i| i != p_idx)
            .collect();
        if conflicting.is_empty() {
            // No alternative realization of this lexical symbol exists, so
            // there is nothing to coerce: accept everything.
            return Nfa::sigma_star(n).determinize();
        }
        Nfa::concat(
            Nfa::concat(
                Nfa::concat(Nfa::concat(sigma.clone(), &l_nfa), &symbol(&conflicting)),
                &r_nfa,
            ),
            &sigma,
        )
        .determinize()
        .complement()
    };

    let dfa = match rule.op {
        RuleOp::ContextRequirement => context_requirement(),
        RuleOp::SurfaceCoercion => surface_coercion(),
        RuleOp::DoubleArrow => context_requirement().intersect(&surface_coercion()),
        RuleOp::Exclusion => Nfa::concat(
            Nfa::concat(
                Nfa::concat(Nfa::concat(sigma.clone(), &l_nfa), &symbol(&[p_idx])),
                &r_nfa,
            ),
            &sigma,
        )
        .determinize()
        .complement(),
    };

    Ok(PairRecognizer::from_dfa(dfa))
}
