//! The violation grammar of a minimal automaton and its finiteness check.
//!
//! The grammar tracks where accepting runs apply transitions of violating
//! groups: brackets delimit the run, and each violating application emits
//! its group's violation symbol plus one bracket pair. The language of the
//! grammar is finite exactly when the number of violating applications per
//! accepting run is bounded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::analyze::{conflux_groups, is_violation, ConfluxGroup};
use crate::core::{Address, Run, State};
use crate::minimize::MinimalDba;

use super::FudtError;

/// Terminal symbols of the violation grammar. `Violation(k)` renders as
/// `v<k>`, numbered by (symbol, target) order of the violating groups.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GrammarSymbol {
    Open,
    Close,
    Violation(usize),
}

impl fmt::Display for GrammarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarSymbol::Open => write!(f, "["),
            GrammarSymbol::Close => write!(f, "]"),
            GrammarSymbol::Violation(k) => write!(f, "v{}", k),
        }
    }
}

impl fmt::Debug for GrammarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

pub type GrammarString = Vec<GrammarSymbol>;

pub fn render_string(s: &[GrammarSymbol]) -> String {
    s.iter().map(GrammarSymbol::to_string).collect()
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RhsItem {
    Terminal(GrammarSymbol),
    Nonterminal(String),
}

impl fmt::Display for RhsItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsItem::Terminal(t) => write!(f, "{}", t),
            RhsItem::Nonterminal(n) => write!(f, "{}", n),
        }
    }
}

impl fmt::Debug for RhsItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<RhsItem>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        if self.rhs.is_empty() {
            write!(f, " ε")?;
        } else {
            for item in &self.rhs {
                write!(f, " {}", item)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A context-free grammar over brackets and violation symbols whose
/// nonterminals are the automaton's states plus a fresh start symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationGrammar {
    pub start: String,
    pub nonterminals: BTreeSet<String>,
    /// The violating groups, in (symbol, target) order; index k is the
    /// group of terminal `v<k>`.
    pub violating_groups: Vec<ConfluxGroup>,
    pub productions: BTreeSet<Production>,
}

impl ViolationGrammar {
    /// Index of the violating group a transition belongs to, if any.
    pub fn violation_index(&self, symbol: &str, target: &State) -> Option<usize> {
        self.violating_groups
            .iter()
            .position(|g| g.symbol == symbol && g.target == *target)
    }

    pub fn productions_of<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = &'a Production> {
        self.productions.iter().filter(move |p| p.lhs == lhs)
    }
}

fn start_symbol(states: &BTreeSet<State>) -> String {
    let mut name = "S".to_string();
    let mut i = 0;
    while states.contains(&State::new(name.clone())) {
        i += 1;
        name = format!("_S{}", i);
    }
    name
}

/// Builds the violation grammar of `m`: one production per transition
/// (violating transitions additionally emit their violation symbol inside
/// brackets) and one bracket production per final state.
pub fn build_violation_grammar(m: &MinimalDba) -> ViolationGrammar {
    let a = m.automaton();
    let violating_groups: Vec<ConfluxGroup> = conflux_groups(m)
        .into_iter()
        .filter(|g| is_violation(g, m).is_violating())
        .collect();
    let index: BTreeMap<(String, State), usize> = violating_groups
        .iter()
        .enumerate()
        .map(|(k, g)| ((g.symbol.clone(), g.target.clone()), k))
        .collect();

    let start = start_symbol(a.states());
    let mut productions = BTreeSet::new();
    for t in a.transitions() {
        let args = t
            .args
            .iter()
            .map(|q| RhsItem::Nonterminal(q.to_string()));
        let rhs = match index.get(&(t.symbol.clone(), t.target.clone())) {
            Some(&k) => {
                let mut rhs = vec![
                    RhsItem::Terminal(GrammarSymbol::Violation(k)),
                    RhsItem::Terminal(GrammarSymbol::Open),
                ];
                rhs.extend(args);
                rhs.push(RhsItem::Terminal(GrammarSymbol::Close));
                rhs
            }
            None => args.collect(),
        };
        productions.insert(Production {
            lhs: t.target.to_string(),
            rhs,
        });
    }
    for q in a.finals() {
        productions.insert(Production {
            lhs: start.clone(),
            rhs: vec![
                RhsItem::Terminal(GrammarSymbol::Open),
                RhsItem::Nonterminal(q.to_string()),
                RhsItem::Terminal(GrammarSymbol::Close),
            ],
        });
    }
    let mut nonterminals: BTreeSet<String> =
        a.states().iter().map(State::to_string).collect();
    nonterminals.insert(start.clone());
    ViolationGrammar {
        start,
        nonterminals,
        violating_groups,
        productions,
    }
}

/// The terminal string a run derives: brackets around the root, and for
/// every violating application its symbol plus a bracket pair, in the
/// order the run's tree is read.
pub fn corresponding_string(
    m: &MinimalDba,
    grammar: &ViolationGrammar,
    run: &Run,
) -> Result<GrammarString, FudtError> {
    if !run.is_accepting(m.automaton()) {
        return Err(FudtError::RunNotAccepting);
    }
    let mut out = vec![GrammarSymbol::Open];
    expand(grammar, run, &Address::root(), &mut out)?;
    out.push(GrammarSymbol::Close);
    Ok(out)
}

fn expand(
    grammar: &ViolationGrammar,
    run: &Run,
    at: &Address,
    out: &mut GrammarString,
) -> Result<(), FudtError> {
    let transition = run
        .transition_at(at)
        .ok_or(FudtError::RunNotAccepting)?;
    let violating = grammar.violation_index(&transition.symbol, &transition.target);
    if let Some(k) = violating {
        out.push(GrammarSymbol::Violation(k));
        out.push(GrammarSymbol::Open);
    }
    for i in 1..=transition.args.len() {
        expand(grammar, run, &at.child(i), out)?;
    }
    if violating.is_some() {
        out.push(GrammarSymbol::Close);
    }
    Ok(())
}

/// Evidence that the grammar generates an infinite language: a production
/// of length greater than one whose edge closes a cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfinitenessWitness {
    pub component: BTreeSet<String>,
    pub from: String,
    pub to: String,
    pub production: Production,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FinitenessVerdict {
    Finite,
    Infinite(InfinitenessWitness),
}

impl FinitenessVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, FinitenessVerdict::Finite)
    }
}

/// Decides finiteness of the grammar's language: eliminate deleting rules,
/// then build the nonterminal graph — chain productions give plain edges,
/// longer right-hand sides give marked edges — and report any marked edge
/// inside a strongly connected component.
pub fn grammar_is_finite(grammar: &ViolationGrammar) -> FinitenessVerdict {
    let productions = eliminate_epsilon_rules(&grammar.productions);

    let nodes: Vec<String> = grammar.nonterminals.iter().cloned().collect();
    let index: BTreeMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    // (from, to, production) for every marked edge.
    let mut marked: Vec<(usize, usize, Production)> = Vec::new();
    for p in &productions {
        let lhs = index[p.lhs.as_str()];
        let nts: Vec<usize> = p
            .rhs
            .iter()
            .filter_map(|item| match item {
                RhsItem::Nonterminal(n) => Some(index[n.as_str()]),
                RhsItem::Terminal(_) => None,
            })
            .collect();
        if p.rhs.len() == 1 && nts.len() == 1 {
            edges[lhs].push(nts[0]);
        } else {
            for &to in &nts {
                edges[lhs].push(to);
                marked.push((lhs, to, p.clone()));
            }
        }
    }

    let component_of = tarjan_scc(&edges);
    let mut hits: Vec<&(usize, usize, Production)> = marked
        .iter()
        .filter(|(from, to, _)| component_of[*from] == component_of[*to])
        .collect();
    hits.sort_by_key(|(from, to, p)| (nodes[*from].clone(), nodes[*to].clone(), p.clone()));
    match hits.first() {
        None => FinitenessVerdict::Finite,
        Some((from, to, production)) => {
            let comp = component_of[*from];
            let component: BTreeSet<String> = (0..nodes.len())
                .filter(|&i| component_of[i] == comp)
                .map(|i| nodes[i].clone())
                .collect();
            FinitenessVerdict::Infinite(InfinitenessWitness {
                component,
                from: nodes[*from].clone(),
                to: nodes[*to].clone(),
                production: production.clone(),
            })
        }
    }
}

/// Standard nullable elimination: every production variant with some
/// nullable occurrences dropped is added, then empty productions go away.
fn eliminate_epsilon_rules(productions: &BTreeSet<Production>) -> BTreeSet<Production> {
    let mut nullable: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut grew = false;
        for p in productions {
            if nullable.contains(&p.lhs) {
                continue;
            }
            let all_nullable = p.rhs.iter().all(|item| match item {
                RhsItem::Terminal(_) => false,
                RhsItem::Nonterminal(n) => nullable.contains(n),
            });
            if all_nullable {
                nullable.insert(p.lhs.clone());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let mut out = BTreeSet::new();
    for p in productions {
        let nullable_positions: Vec<usize> = p
            .rhs
            .iter()
            .enumerate()
            .filter(|(_, item)| match item {
                RhsItem::Nonterminal(n) => nullable.contains(n),
                RhsItem::Terminal(_) => false,
            })
            .map(|(i, _)| i)
            .collect();
        for mask in 0..(1usize << nullable_positions.len()) {
            let dropped: BTreeSet<usize> = nullable_positions
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &i)| i)
                .collect();
            let rhs: Vec<RhsItem> = p
                .rhs
                .iter()
                .enumerate()
                .filter(|(i, _)| !dropped.contains(i))
                .map(|(_, item)| item.clone())
                .collect();
            if !rhs.is_empty() {
                out.insert(Production {
                    lhs: p.lhs.clone(),
                    rhs,
                });
            }
        }
    }
    out
}

fn tarjan_scc(edges: &[Vec<usize>]) -> Vec<usize> {
    struct TarjanState<'a> {
        edges: &'a [Vec<usize>],
        index: usize,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        idx: Vec<Option<usize>>,
        low: Vec<usize>,
        component: Vec<usize>,
        components: usize,
    }

    fn strongconnect(v: usize, state: &mut TarjanState) {
        state.idx[v] = Some(state.index);
        state.low[v] = state.index;
        state.index += 1;
        state.stack.push(v);
        state.on_stack[v] = true;

        for &w in &state.edges[v] {
            if state.idx[w].is_none() {
                strongconnect(w, state);
                state.low[v] = state.low[v].min(state.low[w]);
            } else if state.on_stack[w] {
                state.low[v] = state.low[v].min(state.idx[w].unwrap());
            }
        }

        if state.low[v] == state.idx[v].unwrap() {
            loop {
                let w = state.stack.pop().expect("stack underflow");
                state.on_stack[w] = false;
                state.component[w] = state.components;
                if w == v {
                    break;
                }
            }
            state.components += 1;
        }
    }

    let n = edges.len();
    let mut state = TarjanState {
        edges,
        index: 0,
        stack: Vec::new(),
        on_stack: vec![false; n],
        idx: vec![None; n],
        low: vec![0; n],
        component: vec![usize::MAX; n],
        components: 0,
    };
    for v in 0..n {
        if state.idx[v].is_none() {
            strongconnect(v, &mut state);
        }
    }
    state.component
}

/// The complete language of a finite grammar, by iterating the per-
/// nonterminal languages to their fixpoint.
pub fn enumerate_grammar_language(
    grammar: &ViolationGrammar,
) -> Result<BTreeSet<GrammarString>, FudtError> {
    if let FinitenessVerdict::Infinite(witness) = grammar_is_finite(grammar) {
        return Err(FudtError::InfiniteGrammar(Box::new(witness)));
    }
    let mut languages: BTreeMap<&str, BTreeSet<GrammarString>> = grammar
        .nonterminals
        .iter()
        .map(|n| (n.as_str(), BTreeSet::new()))
        .collect();
    loop {
        let mut grew = false;
        for p in &grammar.productions {
            let mut strings: Vec<GrammarString> = vec![Vec::new()];
            let mut dead = false;
            for item in &p.rhs {
                match item {
                    RhsItem::Terminal(t) => {
                        for s in &mut strings {
                            s.push(*t);
                        }
                    }
                    RhsItem::Nonterminal(n) => {
                        let pool = &languages[n.as_str()];
                        if pool.is_empty() {
                            dead = true;
                            break;
                        }
                        strings = strings
                            .iter()
                            .flat_map(|prefix| {
                                pool.iter().map(move |suffix| {
                                    let mut s = prefix.clone();
                                    s.extend(suffix.iter().copied());
                                    s
                                })
                            })
                            .collect();
                    }
                }
            }
            if dead {
                continue;
            }
            let entry = languages.get_mut(p.lhs.as_str()).unwrap();
            for s in strings {
                if entry.insert(s) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(languages.remove(grammar.start.as_str()).unwrap_or_default())
}
