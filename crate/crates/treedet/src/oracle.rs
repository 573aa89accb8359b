//! Brute-force reference semantics: bounded tree enumeration, path
//! languages and path closure, the subtree exchange property, bounded
//! equivalence, and bounded syntactic congruence classes.
//!
//! Everything here is deliberately naive and every verdict is stamped with
//! the bound it was computed at; "holds up to B" is one-sided.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::core::{
    Address, BottomUpAutomaton, Context, CoreError, RankedAlphabet, RankedTree, State, HOLE_LABEL,
};

/// Default extra tree size used when approximating the path language of the
/// full language by the paths of bounded members.
pub const DEFAULT_PATH_SLACK: usize = 4;

/// All trees over `alphabet` with at most `max_size` nodes, in
/// size-then-lexicographic term order, without duplicates.
pub fn enumerate_trees(alphabet: &RankedAlphabet, max_size: usize) -> Vec<RankedTree> {
    let mut by_size: Vec<Vec<RankedTree>> = vec![Vec::new(); max_size + 1];
    for size in 1..=max_size {
        let mut trees = Vec::new();
        for (symbol, rank) in alphabet.symbols() {
            if rank == 0 {
                if size == 1 {
                    trees.push(RankedTree::leaf(symbol));
                }
                continue;
            }
            if size < rank + 1 {
                continue;
            }
            for combo in child_combos(&by_size, size - 1, rank) {
                trees.push(RankedTree::new(symbol, combo));
            }
        }
        trees.sort();
        by_size[size] = trees;
    }
    by_size.into_iter().flatten().collect()
}

/// All ways to pick `parts` children with total size `budget`.
fn child_combos(by_size: &[Vec<RankedTree>], budget: usize, parts: usize) -> Vec<Vec<RankedTree>> {
    if parts == 0 {
        return if budget == 0 {
            vec![Vec::new()]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    // Each part needs at least one node.
    for first in 1..=budget.saturating_sub(parts - 1) {
        for tree in &by_size[first] {
            for rest in child_combos(by_size, budget - first, parts - 1) {
                let mut combo = Vec::with_capacity(parts);
                combo.push(tree.clone());
                combo.extend(rest);
                out.push(combo);
            }
        }
    }
    out
}

/// All contexts over `alphabet` with at most `max_size` nodes (the hole
/// counts as a node).
pub fn enumerate_contexts(alphabet: &RankedAlphabet, max_size: usize) -> Vec<Context> {
    let extended = alphabet
        .extended(HOLE_LABEL, 0)
        .expect("hole label must not occur in user alphabets");
    enumerate_trees(&extended, max_size)
        .into_iter()
        .filter_map(|t| Context::new(t).ok())
        .collect()
}

/// All accepted trees with at most `max_size` nodes, in term order.
/// Computed per state and size, so only members are ever materialized.
pub fn enumerate_accepted(automaton: &BottomUpAutomaton, max_size: usize) -> Vec<RankedTree> {
    let reaching = trees_reaching(automaton, max_size);
    let mut out: BTreeSet<RankedTree> = BTreeSet::new();
    for q in automaton.finals() {
        for per_size in reaching.get(q).into_iter().flatten() {
            out.extend(per_size.iter().cloned());
        }
    }
    out.into_iter().collect()
}

/// For every state, the trees of each size that can reach it.
fn trees_reaching(
    automaton: &BottomUpAutomaton,
    max_size: usize,
) -> BTreeMap<State, Vec<BTreeSet<RankedTree>>> {
    let mut table: BTreeMap<State, Vec<BTreeSet<RankedTree>>> = automaton
        .states()
        .iter()
        .map(|q| (q.clone(), vec![BTreeSet::new(); max_size + 1]))
        .collect();
    for size in 1..=max_size {
        let mut additions: Vec<(State, RankedTree)> = Vec::new();
        for t in automaton.transitions() {
            let rank = t.args.len();
            if rank == 0 {
                if size == 1 {
                    additions.push((t.target.clone(), RankedTree::leaf(t.symbol.clone())));
                }
                continue;
            }
            if size < rank + 1 {
                continue;
            }
            let pools: Vec<&Vec<BTreeSet<RankedTree>>> =
                t.args.iter().map(|q| &table[q]).collect();
            collect_products(
                &pools,
                size - 1,
                &mut Vec::new(),
                &mut |children: &Vec<RankedTree>| {
                    additions.push((
                        t.target.clone(),
                        RankedTree::new(t.symbol.clone(), children.clone()),
                    ));
                },
            );
        }
        for (q, tree) in additions {
            table.get_mut(&q).unwrap()[size].insert(tree);
        }
    }
    table
}

fn collect_products(
    pools: &[&Vec<BTreeSet<RankedTree>>],
    budget: usize,
    acc: &mut Vec<RankedTree>,
    emit: &mut impl FnMut(&Vec<RankedTree>),
) {
    if pools.is_empty() {
        if budget == 0 {
            emit(acc);
        }
        return;
    }
    let remaining = pools.len() - 1;
    for size in 1..=budget.saturating_sub(remaining) {
        for tree in &pools[0][size] {
            acc.push(tree.clone());
            collect_products(&pools[1..], budget - size, acc, emit);
            acc.pop();
        }
    }
}

/// One root-to-leaf word: alternating symbol and child index, ending in a
/// rank-0 symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub steps: Vec<(String, usize)>,
    pub leaf: String,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (symbol, index) in &self.steps {
            write!(f, "{}{}", symbol, index)?;
        }
        write!(f, "{}", self.leaf)
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// π(t): the set of root-to-leaf paths of `t`.
pub fn path_language(tree: &RankedTree) -> BTreeSet<Path> {
    if tree.children().is_empty() {
        let mut set = BTreeSet::new();
        set.insert(Path {
            steps: Vec::new(),
            leaf: tree.label().to_string(),
        });
        return set;
    }
    let mut out = BTreeSet::new();
    for (i, child) in tree.children().iter().enumerate() {
        for mut path in path_language(child) {
            path.steps
                .insert(0, (tree.label().to_string(), i + 1));
            out.insert(path);
        }
    }
    out
}

/// Paths of all accepted trees up to `max_size` — the bounded stand-in for
/// π(L).
pub fn bounded_path_language(
    automaton: &BottomUpAutomaton,
    max_size: usize,
) -> BTreeSet<Path> {
    let mut out = BTreeSet::new();
    for tree in enumerate_accepted(automaton, max_size) {
        out.extend(path_language(&tree));
    }
    out
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PathClosedVerdict {
    /// No counterexample below the bound; this does not prove closure.
    Closed { bound: usize },
    /// A tree outside the language all of whose paths the language covers.
    Counterexample(RankedTree),
}

/// Searches trees up to `max_size` for a member of the path closure that
/// the automaton rejects. The path language is approximated from members up
/// to `max_size + slack`, which under-approximates π(L), so a reported
/// counterexample is always genuine.
pub fn bounded_path_closed(
    automaton: &BottomUpAutomaton,
    max_size: usize,
    slack: usize,
) -> Result<PathClosedVerdict, CoreError> {
    let paths = bounded_path_language(automaton, max_size + slack);
    for tree in enumerate_trees(automaton.alphabet(), max_size) {
        if path_language(&tree).is_subset(&paths) && !automaton.accepts(&tree)? {
            return Ok(PathClosedVerdict::Counterexample(tree));
        }
    }
    Ok(PathClosedVerdict::Closed { bound: max_size })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExchangeCounterexample {
    /// The accepted tree whose node `address` is being rewritten.
    pub base: RankedTree,
    pub address: Address,
    /// Both replacements keep the tree in the language...
    pub first: RankedTree,
    pub second: RankedTree,
    /// ...but swapping child `position` of `first` for the corresponding
    /// child of `second` leaves it.
    pub position: usize,
    pub mixed: RankedTree,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExchangeVerdict {
    Holds { bound: usize },
    Counterexample(Box<ExchangeCounterexample>),
}

/// Exhaustively checks the subtree exchange property over accepted trees up
/// to `max_size`, with replacement subtrees drawn from subtrees of accepted
/// trees up to the same bound. Returns the first counterexample in
/// canonical order.
pub fn bounded_exchange(
    automaton: &BottomUpAutomaton,
    max_size: usize,
) -> Result<ExchangeVerdict, CoreError> {
    let accepted = enumerate_accepted(automaton, max_size);
    let mut pool: BTreeSet<RankedTree> = BTreeSet::new();
    for tree in &accepted {
        for at in tree.addresses() {
            pool.insert(tree.subtree(&at).unwrap().clone());
        }
    }
    // Only same-symbol replacements of rank >= 1 can produce mixtures.
    let mut by_symbol: BTreeMap<&str, Vec<&RankedTree>> = BTreeMap::new();
    for tree in &pool {
        if !tree.children().is_empty() {
            by_symbol.entry(tree.label()).or_default().push(tree);
        }
    }

    let mut membership: HashMap<RankedTree, bool> = HashMap::new();
    let accepts = |automaton: &BottomUpAutomaton,
                       cache: &mut HashMap<RankedTree, bool>,
                       tree: &RankedTree|
     -> Result<bool, CoreError> {
        if let Some(&hit) = cache.get(tree) {
            return Ok(hit);
        }
        let value = automaton.accepts(tree)?;
        cache.insert(tree.clone(), value);
        Ok(value)
    };

    for base in &accepted {
        for address in base.addresses() {
            for candidates in by_symbol.values() {
                let mut admitted: Vec<&RankedTree> = Vec::new();
                for candidate in candidates {
                    let rewritten = base.replaced(&address, (*candidate).clone()).unwrap();
                    if accepts(automaton, &mut membership, &rewritten)? {
                        admitted.push(candidate);
                    }
                }
                for first in &admitted {
                    for second in &admitted {
                        if first == second {
                            continue;
                        }
                        for position in 0..first.children().len() {
                            if first.children()[position] == second.children()[position] {
                                continue;
                            }
                            let mut children = first.children().to_vec();
                            children[position] = second.children()[position].clone();
                            let mixed_subtree =
                                RankedTree::new(first.label().to_string(), children);
                            let mixed = base.replaced(&address, mixed_subtree.clone()).unwrap();
                            if !accepts(automaton, &mut membership, &mixed)? {
                                return Ok(ExchangeVerdict::Counterexample(Box::new(
                                    ExchangeCounterexample {
                                        base: base.clone(),
                                        address,
                                        first: (*first).clone(),
                                        second: (*second).clone(),
                                        position: position + 1,
                                        mixed: mixed_subtree,
                                    },
                                )));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ExchangeVerdict::Holds { bound: max_size })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EquivalenceVerdict {
    Equal { bound: usize },
    /// First tree in enumeration order on which acceptance differs.
    Distinguished(RankedTree),
}

pub fn bounded_equivalence(
    left: &BottomUpAutomaton,
    right: &BottomUpAutomaton,
    max_size: usize,
) -> Result<EquivalenceVerdict, CoreError> {
    if left.alphabet() != right.alphabet() {
        return Err(CoreError::UnknownSymbol {
            symbol: "<alphabet mismatch>".to_string(),
        });
    }
    for tree in enumerate_trees(left.alphabet(), max_size) {
        if left.accepts(&tree)? != right.accepts(&tree)? {
            return Ok(EquivalenceVerdict::Distinguished(tree));
        }
    }
    Ok(EquivalenceVerdict::Equal { bound: max_size })
}

/// Partition of the bounded tree universe by behavior under all bounded
/// contexts. The class of trees no context can complete into the language
/// is reported separately.
#[derive(Clone, Debug)]
pub struct NerodePartition {
    pub classes: Vec<Vec<RankedTree>>,
    pub bottom: Vec<RankedTree>,
    pub tree_bound: usize,
    pub context_bound: usize,
}

impl NerodePartition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

pub fn nerode_classes_bounded(
    automaton: &BottomUpAutomaton,
    tree_bound: usize,
    context_bound: usize,
) -> Result<NerodePartition, CoreError> {
    let trees = enumerate_trees(automaton.alphabet(), tree_bound);
    let contexts = enumerate_contexts(automaton.alphabet(), context_bound);

    // Evaluate each context once per root state set rather than once per
    // tree; the check stays exhaustive over the bounded context universe.
    let mut signature_of_set: BTreeMap<BTreeSet<State>, Vec<bool>> = BTreeMap::new();
    let mut groups: BTreeMap<Vec<bool>, Vec<RankedTree>> = BTreeMap::new();
    for tree in trees {
        let states = automaton.evaluate(&tree)?;
        let signature = signature_of_set
            .entry(states.clone())
            .or_insert_with(|| {
                contexts
                    .iter()
                    .map(|ctx| {
                        let reached = eval_with_hole(automaton, ctx.tree(), &states);
                        reached.iter().any(|q| automaton.finals().contains(q))
                    })
                    .collect()
            })
            .clone();
        groups.entry(signature).or_default().push(tree);
    }

    let mut classes = Vec::new();
    let mut bottom = Vec::new();
    for (signature, mut members) in groups {
        members.sort();
        if signature.iter().any(|&b| b) {
            classes.push(members);
        } else {
            bottom.extend(members);
        }
    }
    classes.sort_by(|a, b| a[0].cmp(&b[0]));
    bottom.sort();
    Ok(NerodePartition {
        classes,
        bottom,
        tree_bound,
        context_bound,
    })
}

/// Evaluates a context tree bottom-up, with the hole contributing the given
/// state set.
fn eval_with_hole(
    automaton: &BottomUpAutomaton,
    node: &RankedTree,
    hole_states: &BTreeSet<State>,
) -> BTreeSet<State> {
    if node.label() == HOLE_LABEL {
        return hole_states.clone();
    }
    let child_sets: Vec<BTreeSet<State>> = node
        .children()
        .iter()
        .map(|c| eval_with_hole(automaton, c, hole_states))
        .collect();
    let mut out = BTreeSet::new();
    for t in automaton.transitions_on(node.label()) {
        if t.args
            .iter()
            .zip(child_sets.iter())
            .all(|(q, set)| set.contains(q))
        {
            out.insert(t.target.clone());
        }
    }
    out
}

/// Over all accepted trees up to `max_size` of a deterministic automaton,
/// the largest number of applications of transitions from the given
/// (symbol, target) pairs within a single run, with a witness tree.
pub fn max_marked_applications(
    automaton: &BottomUpAutomaton,
    marked: &BTreeSet<(String, State)>,
    max_size: usize,
) -> Result<Option<(usize, RankedTree)>, CoreError> {
    let mut best: Option<(usize, RankedTree)> = None;
    for tree in enumerate_accepted(automaton, max_size) {
        let run = match automaton.run_of(&tree)? {
            crate::core::RunResult::Complete(run) => run,
            crate::core::RunResult::Reject { .. } => continue,
        };
        let count = tree
            .addresses()
            .iter()
            .filter(|at| {
                let t = run.transition_at(at).unwrap();
                marked.contains(&(t.symbol.clone(), t.target.clone()))
            })
            .count();
        match &best {
            Some((b, _)) if *b >= count => {}
            _ => best = Some((count, tree)),
        }
    }
    Ok(best)
}
