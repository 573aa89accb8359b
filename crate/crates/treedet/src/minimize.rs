//! Trimming, determinization, and minimization of bottom-up automata.
//!
//! The minimal automaton here is the one whose states are the classes of
//! the syntactic congruence minus the dead class, so every state accepts
//! some tree, every transition appears in some accepting run, and no tree
//! reaches two states.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::core::{
    BottomUpAutomaton, Context, CoreError, RankedTree, RunResult, State, Transition,
};

pub const DEFAULT_DETERMINIZE_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("automaton is not deterministic; determinize it first")]
    NotDeterministic,
    #[error("determinization exceeded the cap of {cap} states")]
    CapExceeded { cap: usize },
    #[error("minimality property check failed: {0}")]
    PropertyFailure(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// A minimized deterministic bottom-up automaton together with a flag
/// recording that the construction-time invariants were checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalDba {
    automaton: BottomUpAutomaton,
    certified: bool,
}

impl MinimalDba {
    pub fn automaton(&self) -> &BottomUpAutomaton {
        &self.automaton
    }

    pub fn into_automaton(self) -> BottomUpAutomaton {
        self.automaton
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// The smallest accepted tree of each state, in the fixed term order.
    pub fn member_trees(&self) -> BTreeMap<State, RankedTree> {
        minimal_member_trees(&self.automaton)
    }

    /// Constructively verifies the three minimality properties: every state
    /// accepts a tree, every transition occurs in some accepting run
    /// (witnessed by an actual run), and no tree reaches two states.
    pub fn verify_properties(&self) -> Result<PropertyWitnesses, MinimizeError> {
        let a = &self.automaton;
        if !a.is_deterministic() {
            return Err(MinimizeError::PropertyFailure(
                "not deterministic".to_string(),
            ));
        }
        let members = minimal_member_trees(a);
        for q in a.states() {
            if !members.contains_key(q) {
                return Err(MinimizeError::PropertyFailure(format!(
                    "state {} accepts no tree",
                    q
                )));
            }
        }
        let contexts = accepting_contexts(a, &members);
        let mut runs = Vec::new();
        for t in a.transitions() {
            let ctx = contexts.get(&t.target).ok_or_else(|| {
                MinimizeError::PropertyFailure(format!(
                    "no accepting context reaches {}",
                    t.target
                ))
            })?;
            let filler = RankedTree::new(
                t.symbol.clone(),
                t.args.iter().map(|q| members[q].clone()).collect(),
            );
            let whole = ctx.apply(&filler);
            let run = match a.run_of(&whole)? {
                RunResult::Complete(run) => run,
                RunResult::Reject { at } => {
                    return Err(MinimizeError::PropertyFailure(format!(
                        "witness tree for {} rejected at {}",
                        t, at
                    )))
                }
            };
            if !run.is_accepting(a) {
                return Err(MinimizeError::PropertyFailure(format!(
                    "witness run for {} is not accepting",
                    t
                )));
            }
            if run.transition_at(ctx.hole_address()) != Some(t.clone()) {
                return Err(MinimizeError::PropertyFailure(format!(
                    "witness run does not use {}",
                    t
                )));
            }
            runs.push((t.clone(), whole));
        }
        Ok(PropertyWitnesses {
            member_trees: members,
            transition_witnesses: runs,
        })
    }
}

/// Constructive evidence for the minimality properties.
#[derive(Clone, Debug)]
pub struct PropertyWitnesses {
    pub member_trees: BTreeMap<State, RankedTree>,
    /// Per transition, a tree whose accepting run applies it.
    pub transition_witnesses: Vec<(Transition, RankedTree)>,
}

/// Removes states that accept no tree and states from which no context
/// leads to acceptance; the language is preserved.
pub fn trim(a: &BottomUpAutomaton) -> BottomUpAutomaton {
    let productive = productive_states(a);
    // A state is useful if some accepting context consumes it; the other
    // argument positions of each step must themselves be fillable.
    let mut useful: BTreeSet<State> = a
        .finals()
        .iter()
        .filter(|q| productive.contains(*q))
        .cloned()
        .collect();
    loop {
        let mut grew = false;
        for t in a.transitions() {
            if !useful.contains(&t.target) {
                continue;
            }
            if !t.args.iter().all(|q| productive.contains(q)) {
                continue;
            }
            for q in &t.args {
                if useful.insert(q.clone()) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let keep: BTreeSet<State> = productive.intersection(&useful).cloned().collect();
    BottomUpAutomaton::new(
        a.alphabet().clone(),
        keep.iter().cloned(),
        a.finals().intersection(&keep).cloned(),
        a.transitions()
            .iter()
            .filter(|t| {
                keep.contains(&t.target) && t.args.iter().all(|q| keep.contains(q))
            })
            .cloned(),
    )
    .expect("trimming preserves well-formedness")
}

fn productive_states(a: &BottomUpAutomaton) -> BTreeSet<State> {
    let mut productive = BTreeSet::new();
    loop {
        let mut grew = false;
        for t in a.transitions() {
            if productive.contains(&t.target) {
                continue;
            }
            if t.args.iter().all(|q| productive.contains(q)) {
                productive.insert(t.target.clone());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    productive
}

/// Subset construction, bottom-up. States of the result are the reachable
/// nonempty subsets, renamed `_d0`, `_d1`, ... in subset order.
pub fn determinize(a: &BottomUpAutomaton, cap: usize) -> Result<BottomUpAutomaton, MinimizeError> {
    let mut subsets: BTreeSet<BTreeSet<State>> = BTreeSet::new();
    let mut transitions: BTreeSet<(String, Vec<BTreeSet<State>>, BTreeSet<State>)> =
        BTreeSet::new();
    loop {
        let mut grew = false;
        let known: Vec<BTreeSet<State>> = subsets.iter().cloned().collect();
        let mut symbols: BTreeSet<(&str, usize)> = BTreeSet::new();
        for t in a.transitions() {
            symbols.insert((t.symbol.as_str(), t.args.len()));
        }
        for (symbol, rank) in symbols {
            for combo in tuple_combos(&known, rank) {
                let mut target = BTreeSet::new();
                for t in a.transitions_on(symbol) {
                    if t.args.len() == rank
                        && t.args.iter().zip(combo.iter()).all(|(q, s)| s.contains(q))
                    {
                        target.insert(t.target.clone());
                    }
                }
                if target.is_empty() {
                    continue;
                }
                if subsets.insert(target.clone()) {
                    grew = true;
                    if subsets.len() > cap {
                        return Err(MinimizeError::CapExceeded { cap });
                    }
                }
                if transitions.insert((symbol.to_string(), combo, target)) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let names: BTreeMap<BTreeSet<State>, State> = subsets
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), State::new(format!("_d{}", i))))
        .collect();
    BottomUpAutomaton::new(
        a.alphabet().clone(),
        names.values().cloned(),
        subsets
            .iter()
            .filter(|s| s.iter().any(|q| a.finals().contains(q)))
            .map(|s| names[s].clone()),
        transitions.into_iter().map(|(symbol, args, target)| {
            Transition::new(
                symbol,
                args.iter().map(|s| names[s].clone()).collect(),
                names[&target].clone(),
            )
        }),
    )
    .map_err(MinimizeError::from)
}

fn tuple_combos(pool: &[BTreeSet<State>], rank: usize) -> Vec<Vec<BTreeSet<State>>> {
    if rank == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for head in pool {
        for rest in tuple_combos(pool, rank - 1) {
            let mut combo = Vec::with_capacity(rank);
            combo.push(head.clone());
            combo.extend(rest);
            out.push(combo);
        }
    }
    out
}

/// Minimizes a deterministic bottom-up automaton: trim, complete with a
/// virtual sink, refine the {final, nonfinal} partition by one-position
/// distinguishability to a fixpoint, drop the sink's class, and name every
/// class after the member state with the smallest accepted tree.
pub fn minimize(a: &BottomUpAutomaton) -> Result<MinimalDba, MinimizeError> {
    if !a.is_deterministic() {
        return Err(MinimizeError::NotDeterministic);
    }
    let trimmed = trim(a);
    if trimmed.states().is_empty() {
        return Ok(MinimalDba {
            automaton: trimmed,
            certified: true,
        });
    }

    let states: Vec<State> = trimmed.states().iter().cloned().collect();
    let index: BTreeMap<&State, usize> = states.iter().enumerate().map(|(i, q)| (q, i)).collect();

    // The completion sink is kept virtual: it sits in the nonfinal block
    // and its signature is always empty.
    let mut block: Vec<usize> = states
        .iter()
        .map(|q| usize::from(!trimmed.finals().contains(q)))
        .collect();
    let mut sink_block = 1;

    loop {
        // Signature entry: transition context seen from one argument
        // position, with the target's block. Entries leading to the sink's
        // block are dropped, which makes a missing transition and a
        // transition into the dead class indistinguishable, as they are.
        type Entry = (String, usize, Vec<State>, usize);
        let mut signatures: Vec<BTreeSet<Entry>> = vec![BTreeSet::new(); states.len()];
        for t in trimmed.transitions() {
            let target_block = block[index[&t.target]];
            if target_block == sink_block {
                continue;
            }
            for (pos, q) in t.args.iter().enumerate() {
                let mut others = t.args.clone();
                others.remove(pos);
                signatures[index[q]].insert((t.symbol.clone(), pos, others, target_block));
            }
        }

        let mut renumber: BTreeMap<(usize, &BTreeSet<Entry>), usize> = BTreeMap::new();
        let empty = BTreeSet::new();
        let mut next_block = vec![0usize; states.len()];
        for i in 0..states.len() {
            let key = (block[i], &signatures[i]);
            let fresh = renumber.len();
            next_block[i] = *renumber.entry(key).or_insert(fresh);
        }
        let fresh = renumber.len();
        let next_sink_block = *renumber.entry((sink_block, &empty)).or_insert(fresh);

        // Each round refines the previous partition, so an unchanged block
        // count means the fixpoint is reached.
        let old_count = block
            .iter()
            .chain(std::iter::once(&sink_block))
            .collect::<BTreeSet<_>>()
            .len();
        let stable = renumber.len() == old_count;
        block = next_block;
        sink_block = next_sink_block;
        if stable {
            break;
        }
    }

    // Drop the dead class. After trimming no real state can share the
    // sink's block, but the construction deletes rather than assumes.
    let live: Vec<usize> = (0..states.len())
        .filter(|&i| block[i] != sink_block)
        .collect();

    // Class representative: the member whose smallest accepted tree is
    // least in the term order. This keeps already-minimal automata intact.
    let members = minimal_member_trees(&trimmed);
    let mut rep: BTreeMap<usize, (&RankedTree, &State)> = BTreeMap::new();
    for &i in &live {
        let q = &states[i];
        let tree = &members[q];
        match rep.get(&block[i]) {
            Some((best, best_state))
                if (*best, *best_state) <= (tree, q) => {}
            _ => {
                rep.insert(block[i], (tree, q));
            }
        }
    }
    let name_of = |i: usize| -> State { rep[&block[i]].1.clone() };

    let mut new_transitions = BTreeSet::new();
    for t in trimmed.transitions() {
        if block[index[&t.target]] == sink_block
            || t.args.iter().any(|q| block[index[q]] == sink_block)
        {
            continue;
        }
        new_transitions.insert(Transition::new(
            t.symbol.clone(),
            t.args.iter().map(|q| name_of(index[q])).collect(),
            name_of(index[&t.target]),
        ));
    }
    let automaton = BottomUpAutomaton::new(
        trimmed.alphabet().clone(),
        live.iter().map(|&i| name_of(i)),
        trimmed
            .finals()
            .iter()
            .filter(|q| block[index[*q]] != sink_block)
            .map(|q| name_of(index[q])),
        new_transitions,
    )?;
    if !automaton.is_deterministic() {
        return Err(MinimizeError::PropertyFailure(
            "quotient is not deterministic".to_string(),
        ));
    }
    Ok(MinimalDba {
        automaton,
        certified: true,
    })
}

/// The smallest accepted tree of every productive state.
pub fn minimal_member_trees(a: &BottomUpAutomaton) -> BTreeMap<State, RankedTree> {
    // Sizes first, then materialize the least tree per state.
    let mut size: BTreeMap<State, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for t in a.transitions() {
            let Some(total) = t
                .args
                .iter()
                .map(|q| size.get(q).copied())
                .try_fold(1usize, |acc, s| s.map(|s| acc + s))
            else {
                continue;
            };
            if size.get(&t.target).map_or(true, |&old| total < old) {
                size.insert(t.target.clone(), total);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    fn build(
        a: &BottomUpAutomaton,
        size: &BTreeMap<State, usize>,
        memo: &mut HashMap<State, RankedTree>,
        q: &State,
    ) -> RankedTree {
        if let Some(hit) = memo.get(q) {
            return hit.clone();
        }
        let target_size = size[q];
        let mut best: Option<RankedTree> = None;
        for t in a.producers_of(q) {
            let Some(total) = t
                .args
                .iter()
                .map(|p| size.get(p).copied())
                .try_fold(1usize, |acc, s| s.map(|s| acc + s))
            else {
                continue;
            };
            if total != target_size {
                continue;
            }
            let candidate = RankedTree::new(
                t.symbol.clone(),
                t.args.iter().map(|p| build(a, size, memo, p)).collect(),
            );
            if best.as_ref().map_or(true, |b| candidate < *b) {
                best = Some(candidate);
            }
        }
        let tree = best.expect("state has a recorded size, so some producer realizes it");
        memo.insert(q.clone(), tree.clone());
        tree
    }

    let mut memo = HashMap::new();
    let mut out = BTreeMap::new();
    for q in a.states() {
        if size.contains_key(q) {
            out.insert(q.clone(), build(a, &size, &mut memo, q));
        }
    }
    out
}

/// For every state, a context that an accepting run completes it with.
fn accepting_contexts(
    a: &BottomUpAutomaton,
    members: &BTreeMap<State, RankedTree>,
) -> BTreeMap<State, Context> {
    let mut contexts: BTreeMap<State, Context> = BTreeMap::new();
    for q in a.finals() {
        contexts.insert(q.clone(), Context::hole());
    }
    loop {
        let mut grew = false;
        for t in a.transitions() {
            let Some(outer) = contexts.get(&t.target).cloned() else {
                continue;
            };
            if !t.args.iter().all(|p| members.contains_key(p)) {
                continue;
            }
            for (j, p) in t.args.iter().enumerate() {
                if contexts.contains_key(p) {
                    continue;
                }
                let children: Vec<RankedTree> = t
                    .args
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        if i == j {
                            RankedTree::leaf(crate::core::HOLE_LABEL)
                        } else {
                            members[r].clone()
                        }
                    })
                    .collect();
                let step = RankedTree::new(t.symbol.clone(), children);
                let composed = outer.apply(&step);
                contexts.insert(
                    p.clone(),
                    Context::new(composed).expect("one hole by construction"),
                );
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    contexts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        anchored_products, choice_chain, eight_trees, fab_alphabet, leaf, node, swap_pair,
    };
    use crate::oracle::{bounded_equivalence, EquivalenceVerdict};

    fn st(name: &str) -> State {
        State::new(name)
    }

    #[test]
    fn trim_keeps_minimal_automaton() {
        let a = anchored_products();
        assert_eq!(trim(&a), a);
    }

    #[test]
    fn trim_drops_unused_state() {
        let a = anchored_products();
        let mut states = a.states().clone();
        states.insert(st("z"));
        let padded = BottomUpAutomaton::new(
            a.alphabet().clone(),
            states,
            a.finals().clone(),
            a.transitions().clone(),
        )
        .unwrap();
        assert_eq!(trim(&padded), a);
    }

    #[test]
    fn trim_of_unreachable_final_is_empty() {
        let alpha = fab_alphabet();
        let a = BottomUpAutomaton::new(
            alpha,
            [st("q0"), st("qf")],
            [st("qf")],
            [Transition::new("a", vec![], st("q0"))],
        )
        .unwrap();
        let trimmed = trim(&a);
        assert!(trimmed.states().is_empty());
        assert!(trimmed.transitions().is_empty());
    }

    #[test]
    fn determinize_deterministic_input_is_isomorphic() {
        let a = anchored_products();
        let d = determinize(&a, DEFAULT_DETERMINIZE_CAP).unwrap();
        assert!(d.is_deterministic());
        assert_eq!(d.states().len(), a.states().len());
        assert_eq!(d.transitions().len(), a.transitions().len());
        assert_eq!(
            bounded_equivalence(&a, &d, 8).unwrap(),
            EquivalenceVerdict::Equal { bound: 8 }
        );
    }

    #[test]
    fn determinize_merges_nondeterministic_leaf() {
        let alpha = crate::core::RankedAlphabet::new([("a", 0)]).unwrap();
        let a = BottomUpAutomaton::new(
            alpha,
            [st("q1"), st("q2")],
            [st("q1")],
            [
                Transition::new("a", vec![], st("q1")),
                Transition::new("a", vec![], st("q2")),
            ],
        )
        .unwrap();
        let d = determinize(&a, 100).unwrap();
        assert_eq!(d.states().len(), 1);
        assert_eq!(d.finals().len(), 1);
        assert!(d.accepts(&leaf("a")).unwrap());
    }

    #[test]
    fn determinize_cap_guard() {
        let a = anchored_products();
        assert!(matches!(
            determinize(&a, 2),
            Err(MinimizeError::CapExceeded { cap: 2 })
        ));
    }

    #[test]
    fn minimize_rejects_nondeterministic_input() {
        let alpha = crate::core::RankedAlphabet::new([("a", 0)]).unwrap();
        let a = BottomUpAutomaton::new(
            alpha,
            [st("q1"), st("q2")],
            [st("q1")],
            [
                Transition::new("a", vec![], st("q1")),
                Transition::new("a", vec![], st("q2")),
            ],
        )
        .unwrap();
        assert!(matches!(
            minimize(&a),
            Err(MinimizeError::NotDeterministic)
        ));
    }

    #[test]
    fn minimize_merges_split_final_states() {
        // swap_pair with its final class split in two; minimization folds
        // them back and keeps the representative with the least member.
        let alpha = fab_alphabet();
        let a = BottomUpAutomaton::new(
            alpha,
            ["qa", "qb", "qf1", "qf2"].map(st),
            ["qf1", "qf2"].map(st),
            [
                Transition::new("a", vec![], st("qa")),
                Transition::new("b", vec![], st("qb")),
                Transition::new("f", vec![st("qa"), st("qb")], st("qf1")),
                Transition::new("f", vec![st("qb"), st("qa")], st("qf2")),
            ],
        )
        .unwrap();
        let m = minimize(&a).unwrap();
        assert_eq!(m.automaton().states().len(), 3);
        assert_eq!(
            m.automaton().states().iter().cloned().collect::<Vec<_>>(),
            ["qa", "qb", "qf1"].map(st).to_vec()
        );
        assert_eq!(
            bounded_equivalence(m.automaton(), &swap_pair(), 5).unwrap(),
            EquivalenceVerdict::Equal { bound: 5 }
        );
    }

    #[test]
    fn minimize_merges_duplicate_leaf_class() {
        // A duplicate of qa reached through a second leaf symbol merges
        // into qa, whose member tree is smaller.
        let alpha = crate::core::RankedAlphabet::new([("f", 2), ("a", 0), ("b", 0), ("c", 0)])
            .unwrap();
        let a = BottomUpAutomaton::new(
            alpha,
            ["qa", "qa'", "qb", "qf"].map(st),
            [st("qf")],
            [
                Transition::new("a", vec![], st("qa")),
                Transition::new("c", vec![], st("qa'")),
                Transition::new("b", vec![], st("qb")),
                Transition::new("f", vec![st("qa"), st("qb")], st("qf")),
                Transition::new("f", vec![st("qb"), st("qa")], st("qf")),
                Transition::new("f", vec![st("qa'"), st("qb")], st("qf")),
                Transition::new("f", vec![st("qb"), st("qa'")], st("qf")),
            ],
        )
        .unwrap();
        let m = minimize(&a).unwrap();
        assert_eq!(m.automaton().states().len(), 3);
        assert!(m.automaton().states().contains(&st("qa")));
        assert!(!m.automaton().states().contains(&st("qa'")));
    }

    #[test]
    fn minimize_leaves_eight_trees_unchanged() {
        let a = eight_trees();
        let m = minimize(&a).unwrap();
        assert_eq!(m.automaton(), &a);
    }

    #[test]
    fn minimize_of_choice_chain_has_expected_state_count() {
        for m in 1..=5 {
            let a = choice_chain(m);
            let minimized = minimize(&a).unwrap();
            assert_eq!(minimized.automaton().states().len(), m + 4);
            assert_eq!(minimized.automaton(), &a);
        }
    }

    #[test]
    fn minimize_empty_language_has_no_states() {
        let alpha = fab_alphabet();
        let a = BottomUpAutomaton::new(
            alpha,
            [st("q0")],
            [],
            [Transition::new("a", vec![], st("q0"))],
        )
        .unwrap();
        let m = minimize(&a).unwrap();
        assert!(m.automaton().states().is_empty());
    }

    #[test]
    fn minimize_is_idempotent_on_fixtures() {
        for a in [swap_pair(), anchored_products(), eight_trees()] {
            let once = minimize(&a).unwrap();
            let twice = minimize(once.automaton()).unwrap();
            assert_eq!(once.automaton(), twice.automaton());
        }
    }

    #[test]
    fn member_trees_of_anchored_products() {
        let m = minimize(&anchored_products()).unwrap();
        let members = m.member_trees();
        assert_eq!(members[&st("qa")], leaf("a"));
        assert_eq!(members[&st("q")], node("f", vec![leaf("a"), leaf("a")]));
        assert_eq!(
            members[&st("qf")],
            node("f", vec![leaf("a"), node("f", vec![leaf("a"), leaf("a")])])
        );
    }

    #[test]
    fn property_witnesses_cover_every_transition() {
        let m = minimize(&eight_trees()).unwrap();
        let witnesses = m.verify_properties().unwrap();
        assert_eq!(
            witnesses.transition_witnesses.len(),
            m.automaton().transitions().len()
        );
        assert_eq!(witnesses.member_trees.len(), m.automaton().states().len());
    }
}
