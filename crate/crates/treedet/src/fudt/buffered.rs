//! The buffered automaton: the minimal automaton with every state enriched
//! by an ordered list of violation-tree positions.
//!
//! Buffers pin each application of a violating transition to one violation
//! node. Leaves start with empty buffers; a violating transition either
//! guesses a leaf position of its group's symbol (when the child buffers
//! are empty) or closes the complete child list of a node carrying its
//! symbol. Non-violating transitions concatenate child buffers, which must
//! share one depth and be strictly increasing. The finals carry the
//! complete level-one list.

use std::collections::{BTreeMap, BTreeSet};

use crate::core::{Address, BottomUpAutomaton, State, Transition};
use crate::minimize::MinimalDba;

use super::grammar::ViolationGrammar;
use super::violation_tree::ViolationTree;
use super::FudtError;

pub type Buffer = Vec<Address>;

/// A bottom-up automaton whose states are pairs of an original state and a
/// buffer, named `q@[u1,u2]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferedAutomaton {
    automaton: BottomUpAutomaton,
    origins: BTreeMap<State, (State, Buffer)>,
}

impl BufferedAutomaton {
    pub fn automaton(&self) -> &BottomUpAutomaton {
        &self.automaton
    }

    pub fn origin(&self, state: &State) -> Option<&(State, Buffer)> {
        self.origins.get(state)
    }

    pub fn state_for(&self, original: &State, buffer: &Buffer) -> State {
        buffered_name(original, buffer)
    }
}

pub fn buffered_name(original: &State, buffer: &Buffer) -> State {
    let addrs: Vec<String> = buffer.iter().map(Address::to_string).collect();
    State::new(format!("{}@[{}]", original, addrs.join(",")))
}

fn same_depth_and_increasing(positions: &[Address]) -> bool {
    if positions.is_empty() {
        return true;
    }
    let depth = positions[0].depth();
    positions.iter().all(|p| p.depth() == depth)
        && positions.windows(2).all(|w| w[0] < w[1])
}

/// Builds the buffered automaton of `m` for one violation tree.
pub fn buffered_automaton(
    m: &MinimalDba,
    grammar: &ViolationGrammar,
    vt: &ViolationTree,
) -> Result<BufferedAutomaton, FudtError> {
    let a = m.automaton();
    // Buffers known per original state, grown to a fixpoint.
    let mut known: BTreeMap<State, BTreeSet<Buffer>> = BTreeMap::new();
    let mut transitions: BTreeSet<(String, Vec<(State, Buffer)>, (State, Buffer))> =
        BTreeSet::new();

    loop {
        let mut grew = false;
        for t in a.transitions() {
            let violating = grammar.violation_index(&t.symbol, &t.target);
            let pools: Vec<Vec<Buffer>> = t
                .args
                .iter()
                .map(|q| {
                    known
                        .get(q)
                        .map(|s| s.iter().cloned().collect())
                        .unwrap_or_default()
                })
                .collect();
            if t.args.is_empty() {
                grew |= emit(
                    &mut known,
                    &mut transitions,
                    t,
                    Vec::new(),
                    targets_for(violating, vt, &[]),
                );
                continue;
            }
            if pools.iter().any(Vec::is_empty) {
                continue;
            }
            for combo in cartesian(&pools) {
                let positions: Vec<Address> =
                    combo.iter().flat_map(|b| b.iter().cloned()).collect();
                let args: Vec<(State, Buffer)> = t
                    .args
                    .iter()
                    .cloned()
                    .zip(combo.iter().cloned())
                    .collect();
                grew |= emit(
                    &mut known,
                    &mut transitions,
                    t,
                    args,
                    targets_for(violating, vt, &positions),
                );
            }
        }
        if !grew {
            break;
        }
    }

    let mut states: BTreeSet<State> = BTreeSet::new();
    let mut origins: BTreeMap<State, (State, Buffer)> = BTreeMap::new();
    for (q, buffers) in &known {
        for buffer in buffers {
            let name = buffered_name(q, buffer);
            origins.insert(name.clone(), (q.clone(), buffer.clone()));
            states.insert(name);
        }
    }
    let level_one: Buffer = vt.level_one();
    let finals: BTreeSet<State> = a
        .finals()
        .iter()
        .map(|q| buffered_name(q, &level_one))
        .filter(|name| states.contains(name))
        .collect();
    let automaton = BottomUpAutomaton::new(
        a.alphabet().clone(),
        states,
        finals,
        transitions.into_iter().map(|(symbol, args, target)| {
            Transition::new(
                symbol,
                args.iter().map(|(q, b)| buffered_name(q, b)).collect(),
                buffered_name(&target.0, &target.1),
            )
        }),
    )?;
    Ok(BufferedAutomaton { automaton, origins })
}

/// The buffers a transition may produce from child positions `positions`.
fn targets_for(
    violating: Option<usize>,
    vt: &ViolationTree,
    positions: &[Address],
) -> Vec<Buffer> {
    match violating {
        None => {
            if positions.is_empty() {
                vec![Vec::new()]
            } else if same_depth_and_increasing(positions) {
                vec![positions.to_vec()]
            } else {
                Vec::new()
            }
        }
        Some(symbol) => {
            if positions.is_empty() {
                // Guess a leaf position of this group's symbol.
                vt.leaf_positions_of(symbol)
                    .into_iter()
                    .map(|u| vec![u])
                    .collect()
            } else {
                if !same_depth_and_increasing(positions) {
                    return Vec::new();
                }
                let Some(parent) = positions[0].parent() else {
                    return Vec::new();
                };
                if vt.label_at(&parent) != Some(symbol) {
                    return Vec::new();
                }
                let complete: Vec<Address> = (1..=vt.child_count_at(&parent).unwrap_or(0))
                    .map(|i| parent.child(i))
                    .collect();
                if positions == complete.as_slice() {
                    vec![vec![parent]]
                } else {
                    Vec::new()
                }
            }
        }
    }
}

#[allow(clippy::type_complexity)]
fn emit(
    known: &mut BTreeMap<State, BTreeSet<Buffer>>,
    transitions: &mut BTreeSet<(String, Vec<(State, Buffer)>, (State, Buffer))>,
    t: &Transition,
    args: Vec<(State, Buffer)>,
    buffers: Vec<Buffer>,
) -> bool {
    let mut grew = false;
    for buffer in buffers {
        grew |= known
            .entry(t.target.clone())
            .or_default()
            .insert(buffer.clone());
        grew |= transitions.insert((
            t.symbol.clone(),
            args.clone(),
            (t.target.clone(), buffer),
        ));
    }
    grew
}

fn cartesian<T: Clone>(pools: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for pool in pools {
        out = out
            .iter()
            .flat_map(|prefix| {
                pool.iter().map(move |item| {
                    let mut next = prefix.clone();
                    next.push(item.clone());
                    next
                })
            })
            .collect();
    }
    out
}
