//! Conflux elimination: rewrites a violation-free automaton into an
//! equivalent one without conflux groups, whose reversal is then a
//! deterministic top-down automaton.
//!
//! Elimination of one group replaces its transitions by a single substitute
//! over fresh states and copies every producer of the group's argument
//! states onto the fresh states. The order matters: the group is removed
//! and the substitute inserted before adapters are collected, so a group
//! member feeding its own target spawns the substitute's adapter copy.
//!
//! Every step is followed by a bounded language-equivalence assertion.
//! Eliminations applied to non-minimal intermediate automata can leak
//! mixtures into the language; such steps abort with the distinguishing
//! tree instead of proceeding.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::analyze::{conflux_groups_of, group_is_violating, ConfluxGroup};
use crate::core::{
    BottomUpAutomaton, CoreError, RankedTree, State, TopDownAutomaton, Transition,
};
use crate::minimize::MinimalDba;
use crate::oracle::{bounded_equivalence, EquivalenceVerdict};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("group f={symbol}, target={target} is not a conflux group of the automaton")]
    StaleGroup { symbol: String, target: State },
    #[error("automaton has violating conflux groups; elimination would change the language")]
    ViolationPresent,
    #[error("{count} conflux groups remain; eliminate them before reversing")]
    ConfluxRemains { count: usize },
    #[error("elimination step changed the bounded language; first differing tree: {witness}")]
    EquivalenceBroken { witness: RankedTree, step: String },
    #[error("multiple final states could not be folded into one initial state")]
    RootResolutionFailed,
    #[error("internal guard tripped: {0}")]
    GuardTripped(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// One elimination step: the removed group, the fresh per-position states,
/// the substitute transition, and the adapter copies.
#[derive(Clone, Debug)]
pub struct EliminationStep {
    pub group: ConfluxGroup,
    pub fresh: Vec<State>,
    pub substitute: Transition,
    pub adapters: Vec<Transition>,
    /// Bound at which the step was verified language-preserving.
    pub verified_bound: usize,
}

#[derive(Clone, Debug, Default)]
pub struct EliminationTrace {
    pub steps: Vec<EliminationStep>,
    /// Steps spent on the groups present in the input.
    pub phase1_steps: usize,
    /// Conflux groups present when the cleanup phase started.
    pub phase2_initial_groups: usize,
}

impl EliminationTrace {
    pub fn phase2_steps(&self) -> usize {
        self.steps.len() - self.phase1_steps
    }
}

/// Size bound for the per-step language preservation check.
pub const DEFAULT_STEP_EQUIVALENCE_BOUND: usize = 10;

fn fresh_states(taken: &BTreeSet<State>, count: usize, counter: &mut usize) -> Vec<State> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let candidate = State::new(format!("_p{}", counter));
        *counter += 1;
        if !taken.contains(&candidate) && !out.contains(&candidate) {
            out.push(candidate);
        }
    }
    out
}

/// Removes one conflux group from `a`, introducing fresh states named with
/// the reserved `_p` prefix starting at `counter`.
pub fn eliminate_conflux_group(
    a: &BottomUpAutomaton,
    group: &ConfluxGroup,
    counter: &mut usize,
) -> Result<(BottomUpAutomaton, EliminationStep), ConstructError> {
    let current: BTreeSet<Vec<State>> = a
        .transitions()
        .iter()
        .filter(|t| t.symbol == group.symbol && t.target == group.target)
        .map(|t| t.args.clone())
        .collect();
    if current != group.tuples || group.tuples.len() < 2 {
        return Err(ConstructError::StaleGroup {
            symbol: group.symbol.clone(),
            target: group.target.clone(),
        });
    }
    let rank = group.rank();
    let fresh = fresh_states(a.states(), rank, counter);

    // Remove the group, then insert the substitute; adapters are collected
    // from the resulting transition set.
    let mut transitions: BTreeSet<Transition> = a
        .transitions()
        .iter()
        .filter(|t| !(t.symbol == group.symbol && t.target == group.target))
        .cloned()
        .collect();
    let substitute = Transition::new(group.symbol.clone(), fresh.clone(), group.target.clone());
    transitions.insert(substitute.clone());

    let mut adapters = Vec::new();
    let snapshot: Vec<Transition> = transitions.iter().cloned().collect();
    for (j, p_j) in fresh.iter().enumerate() {
        let feeders: BTreeSet<&State> = group.tuples.iter().map(|tuple| &tuple[j]).collect();
        for t in &snapshot {
            if feeders.contains(&t.target) {
                let adapter = Transition::new(t.symbol.clone(), t.args.clone(), p_j.clone());
                adapters.push(adapter);
            }
        }
    }
    transitions.extend(adapters.iter().cloned());

    let mut states = a.states().clone();
    states.extend(fresh.iter().cloned());
    let next = BottomUpAutomaton::new(
        a.alphabet().clone(),
        states,
        a.finals().clone(),
        transitions,
    )?;
    Ok((
        next,
        EliminationStep {
            group: group.clone(),
            fresh,
            substitute,
            adapters,
            verified_bound: 0,
        },
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct EliminationOptions {
    pub require_violation_free: bool,
    /// Tree-size bound for the per-step equivalence assertion.
    pub equivalence_bound: usize,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        EliminationOptions {
            require_violation_free: true,
            equivalence_bound: DEFAULT_STEP_EQUIVALENCE_BOUND,
        }
    }
}

/// Eliminates all conflux groups: first every group present in the input,
/// then the copies those eliminations spawned, whose number must strictly
/// decrease from step to step.
pub fn eliminate_all(
    a: &BottomUpAutomaton,
    options: EliminationOptions,
) -> Result<(BottomUpAutomaton, EliminationTrace), ConstructError> {
    let originals = conflux_groups_of(a);
    if options.require_violation_free && originals.iter().any(group_is_violating) {
        return Err(ConstructError::ViolationPresent);
    }

    let mut current = a.clone();
    let mut counter = 1usize;
    let mut trace = EliminationTrace::default();

    for original in &originals {
        // Earlier eliminations never touch the member set of a pending
        // original group; re-reading it keeps the step honest anyway.
        let tuples: BTreeSet<Vec<State>> = current
            .transitions()
            .iter()
            .filter(|t| t.symbol == original.symbol && t.target == original.target)
            .map(|t| t.args.clone())
            .collect();
        let group = ConfluxGroup {
            symbol: original.symbol.clone(),
            target: original.target.clone(),
            tuples,
        };
        current = step_checked(current, &group, &mut counter, options, &mut trace)?;
        trace.phase1_steps += 1;
    }

    trace.phase2_initial_groups = conflux_groups_of(&current).len();
    let mut remaining = trace.phase2_initial_groups;
    loop {
        let groups = conflux_groups_of(&current);
        if groups.is_empty() {
            break;
        }
        if trace.phase2_steps() > 0 && groups.len() >= remaining {
            return Err(ConstructError::GuardTripped(format!(
                "cleanup phase did not shrink: {} groups after {} steps",
                groups.len(),
                trace.phase2_steps()
            )));
        }
        remaining = groups.len();
        let group = groups.into_iter().next().unwrap();
        current = step_checked(current, &group, &mut counter, options, &mut trace)?;
    }
    Ok((current, trace))
}

fn step_checked(
    before: BottomUpAutomaton,
    group: &ConfluxGroup,
    counter: &mut usize,
    options: EliminationOptions,
    trace: &mut EliminationTrace,
) -> Result<BottomUpAutomaton, ConstructError> {
    let (after, mut step) = eliminate_conflux_group(&before, group, counter)?;
    if options.equivalence_bound > 0 {
        match bounded_equivalence(&before, &after, options.equivalence_bound)? {
            EquivalenceVerdict::Equal { bound } => step.verified_bound = bound,
            EquivalenceVerdict::Distinguished(witness) => {
                return Err(ConstructError::EquivalenceBroken {
                    witness,
                    step: format!("eliminating {}-group into {}", group.symbol, group.target),
                })
            }
        }
    }
    trace.steps.push(step);
    Ok(after)
}

/// Reverses a conflux-free automaton into a deterministic top-down one.
///
/// An automaton with several final states is first normalized: a fresh
/// state duplicates every transition into a final state and becomes the
/// only final. The conflux groups this introduces are eliminated like any
/// other; if one of them is violating, the finals cannot be folded and the
/// language has no deterministic top-down automaton.
pub fn to_dta(
    a: &BottomUpAutomaton,
    equivalence_bound: usize,
) -> Result<TopDownAutomaton, ConstructError> {
    let groups = conflux_groups_of(a);
    if !groups.is_empty() {
        return Err(ConstructError::ConfluxRemains {
            count: groups.len(),
        });
    }
    match a.finals().len() {
        0 => {
            // Empty language: a single initial state with no rules.
            let q = State::new("_q0");
            Ok(TopDownAutomaton::new(
                a.alphabet().clone(),
                [q.clone()],
                [q],
                [],
            )?)
        }
        1 => {
            let ta = a.correspond();
            debug_assert!(ta.is_deterministic());
            Ok(ta)
        }
        _ => {
            let root = unique_root_state(a.states());
            let mut states = a.states().clone();
            states.insert(root.clone());
            let mut transitions = a.transitions().clone();
            for t in a.transitions() {
                if a.finals().contains(&t.target) {
                    transitions.insert(Transition::new(
                        t.symbol.clone(),
                        t.args.clone(),
                        root.clone(),
                    ));
                }
            }
            let normalized = BottomUpAutomaton::new(
                a.alphabet().clone(),
                states,
                [root],
                transitions,
            )?;
            if equivalence_bound > 0 {
                if let EquivalenceVerdict::Distinguished(witness) =
                    bounded_equivalence(a, &normalized, equivalence_bound)?
                {
                    return Err(ConstructError::EquivalenceBroken {
                        witness,
                        step: "folding final states".to_string(),
                    });
                }
            }
            let (clean, _trace) = eliminate_all(
                &normalized,
                EliminationOptions {
                    require_violation_free: true,
                    equivalence_bound,
                },
            )
            .map_err(|e| match e {
                ConstructError::ViolationPresent => ConstructError::RootResolutionFailed,
                other => other,
            })?;
            let ta = clean.correspond();
            if !ta.is_deterministic() {
                return Err(ConstructError::GuardTripped(
                    "reversal of a conflux-free automaton was not deterministic".to_string(),
                ));
            }
            Ok(ta)
        }
    }
}

fn unique_root_state(taken: &BTreeSet<State>) -> State {
    let mut name = "_root".to_string();
    let mut i = 0;
    while taken.contains(&State::new(name.clone())) {
        i += 1;
        name = format!("_root{}", i);
    }
    State::new(name)
}

/// Full pipeline from a minimal automaton to a deterministic top-down
/// automaton: eliminate all conflux groups, then reverse.
pub fn dta_pipeline(
    m: &MinimalDba,
    equivalence_bound: usize,
) -> Result<(TopDownAutomaton, EliminationTrace), ConstructError> {
    let (clean, trace) = eliminate_all(
        m.automaton(),
        EliminationOptions {
            require_violation_free: true,
            equivalence_bound,
        },
    )?;
    let dta = to_dta(&clean, equivalence_bound)?;
    Ok((dta, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::conflux_groups;
    use crate::core::is_top_down_deterministic;
    use crate::fixtures::{
        anchored_products, layered_products, leaf_or_pair, mixed_depth_pair, singleton_pair,
        swap_pair,
    };
    use crate::minimize::minimize;
    use crate::oracle::{bounded_equivalence, enumerate_accepted, EquivalenceVerdict};

    fn st(name: &str) -> State {
        State::new(name)
    }

    fn tr(symbol: &str, args: &[&str], target: &str) -> Transition {
        Transition::new(symbol, args.iter().map(|a| st(a)).collect(), st(target))
    }

    #[test]
    fn eliminating_the_anchored_products_group_matches_the_known_result() {
        let a = anchored_products();
        let m = minimize(&a).unwrap();
        let group = conflux_groups(&m).into_iter().next().unwrap();
        let mut counter = 1;
        let (next, step) = eliminate_conflux_group(m.automaton(), &group, &mut counter).unwrap();

        assert_eq!(step.fresh, vec![st("_p1"), st("_p2")]);
        assert_eq!(step.substitute, tr("f", &["_p1", "_p2"], "q"));
        let expected: BTreeSet<Transition> = [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["_p1", "_p2"], "q"),
            tr("f", &["qa", "q"], "qf"),
            tr("a", &[], "_p1"),
            tr("b", &[], "_p1"),
            tr("a", &[], "_p2"),
            tr("b", &[], "_p2"),
        ]
        .into_iter()
        .collect();
        assert_eq!(next.transitions(), &expected);
        assert_eq!(next.states().len(), a.states().len() + 2);
    }

    #[test]
    fn self_feeding_group_spawns_the_substitute_adapter() {
        // A group member with the group target among its arguments: the
        // substitute transition itself must be copied onto the fresh state.
        let alpha = crate::core::RankedAlphabet::new([("f", 2), ("a", 0), ("b", 0)]).unwrap();
        let a = BottomUpAutomaton::new(
            alpha,
            ["qa", "q'", "q"].map(st),
            [st("q")],
            [
                tr("a", &[], "qa"),
                tr("b", &[], "q'"),
                tr("f", &["q'", "qa"], "q"),
                tr("f", &["q'", "q"], "q"),
            ],
        )
        .unwrap();
        let group = conflux_groups_of(&a).into_iter().next().unwrap();
        let mut counter = 1;
        let (next, step) = eliminate_conflux_group(&a, &group, &mut counter).unwrap();
        assert!(step
            .adapters
            .contains(&tr("f", &["_p1", "_p2"], "_p2")));
        assert!(next.transitions().contains(&tr("f", &["_p1", "_p2"], "_p2")));
    }

    #[test]
    fn adapters_copy_only_producers_of_argument_states() {
        let a = anchored_products();
        let m = minimize(&a).unwrap();
        let group = conflux_groups(&m).into_iter().next().unwrap();
        let mut counter = 1;
        let (_, step) = eliminate_conflux_group(m.automaton(), &group, &mut counter).unwrap();
        // qb is produced only by its leaf transition, so the sole adapter
        // through qb per position is that leaf copy.
        let qb_adapters: Vec<&Transition> = step
            .adapters
            .iter()
            .filter(|t| t.symbol == "b")
            .collect();
        assert_eq!(qb_adapters.len(), 2);
    }

    #[test]
    fn stale_group_is_rejected() {
        let a = anchored_products();
        let group = ConfluxGroup {
            symbol: "f".to_string(),
            target: st("qf"),
            tuples: [vec![st("qa"), st("q")], vec![st("qb"), st("q")]]
                .into_iter()
                .collect(),
        };
        let mut counter = 1;
        assert!(matches!(
            eliminate_conflux_group(&a, &group, &mut counter),
            Err(ConstructError::StaleGroup { .. })
        ));
    }

    #[test]
    fn eliminate_all_on_conflux_free_input_is_identity() {
        let a = singleton_pair();
        let (out, trace) = eliminate_all(&a, EliminationOptions::default()).unwrap();
        assert_eq!(out, a);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn eliminate_all_keeps_language_of_anchored_products() {
        let m = minimize(&anchored_products()).unwrap();
        let (out, trace) = eliminate_all(m.automaton(), EliminationOptions::default()).unwrap();
        assert!(conflux_groups_of(&out).is_empty());
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(
            bounded_equivalence(m.automaton(), &out, 10).unwrap(),
            EquivalenceVerdict::Equal { bound: 10 }
        );
    }

    #[test]
    fn eliminate_all_runs_a_cleanup_phase_on_layered_products() {
        // The upper group is eliminated first and copies the lower group
        // onto a fresh state; the copy goes in the second phase.
        let m = minimize(&layered_products()).unwrap();
        let (out, trace) = eliminate_all(m.automaton(), EliminationOptions::default()).unwrap();
        assert!(conflux_groups_of(&out).is_empty());
        assert_eq!(trace.phase1_steps, 2);
        assert!(trace.phase2_steps() >= 1);
        assert!(trace.phase2_steps() <= trace.phase2_initial_groups);
        assert_eq!(
            bounded_equivalence(m.automaton(), &out, 10).unwrap(),
            EquivalenceVerdict::Equal { bound: 10 }
        );
    }

    #[test]
    fn eliminate_all_refuses_violations_when_asked() {
        let m = minimize(&swap_pair()).unwrap();
        assert!(matches!(
            eliminate_all(m.automaton(), EliminationOptions::default()),
            Err(ConstructError::ViolationPresent)
        ));
    }

    #[test]
    fn elimination_guard_catches_the_mixture_leak() {
        let m = minimize(&mixed_depth_pair()).unwrap();
        let err = eliminate_all(m.automaton(), EliminationOptions::default()).unwrap_err();
        match err {
            ConstructError::EquivalenceBroken { witness, .. } => {
                assert!(!mixed_depth_pair().accepts(&witness).unwrap());
            }
            other => panic!("expected equivalence break, got {:?}", other),
        }
    }

    #[test]
    fn fresh_states_only_feed_their_substitute() {
        let m = minimize(&layered_products()).unwrap();
        let (out, trace) = eliminate_all(m.automaton(), EliminationOptions::default()).unwrap();
        for step in &trace.steps {
            for (j, p) in step.fresh.iter().enumerate() {
                for t in out.transitions() {
                    if let Some(pos) = t.args.iter().position(|q| q == p) {
                        assert_eq!(t.symbol, step.group.symbol);
                        assert_eq!(pos, j);
                        assert_eq!(t.args, step.substitute.args);
                    }
                }
            }
        }
    }

    #[test]
    fn fresh_state_languages_union_their_feeders() {
        let m = minimize(&anchored_products()).unwrap();
        let (out, trace) = eliminate_all(m.automaton(), EliminationOptions::default()).unwrap();
        let step = &trace.steps[0];
        for (j, p) in step.fresh.iter().enumerate() {
            let at_fresh: BTreeSet<RankedTree> =
                enumerate_accepted(&out.with_finals([p.clone()]).unwrap(), 8)
                    .into_iter()
                    .collect();
            let mut union: BTreeSet<RankedTree> = BTreeSet::new();
            for tuple in &step.group.tuples {
                union.extend(enumerate_accepted(
                    &out.with_finals([tuple[j].clone()]).unwrap(),
                    8,
                ));
            }
            assert_eq!(at_fresh, union);
        }
    }

    #[test]
    fn to_dta_of_singleton() {
        let m = minimize(&singleton_pair()).unwrap();
        let (clean, _) = eliminate_all(m.automaton(), EliminationOptions::default()).unwrap();
        let dta = to_dta(&clean, 10).unwrap();
        assert!(is_top_down_deterministic(&dta));
        let rules: Vec<String> = dta.rules().iter().map(|r| r.to_string()).collect();
        assert_eq!(rules, ["qa(a) -> ()", "qb(b) -> ()", "qf(f) -> (qa,qb)"]);
    }

    #[test]
    fn to_dta_rejects_remaining_confluxes() {
        let m = minimize(&swap_pair()).unwrap();
        assert!(matches!(
            to_dta(m.automaton(), 10),
            Err(ConstructError::ConfluxRemains { count: 1 })
        ));
    }

    #[test]
    fn to_dta_folds_compatible_finals() {
        let m = minimize(&leaf_or_pair()).unwrap();
        let dta = to_dta(m.automaton(), 10).unwrap();
        assert!(is_top_down_deterministic(&dta));
        let back = dta.correspond_inv();
        for (tree, expected) in [
            (crate::fixtures::leaf("a"), true),
            (
                crate::fixtures::node(
                    "f",
                    vec![crate::fixtures::leaf("a"), crate::fixtures::leaf("a")],
                ),
                true,
            ),
        ] {
            assert_eq!(back.accepts(&tree).unwrap(), expected);
        }
        assert_eq!(
            bounded_equivalence(&back, &leaf_or_pair(), 9).unwrap(),
            EquivalenceVerdict::Equal { bound: 9 }
        );
    }

    #[test]
    fn pipeline_on_anchored_products_gives_equivalent_dta() {
        let m = minimize(&anchored_products()).unwrap();
        let (dta, _) = dta_pipeline(&m, 10).unwrap();
        assert!(is_top_down_deterministic(&dta));
        assert_eq!(
            bounded_equivalence(&dta.correspond_inv(), m.automaton(), 10).unwrap(),
            EquivalenceVerdict::Equal { bound: 10 }
        );
    }

    #[test]
    fn pipeline_rejects_swap_pair() {
        let m = minimize(&swap_pair()).unwrap();
        assert!(matches!(
            dta_pipeline(&m, 10),
            Err(ConstructError::ViolationPresent)
        ));
    }
}
