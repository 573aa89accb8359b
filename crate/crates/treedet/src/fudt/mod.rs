//! Finite unions of deterministic top-down tree languages: the violation
//! grammar, its finiteness decision, and the decomposition of a qualifying
//! language into deterministic top-down components.

mod buffered;
pub mod grammar;
mod violation_tree;

pub use buffered::{buffered_automaton, buffered_name, Buffer, BufferedAutomaton};
pub use grammar::{
    build_violation_grammar, corresponding_string, enumerate_grammar_language, grammar_is_finite,
    render_string, FinitenessVerdict, GrammarString, GrammarSymbol, InfinitenessWitness,
    Production, RhsItem, ViolationGrammar,
};
pub use violation_tree::{violation_tree_of, ViolationTree};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::analyze::{conflux_groups_of, group_is_violating, minimized};
use crate::construct::{self, ConstructError, EliminationOptions};
use crate::core::{
    Address, BottomUpAutomaton, CoreError, RankedTree, State, TopDownAutomaton,
};
use crate::minimize::{trim, MinimizeError};
use crate::oracle::enumerate_accepted;

#[derive(Debug, Error)]
pub enum FudtError {
    #[error("run is not accepting")]
    RunNotAccepting,
    #[error("malformed grammar string at token {at}")]
    MalformedString { at: usize },
    #[error("grammar language is infinite; cycle through {}", .0.from)]
    InfiniteGrammar(Box<InfinitenessWitness>),
    #[error("language is not a finite union of deterministic top-down languages")]
    NotFiniteUnion(Box<InfinitenessWitness>),
    #[error("decomposition needs {required} components, over the cap of {cap}")]
    ComponentCapExceeded { required: usize, cap: usize },
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

#[derive(Clone, Debug)]
pub enum FudtDecision {
    Yes,
    No(Box<InfinitenessWitness>),
}

impl FudtDecision {
    pub fn is_yes(&self) -> bool {
        matches!(self, FudtDecision::Yes)
    }
}

/// Decides membership in the class of finite unions of deterministic
/// top-down tree languages: minimize, collect violations, build the
/// violation grammar, and test its language for finiteness.
pub fn decide_fudt(
    a: &BottomUpAutomaton,
    determinize_cap: usize,
) -> Result<FudtDecision, FudtError> {
    let m = minimized(a, determinize_cap)?;
    let grammar = build_violation_grammar(&m);
    match grammar_is_finite(&grammar) {
        FinitenessVerdict::Finite => Ok(FudtDecision::Yes),
        FinitenessVerdict::Infinite(witness) => Ok(FudtDecision::No(Box::new(witness))),
    }
}

/// Where a component came from: the grammar string, the transition chosen
/// for every violation node, and any further split decisions.
#[derive(Clone, Debug)]
pub struct ComponentProvenance {
    pub string_index: usize,
    pub string: GrammarString,
    pub choices: BTreeMap<Address, Vec<State>>,
    pub splits: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub components: Vec<TopDownAutomaton>,
    pub provenance: Vec<ComponentProvenance>,
    /// Components dropped because an earlier string already produced the
    /// same bounded language.
    pub deduplicated: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub determinize_cap: usize,
    pub component_cap: usize,
    /// Bound for the per-step equivalence assertions during cleanup.
    pub equivalence_bound: usize,
    /// Bound for the cross-string duplicate fingerprint.
    pub fingerprint_bound: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            determinize_cap: crate::minimize::DEFAULT_DETERMINIZE_CAP,
            component_cap: 4096,
            equivalence_bound: 10,
            fingerprint_bound: 10,
        }
    }
}

/// Decomposes the language into deterministic top-down components: one
/// bundle per grammar string, one component per assignment of group
/// transitions to that string's violation nodes. Leftover conflux groups
/// are eliminated when mixture-closed and split further when not.
pub fn decompose(
    a: &BottomUpAutomaton,
    options: DecomposeOptions,
) -> Result<Decomposition, FudtError> {
    let m = minimized(a, options.determinize_cap)?;
    let grammar = build_violation_grammar(&m);
    if let FinitenessVerdict::Infinite(witness) = grammar_is_finite(&grammar) {
        return Err(FudtError::NotFiniteUnion(Box::new(witness)));
    }
    let strings: Vec<GrammarString> = enumerate_grammar_language(&grammar)?
        .into_iter()
        .collect();

    // Refuse up front when the choice product alone exceeds the cap.
    let mut required: usize = 0;
    for s in &strings {
        let vt = violation_tree_of(s)?;
        let mut per_string: usize = 1;
        for (_, symbol) in vt.positions() {
            per_string = per_string.saturating_mul(grammar.violating_groups[symbol].len());
        }
        required = required.saturating_add(per_string);
    }
    if required > options.component_cap {
        return Err(FudtError::ComponentCapExceeded {
            required,
            cap: options.component_cap,
        });
    }

    let mut components = Vec::new();
    let mut provenance = Vec::new();
    let mut fingerprints: BTreeMap<Vec<RankedTree>, usize> = BTreeMap::new();
    let mut deduplicated = 0usize;

    for (string_index, s) in strings.iter().enumerate() {
        let vt = violation_tree_of(s)?;
        let buffered = buffered_automaton(&m, &grammar, &vt)?;
        let nodes: Vec<(Address, usize)> = vt.positions();

        for choice in choice_functions(&grammar, &nodes) {
            let restricted = restrict(&buffered, &grammar, &choice)?;
            let mut bundle: Vec<(TopDownAutomaton, Vec<String>)> = Vec::new();
            assemble(
                restricted,
                Vec::new(),
                options.equivalence_bound,
                &mut bundle,
            )?;
            for (dta, splits) in bundle {
                if components.len() >= options.component_cap {
                    return Err(FudtError::ComponentCapExceeded {
                        required: components.len() + 1,
                        cap: options.component_cap,
                    });
                }
                let fingerprint =
                    enumerate_accepted(&dta.correspond_inv(), options.fingerprint_bound);
                if !fingerprint.is_empty() {
                    match fingerprints.get(&fingerprint) {
                        Some(&earlier) if earlier != string_index => {
                            deduplicated += 1;
                            continue;
                        }
                        _ => {
                            fingerprints.insert(fingerprint, string_index);
                        }
                    }
                }
                components.push(dta);
                provenance.push(ComponentProvenance {
                    string_index,
                    string: s.clone(),
                    choices: choice.clone(),
                    splits,
                });
            }
        }
    }
    Ok(Decomposition {
        components,
        provenance,
        deduplicated,
    })
}

/// All assignments of one group tuple to every violation node, in
/// lexicographic order of (node address, tuple).
fn choice_functions(
    grammar: &ViolationGrammar,
    nodes: &[(Address, usize)],
) -> Vec<BTreeMap<Address, Vec<State>>> {
    let mut out: Vec<BTreeMap<Address, Vec<State>>> = vec![BTreeMap::new()];
    for (at, symbol) in nodes {
        let tuples: Vec<Vec<State>> = grammar.violating_groups[*symbol]
            .tuples
            .iter()
            .cloned()
            .collect();
        out = out
            .iter()
            .flat_map(|partial| {
                tuples.iter().map(move |tuple| {
                    let mut next = partial.clone();
                    next.insert(at.clone(), tuple.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// Keeps, for every violation node, only the chosen transition of the
/// node's buffered group copy.
fn restrict(
    buffered: &BufferedAutomaton,
    grammar: &ViolationGrammar,
    choice: &BTreeMap<Address, Vec<State>>,
) -> Result<BottomUpAutomaton, FudtError> {
    let a = buffered.automaton();
    let keep = a.transitions().iter().filter(|t| {
        let (orig_target, buffer) = buffered
            .origin(&t.target)
            .expect("every buffered state has an origin");
        if grammar
            .violation_index(&t.symbol, orig_target)
            .is_none()
        {
            return true;
        }
        debug_assert_eq!(buffer.len(), 1, "violating copies carry one position");
        let node = &buffer[0];
        let original_args: Vec<State> = t
            .args
            .iter()
            .map(|arg| buffered.origin(arg).expect("origin").0.clone())
            .collect();
        choice.get(node) == Some(&original_args)
    });
    Ok(BottomUpAutomaton::new(
        a.alphabet().clone(),
        a.states().clone(),
        a.finals().clone(),
        keep.cloned(),
    )?)
}

/// Turns one restricted automaton into deterministic top-down components:
/// trim, split multiple finals apart, split any still-violating group per
/// transition, then eliminate the mixture-closed leftovers and reverse.
fn assemble(
    a: BottomUpAutomaton,
    splits: Vec<String>,
    equivalence_bound: usize,
    out: &mut Vec<(TopDownAutomaton, Vec<String>)>,
) -> Result<(), FudtError> {
    let t = trim(&a);
    if t.finals().is_empty() {
        return Ok(());
    }
    if t.finals().len() >= 2 {
        for q in t.finals().clone() {
            let mut next = splits.clone();
            next.push(format!("final={}", q));
            assemble(t.with_finals([q.clone()])?, next, equivalence_bound, out)?;
        }
        return Ok(());
    }
    let groups = conflux_groups_of(&t);
    if let Some(group) = groups.iter().find(|g| group_is_violating(g)) {
        for tuple in &group.tuples {
            let kept = t.transitions().iter().filter(|tr| {
                !(tr.symbol == group.symbol && tr.target == group.target)
                    || &tr.args == tuple
            });
            let restricted = BottomUpAutomaton::new(
                t.alphabet().clone(),
                t.states().clone(),
                t.finals().clone(),
                kept.cloned(),
            )?;
            let mut next = splits.clone();
            next.push(format!(
                "keep {}({}) -> {}",
                group.symbol,
                tuple
                    .iter()
                    .map(State::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                group.target
            ));
            assemble(restricted, next, equivalence_bound, out)?;
        }
        return Ok(());
    }
    let (clean, _trace) = construct::eliminate_all(
        &t,
        EliminationOptions {
            require_violation_free: true,
            equivalence_bound,
        },
    )?;
    let dta = construct::to_dta(&clean, equivalence_bound)?;
    out.push((dta, splits));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    use crate::core::{is_top_down_deterministic, RunResult};
    use crate::fixtures::{
        anchored_products, compact_comb, eight_trees, leaf, node, swap_pair, unbounded_comb,
    };
    use crate::minimize::{minimize, DEFAULT_DETERMINIZE_CAP};
    use crate::oracle::enumerate_trees;
    use super::GrammarSymbol::{Close, Open, Violation};

    fn minimal(a: &BottomUpAutomaton) -> crate::minimize::MinimalDba {
        minimize(a).unwrap()
    }

    fn production_strings(g: &ViolationGrammar) -> BTreeSet<String> {
        g.productions.iter().map(Production::to_string).collect()
    }

    #[test]
    fn grammar_of_swap_pair() {
        let m = minimal(&swap_pair());
        let g = build_violation_grammar(&m);
        assert_eq!(g.violating_groups.len(), 1);
        assert_eq!(
            production_strings(&g),
            [
                "S -> [ qf ]",
                "qf -> v0 [ qa qb ]",
                "qf -> v0 [ qb qa ]",
                "qa -> ε",
                "qb -> ε",
            ]
            .map(str::to_string)
            .into_iter()
            .collect()
        );
    }

    #[test]
    fn grammar_of_eight_trees() {
        let m = minimal(&eight_trees());
        let g = build_violation_grammar(&m);
        assert_eq!(g.violating_groups.len(), 1);
        assert_eq!(g.violating_groups[0].target, State::new("p"));
        assert_eq!(
            production_strings(&g),
            [
                "S -> [ qf ]",
                "qf -> p p'",
                "p' -> p p",
                "p -> v0 [ qa qb ]",
                "p -> v0 [ qb qa ]",
                "qa -> ε",
                "qb -> ε",
            ]
            .map(str::to_string)
            .into_iter()
            .collect()
        );
    }

    #[test]
    fn grammar_of_anchored_products_has_no_violation_symbols() {
        let m = minimal(&anchored_products());
        let g = build_violation_grammar(&m);
        assert!(g.violating_groups.is_empty());
        let language = enumerate_grammar_language(&g).unwrap();
        assert_eq!(
            language,
            [vec![Open, Close]].into_iter().collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn corresponding_string_lengths() {
        // Three violating applications: twelve-minus-one tokens.
        let m = minimal(&eight_trees());
        let g = build_violation_grammar(&m);
        let tree = node(
            "f",
            vec![
                node("f", vec![leaf("a"), leaf("b")]),
                node(
                    "f",
                    vec![
                        node("f", vec![leaf("a"), leaf("b")]),
                        node("f", vec![leaf("a"), leaf("b")]),
                    ],
                ),
            ],
        );
        let run = match m.automaton().run_of(&tree).unwrap() {
            RunResult::Complete(run) => run,
            RunResult::Reject { at } => panic!("rejected at {}", at),
        };
        let s = corresponding_string(&m, &g, &run).unwrap();
        assert_eq!(s.len(), 3 * 3 + 2);
        assert_eq!(render_string(&s), "[v0[]v0[]v0[]]");
    }

    #[test]
    fn corresponding_string_without_violations() {
        let m = minimal(&anchored_products());
        let g = build_violation_grammar(&m);
        let tree = node(
            "f",
            vec![leaf("a"), node("f", vec![leaf("a"), leaf("b")])],
        );
        let run = match m.automaton().run_of(&tree).unwrap() {
            RunResult::Complete(run) => run,
            RunResult::Reject { at } => panic!("rejected at {}", at),
        };
        let s = corresponding_string(&m, &g, &run).unwrap();
        assert_eq!(s, vec![Open, Close]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn corresponding_string_of_swap_pair_member() {
        let m = minimal(&swap_pair());
        let g = build_violation_grammar(&m);
        let tree = node("f", vec![leaf("a"), leaf("b")]);
        let run = match m.automaton().run_of(&tree).unwrap() {
            RunResult::Complete(run) => run,
            RunResult::Reject { at } => panic!("rejected at {}", at),
        };
        let s = corresponding_string(&m, &g, &run).unwrap();
        assert_eq!(render_string(&s), "[v0[]]");
        assert_eq!(s.len(), 3 + 2);
    }

    #[test]
    fn swap_pair_grammar_is_finite_singleton() {
        let m = minimal(&swap_pair());
        let g = build_violation_grammar(&m);
        assert!(grammar_is_finite(&g).is_finite());
        let language = enumerate_grammar_language(&g).unwrap();
        assert_eq!(
            language,
            [vec![Open, Violation(0), Open, Close, Close]]
                .into_iter()
                .collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn eight_trees_grammar_language_is_one_string() {
        let m = minimal(&eight_trees());
        let g = build_violation_grammar(&m);
        assert!(grammar_is_finite(&g).is_finite());
        let language = enumerate_grammar_language(&g).unwrap();
        assert_eq!(language.len(), 1);
        let s = language.into_iter().next().unwrap();
        assert_eq!(render_string(&s), "[v0[]v0[]v0[]]");
        let vt = violation_tree_of(&s).unwrap();
        assert_eq!(vt.to_string(), "ε(v0,v0,v0)");
        assert_eq!(
            vt.positions_of(0),
            (1..=3).map(|i| Address::root().child(i)).collect()
        );
    }

    #[test]
    fn unbounded_comb_grammar_is_infinite() {
        let m = minimal(&unbounded_comb());
        let g = build_violation_grammar(&m);
        match grammar_is_finite(&g) {
            FinitenessVerdict::Infinite(witness) => {
                assert!(witness.component.contains("s"));
                assert_eq!(witness.from, "s");
            }
            FinitenessVerdict::Finite => panic!("expected infinite"),
        }
        assert!(enumerate_grammar_language(&g).is_err());
    }

    #[test]
    fn compact_comb_grammar_is_infinite() {
        let m = minimal(&compact_comb());
        let g = build_violation_grammar(&m);
        assert!(!grammar_is_finite(&g).is_finite());
    }

    #[test]
    fn decide_fudt_on_fixtures() {
        assert!(decide_fudt(&swap_pair(), DEFAULT_DETERMINIZE_CAP)
            .unwrap()
            .is_yes());
        assert!(decide_fudt(&anchored_products(), DEFAULT_DETERMINIZE_CAP)
            .unwrap()
            .is_yes());
        assert!(!decide_fudt(&unbounded_comb(), DEFAULT_DETERMINIZE_CAP)
            .unwrap()
            .is_yes());
        assert!(!decide_fudt(&compact_comb(), DEFAULT_DETERMINIZE_CAP)
            .unwrap()
            .is_yes());
    }

    #[test]
    fn buffered_run_of_eight_trees_reproduces_the_known_buffers() {
        let m = minimal(&eight_trees());
        let g = build_violation_grammar(&m);
        let s = enumerate_grammar_language(&g)
            .unwrap()
            .into_iter()
            .next()
            .unwrap();
        let vt = violation_tree_of(&s).unwrap();
        let buffered = buffered_automaton(&m, &g, &vt).unwrap();

        let tree = node(
            "f",
            vec![
                node("f", vec![leaf("a"), leaf("b")]),
                node(
                    "f",
                    vec![
                        node("f", vec![leaf("a"), leaf("b")]),
                        node("f", vec![leaf("a"), leaf("b")]),
                    ],
                ),
            ],
        );
        let runs = buffered.automaton().accepting_runs(&tree).unwrap();
        assert_eq!(runs.len(), 1);
        let run = &runs[0];
        let expect = |steps: &[usize], name: &str| {
            assert_eq!(
                run.state_at(&Address::from_steps(steps.to_vec())).unwrap(),
                &State::new(name)
            );
        };
        expect(&[], "qf@[1,2,3]");
        expect(&[1], "p@[1]");
        expect(&[2], "p'@[2,3]");
        expect(&[2, 1], "p@[2]");
        expect(&[2, 2], "p@[3]");
        expect(&[1, 1], "qa@[]");
        expect(&[1, 2], "qb@[]");
    }

    #[test]
    fn buffered_automaton_accepts_exactly_the_eight_trees() {
        let m = minimal(&eight_trees());
        let g = build_violation_grammar(&m);
        let s = enumerate_grammar_language(&g)
            .unwrap()
            .into_iter()
            .next()
            .unwrap();
        let vt = violation_tree_of(&s).unwrap();
        let buffered = buffered_automaton(&m, &g, &vt).unwrap();
        for tree in enumerate_trees(m.automaton().alphabet(), 12) {
            assert_eq!(
                buffered.automaton().accepts(&tree).unwrap(),
                m.automaton().accepts(&tree).unwrap(),
            );
        }
    }

    #[test]
    fn buffered_automaton_without_violations_mirrors_the_original() {
        let m = minimal(&anchored_products());
        let g = build_violation_grammar(&m);
        let vt = violation_tree_of(&[Open, Close]).unwrap();
        let buffered = buffered_automaton(&m, &g, &vt).unwrap();
        assert_eq!(
            buffered.automaton().states().len(),
            m.automaton().states().len()
        );
        assert_eq!(
            buffered.automaton().transitions().len(),
            m.automaton().transitions().len()
        );
        for tree in enumerate_trees(m.automaton().alphabet(), 7) {
            assert_eq!(
                buffered.automaton().accepts(&tree).unwrap(),
                m.automaton().accepts(&tree).unwrap(),
            );
        }
    }

    #[test]
    fn decompose_swap_pair_into_two_singletons() {
        let d = decompose(&swap_pair(), DecomposeOptions::default()).unwrap();
        assert_eq!(d.components.len(), 2);
        let mut languages: Vec<Vec<RankedTree>> = d
            .components
            .iter()
            .map(|c| enumerate_accepted(&c.correspond_inv(), 5))
            .collect();
        languages.sort();
        assert_eq!(
            languages,
            vec![
                vec![node("f", vec![leaf("a"), leaf("b")])],
                vec![node("f", vec![leaf("b"), leaf("a")])],
            ]
        );
        for c in &d.components {
            assert!(is_top_down_deterministic(c));
        }
    }

    #[test]
    fn decompose_eight_trees_into_eight_singletons() {
        let d = decompose(&eight_trees(), DecomposeOptions::default()).unwrap();
        assert_eq!(d.components.len(), 8);
        let mut seen = BTreeSet::new();
        for c in &d.components {
            assert!(is_top_down_deterministic(c));
            let lang = enumerate_accepted(&c.correspond_inv(), 12);
            assert_eq!(lang.len(), 1);
            seen.insert(lang[0].clone());
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn decompose_refuses_the_unbounded_comb() {
        assert!(matches!(
            decompose(&unbounded_comb(), DecomposeOptions::default()),
            Err(FudtError::NotFiniteUnion(_))
        ));
    }

    #[test]
    fn decompose_respects_the_component_cap() {
        let options = DecomposeOptions {
            component_cap: 3,
            ..DecomposeOptions::default()
        };
        assert!(matches!(
            decompose(&eight_trees(), options),
            Err(FudtError::ComponentCapExceeded { required: 8, cap: 3 })
        ));
    }
}
