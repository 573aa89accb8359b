//! Small reference automata used throughout the test suites and docs.

use crate::core::{BottomUpAutomaton, RankedAlphabet, RankedTree, State, Transition};

fn st(name: &str) -> State {
    State::new(name)
}

fn tr(symbol: &str, args: &[&str], target: &str) -> Transition {
    Transition::new(symbol, args.iter().map(|a| st(a)).collect(), st(target))
}

pub fn fab_alphabet() -> RankedAlphabet {
    RankedAlphabet::new([("f", 2), ("a", 0), ("b", 0)]).unwrap()
}

/// The two-tree language {f(a,b), f(b,a)}: the classic language that no
/// deterministic top-down automaton recognizes. Minimal by construction.
pub fn swap_pair() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        fab_alphabet(),
        ["qa", "qb", "qf"].map(st),
        [st("qf")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["qa", "qb"], "qf"),
            tr("f", &["qb", "qa"], "qf"),
        ],
    )
    .unwrap()
}

/// {f(a,f(x,y)) | x,y in {a,b}}: top-down deterministic, but its minimal
/// automaton carries a four-member conflux group.
pub fn anchored_products() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        fab_alphabet(),
        ["qa", "qb", "q", "qf"].map(st),
        [st("qf")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["qa", "qb"], "q"),
            tr("f", &["qb", "qa"], "q"),
            tr("f", &["qa", "qa"], "q"),
            tr("f", &["qb", "qb"], "q"),
            tr("f", &["qa", "q"], "qf"),
        ],
    )
    .unwrap()
}

/// The eight trees f(v1, f(v2, v3)) with vi in {f(a,b), f(b,a)}.
pub fn eight_trees() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        fab_alphabet(),
        ["qa", "qb", "p", "p'", "qf"].map(st),
        [st("qf")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["qa", "qb"], "p"),
            tr("f", &["qb", "qa"], "p"),
            tr("f", &["p", "p"], "p'"),
            tr("f", &["p", "p'"], "qf"),
        ],
    )
    .unwrap()
}

/// The comb family with m+2 swap choices along a fixed backbone; its
/// decomposition into deterministic top-down parts needs 2^(m+2) members.
/// `choice_chain(1)` is `eight_trees` up to renaming.
pub fn choice_chain(m: usize) -> BottomUpAutomaton {
    assert!(m >= 1);
    let mut states: Vec<State> = ["qa", "qb", "p", "qf"].map(st).to_vec();
    let mut transitions = vec![
        tr("a", &[], "qa"),
        tr("b", &[], "qb"),
        tr("f", &["qa", "qb"], "p"),
        tr("f", &["qb", "qa"], "p"),
    ];
    let level = |i: usize| State::new(format!("p{}", i));
    for i in 1..=m {
        states.push(level(i));
        let lower = if i == 1 { st("p") } else { level(i - 1) };
        transitions.push(Transition::new("f", vec![st("p"), lower], level(i)));
    }
    transitions.push(Transition::new("f", vec![st("p"), level(m)], st("qf")));
    BottomUpAutomaton::new(fab_alphabet(), states, [st("qf")], transitions).unwrap()
}

/// The singleton language {f(a,b)}.
pub fn singleton_pair() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        fab_alphabet(),
        ["qa", "qb", "qf"].map(st),
        [st("qf")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["qa", "qb"], "qf"),
        ],
    )
    .unwrap()
}

/// Right combs of unbounded depth whose left spine children are f(a,b) or
/// f(b,a). Every spine step feeds more swap choices, so the language is not
/// a finite union of deterministic top-down languages.
pub fn unbounded_comb() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        fab_alphabet(),
        ["qa", "qb", "p", "s"].map(st),
        [st("s")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["qa", "qb"], "p"),
            tr("f", &["qb", "qa"], "p"),
            tr("f", &["p", "s"], "s"),
            tr("f", &["p", "p"], "s"),
        ],
    )
    .unwrap()
}

/// A comb whose spine itself carries the undecidable choice: each spine node
/// is f(a, rest) or the terminating f(b, c). Packs one violating transition
/// into every two nodes, so long runs fit into small trees.
pub fn compact_comb() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        RankedAlphabet::new([("f", 2), ("a", 0), ("b", 0), ("c", 0)]).unwrap(),
        ["qa", "qb", "e", "s"].map(st),
        [st("s")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("c", &[], "e"),
            tr("f", &["qa", "s"], "s"),
            tr("f", &["qb", "e"], "s"),
        ],
    )
    .unwrap()
}

/// `anchored_products` with a second conflux group stacked on top of the
/// first and named so that the upper group is eliminated first. Eliminating
/// it copies the lower group wholesale, which forces a second round of
/// eliminations.
pub fn layered_products() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        RankedAlphabet::new([("f", 2), ("a", 0), ("b", 0), ("c", 0)]).unwrap(),
        ["qa", "qb", "qc", "z", "qf"].map(st),
        [st("qf")],
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("c", &[], "qc"),
            tr("f", &["qa", "qb"], "z"),
            tr("f", &["qb", "qa"], "z"),
            tr("f", &["qa", "qa"], "z"),
            tr("f", &["qb", "qb"], "z"),
            tr("f", &["qa", "z"], "qf"),
            tr("f", &["qc", "z"], "qf"),
        ],
    )
    .unwrap()
}

/// {f(a,f(a,a)), f(a,f(f(a,a),f(a,a)))}: a minimal deterministic automaton
/// without any violating conflux group whose language is nevertheless not
/// top-down deterministic. Two subtrees of distinct states fill the same
/// slot, so exchanging their children leaves the language. Conflux
/// elimination on it cannot preserve the language; the bounded-equivalence
/// guard refuses it.
pub fn mixed_depth_pair() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap(),
        ["qa", "q1", "q2", "qf"].map(st),
        [st("qf")],
        [
            tr("a", &[], "qa"),
            tr("f", &["qa", "qa"], "q1"),
            tr("f", &["q1", "q1"], "q2"),
            tr("f", &["qa", "q1"], "qf"),
            tr("f", &["qa", "q2"], "qf"),
        ],
    )
    .unwrap()
}

/// {a, f(a,a)}: two final classes whose incoming symbols do not clash, so
/// the language is top-down deterministic despite the two final states.
pub fn leaf_or_pair() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap(),
        ["q1", "q2"].map(st),
        ["q1", "q2"].map(st),
        [
            tr("a", &[], "q1"),
            tr("f", &["q1", "q1"], "q2"),
        ],
    )
    .unwrap()
}

/// {f(a,a), f(b,b), g(f(a,a))}: two final classes reached over the same
/// root symbol whose mixture f(a,b) is missing, so no single deterministic
/// top-down automaton recognizes it.
pub fn clashing_finals() -> BottomUpAutomaton {
    BottomUpAutomaton::new(
        RankedAlphabet::new([("f", 2), ("g", 1), ("a", 0), ("b", 0)]).unwrap(),
        ["qa", "qb", "q1", "q2", "q3"].map(st),
        ["q1", "q2", "q3"].map(st),
        [
            tr("a", &[], "qa"),
            tr("b", &[], "qb"),
            tr("f", &["qa", "qa"], "q1"),
            tr("f", &["qb", "qb"], "q2"),
            tr("g", &["q1"], "q3"),
        ],
    )
    .unwrap()
}

/// Helper for building trees over {f,a,b,c,...} in tests.
pub fn node(label: &str, children: Vec<RankedTree>) -> RankedTree {
    RankedTree::new(label, children)
}

pub fn leaf(label: &str) -> RankedTree {
    RankedTree::leaf(label)
}
