use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Address, CoreError, RankedAlphabet, RankedTree};

/// An opaque automaton state identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(String);

impl State {
    pub fn new(name: impl Into<String>) -> Self {
        State(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for State {
    fn from(s: &str) -> Self {
        State(s.to_string())
    }
}

impl From<String> for State {
    fn from(s: String) -> Self {
        State(s)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A bottom-up transition f(q1,...,qk) -> q.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub symbol: String,
    pub args: Vec<State>,
    pub target: State,
}

impl Transition {
    pub fn new(symbol: impl Into<String>, args: Vec<State>, target: State) -> Self {
        Transition {
            symbol: symbol.into(),
            args,
            target,
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{} -> {}", self.symbol, self.target)
        } else {
            let args: Vec<String> = self.args.iter().map(State::to_string).collect();
            write!(f, "{}({}) -> {}", self.symbol, args.join(","), self.target)
        }
    }
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A bottom-up tree automaton.
#[derive(Clone, PartialEq, Eq)]
pub struct BottomUpAutomaton {
    alphabet: RankedAlphabet,
    states: BTreeSet<State>,
    finals: BTreeSet<State>,
    transitions: BTreeSet<Transition>,
}

impl BottomUpAutomaton {
    pub fn new<S, F, T>(
        alphabet: RankedAlphabet,
        states: S,
        finals: F,
        transitions: T,
    ) -> Result<Self, CoreError>
    where
        S: IntoIterator<Item = State>,
        F: IntoIterator<Item = State>,
        T: IntoIterator<Item = Transition>,
    {
        let states: BTreeSet<State> = states.into_iter().collect();
        let finals: BTreeSet<State> = finals.into_iter().collect();
        for q in &finals {
            if !states.contains(q) {
                return Err(CoreError::UndeclaredState { state: q.clone() });
            }
        }
        let mut set = BTreeSet::new();
        for t in transitions {
            let rank = alphabet
                .rank(&t.symbol)
                .ok_or_else(|| CoreError::UnknownSymbol {
                    symbol: t.symbol.clone(),
                })?;
            if rank != t.args.len() {
                return Err(CoreError::RankMismatch {
                    symbol: t.symbol.clone(),
                    expected: rank,
                    got: t.args.len(),
                });
            }
            for q in t.args.iter().chain(std::iter::once(&t.target)) {
                if !states.contains(q) {
                    return Err(CoreError::UndeclaredState { state: q.clone() });
                }
            }
            if !set.insert(t.clone()) {
                return Err(CoreError::DuplicateTransition { transition: t });
            }
        }
        Ok(BottomUpAutomaton {
            alphabet,
            states,
            finals,
            transitions: set,
        })
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &BTreeSet<State> {
        &self.states
    }

    pub fn finals(&self) -> &BTreeSet<State> {
        &self.finals
    }

    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }

    pub fn transitions_on<'a>(&'a self, symbol: &'a str) -> impl Iterator<Item = &'a Transition> {
        self.transitions.iter().filter(move |t| t.symbol == symbol)
    }

    /// Transitions with `state` on the right-hand side.
    pub fn producers_of<'a>(&'a self, state: &'a State) -> impl Iterator<Item = &'a Transition> {
        self.transitions.iter().filter(move |t| t.target == *state)
    }

    /// No two transitions share a left-hand side.
    pub fn is_deterministic(&self) -> bool {
        let mut seen = BTreeSet::new();
        for t in &self.transitions {
            if !seen.insert((&t.symbol, &t.args)) {
                return false;
            }
        }
        true
    }

    /// The same automaton with `q` as the single final state.
    pub fn with_finals<I: IntoIterator<Item = State>>(&self, finals: I) -> Result<Self, CoreError> {
        BottomUpAutomaton::new(
            self.alphabet.clone(),
            self.states.clone(),
            finals,
            self.transitions.clone(),
        )
    }

    /// The set of states some run reaches at the root of `t`.
    ///
    /// One post-order pass with per-node state sets; for a deterministic
    /// automaton the result has at most one element, and the evaluation
    /// doubles as the nondeterministic membership oracle.
    pub fn evaluate(&self, tree: &RankedTree) -> Result<BTreeSet<State>, CoreError> {
        tree.validate(&self.alphabet)?;
        Ok(self.eval_unchecked(tree))
    }

    fn eval_unchecked(&self, tree: &RankedTree) -> BTreeSet<State> {
        let child_sets: Vec<BTreeSet<State>> = tree
            .children()
            .iter()
            .map(|c| self.eval_unchecked(c))
            .collect();
        let mut out = BTreeSet::new();
        for t in self.transitions_on(tree.label()) {
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

    pub fn accepts(&self, tree: &RankedTree) -> Result<bool, CoreError> {
        Ok(self
            .evaluate(tree)?
            .iter()
            .any(|q| self.finals.contains(q)))
    }

    /// The unique run of a deterministic automaton on `t`, or the first
    /// post-order address at which no transition applies.
    pub fn run_of(&self, tree: &RankedTree) -> Result<RunResult, CoreError> {
        if !self.is_deterministic() {
            return Err(CoreError::NotDeterministic);
        }
        tree.validate(&self.alphabet)?;
        let mut states = BTreeMap::new();
        match self.run_node(tree, Address::root(), &mut states) {
            Ok(()) => Ok(RunResult::Complete(Run {
                tree: tree.clone(),
                states,
            })),
            Err(at) => Ok(RunResult::Reject { at }),
        }
    }

    fn run_node(
        &self,
        node: &RankedTree,
        at: Address,
        states: &mut BTreeMap<Address, State>,
    ) -> Result<(), Address> {
        let mut child_states = Vec::with_capacity(node.children().len());
        for (i, child) in node.children().iter().enumerate() {
            let child_at = at.child(i + 1);
            self.run_node(child, child_at.clone(), states)?;
            child_states.push(states[&child_at].clone());
        }
        let hit = self
            .transitions_on(node.label())
            .find(|t| t.args == child_states);
        match hit {
            Some(t) => {
                states.insert(at, t.target.clone());
                Ok(())
            }
            None => Err(at),
        }
    }

    /// All accepting runs on `t`, in lexicographic order of their state
    /// labelings. Needed for nondeterministic automata, where `run_of` does
    /// not apply.
    pub fn accepting_runs(&self, tree: &RankedTree) -> Result<Vec<Run>, CoreError> {
        tree.validate(&self.alphabet)?;
        let mut runs = Vec::new();
        let candidates = self.runs_to(tree, Address::root());
        for (q, states) in candidates {
            if self.finals.contains(&q) {
                runs.push(Run {
                    tree: tree.clone(),
                    states,
                });
            }
        }
        runs.sort_by(|a, b| a.states.cmp(&b.states));
        Ok(runs)
    }

    fn runs_to(&self, node: &RankedTree, at: Address) -> Vec<(State, BTreeMap<Address, State>)> {
        let per_child: Vec<Vec<(State, BTreeMap<Address, State>)>> = node
            .children()
            .iter()
            .enumerate()
            .map(|(i, c)| self.runs_to(c, at.child(i + 1)))
            .collect();
        let mut out = Vec::new();
        for t in self.transitions_on(node.label()) {
            // Each argument state must be realizable in the matching child.
            let mut choices: Vec<&BTreeMap<Address, State>> = Vec::new();
            let mut ok = true;
            for (i, q) in t.args.iter().enumerate() {
                match per_child[i].iter().find(|(cq, _)| cq == q) {
                    Some((_, m)) => choices.push(m),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let mut states = BTreeMap::new();
            for m in choices {
                states.extend(m.iter().map(|(k, v)| (k.clone(), v.clone())));
            }
            states.insert(at.clone(), t.target.clone());
            out.push((t.target.clone(), states));
        }
        out
    }

    /// The corresponding top-down automaton: transitions read right to left,
    /// finals become initials.
    pub fn correspond(&self) -> TopDownAutomaton {
        let rules = self
            .transitions
            .iter()
            .map(|t| TdRule {
                state: t.target.clone(),
                symbol: t.symbol.clone(),
                args: t.args.clone(),
            })
            .collect();
        TopDownAutomaton {
            alphabet: self.alphabet.clone(),
            states: self.states.clone(),
            initials: self.finals.clone(),
            rules,
        }
    }

    pub fn rename_states(&self, map: &BTreeMap<State, State>) -> Result<Self, CoreError> {
        let rename = |q: &State| map.get(q).cloned().unwrap_or_else(|| q.clone());
        BottomUpAutomaton::new(
            self.alphabet.clone(),
            self.states.iter().map(rename),
            self.finals.iter().map(rename),
            self.transitions.iter().map(|t| Transition {
                symbol: t.symbol.clone(),
                args: t.args.iter().map(rename).collect(),
                target: rename(&t.target),
            }),
        )
    }
}

impl fmt::Debug for BottomUpAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bottomup (finals: {:?})", self.finals)?;
        for t in &self.transitions {
            writeln!(f, "  {}", t)?;
        }
        Ok(())
    }
}

/// A top-down rule q(f) -> (q1,...,qk).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TdRule {
    pub state: State,
    pub symbol: String,
    pub args: Vec<State>,
}

impl fmt::Display for TdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(State::to_string).collect();
        write!(f, "{}({}) -> ({})", self.state, self.symbol, args.join(","))
    }
}

impl fmt::Debug for TdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A top-down tree automaton.
#[derive(Clone, PartialEq, Eq)]
pub struct TopDownAutomaton {
    alphabet: RankedAlphabet,
    states: BTreeSet<State>,
    initials: BTreeSet<State>,
    rules: BTreeSet<TdRule>,
}

impl TopDownAutomaton {
    pub fn new<S, I, R>(
        alphabet: RankedAlphabet,
        states: S,
        initials: I,
        rules: R,
    ) -> Result<Self, CoreError>
    where
        S: IntoIterator<Item = State>,
        I: IntoIterator<Item = State>,
        R: IntoIterator<Item = TdRule>,
    {
        let states: BTreeSet<State> = states.into_iter().collect();
        let initials: BTreeSet<State> = initials.into_iter().collect();
        for q in &initials {
            if !states.contains(q) {
                return Err(CoreError::UndeclaredState { state: q.clone() });
            }
        }
        let mut set = BTreeSet::new();
        for r in rules {
            let rank = alphabet
                .rank(&r.symbol)
                .ok_or_else(|| CoreError::UnknownSymbol {
                    symbol: r.symbol.clone(),
                })?;
            if rank != r.args.len() {
                return Err(CoreError::RankMismatch {
                    symbol: r.symbol.clone(),
                    expected: rank,
                    got: r.args.len(),
                });
            }
            for q in r.args.iter().chain(std::iter::once(&r.state)) {
                if !states.contains(q) {
                    return Err(CoreError::UndeclaredState { state: q.clone() });
                }
            }
            if !set.insert(r.clone()) {
                return Err(CoreError::DuplicateRule { rule: r });
            }
        }
        Ok(TopDownAutomaton {
            alphabet,
            states,
            initials,
            rules: set,
        })
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &BTreeSet<State> {
        &self.states
    }

    pub fn initials(&self) -> &BTreeSet<State> {
        &self.initials
    }

    pub fn rules(&self) -> &BTreeSet<TdRule> {
        &self.rules
    }

    /// One initial state and no two rules with the same left-hand side.
    pub fn is_deterministic(&self) -> bool {
        if self.initials.len() != 1 {
            return false;
        }
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            if !seen.insert((&r.state, &r.symbol)) {
                return false;
            }
        }
        true
    }

    /// The corresponding bottom-up automaton; inverse of `correspond`.
    pub fn correspond_inv(&self) -> BottomUpAutomaton {
        let transitions = self
            .rules
            .iter()
            .map(|r| Transition {
                symbol: r.symbol.clone(),
                args: r.args.clone(),
                target: r.state.clone(),
            })
            .collect::<BTreeSet<_>>();
        BottomUpAutomaton {
            alphabet: self.alphabet.clone(),
            states: self.states.clone(),
            finals: self.initials.clone(),
            transitions,
        }
    }

    /// Language membership, via the corresponding bottom-up automaton.
    pub fn accepts(&self, tree: &RankedTree) -> Result<bool, CoreError> {
        self.correspond_inv().accepts(tree)
    }
}

impl fmt::Debug for TopDownAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "topdown (initials: {:?})", self.initials)?;
        for r in &self.rules {
            writeln!(f, "  {}", r)?;
        }
        Ok(())
    }
}

/// A mapping from node addresses to states, consistent with the transitions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Run {
    tree: RankedTree,
    states: BTreeMap<Address, State>,
}

impl Run {
    pub fn tree(&self) -> &RankedTree {
        &self.tree
    }

    pub fn state_at(&self, at: &Address) -> Option<&State> {
        self.states.get(at)
    }

    pub fn root_state(&self) -> &State {
        &self.states[&Address::root()]
    }

    pub fn states(&self) -> &BTreeMap<Address, State> {
        &self.states
    }

    /// The transition applied at `at`.
    pub fn transition_at(&self, at: &Address) -> Option<Transition> {
        let node = self.tree.subtree(at)?;
        let args = (1..=node.children().len())
            .map(|i| self.states.get(&at.child(i)).cloned())
            .collect::<Option<Vec<_>>>()?;
        Some(Transition {
            symbol: node.label().to_string(),
            args,
            target: self.states.get(at)?.clone(),
        })
    }

    pub fn is_accepting(&self, automaton: &BottomUpAutomaton) -> bool {
        automaton.finals().contains(self.root_state())
    }
}

/// Outcome of running a deterministic automaton over a tree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RunResult {
    Complete(Run),
    Reject { at: Address },
}

impl RunResult {
    pub fn run(&self) -> Option<&Run> {
        match self {
            RunResult::Complete(run) => Some(run),
            RunResult::Reject { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{anchored_products, eight_trees, leaf, node, swap_pair};

    fn f(l: RankedTree, r: RankedTree) -> RankedTree {
        node("f", vec![l, r])
    }

    fn a() -> RankedTree {
        leaf("a")
    }

    fn b() -> RankedTree {
        leaf("b")
    }

    fn states(names: &[&str]) -> BTreeSet<State> {
        names.iter().map(|n| State::new(*n)).collect()
    }

    #[test]
    fn evaluate_forced_run() {
        let result = swap_pair().evaluate(&f(a(), b())).unwrap();
        assert_eq!(result, states(&["qf"]));
    }

    #[test]
    fn evaluate_stuck_tree_gives_empty_set() {
        let result = swap_pair().evaluate(&f(a(), a())).unwrap();
        assert!(result.is_empty());
    }

    #[test]
    fn evaluate_deep_tree() {
        let t = f(f(a(), b()), f(f(a(), b()), f(b(), a())));
        assert_eq!(eight_trees().evaluate(&t).unwrap(), states(&["qf"]));
    }

    #[test]
    fn evaluate_rejects_foreign_symbols() {
        let err = swap_pair().evaluate(&leaf("z")).unwrap_err();
        assert!(matches!(err, CoreError::UnknownSymbol { .. }));
        let err = swap_pair()
            .evaluate(&RankedTree::new("f", vec![a()]))
            .unwrap_err();
        assert!(matches!(err, CoreError::RankMismatch { .. }));
    }

    #[test]
    fn accepts_members_and_nonmembers() {
        assert!(swap_pair().accepts(&f(b(), a())).unwrap());
        assert!(!swap_pair().accepts(&a()).unwrap());
        assert!(anchored_products().accepts(&f(a(), f(b(), b()))).unwrap());
    }

    #[test]
    fn run_of_labels_every_node() {
        let t = f(f(a(), b()), f(f(a(), b()), f(a(), b())));
        let result = eight_trees().run_of(&t).unwrap();
        let run = result.run().expect("complete run");
        let at = |steps: &[usize]| Address::from_steps(steps.to_vec());
        assert_eq!(run.root_state(), &State::new("qf"));
        assert_eq!(run.state_at(&at(&[1])), Some(&State::new("p")));
        assert_eq!(run.state_at(&at(&[2])), Some(&State::new("p'")));
        assert_eq!(run.state_at(&at(&[2, 1])), Some(&State::new("p")));
        assert_eq!(run.state_at(&at(&[2, 2])), Some(&State::new("p")));
        assert_eq!(run.state_at(&at(&[1, 1])), Some(&State::new("qa")));
        assert_eq!(run.state_at(&at(&[1, 2])), Some(&State::new("qb")));
        assert!(run.is_accepting(&eight_trees()));
    }

    #[test]
    fn run_of_reports_first_postorder_failure() {
        let result = swap_pair().run_of(&f(a(), a())).unwrap();
        assert_eq!(result, RunResult::Reject { at: Address::root() });

        // The left subtree fails before the root does.
        let t = f(f(a(), a()), b());
        let result = swap_pair().run_of(&t).unwrap();
        assert_eq!(
            result,
            RunResult::Reject {
                at: Address::from_steps(vec![1])
            }
        );
    }

    #[test]
    fn run_of_on_anchored_products() {
        let t = f(a(), f(a(), b()));
        let result = anchored_products().run_of(&t).unwrap();
        let run = result.run().unwrap();
        assert_eq!(run.root_state(), &State::new("qf"));
        assert_eq!(
            run.state_at(&Address::from_steps(vec![2])),
            Some(&State::new("q"))
        );
        // The run's root agrees with the evaluation.
        let evaluated = anchored_products().evaluate(&t).unwrap();
        assert_eq!(evaluated, states(&["qf"]));
    }

    #[test]
    fn run_of_requires_determinism() {
        let alpha = RankedAlphabet::new([("a", 0)]).unwrap();
        let nondet = BottomUpAutomaton::new(
            alpha,
            states(&["q1", "q2"]),
            states(&["q1"]),
            [
                Transition::new("a", vec![], State::new("q1")),
                Transition::new("a", vec![], State::new("q2")),
            ],
        )
        .unwrap();
        assert!(matches!(
            nondet.run_of(&a()),
            Err(CoreError::NotDeterministic)
        ));
    }

    #[test]
    fn correspond_swaps_directions() {
        let ta = swap_pair().correspond();
        assert_eq!(ta.initials(), &states(&["qf"]));
        let rules: Vec<String> = ta.rules().iter().map(|r| r.to_string()).collect();
        assert_eq!(
            rules,
            [
                "qa(a) -> ()",
                "qb(b) -> ()",
                "qf(f) -> (qa,qb)",
                "qf(f) -> (qb,qa)",
            ]
        );
        assert!(!ta.is_deterministic());
    }

    #[test]
    fn correspond_roundtrip_is_identity() {
        let a = anchored_products();
        assert_eq!(a.correspond().correspond_inv(), a);
    }

    #[test]
    fn single_rule_topdown_automaton_is_deterministic() {
        let alpha = RankedAlphabet::new([("a", 0)]).unwrap();
        let ta = TopDownAutomaton::new(
            alpha,
            states(&["q0"]),
            states(&["q0"]),
            [TdRule {
                state: State::new("q0"),
                symbol: "a".to_string(),
                args: vec![],
            }],
        )
        .unwrap();
        assert!(ta.is_deterministic());
    }

    #[test]
    fn accepting_runs_of_nondeterministic_automaton() {
        let alpha = RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap();
        let nondet = BottomUpAutomaton::new(
            alpha,
            states(&["x", "y", "top"]),
            states(&["top"]),
            [
                Transition::new("a", vec![], State::new("x")),
                Transition::new("a", vec![], State::new("y")),
                Transition::new("f", vec![State::new("x"), State::new("y")], State::new("top")),
                Transition::new("f", vec![State::new("y"), State::new("x")], State::new("top")),
            ],
        )
        .unwrap();
        let runs = nondet.accepting_runs(&f(a(), a())).unwrap();
        assert_eq!(runs.len(), 2);
        for run in &runs {
            assert_eq!(run.root_state(), &State::new("top"));
        }
    }
}
