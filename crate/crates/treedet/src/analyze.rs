//! Conflux detection and the decision procedure for top-down determinism.
//!
//! A conflux group is a maximal set of at least two same-symbol transitions
//! sharing their target; it is a violation unless the group is closed under
//! coordinatewise mixing of its left-hand sides. The decision procedure
//! minimizes, scans the groups, checks the transitions into final states
//! the same way across symbols, and finally validates that the conflux
//! elimination actually preserves the language on a bounded universe.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::construct::{self, ConstructError};
use crate::core::{BottomUpAutomaton, CoreError, RankedTree, State};
use crate::minimize::{self, MinimalDba, MinimizeError};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

/// A maximal set of same-symbol, same-target transitions with at least two
/// members, recorded through their left-hand-side tuples.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfluxGroup {
    pub symbol: String,
    pub target: State,
    pub tuples: BTreeSet<Vec<State>>,
}

impl ConfluxGroup {
    pub fn rank(&self) -> usize {
        self.tuples.iter().next().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Two group members plus the coordinatewise mixture the automaton lacks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationWitness {
    pub first: Vec<State>,
    pub second: Vec<State>,
    pub missing: Vec<State>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationReport {
    pub group: ConfluxGroup,
    /// Present exactly when the group is a violation.
    pub witness: Option<ViolationWitness>,
}

impl ViolationReport {
    pub fn is_violating(&self) -> bool {
        self.witness.is_some()
    }
}

/// The conflux groups of an arbitrary automaton, grouped by (symbol,
/// target) and sorted the same way.
pub fn conflux_groups_of(a: &BottomUpAutomaton) -> Vec<ConfluxGroup> {
    let mut buckets: BTreeMap<(String, State), BTreeSet<Vec<State>>> = BTreeMap::new();
    for t in a.transitions() {
        buckets
            .entry((t.symbol.clone(), t.target.clone()))
            .or_default()
            .insert(t.args.clone());
    }
    buckets
        .into_iter()
        .filter(|(_, tuples)| tuples.len() >= 2)
        .map(|((symbol, target), tuples)| {
            // Two distinct rank-0 transitions would share their whole
            // left-hand side, so every group has rank at least one.
            debug_assert!(tuples.iter().all(|t| !t.is_empty()));
            ConfluxGroup {
                symbol,
                target,
                tuples,
            }
        })
        .collect()
}

pub fn conflux_groups(m: &MinimalDba) -> Vec<ConfluxGroup> {
    conflux_groups_of(m.automaton())
}

/// Product criterion: a group is violation-free exactly when its tuple set
/// equals the product of its per-position projections.
pub fn group_is_violating(group: &ConfluxGroup) -> bool {
    let rank = group.rank();
    let mut product_size: usize = 1;
    for j in 0..rank {
        let projection: BTreeSet<&State> = group.tuples.iter().map(|t| &t[j]).collect();
        product_size = product_size.saturating_mul(projection.len());
    }
    group.tuples.len() != product_size
}

/// The literal pairwise reading: every {1,2}-mixture of every pair of group
/// members must itself be a member. Used to cross-check `group_is_violating`.
pub fn group_is_violating_pairwise(group: &ConfluxGroup) -> bool {
    mixture_witness(&group.tuples).is_some()
}

/// The lexicographically least missing mixture over all member pairs,
/// together with the least pair producing it.
fn mixture_witness(tuples: &BTreeSet<Vec<State>>) -> Option<ViolationWitness> {
    let members: Vec<&Vec<State>> = tuples.iter().collect();
    let rank = members.first()?.len();
    let mut best: Option<ViolationWitness> = None;
    for first in &members {
        for second in &members {
            if first == second {
                continue;
            }
            // All 2^rank coordinatewise selections.
            for mask in 0..(1usize << rank) {
                let mixed: Vec<State> = (0..rank)
                    .map(|j| {
                        if mask & (1 << j) == 0 {
                            first[j].clone()
                        } else {
                            second[j].clone()
                        }
                    })
                    .collect();
                if tuples.contains(&mixed) {
                    continue;
                }
                let candidate = ViolationWitness {
                    first: (*first).clone(),
                    second: (*second).clone(),
                    missing: mixed,
                };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (&candidate.missing, &candidate.first, &candidate.second)
                            < (&b.missing, &b.first, &b.second)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
    }
    best
}

/// Violation verdict for one conflux group of `m`. The decision uses the
/// product criterion; the witness comes from the pairwise scan.
pub fn is_violation(group: &ConfluxGroup, m: &MinimalDba) -> ViolationReport {
    debug_assert!(
        m.automaton()
            .transitions()
            .iter()
            .filter(|t| t.symbol == group.symbol && t.target == group.target)
            .count()
            == group.tuples.len(),
        "group must be maximal in the automaton"
    );
    let witness = if group_is_violating(group) {
        mixture_witness(&group.tuples)
    } else {
        None
    };
    ViolationReport {
        group: group.clone(),
        witness,
    }
}

/// A mixing failure among the transitions into final states on one symbol.
///
/// When several final states receive transitions over the same symbol, the
/// reversal funnels them into one initial state, so their left-hand sides
/// must mix exactly like an ordinary group's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootViolation {
    pub symbol: String,
    pub finals: BTreeSet<State>,
    pub witness: ViolationWitness,
}

pub fn root_violations(m: &MinimalDba) -> Vec<RootViolation> {
    let a = m.automaton();
    let mut per_symbol: BTreeMap<String, (BTreeSet<State>, BTreeSet<Vec<State>>)> =
        BTreeMap::new();
    for t in a.transitions() {
        if a.finals().contains(&t.target) && !t.args.is_empty() {
            let entry = per_symbol.entry(t.symbol.clone()).or_default();
            entry.0.insert(t.target.clone());
            entry.1.insert(t.args.clone());
        }
    }
    let mut out = Vec::new();
    for (symbol, (finals, tuples)) in per_symbol {
        if finals.len() < 2 {
            // A single target makes this an ordinary group; the per-group
            // scan already covers it.
            continue;
        }
        let probe = ConfluxGroup {
            symbol: symbol.clone(),
            target: finals.iter().next().unwrap().clone(),
            tuples: tuples.clone(),
        };
        if group_is_violating(&probe) {
            let witness = mixture_witness(&tuples).expect("violating group has a witness");
            out.push(RootViolation {
                symbol,
                finals,
                witness,
            });
        }
    }
    out
}

/// Why an automaton's language is not top-down deterministic.
#[derive(Clone, Debug)]
pub enum DtaRefusal {
    /// Mixture-closed structure is missing in the minimal automaton.
    Violations {
        reports: Vec<ViolationReport>,
        root: Vec<RootViolation>,
    },
    /// No violation, yet conflux elimination changed the bounded language:
    /// distinct states feed the same slot without mixture cover.
    ConstructionGuard { witness: RankedTree },
}

#[derive(Clone, Debug)]
pub enum DtaDecision {
    Yes,
    No(DtaRefusal),
}

impl DtaDecision {
    pub fn is_yes(&self) -> bool {
        matches!(self, DtaDecision::Yes)
    }
}

/// Bound for the language-preservation check backing an affirmative answer.
pub const DECIDE_EQUIVALENCE_BOUND: usize = 10;

/// Decides whether the language of `a` is recognized by some deterministic
/// top-down tree automaton.
pub fn decide_dta(a: &BottomUpAutomaton, determinize_cap: usize) -> Result<DtaDecision, AnalyzeError> {
    let m = minimized(a, determinize_cap)?;
    Ok(decide_dta_minimal(&m)?)
}

pub(crate) fn minimized(
    a: &BottomUpAutomaton,
    determinize_cap: usize,
) -> Result<MinimalDba, MinimizeError> {
    if a.is_deterministic() {
        minimize::minimize(a)
    } else {
        minimize::minimize(&minimize::determinize(a, determinize_cap)?)
    }
}

pub fn decide_dta_minimal(m: &MinimalDba) -> Result<DtaDecision, AnalyzeError> {
    let reports: Vec<ViolationReport> = conflux_groups(m)
        .iter()
        .map(|g| is_violation(g, m))
        .filter(ViolationReport::is_violating)
        .collect();
    let root = root_violations(m);
    if !reports.is_empty() || !root.is_empty() {
        return Ok(DtaDecision::No(DtaRefusal::Violations { reports, root }));
    }
    match construct::dta_pipeline(m, DECIDE_EQUIVALENCE_BOUND) {
        Ok(_) => Ok(DtaDecision::Yes),
        Err(ConstructError::EquivalenceBroken { witness, .. }) => {
            Ok(DtaDecision::No(DtaRefusal::ConstructionGuard { witness }))
        }
        Err(other) => Err(other.into()),
    }
}
