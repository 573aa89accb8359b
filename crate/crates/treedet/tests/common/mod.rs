//! Shared helpers for the integration suites: seeded random automata.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treedet::core::{BottomUpAutomaton, RankedAlphabet, State, Transition};
use treedet::minimize::trim;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unary_alphabet() -> RankedAlphabet {
    RankedAlphabet::new([("g", 1), ("a", 0)]).unwrap()
}

pub fn binary_alphabet() -> RankedAlphabet {
    RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap()
}

pub fn mixed_alphabet() -> RankedAlphabet {
    RankedAlphabet::new([("f", 2), ("g", 1), ("a", 0), ("b", 0)]).unwrap()
}

fn all_tuples(states: &[State], rank: usize) -> Vec<Vec<State>> {
    if rank == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for q in states {
        for mut rest in all_tuples(states, rank - 1) {
            rest.insert(0, q.clone());
            out.push(rest);
        }
    }
    out
}

/// A random deterministic bottom-up automaton: one transition per sampled
/// left-hand side, random targets, at least one final state.
pub fn random_dba(
    rng: &mut ChaCha8Rng,
    alphabet: &RankedAlphabet,
    max_states: usize,
    density: f64,
) -> BottomUpAutomaton {
    let n = rng.gen_range(1..=max_states);
    let states: Vec<State> = (0..n).map(|i| State::new(format!("q{}", i))).collect();
    let mut transitions = Vec::new();
    for (symbol, rank) in alphabet.symbols() {
        for tuple in all_tuples(&states, rank) {
            if rng.gen_bool(density) {
                let target = states[rng.gen_range(0..n)].clone();
                transitions.push(Transition::new(symbol, tuple, target));
            }
        }
    }
    let mut finals: Vec<State> = states
        .iter()
        .filter(|_| rng.gen_bool(0.4))
        .cloned()
        .collect();
    if finals.is_empty() {
        finals.push(states[rng.gen_range(0..n)].clone());
    }
    BottomUpAutomaton::new(alphabet.clone(), states, finals, transitions)
        .expect("generated automaton is well formed")
}

/// A random trim deterministic automaton with a nonempty language.
pub fn random_trim_dba(
    rng: &mut ChaCha8Rng,
    alphabet: &RankedAlphabet,
    max_states: usize,
    density: f64,
) -> BottomUpAutomaton {
    loop {
        let candidate = trim(&random_dba(rng, alphabet, max_states, density));
        if !candidate.states().is_empty() {
            return candidate;
        }
    }
}

/// A random nondeterministic automaton (duplicate left-hand sides allowed).
pub fn random_nba(
    rng: &mut ChaCha8Rng,
    alphabet: &RankedAlphabet,
    max_states: usize,
    density: f64,
) -> BottomUpAutomaton {
    let n = rng.gen_range(1..=max_states);
    let states: Vec<State> = (0..n).map(|i| State::new(format!("q{}", i))).collect();
    let mut transitions = std::collections::BTreeSet::new();
    for (symbol, rank) in alphabet.symbols() {
        for tuple in all_tuples(&states, rank) {
            for target in &states {
                if rng.gen_bool(density) {
                    transitions.insert(Transition::new(symbol, tuple.clone(), target.clone()));
                }
            }
        }
    }
    let mut finals: Vec<State> = states
        .iter()
        .filter(|_| rng.gen_bool(0.4))
        .cloned()
        .collect();
    if finals.is_empty() {
        finals.push(states[rng.gen_range(0..n)].clone());
    }
    BottomUpAutomaton::new(alphabet.clone(), states, finals, transitions)
        .expect("generated automaton is well formed")
}
