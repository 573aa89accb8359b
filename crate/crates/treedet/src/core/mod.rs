//! Ranked alphabets, trees, contexts, automata in both directions, and runs.

mod alphabet;
mod automaton;
mod tree;

pub use alphabet::RankedAlphabet;
pub use automaton::{
    BottomUpAutomaton, Run, RunResult, State, TdRule, TopDownAutomaton, Transition,
};
pub use tree::{Address, Context, RankedTree, HOLE_LABEL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("unknown symbol {symbol}")]
    UnknownSymbol { symbol: String },
    #[error("symbol {symbol} has rank {expected}, got {got} arguments")]
    RankMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate symbol {symbol}")]
    DuplicateSymbol { symbol: String },
    #[error("alphabet has no rank-0 symbol")]
    NoLeafSymbol,
    #[error("state {state} is not declared")]
    UndeclaredState { state: State },
    #[error("duplicate transition {transition}")]
    DuplicateTransition { transition: Transition },
    #[error("duplicate rule {rule}")]
    DuplicateRule { rule: TdRule },
    #[error("automaton is not deterministic")]
    NotDeterministic,
    #[error("context must contain exactly one hole, found {found}")]
    HoleCount { found: usize },
}

/// Is `b` deterministic in the top-down sense: one initial state and no two
/// rules with the same left-hand side.
pub fn is_top_down_deterministic(b: &TopDownAutomaton) -> bool {
    b.is_deterministic()
}
