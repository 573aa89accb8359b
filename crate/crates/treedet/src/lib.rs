//! treedet decides, for a regular tree language given as a bottom-up tree
//! automaton, whether some deterministic top-down tree automaton recognizes
//! it, and whether it is a finite union of such languages. Affirmative
//! answers come with the witnessing automaton or family of automata.
//!
//! The pipeline: minimize the input ([`minimize`]), look for conflux groups
//! that are not closed under mixing their left-hand sides ([`analyze`]),
//! rebuild violation-free automata without confluxes and reverse them
//! ([`construct`]), and for the finite-union question track the violating
//! applications with a context-free grammar whose finiteness settles the
//! matter ([`fudt`]). Everything is cross-checked against brute-force
//! semantics in [`oracle`].

pub mod analyze;
pub mod construct;
pub mod core;
pub mod fixtures;
pub mod fudt;
pub mod io;
pub mod minimize;
pub mod oracle;
