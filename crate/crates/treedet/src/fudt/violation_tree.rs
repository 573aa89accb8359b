//! Violation trees: the nesting structure of a grammar string.
//!
//! Childless bracket pairs disappear, every violation symbol with its
//! bracket pair becomes a node, and a root labeled ε is added on top.

use std::collections::BTreeSet;
use std::fmt;

use crate::core::Address;

use super::grammar::GrammarSymbol;
use super::FudtError;

#[derive(Clone, Debug, PartialEq, Eq)]
struct VNode {
    symbol: usize,
    children: Vec<VNode>,
}

/// The tree decoded from one string of a violation grammar; nodes other
/// than the root carry violation symbol indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationTree {
    children: Vec<VNode>,
}

impl ViolationTree {
    /// Number of violation nodes.
    pub fn node_count(&self) -> usize {
        fn count(node: &VNode) -> usize {
            1 + node.children.iter().map(count).sum::<usize>()
        }
        self.children.iter().map(count).sum()
    }

    fn node(&self, at: &Address) -> Option<&VNode> {
        let (first, rest) = at.steps().split_first()?;
        let mut node = self.children.get(first.checked_sub(1)?)?;
        for &step in rest {
            node = node.children.get(step.checked_sub(1)?)?;
        }
        Some(node)
    }

    /// The violation symbol at a non-root position.
    pub fn label_at(&self, at: &Address) -> Option<usize> {
        self.node(at).map(|n| n.symbol)
    }

    pub fn child_count_at(&self, at: &Address) -> Option<usize> {
        if at.is_root() {
            return Some(self.children.len());
        }
        self.node(at).map(|n| n.children.len())
    }

    /// All violation-node positions with their symbols, in pre-order.
    pub fn positions(&self) -> Vec<(Address, usize)> {
        fn walk(node: &VNode, at: Address, out: &mut Vec<(Address, usize)>) {
            out.push((at.clone(), node.symbol));
            for (i, child) in node.children.iter().enumerate() {
                walk(child, at.child(i + 1), out);
            }
        }
        let mut out = Vec::new();
        for (i, child) in self.children.iter().enumerate() {
            walk(child, Address::root().child(i + 1), &mut out);
        }
        out
    }

    /// P(η): all positions labeled with the given symbol.
    pub fn positions_of(&self, symbol: usize) -> BTreeSet<Address> {
        self.positions()
            .into_iter()
            .filter(|(_, s)| *s == symbol)
            .map(|(at, _)| at)
            .collect()
    }

    /// The positions of `symbol` that are leaves of the violation tree.
    pub fn leaf_positions_of(&self, symbol: usize) -> BTreeSet<Address> {
        self.positions_of(symbol)
            .into_iter()
            .filter(|at| self.child_count_at(at) == Some(0))
            .collect()
    }

    /// The complete list of level-one positions, in order.
    pub fn level_one(&self) -> Vec<Address> {
        (1..=self.children.len())
            .map(|i| Address::root().child(i))
            .collect()
    }

    pub fn render(&self, name: impl Fn(usize) -> String) -> String {
        fn go(node: &VNode, name: &dyn Fn(usize) -> String, out: &mut String) {
            out.push_str(&name(node.symbol));
            if !node.children.is_empty() {
                out.push('(');
                for (i, child) in node.children.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    go(child, name, out);
                }
                out.push(')');
            }
        }
        let mut out = "ε".to_string();
        if !self.children.is_empty() {
            out.push('(');
            for (i, child) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                go(child, &name, &mut out);
            }
            out.push(')');
        }
        out
    }
}

impl fmt::Display for ViolationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(|k| format!("v{}", k)))
    }
}

/// Decodes a grammar string into its violation tree.
pub fn violation_tree_of(s: &[GrammarSymbol]) -> Result<ViolationTree, FudtError> {
    let mut pos = 0usize;
    expect(s, &mut pos, GrammarSymbol::Open)?;
    let children = parse_children(s, &mut pos)?;
    expect(s, &mut pos, GrammarSymbol::Close)?;
    if pos != s.len() {
        return Err(FudtError::MalformedString { at: pos });
    }
    Ok(ViolationTree { children })
}

fn parse_children(s: &[GrammarSymbol], pos: &mut usize) -> Result<Vec<VNode>, FudtError> {
    let mut children = Vec::new();
    while let Some(GrammarSymbol::Violation(symbol)) = s.get(*pos) {
        let symbol = *symbol;
        *pos += 1;
        expect(s, pos, GrammarSymbol::Open)?;
        let inner = parse_children(s, pos)?;
        expect(s, pos, GrammarSymbol::Close)?;
        children.push(VNode {
            symbol,
            children: inner,
        });
    }
    Ok(children)
}

fn expect(s: &[GrammarSymbol], pos: &mut usize, want: GrammarSymbol) -> Result<(), FudtError> {
    if s.get(*pos) == Some(&want) {
        *pos += 1;
        Ok(())
    } else {
        Err(FudtError::MalformedString { at: *pos })
    }
}
