use std::cmp::Ordering;
use std::fmt;

use super::{CoreError, RankedAlphabet};

/// A node address in Dewey notation: the root is the empty sequence, the
/// i-th child of u (1-based) is u·i.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(Vec<usize>);

impl Address {
    pub fn root() -> Self {
        Address(Vec::new())
    }

    pub fn from_steps(steps: Vec<usize>) -> Self {
        Address(steps)
    }

    pub fn child(&self, i: usize) -> Self {
        let mut steps = self.0.clone();
        steps.push(i);
        Address(steps)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(Address(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    /// Number of steps from the root.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn parse(text: &str) -> Option<Self> {
        if text == "ε" {
            return Some(Address::root());
        }
        let mut steps = Vec::new();
        for part in text.split('.') {
            let n: usize = part.parse().ok()?;
            if n == 0 {
                return None;
            }
            steps.push(n);
        }
        Some(Address(steps))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// A node-labeled ordered tree over a ranked alphabet.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RankedTree {
    label: String,
    children: Vec<RankedTree>,
}

impl RankedTree {
    pub fn new(label: impl Into<String>, children: Vec<RankedTree>) -> Self {
        RankedTree {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(label: impl Into<String>) -> Self {
        RankedTree::new(label, Vec::new())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children(&self) -> &[RankedTree] {
        &self.children
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(RankedTree::size).sum::<usize>()
    }

    /// Checks that every node's child count matches its label's rank.
    pub fn validate(&self, alphabet: &RankedAlphabet) -> Result<(), CoreError> {
        let rank = alphabet
            .rank(&self.label)
            .ok_or_else(|| CoreError::UnknownSymbol {
                symbol: self.label.clone(),
            })?;
        if rank != self.children.len() {
            return Err(CoreError::RankMismatch {
                symbol: self.label.clone(),
                expected: rank,
                got: self.children.len(),
            });
        }
        for child in &self.children {
            child.validate(alphabet)?;
        }
        Ok(())
    }

    /// All node addresses in pre-order.
    pub fn addresses(&self) -> Vec<Address> {
        let mut out = Vec::with_capacity(self.size());
        self.collect_addresses(Address::root(), &mut out);
        out
    }

    fn collect_addresses(&self, at: Address, out: &mut Vec<Address>) {
        out.push(at.clone());
        for (i, child) in self.children.iter().enumerate() {
            child.collect_addresses(at.child(i + 1), out);
        }
    }

    /// The subtree rooted at `at`, written t/u.
    pub fn subtree(&self, at: &Address) -> Option<&RankedTree> {
        let mut node = self;
        for &step in at.steps() {
            node = node.children.get(step.checked_sub(1)?)?;
        }
        Some(node)
    }

    /// The tree with the subtree at `at` replaced, written t[u <- s].
    pub fn replaced(&self, at: &Address, replacement: RankedTree) -> Option<RankedTree> {
        fn go(node: &RankedTree, steps: &[usize], replacement: RankedTree) -> Option<RankedTree> {
            match steps.split_first() {
                None => Some(replacement),
                Some((&step, rest)) => {
                    let idx = step.checked_sub(1)?;
                    if idx >= node.children.len() {
                        return None;
                    }
                    let mut children = node.children.clone();
                    children[idx] = go(&node.children[idx], rest, replacement)?;
                    Some(RankedTree::new(node.label.clone(), children))
                }
            }
        }
        go(self, at.steps(), replacement)
    }
}

// Size first, then labels and children recursively. This is the fixed term
// order used for enumeration and for canonical state naming.
impl Ord for RankedTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.label.cmp(&other.label))
            .then_with(|| self.children.cmp(&other.children))
    }
}

impl PartialOrd for RankedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RankedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, child) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", child)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RankedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Label reserved for the unique hole of a context.
pub const HOLE_LABEL: &str = "_hole";

/// A tree over the alphabet extended with one rank-0 hole symbol; exactly
/// one node carries the hole.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Context {
    tree: RankedTree,
    hole: Address,
}

impl Context {
    pub fn new(tree: RankedTree) -> Result<Self, CoreError> {
        let holes: Vec<Address> = tree
            .addresses()
            .into_iter()
            .filter(|a| tree.subtree(a).map(|t| t.label()) == Some(HOLE_LABEL))
            .collect();
        if holes.len() != 1 {
            return Err(CoreError::HoleCount { found: holes.len() });
        }
        let hole = holes.into_iter().next().unwrap();
        Ok(Context { tree, hole })
    }

    /// The trivial context consisting of the hole alone.
    pub fn hole() -> Self {
        Context {
            tree: RankedTree::leaf(HOLE_LABEL),
            hole: Address::root(),
        }
    }

    pub fn tree(&self) -> &RankedTree {
        &self.tree
    }

    pub fn hole_address(&self) -> &Address {
        &self.hole
    }

    pub fn size(&self) -> usize {
        self.tree.size()
    }

    /// C[t]: the context with its hole filled by `filler`.
    pub fn apply(&self, filler: &RankedTree) -> RankedTree {
        self.tree
            .replaced(&self.hole, filler.clone())
            .expect("hole address is valid by construction")
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tree)
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(l: RankedTree, r: RankedTree) -> RankedTree {
        RankedTree::new("f", vec![l, r])
    }

    fn a() -> RankedTree {
        RankedTree::leaf("a")
    }

    fn b() -> RankedTree {
        RankedTree::leaf("b")
    }

    #[test]
    fn addresses_and_subtrees() {
        let t = f(a(), f(b(), a()));
        let addrs = t.addresses();
        assert_eq!(addrs.len(), 5);
        assert_eq!(addrs[0], Address::root());
        let u = Address::from_steps(vec![2, 1]);
        assert_eq!(t.subtree(&u).unwrap(), &b());
        assert!(t.subtree(&Address::from_steps(vec![3])).is_none());
    }

    #[test]
    fn replace_subtree() {
        let t = f(a(), b());
        let u = Address::from_steps(vec![2]);
        let replaced = t.replaced(&u, a()).unwrap();
        assert_eq!(replaced, f(a(), a()));
    }

    #[test]
    fn term_order_is_size_then_structure() {
        let mut trees = vec![f(b(), a()), f(a(), b()), a(), b()];
        trees.sort();
        assert_eq!(trees, vec![a(), b(), f(a(), b()), f(b(), a())]);
    }

    #[test]
    fn rank_validation() {
        let alpha = RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap();
        assert!(f(a(), a()).validate(&alpha).is_ok());
        let bad = RankedTree::new("f", vec![a()]);
        assert!(matches!(
            bad.validate(&alpha),
            Err(CoreError::RankMismatch { .. })
        ));
    }

    #[test]
    fn context_has_exactly_one_hole() {
        let ctx = Context::new(f(RankedTree::leaf(HOLE_LABEL), b())).unwrap();
        assert_eq!(ctx.apply(&a()), f(a(), b()));
        assert!(Context::new(f(a(), b())).is_err());
        assert!(Context::new(f(
            RankedTree::leaf(HOLE_LABEL),
            RankedTree::leaf(HOLE_LABEL)
        ))
        .is_err());
    }

    #[test]
    fn address_display_and_parse() {
        assert_eq!(Address::root().to_string(), "ε");
        let u = Address::from_steps(vec![2, 1]);
        assert_eq!(u.to_string(), "2.1");
        assert_eq!(Address::parse("2.1"), Some(u));
        assert_eq!(Address::parse("ε"), Some(Address::root()));
        assert_eq!(Address::parse("0"), None);
    }
}
