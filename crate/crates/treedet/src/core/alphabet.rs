use std::collections::BTreeMap;
use std::fmt;

use super::CoreError;

/// A finite set of symbols, each with a fixed arity.
///
/// Every alphabet must contain at least one rank-0 symbol, otherwise there
/// are no trees over it at all.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedAlphabet {
    ranks: BTreeMap<String, usize>,
}

impl RankedAlphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut ranks = BTreeMap::new();
        for (name, rank) in symbols {
            let name = name.into();
            if ranks.insert(name.clone(), rank).is_some() {
                return Err(CoreError::DuplicateSymbol { symbol: name });
            }
        }
        if !ranks.values().any(|&r| r == 0) {
            return Err(CoreError::NoLeafSymbol);
        }
        Ok(RankedAlphabet { ranks })
    }

    pub fn rank(&self, symbol: &str) -> Option<usize> {
        self.ranks.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.ranks.contains_key(symbol)
    }

    /// Symbols with their ranks, sorted by name.
    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> {
        self.ranks.iter().map(|(name, &rank)| (name.as_str(), rank))
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks.values().copied().max().unwrap_or(0)
    }

    /// The same alphabet with one extra symbol. Used by the oracle to adjoin
    /// the context hole.
    pub fn extended(&self, symbol: &str, rank: usize) -> Result<Self, CoreError> {
        let mut ranks = self.ranks.clone();
        if ranks.insert(symbol.to_string(), rank).is_some() {
            return Err(CoreError::DuplicateSymbol {
                symbol: symbol.to_string(),
            });
        }
        Ok(RankedAlphabet { ranks })
    }
}

impl fmt::Display for RankedAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, rank) in self.symbols() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}:{}", name, rank)?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_symbols() {
        let err = RankedAlphabet::new([("a", 0), ("a", 1)]).unwrap_err();
        assert!(matches!(err, CoreError::DuplicateSymbol { .. }));
    }

    #[test]
    fn requires_a_leaf_symbol() {
        let err = RankedAlphabet::new([("f", 2), ("g", 1)]).unwrap_err();
        assert!(matches!(err, CoreError::NoLeafSymbol));
    }

    #[test]
    fn symbols_are_sorted() {
        let alpha = RankedAlphabet::new([("f", 2), ("a", 0), ("b", 0)]).unwrap();
        let names: Vec<_> = alpha.symbols().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names, ["a", "b", "f"]);
        assert_eq!(alpha.rank("f"), Some(2));
        assert_eq!(alpha.rank("z"), None);
    }
}
