use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two output symbols.
///
/// `A` has index 0 and `B` has index 1. For a Markov model, `A` is emitted on
/// entering state 0 and `B` on entering state 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    A,
    B,
}

impl Symbol {
    pub const ALL: [Symbol; 2] = [Symbol::A, Symbol::B];

    pub fn index(self) -> usize {
        match self {
            Symbol::A => 0,
            Symbol::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Symbol> {
        match i {
            0 => Some(Symbol::A),
            1 => Some(Symbol::B),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::A => 'A',
            Symbol::B => 'B',
        }
    }
}

impl TryFrom<char> for Symbol {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            'A' => Ok(Symbol::A),
            'B' => Ok(Symbol::B),
            other => Err(Error::InvalidWord(format!("unknown symbol {other:?}"))),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A non-empty sequence of output symbols, written left to right in emission
/// order (`"BAAAB"` emits `B` first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidWord("word must contain at least one symbol".into()));
        }
        Ok(Word(symbols))
    }

    pub fn single(s: Symbol) -> Self {
        Word(vec![s])
    }

    /// `A`, `g` copies of `B`, then `A`.
    pub fn block(g: usize) -> Self {
        let mut v = Vec::with_capacity(g + 2);
        v.push(Symbol::A);
        v.extend(std::iter::repeat_n(Symbol::B, g));
        v.push(Symbol::A);
        Word(v)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.iter().copied()
    }

    /// Returns `self` followed by `s`.
    pub fn extended(&self, s: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    /// All `2^len` words of the given length, in lexicographic order with `A < B`.
    pub fn enumerate(len: usize) -> impl Iterator<Item = Word> {
        assert!((1..64).contains(&len), "word length must be in 1..64");
        (0u64..(1u64 << len)).map(move |bits| {
            Word(
                (0..len)
                    .map(|k| {
                        if bits >> (len - 1 - k) & 1 == 1 {
                            Symbol::B
                        } else {
                            Symbol::A
                        }
                    })
                    .collect(),
            )
        })
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s.trim().chars().map(Symbol::try_from).collect::<Result<Vec<_>>>()?;
        Word::new(symbols)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
