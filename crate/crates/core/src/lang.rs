//! Reference membership oracles for the formal languages used as ground truth.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::value::Alphabet;

/// Canonical bracket pairs, used in order when no pairs are given.
const DEFAULT_PAIRS: [(char, char); 4] = [('[', ']'), ('(', ')'), ('{', '}'), ('<', '>')];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LangKind {
    Parity,
    Majority,
    Equality,
    Dyck { k: usize },
    DyckBounded { k: usize, depth: usize },
    Shuffle { k: usize },
    Palindromes,
    OneStar,
    ContainsOne,
    AnBn,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LangSpec {
    kind: LangKind,
    alphabet: Alphabet,
    pairs: Vec<(char, char)>,
}

fn binary() -> Alphabet {
    Alphabet::from_chars("01").expect("static alphabet")
}

impl LangSpec {
    fn simple(kind: LangKind, alphabet: Alphabet) -> Self {
        LangSpec {
            kind,
            alphabet,
            pairs: Vec::new(),
        }
    }

    pub fn parity() -> Self {
        Self::simple(LangKind::Parity, binary())
    }

    pub fn majority() -> Self {
        Self::simple(LangKind::Majority, binary())
    }

    pub fn equality() -> Self {
        Self::simple(LangKind::Equality, binary())
    }

    pub fn one_star() -> Self {
        Self::simple(LangKind::OneStar, binary())
    }

    pub fn contains_one() -> Self {
        Self::simple(LangKind::ContainsOne, binary())
    }

    pub fn anbn() -> Self {
        Self::simple(
            LangKind::AnBn,
            Alphabet::from_chars("ab").expect("static alphabet"),
        )
    }

    pub fn palindromes(alphabet: Alphabet) -> Self {
        Self::simple(LangKind::Palindromes, alphabet)
    }

    fn default_pairs(k: usize) -> Result<Vec<(char, char)>> {
        if k == 0 {
            return Err(Error::input("bracket-pair count k must be at least 1"));
        }
        if k > DEFAULT_PAIRS.len() {
            return Err(Error::input(format!(
                "no canonical symbols for k = {k}; supply explicit bracket pairs"
            )));
        }
        Ok(DEFAULT_PAIRS[..k].to_vec())
    }

    fn bracketed(kind: LangKind, pairs: Vec<(char, char)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::input("bracket-pair count k must be at least 1"));
        }
        let alphabet = Alphabet::new(pairs.iter().flat_map(|&(o, c)| [o, c]))?;
        Ok(LangSpec {
            kind,
            alphabet,
            pairs,
        })
    }

    pub fn dyck(k: usize) -> Result<Self> {
        Self::bracketed(LangKind::Dyck { k }, Self::default_pairs(k)?)
    }

    pub fn dyck_bounded(k: usize, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::input("nesting bound D must be at least 1"));
        }
        Self::bracketed(LangKind::DyckBounded { k, depth }, Self::default_pairs(k)?)
    }

    pub fn shuffle(k: usize) -> Result<Self> {
        Self::bracketed(LangKind::Shuffle { k }, Self::default_pairs(k)?)
    }

    /// Same language family with caller-chosen bracket symbols.
    pub fn with_pairs(self, pairs: Vec<(char, char)>) -> Result<Self> {
        let kind = match self.kind {
            LangKind::Dyck { .. } => LangKind::Dyck { k: pairs.len() },
            LangKind::DyckBounded { depth, .. } => LangKind::DyckBounded {
                k: pairs.len(),
                depth,
            },
            LangKind::Shuffle { .. } => LangKind::Shuffle { k: pairs.len() },
            _ => return Err(Error::input("only bracket languages take bracket pairs")),
        };
        Self::bracketed(kind, pairs)
    }

    pub fn kind(&self) -> LangKind {
        self.kind
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn pairs(&self) -> &[(char, char)] {
        &self.pairs
    }

    /// Decides membership of `x`.
    pub fn member(&self, x: &str) -> Result<bool> {
        let word = self.alphabet.parse_word(x)?;
        let count = |c: char| word.iter().filter(|&&s| s == c).count();
        Ok(match self.kind {
            LangKind::Parity => count('1') % 2 == 0,
            LangKind::Majority => count('1') >= count('0'),
            LangKind::Equality => count('1') == count('0'),
            LangKind::Dyck { .. } => self.max_nesting(&word).is_some(),
            LangKind::DyckBounded { depth, .. } => {
                self.max_nesting(&word).is_some_and(|h| h <= depth)
            }
            LangKind::Shuffle { .. } => self.pairs.iter().all(|&(open, close)| {
                let mut balance = 0i64;
                for &c in &word {
                    if c == open {
                        balance += 1;
                    } else if c == close {
                        balance -= 1;
                        if balance < 0 {
                            return false;
                        }
                    }
                }
                balance == 0
            }),
            LangKind::Palindromes => word.iter().eq(word.iter().rev()),
            LangKind::OneStar => word.iter().all(|&c| c == '1'),
            LangKind::ContainsOne => count('1') > 0,
            LangKind::AnBn => {
                let half = word.len() / 2;
                !word.is_empty()
                    && word.len() % 2 == 0
                    && word[..half].iter().all(|&c| c == 'a')
                    && word[half..].iter().all(|&c| c == 'b')
            }
        })
    }

    /// Maximum stack height if `word` is well nested, `None` otherwise.
    fn max_nesting(&self, word: &[char]) -> Option<usize> {
        let mut stack = Vec::new();
        let mut max_height = 0;
        for &c in word {
            if let Some(t) = self.pairs.iter().position(|&(o, _)| o == c) {
                stack.push(t);
                max_height = max_height.max(stack.len());
            } else {
                let t = self.pairs.iter().position(|&(_, cl)| cl == c)?;
                if stack.pop() != Some(t) {
                    return None;
                }
            }
        }
        stack.is_empty().then_some(max_height)
    }
}

impl fmt::Display for LangSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LangKind::Parity => write!(f, "parity"),
            LangKind::Majority => write!(f, "majority"),
            LangKind::Equality => write!(f, "equality"),
            LangKind::Dyck { k } => write!(f, "dyck:{k}"),
            LangKind::DyckBounded { k, depth } => write!(f, "dyckd:{k}:{depth}"),
            LangKind::Shuffle { k } => write!(f, "shuffle:{k}"),
            LangKind::Palindromes => write!(f, "palindromes"),
            LangKind::OneStar => write!(f, "onestar"),
            LangKind::ContainsOne => write!(f, "containsone"),
            LangKind::AnBn => write!(f, "anbn"),
        }
    }
}

impl FromStr for LangSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| Error::input(format!("bad number `{p}` in language name `{s}`")))
        };
        match parts.as_slice() {
            ["parity"] => Ok(Self::parity()),
            ["majority"] => Ok(Self::majority()),
            ["equality"] => Ok(Self::equality()),
            ["palindromes"] => Ok(Self::palindromes(
                Alphabet::from_chars("abc").expect("static alphabet"),
            )),
            ["onestar"] => Ok(Self::one_star()),
            ["containsone"] => Ok(Self::contains_one()),
            ["anbn"] => Ok(Self::anbn()),
            ["dyck", k] => Self::dyck(num(k)?),
            ["dyckd", k, d] => Self::dyck_bounded(num(k)?, num(d)?),
            ["shuffle", k] => Self::shuffle(num(k)?),
            _ => Err(Error::input(format!(
                "unknown language `{s}`; expected one of parity, majority, equality, \
                 dyck:<k>, dyckd:<k>:<D>, shuffle:<k>, palindromes, onestar, containsone, anbn"
            ))),
        }
    }
}

/// All words of exactly `len` symbols, in lexicographic order of the
/// alphabet's declaration order.
#[derive(Debug, Clone)]
pub struct Words {
    symbols: Vec<char>,
    digits: Vec<usize>,
    done: bool,
}

impl Words {
    pub fn new(alphabet: &Alphabet, len: usize) -> Self {
        Words {
            symbols: alphabet.symbols().to_vec(),
            digits: vec![0; len],
            done: false,
        }
    }
}

impl Iterator for Words {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        if self.done {
            return None;
        }
        let word: String = self.digits.iter().map(|&d| self.symbols[d]).collect();
        // odometer increment, rightmost digit fastest
        self.done = true;
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.symbols.len() {
                self.done = false;
                break;
            }
            *d = 0;
        }
        Some(word)
    }
}

/// Every string of length `0..=max_len` in length-then-lexicographic order.
pub fn enumerate_strings(alphabet: &Alphabet, max_len: usize) -> Vec<String> {
    (0..=max_len)
        .flat_map(|len| Words::new(alphabet, len))
        .collect()
}

/// `Σ_{m ≤ max_len} |Σ|^m`, saturating.
pub fn count_strings(alphabet_size: usize, max_len: usize) -> u64 {
    (0..=max_len).fold(0u64, |acc, m| {
        acc.saturating_add((alphabet_size as u64).saturating_pow(m as u32))
    })
}
