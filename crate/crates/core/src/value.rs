//! Input symbols, alphabets and the opaque activation values carried between
//! transformer layers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Character reserved for the end-of-sequence marker.
pub const END_MARKER: char = '$';

/// One input position: an alphabet symbol or the end marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Sym(char),
    End,
}

impl Token {
    pub fn as_char(self) -> char {
        match self {
            Token::Sym(c) => c,
            Token::End => END_MARKER,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Ordered, duplicate-free, nonempty symbol set not containing `$`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::input("alphabet must be nonempty"));
        }
        for (idx, &c) in symbols.iter().enumerate() {
            if c == END_MARKER {
                return Err(Error::input("`$` is reserved for the end marker"));
            }
            if c.is_whitespace() {
                return Err(Error::input("alphabet symbols must not be whitespace"));
            }
            if symbols[..idx].contains(&c) {
                return Err(Error::input(format!("duplicate alphabet symbol `{c}`")));
            }
        }
        Ok(Alphabet(symbols))
    }

    /// Builds from the characters of a string, e.g. `"abc"`.
    pub fn from_chars(s: &str) -> Result<Self> {
        Self::new(s.chars())
    }

    pub fn symbols(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.0.iter().position(|&s| s == c)
    }

    pub fn contains(&self, c: char) -> bool {
        self.index_of(c).is_some()
    }

    /// Every token in declaration order with `$` last.
    pub fn tokens_with_end(&self) -> Vec<Token> {
        self.0
            .iter()
            .map(|&c| Token::Sym(c))
            .chain(std::iter::once(Token::End))
            .collect()
    }

    /// Validates `x` against the alphabet and converts it into symbols.
    pub fn parse_word(&self, x: &str) -> Result<Vec<char>> {
        x.chars()
            .map(|c| {
                if self.contains(c) {
                    Ok(c)
                } else {
                    Err(Error::input(format!(
                        "symbol `{c}` is not in the alphabet {self}"
                    )))
                }
            })
            .collect()
    }

    /// `x` followed by the end marker.
    pub fn end_marked(&self, x: &str) -> Result<Vec<Token>> {
        Ok(self
            .parse_word(x)?
            .into_iter()
            .map(Token::Sym)
            .chain(std::iter::once(Token::End))
            .collect())
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (idx, c) in self.0.iter().enumerate() {
            if idx > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// An activation value.
///
/// Generalized transformers place no restriction on activations, so this is a
/// small tagged tree: input triples `(σ,i,n)`, integers, rationals, tuples and
/// rational vectors for the restricted models.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Leaf {
        token: Token,
        pos: usize,
        len: usize,
    },
    Int(i64),
    Rat(Rational),
    Tuple(Arc<[Value]>),
    Vector(Arc<[Rational]>),
}

impl Value {
    pub fn leaf(token: Token, pos: usize, len: usize) -> Self {
        Value::Leaf { token, pos, len }
    }

    pub fn tuple(children: impl IntoIterator<Item = Value>) -> Self {
        Value::Tuple(children.into_iter().collect())
    }

    pub fn pair(a: i64, b: i64) -> Self {
        Value::tuple([Value::Int(a), Value::Int(b)])
    }

    pub fn vector(components: impl IntoIterator<Item = Rational>) -> Self {
        Value::Vector(components.into_iter().collect())
    }

    pub fn as_leaf(&self) -> std::result::Result<(Token, usize, usize), String> {
        match self {
            Value::Leaf { token, pos, len } => Ok((*token, *pos, *len)),
            other => Err(format!("expected an input triple, found {other}")),
        }
    }

    pub fn as_int(&self) -> std::result::Result<i64, String> {
        match self {
            Value::Int(v) => Ok(*v),
            other => Err(format!("expected an integer, found {other}")),
        }
    }

    pub fn as_tuple(&self) -> std::result::Result<&[Value], String> {
        match self {
            Value::Tuple(items) => Ok(items),
            other => Err(format!("expected a tuple, found {other}")),
        }
    }

    /// Integer pair `(a,b)`.
    pub fn as_pair(&self) -> std::result::Result<(i64, i64), String> {
        match self.as_tuple()? {
            [a, b] => Ok((a.as_int()?, b.as_int()?)),
            items => Err(format!("expected a pair, found a {}-tuple", items.len())),
        }
    }

    pub fn as_vector(&self) -> std::result::Result<&[Rational], String> {
        match self {
            Value::Vector(items) => Ok(items),
            other => Err(format!("expected a rational vector, found {other}")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Leaf { token, pos, len } => write!(f, "({token},{pos},{len})"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Rat(r) => write!(f, "{}", rational::render(r)),
            Value::Tuple(items) => {
                write!(f, "(")?;
                for (idx, item) in items.iter().enumerate() {
                    if idx > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
            Value::Vector(items) => {
                write!(f, "[")?;
                for (idx, item) in items.iter().enumerate() {
                    if idx > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", rational::render(item))?;
                }
                write!(f, "]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn canonical_rendering() {
        assert_eq!(Value::leaf(Token::Sym('a'), 1, 6).to_string(), "(a,1,6)");
        assert_eq!(Value::leaf(Token::End, 6, 6).to_string(), "($,6,6)");
        assert_eq!(Value::pair(0, 1).to_string(), "(0,1)");
        let nested = Value::tuple([
            Value::tuple([Value::leaf(Token::End, 6, 6), Value::leaf(Token::End, 6, 6)]),
            Value::tuple([
                Value::leaf(Token::Sym('b'), 2, 6),
                Value::leaf(Token::Sym('c'), 4, 6),
            ]),
        ]);
        assert_eq!(nested.to_string(), "((($,6,6),($,6,6)),((b,2,6),(c,4,6)))");
        assert_eq!(
            Value::vector([ratio(1, 2), ratio(-3, 1)]).to_string(),
            "[1/2,-3]"
        );
    }

    #[test]
    fn alphabet_rejects_bad_symbols() {
        assert!(Alphabet::from_chars("").is_err());
        assert!(Alphabet::from_chars("a$").is_err());
        assert!(Alphabet::from_chars("aba").is_err());
        let sigma = Alphabet::from_chars("abc").unwrap();
        assert!(sigma.parse_word("abd").is_err());
        assert_eq!(
            sigma.end_marked("ab").unwrap(),
            vec![Token::Sym('a'), Token::Sym('b'), Token::End]
        );
    }
}
