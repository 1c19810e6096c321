//! Named model constructions.

use std::fmt;

use crate::error::{Error, Result};
use crate::guhat::{GuhatModel, Pooling};
use crate::lang::LangSpec;
use crate::rational::{self, Rational};
use crate::restricted::{
    matrix, vector, AffineLayer, FeedForwardNet, PositionEmbedding, RestrictedModel,
};
use crate::value::{Alphabet, Token, Value};

fn flag(b: bool) -> Rational {
    rational::int(i64::from(b))
}

fn pair_value(a: usize, b: usize) -> Value {
    Value::pair(a as i64, b as i64)
}

fn index_of(v: &Value) -> std::result::Result<(usize, usize), String> {
    let (a, b) = v.as_pair()?;
    Ok((a as usize, b as usize))
}

/// Two layers, one head. Layer 1 compares position `i` with `n − i` and
/// marks a mismatch as `(1, i)`; position `n` always marks itself. Layer 2
/// attends to the leftmost mark, and the model accepts iff that is `n`.
pub fn build_palindromes(alphabet: Alphabet) -> Result<GuhatModel> {
    if alphabet.is_empty() {
        return Err(Error::input("alphabet must be nonempty"));
    }
    GuhatModel::builder("palindromes", alphabet, 2, 1)?
        .input(|t, i, n| Ok(Value::leaf(t, i, n)))
        .attention(0, 0, |q, k| {
            let (_, i, n) = q.as_leaf()?;
            let (_, j, _) = k.as_leaf()?;
            Ok(flag(j + i == n || (i == n && j == n)))
        })
        .activation(0, |own, pooled| {
            let (xi, i, n) = own.as_leaf()?;
            let (xj, j, _) = pooled[0].as_leaf()?;
            Ok(pair_value(usize::from(xi != xj || (i == n && j == n)), i))
        })
        .attention(1, 0, |_, k| {
            let (s, _) = k.as_pair()?;
            Ok(rational::int(s))
        })
        .activation(1, |own, pooled| {
            let (_, i) = index_of(own)?;
            let (_, j) = index_of(&pooled[0])?;
            Ok(pair_value(i, j))
        })
        .output(|y| {
            let (i, j) = index_of(y)?;
            Ok(i == j)
        })
        .build()
}

/// One layer: every position attends to the leftmost `0`, or to `$` if
/// there is none; accepts iff position `n` attended to itself.
pub fn build_one_star() -> Result<GuhatModel> {
    let binary = Alphabet::from_chars("01")?;
    GuhatModel::builder("onestar", binary, 1, 1)?
        .input(|t, i, n| Ok(Value::leaf(t, i, n)))
        .attention(0, 0, |_, k| {
            let (t, j, n) = k.as_leaf()?;
            Ok(flag(j == n || t == Token::Sym('0')))
        })
        .activation(0, |own, pooled| {
            let (_, i, _) = own.as_leaf()?;
            let (_, j, _) = pooled[0].as_leaf()?;
            Ok(pair_value(i, j))
        })
        .output(|y| {
            let (i, j) = index_of(y)?;
            Ok(i == j)
        })
        .build()
}

/// Two layers. Layer 1 marks position `i < n` when its symbol differs from
/// the one expected at `i` in `a^{(n−1)/2} b^{…}`, and always marks `n`.
/// Layer 2 routes the leftmost mark to position `n`, which accepts iff it
/// chose itself and `n − 1` is even and at least 2.
pub fn build_anbn() -> Result<GuhatModel> {
    let ab = Alphabet::from_chars("ab")?;
    GuhatModel::builder("anbn", ab, 2, 1)?
        .input(|t, i, n| Ok(Value::leaf(t, i, n)))
        .attention(0, 0, |_, _| Ok(rational::zero()))
        .activation(0, |own, _| {
            let (t, i, n) = own.as_leaf()?;
            let expected = if i <= (n - 1) / 2 { 'a' } else { 'b' };
            Ok(pair_value(
                usize::from(i == n || t != Token::Sym(expected)),
                i,
            ))
        })
        .attention(1, 0, |_, k| {
            let (s, _) = k.as_pair()?;
            Ok(rational::int(s))
        })
        .activation(1, |own, pooled| {
            let (_, i) = index_of(own)?;
            let (_, j) = index_of(&pooled[0])?;
            Ok(pair_value(i, j))
        })
        .output(|y| {
            let (i, j) = index_of(y)?;
            Ok(i == j && (i - 1) % 2 == 0 && i >= 3)
        })
        .build()
}

fn affine(weights: &[&[i64]], bias: &[i64]) -> Result<AffineLayer> {
    AffineLayer::new(matrix(weights), vector(bias))
}

/// Averaging model for MAJORITY: all scores tie, so pooling averages every
/// position and the first coordinate becomes `(#1 − #0)/n`.
pub fn build_majority_ahat() -> Result<RestrictedModel> {
    let model = RestrictedModel {
        name: "majority-ahat".into(),
        alphabet: Alphabet::from_chars("01")?,
        dim: 2,
        token_embed: vec![vector(&[-1, 0]), vector(&[1, 0]), vector(&[0, 0])],
        pos_embed: PositionEmbedding::zero(),
        attention: vec![vec![matrix(&[&[0, 0], &[0, 0]])]],
        activation: vec![FeedForwardNet::new(
            vec![affine(&[&[0, 0, 1, 0], &[0, 0, 0, 1]], &[0, 0])?],
            false,
        )?],
        output: FeedForwardNet::new(vec![affine(&[&[1, 0], &[-1, 0]], &[0, 0])?], false)?,
        mask: Default::default(),
        pooling: Pooling::Averaging,
    };
    model.validate()?;
    Ok(model)
}

/// Unique-attention model for "contains a 1". The second coordinate is a
/// constant 1, so `y_iᵀ A y_j` is the 1-indicator of position `j`; words
/// without a 1 tie everywhere.
pub fn build_contains_one_uhat() -> Result<RestrictedModel> {
    let model = RestrictedModel {
        name: "contains-one".into(),
        alphabet: Alphabet::from_chars("01")?,
        dim: 2,
        token_embed: vec![vector(&[0, 1]), vector(&[1, 1]), vector(&[0, 1])],
        pos_embed: PositionEmbedding::zero(),
        attention: vec![vec![matrix(&[&[0, 0], &[1, 0]])]],
        activation: vec![FeedForwardNet::new(
            vec![affine(&[&[0, 0, 1, 0], &[0, 0, 0, 0]], &[0, 1])?],
            false,
        )?],
        // (y0, y1/2): accept iff the pooled symbol was a 1
        output: FeedForwardNet::new(
            vec![AffineLayer::new(
                vec![
                    vec![rational::one(), rational::zero()],
                    vec![rational::zero(), rational::ratio(1, 2)],
                ],
                vector(&[0, 0]),
            )?],
            false,
        )?,
        mask: Default::default(),
        pooling: Pooling::Unique,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZooKind {
    Guhat,
    Uhat,
    Ahat,
}

impl fmt::Display for ZooKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZooKind::Guhat => "GUHAT",
            ZooKind::Uhat => "UHAT",
            ZooKind::Ahat => "AHAT",
        })
    }
}

#[derive(Debug, Clone)]
pub enum ZooModel {
    Guhat(GuhatModel),
    Restricted(RestrictedModel),
}

impl ZooModel {
    pub fn alphabet(&self) -> &Alphabet {
        match self {
            ZooModel::Guhat(m) => m.alphabet(),
            ZooModel::Restricted(m) => &m.alphabet,
        }
    }

    pub fn accepts(&self, x: &str) -> Result<bool> {
        match self {
            ZooModel::Guhat(m) => m.accepts(x, Pooling::Unique),
            ZooModel::Restricted(m) => m.accepts(x),
        }
    }

    /// A unique-attention model in generalized form; averaging models have
    /// none.
    pub fn as_guhat(&self) -> Result<GuhatModel> {
        match self {
            ZooModel::Guhat(m) => Ok(m.clone()),
            ZooModel::Restricted(m) if m.pooling == Pooling::Unique => m.to_guhat(),
            ZooModel::Restricted(m) => Err(Error::Unsupported(format!(
                "`{}` uses averaging attention; averaging models are not compilable",
                m.name
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub kind: ZooKind,
    pub language: LangSpec,
    /// Longest input length swept against the oracle.
    pub sweep_len: usize,
    pub description: &'static str,
}

impl ZooEntry {
    pub fn build(&self) -> Result<ZooModel> {
        match self.name {
            "palindromes" => {
                build_palindromes(self.language.alphabet().clone()).map(ZooModel::Guhat)
            }
            "onestar" => build_one_star().map(ZooModel::Guhat),
            "anbn" => build_anbn().map(ZooModel::Guhat),
            "majority-ahat" => build_majority_ahat().map(ZooModel::Restricted),
            "contains-one" => build_contains_one_uhat().map(ZooModel::Restricted),
            other => unreachable!("registry entry `{other}` has no builder"),
        }
    }
}

pub fn entries() -> Vec<ZooEntry> {
    let abc = Alphabet::from_chars("abc").expect("static alphabet");
    vec![
        ZooEntry {
            name: "palindromes",
            kind: ZooKind::Guhat,
            language: LangSpec::palindromes(abc),
            sweep_len: 8,
            description: "mirror-position mismatch marks, leftmost mark routed to $",
        },
        ZooEntry {
            name: "onestar",
            kind: ZooKind::Guhat,
            language: LangSpec::one_star(),
            sweep_len: 8,
            description: "leftmost 0 routed to $",
        },
        ZooEntry {
            name: "anbn",
            kind: ZooKind::Guhat,
            language: LangSpec::anbn(),
            sweep_len: 8,
            description: "out-of-place symbol marks, leftmost mark routed to $",
        },
        ZooEntry {
            name: "majority-ahat",
            kind: ZooKind::Ahat,
            language: LangSpec::majority(),
            sweep_len: 14,
            description: "uniform averaging of ±1 symbol embeddings",
        },
        ZooEntry {
            name: "contains-one",
            kind: ZooKind::Uhat,
            language: LangSpec::contains_one(),
            sweep_len: 8,
            description: "attention to the leftmost 1, tie-rich without one",
        },
    ]
}

pub fn names() -> Vec<&'static str> {
    entries().iter().map(|e| e.name).collect()
}

pub fn registry(name: &str) -> Result<ZooEntry> {
    entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownModel {
            name: name.to_string(),
            available: names().into_iter().map(String::from).collect(),
        })
}

pub fn guhat_entries() -> Vec<ZooEntry> {
    entries()
        .into_iter()
        .filter(|e| e.kind == ZooKind::Guhat)
        .collect()
}
