//! Fixed-width binary encodings of positions, symbols, activation values and
//! attention ranks.

use crate::error::{Error, Result};
use crate::value::{Alphabet, Token};

/// `ℓ(n) = ⌈log₂(n+1)⌉`, the number of bits needed to write `n`.
pub fn ell(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Big-endian binary of `value` in exactly `width` bits.
pub fn to_bits(value: u64, width: usize) -> Result<Vec<bool>> {
    if width < 64 && value >> width != 0 {
        return Err(Error::input(format!(
            "{value} does not fit in {width} bits"
        )));
    }
    Ok((0..width)
        .map(|b| {
            let shift = width - 1 - b;
            shift < 64 && (value >> shift) & 1 == 1
        })
        .collect())
}

pub fn from_bits(bits: &[bool]) -> Result<u64> {
    let significant = bits.iter().skip_while(|&&b| !b).count();
    if significant > 64 {
        return Err(Error::input("bit string exceeds 64 significant bits"));
    }
    Ok(bits
        .iter()
        .fold(0u64, |acc, &b| acc.wrapping_shl(1) | u64::from(b)))
}

/// `bin(i, n)`: `i` in `ℓ(n)` bits, for `1 ≤ i ≤ n`.
pub fn bin(i: usize, n: usize) -> Result<Vec<bool>> {
    if i == 0 || i > n {
        return Err(Error::input(format!("bin({i}, {n}) needs 1 ≤ i ≤ n")));
    }
    to_bits(i as u64, ell(n))
}

/// Injective fixed-width code for `Σ ∪ {$}`: each symbol's declaration
/// index in `ℓ(|Σ|+1)` bits, with `$` taking index `|Σ|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolEncoding {
    alphabet: Alphabet,
    width: usize,
}

impl SymbolEncoding {
    pub fn new(alphabet: &Alphabet) -> Self {
        SymbolEncoding {
            alphabet: alphabet.clone(),
            width: ell(alphabet.len() + 1),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn index(&self, token: Token) -> Result<usize> {
        match token {
            Token::End => Ok(self.alphabet.len()),
            Token::Sym(c) => self
                .alphabet
                .index_of(c)
                .ok_or_else(|| Error::input(format!("symbol `{c}` is not encoded"))),
        }
    }

    pub fn code(&self, token: Token) -> Result<Vec<bool>> {
        to_bits(self.index(token)? as u64, self.width)
    }

    pub fn decode(&self, bits: &[bool]) -> Result<Token> {
        if bits.len() != self.width {
            return Err(Error::input("symbol code of wrong width"));
        }
        let idx = from_bits(bits)? as usize;
        match idx.cmp(&self.alphabet.len()) {
            std::cmp::Ordering::Less => Ok(Token::Sym(self.alphabet.symbols()[idx])),
            std::cmp::Ordering::Equal => Ok(Token::End),
            std::cmp::Ordering::Greater => Err(Error::input(format!("no symbol has code {idx}"))),
        }
    }

    /// `h(x)` for a word over `Σ` (no end marker).
    pub fn encode_word(&self, x: &str) -> Result<Vec<bool>> {
        let mut bits = Vec::with_capacity(self.width * x.chars().count());
        for c in self.alphabet.parse_word(x)? {
            bits.extend(self.code(Token::Sym(c))?);
        }
        Ok(bits)
    }
}

/// Bit widths for a normal-form model at input length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingLayout {
    pub n: usize,
    pub heads: usize,
    /// `s = ℓ(|Σ|+1)`
    pub symbol_width: usize,
}

impl EncodingLayout {
    pub fn new(alphabet_len: usize, heads: usize, n: usize) -> Self {
        EncodingLayout {
            n,
            heads,
            symbol_width: ell(alphabet_len + 1),
        }
    }

    pub fn position_width(&self) -> usize {
        ell(self.n)
    }

    /// `2ℓ(n) + s`
    pub fn leaf_width(&self) -> usize {
        2 * self.position_width() + self.symbol_width
    }

    /// `(H+1)^k (2ℓ(n) + s)`
    pub fn value_width(&self, k: usize) -> usize {
        (self.heads + 1).pow(k as u32) * self.leaf_width()
    }

    /// `2 (H+1)^{k−1} (2ℓ(n) + s)` for `k ≥ 1`.
    pub fn score_width(&self, k: usize) -> usize {
        assert!(k >= 1, "attention scores exist from layer 1");
        2 * self.value_width(k - 1)
    }

    /// Rank in `score_width(k)` bits.
    pub fn encode_score(&self, k: usize, rank: u64) -> Result<Vec<bool>> {
        to_bits(rank, self.score_width(k))
    }
}

/// Whether `count` distinct items fit in `width` bits.
pub fn fits(count: u64, width: usize) -> bool {
    width >= 64 || count <= 1u64 << width
}
