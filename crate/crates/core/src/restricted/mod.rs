//! Restricted transformers over exact rational vectors: bilinear attention,
//! ReLU feed-forward activations, and a two-logit output network.

mod convert;

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::guhat::{argmax_positions, mean_of, AttentionRow, GuhatModel, MaskMode, Pooling, Trace};
use crate::rational::{self, Rational};
use crate::value::{Alphabet, Token, Value};

pub use convert::{plan_conversion, tie_audit, uhat_to_ahat, ConversionPlan};

/// Row-major rational matrix.
pub type Matrix = Vec<Vec<Rational>>;

pub fn matrix(rows: &[&[i64]]) -> Matrix {
    rows.iter()
        .map(|r| r.iter().map(|&v| rational::int(v)).collect())
        .collect()
}

pub fn vector(values: &[i64]) -> Vec<Rational> {
    values.iter().map(|&v| rational::int(v)).collect()
}

/// `y ↦ W y + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineLayer {
    pub weights: Matrix,
    pub bias: Vec<Rational>,
}

impl AffineLayer {
    pub fn new(weights: Matrix, bias: Vec<Rational>) -> Result<Self> {
        let cols = weights.first().map_or(0, Vec::len);
        if weights.is_empty() || cols == 0 {
            return Err(Error::input("affine layer needs a nonempty weight matrix"));
        }
        if weights.iter().any(|r| r.len() != cols) {
            return Err(Error::input("ragged weight matrix"));
        }
        if bias.len() != weights.len() {
            return Err(Error::input(format!(
                "bias has {} entries for {} output rows",
                bias.len(),
                weights.len()
            )));
        }
        Ok(AffineLayer { weights, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                row.iter()
                    .zip(v)
                    .filter(|(w, _)| !w.is_zero())
                    .fold(b.clone(), |acc, (w, x)| acc + w * x)
            })
            .collect()
    }
}

/// Affine layers with ReLU after each one, except the last when
/// `relu_last` is false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedForwardNet {
    layers: Vec<AffineLayer>,
    relu_last: bool,
}

impl FeedForwardNet {
    pub fn new(layers: Vec<AffineLayer>, relu_last: bool) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("feed-forward net needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::input(format!(
                    "layer dimensions do not chain: {} then {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(FeedForwardNet { layers, relu_last })
    }

    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    pub fn relu_last(&self) -> bool {
        self.relu_last
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn eval(&self, v: &[Rational]) -> Result<Vec<Rational>> {
        if v.is_empty() || v.len() != self.in_dim() {
            return Err(Error::input(format!(
                "net expects a {}-vector, got {}",
                self.in_dim(),
                v.len()
            )));
        }
        let last = self.layers.len() - 1;
        let mut cur = v.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            cur = layer.apply(&cur);
            if idx < last || self.relu_last {
                cur = cur.iter().map(rational::relu).collect();
            }
        }
        Ok(cur)
    }
}

/// `yᵀ A y′`.
pub fn bilinear_score(y: &[Rational], y2: &[Rational], a: &Matrix) -> Result<Rational> {
    if a.len() != y.len() || a.iter().any(|r| r.len() != y2.len()) {
        return Err(Error::input(format!(
            "bilinear form of shape {}×{} applied to {}- and {}-vectors",
            a.len(),
            a.first().map_or(0, Vec::len),
            y.len(),
            y2.len()
        )));
    }
    let mut acc = Rational::zero();
    for (yi, row) in y.iter().zip(a) {
        if yi.is_zero() {
            continue;
        }
        for (aij, yj) in row.iter().zip(y2) {
            if !aij.is_zero() && !yj.is_zero() {
                acc += yi * aij * yj;
            }
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PosFeature {
    /// `i / n`
    Ratio,
    /// `n / n`, the second half of the scaled `(i, n)` pair.
    LengthRatio,
    Constant(Rational),
    /// `i / N` for a fixed denominator.
    IndexOver(BigInt),
}

/// Position embedding `p(i, n)` as a sparse list of coordinate features.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PositionEmbedding {
    terms: Vec<(usize, PosFeature)>,
}

impl PositionEmbedding {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Scalar `i/n` in coordinate `coord`.
    pub fn ratio(coord: usize) -> Self {
        PositionEmbedding {
            terms: vec![(coord, PosFeature::Ratio)],
        }
    }

    /// The pair `(i, n)` scaled by `1/n`.
    pub fn pair(index_coord: usize, length_coord: usize) -> Self {
        PositionEmbedding {
            terms: vec![
                (index_coord, PosFeature::Ratio),
                (length_coord, PosFeature::LengthRatio),
            ],
        }
    }

    pub fn with(mut self, coord: usize, feature: PosFeature) -> Self {
        self.terms.push((coord, feature));
        self
    }

    pub fn terms(&self) -> &[(usize, PosFeature)] {
        &self.terms
    }

    pub fn embed(&self, dim: usize, pos: usize, len: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); dim];
        for (coord, feature) in &self.terms {
            out[*coord] += match feature {
                PosFeature::Ratio => rational::ratio(pos as i64, len as i64),
                PosFeature::LengthRatio => rational::one(),
                PosFeature::Constant(c) => c.clone(),
                PosFeature::IndexOver(den) => Rational::new(BigInt::from(pos), den.clone()),
            };
        }
        out
    }
}

/// A UHAT or AHAT of dimension `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedModel {
    pub name: String,
    pub alphabet: Alphabet,
    pub dim: usize,
    /// One row per alphabet symbol in declaration order, then `$`.
    pub token_embed: Vec<Vec<Rational>>,
    pub pos_embed: PositionEmbedding,
    /// `attention[l][h]` is `A_{l+1,h+1}`.
    pub attention: Vec<Vec<Matrix>>,
    /// Each maps `(y_i, b_1, …, b_H)` (dimension `d(H+1)`) to dimension `d`.
    pub activation: Vec<FeedForwardNet>,
    /// Maps `d` to `(accept logit, reject logit)`.
    pub output: FeedForwardNet,
    pub mask: MaskMode,
    pub pooling: Pooling,
}

impl RestrictedModel {
    pub fn layers(&self) -> usize {
        self.attention.len()
    }

    pub fn heads(&self) -> usize {
        self.attention.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        let bad = |msg: String| Err(Error::Validation(format!("model `{}`: {msg}", self.name)));
        if d == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.layers() == 0 || self.heads() == 0 {
            return bad("needs at least one layer and one head".into());
        }
        if self.token_embed.len() != self.alphabet.len() + 1 {
            return bad(format!(
                "{} token embeddings for {} tokens",
                self.token_embed.len(),
                self.alphabet.len() + 1
            ));
        }
        if self.token_embed.iter().any(|e| e.len() != d) {
            return bad("token embedding of wrong dimension".into());
        }
        if self.pos_embed.terms().iter().any(|(c, _)| *c >= d) {
            return bad("position embedding coordinate out of range".into());
        }
        let heads = self.heads();
        for (l, row) in self.attention.iter().enumerate() {
            if row.len() != heads {
                return bad(format!(
                    "layer {} has {} heads, expected {heads}",
                    l + 1,
                    row.len()
                ));
            }
            if row
                .iter()
                .any(|a| a.len() != d || a.iter().any(|r| r.len() != d))
            {
                return bad(format!("layer {} attention matrix is not {d}×{d}", l + 1));
            }
        }
        if self.activation.len() != self.layers() {
            return bad("one activation net per layer required".into());
        }
        for (l, net) in self.activation.iter().enumerate() {
            if net.in_dim() != d * (heads + 1) || net.out_dim() != d {
                return bad(format!(
                    "layer {} activation maps {}→{}, expected {}→{d}",
                    l + 1,
                    net.in_dim(),
                    net.out_dim(),
                    d * (heads + 1)
                ));
            }
        }
        if self.output.in_dim() != d || self.output.out_dim() != 2 {
            return bad(format!(
                "output net maps {}→{}, expected {d}→2",
                self.output.in_dim(),
                self.output.out_dim()
            ));
        }
        Ok(())
    }

    pub fn initial(&self, token: Token, pos: usize, len: usize) -> Vec<Rational> {
        let idx = match token {
            Token::Sym(c) => self.alphabet.index_of(c).expect("validated symbol"),
            Token::End => self.alphabet.len(),
        };
        let mut v = self.pos_embed.embed(self.dim, pos, len);
        for (x, e) in v.iter_mut().zip(&self.token_embed[idx]) {
            *x += e;
        }
        v
    }

    /// `accept logit ≥ reject logit`, i.e. softmax accept probability ≥ 1/2.
    pub fn decide(&self, y: &[Rational]) -> Result<bool> {
        let logits = self.output.eval(y)?;
        Ok(logits[0] >= logits[1])
    }

    fn activate(
        &self,
        l: usize,
        own: &[Rational],
        pooled: &[Vec<Rational>],
    ) -> Result<Vec<Rational>> {
        let mut input = own.to_vec();
        for b in pooled {
            input.extend_from_slice(b);
        }
        self.activation[l].eval(&input)
    }

    /// Runs on `x` (the end marker is appended) and records a trace.
    pub fn run(&self, x: &str) -> Result<(bool, Trace)> {
        let tokens = self.alphabet.end_marked(x)?;
        self.run_tokens(&tokens)
    }

    pub fn accepts(&self, x: &str) -> Result<bool> {
        Ok(self.run(x)?.0)
    }

    pub fn run_tokens(&self, tokens: &[Token]) -> Result<(bool, Trace)> {
        let n = tokens.len();
        let mut current: Vec<Vec<Rational>> = tokens
            .iter()
            .enumerate()
            .map(|(i, &t)| self.initial(t, i + 1, n))
            .collect();
        let as_values = |ys: &[Vec<Rational>]| -> Vec<Value> {
            ys.iter()
                .map(|y| Value::vector(y.iter().cloned()))
                .collect()
        };
        let mut layers = vec![as_values(&current)];
        let mut attention = Vec::with_capacity(self.layers());
        for l in 0..self.layers() {
            let mut pooled: Vec<Vec<Vec<Rational>>> = vec![Vec::with_capacity(self.heads()); n];
            let mut rows_by_head = Vec::with_capacity(self.heads());
            for a in &self.attention[l] {
                let mut rows = Vec::with_capacity(n);
                for (i, slot) in pooled.iter_mut().enumerate() {
                    let scores = current
                        .iter()
                        .map(|yj| bilinear_score(&current[i], yj, a))
                        .collect::<Result<Vec<_>>>()?;
                    let candidates: Vec<usize> =
                        (0..n).filter(|&j| self.mask.allows(i, j)).collect();
                    let argmax = argmax_positions(&scores, &candidates);
                    slot.push(match self.pooling {
                        Pooling::Unique => current[argmax[0]].clone(),
                        Pooling::Averaging => {
                            mean_of(argmax.iter().map(|&j| current[j].as_slice()), self.dim)
                        }
                    });
                    rows.push(AttentionRow { scores, argmax });
                }
                rows_by_head.push(rows);
            }
            current = current
                .iter()
                .zip(&pooled)
                .map(|(y, b)| self.activate(l, y, b))
                .collect::<Result<Vec<_>>>()?;
            layers.push(as_values(&current));
            attention.push(rows_by_head);
        }
        let output = self.decide(&current[n - 1])?;
        Ok((
            output,
            Trace {
                input: tokens.to_vec(),
                pooling: self.pooling,
                layers,
                attention,
                output,
            },
        ))
    }

    /// The same model expressed through the generalized interpreter with
    /// vector-valued activations.
    pub fn to_guhat(&self) -> Result<GuhatModel> {
        self.validate()?;
        let me = Arc::new(self.clone());
        let mut builder = GuhatModel::builder(
            self.name.clone(),
            self.alphabet.clone(),
            self.layers(),
            self.heads(),
        )?
        .mask(self.mask);
        let m = me.clone();
        builder = builder.input(move |t, i, n| {
            if let Token::Sym(c) = t {
                if !m.alphabet.contains(c) {
                    return Err(format!("symbol `{c}` not in alphabet"));
                }
            }
            Ok(Value::vector(m.initial(t, i, n)))
        });
        for l in 0..self.layers() {
            for h in 0..self.heads() {
                let m = me.clone();
                builder = builder.attention(l, h, move |y, y2| {
                    bilinear_score(y.as_vector()?, y2.as_vector()?, &m.attention[l][h])
                        .map_err(|e| e.to_string())
                });
            }
            let m = me.clone();
            builder = builder.activation(l, move |y, pooled| {
                let b = pooled
                    .iter()
                    .map(|v| v.as_vector().map(<[Rational]>::to_vec))
                    .collect::<Result<Vec<_>, _>>()?;
                m.activate(l, y.as_vector()?, &b)
                    .map(Value::vector)
                    .map_err(|e| e.to_string())
            });
        }
        let m = me;
        builder = builder.output(move |y| m.decide(y.as_vector()?).map_err(|e| e.to_string()));
        builder.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn layer(w: &[&[i64]], b: &[i64]) -> AffineLayer {
        AffineLayer::new(matrix(w), vector(b)).unwrap()
    }

    #[test]
    fn ffn_relu_identity() {
        let net = FeedForwardNet::new(vec![layer(&[&[1, 0], &[0, 1]], &[0, 0])], true).unwrap();
        assert_eq!(net.eval(&vector(&[-1, 2])).unwrap(), vector(&[0, 2]));
    }

    #[test]
    fn ffn_paired_relu_is_identity() {
        // x ↦ ReLU(x) − ReLU(−x)
        let net = FeedForwardNet::new(
            vec![layer(&[&[1], &[-1]], &[0, 0]), layer(&[&[1, -1]], &[0])],
            false,
        )
        .unwrap();
        for x in [-3, 0, 5] {
            assert_eq!(net.eval(&vector(&[x])).unwrap(), vector(&[x]));
        }
    }

    #[test]
    fn ffn_dimension_errors() {
        let net = FeedForwardNet::new(vec![layer(&[&[1, 0]], &[0])], true).unwrap();
        assert!(matches!(net.eval(&[]), Err(Error::Input(_))));
        assert!(net.eval(&vector(&[1])).is_err());
        assert!(
            FeedForwardNet::new(vec![layer(&[&[1, 0]], &[0]), layer(&[&[1, 0]], &[0])], true)
                .is_err()
        );
        assert!(FeedForwardNet::new(Vec::new(), true).is_err());
        assert!(AffineLayer::new(matrix(&[&[1, 0], &[1]]), vector(&[0, 0])).is_err());
    }

    #[test]
    fn bilinear_examples() {
        let a = matrix(&[&[0, 1], &[0, 0]]);
        assert_eq!(
            bilinear_score(&vector(&[1, 0]), &vector(&[0, 1]), &a).unwrap(),
            int(1)
        );
        let zero = matrix(&[&[0, 0], &[0, 0]]);
        assert_eq!(
            bilinear_score(&vector(&[3, -2]), &vector(&[5, 7]), &zero).unwrap(),
            int(0)
        );
        let id = matrix(&[&[1, 0], &[0, 1]]);
        assert_eq!(
            bilinear_score(&vector(&[1, 1]), &vector(&[1, 1]), &id).unwrap(),
            int(2)
        );
        assert!(bilinear_score(&vector(&[1]), &vector(&[1, 1]), &id).is_err());
    }

    #[test]
    fn position_families() {
        let p = PositionEmbedding::ratio(1);
        assert_eq!(p.embed(2, 2, 4), vec![int(0), rational::ratio(1, 2)]);
        let p = PositionEmbedding::pair(0, 1);
        assert_eq!(p.embed(2, 3, 6), vec![rational::ratio(1, 2), int(1)]);
        let p = PositionEmbedding::zero().with(0, PosFeature::IndexOver(BigInt::from(16)));
        assert_eq!(p.embed(1, 3, 6), vec![rational::ratio(3, 16)]);
    }
}
