//! Executable semantics of generalized transformers with hard attention.
//!
//! Positions are 1-based inside model functions (`f(σ, i, n)` receives
//! `i ∈ [1..n]`) and 0-based in Rust collections such as [`Trace`] rows.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::value::{Alphabet, Token, Value};

pub type FnResult<T> = std::result::Result<T, String>;
pub type InputFn = Arc<dyn Fn(Token, usize, usize) -> FnResult<Value> + Send + Sync>;
pub type AttentionFn = Arc<dyn Fn(&Value, &Value) -> FnResult<Rational> + Send + Sync>;
pub type ActivationFn = Arc<dyn Fn(&Value, &[Value]) -> FnResult<Value> + Send + Sync>;
pub type OutputFn = Arc<dyn Fn(&Value) -> FnResult<bool> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pooling {
    /// Leftmost maximizing position.
    Unique,
    /// Mean over all maximizing positions.
    Averaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MaskMode {
    #[default]
    None,
    /// Position `i` sees `j ≤ i`.
    Future,
    /// Position `i` sees `j ≥ i`.
    Past,
}

impl MaskMode {
    /// Whether query position `i` may attend key position `j` (either base).
    pub fn allows(self, i: usize, j: usize) -> bool {
        match self {
            MaskMode::None => true,
            MaskMode::Future => j <= i,
            MaskMode::Past => j >= i,
        }
    }
}

/// Positions (0-based) and scores surviving the mask for query position `i`.
pub fn apply_mask(mode: MaskMode, i: usize, scores: &[Rational]) -> Vec<(usize, &Rational)> {
    scores
        .iter()
        .enumerate()
        .filter(|&(j, _)| mode.allows(i, j))
        .collect()
}

/// All positions among `candidates` attaining the maximum score, ascending.
pub fn argmax_positions(scores: &[Rational], candidates: &[usize]) -> Vec<usize> {
    let Some(best) = candidates.iter().map(|&j| &scores[j]).max() else {
        return Vec::new();
    };
    candidates
        .iter()
        .copied()
        .filter(|&j| &scores[j] == best)
        .collect()
}

/// Unique hard attention: the value at the least position maximizing the score.
pub fn uha_pool<'a, T>(values: &'a [T], scores: &[Rational]) -> Result<&'a T> {
    if values.is_empty() || values.len() != scores.len() {
        return Err(Error::input(format!(
            "pooling needs equal nonempty sequences, got {} values and {} scores",
            values.len(),
            scores.len()
        )));
    }
    let all: Vec<usize> = (0..values.len()).collect();
    Ok(&values[argmax_positions(scores, &all)[0]])
}

/// Averaging hard attention: exact mean of the vectors at every maximizing position.
pub fn aha_pool(values: &[Vec<Rational>], scores: &[Rational]) -> Result<Vec<Rational>> {
    if values.is_empty() || values.len() != scores.len() {
        return Err(Error::input(format!(
            "pooling needs equal nonempty sequences, got {} values and {} scores",
            values.len(),
            scores.len()
        )));
    }
    let dim = values[0].len();
    if values.iter().any(|v| v.len() != dim) {
        return Err(Error::input("pooled vectors have mixed dimensions"));
    }
    let all: Vec<usize> = (0..values.len()).collect();
    let winners = argmax_positions(scores, &all);
    Ok(mean_of(winners.iter().map(|&j| values[j].as_slice()), dim))
}

pub(crate) fn mean_of<'a>(
    vectors: impl Iterator<Item = &'a [Rational]>,
    dim: usize,
) -> Vec<Rational> {
    let mut sum = vec![Rational::default(); dim];
    let mut count = 0i64;
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        count += 1;
    }
    let count = crate::rational::int(count);
    sum.into_iter().map(|s| s / &count).collect()
}

/// A generalized transformer with `layers` layers and `heads` heads.
///
/// Layer functions are indexed from 0, so `attention[l][h]` and
/// `activation[l]` compute layer `l + 1`.
#[derive(Clone)]
pub struct GuhatModel {
    name: String,
    alphabet: Alphabet,
    layers: usize,
    heads: usize,
    input: InputFn,
    attention: Vec<Vec<AttentionFn>>,
    activation: Vec<ActivationFn>,
    output: OutputFn,
    mask: MaskMode,
}

impl fmt::Debug for GuhatModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GuhatModel")
            .field("name", &self.name)
            .field("alphabet", &self.alphabet)
            .field("layers", &self.layers)
            .field("heads", &self.heads)
            .field("mask", &self.mask)
            .finish_non_exhaustive()
    }
}

pub struct GuhatBuilder {
    name: String,
    alphabet: Alphabet,
    layers: usize,
    heads: usize,
    input: Option<InputFn>,
    attention: Vec<Vec<Option<AttentionFn>>>,
    activation: Vec<Option<ActivationFn>>,
    output: Option<OutputFn>,
    mask: MaskMode,
}

impl GuhatBuilder {
    pub fn input(
        mut self,
        f: impl Fn(Token, usize, usize) -> FnResult<Value> + Send + Sync + 'static,
    ) -> Self {
        self.input = Some(Arc::new(f));
        self
    }

    /// Attention function for layer `layer` (0-based) and head `head`.
    pub fn attention(
        mut self,
        layer: usize,
        head: usize,
        f: impl Fn(&Value, &Value) -> FnResult<Rational> + Send + Sync + 'static,
    ) -> Self {
        self.attention[layer][head] = Some(Arc::new(f));
        self
    }

    pub fn activation(
        mut self,
        layer: usize,
        f: impl Fn(&Value, &[Value]) -> FnResult<Value> + Send + Sync + 'static,
    ) -> Self {
        self.activation[layer] = Some(Arc::new(f));
        self
    }

    pub fn output(mut self, f: impl Fn(&Value) -> FnResult<bool> + Send + Sync + 'static) -> Self {
        self.output = Some(Arc::new(f));
        self
    }

    pub fn mask(mut self, mask: MaskMode) -> Self {
        self.mask = mask;
        self
    }

    pub fn build(self) -> Result<GuhatModel> {
        let missing =
            |what: String| Error::Validation(format!("model `{}` lacks {what}", self.name));
        let input = self
            .input
            .clone()
            .ok_or_else(|| missing("an input function".into()))?;
        let output = self
            .output
            .clone()
            .ok_or_else(|| missing("an output function".into()))?;
        let mut attention = Vec::with_capacity(self.layers);
        for (l, row) in self.attention.iter().enumerate() {
            let mut fns = Vec::with_capacity(self.heads);
            for (h, f) in row.iter().enumerate() {
                fns.push(f.clone().ok_or_else(|| {
                    missing(format!("attention for layer {} head {}", l + 1, h + 1))
                })?);
            }
            attention.push(fns);
        }
        let activation = self
            .activation
            .iter()
            .enumerate()
            .map(|(l, f)| {
                f.clone()
                    .ok_or_else(|| missing(format!("activation for layer {}", l + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GuhatModel {
            name: self.name,
            alphabet: self.alphabet,
            layers: self.layers,
            heads: self.heads,
            input,
            attention,
            activation,
            output,
            mask: self.mask,
        })
    }
}

impl GuhatModel {
    pub fn builder(
        name: impl Into<String>,
        alphabet: Alphabet,
        layers: usize,
        heads: usize,
    ) -> Result<GuhatBuilder> {
        if layers == 0 || heads == 0 {
            return Err(Error::input(
                "a generalized transformer needs K ≥ 1 and H ≥ 1",
            ));
        }
        Ok(GuhatBuilder {
            name: name.into(),
            alphabet,
            layers,
            heads,
            input: None,
            attention: vec![vec![None; heads]; layers],
            activation: vec![None; layers],
            output: None,
            mask: MaskMode::None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn mask(&self) -> MaskMode {
        self.mask
    }

    pub fn input_value(&self, token: Token, pos: usize, len: usize) -> FnResult<Value> {
        (self.input)(token, pos, len)
    }

    pub fn score(
        &self,
        layer: usize,
        head: usize,
        query: &Value,
        key: &Value,
    ) -> FnResult<Rational> {
        (self.attention[layer][head])(query, key)
    }

    pub fn activate(&self, layer: usize, own: &Value, pooled: &[Value]) -> FnResult<Value> {
        (self.activation[layer])(own, pooled)
    }

    pub fn decide(&self, value: &Value) -> FnResult<bool> {
        (self.output)(value)
    }

    /// Runs on `x` (no `$`; the end marker is appended) and records a trace.
    pub fn run(&self, x: &str, pooling: Pooling) -> Result<(bool, Trace)> {
        let tokens = self.alphabet.end_marked(x)?;
        let trace = execute(self, tokens, pooling, true)?;
        Ok((trace.output, trace))
    }

    /// Same decision as [`GuhatModel::run`] without retaining score matrices.
    pub fn accepts(&self, x: &str, pooling: Pooling) -> Result<bool> {
        let tokens = self.alphabet.end_marked(x)?;
        Ok(execute(self, tokens, pooling, false)?.output)
    }

    /// Runs on an already end-marked token sequence.
    pub fn run_tokens(&self, tokens: &[Token], pooling: Pooling) -> Result<(bool, Trace)> {
        if tokens.last() != Some(&Token::End) || tokens[..tokens.len() - 1].contains(&Token::End) {
            return Err(Error::input(
                "token sequence must contain `$` exactly once, at the end",
            ));
        }
        let trace = execute(self, tokens.to_vec(), pooling, true)?;
        Ok((trace.output, trace))
    }
}

/// One query position's attention row for one layer and head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionRow {
    /// Scores against every key position; masked keys are still scored.
    pub scores: Vec<Rational>,
    /// Unmasked positions attaining the maximum, ascending.
    pub argmax: Vec<usize>,
}

impl AttentionRow {
    pub fn is_tied(&self) -> bool {
        self.argmax.len() >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub input: Vec<Token>,
    pub pooling: Pooling,
    /// `layers[k][i]` is `y_{i+1}^{(k)}`, `k ∈ [0..K]`.
    pub layers: Vec<Vec<Value>>,
    /// `attention[l][h][i]`, empty for fast-path runs.
    pub attention: Vec<Vec<Vec<AttentionRow>>>,
    pub output: bool,
}

impl Trace {
    /// Positions the query at `i` pooled from in layer `l + 1`, head `h`.
    pub fn chosen(&self, l: usize, h: usize, i: usize) -> &[usize] {
        let row = &self.attention[l][h][i];
        match self.pooling {
            Pooling::Unique => &row.argmax[..1],
            Pooling::Averaging => &row.argmax,
        }
    }

    pub fn tied_rows(&self) -> usize {
        self.attention
            .iter()
            .flatten()
            .flatten()
            .filter(|row| row.is_tied())
            .count()
    }

    /// Tab-separated value table, one row per layer, then `OUTPUT <bit>`.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for layer in &self.layers {
            let cells: Vec<String> = layer.iter().map(Value::to_string).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out.push_str(&format!("OUTPUT {}\n", u8::from(self.output)));
        out
    }
}

fn model_err(layer: usize, position: usize) -> impl Fn(String) -> Error {
    move |message| Error::Model {
        layer,
        position,
        message,
    }
}

fn execute(
    model: &GuhatModel,
    tokens: Vec<Token>,
    pooling: Pooling,
    record: bool,
) -> Result<Trace> {
    let n = tokens.len();
    let mut current = tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| model.input_value(t, i + 1, n).map_err(model_err(0, i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = if record {
        vec![current.clone()]
    } else {
        Vec::new()
    };
    let mut attention = Vec::new();

    for l in 0..model.layers {
        let mut pooled_by_head: Vec<Vec<Value>> = Vec::with_capacity(model.heads);
        let mut rows_by_head = Vec::new();
        for h in 0..model.heads {
            let mut pooled = Vec::with_capacity(n);
            let mut rows = Vec::new();
            for i in 0..n {
                let scores = (0..n)
                    .map(|j| {
                        model
                            .score(l, h, &current[i], &current[j])
                            .map_err(model_err(l + 1, i + 1))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let candidates: Vec<usize> = (0..n).filter(|&j| model.mask.allows(i, j)).collect();
                let argmax = argmax_positions(&scores, &candidates);
                let value = match pooling {
                    Pooling::Unique => current[argmax[0]].clone(),
                    Pooling::Averaging => {
                        let vectors = argmax
                            .iter()
                            .map(|&j| current[j].as_vector())
                            .collect::<FnResult<Vec<_>>>()
                            .map_err(model_err(l + 1, i + 1))?;
                        let dim = vectors[0].len();
                        if vectors.iter().any(|v| v.len() != dim) {
                            return Err(model_err(l + 1, i + 1)(
                                "averaged vectors have mixed dimensions".into(),
                            ));
                        }
                        Value::vector(mean_of(vectors.into_iter(), dim))
                    }
                };
                pooled.push(value);
                if record {
                    rows.push(AttentionRow { scores, argmax });
                }
            }
            pooled_by_head.push(pooled);
            rows_by_head.push(rows);
        }
        let next = (0..n)
            .map(|i| {
                let b: Vec<Value> = pooled_by_head.iter().map(|p| p[i].clone()).collect();
                model
                    .activate(l, &current[i], &b)
                    .map_err(model_err(l + 1, i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        current = next;
        if record {
            layers.push(current.clone());
            attention.push(rows_by_head);
        }
    }
    let output = model
        .decide(&current[n - 1])
        .map_err(model_err(model.layers, n))?;
    Ok(Trace {
        input: tokens,
        pooling,
        layers,
        attention,
        output,
    })
}
