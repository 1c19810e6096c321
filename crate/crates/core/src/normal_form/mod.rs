//! Informative normal form, materialized for one input length.
//!
//! Every layer-`k` activation becomes the tuple of the layer-`(k−1)`
//! activations it was computed from, attention scores become dense ranks,
//! and translation tables `t_k` map each tuple back to the source model's
//! activation. All tables are finite because the input length is fixed.

pub mod encoding;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::guhat::{GuhatModel, MaskMode};
use crate::rational::Rational;
use crate::value::{Alphabet, Token, Value};

pub use encoding::{bin, ell, EncodingLayout, SymbolEncoding};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Largest `|Σ|^(n−1)` for which reachable values are found by
    /// simulating every input; above it the tuple superset is used.
    pub max_inputs: u64,
    /// Largest value table allowed at any layer.
    pub max_values: usize,
    pub force_superset: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            max_inputs: 2_000_000,
            max_values: 50_000,
            force_superset: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationMode {
    /// Values seen while running every input of the length.
    Reachable,
    /// All `(H+1)`-tuples compatible with each position.
    Superset,
}

impl EnumerationMode {
    pub fn name(self) -> &'static str {
        match self {
            EnumerationMode::Reachable => "reachable",
            EnumerationMode::Superset => "superset",
        }
    }
}

/// A normal-form activation: an input triple `(σ, i, n)` at layer 0, or a
/// tuple of previous-layer table indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NfValue {
    Leaf { token: Token, pos: usize },
    Tuple(Box<[u32]>),
}

/// Value table for one layer, ordered by canonical rendering.
#[derive(Debug, Clone)]
pub struct LayerTable {
    values: Vec<NfValue>,
    index: HashMap<NfValue, u32>,
    /// Full tree form of each entry.
    expanded: Vec<Value>,
    /// `t_k` of each entry.
    translated: Vec<Value>,
    /// 1-based position each entry lives at.
    positions: Vec<usize>,
    /// Entries reachable at each position (0-based).
    by_position: Vec<Vec<u32>>,
}

impl LayerTable {
    fn build(entries: Vec<(NfValue, Value, Value, usize)>, n: usize) -> Self {
        let mut keyed: Vec<(String, (NfValue, Value, Value, usize))> =
            entries.into_iter().map(|e| (e.1.to_string(), e)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let mut table = LayerTable {
            values: Vec::with_capacity(keyed.len()),
            index: HashMap::with_capacity(keyed.len()),
            expanded: Vec::with_capacity(keyed.len()),
            translated: Vec::with_capacity(keyed.len()),
            positions: Vec::with_capacity(keyed.len()),
            by_position: vec![Vec::new(); n],
        };
        for (idx, (_, (nf, expanded, translated, pos))) in keyed.into_iter().enumerate() {
            table.index.insert(nf.clone(), idx as u32);
            table.values.push(nf);
            table.expanded.push(expanded);
            table.translated.push(translated);
            table.positions.push(pos);
        }
        table
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[NfValue] {
        &self.values
    }

    pub fn lookup(&self, v: &NfValue) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn expanded(&self, idx: u32) -> &Value {
        &self.expanded[idx as usize]
    }

    pub fn translated(&self, idx: u32) -> &Value {
        &self.translated[idx as usize]
    }

    pub fn position(&self, idx: u32) -> usize {
        self.positions[idx as usize]
    }

    /// Entries that can occur at 0-based position `i`.
    pub fn at_position(&self, i: usize) -> &[u32] {
        &self.by_position[i]
    }

    pub fn find_expanded(&self, v: &Value) -> Option<u32> {
        self.expanded.iter().position(|e| e == v).map(|i| i as u32)
    }
}

/// Dense ranks `f̂_att(p, q)` for one layer and head over all ordered pairs
/// of the previous layer's table.
#[derive(Debug, Clone)]
pub struct RankTable {
    size: usize,
    ranks: Vec<u32>,
    num_ranks: u32,
    masked: bool,
}

impl RankTable {
    pub fn rank(&self, query: u32, key: u32) -> u32 {
        self.ranks[query as usize * self.size + key as usize]
    }

    /// Number of distinct ranks, all in `[0..num_ranks)`.
    pub fn num_ranks(&self) -> u32 {
        self.num_ranks
    }

    /// Whether rank 0 is reserved for masked pairs.
    pub fn has_masked_rank(&self) -> bool {
        self.masked
    }
}

/// Leftmost position maximizing the rank row of `row[i]`.
fn attend(ranks: &RankTable, row: &[u32], i: usize) -> usize {
    let q = row[i];
    let mut best = 0;
    let mut best_rank = ranks.rank(q, row[0]);
    for (j, &k) in row.iter().enumerate().skip(1) {
        let r = ranks.rank(q, k);
        if r > best_rank {
            best = j;
            best_rank = r;
        }
    }
    best
}

fn layer_tuple(heads: &[RankTable], row: &[u32], i: usize) -> Box<[u32]> {
    std::iter::once(row[i])
        .chain(heads.iter().map(|r| row[attend(r, row, i)]))
        .collect()
}

#[derive(Debug, Clone)]
pub struct NormalFormModel {
    name: String,
    alphabet: Alphabet,
    n: usize,
    layers: usize,
    heads: usize,
    mode: EnumerationMode,
    layout: EncodingLayout,
    symbols: SymbolEncoding,
    /// `tables[k]` for `k ∈ [0..K]`.
    tables: Vec<LayerTable>,
    /// `attention[l][h]` ranks pairs of `tables[l]` for layer `l+1`.
    attention: Vec<Vec<RankTable>>,
    /// `ĝ` on final-layer entries at position `n`.
    output_bits: Vec<Option<bool>>,
}

fn model_err(layer: usize, position: usize) -> impl Fn(String) -> Error {
    move |message| Error::Model {
        layer,
        position,
        message,
    }
}

fn leaf_entry(
    model: &GuhatModel,
    token: Token,
    pos: usize,
    n: usize,
) -> Result<(NfValue, Value, Value, usize)> {
    let translated = model
        .input_value(token, pos, n)
        .map_err(model_err(0, pos))?;
    Ok((
        NfValue::Leaf { token, pos },
        Value::leaf(token, pos, n),
        translated,
        pos,
    ))
}

fn rank_table(model: &GuhatModel, l: usize, h: usize, prev: &LayerTable) -> Result<RankTable> {
    let c = prev.len();
    let mask = model.mask();
    let allowed = |p: usize, q: usize| mask.allows(prev.positions[p], prev.positions[q]);
    let score = |p: usize, q: usize| {
        model
            .score(l, h, &prev.translated[p], &prev.translated[q])
            .map_err(model_err(l + 1, prev.positions[p]))
    };

    let distinct: BTreeSet<Rational> = (0..c)
        .into_par_iter()
        .map(|p| {
            let mut set = BTreeSet::new();
            for q in (0..c).filter(|&q| allowed(p, q)) {
                set.insert(score(p, q)?);
            }
            Ok(set)
        })
        .try_reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            Ok(a)
        })?;
    let sorted: Vec<Rational> = distinct.into_iter().collect();
    let masked = mask != MaskMode::None && (0..c).any(|p| (0..c).any(|q| !allowed(p, q)));
    let offset = u32::from(masked);

    let rows: Vec<Vec<u32>> = (0..c)
        .into_par_iter()
        .map(|p| {
            (0..c)
                .map(|q| {
                    if !allowed(p, q) {
                        return Ok(0);
                    }
                    let s = score(p, q)?;
                    let r = sorted
                        .binary_search(&s)
                        .expect("score collected in first pass");
                    Ok(r as u32 + offset)
                })
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<_>>()?;
    Ok(RankTable {
        size: c,
        ranks: rows.into_iter().flatten().collect(),
        num_ranks: sorted.len() as u32 + offset,
        masked,
    })
}

fn input_rows(alphabet: &Alphabet, n: usize, table0: &LayerTable) -> Vec<u32> {
    let sym_leaf: Vec<Vec<u32>> = (1..n)
        .map(|pos| {
            alphabet
                .symbols()
                .iter()
                .map(|&c| {
                    table0
                        .lookup(&NfValue::Leaf {
                            token: Token::Sym(c),
                            pos,
                        })
                        .expect("leaf in table")
                })
                .collect()
        })
        .collect();
    let end = table0
        .lookup(&NfValue::Leaf {
            token: Token::End,
            pos: n,
        })
        .expect("end leaf in table");
    let k = alphabet.len();
    let count = k.pow((n - 1) as u32);
    let mut rows = Vec::with_capacity(count * n);
    let mut digits = vec![0usize; n - 1];
    for _ in 0..count {
        rows.extend(digits.iter().enumerate().map(|(i, &d)| sym_leaf[i][d]));
        rows.push(end);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    rows
}

/// Builds the normal form of `model` for inputs of length `n` (counting `$`).
pub fn normalize(model: &GuhatModel, n: usize, opts: &NormalizeOptions) -> Result<NormalFormModel> {
    if n == 0 {
        return Err(Error::input(
            "length n counts the end marker and must be at least 1",
        ));
    }
    let alphabet = model.alphabet().clone();
    let heads = model.heads();
    let budget_err = |what: String| Error::resource("normalization", what);

    let input_count = (alphabet.len() as u64).checked_pow((n - 1) as u32);
    let mode = match input_count {
        Some(c) if c <= opts.max_inputs && !opts.force_superset => EnumerationMode::Reachable,
        _ => EnumerationMode::Superset,
    };

    let mut leaves = Vec::with_capacity(alphabet.len() * (n - 1) + 1);
    for pos in 1..n {
        for &c in alphabet.symbols() {
            leaves.push(leaf_entry(model, Token::Sym(c), pos, n)?);
        }
    }
    leaves.push(leaf_entry(model, Token::End, n, n)?);
    let mut table0 = LayerTable::build(leaves, n);
    for idx in 0..table0.len() as u32 {
        let pos = table0.position(idx);
        table0.by_position[pos - 1].push(idx);
    }

    let mut rows = match mode {
        EnumerationMode::Reachable => input_rows(&alphabet, n, &table0),
        EnumerationMode::Superset => Vec::new(),
    };
    let mut tables = vec![table0];
    let mut attention = Vec::with_capacity(model.layers());

    for l in 0..model.layers() {
        let prev = &tables[l];
        let ranks = (0..heads)
            .map(|h| rank_table(model, l, h, prev))
            .collect::<Result<Vec<_>>>()?;

        let tuples: Vec<Box<[u32]>> = match mode {
            EnumerationMode::Reachable => {
                let set: HashSet<Box<[u32]>> = rows
                    .par_chunks(n)
                    .fold(HashSet::new, |mut acc, row| {
                        for i in 0..n {
                            acc.insert(layer_tuple(&ranks, row, i));
                        }
                        acc
                    })
                    .reduce(HashSet::new, |mut a, b| {
                        a.extend(b);
                        a
                    });
                set.into_iter().collect()
            }
            EnumerationMode::Superset => {
                let mut out = Vec::new();
                for i in 0..n {
                    let keys: Vec<u32> = (0..n)
                        .filter(|&j| model.mask().allows(i, j))
                        .flat_map(|j| prev.at_position(j).iter().copied())
                        .collect();
                    let per_head =
                        prev.at_position(i).len() as u64 * (keys.len() as u64).pow(heads as u32);
                    if out.len() as u64 + per_head > opts.max_values as u64 {
                        return Err(budget_err(format!(
                            "layer {} superset exceeds {} values",
                            l + 1,
                            opts.max_values
                        )));
                    }
                    for &y in prev.at_position(i) {
                        let mut combos: Vec<Vec<u32>> = vec![vec![y]];
                        for _ in 0..heads {
                            combos = combos
                                .into_iter()
                                .flat_map(|c| {
                                    keys.iter().map(move |&k| {
                                        let mut c = c.clone();
                                        c.push(k);
                                        c
                                    })
                                })
                                .collect();
                        }
                        out.extend(combos.into_iter().map(Vec::into_boxed_slice));
                    }
                }
                out
            }
        };
        if tuples.len() > opts.max_values {
            return Err(budget_err(format!(
                "layer {} has {} values, budget is {}",
                l + 1,
                tuples.len(),
                opts.max_values
            )));
        }

        let entries = tuples
            .into_par_iter()
            .map(|t| {
                let own = t[0];
                let pos = prev.position(own);
                let pooled: Vec<Value> =
                    t[1..].iter().map(|&b| prev.translated(b).clone()).collect();
                let translated = model
                    .activate(l, prev.translated(own), &pooled)
                    .map_err(model_err(l + 1, pos))?;
                let expanded = Value::tuple(t.iter().map(|&c| prev.expanded(c).clone()));
                Ok((NfValue::Tuple(t), expanded, translated, pos))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = LayerTable::build(entries, n);

        match mode {
            EnumerationMode::Reachable => {
                let next: Vec<u32> = rows
                    .par_chunks(n)
                    .flat_map_iter(|row| {
                        (0..n)
                            .map(|i| {
                                table
                                    .lookup(&NfValue::Tuple(layer_tuple(&ranks, row, i)))
                                    .expect("tuple collected in first pass")
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect();
                let mut seen: Vec<HashSet<u32>> = vec![HashSet::new(); n];
                for row in next.chunks(n) {
                    for (i, &v) in row.iter().enumerate() {
                        seen[i].insert(v);
                    }
                }
                for (i, s) in seen.into_iter().enumerate() {
                    let mut v: Vec<u32> = s.into_iter().collect();
                    v.sort_unstable();
                    table.by_position[i] = v;
                }
                rows = next;
            }
            EnumerationMode::Superset => {
                for idx in 0..table.len() as u32 {
                    let pos = table.position(idx);
                    table.by_position[pos - 1].push(idx);
                }
            }
        }
        tables.push(table);
        attention.push(ranks);
    }

    let last = &tables[model.layers()];
    let output_bits = (0..last.len() as u32)
        .map(|idx| {
            if last.position(idx) != n {
                return Ok(None);
            }
            model
                .decide(last.translated(idx))
                .map(Some)
                .map_err(model_err(model.layers(), n))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(NormalFormModel {
        name: model.name().to_string(),
        layout: EncodingLayout::new(alphabet.len(), heads, n),
        symbols: SymbolEncoding::new(&alphabet),
        alphabet,
        n,
        layers: model.layers(),
        heads,
        mode,
        tables,
        attention,
        output_bits,
    })
}

/// The expanded value table of every layer.
pub fn enumerate_values(
    model: &GuhatModel,
    n: usize,
    opts: &NormalizeOptions,
) -> Result<Vec<Vec<Value>>> {
    let nf = normalize(model, n, opts)?;
    Ok(nf.tables.iter().map(|t| t.expanded.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAudit {
    pub layer: usize,
    pub values: usize,
    pub value_width: usize,
    pub values_fit: bool,
    /// Distinct ranks of the attention producing this layer (0 at layer 0).
    pub ranks: u64,
    pub score_width: usize,
    pub ranks_fit: bool,
}

impl NormalFormModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Input length including `$`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn mode(&self) -> EnumerationMode {
        self.mode
    }

    pub fn layout(&self) -> &EncodingLayout {
        &self.layout
    }

    pub fn symbol_encoding(&self) -> &SymbolEncoding {
        &self.symbols
    }

    pub fn table(&self, k: usize) -> &LayerTable {
        &self.tables[k]
    }

    /// Rank table of head `h` for layer `l + 1`.
    pub fn ranks(&self, l: usize, h: usize) -> &RankTable {
        &self.attention[l][h]
    }

    pub fn output_bit(&self, idx: u32) -> Option<bool> {
        self.output_bits[idx as usize]
    }

    /// `t_k` applied to a normal-form value given in expanded tree form.
    pub fn translate(&self, k: usize, value: &Value) -> Option<&Value> {
        let table = &self.tables[k];
        table.find_expanded(value).map(|idx| table.translated(idx))
    }

    /// Layer-0 table index of each position of `x$`.
    pub fn initial_row(&self, x: &str) -> Result<Vec<u32>> {
        let tokens = self.alphabet.end_marked(x)?;
        if tokens.len() != self.n {
            return Err(Error::input(format!(
                "normal form built for length {}, input has length {}",
                self.n - 1,
                tokens.len() - 1
            )));
        }
        Ok(tokens
            .iter()
            .enumerate()
            .map(|(i, &token)| {
                self.tables[0]
                    .lookup(&NfValue::Leaf { token, pos: i + 1 })
                    .expect("every leaf is tabulated")
            })
            .collect())
    }

    /// Per-layer table indices of every position, using only the tables.
    pub fn run_indices(&self, x: &str) -> Result<Vec<Vec<u32>>> {
        let mut rows = vec![self.initial_row(x)?];
        for l in 0..self.layers {
            let prev = &rows[l];
            let next = (0..self.n)
                .map(|i| {
                    let tuple = NfValue::Tuple(layer_tuple(&self.attention[l], prev, i));
                    self.tables[l + 1].lookup(&tuple).ok_or_else(|| {
                        Error::Validation(format!(
                            "layer {} value at position {} is missing from the table",
                            l + 1,
                            i + 1
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(next);
        }
        Ok(rows)
    }

    /// Decision of the normal-form model on `x`.
    pub fn run(&self, x: &str) -> Result<bool> {
        let rows = self.run_indices(x)?;
        let last = rows[self.layers][self.n - 1];
        self.output_bit(last)
            .ok_or_else(|| Error::Validation("final value is not at position n".into()))
    }

    /// Binary encoding of table entry `idx` at layer `k`.
    pub fn encode_value(&self, k: usize, idx: u32) -> Result<Vec<bool>> {
        let table = &self.tables[k];
        match table.values.get(idx as usize) {
            None => Err(Error::input(format!("layer {k} has no entry {idx}"))),
            Some(NfValue::Leaf { token, pos }) => {
                let mut bits = self.symbols.code(*token)?;
                bits.extend(bin(*pos, self.n)?);
                bits.extend(bin(self.n, self.n)?);
                Ok(bits)
            }
            Some(NfValue::Tuple(children)) => {
                let mut bits = Vec::with_capacity(self.layout.value_width(k));
                for &c in children.iter() {
                    bits.extend(self.encode_value(k - 1, c)?);
                }
                Ok(bits)
            }
        }
    }

    /// Inverse of [`NormalFormModel::encode_value`] on table entries.
    pub fn decode_value(&self, k: usize, bits: &[bool]) -> Result<u32> {
        if bits.len() != self.layout.value_width(k) {
            return Err(Error::input(format!(
                "layer {k} encodings have {} bits, got {}",
                self.layout.value_width(k),
                bits.len()
            )));
        }
        let value = if k == 0 {
            let s = self.layout.symbol_width;
            let w = self.layout.position_width();
            let token = self.symbols.decode(&bits[..s])?;
            let pos = encoding::from_bits(&bits[s..s + w])? as usize;
            let len = encoding::from_bits(&bits[s + w..])? as usize;
            if len != self.n {
                return Err(Error::input("encoded length does not match the table"));
            }
            NfValue::Leaf { token, pos }
        } else {
            let child = self.layout.value_width(k - 1);
            NfValue::Tuple(
                bits.chunks(child)
                    .map(|chunk| self.decode_value(k - 1, chunk))
                    .collect::<Result<Vec<_>>>()?
                    .into_boxed_slice(),
            )
        };
        self.tables[k]
            .lookup(&value)
            .ok_or_else(|| Error::input(format!("encoding is not a layer-{k} table entry")))
    }

    pub fn audit_widths(&self) -> Vec<LayerAudit> {
        (0..=self.layers)
            .map(|k| {
                let values = self.tables[k].len();
                let value_width = self.layout.value_width(k);
                let (ranks, score_width) = if k == 0 {
                    (0, 0)
                } else {
                    let r = self.attention[k - 1]
                        .iter()
                        .map(|t| t.num_ranks as u64)
                        .max()
                        .unwrap_or(0);
                    (r, self.layout.score_width(k))
                };
                let pair_bound = (self
                    .tables
                    .get(k.saturating_sub(1))
                    .map_or(0, LayerTable::len) as u64)
                    .pow(2);
                LayerAudit {
                    layer: k,
                    values,
                    value_width,
                    values_fit: encoding::fits(values as u64, value_width),
                    ranks,
                    score_width,
                    ranks_fit: k == 0
                        || (encoding::fits(ranks, score_width) && ranks <= pair_bound),
                }
            })
            .collect()
    }

    /// `LAYER k VALUES c RANKS r WIDTH w` lines after a header.
    pub fn report(&self) -> String {
        let mut out = format!(
            "NF {} LENGTH {} MODE {}\n",
            self.name,
            self.n,
            self.mode.name()
        );
        for a in self.audit_widths() {
            let _ = writeln!(
                out,
                "LAYER {} VALUES {} RANKS {} WIDTH {}",
                a.layer, a.values, a.ranks, a.value_width
            );
        }
        out
    }
}
