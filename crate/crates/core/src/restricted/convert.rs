//! Tie elimination: turning a unique-hard-attention model into an averaging
//! one that decides identically at a fixed input length.
//!
//! Two constant coordinates `1` and `i/N` are appended to every activation
//! and each attention form subtracts `j/N`, which breaks ties toward the
//! leftmost position while preserving every strict order as long as
//! `n/N` is below the smallest gap between distinct scores.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::{AffineLayer, FeedForwardNet, PosFeature, RestrictedModel};
use crate::error::{Error, Result};
use crate::guhat::Pooling;
use crate::lang::Words;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversionPlan {
    pub model: String,
    pub dim: usize,
    /// Input length including the end marker.
    pub n: usize,
    /// Tie-breaking denominator `N`, a power of two with `n/N < min_gap`.
    pub denominator: u64,
    pub min_gap: Rational,
    /// Whether `min_gap` fell back to 1 because no two scores differed.
    pub gap_fallback: bool,
    pub inputs_enumerated: u64,
}

fn input_count(alphabet_len: usize, len: usize) -> Option<u64> {
    (alphabet_len as u64).checked_pow(len as u32)
}

/// Enumerates every length-`n−1` input, gathers all attention scores per
/// layer and head, and picks the least power-of-two `N` with `n/N < min_gap`.
pub fn plan_conversion(model: &RestrictedModel, n: usize, budget: u64) -> Result<ConversionPlan> {
    model.validate()?;
    if model.pooling != Pooling::Unique {
        return Err(Error::Unsupported(format!(
            "`{}` does not use unique hard attention",
            model.name
        )));
    }
    if n == 0 {
        return Err(Error::input(
            "length n counts the end marker and must be at least 1",
        ));
    }
    let count = input_count(model.alphabet.len(), n - 1)
        .filter(|&c| c <= budget)
        .ok_or_else(|| {
            Error::resource(
                "conversion planning",
                format!(
                    "{}^{} inputs exceed the enumeration budget {budget}",
                    model.alphabet.len(),
                    n - 1
                ),
            )
        })?;

    let slots = model.layers() * model.heads();
    let words: Vec<String> = Words::new(&model.alphabet, n - 1).collect();
    let sets = words
        .par_iter()
        .map(|x| -> Result<Vec<BTreeSet<Rational>>> {
            let (_, trace) = model.run(x)?;
            let mut sets = vec![BTreeSet::new(); slots];
            for (l, heads) in trace.attention.iter().enumerate() {
                for (h, rows) in heads.iter().enumerate() {
                    let set = &mut sets[l * model.heads() + h];
                    for row in rows {
                        set.extend(row.scores.iter().cloned());
                    }
                }
            }
            Ok(sets)
        })
        .try_reduce(
            || vec![BTreeSet::new(); slots],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.extend(y);
                }
                Ok(a)
            },
        )?;

    let min_gap = sets
        .iter()
        .flat_map(|set| {
            let sorted: Vec<&Rational> = set.iter().collect();
            sorted.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()
        })
        .min();
    let gap_fallback = min_gap.is_none();
    let min_gap = min_gap.unwrap_or_else(rational::one);

    let n_rat = rational::int(n as i64);
    let mut denominator: u64 = 1;
    while n_rat.clone() / rational::int(denominator as i64) >= min_gap {
        denominator = denominator
            .checked_mul(2)
            .filter(|&d| d <= i64::MAX as u64)
            .ok_or_else(|| {
                Error::resource("conversion planning", "tie-breaking denominator overflow")
            })?;
    }
    Ok(ConversionPlan {
        model: model.name.clone(),
        dim: model.dim,
        n,
        denominator,
        min_gap,
        gap_fallback,
        inputs_enumerated: count,
    })
}

fn zero_row(len: usize) -> Vec<Rational> {
    vec![Rational::zero(); len]
}

/// Widens a net by two pass-through coordinates. `remap` moves each old
/// input column of the first layer; `carry` lists the new input columns
/// holding the two extra coordinates.
fn extend_net(
    net: &FeedForwardNet,
    new_in: usize,
    remap: impl Fn(usize) -> usize,
    carry: Option<[usize; 2]>,
) -> Result<FeedForwardNet> {
    let mut layers = Vec::with_capacity(net.layers().len());
    for (idx, layer) in net.layers().iter().enumerate() {
        let (in_dim, mut weights): (usize, Vec<Vec<Rational>>) = if idx == 0 {
            let rows = layer
                .weights
                .iter()
                .map(|row| {
                    let mut wide = zero_row(new_in);
                    for (c, w) in row.iter().enumerate() {
                        wide[remap(c)] = w.clone();
                    }
                    wide
                })
                .collect();
            (new_in, rows)
        } else if carry.is_none() {
            (layer.in_dim(), layer.weights.clone())
        } else {
            let in_dim = layer.in_dim() + 2;
            let rows = layer
                .weights
                .iter()
                .map(|row| {
                    let mut wide = row.clone();
                    wide.extend([Rational::zero(), Rational::zero()]);
                    wide
                })
                .collect();
            (in_dim, rows)
        };
        let mut bias = layer.bias.clone();
        if let Some(cols) = carry {
            let sources = if idx == 0 {
                cols
            } else {
                [in_dim - 2, in_dim - 1]
            };
            for src in sources {
                let mut row = zero_row(in_dim);
                row[src] = Rational::one();
                weights.push(row);
                bias.push(Rational::zero());
            }
        }
        layers.push(AffineLayer::new(weights, bias)?);
    }
    FeedForwardNet::new(layers, net.relu_last())
}

/// Builds the dimension `d+2` averaging model for the planned length.
pub fn uhat_to_ahat(model: &RestrictedModel, plan: &ConversionPlan) -> Result<RestrictedModel> {
    model.validate()?;
    if model.pooling != Pooling::Unique {
        return Err(Error::Unsupported(format!(
            "`{}` does not use unique hard attention",
            model.name
        )));
    }
    if plan.model != model.name || plan.dim != model.dim {
        return Err(Error::input(format!(
            "plan was made for `{}` (d = {}), not `{}` (d = {})",
            plan.model, plan.dim, model.name, model.dim
        )));
    }
    let d = model.dim;
    let wide = d + 2;
    let heads = model.heads();

    let token_embed = model
        .token_embed
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.extend([Rational::zero(), Rational::zero()]);
            e
        })
        .collect();
    let pos_embed = model
        .pos_embed
        .clone()
        .with(d, PosFeature::Constant(Rational::one()))
        .with(d + 1, PosFeature::IndexOver(BigInt::from(plan.denominator)));

    // ŷ_iᵀ Â ŷ_j = y_iᵀ A y_j − 1·(j/N)
    let attention = model
        .attention
        .iter()
        .map(|row| {
            row.iter()
                .map(|a| {
                    let mut wide_a: Vec<Vec<Rational>> = a
                        .iter()
                        .map(|r| {
                            let mut r = r.clone();
                            r.extend([Rational::zero(), Rational::zero()]);
                            r
                        })
                        .collect();
                    wide_a.push(zero_row(wide));
                    wide_a.push(zero_row(wide));
                    wide_a[d][d + 1] = -Rational::one();
                    wide_a
                })
                .collect()
        })
        .collect();

    let activation = model
        .activation
        .iter()
        .map(|net| {
            extend_net(
                net,
                wide * (heads + 1),
                |c| (c / d) * wide + c % d,
                Some([d, d + 1]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let output = extend_net(&model.output, wide, |c| c, None)?;

    let converted = RestrictedModel {
        name: format!("{}-ahat-n{}", model.name, plan.n),
        alphabet: model.alphabet.clone(),
        dim: wide,
        token_embed,
        pos_embed,
        attention,
        activation,
        output,
        mask: model.mask,
        pooling: Pooling::Averaging,
    };
    converted.validate()?;
    Ok(converted)
}

/// Counts `(input, i, k, h)` rows whose maximum is attained at two or more
/// unmasked positions.
pub fn tie_audit<'a>(
    model: &RestrictedModel,
    inputs: impl IntoIterator<Item = &'a str>,
) -> Result<usize> {
    let mut ties = 0;
    for x in inputs {
        ties += model.run(x)?.1.tied_rows();
    }
    Ok(ties)
}
