//! Lowering a normal-form model at fixed length to a constant-depth circuit.
//!
//! Per layer and head the circuit computes, for every query position `i`:
//! attention ranks `a_{i,j}` (one DNF block per key position), pairwise
//! comparisons `a_{i,j} ≥ a_{i,j'}`, the maximizer indicators `m_{i,j}`, the
//! leftmost maximizer `z_{i,j}`, and finally the selected value bits. The
//! new layer's wires are the old ones concatenated with the selections.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::circuit::{synth_dnf, synth_dnf_into, Circuit, CircuitBuilder, Ref, TruthTableSpec};
use crate::error::{Error, Result};
use crate::lang::LangSpec;
use crate::normal_form::encoding::to_bits;
use crate::normal_form::{bin, NormalFormModel};
use crate::value::Token;

pub const STAGES: [&str; 7] = [
    "input",
    "attention",
    "comparator",
    "argmax",
    "leftmost",
    "selection",
    "output",
];

const BLOCK_DEPTH: usize = 3;
const STRUCTURED_COMPARATOR_DEPTH: usize = 6;
const ARGMAX_DEPTH: usize = 1;
const LEFTMOST_DEPTH: usize = 2;
const SELECTION_DEPTH: usize = 2;

/// `11K + 3`: per layer 3 (attention) + 3 (comparator) + 1 (argmax)
/// + 2 (leftmost) + 2 (selection), then 3 for the output block.
pub fn depth_budget(layers: usize) -> usize {
    Levels::new(false).layer_stride() * layers + BLOCK_DEPTH
}

/// Nominal depth at which each stage's outputs sit.
#[derive(Debug, Clone, Copy)]
struct Levels {
    comparator: usize,
}

impl Levels {
    fn new(structured: bool) -> Self {
        Levels {
            comparator: if structured {
                STRUCTURED_COMPARATOR_DEPTH
            } else {
                BLOCK_DEPTH
            },
        }
    }

    fn layer_stride(self) -> usize {
        BLOCK_DEPTH + self.comparator + ARGMAX_DEPTH + LEFTMOST_DEPTH + SELECTION_DEPTH
    }

    fn attention(self, l: usize) -> usize {
        self.layer_stride() * l + BLOCK_DEPTH
    }

    fn comparator(self, l: usize) -> usize {
        self.attention(l) + self.comparator
    }

    fn argmax(self, l: usize) -> usize {
        self.comparator(l) + ARGMAX_DEPTH
    }

    fn leftmost(self, l: usize) -> usize {
        self.argmax(l) + LEFTMOST_DEPTH
    }

    fn selection(self, l: usize) -> usize {
        self.layer_stride() * (l + 1)
    }

    fn budget(self, layers: usize) -> usize {
        self.layer_stride() * layers + BLOCK_DEPTH
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub budget_wires: usize,
    /// Bitwise `≥` comparators instead of rank-pair tables.
    pub structured_comparator: bool,
    /// Pad every stage's outputs to their nominal depth, so the emitted
    /// depth is exactly the stage accounting regardless of the tables.
    pub leveled: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            budget_wires: 50_000_000,
            structured_comparator: false,
            leveled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageCount {
    pub gates: usize,
    pub wires: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileReport {
    pub model: String,
    pub n: usize,
    pub inputs: usize,
    pub size: usize,
    pub depth: usize,
    pub depth_budget: usize,
    /// Indexed like [`STAGES`].
    pub stages: [StageCount; 7],
    /// Value table size per layer.
    pub table_sizes: Vec<usize>,
    /// Value encoding width per layer.
    pub value_widths: Vec<usize>,
}

impl fmt::Display for CompileReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = format!(
            "COMPILE {} LENGTH {} INPUTS {}\n",
            self.model, self.n, self.inputs
        );
        for (k, (c, w)) in self.table_sizes.iter().zip(&self.value_widths).enumerate() {
            let _ = writeln!(out, "TABLE {k} VALUES {c} WIDTH {w}");
        }
        for (name, s) in STAGES.iter().zip(&self.stages) {
            let _ = writeln!(out, "STAGE {name} GATES {} WIRES {}", s.gates, s.wires);
        }
        let _ = writeln!(out, "SIZE {} DEPTH {}", self.size, self.depth);
        f.write_str(&out)
    }
}

/// Leftmost-maximizer indicators `z_{i,·}` of one layer, head and query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionProbe {
    /// Layer computed, 1-based.
    pub layer: usize,
    pub head: usize,
    /// Query position, 1-based.
    pub position: usize,
    pub z: Vec<Ref>,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub circuit: Circuit,
    pub report: CompileReport,
    pub probes: Vec<SelectionProbe>,
}

struct Emitter {
    builder: CircuitBuilder,
    stages: [StageCount; 7],
    budget: usize,
    leveled: bool,
}

impl Emitter {
    /// Pads `refs` to `level` (when leveling), counting toward stage `idx`.
    fn level(&mut self, idx: usize, refs: Vec<Ref>, level: usize) -> Result<Vec<Ref>> {
        if !self.leveled {
            return Ok(refs);
        }
        self.stage(idx, |b| {
            Ok(refs.into_iter().map(|r| b.buffer_to(r, level)).collect())
        })
    }

    fn stage<T>(
        &mut self,
        idx: usize,
        f: impl FnOnce(&mut CircuitBuilder) -> Result<T>,
    ) -> Result<T> {
        let (g0, w0) = (self.builder.num_gates(), self.builder.wires());
        let out = f(&mut self.builder)?;
        self.stages[idx].gates += self.builder.num_gates() - g0;
        self.stages[idx].wires += self.builder.wires() - w0;
        if self.builder.wires() > self.budget {
            return Err(Error::resource(
                STAGES[idx],
                format!(
                    "{} wires exceed the budget of {}",
                    self.builder.wires(),
                    self.budget
                ),
            ));
        }
        Ok(out)
    }
}

fn concat(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().chain(b).copied().collect()
}

/// `a ≥ b` over equal-width big-endian wires, depth 5.
fn structured_ge(builder: &mut CircuitBuilder, a: &[Ref], b: &[Ref]) -> Ref {
    let not_a: Vec<Ref> = a.iter().map(|&r| builder.not(r)).collect();
    let not_b: Vec<Ref> = b.iter().map(|&r| builder.not(r)).collect();
    let eq: Vec<Ref> = (0..a.len())
        .map(|t| {
            let both = builder.and(vec![a[t], b[t]]);
            let neither = builder.and(vec![not_a[t], not_b[t]]);
            builder.or(vec![both, neither])
        })
        .collect();
    let mut terms: Vec<Ref> = (0..a.len())
        .map(|t| {
            let mut lits = vec![a[t], not_b[t]];
            lits.extend(&eq[..t]);
            builder.and(lits)
        })
        .collect();
    terms.push(builder.and(eq));
    builder.or(terms)
}

/// Compiles `nf` into a circuit over `s·(n−1)` input bits that accepts
/// exactly the encodings of the words the normal form accepts.
pub fn compile(nf: &NormalFormModel, opts: &CompileOptions) -> Result<Compiled> {
    let n = nf.n();
    let layout = *nf.layout();
    let s = layout.symbol_width;
    let num_inputs = s * (n - 1);
    let mut em = Emitter {
        builder: CircuitBuilder::new(num_inputs),
        stages: [StageCount::default(); 7],
        budget: opts.budget_wires,
        leveled: opts.leveled,
    };
    let levels = Levels::new(opts.structured_comparator);

    // encodings of every table entry, per layer
    let encodings: Vec<Vec<Vec<bool>>> = (0..=nf.layers())
        .map(|k| {
            (0..nf.table(k).len() as u32)
                .into_par_iter()
                .map(|idx| nf.encode_value(k, idx))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let end_code = nf.symbol_encoding().code(Token::End)?;
    let mut wires: Vec<Vec<Ref>> = em.stage(0, |b| {
        let len_bits = bin(n, n)?;
        (1..=n)
            .map(|i| {
                let mut w: Vec<Ref> = if i < n {
                    (s * (i - 1)..s * i).map(|x| b.input(x)).collect()
                } else {
                    end_code.iter().map(|&bit| b.constant(bit)).collect()
                };
                w.extend(bin(i, n)?.into_iter().map(|bit| b.constant(bit)));
                w.extend(len_bits.iter().map(|&bit| b.constant(bit)));
                Ok(w)
            })
            .collect()
    })?;

    let mut probes = Vec::new();
    for l in 0..nf.layers() {
        let table = nf.table(l);
        let enc = &encodings[l];
        let score_width = layout.score_width(l + 1);
        let mut selected: Vec<Vec<Ref>> = vec![Vec::new(); n];

        for h in 0..nf.heads() {
            let ranks = nf.ranks(l, h);

            let att_specs: Vec<TruthTableSpec> = (0..n * n)
                .into_par_iter()
                .map(|ij| {
                    let (i, j) = (ij / n, ij % n);
                    let mut rows = Vec::new();
                    for &p in table.at_position(i) {
                        let keys: &[u32] = if i == j {
                            std::slice::from_ref(&p)
                        } else {
                            table.at_position(j)
                        };
                        for &q in keys {
                            let pattern = if i == j {
                                enc[p as usize].clone()
                            } else {
                                concat(&enc[p as usize], &enc[q as usize])
                            };
                            rows.push((pattern, to_bits(ranks.rank(p, q) as u64, score_width)?));
                        }
                    }
                    let width = if i == j {
                        wires[i].len()
                    } else {
                        wires[i].len() + wires[j].len()
                    };
                    TruthTableSpec::with_rows(width, score_width, rows)
                })
                .collect::<Result<_>>()?;
            let scores: Vec<Vec<Ref>> = em.stage(1, |b| {
                att_specs
                    .iter()
                    .enumerate()
                    .map(|(ij, spec)| {
                        let (i, j) = (ij / n, ij % n);
                        let inputs = if i == j {
                            wires[i].clone()
                        } else {
                            [&wires[i][..], &wires[j][..]].concat()
                        };
                        synth_dnf_into(b, spec, &inputs)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let scores = scores
                .into_iter()
                .map(|a| em.level(1, a, levels.attention(l)))
                .collect::<Result<Vec<_>>>()?;

            let ge: Vec<Option<Ref>> = if opts.structured_comparator {
                em.stage(2, |b| {
                    Ok((0..n * n * n)
                        .map(|t| {
                            let (i, j, j2) = (t / (n * n), t / n % n, t % n);
                            (j != j2)
                                .then(|| structured_ge(b, &scores[i * n + j], &scores[i * n + j2]))
                        })
                        .collect())
                })?
            } else {
                let cmp_specs: Vec<Option<TruthTableSpec>> = (0..n * n * n)
                    .into_par_iter()
                    .map(|t| {
                        let (i, j, j2) = (t / (n * n), t / n % n, t % n);
                        if j == j2 {
                            return Ok(None);
                        }
                        let mut pairs = BTreeSet::new();
                        for &p in table.at_position(i) {
                            let reach = |k: usize| -> BTreeSet<u32> {
                                if k == i {
                                    BTreeSet::from([ranks.rank(p, p)])
                                } else {
                                    table
                                        .at_position(k)
                                        .iter()
                                        .map(|&q| ranks.rank(p, q))
                                        .collect()
                                }
                            };
                            let (r1, r2) = (reach(j), reach(j2));
                            for &a in &r1 {
                                for &c in &r2 {
                                    pairs.insert((a, c));
                                }
                            }
                        }
                        let rows = pairs
                            .into_iter()
                            .map(|(a, c)| {
                                Ok((
                                    concat(
                                        &to_bits(a as u64, score_width)?,
                                        &to_bits(c as u64, score_width)?,
                                    ),
                                    vec![a >= c],
                                ))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        TruthTableSpec::with_rows(2 * score_width, 1, rows).map(Some)
                    })
                    .collect::<Result<_>>()?;
                em.stage(2, |b| {
                    cmp_specs
                        .iter()
                        .enumerate()
                        .map(|(t, spec)| match spec {
                            None => Ok(None),
                            Some(spec) => {
                                let (i, j, j2) = (t / (n * n), t / n % n, t % n);
                                let inputs =
                                    [&scores[i * n + j][..], &scores[i * n + j2][..]].concat();
                                Ok(Some(synth_dnf_into(b, spec, &inputs)?[0]))
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })?
            };
            let ge = ge
                .into_iter()
                .map(|g| match g {
                    Some(r) => Ok(Some(em.level(2, vec![r], levels.comparator(l))?[0])),
                    None => Ok(None),
                })
                .collect::<Result<Vec<_>>>()?;

            let maxes: Vec<Vec<Ref>> = em.stage(3, |b| {
                Ok((0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let g = (0..n)
                                    .map(|j2| match ge[(i * n + j) * n + j2] {
                                        Some(r) => r,
                                        None => b.const1(),
                                    })
                                    .collect();
                                b.and(g)
                            })
                            .collect()
                    })
                    .collect())
            })?;
            let maxes = maxes
                .into_iter()
                .map(|m| em.level(3, m, levels.argmax(l)))
                .collect::<Result<Vec<_>>>()?;

            let leftmost: Vec<Vec<Ref>> = em.stage(4, |b| {
                Ok(maxes
                    .iter()
                    .map(|m| {
                        let negated: Vec<Ref> = m[..n - 1].iter().map(|&r| b.not(r)).collect();
                        (0..n)
                            .map(|j| {
                                let mut lits = vec![m[j]];
                                lits.extend(&negated[..j]);
                                b.and(lits)
                            })
                            .collect()
                    })
                    .collect())
            })?;
            let leftmost = leftmost
                .into_iter()
                .map(|z| em.level(4, z, levels.leftmost(l)))
                .collect::<Result<Vec<_>>>()?;

            let picked: Vec<Vec<Ref>> = em.stage(5, |b| {
                Ok(leftmost
                    .iter()
                    .map(|z| {
                        (0..wires[0].len())
                            .map(|bit| {
                                let terms =
                                    (0..n).map(|j| b.and(vec![wires[j][bit], z[j]])).collect();
                                b.or(terms)
                            })
                            .collect()
                    })
                    .collect())
            })?;
            for (sel, u) in selected.iter_mut().zip(picked) {
                sel.extend(em.level(5, u, levels.selection(l))?);
            }

            probes.extend(
                leftmost
                    .into_iter()
                    .enumerate()
                    .map(|(i, z)| SelectionProbe {
                        layer: l + 1,
                        head: h,
                        position: i + 1,
                        z,
                    }),
            );
        }
        for (w, sel) in wires.iter_mut().zip(selected) {
            w.extend(sel);
        }
    }

    let last = nf.layers();
    let out_rows = nf
        .table(last)
        .at_position(n - 1)
        .iter()
        .map(|&v| {
            let bit = nf
                .output_bit(v)
                .ok_or_else(|| Error::Validation("final value is not at position n".into()))?;
            Ok((encodings[last][v as usize].clone(), vec![bit]))
        })
        .collect::<Result<Vec<_>>>()?;
    let out_spec = TruthTableSpec::with_rows(wires[n - 1].len(), 1, out_rows)?;
    let output = em.stage(6, |b| Ok(synth_dnf_into(b, &out_spec, &wires[n - 1])?[0]))?;
    let output = em.level(6, vec![output], levels.budget(last))?[0];

    let circuit = em
        .builder
        .finish(format!("{}-n{}", nf.name(), n), vec![output])?;
    let metrics = circuit.metrics();
    let budget = levels.budget(last);
    if metrics.depth > budget {
        return Err(Error::Validation(format!(
            "emitted depth {} exceeds the bound {budget}",
            metrics.depth
        )));
    }
    let report = CompileReport {
        model: nf.name().to_string(),
        n,
        inputs: num_inputs,
        size: metrics.size,
        depth: metrics.depth,
        depth_budget: budget,
        stages: em.stages,
        table_sizes: (0..=last).map(|k| nf.table(k).len()).collect(),
        value_widths: (0..=last).map(|k| layout.value_width(k)).collect(),
    };
    Ok(Compiled {
        circuit,
        report,
        probes,
    })
}

/// Input bits `h(x)` of the compiled circuit for the word `x`.
pub fn encode_input(nf: &NormalFormModel, x: &str) -> Result<Vec<bool>> {
    nf.symbol_encoding().encode_word(x)
}

/// Wraps a `3n`-input circuit as `E_n(x) = c(0^n · x · 1^n)`.
pub fn equality_to_dyck_reduction(c: &Circuit) -> Result<Circuit> {
    if !c.num_inputs().is_multiple_of(3) {
        return Err(Error::input(format!(
            "reduction needs 3n inputs, circuit `{}` has {}",
            c.name(),
            c.num_inputs()
        )));
    }
    let n = c.num_inputs() / 3;
    let mut b = CircuitBuilder::new(n);
    let mut inputs = Vec::with_capacity(3 * n);
    if n > 0 {
        let zero = b.const0();
        let one = b.const1();
        inputs.extend(std::iter::repeat_n(zero, n));
        inputs.extend((0..n).map(|i| b.input(i)));
        inputs.extend(std::iter::repeat_n(one, n));
    }
    let outputs = b.embed(c, &inputs)?;
    b.finish(format!("E{n}"), outputs)
}

/// Largest length for which [`dyck1_circuit`] builds the full table.
pub const MAX_DYCK_TABLE_LEN: usize = 18;

/// Full-table DNF for DYCK-1 words of length `m`, `[` as 0 and `]` as 1.
pub fn dyck1_circuit(m: usize) -> Result<Circuit> {
    if m == 0 || m > MAX_DYCK_TABLE_LEN {
        return Err(Error::resource(
            "reduction",
            format!("DYCK-1 tables are built for lengths 1..={MAX_DYCK_TABLE_LEN}, not {m}"),
        ));
    }
    let dyck = LangSpec::dyck(1)?;
    let spec = TruthTableSpec::from_fn(m, 1, |bits| {
        let word: String = bits.iter().map(|&b| if b { ']' } else { '[' }).collect();
        vec![dyck.member(&word).expect("bracket word")]
    })?;
    let mut c = synth_dnf(&spec)?;
    c.rename(format!("dyck1-{m}"));
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_bits;

    #[test]
    fn budgets() {
        assert_eq!(depth_budget(1), 14);
        assert_eq!(depth_budget(2), 25);
        assert_eq!(Levels::new(true).budget(2), 31);
    }

    #[test]
    fn structured_comparator_is_ge() {
        for width in 1..=4usize {
            let mut b = CircuitBuilder::new(2 * width);
            let a: Vec<Ref> = (0..width).map(|i| b.input(i)).collect();
            let c: Vec<Ref> = (width..2 * width).map(|i| b.input(i)).collect();
            let out = structured_ge(&mut b, &a, &c);
            let circuit = b.finish("ge", vec![out]).unwrap();
            assert!(circuit.metrics().depth <= 5);
            for x in 0..1u64 << width {
                for y in 0..1u64 << width {
                    let bits = concat(&to_bits(x, width).unwrap(), &to_bits(y, width).unwrap());
                    assert_eq!(circuit.evaluate(&bits).unwrap(), vec![x >= y], "{x} >= {y}");
                }
            }
        }
    }

    #[test]
    fn reduction_examples() {
        let e2 = equality_to_dyck_reduction(&dyck1_circuit(6).unwrap()).unwrap();
        assert_eq!(e2.num_inputs(), 2);
        assert_eq!(e2.evaluate(&parse_bits("01").unwrap()).unwrap(), vec![true]);
        assert_eq!(
            e2.evaluate(&parse_bits("11").unwrap()).unwrap(),
            vec![false]
        );
        assert!(equality_to_dyck_reduction(&dyck1_circuit(4).unwrap()).is_err());
        assert!(dyck1_circuit(19).is_err());
    }
}
