//! Depth-3 minterm DNF synthesis from (possibly partial) truth tables.

use std::collections::HashSet;

use super::{Circuit, CircuitBuilder, Ref};
use crate::error::{Error, Result};

/// A Boolean function given by its listed rows; unlisted input patterns map
/// to the all-zero output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTableSpec {
    in_width: usize,
    out_width: usize,
    rows: Vec<(Vec<bool>, Vec<bool>)>,
}

impl TruthTableSpec {
    pub fn new(in_width: usize, out_width: usize) -> Self {
        TruthTableSpec {
            in_width,
            out_width,
            rows: Vec::new(),
        }
    }

    pub fn with_rows(
        in_width: usize,
        out_width: usize,
        rows: impl IntoIterator<Item = (Vec<bool>, Vec<bool>)>,
    ) -> Result<Self> {
        let mut spec = Self::new(in_width, out_width);
        let mut seen = HashSet::new();
        for (pattern, output) in rows {
            if !seen.insert(pattern.clone()) {
                return Err(Error::input(format!(
                    "duplicate truth-table row {}",
                    super::render_bits(&pattern)
                )));
            }
            spec.push_unchecked(pattern, output)?;
        }
        Ok(spec)
    }

    /// Full table over all `2^in_width` patterns, `x1` as the most
    /// significant bit of the row index.
    pub fn from_fn(
        in_width: usize,
        out_width: usize,
        mut f: impl FnMut(&[bool]) -> Vec<bool>,
    ) -> Result<Self> {
        if in_width >= usize::BITS as usize {
            return Err(Error::input("truth table too wide to enumerate"));
        }
        let mut spec = Self::new(in_width, out_width);
        for row in 0..(1usize << in_width) {
            let pattern: Vec<bool> = (0..in_width)
                .map(|b| row >> (in_width - 1 - b) & 1 == 1)
                .collect();
            let output = f(&pattern);
            spec.push_unchecked(pattern, output)?;
        }
        Ok(spec)
    }

    fn push_unchecked(&mut self, pattern: Vec<bool>, output: Vec<bool>) -> Result<()> {
        if pattern.len() != self.in_width || output.len() != self.out_width {
            return Err(Error::input(format!(
                "row has shape {}→{}, table is {}→{}",
                pattern.len(),
                output.len(),
                self.in_width,
                self.out_width
            )));
        }
        self.rows.push((pattern, output));
        Ok(())
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn rows(&self) -> &[(Vec<bool>, Vec<bool>)] {
        &self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.in_width < usize::BITS as usize && self.rows.len() == 1usize << self.in_width
    }

    /// Output for `pattern`, zero off the listed support.
    pub fn lookup(&self, pattern: &[bool]) -> Vec<bool> {
        self.rows
            .iter()
            .find(|(p, _)| p == pattern)
            .map(|(_, o)| o.clone())
            .unwrap_or_else(|| vec![false; self.out_width])
    }

    /// Size bound `m(n·2^n + 2^n + n)` for complete tables.
    pub fn size_bound(&self) -> u128 {
        let n = self.in_width as u128;
        let rows = 1u128 << self.in_width.min(100);
        self.out_width as u128 * (n * rows + rows + n)
    }
}

/// Emits the DNF for `spec` into `builder`, reading input bit `b` from
/// `inputs[b]`, and returns one reference per output.
///
/// One AND gate per listed row with any 1 output, shared by every output
/// that row sets; each input wire is negated by at most one NOT gate.
pub fn synth_dnf_into(
    builder: &mut CircuitBuilder,
    spec: &TruthTableSpec,
    inputs: &[Ref],
) -> Result<Vec<Ref>> {
    if spec.in_width == 0 {
        return Err(Error::input("DNF synthesis needs at least one input"));
    }
    if inputs.len() != spec.in_width {
        return Err(Error::input(format!(
            "table reads {} bits, {} wires supplied",
            spec.in_width,
            inputs.len()
        )));
    }
    let mut negated: Vec<Option<Ref>> = vec![None; spec.in_width];
    let mut terms: Vec<Vec<Ref>> = vec![Vec::new(); spec.out_width];
    for (pattern, output) in &spec.rows {
        if !output.iter().any(|&b| b) {
            continue;
        }
        let literals = pattern
            .iter()
            .enumerate()
            .map(|(b, &bit)| {
                if bit {
                    inputs[b]
                } else {
                    *negated[b].get_or_insert_with(|| builder.not(inputs[b]))
                }
            })
            .collect();
        let minterm = builder.and(literals);
        for (o, _) in output.iter().enumerate().filter(|(_, &bit)| bit) {
            terms[o].push(minterm);
        }
    }
    Ok(terms
        .into_iter()
        .map(|minterms| {
            if minterms.is_empty() {
                builder.const0()
            } else {
                builder.or(minterms)
            }
        })
        .collect())
}

/// Synthesizes a standalone depth-≤3 circuit with inputs `x1..x_in_width`.
pub fn synth_dnf(spec: &TruthTableSpec) -> Result<Circuit> {
    let mut builder = CircuitBuilder::new(spec.in_width);
    let inputs: Vec<Ref> = (0..spec.in_width).map(|i| builder.input(i)).collect();
    let outputs = synth_dnf_into(&mut builder, spec, &inputs)?;
    builder.finish("dnf", outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_bits;

    #[test]
    fn xor_within_bound() {
        let spec = TruthTableSpec::from_fn(2, 1, |x| vec![x[0] ^ x[1]]).unwrap();
        let c = synth_dnf(&spec).unwrap();
        for (pattern, output) in spec.rows() {
            assert_eq!(&c.evaluate(pattern).unwrap(), output);
        }
        let m = c.metrics();
        assert_eq!(m.depth, 3);
        assert!(m.size as u128 <= spec.size_bound());
        assert!(m.size <= 14);
    }

    #[test]
    fn all_zero_function_is_const0() {
        let spec = TruthTableSpec::from_fn(3, 1, |_| vec![false]).unwrap();
        let c = synth_dnf(&spec).unwrap();
        let m = c.metrics();
        assert_eq!((m.depth, m.const0, m.size), (0, 1, 0));
    }

    #[test]
    fn off_support_patterns_evaluate_to_zero() {
        let spec =
            TruthTableSpec::with_rows(2, 1, [(parse_bits("00").unwrap(), vec![true])]).unwrap();
        let c = synth_dnf(&spec).unwrap();
        for (bits, expect) in [("00", true), ("01", false), ("10", false), ("11", false)] {
            assert_eq!(
                c.evaluate(&parse_bits(bits).unwrap()).unwrap(),
                vec![expect]
            );
        }
    }

    #[test]
    fn duplicate_rows_rejected() {
        let row = (parse_bits("01").unwrap(), vec![true]);
        assert!(matches!(
            TruthTableSpec::with_rows(2, 1, [row.clone(), row]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn shape_errors() {
        assert!(TruthTableSpec::with_rows(2, 1, [(vec![true], vec![true])]).is_err());
        let empty = TruthTableSpec::new(0, 1);
        assert!(synth_dnf(&empty).is_err());
    }

    #[test]
    fn shared_not_gates() {
        // both minterms negate x1; only one NOT may exist for it
        let spec = TruthTableSpec::with_rows(
            2,
            2,
            [
                (parse_bits("00").unwrap(), vec![true, false]),
                (parse_bits("01").unwrap(), vec![false, true]),
            ],
        )
        .unwrap();
        let c = synth_dnf(&spec).unwrap();
        assert_eq!(c.metrics().not, 2);
        assert_eq!(
            c.evaluate(&parse_bits("01").unwrap()).unwrap(),
            vec![false, true]
        );
    }
}
