//! Exhaustive sweeps and measurement reports shared by the CLI and tests.

use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::compiler::{
    compile, dyck1_circuit, equality_to_dyck_reduction, CompileOptions, Compiled,
};
use crate::error::{Error, Result};
use crate::guhat::{GuhatModel, Pooling};
use crate::lang::{LangSpec, Words};
use crate::normal_form::{normalize, NormalFormModel, NormalizeOptions};
use crate::rational;
use crate::restricted::{
    plan_conversion, tie_audit, uhat_to_ahat, ConversionPlan, RestrictedModel,
};
use crate::value::Alphabet;

/// Normalizes and compiles `model` for words of length `m` (`n = m + 1`).
pub fn build_circuit(
    model: &GuhatModel,
    m: usize,
    nf_opts: &NormalizeOptions,
    opts: &CompileOptions,
) -> Result<(NormalFormModel, Compiled)> {
    let nf = normalize(model, m + 1, nf_opts)?;
    let compiled = compile(&nf, opts)?;
    Ok((nf, compiled))
}

/// Evaluates a single-output circuit on many words, 64 per pass.
pub fn evaluate_words(
    circuit: &Circuit,
    encode: impl Fn(&str) -> Result<Vec<bool>> + Sync,
    words: &[String],
) -> Result<Vec<bool>> {
    let chunks = words
        .par_chunks(64)
        .map(|chunk| {
            let encoded = chunk
                .iter()
                .map(|w| encode(w))
                .collect::<Result<Vec<_>>>()?;
            let mut lanes = vec![0u64; circuit.num_inputs()];
            for (lane, bits) in encoded.iter().enumerate() {
                for (slot, &bit) in lanes.iter_mut().zip(bits) {
                    *slot |= u64::from(bit) << lane;
                }
            }
            let out = circuit.evaluate_lanes(&lanes)?[0];
            Ok((0..chunk.len())
                .map(|lane| out >> lane & 1 == 1)
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub input: String,
    pub expected: bool,
    pub actual: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivReport {
    pub model: String,
    pub max_len: usize,
    pub checked: u64,
    /// In sweep order: by length, then lexicographically.
    pub mismatches: Vec<Mismatch>,
}

impl EquivReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for EquivReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "EQUIV {} LENGTHS 0..{} STRINGS {} MISMATCHES {}",
            self.model,
            self.max_len,
            self.checked,
            self.mismatches.len()
        )?;
        if let Some(m) = self.mismatches.first() {
            writeln!(
                f,
                "FIRST \"{}\" MODEL {} CIRCUIT {}",
                m.input,
                u8::from(m.expected),
                u8::from(m.actual)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EquivOptions {
    pub normalize: NormalizeOptions,
    pub compile: CompileOptions,
    /// Self-test hook: flips the circuit's answer on the first word of the
    /// longest length.
    pub inject_fault: bool,
}

/// Compiles `model` for every length `0..=max_len` and compares the circuit
/// with the model on every word.
pub fn equiv(model: &GuhatModel, max_len: usize, opts: &EquivOptions) -> Result<EquivReport> {
    let mut report = EquivReport {
        model: model.name().to_string(),
        max_len,
        checked: 0,
        mismatches: Vec::new(),
    };
    for m in 0..=max_len {
        let (nf, compiled) = build_circuit(model, m, &opts.normalize, &opts.compile)?;
        let words: Vec<String> = Words::new(model.alphabet(), m).collect();
        let mut actual = evaluate_words(
            &compiled.circuit,
            |w| nf.symbol_encoding().encode_word(w),
            &words,
        )?;
        if opts.inject_fault && m == max_len {
            actual[0] = !actual[0];
        }
        let expected = words
            .par_iter()
            .map(|w| model.accepts(w, Pooling::Unique))
            .collect::<Result<Vec<_>>>()?;
        report.checked += words.len() as u64;
        report.mismatches.extend(
            words
                .into_iter()
                .zip(expected.into_iter().zip(actual))
                .filter(|(_, (e, a))| e != a)
                .map(|(input, (expected, actual))| Mismatch {
                    input,
                    expected,
                    actual,
                }),
        );
    }
    Ok(report)
}

/// Words of length `0..=max_len` where `accepts` and the oracle disagree.
pub fn oracle_sweep(
    alphabet: &Alphabet,
    lang: &LangSpec,
    max_len: usize,
    accepts: impl Fn(&str) -> Result<bool> + Sync,
) -> Result<(u64, Vec<Mismatch>)> {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for m in 0..=max_len {
        let words: Vec<String> = Words::new(alphabet, m).collect();
        let found = words
            .par_iter()
            .map(|w| {
                let expected = lang.member(w)?;
                let actual = accepts(w)?;
                Ok((expected != actual).then(|| Mismatch {
                    input: w.clone(),
                    expected,
                    actual,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        checked += words.len() as u64;
        mismatches.extend(found.into_iter().flatten());
    }
    Ok((checked, mismatches))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthRow {
    /// Input length including `$`.
    pub n: usize,
    pub size: usize,
    pub depth: usize,
    pub build_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub model: String,
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of `ln size` against `ln n` over rows with `n ≥ 4`.
    pub slope: Option<f64>,
}

/// Rows with `n` below this are left out of the slope fit.
pub const SLOPE_MIN_N: usize = 4;

impl GrowthReport {
    pub fn depth_constant(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].depth == w[1].depth)
    }

    pub fn size_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].size <= w[1].size)
    }

    /// Report text; build times only when `timing` is set, so the default
    /// output is reproducible byte for byte.
    pub fn render(&self, timing: bool) -> String {
        let mut out = format!("GROWTH {}\n", self.model);
        for r in &self.rows {
            let _ = write!(out, "ROW N {} SIZE {} DEPTH {}", r.n, r.size, r.depth);
            if timing {
                let _ = write!(out, " TIME_MS {}", r.build_time.as_millis());
            }
            out.push('\n');
        }
        match self.slope {
            Some(s) => {
                let _ = writeln!(out, "SLOPE {s:.4}");
            }
            None => out.push_str("SLOPE none\n"),
        }
        let _ = writeln!(
            out,
            "DEPTH {}",
            if self.depth_constant() {
                "constant"
            } else {
                "varies"
            }
        );
        out
    }
}

pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Compiles for every `n ∈ [n_lo..=n_hi]` and fits the size growth.
pub fn growth(
    model: &GuhatModel,
    n_lo: usize,
    n_hi: usize,
    nf_opts: &NormalizeOptions,
    opts: &CompileOptions,
) -> Result<GrowthReport> {
    if n_lo == 0 || n_lo > n_hi {
        return Err(Error::input(format!(
            "length range {n_lo}..{n_hi} is empty or starts at 0"
        )));
    }
    let mut rows = Vec::new();
    for n in n_lo..=n_hi {
        let start = Instant::now();
        let (_, compiled) = build_circuit(model, n - 1, nf_opts, opts)?;
        rows.push(GrowthRow {
            n,
            size: compiled.report.size,
            depth: compiled.report.depth,
            build_time: start.elapsed(),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n >= SLOPE_MIN_N)
        .map(|r| ((r.n as f64).ln(), (r.size as f64).ln()))
        .collect();
    Ok(GrowthReport {
        model: model.name().to_string(),
        slope: fit_slope(&points),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvertReport {
    pub plan: ConversionPlan,
    pub converted: String,
    pub agree: u64,
    pub total: u64,
    pub ties: usize,
}

impl ConvertReport {
    pub fn passed(&self) -> bool {
        self.agree == self.total && self.ties == 0
    }
}

impl fmt::Display for ConvertReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "CONVERT {} LENGTH {} INTO {} DIM {}",
            self.plan.model,
            self.plan.n,
            self.converted,
            self.plan.dim + 2
        )?;
        writeln!(
            f,
            "MIN_GAP {}{} N {}",
            rational::render(&self.plan.min_gap),
            if self.plan.gap_fallback {
                " (no distinct scores)"
            } else {
                ""
            },
            self.plan.denominator
        )?;
        writeln!(f, "AGREE {}/{} TIES {}", self.agree, self.total, self.ties)
    }
}

/// Converts a unique-attention model at length `n` and checks the result
/// on every word of length `n − 1`.
pub fn convert(model: &RestrictedModel, n: usize, budget: u64) -> Result<ConvertReport> {
    let plan = plan_conversion(model, n, budget)?;
    let ahat = uhat_to_ahat(model, &plan)?;
    let words: Vec<String> = Words::new(&model.alphabet, n - 1).collect();
    let agree = words
        .par_iter()
        .map(|w| Ok(u64::from(model.accepts(w)? == ahat.accepts(w)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let ties = tie_audit(&ahat, words.iter().map(String::as_str))?;
    Ok(ConvertReport {
        plan,
        converted: ahat.name,
        agree,
        total: words.len() as u64,
        ties,
    })
}

/// Largest `n` for which the reduction's `3n`-input table is built.
pub const MAX_REDUCE_N: usize = crate::compiler::MAX_DYCK_TABLE_LEN / 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReduceReport {
    pub n: usize,
    pub agree: u64,
    pub total: u64,
    pub size: usize,
    pub depth: usize,
}

impl fmt::Display for ReduceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "REDUCE N {} DYCK_INPUTS {} SIZE {} DEPTH {}",
            self.n,
            3 * self.n,
            self.size,
            self.depth
        )?;
        writeln!(f, "AGREE {}/{}", self.agree, self.total)
    }
}

/// Builds `E_n` from a full-table DYCK-1 circuit on `3n` inputs and checks
/// it against EQUALITY on every `n`-bit word.
pub fn reduce(n: usize) -> Result<ReduceReport> {
    if n == 0 || n > MAX_REDUCE_N {
        return Err(Error::resource(
            "reduction",
            format!("n must be in 1..={MAX_REDUCE_N}, got {n}"),
        ));
    }
    let e = equality_to_dyck_reduction(&dyck1_circuit(3 * n)?)?;
    let equality = LangSpec::equality();
    let words: Vec<String> = Words::new(equality.alphabet(), n).collect();
    let actual = evaluate_words(&e, |w| Ok(w.chars().map(|c| c == '1').collect()), &words)?;
    let mut agree = 0;
    for (w, a) in words.iter().zip(actual) {
        agree += u64::from(equality.member(w)? == a);
    }
    let m = e.metrics();
    Ok(ReduceReport {
        n,
        agree,
        total: words.len() as u64,
        size: m.size,
        depth: m.depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power() {
        let pts: Vec<(f64, f64)> = (4..10)
            .map(|n| ((n as f64).ln(), 3.0 * (n as f64).ln() + 1.0))
            .collect();
        assert!((fit_slope(&pts).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(fit_slope(&pts[..1]), None);
    }
}
