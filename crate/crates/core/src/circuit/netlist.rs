//! Line-oriented netlist text format.
//!
//! ```text
//! CIRCUIT <name> INPUTS <n> OUTPUTS <m>
//! g1 CONST0
//! g2 AND x1 x2
//! g3 NOT g2
//! OUTPUTS g3
//! ```
//!
//! `#` starts a comment; blank lines are ignored.

use std::fmt::Write as _;

use super::{Circuit, Gate, GateKind, Ref};
use crate::error::{Error, Result};

pub fn write_netlist(c: &Circuit) -> String {
    let mut out = String::with_capacity(16 * c.gates().len() + 64);
    let _ = writeln!(
        out,
        "CIRCUIT {} INPUTS {} OUTPUTS {}",
        c.name(),
        c.num_inputs(),
        c.outputs().len()
    );
    for (idx, gate) in c.gates().iter().enumerate() {
        let _ = write!(out, "g{} {}", idx + 1, gate.kind.name());
        for r in &gate.inputs {
            let _ = write!(out, " {r}");
        }
        out.push('\n');
    }
    out.push_str("OUTPUTS");
    for r in c.outputs() {
        let _ = write!(out, " {r}");
    }
    out.push('\n');
    out
}

fn parse_err(line: usize, token: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        token: token.to_string(),
        message: message.into(),
    }
}

fn parse_index(line: usize, token: &str, prefix: char) -> Result<usize> {
    token
        .strip_prefix(prefix)
        .and_then(|digits| digits.parse::<usize>().ok())
        .filter(|&i| i >= 1)
        .ok_or_else(|| parse_err(line, token, format!("expected `{prefix}<index>`")))
}

fn parse_count(line: usize, token: Option<&str>) -> Result<usize> {
    let token = token.ok_or_else(|| parse_err(line, "", "missing count"))?;
    token
        .parse()
        .map_err(|_| parse_err(line, token, "expected a count"))
}

struct Header {
    name: String,
    inputs: usize,
    outputs: usize,
}

fn parse_header(line: usize, tokens: &[&str]) -> Result<Header> {
    match tokens {
        ["CIRCUIT", name, "INPUTS", n, "OUTPUTS", m] => Ok(Header {
            name: name.to_string(),
            inputs: parse_count(line, Some(n))?,
            outputs: parse_count(line, Some(m))?,
        }),
        _ => Err(parse_err(
            line,
            tokens.first().copied().unwrap_or(""),
            "expected `CIRCUIT <name> INPUTS <n> OUTPUTS <m>`",
        )),
    }
}

fn parse_ref(line: usize, token: &str, num_inputs: usize, limit: usize) -> Result<Ref> {
    if token.starts_with('x') {
        let j = parse_index(line, token, 'x')?;
        if j > num_inputs {
            return Err(Error::Validation(format!(
                "line {line}: input {token} exceeds INPUTS {num_inputs}"
            )));
        }
        Ok(Ref::Input(j as u32 - 1))
    } else if token.starts_with('g') {
        let j = parse_index(line, token, 'g')?;
        if j > limit {
            return Err(Error::Validation(format!(
                "line {line}: {token} is referenced before it is defined"
            )));
        }
        Ok(Ref::Gate(j as u32 - 1))
    } else {
        Err(parse_err(
            line,
            token,
            "expected a reference `x<j>` or `g<j>`",
        ))
    }
}

fn parse_kind(line: usize, token: &str) -> Result<GateKind> {
    GateKind::ALL
        .into_iter()
        .find(|k| k.name() == token)
        .ok_or_else(|| parse_err(line, token, "unknown gate kind"))
}

pub fn read_netlist(text: &str) -> Result<Circuit> {
    let mut header: Option<Header> = None;
    let mut gates: Vec<Gate> = Vec::new();
    let mut outputs: Option<Vec<Ref>> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&first) = tokens.first() else {
            continue;
        };
        let Some(h) = &header else {
            header = Some(parse_header(line, &tokens)?);
            continue;
        };
        if outputs.is_some() {
            return Err(parse_err(line, first, "content after the OUTPUTS line"));
        }
        if first == "OUTPUTS" {
            let refs = tokens[1..]
                .iter()
                .map(|t| parse_ref(line, t, h.inputs, gates.len()))
                .collect::<Result<Vec<_>>>()?;
            if refs.len() != h.outputs {
                return Err(parse_err(
                    line,
                    first,
                    format!(
                        "header declares {} outputs, found {}",
                        h.outputs,
                        refs.len()
                    ),
                ));
            }
            outputs = Some(refs);
            continue;
        }
        let gate_no = parse_index(line, first, 'g')?;
        if gate_no != gates.len() + 1 {
            return Err(parse_err(
                line,
                first,
                format!(
                    "gates must be numbered in order; expected g{}",
                    gates.len() + 1
                ),
            ));
        }
        let kind_token = tokens
            .get(1)
            .ok_or_else(|| parse_err(line, first, "missing gate kind"))?;
        let kind = parse_kind(line, kind_token)?;
        let inputs = tokens[2..]
            .iter()
            .map(|t| parse_ref(line, t, h.inputs, gates.len()))
            .collect::<Result<Vec<_>>>()?;
        if !kind.fan_in_ok(inputs.len()) {
            return Err(parse_err(
                line,
                kind_token,
                format!("illegal fan-in {} for {}", inputs.len(), kind.name()),
            ));
        }
        gates.push(Gate { kind, inputs });
    }

    let header = header.ok_or_else(|| parse_err(last_line.max(1), "", "missing CIRCUIT header"))?;
    let outputs = outputs.ok_or_else(|| parse_err(last_line.max(1), "", "missing OUTPUTS line"))?;
    Circuit::new(header.name, header.inputs, gates, outputs)
}
