//! Boolean circuits over CONST0/CONST1/NOT/AND/OR gates.
//!
//! Gates are stored in index order and may only read input terminals or
//! gates with a smaller index, so every well-formed circuit is acyclic by
//! construction.

mod dnf;
pub mod netlist;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use dnf::{synth_dnf, synth_dnf_into, TruthTableSpec};

/// A wire source: input terminal `x_{i+1}` or gate `g_{i+1}` (stored 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ref {
    Input(u32),
    Gate(u32),
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Input(i) => write!(f, "x{}", i + 1),
            Ref::Gate(g) => write!(f, "g{}", g + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Const0,
    Const1,
    Not,
    And,
    Or,
}

impl GateKind {
    pub const ALL: [GateKind; 5] = [
        GateKind::Const0,
        GateKind::Const1,
        GateKind::Not,
        GateKind::And,
        GateKind::Or,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::Not => "NOT",
            GateKind::And => "AND",
            GateKind::Or => "OR",
        }
    }

    fn fan_in_ok(self, fan_in: usize) -> bool {
        match self {
            GateKind::Const0 | GateKind::Const1 => fan_in == 0,
            GateKind::Not => fan_in == 1,
            GateKind::And | GateKind::Or => fan_in >= 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<Ref>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    name: String,
    num_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<Ref>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    /// Total wire count, the sum of all gate fan-ins.
    pub size: usize,
    /// Longest path, in wires, from a fan-in-0 vertex to an output.
    pub depth: usize,
    pub const0: usize,
    pub const1: usize,
    pub not: usize,
    pub and: usize,
    pub or: usize,
}

impl Metrics {
    pub fn gates(&self) -> usize {
        self.const0 + self.const1 + self.not + self.and + self.or
    }
}

fn check_ref(r: Ref, num_inputs: usize, gate_idx: usize) -> Result<()> {
    match r {
        Ref::Input(i) if (i as usize) < num_inputs => Ok(()),
        Ref::Gate(g) if (g as usize) < gate_idx => Ok(()),
        _ => Err(Error::Validation(format!(
            "reference {r} is not defined before g{}",
            gate_idx + 1
        ))),
    }
}

impl Circuit {
    pub fn new(
        name: impl Into<String>,
        num_inputs: usize,
        gates: Vec<Gate>,
        outputs: Vec<Ref>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!(
                "circuit name `{name}` must be a nonempty token"
            )));
        }
        for (idx, gate) in gates.iter().enumerate() {
            if !gate.kind.fan_in_ok(gate.inputs.len()) {
                return Err(Error::Validation(format!(
                    "g{} {} has illegal fan-in {}",
                    idx + 1,
                    gate.kind.name(),
                    gate.inputs.len()
                )));
            }
            for &r in &gate.inputs {
                check_ref(r, num_inputs, idx)?;
            }
        }
        if outputs.is_empty() {
            return Err(Error::Validation(
                "a circuit needs at least one output".into(),
            ));
        }
        for &r in &outputs {
            check_ref(r, num_inputs, gates.len())?;
        }
        Ok(Circuit {
            name,
            num_inputs,
            gates,
            outputs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Ref] {
        &self.outputs
    }

    pub fn rename(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Value of every gate on one input assignment.
    pub fn gate_values(&self, bits: &[bool]) -> Result<Vec<bool>> {
        if bits.len() != self.num_inputs {
            return Err(Error::input(format!(
                "circuit `{}` expects {} input bits, got {}",
                self.name,
                self.num_inputs,
                bits.len()
            )));
        }
        let mut values = Vec::with_capacity(self.gates.len());
        let read = |values: &[bool], r: Ref| match r {
            Ref::Input(i) => bits[i as usize],
            Ref::Gate(g) => values[g as usize],
        };
        for gate in &self.gates {
            let v = match gate.kind {
                GateKind::Const0 => false,
                GateKind::Const1 => true,
                GateKind::Not => !read(&values, gate.inputs[0]),
                GateKind::And => gate.inputs.iter().all(|&r| read(&values, r)),
                GateKind::Or => gate.inputs.iter().any(|&r| read(&values, r)),
            };
            values.push(v);
        }
        Ok(values)
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<Vec<bool>> {
        let values = self.gate_values(bits)?;
        Ok(self
            .outputs
            .iter()
            .map(|&r| match r {
                Ref::Input(i) => bits[i as usize],
                Ref::Gate(g) => values[g as usize],
            })
            .collect())
    }

    /// Values of arbitrary wires on one input assignment.
    pub fn probe(&self, bits: &[bool], refs: &[Ref]) -> Result<Vec<bool>> {
        let values = self.gate_values(bits)?;
        Ok(refs
            .iter()
            .map(|&r| match r {
                Ref::Input(i) => bits[i as usize],
                Ref::Gate(g) => values[g as usize],
            })
            .collect())
    }

    /// Evaluates 64 assignments at once; bit `l` of `inputs[i]` is input
    /// `x_{i+1}` of lane `l`.
    pub fn evaluate_lanes(&self, inputs: &[u64]) -> Result<Vec<u64>> {
        if inputs.len() != self.num_inputs {
            return Err(Error::input(format!(
                "circuit `{}` expects {} input words, got {}",
                self.name,
                self.num_inputs,
                inputs.len()
            )));
        }
        let mut values: Vec<u64> = Vec::with_capacity(self.gates.len());
        let read = |values: &[u64], r: Ref| match r {
            Ref::Input(i) => inputs[i as usize],
            Ref::Gate(g) => values[g as usize],
        };
        for gate in &self.gates {
            let v = match gate.kind {
                GateKind::Const0 => 0,
                GateKind::Const1 => u64::MAX,
                GateKind::Not => !read(&values, gate.inputs[0]),
                GateKind::And => gate
                    .inputs
                    .iter()
                    .fold(u64::MAX, |acc, &r| acc & read(&values, r)),
                GateKind::Or => gate.inputs.iter().fold(0, |acc, &r| acc | read(&values, r)),
            };
            values.push(v);
        }
        Ok(self.outputs.iter().map(|&r| read(&values, r)).collect())
    }

    /// Per-gate depth: 0 for fan-in-0 gates, else one more than the deepest input.
    pub fn gate_depths(&self) -> Vec<usize> {
        let mut depth = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let d = gate
                .inputs
                .iter()
                .map(|&r| match r {
                    Ref::Input(_) => 1,
                    Ref::Gate(g) => depth[g as usize] + 1,
                })
                .max()
                .unwrap_or(0);
            depth.push(d);
        }
        depth
    }

    pub fn metrics(&self) -> Metrics {
        let depths = self.gate_depths();
        let mut m = Metrics {
            depth: self
                .outputs
                .iter()
                .map(|&r| match r {
                    Ref::Input(_) => 0,
                    Ref::Gate(g) => depths[g as usize],
                })
                .max()
                .unwrap_or(0),
            ..Metrics::default()
        };
        for gate in &self.gates {
            m.size += gate.inputs.len();
            match gate.kind {
                GateKind::Const0 => m.const0 += 1,
                GateKind::Const1 => m.const1 += 1,
                GateKind::Not => m.not += 1,
                GateKind::And => m.and += 1,
                GateKind::Or => m.or += 1,
            }
        }
        m
    }
}

/// Parses a `0`/`1` string, `x1` leftmost.
pub fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::input(format!("`{other}` is not a bit"))),
        })
        .collect()
}

pub fn render_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Incremental circuit construction with shared constant gates.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
    depths: Vec<usize>,
    wires: usize,
    const0: Option<Ref>,
    const1: Option<Ref>,
    /// Buffer chains above a wire, one gate per extra level.
    buffers: HashMap<Ref, Vec<Ref>>,
}

impl CircuitBuilder {
    pub fn new(num_inputs: usize) -> Self {
        CircuitBuilder {
            num_inputs,
            gates: Vec::new(),
            depths: Vec::new(),
            wires: 0,
            const0: None,
            const1: None,
            buffers: HashMap::new(),
        }
    }

    pub fn input(&self, idx: usize) -> Ref {
        assert!(idx < self.num_inputs, "input x{} out of range", idx + 1);
        Ref::Input(idx as u32)
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    /// Wires added so far.
    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn push(&mut self, kind: GateKind, inputs: Vec<Ref>) -> Ref {
        debug_assert!(kind.fan_in_ok(inputs.len()));
        debug_assert!(inputs
            .iter()
            .all(|&r| check_ref(r, self.num_inputs, self.gates.len()).is_ok()));
        self.wires += inputs.len();
        let depth = inputs.iter().map(|&r| self.depth(r) + 1).max().unwrap_or(0);
        self.depths.push(depth);
        self.gates.push(Gate { kind, inputs });
        Ref::Gate(self.gates.len() as u32 - 1)
    }

    /// Longest path from a fan-in-0 vertex to `r`.
    pub fn depth(&self, r: Ref) -> usize {
        match r {
            Ref::Input(_) => 0,
            Ref::Gate(g) => self.depths[g as usize],
        }
    }

    /// `r` delayed through fan-in-1 AND buffers until its depth is `level`;
    /// `r` itself if it is already that deep. Chains are shared.
    pub fn buffer_to(&mut self, r: Ref, level: usize) -> Ref {
        let base = self.depth(r);
        if level <= base {
            return r;
        }
        let mut chain = self.buffers.remove(&r).unwrap_or_default();
        while chain.len() < level - base {
            let below = chain.last().copied().unwrap_or(r);
            chain.push(self.push(GateKind::And, vec![below]));
        }
        let out = chain[level - base - 1];
        self.buffers.insert(r, chain);
        out
    }

    pub fn const0(&mut self) -> Ref {
        match self.const0 {
            Some(r) => r,
            None => {
                let r = self.push(GateKind::Const0, Vec::new());
                self.const0 = Some(r);
                r
            }
        }
    }

    pub fn const1(&mut self) -> Ref {
        match self.const1 {
            Some(r) => r,
            None => {
                let r = self.push(GateKind::Const1, Vec::new());
                self.const1 = Some(r);
                r
            }
        }
    }

    pub fn constant(&mut self, bit: bool) -> Ref {
        if bit {
            self.const1()
        } else {
            self.const0()
        }
    }

    pub fn not(&mut self, r: Ref) -> Ref {
        self.push(GateKind::Not, vec![r])
    }

    pub fn and(&mut self, inputs: Vec<Ref>) -> Ref {
        self.push(GateKind::And, inputs)
    }

    pub fn or(&mut self, inputs: Vec<Ref>) -> Ref {
        self.push(GateKind::Or, inputs)
    }

    /// Copies `circuit` in with its inputs wired to `inputs`; returns the
    /// copies of its outputs.
    pub fn embed(&mut self, circuit: &Circuit, inputs: &[Ref]) -> Result<Vec<Ref>> {
        if inputs.len() != circuit.num_inputs {
            return Err(Error::input(format!(
                "circuit `{}` expects {} inputs, {} wires supplied",
                circuit.name,
                circuit.num_inputs,
                inputs.len()
            )));
        }
        let mut copies: Vec<Ref> = Vec::with_capacity(circuit.gates.len());
        let map = |copies: &[Ref], r: Ref| match r {
            Ref::Input(i) => inputs[i as usize],
            Ref::Gate(g) => copies[g as usize],
        };
        for gate in &circuit.gates {
            let r = match gate.kind {
                GateKind::Const0 => self.const0(),
                GateKind::Const1 => self.const1(),
                kind => {
                    let ins = gate.inputs.iter().map(|&r| map(&copies, r)).collect();
                    self.push(kind, ins)
                }
            };
            copies.push(r);
        }
        Ok(circuit.outputs.iter().map(|&r| map(&copies, r)).collect())
    }

    pub fn finish(self, name: impl Into<String>, outputs: Vec<Ref>) -> Result<Circuit> {
        Circuit::new(name, self.num_inputs, self.gates, outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kind: GateKind, inputs: Vec<Ref>, n: usize) -> Circuit {
        Circuit::new("t", n, vec![Gate { kind, inputs }], vec![Ref::Gate(0)]).unwrap()
    }

    #[test]
    fn buffers_pad_to_a_level_and_are_shared() {
        let mut b = CircuitBuilder::new(2);
        let x = b.input(0);
        let y = b.and(vec![x, b.input(1)]);
        assert_eq!(b.buffer_to(y, 1), y);
        let y3 = b.buffer_to(y, 3);
        assert_eq!(b.depth(y3), 3);
        let before = b.num_gates();
        let y2 = b.buffer_to(y, 2);
        assert_eq!(b.num_gates(), before, "shorter pad reuses the chain");
        assert_eq!(b.depth(y2), 2);
        let c = b.finish("pad", vec![y3, y2]).unwrap();
        for bits in [[false, false], [true, false], [true, true]] {
            let want = bits[0] && bits[1];
            assert_eq!(c.evaluate(&bits).unwrap(), vec![want, want]);
        }
    }

    #[test]
    fn embedded_circuits_keep_their_function() {
        let mut inner = CircuitBuilder::new(2);
        let (a, c) = (inner.input(0), inner.input(1));
        let na = inner.not(a);
        let one = inner.const1();
        let x = inner.and(vec![na, c, one]);
        let inner = inner.finish("inner", vec![x]).unwrap();

        let mut outer = CircuitBuilder::new(2);
        let (p, q) = (outer.input(0), outer.input(1));
        let swapped = outer.embed(&inner, &[q, p]).unwrap();
        assert!(outer.embed(&inner, &[p]).is_err());
        let outer = outer.finish("outer", swapped).unwrap();
        for (p, q) in [(false, false), (false, true), (true, false), (true, true)] {
            assert_eq!(outer.evaluate(&[p, q]).unwrap(), vec![!q && p]);
        }
    }

    #[test]
    fn evaluates_basic_gates() {
        let and = single(GateKind::And, vec![Ref::Input(0), Ref::Input(1)], 2);
        assert_eq!(
            and.evaluate(&parse_bits("11").unwrap()).unwrap(),
            vec![true]
        );
        assert_eq!(
            and.evaluate(&parse_bits("10").unwrap()).unwrap(),
            vec![false]
        );
        let not = single(GateKind::Not, vec![Ref::Input(0)], 1);
        assert_eq!(not.evaluate(&[false]).unwrap(), vec![true]);

        let mut b = CircuitBuilder::new(1);
        let c0 = b.const0();
        let x = b.input(0);
        let or = b.or(vec![c0, x]);
        let c = b.finish("or", vec![or]).unwrap();
        assert_eq!(c.evaluate(&[false]).unwrap(), vec![false]);
        assert_eq!(c.evaluate(&[true]).unwrap(), vec![true]);
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        let and = single(GateKind::And, vec![Ref::Input(0), Ref::Input(1)], 2);
        assert!(matches!(and.evaluate(&[true]), Err(Error::Input(_))));
        assert!(and.evaluate_lanes(&[0]).is_err());
    }

    #[test]
    fn size_and_depth() {
        let and = single(GateKind::And, vec![Ref::Input(0), Ref::Input(1)], 2);
        let m = and.metrics();
        assert_eq!((m.size, m.depth, m.and), (2, 1, 1));

        let mut b = CircuitBuilder::new(2);
        let (x1, x2) = (b.input(0), b.input(1));
        let a = b.and(vec![x1, x2]);
        let n = b.not(a);
        let c = b.finish("nand", vec![n]).unwrap();
        let m = c.metrics();
        assert_eq!((m.size, m.depth, m.gates()), (3, 2, 2));

        let mut b = CircuitBuilder::new(0);
        let one = b.const1();
        let c = b.finish("one", vec![one]).unwrap();
        let m = c.metrics();
        assert_eq!((m.size, m.depth, m.const1), (0, 0, 1));
        assert_eq!(c.evaluate(&[]).unwrap(), vec![true]);
    }

    #[test]
    fn input_terminal_output_has_depth_zero() {
        let c = Circuit::new("wire", 1, Vec::new(), vec![Ref::Input(0)]).unwrap();
        assert_eq!(c.metrics().depth, 0);
        assert_eq!(c.evaluate(&[true]).unwrap(), vec![true]);
    }

    #[test]
    fn rejects_invalid_structure() {
        let fwd = Circuit::new(
            "bad",
            1,
            vec![Gate {
                kind: GateKind::Not,
                inputs: vec![Ref::Gate(0)],
            }],
            vec![Ref::Gate(0)],
        );
        assert!(matches!(fwd, Err(Error::Validation(_))));
        let fan_in = Circuit::new(
            "bad",
            2,
            vec![Gate {
                kind: GateKind::Not,
                inputs: vec![Ref::Input(0), Ref::Input(1)],
            }],
            vec![Ref::Gate(0)],
        );
        assert!(fan_in.is_err());
        assert!(Circuit::new("bad", 1, Vec::new(), Vec::new()).is_err());
        assert!(Circuit::new("bad", 1, Vec::new(), vec![Ref::Input(1)]).is_err());
        assert!(Circuit::new("has space", 1, Vec::new(), vec![Ref::Input(0)]).is_err());
    }

    #[test]
    fn lanes_agree_with_scalar_evaluation() {
        let mut b = CircuitBuilder::new(3);
        let (x1, x2, x3) = (b.input(0), b.input(1), b.input(2));
        let n = b.not(x2);
        let a = b.and(vec![x1, n]);
        let o = b.or(vec![a, x3]);
        let c = b.finish("mix", vec![o, n]).unwrap();
        let mut words = vec![0u64; 3];
        for lane in 0..8 {
            for (i, w) in words.iter_mut().enumerate() {
                if lane >> (2 - i) & 1 == 1 {
                    *w |= 1 << lane;
                }
            }
        }
        let out = c.evaluate_lanes(&words).unwrap();
        for lane in 0..8 {
            let bits: Vec<bool> = (0..3).map(|i| lane >> (2 - i) & 1 == 1).collect();
            let expected = c.evaluate(&bits).unwrap();
            let got: Vec<bool> = out.iter().map(|w| w >> lane & 1 == 1).collect();
            assert_eq!(got, expected, "lane {lane}");
        }
    }
}
