use crate::C64;

use super::{checked_ln, checked_powi, EvalError};

#[derive(Clone, Copy, Debug)]
pub(crate) enum Instr {
    Const(C64),
    Var(u32),
    ConjVar(u32),
    Sum(u32, u32),
    Product(u32, u32),
    Pow(u32, i32),
    Log(u32),
    Conj(u32),
}

/// Straight-line program evaluating a fixed set of pooled expressions.
///
/// Immutable once built, so one tape can be shared across worker threads;
/// each worker supplies its own scratch buffer.
#[derive(Clone, Debug)]
pub struct Tape {
    instrs: Vec<Instr>,
    args: Vec<u32>,
    outputs: Vec<u32>,
    dim: usize,
    labels: Vec<(u32, String)>,
}

impl Tape {
    pub(crate) fn new(
        instrs: Vec<Instr>,
        args: Vec<u32>,
        outputs: Vec<u32>,
        dim: usize,
        labels: Vec<(u32, String)>,
    ) -> Self {
        Self {
            instrs,
            args,
            outputs,
            dim,
            labels,
        }
    }

    /// Number of variables the tape reads.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    fn label(&self, slot: usize) -> String {
        self.labels
            .iter()
            .find(|(s, _)| *s as usize == slot)
            .map(|(_, l)| l.clone())
            .unwrap_or_default()
    }

    /// Evaluates every output at `point`, writing them into `out`.
    pub fn eval_into(&self, point: &[C64], scratch: &mut Vec<C64>, out: &mut Vec<C64>) -> Result<(), EvalError> {
        if point.len() < self.dim {
            return Err(EvalError::Dimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        scratch.clear();
        scratch.reserve(self.instrs.len());
        for (slot, instr) in self.instrs.iter().enumerate() {
            let v = match *instr {
                Instr::Const(c) => c,
                Instr::Var(i) => point[i as usize],
                Instr::ConjVar(i) => point[i as usize].conj(),
                Instr::Sum(a, b) => {
                    let mut acc = C64::new(0.0, 0.0);
                    for &k in &self.args[a as usize..b as usize] {
                        acc += scratch[k as usize];
                    }
                    acc
                }
                Instr::Product(a, b) => {
                    let mut acc = C64::new(1.0, 0.0);
                    for &k in &self.args[a as usize..b as usize] {
                        acc *= scratch[k as usize];
                    }
                    acc
                }
                Instr::Pow(x, k) => checked_powi(scratch[x as usize], k).ok_or_else(|| EvalError::PoleAtZero {
                    subexpr: self.label(slot),
                })?,
                Instr::Log(x) => {
                    let a = scratch[x as usize];
                    checked_ln(a).ok_or_else(|| EvalError::LogDomain {
                        value: a,
                        subexpr: self.label(slot),
                    })?
                }
                Instr::Conj(x) => scratch[x as usize].conj(),
            };
            scratch.push(v);
        }
        out.clear();
        out.extend(self.outputs.iter().map(|&s| scratch[s as usize]));
        Ok(())
    }

    pub fn eval(&self, point: &[C64]) -> Result<Vec<C64>, EvalError> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.eval_into(point, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Convenience for single-output tapes.
    pub fn eval_one(&self, point: &[C64]) -> Result<C64, EvalError> {
        Ok(self.eval(point)?[0])
    }
}
