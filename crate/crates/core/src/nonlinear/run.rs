//! One-shot evaluation of a gadget on concrete real inputs.

use std::fmt;
use std::str::FromStr;

use crate::builder::{CircuitBuilder, SynthesisError, Variable};
use crate::field::PrimeModulus;

use super::{quantize, synth_exp_neg, synth_gelu, synth_max, synth_softmax, FixedPointParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Exp,
    Softmax,
    Gelu,
    Max,
}

impl Function {
    pub fn name(&self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Softmax => "softmax",
            Function::Gelu => "gelu",
            Function::Max => "max",
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Function {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Function::Exp,
            Function::Softmax,
            Function::Gelu,
            Function::Max,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| format!("unknown function {s:?} (expected exp, softmax, gelu or max)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetRun {
    /// Outputs in scaled integer units.
    pub scaled: Vec<i128>,
    pub outputs: Vec<f64>,
    pub satisfied: bool,
    pub n_constraints: usize,
}

/// Quantizes `inputs`, synthesizes the gadget with a witness and checks the
/// finished instance. `Exp` and `Gelu` take exactly one input.
pub fn run_gadget(
    function: Function,
    inputs: &[f64],
    params: &FixedPointParams,
    modulus: &PrimeModulus,
) -> Result<GadgetRun, SynthesisError> {
    params
        .validate(modulus)
        .map_err(|e| SynthesisError::Spec(e.to_string()))?;
    if matches!(function, Function::Exp | Function::Gelu) && inputs.len() != 1 {
        return Err(SynthesisError::Shape(format!(
            "{function} takes one input, got {}",
            inputs.len()
        )));
    }
    let mut builder = CircuitBuilder::new(modulus);
    let mut lcs = Vec::with_capacity(inputs.len());
    for (i, x) in inputs.iter().enumerate() {
        let q =
            quantize(*x, params, modulus).map_err(|e| SynthesisError::Witness(e.to_string()))?;
        let v = builder.alloc_public(format!("in[{i}]"), Some(q.value))?;
        lcs.push(builder.lc(v));
    }
    let outs: Vec<Variable> = match function {
        Function::Exp => vec![synth_exp_neg(&mut builder, &lcs[0], params)?],
        Function::Gelu => vec![synth_gelu(&mut builder, &lcs[0], params)?],
        Function::Max => vec![synth_max(&mut builder, &lcs, params.bit_width)?],
        Function::Softmax => synth_softmax(&mut builder, &lcs, params)?,
    };
    let scaled = outs
        .iter()
        .map(|v| {
            builder
                .value(*v)
                .and_then(|f| f.to_signed())
                .expect("witnessed output")
        })
        .collect::<Vec<_>>();
    let done = builder.finalize()?;
    let assignment = done.assignment.expect("witnessed");
    let satisfied = done.instance.is_satisfied(&assignment)?.satisfied;
    Ok(GadgetRun {
        outputs: scaled.iter().map(|v| *v as f64 / params.scale()).collect(),
        scaled,
        satisfied,
        n_constraints: done.instance.n_constraints(),
    })
}
