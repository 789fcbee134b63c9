//! Fixed-point gadgets for the non-arithmetic layers of a transformer:
//! comparison, max, negative-input exponential, SoftMax and GELU.
//!
//! A real `x` is carried as the integer `round(x·2^s)`, embedded in the field
//! as `p − |v|` when negative. Every gadget takes its operands as linear
//! combinations, so differences such as `x_i − x_max` cost nothing.
//!
//! Row counts (`B` = bit width, `s` = scale bits, `n_e` = exp iterations):
//!
//! | gadget                    | rows                                                   |
//! |---------------------------|--------------------------------------------------------|
//! | `synth_bit_decompose`     | `B + 1`                                                |
//! | `synth_geq`               | `B + 1`                                                |
//! | `synth_max`, `d ≥ 2`      | `d·(B + 1) + d − 1`                                    |
//! | `synth_max`, `d = 1`      | `1`                                                    |
//! | `synth_rescale(shift)`    | `shift + B + 3`                                        |
//! | `synth_exp_neg`           | `(B + 1) + 1 + (n_e + B + 3) + n_e·(s + B + 4) + 1`    |
//! | `synth_softmax(d)`        | `max(d) + d·exp + d·(2B + s + 5)`                      |
//! | `synth_gelu`              | `s + B + 7`                                            |
//!
//! At the defaults (`s = 8`, `B = 24`, `n_e = 6`) the exponential costs 276
//! rows and GELU 39.

mod functions;
mod gadgets;
pub mod reference;
mod run;

use thiserror::Error;

use crate::field::{FieldElement, PrimeModulus};

pub use functions::{synth_exp_neg, synth_gelu, synth_softmax};
pub use gadgets::{
    synth_bit_decompose, synth_geq, synth_max, synth_max_with_claim, synth_rescale,
    synth_rescale_round, Rescaled,
};
pub use run::{run_gadget, Function, GadgetRun};

#[derive(Debug, Error, PartialEq)]
pub enum FixedPointError {
    #[error("invalid fixed-point parameters: {0}")]
    InvalidParams(String),
    #[error("{value} does not fit in the signed {bits}-bit range")]
    OutOfRange { value: f64, bits: u32 },
}

const MAX_BIT_WIDTH: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPointParams {
    pub scale_bits: u32,
    pub bit_width: u32,
    /// Clipping bound for the exponential, in scaled units.
    pub threshold: i64,
    pub exp_iters: u32,
}

impl Default for FixedPointParams {
    fn default() -> Self {
        FixedPointParams {
            scale_bits: 8,
            bit_width: 24,
            threshold: -16 << 8,
            exp_iters: 6,
        }
    }
}

impl FixedPointParams {
    pub fn validate(&self, modulus: &PrimeModulus) -> Result<(), FixedPointError> {
        let bad = |m: String| Err(FixedPointError::InvalidParams(m));
        let (s, b) = (self.scale_bits, self.bit_width);
        if s == 0 || s > 30 {
            return bad(format!("scale bits must be in [1, 30], got {s}"));
        }
        if b < s + 2 || b > MAX_BIT_WIDTH {
            return bad(format!(
                "bit width must be in [{}, {MAX_BIT_WIDTH}], got {b}",
                s + 2
            ));
        }
        if modulus.bits() <= b {
            return bad(format!("2^{b} is not below the modulus {modulus}"));
        }
        if self.exp_iters == 0 || self.exp_iters > 16 {
            return bad(format!(
                "exp iterations must be in [1, 16], got {}",
                self.exp_iters
            ));
        }
        // base = 1 + T/2^n_e must stay nonnegative
        let floor = -(1i64 << (s + self.exp_iters));
        if self.threshold >= 0 || self.threshold < floor {
            return bad(format!(
                "threshold must be in [{floor}, 0), got {}",
                self.threshold
            ));
        }
        Ok(())
    }

    /// `2^s`, the encoding of 1.0.
    pub fn one(&self) -> i128 {
        1i128 << self.scale_bits
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.scale_bits) as f64
    }
}

/// A field element read as a signed fixed-point number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedValue {
    pub value: FieldElement,
    pub params: FixedPointParams,
}

impl QuantizedValue {
    pub fn from_scaled(
        v: i128,
        params: &FixedPointParams,
        modulus: &PrimeModulus,
    ) -> Result<Self, FixedPointError> {
        if v.unsigned_abs() >= 1u128 << (params.bit_width - 1) {
            return Err(FixedPointError::OutOfRange {
                value: v as f64,
                bits: params.bit_width,
            });
        }
        let value = FieldElement::from_i128(v, modulus)
            .map_err(|e| FixedPointError::InvalidParams(e.to_string()))?;
        Ok(QuantizedValue {
            value,
            params: *params,
        })
    }

    pub fn scaled(&self) -> i128 {
        self.value
            .to_signed()
            .expect("range-checked at construction")
    }
}

pub fn quantize(
    x: f64,
    params: &FixedPointParams,
    modulus: &PrimeModulus,
) -> Result<QuantizedValue, FixedPointError> {
    let scaled = (x * params.scale()).round();
    let limit = (1u64 << (params.bit_width - 1)) as f64;
    if !scaled.is_finite() || scaled.abs() >= limit {
        return Err(FixedPointError::OutOfRange {
            value: x,
            bits: params.bit_width,
        });
    }
    QuantizedValue::from_scaled(scaled as i128, params, modulus)
}

pub fn dequantize(q: &QuantizedValue) -> f64 {
    q.scaled() as f64 / q.params.scale()
}

/// Closed-form row counts, as tabulated in the module docs.
pub mod counts {
    use super::FixedPointParams;

    pub fn decompose(bits: u32) -> usize {
        bits as usize + 1
    }

    pub fn geq(bits: u32) -> usize {
        bits as usize + 1
    }

    pub fn max(d: usize, bits: u32) -> usize {
        if d == 1 {
            1
        } else {
            d * (bits as usize + 1) + d - 1
        }
    }

    pub fn rescale(shift: u32, bits: u32) -> usize {
        (shift + bits + 3) as usize
    }

    pub fn exp_neg(p: &FixedPointParams) -> usize {
        let (s, b, n) = (
            p.scale_bits as usize,
            p.bit_width as usize,
            p.exp_iters as usize,
        );
        (b + 1) + 1 + (n + b + 3) + n * (s + b + 4) + 1
    }

    pub fn softmax(d: usize, p: &FixedPointParams) -> usize {
        let (s, b) = (p.scale_bits as usize, p.bit_width as usize);
        max(d, p.bit_width) + d * exp_neg(p) + d * (2 * b + s + 5)
    }

    pub fn gelu(p: &FixedPointParams) -> usize {
        (p.scale_bits + p.bit_width + 7) as usize
    }
}
