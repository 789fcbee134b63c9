//! Exponential, SoftMax and GELU on fixed-point operands.

use crate::builder::{CircuitBuilder, LinearCombination, SynthesisError, Variable};
use crate::field::FieldElement;

use super::gadgets::{
    field_value, konst, signed_value, synth_bit_decompose, synth_geq, synth_max,
    synth_rescale_round,
};
use super::FixedPointParams;

fn validate(builder: &CircuitBuilder, params: &FixedPointParams) -> Result<(), SynthesisError> {
    params
        .validate(builder.modulus())
        .map_err(|e| SynthesisError::Spec(e.to_string()))
}

fn alloc_product(
    builder: &mut CircuitBuilder,
    label: &str,
    a: &LinearCombination,
    b: &LinearCombination,
) -> Result<Variable, SynthesisError> {
    let v = match (builder.eval(a), builder.eval(b)) {
        (Some(x), Some(y)) => Some(x * y),
        _ => None,
    };
    let out = builder.alloc_private(label, v)?;
    builder.enforce(a.clone(), b.clone(), builder.lc(out))?;
    Ok(out)
}

/// `e^x` for scaled `x ≤ 0`: `(1 + x/2^{n_e})^{2^{n_e}}` on `[T, 0]`, zero
/// below `T`.
///
/// The selector `c = [x ≥ T]` clamps the input to `x_c = c·(x − T) + T`, the
/// base `2^s + round(x_c / 2^{n_e})` is squared `n_e` times with a rounding
/// rescale after each square, and the result is multiplied by `c`.
pub fn synth_exp_neg(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    params: &FixedPointParams,
) -> Result<Variable, SynthesisError> {
    validate(builder, params)?;
    let (s, bits) = (params.scale_bits, params.bit_width);
    let value = signed_value(builder, x)?;
    if let Some(v) = value {
        if v > 0 {
            return Err(SynthesisError::Witness(format!(
                "exponential input {v} is positive"
            )));
        }
    }
    let t = konst(builder, params.threshold as i128);
    let c = synth_geq(builder, x, &builder.lc_const(t.clone()), bits)?;
    let c_lc = builder.lc(c);

    let selected = match (value, builder.value(c)) {
        (Some(v), Some(cv)) => Some(if cv.is_one() {
            v
        } else {
            params.threshold as i128
        }),
        _ => None,
    };
    let xc = builder.alloc_private("exp_clamped", field_value(builder, selected)?)?;
    let mut x_minus_t = x.clone();
    x_minus_t.add_constant(&t.neg());
    let mut xc_minus_t = builder.lc(xc);
    xc_minus_t.add_constant(&t.neg());
    builder.enforce(c_lc.clone(), x_minus_t, xc_minus_t)?;

    let xc_lc = builder.lc(xc);
    let step = synth_rescale_round(builder, &xc_lc, params.exp_iters, bits)?;
    let mut v = builder.lc(step.quotient);
    v.add_constant(&konst(builder, params.one()));
    for i in 0..params.exp_iters {
        let sq = alloc_product(builder, &format!("exp_sq[{i}]"), &v, &v)?;
        let sq_lc = builder.lc(sq);
        let q = synth_rescale_round(builder, &sq_lc, s, bits)?.quotient;
        v = builder.lc(q);
    }
    alloc_product(builder, "exp", &c_lc, &v)
}

/// Fixed-point SoftMax of `xs`, shifted by their max.
///
/// Each output satisfies `out_i·den + rem_i = e_i·2^s` with
/// `0 ≤ rem_i < den` and `out_i ∈ [0, 2^{s+1})`, i.e.
/// `out_i = ⌊e_i·2^s / den⌋` where `den = Σ e_j`.
pub fn synth_softmax(
    builder: &mut CircuitBuilder,
    xs: &[LinearCombination],
    params: &FixedPointParams,
) -> Result<Vec<Variable>, SynthesisError> {
    validate(builder, params)?;
    if xs.is_empty() {
        return Err(SynthesisError::Spec("softmax of an empty sequence".into()));
    }
    let (s, bits) = (params.scale_bits, params.bit_width);
    // out·den + rem must not wrap: out < 2^{s+1}, den and rem < 2^B
    if builder.modulus().bits() <= bits + s + 2 {
        return Err(SynthesisError::Spec(format!(
            "softmax needs 2^{} below the modulus",
            bits + s + 2
        )));
    }
    if (xs.len() as u128) << s >= 1u128 << bits {
        return Err(SynthesisError::Spec(format!(
            "{} inputs overflow the {bits}-bit denominator range",
            xs.len()
        )));
    }

    let xm = synth_max(builder, xs, bits)?;
    let mut exps = Vec::with_capacity(xs.len());
    for x in xs {
        let shifted = x.clone() - builder.lc(xm);
        let e = synth_exp_neg(builder, &shifted, params)?;
        exps.push(builder.lc(e));
    }
    let den = exps
        .iter()
        .cloned()
        .fold(builder.lc_zero(), |acc, e| acc + e);
    let den_value = signed_value(builder, &den)?;
    if den_value == Some(0) {
        return Err(SynthesisError::Witness(
            "softmax denominator is zero".into(),
        ));
    }
    let scale = konst(builder, params.one());
    let mut outs = Vec::with_capacity(xs.len());
    for (i, e) in exps.iter().enumerate() {
        let num = e.scale(&scale);
        let (q, r) = match (signed_value(builder, &num)?, den_value) {
            (Some(n), Some(d)) => (Some(n.div_euclid(d)), Some(n.rem_euclid(d))),
            _ => (None, None),
        };
        let out = builder.alloc_private(format!("softmax[{i}]"), field_value(builder, q)?)?;
        let rem = builder.alloc_private(format!("softmax_rem[{i}]"), field_value(builder, r)?)?;
        builder.enforce(builder.lc(out), den.clone(), num - builder.lc(rem))?;
        let rem_lc = builder.lc(rem);
        synth_bit_decompose(builder, &rem_lc, bits)?;
        let mut slack = den.clone() - rem_lc;
        slack.add_constant(&builder.one().neg());
        synth_bit_decompose(builder, &slack, bits)?;
        let out_lc = builder.lc(out);
        synth_bit_decompose(builder, &out_lc, s + 1)?;
        outs.push(out);
    }
    Ok(outs)
}

/// `x²/8 + x/4 + 1/2` in fixed point:
/// `round((x² + 2^{s+1}·x) / 2^{s+3}) + 2^{s−1}` for scaled `x`.
pub fn synth_gelu(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    params: &FixedPointParams,
) -> Result<Variable, SynthesisError> {
    validate(builder, params)?;
    let (s, bits) = (params.scale_bits, params.bit_width);
    if let Some(v) = signed_value(builder, x)? {
        let square = v.checked_mul(v).filter(|sq| {
            FieldElement::from_i128(*sq, builder.modulus())
                .ok()
                .and_then(|f| f.to_signed())
                == Some(*sq)
        });
        if v.unsigned_abs() >= 1u128 << (bits - 1) || square.is_none() {
            return Err(SynthesisError::Witness(format!("GELU input {v} overflows")));
        }
    }
    let sq = alloc_product(builder, "gelu_sq", x, x)?;
    // adding 2^{s−1}·2^{s+3} before the shift folds the constant 1/2 in
    let mut pre = builder.lc(sq) + x.scale(&konst(builder, 1i128 << (s + 1)));
    pre.add_constant(&konst(builder, 1i128 << (2 * s + 2)));
    synth_rescale_round(builder, &pre, s + 3, bits)
        .map(|r| r.quotient)
        .map_err(|e| match e {
            SynthesisError::Witness(m) => {
                SynthesisError::Witness(format!("GELU output overflows: {m}"))
            }
            other => other,
        })
}
