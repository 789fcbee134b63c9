//! Bit decomposition and the comparison, max and rescale gadgets built on it.

use crate::builder::{CircuitBuilder, LinearCombination, SynthesisError, Variable};
use crate::field::FieldElement;

use super::MAX_BIT_WIDTH;

pub(super) fn konst(builder: &CircuitBuilder, v: i128) -> FieldElement {
    FieldElement::from_i128(v, builder.modulus()).expect("constant below the modulus")
}

/// Witness value of `lc` read as a signed integer; `None` without a witness.
pub(super) fn signed_value(
    builder: &CircuitBuilder,
    lc: &LinearCombination,
) -> Result<Option<i128>, SynthesisError> {
    match builder.eval(lc) {
        None => Ok(None),
        Some(v) => v
            .to_signed()
            .map(Some)
            .ok_or_else(|| SynthesisError::Witness("value does not fit in 128 signed bits".into())),
    }
}

pub(super) fn field_value(
    builder: &CircuitBuilder,
    v: Option<i128>,
) -> Result<Option<FieldElement>, SynthesisError> {
    v.map(|v| FieldElement::from_i128(v, builder.modulus()))
        .transpose()
        .map_err(Into::into)
}

pub(super) fn check_width(builder: &CircuitBuilder, bits: u32) -> Result<(), SynthesisError> {
    if bits == 0 || bits > MAX_BIT_WIDTH {
        return Err(SynthesisError::Spec(format!(
            "bit width must be in [1, {MAX_BIT_WIDTH}], got {bits}"
        )));
    }
    if builder.modulus().bits() <= bits {
        return Err(SynthesisError::Spec(format!(
            "2^{bits} is not below the modulus"
        )));
    }
    Ok(())
}

fn decompose(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    bits: u32,
    top_must_be_one: bool,
) -> Result<Vec<Variable>, SynthesisError> {
    check_width(builder, bits)?;
    let value = signed_value(builder, x)?;
    if let Some(v) = value {
        if v < 0 || v >= 1i128 << bits {
            return Err(SynthesisError::Witness(format!(
                "{v} is outside [0, 2^{bits})"
            )));
        }
    }
    let one = builder.one();
    let mut recomposed = builder.lc_zero();
    let mut out = Vec::with_capacity(bits as usize);
    for i in 0..bits {
        let bit = value.map(|v| {
            FieldElement::from_u64(((v >> i) & 1) as u64, builder.modulus()).expect("bit")
        });
        let b = builder.alloc_private(format!("bit[{i}]"), bit)?;
        let b_lc = builder.lc(b);
        if top_must_be_one && i + 1 == bits {
            builder.enforce(
                b_lc,
                builder.lc_const(one.clone()),
                builder.lc_const(one.clone()),
            )?;
        } else {
            let mut minus_one = b_lc.clone();
            minus_one.add_constant(&one.neg());
            builder.enforce(b_lc, minus_one, builder.lc_zero())?;
        }
        recomposed.add_term(b, konst(builder, 1i128 << i));
        out.push(b);
    }
    builder.enforce(recomposed, builder.lc_const(one), x.clone())?;
    Ok(out)
}

/// Splits `x` into `bits` boolean variables, least significant first.
/// The witness must lie in `[0, 2^bits)`.
pub fn synth_bit_decompose(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    bits: u32,
) -> Result<Vec<Variable>, SynthesisError> {
    decompose(builder, x, bits, false)
}

fn offset_difference(
    builder: &CircuitBuilder,
    x: &LinearCombination,
    y: &LinearCombination,
    bits: u32,
) -> LinearCombination {
    let mut d = x.clone() - y.clone();
    d.add_constant(&konst(builder, 1i128 << (bits - 1)));
    d
}

/// Boolean `x ≥ y` for signed operands of at most `bits − 1` bits: the top
/// bit of `x − y + 2^{bits−1}`.
pub fn synth_geq(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    y: &LinearCombination,
    bits: u32,
) -> Result<Variable, SynthesisError> {
    if bits < 2 {
        return Err(SynthesisError::Spec(
            "comparison needs at least 2 bits".into(),
        ));
    }
    let d = offset_difference(builder, x, y, bits);
    Ok(*decompose(builder, &d, bits, false)?
        .last()
        .expect("bits >= 2"))
}

/// Same decomposition as [`synth_geq`] with the top bit pinned to 1.
fn assert_geq(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    y: &LinearCombination,
    bits: u32,
) -> Result<(), SynthesisError> {
    let d = offset_difference(builder, x, y, bits);
    decompose(builder, &d, bits, true).map(|_| ())
}

/// `x_max` with `x_max ≥ x_j` for all `j` and `∏ (x_max − x_j) = 0`.
/// Ties resolve to the first maximal index.
pub fn synth_max(
    builder: &mut CircuitBuilder,
    xs: &[LinearCombination],
    bits: u32,
) -> Result<Variable, SynthesisError> {
    synth_max_with_claim(builder, xs, bits, None)
}

/// [`synth_max`] with the witness for `x_max` overridden by `claim`, for
/// modelling a dishonest prover.
pub fn synth_max_with_claim(
    builder: &mut CircuitBuilder,
    xs: &[LinearCombination],
    bits: u32,
    claim: Option<i128>,
) -> Result<Variable, SynthesisError> {
    if xs.is_empty() {
        return Err(SynthesisError::Spec("max of an empty sequence".into()));
    }
    if bits < 2 {
        return Err(SynthesisError::Spec(
            "comparison needs at least 2 bits".into(),
        ));
    }
    let values = xs
        .iter()
        .map(|x| signed_value(builder, x))
        .collect::<Result<Vec<_>, _>>()?;
    let honest = values
        .iter()
        .copied()
        .collect::<Option<Vec<i128>>>()
        .map(|vs| {
            // first maximal index
            vs.iter()
                .copied()
                .fold(vs[0], |m, v| if v > m { v } else { m })
        });
    let max_value = claim.or(honest);
    let xm = builder.alloc_private("max", field_value(builder, max_value)?)?;
    let xm_lc = builder.lc(xm);
    if xs.len() == 1 {
        builder.enforce(xm_lc, builder.lc_const(builder.one()), xs[0].clone())?;
        return Ok(xm);
    }
    for x in xs {
        assert_geq(builder, &xm_lc, x, bits)?;
    }
    let mut acc = xm_lc.clone() - xs[0].clone();
    for (j, x) in xs.iter().enumerate().skip(1) {
        let factor = xm_lc.clone() - x.clone();
        if j + 1 == xs.len() {
            builder.enforce(acc, factor, builder.lc_zero())?;
            break;
        }
        let product = match (builder.eval(&acc), builder.eval(&factor)) {
            (Some(a), Some(f)) => Some(a * f),
            _ => None,
        };
        let t = builder.alloc_private(format!("max_prod[{j}]"), product)?;
        builder.enforce(acc, factor, builder.lc(t))?;
        acc = builder.lc(t);
    }
    Ok(xm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rescaled {
    pub quotient: Variable,
    pub remainder: Variable,
}

/// `x = q·2^shift + r` with `r ∈ [0, 2^shift)` and `q` signed, range-checked
/// in `bits` bits; `q = ⌊x / 2^shift⌋`.
pub fn synth_rescale(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    shift: u32,
    bits: u32,
) -> Result<Rescaled, SynthesisError> {
    if shift == 0 || shift >= bits {
        return Err(SynthesisError::Spec(format!(
            "shift must be in [1, {bits}), got {shift}"
        )));
    }
    check_width(builder, bits)?;
    let value = signed_value(builder, x)?;
    let q_val = value.map(|v| v.div_euclid(1i128 << shift));
    let r_val = value.map(|v| v.rem_euclid(1i128 << shift));
    let r = builder.alloc_private("rem", field_value(builder, r_val)?)?;
    let r_lc = builder.lc(r);
    decompose(builder, &r_lc, shift, false)?;
    let q = builder.alloc_private("quot", field_value(builder, q_val)?)?;
    let mut q_off = builder.lc(q);
    q_off.add_constant(&konst(builder, 1i128 << (bits - 1)));
    decompose(builder, &q_off, bits, false)?;
    let recomposed = builder.lc(q).scale(&konst(builder, 1i128 << shift)) + builder.lc(r);
    builder.enforce(recomposed, builder.lc_const(builder.one()), x.clone())?;
    Ok(Rescaled {
        quotient: q,
        remainder: r,
    })
}

/// Rounding variant: `⌊(x + 2^{shift−1}) / 2^shift⌋`, halves rounded up.
pub fn synth_rescale_round(
    builder: &mut CircuitBuilder,
    x: &LinearCombination,
    shift: u32,
    bits: u32,
) -> Result<Rescaled, SynthesisError> {
    if shift == 0 {
        return Err(SynthesisError::Spec("shift must be positive".into()));
    }
    let mut shifted = x.clone();
    shifted.add_constant(&konst(builder, 1i128 << (shift - 1)));
    synth_rescale(builder, &shifted, shift, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeModulus;
    use crate::nonlinear::counts;

    fn input(builder: &mut CircuitBuilder, v: i128) -> LinearCombination {
        let fe = FieldElement::from_i128(v, builder.modulus()).unwrap();
        let var = builder.alloc_public("in", Some(fe)).unwrap();
        builder.lc(var)
    }

    fn satisfied(mut builder: CircuitBuilder) -> bool {
        let out = builder.finalize().unwrap();
        out.instance
            .is_satisfied(out.assignment.as_ref().unwrap())
            .unwrap()
            .satisfied
    }

    fn bits_of(builder: &CircuitBuilder, vars: &[Variable]) -> Vec<u64> {
        vars.iter()
            .map(|v| builder.value(*v).unwrap().to_u64().unwrap())
            .collect()
    }

    #[test]
    fn decomposition() {
        let m = PrimeModulus::mersenne61();
        let mut b = CircuitBuilder::new(&m);
        let x = input(&mut b, 5);
        let bits = synth_bit_decompose(&mut b, &x, 4).unwrap();
        assert_eq!(bits_of(&b, &bits), vec![1, 0, 1, 0]);
        assert_eq!(b.num_constraints(), counts::decompose(4));
        let z = input(&mut b, 0);
        let zb = synth_bit_decompose(&mut b, &z, 4).unwrap();
        assert_eq!(bits_of(&b, &zb), vec![0; 4]);
        assert!(satisfied(b));

        let mut b = CircuitBuilder::new(&m);
        let x = input(&mut b, 16);
        assert!(matches!(
            synth_bit_decompose(&mut b, &x, 4),
            Err(SynthesisError::Witness(_))
        ));
        let neg = input(&mut b, -1);
        assert!(matches!(
            synth_bit_decompose(&mut b, &neg, 4),
            Err(SynthesisError::Witness(_))
        ));
        assert!(matches!(
            synth_bit_decompose(&mut b, &neg, 61),
            Err(SynthesisError::Spec(_))
        ));
    }

    #[test]
    fn comparison() {
        let m = PrimeModulus::mersenne61();
        for (x, y, bits, expect) in [
            (7, 3, 8, 1),
            (3, 7, 8, 0),
            (4, 4, 8, 1),
            (-5, -2, 8, 0),
            (-2, -5, 8, 1),
        ] {
            let mut b = CircuitBuilder::new(&m);
            let (xl, yl) = (input(&mut b, x), input(&mut b, y));
            let g = synth_geq(&mut b, &xl, &yl, bits).unwrap();
            assert_eq!(b.value(g).unwrap().to_u64(), Some(expect), "{x} >= {y}");
            assert_eq!(b.num_constraints(), counts::geq(bits));
            assert!(satisfied(b));
        }
    }

    #[test]
    fn max_examples() {
        let m = PrimeModulus::mersenne61();
        for (xs, expect) in [
            (vec![3, 7, 2], 7),
            (vec![5, 5], 5),
            (vec![-4], -4),
            (vec![-3, -9, -3, -1], -1),
        ] {
            let mut b = CircuitBuilder::new(&m);
            let lcs: Vec<_> = xs.iter().map(|v| input(&mut b, *v)).collect();
            let before = b.num_constraints();
            let mx = synth_max(&mut b, &lcs, 16).unwrap();
            assert_eq!(b.value(mx).unwrap().to_signed(), Some(expect));
            assert_eq!(b.num_constraints() - before, counts::max(xs.len(), 16));
            assert!(satisfied(b));
        }
        let mut b = CircuitBuilder::new(&m);
        assert!(matches!(
            synth_max(&mut b, &[], 16),
            Err(SynthesisError::Spec(_))
        ));
    }

    #[test]
    fn max_rejects_false_claims() {
        let m = PrimeModulus::mersenne61();
        // 8 passes every comparison, but (8−3)(8−7)(8−2) = 30 ≠ 0
        for claim in [8, 2, 3] {
            let mut b = CircuitBuilder::new(&m);
            let lcs: Vec<_> = [3, 7, 2].iter().map(|v| input(&mut b, *v)).collect();
            synth_max_with_claim(&mut b, &lcs, 16, Some(claim)).unwrap();
            assert!(!satisfied(b), "claim {claim}");
        }
    }

    #[test]
    fn rescale_examples() {
        let m = PrimeModulus::mersenne61();
        for (x, q, r) in [
            (256, 1, 0),
            (0, 0, 0),
            (300, 1, 44),
            (-300, -2, 212),
            (-256, -1, 0),
        ] {
            let mut b = CircuitBuilder::new(&m);
            let xl = input(&mut b, x);
            let out = synth_rescale(&mut b, &xl, 8, 24).unwrap();
            assert_eq!(b.value(out.quotient).unwrap().to_signed(), Some(q));
            assert_eq!(b.value(out.remainder).unwrap().to_signed(), Some(r));
            assert_eq!(b.num_constraints(), counts::rescale(8, 24));
            assert!(satisfied(b));
        }
        for (x, q) in [
            (127, 0),
            (128, 1),
            (-128, 0),
            (-129, -1),
            (383, 1),
            (384, 2),
        ] {
            let mut b = CircuitBuilder::new(&m);
            let xl = input(&mut b, x);
            let out = synth_rescale_round(&mut b, &xl, 8, 24).unwrap();
            assert_eq!(
                b.value(out.quotient).unwrap().to_signed(),
                Some(q),
                "round({x}/256)"
            );
        }
    }
}
