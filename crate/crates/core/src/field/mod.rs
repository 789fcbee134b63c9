//! Prime-field arithmetic over a modulus chosen at runtime.
//!
//! Every [`FieldElement`] carries a handle to its [`PrimeModulus`]; values are
//! kept canonical in `[0, p)`. Moduli below 2^64 use native 128-bit products,
//! wider ones go through Montgomery multiplication on four 64-bit limbs.

mod challenge;
mod wide;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

pub use challenge::{commitment_seed, sample_challenge};
use wide::{Montgomery, U256};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("value {value} is out of range for modulus {modulus}")]
    OutOfRange { value: String, modulus: String },
    #[error("operands belong to different moduli ({left} vs {right})")]
    ModulusMismatch { left: String, right: String },
    #[error("zero has no multiplicative inverse")]
    NotInvertible,
    #[error("modulus {0} is not prime")]
    NotPrime(String),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("invalid field element literal {0:?}")]
    InvalidLiteral(String),
    #[error("challenge seed must be nonempty")]
    EmptySeed,
}

/// Miller-Rabin rounds run when a modulus is constructed.
const PRIMALITY_ROUNDS: usize = 40;

struct ModulusInner {
    p: U256,
    bits: u32,
    /// (p - 1) / 2, the largest value read as nonnegative in signed views.
    half: U256,
    decimal: String,
    mont: Option<Montgomery>,
}

/// An odd prime `p` with `2 < p < 2^255`, shared by reference between elements.
#[derive(Clone)]
pub struct PrimeModulus(Arc<ModulusInner>);

impl PrimeModulus {
    /// Validates primality (40 Miller-Rabin rounds with a fixed-seed base
    /// sequence, so construction is deterministic).
    pub fn new(p: &BigUint) -> Result<Self, FieldError> {
        if *p <= BigUint::from(2u8) {
            return Err(FieldError::InvalidModulus(format!("{p} must exceed 2")));
        }
        if p.bits() > 255 {
            return Err(FieldError::InvalidModulus(format!("{p} exceeds 2^255")));
        }
        if !is_probable_prime(p, PRIMALITY_ROUNDS) {
            return Err(FieldError::NotPrime(p.to_string()));
        }
        let wide = U256::from_biguint(p).expect("checked width");
        let half = U256::from_biguint(&((p - 1u8) >> 1u32)).expect("checked width");
        let bits = wide.bits();
        let mont = (bits > 64).then(|| Montgomery::new(wide));
        Ok(PrimeModulus(Arc::new(ModulusInner {
            p: wide,
            bits,
            half,
            decimal: p.to_string(),
            mont,
        })))
    }

    pub fn from_u64(p: u64) -> Result<Self, FieldError> {
        Self::new(&BigUint::from(p))
    }

    /// 2^61 - 1.
    pub fn mersenne61() -> Self {
        Self::from_u64((1u64 << 61) - 1).expect("2^61-1 is prime")
    }

    pub fn bits(&self) -> u32 {
        self.0.bits
    }

    pub fn to_biguint(&self) -> BigUint {
        self.0.p.to_biguint()
    }

    /// The modulus as a `u64`, when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        (self.0.bits <= 64).then_some(self.0.p.0[0])
    }

    pub fn as_decimal(&self) -> &str {
        &self.0.decimal
    }

    fn same(&self, other: &PrimeModulus) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.p == other.0.p
    }

    fn check(&self, other: &PrimeModulus) -> Result<(), FieldError> {
        if self.same(other) {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch {
                left: self.0.decimal.clone(),
                right: other.0.decimal.clone(),
            })
        }
    }

    fn add(&self, a: &U256, b: &U256) -> U256 {
        let (s, carry) = a.overflowing_add(b);
        if carry || s >= self.0.p {
            s.overflowing_sub(&self.0.p).0
        } else {
            s
        }
    }

    fn sub(&self, a: &U256, b: &U256) -> U256 {
        let (d, borrow) = a.overflowing_sub(b);
        if borrow {
            d.overflowing_add(&self.0.p).0
        } else {
            d
        }
    }

    fn mul(&self, a: &U256, b: &U256) -> U256 {
        match &self.0.mont {
            Some(mont) => mont.mul(a, b),
            None => {
                let prod = (a.0[0] as u128) * (b.0[0] as u128);
                U256::from_u64((prod % self.0.p.0[0] as u128) as u64)
            }
        }
    }
}

impl PartialEq for PrimeModulus {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for PrimeModulus {}

impl fmt::Debug for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimeModulus({})", self.0.decimal)
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.decimal)
    }
}

impl FromStr for PrimeModulus {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p = BigUint::from_str(s.trim())
            .map_err(|_| FieldError::InvalidModulus(format!("{s:?} is not a decimal integer")))?;
        PrimeModulus::new(&p)
    }
}

fn is_probable_prime(n: &BigUint, rounds: usize) -> bool {
    const SMALL: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for q in SMALL {
        let q = BigUint::from(q);
        if *n == q {
            return true;
        }
        if (n % &q).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let twos = n_minus_1.trailing_zeros().expect("n > 1");
    let d = &n_minus_1 >> twos;
    let mut rng = ChaCha20Rng::seed_from_u64(0x005e_ed0f_9e1e);
    let span = n - BigUint::from(3u8);
    'witness: for _ in 0..rounds {
        let mut bytes = [0u8; 40];
        rng.fill(&mut bytes[..]);
        let base = BigUint::from_bytes_le(&bytes) % &span + 2u8;
        let mut x = base.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..twos {
            x = x.modpow(&BigUint::from(2u8), n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A canonical residue modulo a [`PrimeModulus`].
#[derive(Clone)]
pub struct FieldElement {
    value: U256,
    modulus: PrimeModulus,
}

impl FieldElement {
    pub fn zero(modulus: &PrimeModulus) -> Self {
        FieldElement {
            value: U256::ZERO,
            modulus: modulus.clone(),
        }
    }

    pub fn one(modulus: &PrimeModulus) -> Self {
        FieldElement {
            value: U256::ONE,
            modulus: modulus.clone(),
        }
    }

    /// Embeds an unsigned value; `v` must be below `p`.
    pub fn from_u64(v: u64, modulus: &PrimeModulus) -> Result<Self, FieldError> {
        Self::from_u256(U256::from_u64(v), modulus)
    }

    /// Signed embedding: negative values map to `p - |v|`. Requires `|v| < p`.
    pub fn from_i128(v: i128, modulus: &PrimeModulus) -> Result<Self, FieldError> {
        let magnitude = Self::from_u256(U256::from_u128(v.unsigned_abs()), modulus)?;
        Ok(if v < 0 { -magnitude } else { magnitude })
    }

    pub fn from_i64(v: i64, modulus: &PrimeModulus) -> Result<Self, FieldError> {
        Self::from_i128(v as i128, modulus)
    }

    pub fn from_biguint(v: &BigUint, modulus: &PrimeModulus) -> Result<Self, FieldError> {
        let wide = U256::from_biguint(v).ok_or_else(|| FieldError::OutOfRange {
            value: v.to_string(),
            modulus: modulus.to_string(),
        })?;
        Self::from_u256(wide, modulus)
    }

    /// Parses a canonical decimal residue.
    pub fn from_decimal(s: &str, modulus: &PrimeModulus) -> Result<Self, FieldError> {
        if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
            return Err(FieldError::InvalidLiteral(s.to_string()));
        }
        let v = BigUint::from_str(s).map_err(|_| FieldError::InvalidLiteral(s.to_string()))?;
        Self::from_biguint(&v, modulus)
    }

    fn from_u256(value: U256, modulus: &PrimeModulus) -> Result<Self, FieldError> {
        if value >= modulus.0.p {
            return Err(FieldError::OutOfRange {
                value: value.to_biguint().to_string(),
                modulus: modulus.to_string(),
            });
        }
        Ok(FieldElement {
            value,
            modulus: modulus.clone(),
        })
    }

    /// Wraps `v mod p` without a range check.
    pub fn reduce_u128(v: u128, modulus: &PrimeModulus) -> Self {
        let wide = U256::from_u128(v);
        let value = if wide < modulus.0.p {
            wide
        } else {
            U256::from_biguint(&(wide.to_biguint() % modulus.to_biguint())).expect("reduced")
        };
        FieldElement {
            value,
            modulus: modulus.clone(),
        }
    }

    /// Two to the power `k`, reduced.
    pub fn pow2(k: u32, modulus: &PrimeModulus) -> Self {
        FieldElement::reduce_u128(2, modulus).pow(k as u64)
    }

    /// Uniform sample from `[0, p)` by rejection.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, modulus: &PrimeModulus) -> Self {
        loop {
            let mut bytes = [0u8; 32];
            rng.fill(&mut bytes[..]);
            let v = U256::from_le_bytes(&bytes).mask_bits(modulus.bits());
            if v < modulus.0.p {
                return FieldElement {
                    value: v,
                    modulus: modulus.clone(),
                };
            }
        }
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value == U256::ONE
    }

    pub fn to_biguint(&self) -> BigUint {
        self.value.to_biguint()
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.value.to_u128().and_then(|v| u64::try_from(v).ok())
    }

    pub fn to_decimal(&self) -> String {
        match self.value.to_u128() {
            Some(v) => v.to_string(),
            None => self.value.to_biguint().to_string(),
        }
    }

    /// Centered view: residues above `(p-1)/2` read as `value - p`.
    /// `None` when the centered value does not fit in an `i128`.
    pub fn to_signed(&self) -> Option<i128> {
        if self.value <= self.modulus.0.half {
            self.value.to_u128().and_then(|v| i128::try_from(v).ok())
        } else {
            let neg = self.modulus.0.p.overflowing_sub(&self.value).0;
            neg.to_u128()
                .and_then(|v| i128::try_from(v).ok())
                .map(|v| -v)
        }
    }

    /// Binary digit `i` of the canonical residue.
    pub fn bit(&self, i: u32) -> bool {
        i < 256 && self.value.bit(i)
    }

    /// Number of significant bits of the canonical residue.
    pub fn num_bits(&self) -> u32 {
        self.value.bits()
    }

    pub fn try_add(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.modulus.check(&rhs.modulus)?;
        Ok(self.with(self.modulus.add(&self.value, &rhs.value)))
    }

    pub fn try_sub(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.modulus.check(&rhs.modulus)?;
        Ok(self.with(self.modulus.sub(&self.value, &rhs.value)))
    }

    pub fn try_mul(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.modulus.check(&rhs.modulus)?;
        Ok(self.with(self.modulus.mul(&self.value, &rhs.value)))
    }

    pub fn neg(&self) -> FieldElement {
        self.with(self.modulus.sub(&U256::ZERO, &self.value))
    }

    pub fn square(&self) -> FieldElement {
        self.with(self.modulus.mul(&self.value, &self.value))
    }

    /// Square-and-multiply; `0^0 = 1`.
    pub fn pow(&self, e: u64) -> FieldElement {
        self.pow_wide(&U256::from_u64(e))
    }

    pub fn pow_biguint(&self, e: &BigUint) -> FieldElement {
        match U256::from_biguint(e) {
            Some(wide) => self.pow_wide(&wide),
            None => {
                // reduce the exponent by the group order
                let order = self.modulus.to_biguint() - 1u8;
                let reduced = e % &order;
                let base = self.pow_wide(&U256::from_biguint(&reduced).expect("reduced"));
                if self.is_zero() {
                    self.with(U256::ZERO)
                } else {
                    base
                }
            }
        }
    }

    fn pow_wide(&self, e: &U256) -> FieldElement {
        let mut acc = U256::ONE;
        for i in (0..e.bits()).rev() {
            acc = self.modulus.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.modulus.mul(&acc, &self.value);
            }
        }
        self.with(acc)
    }

    /// Fermat inversion `a^{p-2}`.
    pub fn inverse(&self) -> Result<FieldElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::NotInvertible);
        }
        let e = self.modulus.0.p.overflowing_sub(&U256::from_u64(2)).0;
        Ok(self.pow_wide(&e))
    }

    fn with(&self, value: U256) -> FieldElement {
        FieldElement {
            value,
            modulus: self.modulus.clone(),
        }
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.modulus == other.modulus
    }
}

impl Eq for FieldElement {}

impl std::hash::Hash for FieldElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.value.hash(state);
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

// Operator forms panic on a modulus mismatch; use the `try_*` methods where
// operands may come from different fields.
macro_rules! impl_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $trait<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
    };
}

impl_binop!(Add, add, try_add);
impl_binop!(Sub, sub, try_sub);
impl_binop!(Mul, mul, try_mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(&self)
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(self)
    }
}
