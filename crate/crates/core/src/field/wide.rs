//! Fixed-width 256-bit unsigned integers and Montgomery multiplication.
//!
//! Limbs are little-endian. Only what the prime field needs is implemented.

use std::cmp::Ordering;

use num_bigint::BigUint;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Debug)]
pub(crate) struct U256(pub(crate) [u64; 4]);

#[inline(always)]
fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + b as u128 + carry as u128;
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub(b as u128 + borrow as u128);
    (t as u64, ((t >> 64) as u64) & 1)
}

/// a + b * c + carry
#[inline(always)]
fn mac(a: u64, b: u64, c: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + (b as u128) * (c as u128) + carry as u128;
    (t as u64, (t >> 64) as u64)
}

impl U256 {
    pub(crate) const ZERO: U256 = U256([0; 4]);
    pub(crate) const ONE: U256 = U256([1, 0, 0, 0]);

    pub(crate) fn from_u64(v: u64) -> Self {
        U256([v, 0, 0, 0])
    }

    pub(crate) fn from_u128(v: u128) -> Self {
        U256([v as u64, (v >> 64) as u64, 0, 0])
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    /// Returns the value if it fits in a `u128`.
    pub(crate) fn to_u128(self) -> Option<u128> {
        if self.0[2] == 0 && self.0[3] == 0 {
            Some(self.0[0] as u128 | ((self.0[1] as u128) << 64))
        } else {
            None
        }
    }

    pub(crate) fn bits(&self) -> u32 {
        for i in (0..4).rev() {
            if self.0[i] != 0 {
                return 64 * i as u32 + (64 - self.0[i].leading_zeros());
            }
        }
        0
    }

    pub(crate) fn bit(&self, i: u32) -> bool {
        (self.0[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    pub(crate) fn overflowing_add(&self, rhs: &U256) -> (U256, bool) {
        let mut out = [0u64; 4];
        let mut carry = 0;
        for i in 0..4 {
            let (v, c) = adc(self.0[i], rhs.0[i], carry);
            out[i] = v;
            carry = c;
        }
        (U256(out), carry != 0)
    }

    pub(crate) fn overflowing_sub(&self, rhs: &U256) -> (U256, bool) {
        let mut out = [0u64; 4];
        let mut borrow = 0;
        for i in 0..4 {
            let (v, b) = sbb(self.0[i], rhs.0[i], borrow);
            out[i] = v;
            borrow = b;
        }
        (U256(out), borrow != 0)
    }

    /// Keeps the lowest `bits` bits.
    pub(crate) fn mask_bits(mut self, bits: u32) -> Self {
        for i in 0..4u32 {
            let lo = i * 64;
            if bits <= lo {
                self.0[i as usize] = 0;
            } else if bits < lo + 64 {
                self.0[i as usize] &= (1u64 << (bits - lo)) - 1;
            }
        }
        self
    }

    pub(crate) fn from_le_bytes(bytes: &[u8; 32]) -> Self {
        let mut limbs = [0u64; 4];
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            limbs[i] = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        U256(limbs)
    }

    pub(crate) fn to_biguint(self) -> BigUint {
        let mut bytes = Vec::with_capacity(32);
        for limb in self.0 {
            bytes.extend_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    /// Returns `None` when the value needs more than 256 bits.
    pub(crate) fn from_biguint(v: &BigUint) -> Option<Self> {
        if v.bits() > 256 {
            return None;
        }
        let mut limbs = [0u64; 4];
        for (i, d) in v.iter_u64_digits().enumerate() {
            limbs[i] = d;
        }
        Some(U256(limbs))
    }
}

impl Ord for U256 {
    fn cmp(&self, other: &Self) -> Ordering {
        for i in (0..4).rev() {
            match self.0[i].cmp(&other.0[i]) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for U256 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Montgomery context for an odd modulus `p < 2^256` with `R = 2^256`.
#[derive(Clone, Debug)]
pub(crate) struct Montgomery {
    p: U256,
    /// -p^{-1} mod 2^64
    inv: u64,
    /// R^2 mod p
    r2: U256,
}

impl Montgomery {
    pub(crate) fn new(p: U256) -> Self {
        assert!(p.0[0] & 1 == 1, "Montgomery modulus must be odd");
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.0[0].wrapping_mul(inv)));
        }
        let inv = inv.wrapping_neg();
        let r2 = (BigUint::from(1u8) << 512u32) % p.to_biguint();
        let r2 = U256::from_biguint(&r2).expect("reduced value fits");
        Montgomery { p, inv, r2 }
    }

    /// Returns a·b·R^{-1} mod p for a, b < p.
    pub(crate) fn mont_mul(&self, a: &U256, b: &U256) -> U256 {
        let p = &self.p.0;
        let mut t = [0u64; 6];
        for i in 0..4 {
            let mut carry = 0;
            for j in 0..4 {
                let (v, c) = mac(t[j], a.0[j], b.0[i], carry);
                t[j] = v;
                carry = c;
            }
            let (v, c) = adc(t[4], carry, 0);
            t[4] = v;
            t[5] = c;

            let m = t[0].wrapping_mul(self.inv);
            let (_, mut carry) = mac(t[0], m, p[0], 0);
            for j in 1..4 {
                let (v, c) = mac(t[j], m, p[j], carry);
                t[j - 1] = v;
                carry = c;
            }
            let (v, c) = adc(t[4], carry, 0);
            t[3] = v;
            t[4] = t[5] + c;
        }
        let r = U256([t[0], t[1], t[2], t[3]]);
        if t[4] != 0 || r >= self.p {
            r.overflowing_sub(&self.p).0
        } else {
            r
        }
    }

    /// Plain modular product of canonical residues.
    pub(crate) fn mul(&self, a: &U256, b: &U256) -> U256 {
        let ab = self.mont_mul(a, b);
        self.mont_mul(&ab, &self.r2)
    }
}
