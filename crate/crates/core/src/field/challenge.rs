//! Deterministic challenge derivation.
//!
//! The challenge is SHA-256 in counter mode keyed by the seed, truncated to the
//! bit length of `p` and rejection-sampled into `[1, p)`.

use sha2::{Digest, Sha256};

use super::wide::U256;
use super::{FieldElement, FieldError, PrimeModulus};

const CHALLENGE_DOMAIN: &[u8] = b"matcircuit/challenge/v1";
const COMMIT_DOMAIN: &[u8] = b"matcircuit/commit/v1";

/// Maps a seed to a nonzero field element. Same seed, same output.
pub fn sample_challenge(seed: &[u8], modulus: &PrimeModulus) -> Result<FieldElement, FieldError> {
    if seed.is_empty() {
        return Err(FieldError::EmptySeed);
    }
    let bits = modulus.bits();
    for counter in 0u64.. {
        let mut hasher = Sha256::new();
        hasher.update(CHALLENGE_DOMAIN);
        hasher.update((seed.len() as u64).to_le_bytes());
        hasher.update(seed);
        hasher.update(counter.to_le_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let candidate = U256::from_le_bytes(&digest).mask_bits(bits);
        if !candidate.is_zero() && candidate < modulus.0.p {
            return Ok(FieldElement {
                value: candidate,
                modulus: modulus.clone(),
            });
        }
    }
    unreachable!("counter space exhausted")
}

/// Binds a challenge seed to already-fixed public data: the digest of the
/// length-prefixed parts. Draw the challenge only after every part is final.
pub fn commitment_seed(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(COMMIT_DOMAIN);
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.finalize().into()
}
