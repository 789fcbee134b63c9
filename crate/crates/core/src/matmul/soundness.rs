//! Empirical soundness of the polynomial encodings.
//!
//! A cheating prover publishes `Y' ≠ X × W`. For a challenge encoding, the
//! difference `Y'(Z) − Y(Z)` is a nonzero polynomial of degree below `a·b`,
//! so at most `a·b − 1` nonzero challenges let the forged output through.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{synthesize_matmul_with_witness, Encoding, MatMulSpec, MatrixWitness};
use crate::builder::SynthesisError;
use crate::field::{commitment_seed, sample_challenge, FieldElement, PrimeModulus};
use crate::matrix::FieldMatrix;

/// Largest modulus for which every nonzero challenge is tried.
pub const EXHAUSTIVE_MAX_MODULUS: u64 = 1 << 16;

/// Additive perturbation of `Y`: entry `(i, j)` becomes `y_ij + delta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tamper {
    entries: Vec<((usize, usize), FieldElement)>,
}

impl Tamper {
    /// No perturbation at all; an honest prover.
    pub fn none() -> Self {
        Tamper {
            entries: Vec::new(),
        }
    }

    pub fn new(entries: Vec<((usize, usize), FieldElement)>) -> Result<Self, SynthesisError> {
        if entries.iter().any(|(_, d)| d.is_zero()) {
            return Err(SynthesisError::Spec("tamper deltas must be nonzero".into()));
        }
        Ok(Tamper { entries })
    }

    pub fn single(i: usize, j: usize, delta: FieldElement) -> Result<Self, SynthesisError> {
        Self::new(vec![((i, j), delta)])
    }

    pub fn entries(&self) -> &[((usize, usize), FieldElement)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn apply(&self, y: &FieldMatrix) -> Result<FieldMatrix, SynthesisError> {
        let mut out = y.clone();
        for ((i, j), d) in &self.entries {
            if *i >= y.rows() || *j >= y.cols() {
                return Err(SynthesisError::Index(format!(
                    "tamper at ({i}, {j}) outside a {}x{} output",
                    y.rows(),
                    y.cols()
                )));
            }
            let v = out.get(*i, *j).try_add(d)?;
            out.set(*i, *j, v);
        }
        Ok(out)
    }
}

/// `(a·b − 1)/(p − 1)`: the chance a uniformly drawn nonzero challenge is a
/// root of the difference polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessBound {
    pub numerator: u64,
    pub denominator: String,
    pub symbolic: String,
    pub value: f64,
}

pub fn theoretical_bound(modulus: &PrimeModulus, a: usize, b: usize) -> SoundnessBound {
    let numerator = (a * b).saturating_sub(1) as u64;
    let denom = modulus.to_biguint() - BigUint::from(1u8);
    let value = numerator as f64 / denom.to_f64().unwrap_or(f64::INFINITY);
    SoundnessBound {
        numerator,
        denominator: denom.to_string(),
        symbolic: format!("{numerator}/(p-1)"),
        value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub encoding: String,
    pub a: usize,
    pub n: usize,
    pub b: usize,
    pub modulus: String,
    pub trials: u64,
    pub detections: u64,
    pub bound: SoundnessBound,
}

impl SoundnessReport {
    pub fn undetected(&self) -> u64 {
        self.trials - self.detections
    }

    pub fn empirical_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.undetected() as f64 / self.trials as f64
        }
    }
}

/// Outcome of running one forged output against every nonzero challenge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChallengeScan {
    pub modulus: u64,
    pub challenges: u64,
    /// Challenges under which the forged assignment satisfies the instance.
    pub passing: Vec<u64>,
    pub bound: SoundnessBound,
}

/// Repeated commit-then-challenge games. Each trial draws `X` and `W` from a
/// stream keyed by `(seed, trial)`, forges `Y` with `tamper`, derives `Z` by
/// hashing the committed matrices, and records a detection when the
/// resulting assignment fails the instance.
pub fn soundness_trial(
    modulus: &PrimeModulus,
    (a, n, b): (usize, usize, usize),
    encoding: Encoding,
    tamper: &Tamper,
    trials: u64,
    seed: u64,
) -> Result<SoundnessReport, SynthesisError> {
    if a == 0 || n == 0 || b == 0 {
        return Err(SynthesisError::Spec("dimensions must be positive".into()));
    }
    let outcomes: Vec<Result<bool, SynthesisError>> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(modulus, (a, n, b), encoding, tamper, seed, t))
        .collect();
    let mut detections = 0;
    for o in outcomes {
        if o? {
            detections += 1;
        }
    }
    Ok(SoundnessReport {
        encoding: encoding.name().into(),
        a,
        n,
        b,
        modulus: modulus.to_string(),
        trials,
        detections,
        bound: theoretical_bound(modulus, a, b),
    })
}

fn run_trial(
    modulus: &PrimeModulus,
    (a, n, b): (usize, usize, usize),
    encoding: Encoding,
    tamper: &Tamper,
    seed: u64,
    trial: u64,
) -> Result<bool, SynthesisError> {
    let trial_seed = commitment_seed(&[b"trial", &seed.to_le_bytes(), &trial.to_le_bytes()]);
    let mut rng = ChaCha20Rng::from_seed(trial_seed);
    let x = FieldMatrix::random(&mut rng, a, n, modulus);
    let w = FieldMatrix::random(&mut rng, n, b, modulus);
    let y = tamper.apply(&x.mul(&w)?)?;

    let mut spec = MatMulSpec::new(modulus, a, n, b, encoding);
    if encoding.uses_challenge() {
        let commit = commitment_seed(&[
            &trial_seed,
            x.to_json().as_bytes(),
            w.to_json().as_bytes(),
            y.to_json().as_bytes(),
        ]);
        spec = spec.with_challenge(sample_challenge(&commit, modulus)?);
    }
    let circuit = synthesize_matmul_with_witness(&spec, &MatrixWitness { x, w, y: Some(y) })?;
    let assignment = circuit.assignment.as_ref().expect("witness given");
    Ok(!circuit.instance.is_satisfied(assignment)?.satisfied)
}

/// Tries the forged `y_wrong` under every challenge in `[1, p)`.
pub fn exhaustive_challenge_scan(
    modulus: &PrimeModulus,
    encoding: Encoding,
    x: &FieldMatrix,
    w: &FieldMatrix,
    y_wrong: &FieldMatrix,
) -> Result<ChallengeScan, SynthesisError> {
    let p = match modulus.to_u64() {
        Some(p) if p <= EXHAUSTIVE_MAX_MODULUS => p,
        _ => {
            return Err(SynthesisError::Spec(format!(
                "exhaustive scan needs p <= {EXHAUSTIVE_MAX_MODULUS}, got {modulus}"
            )))
        }
    };
    if !encoding.uses_challenge() {
        return Err(SynthesisError::Spec(format!(
            "encoding {encoding} has no challenge"
        )));
    }
    if x.mul(w)? == *y_wrong {
        return Err(SynthesisError::Spec("claimed output equals X × W".into()));
    }
    let (a, n, b) = (x.rows(), x.cols(), w.cols());
    let witness = MatrixWitness {
        x: x.clone(),
        w: w.clone(),
        y: Some(y_wrong.clone()),
    };
    let results: Vec<Result<Option<u64>, SynthesisError>> = (1..p)
        .into_par_iter()
        .map(|z| {
            let spec = MatMulSpec::new(modulus, a, n, b, encoding)
                .with_challenge(FieldElement::from_u64(z, modulus)?);
            let circuit = synthesize_matmul_with_witness(&spec, &witness)?;
            let ok = circuit
                .instance
                .is_satisfied(circuit.assignment.as_ref().expect("witness given"))?;
            Ok(ok.satisfied.then_some(z))
        })
        .collect();
    let mut passing = Vec::new();
    for r in results {
        if let Some(z) = r? {
            passing.push(z);
        }
    }
    Ok(ChallengeScan {
        modulus: p,
        challenges: p - 1,
        passing,
        bound: theoretical_bound(modulus, a, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(v: i64, m: &PrimeModulus) -> FieldElement {
        FieldElement::from_i64(v, m).unwrap()
    }

    #[test]
    fn bound_values() {
        let m = PrimeModulus::from_u64(251).unwrap();
        let bd = theoretical_bound(&m, 2, 2);
        assert_eq!(
            (bd.numerator, bd.denominator.as_str(), bd.symbolic.as_str()),
            (3, "250", "3/(p-1)")
        );
        assert!((bd.value - 0.012).abs() < 1e-12);
    }

    #[test]
    fn zero_delta_rejected() {
        let m = PrimeModulus::from_u64(251).unwrap();
        assert!(matches!(
            Tamper::single(0, 0, fe(0, &m)),
            Err(SynthesisError::Spec(_))
        ));
        let y = FieldMatrix::zeros(2, 2, &m);
        assert!(matches!(
            Tamper::single(2, 0, fe(1, &m)).unwrap().apply(&y),
            Err(SynthesisError::Index(_))
        ));
    }

    #[test]
    fn chosen_root_passes() {
        // Y' − Y = −5 + Z has its only root at Z = 5
        let m = PrimeModulus::from_u64(251).unwrap();
        let x = FieldMatrix::from_i64_rows(&[&[1, 2], &[3, 4]], &m).unwrap();
        let w = FieldMatrix::from_i64_rows(&[&[5, 6], &[7, 8]], &m).unwrap();
        let t = Tamper::new(vec![((0, 0), fe(-5, &m)), ((0, 1), fe(1, &m))]).unwrap();
        let y_wrong = t.apply(&x.mul(&w).unwrap()).unwrap();
        for e in [Encoding::Crpc, Encoding::CrpcPsq] {
            let scan = exhaustive_challenge_scan(&m, e, &x, &w, &y_wrong).unwrap();
            assert_eq!(scan.passing, vec![5]);
            assert_eq!(scan.challenges, 250);
        }
        let honest = x.mul(&w).unwrap();
        assert!(matches!(
            exhaustive_challenge_scan(&m, Encoding::CrpcPsq, &x, &w, &honest),
            Err(SynthesisError::Spec(_))
        ));
        assert!(exhaustive_challenge_scan(
            &PrimeModulus::mersenne61(),
            Encoding::CrpcPsq,
            &x,
            &w,
            &y_wrong
        )
        .is_err());
    }

    #[test]
    fn trials_detect_and_control_passes() {
        let m = PrimeModulus::mersenne61();
        let t = Tamper::single(1, 1, fe(1, &m)).unwrap();
        for e in Encoding::ALL {
            let r = soundness_trial(&m, (2, 3, 2), e, &t, 50, 9).unwrap();
            assert_eq!(r.detections, 50, "{e}");
            let control = soundness_trial(&m, (2, 3, 2), e, &Tamper::none(), 20, 9).unwrap();
            assert_eq!(control.detections, 0, "{e}");
        }
        let again = soundness_trial(&m, (2, 3, 2), Encoding::CrpcPsq, &t, 50, 9).unwrap();
        assert_eq!(
            again,
            soundness_trial(&m, (2, 3, 2), Encoding::CrpcPsq, &t, 50, 9).unwrap()
        );
    }
}
