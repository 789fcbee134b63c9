//! Two encodings that look tempting but are rejected, kept as executable
//! diagnostics.
//!
//! 1. Unweighted sum: `Σ_ij y_ij = Σ_k (Σ_i x_ik)(Σ_j w_kj)`. Complete, but
//!    any sum-preserving change to `Y` slips through.
//! 2. Odd-power layout: one product of two big polynomials with
//!    `x_ik → Z^{n·b·i + n−1−k}`, `w_kj → Z^{k + n·j}` and
//!    `y_ij → Z^{n(b·i+j) + n−1}`. The product is full of cross terms
//!    `x_ik·w_k'j` (`k ≠ k'`) that belong to no output.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::builder::SynthesisError;
use crate::field::FieldElement;
use crate::matrix::FieldMatrix;

/// `(exponent, (i, k), (k', j))`
pub type CrossTerm = (usize, (usize, usize), (usize, usize));

#[derive(Clone, Debug, PartialEq)]
pub struct UnweightedSumReport {
    /// Whether `Y = X × W` holds for the supplied `Y`.
    pub output_correct: bool,
    /// Whether the sum identity holds for the supplied `Y`.
    pub sums_equal: bool,
    /// `Y` with `+1` on `y_00` and `−1` on the next entry; `None` for 1x1.
    pub counterexample: Option<FieldMatrix>,
    pub counterexample_correct: bool,
    pub counterexample_sums_equal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OddPowerReport {
    pub total_pairs: usize,
    /// `x_ik·w_kj` landing on the exponent of `y_ij`.
    pub matching_pairs: usize,
    /// Cross terms landing on some other output's exponent.
    pub aliased_pairs: usize,
    /// Cross terms landing on no output exponent at all.
    pub superfluous_pairs: usize,
    pub distinct_superfluous_exponents: usize,
    /// First superfluous term as `(exponent, (i, k), (k', j))`.
    pub example: Option<CrossTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NegativeFixtureReport {
    pub unweighted: UnweightedSumReport,
    pub odd_power: OddPowerReport,
}

fn sum_identity(x: &FieldMatrix, w: &FieldMatrix, y: &FieldMatrix) -> bool {
    let m = x.modulus();
    let lhs = y
        .entries()
        .iter()
        .fold(FieldElement::zero(m), |acc, v| acc + v);
    let mut rhs = FieldElement::zero(m);
    for k in 0..x.cols() {
        let col = (0..x.rows()).fold(FieldElement::zero(m), |acc, i| acc + x.get(i, k));
        let row = (0..w.cols()).fold(FieldElement::zero(m), |acc, j| acc + w.get(k, j));
        rhs = rhs + col * row;
    }
    lhs == rhs
}

fn unweighted(
    x: &FieldMatrix,
    w: &FieldMatrix,
    y: &FieldMatrix,
) -> Result<UnweightedSumReport, SynthesisError> {
    let product = x.mul(w)?;
    let m = x.modulus();
    let counterexample = if y.rows() * y.cols() >= 2 {
        let mut c = y.clone();
        let (i1, j1) = if y.cols() >= 2 { (0, 1) } else { (1, 0) };
        c.set(0, 0, c.get(0, 0) + &FieldElement::one(m));
        c.set(i1, j1, c.get(i1, j1) - &FieldElement::one(m));
        Some(c)
    } else {
        None
    };
    let (counterexample_correct, counterexample_sums_equal) = match &counterexample {
        Some(c) => (*c == product, sum_identity(x, w, c)),
        None => (false, false),
    };
    Ok(UnweightedSumReport {
        output_correct: *y == product,
        sums_equal: sum_identity(x, w, y),
        counterexample,
        counterexample_correct,
        counterexample_sums_equal,
    })
}

/// Enumerates every term of the odd-power product for an `a×n` by `n×b`
/// multiplication.
pub fn odd_power_terms(a: usize, n: usize, b: usize) -> OddPowerReport {
    let x_exp = |i: usize, k: usize| n * b * i + (n - 1 - k);
    let w_exp = |k: usize, j: usize| k + n * j;
    let y_exp = |i: usize, j: usize| n * (b * i + j) + n - 1;
    let targets: BTreeSet<usize> = (0..a)
        .flat_map(|i| (0..b).map(move |j| y_exp(i, j)))
        .collect();

    let mut report = OddPowerReport {
        total_pairs: 0,
        matching_pairs: 0,
        aliased_pairs: 0,
        superfluous_pairs: 0,
        distinct_superfluous_exponents: 0,
        example: None,
    };
    let mut stray = BTreeSet::new();
    for i in 0..a {
        for k in 0..n {
            for k2 in 0..n {
                for j in 0..b {
                    report.total_pairs += 1;
                    let e = x_exp(i, k) + w_exp(k2, j);
                    if k == k2 && e == y_exp(i, j) {
                        report.matching_pairs += 1;
                    } else if targets.contains(&e) {
                        report.aliased_pairs += 1;
                    } else {
                        report.superfluous_pairs += 1;
                        stray.insert(e);
                        report.example.get_or_insert((e, (i, k), (k2, j)));
                    }
                }
            }
        }
    }
    report.distinct_superfluous_exponents = stray.len();
    report
}

/// Runs both rejected transformations on concrete matrices.
pub fn negative_fixture_transforms(
    x: &FieldMatrix,
    w: &FieldMatrix,
    y: &FieldMatrix,
) -> Result<NegativeFixtureReport, SynthesisError> {
    if x.cols() != w.rows() || y.rows() != x.rows() || y.cols() != w.cols() {
        return Err(SynthesisError::Shape(format!(
            "X {}x{}, W {}x{}, Y {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(NegativeFixtureReport {
        unweighted: unweighted(x, w, y)?,
        odd_power: odd_power_terms(x.rows(), x.cols(), w.cols()),
    })
}
