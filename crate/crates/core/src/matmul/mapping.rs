//! Placement of matrix entries into polynomial coefficients.
//!
//! Column `k` of `X` lands on exponents `i·b`, row `k` of `W` on exponents
//! `j`, and `Y[i, j]` on exponent `i·b + j`. Every product `x_ik·w_kj` then
//! lands exactly on the exponent of `y_ij`, and no two `(i, j)` pairs collide.

use std::collections::BTreeMap;

use crate::builder::SynthesisError;
use crate::field::{FieldElement, PrimeModulus};
use crate::matrix::FieldMatrix;

/// Sparse univariate polynomial; absent exponents are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappedPolynomial {
    modulus: PrimeModulus,
    coeffs: BTreeMap<usize, FieldElement>,
}

impl MappedPolynomial {
    pub fn zero(modulus: &PrimeModulus) -> Self {
        MappedPolynomial {
            modulus: modulus.clone(),
            coeffs: BTreeMap::new(),
        }
    }

    /// Zero coefficients are dropped.
    pub fn from_coefficients(
        modulus: &PrimeModulus,
        coeffs: impl IntoIterator<Item = (usize, FieldElement)>,
    ) -> Self {
        let mut p = Self::zero(modulus);
        for (e, c) in coeffs {
            p.add_at(e, c);
        }
        p
    }

    fn set(&mut self, exponent: usize, value: FieldElement) {
        self.coeffs.insert(exponent, value);
    }

    fn add_at(&mut self, exponent: usize, value: FieldElement) {
        let merged = match self.coeffs.remove(&exponent) {
            Some(c) => c + value,
            None => value,
        };
        if !merged.is_zero() {
            self.coeffs.insert(exponent, merged);
        }
    }

    pub fn coefficient(&self, exponent: usize) -> FieldElement {
        self.coeffs
            .get(&exponent)
            .cloned()
            .unwrap_or_else(|| FieldElement::zero(&self.modulus))
    }

    /// Stored `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn coefficients(&self) -> impl Iterator<Item = (usize, &FieldElement)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn exponents(&self) -> Vec<usize> {
        self.coeffs.keys().copied().collect()
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .rev()
            .find(|(_, c)| !c.is_zero())
            .map(|(e, _)| *e)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(FieldElement::is_zero)
    }

    pub fn add(&self, other: &MappedPolynomial) -> MappedPolynomial {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.add_at(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &MappedPolynomial) -> MappedPolynomial {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.add_at(*e, c.neg());
        }
        out
    }

    /// Schoolbook product.
    pub fn mul(&self, other: &MappedPolynomial) -> MappedPolynomial {
        let mut out = Self::zero(&self.modulus);
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                out.add_at(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

fn index_error(what: &str, k: usize, bound: usize) -> SynthesisError {
    SynthesisError::Index(format!("{what} {k} out of range (< {bound})"))
}

/// `x̂_k[i·b] = X[i, k]`.
pub fn map_x_column(
    x: &FieldMatrix,
    k: usize,
    b: usize,
) -> Result<MappedPolynomial, SynthesisError> {
    if k >= x.cols() {
        return Err(index_error("column", k, x.cols()));
    }
    let mut p = MappedPolynomial::zero(x.modulus());
    for i in 0..x.rows() {
        p.set(i * b, x.get(i, k).clone());
    }
    Ok(p)
}

/// `ŵ_k[j] = W[k, j]`.
pub fn map_w_row(w: &FieldMatrix, k: usize) -> Result<MappedPolynomial, SynthesisError> {
    if k >= w.rows() {
        return Err(index_error("row", k, w.rows()));
    }
    let mut p = MappedPolynomial::zero(w.modulus());
    for j in 0..w.cols() {
        p.set(j, w.get(k, j).clone());
    }
    Ok(p)
}

/// `ŷ[i·b + j] = Y[i, j]`, dense over `[0, a·b)`.
pub fn map_y(y: &FieldMatrix) -> MappedPolynomial {
    let b = y.cols();
    let mut p = MappedPolynomial::zero(y.modulus());
    for i in 0..y.rows() {
        for j in 0..b {
            p.set(i * b + j, y.get(i, j).clone());
        }
    }
    p
}

/// `Σ coeff·Z^exponent`, by Horner over the stored exponents.
pub fn eval_mapped(poly: &MappedPolynomial, z: &FieldElement) -> FieldElement {
    let mut acc = FieldElement::zero(z.modulus());
    let mut prev_exp: Option<usize> = None;
    for (e, c) in poly.coeffs.iter().rev() {
        if let Some(pe) = prev_exp {
            acc = acc * z.pow((pe - e) as u64);
        }
        acc = acc + c;
        prev_exp = Some(*e);
    }
    if let Some(lowest) = prev_exp {
        acc = acc * z.pow(lowest as u64);
    }
    acc
}

/// Evaluates both sides of the polynomial identity at `z`:
/// `ŷ(z) = Σ_k x̂_k(z)·ŵ_k(z)`.
pub fn check_polynomial_identity(
    x: &FieldMatrix,
    w: &FieldMatrix,
    y: &FieldMatrix,
    z: &FieldElement,
) -> Result<bool, SynthesisError> {
    let (a, n, b) = (x.rows(), x.cols(), w.cols());
    if w.rows() != n || y.rows() != a || y.cols() != b {
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
    let lhs = eval_mapped(&map_y(y), z);
    let mut rhs = FieldElement::zero(z.modulus());
    for k in 0..n {
        rhs = rhs + eval_mapped(&map_x_column(x, k, b)?, z) * eval_mapped(&map_w_row(w, k)?, z);
    }
    Ok(lhs == rhs)
}
