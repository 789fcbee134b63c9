//! Rank-1 constraint systems: sparse `A`, `B`, `C` over `F_p`, assignments
//! `z = (1, x, w)`, satisfiability and statistics, plus the JSON file formats.
//!
//! Column 0 of every instance is the constant 1; columns `1..=n_public` hold
//! the public inputs and the remaining columns the private witness.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeModulus};

#[derive(Debug, Error)]
pub enum R1csError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed assignment: {0}")]
    MalformedAssignment(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Coordinate-list matrix with entries sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, FieldElement)>,
}

impl SparseMatrix {
    /// Sorts the entries; rejects out-of-range indices, duplicate coordinates
    /// and zero coefficients.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        mut entries: Vec<(usize, usize, FieldElement)>,
    ) -> Result<Self, R1csError> {
        entries.sort_by_key(|e| (e.0, e.1));
        for (idx, (r, c, v)) in entries.iter().enumerate() {
            if *r >= n_rows || *c >= n_cols {
                return Err(R1csError::Validation(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if v.is_zero() {
                return Err(R1csError::Validation(format!(
                    "explicit zero at ({r}, {c})"
                )));
            }
            if idx > 0 && entries[idx - 1].0 == *r && entries[idx - 1].1 == *c {
                return Err(R1csError::Validation(format!(
                    "duplicate entry at ({r}, {c})"
                )));
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[(usize, usize, FieldElement)] {
        &self.entries
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.len()
    }

    /// `M · z`.
    pub fn mul_vec(&self, z: &[FieldElement]) -> Vec<FieldElement> {
        let modulus = z[0].modulus();
        let mut out = vec![FieldElement::zero(modulus); self.n_rows];
        for (r, c, v) in &self.entries {
            out[*r] = &out[*r] + &(v * &z[*c]);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct R1csInstance {
    modulus: PrimeModulus,
    a: SparseMatrix,
    b: SparseMatrix,
    c: SparseMatrix,
    n_public: usize,
    metadata: BTreeMap<String, String>,
}

impl R1csInstance {
    pub fn new(
        modulus: PrimeModulus,
        a: SparseMatrix,
        b: SparseMatrix,
        c: SparseMatrix,
        n_public: usize,
    ) -> Result<Self, R1csError> {
        let (n, m) = (a.n_rows, a.n_cols);
        for (name, mat) in [("B", &b), ("C", &c)] {
            if mat.n_rows != n || mat.n_cols != m {
                return Err(R1csError::Shape(format!(
                    "{name} is {}x{}, A is {n}x{m}",
                    mat.n_rows, mat.n_cols
                )));
            }
        }
        if m <= n_public {
            return Err(R1csError::Validation(format!(
                "n_variables ({m}) must exceed n_public ({n_public})"
            )));
        }
        for mat in [&a, &b, &c] {
            for (_, _, v) in &mat.entries {
                if *v.modulus() != modulus {
                    return Err(FieldError::ModulusMismatch {
                        left: modulus.to_string(),
                        right: v.modulus().to_string(),
                    }
                    .into());
                }
            }
        }
        Ok(R1csInstance {
            modulus,
            a,
            b,
            c,
            n_public,
            metadata: BTreeMap::new(),
        })
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn c(&self) -> &SparseMatrix {
        &self.c
    }

    pub fn n_constraints(&self) -> usize {
        self.a.n_rows
    }

    pub fn n_variables(&self) -> usize {
        self.a.n_cols
    }

    pub fn n_public(&self) -> usize {
        self.n_public
    }

    /// Free-form key/value annotations carried through serialization.
    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    /// Checks `(A·z) ∘ (B·z) = C·z` row by row. The reported row is the
    /// smallest violated index.
    pub fn is_satisfied(&self, assignment: &Assignment) -> Result<SatisfactionReport, R1csError> {
        let z = assignment.values();
        if z.len() != self.n_variables() {
            return Err(R1csError::Shape(format!(
                "assignment has {} entries, instance has {} variables",
                z.len(),
                self.n_variables()
            )));
        }
        if *assignment.modulus() != self.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus.to_string(),
                right: assignment.modulus().to_string(),
            }
            .into());
        }
        if !z[0].is_one() {
            return Err(R1csError::MalformedAssignment("z[0] must be 1".into()));
        }
        let az = self.a.mul_vec(z);
        let bz = self.b.mul_vec(z);
        let cz = self.c.mul_vec(z);
        let first_failing_row = (0..self.n_constraints()).find(|&i| &az[i] * &bz[i] != cz[i]);
        Ok(SatisfactionReport {
            satisfied: first_failing_row.is_none(),
            first_failing_row,
        })
    }

    pub fn stats(&self) -> InstanceStats {
        let left_wires: BTreeSet<usize> = self
            .a
            .entries
            .iter()
            .map(|e| e.1)
            .filter(|&c| c != 0)
            .collect();
        let rows_with_var = |m: &SparseMatrix| {
            let mut rows = vec![false; self.n_constraints()];
            for (r, c, _) in &m.entries {
                if *c != 0 {
                    rows[*r] = true;
                }
            }
            rows
        };
        let a_rows = rows_with_var(&self.a);
        let b_rows = rows_with_var(&self.b);
        InstanceStats {
            n_constraints: self.n_constraints(),
            n_variables: self.n_variables(),
            n_public: self.n_public,
            a_nonzeros: self.a.nonzeros(),
            b_nonzeros: self.b.nonzeros(),
            c_nonzeros: self.c.nonzeros(),
            left_wire_count: left_wires.len(),
            product_rows: a_rows
                .iter()
                .zip(&b_rows)
                .filter(|(x, y)| **x && **y)
                .count(),
        }
    }

    pub fn to_json(&self) -> String {
        let encode = |m: &SparseMatrix| {
            m.entries
                .iter()
                .map(|(r, c, v)| (*r, *c, v.to_decimal()))
                .collect::<Vec<_>>()
        };
        let doc = InstanceDoc {
            modulus: self.modulus.to_string(),
            n_constraints: self.n_constraints(),
            n_variables: self.n_variables(),
            n_public: self.n_public,
            a: encode(&self.a),
            b: encode(&self.b),
            c: encode(&self.c),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string(&doc).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, R1csError> {
        let doc: InstanceDoc = serde_json::from_slice(bytes).map_err(parse_error)?;
        let modulus: PrimeModulus = doc
            .modulus
            .parse()
            .map_err(|e: FieldError| R1csError::Validation(e.to_string()))?;
        let decode = |name: &str, raw: Vec<(usize, usize, String)>| {
            let entries = raw
                .into_iter()
                .map(|(r, c, v)| {
                    FieldElement::from_decimal(&v, &modulus)
                        .map(|v| (r, c, v))
                        .map_err(|e| R1csError::Validation(format!("{name}[{r},{c}]: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            SparseMatrix::new(doc.n_constraints, doc.n_variables, entries)
                .map_err(|e| R1csError::Validation(format!("matrix {name}: {e}")))
        };
        let a = decode("A", doc.a)?;
        let b = decode("B", doc.b)?;
        let c = decode("C", doc.c)?;
        let inst = R1csInstance::new(modulus.clone(), a, b, c, doc.n_public)
            .map_err(|e| R1csError::Validation(e.to_string()))?;
        Ok(inst.with_metadata(doc.metadata))
    }
}

fn parse_error(e: serde_json::Error) -> R1csError {
    R1csError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    modulus: String,
    n_constraints: usize,
    n_variables: usize,
    n_public: usize,
    a: Vec<(usize, usize, String)>,
    b: Vec<(usize, usize, String)>,
    c: Vec<(usize, usize, String)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SatisfactionReport {
    pub satisfied: bool,
    pub first_failing_row: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceStats {
    pub n_constraints: usize,
    pub n_variables: usize,
    pub n_public: usize,
    pub a_nonzeros: usize,
    pub b_nonzeros: usize,
    pub c_nonzeros: usize,
    /// Distinct non-constant columns with a nonzero `A` coefficient.
    pub left_wire_count: usize,
    /// Rows where both `A` and `B` reference a non-constant column.
    pub product_rows: usize,
}

/// A full variable vector `z = (1, x, w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    modulus: PrimeModulus,
    z: Vec<FieldElement>,
}

impl Assignment {
    pub fn new(modulus: PrimeModulus, z: Vec<FieldElement>) -> Result<Self, R1csError> {
        match z.first() {
            Some(one) if one.is_one() => {}
            _ => return Err(R1csError::MalformedAssignment("z must start with 1".into())),
        }
        if let Some(bad) = z.iter().find(|v| *v.modulus() != modulus) {
            return Err(FieldError::ModulusMismatch {
                left: modulus.to_string(),
                right: bad.modulus().to_string(),
            }
            .into());
        }
        Ok(Assignment { modulus, z })
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Replaces entry `index` (never the leading constant).
    pub fn set(&mut self, index: usize, value: FieldElement) -> Result<(), R1csError> {
        if index == 0 || index >= self.z.len() {
            return Err(R1csError::Shape(format!("cannot overwrite entry {index}")));
        }
        if *value.modulus() != self.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus.to_string(),
                right: value.modulus().to_string(),
            }
            .into());
        }
        self.z[index] = value;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = AssignmentDoc {
            modulus: self.modulus.to_string(),
            z: self.z.iter().map(FieldElement::to_decimal).collect(),
        };
        let mut s = serde_json::to_string(&doc).expect("assignment serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, R1csError> {
        let doc: AssignmentDoc = serde_json::from_slice(bytes).map_err(parse_error)?;
        let modulus: PrimeModulus = doc
            .modulus
            .parse()
            .map_err(|e: FieldError| R1csError::Validation(e.to_string()))?;
        let z = doc
            .z
            .iter()
            .enumerate()
            .map(|(i, v)| {
                FieldElement::from_decimal(v, &modulus)
                    .map_err(|e| R1csError::Validation(format!("z[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Assignment::new(modulus, z).map_err(|e| R1csError::Validation(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentDoc {
    modulus: String,
    z: Vec<String>,
}
