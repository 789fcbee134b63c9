//! Dense matrices of field elements and their JSON file format.
//!
//! `{"rows": 2, "cols": 2, "data": [["1","2"],["3","4"]]}`, row-major, entries
//! as canonical decimal residues. The modulus is supplied by the caller.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeModulus};

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("malformed matrix document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid matrix: {0}")]
    Validation(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    modulus: PrimeModulus,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<Vec<String>>,
}

impl FieldMatrix {
    pub fn new(
        modulus: &PrimeModulus,
        rows: usize,
        cols: usize,
        data: Vec<FieldElement>,
    ) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| v.modulus() != modulus) {
            return Err(FieldError::ModulusMismatch {
                left: modulus.to_string(),
                right: bad.modulus().to_string(),
            }
            .into());
        }
        Ok(FieldMatrix {
            modulus: modulus.clone(),
            rows,
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, modulus: &PrimeModulus) -> Self {
        FieldMatrix {
            modulus: modulus.clone(),
            rows,
            cols,
            data: vec![FieldElement::zero(modulus); rows * cols],
        }
    }

    pub fn identity(size: usize, modulus: &PrimeModulus) -> Self {
        let mut m = Self::zeros(size, size, modulus);
        for i in 0..size {
            m.set(i, i, FieldElement::one(modulus));
        }
        m
    }

    /// Builds a matrix from small signed integers (tests, fixtures).
    pub fn from_i64_rows(rows: &[&[i64]], modulus: &PrimeModulus) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(MatrixError::Shape("ragged rows".into()));
            }
            for &v in *row {
                data.push(FieldElement::from_i64(v, modulus)?);
            }
        }
        Self::new(modulus, rows.len(), cols, data)
    }

    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        rows: usize,
        cols: usize,
        modulus: &PrimeModulus,
    ) -> Self {
        let data = (0..rows * cols)
            .map(|_| FieldElement::random(rng, modulus))
            .collect();
        FieldMatrix {
            modulus: modulus.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.data
    }

    /// Schoolbook product.
    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        if self.modulus != rhs.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus.to_string(),
                right: rhs.modulus.to_string(),
            }
            .into());
        }
        let modulus = &self.modulus;
        let mut out = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = FieldElement::zero(modulus);
                for k in 0..self.cols {
                    acc = acc + self.get(i, k).try_mul(rhs.get(k, j))?;
                }
                out.push(acc);
            }
        }
        Ok(FieldMatrix {
            modulus: modulus.clone(),
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = MatrixDoc {
            rows: self.rows,
            cols: self.cols,
            data: (0..self.rows)
                .map(|i| {
                    (0..self.cols)
                        .map(|j| self.get(i, j).to_decimal())
                        .collect()
                })
                .collect(),
        };
        let mut s = serde_json::to_string(&doc).expect("matrix serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8], modulus: &PrimeModulus) -> Result<Self, MatrixError> {
        let doc: MatrixDoc = serde_json::from_slice(bytes).map_err(|e| MatrixError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if doc.data.len() != doc.rows {
            return Err(MatrixError::Validation(format!(
                "declared {} rows, found {}",
                doc.rows,
                doc.data.len()
            )));
        }
        let mut data = Vec::with_capacity(doc.rows * doc.cols);
        for (i, row) in doc.data.iter().enumerate() {
            if row.len() != doc.cols {
                return Err(MatrixError::Validation(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    doc.cols
                )));
            }
            for v in row {
                data.push(FieldElement::from_decimal(v, modulus)?);
            }
        }
        Self::new(modulus, doc.rows, doc.cols, data)
    }
}

impl std::fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<&[FieldElement]> = self.data.chunks(self.cols.max(1)).collect();
        f.debug_struct("FieldMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &rows)
            .finish()
    }
}
