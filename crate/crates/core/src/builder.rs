//! Incremental constraint synthesis.
//!
//! A [`CircuitBuilder`] allocates variables, records rank-1 constraints over
//! [`LinearCombination`]s, and optionally carries witness values alongside
//! each allocation so one synthesis pass yields both the instance and a
//! satisfying assignment. Public variables are placed before private ones at
//! [`CircuitBuilder::finalize`] regardless of allocation order.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeModulus};
use crate::matrix::MatrixError;
use crate::r1cs::{Assignment, R1csError, R1csInstance, SparseMatrix};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("builder state: {0}")]
    State(String),
    #[error("variable {0:?} does not belong to this builder")]
    UnknownVariable(Variable),
    #[error("invalid parameters: {0}")]
    Spec(String),
    #[error("witness error: {0}")]
    Witness(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    R1cs(#[from] R1csError),
}

impl From<MatrixError> for SynthesisError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Shape(s) => SynthesisError::Shape(s),
            MatrixError::Field(f) => SynthesisError::Field(f),
            other => SynthesisError::Spec(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Visibility {
    Public,
    Private,
}

/// Handle to an allocated variable. Only meaningful for the builder that
/// produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    builder: u64,
    index: usize,
    visibility: Visibility,
}

impl Variable {
    /// Allocation order within its builder.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn visibility(&self) -> Visibility {
        self.visibility
    }
}

/// `constant + Σ coeff·var`, with no zero coefficients stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCombination {
    constant: FieldElement,
    terms: BTreeMap<Variable, FieldElement>,
}

impl LinearCombination {
    pub fn zero(modulus: &PrimeModulus) -> Self {
        LinearCombination {
            constant: FieldElement::zero(modulus),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(value: FieldElement) -> Self {
        LinearCombination {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_variable(var: Variable, modulus: &PrimeModulus) -> Self {
        Self::zero(modulus).with_term(var, FieldElement::one(modulus))
    }

    pub fn with_term(mut self, var: Variable, coeff: FieldElement) -> Self {
        self.add_term(var, coeff);
        self
    }

    pub fn add_term(&mut self, var: Variable, coeff: FieldElement) {
        let merged = match self.terms.remove(&var) {
            Some(existing) => existing + coeff,
            None => coeff,
        };
        if !merged.is_zero() {
            self.terms.insert(var, merged);
        }
    }

    pub fn add_constant(&mut self, value: &FieldElement) {
        self.constant = &self.constant + value;
    }

    pub fn scale(&self, factor: &FieldElement) -> Self {
        if factor.is_zero() {
            return Self::zero(factor.modulus());
        }
        LinearCombination {
            constant: &self.constant * factor,
            terms: self.terms.iter().map(|(v, c)| (*v, c * factor)).collect(),
        }
    }

    pub fn constant_term(&self) -> &FieldElement {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Variable, &FieldElement)> {
        self.terms.iter()
    }

    pub fn modulus(&self) -> &PrimeModulus {
        self.constant.modulus()
    }

    /// Evaluates against the full assignment using `layout` for columns.
    pub fn eval(
        &self,
        assignment: &Assignment,
        layout: &Layout,
    ) -> Result<FieldElement, SynthesisError> {
        let z = assignment.values();
        let mut acc = self.constant.clone();
        for (var, coeff) in &self.terms {
            let col = layout.column(*var)?;
            let value = z
                .get(col)
                .ok_or_else(|| SynthesisError::Shape(format!("assignment has no column {col}")))?;
            acc = acc + coeff.try_mul(value)?;
        }
        Ok(acc)
    }
}

impl Add for LinearCombination {
    type Output = LinearCombination;
    fn add(mut self, rhs: LinearCombination) -> LinearCombination {
        self.add_constant(&rhs.constant);
        for (v, c) in rhs.terms {
            self.add_term(v, c);
        }
        self
    }
}

impl Sub for LinearCombination {
    type Output = LinearCombination;
    fn sub(mut self, rhs: LinearCombination) -> LinearCombination {
        self.add_constant(&rhs.constant.neg());
        for (v, c) in rhs.terms {
            self.add_term(v, c.neg());
        }
        self
    }
}

/// Free-function form of [`LinearCombination::eval`].
pub fn lc_eval(
    lc: &LinearCombination,
    assignment: &Assignment,
    layout: &Layout,
) -> Result<FieldElement, SynthesisError> {
    lc.eval(assignment, layout)
}

/// Maps each variable of a finalized builder to its column in `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    builder: u64,
    columns: Vec<usize>,
}

impl Layout {
    pub fn column(&self, var: Variable) -> Result<usize, SynthesisError> {
        if var.builder != self.builder {
            return Err(SynthesisError::UnknownVariable(var));
        }
        self.columns
            .get(var.index)
            .copied()
            .ok_or(SynthesisError::UnknownVariable(var))
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

struct VarInfo {
    visibility: Visibility,
    label: String,
    value: Option<FieldElement>,
}

/// Output of [`CircuitBuilder::finalize`].
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub instance: R1csInstance,
    pub layout: Layout,
    /// Present only when every variable carried a value.
    pub assignment: Option<Assignment>,
}

static NEXT_BUILDER_ID: AtomicU64 = AtomicU64::new(1);

pub struct CircuitBuilder {
    id: u64,
    modulus: PrimeModulus,
    vars: Vec<VarInfo>,
    constraints: Vec<[LinearCombination; 3]>,
    finalized: bool,
}

impl CircuitBuilder {
    pub fn new(modulus: &PrimeModulus) -> Self {
        CircuitBuilder {
            id: NEXT_BUILDER_ID.fetch_add(1, Ordering::Relaxed),
            modulus: modulus.clone(),
            vars: Vec::new(),
            constraints: Vec::new(),
            finalized: false,
        }
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_variables(&self) -> usize {
        self.vars.len()
    }

    pub fn alloc(
        &mut self,
        visibility: Visibility,
        label: impl Into<String>,
        value: Option<FieldElement>,
    ) -> Result<Variable, SynthesisError> {
        if self.finalized {
            return Err(SynthesisError::State("allocation after finalize".into()));
        }
        if let Some(v) = &value {
            if *v.modulus() != self.modulus {
                return Err(FieldError::ModulusMismatch {
                    left: self.modulus.to_string(),
                    right: v.modulus().to_string(),
                }
                .into());
            }
        }
        let var = Variable {
            builder: self.id,
            index: self.vars.len(),
            visibility,
        };
        self.vars.push(VarInfo {
            visibility,
            label: label.into(),
            value,
        });
        Ok(var)
    }

    pub fn alloc_public(
        &mut self,
        label: impl Into<String>,
        value: Option<FieldElement>,
    ) -> Result<Variable, SynthesisError> {
        self.alloc(Visibility::Public, label, value)
    }

    pub fn alloc_private(
        &mut self,
        label: impl Into<String>,
        value: Option<FieldElement>,
    ) -> Result<Variable, SynthesisError> {
        self.alloc(Visibility::Private, label, value)
    }

    fn check_var(&self, var: &Variable) -> Result<(), SynthesisError> {
        if var.builder != self.id || var.index >= self.vars.len() {
            Err(SynthesisError::UnknownVariable(*var))
        } else {
            Ok(())
        }
    }

    /// Appends the row `a · b = c`.
    pub fn enforce(
        &mut self,
        a: LinearCombination,
        b: LinearCombination,
        c: LinearCombination,
    ) -> Result<(), SynthesisError> {
        if self.finalized {
            return Err(SynthesisError::State("enforce after finalize".into()));
        }
        for lc in [&a, &b, &c] {
            if *lc.modulus() != self.modulus {
                return Err(FieldError::ModulusMismatch {
                    left: self.modulus.to_string(),
                    right: lc.modulus().to_string(),
                }
                .into());
            }
            for (var, _) in lc.terms() {
                self.check_var(var)?;
            }
        }
        self.constraints.push([a, b, c]);
        Ok(())
    }

    /// Witness value of `var`, if one was supplied.
    pub fn value(&self, var: Variable) -> Option<FieldElement> {
        self.check_var(&var).ok()?;
        self.vars[var.index].value.clone()
    }

    /// Evaluates `lc` from recorded witness values.
    pub fn eval(&self, lc: &LinearCombination) -> Option<FieldElement> {
        let mut acc = lc.constant.clone();
        for (var, coeff) in lc.terms() {
            acc = acc + coeff * &self.value(*var)?;
        }
        Some(acc)
    }

    pub fn label(&self, var: Variable) -> Option<&str> {
        self.check_var(&var).ok()?;
        Some(&self.vars[var.index].label)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::one(&self.modulus)
    }

    pub fn lc(&self, var: Variable) -> LinearCombination {
        LinearCombination::from_variable(var, &self.modulus)
    }

    pub fn lc_const(&self, value: FieldElement) -> LinearCombination {
        LinearCombination::constant(value)
    }

    pub fn lc_zero(&self) -> LinearCombination {
        LinearCombination::zero(&self.modulus)
    }

    /// Lays out columns as (constant, publics, privates), each in allocation
    /// order, and emits the instance. Callable once.
    pub fn finalize(&mut self) -> Result<Synthesized, SynthesisError> {
        if self.finalized {
            return Err(SynthesisError::State("finalize called twice".into()));
        }
        self.finalized = true;

        let n_public = self
            .vars
            .iter()
            .filter(|v| v.visibility == Visibility::Public)
            .count();
        let mut columns = vec![0; self.vars.len()];
        let (mut next_pub, mut next_priv) = (1, 1 + n_public);
        for (i, info) in self.vars.iter().enumerate() {
            let slot = match info.visibility {
                Visibility::Public => &mut next_pub,
                Visibility::Private => &mut next_priv,
            };
            columns[i] = *slot;
            *slot += 1;
        }
        let n_vars = self.vars.len() + 1;
        let n_rows = self.constraints.len();

        let mut mats: [Vec<(usize, usize, FieldElement)>; 3] = Default::default();
        for (row, lcs) in self.constraints.iter().enumerate() {
            for (mat, lc) in mats.iter_mut().zip(lcs) {
                if !lc.constant.is_zero() {
                    mat.push((row, 0, lc.constant.clone()));
                }
                for (var, coeff) in &lc.terms {
                    mat.push((row, columns[var.index], coeff.clone()));
                }
            }
        }
        let [a, b, c] = mats;
        let instance = R1csInstance::new(
            self.modulus.clone(),
            SparseMatrix::new(n_rows, n_vars, a)?,
            SparseMatrix::new(n_rows, n_vars, b)?,
            SparseMatrix::new(n_rows, n_vars, c)?,
            n_public,
        )?;

        let assignment = if self.vars.iter().all(|v| v.value.is_some()) {
            let mut z = vec![FieldElement::one(&self.modulus); n_vars];
            for (i, info) in self.vars.iter().enumerate() {
                z[columns[i]] = info.value.clone().expect("checked");
            }
            Some(Assignment::new(self.modulus.clone(), z)?)
        } else {
            None
        };

        Ok(Synthesized {
            instance,
            layout: Layout {
                builder: self.id,
                columns,
            },
            assignment,
        })
    }

    /// Recorded constraint rows, in order.
    pub fn constraints(&self) -> &[[LinearCombination; 3]] {
        &self.constraints
    }
}
