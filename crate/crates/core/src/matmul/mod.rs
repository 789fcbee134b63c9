//! Matrix-multiplication circuits `Y = X × W` (`X` is `a×n`, `W` is `n×b`).
//!
//! Four encodings are supported, mirroring the ablation between scalar and
//! polynomial constraints with and without prefix-sum accumulation:
//!
//! | encoding   | rows          | shape of row                                   |
//! |------------|---------------|------------------------------------------------|
//! | `Naive`    | `a·b·(n+1)`   | `x_ik·w_kj = t_ijk`, then `(Σ_k t_ijk)·1 = y_ij` |
//! | `NaivePsq` | `a·b·n`       | `x_ik·w_kj = s_k − s_{k−1}`, last row `= y_ij − s_{n−2}` |
//! | `Crpc`     | `n+1`         | `X_k(Z)·W_k(Z) = t_k`, then `(Σ_k t_k)·1 = Y(Z)` |
//! | `CrpcPsq`  | `n`           | `X_k(Z)·W_k(Z) = s_k − s_{k−1}`, last row `= Y(Z) − s_{n−2}` |
//!
//! with `X_k(Z) = Σ_i Z^{i·b} x_ik`, `W_k(Z) = Σ_j Z^j w_kj` and
//! `Y(Z) = Σ_{i,j} Z^{i·b+j} y_ij`. The challenge `Z` only ever appears inside
//! coefficients. `s_{−1}` is the constant 0.

mod mapping;
mod negative;
mod soundness;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::builder::{
    CircuitBuilder, Layout, LinearCombination, SynthesisError, Variable, Visibility,
};
use crate::field::{FieldElement, PrimeModulus};
use crate::matrix::FieldMatrix;
use crate::r1cs::{Assignment, R1csInstance};

pub use mapping::{
    check_polynomial_identity, eval_mapped, map_w_row, map_x_column, map_y, MappedPolynomial,
};
pub use negative::{
    negative_fixture_transforms, odd_power_terms, NegativeFixtureReport, OddPowerReport,
    UnweightedSumReport,
};
pub use soundness::{
    exhaustive_challenge_scan, soundness_trial, theoretical_bound, ChallengeScan, SoundnessBound,
    SoundnessReport, Tamper, EXHAUSTIVE_MAX_MODULUS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Encoding {
    Naive,
    NaivePsq,
    Crpc,
    CrpcPsq,
}

impl Encoding {
    pub const ALL: [Encoding; 4] = [
        Encoding::Naive,
        Encoding::NaivePsq,
        Encoding::Crpc,
        Encoding::CrpcPsq,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Encoding::Naive => "naive",
            Encoding::NaivePsq => "naive-psq",
            Encoding::Crpc => "crpc",
            Encoding::CrpcPsq => "crpc-psq",
        }
    }

    pub fn uses_challenge(&self) -> bool {
        matches!(self, Encoding::Crpc | Encoding::CrpcPsq)
    }

    pub fn uses_prefix_sums(&self) -> bool {
        matches!(self, Encoding::NaivePsq | Encoding::CrpcPsq)
    }

    /// Closed-form row count.
    pub fn constraint_count(&self, a: usize, n: usize, b: usize) -> usize {
        match self {
            Encoding::Naive => a * b * (n + 1),
            Encoding::NaivePsq => a * b * n,
            Encoding::Crpc => n + 1,
            Encoding::CrpcPsq => n,
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Encoding::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                format!("unknown encoding {s:?} (expected naive, naive-psq, crpc or crpc-psq)")
            })
    }
}

/// Which of `X`, `W`, `Y` are public inputs. Auxiliary variables are always
/// private.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VisibilityPolicy {
    pub x: Visibility,
    pub w: Visibility,
    pub y: Visibility,
}

impl Default for VisibilityPolicy {
    /// Client input and prediction public, model weights private.
    fn default() -> Self {
        VisibilityPolicy {
            x: Visibility::Public,
            w: Visibility::Private,
            y: Visibility::Public,
        }
    }
}

impl VisibilityPolicy {
    /// Parses a comma-separated list of the public matrices, e.g. `"x,y"`.
    /// An empty string makes everything private.
    pub fn from_public_list(s: &str) -> Result<Self, String> {
        let mut policy = VisibilityPolicy {
            x: Visibility::Private,
            w: Visibility::Private,
            y: Visibility::Private,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "x" => policy.x = Visibility::Public,
                "w" => policy.w = Visibility::Public,
                "y" => policy.y = Visibility::Public,
                other => return Err(format!("unknown matrix {other:?} in public list")),
            }
        }
        Ok(policy)
    }

    pub fn to_public_list(&self) -> String {
        [("x", self.x), ("w", self.w), ("y", self.y)]
            .iter()
            .filter(|(_, v)| *v == Visibility::Public)
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatMulSpec {
    pub modulus: PrimeModulus,
    pub a: usize,
    pub n: usize,
    pub b: usize,
    pub encoding: Encoding,
    /// Required (and nonzero) for the polynomial encodings, ignored otherwise.
    pub challenge: Option<FieldElement>,
    pub visibility: VisibilityPolicy,
}

impl MatMulSpec {
    pub fn new(modulus: &PrimeModulus, a: usize, n: usize, b: usize, encoding: Encoding) -> Self {
        MatMulSpec {
            modulus: modulus.clone(),
            a,
            n,
            b,
            encoding,
            challenge: None,
            visibility: VisibilityPolicy::default(),
        }
    }

    pub fn with_challenge(mut self, z: FieldElement) -> Self {
        self.challenge = Some(z);
        self
    }

    pub fn with_visibility(mut self, visibility: VisibilityPolicy) -> Self {
        self.visibility = visibility;
        self
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        if self.a == 0 || self.n == 0 || self.b == 0 {
            return Err(SynthesisError::Spec(format!(
                "dimensions must be positive, got ({}, {}, {})",
                self.a, self.n, self.b
            )));
        }
        if self.encoding.uses_challenge() {
            match &self.challenge {
                None => {
                    return Err(SynthesisError::Spec(format!(
                        "encoding {} requires a challenge",
                        self.encoding
                    )))
                }
                Some(z) if z.is_zero() => {
                    return Err(SynthesisError::Spec("challenge must be nonzero".into()))
                }
                Some(z) if *z.modulus() != self.modulus => {
                    return Err(SynthesisError::Spec(
                        "challenge belongs to another field".into(),
                    ))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn challenge(&self) -> &FieldElement {
        self.challenge.as_ref().expect("validated")
    }

    /// Key/value description stored in the instance so a witness can be
    /// regenerated from the instance file alone.
    pub fn to_metadata(&self) -> BTreeMap<String, String> {
        let mut meta = BTreeMap::new();
        meta.insert("circuit".into(), "matmul".into());
        meta.insert("a".into(), self.a.to_string());
        meta.insert("n".into(), self.n.to_string());
        meta.insert("b".into(), self.b.to_string());
        meta.insert("encoding".into(), self.encoding.name().into());
        meta.insert("public".into(), self.visibility.to_public_list());
        if self.encoding.uses_challenge() {
            if let Some(z) = &self.challenge {
                meta.insert("challenge".into(), z.to_decimal());
            }
        }
        meta
    }

    pub fn from_metadata(
        modulus: &PrimeModulus,
        meta: &BTreeMap<String, String>,
    ) -> Result<Self, SynthesisError> {
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| SynthesisError::Spec(format!("instance metadata lacks {k:?}")))
        };
        if get("circuit")? != "matmul" {
            return Err(SynthesisError::Spec(
                "instance is not a matmul circuit".into(),
            ));
        }
        let dim = |k: &str| -> Result<usize, SynthesisError> {
            get(k)?
                .parse()
                .map_err(|_| SynthesisError::Spec(format!("bad dimension {k}")))
        };
        let encoding: Encoding = get("encoding")?.parse().map_err(SynthesisError::Spec)?;
        let visibility = match meta.get("public") {
            Some(list) => VisibilityPolicy::from_public_list(list).map_err(SynthesisError::Spec)?,
            None => VisibilityPolicy::default(),
        };
        let mut spec = MatMulSpec::new(modulus, dim("a")?, dim("n")?, dim("b")?, encoding)
            .with_visibility(visibility);
        if encoding.uses_challenge() {
            spec.challenge = Some(FieldElement::from_decimal(get("challenge")?, modulus)?);
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Input matrices for witness generation. `y` defaults to `X × W`.
#[derive(Clone, Debug)]
pub struct MatrixWitness {
    pub x: FieldMatrix,
    pub w: FieldMatrix,
    pub y: Option<FieldMatrix>,
}

impl MatrixWitness {
    fn check_shapes(&self, spec: &MatMulSpec) -> Result<(), SynthesisError> {
        let expect = |name: &str, m: &FieldMatrix, r: usize, c: usize| {
            if m.rows() != r || m.cols() != c {
                Err(SynthesisError::Shape(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    m.rows(),
                    m.cols()
                )))
            } else if *m.modulus() != spec.modulus {
                Err(SynthesisError::Spec(format!(
                    "{name} belongs to another field"
                )))
            } else {
                Ok(())
            }
        };
        expect("X", &self.x, spec.a, spec.n)?;
        expect("W", &self.w, spec.n, spec.b)?;
        if let Some(y) = &self.y {
            expect("Y", y, spec.a, spec.b)?;
        }
        Ok(())
    }
}

/// Handles to the matrix variables, row-major.
#[derive(Clone, Debug)]
pub struct MatMulVars {
    pub x: Vec<Variable>,
    pub w: Vec<Variable>,
    pub y: Vec<Variable>,
}

/// A finalized matmul circuit.
#[derive(Clone, Debug)]
pub struct MatMulCircuit {
    pub spec: MatMulSpec,
    pub instance: R1csInstance,
    pub layout: Layout,
    pub vars: MatMulVars,
    pub assignment: Option<Assignment>,
    pub y: Option<FieldMatrix>,
}

impl MatMulCircuit {
    /// Column in `z` of `Y[i, j]`.
    pub fn y_column(&self, i: usize, j: usize) -> usize {
        self.layout
            .column(self.vars.y[i * self.spec.b + j])
            .expect("own variable")
    }
}

/// Emits the matmul constraints into `builder`. With `witness`, every
/// variable (auxiliaries included) carries a value; `witness.y`, when given,
/// is used verbatim even if it is not `X × W`.
pub fn synthesize_matmul_into(
    builder: &mut CircuitBuilder,
    spec: &MatMulSpec,
    witness: Option<&MatrixWitness>,
) -> Result<MatMulVars, SynthesisError> {
    spec.validate()?;
    if *builder.modulus() != spec.modulus {
        return Err(SynthesisError::Spec(
            "builder and spec use different fields".into(),
        ));
    }
    let (a, n, b) = (spec.a, spec.n, spec.b);
    let y_value = match witness {
        Some(wit) => {
            wit.check_shapes(spec)?;
            Some(match &wit.y {
                Some(y) => y.clone(),
                None => wit.x.mul(&wit.w)?,
            })
        }
        None => None,
    };
    let values = witness.map(|w| (&w.x, &w.w, y_value.as_ref().expect("set with witness")));

    let mut x = Vec::with_capacity(a * n);
    for i in 0..a {
        for k in 0..n {
            let v = values.map(|(xm, _, _)| xm.get(i, k).clone());
            x.push(builder.alloc(spec.visibility.x, format!("x[{i}][{k}]"), v)?);
        }
    }
    let mut w = Vec::with_capacity(n * b);
    for k in 0..n {
        for j in 0..b {
            let v = values.map(|(_, wm, _)| wm.get(k, j).clone());
            w.push(builder.alloc(spec.visibility.w, format!("w[{k}][{j}]"), v)?);
        }
    }
    let mut y = Vec::with_capacity(a * b);
    for i in 0..a {
        for j in 0..b {
            let v = values.map(|(_, _, ym)| ym.get(i, j).clone());
            y.push(builder.alloc(spec.visibility.y, format!("y[{i}][{j}]"), v)?);
        }
    }
    let vars = MatMulVars { x, w, y };

    match spec.encoding {
        Encoding::Naive | Encoding::NaivePsq => scalar_rows(builder, spec, &vars)?,
        Encoding::Crpc | Encoding::CrpcPsq => polynomial_rows(builder, spec, &vars)?,
    }
    Ok(vars)
}

/// One dot product per output entry.
fn scalar_rows(
    builder: &mut CircuitBuilder,
    spec: &MatMulSpec,
    vars: &MatMulVars,
) -> Result<(), SynthesisError> {
    let (a, n, b) = (spec.a, spec.n, spec.b);
    for i in 0..a {
        for j in 0..b {
            let factors: Vec<(LinearCombination, LinearCombination)> = (0..n)
                .map(|k| (builder.lc(vars.x[i * n + k]), builder.lc(vars.w[k * b + j])))
                .collect();
            let target = builder.lc(vars.y[i * b + j]);
            let label = format!("[{i}][{j}]");
            accumulate(
                builder,
                spec.encoding.uses_prefix_sums(),
                factors,
                target,
                &label,
            )?;
        }
    }
    Ok(())
}

/// `n` polynomial products in the challenge.
fn polynomial_rows(
    builder: &mut CircuitBuilder,
    spec: &MatMulSpec,
    vars: &MatMulVars,
) -> Result<(), SynthesisError> {
    let (a, n, b) = (spec.a, spec.n, spec.b);
    let z = spec.challenge();
    // powers[e] = Z^e for e < a·b
    let mut powers = Vec::with_capacity(a * b);
    let mut acc = FieldElement::one(&spec.modulus);
    for _ in 0..a * b {
        powers.push(acc.clone());
        acc = &acc * z;
    }
    let factors: Vec<(LinearCombination, LinearCombination)> = (0..n)
        .map(|k| {
            let mut xk = builder.lc_zero();
            for i in 0..a {
                xk.add_term(vars.x[i * n + k], powers[i * b].clone());
            }
            let mut wk = builder.lc_zero();
            for j in 0..b {
                wk.add_term(vars.w[k * b + j], powers[j].clone());
            }
            (xk, wk)
        })
        .collect();
    let mut target = builder.lc_zero();
    for i in 0..a {
        for j in 0..b {
            target.add_term(vars.y[i * b + j], powers[i * b + j].clone());
        }
    }
    accumulate(
        builder,
        spec.encoding.uses_prefix_sums(),
        factors,
        target,
        "",
    )
}

/// Enforces `Σ_k lhs_k · rhs_k = target`.
///
/// Without prefix sums: one product row per term into a fresh `t_k`, then one
/// addition row `(Σ t_k)·1 = target`. With prefix sums: row `k` binds the
/// running sum `s_k`, and the last row's output side is `target − s_{n−2}`.
fn accumulate(
    builder: &mut CircuitBuilder,
    prefix_sums: bool,
    factors: Vec<(LinearCombination, LinearCombination)>,
    target: LinearCombination,
    label: &str,
) -> Result<(), SynthesisError> {
    let n = factors.len();
    if prefix_sums {
        let mut running: Option<FieldElement> = Some(FieldElement::zero(builder.modulus()));
        let mut prev = builder.lc_zero();
        for (k, (lhs, rhs)) in factors.into_iter().enumerate() {
            let product = match (builder.eval(&lhs), builder.eval(&rhs)) {
                (Some(l), Some(r)) => Some(l * r),
                _ => None,
            };
            running = running.zip(product).map(|(s, p)| s + p);
            if k + 1 == n {
                builder.enforce(lhs, rhs, target - prev)?;
                break;
            }
            let s = builder.alloc_private(format!("s{label}[{k}]"), running.clone())?;
            let s_lc = builder.lc(s);
            builder.enforce(lhs, rhs, s_lc.clone() - prev)?;
            prev = s_lc;
        }
    } else {
        let mut sum = builder.lc_zero();
        for (k, (lhs, rhs)) in factors.into_iter().enumerate() {
            let product = match (builder.eval(&lhs), builder.eval(&rhs)) {
                (Some(l), Some(r)) => Some(l * r),
                _ => None,
            };
            let t = builder.alloc_private(format!("t{label}[{k}]"), product)?;
            builder.enforce(lhs, rhs, builder.lc(t))?;
            sum.add_term(t, builder.one());
        }
        builder.enforce(sum, builder.lc_const(builder.one()), target)?;
    }
    Ok(())
}

fn finish(
    mut builder: CircuitBuilder,
    spec: &MatMulSpec,
    vars: MatMulVars,
    y: Option<FieldMatrix>,
) -> Result<MatMulCircuit, SynthesisError> {
    let out = builder.finalize()?;
    Ok(MatMulCircuit {
        spec: spec.clone(),
        instance: out.instance.with_metadata(spec.to_metadata()),
        layout: out.layout,
        vars,
        assignment: out.assignment,
        y,
    })
}

/// Builds the instance for `spec` without witness values.
pub fn synthesize_matmul(spec: &MatMulSpec) -> Result<MatMulCircuit, SynthesisError> {
    let mut builder = CircuitBuilder::new(&spec.modulus);
    let vars = synthesize_matmul_into(&mut builder, spec, None)?;
    finish(builder, spec, vars, None)
}

/// Builds the instance together with a full assignment; `witness.y`, when
/// present, overrides the honest product (used to model a cheating prover).
pub fn synthesize_matmul_with_witness(
    spec: &MatMulSpec,
    witness: &MatrixWitness,
) -> Result<MatMulCircuit, SynthesisError> {
    let mut builder = CircuitBuilder::new(&spec.modulus);
    let vars = synthesize_matmul_into(&mut builder, spec, Some(witness))?;
    let y = match &witness.y {
        Some(y) => y.clone(),
        None => witness.x.mul(&witness.w)?,
    };
    finish(builder, spec, vars, Some(y))
}

/// Computes `Y = X × W` and an assignment satisfying the `spec` instance.
pub fn generate_matmul_witness(
    spec: &MatMulSpec,
    x: &FieldMatrix,
    w: &FieldMatrix,
) -> Result<(Assignment, FieldMatrix), SynthesisError> {
    let witness = MatrixWitness {
        x: x.clone(),
        w: w.clone(),
        y: None,
    };
    let circuit = synthesize_matmul_with_witness(spec, &witness)?;
    let assignment = circuit.assignment.expect("every variable carries a value");
    Ok((assignment, circuit.y.expect("computed")))
}
