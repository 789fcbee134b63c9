//! C bindings for `matcircuit`.
//!
//! Every function returns an [`McStatus`]. On failure a description is
//! available from [`mc_last_error_message`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and released
//! with [`mc_string_free`]; handles are released with their `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use matcircuit::builder::SynthesisError;
use matcircuit::field::{sample_challenge, PrimeModulus};
use matcircuit::matmul::{generate_matmul_witness, synthesize_matmul, Encoding, MatMulSpec};
use matcircuit::matrix::FieldMatrix;
use matcircuit::r1cs::{Assignment, R1csError, R1csInstance};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    /// The assignment does not satisfy the instance.
    Unsatisfied = 1,
    NullPointer = 2,
    InvalidArgument = 3,
    Parse = 4,
    Shape = 5,
    Synthesis = 6,
    Panic = 7,
}

/// Opaque constraint system.
pub struct McInstance(R1csInstance);

/// Opaque variable assignment.
pub struct McAssignment(Assignment);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct McInstanceStats {
    pub n_constraints: usize,
    pub n_variables: usize,
    pub n_public: usize,
    pub a_nonzeros: usize,
    pub b_nonzeros: usize,
    pub c_nonzeros: usize,
    pub left_wire_count: usize,
    pub product_rows: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(McStatus, String);

impl From<R1csError> for Failure {
    fn from(e: R1csError) -> Self {
        let status = match e {
            R1csError::Shape(_) => McStatus::Shape,
            _ => McStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

impl From<SynthesisError> for Failure {
    fn from(e: SynthesisError) -> Self {
        let status = match e {
            SynthesisError::Shape(_) => McStatus::Shape,
            SynthesisError::Spec(_) => McStatus::InvalidArgument,
            _ => McStatus::Synthesis,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<McStatus, Failure>) -> McStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            McStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(McStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(McStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<McStatus, Failure> {
    let c = CString::new(s).map_err(|e| Failure(McStatus::Panic, e.to_string()))?;
    *out = c.into_raw();
    Ok(McStatus::Ok)
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_instance_from_json(
    json: *const c_char,
    out: *mut *mut McInstance,
) -> McStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(json, "json")?;
        let inst = R1csInstance::from_json(text.as_bytes())?;
        *out = Box::into_raw(Box::new(McInstance(inst)));
        Ok(McStatus::Ok)
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_instance_to_json(
    inst: *const McInstance,
    out: *mut *mut c_char,
) -> McStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, borrow(inst, "instance")?.0.to_json())
    })
}

/// # Safety
/// `inst` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mc_instance_free(inst: *mut McInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_instance_stats(
    inst: *const McInstance,
    out: *mut McInstanceStats,
) -> McStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = borrow(inst, "instance")?.0.stats();
        *out = McInstanceStats {
            n_constraints: s.n_constraints,
            n_variables: s.n_variables,
            n_public: s.n_public,
            a_nonzeros: s.a_nonzeros,
            b_nonzeros: s.b_nonzeros,
            c_nonzeros: s.c_nonzeros,
            left_wire_count: s.left_wire_count,
            product_rows: s.product_rows,
        };
        Ok(McStatus::Ok)
    })
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_assignment_from_json(
    json: *const c_char,
    out: *mut *mut McAssignment,
) -> McStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(json, "json")?;
        let asg = Assignment::from_json(text.as_bytes())?;
        *out = Box::into_raw(Box::new(McAssignment(asg)));
        Ok(McStatus::Ok)
    })
}

/// # Safety
/// `asg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_assignment_to_json(
    asg: *const McAssignment,
    out: *mut *mut c_char,
) -> McStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, borrow(asg, "assignment")?.0.to_json())
    })
}

/// # Safety
/// `asg` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mc_assignment_free(asg: *mut McAssignment) {
    if !asg.is_null() {
        drop(Box::from_raw(asg));
    }
}

/// Returns `Ok` or `Unsatisfied`. `failing_row`, if not null, receives the
/// first failing row, or `SIZE_MAX` when satisfied.
///
/// # Safety
/// Both handles must be live; `failing_row` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mc_check(
    inst: *const McInstance,
    asg: *const McAssignment,
    failing_row: *mut usize,
) -> McStatus {
    guard(|| {
        let inst = borrow(inst, "instance")?;
        let asg = borrow(asg, "assignment")?;
        let report = inst.0.is_satisfied(&asg.0)?;
        if !failing_row.is_null() {
            *failing_row = report.first_failing_row.unwrap_or(usize::MAX);
        }
        Ok(if report.satisfied {
            McStatus::Ok
        } else {
            McStatus::Unsatisfied
        })
    })
}

/// Synthesizes an `a x n` by `n x b` product circuit. `modulus` is decimal;
/// `encoding` is one of `naive`, `naive-psq`, `crpc`, `crpc-psq`. The
/// challenge encodings need a nonempty `challenge_seed`; others ignore it.
///
/// # Safety
/// String arguments must be nul-terminated (`challenge_seed` may be null);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_matmul_compile(
    modulus: *const c_char,
    a: usize,
    n: usize,
    b: usize,
    encoding: *const c_char,
    challenge_seed: *const c_char,
    out: *mut *mut McInstance,
) -> McStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let invalid = |m: String| Failure(McStatus::InvalidArgument, m);
        let m: PrimeModulus = c_str(modulus, "modulus")?
            .parse()
            .map_err(|e| invalid(format!("{e}")))?;
        let enc: Encoding = c_str(encoding, "encoding")?.parse().map_err(invalid)?;
        let seed = if challenge_seed.is_null() {
            None
        } else {
            Some(c_str(challenge_seed, "challenge_seed")?).filter(|s| !s.is_empty())
        };
        let mut spec = MatMulSpec::new(&m, a, n, b, enc);
        if enc.uses_challenge() {
            let seed = seed.ok_or_else(|| invalid(format!("encoding {enc} requires a challenge seed")))?;
            spec.challenge =
                Some(sample_challenge(seed.as_bytes(), &m).map_err(|e| invalid(e.to_string()))?);
        }
        spec.validate()?;
        let circuit = synthesize_matmul(&spec)?;
        let mut meta = circuit.instance.metadata().clone();
        if let (true, Some(seed)) = (enc.uses_challenge(), seed) {
            meta.insert("challenge_seed".into(), seed.into());
        }
        let inst = circuit.instance.with_metadata(meta);
        *out = Box::into_raw(Box::new(McInstance(inst)));
        Ok(McStatus::Ok)
    })
}

/// Computes `Y = X W` and a satisfying assignment for an instance made by
/// [`mc_matmul_compile`]. `x_json` and `w_json` are matrix documents; `y_json`
/// may be null if the product is not wanted.
///
/// # Safety
/// `inst` must be live; strings nul-terminated; out-parameters writable.
#[no_mangle]
pub unsafe extern "C" fn mc_matmul_witness(
    inst: *const McInstance,
    x_json: *const c_char,
    w_json: *const c_char,
    assignment: *mut *mut McAssignment,
    y_json: *mut *mut c_char,
) -> McStatus {
    guard(|| {
        if assignment.is_null() {
            return Err(null("assignment"));
        }
        let inst = &borrow(inst, "instance")?.0;
        let m = inst.modulus().clone();
        let spec = MatMulSpec::from_metadata(&m, inst.metadata())?;
        let matrix = |p, what| -> Result<FieldMatrix, Failure> {
            FieldMatrix::from_json(c_str(p, what)?.as_bytes(), &m)
                .map_err(|e| Failure(McStatus::Parse, format!("{what}: {e}")))
        };
        let x = matrix(x_json, "x_json")?;
        let w = matrix(w_json, "w_json")?;
        let (asg, y) = generate_matmul_witness(&spec, &x, &w)?;
        if !inst.is_satisfied(&asg)?.satisfied {
            return Err(Failure(
                McStatus::Synthesis,
                "instance constraints do not match its metadata".into(),
            ));
        }
        if !y_json.is_null() {
            give_string(y_json, y.to_json())?;
        }
        *assignment = Box::into_raw(Box::new(McAssignment(asg)));
        Ok(McStatus::Ok)
    })
}
