//! C ABI over the realbloch engine.
//!
//! Handles are opaque pointers created by `*_new` functions and released with the
//! matching `*_free`. Every fallible call returns an [`RbStatus`]; on failure the
//! message is available from [`rb_last_error_message`] on the same thread.
//! Strings returned through out-parameters are owned by the caller and must be
//! released with [`rb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use realbloch::classify::{self, ClassificationResult};
use realbloch::cli::{self, RunConfig};
use realbloch::holonomy;
use realbloch::models;
use realbloch::{Error, ErrorKind, InvolutionKind, InvolutiveLattice, Topology};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    GapClosure = 4,
    SymmetryViolation = 5,
    Refinement = 6,
    Unsupported = 7,
    Model = 8,
    Io = 9,
    Panic = 10,
    Internal = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RbTopology {
    Circle = 0,
    Torus2 = 1,
    Sphere2 = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RbInvolution {
    Trivial = 0,
    Reflection = 1,
    Antipodal = 2,
    Eta = 3,
    EtaFirst = 4,
    Xi = 5,
    Kappa = 6,
}

/// Opaque lattice with its involution.
pub struct RbLattice {
    inner: InvolutiveLattice,
}

/// Opaque classification result.
pub struct RbClassification {
    inner: ClassificationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> RbStatus {
    match e.kind() {
        ErrorKind::Config => RbStatus::Config,
        ErrorKind::GapClosure => RbStatus::GapClosure,
        ErrorKind::Symmetry => RbStatus::SymmetryViolation,
        ErrorKind::Refinement => RbStatus::Refinement,
        ErrorKind::Unsupported => RbStatus::Unsupported,
        ErrorKind::Model => RbStatus::Model,
        ErrorKind::Io => RbStatus::Io,
    }
}

fn fail(status: RbStatus, msg: &str) -> RbStatus {
    set_error(msg);
    status
}

/// Runs `f`, recording errors and turning panics into `RbStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), (RbStatus, String)>) -> RbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RbStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, &msg),
        Err(_) => fail(RbStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (RbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (RbStatus, String) {
    (RbStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (RbStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RbStatus::InvalidArgument, "string is not valid UTF-8".into()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failed call on this thread; empty after a successful call.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a lattice. `sizes` holds 1 entry for the circle and 2 otherwise.
///
/// # Safety
/// `sizes` must point to `n_sizes` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_lattice_new(
    topology: RbTopology,
    sizes: *const usize,
    n_sizes: usize,
    involution: RbInvolution,
    out: *mut *mut RbLattice,
) -> RbStatus {
    guard(|| {
        if sizes.is_null() || out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let sizes = std::slice::from_raw_parts(sizes, n_sizes);
        let topology = match topology {
            RbTopology::Circle => Topology::Circle,
            RbTopology::Torus2 => Topology::Torus2,
            RbTopology::Sphere2 => Topology::Sphere2,
        };
        let kind = match involution {
            RbInvolution::Trivial => InvolutionKind::Trivial,
            RbInvolution::Reflection => InvolutionKind::Reflection,
            RbInvolution::Antipodal => InvolutionKind::Antipodal,
            RbInvolution::Eta => InvolutionKind::Eta,
            RbInvolution::EtaFirst => InvolutionKind::EtaFirst,
            RbInvolution::Xi => InvolutionKind::Xi,
            RbInvolution::Kappa => InvolutionKind::Kappa,
        };
        let inner = InvolutiveLattice::build(topology, sizes, kind).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RbLattice { inner }));
        Ok(())
    })
}

/// # Safety
/// `lattice` must come from `rb_lattice_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn rb_lattice_free(lattice: *mut RbLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// # Safety
/// `lattice` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_lattice_num_sites(lattice: *const RbLattice, out: *mut usize) -> RbStatus {
    guard(|| {
        let lat = lattice.as_ref().ok_or_else(null)?;
        *out.as_mut().ok_or_else(null)? = lat.inner.num_sites();
        Ok(())
    })
}

/// # Safety
/// `lattice` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_lattice_num_fixed_loops(lattice: *const RbLattice, out: *mut usize) -> RbStatus {
    guard(|| {
        let lat = lattice.as_ref().ok_or_else(null)?;
        *out.as_mut().ok_or_else(null)? = lat.inner.fixed_loops().len();
        Ok(())
    })
}

/// Classifies the Real bundle of a named model on `lattice`.
///
/// `params_json` is a JSON object of model parameters or null. `bands` selects
/// 0-based band indices for Hamiltonian models and is ignored by product models.
///
/// # Safety
/// Pointers must be valid; `bands` must hold `n_bands` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_classify_model(
    lattice: *const RbLattice,
    model: *const c_char,
    params_json: *const c_char,
    bands: *const usize,
    n_bands: usize,
    out: *mut *mut RbClassification,
) -> RbStatus {
    guard(|| {
        let lat = &lattice.as_ref().ok_or_else(null)?.inner;
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let name = read_str(model)?;
        let params = if params_json.is_null() {
            serde_json::Map::new()
        } else {
            match serde_json::from_str(read_str(params_json)?) {
                Ok(serde_json::Value::Object(m)) => m,
                _ => return Err((RbStatus::InvalidArgument, "params_json must be a JSON object".into())),
            }
        };
        let bands: Vec<usize> = if bands.is_null() || n_bands == 0 {
            vec![0]
        } else {
            std::slice::from_raw_parts(bands, n_bands).to_vec()
        };
        let model = models::build_model(name, &params, lat).map_err(lib_err)?;
        let bundle = realbloch::bundle::DiscreteBundle::from_model(&model, lat, &bands).map_err(lib_err)?;
        let inner = classify::classify_bundle(&bundle, lat).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RbClassification { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from `rb_classify_model` or be null.
#[no_mangle]
pub unsafe extern "C" fn rb_classification_free(result: *mut RbClassification) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Chern number of the class. Fails with `InvalidArgument` on bases without a free part.
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_classification_chern(result: *const RbClassification, out: *mut i64) -> RbStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(null)?.inner;
        let out = out.as_mut().ok_or_else(null)?;
        *out = *r
            .free
            .first()
            .ok_or((RbStatus::InvalidArgument, format!("group {} has no free part", r.group.label())))?;
        Ok(())
    })
}

/// Number of fixed-loop holonomy signs.
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_classification_torsion_len(result: *const RbClassification, out: *mut usize) -> RbStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(null)?.inner;
        *out.as_mut().ok_or_else(null)? = r.torsion.len();
        Ok(())
    })
}

/// Fixed-loop holonomy sign `index`, +1 or -1.
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_classification_torsion_at(
    result: *const RbClassification,
    index: usize,
    out: *mut i8,
) -> RbStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(null)?.inner;
        let out = out.as_mut().ok_or_else(null)?;
        *out = *r
            .torsion
            .get(index)
            .ok_or((RbStatus::InvalidArgument, format!("torsion index {index} out of range")))?;
        Ok(())
    })
}

/// Full result as JSON. Release with `rb_string_free`.
///
/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_classification_to_json(result: *const RbClassification, out: *mut *mut c_char) -> RbStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(null)?.inner;
        let out = out.as_mut().ok_or_else(null)?;
        let text = serde_json::to_string(r).map_err(|e| (RbStatus::Internal, e.to_string()))?;
        *out = into_c_string(text);
        Ok(())
    })
}

/// Holonomy e^{-2πia} of the flat moduli family.
///
/// # Safety
/// `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_flat_moduli_holonomy(a: f64, re: *mut f64, im: *mut f64) -> RbStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null());
        }
        if !a.is_finite() {
            return Err((RbStatus::InvalidArgument, "a must be finite".into()));
        }
        let z = holonomy::flat_moduli_holonomy(a);
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Runs a CLI config (same JSON schema as `realbloch run`) in memory and returns
/// the report JSON. No files are written.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_run_config_json(
    config_json: *const c_char,
    resolution_scale: f64,
    out_report: *mut *mut c_char,
) -> RbStatus {
    guard(|| {
        if out_report.is_null() {
            return Err(null());
        }
        *out_report = ptr::null_mut();
        let cfg = RunConfig::from_json(read_str(config_json)?).map_err(lib_err)?;
        let outcome = cli::execute(&cfg, resolution_scale).map_err(lib_err)?;
        let text = serde_json::to_string_pretty(&outcome.report)
            .map_err(|e| (RbStatus::Internal, e.to_string()))?;
        *out_report = into_c_string(text);
        Ok(())
    })
}
