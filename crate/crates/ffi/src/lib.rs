//! C ABI over the core crate. Objects cross the boundary as opaque
//! handles owned by the library; strings returned through `char **` are
//! released with [`dl_string_free`], handles with their `_free` function.
//! Every fallible call returns a [`DlStatus`]; the message behind the most
//! recent failure on the current thread is available via [`dl_last_error`].

use derandlab::circuit::CircuitSpec;
use derandlab::design::{build_design_for, nw_params, verify_design, Design, NwProfile};
use derandlab::error::Error;
use derandlab::harness::measure_correlation;
use derandlab::nwgen::{HardFunction, NwGenerator};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of one call. Anything but `Ok` leaves a message in
/// [`dl_last_error`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    NullArgument,
    Dimension,
    Spec,
    Cap,
    Param,
    Construction,
    Width,
    Parse,
    Io,
    Json,
    Utf8,
    Panic,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap_or_default());
}

fn fail(err: &Error) -> DlStatus {
    set_error(&err.to_string());
    match err {
        Error::Dimension(_) => DlStatus::Dimension,
        Error::Spec(_) => DlStatus::Spec,
        Error::Cap(_) => DlStatus::Cap,
        Error::Param(_) => DlStatus::Param,
        Error::Construction(_) => DlStatus::Construction,
        Error::Width(_) => DlStatus::Width,
        Error::Parse(_) => DlStatus::Parse,
        Error::Io(_) => DlStatus::Io,
        Error::Json(_) => DlStatus::Json,
    }
}

fn guarded(body: impl FnOnce() -> DlStatus) -> DlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic across the C boundary");
            DlStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid C string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, DlStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(DlStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        DlStatus::Utf8
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> DlStatus {
    let cleaned: String = text.chars().filter(|&c| c != '\0').collect();
    match CString::new(cleaned) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            DlStatus::Ok
        }
        Err(_) => {
            set_error("string contains interior NUL");
            DlStatus::Parse
        }
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Releases a string returned through a `char **` out-parameter.
///
/// # Safety
/// `s` must be null or a pointer produced by this library.
#[no_mangle]
pub unsafe extern "C" fn dl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Family of same-size blocks with bounded pairwise overlap.
pub struct DlDesign {
    inner: Design,
}

/// Builds a design with `s` blocks of size `r` overlapping in at most `l`
/// points.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_design_build(
    s: usize,
    r: usize,
    l: usize,
    out: *mut *mut DlDesign,
) -> DlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return DlStatus::NullArgument;
        }
        match build_design_for(s, r, l) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DlDesign { inner }));
                DlStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Parses the text form: header `m r l s`, then one block per line.
///
/// # Safety
/// `text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_design_parse(
    text: *const c_char,
    out: *mut *mut DlDesign,
) -> DlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return DlStatus::NullArgument;
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match Design::from_text(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DlDesign { inner }));
                DlStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the design's text form to `*out`.
///
/// # Safety
/// `design` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_design_to_text(
    design: *const DlDesign,
    out: *mut *mut c_char,
) -> DlStatus {
    guarded(|| {
        if design.is_null() || out.is_null() {
            set_error("null argument");
            return DlStatus::NullArgument;
        }
        give_string((*design).inner.to_text(), out)
    })
}

/// Re-checks the overlap bound; reports the worst pairwise overlap seen.
///
/// # Safety
/// All pointers must be valid; `design` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_design_verify(
    design: *const DlDesign,
    ok: *mut bool,
    max_overlap: *mut usize,
) -> DlStatus {
    guarded(|| {
        if design.is_null() || ok.is_null() || max_overlap.is_null() {
            set_error("null argument");
            return DlStatus::NullArgument;
        }
        let report = verify_design(&(*design).inner);
        *ok = report.ok;
        *max_overlap = report.max_overlap;
        DlStatus::Ok
    })
}

/// Number of blocks, or 0 for a null handle.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_design_num_blocks(design: *const DlDesign) -> usize {
    if design.is_null() {
        return 0;
    }
    (*design).inner.num_blocks()
}

/// Block size, or 0 for a null handle.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_design_block_size(design: *const DlDesign) -> usize {
    if design.is_null() {
        return 0;
    }
    (*design).inner.block_size()
}

/// Universe size (seed length of a generator over this design), or 0 for
/// a null handle.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_design_universe(design: *const DlDesign) -> usize {
    if design.is_null() {
        return 0;
    }
    (*design).inner.universe()
}

/// # Safety
/// `design` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dl_design_free(design: *mut DlDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Seed-stretching generator: one hard-function value per design block.
pub struct DlGenerator {
    inner: NwGenerator,
}

/// Creates a generator over a copy of `design`. `hard_spec` is one of
/// `rw:m,k,r`, `gip:m,j`, or `parity:r`; the function's arity must equal
/// the design's block size. `output_len` of 0 means one output per block.
///
/// # Safety
/// `design` must be a live handle, `hard_spec` a valid C string, `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_generator_new(
    design: *const DlDesign,
    hard_spec: *const c_char,
    output_len: usize,
    out: *mut *mut DlGenerator,
) -> DlStatus {
    guarded(|| {
        if design.is_null() || out.is_null() {
            set_error("null argument");
            return DlStatus::NullArgument;
        }
        let spec = match read_str(hard_spec) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let hard = match HardFunction::parse(spec) {
            Ok(h) => h,
            Err(e) => return fail(&e),
        };
        let design = (*design).inner.clone();
        let output_len = if output_len == 0 { design.num_blocks() } else { output_len };
        match NwGenerator::new(design, hard, output_len) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DlGenerator { inner }));
                DlStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Seed length in bits, or 0 for a null handle.
///
/// # Safety
/// `generator` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_generator_seed_len(generator: *const DlGenerator) -> usize {
    if generator.is_null() {
        return 0;
    }
    (*generator).inner.seed_len()
}

/// Output length in bits, or 0 for a null handle.
///
/// # Safety
/// `generator` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_generator_output_len(generator: *const DlGenerator) -> usize {
    if generator.is_null() {
        return 0;
    }
    (*generator).inner.output_len()
}

/// Expands `seed` (bytes holding 0 or 1) into `out`, one byte per output
/// bit. `seed_len` must equal the seed length and `out_len` the output
/// length.
///
/// # Safety
/// `generator` must be a live handle; `seed` and `out` must point to
/// `seed_len` and `out_len` readable/writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dl_generator_expand(
    generator: *const DlGenerator,
    seed: *const u8,
    seed_len: usize,
    out: *mut u8,
    out_len: usize,
) -> DlStatus {
    guarded(|| {
        if generator.is_null() || seed.is_null() || out.is_null() {
            set_error("null argument");
            return DlStatus::NullArgument;
        }
        let generator = &(*generator).inner;
        if seed_len != generator.seed_len() {
            set_error("seed_len does not match the generator");
            return DlStatus::Dimension;
        }
        if out_len != generator.output_len() {
            set_error("out_len does not match the generator");
            return DlStatus::Dimension;
        }
        let seed: Vec<bool> =
            std::slice::from_raw_parts(seed, seed_len).iter().map(|&b| b != 0).collect();
        match generator.generate(&seed) {
            Ok(bits) => {
                let out = std::slice::from_raw_parts_mut(out, out_len);
                for (slot, bit) in out.iter_mut().zip(&bits) {
                    *slot = *bit as u8;
                }
                DlStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `generator` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dl_generator_free(generator: *mut DlGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// Two-layer circuit: a sym, threshold, or table top over small gates.
pub struct DlCircuit {
    inner: CircuitSpec,
}

/// Parses and validates a circuit from its JSON form.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_circuit_parse(
    json: *const c_char,
    out: *mut *mut DlCircuit,
) -> DlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return DlStatus::NullArgument;
        }
        let json = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let circuit = match CircuitSpec::from_json(json) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        if let Err(e) = circuit.validate() {
            return fail(&e);
        }
        *out = Box::into_raw(Box::new(DlCircuit { inner: circuit }));
        DlStatus::Ok
    })
}

/// Input arity, or 0 for a null handle.
///
/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dl_circuit_arity(circuit: *const DlCircuit) -> usize {
    if circuit.is_null() {
        return 0;
    }
    (*circuit).inner.n
}

/// Evaluates the circuit on the input whose bit i is variable i.
///
/// # Safety
/// `circuit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_circuit_eval(
    circuit: *const DlCircuit,
    x: u64,
    out: *mut bool,
) -> DlStatus {
    guarded(|| {
        if circuit.is_null() || out.is_null() {
            set_error("null argument");
            return DlStatus::NullArgument;
        }
        match (*circuit).inner.eval(x) {
            Ok(v) => {
                *out = v;
                DlStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Exact agreement of the circuit with a hard function of the same arity,
/// and that agreement minus one half.
///
/// # Safety
/// `circuit` must be a live handle; `hard_spec` a valid C string;
/// `agreement` and `correlation` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dl_circuit_correlation(
    circuit: *const DlCircuit,
    hard_spec: *const c_char,
    agreement: *mut f64,
    correlation: *mut f64,
) -> DlStatus {
    guarded(|| {
        if circuit.is_null() || agreement.is_null() || correlation.is_null() {
            set_error("null argument");
            return DlStatus::NullArgument;
        }
        let spec = match read_str(hard_spec) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let hard = match HardFunction::parse(spec) {
            Ok(h) => h,
            Err(e) => return fail(&e),
        };
        match measure_correlation(&(*circuit).inner, &hard) {
            Ok(report) => {
                *agreement = report.agreement;
                *correlation = report.correlation;
                DlStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `circuit` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dl_circuit_free(circuit: *mut DlCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Runs the parameter calculator and writes its JSON report to `*out`.
/// `profile` is `viola`, `ls11_sym`, `ls11_thr`, `main`, or `many_gates`;
/// `r_cap` of 0 leaves the block size uncapped.
///
/// # Safety
/// `profile` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dl_params_json(
    profile: *const c_char,
    s: u64,
    eps: f64,
    tau: f64,
    c_d: f64,
    r_cap: u64,
    out: *mut *mut c_char,
) -> DlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return DlStatus::NullArgument;
        }
        let profile = match read_str(profile) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let profile: NwProfile = match profile.parse() {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        let mut params = match nw_params(profile, s, eps, tau, c_d) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        if r_cap > 0 {
            params = params.with_desk_cap(r_cap);
        }
        match serde_json::to_string_pretty(&params) {
            Ok(json) => give_string(json, out),
            Err(e) => fail(&Error::Json(e)),
        }
    })
}
