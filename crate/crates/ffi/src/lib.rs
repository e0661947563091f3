//! C ABI over the dwopt library.
//!
//! Objects are opaque heap handles released with their `_free` function.
//! Every fallible call returns a `DwoptStatus`; on failure a message is
//! kept per thread and can be read with `dwopt_last_error`. Panics never
//! cross the boundary and surface as `DWOPT_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dwopt::encoding::{ChainParams, FieldMode, SpinConfig};
use dwopt::exact::{ground_state_dp, spectrum_summary};
use dwopt::mc::{sa_run, SaParams};
use dwopt::tebd::{tebd_point, TebdParams};
use dwopt::{build_chain, ChainInstance, Error, PotentialSpec};

pub type DwoptStatus = i32;

pub const DWOPT_OK: DwoptStatus = 0;
pub const DWOPT_NULL_POINTER: DwoptStatus = 1;
pub const DWOPT_INVALID_ARGUMENT: DwoptStatus = 2;
pub const DWOPT_CONSTRAINT_VIOLATED: DwoptStatus = 3;
pub const DWOPT_PARSE_ERROR: DwoptStatus = 4;
pub const DWOPT_PANIC: DwoptStatus = 5;

pub const DWOPT_FIELD_GRADIENT: i32 = 0;
pub const DWOPT_FIELD_EXACT_DIFFERENCE: i32 = 1;

/// Opaque chain handle.
pub struct DwoptChain(ChainInstance);

/// Opaque batch of spin configurations.
pub struct DwoptBatch(Vec<SpinConfig>);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DwoptSpectrum {
    pub e0: f64,
    pub e1: f64,
    pub n_enc: usize,
    pub degeneracy: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DwoptTebdPoint {
    pub t_a: f64,
    pub rho: f64,
    pub p_const: f64,
    pub e_res: f64,
    pub p_gs: f64,
    pub truncation_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> DwoptStatus {
    match e {
        Error::Json(_) | Error::Csv(_) | Error::Config(_) => DWOPT_PARSE_ERROR,
        _ => DWOPT_INVALID_ARGUMENT,
    }
}

struct Fail(DwoptStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DWOPT_NULL_POINTER, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DwoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DWOPT_OK
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            DWOPT_PANIC
        }
    }
}

unsafe fn chain_ref<'a>(chain: *const DwoptChain) -> Result<&'a ChainInstance, Fail> {
    chain.as_ref().map(|c| &c.0).ok_or_else(|| null("chain"))
}

unsafe fn spins_in(chain: &ChainInstance, spins: *const i8, len: usize) -> Result<SpinConfig, Fail> {
    if spins.is_null() {
        return Err(null("spins"));
    }
    if len != chain.n_spins {
        return Err(Error::LengthMismatch { expected: chain.n_spins, got: len }.into());
    }
    Ok(SpinConfig::new(std::slice::from_raw_parts(spins, len).to_vec())?)
}

unsafe fn write_spins(config: &SpinConfig, out: *mut i8, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len != config.len() {
        return Err(Error::LengthMismatch { expected: config.len(), got: len }.into());
    }
    ptr::copy_nonoverlapping(config.spins().as_ptr(), out, len);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dwopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dwopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build the washboard chain (`k = 0.5`, `w0 = 0.2`, box `[-3, 3]`, `J = 1`, `h = 2`).
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_new(
    h0: f64,
    n_spins: usize,
    lambda: f64,
    field_mode: i32,
    out: *mut *mut DwoptChain,
) -> DwoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let field_mode = match field_mode {
            DWOPT_FIELD_GRADIENT => FieldMode::Gradient,
            DWOPT_FIELD_EXACT_DIFFERENCE => FieldMode::ExactDifference,
            m => return Err(Fail(DWOPT_INVALID_ARGUMENT, format!("unknown field mode {m}"))),
        };
        let spec = PotentialSpec::washboard(h0);
        spec.validate()?;
        let params = ChainParams { n_spins, lambda, field_mode, ..ChainParams::default() };
        let chain = build_chain(&spec, &params)?;
        *out = Box::into_raw(Box::new(DwoptChain(chain)));
        Ok(())
    })
}

/// Parse a chain from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_from_json(json: *const c_char, out: *mut *mut DwoptChain) -> DwoptStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(DWOPT_PARSE_ERROR, e.to_string()))?;
        let chain = ChainInstance::from_json(text).map_err(|e| Fail(DWOPT_PARSE_ERROR, e.to_string()))?;
        *out = Box::into_raw(Box::new(DwoptChain(chain)));
        Ok(())
    })
}

/// Serialize a chain to JSON; release the string with `dwopt_string_free`.
///
/// # Safety
/// `chain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_to_json(chain: *const DwoptChain, out: *mut *mut c_char) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = chain.to_json()?;
        *out = CString::new(text).map_err(|e| Fail(DWOPT_INVALID_ARGUMENT, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn dwopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `chain` must come from `dwopt_chain_new`/`dwopt_chain_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_free(chain: *mut DwoptChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `chain` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_n_spins(chain: *const DwoptChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.n_spins)
}

/// Classical energy of `spins[0..len]` (entries ±1).
///
/// # Safety
/// `spins` must point to `len` readable bytes and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_energy(
    chain: *const DwoptChain,
    spins: *const i8,
    len: usize,
    out: *mut f64,
) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        let config = spins_in(chain, spins, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = chain.energy(&config)?;
        Ok(())
    })
}

/// Decoded value of a single-wall configuration; `DWOPT_CONSTRAINT_VIOLATED` otherwise.
///
/// # Safety
/// As for `dwopt_chain_energy`.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_decode(
    chain: *const DwoptChain,
    spins: *const i8,
    len: usize,
    out_x: *mut f64,
) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        let config = spins_in(chain, spins, len)?;
        if out_x.is_null() {
            return Err(null("out_x"));
        }
        match chain.decode(&config)? {
            Some(x) => {
                *out_x = x;
                Ok(())
            }
            None => Err(Fail(
                DWOPT_CONSTRAINT_VIOLATED,
                "configuration is not a single correctly oriented domain wall".into(),
            )),
        }
    })
}

/// Write the single-wall configuration nearest to `x` into `out[0..len]`.
///
/// # Safety
/// `out` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dwopt_chain_encode(chain: *const DwoptChain, x: f64, out: *mut i8, len: usize) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        let config = chain.encode(x)?;
        write_spins(&config, out, len)
    })
}

/// Ground energy, first excited level, `n_enc` and ground degeneracy.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dwopt_exact_spectrum(chain: *const DwoptChain, out: *mut DwoptSpectrum) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = spectrum_summary(chain).report();
        *out = DwoptSpectrum { e0: r.e0, e1: r.e1, n_enc: r.n_enc, degeneracy: r.degeneracy };
        Ok(())
    })
}

/// Simulated annealing with a linear temperature ramp from `t0` to `t1`.
///
/// # Safety
/// `chain` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dwopt_sa_run(
    chain: *const DwoptChain,
    t_mcs: usize,
    t0: f64,
    t1: f64,
    n_reads: usize,
    seed: u64,
    out: *mut *mut DwoptBatch,
) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let batch = sa_run(chain, &SaParams { t_mcs, t0, t1, ..SaParams::default() }, n_reads, seed)?;
        *out = Box::into_raw(Box::new(DwoptBatch(batch.samples)));
        Ok(())
    })
}

/// # Safety
/// `batch` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dwopt_batch_len(batch: *const DwoptBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.len())
}

/// Copy sample `index` into `out[0..len]`.
///
/// # Safety
/// `batch` must be a live handle and `out` point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dwopt_batch_sample(
    batch: *const DwoptBatch,
    index: usize,
    out: *mut i8,
    len: usize,
) -> DwoptStatus {
    guard(|| {
        let batch = batch.as_ref().ok_or_else(|| null("batch"))?;
        let config = batch.0.get(index).ok_or_else(|| {
            Fail(DWOPT_INVALID_ARGUMENT, format!("index {index} out of range for {} samples", batch.0.len()))
        })?;
        write_spins(config, out, len)
    })
}

/// # Safety
/// `batch` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn dwopt_batch_free(batch: *mut DwoptBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// One TEBD anneal of duration `t_a` from the uniform superposition.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dwopt_tebd_point(
    chain: *const DwoptChain,
    t_a: f64,
    dt: f64,
    chi_max: usize,
    out: *mut DwoptTebdPoint,
) -> DwoptStatus {
    guard(|| {
        let chain = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = TebdParams { t_a, dt, chi_max, ..TebdParams::default() };
        let gs = ground_state_dp(chain);
        let p = tebd_point(chain, &params, gs.e0, &gs.ground_set)?;
        *out = DwoptTebdPoint {
            t_a: p.t_a,
            rho: p.rho,
            p_const: p.p_const,
            e_res: p.e_res,
            p_gs: p.p_gs,
            truncation_error: p.truncation_error,
        };
        Ok(())
    })
}
