//! C interface to `stablepca`.
//!
//! Every fallible function returns an [`SpcaStatus`]. On failure the message
//! is available from [`spca_last_error`] on the same thread until the next
//! call. Objects are opaque and owned by the caller once returned; release
//! them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stablepca::io::{read_model_json, to_canonical_json};
use stablepca::{
    exhaustive_pca, forward_pca, inner_distance, max_stable_cdf, scale_coefficients, Error, PcaSolution,
    PrincipalBasis, SolverConfig, SpectralModel, StableFamily,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpcaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ShapeMismatch = 3,
    Unsupported = 4,
    ZeroVector = 5,
    FamilyMismatch = 6,
    DegenerateDenominator = 7,
    InvalidData = 8,
    EmptyModel = 9,
    BufferTooSmall = 10,
    /// A Rust panic was caught at the boundary.
    Internal = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpcaVariant {
    Exhaustive = 0,
    Forward = 1,
}

/// Solver settings. Obtain defaults from [`spca_solver_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SpcaSolverOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub threads: usize,
}

/// Opaque spectral model.
pub struct SpcaModel(SpectralModel);

/// Opaque PCA result.
pub struct SpcaSolution(PcaSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SpcaStatus, msg: impl Into<String>) -> SpcaStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> SpcaStatus {
    match e {
        Error::InvalidElement { .. } | Error::InvalidParameter(_) => SpcaStatus::InvalidParameter,
        Error::ShapeMismatch(_) => SpcaStatus::ShapeMismatch,
        Error::Unsupported(_) => SpcaStatus::Unsupported,
        Error::ZeroVector(_) => SpcaStatus::ZeroVector,
        Error::FamilyMismatch(_) => SpcaStatus::FamilyMismatch,
        Error::DegenerateDenominator(_) => SpcaStatus::DegenerateDenominator,
        Error::Data(_) => SpcaStatus::InvalidData,
        Error::EmptyModel => SpcaStatus::EmptyModel,
        Error::Internal(_) => SpcaStatus::Internal,
    }
}

/// Runs `f`, mapping library errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), SpcaStatus>) -> SpcaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpcaStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SpcaStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, SpcaStatus>;
}

impl<T> OrStatus<T> for stablepca::Result<T> {
    fn or_status(self) -> Result<T, SpcaStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], SpcaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SpcaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], SpcaStatus> {
    if len < need {
        return Err(fail(
            SpcaStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    if p.is_null() {
        return Err(fail(SpcaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, SpcaStatus> {
    p.as_ref()
        .ok_or_else(|| fail(SpcaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<T>(p: *mut T, value: T, what: &str) -> Result<(), SpcaStatus> {
    if p.is_null() {
        return Err(fail(SpcaStatus::NullPointer, format!("{what} is null")));
    }
    p.write(value);
    Ok(())
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn spca_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn spca_solver_options_default() -> SpcaSolverOptions {
    let c = SolverConfig::default();
    SpcaSolverOptions {
        restarts: c.restarts,
        max_iters: c.max_iters,
        tol: c.tol,
        seed: c.seed,
        threads: c.threads,
    }
}

/// Builds a Frechet model from a row-major `d x n` atom matrix and `n` masses.
///
/// # Safety
/// `nu` must point to `d * n` doubles, `mu` to `n` doubles, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn spca_model_new(
    d: usize,
    n: usize,
    nu: *const f64,
    mu: *const f64,
    alpha: f64,
    out_model: *mut *mut SpcaModel,
) -> SpcaStatus {
    guard(|| {
        let len = d
            .checked_mul(n)
            .ok_or_else(|| fail(SpcaStatus::InvalidParameter, "d * n overflows"))?;
        let nu = slice(nu, len, "nu")?;
        let mu = slice(mu, n, "mu")?.to_vec();
        let m = SpectralModel::from_row_major(d, nu, mu, StableFamily::Frechet { alpha }).or_status()?;
        out(out_model, Box::into_raw(Box::new(SpcaModel(m))), "out_model")
    })
}

/// Parses a model from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string, `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_model_from_json(json: *const c_char, out_model: *mut *mut SpcaModel) -> SpcaStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(SpcaStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json).to_bytes();
        let m = read_model_json(text).or_status()?;
        out(out_model, Box::into_raw(Box::new(SpcaModel(m))), "out_model")
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spca_model_free(model: *mut SpcaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be valid; `d` and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_model_dims(model: *const SpcaModel, d: *mut usize, n: *mut usize) -> SpcaStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        out(d, m.d(), "d")?;
        out(n, m.n(), "n")
    })
}

/// Joint distribution function at `x` (length `d`).
///
/// # Safety
/// `x` must point to `len` doubles, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_model_cdf(
    model: *const SpcaModel,
    x: *const f64,
    len: usize,
    value: *mut f64,
) -> SpcaStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        let v = max_stable_cdf(m, slice(x, len, "x")?).or_status()?;
        out(value, v, "value")
    })
}

/// Writes the `d` margin scale coefficients into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn spca_model_scale_coefficients(
    model: *const SpcaModel,
    buf: *mut f64,
    len: usize,
) -> SpcaStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        let dst = slice_mut(buf, len, m.d(), "buf")?;
        let lambda = scale_coefficients(m).or_status()?;
        dst[..lambda.len()].copy_from_slice(&lambda);
        Ok(())
    })
}

/// Max-linear PCA with `p` columns. `options` may be null for defaults.
///
/// # Safety
/// `model` must be valid, `options` null or valid, `out_solution` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_pca(
    model: *const SpcaModel,
    p: usize,
    variant: SpcaVariant,
    options: *const SpcaSolverOptions,
    out_solution: *mut *mut SpcaSolution,
) -> SpcaStatus {
    guard(|| {
        let m = &obj(model, "model")?.0;
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| spca_solver_options_default());
        let cfg = SolverConfig {
            restarts: o.restarts,
            max_iters: o.max_iters,
            tol: o.tol,
            seed: o.seed,
            threads: o.threads,
            ..SolverConfig::default()
        };
        let sol = match variant {
            SpcaVariant::Exhaustive => exhaustive_pca(m, p, &cfg),
            SpcaVariant::Forward => forward_pca(m, p, &cfg),
        }
        .or_status()?;
        out(out_solution, Box::into_raw(Box::new(SpcaSolution(sol))), "out_solution")
    })
}

/// # Safety
/// `solution` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_free(solution: *mut SpcaSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be valid; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_objective(solution: *const SpcaSolution, value: *mut f64) -> SpcaStatus {
    guard(|| out(value, obj(solution, "solution")?.0.objective, "value"))
}

/// # Safety
/// `solution` must be valid; `converged` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_converged(solution: *const SpcaSolution, converged: *mut bool) -> SpcaStatus {
    guard(|| {
        out(
            converged,
            obj(solution, "solution")?.0.diagnostics.converged,
            "converged",
        )
    })
}

/// # Safety
/// `solution` must be valid; `d` and `p` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_dims(solution: *const SpcaSolution, d: *mut usize, p: *mut usize) -> SpcaStatus {
    guard(|| {
        let b = &obj(solution, "solution")?.0.basis;
        out(d, b.d(), "d")?;
        out(p, b.p(), "p")
    })
}

/// Copies the `d x p` basis, column-major, into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_basis(solution: *const SpcaSolution, buf: *mut f64, len: usize) -> SpcaStatus {
    guard(|| {
        let b = &obj(solution, "solution")?.0.basis;
        let dst = slice_mut(buf, len, b.d() * b.p(), "buf")?;
        for (k, col) in b.columns().iter().enumerate() {
            dst[k * b.d()..(k + 1) * b.d()].copy_from_slice(col);
        }
        Ok(())
    })
}

/// Copies the `n` per-atom inner distances into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_atom_distances(
    solution: *const SpcaSolution,
    buf: *mut f64,
    len: usize,
) -> SpcaStatus {
    guard(|| {
        let atoms = &obj(solution, "solution")?.0.per_atom;
        let dst = slice_mut(buf, len, atoms.len(), "buf")?;
        for a in atoms {
            dst[a.atom] = a.distance;
        }
        Ok(())
    })
}

/// The full result as JSON. Release the string with [`spca_string_free`].
///
/// # Safety
/// `solution` must be valid; `json` writable.
#[no_mangle]
pub unsafe extern "C" fn spca_solution_to_json(solution: *const SpcaSolution, json: *mut *mut c_char) -> SpcaStatus {
    guard(|| {
        let s = to_canonical_json(&obj(solution, "solution")?.0).or_status()?;
        let c = CString::new(s).map_err(|e| fail(SpcaStatus::Internal, e.to_string()))?;
        out(json, c.into_raw(), "json")
    })
}

/// # Safety
/// `s` must come from this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spca_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Distance from `u` to the max-linear span of a `d x p` column-major basis
/// (columns are rescaled to unit sup norm first). The `p` optimal
/// coefficients go to `coefficients`, which may be null.
///
/// # Safety
/// `basis` must hold `d * p` doubles, `u` `d` doubles, `coefficients` null or `p` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn spca_inner_distance(
    d: usize,
    p: usize,
    basis: *const f64,
    u: *const f64,
    distance: *mut f64,
    coefficients: *mut f64,
) -> SpcaStatus {
    guard(|| {
        let len = d
            .checked_mul(p)
            .ok_or_else(|| fail(SpcaStatus::InvalidParameter, "d * p overflows"))?;
        let flat = slice(basis, len, "basis")?;
        let cols: Vec<Vec<f64>> = if d == 0 {
            Vec::new()
        } else {
            flat.chunks(d).map(<[f64]>::to_vec).collect()
        };
        let b = PrincipalBasis::new(cols, f64::INFINITY).or_status()?;
        let fit = inner_distance(slice(u, d, "u")?, &b).or_status()?;
        out(distance, fit.distance, "distance")?;
        if !coefficients.is_null() {
            std::slice::from_raw_parts_mut(coefficients, p).copy_from_slice(&fit.coefficients);
        }
        Ok(())
    })
}
