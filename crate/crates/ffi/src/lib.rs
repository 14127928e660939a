//! C ABI for the `psmilu` preconditioner.
//!
//! Every function returns a [`PsmiluStatus`]. On failure a message is kept
//! per thread and can be read with [`psmilu_last_error`]. Matrices and
//! preconditioners are opaque handles owned by the caller, released with
//! [`psmilu_matrix_free`] and [`psmilu_prec_free`]. Panics never cross the
//! boundary; they are reported as `PSMILU_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use psmilu::krylov::Identity;
use psmilu::multilevel::io;
use psmilu::sparse::mm;
use psmilu::{gmres_right, psmilu_solve, Crs, Error, GmresConfig, HVariant, MultilevelPrec, Options};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsmiluStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    FactorizationFailed = 4,
    NotConverged = 5,
    Io = 6,
    Parse = 7,
    Panic = 8,
}

/// Factorization parameters. Obtain defaults with [`psmilu_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsmiluOptions {
    pub tau_l: f64,
    pub tau_u: f64,
    pub tau_d: f64,
    pub tau_kappa: f64,
    pub alpha_l: f64,
    pub alpha_u: f64,
    pub rho: f64,
    pub c_d: f64,
    pub c_h: f64,
    /// Reference size for the dense switch; 0 means the matrix size.
    pub n_ref: usize,
    /// Nonzero selects the H-version correction as printed in the driver
    /// pseudocode instead of the modified formula.
    pub h_algorithm1: c_int,
}

impl From<&PsmiluOptions> for Options {
    fn from(o: &PsmiluOptions) -> Self {
        Options {
            tau_l: o.tau_l,
            tau_u: o.tau_u,
            tau_d: o.tau_d,
            tau_kappa: o.tau_kappa,
            alpha_l: o.alpha_l,
            alpha_u: o.alpha_u,
            rho: o.rho,
            c_d: o.c_d,
            c_h: o.c_h,
            n_ref: (o.n_ref > 0).then_some(o.n_ref),
            h_variant: if o.h_algorithm1 != 0 {
                HVariant::Algorithm1
            } else {
                HVariant::Modified
            },
            ..Options::default()
        }
    }
}

/// Opaque sparse matrix handle.
pub struct PsmiluMatrix {
    a: Crs,
}

/// Opaque preconditioner handle.
pub struct PsmiluPrec {
    prec: MultilevelPrec,
}

/// Output of [`psmilu_gmres`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsmiluSolveInfo {
    pub iterations: usize,
    pub restarts: usize,
    pub final_relres: f64,
    pub converged: c_int,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> PsmiluStatus {
    match e {
        Error::DimensionMismatch { .. } => PsmiluStatus::DimensionMismatch,
        Error::Factorization { .. } | Error::SingularMatrix { .. } | Error::TooManyLevels(_) => {
            PsmiluStatus::FactorizationFailed
        }
        Error::Parse { .. } | Error::Corrupt(_) | Error::UnsupportedVersion(_) => PsmiluStatus::Parse,
        Error::Io { .. } | Error::IoPlain(_) => PsmiluStatus::Io,
        _ => PsmiluStatus::InvalidArgument,
    }
}

struct Failure(PsmiluStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: PsmiluStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, records any error message and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsmiluStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsmiluStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PsmiluStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PsmiluStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(PsmiluStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(PsmiluStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(fail(PsmiluStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| fail(PsmiluStatus::InvalidArgument, "path is not valid UTF-8"))
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(PsmiluStatus::NullPointer, "output handle pointer is null"));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `psmilu_*` call on the same thread.
#[no_mangle]
pub extern "C" fn psmilu_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `out` with the default options.
///
/// # Safety
/// `out` must be null or point to writable memory for one `PsmiluOptions`.
#[no_mangle]
pub unsafe extern "C" fn psmilu_options_default(out: *mut PsmiluOptions) -> PsmiluStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PsmiluStatus::NullPointer, "options pointer is null"));
        }
        let d = Options::default();
        out.write(PsmiluOptions {
            tau_l: d.tau_l,
            tau_u: d.tau_u,
            tau_d: d.tau_d,
            tau_kappa: d.tau_kappa,
            alpha_l: d.alpha_l,
            alpha_u: d.alpha_u,
            rho: d.rho,
            c_d: d.c_d,
            c_h: d.c_h,
            n_ref: 0,
            h_algorithm1: 0,
        });
        Ok(())
    })
}

/// Builds a matrix from 0-based compressed sparse row arrays, which are
/// copied. `row_start` has `n_rows + 1` entries; `col_ind` and `values`
/// have `row_start[n_rows]` entries.
///
/// # Safety
/// The arrays must be readable for the stated lengths and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_matrix_from_csr(
    n_rows: usize,
    n_cols: usize,
    row_start: *const usize,
    col_ind: *const usize,
    values: *const f64,
    out: *mut *mut PsmiluMatrix,
) -> PsmiluStatus {
    guard(|| {
        check_out(out)?;
        let rs = slice(row_start, n_rows + 1, "row_start")?;
        let nnz = rs[n_rows];
        let ci = slice(col_ind, nnz, "col_ind")?;
        let v = slice(values, nnz, "values")?;
        let a = Crs::from_parts(n_rows, n_cols, rs.to_vec(), ci.to_vec(), v.to_vec())?;
        *out = Box::into_raw(Box::new(PsmiluMatrix { a }));
        Ok(())
    })
}

/// Reads a Matrix Market coordinate file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_matrix_read_mm(path: *const c_char, out: *mut *mut PsmiluMatrix) -> PsmiluStatus {
    guard(|| {
        check_out(out)?;
        let path = path_arg(path)?;
        let t = mm::mm_read(&path)?;
        let a = Crs::from_triplets(&t)?;
        *out = Box::into_raw(Box::new(PsmiluMatrix { a }));
        Ok(())
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn psmilu_matrix_free(m: *mut PsmiluMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Reports the shape and number of stored entries. Any output may be null.
///
/// # Safety
/// `m` must be a valid handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_matrix_shape(
    m: *const PsmiluMatrix,
    n_rows: *mut usize,
    n_cols: *mut usize,
    nnz: *mut usize,
) -> PsmiluStatus {
    guard(|| {
        let a = &handle(m, "matrix")?.a;
        for (p, v) in [(n_rows, a.n_rows()), (n_cols, a.n_cols()), (nnz, a.nnz())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// `y = A x`; `x` has `n_cols` entries and `y` has `n_rows`.
///
/// # Safety
/// `x` and `y` must be valid for the matrix dimensions.
#[no_mangle]
pub unsafe extern "C" fn psmilu_matvec(m: *const PsmiluMatrix, x: *const f64, y: *mut f64) -> PsmiluStatus {
    guard(|| {
        let a = &handle(m, "matrix")?.a;
        let x = slice(x, a.n_cols(), "x")?;
        let y = slice_mut(y, a.n_rows(), "y")?;
        a.matvec(x, y);
        Ok(())
    })
}

/// Computes the multilevel preconditioner. `sym_block` is the size of the
/// leading symmetric block (0 for none). `opts` may be null for defaults.
///
/// # Safety
/// `m` must be a valid handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_factor(
    m: *const PsmiluMatrix,
    sym_block: usize,
    opts: *const PsmiluOptions,
    out: *mut *mut PsmiluPrec,
) -> PsmiluStatus {
    guard(|| {
        check_out(out)?;
        let a = &handle(m, "matrix")?.a;
        let o = opts.as_ref().map_or_else(Options::default, Options::from);
        let prec = psmilu::psmilu_factor(a, sym_block, &o)?;
        *out = Box::into_raw(Box::new(PsmiluPrec { prec }));
        Ok(())
    })
}

/// Releases a preconditioner. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn psmilu_prec_free(p: *mut PsmiluPrec) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Reports the size, level count, final dense block size and fill ratio.
/// Any output may be null.
///
/// # Safety
/// `p` must be a valid handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_prec_info(
    p: *const PsmiluPrec,
    n: *mut usize,
    levels: *mut usize,
    dense_size: *mut usize,
    fill_ratio: *mut f64,
) -> PsmiluStatus {
    guard(|| {
        let pr = &handle(p, "preconditioner")?.prec;
        for (ptr, v) in [(n, pr.n), (levels, pr.n_levels()), (dense_size, pr.dense_size())] {
            if !ptr.is_null() {
                *ptr = v;
            }
        }
        if !fill_ratio.is_null() {
            *fill_ratio = pr.fill_ratio();
        }
        Ok(())
    })
}

/// `x = M^{-1} b` for vectors of length `n`, which must match the
/// preconditioner size.
///
/// # Safety
/// `b` and `x` must be valid for `n` entries.
#[no_mangle]
pub unsafe extern "C" fn psmilu_prec_apply(p: *const PsmiluPrec, n: usize, b: *const f64, x: *mut f64) -> PsmiluStatus {
    guard(|| {
        let pr = &handle(p, "preconditioner")?.prec;
        if n != pr.n {
            return Err(Error::DimensionMismatch { expected: pr.n, got: n }.into());
        }
        let b = slice(b, n, "b")?;
        let x = slice_mut(x, n, "x")?;
        x.copy_from_slice(&psmilu_solve(pr, b)?);
        Ok(())
    })
}

/// Writes the preconditioner to a binary file.
///
/// # Safety
/// `p` must be a valid handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn psmilu_prec_save(p: *const PsmiluPrec, path: *const c_char) -> PsmiluStatus {
    guard(|| {
        let pr = &handle(p, "preconditioner")?.prec;
        io::save(path_arg(path)?, pr)?;
        Ok(())
    })
}

/// Reads a preconditioner written by [`psmilu_prec_save`].
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_prec_load(path: *const c_char, out: *mut *mut PsmiluPrec) -> PsmiluStatus {
    guard(|| {
        check_out(out)?;
        let prec = io::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(PsmiluPrec { prec }));
        Ok(())
    })
}

/// Solves `A x = b` with restarted GMRES, right-preconditioned by `p`
/// (null for none). `x` receives the final iterate even when the solve
/// does not converge, in which case `PSMILU_STATUS_NOT_CONVERGED` is
/// returned. `info` may be null.
///
/// # Safety
/// Handles must be valid or null as documented; `b` and `x` must hold
/// `n_rows` entries; `info` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn psmilu_gmres(
    m: *const PsmiluMatrix,
    p: *const PsmiluPrec,
    b: *const f64,
    x: *mut f64,
    restart: usize,
    rtol: f64,
    maxit: usize,
    info: *mut PsmiluSolveInfo,
) -> PsmiluStatus {
    guard(|| {
        let a = &handle(m, "matrix")?.a;
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(fail(PsmiluStatus::InvalidArgument, "matrix is not square"));
        }
        let b = slice(b, n, "b")?;
        let x = slice_mut(x, n, "x")?;
        let cfg = GmresConfig { restart, rtol, maxit };
        let rep = match p.as_ref() {
            Some(pr) => {
                if pr.prec.n != n {
                    return Err(Error::DimensionMismatch { expected: n, got: pr.prec.n }.into());
                }
                gmres_right(a, b, &pr.prec, &cfg)?
            }
            None => gmres_right(a, b, &Identity, &cfg)?,
        };
        x.copy_from_slice(&rep.x);
        if !info.is_null() {
            *info = PsmiluSolveInfo {
                iterations: rep.iterations,
                restarts: rep.restarts,
                final_relres: rep.final_relres,
                converged: c_int::from(rep.converged),
            };
        }
        if rep.converged {
            Ok(())
        } else {
            Err(fail(
                PsmiluStatus::NotConverged,
                format!("GMRES stopped after {} iterations at relative residual {:e}", rep.iterations, rep.final_relres),
            ))
        }
    })
}
