use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use szego_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CutoffMismatch = 3,
    LeftManifold = 4,
    Unstable = 5,
    SvdFailed = 6,
    NoRoot = 7,
    Infeasible = 8,
    NoExponentialRegime = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) struct Failure {
    pub status: SzStatus,
    pub message: String,
}

impl Failure {
    pub fn new(status: SzStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    pub fn null(name: &str) -> Self {
        Self::new(SzStatus::NullPointer, format!("`{name}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::CutoffMismatch { .. } => SzStatus::CutoffMismatch,
            Error::DimensionMismatch { .. } | Error::InvalidArgument(_) => SzStatus::InvalidArgument,
            Error::LeftManifold { .. } => SzStatus::LeftManifold,
            Error::SvdFailed { .. } => SzStatus::SvdFailed,
            Error::Unstable { .. } => SzStatus::Unstable,
            Error::NoRoot { .. } => SzStatus::NoRoot,
            Error::Infeasible(_) => SzStatus::Infeasible,
            Error::NoExponentialRegime(_) => SzStatus::NoExponentialRegime,
        };
        Self::new(status, e.to_string())
    }
}

pub(crate) fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, translating errors and panics into a status and the
/// thread-local error message.
pub(crate) fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SzStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("panic inside the szego library");
            SzStatus::Panic
        }
    }
}

/// Message for the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread
/// or [`sz_clear_error`].
#[no_mangle]
pub extern "C" fn sz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sz_clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn sz_status_name(status: SzStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        SzStatus::Ok => b"ok\0",
        SzStatus::NullPointer => b"null pointer\0",
        SzStatus::InvalidArgument => b"invalid argument\0",
        SzStatus::CutoffMismatch => b"cutoff mismatch\0",
        SzStatus::LeftManifold => b"left manifold\0",
        SzStatus::Unstable => b"unstable\0",
        SzStatus::SvdFailed => b"svd failed\0",
        SzStatus::NoRoot => b"no root\0",
        SzStatus::Infeasible => b"infeasible\0",
        SzStatus::NoExponentialRegime => b"no exponential regime\0",
        SzStatus::BufferTooSmall => b"buffer too small\0",
        SzStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}
