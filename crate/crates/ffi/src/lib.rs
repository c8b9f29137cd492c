//! C ABI for the quadratic Szegő simulator.
//!
//! Spectra and trajectories are opaque handles owned by the caller and
//! released with their `_free` function. Every fallible call returns an
//! [`SzStatus`]; on failure [`sz_last_error_message`] describes it. Output
//! pointers are only written on success, except for [`sz_evolve`], which
//! hands back the partial trajectory of an aborted run.
//!
//! Complex arrays cross the boundary as separate real and imaginary `double`
//! buffers.

use std::ffi::c_char;

use szego_core::flow::{self, FlowConfig, FlowRun};
use szego_core::{hankel, l1, spectrum, Integrator, RationalState, SpectrumPlus, C64};

mod status;

pub use status::{sz_clear_error, sz_last_error_message, sz_status_name, SzStatus};
use status::{guard, Failure};

/// Truncated spectrum `û(0..=N)`.
pub struct SzSpectrum(SpectrumPlus);

/// Monitored trajectory plus the last state reached.
pub struct SzTrajectory(FlowRun);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SzConserved {
    pub q: f64,
    pub m: f64,
    pub e: f64,
    pub j_re: f64,
    pub j_im: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SzIntegrator {
    Rk4 = 0,
    GaussLegendre6 = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SzFlowConfig {
    pub dt: f64,
    /// Negative values run backward in time.
    pub t_end: f64,
    pub cutoff: usize,
    pub monitor_stride: usize,
    pub spectrum_rank: usize,
    pub integrator: SzIntegrator,
}

/// One monitor row; the singular values are read with
/// [`sz_trajectory_sigma`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SzRow {
    pub t: f64,
    pub q: f64,
    pub m: f64,
    pub e: f64,
    pub abs_j: f64,
    pub h12: f64,
    pub h1: f64,
    pub bmo_proxy: f64,
    pub trace_norm_k: f64,
    pub tail: f64,
}

/// `u = b + cz/(1 − pz)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SzRational {
    pub b_re: f64,
    pub b_im: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub p_re: f64,
    pub p_im: f64,
}

impl SzRational {
    fn to_state(self) -> Result<RationalState, Failure> {
        Ok(RationalState::new(
            C64::new(self.b_re, self.b_im),
            C64::new(self.c_re, self.c_im),
            C64::new(self.p_re, self.p_im),
        )?)
    }

    fn from_state(s: &RationalState) -> Self {
        Self { b_re: s.b.re, b_im: s.b.im, c_re: s.c.re, c_im: s.c.im, p_re: s.p.re, p_im: s.p.im }
    }
}

impl From<SzFlowConfig> for FlowConfig {
    fn from(c: SzFlowConfig) -> Self {
        FlowConfig {
            dt: c.dt,
            t_end: c.t_end,
            cutoff: c.cutoff,
            monitor_stride: c.monitor_stride,
            spectrum_rank: c.spectrum_rank,
            integrator: match c.integrator {
                SzIntegrator::Rk4 => Integrator::Rk4,
                SzIntegrator::GaussLegendre6 => Integrator::GaussLegendre6,
            },
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn write<T>(p: *mut T, name: &str, value: T) -> Result<(), Failure> {
    let slot = p.as_mut().ok_or_else(|| Failure::null(name))?;
    *slot = value;
    Ok(())
}

unsafe fn out_buffer<'a>(p: *mut f64, len: usize, need: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len < need {
        return Err(Failure::new(SzStatus::BufferTooSmall, format!("`{name}` holds {len}, need {need}")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Static version string.
#[no_mangle]
pub extern "C" fn sz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a spectrum from `len ≥ 1` coefficients; the cutoff is `len − 1`.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sz_spectrum_new(
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut SzSpectrum,
) -> SzStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(Failure::null("re/im"));
        }
        if len == 0 {
            return Err(Failure::new(SzStatus::InvalidArgument, "a spectrum needs at least one coefficient"));
        }
        let (re, im) = (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len));
        let u = SpectrumPlus::new(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())?;
        write(out, "out", boxed(SzSpectrum(u)))
    })
}

/// Samples `b + cz/(1 − pz)` into modes `0..=cutoff`.
///
/// # Safety
/// `state` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_spectrum_from_rational(
    state: *const SzRational,
    cutoff: usize,
    out: *mut *mut SzSpectrum,
) -> SzStatus {
    guard(|| {
        let s = deref(state, "state")?.to_state()?;
        write(out, "out", boxed(SzSpectrum(l1::to_spectrum(&s, cutoff)?)))
    })
}

/// # Safety
/// `u` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sz_spectrum_free(u: *mut SzSpectrum) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Cutoff `N`, or 0 for NULL.
///
/// # Safety
/// `u` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sz_spectrum_cutoff(u: *const SzSpectrum) -> usize {
    u.as_ref().map_or(0, |u| u.0.cutoff())
}

/// Copies the `N + 1` coefficients into `re`/`im` (each of length `len`).
///
/// # Safety
/// `u` must be a live handle; `re`/`im` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sz_spectrum_coeffs(
    u: *const SzSpectrum,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SzStatus {
    guard(|| {
        let c = deref(u, "u")?.0.coeffs();
        let re = out_buffer(re, len, c.len(), "re")?;
        let im = out_buffer(im, len, c.len(), "im")?;
        for (k, z) in c.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// `Q`, `M`, `E` and `J`.
///
/// # Safety
/// `u` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_conserved(u: *const SzSpectrum, out: *mut SzConserved) -> SzStatus {
    guard(|| {
        let k = spectrum::conserved(&deref(u, "u")?.0);
        write(out, "out", SzConserved { q: k.q, m: k.m, e: k.e, j_re: k.j.re, j_im: k.j.im })
    })
}

/// Singular values of the `size × size` section of `K_u`, descending.
/// `written` receives `size`.
///
/// # Safety
/// `u` must be a live handle; `out` must hold `len` doubles; `written` may
/// be NULL.
#[no_mangle]
pub unsafe extern "C" fn sz_sigma_k(
    u: *const SzSpectrum,
    size: usize,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> SzStatus {
    guard(|| {
        let sigma = hankel::sigma_spectrum(&hankel::k_matrix(&deref(u, "u")?.0, size)?)?;
        let v = sigma.values();
        out_buffer(out, len, v.len(), "out")?.copy_from_slice(v);
        if let Some(w) = written.as_mut() {
            *w = v.len();
        }
        Ok(())
    })
}

/// Max-entry Lax residual on the leading `size × size` block.
///
/// # Safety
/// `u` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_lax_residual(u: *const SzSpectrum, dt: f64, size: usize, out: *mut f64) -> SzStatus {
    guard(|| write(out, "out", flow::lax_residual(&deref(u, "u")?.0, dt, size)?))
}

/// Integrates from `u0`. On a numerical abort the partial trajectory is
/// still stored in `out` and the abort status is returned; on a config
/// error `out` is untouched.
///
/// # Safety
/// `u0` and `cfg` must be readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_evolve(
    u0: *const SzSpectrum,
    cfg: *const SzFlowConfig,
    out: *mut *mut SzTrajectory,
) -> SzStatus {
    guard(|| {
        let u0 = &deref(u0, "u0")?.0;
        let cfg: FlowConfig = (*deref(cfg, "cfg")?).into();
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let mut run = flow::evolve_run(u0, &cfg, false)?;
        let failure = run.failure.take();
        *out = boxed(SzTrajectory(run));
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })
}

/// # Safety
/// `tr` must be NULL or a handle from [`sz_evolve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sz_trajectory_free(tr: *mut SzTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of monitor rows, or 0 for NULL.
///
/// # Safety
/// `tr` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sz_trajectory_len(tr: *const SzTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.0.record.rows.len())
}

/// # Safety
/// `tr` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_trajectory_row(tr: *const SzTrajectory, index: usize, out: *mut SzRow) -> SzStatus {
    guard(|| {
        let rows = &deref(tr, "tr")?.0.record.rows;
        let r = rows.get(index).ok_or_else(|| {
            Failure::new(SzStatus::InvalidArgument, format!("row {index} out of range 0..{}", rows.len()))
        })?;
        write(
            out,
            "out",
            SzRow {
                t: r.t,
                q: r.q,
                m: r.m,
                e: r.e,
                abs_j: r.abs_j,
                h12: r.h12,
                h1: r.h1,
                bmo_proxy: r.bmo_proxy,
                trace_norm_k: r.trace_norm_k,
                tail: r.tail,
            },
        )
    })
}

/// The `spectrum_rank` leading singular values of `K_u` at row `index`.
///
/// # Safety
/// `tr` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sz_trajectory_sigma(
    tr: *const SzTrajectory,
    index: usize,
    out: *mut f64,
    len: usize,
) -> SzStatus {
    guard(|| {
        let rows = &deref(tr, "tr")?.0.record.rows;
        let r = rows.get(index).ok_or_else(|| {
            Failure::new(SzStatus::InvalidArgument, format!("row {index} out of range 0..{}", rows.len()))
        })?;
        out_buffer(out, len, r.sigma.len(), "out")?.copy_from_slice(&r.sigma);
        Ok(())
    })
}

/// Copies the last state reached into a new spectrum handle.
///
/// # Safety
/// `tr` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_trajectory_final_state(tr: *const SzTrajectory, out: *mut *mut SzSpectrum) -> SzStatus {
    guard(|| {
        let u = deref(tr, "tr")?.0.final_state.clone();
        write(out, "out", boxed(SzSpectrum(u)))
    })
}

/// A resonant `L(1)` state with the given `Q`, `M` and `|p|`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sz_find_blowup_initial(q: f64, m: f64, p_abs: f64, out: *mut SzRational) -> SzStatus {
    guard(|| write(out, "out", SzRational::from_state(&l1::find_blowup_initial(q, m, p_abs)?)))
}

/// `E − ½Q³` of an `L(1)` state.
///
/// # Safety
/// `state` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sz_resonance_residual(state: *const SzRational, out: *mut f64) -> SzStatus {
    guard(|| {
        let s = deref(state, "state")?.to_state()?;
        write(out, "out", l1::resonance_residual(&s))
    })
}

/// `κ = Q^{3/2}√(4M − Q)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sz_kappa(q: f64, m: f64, out: *mut f64) -> SzStatus {
    guard(|| write(out, "out", l1::kappa(q, m)?))
}

/// Signed blow-up time of the mean-mode model.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sz_tilde_e_demo(x0: f64, y0: f64, q: f64, dt: f64, out: *mut f64) -> SzStatus {
    guard(|| write(out, "out", flow::tilde_e_demo(x0, y0, q, dt)?))
}
