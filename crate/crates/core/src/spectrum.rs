//! Truncated Hardy-space symbols on the circle.
//!
//! A [`SpectrumPlus`] stores the Fourier coefficients `û(0), …, û(N)` of a
//! function with no negative frequencies. Everything above the cutoff is
//! implicitly zero. Products are Galerkin-truncated back to modes `0..=N`.
//!
//! The public products here use direct coefficient convolution so that
//! structural identities (Hermitian symmetry, `mode 0 = Q`, cutoff padding)
//! hold bit-for-bit. The flow uses the FFT path in [`crate::conv`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Coefficients `û(0..=N)` of `u ∈ L²₊(𝕋)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumPlus {
    coeffs: Vec<C64>,
}

impl SpectrumPlus {
    /// Builds a spectrum from `N+1` finite coefficients.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a spectrum needs at least the mode 0"));
        }
        if let Some(n) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid(format!("coefficient {n} is not finite")));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self { coeffs: vec![ZERO; cutoff + 1] }
    }

    /// Sparse constructor; modes above the cutoff are rejected.
    pub fn from_modes(cutoff: usize, modes: &[(usize, C64)]) -> Result<Self> {
        let mut out = Self::zeros(cutoff);
        for &(n, c) in modes {
            if n > cutoff {
                return Err(Error::invalid(format!("mode {n} exceeds cutoff {cutoff}")));
            }
            out.coeffs[n] += c;
        }
        Self::new(out.coeffs)
    }

    /// `z^k` at the given cutoff.
    pub fn monomial(k: usize, cutoff: usize) -> Result<Self> {
        Self::from_modes(cutoff, &[(k, C64::new(1.0, 0.0))])
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// `û(n)`, zero above the cutoff.
    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    /// Zero-pads (or rejects shrinking) to a larger cutoff.
    pub fn padded(&self, cutoff: usize) -> Result<Self> {
        if cutoff < self.cutoff() {
            return Err(Error::invalid(format!(
                "cannot pad cutoff {} down to {cutoff}",
                self.cutoff()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(cutoff + 1, ZERO);
        Ok(Self { coeffs })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_cutoffs(self, other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_cutoffs(self, other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    /// `(u|v) = Σ û(n) conj(v̂(n))`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_cutoffs(self, other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<C64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }
}

fn check_cutoffs(u: &SpectrumPlus, v: &SpectrumPlus) -> Result<()> {
    if u.cutoff() != v.cutoff() {
        return Err(Error::CutoffMismatch { left: u.cutoff(), right: v.cutoff() });
    }
    Ok(())
}

/// Coefficients of a symbol with modes `-N..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSidedSpectrum {
    cutoff: usize,
    // index n + cutoff holds mode n
    coeffs: Vec<C64>,
}

impl TwoSidedSpectrum {
    /// `coeffs[i]` is mode `i - cutoff`; exactly `2N+1` finite entries.
    pub fn new(cutoff: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * cutoff + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * cutoff + 1, got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("two-sided spectrum has non-finite entries"));
        }
        Ok(Self { cutoff, coeffs })
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self { cutoff, coeffs: vec![ZERO; 2 * cutoff + 1] }
    }

    pub fn from_modes(cutoff: usize, modes: &[(isize, C64)]) -> Result<Self> {
        let mut out = Self::zeros(cutoff);
        for &(m, c) in modes {
            if m.unsigned_abs() > cutoff {
                return Err(Error::invalid(format!("mode {m} exceeds cutoff {cutoff}")));
            }
            out.coeffs[(m + cutoff as isize) as usize] += c;
        }
        Self::new(cutoff, out.coeffs)
    }

    /// Views a nonnegative-frequency spectrum as a two-sided one.
    pub fn embed(u: &SpectrumPlus) -> Self {
        let n = u.cutoff();
        let mut out = Self::zeros(n);
        out.coeffs[n..].copy_from_slice(u.coeffs());
        out
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Mode `m`; zero outside `-N..=N`.
    pub fn mode(&self, m: isize) -> C64 {
        if m.unsigned_abs() > self.cutoff {
            ZERO
        } else {
            self.coeffs[(m + self.cutoff as isize) as usize]
        }
    }

    /// Symbol of `f̄`: mode `m` becomes `conj(f̂(-m))`.
    pub fn conj(&self) -> Self {
        Self { cutoff: self.cutoff, coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect() }
    }

    /// Multiplication by `z̄` (all modes move down by one). The cutoff grows
    /// by one so nothing is lost.
    pub fn times_zbar(&self) -> Self {
        let n = self.cutoff + 1;
        let mut out = Self::zeros(n);
        for m in -(self.cutoff as isize)..=self.cutoff as isize {
            out.coeffs[(m - 1 + n as isize) as usize] = self.mode(m);
        }
        out
    }

    /// `(I − Π)f`: keeps the strictly negative modes.
    pub fn anti_analytic_part(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs[self.cutoff..] {
            *c = ZERO;
        }
        out
    }
}

/// `Π f`: modes `0..=N` of `f`.
pub fn project_szego(f: &TwoSidedSpectrum) -> SpectrumPlus {
    SpectrumPlus::from_vec_unchecked(f.coeffs[f.cutoff..].to_vec())
}

/// Galerkin-truncated product `Π_{≤N}(u v)`.
pub fn multiply(u: &SpectrumPlus, v: &SpectrumPlus) -> Result<SpectrumPlus> {
    check_cutoffs(u, v)?;
    let n = u.cutoff();
    let (a, b) = (u.coeffs(), v.coeffs());
    let coeffs = (0..=n)
        .map(|m| (0..=m).map(|j| a[j] * b[m - j]).sum())
        .collect();
    Ok(SpectrumPlus::from_vec_unchecked(coeffs))
}

/// Exact two-sided spectrum of `|u|²`.
pub fn mod_squared(u: &SpectrumPlus) -> TwoSidedSpectrum {
    let n = u.cutoff();
    let a = u.coeffs();
    let mut out = TwoSidedSpectrum::zeros(n);
    for m in 0..=n {
        let s: C64 = (0..=n - m).map(|k| a[k + m] * a[k].conj()).sum();
        out.coeffs[n + m] = s;
        if m > 0 {
            out.coeffs[n - m] = s.conj();
        }
    }
    out
}

/// `J = (u²|u) = Σ_{j,k} û(j) û(k) conj(û(j+k))`.
///
/// Only pairs with `j + k ≤ N` contribute since `û` vanishes above the
/// cutoff, so truncating `u²` at `N` loses nothing and zero-padding `u`
/// leaves the sum (and its evaluation order) unchanged.
pub fn compute_j(u: &SpectrumPlus) -> C64 {
    let a = u.coeffs();
    let n = u.cutoff();
    let mut acc = ZERO;
    for j in 0..=n {
        for k in 0..=n - j {
            acc += a[j] * a[k] * a[j + k].conj();
        }
    }
    acc
}

/// Mass, momentum, energy and the factor `J`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    pub q: f64,
    pub m: f64,
    pub e: f64,
    pub j: C64,
}

impl ConservedSet {
    pub fn from_j(q: f64, m: f64, j: C64) -> Self {
        Self { q, m, e: 0.5 * j.norm_sqr(), j }
    }
}

pub fn mass(u: &SpectrumPlus) -> f64 {
    u.coeffs().iter().map(|c| c.norm_sqr()).sum()
}

pub fn momentum(u: &SpectrumPlus) -> f64 {
    u.coeffs().iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
}

pub fn conserved(u: &SpectrumPlus) -> ConservedSet {
    ConservedSet::from_j(mass(u), momentum(u), compute_j(u))
}

/// `(Σ (1+n)^{2s} |û(n)|²)^{1/2}`; with this weight `‖u‖²_{H^{1/2}} = Q + M`.
pub fn sobolev_norm(u: &SpectrumPlus, s: f64) -> f64 {
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| (1.0 + n as f64).powf(2.0 * s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `S*u`: `(S*u)^(n) = û(n+1)`, top mode zeroed.
pub fn shift_adjoint(u: &SpectrumPlus) -> SpectrumPlus {
    let mut coeffs = u.coeffs()[1..].to_vec();
    coeffs.push(ZERO);
    SpectrumPlus::from_vec_unchecked(coeffs)
}

/// Convolution with the Poisson kernel `P_r`: `û(n) ↦ rⁿ û(n)`.
pub fn poisson_smooth(u: &SpectrumPlus, r: f64) -> Result<SpectrumPlus> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!("Poisson radius {r} outside [0, 1]")));
    }
    let mut weight = 1.0;
    let coeffs = u
        .coeffs()
        .iter()
        .map(|c| {
            let out = c * weight;
            weight *= r;
            out
        })
        .collect();
    Ok(SpectrumPlus::from_vec_unchecked(coeffs))
}
