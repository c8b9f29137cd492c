//! Finite sections of Hankel, shifted-Hankel and Toeplitz operators.
//!
//! An antilinear operator `K` is stored as the complex matrix `A` with
//! `K h = A · conj(h)`. Composition rules:
//!
//! * linear `B` after antilinear `A`: matrix `B · A`;
//! * antilinear `A` after linear `B`: matrix `A · conj(B)`.
//!
//! For a complex symmetric `A`, `K² h = A · conj(A) · h` and
//! `A · conj(A) = A · A*`, so the eigenvalues of `K²` are the squared
//! singular values of `A`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectrum::{compute_j, SpectrumPlus, TwoSidedSpectrum, C64, ZERO};

pub type CMatrix = DMatrix<C64>;

/// Matrix `A` of the antilinear map `h ↦ A · conj(h)`; Hankel-structured,
/// hence complex symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct AntilinearHankel {
    matrix: CMatrix,
}

impl AntilinearHankel {
    /// Wraps a square matrix after checking `A = Aᵀ` exactly.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("antilinear Hankel matrix must be square"));
        }
        if matrix != matrix.transpose() {
            return Err(Error::invalid("antilinear Hankel matrix must be complex symmetric"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `h ↦ A · conj(h)`.
    pub fn apply(&self, h: &[C64]) -> Result<Vec<C64>> {
        apply_antilinear(self, h)
    }
}

/// Lower-triangular-plus-upper Toeplitz matrix, `T(j,k) = b̂(j − k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzOp {
    matrix: CMatrix,
}

impl ToeplitzOp {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Singular values in nonincreasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSpectrum {
    values: Vec<f64>,
}

impl SigmaSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// σ₁, or 0 for an empty spectrum.
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `σ_k` (1-based), zero past the end.
    pub fn get(&self, k: usize) -> f64 {
        k.checked_sub(1).and_then(|i| self.values.get(i)).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|s| s * s).sum()
    }
}

fn check_size(size: usize, available: usize) -> Result<()> {
    if size > available {
        return Err(Error::invalid(format!(
            "matrix size {size} exceeds the {available} available coefficients"
        )));
    }
    Ok(())
}

fn hankel_from_symbol(u: &SpectrumPlus, size: usize, offset: usize) -> Result<AntilinearHankel> {
    check_size(size, u.cutoff() + 1)?;
    let matrix = CMatrix::from_fn(size, size, |j, k| u.coeff(j + k + offset));
    Ok(AntilinearHankel { matrix })
}

/// `H_u`: entries `û(j+k)`, `0 ≤ j,k < size`.
pub fn hankel_matrix(u: &SpectrumPlus, size: usize) -> Result<AntilinearHankel> {
    hankel_from_symbol(u, size, 0)
}

/// `K_u = S*H_u = H_{S*u}`: entries `û(j+k+1)`.
pub fn k_matrix(u: &SpectrumPlus, size: usize) -> Result<AntilinearHankel> {
    hankel_from_symbol(u, size, 1)
}

/// `T_b`: entries `b̂(j − k)`.
pub fn toeplitz_matrix(b: &TwoSidedSpectrum, size: usize) -> Result<ToeplitzOp> {
    check_size(size, b.cutoff() + 1)?;
    let matrix = CMatrix::from_fn(size, size, |j, k| b.mode(j as isize - k as isize));
    Ok(ToeplitzOp { matrix })
}

/// Lax operator `B_u = −i(T_{J̄u} + T_{Jū})`, skew-adjoint.
pub fn b_u_matrix(u: &SpectrumPlus, size: usize) -> Result<ToeplitzOp> {
    check_size(size, u.cutoff() + 1)?;
    let j = compute_j(u);
    let minus_i = C64::new(0.0, -1.0);
    let matrix = CMatrix::from_fn(size, size, |r, c| {
        let mut v = ZERO;
        if r >= c {
            v += j.conj() * u.coeff(r - c);
        }
        if c >= r {
            v += j * u.coeff(c - r).conj();
        }
        minus_i * v
    });
    Ok(ToeplitzOp { matrix })
}

/// Matrix of the commutator `[B, K] = B∘K − K∘B` for linear `B` and
/// antilinear `K`: `B·A − A·conj(B)`.
pub fn lax_commutator(b: &ToeplitzOp, k: &AntilinearHankel) -> Result<CMatrix> {
    if b.size() != k.size() {
        return Err(Error::DimensionMismatch { expected: k.size(), got: b.size() });
    }
    Ok(&b.matrix * &k.matrix - &k.matrix * b.matrix.map(|x| x.conj()))
}

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// Singular values of `A` (the `σ_k` whose squares are the eigenvalues
/// of `K²`).
pub fn sigma_spectrum(k: &AntilinearHankel) -> Result<SigmaSpectrum> {
    let n = k.size();
    if n == 0 {
        return Ok(SigmaSpectrum { values: Vec::new() });
    }
    let svd = k
        .matrix
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SvdFailed { size: n })?;
    let mut values: Vec<f64> = svd.singular_values.iter().map(|s| s.max(0.0)).collect();
    if values.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdFailed { size: n });
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SigmaSpectrum { values })
}

/// Eigenvalues of `A · conj(A)` (Hermitian since `A` is symmetric), sorted
/// nonincreasing. Independent route to `σ_k²`.
pub fn k_squared_eigenvalues(k: &AntilinearHankel) -> Vec<f64> {
    let prod = &k.matrix * k.matrix.map(|x| x.conj());
    let herm = (&prod + prod.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `σ₁(H_u)` at the given size: a lower bound for `‖u‖_BMO` that grows
/// with the size.
pub fn bmo_proxy(u: &SpectrumPlus, size: usize) -> Result<f64> {
    Ok(sigma_spectrum(&hankel_matrix(u, size)?)?.largest())
}

/// `tr|K| = Σ σ_k`.
pub fn trace_norm(k: &AntilinearHankel) -> Result<f64> {
    Ok(sigma_spectrum(k)?.sum())
}

pub fn apply_antilinear(a: &AntilinearHankel, h: &[C64]) -> Result<Vec<C64>> {
    let n = a.size();
    if h.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h.len() });
    }
    Ok((0..n)
        .map(|j| (0..n).map(|k| a.matrix[(j, k)] * h[k].conj()).sum())
        .collect())
}

/// Entrywise max modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}
