//! Moore–Penrose pseudoinverses by two independent routes, kernel projectors,
//! and the degree-0 multiplier `w ↦ A†(ξ)w ⊗ ((iξ)^α)_{|α|=k}`.
//!
//! The SVD route inverts the singular values above a relative threshold.
//! The Decell route only uses matrix products and the characteristic
//! polynomial of `AA*`:
//!
//! ```text
//! A† = -(1/a_r) A* Σ_{i=1..r} a_{i-1} (AA*)^{r-i},   det(λ - AA*) = Σ_j a_j λ^{d-j}
//! ```
//!
//! (or the mirrored form through `A*A` when `A` is tall).

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    check_tolerance, ensure_finite, hermitian_deviation, identity, op_norm, ComplexMatrix,
    ComplexVector, FullSvd, LinalgError,
};
use crate::operator::{i_xi_pow, MultiIndex, Operator, OperatorError};
use crate::ranklab::numerical_rank;

/// Hermitian check threshold for `char_poly_coeffs`, relative to `max(1, ‖B‖)`.
const HERMITIAN_TOL: f64 = 1e-10;
/// `|a_r|` below this fraction of `max|a_j|` makes the Decell route unusable.
const DECELL_COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PinvError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("multiplier is undefined at the zero frequency")]
    ZeroFrequency,
}

/// Pseudoinverse from the singular value decomposition. Singular values at or
/// below `tol * σ_max` are treated as zero.
pub fn pinv_svd(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    check_tolerance(tol)?;
    let svd = FullSvd::new(m)?;
    let rank = svd.rank(tol);
    let mut out = ComplexMatrix::zeros(m.ncols(), m.nrows());
    for j in 0..rank {
        let inv = Complex64::new(1.0 / svd.values[j], 0.0);
        out += svd.v.column(j) * inv * svd.u.column(j).adjoint();
    }
    Ok(out)
}

/// Coefficients `a_0..a_d` of `det(λI - B) = Σ_j a_j λ^{d-j}` by the
/// Faddeev–LeVerrier trace recursion. `a_0 = 1`.
pub fn char_poly_coeffs(b: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    ensure_finite(b)?;
    assert!(b.is_square(), "characteristic polynomial needs a square matrix");
    let deviation = hermitian_deviation(b);
    if deviation > HERMITIAN_TOL * b.norm().max(1.0) {
        return Err(LinalgError::NotHermitian { deviation });
    }
    let d = b.nrows();
    let mut coeffs = Vec::with_capacity(d + 1);
    coeffs.push(1.0);
    // M_1 = I, a_k = -tr(B M_k)/k, M_{k+1} = B M_k + a_k I
    let mut m = identity(d);
    for k in 1..=d {
        let bm = b * &m;
        let a_k = -bm.trace().re / k as f64;
        coeffs.push(a_k);
        m = bm + identity(d) * Complex64::new(a_k, 0.0);
    }
    Ok(coeffs)
}

/// Pseudoinverse by Decell's formula for a matrix of (numerical) rank `rank`.
///
/// The matrix is scaled to unit Frobenius norm first; the pseudoinverse is
/// homogeneous of degree -1 so the scale is restored exactly afterwards.
///
/// The trace recursion loses accuracy quickly with the condition number
/// (1e-9 residuals already at cond ~ 1e2 for 6x5 inputs), so the result is
/// polished with one Newton–Schulz step `X ← 2X − XAX`. `A†` is its fixed
/// point, convergence is quadratic and the range of `X` is kept.
pub fn pinv_decell(a: &ComplexMatrix, rank: usize) -> Result<ComplexMatrix, LinalgError> {
    ensure_finite(a)?;
    let (rows, cols) = a.shape();
    if rank == 0 {
        return Ok(ComplexMatrix::zeros(cols, rows));
    }
    if rank > rows.min(cols) {
        return Err(LinalgError::RankTooLarge { rank, rows, cols });
    }
    let scale = a.norm();
    if scale == 0.0 {
        return Err(LinalgError::IllConditioned { rank, value: 0.0 });
    }
    let a_n = a / Complex64::new(scale, 0.0);
    let a_star = a_n.adjoint();
    // Work with the smaller Gram matrix: A† = A*(AA*)† = (A*A)†A*.
    let wide = rows <= cols;
    let gram = if wide { &a_n * &a_star } else { &a_star * &a_n };
    let dim = gram.nrows();
    let coeffs = char_poly_coeffs(&gram)?;
    let a_r = coeffs[rank];
    let coeff_scale = coeffs.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    if a_r.abs() < DECELL_COEFF_TOL * coeff_scale {
        return Err(LinalgError::IllConditioned { rank, value: a_r });
    }
    // Horner: S = a_0 G^{r-1} + a_1 G^{r-2} + ... + a_{r-1} I
    let mut sum = identity(dim) * Complex64::new(coeffs[0], 0.0);
    for &c in &coeffs[1..rank] {
        sum = &gram * sum + identity(dim) * Complex64::new(c, 0.0);
    }
    let factor = Complex64::new(-1.0 / a_r, 0.0);
    let pinv_n = if wide { a_star * sum * factor } else { sum * a_star * factor };
    let pinv_n = &pinv_n * Complex64::new(2.0, 0.0) - &pinv_n * &a_n * &pinv_n;
    Ok(pinv_n / Complex64::new(scale, 0.0))
}

/// Orthogonal projector onto `ker A`, i.e. `I - A†A`. Equals the identity for `A = 0`.
pub fn kernel_projector(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    check_tolerance(tol)?;
    let svd = FullSvd::new(a)?;
    let rank = svd.rank(tol);
    let kernel = svd.kernel_basis(rank);
    Ok(&kernel * kernel.adjoint())
}

/// Value of the composite multiplier at one frequency.
///
/// Rows are indexed by `(component j of V, multi-index α)` with
/// `row = j * T + t`, where `t` enumerates [`MultiIndex::all_of_degree`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierValue {
    pub matrix: ComplexMatrix,
    pub dim_v: usize,
    pub indices: Vec<MultiIndex>,
}

impl MultiplierValue {
    /// Multinomial weight `k!/α!` of every row.
    pub fn row_weights(&self) -> Vec<f64> {
        derivative_weights(self.dim_v, &self.indices)
    }

    pub fn apply(&self, w: &ComplexVector) -> ComplexVector {
        &self.matrix * w
    }

    /// Operator norm with respect to the weighted derivative-array norm.
    pub fn weighted_norm(&self) -> f64 {
        let weights = self.row_weights();
        let mut scaled = self.matrix.clone();
        for (r, w) in weights.iter().enumerate() {
            scaled.row_mut(r).scale_mut(w.sqrt());
        }
        op_norm(&scaled)
    }
}

/// Multinomial weights for a derivative array with `dim_v` components.
pub fn derivative_weights(dim_v: usize, indices: &[MultiIndex]) -> Vec<f64> {
    let per: Vec<f64> = indices.iter().map(MultiIndex::multinomial).collect();
    (0..dim_v).flat_map(|_| per.iter().copied()).collect()
}

/// Pseudoinverse of the symbol with rank from [`numerical_rank`], via Decell
/// with an SVD fallback when the Decell coefficients are ill conditioned.
pub fn symbol_pinv(op: &Operator, xi: &[f64], tol: f64) -> Result<ComplexMatrix, PinvError> {
    let a = op.symbol(xi)?;
    let rank = numerical_rank(&a, tol)?;
    match pinv_decell(&a, rank) {
        Ok(p) => Ok(p),
        Err(LinalgError::IllConditioned { .. }) => Ok(pinv_svd(&a, tol)?),
        Err(e) => Err(e.into()),
    }
}

/// `w ↦ A†(ξ)w ⊗ ((iξ)^α)_{|α|=k}`.
pub fn multiplier(op: &Operator, xi: &[f64], tol: f64) -> Result<MultiplierValue, PinvError> {
    if xi.len() == op.n() && xi.iter().all(|&x| x == 0.0) {
        return Err(PinvError::ZeroFrequency);
    }
    let dagger = symbol_pinv(op, xi, tol)?;
    let indices = MultiIndex::all_of_degree(op.n(), op.k());
    let t = indices.len();
    let factors: Vec<Complex64> = indices.iter().map(|a| i_xi_pow(a, xi)).collect();
    let mut matrix = ComplexMatrix::zeros(op.dim_v() * t, op.dim_w());
    for j in 0..op.dim_v() {
        for (ti, f) in factors.iter().enumerate() {
            let row = dagger.row(j) * *f;
            matrix.set_row(j * t + ti, &row);
        }
    }
    Ok(MultiplierValue {
        matrix,
        dim_v: op.dim_v(),
        indices,
    })
}
