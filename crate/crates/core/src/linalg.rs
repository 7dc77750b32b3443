//! Dense complex linear algebra shared by the symbol, rank and pseudoinverse code.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix: values of symbols, adjoints, pseudoinverses and projectors.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("relative tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("Decell coefficient a_{rank} = {value:e} is too small relative to the coefficient scale")]
    IllConditioned { rank: usize, value: f64 },
    #[error("requested rank {rank} exceeds matrix dimensions {rows}x{cols}")]
    RankTooLarge { rank: usize, rows: usize, cols: usize },
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_finite(m: &ComplexMatrix) -> Result<(), LinalgError> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

pub(crate) fn check_tolerance(tol: f64) -> Result<(), LinalgError> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(LinalgError::InvalidTolerance(tol))
    }
}

/// Singular value decomposition with complete singular bases.
///
/// `u` is `rows x rows`, `v` is `cols x cols` and `values` holds the
/// `min(rows, cols)` singular values in descending order, matched to the
/// leading columns of `u` and `v`. Columns of `v` past the rank span the
/// kernel; columns of `u` past the rank span the cokernel.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub u: ComplexMatrix,
    pub values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl FullSvd {
    pub fn new(m: &ComplexMatrix) -> Result<Self, LinalgError> {
        ensure_finite(m)?;
        let (rows, cols) = m.shape();
        let size = rows.max(cols);
        // Zero padding to a square matrix makes the thin SVD return complete bases.
        let mut square = ComplexMatrix::zeros(size, size);
        square.view_mut((0, 0), (rows, cols)).copy_from(m);
        let svd = square.svd(true, true);
        let u_sq = svd.u.expect("left singular vectors requested");
        let v_sq = svd
            .v_t
            .expect("right singular vectors requested")
            .adjoint();

        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        // Padded rows carry nothing, so singular vectors paired with nonzero
        // singular values already live in the original spaces. Bases for the
        // zero part are completed from the original row/column spaces.
        let mut u_cols: Vec<ComplexVector> = order.iter().map(|&j| u_sq.column(j).into()).collect();
        let mut v_cols: Vec<ComplexVector> = order.iter().map(|&j| v_sq.column(j).into()).collect();
        let values: Vec<f64> = order
            .iter()
            .take(rows.min(cols))
            .map(|&j| svd.singular_values[j])
            .collect();

        let u = if rows == size {
            columns_to_matrix(rows, &u_cols)
        } else {
            complete_basis(rows, &mut u_cols, &values)
        };
        let v = if cols == size {
            columns_to_matrix(cols, &v_cols)
        } else {
            complete_basis(cols, &mut v_cols, &values)
        };
        Ok(Self { u, values, v })
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let cutoff = tol * self.max_value();
        self.values.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }

    /// Orthonormal basis of the kernel for a given rank, as columns.
    pub fn kernel_basis(&self, rank: usize) -> ComplexMatrix {
        let cols = self.v.ncols();
        self.v.columns(rank, cols - rank).into_owned()
    }
}

fn columns_to_matrix(dim: usize, cols: &[ComplexVector]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, &c.rows(0, dim));
    }
    out
}

/// The padded factor has `size` columns of which only `dim` live in the
/// original space: keep the ones paired with nonzero singular values and
/// complete them with Gram-Schmidt against the standard basis.
fn complete_basis(dim: usize, padded: &mut [ComplexVector], values: &[f64]) -> ComplexMatrix {
    let cutoff = f64::EPSILON * values.first().copied().unwrap_or(0.0) * (dim as f64);
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(dim);
    for (j, col) in padded.iter().enumerate() {
        if j < values.len() && values[j] > cutoff {
            basis.push(col.rows(0, dim).into_owned());
        }
    }
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut cand = ComplexVector::zeros(dim);
        cand[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&cand);
                cand -= b * proj;
            }
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            basis.push(cand / Complex64::new(norm, 0.0));
        }
    }
    columns_to_matrix(dim, &basis)
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Largest absolute entrywise deviation; used by the closed-form tests.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn from_real(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
