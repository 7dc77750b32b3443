//! Periodic grid fields on the torus `[0, 2π)^n` and Fourier multipliers.
//!
//! Fourier coefficients use the normalization
//!
//! ```text
//! φ̂(ξ) = (2π)^{n/2} N^{-n} Σ_x φ(x) e^{-i x·ξ},     φ(x) = (2π)^{-n/2} Σ_ξ φ̂(ξ) e^{i x·ξ}
//! ```
//!
//! which is unitary from the grid `L²` norm (Riemann sum with cell volume
//! `(2π/N)^n`) to the `ℓ²` norm of the coefficients. Frequencies are integer
//! vectors in `[-N/2, N/2)^n`.
//!
//! Data layout is row-major by grid point (axis 0 slowest), then fiber
//! component. Fields produced by [`apply_dk`] carry multinomial fiber weights
//! so that `|D̂^kφ(ξ)| = |ξ|^k |φ̂(ξ)|` holds exactly.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{ComplexMatrix, ComplexVector, LinalgError};
use crate::operator::{i_xi_pow, MultiIndex, Operator, OperatorError};
use crate::pinv::{derivative_weights, kernel_projector, multiplier, PinvError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid needs n >= 1 and N a power of two with N >= 4 (got n = {n}, N = {size})")]
    InvalidGrid { n: usize, size: usize },
    #[error("fiber dimension mismatch: expected {expected}, found {found}")]
    FiberMismatch { expected: usize, found: usize },
    #[error("operator acts on R^{expected} but the grid is {found}-dimensional")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field data has length {found}, expected {expected}")]
    DataLength { expected: usize, found: usize },
    #[error("field has non-finite samples")]
    NonFinite,
    #[error("L^p exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("band limit {max_freq} must lie in 1..={limit} (N/4)")]
    BandTooWide { max_freq: usize, limit: usize },
    #[error("malformed field document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Pinv(#[from] PinvError),
}

/// Uniform grid with `size` samples per axis on `[0, 2π)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    size: usize,
}

impl Grid {
    pub fn new(n: usize, size: usize) -> Result<Self, SpectralError> {
        if n == 0 || size < 4 || !size.is_power_of_two() {
            return Err(SpectralError::InvalidGrid { n, size });
        }
        Ok(Self { n, size })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn points(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.size as f64).powi(self.n as i32)
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for d in (0..self.n).rev() {
            idx[d] = flat % self.size;
            flat /= self.size;
        }
        idx
    }

    /// Physical coordinates of a grid point.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let h = 2.0 * PI / self.size as f64;
        self.multi_index(flat).into_iter().map(|i| i as f64 * h).collect()
    }

    /// Integer frequency stored at a flat index.
    pub fn frequency(&self, flat: usize) -> Vec<i64> {
        let half = self.size / 2;
        self.multi_index(flat)
            .into_iter()
            .map(|i| if i < half { i as i64 } else { i as i64 - self.size as i64 })
            .collect()
    }

    pub fn frequency_index(&self, freq: &[i64]) -> Option<usize> {
        if freq.len() != self.n {
            return None;
        }
        let half = (self.size / 2) as i64;
        let mut flat = 0;
        for &f in freq {
            if f < -half || f >= half {
                return None;
            }
            flat = flat * self.size + f.rem_euclid(self.size as i64) as usize;
        }
        Some(flat)
    }

    fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.points())
            .map(|i| self.frequency(i).into_iter().map(|f| f as f64).collect())
            .collect()
    }
}

fn check_data(grid: &Grid, fiber_dim: usize, data: &[Complex64]) -> Result<(), SpectralError> {
    let expected = grid.points() * fiber_dim;
    if data.len() != expected {
        return Err(SpectralError::DataLength {
            expected,
            found: data.len(),
        });
    }
    if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    Ok(())
}

/// Complex vector-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    fiber_dim: usize,
    weights: Vec<f64>,
    data: Vec<Complex64>,
}

/// Fourier coefficients of a [`GridField`], same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyField {
    grid: Grid,
    fiber_dim: usize,
    weights: Vec<f64>,
    data: Vec<Complex64>,
}

macro_rules! field_common {
    ($ty:ident) => {
        impl $ty {
            pub fn new(grid: Grid, fiber_dim: usize, data: Vec<Complex64>) -> Result<Self, SpectralError> {
                check_data(&grid, fiber_dim, &data)?;
                Ok(Self {
                    grid,
                    fiber_dim,
                    weights: vec![1.0; fiber_dim],
                    data,
                })
            }

            pub fn zeros(grid: Grid, fiber_dim: usize) -> Self {
                Self {
                    grid,
                    fiber_dim,
                    weights: vec![1.0; fiber_dim],
                    data: vec![Complex64::new(0.0, 0.0); grid.points() * fiber_dim],
                }
            }

            /// Replaces the fiber weights of the pointwise norm.
            pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
                assert_eq!(weights.len(), self.fiber_dim, "one weight per fiber component");
                self.weights = weights;
                self
            }

            pub fn grid(&self) -> &Grid {
                &self.grid
            }

            pub fn fiber_dim(&self) -> usize {
                self.fiber_dim
            }

            pub fn weights(&self) -> &[f64] {
                &self.weights
            }

            pub fn data(&self) -> &[Complex64] {
                &self.data
            }

            pub fn fiber(&self, point: usize) -> &[Complex64] {
                &self.data[point * self.fiber_dim..(point + 1) * self.fiber_dim]
            }

            #[allow(dead_code)]
            fn fiber_mut(&mut self, point: usize) -> &mut [Complex64] {
                let f = self.fiber_dim;
                &mut self.data[point * f..(point + 1) * f]
            }

            /// Weighted squared Euclidean norm of the fiber at one point.
            pub fn pointwise_norm_sqr(&self, point: usize) -> f64 {
                self.fiber(point)
                    .iter()
                    .zip(&self.weights)
                    .map(|(z, w)| w * z.norm_sqr())
                    .sum()
            }

            pub fn scale(&self, c: Complex64) -> Self {
                let mut out = self.clone();
                out.data.iter_mut().for_each(|z| *z *= c);
                out
            }

            pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
                self.check_same_shape(other)?;
                let mut out = self.clone();
                out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
                Ok(out)
            }

            pub fn add(&self, other: &Self) -> Result<Self, SpectralError> {
                self.check_same_shape(other)?;
                let mut out = self.clone();
                out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
                Ok(out)
            }

            fn check_same_shape(&self, other: &Self) -> Result<(), SpectralError> {
                if self.grid != other.grid {
                    return Err(SpectralError::DimensionMismatch {
                        expected: self.grid.n,
                        found: other.grid.n,
                    });
                }
                if self.fiber_dim != other.fiber_dim {
                    return Err(SpectralError::FiberMismatch {
                        expected: self.fiber_dim,
                        found: other.fiber_dim,
                    });
                }
                Ok(())
            }

            /// Largest pointwise difference in the unweighted fiber norm.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.data
                    .iter()
                    .zip(&other.data)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            }

            /// Euclidean norm of the raw data vector.
            pub fn data_norm(&self) -> f64 {
                self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }
        }
    };
}

field_common!(GridField);
field_common!(FrequencyField);

impl GridField {
    pub fn from_fn(
        grid: Grid,
        fiber_dim: usize,
        mut f: impl FnMut(&[f64], usize) -> Complex64,
    ) -> Result<Self, SpectralError> {
        let mut data = Vec::with_capacity(grid.points() * fiber_dim);
        for p in 0..grid.points() {
            let x = grid.coordinates(p);
            for c in 0..fiber_dim {
                data.push(f(&x, c));
            }
        }
        Self::new(grid, fiber_dim, data)
    }

    /// Average over the torus, per fiber component.
    pub fn mean(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.fiber_dim];
        for p in 0..self.grid.points() {
            for (a, z) in acc.iter_mut().zip(self.fiber(p)) {
                *a += z;
            }
        }
        let count = self.grid.points() as f64;
        acc.into_iter().map(|a| a / count).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn to_document(&self) -> FieldDocument {
        FieldDocument {
            n: self.grid.n,
            size: self.grid.size,
            fiber_dim: self.fiber_dim,
            layout: FIELD_LAYOUT.to_string(),
            weights: self.weights.clone(),
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_document(doc: &FieldDocument) -> Result<Self, SpectralError> {
        if doc.layout != FIELD_LAYOUT {
            return Err(SpectralError::Malformed(format!("unsupported layout `{}`", doc.layout)));
        }
        if doc.weights.len() != doc.fiber_dim {
            return Err(SpectralError::Malformed("one weight per fiber component".into()));
        }
        let grid = Grid::new(doc.n, doc.size)?;
        let data = doc.data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(Self::new(grid, doc.fiber_dim, data)?.with_weights(doc.weights.clone()))
    }
}

impl FrequencyField {
    pub fn coefficient(&self, freq: &[i64]) -> Option<&[Complex64]> {
        self.grid.frequency_index(freq).map(|i| self.fiber(i))
    }

    /// Weighted `ℓ²` norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        (0..self.grid.points())
            .map(|p| self.pointwise_norm_sqr(p))
            .sum::<f64>()
            .sqrt()
    }

    /// Frequencies carrying a coefficient above `threshold` in some component.
    pub fn support(&self, threshold: f64) -> Vec<Vec<i64>> {
        (0..self.grid.points())
            .filter(|&p| self.fiber(p).iter().any(|z| z.norm() > threshold))
            .map(|p| self.grid.frequency(p))
            .collect()
    }
}

const FIELD_LAYOUT: &str = "row-major by grid point, then fiber component";

/// Text snapshot of a grid field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDocument {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    pub fiber_dim: usize,
    pub layout: String,
    pub weights: Vec<f64>,
    pub data: Vec<[f64; 2]>,
}

fn fft_in_place(grid: &Grid, fiber_dim: usize, data: &mut [Complex64], inverse: bool) {
    let size = grid.size;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    };
    let points = grid.points();
    let lines = points / size;
    let mut buf = vec![Complex64::new(0.0, 0.0); points];
    for axis in 0..grid.n {
        let inner = size.pow((grid.n - 1 - axis) as u32);
        for c in 0..fiber_dim {
            for line in 0..lines {
                let (outer, inner_idx) = (line / inner, line % inner);
                let base = outer * size * inner + inner_idx;
                for j in 0..size {
                    buf[line * size + j] = data[(base + j * inner) * fiber_dim + c];
                }
            }
            fft.process(&mut buf);
            for line in 0..lines {
                let (outer, inner_idx) = (line / inner, line % inner);
                let base = outer * size * inner + inner_idx;
                for j in 0..size {
                    data[(base + j * inner) * fiber_dim + c] = buf[line * size + j];
                }
            }
        }
    }
}

pub fn forward_transform(f: &GridField) -> FrequencyField {
    let mut data = f.data.clone();
    fft_in_place(&f.grid, f.fiber_dim, &mut data, false);
    let scale = (2.0 * PI).powf(f.grid.n as f64 / 2.0) / f.grid.points() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    FrequencyField {
        grid: f.grid,
        fiber_dim: f.fiber_dim,
        weights: f.weights.clone(),
        data,
    }
}

pub fn inverse_transform(f: &FrequencyField) -> GridField {
    let mut data = f.data.clone();
    fft_in_place(&f.grid, f.fiber_dim, &mut data, true);
    let scale = (2.0 * PI).powf(-(f.grid.n as f64) / 2.0);
    data.iter_mut().for_each(|z| *z *= scale);
    GridField {
        grid: f.grid,
        fiber_dim: f.fiber_dim,
        weights: f.weights.clone(),
        data,
    }
}

fn check_operator(op: &Operator, grid: &Grid, fiber: usize, expected: usize) -> Result<(), SpectralError> {
    if op.n() != grid.n {
        return Err(SpectralError::DimensionMismatch {
            expected: op.n(),
            found: grid.n,
        });
    }
    if fiber != expected {
        return Err(SpectralError::FiberMismatch { expected, found: fiber });
    }
    Ok(())
}

/// Applies a per-frequency matrix to every fiber of a frequency field.
fn map_frequencies(
    hat: &FrequencyField,
    out_dim: usize,
    matrices: &[ComplexMatrix],
) -> FrequencyField {
    let data: Vec<Complex64> = (0..hat.grid.points())
        .into_par_iter()
        .flat_map_iter(|p| {
            let v = ComplexVector::from_column_slice(hat.fiber(p));
            let out = &matrices[p] * v;
            debug_assert_eq!(out.len(), out_dim);
            out.data.as_vec().clone()
        })
        .collect();
    FrequencyField {
        grid: hat.grid,
        fiber_dim: out_dim,
        weights: vec![1.0; out_dim],
        data,
    }
}

/// Per-frequency symbol and kernel projector of an operator on one grid.
///
/// Building the table is the expensive part of every multiplier
/// application; experiments build it once per (operator, grid).
#[derive(Debug, Clone)]
pub struct SymbolTable {
    op: Operator,
    grid: Grid,
    tol: f64,
    symbols: Vec<ComplexMatrix>,
    projectors: Vec<ComplexMatrix>,
}

impl SymbolTable {
    pub fn new(op: &Operator, grid: Grid, tol: f64) -> Result<Self, SpectralError> {
        if op.n() != grid.n {
            return Err(SpectralError::DimensionMismatch {
                expected: op.n(),
                found: grid.n,
            });
        }
        let freqs = grid.frequencies();
        let symbols: Vec<ComplexMatrix> = freqs
            .par_iter()
            .map(|xi| op.symbol(xi))
            .collect::<Result<_, _>>()?;
        // A(0) = 0, so the kernel projector there is the identity.
        let projectors: Vec<ComplexMatrix> = symbols
            .par_iter()
            .map(|a| kernel_projector(a, tol))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            op: op.clone(),
            grid,
            tol,
            symbols,
            projectors,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn symbol_hat(&self, hat: &FrequencyField) -> Result<FrequencyField, SpectralError> {
        check_operator(&self.op, &hat.grid, hat.fiber_dim, self.op.dim_v())?;
        Ok(map_frequencies(hat, self.op.dim_w(), &self.symbols))
    }

    pub fn project_hat(&self, hat: &FrequencyField) -> Result<FrequencyField, SpectralError> {
        check_operator(&self.op, &hat.grid, hat.fiber_dim, self.op.dim_v())?;
        Ok(map_frequencies(hat, self.op.dim_v(), &self.projectors))
    }

    pub fn apply_a(&self, phi: &GridField) -> Result<GridField, SpectralError> {
        Ok(inverse_transform(&self.symbol_hat(&forward_transform(phi))?))
    }

    pub fn apply_pa(&self, phi: &GridField) -> Result<GridField, SpectralError> {
        Ok(inverse_transform(&self.project_hat(&forward_transform(phi))?))
    }
}

/// `Aφ` through `φ̂(ξ) ↦ A(ξ)φ̂(ξ)`.
pub fn apply_a(op: &Operator, phi: &GridField) -> Result<GridField, SpectralError> {
    check_operator(op, &phi.grid, phi.fiber_dim, op.dim_v())?;
    let hat = forward_transform(phi);
    let symbols: Vec<ComplexMatrix> = phi
        .grid
        .frequencies()
        .iter()
        .map(|xi| op.symbol(xi))
        .collect::<Result<_, _>>()?;
    Ok(inverse_transform(&map_frequencies(&hat, op.dim_w(), &symbols)))
}

/// `A*η` through `η̂(ξ) ↦ A(ξ)*η̂(ξ)`.
pub fn apply_adjoint(op: &Operator, eta: &GridField) -> Result<GridField, SpectralError> {
    check_operator(op, &eta.grid, eta.fiber_dim, op.dim_w())?;
    let hat = forward_transform(eta);
    let adjoints: Vec<ComplexMatrix> = eta
        .grid
        .frequencies()
        .iter()
        .map(|xi| op.adjoint_symbol(xi))
        .collect::<Result<_, _>>()?;
    Ok(inverse_transform(&map_frequencies(&hat, op.dim_v(), &adjoints)))
}

/// `P_A φ`: the frequency-wise orthogonal projection onto `ker A(ξ)`.
pub fn apply_pa(op: &Operator, phi: &GridField, tol: f64) -> Result<GridField, SpectralError> {
    SymbolTable::new(op, phi.grid, tol)?.apply_pa(phi)
}

/// Frequency-side `D^k`: fiber `(j, α)` at `j * T + t` gets `(iξ)^α φ̂_j(ξ)`.
pub fn dk_hat(k: usize, hat: &FrequencyField) -> FrequencyField {
    let indices = MultiIndex::all_of_degree(hat.grid.n, k);
    let t = indices.len();
    let dim_v = hat.fiber_dim;
    let out_dim = dim_v * t;
    let mut out = FrequencyField::zeros(hat.grid, out_dim);
    for p in 0..hat.grid.points() {
        let xi: Vec<f64> = hat.grid.frequency(p).into_iter().map(|f| f as f64).collect();
        let factors: Vec<Complex64> = indices.iter().map(|a| i_xi_pow(a, &xi)).collect();
        let src = hat.fiber(p).to_vec();
        let dst = out.fiber_mut(p);
        for (j, z) in src.iter().enumerate() {
            for (ti, f) in factors.iter().enumerate() {
                dst[j * t + ti] = f * z;
            }
        }
    }
    out.weights = derivative_weights(dim_v, &indices);
    out
}

/// All k-th order partial derivatives, with multinomial weights.
pub fn apply_dk(k: usize, phi: &GridField) -> GridField {
    inverse_transform(&dk_hat(k, &forward_transform(phi)))
}

/// Applies the composite multiplier `A†(ξ)(·) ⊗ ((iξ)^α)` to the transform of
/// `a_phi`, giving zero at the zero frequency.
pub fn apply_multiplier(op: &Operator, a_phi: &GridField, tol: f64) -> Result<GridField, SpectralError> {
    check_operator(op, &a_phi.grid, a_phi.fiber_dim, op.dim_w())?;
    let hat = forward_transform(a_phi);
    let grid = a_phi.grid;
    let indices = MultiIndex::all_of_degree(grid.n, op.k());
    let out_dim = op.dim_v() * indices.len();
    let fibers: Vec<Vec<Complex64>> = (0..grid.points())
        .into_par_iter()
        .map(|p| {
            let xi: Vec<f64> = grid.frequency(p).into_iter().map(|f| f as f64).collect();
            if xi.iter().all(|&x| x == 0.0) {
                return Ok(vec![Complex64::new(0.0, 0.0); out_dim]);
            }
            let m = multiplier(op, &xi, tol)?;
            Ok(m.apply(&ComplexVector::from_column_slice(hat.fiber(p))).data.as_vec().clone())
        })
        .collect::<Result<_, SpectralError>>()?;
    let out = FrequencyField {
        grid,
        fiber_dim: out_dim,
        weights: derivative_weights(op.dim_v(), &indices),
        data: fibers.into_iter().flatten().collect(),
    };
    Ok(inverse_transform(&out))
}

/// Riemann-sum `L^p` norm with cell volume `(2π/N)^n`; `p = ∞` is the max.
pub fn lp_norm(f: &GridField, p: f64) -> Result<f64, SpectralError> {
    if p.is_nan() || p < 1.0 {
        return Err(SpectralError::InvalidExponent(p));
    }
    let points = f.grid.points();
    if p.is_infinite() {
        return Ok((0..points)
            .map(|i| f.pointwise_norm_sqr(i).sqrt())
            .fold(0.0, f64::max));
    }
    let sum: f64 = (0..points)
        .map(|i| {
            let s = f.pointwise_norm_sqr(i);
            if p == 2.0 {
                s
            } else {
                s.powf(p / 2.0)
            }
        })
        .sum();
    Ok((sum * f.grid.cell_volume()).powf(1.0 / p))
}

/// Real-valued random field: independent unit-variance complex coefficients
/// on `0 < |ξ|_∞ ≤ max_freq`, mirrored to `-ξ` by conjugation.
pub fn random_band_limited(grid: Grid, fiber_dim: usize, max_freq: usize, seed: u64) -> Result<GridField, SpectralError> {
    let limit = grid.size / 4;
    if max_freq == 0 || max_freq > limit {
        return Err(SpectralError::BandTooWide { max_freq, limit });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = FrequencyField::zeros(grid, fiber_dim);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..grid.points() {
        let freq = grid.frequency(p);
        let sup = freq.iter().map(|f| f.unsigned_abs() as usize).max().unwrap_or(0);
        if sup == 0 || sup > max_freq {
            continue;
        }
        // One draw per ±ξ pair, at the member whose first nonzero entry is positive.
        if freq.iter().find(|&&f| f != 0).is_some_and(|&f| f < 0) {
            continue;
        }
        let neg: Vec<i64> = freq.iter().map(|f| -f).collect();
        let q = grid.frequency_index(&neg).expect("band limit keeps -ξ on the grid");
        for c in 0..fiber_dim {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(re, im) * scale;
            hat.fiber_mut(p)[c] = z;
            hat.fiber_mut(q)[c] = z.conj();
        }
    }
    let mut field = inverse_transform(&hat);
    field.data.iter_mut().for_each(|z| z.im = 0.0);
    Ok(field)
}

/// Field with a single Fourier coefficient vector at `freq`.
pub fn single_mode(grid: Grid, freq: &[i64], coeffs: &[Complex64]) -> Result<GridField, SpectralError> {
    let p = grid
        .frequency_index(freq)
        .ok_or(SpectralError::DimensionMismatch {
            expected: grid.n,
            found: freq.len(),
        })?;
    let mut hat = FrequencyField::zeros(grid, coeffs.len());
    hat.fiber_mut(p).copy_from_slice(coeffs);
    Ok(inverse_transform(&hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plane_wave(grid: Grid, freq: &[f64]) -> GridField {
        GridField::from_fn(grid, 1, |x, _| {
            let phase: f64 = x.iter().zip(freq).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, phase)
        })
        .unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(2, 16).is_ok());
        assert!(Grid::new(2, 12).is_err());
        assert!(Grid::new(2, 2).is_err());
        assert!(Grid::new(0, 8).is_err());
        let g = Grid::new(2, 8).unwrap();
        assert_eq!(g.frequency(g.frequency_index(&[-4, 3]).unwrap()), vec![-4, 3]);
        assert_eq!(g.frequency_index(&[4, 0]), None);
    }

    #[test]
    fn transform_examples() {
        let grid = Grid::new(2, 8).unwrap();
        let constant = GridField::from_fn(grid, 1, |_, _| c(1.0, 0.0)).unwrap();
        let hat = forward_transform(&constant);
        assert_eq!(hat.support(1e-12), vec![vec![0, 0]]);
        // ℓ² norm equals the torus L² norm 2π.
        assert!((hat.coefficient(&[0, 0]).unwrap()[0].re - 2.0 * PI).abs() < 1e-12);

        let wave = plane_wave(grid, &[1.0, 0.0]);
        assert_eq!(forward_transform(&wave).support(1e-12), vec![vec![1, 0]]);

        let random = random_band_limited(grid, 2, 2, 3).unwrap();
        let back = inverse_transform(&forward_transform(&random));
        assert!(back.max_abs_diff(&random) <= 1e-12 * random.data_norm());
    }

    #[test]
    fn apply_a_examples() {
        let grid = Grid::new(2, 8).unwrap();
        let grad = zoo::get("gradient").unwrap();
        let xi0 = [2.0, -1.0];
        let phi = plane_wave(grid, &xi0);
        let out = apply_a(&grad, &phi).unwrap();
        assert_eq!(out.fiber_dim(), 2);
        for p in 0..grid.points() {
            for (j, &x) in xi0.iter().enumerate() {
                let expected = c(0.0, x) * phi.fiber(p)[0];
                assert!((out.fiber(p)[j] - expected).norm() < 1e-12);
            }
        }

        let d1d2 = zoo::get("d1d2").unwrap();
        let phi = plane_wave(grid, &[1.0, 1.0]);
        let out = apply_a(&d1d2, &phi).unwrap();
        assert!(out.max_abs_diff(&phi.scale(c(-1.0, 0.0))) < 1e-12);

        let grid3 = Grid::new(3, 8).unwrap();
        let div = zoo::get("divergence").unwrap();
        // φ̂(ξ0) = (1, -1, 0) ⊥ ξ0 = (1, 1, 2)
        let phi = single_mode(grid3, &[1, 1, 2], &[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let out = apply_a(&div, &phi).unwrap();
        assert!(out.data_norm() < 1e-12);

        let scalar = GridField::zeros(grid3, 1);
        assert_eq!(
            apply_a(&div, &scalar).unwrap_err(),
            SpectralError::FiberMismatch { expected: 3, found: 1 }
        );
    }

    #[test]
    fn apply_pa_examples() {
        let grid = Grid::new(2, 16).unwrap();
        let grad = zoo::get("gradient").unwrap();
        let phi = random_band_limited(grid, 1, 4, 1)
            .unwrap()
            .add(&GridField::from_fn(grid, 1, |_, _| c(0.75, 0.0)).unwrap())
            .unwrap();
        let pa = apply_pa(&grad, &phi, 1e-10).unwrap();
        let mean = phi.mean()[0];
        for p in 0..grid.points() {
            assert!((pa.fiber(p)[0] - mean).norm() < 1e-10);
        }

        let grid3 = Grid::new(3, 8).unwrap();
        let div = zoo::get("divergence").unwrap();
        let phi = random_band_limited(grid3, 3, 2, 2).unwrap();
        let leray = apply_pa(&div, &phi, 1e-10).unwrap();
        assert!(apply_a(&div, &leray).unwrap().data_norm() < 1e-10);
        // idempotent
        let twice = apply_pa(&div, &leray, 1e-10).unwrap();
        assert!(twice.max_abs_diff(&leray) < 1e-10);

        let kernel_mode = single_mode(grid3, &[0, 1, 1], &[c(0.3, 0.1), c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let fixed = apply_pa(&div, &kernel_mode, 1e-10).unwrap();
        assert!(fixed.max_abs_diff(&kernel_mode) < 1e-12);
    }

    #[test]
    fn projection_is_orthogonal_frequency_wise() {
        let grid = Grid::new(3, 8).unwrap();
        let curl = zoo::get("curl").unwrap();
        let table = SymbolTable::new(&curl, grid, 1e-10).unwrap();
        let phi = random_band_limited(grid, 3, 2, 8).unwrap();
        let hat = forward_transform(&phi);
        let p_hat = table.project_hat(&hat).unwrap();
        let rest = hat.sub(&p_hat).unwrap();
        for p in 0..grid.points() {
            let inner: Complex64 = rest.fiber(p).iter().zip(p_hat.fiber(p)).map(|(a, b)| a.conj() * b).sum();
            assert!(inner.norm() < 1e-10);
        }
    }

    #[test]
    fn apply_dk_examples() {
        let grid = Grid::new(2, 16).unwrap();
        let phi = plane_wave(grid, &[1.0, 1.0]).add(&plane_wave(grid, &[0.0, 2.0])).unwrap();
        let d1 = apply_dk(1, &phi);
        // k = 1 is the componentwise gradient; check against apply_a of the gradient.
        let grad = apply_a(&zoo::get("gradient").unwrap(), &phi).unwrap();
        assert!(d1.max_abs_diff(&grad) < 1e-12);

        let phi = plane_wave(grid, &[3.0, 4.0]);
        let d1 = apply_dk(1, &phi);
        for p in 0..grid.points() {
            assert!((d1.pointwise_norm_sqr(p).sqrt() - 5.0).abs() < 1e-12);
        }

        let phi = plane_wave(grid, &[1.0, 1.0]);
        let d2 = apply_dk(2, &phi);
        assert_eq!(d2.weights(), &[1.0, 2.0, 1.0]);
        for p in 0..grid.points() {
            assert!((d2.pointwise_norm_sqr(p).sqrt() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_norm_examples() {
        for n in [1, 2, 3] {
            let grid = Grid::new(n, 8).unwrap();
            let one = GridField::from_fn(grid, 1, |_, _| c(1.0, 0.0)).unwrap();
            let expected = (2.0 * PI).powf(n as f64 / 2.0);
            assert!((lp_norm(&one, 2.0).unwrap() - expected).abs() < 1e-12 * expected);
            let freq = vec![1.0; n];
            let wave = plane_wave(grid, &freq);
            for p in [1.0, 1.5, 2.0, 3.0] {
                let a = lp_norm(&wave, p).unwrap();
                let b = lp_norm(&one, p).unwrap();
                assert!((a - b).abs() < 1e-12 * b);
            }
            assert!((lp_norm(&wave, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
        }
        let grid = Grid::new(2, 8).unwrap();
        assert_eq!(
            lp_norm(&GridField::zeros(grid, 1), 0.5).unwrap_err(),
            SpectralError::InvalidExponent(0.5)
        );
    }

    #[test]
    fn plancherel_for_random_fields() {
        let grid = Grid::new(2, 16).unwrap();
        for seed in 0..50 {
            let f = random_band_limited(grid, 2, 4, seed).unwrap();
            let l2 = lp_norm(&f, 2.0).unwrap();
            let coeff = forward_transform(&f).l2_norm();
            assert!((l2 - coeff).abs() <= 1e-12 * l2);
        }
    }

    #[test]
    fn random_fields_are_real_band_limited_and_deterministic() {
        let grid = Grid::new(2, 16).unwrap();
        let a = random_band_limited(grid, 2, 3, 42).unwrap();
        let b = random_band_limited(grid, 2, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_imag(), 0.0);
        let hat = forward_transform(&a);
        for freq in hat.support(1e-12) {
            let sup = freq.iter().map(|f| f.abs()).max().unwrap();
            assert!((1..=3).contains(&sup), "{freq:?}");
        }
        assert!(a.mean().iter().all(|m| m.norm() < 1e-12));
        assert!(matches!(
            random_band_limited(grid, 1, 5, 0).unwrap_err(),
            SpectralError::BandTooWide { .. }
        ));
    }

    #[test]
    fn field_document_round_trip() {
        let grid = Grid::new(2, 8).unwrap();
        let f = apply_dk(2, &random_band_limited(grid, 1, 2, 5).unwrap());
        let text = serde_json::to_string(&f.to_document()).unwrap();
        let doc: FieldDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(GridField::from_document(&doc).unwrap(), f);
    }
}
