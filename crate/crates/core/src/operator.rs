//! Homogeneous constant-coefficient operators `A = Σ_{|α|=k} A_α ∂^α` and their symbols.
//!
//! Operators are exchanged as JSON documents:
//!
//! ```text
//! { "name": "gradient", "n": 2, "k": 1, "dimV": 1, "dimW": 2,
//!   "terms": [ { "alpha": [0, 1], "matrix": [[0.0], [1.0]] },
//!              { "alpha": [1, 0], "matrix": [[1.0], [0.0]] } ] }
//! ```
//!
//! `matrix` is row-major with `dimW` rows and `dimV` columns. Serialization
//! sorts terms lexicographically by multi-index, so output is canonical.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("malformed document at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("{path}: must be at least 1, got {value}")]
    InvalidDimension { path: String, value: i64 },
    #[error("terms: empty term list")]
    EmptyTerms,
    #[error("{path}: multi-index has length {found}, expected n = {expected}")]
    MultiIndexLength {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: negative exponent in multi-index")]
    NegativeExponent { path: String },
    #[error("{path}: inhomogeneous term: multi-index degree {degree} differs from order k = {order}")]
    InhomogeneousTerm {
        path: String,
        degree: usize,
        order: usize,
    },
    #[error("{path}: duplicate multi-index {alpha}")]
    DuplicateTerm { path: String, alpha: MultiIndex },
    #[error("{path}: dimension mismatch: expected {expected_rows}x{expected_cols} (dimW x dimV), found {found}")]
    DimensionMismatch {
        path: String,
        expected_rows: usize,
        expected_cols: usize,
        found: String,
    },
    #[error("{path}: non-finite coefficient")]
    NonFiniteCoefficient { path: String },
    #[error("terms: every coefficient matrix is zero")]
    ZeroOperator,
    #[error("frequency has length {found}, expected n = {expected}")]
    FrequencyLength { expected: usize, found: usize },
    #[error("frequency has non-finite entries")]
    NonFiniteFrequency,
}

/// Exponent vector α of a partial derivative ∂^α. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// ξ^α for a real vector.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }

    /// Multinomial weight k!/α!.
    pub fn multinomial(&self) -> f64 {
        let mut weight = factorial(self.degree());
        for &a in &self.0 {
            weight /= factorial(a as usize);
        }
        weight
    }

    /// All multi-indices of total degree `k` in `n` variables, in descending
    /// lexicographic order: `(k,0,…)` first, `(…,0,k)` last.
    pub fn all_of_degree(n: usize, k: usize) -> Vec<MultiIndex> {
        fn fill(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if pos + 1 == cur.len() {
                cur[pos] = remaining;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for a in (0..=remaining).rev() {
                cur[pos] = a;
                fill(pos + 1, remaining - a, cur, out);
            }
        }
        if n == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        fill(0, k as u32, &mut vec![0; n], &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// `i^k` exactly.
pub(crate) fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `(iξ)^α` for a real frequency.
pub fn i_xi_pow(alpha: &MultiIndex, xi: &[f64]) -> Complex64 {
    i_pow(alpha.degree()) * alpha.monomial(xi)
}

/// A validated homogeneous operator with real coefficient matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    name: String,
    n: usize,
    k: usize,
    dim_v: usize,
    dim_w: usize,
    terms: BTreeMap<MultiIndex, DMatrix<f64>>,
}

impl Operator {
    /// Builds an operator from `(α, A_α)` pairs, checking every invariant.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        k: usize,
        dim_v: usize,
        dim_w: usize,
        terms: Vec<(MultiIndex, DMatrix<f64>)>,
    ) -> Result<Self, OperatorError> {
        for (path, value) in [("n", n), ("k", k), ("dimV", dim_v), ("dimW", dim_w)] {
            if value == 0 {
                return Err(OperatorError::InvalidDimension {
                    path: path.to_string(),
                    value: 0,
                });
            }
        }
        if terms.is_empty() {
            return Err(OperatorError::EmptyTerms);
        }
        let mut map = BTreeMap::new();
        for (idx, (alpha, matrix)) in terms.into_iter().enumerate() {
            if alpha.len() != n {
                return Err(OperatorError::MultiIndexLength {
                    path: format!("terms[{idx}].alpha"),
                    expected: n,
                    found: alpha.len(),
                });
            }
            if alpha.degree() != k {
                return Err(OperatorError::InhomogeneousTerm {
                    path: format!("terms[{idx}].alpha"),
                    degree: alpha.degree(),
                    order: k,
                });
            }
            if matrix.shape() != (dim_w, dim_v) {
                return Err(OperatorError::DimensionMismatch {
                    path: format!("terms[{idx}].matrix"),
                    expected_rows: dim_w,
                    expected_cols: dim_v,
                    found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
                });
            }
            if matrix.iter().any(|x| !x.is_finite()) {
                return Err(OperatorError::NonFiniteCoefficient {
                    path: format!("terms[{idx}].matrix"),
                });
            }
            if map.contains_key(&alpha) {
                return Err(OperatorError::DuplicateTerm {
                    path: format!("terms[{idx}].alpha"),
                    alpha,
                });
            }
            map.insert(alpha, matrix);
        }
        if map.values().all(|m| m.iter().all(|&x| x == 0.0)) {
            return Err(OperatorError::ZeroOperator);
        }
        Ok(Self {
            name: name.into(),
            n,
            k,
            dim_v,
            dim_w,
            terms: map,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Order.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &DMatrix<f64>)> {
        self.terms.iter()
    }

    fn check_frequency(&self, xi: &[f64]) -> Result<(), OperatorError> {
        if xi.len() != self.n {
            return Err(OperatorError::FrequencyLength {
                expected: self.n,
                found: xi.len(),
            });
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(OperatorError::NonFiniteFrequency);
        }
        Ok(())
    }

    /// `A(ξ) = Σ (iξ)^α A_α = i^k Σ ξ^α A_α`, a `dimW x dimV` matrix.
    pub fn symbol(&self, xi: &[f64]) -> Result<ComplexMatrix, OperatorError> {
        self.check_frequency(xi)?;
        let mut real = DMatrix::<f64>::zeros(self.dim_w, self.dim_v);
        for (alpha, coeff) in &self.terms {
            real += coeff * alpha.monomial(xi);
        }
        let phase = i_pow(self.k);
        Ok(real.map(|x| phase * x))
    }

    /// `A*(ξ)`, the conjugate transpose of the symbol.
    pub fn adjoint_symbol(&self, xi: &[f64]) -> Result<ComplexMatrix, OperatorError> {
        Ok(self.symbol(xi)?.adjoint())
    }

    /// Parses and validates an operator document.
    pub fn from_json(text: &str) -> Result<Self, OperatorError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: OperatorDoc =
            serde_path_to_error::deserialize(de).map_err(|e| OperatorError::Malformed {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        doc.into_operator()
    }

    /// Canonical pretty-printed document; deterministic byte for byte.
    pub fn to_json(&self) -> String {
        let doc = OperatorDoc::from(self);
        serde_json::to_string_pretty(&doc).expect("operator documents always serialize")
    }
}

/// Raw document shape, before validation.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    name: String,
    n: i64,
    k: i64,
    #[serde(rename = "dimV")]
    dim_v: i64,
    #[serde(rename = "dimW")]
    dim_w: i64,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    alpha: Vec<i64>,
    matrix: Vec<Vec<f64>>,
}

impl OperatorDoc {
    fn into_operator(self) -> Result<Operator, OperatorError> {
        let mut dims = [0usize; 4];
        for (slot, (path, value)) in dims.iter_mut().zip([
            ("n", self.n),
            ("k", self.k),
            ("dimV", self.dim_v),
            ("dimW", self.dim_w),
        ]) {
            if value < 1 {
                return Err(OperatorError::InvalidDimension {
                    path: path.to_string(),
                    value,
                });
            }
            *slot = value as usize;
        }
        let [n, k, dim_v, dim_w] = dims;
        let mut terms = Vec::with_capacity(self.terms.len());
        for (idx, term) in self.terms.into_iter().enumerate() {
            if term.alpha.iter().any(|&a| a < 0) {
                return Err(OperatorError::NegativeExponent {
                    path: format!("terms[{idx}].alpha"),
                });
            }
            let alpha = MultiIndex::new(term.alpha.iter().map(|&a| a as u32).collect());
            if term.matrix.len() != dim_w {
                return Err(OperatorError::DimensionMismatch {
                    path: format!("terms[{idx}].matrix"),
                    expected_rows: dim_w,
                    expected_cols: dim_v,
                    found: format!("{} rows", term.matrix.len()),
                });
            }
            for (r, row) in term.matrix.iter().enumerate() {
                if row.len() != dim_v {
                    return Err(OperatorError::DimensionMismatch {
                        path: format!("terms[{idx}].matrix[{r}]"),
                        expected_rows: dim_w,
                        expected_cols: dim_v,
                        found: format!("row of length {}", row.len()),
                    });
                }
            }
            let matrix = DMatrix::from_fn(dim_w, dim_v, |r, c| term.matrix[r][c]);
            terms.push((alpha, matrix));
        }
        Operator::new(self.name, n, k, dim_v, dim_w, terms)
    }
}

impl From<&Operator> for OperatorDoc {
    fn from(op: &Operator) -> Self {
        OperatorDoc {
            name: op.name.clone(),
            n: op.n as i64,
            k: op.k as i64,
            dim_v: op.dim_v as i64,
            dim_w: op.dim_w as i64,
            terms: op
                .terms
                .iter()
                .map(|(alpha, m)| TermDoc {
                    alpha: alpha.0.iter().map(|&a| a as i64).collect(),
                    matrix: (0..m.nrows())
                        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::zoo;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const GRADIENT_DOC: &str = r#"{
        "name": "gradient", "n": 2, "k": 1, "dimV": 1, "dimW": 2,
        "terms": [
            { "alpha": [1, 0], "matrix": [[1], [0]] },
            { "alpha": [0, 1], "matrix": [[0], [1]] }
        ]
    }"#;

    #[test]
    fn parses_gradient() {
        let op = Operator::from_json(GRADIENT_DOC).unwrap();
        assert_eq!(op.terms().count(), 2);
        assert_eq!((op.n(), op.k(), op.dim_v(), op.dim_w()), (2, 1, 1, 2));
    }

    #[test]
    fn rejects_inhomogeneous_term() {
        let doc = r#"{"name":"bad","n":2,"k":2,"dimV":1,"dimW":1,
            "terms":[{"alpha":[1,1],"matrix":[[1]]},{"alpha":[1,0],"matrix":[[1]]}]}"#;
        let err = Operator::from_json(doc).unwrap_err();
        assert!(matches!(err, OperatorError::InhomogeneousTerm { .. }));
        assert!(err.to_string().contains("inhomogeneous term"));
        assert!(err.to_string().contains("terms[1].alpha"));
    }

    #[test]
    fn parses_d1d2() {
        let doc = r#"{"name":"d1d2","n":2,"k":2,"dimV":1,"dimW":1,
            "terms":[{"alpha":[1,1],"matrix":[[1]]}]}"#;
        let op = Operator::from_json(doc).unwrap();
        assert_eq!(op, zoo::get("d1d2").unwrap());
    }

    #[test]
    fn reports_errors_with_paths() {
        let mismatch = r#"{"name":"x","n":2,"k":1,"dimV":1,"dimW":2,
            "terms":[{"alpha":[1,0],"matrix":[[1],[0]]},{"alpha":[0,1],"matrix":[[0,1],[1,0]]}]}"#;
        let err = Operator::from_json(mismatch).unwrap_err();
        assert!(err.to_string().starts_with("terms[1].matrix[0]"), "{err}");

        let empty = r#"{"name":"x","n":2,"k":1,"dimV":1,"dimW":1,"terms":[]}"#;
        assert_eq!(Operator::from_json(empty).unwrap_err(), OperatorError::EmptyTerms);

        let dup = r#"{"name":"x","n":1,"k":1,"dimV":1,"dimW":1,
            "terms":[{"alpha":[1],"matrix":[[1]]},{"alpha":[1],"matrix":[[2]]}]}"#;
        assert!(matches!(
            Operator::from_json(dup).unwrap_err(),
            OperatorError::DuplicateTerm { .. }
        ));

        let malformed = r#"{"name":"x","n":1,"k":1,"dimV":1,"dimW":1,
            "terms":[{"alpha":[1],"matrix":[["one"]]}]}"#;
        match Operator::from_json(malformed).unwrap_err() {
            OperatorError::Malformed { path, .. } => assert_eq!(path, "terms[0].matrix[0][0]"),
            other => panic!("unexpected {other:?}"),
        }

        let zero = r#"{"name":"x","n":1,"k":1,"dimV":1,"dimW":1,
            "terms":[{"alpha":[1],"matrix":[[0]]}]}"#;
        assert_eq!(Operator::from_json(zero).unwrap_err(), OperatorError::ZeroOperator);

        let short = r#"{"name":"x","n":2,"k":1,"dimV":1,"dimW":1,
            "terms":[{"alpha":[1],"matrix":[[1]]}]}"#;
        assert!(matches!(
            Operator::from_json(short).unwrap_err(),
            OperatorError::MultiIndexLength { .. }
        ));

        let neg = r#"{"name":"x","n":0,"k":1,"dimV":1,"dimW":1,"terms":[]}"#;
        assert!(matches!(
            Operator::from_json(neg).unwrap_err(),
            OperatorError::InvalidDimension { .. }
        ));
    }

    #[test]
    fn symbol_examples() {
        let grad = zoo::get("gradient").unwrap();
        let s = grad.symbol(&[1.0, 0.0]).unwrap();
        let expected = ComplexMatrix::from_column_slice(2, 1, &[c(0.0, 1.0), c(0.0, 0.0)]);
        assert_eq!(s, expected);

        let d1d2 = zoo::get("d1d2").unwrap();
        assert_eq!(d1d2.symbol(&[1.0, 1.0]).unwrap()[(0, 0)], c(-1.0, 0.0));

        let div = zoo::get("divergence").unwrap();
        let s = div.symbol(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(s.shape(), (1, 3));
        assert_eq!(s[(0, 2)], c(0.0, 2.0));
        assert_eq!(s[(0, 0)], c(0.0, 0.0));

        assert_eq!(
            grad.symbol(&[1.0]).unwrap_err(),
            OperatorError::FrequencyLength { expected: 2, found: 1 }
        );
    }

    #[test]
    fn adjoint_symbol_examples() {
        let grad = zoo::get("gradient").unwrap();
        let a = grad.adjoint_symbol(&[1.0, 0.0]).unwrap();
        assert_eq!(a.shape(), (1, 2));
        assert_eq!(a[(0, 0)], c(0.0, -1.0));
        assert_eq!(a[(0, 1)], c(0.0, 0.0));

        let d1d2 = zoo::get("d1d2").unwrap();
        assert_eq!(d1d2.adjoint_symbol(&[1.0, 1.0]).unwrap()[(0, 0)], c(-1.0, 0.0));

        for entry in zoo::list() {
            let op = entry.build();
            let xi: Vec<f64> = (0..op.n()).map(|j| 0.3 + 0.7 * j as f64).collect();
            let gram = op.adjoint_symbol(&xi).unwrap() * op.symbol(&xi).unwrap();
            assert!(crate::linalg::hermitian_deviation(&gram) < 1e-12);
            let eig = gram.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l > -1e-12), "{}", op.name());
        }
    }

    #[test]
    fn serialization_is_canonical_and_round_trips() {
        let op = Operator::from_json(GRADIENT_DOC).unwrap();
        let text = op.to_json();
        assert_eq!(text, op.to_json());
        // Terms come out sorted by multi-index even though the input was not.
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["terms"][0]["alpha"], serde_json::json!([0, 1]));
        assert_eq!(value["terms"][1]["alpha"], serde_json::json!([1, 0]));
        for entry in zoo::list() {
            let op = entry.build();
            let text = op.to_json();
            let back = Operator::from_json(&text).unwrap();
            assert_eq!(back, op);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn multi_indices_of_degree() {
        let all = MultiIndex::all_of_degree(2, 2);
        let exps: Vec<_> = all.iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(exps, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(MultiIndex::all_of_degree(3, 2).len(), 6);
        assert_eq!(all[1].multinomial(), 2.0);
        assert_eq!(all[0].multinomial(), 1.0);
        // Multinomial theorem: Σ k!/α! ξ^{2α} = |ξ|^{2k}.
        let xi = [0.4, -1.3, 2.2];
        let total: f64 = MultiIndex::all_of_degree(3, 3)
            .iter()
            .map(|a| a.multinomial() * a.monomial(&xi).powi(2))
            .sum();
        let norm2: f64 = xi.iter().map(|x| x * x).sum();
        assert!((total - norm2.powi(3)).abs() < 1e-12 * norm2.powi(3));
    }

    #[test]
    fn conjugation_symmetry() {
        for entry in zoo::list() {
            let op = entry.build();
            let xi: Vec<f64> = (0..op.n()).map(|j| 1.1 - 0.45 * j as f64).collect();
            let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
            let s = op.symbol(&xi).unwrap();
            let sn = op.symbol(&neg).unwrap();
            let sign = if op.k() % 2 == 0 { 1.0 } else { -1.0 };
            assert!(max_abs_diff(&sn, &s.map(|z| z * sign)) < 1e-14);
            assert!(max_abs_diff(&sn, &s.map(|z| z.conj())) < 1e-14);
        }
    }
}
