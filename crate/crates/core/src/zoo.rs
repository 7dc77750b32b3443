//! Registry of named reference operators.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::operator::{MultiIndex, Operator};
use crate::ranklab::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown operator `{0}`")]
pub struct UnknownOperator(pub String);

#[derive(Debug, Clone, Copy)]
pub struct ZooEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub expected_verdict: Verdict,
    /// Rank on the sphere, when it is constant.
    pub expected_rank: Option<usize>,
    constructor: fn() -> Operator,
}

impl ZooEntry {
    pub fn build(&self) -> Operator {
        (self.constructor)()
    }
}

#[derive(Debug, Serialize)]
pub struct ZooListing {
    pub name: &'static str,
    pub description: &'static str,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    pub expected_verdict: Verdict,
    pub expected_rank: Option<usize>,
}

impl From<&ZooEntry> for ZooListing {
    fn from(entry: &ZooEntry) -> Self {
        let op = entry.build();
        ZooListing {
            name: entry.name,
            description: entry.description,
            n: op.n(),
            k: op.k(),
            dim_v: op.dim_v(),
            dim_w: op.dim_w(),
            expected_verdict: entry.expected_verdict,
            expected_rank: entry.expected_rank,
        }
    }
}

const ENTRIES: &[ZooEntry] = &[
    ZooEntry {
        name: "gradient",
        description: "gradient of a scalar function on R^2",
        expected_verdict: Verdict::Elliptic,
        expected_rank: Some(1),
        constructor: || gradient("gradient", 2),
    },
    ZooEntry {
        name: "gradient3",
        description: "gradient of a scalar function on R^3",
        expected_verdict: Verdict::Elliptic,
        expected_rank: Some(1),
        constructor: || gradient("gradient3", 3),
    },
    ZooEntry {
        name: "divergence",
        description: "divergence of a vector field on R^3",
        expected_verdict: Verdict::ConstantRank,
        expected_rank: Some(1),
        constructor: divergence,
    },
    ZooEntry {
        name: "curl",
        description: "curl of a vector field on R^3",
        expected_verdict: Verdict::ConstantRank,
        expected_rank: Some(2),
        constructor: curl,
    },
    ZooEntry {
        name: "laplacian",
        description: "Laplacian of a scalar function on R^2",
        expected_verdict: Verdict::Elliptic,
        expected_rank: Some(1),
        constructor: laplacian,
    },
    ZooEntry {
        name: "symmetric_gradient",
        description: "symmetric gradient of a vector field on R^2, entries (e11, e12, e22)",
        expected_verdict: Verdict::Elliptic,
        expected_rank: Some(2),
        constructor: symmetric_gradient,
    },
    ZooEntry {
        name: "d1d2",
        description: "mixed derivative d1 d2 on R^2",
        expected_verdict: Verdict::NonConstantRank,
        expected_rank: None,
        constructor: d1d2,
    },
    ZooEntry {
        name: "wave",
        description: "wave operator d1^2 - d2^2 on R^2",
        expected_verdict: Verdict::NonConstantRank,
        expected_rank: None,
        constructor: wave,
    },
];

pub fn list() -> &'static [ZooEntry] {
    ENTRIES
}

pub fn entry(name: &str) -> Result<&'static ZooEntry, UnknownOperator> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| UnknownOperator(name.to_string()))
}

pub fn get(name: &str) -> Result<Operator, UnknownOperator> {
    entry(name).map(ZooEntry::build)
}

fn unit(n: usize, j: usize) -> MultiIndex {
    let mut e = vec![0; n];
    e[j] = 1;
    MultiIndex::new(e)
}

fn build(name: &str, n: usize, k: usize, dim_v: usize, dim_w: usize, terms: Vec<(MultiIndex, DMatrix<f64>)>) -> Operator {
    Operator::new(name, n, k, dim_v, dim_w, terms).expect("zoo operators are valid")
}

fn gradient(name: &str, n: usize) -> Operator {
    let terms = (0..n)
        .map(|j| {
            let mut m = DMatrix::zeros(n, 1);
            m[(j, 0)] = 1.0;
            (unit(n, j), m)
        })
        .collect();
    build(name, n, 1, 1, n, terms)
}

fn divergence() -> Operator {
    let terms = (0..3)
        .map(|j| {
            let mut m = DMatrix::zeros(1, 3);
            m[(0, j)] = 1.0;
            (unit(3, j), m)
        })
        .collect();
    build("divergence", 3, 1, 3, 1, terms)
}

fn curl() -> Operator {
    // (ξ × v) = ξ1 (0, -v3, v2) + ξ2 (v3, 0, -v1) + ξ3 (-v2, v1, 0)
    #[rustfmt::skip]
    let coeffs = [
        [0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ];
    let terms = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| (unit(3, j), DMatrix::from_row_slice(3, 3, c)))
        .collect();
    build("curl", 3, 1, 3, 3, terms)
}

fn laplacian() -> Operator {
    let one = DMatrix::from_element(1, 1, 1.0);
    build(
        "laplacian",
        2,
        2,
        1,
        1,
        vec![
            (MultiIndex::new(vec![2, 0]), one.clone()),
            (MultiIndex::new(vec![0, 2]), one),
        ],
    )
}

fn symmetric_gradient() -> Operator {
    #[rustfmt::skip]
    let d1 = DMatrix::from_row_slice(3, 2, &[
        1.0, 0.0,
        0.0, 0.5,
        0.0, 0.0,
    ]);
    #[rustfmt::skip]
    let d2 = DMatrix::from_row_slice(3, 2, &[
        0.0, 0.0,
        0.5, 0.0,
        0.0, 1.0,
    ]);
    build(
        "symmetric_gradient",
        2,
        1,
        2,
        3,
        vec![(unit(2, 0), d1), (unit(2, 1), d2)],
    )
}

fn d1d2() -> Operator {
    build(
        "d1d2",
        2,
        2,
        1,
        1,
        vec![(MultiIndex::new(vec![1, 1]), DMatrix::from_element(1, 1, 1.0))],
    )
}

fn wave() -> Operator {
    build(
        "wave",
        2,
        2,
        1,
        1,
        vec![
            (MultiIndex::new(vec![2, 0]), DMatrix::from_element(1, 1, 1.0)),
            (MultiIndex::new(vec![0, 2]), DMatrix::from_element(1, 1, -1.0)),
        ],
    )
}
