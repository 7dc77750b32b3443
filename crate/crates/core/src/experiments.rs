//! Estimate experiments on the torus.
//!
//! * ratio sweeps of `‖D^k(φ − P_Aφ)‖_p / ‖Aφ‖_p` over seeded random fields,
//! * the symbol bound `|ξ|^k |A*(ξ)w| / |A(ξ)A*(ξ)w|` and its sampled supremum,
//! * witness families `φ = A*(g e^{ix·ξ} w)` along frequency ladders that
//!   approach a rank-drop direction,
//! * minimality of `ψ = P_Aφ` among kernel fields in `L²`.
//!
//! On the torus a single Fourier mode is an exact eigenfunction of every
//! multiplier, so the default witness (no window) realizes the symbol bound
//! exactly instead of in a limit.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{ComplexVector, FullSvd, LinalgError};
use crate::operator::{Operator, OperatorError};
use crate::ranklab::{normalize, RankError, Verdict};
use crate::spectral::{
    dk_hat, forward_transform, inverse_transform, lp_norm, random_band_limited, single_mode, FrequencyField, Grid,
    GridField, SpectralError, SymbolTable,
};

/// Fields with `‖Aφ‖₂ ≤ KERNEL_TOL · ‖φ‖₂` are treated as kernel elements.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;
/// `A*(ξ)w` below this fraction of `|A(ξ)|_F |w|` counts as zero.
pub const DEGENERATE_W_TOL: f64 = 1e-12;
/// Additive slack of the minimality comparison.
pub const MINIMALITY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("input is (numerically) in the kernel of A: ‖Aφ‖₂ = {a_norm:e}, ‖φ‖₂ = {phi_norm:e}")]
    KernelInput { a_norm: f64, phi_norm: f64 },
    #[error("A*(ξ)w vanishes at ξ = {xi:?}")]
    DegenerateW { xi: Vec<f64> },
    #[error("frequency {freq:?} is not resolvable on an N = {size} grid (need |ξ|_∞ <= {limit})")]
    UnresolvableFrequency { freq: Vec<i64>, size: usize, limit: usize },
    #[error("experiment has no usable trials")]
    EmptyExperiment,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Mixes a base seed with trial coordinates (splitmix64 finalizer).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = seed;
    for &p in parts {
        state = state.wrapping_add(p.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

fn check_kernel(a_hat: &FrequencyField, phi_hat: &FrequencyField, tol: f64) -> Result<(), ExperimentError> {
    let (a_norm, phi_norm) = (a_hat.l2_norm(), phi_hat.l2_norm());
    if a_norm <= tol * phi_norm {
        return Err(ExperimentError::KernelInput { a_norm, phi_norm });
    }
    Ok(())
}

/// Ratios `‖D^k(φ − P_Aφ)‖_p / ‖Aφ‖_p` for several exponents, sharing transforms.
pub fn estimate_ratios(table: &SymbolTable, phi: &GridField, ps: &[f64], tol: f64) -> Result<Vec<f64>, ExperimentError> {
    let phi_hat = forward_transform(phi);
    let a_hat = table.symbol_hat(&phi_hat)?;
    check_kernel(&a_hat, &phi_hat, tol)?;
    let rest_hat = phi_hat.sub(&table.project_hat(&phi_hat)?)?;
    let dk = inverse_transform(&dk_hat(table.operator().k(), &rest_hat));
    let a_phi = inverse_transform(&a_hat);
    ps.iter()
        .map(|&p| Ok(lp_norm(&dk, p)? / lp_norm(&a_phi, p)?))
        .collect()
}

/// `‖D^k(φ − P_Aφ)‖_p / ‖Aφ‖_p`.
pub fn estimate_ratio(op: &Operator, phi: &GridField, p: f64, tol: f64) -> Result<f64, ExperimentError> {
    let table = SymbolTable::new(op, *phi.grid(), tol)?;
    Ok(estimate_ratios(&table, phi, &[p], tol)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportContext {
    RandomFields,
    WitnessFamily,
    SymbolBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frequency: Option<Vec<i64>>,
    pub ratio: f64,
    /// Closed-form symbol bound at the trial frequency, for witness trials.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub symbol_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub operator: String,
    pub context: ReportContext,
    pub p: f64,
    pub grid_sizes: Vec<usize>,
    pub max_freq: Option<usize>,
    pub seed: u64,
    pub tolerance: f64,
    pub trials: usize,
    pub excluded_kernel_trials: usize,
    pub verdict: Option<Verdict>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub records: Vec<TrialRecord>,
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn max_ratio_for_grid(&self, size: usize) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.grid == size)
            .map(|r| r.ratio)
            .reduce(f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// One row per trial: index, grid size, seed or frequency, ratio.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["trial", "N", "seed_or_frequency", "ratio"])
            .expect("writing to memory");
        for r in &self.records {
            let key = match (&r.frequency, r.seed) {
                (Some(f), _) => format!(
                    "({})",
                    f.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                ),
                (None, Some(s)) => s.to_string(),
                (None, None) => String::new(),
            };
            wtr.write_record([r.index.to_string(), r.grid.to_string(), key, format!("{:e}", r.ratio)])
                .expect("writing to memory");
        }
        String::from_utf8(wtr.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportInputs {
    pub operator: String,
    pub context: ReportContext,
    pub p: f64,
    pub grid_sizes: Vec<usize>,
    pub max_freq: Option<usize>,
    pub seed: u64,
    pub tolerance: f64,
    pub excluded_kernel_trials: usize,
    pub verdict: Option<Verdict>,
    pub records: Vec<TrialRecord>,
    pub notes: Vec<String>,
}

pub fn assemble_report(inputs: ReportInputs) -> Result<EstimateReport, ExperimentError> {
    if inputs.records.is_empty() {
        return Err(ExperimentError::EmptyExperiment);
    }
    let ratios: Vec<f64> = inputs.records.iter().map(|r| r.ratio).collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EstimateReport {
        operator: inputs.operator,
        context: inputs.context,
        p: inputs.p,
        grid_sizes: inputs.grid_sizes,
        max_freq: inputs.max_freq,
        seed: inputs.seed,
        tolerance: inputs.tolerance,
        trials: inputs.records.len() + inputs.excluded_kernel_trials,
        excluded_kernel_trials: inputs.excluded_kernel_trials,
        verdict: inputs.verdict,
        ratios,
        max_ratio,
        records: inputs.records,
        notes: inputs.notes,
    })
}

/// Settings of a random-field ratio sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub p: f64,
    pub trials: usize,
    pub grid_sizes: Vec<usize>,
    /// Band limit of the random fields; `None` uses `N/4` on every grid.
    pub max_freq: Option<usize>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            trials: 20,
            grid_sizes: vec![16],
            max_freq: None,
            seed: 0,
            tol: DEFAULT_KERNEL_TOL,
        }
    }
}

pub const TORUS_NOTE: &str = "fields live on the periodic torus [0,2pi)^n with integer frequencies; \
     constants differ from the whole-space estimate but boundedness does not";

/// Estimate ratios over seeded random band-limited fields. Trial `t` on an
/// `N` grid uses the seed `derive_seed(seed, [N, t])`; kernel inputs are
/// excluded and counted.
pub fn ratio_sweep(op: &Operator, cfg: &SweepConfig) -> Result<EstimateReport, ExperimentError> {
    if cfg.trials == 0 {
        return Err(ExperimentError::InvalidConfig("trials must be at least 1".into()));
    }
    let mut records = Vec::new();
    let mut excluded = 0;
    for &size in &cfg.grid_sizes {
        let grid = Grid::new(op.n(), size)?;
        let table = SymbolTable::new(op, grid, cfg.tol)?;
        let band = cfg.max_freq.unwrap_or(size / 4);
        let outcomes: Vec<(u64, Result<f64, ExperimentError>)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(cfg.seed, &[size as u64, t as u64]);
                let ratio = random_band_limited(grid, op.dim_v(), band, seed)
                    .map_err(ExperimentError::from)
                    .and_then(|phi| estimate_ratios(&table, &phi, &[cfg.p], cfg.tol))
                    .map(|r| r[0]);
                (seed, ratio)
            })
            .collect();
        for (seed, outcome) in outcomes {
            match outcome {
                Ok(ratio) => records.push(TrialRecord {
                    index: records.len() + excluded,
                    grid: size,
                    seed: Some(seed),
                    frequency: None,
                    ratio,
                    symbol_bound: None,
                }),
                Err(ExperimentError::KernelInput { .. }) => excluded += 1,
                Err(e) => return Err(e),
            }
        }
    }
    assemble_report(ReportInputs {
        operator: op.name().to_string(),
        context: ReportContext::RandomFields,
        p: cfg.p,
        grid_sizes: cfg.grid_sizes.clone(),
        max_freq: cfg.max_freq,
        seed: cfg.seed,
        tolerance: cfg.tol,
        excluded_kernel_trials: excluded,
        verdict: None,
        records,
        notes: vec![TORUS_NOTE.to_string()],
    })
}

/// `|ξ|^k |A*(ξ)w| / |A(ξ)A*(ξ)w|`.
pub fn symbol_bound_ratio(op: &Operator, xi: &[f64], w: &ComplexVector) -> Result<f64, ExperimentError> {
    let a = op.symbol(xi)?;
    let a_star_w = a.adjoint() * w;
    let scale = a.norm() * w.norm();
    if a_star_w.norm() <= DEGENERATE_W_TOL * scale || scale == 0.0 {
        return Err(ExperimentError::DegenerateW { xi: xi.to_vec() });
    }
    let aa_star_w = &a * &a_star_w;
    let denom = aa_star_w.norm();
    if denom == 0.0 {
        return Err(ExperimentError::DegenerateW { xi: xi.to_vec() });
    }
    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(xi_norm.powi(op.k() as i32) * a_star_w.norm() / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolBoundSup {
    /// Sampled lower bound on the best constant.
    pub sup: f64,
    pub xi: Vec<f64>,
    pub w: Vec<(f64, f64)>,
    pub evaluated: usize,
    pub skipped: usize,
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| {
            Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / Complex64::new(n, 0.0);
        }
    }
}

/// Largest symbol-bound ratio over the given directions, probing every left
/// singular vector of `A(ξ)` plus `probes` seeded random unit vectors.
/// Degenerate `(ξ, w)` pairs are skipped.
pub fn symbol_bound_sup(op: &Operator, samples: &[Vec<f64>], probes: usize, seed: u64) -> Result<SymbolBoundSup, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>, ComplexVector)> = None;
    let (mut evaluated, mut skipped) = (0, 0);
    for xi in samples {
        let svd = FullSvd::new(&op.symbol(xi)?)?;
        let mut candidates: Vec<ComplexVector> = svd.u.column_iter().map(|c| c.into_owned()).collect();
        candidates.extend((0..probes).map(|_| random_unit(op.dim_w(), &mut rng)));
        for w in candidates {
            match symbol_bound_ratio(op, xi, &w) {
                Ok(r) => {
                    evaluated += 1;
                    if best.as_ref().is_none_or(|(b, _, _)| r > *b) {
                        best = Some((r, xi.clone(), w));
                    }
                }
                Err(ExperimentError::DegenerateW { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let (sup, xi, w) = best.ok_or(ExperimentError::EmptyExperiment)?;
    Ok(SymbolBoundSup {
        sup,
        xi,
        w: w.iter().map(|z| (z.re, z.im)).collect(),
        evaluated,
        skipped,
    })
}

/// Spatial profile of a witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    /// A single Fourier mode.
    None,
    /// Product of periodic bumps centred at `π` on every axis: equal to 1 for
    /// `|t − π| ≤ radius/2`, zero for `|t − π| ≥ radius`. `radius ∈ (0, π]`.
    Bump { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessConfig {
    pub drop_direction: Vec<f64>,
    pub frequencies: Vec<Vec<i64>>,
    /// Codomain vector; `None` picks the top left singular vector of `A(ξ_m)`.
    pub w: Option<ComplexVector>,
    pub window: Window,
}

/// Integer frequencies `ξ_m = round(m d/|d|_∞) ± e_j` for `m = 2, 4, …, 2^rungs`.
///
/// `e_j` is the axis where the direction is smallest in magnitude (last such
/// axis on ties), with the sign pointing back towards zero, so `|ξ_m|_∞ = m`
/// and the angle to `d` shrinks like `1/m`.
pub fn frequency_ladder(direction: &[f64], rungs: usize) -> Vec<Vec<i64>> {
    let sup = direction.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let scaled: Vec<f64> = direction.iter().map(|x| x / sup).collect();
    let mut axis = 0;
    for (j, x) in scaled.iter().enumerate() {
        if x.abs() <= scaled[axis].abs() {
            axis = j;
        }
    }
    let offset = if scaled[axis].abs() * 2.0 >= 1.0 {
        -scaled[axis].signum() as i64
    } else {
        1
    };
    (1..=rungs)
        .map(|r| {
            let m = (1i64 << r) as f64;
            let mut xi: Vec<i64> = scaled.iter().map(|x| (m * x).round() as i64).collect();
            xi[axis] += offset;
            xi
        })
        .collect()
}

fn top_left_singular(op: &Operator, xi: &[f64]) -> Result<ComplexVector, ExperimentError> {
    let svd = FullSvd::new(&op.symbol(xi)?)?;
    Ok(svd.u.column(0).into_owned())
}

/// Codomain vector used for a witness at `ξ`.
pub fn witness_w(op: &Operator, cfg: &WitnessConfig, xi: &[f64]) -> Result<ComplexVector, ExperimentError> {
    match &cfg.w {
        Some(w) => Ok(w / Complex64::new(w.norm(), 0.0)),
        None => top_left_singular(op, xi),
    }
}

/// Smooth periodic bump on `[0, 2π)` centred at `π`.
pub fn bump_profile(t: f64, radius: f64) -> f64 {
    let s = (t - PI).abs();
    if s <= radius / 2.0 {
        return 1.0;
    }
    if s >= radius {
        return 0.0;
    }
    let u = (radius - s) / (radius / 2.0);
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    f(u) / (f(u) + f(1.0 - u))
}

pub fn bump_window(grid: Grid, radius: f64) -> Result<GridField, ExperimentError> {
    if !(radius > 0.0 && radius <= PI) {
        return Err(ExperimentError::InvalidConfig(format!("bump radius must lie in (0, pi], got {radius}")));
    }
    Ok(GridField::from_fn(grid, 1, |x, _| {
        Complex64::new(x.iter().map(|&t| bump_profile(t, radius)).product(), 0.0)
    })?)
}

/// Witness fields `φ_m = A*(g e^{ix·ξ_m} w)`, with `A*` applied spectrally.
pub fn witness_family(op: &Operator, cfg: &WitnessConfig, grid: Grid) -> Result<Vec<GridField>, ExperimentError> {
    let limit = grid.size() / 4;
    let window = match cfg.window {
        Window::None => None,
        Window::Bump { radius } => Some(bump_window(grid, radius)?),
    };
    cfg.frequencies
        .iter()
        .map(|freq| {
            if freq.len() != op.n() || freq.iter().any(|f| f.unsigned_abs() as usize > limit) || freq.iter().all(|&f| f == 0) {
                return Err(ExperimentError::UnresolvableFrequency {
                    freq: freq.clone(),
                    size: grid.size(),
                    limit,
                });
            }
            let xi: Vec<f64> = freq.iter().map(|&f| f as f64).collect();
            let w = witness_w(op, cfg, &xi)?;
            let a_star_w = op.adjoint_symbol(&xi)? * &w;
            if a_star_w.norm() <= DEGENERATE_W_TOL * op.symbol(&xi)?.norm() {
                return Err(ExperimentError::DegenerateW { xi });
            }
            match &window {
                None => Ok(single_mode(grid, freq, a_star_w.as_slice())?),
                Some(g) => {
                    let eta = GridField::from_fn(grid, op.dim_w(), |x, c| {
                        let phase: f64 = x.iter().zip(&xi).map(|(a, b)| a * b).sum();
                        Complex64::from_polar(1.0, phase) * w[c]
                    })?;
                    let eta = GridField::new(
                        grid,
                        op.dim_w(),
                        eta.data()
                            .chunks(op.dim_w())
                            .zip(g.data())
                            .flat_map(|(fib, gv)| fib.iter().map(move |z| z * gv))
                            .collect(),
                    )?;
                    Ok(crate::spectral::apply_adjoint(op, &eta)?)
                }
            }
        })
        .collect()
}

/// Outcome of the minimality comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityOutcome {
    pub holds: bool,
    pub comparisons: usize,
    /// `min_ψ ‖D^k(φ − ψ)‖₂ − ‖D^k(φ − P_Aφ)‖₂` over the trial kernel fields.
    pub worst_margin: f64,
    /// `|‖D^k(φ − ψ)‖₂ − ‖D^k(φ − P_Aφ)‖₂|` at `ψ = P_Aφ`, computed independently.
    pub equality_gap: f64,
}

fn dk_l2(table: &SymbolTable, field: &GridField) -> Result<f64, ExperimentError> {
    let hat = dk_hat(table.operator().k(), &forward_transform(field));
    Ok(lp_norm(&inverse_transform(&hat), 2.0)?)
}

/// Compares `‖D^k(φ − P_Aφ)‖₂` with `‖D^k(φ − ψ)‖₂` for `trials` kernel
/// fields `ψ = P_A(random field)` with seeds `derive_seed(seed, [t])`.
pub fn l2_minimality(table: &SymbolTable, phi: &GridField, trials: usize, seed: u64) -> Result<MinimalityOutcome, ExperimentError> {
    let grid = *table.grid();
    let op = table.operator();
    let p_phi = table.apply_pa(phi)?;
    let base = dk_l2(table, &phi.sub(&p_phi)?)?;
    let band = grid.size() / 4;
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let raw = random_band_limited(grid, op.dim_v(), band, derive_seed(seed, &[t as u64]))?;
            let psi = table.apply_pa(&raw)?;
            Ok(dk_l2(table, &phi.sub(&psi)?)? - base)
        })
        .collect::<Result<_, ExperimentError>>()?;
    let again = dk_l2(table, &phi.sub(&table.apply_pa(phi)?)?)?;
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let equality_gap = (again - base).abs();
    Ok(MinimalityOutcome {
        holds: margins.iter().all(|&m| m >= -MINIMALITY_SLACK) && equality_gap <= MINIMALITY_SLACK,
        comparisons: trials,
        worst_margin,
        equality_gap,
    })
}

/// True iff `P_Aφ` beats every trial kernel field, up to `1e-10`.
pub fn l2_minimality_check(op: &Operator, phi: &GridField, trials: usize, seed: u64) -> Result<bool, ExperimentError> {
    let table = SymbolTable::new(op, *phi.grid(), crate::ranklab::DEFAULT_RANK_TOL)?;
    Ok(l2_minimality(&table, phi, trials, seed)?.holds)
}

/// Direction of an integer frequency, for reports.
pub fn frequency_direction(freq: &[i64]) -> Vec<f64> {
    normalize(&freq.iter().map(|&f| f as f64).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar_w() -> ComplexVector {
        ComplexVector::from_element(1, c(1.0))
    }

    fn single(op: &Operator, grid: Grid, freq: &[i64], w: Option<ComplexVector>) -> GridField {
        let cfg = WitnessConfig {
            drop_direction: frequency_direction(freq),
            frequencies: vec![freq.to_vec()],
            w,
            window: Window::None,
        };
        witness_family(op, &cfg, grid).unwrap().remove(0)
    }

    #[test]
    fn ladder_shapes() {
        assert_eq!(frequency_ladder(&[1.0, 0.0], 3), vec![vec![2, 1], vec![4, 1], vec![8, 1]]);
        let diag = normalize(&[1.0, 1.0]);
        assert_eq!(frequency_ladder(&diag, 3), vec![vec![2, 1], vec![4, 3], vec![8, 7]]);
        assert_eq!(frequency_ladder(&[0.0, -1.0], 2), vec![vec![1, -2], vec![1, -4]]);
    }

    #[test]
    fn d1d2_single_mode_matches_closed_form() {
        let op = zoo::get("d1d2").unwrap();
        let grid = Grid::new(2, 64).unwrap();
        for freq in frequency_ladder(&[1.0, 0.0], 4) {
            let m = freq[0] as f64;
            let expected = (m * m + 1.0) / m;
            let phi = single(&op, grid, &freq, Some(scalar_w()));
            let r = estimate_ratio(&op, &phi, 2.0, DEFAULT_KERNEL_TOL).unwrap();
            assert!((r - expected).abs() < 1e-8, "{freq:?}: {r} vs {expected}");
            let sb = symbol_bound_ratio(&op, &[m, 1.0], &scalar_w()).unwrap();
            assert!((sb - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn d1d2_symbol_bound_near_axis() {
        let op = zoo::get("d1d2").unwrap();
        for delta in [0.5, 1e-2, 1e-4] {
            let r = symbol_bound_ratio(&op, &[1.0, delta], &scalar_w()).unwrap();
            let expected = (1.0 + delta * delta) / delta;
            assert!((r - expected).abs() <= 1e-10 * expected);
        }
    }

    #[test]
    fn witness_ratios_increase_along_ladders() {
        let grid = Grid::new(2, 64).unwrap();
        for (name, dir) in [("d1d2", vec![1.0, 0.0]), ("wave", normalize(&[1.0, 1.0]))] {
            let op = zoo::get(name).unwrap();
            let ratios: Vec<f64> = frequency_ladder(&dir, 4)
                .iter()
                .map(|f| estimate_ratio(&op, &single(&op, grid, f, None), 2.0, DEFAULT_KERNEL_TOL).unwrap())
                .collect();
            assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{name}: {ratios:?}");
        }
    }

    #[test]
    fn constant_rank_single_modes_have_unit_ratio() {
        let grid = Grid::new(3, 16).unwrap();
        let op = zoo::get("divergence").unwrap();
        for freq in [[1, 0, 0], [2, -3, 1], [0, 4, 4]] {
            let phi = single(&op, grid, &freq, None);
            let r = estimate_ratio(&op, &phi, 2.0, DEFAULT_KERNEL_TOL).unwrap();
            assert!((r - 1.0).abs() < 1e-8, "{freq:?}: {r}");
        }
    }

    #[test]
    fn gradient_sweep_has_unit_ratio() {
        let op = zoo::get("gradient").unwrap();
        let cfg = SweepConfig {
            trials: 5,
            grid_sizes: vec![16, 32],
            seed: 3,
            ..SweepConfig::default()
        };
        let report = ratio_sweep(&op, &cfg).unwrap();
        assert_eq!(report.trials, 10);
        assert_eq!(report.excluded_kernel_trials, 0);
        for r in &report.ratios {
            assert!((r - 1.0).abs() < 1e-10, "{r}");
        }
        assert!(report.max_ratio_for_grid(32).is_some());
        assert!(report.max_ratio_for_grid(8).is_none());
    }

    #[test]
    fn sweep_is_deterministic_and_serializes() {
        let op = zoo::get("curl").unwrap();
        let cfg = SweepConfig {
            trials: 4,
            grid_sizes: vec![8],
            seed: 11,
            p: 3.0,
            ..SweepConfig::default()
        };
        let a = ratio_sweep(&op, &cfg).unwrap();
        let b = ratio_sweep(&op, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let back: EstimateReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.to_csv().lines().count(), 5);
        assert!(a.notes.iter().any(|n| n.contains("torus")));
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let op = zoo::get("symmetric_gradient").unwrap();
        let grid = Grid::new(2, 16).unwrap();
        let phi = random_band_limited(grid, 2, 4, 5).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let r = estimate_ratio(&op, &phi, p, DEFAULT_KERNEL_TOL).unwrap();
            let rc = estimate_ratio(&op, &phi.scale(Complex64::new(-3.7, 1.1)), p, DEFAULT_KERNEL_TOL).unwrap();
            assert!((r - rc).abs() <= 1e-12 * r.max(1.0), "{p}: {r} vs {rc}");
        }
    }

    #[test]
    fn kernel_inputs_are_rejected() {
        let op = zoo::get("divergence").unwrap();
        let grid = Grid::new(3, 8).unwrap();
        // (0, 1, 0) e^{ix_1} is divergence free.
        let phi = single_mode(grid, &[1, 0, 0], &[c(0.0), c(1.0), c(0.0)]).unwrap();
        assert!(matches!(
            estimate_ratio(&op, &phi, 2.0, DEFAULT_KERNEL_TOL),
            Err(ExperimentError::KernelInput { .. })
        ));
    }

    #[test]
    fn degenerate_codomain_vector() {
        let op = zoo::get("curl").unwrap();
        let xi = [1.0, 2.0, -0.5];
        let w = ComplexVector::from_iterator(3, xi.iter().map(|&x| c(x)));
        assert!(matches!(
            symbol_bound_ratio(&op, &xi, &w),
            Err(ExperimentError::DegenerateW { .. })
        ));
    }

    #[test]
    fn unresolvable_frequency() {
        let op = zoo::get("d1d2").unwrap();
        let cfg = WitnessConfig {
            drop_direction: vec![1.0, 0.0],
            frequencies: vec![vec![8, 1]],
            w: None,
            window: Window::None,
        };
        let err = witness_family(&op, &cfg, Grid::new(2, 16).unwrap()).unwrap_err();
        assert!(matches!(err, ExperimentError::UnresolvableFrequency { limit: 4, .. }));
    }

    #[test]
    fn witness_is_orthogonal_to_kernel() {
        let op = zoo::get("curl").unwrap();
        let grid = Grid::new(3, 16).unwrap();
        let phi = single(&op, grid, &[2, -1, 3], None);
        let p_phi = crate::spectral::apply_pa(&op, &phi, 1e-10).unwrap();
        assert!(p_phi.data_norm() < 1e-12 * phi.data_norm());
    }

    #[test]
    fn bump_profile_shape() {
        let r = 2.0;
        assert_eq!(bump_profile(PI, r), 1.0);
        assert_eq!(bump_profile(PI + 0.99, r), 1.0);
        assert_eq!(bump_profile(PI - 2.0, r), 0.0);
        let mut prev = 1.0;
        for j in 0..100 {
            let v = bump_profile(PI + 1.0 + j as f64 / 100.0, r);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(bump_window(Grid::new(2, 8).unwrap(), 4.0).is_err());
    }

    #[test]
    fn windowed_witness_approaches_single_mode() {
        let op = zoo::get("d1d2").unwrap();
        let grid = Grid::new(2, 64).unwrap();
        let freq = vec![8, 8];
        let xi = [8.0, 8.0];
        let single_value = symbol_bound_ratio(&op, &xi, &scalar_w()).unwrap();
        let errors: Vec<f64> = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI]
            .iter()
            .map(|&radius| {
                let cfg = WitnessConfig {
                    drop_direction: frequency_direction(&freq),
                    frequencies: vec![freq.clone()],
                    w: Some(scalar_w()),
                    window: Window::Bump { radius },
                };
                let phi = witness_family(&op, &cfg, grid).unwrap().remove(0);
                let r = estimate_ratio(&op, &phi, 2.0, DEFAULT_KERNEL_TOL).unwrap();
                (r - single_value).abs() / single_value
            })
            .collect();
        assert!(errors[1..].iter().all(|&e| e <= 0.1), "{errors:?}");
        assert!(errors[3] < errors[0], "{errors:?}");
    }

    #[test]
    fn minimality_against_kernel_fields() {
        for (name, n) in [("curl", 3), ("divergence", 3), ("d1d2", 2)] {
            let op = zoo::get(name).unwrap();
            let grid = Grid::new(n, 8).unwrap();
            let phi = random_band_limited(grid, op.dim_v(), 2, 1).unwrap();
            let table = SymbolTable::new(&op, grid, 1e-10).unwrap();
            let out = l2_minimality(&table, &phi, 10, 2).unwrap();
            assert!(out.holds, "{name}: {out:?}");
            assert!(out.worst_margin >= 0.0);
        }
    }

    #[test]
    fn symbol_bound_sup_values() {
        let div = zoo::get("divergence").unwrap();
        let dirs = crate::ranklab::sphere_samples(3, 20, 4);
        let sup = symbol_bound_sup(&div, &dirs, 2, 0).unwrap();
        assert!((sup.sup - 1.0).abs() < 1e-10);

        let d1d2 = zoo::get("d1d2").unwrap();
        let coarse = symbol_bound_sup(&d1d2, &[vec![1.0, 0.1]], 0, 0).unwrap();
        let fine = symbol_bound_sup(&d1d2, &[vec![1.0, 0.1], vec![1.0, 0.001]], 0, 0).unwrap();
        assert!((coarse.sup - 1.01 / 0.1).abs() < 1e-10);
        assert!((fine.sup - (1.0 + 1e-6) / 1e-3).abs() < 1e-8);
    }

    #[test]
    fn empty_reports_are_rejected() {
        let inputs = ReportInputs {
            operator: "x".into(),
            context: ReportContext::RandomFields,
            p: 2.0,
            grid_sizes: vec![8],
            max_freq: None,
            seed: 0,
            tolerance: 1e-10,
            excluded_kernel_trials: 3,
            verdict: None,
            records: vec![],
            notes: vec![],
        };
        assert_eq!(assemble_report(inputs), Err(ExperimentError::EmptyExperiment));
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[16, 0]);
        assert_eq!(a, derive_seed(1, &[16, 0]));
        assert_ne!(a, derive_seed(1, &[16, 1]));
        assert_ne!(a, derive_seed(1, &[32, 0]));
        assert_ne!(a, derive_seed(2, &[16, 0]));
    }
}
