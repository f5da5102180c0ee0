//! Support discovery, reconstruction queries and sparse fitting.
//!
//! A surrogate's full transform ranks candidate frequencies (the superset
//! `S¹`). Reconstruction queries `S²` are derived from that ranking, and the
//! coefficients on `S¹` are then fit to the reports: by an L1 path for the
//! WHT, by ridge-stabilised least squares for FT3/FT4.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{Bundle, ReportSet, ValuationOracle, MAX_ITEMS};
use crate::error::{Error, Result};
use crate::fourier::{self, inverse_entry, DenseSetFunction, SparseSpectrum, TransformKind};

/// Coefficients at or below this magnitude count as zero on the L1 path.
pub const PATH_NONZERO_TOL: f64 = 1e-9;

/// Candidate frequencies ordered by descending selection score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportSuperset {
    pub kind: TransformKind,
    pub m: usize,
    pub frequencies: Vec<Bundle>,
}

impl SupportSuperset {
    pub fn new(kind: TransformKind, m: usize, frequencies: Vec<Bundle>) -> Result<SupportSuperset> {
        let distinct: BTreeSet<Bundle> = frequencies.iter().copied().collect();
        if distinct.len() != frequencies.len() {
            return Err(Error::InvalidInstance("duplicate frequency in support superset".into()));
        }
        if let Some(y) = frequencies.iter().find(|y| y.bits() >> m != 0) {
            return Err(Error::InvalidInstance(format!("frequency {y} exceeds {m} items")));
        }
        Ok(SupportSuperset { kind, m, frequencies })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// The `k` highest-ranked frequencies.
    pub fn prefix(&self, k: usize) -> SupportSuperset {
        SupportSuperset { kind: self.kind, m: self.m, frequencies: self.frequencies[..k.min(self.len())].to_vec() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Largest number of nonzero coefficients kept by the L1 path.
    pub target_support: usize,
    /// Size of `S¹` for the WHT, capped at `2^m`.
    pub superset_size: usize,
    /// Number of λ values on the geometric path.
    pub path_points: usize,
    /// Smallest λ as a fraction of `λ_max`.
    pub path_ratio: f64,
    /// Ridge term relative to the trace of the normal matrix.
    pub ridge: f64,
    /// Refit the selected L1 support by least squares.
    pub debias: bool,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig { target_support: 100, superset_size: 2000, path_points: 100, path_ratio: 1e-6, ridge: 1e-10, debias: true }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.target_support == 0 || self.path_points == 0 || !(self.path_ratio > 0.0 && self.path_ratio < 1.0) {
            return Err(Error::Config("fit config needs target_support ≥ 1, path_points ≥ 1 and 0 < path_ratio < 1".into()));
        }
        Ok(())
    }
}

/// Ranks the frequencies of `model`'s full transform and keeps the best
/// `size` nonzero ones.
pub fn discover_support(model: &dyn ValuationOracle, kind: TransformKind, size: usize) -> Result<SupportSuperset> {
    let m = model.num_items();
    if m > MAX_ITEMS {
        return Err(Error::Unsupported(format!("support discovery for {m} > {MAX_ITEMS} items needs a sparse transform")));
    }
    let spectrum = fourier::forward(&model.dense()?, kind)?;
    Ok(rank_support(&spectrum, kind, size))
}

/// As [`discover_support`], starting from a dense spectrum.
pub fn rank_support(spectrum: &DenseSetFunction, kind: TransformKind, size: usize) -> SupportSuperset {
    let frequencies = fourier::rank_coefficients(spectrum, kind).into_iter().take(size).map(|r| r.frequency).collect();
    SupportSuperset { kind, m: spectrum.num_items(), frequencies }
}

/// Bundle queried to identify frequency `y`.
pub fn query_for(kind: TransformKind, y: Bundle, m: usize) -> Bundle {
    match kind {
        TransformKind::Ft3 => y,
        TransformKind::Ft4 | TransformKind::Wht => y.complement(m),
    }
}

/// Reconstruction queries `S²`: the query bundles of the best-ranked
/// frequencies, walking down the ranking past collisions and bundles in
/// `exclude` until `l3` queries are found or the ranking runs out.
pub fn reconstruction_queries(s1: &SupportSuperset, l3: usize, exclude: &BTreeSet<Bundle>) -> Vec<Bundle> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(l3);
    for y in &s1.frequencies {
        if out.len() == l3 {
            break;
        }
        let q = query_for(s1.kind, *y, s1.m);
        if !exclude.contains(&q) && seen.insert(q) {
            out.push(q);
        }
    }
    if out.len() < l3 {
        log::info!("reconstruction queries: {} of {l3} after skipping repeats", out.len());
    }
    out
}

fn design(reports: &ReportSet, s1: &SupportSuperset, kind: TransformKind) -> (Vec<Vec<f64>>, Vec<f64>) {
    // column-major: one vector per frequency
    let cols = s1.frequencies.iter().map(|y| reports.bundles().map(|x| inverse_entry(kind, x, *y)).collect()).collect();
    let b = reports.iter().map(|(_, v)| v).collect();
    (cols, b)
}

/// L1-regularised least squares over the WHT columns of `s1`.
///
/// The ∅ frequency, when present, is an unpenalised intercept. Walks a
/// geometric λ path from `λ_max = ‖Aᵀr‖∞` (`r` the centred reports) downwards
/// with warm started coordinate descent and keeps the solution at the smallest λ whose
/// support has at most `cfg.target_support` entries. With `cfg.debias` the
/// kept support is refit by least squares.
pub fn fit_wht_lasso(reports: &ReportSet, s1: &SupportSuperset, cfg: &FitConfig) -> Result<SparseSpectrum> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    if s1.kind != TransformKind::Wht {
        return Err(Error::Unsupported(format!("L1 fit for {} spectra", s1.kind)));
    }
    cfg.validate()?;
    let (cols, b) = design(reports, s1, TransformKind::Wht);
    let p = cols.len();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, c)| a * c).sum::<f64>();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    // the constant column acts as an intercept and is not penalised
    let constant = s1.frequencies.iter().position(|y| y.is_empty());
    let mut w = vec![0.0; p];
    let mut r = b.clone();
    if let Some(c) = constant {
        w[c] = b.iter().sum::<f64>() / b.len() as f64;
        r.iter_mut().for_each(|v| *v -= w[c]);
    }
    let lambda_max =
        (0..p).filter(|&j| Some(j) != constant).map(|j| dot(&cols[j], &r).abs()).fold(0.0, f64::max);
    if p == 0 {
        return Ok(SparseSpectrum::empty(TransformKind::Wht, s1.m));
    }

    let mut kept: Vec<f64> = w.clone();
    if lambda_max > PATH_NONZERO_TOL {
        let steps = cfg.path_points.max(2);
        let scale_b = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        for t in 0..steps {
            let lambda = lambda_max * cfg.path_ratio.powf(t as f64 / (steps - 1) as f64);
            coordinate_descent(&cols, &norms, lambda, constant, &mut w, &mut r, 1e-10 * scale_b);
            let nnz = w.iter().filter(|v| v.abs() > PATH_NONZERO_TOL).count();
            if nnz > cfg.target_support {
                break;
            }
            kept.copy_from_slice(&w);
        }
    }

    let support: Vec<usize> = (0..p).filter(|&j| kept[j].abs() > PATH_NONZERO_TOL).collect();
    let coeffs: Vec<f64> = if cfg.debias && !support.is_empty() {
        let sub: Vec<Vec<f64>> = support.iter().map(|&j| cols[j].clone()).collect();
        ridge_least_squares(&sub, &b, cfg.ridge)?
    } else {
        support.iter().map(|&j| kept[j]).collect()
    };
    SparseSpectrum::new(TransformKind::Wht, s1.m, support.iter().zip(coeffs).map(|(&j, c)| (s1.frequencies[j], c)))
}

/// Cyclic coordinate descent for `½‖b − Aw‖² + λ‖w‖₁` with an active-set
/// strategy; column `free` is left out of the penalty; `r = b − Aw` is kept in sync with `w`.
fn coordinate_descent(
    cols: &[Vec<f64>],
    norms: &[f64],
    lambda: f64,
    free: Option<usize>,
    w: &mut [f64],
    r: &mut [f64],
    tol: f64,
) {
    let sweep = |idx: &mut dyn Iterator<Item = usize>, w: &mut [f64], r: &mut [f64]| -> f64 {
        let mut max_delta: f64 = 0.0;
        for j in idx {
            if norms[j] == 0.0 {
                continue;
            }
            let col = &cols[j];
            let rho = col.iter().zip(r.iter()).map(|(a, v)| a * v).sum::<f64>() + norms[j] * w[j];
            let new = if Some(j) == free { rho } else { soft_threshold(rho, lambda) } / norms[j];
            let delta = new - w[j];
            if delta != 0.0 {
                for (v, a) in r.iter_mut().zip(col) {
                    *v -= delta * a;
                }
                w[j] = new;
                max_delta = max_delta.max(delta.abs() * norms[j].sqrt());
            }
        }
        max_delta
    };
    for _ in 0..200 {
        let full = sweep(&mut (0..w.len()), w, r);
        if full <= tol {
            return;
        }
        let active: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
        for _ in 0..10_000 {
            if sweep(&mut active.iter().copied(), w, r) <= tol {
                break;
            }
        }
    }
}

#[inline]
fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Solves `(AᵀA + ε·tr(AᵀA)·I) w = Aᵀb` by Cholesky; `cols` holds the
/// columns of `A`.
fn ridge_least_squares(cols: &[Vec<f64>], b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let p = cols.len();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, c)| a * c).sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let trace = gram.trace();
    let eps = ridge * if trace > 0.0 { trace } else { 1.0 };
    for i in 0..p {
        gram[(i, i)] += eps;
    }
    let rhs = DVector::from_iterator(p, cols.iter().map(|c| c.iter().zip(b).map(|(a, v)| a * v).sum::<f64>()));
    let chol = gram.cholesky().ok_or_else(|| Error::Training("normal equations are not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Least-squares coefficients on `s1` for FT3/FT4.
pub fn fit_least_squares(reports: &ReportSet, s1: &SupportSuperset, ridge: f64) -> Result<SparseSpectrum> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    if s1.kind == TransformKind::Wht {
        return Err(Error::Unsupported("least-squares fit is for FT3/FT4; use the L1 path for the WHT".into()));
    }
    if s1.is_empty() {
        return Ok(SparseSpectrum::empty(s1.kind, s1.m));
    }
    let (cols, b) = design(reports, s1, s1.kind);
    let w = ridge_least_squares(&cols, &b, ridge)?;
    SparseSpectrum::new(s1.kind, s1.m, s1.frequencies.iter().copied().zip(w))
}

/// Fits `s1`'s kind with the matching method.
pub fn fit_spectrum(reports: &ReportSet, s1: &SupportSuperset, cfg: &FitConfig) -> Result<SparseSpectrum> {
    match s1.kind {
        TransformKind::Wht => fit_wht_lasso(reports, s1, cfg),
        _ => fit_least_squares(reports, s1, cfg.ridge),
    }
}

/// Spectral energy captured by `selected` relative to `best`.
pub fn energy_ratio(selected: &BTreeSet<Bundle>, best: &BTreeSet<Bundle>, truth: &DenseSetFunction) -> Result<f64> {
    let energy = |s: &BTreeSet<Bundle>| s.iter().map(|y| truth.get(*y).powi(2)).sum::<f64>();
    let denom = energy(best);
    if denom <= 0.0 {
        return Err(Error::UndefinedEnergy);
    }
    Ok(energy(selected) / denom)
}

/// Numerical rank of the sampling matrix `F⁻¹[S², S¹]`, a diagnostic for
/// how well the queries identify the coefficients.
pub fn sampling_rank(kind: TransformKind, queries: &[Bundle], s1: &SupportSuperset) -> usize {
    let a = DMatrix::from_fn(queries.len(), s1.len(), |i, j| inverse_entry(kind, queries[i], s1.frequencies[j]));
    if a.is_empty() {
        return 0;
    }
    a.rank(1e-9 * a.norm().max(1.0))
}
