//! Set-function Fourier transforms.
//!
//! Three transforms are supported, each a change of basis on the `2^m`
//! dimensional space of set functions:
//!
//! | kind | forward `F[y,x]`                         | inverse `F⁻¹[x,y]` |
//! |------|------------------------------------------|--------------------|
//! | FT3  | `(-1)^(|y|-|x|) · [x ⊆ y]`               | `[y ⊆ x]`          |
//! | FT4  | `(-1)^|x∩y| · [x ∪ y = M]`               | `[x ∩ y = ∅]`      |
//! | WHT  | `2^-m · (-1)^|x∩y|`                      | `(-1)^|x∩y|`       |
//!
//! All dense transforms run in `O(m·2^m)` with one in-place pass per item.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{Bundle, MAX_ITEMS};
use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this are treated as zero.
pub const NONZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Wht,
    Ft3,
    Ft4,
}

impl TransformKind {
    pub const ALL: [TransformKind; 3] = [TransformKind::Ft3, TransformKind::Ft4, TransformKind::Wht];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Wht => "wht",
            TransformKind::Ft3 => "ft3",
            TransformKind::Ft4 => "ft4",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wht" => Ok(TransformKind::Wht),
            "ft3" => Ok(TransformKind::Ft3),
            "ft4" => Ok(TransformKind::Ft4),
            other => Err(Error::Parse(format!("unknown transform kind {other:?}"))),
        }
    }
}

/// A set function (or a dense spectrum) as a table indexed by bundle bits.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSetFunction {
    m: usize,
    table: Vec<f64>,
}

impl DenseSetFunction {
    pub fn new(m: usize, table: Vec<f64>) -> Result<DenseSetFunction> {
        check_width(m)?;
        if table.len() != 1usize << m {
            return Err(Error::InvalidInstance(format!(
                "table of length {} does not match 2^{m}",
                table.len()
            )));
        }
        Ok(DenseSetFunction { m, table })
    }

    pub fn zeros(m: usize) -> Result<DenseSetFunction> {
        check_width(m)?;
        Ok(DenseSetFunction { m, table: vec![0.0; 1 << m] })
    }

    pub fn from_fn(m: usize, f: impl Fn(Bundle) -> f64) -> Result<DenseSetFunction> {
        check_width(m)?;
        Ok(DenseSetFunction { m, table: (0..1u32 << m).map(|b| f(Bundle(b))).collect() })
    }

    pub fn num_items(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, b: Bundle) -> f64 {
        self.table[b.index()]
    }

    pub fn set(&mut self, b: Bundle, value: f64) {
        self.table[b.index()] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.table
    }

    pub fn into_values(self) -> Vec<f64> {
        self.table
    }

    pub fn iter(&self) -> impl Iterator<Item = (Bundle, f64)> + '_ {
        self.table.iter().enumerate().map(|(i, v)| (Bundle(i as u32), *v))
    }
}

fn check_width(m: usize) -> Result<()> {
    if m > MAX_ITEMS {
        return Err(Error::Capacity(format!("{m} items exceeds the {MAX_ITEMS}-item limit of the full transform")));
    }
    Ok(())
}

/// `a[x] += a[x \ {j}]` for every `x ∋ j`, over all items: `a(x) ← Σ_{y⊆x} a(y)`.
fn zeta_in_place(a: &mut [f64]) {
    let n = a.len();
    let mut half = 1;
    while half < n {
        for block in a.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (h, l) in hi.iter_mut().zip(lo.iter()) {
                *h += *l;
            }
        }
        half *= 2;
    }
}

/// Inverse of [`zeta_in_place`].
fn mobius_in_place(a: &mut [f64]) {
    let n = a.len();
    let mut half = 1;
    while half < n {
        for block in a.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (h, l) in hi.iter_mut().zip(lo.iter()) {
                *h -= *l;
            }
        }
        half *= 2;
    }
}

/// Unnormalised Walsh-Hadamard butterfly.
fn hadamard_in_place(a: &mut [f64]) {
    let n = a.len();
    let mut half = 1;
    while half < n {
        for block in a.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*l, *h);
                *l = x + y;
                *h = x - y;
            }
        }
        half *= 2;
    }
}

/// Forward transform `φ = F v`.
pub fn forward(values: &DenseSetFunction, kind: TransformKind) -> Result<DenseSetFunction> {
    check_width(values.m)?;
    let mut a = values.table.clone();
    match kind {
        TransformKind::Ft3 => mobius_in_place(&mut a),
        TransformKind::Ft4 => {
            // φ = Möbius of g, where g(z) = v(M \ z); complementing reverses the table.
            a.reverse();
            mobius_in_place(&mut a);
        }
        TransformKind::Wht => {
            hadamard_in_place(&mut a);
            let scale = 1.0 / a.len() as f64;
            a.iter_mut().for_each(|c| *c *= scale);
        }
    }
    Ok(DenseSetFunction { m: values.m, table: a })
}

/// Inverse transform `v = F⁻¹ φ`.
pub fn inverse(spectrum: &DenseSetFunction, kind: TransformKind) -> Result<DenseSetFunction> {
    check_width(spectrum.m)?;
    let mut a = spectrum.table.clone();
    match kind {
        TransformKind::Ft3 => zeta_in_place(&mut a),
        TransformKind::Ft4 => {
            zeta_in_place(&mut a);
            a.reverse();
        }
        TransformKind::Wht => hadamard_in_place(&mut a),
    }
    Ok(DenseSetFunction { m: spectrum.m, table: a })
}

/// Entry `F[y, x]` of the forward matrix.
pub fn forward_entry(kind: TransformKind, m: usize, y: Bundle, x: Bundle) -> f64 {
    let sign = |k: u32| if k % 2 == 0 { 1.0 } else { -1.0 };
    match kind {
        TransformKind::Ft3 => {
            if x.is_subset_of(y) {
                sign(y.cardinality() - x.cardinality())
            } else {
                0.0
            }
        }
        TransformKind::Ft4 => {
            if x.union(y) == Bundle::full(m) {
                sign(x.intersect(y).cardinality())
            } else {
                0.0
            }
        }
        TransformKind::Wht => sign(x.intersect(y).cardinality()) / (1u64 << m) as f64,
    }
}

/// Entry `F⁻¹[x, y]` of the inverse matrix.
#[inline]
pub fn inverse_entry(kind: TransformKind, x: Bundle, y: Bundle) -> f64 {
    match kind {
        TransformKind::Ft3 => f64::from(u8::from(y.is_subset_of(x))),
        TransformKind::Ft4 => f64::from(u8::from(x.is_disjoint(y))),
        TransformKind::Wht => {
            if x.intersect(y).cardinality() % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Fourier coefficients on a (small) support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSpectrum {
    kind: TransformKind,
    m: usize,
    coeffs: BTreeMap<Bundle, f64>,
}

impl SparseSpectrum {
    /// Builds a spectrum, dropping coefficients with `|c| <= NONZERO_TOL`.
    /// Repeated frequencies are summed.
    pub fn new(kind: TransformKind, m: usize, coeffs: impl IntoIterator<Item = (Bundle, f64)>) -> Result<SparseSpectrum> {
        check_width(m)?;
        let full = Bundle::full(m);
        let mut map = BTreeMap::new();
        for (y, c) in coeffs {
            if !y.is_subset_of(full) {
                return Err(Error::InvalidInstance(format!("frequency {y} outside {m} items")));
            }
            *map.entry(y).or_insert(0.0) += c;
        }
        map.retain(|_, c: &mut f64| c.abs() > NONZERO_TOL);
        Ok(SparseSpectrum { kind, m, coeffs: map })
    }

    pub fn empty(kind: TransformKind, m: usize) -> SparseSpectrum {
        SparseSpectrum { kind, m, coeffs: BTreeMap::new() }
    }

    pub fn from_dense(spectrum: &DenseSetFunction, kind: TransformKind) -> SparseSpectrum {
        SparseSpectrum {
            kind,
            m: spectrum.m,
            coeffs: spectrum.iter().filter(|(_, c)| c.abs() > NONZERO_TOL).collect(),
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn num_items(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, y: Bundle) -> f64 {
        self.coeffs.get(&y).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = Bundle> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Bundle, f64)> + '_ {
        self.coeffs.iter().map(|(y, c)| (*y, *c))
    }

    pub fn support_matrix(&self) -> SupportMatrix {
        SupportMatrix { m: self.m, rows: self.support().collect() }
    }

    /// Evaluates the approximation at `x` with the succinct forms
    /// `⟨φ, max(0, 1 − W(1−x))⟩` (FT3), `⟨φ, max(0, 1 − W x)⟩` (FT4) and
    /// `⟨φ, (−1)^{W x}⟩` (WHT).
    pub fn evaluate(&self, x: Bundle) -> f64 {
        let not_x = x.complement(self.m);
        match self.kind {
            TransformKind::Ft3 => self
                .iter()
                .map(|(y, c)| c * (1.0 - f64::from(y.intersect(not_x).cardinality())).max(0.0))
                .sum(),
            TransformKind::Ft4 => self
                .iter()
                .map(|(y, c)| c * (1.0 - f64::from(y.intersect(x).cardinality())).max(0.0))
                .sum(),
            TransformKind::Wht => self
                .iter()
                .map(|(y, c)| if y.intersect(x).cardinality() % 2 == 0 { c } else { -c })
                .sum(),
        }
    }

    /// Dense spectrum with zeros off the support.
    pub fn to_dense_spectrum(&self) -> Result<DenseSetFunction> {
        let mut d = DenseSetFunction::zeros(self.m)?;
        for (y, c) in self.iter() {
            d.set(y, c);
        }
        Ok(d)
    }

    /// The approximated set function on all bundles.
    pub fn to_dense_function(&self) -> Result<DenseSetFunction> {
        inverse(&self.to_dense_spectrum()?, self.kind)
    }
}

/// Free-function form of [`SparseSpectrum::evaluate`].
pub fn evaluate_sparse(s: &SparseSpectrum, x: Bundle) -> f64 {
    s.evaluate(x)
}

/// Binary `k × m` matrix whose row `l` is the indicator vector of the
/// `l`-th support frequency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportMatrix {
    m: usize,
    rows: Vec<Bundle>,
}

impl SupportMatrix {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.m
    }

    pub fn entry(&self, row: usize, item: usize) -> u8 {
        u8::from(self.rows[row].contains(item))
    }

    pub fn frequency(&self, row: usize) -> Bundle {
        self.rows[row]
    }

    /// `W x` as integer counts.
    pub fn apply(&self, x: Bundle) -> Vec<u32> {
        self.rows.iter().map(|y| y.intersect(x).cardinality()).collect()
    }
}

/// Share of spectral energy per frequency cardinality `0..=m`.
pub fn energy_by_cardinality(spectrum: &DenseSetFunction) -> Result<Vec<f64>> {
    let mut energy = vec![0.0; spectrum.m + 1];
    for (y, c) in spectrum.iter() {
        energy[y.cardinality() as usize] += c * c;
    }
    let total: f64 = energy.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedEnergy);
    }
    energy.iter_mut().for_each(|e| *e /= total);
    Ok(energy)
}

/// Euclidean norm of column `y` of `F⁻¹`.
pub fn inverse_column_norm(kind: TransformKind, y: Bundle, m: usize) -> f64 {
    match kind {
        // both count 2^{m-|y|} ones: supersets of y, or bundles disjoint from y
        TransformKind::Ft3 | TransformKind::Ft4 => ((1u64 << (m - y.cardinality() as usize)) as f64).sqrt(),
        TransformKind::Wht => ((1u64 << m) as f64).sqrt(),
    }
}

/// A coefficient together with its selection score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankedCoefficient {
    pub frequency: Bundle,
    pub coefficient: f64,
    pub score: f64,
}

/// All nonzero coefficients ordered by descending score `|φ(y)|·‖F⁻¹[·,y]‖`,
/// ties broken by ascending bundle. For the WHT the column norm is constant,
/// so this is plain magnitude order.
pub fn rank_coefficients(spectrum: &DenseSetFunction, kind: TransformKind) -> Vec<RankedCoefficient> {
    let m = spectrum.m;
    let mut ranked: Vec<RankedCoefficient> = spectrum
        .iter()
        .filter(|(_, c)| c.abs() > NONZERO_TOL)
        .map(|(y, c)| RankedCoefficient { frequency: y, coefficient: c, score: c.abs() * inverse_column_norm(kind, y, m) })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.frequency.cmp(&b.frequency)));
    ranked
}

/// The best `k` coefficients for the given transform.
pub fn select_best_k(spectrum: &DenseSetFunction, kind: TransformKind, k: usize) -> SparseSpectrum {
    let coeffs: BTreeMap<Bundle, f64> = rank_coefficients(spectrum, kind)
        .into_iter()
        .take(k)
        .map(|r| (r.frequency, r.coefficient))
        .collect();
    SparseSpectrum { kind, m: spectrum.m, coeffs }
}
