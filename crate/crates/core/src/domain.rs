//! Bundles, allocations, reports and valuation oracles.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{DenseSetFunction, SparseSpectrum};

/// Largest supported number of items.
pub const MAX_ITEMS: usize = 29;

/// A set of items stored as a bitmask: item `j` (0-based) is present iff bit
/// `j` is set.
///
/// The width `m` is carried by the surrounding context (the set function,
/// instance or spectrum the bundle belongs to).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bundle(pub u32);

impl Bundle {
    pub const EMPTY: Bundle = Bundle(0);

    pub fn full(m: usize) -> Bundle {
        debug_assert!(m <= MAX_ITEMS);
        Bundle(((1u64 << m) - 1) as u32)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Bundle {
        Bundle(items.into_iter().fold(0u32, |acc, j| acc | (1 << j)))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn contains(self, item: usize) -> bool {
        self.0 >> item & 1 == 1
    }

    #[inline]
    pub fn cardinality(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn intersect(self, other: Bundle) -> Bundle {
        Bundle(self.0 & other.0)
    }

    #[inline]
    pub fn union(self, other: Bundle) -> Bundle {
        Bundle(self.0 | other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: Bundle) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_disjoint(self, other: Bundle) -> bool {
        self.0 & other.0 == 0
    }

    #[inline]
    pub fn complement(self, m: usize) -> Bundle {
        Bundle(!self.0 & Bundle::full(m).0)
    }

    pub fn items(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |j| bits >> j & 1 == 1)
    }

    /// Binary string with item 1 leftmost, e.g. `Bundle(0b100)` with `m = 3`
    /// renders as `"001"`.
    pub fn to_binary_string(self, m: usize) -> String {
        (0..m).map(|j| if self.contains(j) { '1' } else { '0' }).collect()
    }

    /// Parses a binary string written item 1 first. Returns the bundle and
    /// its width.
    pub fn parse(s: &str) -> Result<(Bundle, usize)> {
        let s = s.trim();
        let m = s.len();
        if m > MAX_ITEMS {
            return Err(Error::Capacity(format!("bundle string of width {m} exceeds {MAX_ITEMS} items")));
        }
        let mut bits = 0u32;
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << j,
                _ => return Err(Error::Parse(format!("invalid bundle string {s:?}"))),
            }
        }
        Ok((Bundle(bits), m))
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, j) in self.items().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

/// One bundle per bidder, pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    bundles: Vec<Bundle>,
}

impl Allocation {
    pub fn new(bundles: Vec<Bundle>) -> Result<Allocation> {
        let mut used = 0u32;
        for (i, b) in bundles.iter().enumerate() {
            if used & b.0 != 0 {
                return Err(Error::InvalidInstance(format!(
                    "bundle {b} of bidder {i} overlaps an earlier bundle"
                )));
            }
            used |= b.0;
        }
        Ok(Allocation { bundles })
    }

    pub fn empty(n: usize) -> Allocation {
        Allocation { bundles: vec![Bundle::EMPTY; n] }
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn bundle(&self, bidder: usize) -> Bundle {
        self.bundles[bidder]
    }

    pub fn num_bidders(&self) -> usize {
        self.bundles.len()
    }

    pub fn allocated_items(&self) -> Bundle {
        Bundle(self.bundles.iter().fold(0, |acc, b| acc | b.0))
    }
}

/// Reported bundle-value pairs of one bidder.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    entries: BTreeMap<Bundle, f64>,
}

impl ReportSet {
    pub fn new() -> ReportSet {
        ReportSet::default()
    }

    /// Adds a report. Duplicate bundles and negative or non-finite values are
    /// rejected.
    pub fn insert(&mut self, bundle: Bundle, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidInstance(format!("reported value {value} for {bundle} is not a nonnegative number")));
        }
        if self.entries.contains_key(&bundle) {
            return Err(Error::InvalidInstance(format!("bundle {bundle} already reported")));
        }
        self.entries.insert(bundle, value);
        Ok(())
    }

    pub fn get(&self, bundle: Bundle) -> Option<f64> {
        self.entries.get(&bundle).copied()
    }

    pub fn contains(&self, bundle: Bundle) -> bool {
        self.entries.contains_key(&bundle)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending bundle order.
    pub fn iter(&self) -> impl Iterator<Item = (Bundle, f64)> + '_ {
        self.entries.iter().map(|(b, v)| (*b, *v))
    }

    pub fn bundles(&self) -> impl Iterator<Item = Bundle> + '_ {
        self.entries.keys().copied()
    }
}

impl FromIterator<(Bundle, f64)> for ReportSet {
    /// Later duplicates overwrite earlier ones.
    fn from_iter<T: IntoIterator<Item = (Bundle, f64)>>(iter: T) -> Self {
        ReportSet { entries: iter.into_iter().collect() }
    }
}

/// Query access to one bidder's value function.
pub trait ValuationOracle: Send + Sync {
    fn num_items(&self) -> usize;

    /// Value of `bundle`; deterministic and nonnegative.
    fn value(&self, bundle: Bundle) -> f64;

    /// Exact Fourier spectrum, when the generator knows it.
    fn spectrum(&self) -> Option<&SparseSpectrum> {
        None
    }

    /// Full value table. Fails for more than 24 items.
    fn dense(&self) -> Result<DenseSetFunction> {
        let m = self.num_items();
        if m > 24 {
            return Err(Error::Capacity(format!("dense evaluation of {m} items")));
        }
        let table = (0..1u32 << m).map(|b| self.value(Bundle(b))).collect();
        DenseSetFunction::new(m, table)
    }
}

/// A value function given by its full table.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseValuation {
    function: DenseSetFunction,
}

impl DenseValuation {
    pub fn new(function: DenseSetFunction) -> DenseValuation {
        DenseValuation { function }
    }

    pub fn function(&self) -> &DenseSetFunction {
        &self.function
    }
}

impl ValuationOracle for DenseValuation {
    fn num_items(&self) -> usize {
        self.function.num_items()
    }

    fn value(&self, bundle: Bundle) -> f64 {
        self.function.get(bundle)
    }

    fn dense(&self) -> Result<DenseSetFunction> {
        Ok(self.function.clone())
    }
}

/// True social welfare of `alloc`.
pub fn welfare(alloc: &Allocation, truth: &[Box<dyn ValuationOracle>]) -> f64 {
    alloc.bundles().iter().zip(truth).map(|(b, v)| v.value(*b)).sum()
}

/// `V(alloc) / V(a*)`.
pub fn efficiency(alloc: &Allocation, truth: &[Box<dyn ValuationOracle>], optimum: f64) -> Result<f64> {
    if !(optimum > 0.0) {
        return Err(Error::InvalidInstance(format!("optimal welfare must be positive, got {optimum}")));
    }
    if alloc.num_bidders() != truth.len() {
        return Err(Error::InvalidInstance(format!(
            "allocation has {} bidders but {} value functions were given",
            alloc.num_bidders(),
            truth.len()
        )));
    }
    Ok(welfare(alloc, truth) / optimum)
}

/// Reported social welfare: only bundles present in the bidder's reports
/// contribute.
pub fn reported_welfare(alloc: &Allocation, reports: &[ReportSet]) -> f64 {
    alloc
        .bundles()
        .iter()
        .zip(reports)
        .filter_map(|(b, r)| r.get(*b))
        .sum()
}

/// One point of an auction's welfare trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub phase: String,
    /// Total number of reports across bidders at this point.
    pub queries: usize,
    /// `V̂(a*_R | R)`.
    pub reported_welfare: f64,
    /// True efficiency of `a*_R`.
    pub efficiency: f64,
}

/// Final outcome of an auction mechanism.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuctionResult {
    pub allocation: Allocation,
    /// VCG payments computed from reports; never clamped against the
    /// bidder's own reported value.
    pub payments: Vec<f64>,
    pub reports: Vec<ReportSet>,
    pub trace: Vec<TracePoint>,
    /// Human-readable notes about dedup shortfalls and skipped bidders.
    pub notes: Vec<String>,
}

impl AuctionResult {
    pub fn efficiency(&self) -> f64 {
        self.trace.last().map(|t| t.efficiency).unwrap_or(0.0)
    }

    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }
}
