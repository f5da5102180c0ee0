//! Seeded synthetic auction instances.
//!
//! Three families:
//!
//! - global synergy: additive item values plus pairwise synergies over each
//!   bidder's interest set (FT3 degree ≤ 2);
//! - local synergy: items on a grid, with a bonus per connected cluster of
//!   won in-region items (dense spectra);
//! - sparse synthetic: an exactly `k`-sparse spectrum of bounded degree.
//!
//! All generated bidders satisfy `v(∅) = 0` and `v ≥ 0`.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Allocation, Bundle, ValuationOracle, MAX_ITEMS};
use crate::error::{Error, Result};
use crate::fourier::{SparseSpectrum, TransformKind};
use crate::seeds::{self, tag};
use crate::wdp::{dense_wdp, exhaustive_wdp, EXHAUSTIVE_LIMIT};

/// Largest item count for which [`true_optimum`] uses the dense dynamic
/// program.
pub const OPTIMUM_DP_MAX_ITEMS: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    GlobalSynergy,
    LocalSynergy,
    SparseSynthetic,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::GlobalSynergy => "global-synergy",
            ModelFamily::LocalSynergy => "local-synergy",
            ModelFamily::SparseSynthetic => "sparse-synthetic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BidderType {
    National,
    Regional,
    Local,
}

impl BidderType {
    pub fn as_str(self) -> &'static str {
        match self {
            BidderType::National => "national",
            BidderType::Regional => "regional",
            BidderType::Local => "local",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidderGroup {
    #[serde(rename = "type")]
    pub bidder_type: BidderType,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalSynergyParams {
    /// Items in each regional bidder's interest set.
    pub region_size: usize,
    pub national_value_max: f64,
    pub regional_value_max: f64,
    /// Pairwise synergy factor: `v(x) = Σ v_j + s·Σ_{j<k} (v_j + v_k)` over
    /// in-region items.
    pub synergy: f64,
}

impl Default for GlobalSynergyParams {
    fn default() -> GlobalSynergyParams {
        GlobalSynergyParams { region_size: 4, national_value_max: 10.0, regional_value_max: 20.0, synergy: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalSynergyParams {
    /// Grid rows; columns are `ceil(m / rows)`.
    pub rows: usize,
    /// Manhattan radius of a regional bidder's interest set around its
    /// seeded centre.
    pub region_radius: usize,
    pub national_value_min: f64,
    pub national_value_max: f64,
    pub regional_value_min: f64,
    pub regional_value_max: f64,
    /// Cluster bonus scale: a cluster `C` is worth
    /// `(Σ_{j∈C} v_j)·(1 + s·h(|C|))` with `h` a logistic curve and `h(1) = 0`.
    pub synergy: f64,
    /// Cluster size at the logistic midpoint.
    pub midpoint: f64,
}

impl Default for LocalSynergyParams {
    fn default() -> LocalSynergyParams {
        LocalSynergyParams {
            rows: 3,
            region_radius: 2,
            national_value_min: 3.0,
            national_value_max: 9.0,
            regional_value_min: 3.0,
            regional_value_max: 20.0,
            synergy: 3.2,
            midpoint: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparseSyntheticParams {
    pub kind: TransformKind,
    /// Support size, including the `∅` offset coefficient where one is
    /// needed.
    pub sparsity: usize,
    pub max_degree: usize,
    /// Nonempty coefficients have magnitudes in `[scale/10, scale]`.
    pub scale: f64,
}

impl Default for SparseSyntheticParams {
    fn default() -> SparseSyntheticParams {
        SparseSyntheticParams { kind: TransformKind::Wht, sparsity: 10, max_degree: 2, scale: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: ModelFamily,
    pub m: usize,
    pub roster: Vec<BidderGroup>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub global: GlobalSynergyParams,
    #[serde(default)]
    pub local: LocalSynergyParams,
    #[serde(default)]
    pub sparse: SparseSyntheticParams,
}

impl InstanceSpec {
    pub fn new(family: ModelFamily, m: usize, roster: Vec<BidderGroup>, seed: u64) -> InstanceSpec {
        InstanceSpec {
            family,
            m,
            roster,
            seed,
            global: GlobalSynergyParams::default(),
            local: LocalSynergyParams::default(),
            sparse: SparseSyntheticParams::default(),
        }
    }

    /// `national` national bidders followed by `regional` regional ones.
    pub fn roster_of(national: usize, regional: usize) -> Vec<BidderGroup> {
        let mut roster = Vec::new();
        if national > 0 {
            roster.push(BidderGroup { bidder_type: BidderType::National, count: national });
        }
        if regional > 0 {
            roster.push(BidderGroup { bidder_type: BidderType::Regional, count: regional });
        }
        roster
    }

    pub fn num_bidders(&self) -> usize {
        self.roster.iter().map(|g| g.count).sum()
    }

    pub fn bidder_types(&self) -> Vec<BidderType> {
        self.roster.iter().flat_map(|g| std::iter::repeat_n(g.bidder_type, g.count)).collect()
    }

    pub fn with_seed(&self, seed: u64) -> InstanceSpec {
        InstanceSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_bidders() == 0 {
            return Err(Error::Config("instance needs at least one bidder".into()));
        }
        if self.m == 0 || self.m > MAX_ITEMS {
            return Err(Error::Capacity(format!("{} items (supported: 1..={MAX_ITEMS})", self.m)));
        }
        if self.family == ModelFamily::SparseSynthetic {
            let p = &self.sparse;
            let available: u64 = (0..=p.max_degree.min(self.m)).map(|c| binomial(self.m, c)).sum();
            if p.sparsity as u64 > available {
                return Err(Error::Config(format!(
                    "sparsity {} exceeds the {available} frequencies of degree ≤ {}",
                    p.sparsity, p.max_degree
                )));
            }
            if !(p.scale > 0.0) {
                return Err(Error::Config("sparse coefficient scale must be positive".into()));
            }
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Additive values plus pairwise synergies inside the interest set.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalSynergyValuation {
    m: usize,
    interest: Bundle,
    values: Vec<f64>,
    synergy: f64,
    spectrum: SparseSpectrum,
}

impl GlobalSynergyValuation {
    pub fn new(m: usize, interest: Bundle, values: Vec<f64>, synergy: f64) -> Result<GlobalSynergyValuation> {
        let items: Vec<usize> = interest.items().collect();
        let mut coeffs = Vec::new();
        for (a, &j) in items.iter().enumerate() {
            coeffs.push((Bundle::from_items([j]), values[j]));
            for &k in &items[a + 1..] {
                coeffs.push((Bundle::from_items([j, k]), synergy * (values[j] + values[k])));
            }
        }
        let spectrum = SparseSpectrum::new(TransformKind::Ft3, m, coeffs)?;
        Ok(GlobalSynergyValuation { m, interest, values, synergy, spectrum })
    }

    pub fn interest(&self) -> Bundle {
        self.interest
    }
}

impl ValuationOracle for GlobalSynergyValuation {
    fn num_items(&self) -> usize {
        self.m
    }

    fn value(&self, bundle: Bundle) -> f64 {
        let won = bundle.intersect(self.interest);
        let c = won.cardinality() as f64;
        let base: f64 = won.items().map(|j| self.values[j]).sum();
        // Σ_{j<k} (v_j + v_k) = (c − 1)·Σ v_j
        base + self.synergy * (c - 1.0).max(0.0) * base
    }

    /// The exact FT3 spectrum.
    fn spectrum(&self) -> Option<&SparseSpectrum> {
        Some(&self.spectrum)
    }
}

/// Grid valuation with a logistic bonus per connected cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSynergyValuation {
    m: usize,
    cols: usize,
    interest: Bundle,
    values: Vec<f64>,
    synergy: f64,
    midpoint: f64,
}

impl LocalSynergyValuation {
    pub fn new(m: usize, rows: usize, interest: Bundle, values: Vec<f64>, synergy: f64, midpoint: f64) -> LocalSynergyValuation {
        LocalSynergyValuation { m, cols: m.div_ceil(rows.max(1)), interest, values, synergy, midpoint }
    }

    pub fn interest(&self) -> Bundle {
        self.interest
    }

    fn bonus(&self, size: usize) -> f64 {
        let logistic = |s: f64| 1.0 / (1.0 + (self.midpoint - s).exp());
        self.synergy * (logistic(size as f64) - logistic(1.0)).max(0.0)
    }

    fn neighbours(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = (j / self.cols, j % self.cols);
        let mut out = Vec::with_capacity(4);
        if c > 0 {
            out.push(j - 1);
        }
        if c + 1 < self.cols && j + 1 < self.m {
            out.push(j + 1);
        }
        if r > 0 {
            out.push(j - self.cols);
        }
        if j + self.cols < self.m {
            out.push(j + self.cols);
        }
        out.into_iter()
    }
}

impl ValuationOracle for LocalSynergyValuation {
    fn num_items(&self) -> usize {
        self.m
    }

    fn value(&self, bundle: Bundle) -> f64 {
        let won = bundle.intersect(self.interest);
        let mut unseen = won.bits();
        let mut total = 0.0;
        while unseen != 0 {
            let start = unseen.trailing_zeros() as usize;
            unseen &= !(1 << start);
            let mut stack = vec![start];
            let (mut size, mut sum) = (0usize, 0.0);
            while let Some(j) = stack.pop() {
                size += 1;
                sum += self.values[j];
                for k in self.neighbours(j) {
                    if unseen >> k & 1 == 1 {
                        unseen &= !(1 << k);
                        stack.push(k);
                    }
                }
            }
            total += sum * (1.0 + self.bonus(size));
        }
        total
    }
}

/// A value function given by an exact sparse spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralValuation {
    spectrum: SparseSpectrum,
}

impl SpectralValuation {
    pub fn new(spectrum: SparseSpectrum) -> SpectralValuation {
        SpectralValuation { spectrum }
    }
}

impl ValuationOracle for SpectralValuation {
    fn num_items(&self) -> usize {
        self.spectrum.num_items()
    }

    fn value(&self, bundle: Bundle) -> f64 {
        // exact cancellation at ∅ may leave a tiny negative residue
        self.spectrum.evaluate(bundle).max(0.0)
    }

    fn spectrum(&self) -> Option<&SparseSpectrum> {
        Some(&self.spectrum)
    }
}

/// A generated auction instance.
pub struct Instance {
    pub spec: InstanceSpec,
    pub bidder_types: Vec<BidderType>,
    pub oracles: Vec<Box<dyn ValuationOracle>>,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance").field("spec", &self.spec).field("bidder_types", &self.bidder_types).finish()
    }
}

impl Instance {
    pub fn num_bidders(&self) -> usize {
        self.oracles.len()
    }

    pub fn num_items(&self) -> usize {
        self.spec.m
    }

    pub fn value(&self, bidder: usize, bundle: Bundle) -> f64 {
        self.oracles[bidder].value(bundle)
    }

    /// Exact spectra of every bidder, when the generator stored them.
    pub fn spectra(&self) -> Option<Vec<SparseSpectrum>> {
        self.oracles.iter().map(|o| o.spectrum().cloned()).collect()
    }
}

/// Generates the instance described by `spec`.
pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    match spec.family {
        ModelFamily::GlobalSynergy => generate_global_synergy(spec),
        ModelFamily::LocalSynergy => generate_local_synergy(spec),
        ModelFamily::SparseSynthetic => generate_sparse_synthetic(spec, &spec.sparse),
    }
}

fn bidder_rng(spec: &InstanceSpec, bidder: usize) -> ChaCha8Rng {
    seeds::rng(spec.seed, &[tag::INSTANCE, spec.family as u64, bidder as u64])
}

fn random_subset(rng: &mut ChaCha8Rng, m: usize, size: usize) -> Bundle {
    let mut items: Vec<usize> = (0..m).collect();
    items.shuffle(rng);
    Bundle::from_items(items.into_iter().take(size.clamp(1, m)))
}

/// National bidders value every item; regional and local bidders a seeded
/// subset of `region_size` items.
pub fn generate_global_synergy(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let m = spec.m;
    let p = &spec.global;
    let types = spec.bidder_types();
    let mut oracles: Vec<Box<dyn ValuationOracle>> = Vec::with_capacity(types.len());
    for (i, t) in types.iter().enumerate() {
        let mut rng = bidder_rng(spec, i);
        let (interest, vmax) = match t {
            BidderType::National => (Bundle::full(m), p.national_value_max),
            _ => (random_subset(&mut rng, m, p.region_size), p.regional_value_max),
        };
        let values: Vec<f64> = (0..m).map(|j| if interest.contains(j) { rng.random_range(0.0..vmax) } else { 0.0 }).collect();
        oracles.push(Box::new(GlobalSynergyValuation::new(m, interest, values, p.synergy)?));
    }
    Ok(Instance { spec: spec.clone(), bidder_types: types, oracles })
}

/// Regional and local bidders are interested in the items within
/// `region_radius` (Manhattan) of a seeded grid cell; national bidders in
/// all items.
pub fn generate_local_synergy(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let m = spec.m;
    let p = &spec.local;
    let cols = m.div_ceil(p.rows.max(1));
    let types = spec.bidder_types();
    let mut oracles: Vec<Box<dyn ValuationOracle>> = Vec::with_capacity(types.len());
    for (i, t) in types.iter().enumerate() {
        let mut rng = bidder_rng(spec, i);
        let (interest, lo, hi) = match t {
            BidderType::National => (Bundle::full(m), p.national_value_min, p.national_value_max),
            _ => {
                let centre = rng.random_range(0..m);
                let (cr, cc) = (centre / cols, centre % cols);
                let region = (0..m).filter(|j| (j / cols).abs_diff(cr) + (j % cols).abs_diff(cc) <= p.region_radius);
                (Bundle::from_items(region), p.regional_value_min, p.regional_value_max)
            }
        };
        let values: Vec<f64> = (0..m).map(|j| if interest.contains(j) { rng.random_range(lo..hi) } else { 0.0 }).collect();
        oracles.push(Box::new(LocalSynergyValuation::new(m, p.rows, interest, values, p.synergy, p.midpoint)));
    }
    Ok(Instance { spec: spec.clone(), bidder_types: types, oracles })
}

/// Draws an exactly sparse spectrum per bidder.
///
/// Nonnegativity and `v(∅) = 0` come from sign constraints plus a single
/// offset coefficient at `∅`:
///
/// - WHT: nonempty coefficients negative, `φ(∅) = Σ|φ(y)|`;
/// - FT3: nonempty coefficients positive, no `∅` term;
/// - FT4: nonempty coefficients negative, `φ(∅) = −Σ φ(y)`.
///
/// With `max_degree = 0` the only admissible function is the zero function.
pub fn generate_sparse_synthetic(spec: &InstanceSpec, params: &SparseSyntheticParams) -> Result<Instance> {
    let mut spec = spec.clone();
    spec.family = ModelFamily::SparseSynthetic;
    spec.sparse = *params;
    spec.validate()?;
    let m = spec.m;
    let types = spec.bidder_types();
    let candidates: Vec<Bundle> = (1..1u32 << m).map(Bundle).filter(|y| (y.cardinality() as usize) <= params.max_degree).collect();
    let mut oracles: Vec<Box<dyn ValuationOracle>> = Vec::with_capacity(types.len());
    for i in 0..types.len() {
        let mut rng = bidder_rng(&spec, i);
        let nonempty = match params.kind {
            TransformKind::Ft3 => params.sparsity,
            _ => params.sparsity.saturating_sub(1),
        }
        .min(candidates.len());
        let chosen: Vec<Bundle> = candidates.sample(&mut rng, nonempty).copied().collect();
        let mags: Vec<f64> = chosen.iter().map(|_| rng.random_range(params.scale / 10.0..=params.scale)).collect();
        let mut coeffs: Vec<(Bundle, f64)> = match params.kind {
            TransformKind::Ft3 => chosen.iter().copied().zip(mags.iter().copied()).collect(),
            _ => chosen.iter().copied().zip(mags.iter().map(|v| -v)).collect(),
        };
        if params.kind != TransformKind::Ft3 && !coeffs.is_empty() {
            coeffs.push((Bundle::EMPTY, mags.iter().sum()));
        }
        oracles.push(Box::new(SpectralValuation::new(SparseSpectrum::new(params.kind, m, coeffs)?)));
    }
    Ok(Instance { spec, bidder_types: types, oracles })
}

/// Exact efficient allocation and its welfare.
pub fn true_optimum(instance: &Instance) -> Result<(Allocation, f64)> {
    let (n, m) = (instance.num_bidders(), instance.num_items());
    if m <= OPTIMUM_DP_MAX_ITEMS {
        let tables: Vec<Vec<f64>> = instance.oracles.iter().map(|o| (0..1u32 << m).map(|b| o.value(Bundle(b))).collect()).collect();
        return dense_wdp(&tables, m);
    }
    if ((n + 1) as f64).powi(m as i32) <= EXHAUSTIVE_LIMIT {
        return exhaustive_wdp(n, m, |i, b| instance.value(i, b), &[]);
    }
    if let Some(spectra) = instance.spectra() {
        if spectra.iter().all(|s| s.kind() == spectra[0].kind()) {
            let model = crate::milp::build_ft_wdp(&spectra, &[])?;
            let sol = crate::milp::solve(&model.model, crate::milp::SolveLimits::default());
            if sol.status == crate::milp::SolveStatus::Optimal {
                return Ok((model.allocation(&sol)?, sol.objective));
            }
        }
    }
    Err(Error::Capacity(format!("no exact optimum for n={n}, m={m}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier;

    fn spec(family: ModelFamily, m: usize, seed: u64) -> InstanceSpec {
        InstanceSpec::new(family, m, InstanceSpec::roster_of(1, 3), seed)
    }

    #[test]
    fn global_synergy_has_degree_two() {
        for seed in 0..5 {
            let inst = generate(&spec(ModelFamily::GlobalSynergy, 10, seed)).unwrap();
            for o in &inst.oracles {
                let ft3 = fourier::forward(&o.dense().unwrap(), TransformKind::Ft3).unwrap();
                for (y, c) in ft3.iter() {
                    if y.cardinality() >= 3 {
                        assert!(c.abs() < 1e-9);
                    }
                }
                // stored spectrum is exact
                let stored = o.spectrum().unwrap().to_dense_spectrum().unwrap();
                for (a, b) in stored.values().iter().zip(ft3.values()) {
                    assert!((a - b).abs() < 1e-9);
                }
                assert_eq!(o.value(Bundle::EMPTY), 0.0);
            }
        }
    }

    #[test]
    fn regional_values_vanish_outside_region() {
        let inst = generate(&spec(ModelFamily::GlobalSynergy, 10, 3)).unwrap();
        for (i, t) in inst.bidder_types.iter().enumerate() {
            if *t == BidderType::Regional {
                let o = &inst.oracles[i];
                let region = Bundle((0..10).filter(|&j| o.value(Bundle::from_items([j])) > 0.0).fold(0, |a, j| a | 1 << j));
                let outside = region.complement(10);
                assert_eq!(o.value(outside), 0.0);
                assert_eq!(region.cardinality(), 4);
            }
        }
    }

    #[test]
    fn local_synergy_is_superadditive_on_adjacent_items() {
        for seed in 0..10 {
            let inst = generate(&spec(ModelFamily::LocalSynergy, 12, seed)).unwrap();
            let o = &inst.oracles[0];
            // national bidder: items 0 and 1 are grid neighbours
            let pair = o.value(Bundle(0b11));
            assert!(pair > o.value(Bundle(0b01)) + o.value(Bundle(0b10)));
        }
    }

    #[test]
    fn local_synergy_single_item_is_base_value() {
        let v = LocalSynergyValuation::new(6, 2, Bundle::full(6), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3.2, 4.0);
        for j in 0..6 {
            assert_eq!(v.value(Bundle::from_items([j])), (j + 1) as f64);
        }
        // items 0 and 5 are not adjacent on a 2×3 grid
        assert_eq!(v.value(Bundle::from_items([0, 5])), 7.0);
    }

    #[test]
    fn sparse_synthetic_matches_stored_spectrum() {
        for kind in TransformKind::ALL {
            let mut s = spec(ModelFamily::SparseSynthetic, 8, 11);
            s.sparse = SparseSyntheticParams { kind, sparsity: 6, max_degree: 3, scale: 5.0 };
            let inst = generate(&s).unwrap();
            for o in &inst.oracles {
                let dense = o.dense().unwrap();
                assert!(dense.values().iter().all(|v| *v >= 0.0));
                assert!(dense.get(Bundle::EMPTY).abs() < 1e-12);
                let fwd = fourier::forward(&dense, kind).unwrap();
                let stored = o.spectrum().unwrap();
                assert_eq!(stored.len(), 6);
                for (y, c) in fwd.iter() {
                    assert!((c - stored.get(y)).abs() < 1e-9, "{kind} {y}");
                    assert_eq!(c.abs() > 1e-9, stored.get(y) != 0.0);
                }
            }
        }
    }

    #[test]
    fn degree_one_sparse_is_additive_and_optimum_is_per_item() {
        let mut s = spec(ModelFamily::SparseSynthetic, 6, 4);
        s.sparse = SparseSyntheticParams { kind: TransformKind::Wht, sparsity: 7, max_degree: 1, scale: 3.0 };
        let inst = generate(&s).unwrap();
        let (_, opt) = true_optimum(&inst).unwrap();
        let per_item: f64 = (0..6)
            .map(|j| (0..inst.num_bidders()).map(|i| inst.value(i, Bundle::from_items([j]))).fold(0.0, f64::max))
            .sum();
        assert!((opt - per_item).abs() < 1e-9);
    }

    #[test]
    fn zero_degree_gives_the_zero_function() {
        let mut s = spec(ModelFamily::SparseSynthetic, 4, 1);
        s.sparse = SparseSyntheticParams { kind: TransformKind::Wht, sparsity: 1, max_degree: 0, scale: 1.0 };
        let inst = generate(&s).unwrap();
        assert!(inst.oracles.iter().all(|o| o.dense().unwrap().values().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn generation_is_deterministic() {
        for family in [ModelFamily::GlobalSynergy, ModelFamily::LocalSynergy, ModelFamily::SparseSynthetic] {
            let a = generate(&spec(family, 9, 42)).unwrap();
            let b = generate(&spec(family, 9, 42)).unwrap();
            for (x, y) in a.oracles.iter().zip(&b.oracles) {
                assert_eq!(x.dense().unwrap(), y.dense().unwrap());
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate(&InstanceSpec::new(ModelFamily::GlobalSynergy, 30, InstanceSpec::roster_of(1, 0), 0)).is_err());
        assert!(generate(&InstanceSpec::new(ModelFamily::GlobalSynergy, 5, vec![], 0)).is_err());
        let mut s = spec(ModelFamily::SparseSynthetic, 4, 0);
        s.sparse.sparsity = 100;
        assert!(matches!(generate(&s), Err(Error::Config(_))));
    }
}
