//! Auction mechanisms: MLCA, Hybrid ICA and VCG payments.
//!
//! Bidders answer value queries truthfully from their oracles. Every
//! mechanism ends with the reported-welfare allocation `a*_R` and VCG
//! payments computed from the reports.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::domain::{reported_welfare, Allocation, AuctionResult, Bundle, ReportSet, TracePoint};
use crate::error::{Error, Result};
use crate::fourier::{self, SparseSpectrum, TransformKind};
use crate::recovery::{self, FitConfig, SupportSuperset};
use crate::seeds::{self, tag};
use crate::surrogate::{fit_mlp, MlpNetwork, TrainConfig};
use crate::valuemodels::{true_optimum, BidderType, Instance};
use crate::wdp::WdpSolver;

/// Default proportions of the four hybrid phases, in percent of the budget.
pub const GSVM_SPLIT: [f64; 4] = [30.0, 21.0, 20.0, 29.0];

/// Hidden layer sizes per bidder type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architectures {
    pub national: Vec<usize>,
    pub regional: Vec<usize>,
    pub local: Vec<usize>,
}

impl Default for Architectures {
    fn default() -> Architectures {
        Architectures { national: vec![10, 10], regional: vec![32, 32], local: vec![32, 32] }
    }
}

impl Architectures {
    /// Full layer sizes `[m, hidden…, 1]` for a bidder of type `t`.
    pub fn sizes(&self, t: BidderType, m: usize) -> Vec<usize> {
        let hidden = match t {
            BidderType::National => &self.national,
            BidderType::Regional => &self.regional,
            BidderType::Local => &self.local,
        };
        std::iter::once(m).chain(hidden.iter().copied()).chain(std::iter::once(1)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlcaConfig {
    pub q_init: usize,
    pub q_max: usize,
    pub seed: u64,
    pub architectures: Architectures,
    pub train: TrainConfig,
    #[serde(skip)]
    pub solver: WdpSolver,
}

impl Default for MlcaConfig {
    fn default() -> MlcaConfig {
        MlcaConfig {
            q_init: 20,
            q_max: 40,
            seed: 0,
            architectures: Architectures::default(),
            train: TrainConfig::default(),
            solver: WdpSolver::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HybridVariant {
    /// All three phases.
    Full,
    /// Random queries replace the reconstruction queries.
    NoFr,
    /// Random queries replace both Fourier phases.
    NoFrFa,
}

impl HybridVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            HybridVariant::Full => "hybrid-ica",
            HybridVariant::NoFr => "hybrid-ica-no-fr",
            HybridVariant::NoFrFa => "hybrid-ica-no-fr-fa",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    pub kind: TransformKind,
    /// Random initial queries per bidder.
    pub l1: usize,
    /// MLCA queries per bidder.
    pub l2: usize,
    /// Fourier reconstruction queries per bidder.
    pub l3: usize,
    /// Fourier allocation queries per bidder.
    pub l4: usize,
    pub seed: u64,
    pub fit: FitConfig,
    pub variant: HybridVariant,
    pub architectures: Architectures,
    pub train: TrainConfig,
    #[serde(skip)]
    pub solver: WdpSolver,
}

impl Default for HybridConfig {
    fn default() -> HybridConfig {
        let [l1, l2, l3, l4] = split_budget(40, GSVM_SPLIT);
        HybridConfig {
            kind: TransformKind::Wht,
            l1,
            l2,
            l3,
            l4,
            seed: 0,
            fit: FitConfig { target_support: 20, superset_size: 300, ..FitConfig::default() },
            variant: HybridVariant::Full,
            architectures: Architectures::default(),
            train: TrainConfig::default(),
            solver: WdpSolver::Auto,
        }
    }
}

impl HybridConfig {
    pub fn total_budget(&self) -> usize {
        self.l1 + self.l2 + self.l3 + self.l4
    }

    /// The MLCA configuration of the first phase.
    pub fn mlca(&self) -> MlcaConfig {
        MlcaConfig {
            q_init: self.l1,
            q_max: self.l1 + self.l2,
            seed: self.seed,
            architectures: self.architectures.clone(),
            train: self.train,
            solver: self.solver,
        }
    }
}

/// Splits `total` proportionally to `weights` by largest remainder; ties
/// go to the earlier phase.
pub fn split_budget(total: usize, weights: [f64; 4]) -> [usize; 4] {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out = [0usize; 4];
    for (o, e) in out.iter_mut().zip(&exact) {
        *o = e.floor() as usize;
    }
    let mut rest = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for k in order {
        if rest == 0 {
            break;
        }
        out[k] += 1;
        rest -= 1;
    }
    out
}

/// VCG payments from reports. Payments that are negative only by rounding
/// (within `1e-9`) are set to zero.
pub fn vcg_payments(reports: &[ReportSet], m: usize, solver: WdpSolver) -> Result<Vec<f64>> {
    let n = reports.len();
    let (alloc, _) = solver.reported(reports, m, &[])?;
    let mut payments = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<ReportSet> = reports.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.clone()).collect();
        let without_i = if others.is_empty() { 0.0 } else { solver.reported(&others, m, &[])?.1 };
        let with_i: f64 = (0..n).filter(|&j| j != i).map(|j| reports[j].get(alloc.bundle(j)).unwrap_or(0.0)).sum();
        let mut p = without_i - with_i;
        if p < 0.0 && p > -1e-9 {
            p = 0.0;
        } else if p < 0.0 {
            log::warn!("negative VCG payment {p} for bidder {i}");
        }
        payments.push(p);
    }
    Ok(payments)
}

/// Queries for the economy `bidders`: the surrogate-optimal allocation,
/// re-solved per bidder over `F'` when its bundle was already asked.
/// Bidders that have been asked every bundle are dropped.
pub fn next_queries(
    bidders: &[usize],
    networks: &[MlpNetwork],
    asked: &[BTreeSet<Bundle>],
    solver: WdpSolver,
) -> Result<Vec<(usize, Bundle)>> {
    let refs: Vec<&MlpNetwork> = bidders.iter().map(|&i| &networks[i]).collect();
    let (alloc, _) = solver.networks(&refs, &[])?;
    let mut out = Vec::with_capacity(bidders.len());
    for (k, &i) in bidders.iter().enumerate() {
        let q = alloc.bundle(k);
        if !asked[i].contains(&q) {
            out.push((i, q));
            continue;
        }
        let mut excl = vec![BTreeSet::new(); bidders.len()];
        excl[k] = asked[i].clone();
        match solver.networks(&refs, &excl) {
            Ok((alt, _)) => out.push((i, alt.bundle(k))),
            Err(Error::InvalidInstance(_)) => log::warn!("bidder {i} has been asked every bundle"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Shared bookkeeping of one auction run.
struct Elicitation<'a> {
    instance: &'a Instance,
    optimum: f64,
    solver: WdpSolver,
    reports: Vec<ReportSet>,
    trace: Vec<TracePoint>,
    notes: Vec<String>,
}

impl<'a> Elicitation<'a> {
    fn new(instance: &'a Instance, solver: WdpSolver) -> Result<Elicitation<'a>> {
        let (_, optimum) = true_optimum(instance)?;
        if !(optimum > 0.0) {
            return Err(Error::InvalidInstance("optimal welfare is zero".into()));
        }
        Ok(Elicitation { instance, optimum, solver, reports: vec![ReportSet::new(); instance.num_bidders()], trace: Vec::new(), notes: Vec::new() })
    }

    fn n(&self) -> usize {
        self.instance.num_bidders()
    }

    fn m(&self) -> usize {
        self.instance.num_items()
    }

    /// Asks bidder `i` for its value of `b`; repeated questions are ignored.
    fn ask(&mut self, i: usize, b: Bundle) -> Result<bool> {
        if self.reports[i].contains(b) {
            return Ok(false);
        }
        self.reports[i].insert(b, self.instance.value(i, b))?;
        Ok(true)
    }

    fn asked(&self) -> Vec<BTreeSet<Bundle>> {
        self.reports.iter().map(|r| r.bundles().collect()).collect()
    }

    fn allocation(&self) -> Result<(Allocation, f64)> {
        self.solver.reported(&self.reports, self.m(), &[])
    }

    fn record(&mut self, phase: &str) -> Result<()> {
        let (alloc, reported) = self.allocation()?;
        let welfare: f64 = (0..self.n()).map(|i| self.instance.value(i, alloc.bundle(i))).sum();
        self.trace.push(TracePoint {
            phase: phase.to_string(),
            queries: self.reports.iter().map(|r| r.len()).sum(),
            reported_welfare: reported,
            efficiency: welfare / self.optimum,
        });
        Ok(())
    }

    fn fit_networks(&self, arch: &Architectures, train: &TrainConfig, seed: u64, round: u64) -> Result<Vec<MlpNetwork>> {
        (0..self.n())
            .map(|i| {
                let sizes = arch.sizes(self.instance.bidder_types[i], self.m());
                let cfg = TrainConfig { seed: seeds::derive(seed, &[tag::TRAINING, i as u64, round]), ..*train };
                fit_mlp(&self.reports[i], &sizes, &cfg).map(|t| t.network)
            })
            .collect()
    }

    /// Uniformly random nonempty bundles not yet asked.
    fn random_queries(&mut self, i: usize, count: usize, seed: u64, stream: u64) -> Result<usize> {
        let mut rng = seeds::rng(seed, &[tag::RANDOM_QUERIES, i as u64, stream]);
        let universe = (1u64 << self.m()) - 1;
        let mut added = 0;
        while added < count {
            let free = universe - self.reports[i].bundles().filter(|b| !b.is_empty()).count() as u64;
            if free == 0 {
                break;
            }
            let b = Bundle(rng.random_range(1..=universe) as u32);
            if self.ask(i, b)? {
                added += 1;
            }
        }
        Ok(added)
    }

    fn finish(mut self) -> Result<AuctionResult> {
        let (allocation, _) = self.allocation()?;
        let payments = vcg_payments(&self.reports, self.m(), self.solver)?;
        if self.trace.is_empty() {
            self.record("final")?;
        }
        Ok(AuctionResult { allocation, payments, reports: self.reports, trace: self.trace, notes: self.notes })
    }
}

fn initial_queries(state: &mut Elicitation, q_init: usize, seed: u64) -> Result<()> {
    let universe = (1usize << state.m()) - 1;
    for i in 0..state.n() {
        let mut rng = seeds::rng(seed, &[tag::INITIAL_QUERIES, i as u64]);
        let count = q_init.min(universe);
        if count < q_init {
            state.notes.push(format!("bidder {i}: only {universe} nonempty bundles for {q_init} initial queries"));
        }
        for k in index::sample(&mut rng, universe, count) {
            state.ask(i, Bundle(k as u32 + 1))?;
        }
    }
    Ok(())
}

fn mlca_rounds(state: &mut Elicitation, cfg: &MlcaConfig) -> Result<()> {
    let n = state.n();
    let rounds = cfg.q_max.saturating_sub(cfg.q_init) / n;
    if rounds * n < cfg.q_max - cfg.q_init {
        state.notes.push(format!("mlca: {} of {} budgeted queries per bidder fit into whole rounds", rounds * n, cfg.q_max - cfg.q_init));
    }
    let everyone: Vec<usize> = (0..n).collect();
    for t in 0..rounds {
        // surrogates are refit on the reports available at the start of the round
        let nets = state.fit_networks(&cfg.architectures, &cfg.train, cfg.seed, t as u64)?;
        let mut asked = state.asked();
        let mut pending: Vec<(usize, Bundle)> = Vec::new();
        let mut economies = vec![everyone.clone()];
        if n > 1 {
            economies.extend((0..n).map(|skip| everyone.iter().copied().filter(|&i| i != skip).collect()));
        }
        for economy in economies {
            for (i, q) in next_queries(&economy, &nets, &asked, state.solver)? {
                asked[i].insert(q);
                pending.push((i, q));
            }
        }
        for (i, q) in pending {
            state.ask(i, q)?;
        }
    }
    Ok(())
}

/// MLCA: random initial queries, then rounds of main- and marginal-economy
/// surrogate queries.
pub fn run_mlca(instance: &Instance, cfg: &MlcaConfig) -> Result<AuctionResult> {
    if cfg.q_init == 0 || cfg.q_init > cfg.q_max {
        return Err(Error::Config(format!("need 1 ≤ q_init ≤ q_max, got {} and {}", cfg.q_init, cfg.q_max)));
    }
    let mut state = Elicitation::new(instance, cfg.solver)?;
    initial_queries(&mut state, cfg.q_init, cfg.seed)?;
    state.record("initial")?;
    mlca_rounds(&mut state, cfg)?;
    state.record("mlca")?;
    state.finish()
}

fn fit_all(state: &Elicitation, supports: &[SupportSuperset], fit: &FitConfig) -> Result<Vec<SparseSpectrum>> {
    (0..state.n()).map(|i| recovery::fit_spectrum(&state.reports[i], &supports[i], fit)).collect()
}

/// Hybrid ICA: an MLCA phase, a Fourier reconstruction phase and a Fourier
/// allocation phase, followed by the reported-welfare allocation and VCG.
pub fn run_hybrid_ica(instance: &Instance, cfg: &HybridConfig) -> Result<AuctionResult> {
    if cfg.l1 == 0 {
        return Err(Error::Config("hybrid ICA needs at least one initial query".into()));
    }
    let mlca = cfg.mlca();
    let mut state = Elicitation::new(instance, cfg.solver)?;
    let (n, m) = (state.n(), state.m());
    initial_queries(&mut state, cfg.l1, cfg.seed)?;
    state.record("initial")?;
    mlca_rounds(&mut state, &mlca)?;
    state.record("mlca")?;

    if cfg.variant == HybridVariant::NoFrFa {
        for i in 0..n {
            let got = state.random_queries(i, cfg.l3 + cfg.l4, cfg.seed, 0)?;
            if got < cfg.l3 + cfg.l4 {
                state.notes.push(format!("bidder {i}: {got} of {} random queries", cfg.l3 + cfg.l4));
            }
        }
        state.record("random")?;
        return state.finish();
    }
    if cfg.l3 == 0 && cfg.l4 == 0 {
        return state.finish();
    }

    // Fourier reconstruction
    let round = (mlca.q_max - mlca.q_init) / n.max(1);
    let nets = state.fit_networks(&cfg.architectures, &cfg.train, cfg.seed, round as u64 + 1)?;
    let superset_size = match cfg.kind {
        TransformKind::Wht => cfg.fit.superset_size,
        _ => cfg.fit.superset_size.max(cfg.l3),
    }
    .min(1 << m);
    let mut supports = Vec::with_capacity(n);
    for i in 0..n {
        let dense = fourier::DenseSetFunction::new(m, nets[i].predict_all())?;
        let spectrum = fourier::forward(&dense, cfg.kind)?;
        let ranking = recovery::rank_support(&spectrum, cfg.kind, superset_size);
        match cfg.variant {
            HybridVariant::Full => {
                let asked: BTreeSet<Bundle> = state.reports[i].bundles().collect();
                let queries = recovery::reconstruction_queries(&ranking, cfg.l3, &asked);
                if queries.len() < cfg.l3 {
                    state.notes.push(format!("bidder {i}: {} of {} reconstruction queries", queries.len(), cfg.l3));
                }
                for q in queries {
                    state.ask(i, q)?;
                }
            }
            _ => {
                let got = state.random_queries(i, cfg.l3, cfg.seed, 0)?;
                if got < cfg.l3 {
                    state.notes.push(format!("bidder {i}: {got} of {} random queries", cfg.l3));
                }
            }
        }
        // FT3/FT4 fit exactly the ℓ₃ best frequencies; the WHT path selects within S¹
        supports.push(if cfg.kind == TransformKind::Wht { ranking } else { ranking.prefix(cfg.l3.max(1)) });
    }
    state.record("reconstruction")?;

    // Fourier allocation
    let mut spectra = fit_all(&state, &supports, &cfg.fit)?;
    let mut missing = vec![0usize; n];
    for _ in 0..cfg.l4 {
        let (alloc, _) = state.solver.fourier(&spectra, &[])?;
        let asked = state.asked();
        let mut queries = Vec::with_capacity(n);
        for i in 0..n {
            let q = alloc.bundle(i);
            if !asked[i].contains(&q) {
                queries.push((i, q));
                continue;
            }
            let mut excl = vec![BTreeSet::new(); n];
            excl[i] = asked[i].clone();
            match state.solver.fourier(&spectra, &excl) {
                Ok((alt, _)) => queries.push((i, alt.bundle(i))),
                Err(Error::InvalidInstance(_)) => missing[i] += 1,
                Err(e) => return Err(e),
            }
        }
        for (i, q) in queries {
            if state.ask(i, q)? {
                spectra[i] = recovery::fit_spectrum(&state.reports[i], &supports[i], &cfg.fit)?;
            }
        }
    }
    for (i, k) in missing.iter().enumerate().filter(|(_, k)| **k > 0) {
        state.notes.push(format!("bidder {i}: {k} Fourier allocation queries skipped, every bundle asked"));
    }
    state.record("allocation")?;
    state.finish()
}

/// Exact top-`k` WHT approximation of every bidder followed by the
/// Fourier WDP. Returns the allocation and its true efficiency.
pub fn wht_allocation_rule(instance: &Instance, k: usize, solver: WdpSolver) -> Result<(Allocation, f64)> {
    let mut out = wht_allocation_sweep(instance, &[k], solver)?;
    Ok(out.pop().expect("one k"))
}

/// [`wht_allocation_rule`] for several `k`, sharing the transforms and the
/// optimum.
pub fn wht_allocation_sweep(instance: &Instance, ks: &[usize], solver: WdpSolver) -> Result<Vec<(Allocation, f64)>> {
    let m = instance.num_items();
    if m > 20 {
        return Err(Error::Capacity(format!("full WHT of {m} items")));
    }
    let full: Vec<fourier::DenseSetFunction> = instance
        .oracles
        .iter()
        .map(|o| fourier::forward(&o.dense()?, TransformKind::Wht))
        .collect::<Result<_>>()?;
    let (_, optimum) = true_optimum(instance)?;
    ks.iter()
        .map(|&k| {
            let spectra: Vec<SparseSpectrum> =
                full.iter().map(|f| fourier::select_best_k(f, TransformKind::Wht, k)).collect();
            let (alloc, _) = solver.fourier(&spectra, &[])?;
            let welfare: f64 = (0..instance.num_bidders()).map(|i| instance.value(i, alloc.bundle(i))).sum();
            Ok((alloc, welfare / optimum))
        })
        .collect()
}

/// True welfare per bidder type as a fraction of the optimum.
pub fn welfare_shares(instance: &Instance, alloc: &Allocation, optimum: f64) -> BTreeMap<BidderType, f64> {
    let mut shares = BTreeMap::new();
    for (i, t) in instance.bidder_types.iter().enumerate() {
        *shares.entry(*t).or_insert(0.0) += instance.value(i, alloc.bundle(i)) / optimum;
    }
    shares
}

/// `V̂(a | R)` of the result's allocation.
pub fn final_reported_welfare(result: &AuctionResult) -> f64 {
    reported_welfare(&result.allocation, &result.reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(pairs: &[(u32, f64)]) -> ReportSet {
        pairs.iter().map(|(b, v)| (Bundle(*b), *v)).collect()
    }

    #[test]
    fn budget_split_largest_remainder() {
        assert_eq!(split_budget(40, GSVM_SPLIT), [12, 8, 8, 12]);
        assert_eq!(split_budget(100, GSVM_SPLIT), [30, 21, 20, 29]);
        assert_eq!(split_budget(3, [1.0, 1.0, 1.0, 1.0]), [1, 1, 1, 0]);
        assert_eq!(split_budget(0, GSVM_SPLIT), [0, 0, 0, 0]);
    }

    #[test]
    fn vcg_examples() {
        let solver = WdpSolver::DenseDp;
        assert_eq!(vcg_payments(&[rs(&[(0b11, 5.0)])], 2, solver).unwrap(), vec![0.0]);
        let p = vcg_payments(&[rs(&[(0b11, 5.0)]), rs(&[(0b11, 3.0)])], 2, solver).unwrap();
        assert_eq!(p, vec![3.0, 0.0]);
        let p = vcg_payments(&[rs(&[(0b01, 4.0)]), rs(&[(0b10, 2.0)])], 2, solver).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn next_queries_skip_marginal_bidder_and_dedup() {
        let nets = vec![MlpNetwork::zeros(&[3, 2, 1]).unwrap(); 3];
        let mut asked = vec![BTreeSet::new(); 3];
        asked[0].insert(Bundle::EMPTY);
        let q = next_queries(&[0, 2], &nets, &asked, WdpSolver::DenseDp).unwrap();
        assert!(q.iter().all(|(i, _)| *i != 1));
        let q0 = q.iter().find(|(i, _)| *i == 0).unwrap().1;
        assert!(!asked[0].contains(&q0));
    }
}
