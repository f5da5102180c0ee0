//! Desk-scale experiments.
//!
//! Every experiment maps an [`ExperimentSpec`] to one or more CSV tables.
//! Seeds run in parallel and results are merged in seed order, so a rerun
//! reproduces the tables byte for byte apart from the timing columns.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Bundle, ReportSet};
use crate::error::{Error, Result};
use crate::fourier::{self, DenseSetFunction, TransformKind};
use crate::io::Table;
use crate::mechanisms::{
    run_hybrid_ica, run_mlca, split_budget, wht_allocation_sweep, welfare_shares, HybridConfig, HybridVariant,
    MlcaConfig, GSVM_SPLIT,
};
use crate::recovery;
use crate::seeds::{self, tag};
use crate::stats;
use crate::surrogate::{fit_mlp, TrainConfig};
use crate::valuemodels::{generate, true_optimum, BidderType, Instance, InstanceSpec, ModelFamily};
use crate::wdp::WdpSolver;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    SpectralEnergy,
    ReconstructionError,
    Procedure2Sweep,
    EnergyRatio,
    MechanismCompare,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::SpectralEnergy,
        ExperimentId::ReconstructionError,
        ExperimentId::Procedure2Sweep,
        ExperimentId::EnergyRatio,
        ExperimentId::MechanismCompare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::SpectralEnergy => "spectral-energy",
            ExperimentId::ReconstructionError => "reconstruction-error",
            ExperimentId::Procedure2Sweep => "procedure2-sweep",
            ExperimentId::EnergyRatio => "energy-ratio",
            ExperimentId::MechanismCompare => "mechanism-compare",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Mechanisms compared by the mechanism experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    HybridIca,
    HybridIcaNoFr,
    HybridIcaNoFrFa,
    Mlca,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] =
        [Mechanism::HybridIca, Mechanism::HybridIcaNoFr, Mechanism::HybridIcaNoFrFa, Mechanism::Mlca];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::HybridIca => HybridVariant::Full.as_str(),
            Mechanism::HybridIcaNoFr => HybridVariant::NoFr.as_str(),
            Mechanism::HybridIcaNoFrFa => HybridVariant::NoFrFa.as_str(),
            Mechanism::Mlca => "mlca",
        }
    }
}

fn default_instance() -> InstanceSpec {
    InstanceSpec::new(ModelFamily::GlobalSynergy, 12, InstanceSpec::roster_of(1, 3), 0)
}

fn default_ks() -> Vec<usize> {
    vec![1, 5, 10, 20, 50, 100]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub instance: InstanceSpec,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    /// Sparsity levels for the reconstruction, sweep and energy-ratio runs.
    pub ks: Vec<usize>,
    pub kinds: Vec<TransformKind>,
    /// Random reports per bidder used to train the energy-ratio surrogates.
    pub training_queries: usize,
    /// Total queries per bidder for the mechanism comparison.
    pub budget: usize,
    pub mechanisms: Vec<Mechanism>,
    /// Template for the hybrid runs; budgets and seed are overwritten.
    pub hybrid: HybridConfig,
}

impl Default for ExperimentSpec {
    fn default() -> ExperimentSpec {
        ExperimentSpec {
            id: ExperimentId::SpectralEnergy,
            instance: default_instance(),
            seeds: (0..10).collect(),
            out_dir: None,
            ks: default_ks(),
            kinds: TransformKind::ALL.to_vec(),
            training_queries: 50,
            budget: 40,
            mechanisms: Mechanism::ALL.to_vec(),
            hybrid: HybridConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId, instance: InstanceSpec, seeds: Vec<u64>) -> ExperimentSpec {
        ExperimentSpec { id, instance, seeds, ..ExperimentSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        if self.kinds.is_empty() {
            return Err(Error::Config("experiment needs at least one transform kind".into()));
        }
        if matches!(self.id, ExperimentId::ReconstructionError | ExperimentId::Procedure2Sweep | ExperimentId::EnergyRatio)
            && self.ks.is_empty()
        {
            return Err(Error::Config(format!("{} needs a nonempty ks list", self.id.as_str())));
        }
        if self.id == ExperimentId::MechanismCompare && (self.budget == 0 || self.mechanisms.is_empty()) {
            return Err(Error::Config("mechanism comparison needs a budget and mechanisms".into()));
        }
        self.instance.validate()
    }

    fn instance(&self, seed: u64) -> Result<Instance> {
        generate(&self.instance.with_seed(seed))
    }
}

/// Named tables produced by one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub tables: Vec<(String, Table)>,
}

impl ExperimentOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes every table as `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.tables
            .iter()
            .map(|(name, t)| {
                let path = dir.join(format!("{name}.csv"));
                t.write(&path)?;
                Ok(path)
            })
            .collect()
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let one = |name: &str, t: Table| ExperimentOutput { tables: vec![(name.to_string(), t)] };
    Ok(match spec.id {
        ExperimentId::SpectralEnergy => one("spectral_energy", exp_spectral_energy(spec)?),
        ExperimentId::ReconstructionError => one("reconstruction_error", exp_reconstruction_error(spec)?),
        ExperimentId::Procedure2Sweep => one("procedure2_sweep", exp_procedure2_sweep(spec)?),
        ExperimentId::EnergyRatio => one("energy_ratio", exp_energy_ratio(spec)?),
        ExperimentId::MechanismCompare => {
            let (summary, per_seed) = exp_mechanism_compare(spec)?;
            ExperimentOutput {
                tables: vec![("mechanism_compare".to_string(), summary), ("mechanism_seeds".to_string(), per_seed)],
            }
        }
    })
}

fn num(v: f64) -> String {
    // adding zero folds -0 into 0
    format!("{}", v + 0.0)
}

fn per_seed<T: Send>(spec: &ExperimentSpec, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    spec.seeds.par_iter().map(|&s| f(s)).collect()
}

/// Mean energy share per cardinality over `functions`, one block of rows
/// per kind.
pub fn spectral_energy_table(functions: &[DenseSetFunction], kinds: &[TransformKind]) -> Result<Table> {
    let m = functions.first().map(|f| f.num_items()).ok_or_else(|| Error::Config("no functions".into()))?;
    let mut table = Table::new(["kind", "cardinality", "energy_share"]);
    for &kind in kinds {
        let mut sum = vec![0.0; m + 1];
        for f in functions {
            for (d, e) in fourier::energy_by_cardinality(&fourier::forward(f, kind)?)?.into_iter().enumerate() {
                sum[d] += e;
            }
        }
        for (d, s) in sum.into_iter().enumerate() {
            table.push(vec![kind.as_str().into(), d.to_string(), num(s / functions.len() as f64)]);
        }
    }
    Ok(table)
}

/// Energy shares averaged over every bidder of every seed. Bidders with an
/// all-zero value function are skipped.
pub fn exp_spectral_energy(spec: &ExperimentSpec) -> Result<Table> {
    let functions: Vec<Vec<DenseSetFunction>> = per_seed(spec, |s| {
        let inst = spec.instance(s)?;
        inst.oracles.iter().map(|o| o.dense()).collect()
    })?;
    let functions: Vec<DenseSetFunction> =
        functions.into_iter().flatten().filter(|f| f.values().iter().any(|v| *v != 0.0)).collect();
    spectral_energy_table(&functions, &spec.kinds)
}

fn rmse(a: &DenseSetFunction, b: &DenseSetFunction) -> f64 {
    let n = a.values().len() as f64;
    (a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n).sqrt()
}

/// RMSE of the best `k`-sparse approximation per kind, `k` and bidder type.
pub fn exp_reconstruction_error(spec: &ExperimentSpec) -> Result<Table> {
    // (kind, k, type) -> one RMSE per bidder, in seed order
    let rows: Vec<Vec<(usize, usize, BidderType, f64)>> = per_seed(spec, |s| {
        let inst = spec.instance(s)?;
        let mut out = Vec::new();
        for (i, o) in inst.oracles.iter().enumerate() {
            let truth = o.dense()?;
            for (a, &kind) in spec.kinds.iter().enumerate() {
                let full = fourier::forward(&truth, kind)?;
                for (b, &k) in spec.ks.iter().enumerate() {
                    let approx = fourier::select_best_k(&full, kind, k).to_dense_function()?;
                    out.push((a, b, inst.bidder_types[i], rmse(&approx, &truth)));
                }
            }
        }
        Ok(out)
    })?;
    let mut groups: BTreeMap<(usize, usize, BidderType), Vec<f64>> = BTreeMap::new();
    for (a, b, t, e) in rows.into_iter().flatten() {
        groups.entry((a, b, t)).or_default().push(e);
    }
    let mut table = Table::new(["model", "kind", "k", "bidder_type", "rmse", "ci95", "count"]);
    for ((a, b, t), errs) in groups {
        table.push(vec![
            spec.instance.family.as_str().into(),
            spec.kinds[a].as_str().into(),
            spec.ks[b].to_string(),
            t.as_str().into(),
            num(stats::mean(&errs)),
            num(stats::ci95(&errs)),
            errs.len().to_string(),
        ]);
    }
    Ok(table)
}

/// Efficiency of the WHT allocation rule per `k`; one row per `k` with the
/// median, mean and spread over seeds.
pub fn exp_procedure2_sweep(spec: &ExperimentSpec) -> Result<Table> {
    let effs: Vec<Vec<f64>> = per_seed(spec, |s| {
        let inst = spec.instance(s)?;
        Ok(wht_allocation_sweep(&inst, &spec.ks, WdpSolver::Auto)?.into_iter().map(|(_, e)| e).collect())
    })?;
    let mut table = Table::new(["k", "median_efficiency", "mean_efficiency", "ci95", "min_efficiency", "seeds"]);
    for (j, k) in spec.ks.iter().enumerate() {
        let col: Vec<f64> = effs.iter().map(|e| e[j]).collect();
        table.push(vec![
            k.to_string(),
            num(stats::median(&col)),
            num(stats::mean(&col)),
            num(stats::ci95(&col)),
            num(col.iter().copied().fold(f64::INFINITY, f64::min)),
            col.len().to_string(),
        ]);
    }
    Ok(table)
}

/// Frequencies with the `k` largest `|φ|`, ties by bundle.
fn top_by_magnitude(spectrum: &DenseSetFunction, k: usize) -> BTreeSet<Bundle> {
    let mut idx: Vec<(Bundle, f64)> = spectrum.iter().filter(|(_, c)| c.abs() > fourier::NONZERO_TOL).collect();
    idx.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    idx.into_iter().take(k).map(|(y, _)| y).collect()
}

/// Energy ratio of the frequencies a surrogate ranks best against the true
/// best `k`, per kind, `k` and bidder type. Surrogates are trained on
/// `training_queries` uniformly random bundles.
pub fn exp_energy_ratio(spec: &ExperimentSpec) -> Result<Table> {
    let rows: Vec<Vec<(usize, usize, BidderType, f64)>> = per_seed(spec, |s| {
        let inst = spec.instance(s)?;
        let m = inst.num_items();
        let mut out = Vec::new();
        for (i, o) in inst.oracles.iter().enumerate() {
            let truth = o.dense()?;
            if truth.values().iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut rng = seeds::rng(s, &[tag::EXPERIMENT, i as u64]);
            let count = spec.training_queries.min(1 << m);
            let reports: ReportSet =
                index::sample(&mut rng, 1 << m, count).into_iter().map(|x| (Bundle(x as u32), truth.values()[x])).collect();
            let sizes = spec.hybrid.architectures.sizes(inst.bidder_types[i], m);
            let cfg = TrainConfig { seed: seeds::derive(s, &[tag::TRAINING, i as u64]), ..spec.hybrid.train };
            let net = fit_mlp(&reports, &sizes, &cfg)?.network;
            let surrogate = DenseSetFunction::new(m, net.predict_all())?;
            for (a, &kind) in spec.kinds.iter().enumerate() {
                let true_spectrum = fourier::forward(&truth, kind)?;
                let model_spectrum = fourier::forward(&surrogate, kind)?;
                for (b, &k) in spec.ks.iter().enumerate() {
                    let chosen = recovery::rank_support(&model_spectrum, kind, k);
                    let selected: BTreeSet<Bundle> = chosen.frequencies.into_iter().collect();
                    let best = top_by_magnitude(&true_spectrum, k);
                    let ratio = recovery::energy_ratio(&selected, &best, &true_spectrum)?;
                    out.push((a, b, inst.bidder_types[i], ratio));
                }
            }
        }
        Ok(out)
    })?;
    let mut groups: BTreeMap<(usize, usize, BidderType), Vec<f64>> = BTreeMap::new();
    for (a, b, t, r) in rows.into_iter().flatten() {
        groups.entry((a, b, t)).or_default().push(r);
    }
    let mut table = Table::new(["model", "kind", "k", "bidder_type", "energy_ratio", "ci95", "count"]);
    for ((a, b, t), rs) in groups {
        table.push(vec![
            spec.instance.family.as_str().into(),
            spec.kinds[a].as_str().into(),
            spec.ks[b].to_string(),
            t.as_str().into(),
            num(stats::mean(&rs)),
            num(stats::ci95(&rs)),
            rs.len().to_string(),
        ]);
    }
    Ok(table)
}

const TYPES: [BidderType; 3] = [BidderType::National, BidderType::Regional, BidderType::Local];

struct MechanismRun {
    efficiency: f64,
    revenue: f64,
    shares: BTreeMap<BidderType, f64>,
    seconds: f64,
}

fn run_mechanism(spec: &ExperimentSpec, inst: &Instance, optimum: f64, seed: u64, mech: Mechanism) -> Result<MechanismRun> {
    let [l1, l2, l3, l4] = split_budget(spec.budget, GSVM_SPLIT);
    let hybrid = |variant| HybridConfig { l1, l2, l3, l4, seed, variant, ..spec.hybrid.clone() };
    let start = Instant::now();
    let result = match mech {
        Mechanism::HybridIca => run_hybrid_ica(inst, &hybrid(HybridVariant::Full))?,
        Mechanism::HybridIcaNoFr => run_hybrid_ica(inst, &hybrid(HybridVariant::NoFr))?,
        Mechanism::HybridIcaNoFrFa => run_hybrid_ica(inst, &hybrid(HybridVariant::NoFrFa))?,
        Mechanism::Mlca => {
            let cfg = MlcaConfig { q_max: spec.budget, ..hybrid(HybridVariant::Full).mlca() };
            run_mlca(inst, &cfg)?
        }
    };
    Ok(MechanismRun {
        efficiency: result.efficiency(),
        revenue: result.revenue() / optimum,
        shares: welfare_shares(inst, &result.allocation, optimum),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every mechanism on the same seeds and budget. Returns a summary
/// table (one row per mechanism) and the per-seed table.
pub fn exp_mechanism_compare(spec: &ExperimentSpec) -> Result<(Table, Table)> {
    let runs: Vec<Vec<MechanismRun>> = per_seed(spec, |s| {
        let inst = spec.instance(s)?;
        let (_, optimum) = true_optimum(&inst)?;
        spec.mechanisms.iter().map(|&mech| run_mechanism(spec, &inst, optimum, s, mech)).collect()
    })?;
    let share = |r: &MechanismRun, t: BidderType| r.shares.get(&t).map(|v| num(*v)).unwrap_or_default();

    let mut seeds_table = Table::new([
        "seed",
        "mechanism",
        "efficiency",
        "revenue",
        "share_national",
        "share_regional",
        "share_local",
        "wall_seconds",
    ])
    .with_timing(&["wall_seconds"]);
    for (s, row) in spec.seeds.iter().zip(&runs) {
        for (mech, r) in spec.mechanisms.iter().zip(row) {
            let mut cells = vec![s.to_string(), mech.as_str().into(), num(r.efficiency), num(r.revenue)];
            cells.extend(TYPES.iter().map(|&t| share(r, t)));
            cells.push(format!("{:.3}", r.seconds));
            seeds_table.push(cells);
        }
    }

    let mut summary = Table::new([
        "model",
        "mechanism",
        "efficiency_mean",
        "efficiency_ci95",
        "revenue_mean",
        "share_national",
        "share_regional",
        "share_local",
        "wall_seconds_mean",
    ])
    .with_timing(&["wall_seconds_mean"]);
    for (j, mech) in spec.mechanisms.iter().enumerate() {
        let col: Vec<&MechanismRun> = runs.iter().map(|r| &r[j]).collect();
        let pick = |f: &dyn Fn(&MechanismRun) -> f64| -> Vec<f64> { col.iter().map(|r| f(r)).collect() };
        let effs = pick(&|r| r.efficiency);
        let mut cells = vec![
            spec.instance.family.as_str().into(),
            mech.as_str().into(),
            num(stats::mean(&effs)),
            num(stats::ci95(&effs)),
            num(stats::mean(&pick(&|r| r.revenue))),
        ];
        for t in TYPES {
            let xs: Vec<f64> = col.iter().filter_map(|r| r.shares.get(&t).copied()).collect();
            cells.push(if xs.is_empty() { String::new() } else { num(stats::mean(&xs)) });
        }
        cells.push(format!("{:.3}", stats::mean(&pick(&|r| r.seconds))));
        summary.push(cells);
    }
    Ok((summary, seeds_table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_roundtrip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn empty_seed_list_is_a_config_error() {
        let spec = ExperimentSpec::new(ExperimentId::SpectralEnergy, default_instance(), vec![]);
        assert!(matches!(run(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn constant_function_is_all_degree_zero() {
        let f = DenseSetFunction::from_fn(4, |_| 2.0).unwrap();
        let t = spectral_energy_table(&[f], &[TransformKind::Wht]).unwrap();
        let shares = t.numbers("energy_share").unwrap();
        assert_eq!(shares[0], 1.0);
        assert!(shares[1..].iter().all(|s| *s == 0.0));
    }
}
