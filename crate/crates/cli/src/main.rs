//! `fica` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 capacity error, 1 any
//! other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use fica::domain::AuctionResult;
use fica::experiments::{self, ExperimentId, ExperimentSpec};
use fica::io::{self, Table};
use fica::mechanisms::{self, HybridConfig, MlcaConfig};
use fica::recovery::{self, FitConfig, SupportSuperset};
use fica::valuemodels::{self, BidderType, Instance, InstanceSpec, ModelFamily};
use fica::wdp::WdpSolver;
use fica::{Bundle, TransformKind};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "fica", version, about = "Fourier analysis tools for combinatorial auctions")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seeds of the configuration (instance and mechanism).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Wht,
    Ft3,
    Ft4,
}

impl From<Kind> for TransformKind {
    fn from(k: Kind) -> TransformKind {
        match k {
            Kind::Wht => TransformKind::Wht,
            Kind::Ft3 => TransformKind::Ft3,
            Kind::Ft4 => TransformKind::Ft4,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Auto,
    Dp,
    Mip,
}

impl From<Solver> for WdpSolver {
    fn from(s: Solver) -> WdpSolver {
        match s {
            Solver::Auto => WdpSolver::Auto,
            Solver::Dp => WdpSolver::DenseDp,
            Solver::Mip => WdpSolver::Mip(Default::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance: manifest plus one value table per bidder.
    Gen,
    /// Transform a value table (`bundle,value` CSV) or a dense spectrum.
    Transform {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "wht")]
        kind: Kind,
        #[arg(long, value_enum, default_value = "forward")]
        direction: Direction,
    },
    /// Fit a sparse spectrum to reported values.
    Fit {
        reports: PathBuf,
        #[arg(long, value_enum, default_value = "wht")]
        kind: Kind,
        /// Nonzero coefficients kept (WHT) or frequencies fitted (FT3/FT4).
        #[arg(long, default_value_t = 100)]
        support_size: usize,
        #[arg(long, default_value_t = 100)]
        path_points: usize,
        /// Candidate frequencies (`rank,frequency` CSV); every frequency
        /// of degree at most `--max-degree` otherwise.
        #[arg(long)]
        superset: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        max_degree: u32,
    },
    /// Solve a winner determination problem over spectra or reports.
    Wdp {
        /// One file per bidder.
        inputs: Vec<PathBuf>,
        /// Read the inputs as spectra of this kind instead of reports.
        #[arg(long, value_enum)]
        spectra: Option<Kind>,
        #[arg(long, value_enum, default_value = "auto")]
        solver: Solver,
    },
    /// Run MLCA on a generated instance.
    RunMlca,
    /// Run Hybrid ICA on a generated instance.
    RunHybrid,
    /// Run an experiment.
    Experiment {
        /// Overrides the experiment id of the configuration.
        #[arg(long)]
        id: Option<String>,
        /// Number of seeds, starting at `--seed` (default 0).
        #[arg(long)]
        seeds: Option<u64>,
    },
}

#[derive(Default, Deserialize)]
#[serde(default)]
struct RunFile {
    instance: Option<InstanceSpec>,
    mlca: MlcaConfig,
    hybrid: HybridConfig,
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    mechanism: &'a str,
    instance: &'a InstanceSpec,
    config: &'a C,
    optimum: f64,
    efficiency: f64,
    revenue: f64,
    welfare_shares: Vec<(BidderType, f64)>,
    allocation: Vec<String>,
    payments: &'a [f64],
    notes: &'a [String],
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<fica::Error>() {
            return match err {
                fica::Error::Config(_) | fica::Error::Parse(_) => 2,
                fica::Error::Capacity(_) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    fica::Error::Config(msg.into()).into()
}

fn read_toml<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = io::read_text(p).map_err(|e| config_error(format!("reading {}: {e}", p.display())))?;
            Ok(toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Gen => {
            let mut spec = load_instance(config)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("instance"));
            generate_files(&spec, &out)
        }
        Command::Transform { input, kind, direction } => {
            let f = io::read_dense(&input)?;
            let g = match direction {
                Direction::Forward => fica::fourier::forward(&f, kind.into())?,
                Direction::Inverse => fica::fourier::inverse(&f, kind.into())?,
            };
            match cli.out {
                Some(p) => io::write_dense(&p, &g)?,
                None => stdout(&dense_csv(&g)?)?,
            }
            Ok(())
        }
        Command::Fit { reports, kind, support_size, path_points, superset, max_degree } => {
            let kind: TransformKind = kind.into();
            let (m, reports) = io::read_reports(&reports)?;
            let s1 = match superset {
                Some(p) => io::read_support(&p, kind)?,
                None => {
                    let freqs = (0..1u32 << m).map(Bundle).filter(|y| y.cardinality() <= max_degree).collect();
                    SupportSuperset::new(kind, m, freqs)?
                }
            };
            let s1 = if kind == TransformKind::Wht { s1 } else { s1.prefix(support_size) };
            let cfg = FitConfig { target_support: support_size, path_points, ..FitConfig::default() };
            let spectrum = recovery::fit_spectrum(&reports, &s1, &cfg)?;
            match cli.out {
                Some(p) => io::write_spectrum(&p, &spectrum)?,
                None => stdout(&spectrum.iter().map(|(y, c)| format!("{},{c:e}\n", y.to_binary_string(m))).collect::<String>())?,
            }
            Ok(())
        }
        Command::Wdp { inputs, spectra, solver } => {
            if inputs.is_empty() {
                return Err(config_error("wdp needs at least one input file"));
            }
            let solver: WdpSolver = solver.into();
            let (m, (alloc, welfare)) = match spectra {
                Some(kind) => {
                    let s = inputs.iter().map(|p| io::read_spectrum(p, kind.into())).collect::<fica::Result<Vec<_>>>()?;
                    let m = s[0].num_items();
                    if s.iter().any(|x| x.num_items() != m) {
                        return Err(config_error("spectra disagree on the number of items"));
                    }
                    (m, solver.fourier(&s, &[])?)
                }
                None => {
                    let r = inputs.iter().map(|p| io::read_reports(p)).collect::<fica::Result<Vec<_>>>()?;
                    let m = r[0].0;
                    if r.iter().any(|x| x.0 != m) {
                        return Err(config_error("report files disagree on the number of items"));
                    }
                    let reports: Vec<_> = r.into_iter().map(|x| x.1).collect();
                    (m, solver.reported(&reports, m, &[])?)
                }
            };
            let value = serde_json::json!({
                "welfare": welfare,
                "allocation": alloc.bundles().iter().map(|b| b.to_binary_string(m)).collect::<Vec<_>>(),
            });
            emit_json(cli.out.as_deref(), &value)
        }
        Command::RunMlca => {
            let file: RunFile = read_toml(config)?;
            let mut cfg = file.mlca;
            let mut spec = file.instance.unwrap_or_else(default_instance);
            if let Some(s) = cli.seed {
                cfg.seed = s;
                spec.seed = s;
            }
            let inst = valuemodels::generate(&spec)?;
            let res = mechanisms::run_mlca(&inst, &cfg)?;
            report_run("mlca", &inst, &cfg, &res, cli.out.as_deref())
        }
        Command::RunHybrid => {
            let file: RunFile = read_toml(config)?;
            let mut cfg = file.hybrid;
            let mut spec = file.instance.unwrap_or_else(default_instance);
            if let Some(s) = cli.seed {
                cfg.seed = s;
                spec.seed = s;
            }
            let inst = valuemodels::generate(&spec)?;
            let res = mechanisms::run_hybrid_ica(&inst, &cfg)?;
            report_run(cfg.variant.as_str(), &inst, &cfg, &res, cli.out.as_deref())
        }
        Command::Experiment { id, seeds } => {
            let mut spec: ExperimentSpec = read_toml(config)?;
            if let Some(id) = id {
                spec.id = id.parse::<ExperimentId>()?;
            }
            match (cli.seed, seeds) {
                (s, Some(n)) => spec.seeds = (s.unwrap_or(0)..s.unwrap_or(0) + n).collect(),
                (Some(s), None) => spec.seeds = vec![s],
                (None, None) => {}
            }
            if let Some(out) = cli.out {
                spec.out_dir = Some(out);
            }
            let output = experiments::run(&spec)?;
            match &spec.out_dir {
                Some(dir) => {
                    for p in output.write(dir)? {
                        eprintln!("wrote {}", p.display());
                    }
                    io::write_json(&dir.join("experiment.json"), &spec)?;
                }
                None => {
                    for (name, t) in &output.tables {
                        stdout(&format!("# {name}\n{}", t.to_csv()?))?;
                    }
                }
            }
            Ok(())
        }
    }
}

fn default_instance() -> InstanceSpec {
    InstanceSpec::new(ModelFamily::GlobalSynergy, 12, InstanceSpec::roster_of(1, 3), 0)
}

fn load_instance(config: Option<&Path>) -> anyhow::Result<InstanceSpec> {
    #[derive(Default, Deserialize)]
    struct InstanceFile {
        instance: Option<InstanceSpec>,
    }
    let file: InstanceFile = read_toml(config)?;
    Ok(file.instance.unwrap_or_else(default_instance))
}

fn dense_csv(f: &fica::DenseSetFunction) -> anyhow::Result<String> {
    let mut t = Table::new(["bundle", "value"]);
    for (b, v) in f.iter() {
        t.push(vec![b.to_binary_string(f.num_items()), format!("{v:e}")]);
    }
    Ok(t.to_csv()?)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    match out {
        Some(p) => io::write_json(p, value)?,
        None => stdout(&(serde_json::to_string_pretty(value)? + "\n"))?,
    }
    Ok(())
}

/// Largest instance written out as dense value tables.
const MAX_TABLE_ITEMS: usize = 20;

fn generate_files(spec: &InstanceSpec, out: &Path) -> anyhow::Result<()> {
    let inst = valuemodels::generate(spec)?;
    let m = inst.num_items();
    if m > MAX_TABLE_ITEMS {
        bail!(fica::Error::Capacity(format!("value tables for {m} items")));
    }
    io::write_json(&out.join("instance.json"), spec)?;
    for (i, o) in inst.oracles.iter().enumerate() {
        io::write_dense(&out.join(format!("bidder_{i}.csv")), &o.dense()?)?;
        if let Some(s) = o.spectrum() {
            io::write_spectrum(&out.join(format!("bidder_{i}_{}.csv", s.kind())), s)?;
        }
    }
    eprintln!("wrote {} bidders to {}", inst.num_bidders(), out.display());
    Ok(())
}

fn report_run<C: Serialize>(
    name: &str,
    inst: &Instance,
    cfg: &C,
    res: &AuctionResult,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let (_, optimum) = valuemodels::true_optimum(inst)?;
    let m = inst.num_items();
    let manifest = RunManifest {
        mechanism: name,
        instance: &inst.spec,
        config: cfg,
        optimum,
        efficiency: res.efficiency(),
        revenue: res.revenue() / optimum,
        welfare_shares: mechanisms::welfare_shares(inst, &res.allocation, optimum).into_iter().collect(),
        allocation: res.allocation.bundles().iter().map(|b| b.to_binary_string(m)).collect(),
        payments: &res.payments,
        notes: &res.notes,
    };
    let mut trace = Table::new(["phase", "queries", "reported_welfare", "efficiency"]);
    for t in &res.trace {
        trace.push(vec![t.phase.clone(), t.queries.to_string(), t.reported_welfare.to_string(), t.efficiency.to_string()]);
    }
    let mut bidders = Table::new(["bidder", "type", "bundle", "value", "welfare_share", "payment"]);
    for (i, t) in inst.bidder_types.iter().enumerate() {
        let b = res.allocation.bundle(i);
        let v = inst.value(i, b);
        bidders.push(vec![
            i.to_string(),
            t.as_str().into(),
            b.to_binary_string(m),
            v.to_string(),
            (v / optimum).to_string(),
            res.payments[i].to_string(),
        ]);
    }
    match out {
        Some(dir) => {
            io::write_json(&dir.join("manifest.json"), &manifest)?;
            trace.write(&dir.join("trace.csv"))?;
            bidders.write(&dir.join("bidders.csv"))?;
            eprintln!("wrote {}", dir.display());
        }
        None => {
            stdout(&format!("{}\n{}", serde_json::to_string_pretty(&manifest)?, trace.to_csv()?))?;
        }
    }
    Ok(())
}
