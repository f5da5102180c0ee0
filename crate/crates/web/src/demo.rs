//! Target-independent core of the demo. Value tables are indexed by bundle
//! bitmask: entry `b` holds the value of the bundle whose item `j` is
//! present iff bit `j` of `b` is set.

use fica::fourier::{self, DenseSetFunction, TransformKind};
use fica::valuemodels::{generate, InstanceSpec, ModelFamily};

/// Largest item count the page accepts; the error curve is quadratic in 2^m.
pub const MAX_ITEMS: usize = 10;

pub fn parse_kind(kind: &str) -> Result<TransformKind, String> {
    kind.parse().map_err(|e: fica::Error| e.to_string())
}

fn table(values: &[f64]) -> Result<DenseSetFunction, String> {
    let len = values.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(format!("need 2^m values with m ≥ 1, got {len}"));
    }
    let m = len.trailing_zeros() as usize;
    if m > MAX_ITEMS {
        return Err(format!("at most {MAX_ITEMS} items, got {m}"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    DenseSetFunction::new(m, values.to_vec()).map_err(|e| e.to_string())
}

/// Spectrum of `values` under `kind`, in the same index order.
pub fn transform_table(values: &[f64], kind: &str) -> Result<Vec<f64>, String> {
    let f = table(values)?;
    Ok(fourier::forward(&f, parse_kind(kind)?).map_err(|e| e.to_string())?.into_values())
}

/// Share of spectral energy at each frequency cardinality `0..=m`.
pub fn energy_profile(values: &[f64], kind: &str) -> Result<Vec<f64>, String> {
    let spectrum = fourier::forward(&table(values)?, parse_kind(kind)?).map_err(|e| e.to_string())?;
    fourier::energy_by_cardinality(&spectrum).map_err(|e| e.to_string())
}

/// RMSE of the best `k`-sparse approximation for `k = 0..=2^m`.
pub fn sparse_error_curve(values: &[f64], kind: &str) -> Result<Vec<f64>, String> {
    let f = table(values)?;
    let kind = parse_kind(kind)?;
    let spectrum = fourier::forward(&f, kind).map_err(|e| e.to_string())?;
    let n = values.len() as f64;
    (0..=values.len())
        .map(|k| {
            let approx = fourier::select_best_k(&spectrum, kind, k).to_dense_function().map_err(|e| e.to_string())?;
            let sq: f64 = approx.values().iter().zip(values).map(|(a, v)| (a - v).powi(2)).sum();
            Ok((sq / n).sqrt())
        })
        .collect()
}

/// Value table of bidder `bidder` of a generated instance with one national
/// and two regional bidders.
pub fn sample_values(family: &str, m: usize, seed: u64, bidder: usize) -> Result<Vec<f64>, String> {
    if m == 0 || m > MAX_ITEMS {
        return Err(format!("m must be in 1..={MAX_ITEMS}"));
    }
    let family = match family {
        "global-synergy" => ModelFamily::GlobalSynergy,
        "local-synergy" => ModelFamily::LocalSynergy,
        "sparse-synthetic" => ModelFamily::SparseSynthetic,
        other => return Err(format!("unknown family {other:?}")),
    };
    let inst = generate(&InstanceSpec::new(family, m, InstanceSpec::roster_of(1, 2), seed)).map_err(|e| e.to_string())?;
    let oracle = inst.oracles.get(bidder).ok_or_else(|| format!("no bidder {bidder}"))?;
    Ok(oracle.dense().map_err(|e| e.to_string())?.into_values())
}
