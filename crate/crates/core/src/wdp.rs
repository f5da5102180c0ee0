//! Exact winner determination back ends.
//!
//! [`exhaustive_wdp`] enumerates every feasible allocation and is the test
//! oracle. [`dense_wdp`] runs a subset dynamic program over full value
//! tables in `O(n·3^m)`. [`WdpSolver`] picks between the dynamic program
//! and the branch-and-bound MIP for the three WDP families.

use std::collections::BTreeSet;

use crate::domain::{Allocation, Bundle, ReportSet};
use crate::error::{Error, Result};
use crate::fourier::SparseSpectrum;
use crate::milp::{self, SolveLimits, SolveStatus, WdpModel};
use crate::surrogate::MlpNetwork;

pub const EXHAUSTIVE_LIMIT: f64 = 1e7;
/// Largest item count handled by the dense dynamic program.
pub const DENSE_DP_MAX_ITEMS: usize = 16;
const TIE_TOL: f64 = 1e-9;

/// Enumerates all `(n+1)^m` item assignments. Ties are broken towards the
/// lexicographically smallest tuple of bundle integers.
pub fn exhaustive_wdp<F>(n: usize, m: usize, value: F, exclusions: &[BTreeSet<Bundle>]) -> Result<(Allocation, f64)>
where
    F: Fn(usize, Bundle) -> f64,
{
    if ((n + 1) as f64).powi(m as i32) > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity(format!("exhaustive WDP with n={n}, m={m}")));
    }
    let tables = value_tables(n, m, value, exclusions);
    let mut bundles = vec![Bundle::EMPTY; n];
    let mut best: Option<(f64, Vec<Bundle>)> = None;
    enumerate(0, m, &tables, &mut bundles, &mut best);
    let (w, b) = best.ok_or_else(|| Error::InvalidInstance("every allocation is excluded".into()))?;
    Ok((Allocation::new(b)?, w))
}

fn enumerate(item: usize, m: usize, tables: &[Vec<f64>], bundles: &mut Vec<Bundle>, best: &mut Option<(f64, Vec<Bundle>)>) {
    if item == m {
        let w: f64 = bundles.iter().enumerate().map(|(i, b)| tables[i][b.index()]).sum();
        if w == f64::NEG_INFINITY {
            return;
        }
        let replace = match best {
            None => true,
            Some((bw, bb)) => w > *bw + TIE_TOL || (w >= *bw - TIE_TOL && bundles.as_slice() < bb.as_slice()),
        };
        if replace {
            *best = Some((w, bundles.clone()));
        }
        return;
    }
    enumerate(item + 1, m, tables, bundles, best);
    for i in 0..bundles.len() {
        bundles[i].0 |= 1 << item;
        enumerate(item + 1, m, tables, bundles, best);
        bundles[i].0 &= !(1 << item);
    }
}

fn value_tables<F: Fn(usize, Bundle) -> f64>(n: usize, m: usize, value: F, exclusions: &[BTreeSet<Bundle>]) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut t: Vec<f64> = (0..1u32 << m).map(|b| value(i, Bundle(b))).collect();
            if let Some(ex) = exclusions.get(i) {
                for b in ex {
                    t[b.index()] = f64::NEG_INFINITY;
                }
            }
            t
        })
        .collect()
}

/// Subset dynamic program over full per-bidder tables (`-inf` marks a
/// forbidden bundle). Items may stay unallocated.
pub fn dense_wdp(tables: &[Vec<f64>], m: usize) -> Result<(Allocation, f64)> {
    let size = 1usize << m;
    if tables.iter().any(|t| t.len() != size) {
        return Err(Error::InvalidInstance("value table length differs from 2^m".into()));
    }
    let n = tables.len();
    // g[S]: best welfare of bidders seen so far using items within S
    let mut g = vec![0.0f64; size];
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(n);
    for t in tables {
        let mut next = vec![f64::NEG_INFINITY; size];
        let mut pick = vec![0u32; size];
        for s in 0..size as u32 {
            let mut best = f64::NEG_INFINITY;
            let mut best_t = 0u32;
            // submasks in ascending order so that ties keep the smallest bundle
            let mut sub = 0u32;
            loop {
                let v = g[(s & !sub) as usize] + t[sub as usize];
                if v > best + TIE_TOL || (best == f64::NEG_INFINITY && v > best) {
                    best = v;
                    best_t = sub;
                }
                if sub == s {
                    break;
                }
                sub = (sub.wrapping_sub(s)) & s;
            }
            next[s as usize] = best;
            pick[s as usize] = best_t;
        }
        g = next;
        choice.push(pick);
    }
    let full = (size - 1) as u32;
    let welfare = if n == 0 { 0.0 } else { g[full as usize] };
    if welfare == f64::NEG_INFINITY {
        return Err(Error::InvalidInstance("every allocation is excluded".into()));
    }
    let mut bundles = vec![Bundle::EMPTY; n];
    let mut rest = full;
    for i in (0..n).rev() {
        let t = choice[i][rest as usize];
        bundles[i] = Bundle(t);
        rest &= !t;
    }
    Ok((Allocation::new(bundles)?, welfare))
}

/// Back end used for the surrogate, Fourier and reported WDPs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WdpSolver {
    /// Branch and bound on the MIP encodings.
    Mip(SolveLimits),
    /// Subset dynamic program over dense value tables.
    DenseDp,
    /// Dynamic program up to [`DENSE_DP_MAX_ITEMS`] items, MIP beyond.
    Auto,
}

impl Default for WdpSolver {
    fn default() -> WdpSolver {
        WdpSolver::Auto
    }
}

impl WdpSolver {
    fn use_dp(self, m: usize) -> bool {
        match self {
            WdpSolver::Mip(_) => false,
            WdpSolver::DenseDp => true,
            WdpSolver::Auto => m <= DENSE_DP_MAX_ITEMS,
        }
    }

    fn limits(self) -> SolveLimits {
        match self {
            WdpSolver::Mip(l) => l,
            _ => SolveLimits::default(),
        }
    }

    fn run_mip(self, wdp: Result<WdpModel>) -> Result<(Allocation, f64)> {
        let wdp = wdp?;
        let sol = milp::solve(&wdp.model, self.limits());
        match sol.status {
            SolveStatus::Infeasible => Err(Error::InvalidInstance("every allocation is excluded".into())),
            _ if !sol.has_solution() => Err(Error::Capacity("MIP budget exhausted without an incumbent".into())),
            SolveStatus::IterationLimit => {
                log::warn!("WDP solve hit its limit; using the incumbent");
                Ok((wdp.allocation(&sol)?, sol.objective))
            }
            SolveStatus::Optimal => Ok((wdp.allocation(&sol)?, sol.objective)),
        }
    }

    /// Maximises the summed sparse approximations.
    pub fn fourier(self, spectra: &[SparseSpectrum], exclusions: &[BTreeSet<Bundle>]) -> Result<(Allocation, f64)> {
        let m = spectra.first().map_or(0, |s| s.num_items());
        if self.use_dp(m) {
            if spectra.iter().any(|s| s.kind() != spectra[0].kind()) {
                return Err(Error::Unsupported("mixed transform kinds in one auction".into()));
            }
            let mut tables = Vec::with_capacity(spectra.len());
            for s in spectra {
                tables.push(s.to_dense_function()?.into_values());
            }
            mark_exclusions(&mut tables, exclusions);
            dense_wdp(&tables, m)
        } else {
            self.run_mip(milp::build_ft_wdp(spectra, exclusions))
        }
    }

    /// Maximises the summed network outputs.
    pub fn networks(self, networks: &[&MlpNetwork], exclusions: &[BTreeSet<Bundle>]) -> Result<(Allocation, f64)> {
        let m = networks.first().map_or(0, |n| n.num_items());
        if self.use_dp(m) {
            let mut tables: Vec<Vec<f64>> = networks.iter().map(|net| net.predict_all()).collect();
            mark_exclusions(&mut tables, exclusions);
            dense_wdp(&tables, m)
        } else {
            self.run_mip(milp::build_nn_wdp(networks, exclusions))
        }
    }

    /// Maximises reported welfare; bidders win a reported bundle or nothing.
    pub fn reported(self, reports: &[ReportSet], m: usize, exclusions: &[BTreeSet<Bundle>]) -> Result<(Allocation, f64)> {
        if self.use_dp(m) {
            let mut tables: Vec<Vec<f64>> = reports
                .iter()
                .map(|r| {
                    let mut t = vec![f64::NEG_INFINITY; 1 << m];
                    t[0] = 0.0;
                    for (b, v) in r.iter() {
                        t[b.index()] = v;
                    }
                    t
                })
                .collect();
            mark_exclusions(&mut tables, exclusions);
            dense_wdp(&tables, m)
        } else {
            self.run_mip(milp::build_reported_wdp(reports, m, exclusions))
        }
    }
}

fn mark_exclusions(tables: &mut [Vec<f64>], exclusions: &[BTreeSet<Bundle>]) {
    for (t, ex) in tables.iter_mut().zip(exclusions) {
        for b in ex {
            t[b.index()] = f64::NEG_INFINITY;
        }
    }
}
