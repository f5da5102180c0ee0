//! Winner determination models.
//!
//! All three builders share the allocation layout: bidder `i` receives the
//! bundle decoded from its variables, and every item is sold at most once.
//! Per-bidder exclusion sets remove specific bundles from the feasible set.

use std::collections::BTreeSet;

use super::{MilpModel, MilpSolution, Sense, VarId};
use crate::domain::{Allocation, Bundle, ReportSet};
use crate::error::{Error, Result};
use crate::fourier::{SparseSpectrum, TransformKind};
use crate::surrogate::MlpNetwork;

/// Variables of one Fourier coefficient in a bidder's block.
#[derive(Clone, Debug)]
pub struct FtRow {
    pub frequency: Bundle,
    pub coefficient: f64,
    pub alpha: VarId,
    /// Phase indicator (FT3/FT4) or parity bit (WHT).
    pub beta: VarId,
    /// WHT only: `β = W a − 2γ`.
    pub gamma: Option<VarId>,
}

#[derive(Clone, Debug)]
pub struct WdpModel {
    pub model: MilpModel,
    num_items: usize,
    /// `n × m` allocation binaries; empty for reported models.
    alloc: Vec<Vec<VarId>>,
    /// Reported models: one selector per (bidder, reported bundle).
    selectors: Vec<Vec<(Bundle, VarId)>>,
    ft_rows: Vec<Vec<FtRow>>,
}

impl WdpModel {
    pub fn num_bidders(&self) -> usize {
        self.alloc.len().max(self.selectors.len())
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn alloc_var(&self, bidder: usize, item: usize) -> VarId {
        self.alloc[bidder][item]
    }

    pub fn ft_rows(&self, bidder: usize) -> &[FtRow] {
        &self.ft_rows[bidder]
    }

    /// Decodes the allocation of a solution.
    pub fn allocation(&self, sol: &MilpSolution) -> Result<Allocation> {
        if !sol.has_solution() {
            return Err(Error::InvalidInstance("solution carries no assignment".into()));
        }
        let bundles = if self.alloc.is_empty() {
            self.selectors
                .iter()
                .map(|sel| sel.iter().find(|(_, v)| sol.value(*v) > 0.5).map_or(Bundle::EMPTY, |(b, _)| *b))
                .collect()
        } else {
            self.alloc
                .iter()
                .map(|vars| Bundle::from_items(vars.iter().enumerate().filter(|(_, v)| sol.value(**v) > 0.5).map(|(j, _)| j)))
                .collect()
        };
        Allocation::new(bundles)
    }
}

fn check_exclusions(exclusions: &[BTreeSet<Bundle>], n: usize) -> Result<()> {
    if !exclusions.is_empty() && exclusions.len() != n {
        return Err(Error::ModelBuild(format!("{} exclusion sets for {n} bidders", exclusions.len())));
    }
    Ok(())
}

/// Allocation binaries, item constraints and no-good cuts.
fn allocation_layer(model: &mut MilpModel, n: usize, m: usize, exclusions: &[BTreeSet<Bundle>]) -> Result<Vec<Vec<VarId>>> {
    check_exclusions(exclusions, n)?;
    let alloc: Vec<Vec<VarId>> = (0..n).map(|i| (0..m).map(|j| model.add_binary(format!("a_{i}_{j}"))).collect()).collect();
    for j in 0..m {
        model.add_constraint(format!("item_{j}"), (0..n).map(|i| (alloc[i][j], 1.0)).collect(), Sense::Le, 1.0)?;
    }
    for (i, excluded) in exclusions.iter().enumerate() {
        for x in excluded {
            let terms = (0..m).map(|j| (alloc[i][j], if x.contains(j) { -1.0 } else { 1.0 })).collect();
            model.add_constraint(format!("nogood_{i}_{}", x.bits()), terms, Sense::Ge, 1.0 - x.cardinality() as f64)?;
        }
    }
    Ok(alloc)
}

/// Fourier-sparse WDP. All spectra must share one transform kind and one
/// item count.
pub fn build_ft_wdp(spectra: &[SparseSpectrum], exclusions: &[BTreeSet<Bundle>]) -> Result<WdpModel> {
    let n = spectra.len();
    if n == 0 {
        return Err(Error::InvalidInstance("no bidders".into()));
    }
    let kind = spectra[0].kind();
    let m = spectra[0].num_items();
    if spectra.iter().any(|s| s.kind() != kind) {
        return Err(Error::Unsupported("mixed transform kinds in one auction".into()));
    }
    if spectra.iter().any(|s| s.num_items() != m) {
        return Err(Error::InvalidInstance("spectra disagree on the number of items".into()));
    }
    let mut model = MilpModel::new();
    let alloc = allocation_layer(&mut model, n, m, exclusions)?;
    let big_c = (m + 1) as f64;
    let mut ft_rows = Vec::with_capacity(n);
    for (i, spectrum) in spectra.iter().enumerate() {
        let mut rows = Vec::with_capacity(spectrum.len());
        for (l, (y, phi)) in spectrum.iter().enumerate() {
            let card = y.cardinality() as f64;
            let a_terms = |sign: f64| -> Vec<(VarId, f64)> { y.items().map(|j| (alloc[i][j], sign)).collect() };
            let tag = format!("{i}_{l}");
            let row = match kind {
                TransformKind::Ft3 | TransformKind::Ft4 => {
                    let alpha = model.add_continuous(format!("alpha_{tag}"), 0.0, 1.0);
                    let beta = model.add_binary(format!("beta_{tag}"));
                    // zeta = 1 - |y| + sum a (FT3) or 1 - sum a (FT4), written as alpha + s*sum a vs rhs
                    let (sign, rhs) = if kind == TransformKind::Ft3 { (-1.0, 1.0 - card) } else { (1.0, 1.0) };
                    let mut lo = vec![(alpha, 1.0)];
                    lo.extend(a_terms(sign));
                    model.add_constraint(format!("max_lo_{tag}"), lo.clone(), Sense::Ge, rhs)?;
                    lo.push((beta, -big_c));
                    model.add_constraint(format!("max_hi_{tag}"), lo, Sense::Le, rhs)?;
                    model.add_constraint(format!("max_zero_{tag}"), vec![(alpha, 1.0), (beta, big_c)], Sense::Le, big_c)?;
                    FtRow { frequency: y, coefficient: phi, alpha, beta, gamma: None }
                }
                TransformKind::Wht => {
                    let alpha = model.add_continuous(format!("alpha_{tag}"), -1.0, 1.0);
                    let beta = model.add_binary(format!("beta_{tag}"));
                    let gamma = model.add_integer(format!("gamma_{tag}"), 0.0, (y.cardinality() / 2) as f64)?;
                    model.add_constraint(format!("sign_{tag}"), vec![(alpha, 1.0), (beta, 2.0)], Sense::Eq, 1.0)?;
                    let mut parity = vec![(beta, 1.0), (gamma, 2.0)];
                    parity.extend(a_terms(-1.0));
                    model.add_constraint(format!("parity_{tag}"), parity, Sense::Eq, 0.0)?;
                    FtRow { frequency: y, coefficient: phi, alpha, beta, gamma: Some(gamma) }
                }
            };
            model.set_objective(row.alpha, phi);
            rows.push(row);
        }
        ft_rows.push(rows);
    }
    Ok(WdpModel { model, num_items: m, alloc, selectors: Vec::new(), ft_rows })
}

/// WDP over reported bundle-value pairs: each bidder wins at most one of
/// its reported bundles, or nothing.
pub fn build_reported_wdp(reports: &[ReportSet], m: usize, exclusions: &[BTreeSet<Bundle>]) -> Result<WdpModel> {
    let n = reports.len();
    check_exclusions(exclusions, n)?;
    let mut model = MilpModel::new();
    let mut selectors = Vec::with_capacity(n);
    for (i, r) in reports.iter().enumerate() {
        let mut sel = Vec::new();
        for (b, v) in r.iter() {
            if exclusions.get(i).is_some_and(|e| e.contains(&b)) {
                continue;
            }
            if b.bits() >> m != 0 {
                return Err(Error::InvalidInstance(format!("reported bundle {b} exceeds {m} items")));
            }
            let s = model.add_binary(format!("s_{i}_{}", b.bits()));
            model.set_objective(s, v);
            sel.push((b, s));
        }
        if sel.len() > 1 {
            model.add_constraint(format!("one_{i}"), sel.iter().map(|(_, s)| (*s, 1.0)).collect(), Sense::Le, 1.0)?;
        }
        selectors.push(sel);
    }
    for j in 0..m {
        let terms: Vec<(VarId, f64)> =
            selectors.iter().flatten().filter(|(b, _)| b.contains(j)).map(|(_, s)| (*s, 1.0)).collect();
        if terms.len() > 1 {
            model.add_constraint(format!("item_{j}"), terms, Sense::Le, 1.0)?;
        }
    }
    Ok(WdpModel { model, num_items: m, alloc: Vec::new(), selectors, ft_rows: Vec::new() })
}

/// An affine expression over model variables.
#[derive(Clone, Debug)]
struct Affine {
    terms: Vec<(VarId, f64)>,
    constant: f64,
    lower: f64,
    upper: f64,
}

/// WDP over ReLU network surrogates with a big-M encoding per unit.
///
/// Pre-activation bounds come from interval arithmetic. Units that are
/// provably inactive vanish, provably active units are substituted by their
/// affine pre-activation, and the rest receive a binary phase variable.
pub fn build_nn_wdp(networks: &[&MlpNetwork], exclusions: &[BTreeSet<Bundle>]) -> Result<WdpModel> {
    let n = networks.len();
    if n == 0 {
        return Err(Error::InvalidInstance("no bidders".into()));
    }
    let m = networks[0].num_items();
    if networks.iter().any(|net| net.num_items() != m) {
        return Err(Error::InvalidInstance("networks disagree on the number of items".into()));
    }
    let mut model = MilpModel::new();
    let alloc = allocation_layer(&mut model, n, m, exclusions)?;
    let mut offset = 0.0;
    for (i, net) in networks.iter().enumerate() {
        let mut units: Vec<Affine> =
            (0..m).map(|j| Affine { terms: vec![(alloc[i][j], 1.0)], constant: 0.0, lower: 0.0, upper: 1.0 }).collect();
        for (li, layer) in net.layers().iter().enumerate() {
            let mut next = Vec::with_capacity(layer.outputs);
            for o in 0..layer.outputs {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                let mut pre = Affine { terms: Vec::new(), constant: layer.bias[o], lower: layer.bias[o], upper: layer.bias[o] };
                for (w, u) in row.iter().zip(&units) {
                    if *w == 0.0 {
                        continue;
                    }
                    pre.constant += w * u.constant;
                    for (v, a) in &u.terms {
                        pre.terms.push((*v, w * a));
                    }
                    if *w > 0.0 {
                        pre.lower += w * u.lower;
                        pre.upper += w * u.upper;
                    } else {
                        pre.lower += w * u.upper;
                        pre.upper += w * u.lower;
                    }
                }
                if !(pre.lower.is_finite() && pre.upper.is_finite()) {
                    return Err(Error::ModelBuild(format!("unbounded activation in bidder {i}, layer {li}, unit {o}")));
                }
                merge_terms(&mut pre.terms);
                let post = if pre.upper <= 0.0 {
                    Affine { terms: Vec::new(), constant: 0.0, lower: 0.0, upper: 0.0 }
                } else if pre.lower >= 0.0 {
                    pre
                } else {
                    let tag = format!("{i}_{li}_{o}");
                    let h = model.add_continuous(format!("h_{tag}"), 0.0, pre.upper);
                    let d = model.add_binary(format!("d_{tag}"));
                    // h >= pre
                    let mut t = vec![(h, 1.0)];
                    t.extend(pre.terms.iter().map(|(v, a)| (*v, -a)));
                    model.add_constraint(format!("relu_lo_{tag}"), t.clone(), Sense::Ge, pre.constant)?;
                    // h <= pre - L(1 - d)
                    t.push((d, -pre.lower));
                    model.add_constraint(format!("relu_hi_{tag}"), t, Sense::Le, pre.constant - pre.lower)?;
                    // h <= U d
                    model.add_constraint(format!("relu_on_{tag}"), vec![(h, 1.0), (d, -pre.upper)], Sense::Le, 0.0)?;
                    Affine { terms: vec![(h, 1.0)], constant: 0.0, lower: 0.0, upper: pre.upper }
                };
                next.push(post);
            }
            units = next;
        }
        for u in &units {
            offset += u.constant;
            for (v, a) in &u.terms {
                model.add_objective(*v, *a);
            }
        }
    }
    model.set_objective_offset(offset);
    Ok(WdpModel { model, num_items: m, alloc, selectors: Vec::new(), ft_rows: vec![Vec::new(); n] })
}

fn merge_terms(terms: &mut Vec<(VarId, f64)>) {
    terms.sort_by_key(|t| t.0);
    let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms.drain(..) {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += a,
            _ => merged.push((v, a)),
        }
    }
    merged.retain(|t| t.1 != 0.0);
    *terms = merged;
}
