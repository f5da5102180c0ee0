//! Oracles shared by the integration tests.

use fica::{Bundle, ReportSet};

/// Best reported welfare by enumerating every owner vector; a bidder may
/// only receive a bundle it reported or the empty bundle, worth 0 unless
/// reported.
pub fn brute_welfare(reports: &[&ReportSet], m: usize) -> f64 {
    let n = reports.len();
    let mut best = 0.0f64;
    let total = (n + 1).pow(m as u32);
    for code in 0..total {
        let mut bundles = vec![0u32; n];
        let mut c = code;
        for j in 0..m {
            let owner = c % (n + 1);
            c /= n + 1;
            if owner < n {
                bundles[owner] |= 1 << j;
            }
        }
        let mut w = 0.0;
        let mut ok = true;
        for (i, &b) in bundles.iter().enumerate() {
            match reports[i].get(Bundle(b)) {
                Some(v) => w += v,
                None if b == 0 => {}
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            best = best.max(w);
        }
    }
    best
}

pub fn brute_vcg(reports: &[ReportSet], m: usize) -> Vec<f64> {
    let all: Vec<&ReportSet> = reports.iter().collect();
    let total = brute_welfare(&all, m);
    (0..reports.len())
        .map(|i| {
            let others: Vec<&ReportSet> = reports.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r).collect();
            // with generic values the optimum is unique, so the others' share is total minus i's own value
            let own = own_value(&all, m, i, total);
            brute_welfare(&others, m) - (total - own)
        })
        .collect()
}

/// Value bidder `i` receives in the (unique) welfare-maximising allocation.
fn own_value(reports: &[&ReportSet], m: usize, i: usize, total: f64) -> f64 {
    let n = reports.len();
    for code in 0..(n + 1).pow(m as u32) {
        let mut bundles = vec![0u32; n];
        let mut c = code;
        for j in 0..m {
            let owner = c % (n + 1);
            c /= n + 1;
            if owner < n {
                bundles[owner] |= 1 << j;
            }
        }
        let vals: Option<Vec<f64>> = bundles
            .iter()
            .enumerate()
            .map(|(k, &b)| reports[k].get(Bundle(b)).or(if b == 0 { Some(0.0) } else { None }))
            .collect();
        if let Some(v) = vals {
            if (v.iter().sum::<f64>() - total).abs() < 1e-12 {
                return v[i];
            }
        }
    }
    unreachable!("optimum not attained")
}
