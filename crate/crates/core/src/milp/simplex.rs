//! Dense two-phase primal simplex for bounded LPs.
//!
//! Variables are shifted onto `[0, u − l]`, finite upper bounds become
//! explicit rows, and fixed variables are substituted out. Entering columns
//! are chosen by Dantzig's rule; after a run of degenerate pivots the solve
//! switches to Bland's rule for the rest of the phase.

use super::Sense;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A sparse constraint row.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug)]
enum Mapping {
    Fixed(f64),
    /// `x = base + sign · col`
    Shift { col: usize, base: f64, sign: f64 },
    /// `x = pos − neg`
    Free { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows × (cols + 1)`; the last entry of each row is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs `c_j − c_B B⁻¹ A_j` followed by the objective value.
    cost: Vec<f64>,
    banned: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.a[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let stride = self.cols + 1;
        let p = self.a[r * stride + j];
        {
            let row = &mut self.a[r * stride..(r + 1) * stride];
            row.iter_mut().for_each(|v| *v /= p);
        }
        let pivot_row: Vec<f64> = self.a[r * stride..(r + 1) * stride].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * stride + j];
            if f != 0.0 {
                let row = &mut self.a[i * stride..(i + 1) * stride];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Maximises the objective encoded in `cost`. Returns `Err(true)` when
    /// unbounded and `Err(false)` on the iteration limit.
    fn optimize(&mut self, max_iter: usize) -> Result<(), bool> {
        let mut bland = false;
        let mut degenerate = 0;
        for _ in 0..max_iter {
            let entering = if bland {
                (0..self.cols).find(|&j| !self.banned[j] && self.cost[j] > COST_TOL)
            } else {
                let mut best = None;
                let mut best_d = COST_TOL;
                for j in 0..self.cols {
                    if !self.banned[j] && self.cost[j] > best_d {
                        best_d = self.cost[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(j) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, j);
                if aij > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r]) {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else { return Err(true) };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, j);
        }
        Err(false)
    }
}

/// Maximises `c·x` subject to `rows` and `lower ≤ x ≤ upper`.
pub fn solve_lp(c: &[f64], rows: &[LpRow], lower: &[f64], upper: &[f64]) -> LpOutcome {
    let n = c.len();
    // column mapping
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lower[j], upper[j]);
        if l > u + FEAS_TOL {
            return LpOutcome::Infeasible;
        }
        if l.is_finite() && u.is_finite() && (u - l).abs() <= 1e-12 {
            maps.push(Mapping::Fixed(l));
        } else if l.is_finite() {
            maps.push(Mapping::Shift { col: ncols, base: l, sign: 1.0 });
            if u.is_finite() {
                bound_rows.push((ncols, u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            maps.push(Mapping::Shift { col: ncols, base: u, sign: -1.0 });
            ncols += 1;
        } else {
            maps.push(Mapping::Free { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    // rows over the mapped columns
    let mut dense_rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(rows.len() + bound_rows.len());
    for row in rows {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for &(j, a) in &row.terms {
            match maps[j] {
                Mapping::Fixed(v) => rhs -= a * v,
                Mapping::Shift { col, base, sign } => {
                    coeffs[col] += a * sign;
                    rhs -= a * base;
                }
                Mapping::Free { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        if coeffs.iter().all(|v| v.abs() <= 1e-15) {
            let ok = match row.sense {
                Sense::Le => 0.0 <= rhs + FEAS_TOL,
                Sense::Ge => 0.0 >= rhs - FEAS_TOL,
                Sense::Eq => rhs.abs() <= FEAS_TOL,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        dense_rows.push((coeffs, row.sense, rhs));
    }
    for (col, ub) in bound_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        dense_rows.push((coeffs, Sense::Le, ub));
    }
    for (coeffs, sense, rhs) in dense_rows.iter_mut() {
        if *rhs < 0.0 {
            coeffs.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let nrows = dense_rows.len();
    let n_slack = dense_rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = dense_rows.iter().filter(|r| r.1 != Sense::Le).count();
    let total = ncols + n_slack + n_art;
    let stride = total + 1;
    let mut a = vec![0.0; nrows * stride];
    let mut basis = vec![0; nrows];
    let mut is_art = vec![false; total];
    let (mut s, mut t) = (ncols, ncols + n_slack);
    for (i, (coeffs, sense, rhs)) in dense_rows.iter().enumerate() {
        a[i * stride..i * stride + ncols].copy_from_slice(coeffs);
        a[i * stride + total] = *rhs;
        match sense {
            Sense::Le => {
                a[i * stride + s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Sense::Ge => {
                a[i * stride + s] = -1.0;
                s += 1;
                a[i * stride + t] = 1.0;
                basis[i] = t;
                is_art[t] = true;
                t += 1;
            }
            Sense::Eq => {
                a[i * stride + t] = 1.0;
                basis[i] = t;
                is_art[t] = true;
                t += 1;
            }
        }
    }

    let mut tab = Tableau { rows: nrows, cols: total, a, basis, cost: vec![0.0; stride], banned: vec![false; total] };
    let max_iter = 50 * (nrows + total) + 1000;

    if n_art > 0 {
        // phase I: maximise −Σ artificials
        for i in 0..nrows {
            if is_art[tab.basis[i]] {
                for j in 0..stride {
                    if j == total || !is_art[j] {
                        tab.cost[j] += tab.at(i, j);
                    }
                }
            }
        }
        // cost[total] holds −objective for the phase, i.e. Σ rhs of artificial rows
        match tab.optimize(max_iter) {
            Ok(()) => {}
            Err(true) => return LpOutcome::Unbounded,
            Err(false) => return LpOutcome::IterationLimit,
        }
        let infeasibility: f64 = (0..nrows).filter(|&i| is_art[tab.basis[i]]).map(|i| tab.rhs(i)).sum();
        let scale = 1.0 + dense_rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeasibility > FEAS_TOL * scale {
            return LpOutcome::Infeasible;
        }
        for i in 0..nrows {
            if is_art[tab.basis[i]] {
                if let Some(j) = (0..total).find(|&j| !is_art[j] && tab.at(i, j).abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }
        for j in 0..total {
            tab.banned[j] = is_art[j];
        }
    }

    // phase II
    let mut cost_full = vec![0.0; total];
    for (j, m) in maps.iter().enumerate() {
        match *m {
            Mapping::Fixed(_) => {}
            Mapping::Shift { col, sign, .. } => cost_full[col] += c[j] * sign,
            Mapping::Free { pos, neg } => {
                cost_full[pos] += c[j];
                cost_full[neg] -= c[j];
            }
        }
    }
    let mut cost = vec![0.0; stride];
    cost[..total].copy_from_slice(&cost_full);
    for i in 0..nrows {
        let cb = cost_full[tab.basis[i]];
        if cb != 0.0 {
            for j in 0..stride {
                cost[j] -= cb * tab.at(i, j);
            }
        }
    }
    tab.cost = cost;
    for i in 0..nrows {
        let b = tab.basis[i];
        tab.cost[b] = 0.0;
    }
    match tab.optimize(max_iter) {
        Ok(()) => {}
        Err(true) => return LpOutcome::Unbounded,
        Err(false) => return LpOutcome::IterationLimit,
    }

    let mut col_values = vec![0.0; total];
    for i in 0..nrows {
        col_values[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Mapping::Fixed(v) => v,
            Mapping::Shift { col, base, sign } => base + sign * col_values[col],
            Mapping::Free { pos, neg } => col_values[pos] - col_values[neg],
        })
        .collect();
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], sense: Sense, rhs: f64) -> LpRow {
        LpRow { terms: terms.to_vec(), sense, rhs }
    }

    fn optimum(out: &LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective } => (x.clone(), *objective),
            other => panic!("not optimal: {other:?}"),
        }
    }

    #[test]
    fn textbook_lp() {
        // max x + 2y s.t. x + y <= 4, x <= 2, y <= 3
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Le, 4.0), row(&[(0, 1.0)], Sense::Le, 2.0), row(&[(1, 1.0)], Sense::Le, 3.0)];
        let (x, obj) = optimum(&solve_lp(&[1.0, 2.0], &rows, &[0.0, 0.0], &[f64::INFINITY; 2]));
        assert!((obj - 7.0).abs() < 1e-9);
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y s.t. x + y = 3, x >= 1, y in [0.5, 10]
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Eq, 3.0), row(&[(0, 1.0)], Sense::Ge, 1.0)];
        let (_, obj) = optimum(&solve_lp(&[-1.0, -1.0], &rows, &[0.0, 0.5], &[f64::INFINITY, 10.0]));
        assert!((obj + 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)];
        assert_eq!(solve_lp(&[1.0, 1.0], &rows, &[0.0, 0.0], &[1.0, 1.0]), LpOutcome::Infeasible);
        let rows = [row(&[(0, 1.0), (1, -1.0)], Sense::Le, 1.0)];
        assert_eq!(solve_lp(&[1.0, 1.0], &rows, &[0.0, 0.0], &[f64::INFINITY; 2]), LpOutcome::Unbounded);
    }

    #[test]
    fn free_and_negative_bounded_variables() {
        // max -|x| style: max -t s.t. t >= x - 2, t >= 2 - x, x free, t free
        let rows = [row(&[(1, 1.0), (0, -1.0)], Sense::Ge, -2.0), row(&[(1, 1.0), (0, 1.0)], Sense::Ge, 2.0)];
        let (x, obj) = optimum(&solve_lp(&[0.0, -1.0], &rows, &[f64::NEG_INFINITY; 2], &[f64::INFINITY; 2]));
        assert!(obj.abs() < 1e-9 && (x[0] - 2.0).abs() < 1e-9);
        // x in (-inf, -1]: max x -> -1
        let (x, _) = optimum(&solve_lp(&[1.0], &[], &[f64::NEG_INFINITY], &[-1.0]));
        assert!((x[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let rows = [row(&[(0, 1.0), (1, 1.0)], Sense::Le, 1.5)];
        let (x, obj) = optimum(&solve_lp(&[1.0, 1.0], &rows, &[1.0, 0.0], &[1.0, 1.0]));
        assert_eq!(x[0], 1.0);
        assert!((obj - 1.5).abs() < 1e-9);
    }

    /// Vertex enumeration oracle for 2-variable LPs with box bounds.
    fn brute_force_2d(c: [f64; 2], rows: &[LpRow], lo: [f64; 2], hi: [f64; 2]) -> Option<f64> {
        let mut lines: Vec<([f64; 2], f64)> = rows
            .iter()
            .map(|r| {
                let mut a = [0.0; 2];
                for &(j, v) in &r.terms {
                    a[j] += v;
                }
                (a, r.rhs)
            })
            .collect();
        lines.push(([1.0, 0.0], lo[0]));
        lines.push(([1.0, 0.0], hi[0]));
        lines.push(([0.0, 1.0], lo[1]));
        lines.push(([0.0, 1.0], hi[1]));
        let feasible = |p: [f64; 2]| {
            p[0] >= lo[0] - 1e-9
                && p[0] <= hi[0] + 1e-9
                && p[1] >= lo[1] - 1e-9
                && p[1] <= hi[1] + 1e-9
                && rows.iter().all(|r| {
                    let lhs: f64 = r.terms.iter().map(|&(j, v)| v * p[j]).sum();
                    match r.sense {
                        Sense::Le => lhs <= r.rhs + 1e-9,
                        Sense::Ge => lhs >= r.rhs - 1e-9,
                        Sense::Eq => (lhs - r.rhs).abs() <= 1e-9,
                    }
                })
        };
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for k in i + 1..lines.len() {
                let (a, b) = (lines[i], lines[k]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let p = [(a.1 * b.0[1] - a.0[1] * b.1) / det, (a.0[0] * b.1 - a.1 * b.0[0]) / det];
                if feasible(p) {
                    let v = c[0] * p[0] + c[1] * p[1];
                    best = Some(best.map_or(v, |bv: f64| bv.max(v)));
                }
            }
        }
        best
    }

    proptest::proptest! {
        #[test]
        fn matches_vertex_enumeration(
            c in proptest::array::uniform2(-5.0f64..5.0),
            coeffs in proptest::collection::vec(proptest::array::uniform3(-4.0f64..4.0), 1..5),
            senses in proptest::collection::vec(0u8..3, 5),
        ) {
            let rows: Vec<LpRow> = coeffs.iter().zip(&senses).map(|(r, s)| {
                let sense = match s { 0 => Sense::Le, 1 => Sense::Ge, _ => Sense::Le };
                row(&[(0, r[0]), (1, r[1])], sense, r[2])
            }).collect();
            let (lo, hi) = ([-3.0, -2.0], [4.0, 5.0]);
            let oracle = brute_force_2d(c, &rows, lo, hi);
            match solve_lp(&c, &rows, &lo, &hi) {
                LpOutcome::Optimal { objective, .. } => {
                    let o = oracle.expect("oracle found no feasible vertex");
                    proptest::prop_assert!((objective - o).abs() < 1e-7, "{objective} vs {o}");
                }
                LpOutcome::Infeasible => proptest::prop_assert!(oracle.is_none()),
                other => proptest::prop_assert!(false, "{other:?}"),
            }
        }
    }
}
