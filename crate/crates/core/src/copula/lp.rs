//! Dense two-phase primal simplex for small equality-form programs.

const PIVOT_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;

/// `minimize c·x` subject to `A x = b`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    cost_rhs: f64,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for k in 0..self.rows.len() {
            if k == r {
                continue;
            }
            let f = self.rows[k][e];
            if f != 0.0 {
                for (v, pv) in self.rows[k].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rows[k][e] = 0.0;
                self.rhs[k] -= f * pivot_rhs;
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[e] = 0.0;
            self.cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = e;
    }

    /// Reduced costs for `costs` given the current basis.
    fn price(&mut self, costs: &[f64]) {
        self.cost = costs.to_vec();
        self.cost_rhs = 0.0;
        for r in 0..self.rows.len() {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for (v, t) in self.cost.iter_mut().zip(&self.rows[r]) {
                    *v -= cb * t;
                }
                self.cost_rhs -= cb * self.rhs[r];
            }
        }
    }

    /// Bland's rule iterations over columns `0..allowed`; false if unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            let Some(e) = (0..allowed).find(|&j| self.cost[j] < -PIVOT_EPS) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let t = self.rows[r][e];
                if t > PIVOT_EPS {
                    let ratio = self.rhs[r] / t;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_EPS
                                || ((ratio - lratio).abs() <= PIVOT_EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, e),
                None => return false,
            }
        }
    }
}

pub(crate) fn solve(lp: &StandardLp) -> LpOutcome {
    let m = lp.b.len();
    let n = lp.c.len();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (k, (row, &b)) in lp.a.iter().zip(&lp.b).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut full: Vec<f64> = row.iter().map(|v| sign * v).collect();
        full.extend((0..m).map(|j| if j == k { 1.0 } else { 0.0 }));
        rows.push(full);
        rhs.push(sign * b);
    }
    let mut tab = Tableau { rows, rhs, basis: (n..n + m).collect(), cost: vec![], cost_rhs: 0.0 };

    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    tab.price(&phase1);
    tab.optimize(n + m);
    if -tab.cost_rhs > FEAS_EPS * (1.0 + lp.b.iter().map(|v| v.abs()).sum::<f64>()) {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis; rows where that is impossible are redundant
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_EPS) {
                Some(e) => tab.pivot(r, e),
                None => {
                    tab.rows.remove(r);
                    tab.rhs.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut phase2 = lp.c.clone();
    phase2.extend(std::iter::repeat(0.0).take(m));
    tab.price(&phase2);
    if !tab.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (r, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.rhs[r].max(0.0);
        }
    }
    let value = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal { x, value }
}

/// Maximizes `c·x` over `{A x = b, x ≥ 0}`, then among (near-)optimal points
/// picks the lexicographically smallest `x` by minimizing each coordinate in
/// turn with earlier coordinates held at their minima.
pub(crate) fn maximize_lexicographic(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    let n = c.len();
    let base = StandardLp { a: a.to_vec(), b: b.to_vec(), c: c.iter().map(|v| -v).collect() };
    let opt = match solve(&base) {
        LpOutcome::Optimal { value, .. } => -value,
        other => return other,
    };
    let slack_tol = |v: f64| 1e-12 * (1.0 + v.abs());
    let mut fixed: Vec<f64> = Vec::with_capacity(n);
    let mut last = None;
    for j in 0..n {
        // variables: x (n), objective slack, then one slack per fixed coordinate
        let extra = 1 + fixed.len();
        let width = n + extra;
        let mut rows: Vec<Vec<f64>> = a
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.resize(width, 0.0);
                r
            })
            .collect();
        let mut rhs = b.to_vec();
        let mut obj_row = c.to_vec();
        obj_row.resize(width, 0.0);
        obj_row[n] = -1.0;
        rows.push(obj_row);
        rhs.push(opt - slack_tol(opt));
        for (k, &v) in fixed.iter().enumerate() {
            let mut row = vec![0.0; width];
            row[k] = 1.0;
            row[n + 1 + k] = 1.0;
            rows.push(row);
            rhs.push(v + slack_tol(v));
        }
        let mut cost = vec![0.0; width];
        cost[j] = 1.0;
        match solve(&StandardLp { a: rows, b: rhs, c: cost }) {
            LpOutcome::Optimal { x, .. } => {
                fixed.push(x[j]);
                last = Some(x[..n].to_vec());
            }
            // the previous point stays feasible, so this only happens on
            // numerical trouble; keep what we have
            _ => break,
        }
    }
    match last {
        Some(x) => {
            let value = c.iter().zip(&x).map(|(c, x)| c * x).sum();
            LpOutcome::Optimal { x, value }
        }
        None => match solve(&base) {
            LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
            other => other,
        },
    }
}
