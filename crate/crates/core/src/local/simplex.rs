//! Phase-one revised simplex for feasibility of A·λ = b, λ ≥ 0, where the
//! columns of A are 0/1 vectors produced on demand by a pricing oracle.

/// Supplies the columns of A. Column indices are ordered for Bland's rule.
pub(crate) trait ColumnOracle {
    /// Row indices holding a 1 in column `v`.
    fn column(&self, v: usize) -> Vec<usize>;
    /// Column maximizing duals·A_v, with that value; ties go to the smallest index.
    fn best_column(&self, duals: &[f64]) -> (usize, f64);
    /// Smallest-index column with duals·A_v > tol.
    fn first_column_above(&self, duals: &[f64], tol: f64) -> Option<usize>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Status {
    Optimal,
    IterationLimit,
    Unbounded,
}

pub(crate) struct Solution {
    pub status: Status,
    /// Phase-one objective: total weight left on the artificial variables.
    pub objective: f64,
    /// (column, value) for structural basic variables with positive value.
    pub primal: Vec<(usize, f64)>,
    /// Final simplex multipliers; at optimality duals·A_v ≤ tol for every column.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

const PRICING_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-13;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;
const REFACTOR_EVERY: usize = 100;

#[derive(Clone, Copy, PartialEq)]
enum Var {
    Structural(usize),
    Artificial(usize),
}

struct Tableau<'a, O: ColumnOracle> {
    oracle: &'a O,
    b: &'a [f64],
    m: usize,
    basis: Vec<Var>,
    /// Row-major m×m inverse of the basis matrix.
    binv: Vec<f64>,
    xb: Vec<f64>,
}

impl<'a, O: ColumnOracle> Tableau<'a, O> {
    fn new(oracle: &'a O, b: &'a [f64]) -> Self {
        let m = b.len();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            oracle,
            b,
            m,
            basis: (0..m).map(Var::Artificial).collect(),
            binv,
            xb: b.to_vec(),
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, var) in self.basis.iter().enumerate() {
            if let Var::Artificial(_) = var {
                for (p, &v) in pi.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                    *p += v;
                }
            }
        }
        pi
    }

    fn entering_column(&self, rows: &[usize]) -> Vec<f64> {
        let m = self.m;
        let mut col = vec![0.0; m];
        for (i, slot) in col.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            *slot = rows.iter().map(|&r| row[r]).sum();
        }
        col
    }

    fn pivot(&mut self, r: usize, col: &[f64], var: Var) {
        let m = self.m;
        let theta = self.xb[r] / col[r];
        for (i, x) in self.xb.iter_mut().enumerate() {
            if i != r {
                *x -= theta * col[i];
                if *x < 0.0 && *x > -1e-13 {
                    *x = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m]
            .iter()
            .map(|v| v / col[r])
            .collect();
        for (i, &factor) in col.iter().enumerate() {
            if i == r || factor == 0.0 {
                continue;
            }
            for (dst, &src) in self.binv[i * m..(i + 1) * m].iter_mut().zip(&pivot_row) {
                *dst -= factor * src;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&pivot_row);
        self.basis[r] = var;
    }

    /// Rebuilds B⁻¹ and x_B from the basis columns by Gauss–Jordan elimination.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0f64; m * m];
        for (j, var) in self.basis.iter().enumerate() {
            match *var {
                Var::Structural(v) => {
                    for r in self.oracle.column(v) {
                        a[r * m + j] = 1.0;
                    }
                }
                Var::Artificial(i) => a[i * m + j] = 1.0,
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))
                .unwrap();
            if a[p * m + c].abs() < 1e-12 {
                return false;
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                let f = a[i * m + c];
                if i == c || f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[i * m + k] -= f * a[c * m + k];
                    inv[i * m + k] -= f * inv[c * m + k];
                }
            }
        }
        for i in 0..m {
            let row = &inv[i * m..(i + 1) * m];
            let x: f64 = row.iter().zip(self.b).map(|(p, q)| p * q).sum();
            self.xb[i] = if x < 0.0 && x > -1e-12 { 0.0 } else { x };
        }
        self.binv = inv;
        true
    }

    fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(v, _)| matches!(v, Var::Artificial(_)))
            .map(|(_, x)| x)
            .sum()
    }
}

fn var_key(v: Var) -> (u8, usize) {
    // artificials leave first; otherwise the smaller index
    match v {
        Var::Artificial(i) => (0, i),
        Var::Structural(i) => (1, i),
    }
}

/// Minimizes the artificial total starting from the all-artificial basis.
/// Dantzig pricing is used until a run of degenerate pivots, then Bland's
/// rule takes over until the next strictly improving step.
pub(crate) fn phase_one<O: ColumnOracle>(oracle: &O, b: &[f64], max_iterations: usize) -> Solution {
    let mut t = Tableau::new(oracle, b);
    let mut degenerate_run = 0;
    let mut iterations = 0;
    let status = loop {
        let duals = t.duals();
        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
        let entering = if bland {
            oracle.first_column_above(&duals, PRICING_TOL)
        } else {
            let (v, value) = oracle.best_column(&duals);
            (value > PRICING_TOL).then_some(v)
        };
        let Some(v) = entering else {
            break Status::Optimal;
        };
        if iterations >= max_iterations {
            break Status::IterationLimit;
        }
        let col = t.entering_column(&oracle.column(v));
        let mut leave: Option<(usize, f64)> = None;
        for (i, &a) in col.iter().enumerate() {
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = t.xb[i] / a;
            leave = match leave {
                None => Some((i, ratio)),
                Some((j, best)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                    if (!tie && ratio < best) || (tie && var_key(t.basis[i]) < var_key(t.basis[j]))
                    {
                        Some((i, ratio))
                    } else {
                        Some((j, best))
                    }
                }
            };
        }
        let Some((r, theta)) = leave else {
            break Status::Unbounded;
        };
        if theta <= DEGENERATE_STEP {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        t.pivot(r, &col, Var::Structural(v));
        iterations += 1;
        if iterations % REFACTOR_EVERY == 0 && !t.refactor() {
            break Status::IterationLimit;
        }
    };
    let duals = t.duals();
    let primal = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter_map(|(v, &x)| match v {
            Var::Structural(j) if x > 0.0 => Some((*j, x)),
            _ => None,
        })
        .collect();
    Solution {
        status,
        objective: t.objective(),
        primal,
        duals,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Columns are all 0/1 vectors over three rows with exactly one 1 in rows
    /// {0,1} and one in row 2; a tiny polytope for exercising the solver.
    struct Tiny;

    impl ColumnOracle for Tiny {
        fn column(&self, v: usize) -> Vec<usize> {
            vec![v, 2]
        }

        fn best_column(&self, duals: &[f64]) -> (usize, f64) {
            (0..2)
                .map(|v| (v, duals[v] + duals[2]))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        }

        fn first_column_above(&self, duals: &[f64], tol: f64) -> Option<usize> {
            (0..2).find(|&v| duals[v] + duals[2] > tol)
        }
    }

    #[test]
    fn feasible_point_is_recovered() {
        let s = phase_one(&Tiny, &[0.25, 0.75, 1.0], 100);
        assert_eq!(s.status, Status::Optimal);
        assert!(s.objective.abs() < 1e-12);
        let mut w = [0.0; 2];
        for (v, x) in s.primal {
            w[v] = x;
        }
        assert!((w[0] - 0.25).abs() < 1e-12 && (w[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn infeasible_point_yields_separating_duals() {
        // rows 0 and 1 must sum to row 2, which they do not
        let b = [0.5, 0.5, 0.5];
        let s = phase_one(&Tiny, &b, 100);
        assert_eq!(s.status, Status::Optimal);
        assert!(s.objective > 0.1);
        let value: f64 = s.duals.iter().zip(&b).map(|(p, q)| p * q).sum();
        assert!((value - s.objective).abs() < 1e-12);
        for v in 0..2 {
            assert!(s.duals[v] + s.duals[2] <= 1e-11);
        }
    }
}
