//! Dense two-phase simplex with Bland's rule. Small and slow; used to
//! cross-check the greedy inner solver.

use thiserror::Error;

const TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("iteration limit")]
    IterationLimit,
}

/// maximize c·x  s.t.  A_ub x ≤ b_ub,  A_eq x = b_eq,  x ≥ 0.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

struct Tableau {
    width: usize,
    rows: Vec<Vec<f64>>, // last column is rhs
    basis: Vec<usize>,
    obj: Vec<f64>, // reduced costs; last entry is -z
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let p = self.rows[r][col];
        for j in 0..w {
            self.rows[r][j] /= p;
        }
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                for j in 0..w {
                    row[j] -= f * pr[j];
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * pr[j];
            }
        }
        self.basis[r] = col;
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        let mut obj = vec![0.0; w];
        obj[..cost.len()].copy_from_slice(cost);
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * row[j];
                }
            }
        }
        self.obj = obj;
    }

    /// Runs simplex iterations over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<(), LpError> {
        let w = self.width;
        for _ in 0..50_000 {
            let Some(col) = (0..allowed).find(|&j| self.obj[j] > TOL) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col] > TOL {
                    let ratio = row[w - 1] / row[col];
                    match best {
                        Some((bi, br))
                            if ratio > br + TOL
                                || (ratio > br - TOL && self.basis[i] > self.basis[bi]) => {}
                        _ => best = Some((i, ratio)),
                    }
                }
            }
            let (r, _) = best.ok_or(LpError::Unbounded)?;
            self.pivot(r, col);
        }
        Err(LpError::IterationLimit)
    }
}

/// Returns an optimal `x` and the objective value.
pub fn maximize(lp: &LinearProgram) -> Result<(Vec<f64>, f64), LpError> {
    let n = lp.c.len();
    let m1 = lp.a_ub.len();
    let m2 = lp.a_eq.len();
    let width = n + m1 + m2 + 1;
    let mut rows = Vec::with_capacity(m1 + m2);
    let mut basis = Vec::with_capacity(m1 + m2);
    for (i, (a, &b)) in lp.a_ub.iter().zip(&lp.b_ub).enumerate() {
        assert!(b >= 0.0, "b_ub must be nonnegative");
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(a);
        row[n + i] = 1.0;
        row[width - 1] = b;
        rows.push(row);
        basis.push(n + i);
    }
    for (i, (a, &b)) in lp.a_eq.iter().zip(&lp.b_eq).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for (j, v) in a.iter().enumerate() {
            row[j] = sign * v;
        }
        row[n + m1 + i] = 1.0;
        row[width - 1] = sign * b;
        rows.push(row);
        basis.push(n + m1 + i);
    }
    let mut t = Tableau {
        width,
        rows,
        basis,
        obj: Vec::new(),
    };

    // phase 1: maximize -(sum of artificials)
    let mut phase1 = vec![0.0; n + m1 + m2];
    for c in phase1.iter_mut().skip(n + m1) {
        *c = -1.0;
    }
    t.set_objective(&phase1);
    t.optimize(n + m1 + m2)?;
    let infeas: f64 = t
        .basis
        .iter()
        .zip(&t.rows)
        .filter(|(&b, _)| b >= n + m1)
        .map(|(_, r)| r[width - 1])
        .sum();
    if infeas > 1e-9 {
        return Err(LpError::Infeasible);
    }
    // drive zero-level artificials out of the basis
    for r in 0..t.rows.len() {
        if t.basis[r] >= n + m1 {
            if let Some(col) = (0..n + m1).find(|&j| t.rows[r][j].abs() > TOL) {
                t.pivot(r, col);
            }
        }
    }

    let mut phase2 = vec![0.0; n + m1 + m2];
    phase2[..n].copy_from_slice(&lp.c);
    t.set_objective(&phase2);
    t.optimize(n + m1)?;

    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[r][width - 1];
        }
    }
    let z = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok((x, z))
}
