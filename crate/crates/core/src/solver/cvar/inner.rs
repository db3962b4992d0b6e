//! The adversary's budget allocation at one (state, action).
//!
//! With `I_s(t)` the linear interpolation of `t·V(s, t)` on the grid, the
//! adversary maximises `Σ p_i I_i(t_i)` over `t ∈ [0, 1]^m` with
//! `Σ p_i t_i = y`. Each successor contributes one variable per grid segment
//! (capacity `p_i Δy_k`, unit value = the segment slope), so the problem is a
//! fractional knapsack: fill segments by descending slope.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::grid::YGrid;
use super::lp::{maximize, LinearProgram};
use crate::mdp::Successor;

/// Algorithm for the inner maximisation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerMethod {
    /// Slope-ordered merge of successor segments.
    #[default]
    Greedy,
    /// Dense simplex over segment variables.
    Simplex,
}

/// Segment slopes of `t·V(t)` for one state's row of grid values.
pub(crate) fn row_slopes(points: &[f64], row: &[f64], out: &mut [f64]) {
    for k in 0..points.len() - 1 {
        let lo = points[k] * row[k];
        let hi = points[k + 1] * row[k + 1];
        out[k] = (hi - lo) / (points[k + 1] - points[k]);
    }
}

#[derive(PartialEq)]
struct Head {
    slope: f64,
    succ: usize,
}

impl Eq for Head {}

impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        self.slope
            .total_cmp(&other.slope)
            .then_with(|| other.succ.cmp(&self.succ))
    }
}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Walks successor segments in descending slope order, keeping each
/// successor's own segments in grid order. `visit(succ, k, slope, mass)`
/// returns false to stop early.
fn merge<S, V>(points: &[f64], succs: &[Successor], slope: S, mut visit: V)
where
    S: Fn(usize, usize) -> f64,
    V: FnMut(usize, usize, f64, f64) -> bool,
{
    let segs = points.len() - 1;
    let mut next = vec![0usize; succs.len()];
    let mut heap = BinaryHeap::with_capacity(succs.len());
    for i in 0..succs.len() {
        heap.push(Head {
            slope: slope(i, 0),
            succ: i,
        });
    }
    while let Some(Head { slope: sl, succ }) = heap.pop() {
        let k = next[succ];
        let mass = succs[succ].prob * (points[k + 1] - points[k]);
        if !visit(succ, k, sl, mass) {
            return;
        }
        next[succ] = k + 1;
        if k + 1 < segs {
            heap.push(Head {
                slope: slope(succ, k + 1),
                succ,
            });
        }
    }
}

/// `R(y) = max Σ p_i I_i(t_i)` for every `y` in ascending `ys`.
pub(crate) fn greedy_batch<S>(
    points: &[f64],
    succs: &[Successor],
    slope: S,
    ys: &[f64],
    out: &mut [f64],
) where
    S: Fn(usize, usize) -> f64,
{
    let mut j = 0;
    let mut cum_mass = 0.0;
    let mut cum_r = 0.0;
    merge(points, succs, slope, |_, _, sl, mass| {
        while j < ys.len() && ys[j] <= cum_mass + mass {
            out[j] = cum_r + sl * (ys[j] - cum_mass).max(0.0);
            j += 1;
        }
        cum_mass += mass;
        cum_r += sl * mass;
        j < ys.len()
    });
    // rounding can leave y = 1 a hair above the total mass
    for o in &mut out[j..] {
        *o = cum_r;
    }
}

/// `R(y)` and the maximising `t` for a single budget `y`.
pub(crate) fn greedy_single<S>(
    points: &[f64],
    succs: &[Successor],
    slope: S,
    y: f64,
) -> (f64, Vec<f64>)
where
    S: Fn(usize, usize) -> f64,
{
    let mut used = vec![0.0; succs.len()];
    let mut left = y;
    let mut r = 0.0;
    merge(points, succs, slope, |i, _, sl, mass| {
        let take = mass.min(left);
        used[i] += take;
        r += sl * take;
        left -= take;
        left > 0.0
    });
    let t = used
        .iter()
        .zip(succs)
        .map(|(u, x)| (u / x.prob).clamp(0.0, 1.0))
        .collect();
    (r, t)
}

/// Same problem solved as an explicit LP.
pub(crate) fn simplex_single<S>(
    points: &[f64],
    succs: &[Successor],
    slope: S,
    y: f64,
) -> (f64, Vec<f64>)
where
    S: Fn(usize, usize) -> f64,
{
    let segs = points.len() - 1;
    let nv = succs.len() * segs;
    let mut c = Vec::with_capacity(nv);
    let mut a_ub = Vec::with_capacity(nv);
    let mut b_ub = Vec::with_capacity(nv);
    for (i, x) in succs.iter().enumerate() {
        for k in 0..segs {
            c.push(slope(i, k));
            let mut row = vec![0.0; nv];
            row[i * segs + k] = 1.0;
            a_ub.push(row);
            b_ub.push(x.prob * (points[k + 1] - points[k]));
        }
    }
    let total: f64 = b_ub.iter().sum();
    let lp = LinearProgram {
        c,
        a_ub,
        b_ub,
        a_eq: vec![vec![1.0; nv]],
        b_eq: vec![y.min(total)],
    };
    let (x, r) = maximize(&lp).expect("budget lies within total segment capacity");
    let t = succs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let used: f64 = x[i * segs..(i + 1) * segs].iter().sum();
            (used / s.prob).clamp(0.0, 1.0)
        })
        .collect();
    (r, t)
}

pub(crate) fn solve_single<S>(
    method: InnerMethod,
    grid: &YGrid,
    succs: &[Successor],
    slope: S,
    y: f64,
) -> (f64, Vec<f64>)
where
    S: Fn(usize, usize) -> f64,
{
    match method {
        InnerMethod::Greedy => greedy_single(grid.points(), succs, slope, y),
        InnerMethod::Simplex => simplex_single(grid.points(), succs, slope, y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::StateId;
    use crate::solver::cvar::build_ygrid;
    use proptest::prelude::*;

    fn succ(ps: &[f64]) -> Vec<Successor> {
        ps.iter()
            .enumerate()
            .map(|(i, &p)| Successor {
                state: StateId(i),
                prob: p,
            })
            .collect()
    }

    fn interp(points: &[f64], row: &[f64], t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k = points
            .partition_point(|&p| p <= t)
            .saturating_sub(1)
            .min(points.len() - 2);
        let w = (t - points[k]) / (points[k + 1] - points[k]);
        points[k] * row[k] * (1.0 - w) + points[k + 1] * row[k + 1] * w
    }

    fn slopes_for(points: &[f64], rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                let mut s = vec![0.0; points.len() - 1];
                row_slopes(points, r, &mut s);
                s
            })
            .collect()
    }

    /// Concave `t·V(t)` rows: V(t) = CVaR_t of a random discrete cost.
    fn cvar_row(points: &[f64], costs: &[(f64, f64)]) -> Vec<f64> {
        let mut atoms = costs.to_vec();
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let worst = atoms[0].0;
        points
            .iter()
            .map(|&y| {
                if y == 0.0 {
                    return worst;
                }
                let mut left = y;
                let mut acc = 0.0;
                for &(c, p) in &atoms {
                    let take = p.min(left);
                    acc += c * take;
                    left -= take;
                }
                acc / y
            })
            .collect()
    }

    #[test]
    fn two_successor_split() {
        // values 0 and 1 with equal mass; at y = 0.5 all budget goes to the
        // costly successor: t = (0, 1), so xi = (0, 2) and value 1
        let g = build_ygrid(10, 0.01).unwrap();
        let pts = g.points();
        let rows = vec![vec![0.0; pts.len()], vec![1.0; pts.len()]];
        let sl = slopes_for(pts, &rows);
        let s = succ(&[0.5, 0.5]);
        let (r, t) = greedy_single(pts, &s, |i, k| sl[i][k], 0.5);
        assert!((r / 0.5 - 1.0).abs() < 1e-12);
        assert!(t[0].abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_budget_is_expectation() {
        let g = build_ygrid(12, 0.01).unwrap();
        let pts = g.points();
        let rows = vec![
            cvar_row(pts, &[(1.0, 0.5), (3.0, 0.5)]),
            cvar_row(pts, &[(10.0, 1.0)]),
        ];
        let sl = slopes_for(pts, &rows);
        let s = succ(&[0.3, 0.7]);
        let (r, t) = greedy_single(pts, &s, |i, k| sl[i][k], 1.0);
        assert!((r - (0.3 * 2.0 + 0.7 * 10.0)).abs() < 1e-9);
        assert!(t.iter().all(|&x| (x - 1.0).abs() < 1e-9));
    }

    #[test]
    fn brute_force_two_and_three_successors() {
        let g = build_ygrid(15, 0.01).unwrap();
        let pts = g.points();
        let rows = vec![
            cvar_row(pts, &[(0.0, 0.6), (5.0, 0.3), (20.0, 0.1)]),
            cvar_row(pts, &[(4.0, 0.5), (6.0, 0.5)]),
            cvar_row(pts, &[(1.0, 0.9), (30.0, 0.1)]),
        ];
        let sl = slopes_for(pts, &rows);
        let obj = |t: &[f64], p: &[f64]| -> f64 {
            t.iter()
                .zip(p)
                .enumerate()
                .map(|(i, (&t, &p))| p * interp(pts, &rows[i], t))
                .sum()
        };
        for &y in &[0.05, 0.2, 0.37, 0.8] {
            let p2 = [0.4, 0.6];
            let s2 = succ(&p2);
            let (r, _) = greedy_single(pts, &s2, |i, k| sl[i][k], y);
            let mut best = f64::NEG_INFINITY;
            let n = 200_000;
            for j in 0..=n {
                let t0 = j as f64 / n as f64;
                let t1 = (y - p2[0] * t0) / p2[1];
                if (0.0..=1.0).contains(&t1) {
                    best = best.max(obj(&[t0, t1], &p2));
                }
            }
            assert!((r - best).abs() < 1e-4, "y={y}: {r} vs {best}");

            let p3 = [0.2, 0.5, 0.3];
            let s3 = succ(&p3);
            let (r3, t3) = greedy_single(pts, &s3, |i, k| sl[i][k], y);
            assert!((obj(&t3, &p3) - r3).abs() < 1e-9);
            let mut best3 = f64::NEG_INFINITY;
            let n = 600;
            for a in 0..=n {
                for b in 0..=n {
                    let t0 = a as f64 / n as f64;
                    let t1 = b as f64 / n as f64;
                    let t2 = (y - p3[0] * t0 - p3[1] * t1) / p3[2];
                    if (0.0..=1.0).contains(&t2) {
                        best3 = best3.max(obj(&[t0, t1, t2], &p3));
                    }
                }
            }
            assert!(
                r3 >= best3 - 1e-9 && r3 - best3 < 0.05,
                "y={y}: {r3} vs {best3}"
            );
        }
    }

    #[test]
    fn batch_matches_single() {
        let g = build_ygrid(20, 0.001).unwrap();
        let pts = g.points();
        let rows = vec![
            cvar_row(pts, &[(0.0, 0.6), (5.0, 0.3), (20.0, 0.1)]),
            cvar_row(pts, &[(4.0, 0.5), (6.0, 0.5)]),
            cvar_row(pts, &[(7.0, 1.0)]),
        ];
        let sl = slopes_for(pts, &rows);
        let s = succ(&[0.25, 0.25, 0.5]);
        let ys = &pts[1..];
        let mut out = vec![0.0; ys.len()];
        greedy_batch(pts, &s, |i, k| sl[i][k], ys, &mut out);
        for (y, r) in ys.iter().zip(&out) {
            let (r1, _) = greedy_single(pts, &s, |i, k| sl[i][k], *y);
            assert!((r - r1).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn simplex_agrees_with_greedy(
            dists in prop::collection::vec(
                prop::collection::vec((0.0f64..50.0, 0.05f64..1.0), 1..4), 1..4),
            weights in prop::collection::vec(0.05f64..1.0, 3),
            y in 0.001f64..1.0,
        ) {
            let g = build_ygrid(8, 0.01).unwrap();
            let pts = g.points();
            let rows: Vec<Vec<f64>> = dists
                .iter()
                .map(|d| {
                    let tot: f64 = d.iter().map(|x| x.1).sum();
                    let norm: Vec<_> = d.iter().map(|&(c, p)| (c, p / tot)).collect();
                    cvar_row(pts, &norm)
                })
                .collect();
            let w = &weights[..rows.len()];
            let tot: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / tot).collect();
            let s = succ(&p);
            let sl = slopes_for(pts, &rows);
            let (rg, tg) = greedy_single(pts, &s, |i, k| sl[i][k], y);
            let (rs, _) = simplex_single(pts, &s, |i, k| sl[i][k], y);
            prop_assert!((rg - rs).abs() < 1e-9, "greedy {} simplex {}", rg, rs);
            let mass: f64 = tg.iter().zip(&p).map(|(t, p)| t * p).sum();
            prop_assert!((mass - y).abs() < 1e-9);
        }
    }
}
