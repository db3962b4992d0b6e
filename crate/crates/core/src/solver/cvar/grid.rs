use serde::{Deserialize, Serialize};

use crate::solver::SolveError;

/// Budget grid: 0, then log-spaced points from `y_min` up to exactly 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YGrid {
    points: Vec<f64>,
}

pub fn build_ygrid(n_points: usize, y_min: f64) -> Result<YGrid, SolveError> {
    if n_points < 3 {
        return Err(SolveError::BadGrid(format!(
            "need at least 3 points, got {n_points}"
        )));
    }
    if !(y_min > 0.0 && y_min < 1.0) {
        return Err(SolveError::BadGrid(format!("y_min {y_min} outside (0, 1)")));
    }
    let m = n_points - 1; // positive points
    let log_min = y_min.ln();
    let mut points = Vec::with_capacity(n_points);
    points.push(0.0);
    for i in 0..m {
        let frac = i as f64 / (m - 1) as f64;
        points.push((log_min * (1.0 - frac)).exp());
    }
    points[1] = y_min;
    points[m] = 1.0;
    YGrid::from_points(points)
}

impl YGrid {
    /// Any strictly ascending sequence from 0 to 1.
    pub fn from_points(points: Vec<f64>) -> Result<Self, SolveError> {
        if points.len() < 3 || points[0] != 0.0 || *points.last().unwrap() != 1.0 {
            return Err(SolveError::BadGrid(
                "grid must run from 0 to 1 with >= 3 points".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SolveError::BadGrid(
                "grid must be strictly ascending".into(),
            ));
        }
        Ok(YGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the knot equal to `y`, if any.
    pub fn knot(&self, y: f64) -> Option<usize> {
        self.points.binary_search_by(|p| p.total_cmp(&y)).ok()
    }

    /// Segment `k` with `points[k] <= y <= points[k + 1]`, for y in (0, 1].
    pub fn segment(&self, y: f64) -> usize {
        let k = self.points.partition_point(|&p| p <= y);
        k.saturating_sub(1).min(self.points.len() - 2)
    }
}
