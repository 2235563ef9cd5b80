//! Choice of the neighbour count by validation error.

use rayon::prelude::*;

use crate::baselines::knn::NeighborIndex;
use crate::baselines::local_logit;
use crate::data::ReferenceTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborFamily {
    Knn,
    LocalLogit,
}

impl NeighborFamily {
    pub fn name(self) -> &'static str {
        match self {
            NeighborFamily::Knn => "knn",
            NeighborFamily::LocalLogit => "local_logit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    pub family: NeighborFamily,
    pub grid: Vec<usize>,
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub selected_k: usize,
}

impl CalibrationCurve {
    pub fn raw_error(&self, k: usize) -> Option<f64> {
        self.grid.iter().position(|&g| g == k).map(|i| self.raw[i])
    }

    pub fn selected_error(&self) -> f64 {
        self.raw_error(self.selected_k).expect("selected k is on the grid")
    }
}

/// Width of the sliding window used by [`smooth`].
pub const SMOOTHING_WINDOW: usize = 5;

/// Local quadratic smoother over a sliding window of grid positions.
pub fn smooth(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let w = SMOOTHING_WINDOW.min(n);
    (0..n)
        .map(|i| {
            if w < 3 {
                return values[i];
            }
            let start = i.saturating_sub(w / 2).min(n - w);
            let xs: Vec<f64> = (start..start + w).map(|j| j as f64 - i as f64).collect();
            let ys = &values[start..start + w];
            quadratic_at_zero(&xs, ys)
        })
        .collect()
}

/// Least-squares quadratic through `(xs, ys)` evaluated at 0.
fn quadratic_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let z = nalgebra::Vector3::new(1.0, x, x * x);
        a += z * z.transpose();
        b += z * y;
    }
    a.lu().solve(&b).map_or(f64::NAN, |c| c[0])
}

/// Validation error of each `k` in `grid`, smoothed; the selected `k`
/// minimizes the smoothed curve (ties to the smaller `k`).
pub fn calibrate_k(
    family: NeighborFamily,
    train: &ReferenceTable,
    valid: &ReferenceTable,
    grid: &[usize],
) -> Result<CalibrationCurve> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let raw = neighbor_errors(family, train, valid, &grid)?;
    let smoothed = smooth(&raw);
    let mut best = 0;
    for (i, &s) in smoothed.iter().enumerate() {
        if s < smoothed[best] {
            best = i;
        }
    }
    Ok(CalibrationCurve {
        family,
        selected_k: grid[best],
        grid,
        raw,
        smoothed,
    })
}

/// Misclassification rate on `eval` for each `k` of `grid`, in grid order;
/// neighbour lists are computed once at the largest `k` and truncated.
pub fn neighbor_errors(
    family: NeighborFamily,
    train: &ReferenceTable,
    eval: &ReferenceTable,
    grid: &[usize],
) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::arg("empty k grid"));
    }
    if eval.is_empty() {
        return Err(Error::arg("empty evaluation table"));
    }
    let kmax = *grid.iter().max().expect("non-empty");
    let kmin = *grid.iter().min().expect("non-empty");
    let floor = if family == NeighborFamily::LocalLogit { 2 } else { 1 };
    if kmin < floor || kmax > train.len() {
        return Err(Error::arg(format!("k grid must lie in {floor}..={}", train.len())));
    }
    let index = NeighborIndex::new(train)?;
    let wrong: Vec<Vec<bool>> = eval
        .records()
        .par_iter()
        .map(|r| -> Result<Vec<bool>> {
            let nn = index.nearest(&r.summaries, kmax)?;
            let q = index.normalize(&r.summaries);
            Ok(grid
                .iter()
                .map(|&k| {
                    let m = match family {
                        NeighborFamily::Knn => index.majority(&nn, k),
                        NeighborFamily::LocalLogit => local_logit::decide(&index, &q, &nn[..k]),
                    };
                    m != r.model
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let n = eval.len() as f64;
    Ok((0..grid.len())
        .map(|g| wrong.iter().filter(|w| w[g]).count() as f64 / n)
        .collect())
}
