//! k-nearest-neighbour classification on MAD-normalized summaries.

use std::cmp::Ordering;

use log::warn;

use crate::classifier::{check_dim, ModelClassifier};
use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};

/// Median absolute deviation of each column; `None` for zero-MAD columns.
pub fn mad_scales(table: &ReferenceTable) -> Vec<Option<f64>> {
    (0..table.n_summaries())
        .map(|j| {
            let mut col: Vec<f64> = table.records().iter().map(|r| r.summaries[j]).collect();
            let med = median(&mut col);
            let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
            let mad = median(&mut dev);
            (mad > 0.0 && mad.is_finite()).then_some(mad)
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Normalized training view shared by the neighbour-based classifiers.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    /// kept feature, divisor
    scales: Vec<(usize, f64)>,
    n_summaries: usize,
    points: Vec<f64>,
    labels: Vec<ModelIndex>,
    n_models: usize,
}

impl NeighborIndex {
    pub fn new(table: &ReferenceTable) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::arg("neighbour search over an empty table"));
        }
        let names = table.summary_names();
        let mut scales = Vec::new();
        for (j, s) in mad_scales(table).into_iter().enumerate() {
            match s {
                Some(s) => scales.push((j, s)),
                None => warn!("summary {} has zero MAD and is left out of distances", names[j]),
            }
        }
        let dim = scales.len();
        let mut points = Vec::with_capacity(table.len() * dim);
        for r in table.records() {
            points.extend(scales.iter().map(|&(j, s)| r.summaries[j] / s));
        }
        Ok(NeighborIndex {
            scales,
            n_summaries: table.n_summaries(),
            points,
            labels: table.models(),
            n_models: table.n_models(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn labels(&self) -> &[ModelIndex] {
        &self.labels
    }

    /// Indices of features that enter the distance.
    pub fn kept_features(&self) -> Vec<usize> {
        self.scales.iter().map(|&(j, _)| j).collect()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        self.scales.iter().map(|&(j, s)| x[j] / s).collect()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.scales.len();
        &self.points[i * d..(i + 1) * d]
    }

    /// The `k` nearest rows as `(row, distance)`, nearest first; equal
    /// distances keep training order.
    pub fn nearest(&self, x: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        check_dim(self.n_summaries, x)?;
        if k == 0 || k > self.len() {
            return Err(Error::arg(format!("k = {k} outside 1..={}", self.len())));
        }
        let q = self.normalize(x);
        let d = q.len();
        let mut dist: Vec<(f64, usize)> = if d == 0 {
            (0..self.len()).map(|i| (0.0, i)).collect()
        } else {
            self.points
                .chunks_exact(d)
                .enumerate()
                .map(|(i, p)| {
                    let s: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                    (s, i)
                })
                .collect()
        };
        let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_unstable_by(cmp);
        Ok(dist.into_iter().map(|(s, i)| (i, s.sqrt())).collect())
    }

    /// Majority label among the first `k` of a sorted neighbour list; ties
    /// go to the lowest model index.
    pub fn majority(&self, neighbors: &[(usize, f64)], k: usize) -> ModelIndex {
        let mut counts = vec![0usize; self.n_models];
        for &(i, _) in &neighbors[..k] {
            counts[self.labels[i] - 1] += 1;
        }
        let mut best = 0;
        for (m, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = m;
            }
        }
        best + 1
    }
}

#[derive(Debug, Clone)]
pub struct KnnClassifier {
    pub k: usize,
    index: NeighborIndex,
}

pub fn knn_fit(table: &ReferenceTable, k: usize) -> Result<KnnClassifier> {
    if k == 0 || k > table.len() {
        return Err(Error::arg(format!("k = {k} outside 1..={}", table.len())));
    }
    Ok(KnnClassifier {
        k,
        index: NeighborIndex::new(table)?,
    })
}

pub fn knn_classify(c: &KnnClassifier, summaries: &[f64]) -> Result<ModelIndex> {
    let nn = c.index.nearest(summaries, c.k)?;
    Ok(c.index.majority(&nn, c.k))
}

impl KnnClassifier {
    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    pub fn with_k(&self, k: usize) -> Result<KnnClassifier> {
        if k == 0 || k > self.index.len() {
            return Err(Error::arg(format!("k = {k} outside 1..={}", self.index.len())));
        }
        Ok(KnnClassifier {
            k,
            index: self.index.clone(),
        })
    }
}

impl ModelClassifier for KnnClassifier {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        knn_classify(self, summaries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SimulationRecord;

    fn table(rows: &[(Vec<f64>, usize)]) -> ReferenceTable {
        let d = rows[0].0.len();
        ReferenceTable::new(
            vec![],
            (0..d).map(|j| format!("s{j}")).collect(),
            2,
            rows.iter()
                .map(|(x, m)| SimulationRecord::new(*m, vec![], x.clone()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn one_neighbour_recovers_training_label() {
        let t = table(&[
            (vec![0.0, 1.0], 1),
            (vec![1.0, 3.0], 2),
            (vec![2.0, 0.0], 1),
            (vec![3.0, 2.0], 2),
        ]);
        let c = knn_fit(&t, 1).unwrap();
        for r in t.records() {
            assert_eq!(knn_classify(&c, &r.summaries).unwrap(), r.model);
        }
        assert!(knn_fit(&t, 5).is_err());
        assert!(knn_fit(&t, 0).is_err());
    }

    #[test]
    fn k_equal_n_votes_the_prior_majority() {
        let t = table(&[
            (vec![0.0], 2),
            (vec![1.0], 2),
            (vec![2.0], 1),
            (vec![3.0], 2),
            (vec![4.0], 1),
        ]);
        let c = knn_fit(&t, 5).unwrap();
        for q in [-10.0, 0.5, 2.2, 40.0] {
            assert_eq!(knn_classify(&c, &[q]).unwrap(), 2);
        }
        // 2-2 tie goes to model 1
        let c = knn_fit(&t.subset(&[0, 1, 2, 4]).unwrap(), 4).unwrap();
        assert_eq!(knn_classify(&c, &[0.0]).unwrap(), 1);
    }

    #[test]
    fn zero_mad_columns_are_dropped() {
        let t = table(&[
            (vec![0.0, 5.0], 1),
            (vec![1.0, 5.0], 2),
            (vec![2.0, 5.0], 1),
        ]);
        let c = knn_fit(&t, 1).unwrap();
        assert_eq!(c.index().kept_features(), vec![0]);
        assert_eq!(knn_classify(&c, &[1.1, -100.0]).unwrap(), 2);
    }

    #[test]
    fn equal_distances_keep_training_order() {
        let t = table(&[(vec![-1.0], 2), (vec![1.0], 1), (vec![3.0], 1)]);
        let c = knn_fit(&t, 1).unwrap();
        assert_eq!(knn_classify(&c, &[0.0]).unwrap(), 2);
    }
}
