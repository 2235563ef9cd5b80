//! Local multinomial logit: an Epanechnikov-weighted logit fitted on the k
//! nearest neighbours of each query, evaluated at the query.

use crate::baselines::knn::NeighborIndex;
use crate::baselines::logit::{fit_weighted, LogitOptions};
use crate::classifier::ModelClassifier;
use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};

/// Slope penalty of the local fits, in bandwidth-scaled coordinates.
pub const LOCAL_RIDGE: f64 = 1e-3;
const LOCAL_MAX_ITER: usize = 50;

#[derive(Debug, Clone)]
pub struct LocalLogitClassifier {
    pub k: usize,
    index: NeighborIndex,
}

pub fn local_logit_fit(table: &ReferenceTable, k: usize) -> Result<LocalLogitClassifier> {
    if k < table.n_models().max(2) || k > table.len() {
        return Err(Error::arg(format!(
            "local logit k = {k} outside {}..={}",
            table.n_models().max(2),
            table.len()
        )));
    }
    Ok(LocalLogitClassifier {
        k,
        index: NeighborIndex::new(table)?,
    })
}

pub fn local_logit_classify(c: &LocalLogitClassifier, summaries: &[f64]) -> Result<ModelIndex> {
    let nn = c.index.nearest(summaries, c.k)?;
    let q = c.index.normalize(summaries);
    Ok(decide(&c.index, &q, &nn))
}

impl LocalLogitClassifier {
    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }
}

impl ModelClassifier for LocalLogitClassifier {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        local_logit_classify(self, summaries)
    }
}

/// Epanechnikov weights with bandwidth equal to the last distance.
pub fn epanechnikov_weights(neighbors: &[(usize, f64)]) -> Vec<f64> {
    let h = neighbors.last().map_or(0.0, |n| n.1);
    neighbors
        .iter()
        .map(|&(_, d)| if h > 0.0 { (1.0 - (d / h).powi(2)).max(0.0) } else { 1.0 })
        .collect()
}

/// Decision from a sorted neighbour list; `q` is the normalized query.
pub(crate) fn decide(index: &NeighborIndex, q: &[f64], neighbors: &[(usize, f64)]) -> ModelIndex {
    let labels = index.labels();
    let first = labels[neighbors[0].0];
    if neighbors.iter().all(|&(i, _)| labels[i] == first) {
        return first;
    }
    let w = epanechnikov_weights(neighbors);
    let mut local: Vec<ModelIndex> = neighbors
        .iter()
        .zip(&w)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(i, _), _)| labels[i])
        .collect();
    local.sort_unstable();
    local.dedup();
    if local.len() == 1 {
        return local[0];
    }
    let majority = || weighted_majority(index, neighbors, &w);
    let h = neighbors.last().expect("non-empty").1;
    if h <= 0.0 {
        return majority();
    }
    let d = q.len();
    let mut x = Vec::with_capacity(neighbors.len() * d);
    let mut y = Vec::with_capacity(neighbors.len());
    for &(i, _) in neighbors {
        x.extend(index.point(i).iter().zip(q).map(|(p, c)| (p - c) / h));
        y.push(local.binary_search(&labels[i]).unwrap_or(0));
    }
    let opts = LogitOptions {
        ridge: LOCAL_RIDGE,
        max_iter: LOCAL_MAX_ITER,
        tolerance: 1e-8,
    };
    match fit_weighted(&x, d, &y, &w, local.len(), &opts) {
        Ok(fit) => {
            // at the query every centred feature is zero
            let mut best = 0;
            let mut best_eta = 0.0;
            for c in 1..local.len() {
                let eta = fit.coefficients[(c - 1, 0)];
                if eta > best_eta {
                    best = c;
                    best_eta = eta;
                }
            }
            local[best]
        }
        Err(_) => majority(),
    }
}

fn weighted_majority(index: &NeighborIndex, neighbors: &[(usize, f64)], w: &[f64]) -> ModelIndex {
    let mut tally = vec![0.0; index.n_models()];
    for (&(i, _), wi) in neighbors.iter().zip(w) {
        tally[index.labels()[i] - 1] += wi;
    }
    if tally.iter().all(|&t| t == 0.0) {
        return index.majority(neighbors, neighbors.len());
    }
    crate::classifier::argmax(&tally) + 1
}
