//! Reference computations shared by the integration tests.
#![allow(dead_code)]

use abcrf::cart::{Leaf, NodeStats, TrainingSet};
use abcrf::forest::Forest;
use abcrf::ma_toy::MaParams;
use nalgebra::{DMatrix, DVector};

/// Gaussian log density with the full Toeplitz covariance, by dense Cholesky.
pub fn dense_log_likelihood(x: &[f64], p: &MaParams, sd: f64) -> f64 {
    let n = x.len();
    let (g0, g1, g2) = p.autocovariances(sd * sd);
    let cov = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => g0,
        1 => g1,
        2 => g2,
        _ => 0.0,
    });
    let l = cov.cholesky().expect("positive definite").l();
    let z = l.solve_lower_triangular(&DVector::from_column_slice(x)).unwrap();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + z.norm_squared())
}

/// N(v1)Q(v1) + N(v2)Q(v2) of the partition induced by `x_f < t`.
pub fn split_score(data: &TrainingSet, idx: &[u32], f: usize, t: f64) -> Option<f64> {
    let (l, r): (Vec<u32>, Vec<u32>) = idx.iter().partition(|&&i| data.value(i as usize, f) < t);
    if l.is_empty() || r.is_empty() {
        return None;
    }
    let part = |s: &[u32]| {
        let st = NodeStats::compute(data, s).unwrap();
        s.len() as f64 * st.impurity(data, s)
    };
    Some(part(&l) + part(&r))
}

/// Smallest split score over every feature of `feats` and every midpoint.
pub fn brute_force_split(data: &TrainingSet, idx: &[u32], feats: &[usize]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for &f in feats {
        let mut v: Vec<f64> = idx.iter().map(|&i| data.value(i as usize, f)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        for w in v.windows(2) {
            if let Some(s) = split_score(data, idx, f, 0.5 * (w[0] + w[1])) {
                best = Some(best.map_or(s, |b: f64| b.min(s)));
            }
        }
    }
    best
}

fn majority(counts: &[usize]) -> usize {
    (0..counts.len()).fold(0, |b, c| if counts[c] > counts[b] { c } else { b })
}

/// Checks votes, classifications and out-of-bag predictions of a
/// classification forest against tree-by-tree recomputation.
pub fn classification_composes(f: &Forest, data: &TrainingSet, probes: &[Vec<f64>], n_classes: usize) -> bool {
    for x in probes {
        let mut counts = vec![0usize; n_classes];
        for t in f.trees() {
            match t.predict(x).unwrap() {
                Leaf::Class(c) => counts[c] += 1,
                Leaf::Value(_) => return false,
            }
        }
        if f.vote(x).unwrap().counts != counts || f.classify(x).unwrap() != majority(&counts) {
            return false;
        }
    }
    let report = f.oob_report(data).unwrap();
    for row in 0..data.n_rows() {
        let x = data.row(row);
        let mut counts = vec![0usize; n_classes];
        for (b, t) in f.trees().iter().enumerate() {
            if !f.in_bag(b).contains(&(row as u32)) {
                if let Leaf::Class(c) = t.predict(&x).unwrap() {
                    counts[c] += 1;
                }
            }
        }
        let expected = (counts.iter().sum::<usize>() > 0).then(|| majority(&counts));
        if report.predictions[row] != expected {
            return false;
        }
    }
    true
}

/// Checks regression predictions, in-sample and out-of-bag, against the
/// mean of the per-tree predictions.
pub fn regression_composes(f: &Forest, data: &TrainingSet, probes: &[Vec<f64>]) -> bool {
    let value = |l: Leaf| match l {
        Leaf::Value(v) => v,
        Leaf::Class(_) => f64::NAN,
    };
    for x in probes {
        let s: f64 = f.trees().iter().map(|t| value(t.predict(x).unwrap())).sum();
        if f.regress(x).unwrap() != s / f.n_tree() as f64 {
            return false;
        }
    }
    for row in 0..data.n_rows() {
        let x = data.row(row);
        let oob: Vec<f64> = (0..f.n_tree())
            .filter(|&b| !f.in_bag(b).contains(&(row as u32)))
            .map(|b| value(f.trees()[b].predict(&x).unwrap()))
            .collect();
        let expected = (!oob.is_empty()).then(|| oob.iter().sum::<f64>() / oob.len() as f64);
        let got = f.oob_predict(data, row).unwrap().map(value);
        if got != expected {
            return false;
        }
    }
    true
}
