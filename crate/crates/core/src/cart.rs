//! Randomized CART: at every node a fresh random subset of `n_try`
//! features is examined and the split minimizing `N(v1)Q(v1) + N(v2)Q(v2)`
//! is kept. Classification trees grow until every tip is pure under the
//! Gini index; regression trees until tips hold at most five records.
//!
//! Class labels here are 0-based.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Regression tips hold at most this many records.
pub const REGRESSION_LEAF_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification { n_classes: usize },
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Classes { n_classes, .. } => Task::Classification {
                n_classes: *n_classes,
            },
            Targets::Values(_) => Task::Regression,
        }
    }
}

/// Column-major feature matrix plus responses.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    columns: Vec<Vec<f64>>,
    n_rows: usize,
    targets: Targets,
}

impl TrainingSet {
    pub fn from_rows(rows: &[Vec<f64>], targets: Targets) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::arg(format!(
                "{} rows but {} responses",
                rows.len(),
                targets.len()
            )));
        }
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::arg("rows have differing lengths"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite feature value"));
        }
        match &targets {
            Targets::Classes { labels, n_classes } => {
                if let Some(l) = labels.iter().find(|&&l| l >= *n_classes) {
                    return Err(Error::arg(format!("class {l} outside 0..{n_classes}")));
                }
            }
            Targets::Values(v) => {
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(Error::arg("non-finite response"));
                }
            }
        }
        let columns = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        Ok(TrainingSet {
            columns,
            n_rows: rows.len(),
            targets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.targets.task()
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }
}

/// Gini index `Σ p (1 - p)` of a class-frequency vector.
pub fn gini(class_freqs: &[f64]) -> Result<f64> {
    if class_freqs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::arg("class frequencies must be nonnegative"));
    }
    let total: f64 = class_freqs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("class frequencies sum to {total}, not 1")));
    }
    Ok(class_freqs.iter().map(|p| p * (1.0 - p)).sum())
}

/// Summary of the records reaching a node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub count: usize,
    pub class_freqs: Vec<f64>,
    pub mean_response: f64,
}

impl NodeStats {
    pub fn compute(data: &TrainingSet, indices: &[u32]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::arg("node statistics of an empty subset"));
        }
        let n = indices.len() as f64;
        Ok(match &data.targets {
            Targets::Classes { labels, n_classes } => {
                let mut counts = vec![0usize; *n_classes];
                for &i in indices {
                    counts[labels[i as usize]] += 1;
                }
                NodeStats {
                    count: indices.len(),
                    class_freqs: counts.iter().map(|&c| c as f64 / n).collect(),
                    mean_response: f64::NAN,
                }
            }
            Targets::Values(y) => NodeStats {
                count: indices.len(),
                class_freqs: vec![],
                mean_response: indices.iter().map(|&i| y[i as usize]).sum::<f64>() / n,
            },
        })
    }

    /// Q(v): Gini index for classification, mean squared deviation for regression.
    pub fn impurity(&self, data: &TrainingSet, indices: &[u32]) -> f64 {
        match &data.targets {
            Targets::Classes { .. } => self.class_freqs.iter().map(|p| p * (1.0 - p)).sum(),
            Targets::Values(y) => {
                indices
                    .iter()
                    .map(|&i| (y[i as usize] - self.mean_response).powi(2))
                    .sum::<f64>()
                    / self.count as f64
            }
        }
    }
}

/// `X_feature < threshold` sends a record left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] < self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leaf {
    Class(usize),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        rule: SplitRule,
        left: usize,
        right: usize,
        count: usize,
        /// `N(v)Q(v) - N(v1)Q(v1) - N(v2)Q(v2)`
        impurity_decrease: f64,
    },
    Leaf {
        value: Leaf,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    task: Task,
    n_features: usize,
    n_try: usize,
}

/// Split search accumulator. Classification scores are compared exactly as
/// rationals so ties resolve the same way on every platform.
#[derive(Clone, Copy)]
enum Score {
    /// maximize `num / den` where `num/den = Σc_L²/N_L + Σc_R²/N_R`
    Gini { num: u128, den: u128, n: u64 },
    /// minimize the children's summed squared deviation
    L2(f64),
}

impl Score {
    fn better_than(&self, other: &Score) -> bool {
        match (self, other) {
            (Score::Gini { num: a, den: b, .. }, Score::Gini { num: c, den: d, .. }) => {
                a * d > c * b
            }
            (Score::L2(a), Score::L2(b)) => a < b,
            _ => unreachable!("scores of different tasks"),
        }
    }

    /// Weighted child impurity `N(v1)Q(v1) + N(v2)Q(v2)`.
    fn weighted_impurity(&self) -> f64 {
        match *self {
            Score::Gini { num, den, n } => n as f64 - num as f64 / den as f64,
            Score::L2(v) => v.max(0.0),
        }
    }
}

struct SplitSearch<'a> {
    data: &'a TrainingSet,
    buf: Vec<(f64, u32)>,
    left_counts: Vec<u64>,
    right_counts: Vec<u64>,
}

impl<'a> SplitSearch<'a> {
    fn new(data: &'a TrainingSet) -> Self {
        let k = match data.task() {
            Task::Classification { n_classes } => n_classes,
            Task::Regression => 0,
        };
        SplitSearch {
            data,
            buf: Vec::new(),
            left_counts: vec![0; k],
            right_counts: vec![0; k],
        }
    }

    /// Best threshold on one feature, or `None` if the feature is constant.
    fn best_on_feature(&mut self, indices: &[u32], feature: usize) -> Option<(f64, Score)> {
        let col = &self.data.columns[feature];
        self.buf.clear();
        self.buf
            .extend(indices.iter().map(|&i| (col[i as usize], i)));
        self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.buf.len();
        if n < 2 || self.buf[0].0 == self.buf[n - 1].0 {
            return None;
        }
        let mut best: Option<(usize, Score)> = None;
        match &self.data.targets {
            Targets::Classes { labels, .. } => {
                self.left_counts.iter_mut().for_each(|c| *c = 0);
                self.right_counts.iter_mut().for_each(|c| *c = 0);
                for &(_, i) in &self.buf {
                    self.right_counts[labels[i as usize]] += 1;
                }
                let mut sq_left: u128 = 0;
                let mut sq_right: u128 = self
                    .right_counts
                    .iter()
                    .map(|&c| u128::from(c) * u128::from(c))
                    .sum();
                for k in 0..n - 1 {
                    let c = labels[self.buf[k].1 as usize];
                    sq_left += 2 * u128::from(self.left_counts[c]) + 1;
                    self.left_counts[c] += 1;
                    sq_right -= 2 * u128::from(self.right_counts[c]) - 1;
                    self.right_counts[c] -= 1;
                    if self.buf[k].0 < self.buf[k + 1].0 {
                        let nl = (k + 1) as u128;
                        let nr = (n - k - 1) as u128;
                        let s = Score::Gini {
                            num: sq_left * nr + sq_right * nl,
                            den: nl * nr,
                            n: n as u64,
                        };
                        if best.as_ref().is_none_or(|(_, b)| s.better_than(b)) {
                            best = Some((k, s));
                        }
                    }
                }
            }
            Targets::Values(y) => {
                let mean = self.buf.iter().map(|&(_, i)| y[i as usize]).sum::<f64>() / n as f64;
                let (mut sl, mut ql) = (0.0, 0.0);
                let (mut sr, mut qr) = (0.0, 0.0);
                for &(_, i) in &self.buf {
                    let v = y[i as usize] - mean;
                    sr += v;
                    qr += v * v;
                }
                for k in 0..n - 1 {
                    let v = y[self.buf[k].1 as usize] - mean;
                    sl += v;
                    ql += v * v;
                    sr -= v;
                    qr -= v * v;
                    if self.buf[k].0 < self.buf[k + 1].0 {
                        let nl = (k + 1) as f64;
                        let nr = (n - k - 1) as f64;
                        let s = Score::L2((ql - sl * sl / nl) + (qr - sr * sr / nr));
                        if best.as_ref().is_none_or(|(_, b)| s.better_than(b)) {
                            best = Some((k, s));
                        }
                    }
                }
            }
        }
        best.map(|(k, s)| (midpoint(self.buf[k].0, self.buf[k + 1].0), s))
    }

    fn best_among(&mut self, indices: &[u32], features: &[usize]) -> Option<(SplitRule, Score)> {
        let mut best: Option<(SplitRule, Score)> = None;
        for &f in features {
            if let Some((t, s)) = self.best_on_feature(indices, f) {
                let better = match &best {
                    None => true,
                    Some((r, b)) => {
                        s.better_than(b) || (!b.better_than(&s) && f < r.feature)
                    }
                };
                if better {
                    best = Some((
                        SplitRule {
                            feature: f,
                            threshold: t,
                        },
                        s,
                    ));
                }
            }
        }
        best
    }
}

/// Midpoint of two consecutive distinct values, nudged so that `a < t <= b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + 0.5 * (b - a);
    if m > a && m <= b {
        m
    } else {
        b
    }
}

/// Rule minimizing the weighted child impurity over `candidate_features`
/// and every threshold between consecutive distinct values, with its score
/// `N(v1)Q(v1) + N(v2)Q(v2)`. Ties go to the lowest feature index, then the
/// smallest threshold. `None` when no candidate separates the subset.
pub fn best_split(
    data: &TrainingSet,
    indices: &[u32],
    candidate_features: &[usize],
) -> Result<Option<(SplitRule, f64)>> {
    if candidate_features.is_empty() {
        return Err(Error::arg("empty candidate feature set"));
    }
    if let Some(&f) = candidate_features.iter().find(|&&f| f >= data.n_features()) {
        return Err(Error::arg(format!("feature {f} out of range")));
    }
    let mut feats = candidate_features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    Ok(SplitSearch::new(data)
        .best_among(indices, &feats)
        .map(|(r, s)| (r, s.weighted_impurity())))
}

/// Grows a tree on the (possibly repeated) rows in `sample`.
pub fn grow(data: &TrainingSet, sample: &[u32], n_try: usize, seed: u64) -> Result<DecisionTree> {
    grow_with(data, sample, n_try, &mut rng::from_seed(seed))
}

pub fn grow_with<R: Rng + ?Sized>(
    data: &TrainingSet,
    sample: &[u32],
    n_try: usize,
    rng: &mut R,
) -> Result<DecisionTree> {
    let d = data.n_features();
    if sample.is_empty() {
        return Err(Error::arg("cannot grow a tree on an empty sample"));
    }
    if n_try == 0 || n_try > d {
        return Err(Error::arg(format!("n_try = {n_try} outside 1..={d}")));
    }
    if let Some(&i) = sample.iter().find(|&&i| i as usize >= data.n_rows()) {
        return Err(Error::arg(format!("sample row {i} out of range")));
    }
    let task = data.task();
    let mut search = SplitSearch::new(data);
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf {
        value: Leaf::Value(f64::NAN),
        count: 0,
    }];
    let mut stack: Vec<(usize, Vec<u32>)> = vec![(0, sample.to_vec())];
    let mut perm: Vec<usize> = (0..d).collect();

    while let Some((id, idx)) = stack.pop() {
        let (leaf, node_mass) = leaf_payload(data, &idx);
        if is_terminal(data, &idx) {
            nodes[id] = TreeNode::Leaf {
                value: leaf,
                count: idx.len(),
            };
            continue;
        }
        // partial Fisher–Yates: the first n_try entries are the candidates
        for k in 0..d {
            let j = rng.random_range(k..d);
            perm.swap(k, j);
        }
        let mut cand = perm[..n_try].to_vec();
        cand.sort_unstable();
        let mut found = search.best_among(&idx, &cand);
        // no candidate separates the node: keep drawing features
        let mut next = n_try;
        while found.is_none() && next < d {
            found = search.best_among(&idx, &[perm[next]]);
            next += 1;
        }
        let Some((rule, score)) = found else {
            nodes[id] = TreeNode::Leaf {
                value: leaf,
                count: idx.len(),
            };
            continue;
        };
        let (left, right): (Vec<u32>, Vec<u32>) = idx
            .iter()
            .partition(|&&i| data.columns[rule.feature][i as usize] < rule.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());
        let l_id = nodes.len();
        let r_id = l_id + 1;
        nodes.push(TreeNode::Leaf {
            value: Leaf::Value(f64::NAN),
            count: 0,
        });
        nodes.push(TreeNode::Leaf {
            value: Leaf::Value(f64::NAN),
            count: 0,
        });
        nodes[id] = TreeNode::Internal {
            rule,
            left: l_id,
            right: r_id,
            count: idx.len(),
            impurity_decrease: (node_mass - score.weighted_impurity()).max(0.0),
        };
        stack.push((r_id, right));
        stack.push((l_id, left));
    }
    Ok(DecisionTree {
        nodes,
        task,
        n_features: d,
        n_try,
    })
}

/// Majority label (ties to the lowest class) or mean response, plus N(v)Q(v).
fn leaf_payload(data: &TrainingSet, idx: &[u32]) -> (Leaf, f64) {
    match &data.targets {
        Targets::Classes { labels, n_classes } => {
            let mut counts = vec![0u64; *n_classes];
            for &i in idx {
                counts[labels[i as usize]] += 1;
            }
            let mut best = 0;
            for (c, &k) in counts.iter().enumerate() {
                if k > counts[best] {
                    best = c;
                }
            }
            let n = idx.len() as f64;
            let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
            (Leaf::Class(best), n - sq / n)
        }
        Targets::Values(y) => {
            let n = idx.len() as f64;
            let mean = idx.iter().map(|&i| y[i as usize]).sum::<f64>() / n;
            let sse = idx.iter().map(|&i| (y[i as usize] - mean).powi(2)).sum();
            (Leaf::Value(mean), sse)
        }
    }
}

fn is_terminal(data: &TrainingSet, idx: &[u32]) -> bool {
    match &data.targets {
        Targets::Classes { labels, .. } => {
            let first = labels[idx[0] as usize];
            idx.iter().all(|&i| labels[i as usize] == first)
        }
        Targets::Values(y) => {
            // a constant response cannot be improved by any split
            let first = y[idx[0] as usize];
            idx.len() <= REGRESSION_LEAF_SIZE || idx.iter().all(|&i| y[i as usize] == first)
        }
    }
}

impl DecisionTree {
    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_try(&self) -> usize {
        self.n_try
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            if let TreeNode::Internal { left, right, .. } = self.nodes[id] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        best
    }

    /// Rebuilds a tree from its node list, checking the structure.
    pub fn from_nodes(
        nodes: Vec<TreeNode>,
        task: Task,
        n_features: usize,
        n_try: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Format("tree without nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::Format(format!("node {id} reached twice")));
            }
            match &nodes[id] {
                TreeNode::Internal {
                    rule, left, right, ..
                } => {
                    if rule.feature >= n_features || *left >= nodes.len() || *right >= nodes.len()
                    {
                        return Err(Error::Format(format!("node {id} has invalid links")));
                    }
                    stack.push(*left);
                    stack.push(*right);
                }
                TreeNode::Leaf { value, .. } => match (value, task) {
                    (Leaf::Class(c), Task::Classification { n_classes }) if *c < n_classes => {}
                    (Leaf::Value(_), Task::Regression) => {}
                    _ => return Err(Error::Format(format!("leaf {id} does not match task"))),
                },
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("unreachable nodes".into()));
        }
        Ok(DecisionTree {
            nodes,
            task,
            n_features,
            n_try,
        })
    }

    /// Leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Leaf> {
        if x.len() != self.n_features {
            return Err(Error::arg(format!(
                "{} summaries given, tree expects {}",
                x.len(),
                self.n_features
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Leaf {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Internal {
                    rule, left, right, ..
                } => id = if rule.goes_left(x) { *left } else { *right },
                TreeNode::Leaf { value, .. } => return *value,
            }
        }
    }

    #[inline]
    pub(crate) fn predict_class_unchecked(&self, x: &[f64]) -> usize {
        match self.predict_unchecked(x) {
            Leaf::Class(c) => c,
            Leaf::Value(_) => unreachable!("class prediction from a regression tree"),
        }
    }

    #[inline]
    pub(crate) fn predict_value_unchecked(&self, x: &[f64]) -> f64 {
        match self.predict_unchecked(x) {
            Leaf::Value(v) => v,
            Leaf::Class(_) => unreachable!("value prediction from a classification tree"),
        }
    }

    /// Indented text rendering, one rule or leaf per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let pad = "  ".repeat(depth);
            match &self.nodes[id] {
                TreeNode::Internal {
                    rule, left, right, count, ..
                } => {
                    let _ = writeln!(out, "{pad}X{} < {} (n={count})", rule.feature, rule.threshold);
                    stack.push((*right, depth + 1));
                    stack.push((*left, depth + 1));
                }
                TreeNode::Leaf { value, count } => {
                    let _ = match value {
                        Leaf::Class(c) => writeln!(out, "{pad}-> class {c} (n={count})"),
                        Leaf::Value(v) => writeln!(out, "{pad}-> {v} (n={count})"),
                    };
                }
            }
        }
        out
    }

    /// Per-feature sum of impurity decreases over this tree's splits.
    pub fn impurity_decreases(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for n in &self.nodes {
            if let TreeNode::Internal {
                rule,
                impurity_decrease,
                ..
            } = n
            {
                out[rule.feature] += impurity_decrease;
            }
        }
        out
    }
}
