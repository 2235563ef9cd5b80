//! Bagged randomized CART with out-of-bag bookkeeping.
//!
//! Tree `b` draws its bootstrap sample and all of its node feature subsets
//! from the stream `(seed, "tree", b)`, so a forest is a pure function of
//! the training data and the configuration whatever the thread count.

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::cart::{self, DecisionTree, Leaf, SplitRule, Task, TrainingSet, TreeNode};
use crate::data::format_f64;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// `n_boot` draws with replacement
    Bootstrap,
    /// `n_boot` distinct rows
    Subsample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_tree: usize,
    /// `None` uses every row (N_boot = N).
    pub n_boot: Option<usize>,
    /// `None` uses ⌊√d⌋ for classification and ⌊d/3⌋ for regression, at least 1.
    pub n_try: Option<usize>,
    pub seed: u64,
    pub sampling: Sampling,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_tree: 500,
            n_boot: None,
            n_try: None,
            seed: 0,
            sampling: Sampling::Bootstrap,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(seed: u64) -> Self {
        ForestConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn trees(mut self, n_tree: usize) -> Self {
        self.n_tree = n_tree;
        self
    }

    /// Uses `N/10` rows per tree, an option for tables with few summaries.
    pub fn reduced_boot(mut self, n_rows: usize) -> Self {
        self.n_boot = Some((n_rows / 10).max(1));
        self
    }
}

pub fn default_n_try(task: Task, d: usize) -> usize {
    let v = match task {
        Task::Classification { .. } => (d as f64).sqrt().floor() as usize,
        Task::Regression => d / 3,
    };
    v.clamp(1, d.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<DecisionTree>,
    /// sorted row indices (with repeats) each tree was grown on
    in_bag: Vec<Vec<u32>>,
    task: Task,
    config: ForestConfig,
    n_boot: usize,
    n_try: usize,
    n_train: usize,
    n_features: usize,
}

/// Per-class vote counts (0-based classes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    pub counts: Vec<usize>,
}

impl VoteTally {
    pub fn new(n_classes: usize) -> Self {
        VoteTally {
            counts: vec![0; n_classes],
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Majority class, ties to the lowest index.
    pub fn winner(&self) -> usize {
        let mut best = 0;
        for (c, &k) in self.counts.iter().enumerate() {
            if k > self.counts[best] {
                best = c;
            }
        }
        best
    }

    pub fn fractions(&self) -> Vec<f64> {
        let t = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceEntry {
    pub feature: usize,
    pub name: String,
    pub importance: f64,
}

/// Mean impurity decrease per feature, sorted descending (ties by index).
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn rank_of(&self, feature: usize) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }

    pub fn value_of(&self, feature: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.feature == feature)
            .map(|e| e.importance)
    }

    pub fn with_names(mut self, names: &[String]) -> Self {
        for e in &mut self.entries {
            if let Some(n) = names.get(e.feature) {
                e.name = n.clone();
            }
        }
        self
    }
}

/// Out-of-bag evaluation over the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OobReport {
    pub error: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub n_evaluated: usize,
    /// OOB prediction per training row; `None` when every tree saw the row.
    pub predictions: Vec<Option<usize>>,
}

fn draw_sample<R: Rng>(rng: &mut R, n: usize, n_boot: usize, sampling: Sampling) -> Vec<u32> {
    let mut s: Vec<u32> = match sampling {
        Sampling::Bootstrap => (0..n_boot).map(|_| rng.random_range(0..n as u32)).collect(),
        Sampling::Subsample => rand::seq::index::sample(rng, n, n_boot)
            .into_iter()
            .map(|i| i as u32)
            .collect(),
    };
    s.sort_unstable();
    s
}

/// Trains `n_tree` trees in parallel, tree `b` on its own bootstrap sample.
pub fn train(data: &TrainingSet, config: &ForestConfig) -> Result<Forest> {
    let n = data.n_rows();
    let d = data.n_features();
    if n == 0 || d == 0 {
        return Err(Error::arg("forest training needs at least one row and one feature"));
    }
    if config.n_tree == 0 {
        return Err(Error::arg("n_tree must be at least 1"));
    }
    let n_boot = config.n_boot.unwrap_or(n);
    if n_boot == 0 || n_boot > n {
        return Err(Error::arg(format!("n_boot = {n_boot} outside 1..={n}")));
    }
    let n_try = config.n_try.unwrap_or_else(|| default_n_try(data.task(), d));
    if n_try == 0 || n_try > d {
        return Err(Error::arg(format!("n_try = {n_try} outside 1..={d}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::arg("too many rows"));
    }
    let grown: Vec<(DecisionTree, Vec<u32>)> = (0..config.n_tree)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(config.seed, "tree", b as u64);
            let sample = draw_sample(&mut r, n, n_boot, config.sampling);
            let tree = cart::grow_with(data, &sample, n_try, &mut r)?;
            Ok((tree, sample))
        })
        .collect::<Result<_>>()?;
    let (trees, in_bag) = grown.into_iter().unzip();
    Ok(Forest {
        trees,
        in_bag,
        task: data.task(),
        config: config.clone(),
        n_boot,
        n_try,
        n_train: n,
        n_features: d,
    })
}

impl Forest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn in_bag(&self, tree: usize) -> &[u32] {
        &self.in_bag[tree]
    }

    pub fn n_tree(&self) -> usize {
        self.trees.len()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn n_boot(&self) -> usize {
        self.n_boot
    }

    pub fn n_try(&self) -> usize {
        self.n_try
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> Result<usize> {
        match self.task {
            Task::Classification { n_classes } => Ok(n_classes),
            Task::Regression => Err(Error::arg("classification requested from a regression forest")),
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::arg(format!(
                "{} summaries given, forest expects {}",
                x.len(),
                self.n_features
            )));
        }
        Ok(())
    }

    fn check_data(&self, data: &TrainingSet) -> Result<()> {
        if data.n_rows() != self.n_train || data.n_features() != self.n_features {
            return Err(Error::arg(format!(
                "training view is {}x{}, forest was trained on {}x{}",
                data.n_rows(),
                data.n_features(),
                self.n_train,
                self.n_features
            )));
        }
        Ok(())
    }

    pub fn is_in_bag(&self, tree: usize, row: usize) -> bool {
        self.in_bag[tree].binary_search(&(row as u32)).is_ok()
    }

    /// Votes of every tree for `x`.
    pub fn vote(&self, x: &[f64]) -> Result<VoteTally> {
        let k = self.n_classes()?;
        self.check_len(x)?;
        let mut tally = VoteTally::new(k);
        for t in &self.trees {
            tally.counts[t.predict_class_unchecked(x)] += 1;
        }
        Ok(tally)
    }

    /// Majority vote, ties to the lowest class.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        Ok(self.vote(x)?.winner())
    }

    /// Mean of the tree predictions.
    pub fn regress(&self, x: &[f64]) -> Result<f64> {
        if self.task != Task::Regression {
            return Err(Error::arg("regression requested from a classification forest"));
        }
        self.check_len(x)?;
        let s: f64 = self.trees.iter().map(|t| t.predict_value_unchecked(x)).sum();
        Ok(s / self.trees.len() as f64)
    }

    /// Aggregate over the trees whose bag excludes `row`; `None` if there are none.
    pub fn oob_predict(&self, data: &TrainingSet, row: usize) -> Result<Option<Leaf>> {
        self.check_data(data)?;
        if row >= self.n_train {
            return Err(Error::arg(format!("row {row} out of range")));
        }
        let x = data.row(row);
        let oob: Vec<&DecisionTree> = self
            .trees
            .iter()
            .enumerate()
            .filter(|(b, _)| !self.is_in_bag(*b, row))
            .map(|(_, t)| t)
            .collect();
        if oob.is_empty() {
            return Ok(None);
        }
        Ok(Some(match self.task {
            Task::Classification { n_classes } => {
                let mut tally = VoteTally::new(n_classes);
                for t in &oob {
                    tally.counts[t.predict_class_unchecked(&x)] += 1;
                }
                Leaf::Class(tally.winner())
            }
            Task::Regression => Leaf::Value(
                oob.iter().map(|t| t.predict_value_unchecked(&x)).sum::<f64>() / oob.len() as f64,
            ),
        }))
    }

    /// OOB vote tallies for every training row.
    pub fn oob_votes(&self, data: &TrainingSet) -> Result<Vec<VoteTally>> {
        let k = self.n_classes()?;
        self.check_data(data)?;
        let rows: Vec<Vec<f64>> = (0..self.n_train).map(|i| data.row(i)).collect();
        let per_tree: Vec<Vec<(u32, u32)>> = self
            .trees
            .par_iter()
            .zip(&self.in_bag)
            .map(|(t, bag)| {
                out_of_bag_rows(bag, self.n_train)
                    .map(|i| (i as u32, t.predict_class_unchecked(&rows[i]) as u32))
                    .collect()
            })
            .collect();
        let mut tallies = vec![VoteTally::new(k); self.n_train];
        for votes in per_tree {
            for (i, c) in votes {
                tallies[i as usize].counts[c as usize] += 1;
            }
        }
        Ok(tallies)
    }

    /// OOB error: misclassified fraction over rows having at least one OOB tree.
    pub fn oob_report(&self, data: &TrainingSet) -> Result<OobReport> {
        let k = self.n_classes()?;
        let labels = match data.targets() {
            cart::Targets::Classes { labels, .. } => labels,
            cart::Targets::Values(_) => return Err(Error::arg("training view has no class labels")),
        };
        let tallies = self.oob_votes(data)?;
        let mut confusion = vec![vec![0usize; k]; k];
        let mut predictions = Vec::with_capacity(self.n_train);
        let (mut wrong, mut n_eval) = (0usize, 0usize);
        for (tally, &y) in tallies.iter().zip(labels) {
            if tally.total() == 0 {
                predictions.push(None);
                continue;
            }
            let p = tally.winner();
            predictions.push(Some(p));
            confusion[y][p] += 1;
            n_eval += 1;
            if p != y {
                wrong += 1;
            }
        }
        if n_eval == 0 {
            return Err(Error::Degenerate("no training row has an out-of-bag tree".into()));
        }
        Ok(OobReport {
            error: wrong as f64 / n_eval as f64,
            confusion,
            n_evaluated: n_eval,
            predictions,
        })
    }

    pub fn oob_error(&self, data: &TrainingSet) -> Result<f64> {
        Ok(self.oob_report(data)?.error)
    }

    /// OOB mean prediction for every training row of a regression forest.
    pub fn oob_regress_all(&self, data: &TrainingSet) -> Result<Vec<Option<f64>>> {
        if self.task != Task::Regression {
            return Err(Error::arg("not a regression forest"));
        }
        self.check_data(data)?;
        let rows: Vec<Vec<f64>> = (0..self.n_train).map(|i| data.row(i)).collect();
        let mut sum = vec![0.0; self.n_train];
        let mut cnt = vec![0usize; self.n_train];
        for (t, bag) in self.trees.iter().zip(&self.in_bag) {
            for i in out_of_bag_rows(bag, self.n_train) {
                sum[i] += t.predict_value_unchecked(&rows[i]);
                cnt[i] += 1;
            }
        }
        Ok(sum
            .into_iter()
            .zip(cnt)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect())
    }

    /// Mean over trees of each feature's summed impurity decrease.
    pub fn importance(&self) -> ImportanceReport {
        let mut total = vec![0.0; self.n_features];
        for t in &self.trees {
            for (acc, v) in total.iter_mut().zip(t.impurity_decreases()) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        let mut entries: Vec<ImportanceEntry> = total
            .into_iter()
            .enumerate()
            .map(|(feature, v)| ImportanceEntry {
                feature,
                name: format!("X{feature}"),
                importance: v / n,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.importance
                .total_cmp(&a.importance)
                .then(a.feature.cmp(&b.feature))
        });
        ImportanceReport { entries }
    }

    /// Held-out error using only the first `n` trees, for `n = 1..=n_tree`.
    pub fn error_vs_trees(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<Vec<(usize, f64)>> {
        let k = self.n_classes()?;
        if rows.len() != labels.len() || rows.is_empty() {
            return Err(Error::arg("evaluation rows and labels must be non-empty and aligned"));
        }
        for x in rows {
            self.check_len(x)?;
        }
        let preds: Vec<Vec<u32>> = self
            .trees
            .par_iter()
            .map(|t| rows.iter().map(|x| t.predict_class_unchecked(x) as u32).collect())
            .collect();
        let mut tallies = vec![VoteTally::new(k); rows.len()];
        let mut curve = Vec::with_capacity(self.trees.len());
        for (b, p) in preds.iter().enumerate() {
            let mut wrong = 0;
            for ((tally, &c), &y) in tallies.iter_mut().zip(p).zip(labels) {
                tally.counts[c as usize] += 1;
                if tally.winner() != y {
                    wrong += 1;
                }
            }
            curve.push((b + 1, wrong as f64 / rows.len() as f64));
        }
        Ok(curve)
    }

    /// OOB error using only the first `n` trees, for `n = 1..=n_tree`; rows
    /// without an OOB tree among the prefix are left out of that point.
    pub fn oob_error_vs_trees(&self, data: &TrainingSet) -> Result<Vec<(usize, f64)>> {
        let k = self.n_classes()?;
        self.check_data(data)?;
        let labels = match data.targets() {
            cart::Targets::Classes { labels, .. } => labels,
            cart::Targets::Values(_) => return Err(Error::arg("training view has no class labels")),
        };
        let rows: Vec<Vec<f64>> = (0..self.n_train).map(|i| data.row(i)).collect();
        let per_tree: Vec<Vec<(u32, u32)>> = self
            .trees
            .par_iter()
            .zip(&self.in_bag)
            .map(|(t, bag)| {
                out_of_bag_rows(bag, self.n_train)
                    .map(|i| (i as u32, t.predict_class_unchecked(&rows[i]) as u32))
                    .collect()
            })
            .collect();
        let mut tallies = vec![VoteTally::new(k); self.n_train];
        let mut wrong_now = vec![false; self.n_train];
        let (mut wrong, mut evaluated) = (0usize, 0usize);
        let mut curve = Vec::with_capacity(self.trees.len());
        for (b, votes) in per_tree.into_iter().enumerate() {
            for (i, c) in votes {
                let i = i as usize;
                if tallies[i].total() == 0 {
                    evaluated += 1;
                }
                tallies[i].counts[c as usize] += 1;
                let w = tallies[i].winner() != labels[i];
                if w != wrong_now[i] {
                    if w {
                        wrong += 1;
                    } else {
                        wrong -= 1;
                    }
                    wrong_now[i] = w;
                }
            }
            let e = if evaluated == 0 {
                f64::NAN
            } else {
                wrong as f64 / evaluated as f64
            };
            curve.push((b + 1, e));
        }
        Ok(curve)
    }

    /// Writes the forest in the versioned text format read by [`Forest::read_from`].
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "abcrf-forest 1")?;
        match self.task {
            Task::Classification { n_classes } => writeln!(w, "task classification {n_classes}")?,
            Task::Regression => writeln!(w, "task regression")?,
        }
        writeln!(w, "n_features {}", self.n_features)?;
        writeln!(w, "n_train {}", self.n_train)?;
        let opt = |v: Option<usize>| v.map_or("auto".to_string(), |v| v.to_string());
        writeln!(
            w,
            "config n_tree={} n_boot={} n_try={} seed={} sampling={}",
            self.config.n_tree,
            opt(self.config.n_boot),
            opt(self.config.n_try),
            self.config.seed,
            match self.config.sampling {
                Sampling::Bootstrap => "bootstrap",
                Sampling::Subsample => "subsample",
            }
        )?;
        writeln!(w, "resolved n_boot={} n_try={}", self.n_boot, self.n_try)?;
        let mut line = String::new();
        for (b, (t, bag)) in self.trees.iter().zip(&self.in_bag).enumerate() {
            writeln!(w, "tree {b} nodes {}", t.nodes().len())?;
            line.clear();
            line.push_str("inbag ");
            line.push_str(&bag.len().to_string());
            for i in bag {
                line.push(' ');
                line.push_str(&i.to_string());
            }
            writeln!(w, "{line}")?;
            for n in t.nodes() {
                match n {
                    TreeNode::Internal {
                        rule,
                        left,
                        right,
                        count,
                        impurity_decrease,
                    } => writeln!(
                        w,
                        "N {} {} {left} {right} {count} {}",
                        rule.feature,
                        format_f64(rule.threshold),
                        format_f64(*impurity_decrease)
                    )?,
                    TreeNode::Leaf { value, count } => match value {
                        Leaf::Class(c) => writeln!(w, "L {c} {count}")?,
                        Leaf::Value(v) => writeln!(w, "L {} {count}", format_f64(*v))?,
                    },
                }
            }
        }
        writeln!(w, "end")
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Forest> {
        let mut lines = LineReader::new(r);
        let head = lines.next_line()?;
        if head != "abcrf-forest 1" {
            return Err(Error::Format(format!("unknown forest header {head:?}")));
        }
        let task_line = lines.next_line()?;
        let tw: Vec<&str> = task_line.split_whitespace().collect();
        let task = match tw.as_slice() {
            ["task", "classification", k] => Task::Classification {
                n_classes: parse(k)?,
            },
            ["task", "regression"] => Task::Regression,
            _ => return Err(Error::Format(format!("bad task line {task_line:?}"))),
        };
        let n_features: usize = lines.keyed("n_features")?;
        let n_train: usize = lines.keyed("n_train")?;
        let cfg_line = lines.next_line()?;
        let kv = key_values(&cfg_line, "config")?;
        let get = |k: &str| {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Format(format!("config lacks {k}")))
        };
        let opt = |s: &str| -> Result<Option<usize>> {
            if s == "auto" {
                Ok(None)
            } else {
                parse(s).map(Some)
            }
        };
        let config = ForestConfig {
            n_tree: parse(get("n_tree")?)?,
            n_boot: opt(get("n_boot")?)?,
            n_try: opt(get("n_try")?)?,
            seed: parse(get("seed")?)?,
            sampling: match get("sampling")? {
                "bootstrap" => Sampling::Bootstrap,
                "subsample" => Sampling::Subsample,
                s => return Err(Error::Format(format!("unknown sampling {s:?}"))),
            },
        };
        let res_line = lines.next_line()?;
        let res = key_values(&res_line, "resolved")?;
        let rget = |k: &str| -> Result<usize> {
            res.iter()
                .find(|(key, _)| key == k)
                .ok_or_else(|| Error::Format(format!("resolved lacks {k}")))
                .and_then(|(_, v)| parse(v))
        };
        let n_boot = rget("n_boot")?;
        let n_try = rget("n_try")?;

        let mut trees = Vec::with_capacity(config.n_tree);
        let mut in_bag = Vec::with_capacity(config.n_tree);
        for b in 0..config.n_tree {
            let tl = lines.next_line()?;
            let tw: Vec<&str> = tl.split_whitespace().collect();
            let n_nodes: usize = match tw.as_slice() {
                ["tree", idx, "nodes", n] if parse::<usize>(idx)? == b => parse(n)?,
                _ => return Err(Error::Format(format!("expected tree {b}, got {tl:?}"))),
            };
            let bl = lines.next_line()?;
            let mut it = bl.split_whitespace();
            if it.next() != Some("inbag") {
                return Err(Error::Format(format!("expected inbag line for tree {b}")));
            }
            let len: usize = parse(it.next().unwrap_or(""))?;
            let bag: Vec<u32> = it.map(parse).collect::<Result<_>>()?;
            if bag.len() != len || bag.iter().any(|&i| i as usize >= n_train) {
                return Err(Error::Format(format!("inconsistent inbag for tree {b}")));
            }
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let nl = lines.next_line()?;
                let f: Vec<&str> = nl.split_whitespace().collect();
                nodes.push(match f.as_slice() {
                    ["N", feat, thr, l, r, c, dec] => TreeNode::Internal {
                        rule: SplitRule {
                            feature: parse(feat)?,
                            threshold: parse(thr)?,
                        },
                        left: parse(l)?,
                        right: parse(r)?,
                        count: parse(c)?,
                        impurity_decrease: parse(dec)?,
                    },
                    ["L", v, c] => TreeNode::Leaf {
                        value: match task {
                            Task::Classification { .. } => Leaf::Class(parse(v)?),
                            Task::Regression => Leaf::Value(parse(v)?),
                        },
                        count: parse(c)?,
                    },
                    _ => return Err(Error::Format(format!("bad node line {nl:?}"))),
                });
            }
            trees.push(DecisionTree::from_nodes(nodes, task, n_features, n_try)?);
            in_bag.push(bag);
        }
        if lines.next_line()? != "end" {
            return Err(Error::Format("missing end marker".into()));
        }
        Ok(Forest {
            trees,
            in_bag,
            task,
            config,
            n_boot,
            n_try,
            n_train,
            n_features,
        })
    }
}

/// Rows absent from a sorted bag.
fn out_of_bag_rows(bag: &[u32], n: usize) -> impl Iterator<Item = usize> + '_ {
    let mut k = 0;
    (0..n).filter(move |&i| {
        while k < bag.len() && (bag[k] as usize) < i {
            k += 1;
        }
        !(k < bag.len() && bag[k] as usize == i)
    })
}

pub(crate) struct LineReader<'a, R: BufRead> {
    inner: &'a mut R,
    buf: String,
}

impl<'a, R: BufRead> LineReader<'a, R> {
    pub(crate) fn new(inner: &'a mut R) -> Self {
        LineReader {
            inner,
            buf: String::new(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<String> {
        self.buf.clear();
        let n = self
            .inner
            .read_line(&mut self.buf)
            .map_err(|e| Error::Format(e.to_string()))?;
        if n == 0 {
            return Err(Error::Format("unexpected end of file".into()));
        }
        Ok(self.buf.trim_end_matches(['\n', '\r']).to_string())
    }

    pub(crate) fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => parse(v),
            _ => Err(Error::Format(format!("expected `{key} ...`, got {l:?}"))),
        }
    }
}

fn key_values(line: &str, head: &str) -> Result<Vec<(String, String)>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(head) {
        return Err(Error::Format(format!("expected `{head}` line, got {line:?}")));
    }
    it.map(|kv| {
        kv.split_once('=')
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .ok_or_else(|| Error::Format(format!("bad key=value {kv:?}")))
    })
    .collect()
}

pub(crate) fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart::Targets;

    fn blobs(n: usize, seed: u64, gap: f64) -> TrainingSet {
        let mut r = rng::from_seed(seed);
        let mut rows = vec![];
        let mut labels = vec![];
        for i in 0..n {
            let c = i % 2;
            let shift = if c == 0 { -gap } else { gap };
            rows.push(vec![shift + r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]);
            labels.push(c);
        }
        TrainingSet::from_rows(&rows, Targets::Classes { labels, n_classes: 2 }).unwrap()
    }

    #[test]
    fn n_try_defaults() {
        let c = Task::Classification { n_classes: 2 };
        assert_eq!(default_n_try(c, 7), 2);
        assert_eq!(default_n_try(c, 1), 1);
        assert_eq!(default_n_try(Task::Regression, 7), 2);
        assert_eq!(default_n_try(Task::Regression, 2), 1);
        assert_eq!(default_n_try(c, 27), 5);
    }

    #[test]
    fn vote_tally_rules() {
        let t = VoteTally { counts: vec![300, 200] };
        assert_eq!(t.winner(), 0);
        let t = VoteTally { counts: vec![250, 250] };
        assert_eq!(t.winner(), 0);
        let t = VoteTally { counts: vec![1, 2, 2] };
        assert_eq!(t.winner(), 1);
    }

    #[test]
    fn single_unsampled_tree_is_plain_cart() {
        let data = blobs(60, 1, 0.2);
        let cfg = ForestConfig {
            n_tree: 1,
            n_boot: None,
            n_try: Some(2),
            seed: 5,
            sampling: Sampling::Subsample,
        };
        let f = train(&data, &cfg).unwrap();
        let all: Vec<u32> = (0..60).collect();
        assert_eq!(f.in_bag(0), &all[..]);
        let direct = cart::grow(&data, &all, 2, 0).unwrap();
        for i in 0..60 {
            let x = data.row(i);
            assert_eq!(
                Leaf::Class(f.classify(&x).unwrap()),
                direct.predict(&x).unwrap()
            );
        }
        // row in bag of the only tree
        assert_eq!(f.oob_predict(&data, 0).unwrap(), None);
        assert!(matches!(f.oob_error(&data), Err(Error::Degenerate(_))));
    }

    #[test]
    fn separable_oob_error_is_small() {
        let data = blobs(400, 2, 1.5);
        let f = train(&data, &ForestConfig::with_seed(3).trees(100)).unwrap();
        assert!(f.oob_error(&data).unwrap() <= 0.02);
        let tally = f.vote(&[2.0, 0.0]).unwrap();
        assert_eq!(tally.total(), 100);
        assert!(f.regress(&[0.0, 0.0]).is_err());
        assert!(f.vote(&[0.0]).is_err());
    }

    #[test]
    fn constant_response_regression() {
        let data = blobs(100, 3, 0.5);
        let rows: Vec<Vec<f64>> = (0..100).map(|i| data.row(i)).collect();
        let reg = TrainingSet::from_rows(&rows, Targets::Values(vec![0.25; 100])).unwrap();
        let f = train(&reg, &ForestConfig::with_seed(1).trees(20)).unwrap();
        assert_eq!(f.regress(&[0.3, -0.2]).unwrap(), 0.25);
        assert!(f.vote(&[0.3, -0.2]).is_err());
    }

    #[test]
    fn oob_rows_complement_bag() {
        let bag = [0u32, 0, 2, 5, 5, 6];
        let rows: Vec<usize> = out_of_bag_rows(&bag, 8).collect();
        assert_eq!(rows, vec![1, 3, 4, 7]);
    }

    #[test]
    fn config_validation() {
        let data = blobs(10, 1, 1.0);
        let mut cfg = ForestConfig::with_seed(0).trees(0);
        assert!(train(&data, &cfg).is_err());
        cfg.n_tree = 2;
        cfg.n_boot = Some(11);
        assert!(train(&data, &cfg).is_err());
        cfg.n_boot = None;
        cfg.n_try = Some(3);
        assert!(train(&data, &cfg).is_err());
        let f = train(&data, &ForestConfig::with_seed(0).trees(2).reduced_boot(10)).unwrap();
        assert_eq!(f.n_boot(), 1);
    }

    #[test]
    fn serialization_roundtrip() {
        let data = blobs(80, 4, 0.3);
        let f = train(&data, &ForestConfig::with_seed(9).trees(7)).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let g = Forest::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);
        let truncated = &buf[..buf.len() / 2];
        assert!(Forest::read_from(&mut &truncated[..]).is_err());
    }
}
