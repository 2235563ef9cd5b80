//! Model choice with random forests: selection by majority vote, the
//! posterior probability of the selected model, prior error rates and
//! diagnostics.
//!
//! Models are 1-based throughout this module; the underlying forest works
//! with 0-based classes `model - 1`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::baselines::lda::{lda_fit, lda_project};
use crate::cart::{Targets, TrainingSet};
use crate::classifier::{check_dim, ModelClassifier};
use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};
use crate::forest::{self, Forest, ForestConfig, OobReport, VoteTally};
use crate::forest::LineReader;
use crate::ma_toy::{self, ExactPosteriorSolver, TimeSeries, ToyConfig};
use crate::report::{self, Mark, Plot, Series};
use crate::rng;

/// Classification view of a reference table (class = model − 1).
pub fn classification_view(table: &ReferenceTable) -> Result<TrainingSet> {
    TrainingSet::from_rows(
        &table.summary_rows(),
        Targets::Classes {
            labels: table.records().iter().map(|r| r.model - 1).collect(),
            n_classes: table.n_models(),
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbcRfClassifier {
    forest: Forest,
    summary_names: Vec<String>,
    n_models: usize,
}

/// Trains the classification forest on a table holding at least two models.
pub fn fit(table: &ReferenceTable, config: &ForestConfig) -> Result<AbcRfClassifier> {
    let present = table.model_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Degenerate(format!(
            "model choice needs at least two models in the reference table, found {present}"
        )));
    }
    let forest = forest::train(&classification_view(table)?, config)?;
    Ok(AbcRfClassifier {
        forest,
        summary_names: table.summary_names().to_vec(),
        n_models: table.n_models(),
    })
}

impl AbcRfClassifier {
    pub fn from_parts(forest: Forest, summary_names: Vec<String>, n_models: usize) -> Result<Self> {
        match forest.task() {
            crate::cart::Task::Classification { n_classes } if n_classes == n_models => {}
            _ => {
                return Err(Error::arg(
                    "model choice needs a classification forest over every model",
                ))
            }
        }
        if summary_names.len() != forest.n_features() {
            return Err(Error::arg("summary names do not match the forest's feature count"));
        }
        Ok(AbcRfClassifier {
            forest,
            summary_names,
            n_models,
        })
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn summary_names(&self) -> &[String] {
        &self.summary_names
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    /// Selected model and raw vote counts (`counts[m - 1]` for model `m`).
    /// Vote fractions are not posterior probabilities.
    pub fn select(&self, observed: &[f64]) -> Result<(ModelIndex, VoteTally)> {
        check_dim(self.summary_names.len(), observed)?;
        let votes = self.forest.vote(observed)?;
        Ok((votes.winner() + 1, votes))
    }

    fn check_table(&self, table: &ReferenceTable) -> Result<()> {
        if table.len() != self.forest.n_train() || table.summary_names() != self.summary_names {
            return Err(Error::arg(
                "reference table does not match the one the classifier was trained on",
            ));
        }
        Ok(())
    }

    pub fn oob_report(&self, table: &ReferenceTable) -> Result<OobReport> {
        self.check_table(table)?;
        self.forest.oob_report(&classification_view(table)?)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "abcrf-model 1")?;
        writeln!(w, "n_models {}", self.n_models)?;
        writeln!(w, "summaries {}", self.summary_names.len())?;
        for n in &self.summary_names {
            writeln!(w, "{n}")?;
        }
        self.forest.write_to(w)
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Self> {
        let (n_models, names) = {
            let mut lines = LineReader::new(r);
            let head = lines.next_line()?;
            if head != "abcrf-model 1" {
                return Err(Error::Format(format!("unexpected model header {head:?}")));
            }
            let n_models: usize = lines.keyed("n_models")?;
            let d: usize = lines.keyed("summaries")?;
            let names = (0..d).map(|_| lines.next_line()).collect::<Result<Vec<_>>>()?;
            (n_models, names)
        };
        Self::from_parts(Forest::read_from(r)?, names, n_models)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(f))
    }
}

impl ModelClassifier for AbcRfClassifier {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        Ok(self.select(summaries)?.0)
    }
}

/// Out-of-bag misclassification indicator of every reference record;
/// `None` for records that every tree saw.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector {
    pub indicators: Vec<Option<bool>>,
}

impl ErrorVector {
    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn n_defined(&self) -> usize {
        self.indicators.iter().flatten().count()
    }

    /// Mean over defined entries.
    pub fn mean(&self) -> f64 {
        let wrong = self.indicators.iter().flatten().filter(|&&w| w).count();
        wrong as f64 / self.n_defined() as f64
    }
}

pub fn error_vector(classifier: &AbcRfClassifier, table: &ReferenceTable) -> Result<ErrorVector> {
    let oob = classifier.oob_report(table)?;
    Ok(ErrorVector {
        indicators: oob
            .predictions
            .iter()
            .zip(table.records())
            .map(|(p, r)| p.map(|p| p + 1 != r.model))
            .collect(),
    })
}

/// Forest settings for the error regression: 500 trees, ⌊d/3⌋ candidate
/// features, seed derived from `master` under the `regression` label.
pub fn regression_config(master: u64) -> ForestConfig {
    ForestConfig::with_seed(rng::derive_seed(master, "regression", 0))
}

/// Regression forest ρ(s) of the out-of-bag error indicator on the summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRegressor {
    forest: Forest,
}

impl ErrorRegressor {
    pub fn fit(
        classifier: &AbcRfClassifier,
        table: &ReferenceTable,
        config: &ForestConfig,
    ) -> Result<Self> {
        let ev = error_vector(classifier, table)?;
        let (rows, values): (Vec<Vec<f64>>, Vec<f64>) = table
            .records()
            .iter()
            .zip(&ev.indicators)
            .filter_map(|(r, e)| e.map(|e| (r.summaries.clone(), f64::from(u8::from(e)))))
            .unzip();
        if rows.is_empty() {
            return Err(Error::Degenerate("no record has an out-of-bag prediction".into()));
        }
        let data = TrainingSet::from_rows(&rows, Targets::Values(values))?;
        Ok(ErrorRegressor {
            forest: forest::train(&data, config)?,
        })
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    /// ρ(s), clamped to [0, 1].
    pub fn estimate(&self, observed: &[f64]) -> Result<f64> {
        Ok(self.forest.regress(observed)?.clamp(0.0, 1.0))
    }

    pub fn posterior(
        &self,
        classifier: &AbcRfClassifier,
        observed: &[f64],
    ) -> Result<PosteriorEstimate> {
        let (selected_model, votes) = classifier.select(observed)?;
        let rho = self.estimate(observed)?;
        Ok(PosteriorEstimate {
            selected_model,
            votes,
            posterior_prob: (1.0 - rho).clamp(0.0, 1.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimate {
    pub selected_model: ModelIndex,
    pub votes: VoteTally,
    pub posterior_prob: f64,
}

/// Selected model, votes and the estimated posterior probability
/// `1 − ρ(observed)` of that model.
pub fn posterior_probability(
    classifier: &AbcRfClassifier,
    table: &ReferenceTable,
    observed: &[f64],
    regression: &ForestConfig,
) -> Result<PosteriorEstimate> {
    check_dim(classifier.summary_names.len(), observed)?;
    ErrorRegressor::fit(classifier, table, regression)?.posterior(classifier, observed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorSource {
    OutOfBag,
    HeldOut,
}

impl ErrorSource {
    pub fn name(self) -> &'static str {
        match self {
            ErrorSource::OutOfBag => "out-of-bag",
            ErrorSource::HeldOut => "held-out",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorErrorReport {
    pub rate: f64,
    /// `confusion[true - 1][predicted - 1]`
    pub confusion: Vec<Vec<usize>>,
    pub n_evaluated: usize,
    pub source: ErrorSource,
}

impl PriorErrorReport {
    fn from_pairs(pairs: impl Iterator<Item = (ModelIndex, ModelIndex)>, n_models: usize, source: ErrorSource) -> Result<Self> {
        let mut confusion = vec![vec![0usize; n_models]; n_models];
        let (mut n, mut wrong) = (0usize, 0usize);
        for (truth, pred) in pairs {
            if pred == 0 || pred > n_models {
                return Err(Error::arg(format!("classifier returned model {pred} outside 1..={n_models}")));
            }
            confusion[truth - 1][pred - 1] += 1;
            n += 1;
            wrong += usize::from(truth != pred);
        }
        if n == 0 {
            return Err(Error::arg("prior error rate over an empty test set"));
        }
        Ok(PriorErrorReport {
            rate: wrong as f64 / n as f64,
            confusion,
            n_evaluated: n,
            source,
        })
    }

    /// Misclassification rate among records of model `m`.
    pub fn model_rate(&self, m: ModelIndex) -> f64 {
        let row = &self.confusion[m - 1];
        let n: usize = row.iter().sum();
        (n - row[m - 1]) as f64 / n as f64
    }

    /// Rows `true_model,predicted_model,count`.
    pub fn confusion_rows(&self) -> Vec<Vec<String>> {
        let mut out = vec![];
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, c) in row.iter().enumerate() {
                out.push(vec![(t + 1).to_string(), (p + 1).to_string(), c.to_string()]);
            }
        }
        out
    }
}

/// Misclassification rate of any classifier on a held-out table.
pub fn prior_error_rate<C: ModelClassifier + ?Sized>(
    classifier: &C,
    test: &ReferenceTable,
) -> Result<PriorErrorReport> {
    if test.is_empty() {
        return Err(Error::arg("prior error rate over an empty test set"));
    }
    let preds = classifier.classify_table(test)?;
    let n_models = test.n_models().max(preds.iter().copied().max().unwrap_or(1));
    PriorErrorReport::from_pairs(
        test.records().iter().map(|r| r.model).zip(preds),
        n_models,
        ErrorSource::HeldOut,
    )
}

/// Prior error rate from the out-of-bag predictions on the training table.
pub fn oob_prior_error(
    classifier: &AbcRfClassifier,
    table: &ReferenceTable,
) -> Result<PriorErrorReport> {
    let oob = classifier.oob_report(table)?;
    let pairs = oob
        .predictions
        .iter()
        .zip(table.records())
        .filter_map(|(p, r)| p.map(|p| (r.model, p + 1)));
    PriorErrorReport::from_pairs(pairs, classifier.n_models, ErrorSource::OutOfBag)
}

/// The MAP model under the exact MA posterior.
pub fn bayes_oracle(solver: &ExactPosteriorSolver, series: &TimeSeries) -> Result<ModelIndex> {
    Ok(solver.posterior(series)?.map_model())
}

/// Prior error of the Bayes oracle on the table `ma_toy::generate_table(n, config, seed)`,
/// re-simulating each record's series from its seed.
pub fn bayes_oracle_error(n: usize, config: &ToyConfig, seed: u64) -> Result<PriorErrorReport> {
    if n == 0 {
        return Err(Error::arg("prior error rate over an empty test set"));
    }
    let owned;
    let solver = if config.same_likelihood(&ToyConfig::default()) {
        ExactPosteriorSolver::shared_default()
    } else {
        owned = ExactPosteriorSolver::new(config, Default::default())?;
        &owned
    };
    let pairs = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (model, _, series) = ma_toy::draw_record(config, seed, i)?;
            Ok((model, bayes_oracle(solver, &series)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PriorErrorReport::from_pairs(pairs.into_iter(), 2, ErrorSource::HeldOut)
}

/// A finite joint law `P(m, s)` over models and summary values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFixture {
    /// `joint[m - 1][s]`
    joint: Vec<Vec<f64>>,
}

impl DiscreteFixture {
    pub fn new(joint: Vec<Vec<f64>>) -> Result<Self> {
        let k = joint.first().map_or(0, Vec::len);
        if joint.len() < 2 || k == 0 || joint.iter().any(|r| r.len() != k) {
            return Err(Error::arg("joint table must be at least 2 models by 1 value, rectangular"));
        }
        if joint.iter().flatten().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::arg("joint probabilities must be finite and non-negative"));
        }
        let total: f64 = joint.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!("joint probabilities sum to {total}")));
        }
        Ok(DiscreteFixture { joint })
    }

    pub fn n_models(&self) -> usize {
        self.joint.len()
    }

    pub fn n_values(&self) -> usize {
        self.joint[0].len()
    }

    pub fn joint(&self, m: ModelIndex, s: usize) -> f64 {
        self.joint[m - 1][s]
    }

    pub fn marginal(&self, s: usize) -> f64 {
        self.joint.iter().map(|r| r[s]).sum()
    }

    pub fn posterior(&self, m: ModelIndex, s: usize) -> f64 {
        self.joint(m, s) / self.marginal(s)
    }

    /// The MAP model at each value (ties to the lowest model).
    pub fn map_model(&self, s: usize) -> ModelIndex {
        let mut best = 1;
        for m in 2..=self.n_models() {
            if self.joint(m, s) > self.joint(best, s) {
                best = m;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityRow {
    pub value: usize,
    pub selected: ModelIndex,
    /// E[1{m̂(s) ≠ m} | s]
    pub expected_error: f64,
    /// P(m = m̂(s) | s)
    pub posterior_selected: f64,
}

impl IdentityRow {
    pub fn deviation(&self) -> f64 {
        (self.expected_error + self.posterior_selected - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(IdentityRow::deviation).fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_deviation() <= tol
    }
}

/// Checks, value by value, that the conditional expected error of a
/// classifier and the posterior probability of its choice sum to one.
/// Values of zero probability are skipped.
pub fn identity_check(
    fixture: &DiscreteFixture,
    classifier: &dyn Fn(usize) -> ModelIndex,
) -> IdentityReport {
    let rows = (0..fixture.n_values())
        .filter(|&s| fixture.marginal(s) > 0.0)
        .map(|s| {
            let sel = classifier(s);
            let ps = fixture.marginal(s);
            // the expectation is summed over the models that disagree
            let expected_error = (1..=fixture.n_models())
                .filter(|&m| m != sel)
                .map(|m| fixture.joint(m, s))
                .sum::<f64>()
                / ps;
            IdentityRow {
                value: s,
                selected: sel,
                expected_error,
                posterior_selected: fixture.posterior(sel, s),
            }
        })
        .collect();
    IdentityReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloRow {
    pub value: usize,
    pub n_draws: usize,
    pub mc_error: f64,
    pub exact_error: f64,
    pub standard_error: f64,
}

impl MonteCarloRow {
    /// |MC − exact| in standard errors (0 when both are degenerate and equal).
    pub fn z(&self) -> f64 {
        let d = (self.mc_error - self.exact_error).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.standard_error
        }
    }
}

/// Draws `(m, s)` from the fixture and estimates E[1{m̂(s) ≠ m} | s] by the
/// error frequency among draws landing on each value.
pub fn identity_check_mc(
    fixture: &DiscreteFixture,
    classifier: &dyn Fn(usize) -> ModelIndex,
    n_draws: usize,
    seed: u64,
) -> Vec<MonteCarloRow> {
    use rand::distr::{weighted::WeightedIndex, Distribution};
    let k = fixture.n_values();
    let weights: Vec<f64> = fixture.joint.iter().flatten().copied().collect();
    let dist = WeightedIndex::new(&weights).expect("validated joint");
    let mut r = rng::stream(seed, "identity", 0);
    let mut hits = vec![0usize; k];
    let mut errors = vec![0usize; k];
    let selected: Vec<ModelIndex> = (0..k).map(classifier).collect();
    for _ in 0..n_draws {
        let cell = dist.sample(&mut r);
        let (m, s) = (cell / k + 1, cell % k);
        hits[s] += 1;
        errors[s] += usize::from(selected[s] != m);
    }
    let exact = identity_check(fixture, classifier);
    exact
        .rows
        .iter()
        .map(|row| {
            let n = hits[row.value];
            let p = row.expected_error;
            MonteCarloRow {
                value: row.value,
                n_draws: n,
                mc_error: errors[row.value] as f64 / n.max(1) as f64,
                exact_error: p,
                standard_error: (p * (1.0 - p) / n.max(1) as f64).sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetStability {
    pub full_error: f64,
    pub subset_error: f64,
    pub subset_size: usize,
}

/// OOB errors of forests trained on the whole table and on a random subset
/// holding `fraction` of its rows (drawn from the `subset` stream).
pub fn subset_stability(
    table: &ReferenceTable,
    fraction: f64,
    config: &ForestConfig,
) -> Result<SubsetStability> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::arg(format!("subset fraction {fraction} outside (0, 1]")));
    }
    let full = fit(table, config)?.oob_report(table)?.error;
    let size = ((table.len() as f64 * fraction).round() as usize).clamp(1, table.len());
    let mut rows: Vec<usize> = if size == table.len() {
        (0..size).collect()
    } else {
        let mut r = rng::stream(config.seed, "subset", 0);
        sample(&mut r, table.len(), size).into_vec()
    };
    rows.sort_unstable();
    let sub = table.subset(&rows)?;
    let sub_config = ForestConfig {
        n_boot: config.n_boot.map(|b| b.min(size)),
        ..config.clone()
    };
    let subset_error = fit(&sub, &sub_config)?.oob_report(&sub)?.error;
    Ok(SubsetStability {
        full_error: full,
        subset_error,
        subset_size: size,
    })
}

/// Reference records and an observed point on the leading LDA axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub axis_names: Vec<String>,
    pub models: Vec<ModelIndex>,
    pub coords: Vec<Vec<f64>>,
    pub observed: Vec<f64>,
}

/// Projects the table and `observed` on the first `min(M − 1, 4)` LDA axes.
pub fn compatibility_projection(table: &ReferenceTable, observed: &[f64]) -> Result<Projection> {
    check_dim(table.n_summaries(), observed)?;
    let lda = lda_fit(table)?;
    let k = lda.n_axes().min(4);
    let proj = |x: &[f64]| -> Result<Vec<f64>> {
        let mut v = lda_project(&lda, x)?;
        v.truncate(k);
        Ok(v)
    };
    Ok(Projection {
        axis_names: (1..=k).map(|i| format!("LD{i}")).collect(),
        models: table.models(),
        coords: table
            .records()
            .iter()
            .map(|r| proj(&r.summaries))
            .collect::<Result<_>>()?,
        observed: proj(observed)?,
    })
}

/// Per-model axis-aligned bounding box of projected records.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub model: ModelIndex,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

impl Projection {
    pub fn n_axes(&self) -> usize {
        self.axis_names.len()
    }

    pub fn bounding_boxes(&self) -> Vec<BoundingBox> {
        let n_models = self.models.iter().copied().max().unwrap_or(0);
        let k = self.n_axes();
        (1..=n_models)
            .filter_map(|m| {
                let mut lower = vec![f64::INFINITY; k];
                let mut upper = vec![f64::NEG_INFINITY; k];
                let mut any = false;
                for (c, _) in self.coords.iter().zip(&self.models).filter(|(_, &mm)| mm == m) {
                    any = true;
                    for j in 0..k {
                        lower[j] = lower[j].min(c[j]);
                        upper[j] = upper[j].max(c[j]);
                    }
                }
                any.then_some(BoundingBox { model: m, lower, upper })
            })
            .collect()
    }

    /// Whether the observed point lies in some model's bounding box.
    pub fn observed_in_any_box(&self) -> bool {
        self.bounding_boxes().iter().any(|b| b.contains(&self.observed))
    }

    /// Whether every observed coordinate lies between the smallest and
    /// largest simulated value on that axis; with one axis this is
    /// convex-hull membership.
    pub fn observed_within_ranges(&self) -> bool {
        (0..self.n_axes()).all(|j| {
            let lo = self.coords.iter().map(|c| c[j]).fold(f64::INFINITY, f64::min);
            let hi = self.coords.iter().map(|c| c[j]).fold(f64::NEG_INFINITY, f64::max);
            lo <= self.observed[j] && self.observed[j] <= hi
        })
    }

    /// Rows `kind,model,LD1..`: one per record, then the observed point
    /// with an empty model.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut header = vec!["kind", "model"];
        header.extend(self.axis_names.iter().map(String::as_str));
        let mut rows: Vec<Vec<String>> = self
            .coords
            .iter()
            .zip(&self.models)
            .map(|(c, m)| {
                let mut r = vec!["simulated".to_string(), m.to_string()];
                r.extend(c.iter().map(|&v| report::num(v)));
                r
            })
            .collect();
        let mut obs = vec!["observed".to_string(), String::new()];
        obs.extend(self.observed.iter().map(|&v| report::num(v)));
        rows.push(obs);
        report::write_csv(path, &header, &rows)
    }

    /// LD1 against LD2, or LD1 against the model index (with a small
    /// deterministic vertical spread) when only one axis exists.
    pub fn plot(&self) -> Plot {
        let n_models = self.models.iter().copied().max().unwrap_or(0);
        let y_of = |i: usize, c: &[f64], m: ModelIndex| {
            if self.n_axes() >= 2 {
                c[1]
            } else {
                let h = rng::derive_seed(0, "jitter", i as u64) >> 11;
                m as f64 + 0.7 * (h as f64 / (1u64 << 53) as f64 - 0.5)
            }
        };
        let y_label = if self.n_axes() >= 2 { "LD2" } else { "model (spread)" };
        let mut plot = Plot::new("Reference table on LDA axes", "LD1", y_label);
        for m in 1..=n_models {
            let pts: Vec<(f64, f64)> = self
                .coords
                .iter()
                .zip(&self.models)
                .enumerate()
                .filter(|(_, (_, &mm))| mm == m)
                .map(|(i, (c, _))| (c[0], y_of(i, c, m)))
                .collect();
            plot = plot.with(Series::new(format!("model {m}"), pts, Mark::Dot, report::color(m - 1)));
        }
        let oy = if self.n_axes() >= 2 {
            self.observed[1]
        } else {
            (n_models as f64 + 1.0) / 2.0
        };
        plot.with(Series::new("observed", vec![(self.observed[0], oy)], Mark::Star, "#ffd700"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SimulationRecord;
    use rand::Rng;

    /// Two models split by the sign of the first summary, with a margin.
    pub(crate) fn separable(n: usize, seed: u64) -> ReferenceTable {
        let mut r = rng::from_seed(seed);
        let recs = (0..n)
            .map(|i| {
                let m = 1 + i % 2;
                let s0 = if m == 1 { -1.0 } else { 1.0 } * r.random_range(0.5..2.0);
                SimulationRecord::new(m, vec![], vec![s0, r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])
            })
            .collect();
        ReferenceTable::new(vec![], vec!["a".into(), "b".into(), "c".into()], 2, recs).unwrap()
    }

    fn shuffled_labels(n: usize, seed: u64) -> ReferenceTable {
        let mut r = rng::from_seed(seed);
        let recs = (0..n)
            .map(|_| {
                let m = if r.random_bool(0.5) { 2 } else { 1 };
                SimulationRecord::new(m, vec![], vec![r.random(), r.random(), r.random()])
            })
            .collect();
        ReferenceTable::new(vec![], vec!["a".into(), "b".into(), "c".into()], 2, recs).unwrap()
    }

    fn small(seed: u64) -> ForestConfig {
        ForestConfig::with_seed(seed).trees(100)
    }

    #[test]
    fn separable_fixture_is_learned() {
        let t = separable(600, 1);
        let c = fit(&t, &small(1)).unwrap();
        let oob = c.oob_report(&t).unwrap();
        assert!(oob.error <= 0.01, "{}", oob.error);
        let (m, votes) = c.select(&[1.5, 0.0, 0.0]).unwrap();
        assert_eq!(m, 2);
        assert_eq!(votes.total(), 100);
        assert_eq!(c.classify(&[-1.5, 0.0, 0.0]).unwrap(), 1);
        assert!(c.select(&[1.0]).is_err());
        let ev = error_vector(&c, &t).unwrap();
        assert_eq!(ev.mean(), oob.error);
        let post = posterior_probability(&c, &t, &[1.5, 0.0, 0.0], &regression_config(1).trees(100))
            .unwrap();
        assert_eq!(post.selected_model, 2);
        assert!(post.posterior_prob >= 0.95, "{}", post.posterior_prob);
    }

    #[test]
    fn single_model_table_is_rejected() {
        let t = separable(40, 2);
        let ones: Vec<usize> = (0..t.len()).step_by(2).collect();
        let sub = t.subset(&ones).unwrap();
        assert!(matches!(fit(&sub, &small(0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn no_signal_gives_coin_flip_posterior() {
        let t = shuffled_labels(2000, 3);
        let c = fit(&t, &small(3)).unwrap();
        let ev = error_vector(&c, &t).unwrap();
        assert!((ev.mean() - 0.5).abs() < 0.04, "{}", ev.mean());
        let post = posterior_probability(&c, &t, &[0.5, 0.5, 0.5], &regression_config(3).trees(100))
            .unwrap();
        assert!((post.posterior_prob - 0.5).abs() <= 0.1, "{}", post.posterior_prob);
    }

    #[test]
    fn same_seed_same_classifier_and_file_round_trip() {
        let t = separable(200, 4);
        let a = fit(&t, &small(9)).unwrap();
        let b = fit(&t, &small(9)).unwrap();
        assert_eq!(a, b);
        let mut buf = vec![];
        a.write_to(&mut buf).unwrap();
        let back = AbcRfClassifier::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn prior_error_reports() {
        let t = separable(400, 5);
        let always_one = |_: &[f64]| -> Result<ModelIndex> { Ok(1) };
        let rep = prior_error_rate(&always_one, &t).unwrap();
        assert_eq!(rep.rate, 0.5);
        assert_eq!(rep.confusion, vec![vec![200, 0], vec![200, 0]]);
        assert_eq!(rep.model_rate(1), 0.0);
        assert_eq!(rep.model_rate(2), 1.0);
        let c = fit(&t, &small(5)).unwrap();
        let oob = oob_prior_error(&c, &t).unwrap();
        assert_eq!(oob.source, ErrorSource::OutOfBag);
        assert_eq!(oob.rate, c.oob_report(&t).unwrap().error);
        let rows: usize = oob.confusion.iter().flatten().sum();
        assert_eq!(rows, oob.n_evaluated);
        let empty = t.subset(&[]).unwrap();
        assert!(prior_error_rate(&always_one, &empty).is_err());
    }

    fn fixture() -> DiscreteFixture {
        DiscreteFixture::new(vec![vec![0.3, 0.1, 0.1], vec![0.05, 0.15, 0.3]]).unwrap()
    }

    #[test]
    fn identity_holds_for_any_classifier() {
        let f = fixture();
        let map = |s: usize| f.map_model(s);
        let report = identity_check(&f, &map);
        assert!(report.holds(1e-12));
        assert_eq!(report.rows[0].selected, 1);
        assert!((report.rows[0].expected_error - 0.05 / 0.35).abs() < 1e-15);
        for fixed in [1, 2] {
            let c = move |_: usize| fixed;
            assert!(identity_check(&f, &c).holds(1e-12));
        }
        assert!(DiscreteFixture::new(vec![vec![0.5], vec![0.6]]).is_err());
    }

    #[test]
    fn monte_carlo_matches_enumeration() {
        let f = fixture();
        let c = |s: usize| if s == 1 { 1 } else { 2 };
        let rows = identity_check_mc(&f, &c, 200_000, 1);
        assert_eq!(rows.iter().map(|r| r.n_draws).sum::<usize>(), 200_000);
        for r in rows {
            assert!(r.z() < 4.0, "{r:?}");
        }
    }

    #[test]
    fn subset_of_whole_table_reproduces_full_error() {
        let t = separable(300, 6);
        let s = subset_stability(&t, 1.0, &small(6)).unwrap();
        assert_eq!(s.full_error, s.subset_error);
        assert_eq!(s.subset_size, 300);
        assert!(subset_stability(&t, 0.0, &small(6)).is_err());
        let half = subset_stability(&t, 0.5, &small(6)).unwrap();
        assert_eq!(half.subset_size, 150);
    }

    #[test]
    fn projection_layout_and_outlier_signal() {
        let t = separable(300, 7);
        let p = compatibility_projection(&t, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.n_axes(), 1);
        assert_eq!(p.coords.len(), 300);
        assert!(p.observed_within_ranges());
        assert!(p.observed_in_any_box());
        let far = compatibility_projection(&t, &[100.0, 100.0, 100.0]).unwrap();
        assert!(!far.observed_in_any_box());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        p.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 301);
        assert!(text.lines().last().unwrap().starts_with("observed,,"));
        assert!(p.plot().to_svg().contains("observed"));
    }
}
