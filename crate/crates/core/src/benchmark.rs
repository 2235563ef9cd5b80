//! Prior error rates of every classifier on the MA(1)/MA(2) benchmark.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::abcrf::{self, bayes_oracle_error, prior_error_rate};
use crate::baselines::calibration::{neighbor_errors, CalibrationCurve, NeighborFamily};
use crate::baselines::{calibrate_k, lda_fit, logit_fit, naive_bayes_fit};
use crate::data::ReferenceTable;
use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::ma_toy::{generate_table, SummaryKind, ToyConfig};
use crate::report::{self, num, Mark, Plot, Series};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSettings {
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub seed: u64,
    pub n_tree: usize,
    pub knn_grid: Vec<usize>,
    pub local_logit_grid: Vec<usize>,
    /// autocovariance summaries by default
    pub toy: ToyConfig,
    /// skip the exact-posterior classifier, the slowest row
    pub with_oracle: bool,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        BenchmarkSettings {
            n_train: 10_000,
            n_valid: 10_000,
            n_test: 10_000,
            seed: 1,
            n_tree: 500,
            knn_grid: vec![25, 50, 100, 200],
            local_logit_grid: vec![50, 100, 200, 400],
            toy: ToyConfig::default().with_summary(SummaryKind::Autocovariance),
            with_oracle: true,
        }
    }
}

/// The three independent benchmark tables.
pub struct BenchmarkTables {
    pub train: ReferenceTable,
    pub valid: ReferenceTable,
    pub test: ReferenceTable,
}

/// Seed of the benchmark table labelled `train`, `validation` or `test`.
pub fn table_seed(master: u64, label: &str) -> u64 {
    rng::derive_seed(master, label, 0)
}

pub fn benchmark_tables(s: &BenchmarkSettings) -> Result<BenchmarkTables> {
    Ok(BenchmarkTables {
        train: generate_table(s.n_train, &s.toy, table_seed(s.seed, "train"))?,
        valid: generate_table(s.n_valid, &s.toy, table_seed(s.seed, "validation"))?,
        test: generate_table(s.n_test, &s.toy, table_seed(s.seed, "test"))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub method: &'static str,
    pub setting: String,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborCurve {
    pub calibration: CalibrationCurve,
    /// test error at every grid point
    pub test_errors: Vec<f64>,
}

impl NeighborCurve {
    pub fn test_error(&self, k: usize) -> Option<f64> {
        let i = self.calibration.grid.iter().position(|&g| g == k)?;
        Some(self.test_errors[i])
    }

    pub fn selected_test_error(&self) -> f64 {
        self.test_error(self.calibration.selected_k).expect("selected k is on the grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub rows: Vec<MethodRow>,
    pub knn: NeighborCurve,
    pub local_logit: NeighborCurve,
    pub rf_oob_error: f64,
}

impl BenchmarkResult {
    pub fn error(&self, method: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.error)
    }
}

/// Seed of the classification forest of a benchmark run.
pub fn forest_seed(master: u64) -> u64 {
    rng::derive_seed(master, "forest", 0)
}

pub fn run(s: &BenchmarkSettings) -> Result<BenchmarkResult> {
    let t = benchmark_tables(s)?;
    run_on(s, &t)
}

/// Fits every classifier on `train`, calibrates the neighbour methods on
/// `valid` and reports errors on `test`.
pub fn run_on(s: &BenchmarkSettings, t: &BenchmarkTables) -> Result<BenchmarkResult> {
    let mut rows = Vec::with_capacity(7);
    let lda = lda_fit(&t.train)?;
    rows.push(MethodRow {
        method: "lda",
        setting: String::new(),
        error: prior_error_rate(&lda, &t.test)?.rate,
    });
    let logit = logit_fit(&t.train)?;
    rows.push(MethodRow {
        method: "logistic",
        setting: if logit.regularized { "ridge".into() } else { String::new() },
        error: prior_error_rate(&logit, &t.test)?.rate,
    });
    let nb = naive_bayes_fit(&t.train)?;
    rows.push(MethodRow {
        method: "naive_bayes",
        setting: String::new(),
        error: prior_error_rate(&nb, &t.test)?.rate,
    });
    let mut curves = Vec::with_capacity(2);
    for (family, grid) in [
        (NeighborFamily::Knn, &s.knn_grid),
        (NeighborFamily::LocalLogit, &s.local_logit_grid),
    ] {
        let calibration = calibrate_k(family, &t.train, &t.valid, grid)?;
        let test_errors = neighbor_errors(family, &t.train, &t.test, &calibration.grid)?;
        let curve = NeighborCurve {
            calibration,
            test_errors,
        };
        rows.push(MethodRow {
            method: family.name(),
            setting: format!("k={}", curve.calibration.selected_k),
            error: curve.selected_test_error(),
        });
        curves.push(curve);
    }
    let cfg = ForestConfig::with_seed(forest_seed(s.seed)).trees(s.n_tree);
    let rf = abcrf::fit(&t.train, &cfg)?;
    rows.push(MethodRow {
        method: "random_forest",
        setting: format!("n_tree={}", s.n_tree),
        error: prior_error_rate(&rf, &t.test)?.rate,
    });
    let rf_oob_error = rf.oob_report(&t.train)?.error;
    if s.with_oracle {
        rows.push(MethodRow {
            method: "bayes_oracle",
            setting: String::new(),
            error: bayes_oracle_error(s.n_test, &s.toy, table_seed(s.seed, "test"))?.rate,
        });
    }
    let local_logit = curves.pop().expect("two curves");
    let knn = curves.pop().expect("two curves");
    Ok(BenchmarkResult {
        rows,
        knn,
        local_logit,
        rf_oob_error,
    })
}

/// Writes `error_rates.csv`, `rf_error.csv`, `knn_calibration.csv`,
/// `local_logit_calibration.csv` and `calibration.svg` into `dir`.
pub fn write_outputs(result: &BenchmarkResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![];
    let p = dir.join("error_rates.csv");
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| vec![r.method.to_string(), r.setting.clone(), num(r.error)])
        .collect();
    report::write_csv(&p, &["method", "setting", "error"], &rows)?;
    written.push(p);
    let p = dir.join("rf_error.csv");
    let held_out = result.error("random_forest").unwrap_or(f64::NAN);
    report::write_csv(
        &p,
        &["source", "error"],
        &[
            vec!["out-of-bag".to_string(), num(result.rf_oob_error)],
            vec!["held-out".to_string(), num(held_out)],
        ],
    )?;
    written.push(p);
    let mut plot = Plot::new("Neighbour-count calibration", "k", "validation error");
    for (i, curve) in [&result.knn, &result.local_logit].into_iter().enumerate() {
        let c = &curve.calibration;
        let p = dir.join(format!("{}_calibration.csv", c.family.name()));
        let rows: Vec<Vec<String>> = (0..c.grid.len())
            .map(|j| {
                vec![
                    c.grid[j].to_string(),
                    num(c.raw[j]),
                    num(c.smoothed[j]),
                    num(curve.test_errors[j]),
                    u8::from(c.grid[j] == c.selected_k).to_string(),
                ]
            })
            .collect();
        report::write_csv(
            &p,
            &["k", "validation_error", "smoothed_error", "test_error", "selected"],
            &rows,
        )?;
        written.push(p);
        let raw = c.grid.iter().map(|&k| k as f64).zip(c.raw.iter().copied()).collect();
        let sm = c.grid.iter().map(|&k| k as f64).zip(c.smoothed.iter().copied()).collect();
        plot = plot
            .with(Series::new(format!("{} raw", c.family.name()), raw, Mark::Dot, report::color(2 * i)))
            .with(Series::new(
                format!("{} smoothed", c.family.name()),
                sm,
                Mark::Line,
                report::color(2 * i + 1),
            ));
    }
    let p = dir.join("calibration.svg");
    plot.save(&p)?;
    written.push(p);
    Ok(written)
}

/// Appends `n` independent standard normal summaries `noise1..` drawn from
/// the `noise` stream.
pub fn add_noise_summaries(table: &ReferenceTable, n: usize, seed: u64) -> Result<ReferenceTable> {
    let names = (1..=n).map(|i| format!("noise{i}")).collect();
    let cols = (0..table.len())
        .map(|i| {
            let mut r = rng::stream(seed, "noise", i as u64);
            (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    table.with_extra_summaries(names, cols)
}
