//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs the full-size MA benchmark (several minutes).

mod common;

use std::fs;
use std::time::{Duration, Instant};

use abcrf::abcrf::{
    classification_view, fit, identity_check, regression_config, AbcRfClassifier, DiscreteFixture, ErrorRegressor,
};
use abcrf::baselines::calibration::{neighbor_errors, NeighborFamily};
use abcrf::baselines::{lda_fit, logit_fit, naive_bayes_fit};
use abcrf::benchmark::{
    add_noise_summaries, benchmark_tables, forest_seed, run_on, table_seed, write_outputs, BenchmarkSettings,
    BenchmarkTables,
};
use abcrf::cart::{best_split, Targets, TrainingSet};
use abcrf::data::{ReferenceTable, SimulationRecord};
use abcrf::forest::{self, ForestConfig};
use abcrf::ma_toy::{
    discrepancy_experiment, discrepancy_fraction, draw_record, generate_table, log_likelihood, sample_prior_with,
    simulate, ExactPosteriorSolver, MaParams, SummaryKind, ToyConfig,
};
use abcrf::abcrf::prior_error_rate;
use abcrf::{rng, stats};
use rand::seq::SliceRandom;
use rand::Rng;

// Tolerances.
const IDENTITY_TOL: f64 = 1e-12;
const LIKELIHOOD_TOL: f64 = 1e-8;
const OOB_GAP: f64 = 0.015;
const RUNTIME_LIMIT: Duration = Duration::from_secs(15 * 60);
const DISCREPANCY_GAP: f64 = 0.2;
const DISCREPANCY_FRACTION: f64 = 0.10;
const POSTERIOR_RANK_CORRELATION: f64 = 0.5;
const NOISE_RF_MAX_CHANGE: f64 = 0.02;
const NOISE_KNN_MIN_LOSS: f64 = 0.03;

const BANDS: [(&str, f64, f64); 7] = [
    ("random_forest", 0.14, 0.18),
    ("knn k=50", 0.155, 0.195),
    ("knn k=100", 0.165, 0.205),
    ("naive_bayes", 0.22, 0.27),
    ("lda", 0.24, 0.29),
    ("logistic", 0.25, 0.30),
    ("bayes_oracle", 0.11, 0.14),
];

struct Outcome {
    failed: Vec<u8>,
}

impl Outcome {
    fn line(&mut self, id: u8, pass: bool, detail: String) {
        println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

fn main() {
    let mut out = Outcome { failed: vec![] };
    let start = Instant::now();
    criterion_3(&mut out);
    criterion_4(&mut out);
    criterion_5(&mut out);
    let settings = BenchmarkSettings::default();
    let (tables, forest) = criteria_1_2(&mut out, &settings);
    criterion_7(&mut out, &settings, &tables, &forest);
    criterion_6(&mut out);
    criterion_8(&mut out);
    println!("criterion 9: NOT REPRODUCIBLE the population-genetics tables and posteriors need a simulator outside this crate");
    println!("acceptance finished in {:.0} s", start.elapsed().as_secs_f64());
    if !out.failed.is_empty() {
        println!("failed criteria: {:?}", out.failed);
        std::process::exit(1);
    }
}

fn criteria_1_2(out: &mut Outcome, s: &BenchmarkSettings) -> (BenchmarkTables, AbcRfClassifier) {
    let start = Instant::now();
    let tables = benchmark_tables(s).expect("benchmark tables");
    let r = run_on(s, &tables).expect("benchmark run");
    let elapsed = start.elapsed();

    let observed = |name: &str| -> f64 {
        match name {
            "knn k=50" => r.knn.test_error(50).unwrap(),
            "knn k=100" => r.knn.test_error(100).unwrap(),
            m => r.error(m).unwrap(),
        }
    };
    let mut all = true;
    let mut parts = vec![];
    for (name, lo, hi) in BANDS {
        let v = observed(name);
        let ok = (lo..=hi).contains(&v);
        all &= ok;
        parts.push(format!("{name} {}{}", pct(v), if ok { "" } else { " (out of band)" }));
    }
    let (bayes, rf, knn50) = (observed("bayes_oracle"), observed("random_forest"), observed("knn k=50"));
    let ordered = bayes < rf && rf < knn50;
    let fast = elapsed <= RUNTIME_LIMIT;
    out.line(
        1,
        all && ordered && fast,
        format!(
            "[{}]; Bayes < RF < knn(50): {ordered}; runtime {:.0} s (limit {} s)",
            parts.join(", "),
            elapsed.as_secs_f64(),
            RUNTIME_LIMIT.as_secs()
        ),
    );
    println!(
        "  also: knn selected k={} {}, local logistic selected k={} {}",
        r.knn.calibration.selected_k,
        pct(r.knn.selected_test_error()),
        r.local_logit.calibration.selected_k,
        pct(r.local_logit.selected_test_error())
    );

    let gap = (r.rf_oob_error - rf).abs();
    out.line(
        2,
        gap <= OOB_GAP,
        format!("OOB {} vs held-out {}, gap {:.2} points (limit {:.1})", pct(r.rf_oob_error), pct(rf), 100.0 * gap, 100.0 * OOB_GAP),
    );

    // informational: the same linear baselines on autocorrelation summaries
    let acf = BenchmarkSettings {
        toy: ToyConfig::default().with_summary(SummaryKind::Autocorrelation),
        ..s.clone()
    };
    let t = benchmark_tables(&acf).expect("autocorrelation tables");
    println!(
        "  info: with autocorrelation summaries lda {}, logistic {}, naive_bayes {}",
        pct(prior_error_rate(&lda_fit(&t.train).unwrap(), &t.test).unwrap().rate),
        pct(prior_error_rate(&logit_fit(&t.train).unwrap(), &t.test).unwrap().rate),
        pct(prior_error_rate(&naive_bayes_fit(&t.train).unwrap(), &t.test).unwrap().rate),
    );

    let forest = fit(&tables.train, &ForestConfig::with_seed(forest_seed(s.seed)).trees(s.n_tree)).unwrap();
    (tables, forest)
}

fn criterion_3(out: &mut Outcome) {
    let fixture = DiscreteFixture::new(vec![
        vec![0.12, 0.08, 0.05, 0.15, 0.04, 0.06],
        vec![0.03, 0.10, 0.15, 0.05, 0.11, 0.06],
    ])
    .unwrap();
    // a forest trained on draws from the fixture, with the value as its only summary
    let mut r = rng::from_seed(3);
    let records: Vec<SimulationRecord> = (0..2000)
        .map(|_| {
            let u: f64 = r.random();
            let mut acc = 0.0;
            let mut cell = 11;
            for c in 0..12 {
                acc += fixture.joint(c / 6 + 1, c % 6);
                if u < acc {
                    cell = c;
                    break;
                }
            }
            SimulationRecord::new(cell / 6 + 1, vec![], vec![(cell % 6) as f64])
        })
        .collect();
    let table = ReferenceTable::new(vec![], vec!["s".into()], 2, records).unwrap();
    let rf = fit(&table, &ForestConfig::with_seed(3).trees(50)).unwrap();
    let rf_pick = |s: usize| rf.select(&[s as f64]).unwrap().0;
    let map = |s: usize| fixture.map_model(s);
    let contrarian = |s: usize| 3 - fixture.map_model(s);
    let mut worst: f64 = 0.0;
    for c in [&map as &dyn Fn(usize) -> usize, &contrarian, &rf_pick] {
        worst = worst.max(identity_check(&fixture, c).max_deviation());
    }
    out.line(
        3,
        worst <= IDENTITY_TOL,
        format!("MAP, anti-MAP and forest classifiers: max |E[error | s] + P(selected | s) - 1| = {worst:.1e} (limit {IDENTITY_TOL:.0e})"),
    );
}

fn criterion_4(out: &mut Outcome) {
    let mut r = rng::from_seed(2024);
    let mut lik_worst: f64 = 0.0;
    for case in 0..100 {
        let cfg = ToyConfig {
            series_length: r.random_range(5..=120),
            noise_sd: r.random_range(0.3..2.0),
            ..ToyConfig::with_lags(2)
        };
        let p = sample_prior_with(1 + case % 2, &mut r).unwrap();
        let p = MaParams { theta1: 0.97 * p.theta1, theta2: 0.97 * p.theta2, ..p };
        let x = simulate(&p, &cfg, case as u64);
        let banded = log_likelihood(&x, &p, &cfg).unwrap();
        let dense = common::dense_log_likelihood(&x.values, &p, cfg.noise_sd);
        lik_worst = lik_worst.max((banded - dense).abs() / dense.abs().max(1.0));
    }

    let mut split_mismatch = 0;
    for case in 0..200 {
        let n = r.random_range(2..=50);
        let d = r.random_range(1..=4);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| f64::from(r.random_range(0..8u8)) * 0.25).collect()).collect();
        let targets = if case % 4 == 3 {
            Targets::Values((0..n).map(|_| r.random_range(-1.0..1.0)).collect())
        } else {
            Targets::Classes { labels: (0..n).map(|_| r.random_range(0..3)).collect(), n_classes: 3 }
        };
        let data = TrainingSet::from_rows(&rows, targets).unwrap();
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.shuffle(&mut r);
        idx.truncate(r.random_range(1..=n));
        let feats: Vec<usize> = (0..d).collect();
        let agree = match (best_split(&data, &idx, &feats).unwrap(), common::brute_force_split(&data, &idx, &feats)) {
            (None, None) => true,
            (Some((rule, s)), Some(b)) => {
                let actual = common::split_score(&data, &idx, rule.feature, rule.threshold).unwrap();
                (s - b).abs() <= 1e-9 * b.max(1.0) && (actual - b).abs() <= 1e-9 * b.max(1.0)
            }
            _ => false,
        };
        split_mismatch += usize::from(!agree);
    }

    let table = generate_table(500, &ToyConfig::default(), 4).unwrap();
    let view = classification_view(&table).unwrap();
    let probes = generate_table(50, &ToyConfig::default(), 5).unwrap().summary_rows();
    let clf = forest::train(&view, &ForestConfig::with_seed(4).trees(40)).unwrap();
    let y: Vec<f64> = table.records().iter().map(|r| r.params[0]).collect();
    let reg_view = TrainingSet::from_rows(&table.summary_rows(), Targets::Values(y)).unwrap();
    let reg = forest::train(&reg_view, &ForestConfig::with_seed(4).trees(30)).unwrap();
    let composes = common::classification_composes(&clf, &view, &probes, 2)
        && common::regression_composes(&reg, &reg_view, &probes);

    out.line(
        4,
        lik_worst <= LIKELIHOOD_TOL && split_mismatch == 0 && composes,
        format!(
            "likelihood max rel. diff {lik_worst:.1e} over 100 cases (limit {LIKELIHOOD_TOL:.0e}); \
             best split disagreements {split_mismatch}/200; forest vote/regress/OOB composition exact: {composes}"
        ),
    );
}

fn criterion_5(out: &mut Outcome) {
    let run = |threads: usize| -> (Vec<u8>, String, Vec<Vec<u8>>) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let table = generate_table(2000, &ToyConfig::default(), 11).unwrap();
            let clf = fit(&table, &ForestConfig::with_seed(11).trees(60)).unwrap();
            let mut model = vec![];
            clf.write_to(&mut model).unwrap();
            let reg = ErrorRegressor::fit(&clf, &table, &regression_config(11).trees(60)).unwrap();
            let probe = generate_table(200, &ToyConfig::default(), 12).unwrap();
            let mut preds = String::new();
            for rec in probe.records() {
                let p = reg.posterior(&clf, &rec.summaries).unwrap();
                preds += &format!("{} {:?} {}\n", p.selected_model, p.votes.counts, p.posterior_prob.to_bits());
            }
            let s = BenchmarkSettings {
                n_train: 600,
                n_valid: 300,
                n_test: 300,
                n_tree: 40,
                knn_grid: vec![10, 25, 50],
                local_logit_grid: vec![50, 100],
                ..Default::default()
            };
            let dir = tempfile::tempdir().unwrap();
            let result = abcrf::benchmark::run(&s).unwrap();
            let files = write_outputs(&result, dir.path()).unwrap();
            (model, preds, files.iter().map(|f| fs::read(f).unwrap()).collect())
        })
    };
    let one = run(1);
    let eight = run(8);
    out.line(
        5,
        one == eight,
        format!(
            "1 vs 8 threads: forest file identical {}, predictions identical {}, benchmark files identical {}",
            one.0 == eight.0,
            one.1 == eight.1,
            one.2 == eight.2
        ),
    );
}

fn criterion_6(out: &mut Outcome) {
    let pts = discrepancy_experiment(1000, 200_000, &ToyConfig::default(), 6).unwrap();
    let frac = discrepancy_fraction(&pts, DISCREPANCY_GAP);
    let (ex, su): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p.exact_ma2, p.summary_ma2)).unzip();
    let rho = stats::spearman(&ex, &su);
    out.line(
        6,
        frac >= DISCREPANCY_FRACTION && rho > 0.0,
        format!(
            "{} of 1000 series differ by > {DISCREPANCY_GAP} (need >= {}), rank correlation {rho:.3} (need > 0)",
            pct(frac),
            pct(DISCREPANCY_FRACTION)
        ),
    );
}

fn criterion_7(out: &mut Outcome, s: &BenchmarkSettings, t: &BenchmarkTables, clf: &AbcRfClassifier) {
    let reg = ErrorRegressor::fit(clf, &t.train, &regression_config(s.seed)).unwrap();
    let solver = ExactPosteriorSolver::shared_default();
    let seed = table_seed(s.seed, "test");
    let (est, truth): (Vec<f64>, Vec<f64>) = (0..1000)
        .map(|i| {
            let rec = &t.test.records()[i];
            let p = reg.posterior(clf, &rec.summaries).unwrap();
            let (_, _, series) = draw_record(&s.toy, seed, i as u64).unwrap();
            (p.posterior_prob, solver.posterior(&series).unwrap().prob(p.selected_model))
        })
        .unzip();
    let rho = stats::spearman(&est, &truth);
    let top: Vec<(f64, f64)> = est.iter().zip(&truth).filter(|(_, &v)| v >= 0.9).map(|(&a, &b)| (a, b)).collect();
    let mean_est = stats::mean(&top.iter().map(|p| p.0).collect::<Vec<_>>());
    let mean_truth = stats::mean(&top.iter().map(|p| p.1).collect::<Vec<_>>());
    out.line(
        7,
        rho > POSTERIOR_RANK_CORRELATION && mean_est < mean_truth,
        format!(
            "rank correlation {rho:.3} (need > {POSTERIOR_RANK_CORRELATION}); on {} series with exact posterior in [0.9, 1]: mean estimate {mean_est:.3} vs mean exact {mean_truth:.3}",
            top.len()
        ),
    );
}

fn criterion_8(out: &mut Outcome) {
    let grid = [10, 25, 50, 100, 200];
    let mut rf_change = vec![];
    let mut knn_loss = vec![];
    for seed in 1..=5u64 {
        let s = BenchmarkSettings { n_train: 10_000, n_test: 10_000, n_valid: 1, seed: 100 + seed, ..Default::default() };
        let train = generate_table(s.n_train, &s.toy, table_seed(s.seed, "train")).unwrap();
        let test = generate_table(s.n_test, &s.toy, table_seed(s.seed, "test")).unwrap();
        let noisy_train = add_noise_summaries(&train, 20, table_seed(s.seed, "train")).unwrap();
        let noisy_test = add_noise_summaries(&test, 20, table_seed(s.seed, "test")).unwrap();
        let cfg = ForestConfig::with_seed(forest_seed(s.seed)).trees(200);
        let rf = |a: &ReferenceTable, b: &ReferenceTable| prior_error_rate(&fit(a, &cfg).unwrap(), b).unwrap().rate;
        let knn = |a: &ReferenceTable, b: &ReferenceTable| {
            neighbor_errors(NeighborFamily::Knn, a, b, &grid).unwrap().into_iter().fold(f64::INFINITY, f64::min)
        };
        rf_change.push((rf(&noisy_train, &noisy_test) - rf(&train, &test)).abs());
        knn_loss.push(knn(&noisy_train, &noisy_test) - knn(&train, &test));
    }
    let rf_med = stats::median(&rf_change);
    let knn_med = stats::median(&knn_loss);
    out.line(
        8,
        rf_med <= NOISE_RF_MAX_CHANGE && knn_med >= NOISE_KNN_MIN_LOSS,
        format!(
            "+20 noise summaries, median over 5 seeds: RF error change {:.2} points (limit {:.0}), best-k knn loss {:.2} points (need >= {:.0})",
            100.0 * rf_med,
            100.0 * NOISE_RF_MAX_CHANGE,
            100.0 * knn_med,
            100.0 * NOISE_KNN_MIN_LOSS
        ),
    );
}
