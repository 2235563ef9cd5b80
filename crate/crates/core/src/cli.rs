//! Command-line driver: `simulate`, `train`, `predict`, `benchmark`,
//! `diagnose` and `replay`.
//!
//! Every command writes a JSON run manifest next to its outputs; `replay`
//! re-executes one. Exit codes: 0 success, 2 usage, 3 data, 4 numeric.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::abcrf::{
    self, compatibility_projection, regression_config, subset_stability, AbcRfClassifier,
    ErrorRegressor,
};
use crate::benchmark::{self, BenchmarkSettings};
use crate::data::{load_table, save_table, ReferenceTable};
use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::ma_toy::{self, SummaryKind, ToyConfig};
use crate::report::{self, num, Mark, Plot, Series};
use crate::stats;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "abcrf-cli", version, about = "Model choice with ABC random forests")]
pub struct Cli {
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a reference table
    Simulate {
        #[arg(long, default_value = "toy-ma")]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        lags: usize,
        #[arg(long, default_value_t = 100)]
        length: usize,
        /// autocorrelation | autocovariance
        #[arg(long, default_value = "autocorrelation")]
        summary: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the model-choice forest and print its out-of-bag report
    Train {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 500)]
        trees: usize,
        /// candidate features per split, or `auto` for ⌊√d⌋
        #[arg(long, default_value = "auto")]
        ntry: String,
        /// rows per bootstrap sample, or `auto` for N
        #[arg(long, default_value = "auto")]
        nboot: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select a model for observed summaries and estimate its posterior probability
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// the reference table the model was trained on
        #[arg(long)]
        table: PathBuf,
        /// comma-separated summaries, or a CSV file holding one row
        #[arg(long)]
        observed: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// trees of the error-regression forest
        #[arg(long, default_value_t = 500)]
        reg_trees: usize,
        /// also write the result as CSV (and a manifest beside it)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prior error rates of every classifier on the MA benchmark
    Benchmark {
        #[arg(long, default_value_t = 10_000)]
        train: usize,
        #[arg(long, default_value_t = 10_000)]
        valid: usize,
        #[arg(long, default_value_t = 10_000)]
        test: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        trees: usize,
        /// autocorrelation | autocovariance
        #[arg(long, default_value = "autocovariance")]
        summary: String,
        #[arg(long, default_value = "25,50,100,200")]
        knn_grid: String,
        #[arg(long, default_value = "50,100,200,400")]
        local_grid: String,
        /// leave out the exact-posterior classifier
        #[arg(long)]
        no_oracle: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagnostics of a trained model
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        observed: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        /// fresh series of the exact versus summary posterior plot
        #[arg(long, default_value_t = 1000)]
        series: usize,
        /// kernel pool of that plot
        #[arg(long, default_value_t = 200_000)]
        pool: usize,
    },
    /// Re-run the command recorded in a manifest
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// compare regenerated outputs with the existing files
        #[arg(long)]
        verify: bool,
    },
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub threads: Option<usize>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Manifest path for a command writing the file `out`.
pub fn manifest_for_file(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Manifest path for a command writing into directory `dir`.
pub fn manifest_for_dir(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) => EXIT_USAGE,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Parse { .. } | Error::Io { .. } | Error::Format(_) | Error::Degenerate(_) => EXIT_DATA,
    }
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }

    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("{}: {}", r.level().as_str().to_lowercase(), r.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(log::LevelFilter::Warn);
    }
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match cli.threads {
        Some(0) => Err(Error::arg("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::arg(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli, &argv))),
        None => dispatch(&cli, &argv),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let manifest = |command: &str, seed, inputs: Vec<&Path>, outputs: Vec<PathBuf>, at: PathBuf| {
        RunManifest {
            command: command.to_string(),
            args: argv.to_vec(),
            seed,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: cli.threads,
            duration_secs: start.elapsed().as_secs_f64(),
        }
        .save(&at)
    };
    match &cli.command {
        Command::Simulate {
            model,
            n,
            lags,
            length,
            summary,
            seed,
            out,
        } => {
            if model != "toy-ma" {
                return Err(Error::arg(format!("unknown model {model:?}; available: toy-ma")));
            }
            if *n == 0 {
                return Err(Error::arg("--n must be at least 1"));
            }
            let cfg = ToyConfig {
                series_length: *length,
                n_lags: *lags,
                summary: summary.parse()?,
                ..ToyConfig::default()
            };
            let table = ma_toy::generate_table(*n, &cfg, *seed)?;
            save_table(&table, out)?;
            println!("wrote {} records with {} summaries to {}", table.len(), table.n_summaries(), out.display());
            manifest("simulate", Some(*seed), vec![], vec![out.clone()], manifest_for_file(out))
        }
        Command::Train {
            table,
            trees,
            ntry,
            nboot,
            seed,
            out,
        } => {
            let cfg = ForestConfig {
                n_tree: *trees,
                n_try: auto_or(ntry, "--ntry")?,
                n_boot: auto_or(nboot, "--nboot")?,
                ..ForestConfig::with_seed(*seed)
            };
            let t = load_table(table)?;
            let c = abcrf::fit(&t, &cfg)?;
            c.save(out)?;
            let oob = c.oob_report(&t)?;
            println!("oob_error {}", num(oob.error));
            println!("evaluated {}", oob.n_evaluated);
            println!("n_tree {} n_try {} n_boot {}", c.forest().n_tree(), c.forest().n_try(), c.forest().n_boot());
            for (m, row) in oob.confusion.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(usize::to_string).collect();
                println!("confusion model {} -> {}", m + 1, cells.join(" "));
            }
            manifest("train", Some(*seed), vec![table], vec![out.clone()], manifest_for_file(out))
        }
        Command::Predict {
            model,
            table,
            observed,
            seed,
            reg_trees,
            out,
        } => {
            let c = AbcRfClassifier::load(model)?;
            let t = load_table(table)?;
            let obs = parse_observed(observed)?;
            let reg = regression_config(*seed).trees(*reg_trees);
            let est = ErrorRegressor::fit(&c, &t, &reg)?.posterior(&c, &obs)?;
            let votes: Vec<String> = est.votes.counts.iter().map(usize::to_string).collect();
            println!("selected_model {}", est.selected_model);
            println!("votes {}", votes.join(" "));
            println!("posterior_probability {}", num(est.posterior_prob));
            if let Some(out) = out {
                report::write_csv(
                    out,
                    &["selected_model", "votes", "posterior_probability"],
                    &[vec![est.selected_model.to_string(), votes.join(" "), num(est.posterior_prob)]],
                )?;
                manifest("predict", Some(*seed), vec![model, table], vec![out.clone()], manifest_for_file(out))?;
            }
            Ok(())
        }
        Command::Benchmark {
            train,
            valid,
            test,
            seed,
            trees,
            summary,
            knn_grid,
            local_grid,
            no_oracle,
            out,
        } => {
            if *train == 0 || *valid == 0 || *test == 0 || *trees == 0 {
                return Err(Error::arg("table sizes and --trees must be positive"));
            }
            let s = BenchmarkSettings {
                n_train: *train,
                n_valid: *valid,
                n_test: *test,
                seed: *seed,
                n_tree: *trees,
                knn_grid: parse_grid(knn_grid)?,
                local_logit_grid: parse_grid(local_grid)?,
                toy: ToyConfig::default().with_summary(summary.parse::<SummaryKind>()?),
                with_oracle: !no_oracle,
            };
            let r = benchmark::run(&s)?;
            let files = benchmark::write_outputs(&r, out)?;
            for row in &r.rows {
                println!("{:<14} {:<12} {:.2}%", row.method, row.setting, 100.0 * row.error);
            }
            println!("{:<14} {:<12} {:.2}%", "rf_oob", "", 100.0 * r.rf_oob_error);
            manifest("benchmark", Some(*seed), vec![], files, manifest_for_dir(out))
        }
        Command::Diagnose {
            model,
            table,
            observed,
            out,
            seed,
            fraction,
            series,
            pool,
        } => {
            let c = AbcRfClassifier::load(model)?;
            let t = load_table(table)?;
            let obs = parse_observed(observed)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let files = diagnose(&c, &t, &obs, out, *seed, *fraction, *series, *pool)?;
            manifest("diagnose", Some(*seed), vec![model, table], files, manifest_for_dir(out))
        }
        Command::Replay { manifest, verify } => replay(manifest, *verify),
    }
}

fn auto_or(v: &str, flag: &str) -> Result<Option<usize>> {
    if v == "auto" {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| Error::arg(format!("{flag} expects `auto` or a positive integer, got {v:?}")))
}

fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let g = s
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::arg(format!("bad k grid {s:?}")))?;
    if g.is_empty() || g.contains(&0) {
        return Err(Error::arg(format!("bad k grid {s:?}")));
    }
    Ok(g)
}

/// Observed summaries from `v1,v2,..` or from a CSV file. In a file, the
/// first all-numeric row is used; when a header names `stat_*` columns,
/// only those are kept.
pub fn parse_observed(arg: &str) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    if !path.is_file() {
        return arg
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::arg(format!("--observed: {v:?} is not a number and no such file exists")))
            })
            .collect();
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut keep: Option<Vec<usize>> = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let vals: Vec<Option<f64>> = rec.iter().map(|f| f.trim().parse().ok()).collect();
        if vals.iter().all(Option::is_some) && !vals.is_empty() {
            let vals: Vec<f64> = vals.into_iter().flatten().collect();
            return Ok(match keep {
                Some(cols) => cols.iter().map(|&j| vals.get(j).copied()).collect::<Option<_>>().ok_or_else(
                    || Error::Parse {
                        path: path.to_path_buf(),
                        line: line + 1,
                        column: rec.len(),
                        message: "row is shorter than the header".into(),
                    },
                )?,
                None => vals,
            });
        }
        if keep.is_none() {
            let cols: Vec<usize> = rec
                .iter()
                .enumerate()
                .filter(|(_, h)| h.trim().starts_with("stat_"))
                .map(|(j, _)| j)
                .collect();
            if !cols.is_empty() {
                keep = Some(cols);
            }
        }
    }
    Err(Error::Format(format!("{}: no numeric row", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn diagnose(
    c: &AbcRfClassifier,
    t: &ReferenceTable,
    observed: &[f64],
    out: &Path,
    seed: u64,
    fraction: f64,
    n_series: usize,
    pool: usize,
) -> Result<Vec<PathBuf>> {
    let mut files = vec![];
    let view = abcrf::classification_view(t)?;
    if view.n_rows() != c.forest().n_train() {
        return Err(Error::arg("reference table does not match the model"));
    }

    let curve = c.forest().oob_error_vs_trees(&view)?;
    let p = out.join("error_vs_trees.csv");
    let rows: Vec<Vec<String>> = curve.iter().map(|&(n, e)| vec![n.to_string(), num(e)]).collect();
    report::write_csv(&p, &["n_trees", "oob_error"], &rows)?;
    files.push(p);
    let p = out.join("error_vs_trees.svg");
    Plot::new("Out-of-bag prior error rate", "number of trees", "error")
        .with(Series::new(
            "OOB error",
            curve.iter().map(|&(n, e)| (n as f64, e)).collect(),
            Mark::Line,
            report::color(0),
        ))
        .save(&p)?;
    files.push(p);
    println!("oob_error {}", num(curve.last().map_or(f64::NAN, |c| c.1)));

    let st = subset_stability(t, fraction, c.forest().config())?;
    let p = out.join("subset_stability.csv");
    report::write_csv(
        &p,
        &["fraction", "subset_size", "full_error", "subset_error"],
        &[vec![num(fraction), st.subset_size.to_string(), num(st.full_error), num(st.subset_error)]],
    )?;
    files.push(p);
    println!("subset_stability full {} subset {}", num(st.full_error), num(st.subset_error));

    let imp = c.forest().importance().with_names(c.summary_names());
    let p = out.join("importance.csv");
    let rows: Vec<Vec<String>> = imp
        .entries
        .iter()
        .enumerate()
        .map(|(r, e)| vec![(r + 1).to_string(), e.name.clone(), num(e.importance)])
        .collect();
    report::write_csv(&p, &["rank", "summary", "importance"], &rows)?;
    files.push(p);
    let p = out.join("importance.svg");
    Plot::new("Mean decrease in impurity", "rank", "importance")
        .with(Series::new(
            "importance",
            imp.entries.iter().enumerate().map(|(r, e)| ((r + 1) as f64, e.importance)).collect(),
            Mark::Line,
            report::color(2),
        ))
        .save(&p)?;
    files.push(p);

    let proj = compatibility_projection(t, observed)?;
    let p = out.join("projection.csv");
    proj.write_csv(&p)?;
    files.push(p);
    let p = out.join("projection.svg");
    proj.plot().save(&p)?;
    files.push(p);
    println!("observed_within_simulated_range {}", proj.observed_within_ranges());

    let pts = ma_toy::discrepancy_experiment(n_series, pool, &ToyConfig::default(), seed)?;
    let p = out.join("discrepancy.csv");
    let rows: Vec<Vec<String>> = pts.iter().map(|d| vec![num(d.exact_ma2), num(d.summary_ma2)]).collect();
    report::write_csv(&p, &["exact_posterior_ma2", "summary_posterior_ma2"], &rows)?;
    files.push(p);
    let p = out.join("discrepancy.svg");
    discrepancy_plot(&pts).save(&p)?;
    files.push(p);
    let (ex, su): (Vec<f64>, Vec<f64>) = pts.iter().map(|d| (d.exact_ma2, d.summary_ma2)).unzip();
    println!(
        "discrepancy fraction_above_0.2 {} rank_correlation {}",
        num(ma_toy::discrepancy_fraction(&pts, 0.2)),
        num(stats::spearman(&ex, &su))
    );
    Ok(files)
}

/// Exact against summary-based posterior probability of MA(2).
pub fn discrepancy_plot(pts: &[ma_toy::DiscrepancyPoint]) -> Plot {
    let mut plot = Plot::new(
        "Posterior of MA(2): whole series vs two autocorrelations",
        "exact posterior",
        "summary-based posterior",
    );
    plot.diagonal = true;
    plot.x_range = Some((0.0, 1.0));
    plot.y_range = Some((0.0, 1.0));
    for m in [1, 2] {
        plot = plot.with(Series::new(
            format!("MA({m}) series"),
            pts.iter().filter(|d| d.model == m).map(|d| (d.exact_ma2, d.summary_ma2)).collect(),
            Mark::Dot,
            report::color(m - 1),
        ));
    }
    plot
}

fn replay(path: &Path, verify: bool) -> Result<()> {
    let m = RunManifest::load(path)?;
    if m.args.get(1).map(String::as_str) == Some("replay") || m.args.is_empty() {
        return Err(Error::Format("manifest does not record a replayable command".into()));
    }
    let before: Vec<Option<Vec<u8>>> = m.outputs.iter().map(|o| fs::read(o).ok()).collect();
    let code = run(&m.args);
    if code != EXIT_OK {
        return Err(Error::Format(format!("replayed command exited with {code}")));
    }
    if verify {
        let mut differing = vec![];
        for (o, b) in m.outputs.iter().zip(before) {
            if fs::read(o).ok() != b {
                differing.push(o.clone());
            }
        }
        if !differing.is_empty() {
            return Err(Error::Format(format!("outputs differ after replay: {}", differing.join(", "))));
        }
        println!("replay reproduced {} output(s) byte for byte", m.outputs.len());
    }
    Ok(())
}
