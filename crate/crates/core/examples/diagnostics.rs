// Diagnostics of a trained forest: error against the number of trees,
// stability on a subset, an LDA projection of the table with the observed
// point, and the exact versus two-autocorrelation posterior scatter.
//
// `cargo run --release --example diagnostics -- 5000`

use abcrf::abcrf::{classification_view, compatibility_projection, fit, subset_stability};
use abcrf::cli::discrepancy_plot;
use abcrf::forest::ForestConfig;
use abcrf::ma_toy::{discrepancy_experiment, discrepancy_fraction, generate_table, ToyConfig};
use abcrf::report::{color, Mark, Plot, Series};
use abcrf::stats::spearman;

pub fn run_example(n: usize) -> abcrf::Result<()> {
    let toy = ToyConfig::default();
    let table = generate_table(n, &toy, 8)?;
    let cfg = ForestConfig::with_seed(8).trees(100);
    let clf = fit(&table, &cfg)?;
    let dir = std::env::temp_dir().join("abcrf-examples/diagnostics");
    std::fs::create_dir_all(&dir).map_err(|e| abcrf::Error::io(&dir, e))?;

    let curve = clf.forest().oob_error_vs_trees(&classification_view(&table)?)?;
    Plot::new("Out-of-bag error", "trees", "error")
        .with(Series::new("oob", curve.iter().map(|&(t, e)| (t as f64, e)).collect(), Mark::Line, color(0)))
        .save(dir.join("error_vs_trees.svg"))?;

    let st = subset_stability(&table, 0.8, &cfg)?;
    println!("oob error: full {:.4}, 80% subset {:.4}", st.full_error, st.subset_error);

    let observed = table.records()[0].summaries.clone();
    let proj = compatibility_projection(&table, &observed)?;
    proj.plot().save(dir.join("projection.svg"))?;
    println!("observed inside simulated LDA range: {}", proj.observed_within_ranges());

    let pts = discrepancy_experiment(n / 20, 20 * n, &toy, 8)?;
    discrepancy_plot(&pts).save(dir.join("discrepancy.svg"))?;
    let (ex, su): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p.exact_ma2, p.summary_ma2)).unzip();
    println!(
        "{} series: {:.1}% differ by more than 0.2, rank correlation {:.3}",
        pts.len(),
        100.0 * discrepancy_fraction(&pts, 0.2),
        spearman(&ex, &su)
    );
    println!("figures in {}", dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5_000);
    run_example(n)
}
