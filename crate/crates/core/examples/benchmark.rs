// Prior error rates of every classifier on the MA benchmark. The default
// sizes are small; pass `10000` for the full-size run (a few minutes).
//
// `cargo run --release --example benchmark -- 10000`

use abcrf::benchmark::{run, write_outputs, BenchmarkSettings};

pub fn run_example(n: usize) -> abcrf::Result<()> {
    let s = BenchmarkSettings {
        n_train: n,
        n_valid: n,
        n_test: n,
        n_tree: if n >= 10_000 { 500 } else { 100 },
        with_oracle: n >= 1_000,
        knn_grid: [25, 50, 100, 200].into_iter().filter(|&k| k <= n).collect(),
        local_logit_grid: [50, 100, 200, 400].into_iter().filter(|&k| k <= n).collect(),
        ..Default::default()
    };
    let result = run(&s)?;
    for row in &result.rows {
        println!("{:<14} {:<12} {:6.2}%", row.method, row.setting, 100.0 * row.error);
    }
    println!("{:<14} {:<12} {:6.2}%", "rf out-of-bag", "", 100.0 * result.rf_oob_error);
    let dir = std::env::temp_dir().join("abcrf-examples/benchmark");
    let files = write_outputs(&result, &dir)?;
    println!("{} files in {}", files.len(), dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2_000);
    run_example(n)
}
