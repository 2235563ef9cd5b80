// Simulates an MA(1)/MA(2) reference table, writes it as CSV and reads it back.
//
// `cargo run --release --example simulate_table -- 5000`

use abcrf::data::{load_table, save_table};
use abcrf::ma_toy::{generate_table, ToyConfig};

pub fn run_example(n: usize) -> abcrf::Result<()> {
    let cfg = ToyConfig::default();
    let table = generate_table(n, &cfg, 42)?;
    let dir = std::env::temp_dir().join("abcrf-examples");
    std::fs::create_dir_all(&dir).map_err(|e| abcrf::Error::io(&dir, e))?;
    let path = dir.join("toy_table.csv");
    save_table(&table, &path)?;
    let back = load_table(&path)?;
    assert_eq!(back, table);

    println!("{} records, {} summaries: {:?}", table.len(), table.n_summaries(), table.summary_names());
    println!("records per model: {:?}", table.model_counts());
    for r in table.records().iter().take(3) {
        println!("model {} theta {:?} first lags {:.3?}", r.model, r.params, &r.summaries[..3]);
    }
    println!("written to {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5_000);
    run_example(n)
}
