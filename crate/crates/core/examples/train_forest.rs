// Trains the model-choice forest, prints its out-of-bag report and the
// most useful summaries, then round-trips the model file.
//
// `cargo run --release --example train_forest -- 5000`

use abcrf::abcrf::{fit, AbcRfClassifier};
use abcrf::forest::ForestConfig;
use abcrf::ma_toy::{generate_table, ToyConfig};

pub fn run_example(n: usize) -> abcrf::Result<()> {
    let table = generate_table(n, &ToyConfig::default(), 7)?;
    let cfg = ForestConfig::with_seed(11).trees(200);
    let clf = fit(&table, &cfg)?;

    let oob = clf.oob_report(&table)?;
    println!("out-of-bag error {:.4} over {} records", oob.error, oob.n_evaluated);
    for (m, row) in oob.confusion.iter().enumerate() {
        println!("  true MA({}) -> {:?}", m + 1, row);
    }
    let imp = clf.forest().importance().with_names(clf.summary_names());
    for e in imp.entries.iter().take(3) {
        println!("  {:<4} {:.2}", e.name, e.importance);
    }
    let curve = clf.forest().oob_error_vs_trees(&abcrf::abcrf::classification_view(&table)?)?;
    println!("error after 10 trees {:.4}, after {} trees {:.4}", curve[9].1, curve.len(), curve[curve.len() - 1].1);

    let mut buf = Vec::new();
    clf.write_to(&mut buf).map_err(|e| abcrf::Error::io("<memory>", e))?;
    let back = AbcRfClassifier::read_from(&mut buf.as_slice())?;
    let probe = &table.records()[0].summaries;
    assert_eq!(back.select(probe)?, clf.select(probe)?);
    println!("model file: {} bytes", buf.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5_000);
    run_example(n)
}
