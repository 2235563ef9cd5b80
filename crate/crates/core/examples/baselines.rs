// Prior error rates of the comparison classifiers on held-out records.
//
// `cargo run --release --example baselines -- 4000`

use abcrf::abcrf::prior_error_rate;
use abcrf::baselines::{
    calibrate_k, knn_fit, lda_fit, local_logit_fit, logit_fit, naive_bayes_fit, NeighborFamily,
};
use abcrf::ma_toy::{generate_table, SummaryKind, ToyConfig};

pub fn run_example(n: usize) -> abcrf::Result<()> {
    let cfg = ToyConfig::default().with_summary(SummaryKind::Autocovariance);
    let train = generate_table(n, &cfg, 1)?;
    let valid = generate_table(n / 2, &cfg, 2)?;
    let test = generate_table(n / 2, &cfg, 3)?;

    let knn_k = calibrate_k(NeighborFamily::Knn, &train, &valid, &[10, 25, 50, 100])?.selected_k;
    let ll_k = calibrate_k(NeighborFamily::LocalLogit, &train, &valid, &[50, 100, 200])?.selected_k;

    println!("lda          {:.4}", prior_error_rate(&lda_fit(&train)?, &test)?.rate);
    println!("logistic     {:.4}", prior_error_rate(&logit_fit(&train)?, &test)?.rate);
    println!("naive bayes  {:.4}", prior_error_rate(&naive_bayes_fit(&train)?, &test)?.rate);
    println!("knn k={knn_k:<5} {:.4}", prior_error_rate(&knn_fit(&train, knn_k)?, &test)?.rate);
    println!("local k={ll_k:<3} {:.4}", prior_error_rate(&local_logit_fit(&train, ll_k)?, &test)?.rate);
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4_000);
    run_example(n)
}
