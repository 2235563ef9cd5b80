// Selects a model for one observed series, estimates the posterior
// probability of that choice and compares it with the exact posterior.
//
// `cargo run --release --example posterior -- 5000`

use abcrf::abcrf::{fit, posterior_probability, regression_config};
use abcrf::forest::ForestConfig;
use abcrf::ma_toy::{exact_posterior, generate_table, simulate, summarize_with, MaParams, ToyConfig};

pub fn run_example(n: usize) -> abcrf::Result<()> {
    let cfg = ToyConfig::default();
    let table = generate_table(n, &cfg, 3)?;
    let clf = fit(&table, &ForestConfig::with_seed(5).trees(200))?;

    for (label, params) in [("MA(1) 0.6", MaParams::ma1(0.6)), ("MA(2) 0.2, 0.6", MaParams::ma2(0.2, 0.6))] {
        let series = simulate(&params, &cfg, 99);
        let obs = summarize_with(&series, &cfg)?;
        let est = posterior_probability(&clf, &table, &obs, &regression_config(5).trees(200))?;
        let exact = exact_posterior(&series, &cfg)?;
        println!(
            "{label:<15} selected MA({}) votes {:?} posterior {:.3} exact {:.3}",
            est.selected_model,
            est.votes.counts,
            est.posterior_prob,
            exact.prob(est.selected_model)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5_000);
    run_example(n)
}
