// On a finite joint distribution of (model, summary), the expected error
// of any classifier given the summary equals one minus the posterior
// probability of the model it picks.
//
// `cargo run --example identity`

use abcrf::abcrf::{identity_check, identity_check_mc, DiscreteFixture};

pub fn run_example(n_draws: usize) -> abcrf::Result<()> {
    let fixture = DiscreteFixture::new(vec![
        vec![0.20, 0.10, 0.05, 0.05],
        vec![0.05, 0.10, 0.15, 0.10],
        vec![0.02, 0.03, 0.05, 0.10],
    ])?;
    let map = |s: usize| fixture.map_model(s);
    let always_one = |_: usize| 1;
    let parity = |s: usize| 1 + s % 3;
    for (name, clf) in [
        ("map", &map as &dyn Fn(usize) -> usize),
        ("constant", &always_one),
        ("parity", &parity),
    ] {
        let report = identity_check(&fixture, clf);
        let worst_z = identity_check_mc(&fixture, clf, n_draws, 1)
            .iter()
            .map(|r| r.z())
            .fold(0.0, f64::max);
        println!(
            "{name:<9} max |error + posterior - 1| = {:.1e}, Monte Carlo worst z = {worst_z:.2}",
            report.max_deviation()
        );
        assert!(report.holds(1e-12));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> abcrf::Result<()> {
    run_example(200_000)
}
