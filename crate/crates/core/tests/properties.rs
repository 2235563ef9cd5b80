//! Invariants checked on random inputs.

use abcrf::abcrf::{fit, identity_check, DiscreteFixture, ErrorRegressor};
use abcrf::cart::gini;
use abcrf::data::{load_table, save_table, ReferenceTable, SimulationRecord};
use abcrf::forest::{ForestConfig, VoteTally};
use abcrf::ma_toy::{autocovariances, sample_prior, simulate, summarize, MaParams, TimeSeries, ToyConfig};
use abcrf::rng;
use abcrf::stats::spearman;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gini_is_bounded(w in prop::collection::vec(0.0f64..10.0, 1..6)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = w.iter().map(|v| v / total).collect();
        let g = gini(&p).unwrap();
        prop_assert!(g >= -1e-15);
        prop_assert!(g <= 1.0 - 1.0 / p.len() as f64 + 1e-12);
    }

    #[test]
    fn tally_winner_is_first_maximum(counts in prop::collection::vec(0usize..20, 1..6)) {
        let t = VoteTally { counts: counts.clone() };
        let w = t.winner();
        let mx = *counts.iter().max().unwrap();
        prop_assert_eq!(counts[w], mx);
        prop_assert!(counts[..w].iter().all(|&c| c < mx));
        let expected = f64::from(u8::from(t.total() > 0));
        prop_assert!((t.fractions().iter().sum::<f64>() - expected).abs() < 1e-12);
    }

    #[test]
    fn prior_draws_stay_in_support(seed in any::<u64>(), model in 1usize..=2) {
        let p = sample_prior(model, seed).unwrap();
        prop_assert!(p.in_support());
        prop_assert_eq!(p, sample_prior(model, seed).unwrap());
    }

    #[test]
    fn sample_autocorrelations_are_at_most_one(seed in any::<u64>(), t1 in -0.99f64..0.99, len in 10usize..150) {
        let cfg = ToyConfig { series_length: len, ..ToyConfig::with_lags(5) };
        let x = simulate(&MaParams::ma1(t1), &cfg, seed);
        for a in summarize(&x, 5).unwrap() {
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
        let mean = x.values.iter().sum::<f64>() / len as f64;
        let var = x.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len as f64;
        let g = autocovariances(&x, 5).unwrap();
        prop_assert!(g.iter().all(|v| v.abs() <= var * (1.0 + 1e-12)));
    }

    #[test]
    fn autocorrelations_ignore_scale_and_shift(seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let x = simulate(&MaParams::ma2(0.3, 0.2), &ToyConfig::default(), seed);
        let y = TimeSeries { values: x.values.iter().map(|v| a * v + b).collect() };
        for (u, v) in summarize(&x, 7).unwrap().iter().zip(summarize(&y, 7).unwrap()) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn tables_survive_a_csv_round_trip(seed in any::<u64>(), n in 1usize..30, d in 1usize..5) {
        let mut r = rng::from_seed(seed);
        let recs = (0..n)
            .map(|_| {
                let s = (0..d).map(|_| r.random::<f64>() * 10f64.powi(r.random_range(-30..30)) - 0.5).collect();
                SimulationRecord::new(r.random_range(1..=3), vec![r.random_range(-1.0..1.0)], s)
            })
            .collect();
        let t = ReferenceTable::new(vec!["a".into()], (0..d).map(|j| format!("s{j}")).collect(), 3, recs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        save_table(&t, &p).unwrap();
        let back = load_table(&p).unwrap();
        prop_assert_eq!(back.records(), t.records());
        prop_assert_eq!(back.summary_names(), t.summary_names());
        prop_assert_eq!(back.param_names(), t.param_names());
    }

    #[test]
    fn identity_holds_for_random_fixtures(
        cells in prop::collection::vec(0.0f64..1.0, 12),
        picks in prop::collection::vec(1usize..=3, 4),
    ) {
        let total: f64 = cells.iter().sum();
        prop_assume!(total > 0.0);
        let joint: Vec<Vec<f64>> = cells.chunks(4).map(|c| c.iter().map(|v| v / total).collect()).collect();
        let f = DiscreteFixture::new(joint).unwrap();
        let report = identity_check(&f, &|s| picks[s]);
        prop_assert!(report.holds(1e-12), "deviation {}", report.max_deviation());
        let map = identity_check(&f, &|s| f.map_model(s));
        for (m, o) in map.rows.iter().zip(&report.rows) {
            prop_assert!(m.expected_error <= o.expected_error + 1e-12);
        }
    }

    #[test]
    fn rank_correlation_is_bounded_and_monotone_invariant(
        x in prop::collection::vec(-100.0f64..100.0, 3..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
    ) {
        let y: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| a + 30.0 * e).collect();
        let rho = spearman(&x, &y);
        prop_assume!(rho.is_finite());
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
        let ex: Vec<f64> = x.iter().map(|v| (v / 50.0).exp()).collect();
        prop_assert!((spearman(&ex, &y) - rho).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn forest_votes_and_posteriors_are_well_formed(seed in any::<u64>(), n_tree in 1usize..15) {
        let table = abcrf::ma_toy::generate_table(120, &ToyConfig::with_lags(3), seed).unwrap();
        prop_assume!(table.model_counts().iter().all(|&c| c > 0));
        let cfg = ForestConfig::with_seed(seed).trees(n_tree);
        let clf = fit(&table, &cfg).unwrap();
        let reg = ErrorRegressor::fit(&clf, &table, &ForestConfig::with_seed(seed).trees(10));
        for rec in table.records().iter().take(10) {
            let (m, tally) = clf.select(&rec.summaries).unwrap();
            prop_assert_eq!(tally.total(), n_tree);
            prop_assert_eq!(m, tally.winner() + 1);
            if let Ok(reg) = &reg {
                let p = reg.posterior(&clf, &rec.summaries).unwrap().posterior_prob;
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
        let again = fit(&table, &cfg).unwrap();
        prop_assert_eq!(again.forest().trees(), clf.forest().trees());
    }
}
