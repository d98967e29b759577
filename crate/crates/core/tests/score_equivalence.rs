use std::collections::HashMap;

use exonet::model::{standardize, Dataset, Hyper, StandardizedDataset};
use exonet::numerics::Matrix;
use exonet::scores::{MetricKind, Scorer};
use exonet::search::{enumerate_dags, equivalence_class, EquivalenceKey};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dataset(p: usize, n: usize, m: usize, seed: u64) -> StandardizedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = Matrix::from_fn(n, m, |_, _| rng.sample(StandardNormal));
    let effects = Matrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.8);
    let mut x = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal)) + &q * effects;
    for r in 0..n {
        for j in 1..p {
            let prev = x[(r, j - 1)];
            x[(r, j)] += 0.5 * prev;
        }
    }
    standardize(&Dataset::unnamed(x, q).unwrap()).unwrap()
}

fn max_class_spread(p: usize, ds: &StandardizedDataset, metric: MetricKind, h: &Hyper) -> f64 {
    let scorer = Scorer::new(metric, ds, h).unwrap();
    let mut groups: HashMap<EquivalenceKey, (f64, f64)> = HashMap::new();
    for g in enumerate_dags(p).unwrap() {
        let s = scorer.network(&g).unwrap();
        let e = groups.entry(equivalence_class(&g)).or_insert((s, s));
        e.0 = e.0.min(s);
        e.1 = e.1.max(s);
    }
    groups.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
}

#[test]
fn all_metrics_are_score_equivalent_on_four_nodes() {
    let h = Hyper::with_upsilon(1.0, 1.0, 0.5).unwrap();
    for seed in 0..3 {
        let ds = dataset(4, 25, 2, seed);
        for metric in MetricKind::ALL {
            let spread = max_class_spread(4, &ds, metric, &h);
            assert!(spread <= 1e-8, "{metric} seed {seed}: {spread}");
        }
    }
}

#[test]
fn hyperparameters_do_not_break_equivalence() {
    // Holds for any τ and δ because the prior is Wishart-consistent.
    let ds = dataset(3, 12, 1, 99);
    for (tau, delta) in [(0.1, 1.0), (2.0, 3.0), (10.0, 0.5)] {
        let h = Hyper::with_upsilon(tau, delta, 3.0).unwrap();
        for metric in MetricKind::ALL {
            assert!(max_class_spread(3, &ds, metric, &h) <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn three_node_classes_share_scores(seed in 0u64..1_000_000, n in 6usize..60, upsilon in 1e-3f64..1e2) {
        let m = 1 + (seed % 3) as usize;
        prop_assume!(n > m + 2);
        let ds = dataset(3, n, m, seed);
        let h = Hyper::with_upsilon(1.0, 1.0, upsilon).unwrap();
        for metric in MetricKind::ALL {
            prop_assert!(max_class_spread(3, &ds, metric, &h) <= 1e-8);
        }
    }
}
