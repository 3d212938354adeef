//! Inputs shared by the benchmarks in `benches/`.

use gemith::dataset::{make_fold_plan, synthetic_friedman1};
use gemith::{Dataset, FoldPlan, HyperConfig, OobMatrix};

/// Friedman #1 rows with a five-fold plan.
pub fn friedman_problem(n: usize, seed: u64) -> (Dataset, FoldPlan) {
    let ds = synthetic_friedman1(n, 1.0, seed).expect("valid size");
    let plan = make_fold_plan(n, 5, seed ^ 0x5eed).expect("n >= 5");
    (ds, plan)
}

/// `k` noisy, biased copies of a Friedman target, as a blending problem.
pub fn blending_problem(n: usize, k: usize, seed: u64) -> OobMatrix {
    let ds = synthetic_friedman1(n, 1.0, seed).expect("valid size");
    let y = ds.target().to_vec();
    let columns = (0..k)
        .map(|j| {
            let noisy = synthetic_friedman1(n, 1.0 + j as f64, seed + 1 + j as u64).expect("valid size");
            y.iter().zip(noisy.target()).map(|(a, b)| 0.7 * a + 0.3 * b + 0.1 * j as f64).collect()
        })
        .collect();
    OobMatrix::from_columns(columns, y).expect("consistent shapes")
}

/// `b` ridge and `b` tree configurations.
pub fn ridge_tree_candidates(b: usize) -> Vec<Vec<HyperConfig>> {
    vec![
        (0..b).map(|i| HyperConfig::ridge(10f64.powf(-5.0 * i as f64 / b as f64))).collect(),
        (0..b).map(|i| HyperConfig::tree(4 + i as i64)).collect(),
    ]
}
