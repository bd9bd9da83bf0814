//! Quantile regression across several quantile levels on one synthetic set.
//!
//! The noise scale grows with the feature, so higher quantile levels must tilt
//! the fitted line upward: the slopes come out ordered.

use pwlqp::model::{build_quantile, LabeledDataset};
use pwlqp::pmm::{pmm_solve, PenaltySchedule, SolveStatus};
use pwlqp::problem::Iterate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n_points = 400;
    let mut features = Vec::with_capacity(n_points);
    let mut targets = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let x: f64 = rng.gen::<f64>() * 4.0;
        let spread = 0.2 + 0.5 * x;
        let noise = if rng.gen::<bool>() { spread } else { -spread };
        features.push(vec![(0usize, x)]);
        targets.push(1.0 + 0.8 * x + noise * rng.gen::<f64>());
    }
    let ds = LabeledDataset::new(features, 1, targets).expect("consistent rows");

    println!(" alpha   intercept     slope  PMM(SSN)[Fact.]");
    let mut slopes = Vec::new();
    for alpha in [0.5, 0.65, 0.8, 0.95] {
        let p = build_quantile(&ds, alpha, 1e-2, 0.5).expect("valid parameters");
        let start = Iterate::zeros(&p);
        let (it, report) = pmm_solve(&p, start, &PenaltySchedule::default(), 1e-6);
        assert_eq!(report.status, SolveStatus::Optimal, "alpha = {alpha}");
        println!(
            "  {alpha:.2}  {:>10.4}  {:>8.4}  {:>6}({})[{}]",
            it.x[0], it.x[1], report.outer_iters, report.inner_iters_total, report.factorizations
        );
        slopes.push(it.x[1]);
    }
    // Wider spread above the median pushes high-quantile fits steeper.
    assert!(
        slopes.windows(2).all(|s| s[0] <= s[1] + 1e-6),
        "slopes must be nondecreasing in the quantile level: {slopes:?}"
    );
}
