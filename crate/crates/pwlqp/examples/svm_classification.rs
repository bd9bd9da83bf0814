//! Elastic-net linear support vector machine on two Gaussian blobs.

use pwlqp::model::{build_svm, LabeledDataset};
use pwlqp::pmm::{pmm_solve, PenaltySchedule};
use pwlqp::problem::Iterate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cloud = Normal::new(0.0, 0.7).unwrap();
    let per_class = 150;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for &(cx, cy, label) in &[(-1.5, -1.0, -1.0), (1.5, 1.0, 1.0)] {
        for _ in 0..per_class {
            let x = cx + cloud.sample(&mut rng);
            let y = cy + cloud.sample(&mut rng);
            features.push(vec![(0usize, x), (1usize, y)]);
            labels.push(label);
        }
    }
    let ds = LabeledDataset::new(features, 2, labels).expect("consistent rows");

    let p = build_svm(&ds, 1e-2, 0.5, 0.5).expect("valid parameters");
    let (it, report) = pmm_solve(&p, Iterate::zeros(&p), &PenaltySchedule::default(), 1e-6);
    assert_eq!(report.status.to_string(), "optimal");

    // Decision rule: sign(beta . xi - beta0).
    let beta0 = it.x[0];
    let beta = &it.x[1..];
    let mut correct = 0usize;
    for (row, &label) in ds.features.iter().zip(&ds.targets) {
        let score: f64 = row.iter().map(|&(j, v)| beta[j] * v).sum::<f64>() - beta0;
        if score.signum() == label.signum() {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / ds.targets.len() as f64;

    println!("solved in {}", report.counters());
    println!("hyperplane  {:.4} x + {:.4} y = {:.4}", beta[0], beta[1], beta0);
    println!("training accuracy  {:.1}%", 100.0 * accuracy);
    assert!(accuracy > 0.9, "blobs are well separated");
}
