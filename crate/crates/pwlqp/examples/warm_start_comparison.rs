//! Cold start versus proximal-ADMM warm start on a portfolio-sized
//! tail-risk instance, over a handful of seeds.

use pwlqp::model::{build_cvar, synthetic_returns};
use pwlqp::pmm::{pmm_solve, PenaltySchedule};
use pwlqp::problem::Iterate;
use pwlqp::warmstart::{admm_warmstart, auto_variant, AdmmConfig};

fn main() {
    let sched = PenaltySchedule::default();
    let tol = 1e-5;

    println!(
        "{:>5}  {:>16}  {:>16}  {:>7}",
        "seed", "cold PMM(SSN)", "warm PMM(SSN)", "sweeps"
    );
    let mut warm_wins = 0usize;
    let seeds: Vec<u64> = (1..=6).collect();
    for &seed in &seeds {
        let ds = synthetic_returns(28, 1363, seed);
        let p = build_cvar(&ds, 0.05, 1e-2, &[-1.0; 28], &[0.6; 28]).expect("valid parameters");

        let (_, cold) = pmm_solve(&p, Iterate::zeros(&p), &sched, tol);
        assert_eq!(cold.status.to_string(), "optimal");

        let cfg = AdmmConfig {
            variant: auto_variant(&p),
            ..AdmmConfig::default()
        };
        let ws = admm_warmstart(&p, &cfg).expect("factorizable");
        let (_, warm) = pmm_solve(&p, ws.start.clone(), &sched, tol);
        assert_eq!(warm.status.to_string(), "optimal");

        if warm.inner_iters_total < cold.inner_iters_total {
            warm_wins += 1;
        }
        println!(
            "{:>5}  {:>16}  {:>16}  {:>7}",
            seed,
            cold.counters(),
            warm.counters(),
            ws.iterations
        );
    }
    println!(
        "warm start needed fewer Newton steps on {}/{} seeds",
        warm_wins,
        seeds.len()
    );
    assert!(warm_wins * 2 > seeds.len(), "warm start should usually help");
}
