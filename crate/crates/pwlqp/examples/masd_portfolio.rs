//! Mean absolute semideviation portfolio from a CSV returns file.
//!
//! Round-trips the data through the CSV loader (header row included) before
//! building the model, which is exactly the path the command-line front end
//! takes with --data.

use pwlqp::io::parse_returns_csv;
use pwlqp::model::{build_masd, synthetic_returns};
use pwlqp::pmm::{pmm_solve, PenaltySchedule};
use pwlqp::problem::Iterate;
use std::fmt::Write;

fn main() {
    let raw = synthetic_returns(6, 200, 21);
    let mut csv = String::from("fin,tech,energy,health,retail,utils\n");
    for i in 0..raw.n_scenarios() {
        let cells: Vec<String> = raw.scenario(i).iter().map(|v| v.to_string()).collect();
        writeln!(csv, "{}", cells.join(",")).unwrap();
    }

    let ds = parse_returns_csv(&csv).expect("well-formed file");
    assert_eq!(ds.n_assets(), 6);
    let p = build_masd(&ds, 5e-3, &[-1.0; 6], &[0.6; 6]).expect("valid parameters");
    let (it, report) = pmm_solve(&p, Iterate::zeros(&p), &PenaltySchedule::default(), 1e-6);

    println!("status     {}", report.status);
    println!("risk       {:.6}", report.objective);
    println!("counters   {}", report.counters());
    println!("\nweights");
    for (name, w) in ["fin", "tech", "energy", "health", "retail", "utils"]
        .iter()
        .zip(&it.x)
    {
        println!("  {name:<8} {w:>8.4}");
    }
    let total: f64 = it.x[..6].iter().sum();
    println!("  sum      {total:>8.4}");
}
