//! Build a problem by hand, round-trip it through the JSON interchange
//! format, and solve the loaded copy.
//!
//!   minimize  x0 + 0.5 x0^2 + (x0 + x1 - 1)_+ + 2|x1|
//!   subject to  x0 + x1 >= 0  encoded via the box after an equality lift,
//!               -2 <= x0, x1 <= 2.

use pwlqp::io::{load_problem_json, write_problem_json};
use pwlqp::linalg::CscMatrix;
use pwlqp::pmm::{pmm_solve, PenaltySchedule};
use pwlqp::problem::{Iterate, ProblemData};

fn main() {
    let n = 2;
    let c = vec![1.0, 0.0];
    let q = CscMatrix::from_dense(n, n, &[1.0, 0.0, 0.0, 0.0]);
    let c_mat = CscMatrix::from_dense(1, n, &[1.0, 1.0]);
    let d = vec![-1.0];
    let a_mat = CscMatrix::zeros(0, n);
    let b = vec![];
    let d_diag = vec![0.0, 2.0];
    let p = ProblemData::new(
        c,
        q,
        c_mat,
        d,
        a_mat,
        b,
        d_diag,
        vec![-2.0, -2.0],
        vec![2.0, 2.0],
        0.0,
    );

    let dir = std::env::temp_dir().join("pwlqp_raw_problem_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("problem.json");
    write_problem_json(&path, &p).expect("serialize");
    let loaded = load_problem_json(&path).expect("parse and validate");
    assert_eq!(loaded, p);

    let (it, report) = pmm_solve(&loaded, Iterate::zeros(&loaded), &PenaltySchedule::default(), 1e-8);
    assert_eq!(report.status.to_string(), "optimal");
    println!("wrote {}", path.display());
    println!("solved in {}", report.counters());
    println!("x* = [{:.6}, {:.6}]", it.x[0], it.x[1]);
    println!("objective = {:.9}", report.objective);

    // The unconstrained minimizer of x0 + x0^2/2 alone is x0 = -1; the hinge
    // and the weighted |x1| keep x1 at zero, so check against that by hand.
    let by_hand = loaded.objective(&[-1.0, 0.0], &[-2.0]);
    assert!((report.objective - by_hand).abs() <= 1e-6);
}
