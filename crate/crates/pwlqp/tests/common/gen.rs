//! Randomized problem and iterate generators shared by the oracle tests.

use pwlqp::linalg::CscMatrix;
use pwlqp::problem::ProblemData;
use rand::Rng;

pub fn random_sparse<R: Rng>(
    rng: &mut R,
    nrows: usize,
    ncols: usize,
    density: f64,
    lo: f64,
    hi: f64,
) -> CscMatrix {
    let mut trips = Vec::new();
    for i in 0..nrows {
        for j in 0..ncols {
            if rng.gen::<f64>() < density {
                trips.push((i, j, rng.gen_range(lo..hi)));
            }
        }
    }
    CscMatrix::from_triplets(nrows, ncols, &trips).unwrap()
}

/// Random symmetric positive semidefinite matrix R^T R with a thin factor.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize, scale: f64) -> CscMatrix {
    let r = random_sparse(rng, rank.max(1), n, 0.6, -scale, scale);
    let mut trips = Vec::new();
    let rd = r.to_dense();
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..rank.max(1) {
                s += rd[k * n + i] * rd[k * n + j];
            }
            if s != 0.0 {
                trips.push((i, j, s));
            }
        }
    }
    CscMatrix::from_triplets(n, n, &trips).unwrap()
}

/// Problem with randomized structure: Q present or absent, mixed kink
/// weights, and boxes mixing free, one-sided and two-sided coordinates.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, l: usize, m: usize) -> ProblemData {
    let q = if rng.gen::<f64>() < 0.3 {
        CscMatrix::zeros(n, n)
    } else {
        random_psd(rng, n, n / 2 + 1, 1.0)
    };
    let c_mat = random_sparse(rng, l, n, 0.7, -2.0, 2.0);
    let a_mat = random_sparse(rng, m, n, 0.7, -1.0, 1.0);
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d_diag: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < 0.4 {
                0.0
            } else {
                rng.gen_range(0.1..1.5)
            }
        })
        .collect();
    let mut a_l = vec![f64::NEG_INFINITY; n];
    let mut a_u = vec![f64::INFINITY; n];
    for i in 0..n {
        match rng.gen_range(0..4) {
            0 => {}
            1 => a_l[i] = rng.gen_range(-2.0..0.0),
            2 => a_u[i] = rng.gen_range(0.0..2.0),
            _ => {
                let lo = rng.gen_range(-2.0..0.0);
                a_l[i] = lo;
                a_u[i] = lo + rng.gen_range(0.2..2.0);
            }
        }
    }
    ProblemData::new(c, q, c_mat, d, a_mat, b, d_diag, a_l, a_u, 0.0)
}

/// Feasible bounded instance for solver-vs-oracle comparisons: finite boxes
/// with zero in the interior, equality right-hand side generated from an
/// interior point, and a positive-semidefinite quadratic.
pub fn feasible_instance<R: Rng>(rng: &mut R, n: usize, l: usize, m: usize) -> ProblemData {
    let mut a_l = vec![0f64; n];
    let mut a_u = vec![0f64; n];
    for i in 0..n {
        a_l[i] = -rng.gen_range(0.5..2.0);
        a_u[i] = rng.gen_range(0.5..2.0);
    }
    let x0: Vec<f64> = (0..n)
        .map(|i| rng.gen_range(0.6 * a_l[i]..0.6 * a_u[i]))
        .collect();
    let q = match rng.gen_range(0..3) {
        0 => CscMatrix::zeros(n, n),
        1 => random_psd(rng, n, n / 2 + 1, 1.0),
        _ => {
            let base = random_psd(rng, n, n, 0.8);
            let mut trips: Vec<(usize, usize, f64)> = base.iter().collect();
            for i in 0..n {
                trips.push((i, i, 0.1));
            }
            CscMatrix::from_triplets(n, n, &trips).unwrap()
        }
    };
    let c_mat = random_sparse(rng, l, n, 0.8, -1.5, 1.5);
    let a_mat = random_sparse(rng, m, n, 0.9, -1.0, 1.0);
    let mut b = vec![0f64; m];
    a_mat.matvec(&x0, &mut b);
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d_diag: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < 0.4 {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect();
    ProblemData::new(c, q, c_mat, d, a_mat, b, d_diag, a_l, a_u, 0.0)
}

/// Random iterate, anchors, and penalty triple for the Newton-system tests.
pub struct NewtonState {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub x_anchor: Vec<f64>,
    pub y_anchor: Vec<f64>,
    pub z_anchor: Vec<f64>,
    pub beta: f64,
    pub rho: f64,
    pub zeta: f64,
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize, l: usize, m: usize) -> NewtonState {
    let unif = |rng: &mut R, k: usize| -> Vec<f64> {
        (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect()
    };
    let beta = [0.5, 2.0, 10.0][rng.gen_range(0..3)];
    let rho = [1.0, 50.0][rng.gen_range(0..2)];
    NewtonState {
        x: unif(rng, n),
        w: unif(rng, l),
        y: unif(rng, l + m),
        x_anchor: unif(rng, n),
        y_anchor: unif(rng, l + m),
        z_anchor: unif(rng, n),
        beta,
        rho,
        zeta: 1.0f64.min(1.0 / beta),
    }
}
