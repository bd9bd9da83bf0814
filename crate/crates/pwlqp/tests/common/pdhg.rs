//! First-order oracle branch: the nonsmooth problem is rewritten as a smooth
//! bound-constrained QP by splitting x and w into positive and negative
//! parts, then solved by a long-run projected primal-dual iteration. An
//! approximate point is periodically promoted to an exact certified solution
//! through the pattern polish in `kkt`.

use super::kkt::{objective_naive, polish, OracleSolution};
use pwlqp::problem::ProblemData;

struct Split {
    n: usize,
    l: usize,
    m: usize,
    q: Vec<f64>,
    c_mat: Vec<f64>,
    a_mat: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    grad0: Vec<f64>,
    rhs: Vec<f64>,
}

impl Split {
    fn new(p: &ProblemData) -> Self {
        let (n, l, m) = (p.n(), p.l(), p.m());
        let mut lo = vec![0f64; 2 * n + 2 * l];
        let mut hi = vec![f64::INFINITY; 2 * n + 2 * l];
        for i in 0..n {
            lo[i] = p.a_l[i].max(0.0);
            hi[i] = p.a_u[i].max(0.0);
            lo[n + i] = (-p.a_u[i]).max(0.0);
            hi[n + i] = (-p.a_l[i]).max(0.0);
        }
        // w+ and w- keep [0, inf).
        let mut grad0 = vec![0f64; 2 * n + 2 * l];
        for i in 0..n {
            grad0[i] = p.c[i] + p.d_diag[i];
            grad0[n + i] = -p.c[i] + p.d_diag[i];
        }
        for j in 0..l {
            grad0[2 * n + j] = 1.0;
        }
        let mut rhs = vec![0f64; l + m];
        for j in 0..l {
            rhs[j] = -p.d[j];
        }
        rhs[l..].copy_from_slice(&p.b);
        Split {
            n,
            l,
            m,
            q: p.q.to_dense(),
            c_mat: p.c_mat.to_dense(),
            a_mat: p.a_mat.to_dense(),
            lo,
            hi,
            grad0,
            rhs,
        }
    }

    fn x_of(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| xi[i] - xi[self.n + i]).collect()
    }

    /// grad q(xi) = grad0 + [Q(x+ - x-); -Q(x+ - x-); 0; 0].
    fn gradient(&self, xi: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.grad0);
        let n = self.n;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.q[i * n + j] * (xi[j] - xi[n + j]);
            }
            out[i] += s;
            out[n + i] -= s;
        }
    }

    /// E xi with rows [C(x+ - x-) - w+ + w-; A(x+ - x-)].
    fn e_apply(&self, xi: &[f64], out: &mut [f64]) {
        let (n, l, m) = (self.n, self.l, self.m);
        for j in 0..l {
            let mut s = -xi[2 * n + j] + xi[2 * n + l + j];
            for i in 0..n {
                s += self.c_mat[j * n + i] * (xi[i] - xi[n + i]);
            }
            out[j] = s;
        }
        for t in 0..m {
            let mut s = 0.0;
            for i in 0..n {
                s += self.a_mat[t * n + i] * (xi[i] - xi[n + i]);
            }
            out[l + t] = s;
        }
    }

    /// E' lam accumulated into out (which holds the gradient already).
    fn e_transpose_add(&self, lam: &[f64], out: &mut [f64]) {
        let (n, l, m) = (self.n, self.l, self.m);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..l {
                s += self.c_mat[j * n + i] * lam[j];
            }
            for t in 0..m {
                s += self.a_mat[t * n + i] * lam[l + t];
            }
            out[i] += s;
            out[n + i] -= s;
        }
        for j in 0..l {
            out[2 * n + j] -= lam[j];
            out[2 * n + l + j] += lam[j];
        }
    }

    fn project(&self, xi: &mut [f64]) {
        for i in 0..xi.len() {
            xi[i] = xi[i].clamp(self.lo[i], self.hi[i]);
        }
    }
}

/// Spectral norm estimate of xi -> E xi by power iteration on E'E.
fn norm_e_est(sp: &Split) -> f64 {
    let dim = 2 * sp.n + 2 * sp.l;
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let mut ev = vec![0f64; sp.l + sp.m];
    let mut back = vec![0f64; dim];
    let mut lam = 0.0;
    for _ in 0..100 {
        let nv = super::dense::norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        sp.e_apply(&v, &mut ev);
        back.fill(0.0);
        sp.e_transpose_add(&ev, &mut back);
        lam = super::dense::norm2(&back);
        v.copy_from_slice(&back);
    }
    lam.sqrt()
}

/// Largest eigenvalue estimate of the split quadratic (2 * ||Q||).
fn lipschitz_est(sp: &Split) -> f64 {
    let n = sp.n;
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let mut lam = 0.0;
    for _ in 0..100 {
        let nv = super::dense::norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        let mut qv = vec![0f64; n];
        for i in 0..n {
            for j in 0..n {
                qv[i] += sp.q[i * n + j] * v[j];
            }
        }
        lam = super::dense::norm2(&qv);
        v = qv;
    }
    2.0 * lam
}

/// Long-run projected primal-dual solve. Returns the solution and whether it
/// was certified exactly by the pattern polish.
pub fn pdhg_oracle(p: &ProblemData, max_iters: usize) -> (OracleSolution, bool) {
    let sp = Split::new(p);
    let dim = 2 * sp.n + 2 * sp.l;
    let ne = norm_e_est(&sp).max(1e-8);
    let lq = lipschitz_est(&sp);
    let sigma = 1.0 / ne;
    let tau = 0.99 / (0.5 * lq + sigma * ne * ne);

    let mut xi = vec![0f64; dim];
    sp.project(&mut xi);
    let mut lam = vec![0f64; sp.l + sp.m];
    let mut grad = vec![0f64; dim];
    let mut exi = vec![0f64; sp.l + sp.m];
    let mut xi_new = vec![0f64; dim];

    let check_every = 2000;
    for it in 0..max_iters {
        sp.gradient(&xi, &mut grad);
        sp.e_transpose_add(&lam, &mut grad);
        for i in 0..dim {
            xi_new[i] = xi[i] - tau * grad[i];
        }
        sp.project(&mut xi_new);
        // Dual ascent at the extrapolated point 2 xi_new - xi.
        let relax: Vec<f64> = (0..dim).map(|i| 2.0 * xi_new[i] - xi[i]).collect();
        sp.e_apply(&relax, &mut exi);
        for r in 0..lam.len() {
            lam[r] += sigma * (exi[r] - sp.rhs[r]);
        }
        let moved = xi
            .iter()
            .zip(&xi_new)
            .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        xi.copy_from_slice(&xi_new);

        if (it + 1) % check_every == 0 || moved < 1e-14 {
            let x = sp.x_of(&xi);
            for dt in [1e-6, 1e-5, 1e-4] {
                if let Some(sol) = polish(p, &x, dt, 1e-7) {
                    return (sol, true);
                }
            }
            if moved < 1e-14 {
                break;
            }
        }
    }
    // No certified pattern: report the raw long-run point with w recomputed
    // from the coupling rows.
    let x = sp.x_of(&xi);
    let mut w = vec![0f64; sp.l];
    for j in 0..sp.l {
        w[j] = p.d[j] + (0..sp.n).map(|i| sp.c_mat[j * sp.n + i] * x[i]).sum::<f64>();
    }
    let objective = objective_naive(p, &x, &w);
    (OracleSolution { x, w, objective }, false)
}

/// Oracle entry point: exhaustive enumeration when the pattern space is
/// small, long-run first-order otherwise. The bool reports certification.
pub fn oracle_solve(p: &ProblemData) -> (OracleSolution, bool) {
    if p.n() + p.l() <= 8 {
        if let Some(sol) = super::kkt::enumerate_oracle(p, 1e-8) {
            return (sol, true);
        }
    }
    pdhg_oracle(p, 1_000_000)
}

/// Primal feasibility of an oracle point, for sanity checks.
pub fn feasibility_inf(p: &ProblemData, x: &[f64], w: &[f64]) -> f64 {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let cd = p.c_mat.to_dense();
    let ad = p.a_mat.to_dense();
    let mut worst = 0.0f64;
    for j in 0..l {
        let mut s = p.d[j] - w[j];
        for i in 0..n {
            s += cd[j * n + i] * x[i];
        }
        worst = worst.max(s.abs());
    }
    for t in 0..m {
        let mut s = -p.b[t];
        for i in 0..n {
            s += ad[t * n + i] * x[i];
        }
        worst = worst.max(s.abs());
    }
    let boxv: f64 = (0..n)
        .map(|i| (p.a_l[i] - x[i]).max(0.0).max(x[i] - p.a_u[i]))
        .fold(0.0, f64::max);
    worst.max(boxv)
}
