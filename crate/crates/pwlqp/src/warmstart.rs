//! Proximal ADMM warm start.
//!
//! The problem is split through an artificial copy u of (x, w): the smooth
//! quadratic stays on (x, w), the piecewise terms and the box move to u, and
//! linking rows tie the two. The constraint stack is
//!
//! ```text
//!       [ C  -I   0 ] [x]   [-d]
//! M_r = [ A   0   0 ] [w] = [ b]      dual y = (y_c, y_a, y_link)
//!       [-I  -I   I ] [u]   [ 0]
//! ```
//!
//! A few cheap sweeps produce a coarse primal-dual point that the main solver
//! starts from, usually close enough that the first active sets are right.
//! The (x, w) block update either factors one constant positive definite
//! matrix (diagonal regularizer) or stays matrix-free with a diagonal system
//! (prox-linear regularizer).

use crate::linalg::{factorize, norm2, CscMatrix, Factorization};
use crate::problem::{Iterate, ProblemData};
use crate::prox::{project_box, project_subdiff_g, prox_g1, prox_g2};

/// Regularizer choice for the (x, w) block update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmmVariant {
    /// R = DIAGONAL_R_EPS * I; one sparse positive definite factorization,
    /// reused across sweeps.
    Diagonal,
    /// Prox-linear R cancels every off-diagonal of the normal matrix; the
    /// update is matrix-vector products and a diagonal solve.
    ProxLinear,
}

pub const DIAGONAL_R_EPS: f64 = 1e-4;

/// Estimated normal-product fill above which the diagonal variant would form
/// an uncomfortably dense matrix.
const NORMAL_NNZ_BUDGET: usize = 5_000_000;

#[derive(Debug, Clone)]
pub struct AdmmConfig {
    pub sigma: f64,
    /// Relaxation in (0, (1+sqrt 5)/2).
    pub gamma: f64,
    pub variant: AdmmVariant,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            sigma: 1.0,
            gamma: 1.5,
            variant: AdmmVariant::Diagonal,
            max_iter: 100,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WarmstartResult {
    pub start: Iterate,
    pub iterations: u64,
    pub residuals: [f64; 4],
    pub converged: bool,
}

/// Picks the regularizer from the estimated fill of C^T C + A^T A: each
/// constraint row with k nonzeros contributes k^2 products.
pub fn auto_variant(p: &ProblemData) -> AdmmVariant {
    let mut row_counts = vec![0usize; p.l() + p.m()];
    for (i, _, _) in p.c_mat.iter() {
        row_counts[i] += 1;
    }
    for (i, _, _) in p.a_mat.iter() {
        row_counts[p.l() + i] += 1;
    }
    let est: usize = row_counts.iter().map(|k| k.saturating_mul(*k)).sum();
    if est > NORMAL_NNZ_BUDGET {
        AdmmVariant::ProxLinear
    } else {
        AdmmVariant::Diagonal
    }
}

fn q_diag(p: &ProblemData) -> Vec<f64> {
    let n = p.n();
    let mut d = vec![0f64; n];
    for j in 0..n {
        let (rows, vals) = p.q.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            if i == j {
                d[j] = v;
            }
        }
    }
    d
}

/// Applies the symmetric operator the prox-linear regularizer subtracts:
/// [C^T C + A^T A + sigma^-1 Off(Q), -C^T; -C, 0].
fn normal_off_apply(p: &ProblemData, sigma: f64, s: &[f64]) -> Vec<f64> {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let mut out = vec![0f64; n + l];
    let mut cs = vec![0f64; l];
    p.c_mat.matvec(&s[..n], &mut cs);
    p.c_mat_t().matvec_add(1.0, &cs, &mut out[..n]);
    let mut asx = vec![0f64; m];
    p.a_mat.matvec(&s[..n], &mut asx);
    p.a_mat_t().matvec_add(1.0, &asx, &mut out[..n]);
    let mut qs = vec![0f64; n];
    p.q.matvec(&s[..n], &mut qs);
    let dq = q_diag(p);
    for i in 0..n {
        out[i] += (qs[i] - dq[i] * s[i]) / sigma;
    }
    p.c_mat_t().matvec_add(-1.0, &s[n..], &mut out[..n]);
    for (j, v) in cs.iter().enumerate() {
        out[n + j] = -v;
    }
    out
}

/// Power-iteration bound for the prox-linear shift; 100 rounds from a fixed
/// deterministic start.
fn sigma_hat_for(p: &ProblemData, sigma: f64) -> f64 {
    let dim = p.n() + p.l();
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let nv = norm2(&v);
    for e in v.iter_mut() {
        *e /= nv;
    }
    let mut lam = 0f64;
    for _ in 0..100 {
        let bv = normal_off_apply(p, sigma, &v);
        let nb = norm2(&bv);
        if nb <= 1e-300 {
            lam = 0.0;
            break;
        }
        lam = nb;
        v = bv;
        for e in v.iter_mut() {
            *e /= nb;
        }
    }
    (1.1 * sigma * lam).max(1e-6)
}

enum XwSolver {
    Diagonal(Factorization),
    ProxLinear { sigma_hat: f64, diag: Vec<f64> },
}

/// Upper triangle of Q~ + sigma G^T G + eps I, the constant diagonal-variant
/// system [Q + sigma (C^T C + A^T A) + (sigma+eps) I, -sigma C^T; ., (2 sigma + eps) I].
fn diagonal_system(p: &ProblemData, sigma: f64, eps: f64) -> CscMatrix {
    let (n, l) = (p.n(), p.l());
    let dim = n + l;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut acc = vec![0f64; n];
    for j in 0..n {
        acc.fill(0.0);
        let (qr, qv) = p.q.col(j);
        for (&i, &v) in qr.iter().zip(qv) {
            acc[i] += v;
        }
        let (cr, cv) = p.c_mat.col(j);
        for (&r, &v) in cr.iter().zip(cv) {
            let (tr, tv) = p.c_mat_t().col(r);
            for (&i, &t) in tr.iter().zip(tv) {
                acc[i] += sigma * v * t;
            }
        }
        let (ar, av) = p.a_mat.col(j);
        for (&r, &v) in ar.iter().zip(av) {
            let (tr, tv) = p.a_mat_t().col(r);
            for (&i, &t) in tr.iter().zip(tv) {
                acc[i] += sigma * v * t;
            }
        }
        acc[j] += sigma + eps;
        for i in 0..=j {
            if acc[i] != 0.0 {
                trips.push((i, j, acc[i]));
            }
        }
    }
    for jw in 0..l {
        let (tr, tv) = p.c_mat_t().col(jw);
        for (&i, &v) in tr.iter().zip(tv) {
            trips.push((i, n + jw, -sigma * v));
        }
        trips.push((n + jw, n + jw, 2.0 * sigma + eps));
    }
    CscMatrix::from_triplets(dim, dim, &trips).expect("indices in range")
}

fn prepare_solver(p: &ProblemData, cfg: &AdmmConfig) -> Result<XwSolver, crate::linalg::FactorError> {
    match cfg.variant {
        AdmmVariant::Diagonal => {
            let dim = p.n() + p.l();
            let sys = diagonal_system(p, cfg.sigma, DIAGONAL_R_EPS);
            let fact = factorize(sys, Some((0, dim)))?;
            Ok(XwSolver::Diagonal(fact))
        }
        AdmmVariant::ProxLinear => {
            let sigma_hat = sigma_hat_for(p, cfg.sigma);
            let dq = q_diag(p);
            let mut diag = Vec::with_capacity(p.n() + p.l());
            for i in 0..p.n() {
                diag.push(dq[i] + cfg.sigma + sigma_hat);
            }
            for _ in 0..p.l() {
                diag.push(2.0 * cfg.sigma + sigma_hat);
            }
            Ok(XwSolver::ProxLinear { sigma_hat, diag })
        }
    }
}

/// out += scale * G^T v for a vector v in constraint-row layout.
fn gt_apply_add(p: &ProblemData, v: &[f64], scale: f64, out: &mut [f64]) {
    let (n, l, m) = (p.n(), p.l(), p.m());
    p.c_mat_t().matvec_add(scale, &v[..l], &mut out[..n]);
    p.a_mat_t().matvec_add(scale, &v[l..l + m], &mut out[..n]);
    for i in 0..n {
        out[i] -= scale * v[l + m + i];
    }
    for j in 0..l {
        out[n + j] -= scale * (v[j] + v[l + m + n + j]);
    }
}

/// M_r (x, w, u) - rhs, in constraint-row layout.
fn coupling_residual(p: &ProblemData, x: &[f64], w: &[f64], u: &[f64]) -> Vec<f64> {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let mut r = vec![0f64; l + m + n + l];
    p.c_mat.matvec(x, &mut r[..l]);
    for j in 0..l {
        r[j] += p.d[j] - w[j];
    }
    p.a_mat.matvec_add(1.0, x, &mut r[l..l + m]);
    for t in 0..m {
        r[l + t] -= p.b[t];
    }
    for i in 0..n {
        r[l + m + i] = u[i] - x[i];
    }
    for j in 0..l {
        r[l + m + n + j] = u[n + j] - w[j];
    }
    r
}

/// Splitting-block update: the piecewise terms and the box act on the copy,
/// evaluated at the previous (x, w).
pub fn admm_u_step(cfg: &AdmmConfig, p: &ProblemData, x: &[f64], w: &[f64], y: &[f64]) -> Vec<f64> {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let link = &y[l + m..];
    let mut arg = Vec::with_capacity(n + l);
    for i in 0..n {
        arg.push(x[i] + link[i] / cfg.sigma);
    }
    for j in 0..l {
        arg.push(w[j] + link[n + j] / cfg.sigma);
    }
    let px = prox_g1(&arg[..n], 1.0 / cfg.sigma, &p.d_diag);
    let pw = prox_g2(&arg[n..], 1.0 / cfg.sigma);
    let mut u = project_box(&px, &p.a_l, &p.a_u);
    u.extend_from_slice(&pw);
    u
}

/// Smooth-block update: exact minimizer of the strongly convex quadratic
/// (Q~ + sigma G^T G + R) s = -c~ + G^T y - sigma G^T h + R s_k, h = [d; -b; u].
fn xw_step(
    p: &ProblemData,
    cfg: &AdmmConfig,
    solver: &XwSolver,
    u: &[f64],
    y: &[f64],
    s_k: &[f64],
) -> Vec<f64> {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let mut rhs = vec![0f64; n + l];
    for i in 0..n {
        rhs[i] = -p.c[i];
    }
    gt_apply_add(p, y, 1.0, &mut rhs);
    let mut h = Vec::with_capacity(l + m + n + l);
    h.extend_from_slice(&p.d);
    h.extend(p.b.iter().map(|v| -v));
    h.extend_from_slice(u);
    gt_apply_add(p, &h, -cfg.sigma, &mut rhs);
    match solver {
        XwSolver::Diagonal(fact) => {
            for (r, s) in rhs.iter_mut().zip(s_k) {
                *r += DIAGONAL_R_EPS * s;
            }
            fact.solve(&rhs)
        }
        XwSolver::ProxLinear { sigma_hat, diag } => {
            let bs = normal_off_apply(p, cfg.sigma, s_k);
            for i in 0..rhs.len() {
                rhs[i] += sigma_hat * s_k[i] - cfg.sigma * bs[i];
            }
            rhs.iter().zip(diag).map(|(r, d)| r / d).collect()
        }
    }
}

/// Dual update with the freshly updated primal triple.
pub fn admm_y_step(
    cfg: &AdmmConfig,
    p: &ProblemData,
    x: &[f64],
    w: &[f64],
    u: &[f64],
    y: &[f64],
) -> Vec<f64> {
    let r = coupling_residual(p, x, w, u);
    y.iter()
        .zip(&r)
        .map(|(yi, ri)| yi - cfg.gamma * cfg.sigma * ri)
        .collect()
}

/// Four scaled optimality residuals of the split problem; converged when all
/// are at or below `tol`.
pub fn admm_terminate(
    p: &ProblemData,
    x: &[f64],
    w: &[f64],
    u: &[f64],
    y: &[f64],
    tol: f64,
) -> (bool, [f64; 4]) {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let link = &y[l + m..];
    let mut stat = vec![0f64; n];
    p.q.matvec(x, &mut stat);
    p.c_mat_t().matvec_add(-1.0, &y[..l], &mut stat);
    p.a_mat_t().matvec_add(-1.0, &y[l..l + m], &mut stat);
    for i in 0..n {
        stat[i] += p.c[i] + link[i];
    }
    let r1 = norm2(&stat) / (1.0 + norm2(&p.c));

    let wdual: Vec<f64> = (0..l).map(|j| y[j] + link[n + j]).collect();
    let r2 = norm2(&wdual);

    let feas = coupling_residual(p, x, w, u);
    let mut db = p.d.clone();
    db.extend_from_slice(&p.b);
    let r3 = norm2(&feas) / (1.0 + norm2(&db));

    let arg: Vec<f64> = u.iter().zip(link).map(|(ui, yi)| ui + yi).collect();
    let px = prox_g1(&arg[..n], 1.0, &p.d_diag);
    let pw = prox_g2(&arg[n..], 1.0);
    let mut fixed = project_box(&px, &p.a_l, &p.a_u);
    fixed.extend_from_slice(&pw);
    let mut r4 = 0f64;
    for i in 0..n + l {
        let v = u[i] - fixed[i];
        r4 += v * v;
    }
    let r4 = r4.sqrt() / (1.0 + norm2(u) + norm2(link));

    let res = [r1, r2, r3, r4];
    (res.iter().all(|v| *v <= tol), res)
}

/// Maps the split-problem point into main-solver variables: the linking duals
/// on the x block carry the box multiplier once the threshold subgradient is
/// removed.
pub fn map_to_pmm_start(p: &ProblemData, x: &[f64], w: &[f64], u: &[f64], y: &[f64]) -> Iterate {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let link = &y[l + m..];
    let proj = project_subdiff_g(&u[..n], &u[n..], link, &p.d_diag);
    let z: Vec<f64> = (0..n).map(|i| link[i] - proj[i]).collect();
    Iterate {
        x: x.to_vec(),
        w: w.to_vec(),
        y: y[..l + m].to_vec(),
        z,
    }
}

/// Runs the splitting method from zeros and maps the result into a starting
/// iterate for the main solver.
pub fn admm_warmstart(
    p: &ProblemData,
    cfg: &AdmmConfig,
) -> Result<WarmstartResult, crate::linalg::FactorError> {
    debug_assert!(cfg.sigma > 0.0);
    debug_assert!(cfg.gamma > 0.0 && cfg.gamma < (1.0 + 5f64.sqrt()) / 2.0);
    let (n, l, m) = (p.n(), p.l(), p.m());
    let solver = prepare_solver(p, cfg)?;
    let mut x = vec![0f64; n];
    let mut w = vec![0f64; l];
    let mut u = vec![0f64; n + l];
    let mut y = vec![0f64; l + m + n + l];
    let (mut done, mut res) = admm_terminate(p, &x, &w, &u, &y, cfg.tol);
    let mut iterations = 0u64;
    while !done && (iterations as usize) < cfg.max_iter {
        u = admm_u_step(cfg, p, &x, &w, &y);
        let mut s_k = x.clone();
        s_k.extend_from_slice(&w);
        let s = xw_step(p, cfg, &solver, &u, &y, &s_k);
        x.copy_from_slice(&s[..n]);
        w.copy_from_slice(&s[n..]);
        y = admm_y_step(cfg, p, &x, &w, &u, &y);
        iterations += 1;
        let t = admm_terminate(p, &x, &w, &u, &y, cfg.tol);
        done = t.0;
        res = t.1;
    }
    let start = map_to_pmm_start(p, &x, &w, &u, &y);
    Ok(WarmstartResult {
        start,
        iterations,
        residuals: res,
        converged: done,
    })
}
