//! Exhaustive stationarity oracle for small instances. Enumerates the
//! piecewise structure coordinate by coordinate (bound / kink / open piece),
//! solves the equality part of each candidate pattern densely, and keeps
//! candidates whose multipliers certify optimality. Shares nothing with the
//! solver's reduction or factorization code.

use super::dense::{lu_solve, DenseMat};
use pwlqp::problem::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XMode {
    AtLower,
    AtUpper,
    /// At the kink of the weighted l1 term; only meaningful when the weight
    /// is positive and zero is interior to the box.
    AtZero,
    FreePos,
    FreeNeg,
    /// Not at a bound, weight zero: no sign restriction.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WMode {
    Neg,
    Zero,
    Pos,
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub objective: f64,
}

/// Plain-loop objective evaluation on dense copies.
pub fn objective_naive(p: &ProblemData, x: &[f64], w: &[f64]) -> f64 {
    let n = p.n();
    let qd = p.q.to_dense();
    let mut val = p.const_offset;
    for i in 0..n {
        val += p.c[i] * x[i] + p.d_diag[i] * x[i].abs();
        for j in 0..n {
            val += 0.5 * qd[i * n + j] * x[i] * x[j];
        }
    }
    for &wi in w {
        val += wi.max(0.0);
    }
    val
}

pub fn x_mode_choices(p: &ProblemData, i: usize) -> Vec<XMode> {
    let (lo, hi, wgt) = (p.a_l[i], p.a_u[i], p.d_diag[i]);
    if lo == hi {
        return vec![XMode::AtLower];
    }
    let mut modes = Vec::new();
    if lo.is_finite() {
        modes.push(XMode::AtLower);
    }
    if hi.is_finite() {
        modes.push(XMode::AtUpper);
    }
    if wgt > 0.0 {
        if lo < 0.0 && hi > 0.0 {
            modes.push(XMode::AtZero);
        }
        if hi > 0.0 {
            modes.push(XMode::FreePos);
        }
        if lo < 0.0 {
            modes.push(XMode::FreeNeg);
        }
    } else {
        modes.push(XMode::Free);
    }
    modes
}

struct DenseProblem {
    q: Vec<f64>,
    c_mat: Vec<f64>,
    a_mat: Vec<f64>,
}

impl DenseProblem {
    fn new(p: &ProblemData) -> Self {
        DenseProblem {
            q: p.q.to_dense(),
            c_mat: p.c_mat.to_dense(),
            a_mat: p.a_mat.to_dense(),
        }
    }
}

/// Solves the equality system of one mode pattern. Unknowns: free x
/// coordinates, multipliers of the w-kink rows, equality multipliers.
/// Returns (x, w, nu, lambda) or None when the pattern's system is singular.
fn candidate_from_modes(
    p: &ProblemData,
    dp: &DenseProblem,
    xm: &[XMode],
    wm: &[WMode],
) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let mut free: Vec<usize> = Vec::new();
    let mut x_fix = vec![0f64; n];
    let mut sig = vec![0f64; n];
    for i in 0..n {
        match xm[i] {
            XMode::AtLower => x_fix[i] = p.a_l[i],
            XMode::AtUpper => x_fix[i] = p.a_u[i],
            XMode::AtZero => x_fix[i] = 0.0,
            XMode::FreePos => {
                free.push(i);
                sig[i] = 1.0;
            }
            XMode::FreeNeg => {
                free.push(i);
                sig[i] = -1.0;
            }
            XMode::Free => free.push(i),
        }
    }
    let zero_rows: Vec<usize> = (0..l).filter(|&j| wm[j] == WMode::Zero).collect();
    let nf = free.len();
    let nz = zero_rows.len();
    let dim = nf + nz + m;
    if dim == 0 {
        let x = x_fix;
        let mut w = vec![0f64; l];
        let mut nu = vec![0f64; l];
        for j in 0..l {
            w[j] = p.d[j] + (0..n).map(|i| dp.c_mat[j * n + i] * x[i]).sum::<f64>();
            if wm[j] == WMode::Pos {
                nu[j] = 1.0;
            }
        }
        return Some((x, w, nu, vec![]));
    }

    // Layout of unknowns: [x_free, nu_zero, lambda].
    let mut mat = DenseMat::zeros(dim, dim);
    let mut rhs = vec![0f64; dim];
    for (r, &i) in free.iter().enumerate() {
        for (cidx, &j) in free.iter().enumerate() {
            mat.add(r, cidx, dp.q[i * n + j]);
        }
        for (cidx, &j) in zero_rows.iter().enumerate() {
            mat.add(r, nf + cidx, dp.c_mat[j * n + i]);
        }
        for t in 0..m {
            mat.add(r, nf + nz + t, dp.a_mat[t * n + i]);
        }
        let mut s = p.c[i] + sig[i] * p.d_diag[i];
        for j in 0..n {
            s += dp.q[i * n + j] * x_fix[j];
        }
        for j in 0..l {
            if wm[j] == WMode::Pos {
                s += dp.c_mat[j * n + i];
            }
        }
        rhs[r] = -s;
    }
    for (r, &j) in zero_rows.iter().enumerate() {
        for (cidx, &i) in free.iter().enumerate() {
            mat.add(nf + r, cidx, dp.c_mat[j * n + i]);
        }
        let mut s = p.d[j];
        for i in 0..n {
            s += dp.c_mat[j * n + i] * x_fix[i];
        }
        rhs[nf + r] = -s;
    }
    for t in 0..m {
        for (cidx, &i) in free.iter().enumerate() {
            mat.add(nf + nz + t, cidx, dp.a_mat[t * n + i]);
        }
        let mut s = -p.b[t];
        for i in 0..n {
            s += dp.a_mat[t * n + i] * x_fix[i];
        }
        rhs[nf + nz + t] = -s;
    }

    let sol = lu_solve(&mat, &rhs)?;
    let mut x = x_fix;
    for (cidx, &i) in free.iter().enumerate() {
        x[i] = sol[cidx];
    }
    let mut nu = vec![0f64; l];
    for j in 0..l {
        if wm[j] == WMode::Pos {
            nu[j] = 1.0;
        }
    }
    for (cidx, &j) in zero_rows.iter().enumerate() {
        nu[j] = sol[nf + cidx];
    }
    let lambda = sol[nf + nz..].to_vec();
    let mut w = vec![0f64; l];
    for j in 0..l {
        w[j] = p.d[j] + (0..n).map(|i| dp.c_mat[j * n + i] * x[i]).sum::<f64>();
    }
    Some((x, w, nu, lambda))
}

/// Full primal-dual optimality check of a candidate against the declared
/// pattern. All tests carry the same slack `tol`.
fn certify(
    p: &ProblemData,
    dp: &DenseProblem,
    xm: &[XMode],
    wm: &[WMode],
    x: &[f64],
    w: &[f64],
    nu: &[f64],
    lambda: &[f64],
    tol: f64,
) -> bool {
    let (n, l, m) = (p.n(), p.l(), p.m());
    if !x.iter().all(|v| v.is_finite()) || !nu.iter().all(|v| v.is_finite()) {
        return false;
    }
    for i in 0..n {
        if x[i] < p.a_l[i] - tol || x[i] > p.a_u[i] + tol {
            return false;
        }
        match xm[i] {
            XMode::FreePos => {
                if x[i] < -tol {
                    return false;
                }
            }
            XMode::FreeNeg => {
                if x[i] > tol {
                    return false;
                }
            }
            _ => {}
        }
    }
    for j in 0..l {
        match wm[j] {
            WMode::Neg => {
                if w[j] > tol {
                    return false;
                }
            }
            WMode::Pos => {
                if w[j] < -tol {
                    return false;
                }
            }
            WMode::Zero => {
                if nu[j] < -tol || nu[j] > 1.0 + tol {
                    return false;
                }
            }
        }
    }
    // Equality feasibility (zero-rows are solved exactly; re-check anyway).
    for t in 0..m {
        let mut s = -p.b[t];
        for i in 0..n {
            s += dp.a_mat[t * n + i] * x[i];
        }
        if s.abs() > tol {
            return false;
        }
    }
    // Stationarity in x: s_i = c_i + (Qx)_i + (C' nu)_i + (A' lambda)_i must
    // be killed by a subgradient of the l1 weight plus the box normal cone.
    for i in 0..n {
        let mut s = p.c[i];
        for j in 0..n {
            s += dp.q[i * n + j] * x[j];
        }
        for j in 0..l {
            s += dp.c_mat[j * n + i] * nu[j];
        }
        for t in 0..m {
            s += dp.a_mat[t * n + i] * lambda[t];
        }
        let d = p.d_diag[i];
        let ok = match xm[i] {
            XMode::FreePos => (s + d).abs() <= tol,
            XMode::FreeNeg => (s - d).abs() <= tol,
            XMode::Free => s.abs() <= tol,
            XMode::AtZero => s.abs() <= d + tol,
            XMode::AtLower => {
                let sub_hi = if p.a_l[i] >= 0.0 { d } else { -d };
                if p.a_l[i] == p.a_u[i] {
                    true
                } else {
                    s + sub_hi >= -tol
                }
            }
            XMode::AtUpper => {
                let sub_lo = if p.a_u[i] > 0.0 { d } else { -d };
                s + sub_lo <= tol
            }
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Exhaustive enumeration. Returns None when the pattern count exceeds the
/// budget or no pattern certifies.
pub fn enumerate_oracle(p: &ProblemData, tol: f64) -> Option<OracleSolution> {
    let (n, l) = (p.n(), p.l());
    let x_choices: Vec<Vec<XMode>> = (0..n).map(|i| x_mode_choices(p, i)).collect();
    let w_choices = [WMode::Neg, WMode::Zero, WMode::Pos];
    let mut total: u64 = 1;
    for ch in &x_choices {
        total = total.saturating_mul(ch.len() as u64);
    }
    total = total.saturating_mul(3u64.saturating_pow(l as u32));
    if total > 2_000_000 {
        return None;
    }
    let dp = DenseProblem::new(p);

    let mut best: Option<OracleSolution> = None;
    let mut idx = vec![0usize; n + l];
    let mut xm = vec![XMode::Free; n];
    let mut wm = vec![WMode::Neg; l];
    loop {
        for i in 0..n {
            xm[i] = x_choices[i][idx[i]];
        }
        for j in 0..l {
            wm[j] = w_choices[idx[n + j]];
        }
        if let Some((x, w, nu, lambda)) = candidate_from_modes(p, &dp, &xm, &wm) {
            if certify(p, &dp, &xm, &wm, &x, &w, &nu, &lambda, tol) {
                let objective = objective_naive(p, &x, &w);
                if best.as_ref().map_or(true, |b| objective < b.objective) {
                    best = Some(OracleSolution { x, w, objective });
                }
            }
        }
        // Mixed-radix increment.
        let mut pos = 0;
        loop {
            if pos == n + l {
                return best;
            }
            let radix = if pos < n { x_choices[pos].len() } else { 3 };
            idx[pos] += 1;
            if idx[pos] < radix {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Polish entry used by the first-order branch: detect the pattern at an
/// approximate primal point, solve it, certify.
pub fn polish(p: &ProblemData, x: &[f64], detect_tol: f64, cert_tol: f64) -> Option<OracleSolution> {
    let (n, l) = (p.n(), p.l());
    let dp = DenseProblem::new(p);
    let mut xm = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi, wgt) = (p.a_l[i], p.a_u[i], p.d_diag[i]);
        let mode = if lo == hi || (lo.is_finite() && (x[i] - lo).abs() <= detect_tol) {
            XMode::AtLower
        } else if hi.is_finite() && (x[i] - hi).abs() <= detect_tol {
            XMode::AtUpper
        } else if wgt > 0.0 && x[i].abs() <= detect_tol && lo < 0.0 && hi > 0.0 {
            XMode::AtZero
        } else if wgt > 0.0 {
            if x[i] > 0.0 {
                XMode::FreePos
            } else {
                XMode::FreeNeg
            }
        } else {
            XMode::Free
        };
        xm.push(mode);
    }
    let mut w_est = vec![0f64; l];
    for j in 0..l {
        w_est[j] = p.d[j] + (0..n).map(|i| dp.c_mat[j * n + i] * x[i]).sum::<f64>();
    }
    let wm: Vec<WMode> = (0..l)
        .map(|j| {
            if w_est[j].abs() <= detect_tol {
                WMode::Zero
            } else if w_est[j] > 0.0 {
                WMode::Pos
            } else {
                WMode::Neg
            }
        })
        .collect();
    let (x, w, nu, lambda) = candidate_from_modes(p, &dp, &xm, &wm)?;
    if certify(p, &dp, &xm, &wm, &x, &w, &nu, &lambda, cert_tol) {
        let objective = objective_naive(p, &x, &w);
        Some(OracleSolution { x, w, objective })
    } else {
        None
    }
}
