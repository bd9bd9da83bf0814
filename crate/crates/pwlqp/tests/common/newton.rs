//! Dense assembly of the unreduced Newton system, used to cross-check the
//! active-set reduction. Blocks are written out literally from the
//! generalized Jacobian of the smoothed residual; no elimination anywhere.

use super::dense::{lu_solve, DenseMat};
use pwlqp::ssn::{ActiveSets, SsnContext};

/// Full (n + 2l + m)-dimensional Newton matrix at the given selector choice.
pub fn full_newton_matrix(ctx: &SsnContext, sets: &ActiveSets) -> DenseMat {
    let p = ctx.p;
    let (n, l, m) = (p.n(), p.l(), p.m());
    let dim = n + 2 * l + m;
    let zeta = ctx.zeta;
    let beta = ctx.beta;
    let mut mat = DenseMat::zeros(dim, dim);

    // x rows: H in the x block, zero w block, -zeta Bg1 [C^T A^T] in y.
    for i in 0..n {
        let bg1 = if sets.b_g1[i] { 1.0 } else { 0.0 };
        let bdl = if sets.b_delta[i] { 1.0 } else { 0.0 };
        mat.add(
            i,
            i,
            (1.0 - bg1) + zeta * beta * bg1 * (1.0 + 1.0 / (ctx.rho * beta) - bdl),
        );
    }
    for (r, j, v) in p.q.iter() {
        // zeta beta Bg1 (Q / beta) contribution of row r.
        if sets.b_g1[r] {
            mat.add(r, j, zeta * v);
        }
    }
    for (r, j, v) in p.c_mat.iter() {
        // (C^T)_{j r} sits in x row j, y column r.
        if sets.b_g1[j] {
            mat.add(j, n + l + r, -zeta * v);
        }
    }
    for (s, j, v) in p.a_mat.iter() {
        if sets.b_g1[j] {
            mat.add(j, n + l + l + s, -zeta * v);
        }
    }

    // w rows: (I - Bg2) on w, zeta Bg2 on the coupling multipliers.
    for i in 0..l {
        let bg2 = if sets.b_g2[i] { 1.0 } else { 0.0 };
        mat.add(n + i, n + i, 1.0 - bg2);
        mat.add(n + i, n + l + i, zeta * bg2);
    }

    // y rows: zeta [C; A] on x, -zeta I on w (coupling rows only),
    // zeta / beta on the diagonal.
    for (r, j, v) in p.c_mat.iter() {
        mat.add(n + l + r, j, zeta * v);
    }
    for (s, j, v) in p.a_mat.iter() {
        mat.add(n + l + l + s, j, zeta * v);
    }
    for r in 0..l {
        mat.add(n + l + r, n + r, -zeta);
    }
    for t in 0..(l + m) {
        mat.add(n + l + t, n + l + t, zeta / beta);
    }
    mat
}

/// Newton direction from the dense unreduced system: solves M d = -mhat.
/// Returns the stacked direction (dx, dw, dy) or None if M is singular.
pub fn full_newton_direction(
    ctx: &SsnContext,
    sets: &ActiveSets,
    x: &[f64],
    w: &[f64],
    y: &[f64],
) -> Option<Vec<f64>> {
    let mat = full_newton_matrix(ctx, sets);
    let mhat = ctx.residual_mhat(x, w, y);
    let rhs: Vec<f64> = mhat.iter().map(|v| -v).collect();
    lu_solve(&mat, &rhs)
}
