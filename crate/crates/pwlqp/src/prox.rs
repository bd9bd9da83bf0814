//! Proximal kernels and the selector vectors that pick Bouligand elements.
//!
//! Conventions at the kinks are load-bearing and fixed here once:
//! the soft-threshold selector is 0 on its boundary |u| = zeta*D_ii (and 1
//! whenever D_ii = 0), the plus-part selector is 1 on both of its boundaries,
//! and the box selector is 0 when the projection argument sits exactly on a
//! bound. The reduced Newton system assumes exactly these choices.

/// Componentwise prox of the weighted l1 term: soft threshold at zeta*D_ii.
pub fn prox_g1(u: &[f64], zeta: f64, d_diag: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), d_diag.len());
    debug_assert!(zeta > 0.0);
    u.iter()
        .zip(d_diag)
        .map(|(&ui, &di)| (ui.abs() - zeta * di).max(0.0) * ui.signum())
        .collect()
}

/// Componentwise prox of the plus-part sum: shift by zeta on the positive
/// side, identity on the negative side, flat in between.
pub fn prox_g2(u: &[f64], zeta: f64) -> Vec<f64> {
    debug_assert!(zeta > 0.0);
    u.iter().map(|&ui| (ui - zeta).max(0.0) + ui.min(0.0)).collect()
}

/// Projection onto the box [a_l, a_u]; infinite bounds pass through.
pub fn project_box(u: &[f64], a_l: &[f64], a_u: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), a_l.len());
    debug_assert_eq!(u.len(), a_u.len());
    u.iter()
        .zip(a_l.iter().zip(a_u))
        .map(|(&ui, (&lo, &hi))| ui.max(lo).min(hi))
        .collect()
}

/// Box-projection selector at the shifted point v = z/beta + x: 1 on the
/// strict interior, 0 at and beyond the bounds.
pub fn select_b_delta(z_anchor: &[f64], x: &[f64], beta: f64, a_l: &[f64], a_u: &[f64]) -> Vec<bool> {
    debug_assert!(beta > 0.0);
    (0..x.len())
        .map(|i| {
            let v = z_anchor[i] / beta + x[i];
            v > a_l[i] && v < a_u[i]
        })
        .collect()
}

/// Soft-threshold selector: 1 where the threshold is inactive (|u| strictly
/// above zeta*D_ii) or unweighted (D_ii = 0); 0 at the boundary.
pub fn select_b_g1(u_hat: &[f64], zeta: f64, d_diag: &[f64]) -> Vec<bool> {
    debug_assert_eq!(u_hat.len(), d_diag.len());
    u_hat
        .iter()
        .zip(d_diag)
        .map(|(&ui, &di)| di == 0.0 || ui.abs() > zeta * di)
        .collect()
}

/// Plus-part selector on s = w - zeta*y: 1 on both flat-slope regions
/// (s <= 0 or s >= zeta, boundaries included), 0 strictly inside the kink gap.
pub fn select_b_g2(w: &[f64], y_head: &[f64], zeta: f64) -> Vec<bool> {
    debug_assert_eq!(w.len(), y_head.len());
    debug_assert!(zeta > 0.0);
    w.iter()
        .zip(y_head)
        .map(|(&wi, &yi)| {
            let s = wi - zeta * yi;
            s <= 0.0 || s >= zeta
        })
        .collect()
}

/// Projects v onto the subdifferential of the nonsmooth term at (x, w):
/// componentwise onto {±D_ii} / [-D_ii, D_ii] for the l1 part and onto
/// {0} / {1} / [0, 1] for the plus part. Output stacks the x block then the
/// w block.
pub fn project_subdiff_g(x: &[f64], w: &[f64], v: &[f64], d_diag: &[f64]) -> Vec<f64> {
    debug_assert_eq!(v.len(), x.len() + w.len());
    let n = x.len();
    let mut out = Vec::with_capacity(v.len());
    for i in 0..n {
        let di = d_diag[i];
        out.push(if x[i] > 0.0 {
            di
        } else if x[i] < 0.0 {
            -di
        } else {
            v[i].clamp(-di, di)
        });
    }
    for (j, &wj) in w.iter().enumerate() {
        out.push(if wj > 0.0 {
            1.0
        } else if wj < 0.0 {
            0.0
        } else {
            v[n + j].clamp(0.0, 1.0)
        });
    }
    out
}
