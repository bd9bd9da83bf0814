//! Semismooth Newton solver for the proximal inner subproblem.
//!
//! Each outer iteration freezes anchors (x_k, y_k, z_k) and penalties
//! (beta, rho, zeta) and hands this module a smoothed optimality system.
//! A Newton step picks one generalized Jacobian through the three selector
//! vectors, eliminates every coordinate the selectors make trivial, and
//! solves only the remaining quasi-definite saddle system
//!
//! ```text
//! [ -zeta^-1 H_BB   E^T        ] [ dx_B ]
//! [  E              beta^-1 I  ] [ dy_R ] = rhs
//! ```
//!
//! where B is the soft-threshold-active coordinate set and E stacks the
//! coupling rows outside the plus-part-active set over the equality rows.
//! Eliminated components are recovered afterwards in closed form.

use crate::linalg::{norm2, CscMatrix, FactorCache, FactorError, SaddleSystem, Signature};
use crate::problem::ProblemData;
use crate::prox::{project_box, project_subdiff_g, prox_g1, prox_g2, select_b_delta, select_b_g1, select_b_g2};

/// Line-search and iteration limits. Values mirror the solver defaults.
#[derive(Debug, Clone)]
pub struct SsnParams {
    /// Sufficient-decrease constant in (0, 1/2).
    pub mu: f64,
    /// Backtracking ratio in (0, 1).
    pub delta: f64,
    pub max_inner: usize,
    pub max_backtracks: u32,
    /// Predictor guard: the unsearched first step may grow the merit by at
    /// most this factor, otherwise it backtracks like any other step.
    pub heuristic_growth_cap: f64,
}

impl Default for SsnParams {
    fn default() -> Self {
        SsnParams {
            mu: 1e-4,
            delta: 0.5,
            max_inner: 20,
            max_backtracks: 40,
            heuristic_growth_cap: 10.0,
        }
    }
}

/// Frozen data of one inner subproblem.
pub struct SsnContext<'a> {
    pub p: &'a ProblemData,
    pub x_anchor: &'a [f64],
    pub y_anchor: &'a [f64],
    pub z_anchor: &'a [f64],
    pub beta: f64,
    pub rho: f64,
    pub zeta: f64,
    pub eps_inner: f64,
    pub params: SsnParams,
}

/// Selector state of one Newton iteration plus the index lists derived from it.
#[derive(Debug, Clone)]
pub struct ActiveSets {
    pub b_g1: Vec<bool>,
    pub b_g2: Vec<bool>,
    pub b_delta: Vec<bool>,
    pub b1_idx: Vec<usize>,
    pub n1_idx: Vec<usize>,
    pub b2_idx: Vec<usize>,
    pub n2_idx: Vec<usize>,
}

impl ActiveSets {
    fn from_selectors(b_g1: Vec<bool>, b_g2: Vec<bool>, b_delta: Vec<bool>) -> Self {
        let split = |sel: &[bool]| {
            let mut yes = Vec::new();
            let mut no = Vec::new();
            for (i, &s) in sel.iter().enumerate() {
                if s {
                    yes.push(i);
                } else {
                    no.push(i);
                }
            }
            (yes, no)
        };
        let (b1_idx, n1_idx) = split(&b_g1);
        let (b2_idx, n2_idx) = split(&b_g2);
        ActiveSets {
            b_g1,
            b_g2,
            b_delta,
            b1_idx,
            n1_idx,
            b2_idx,
            n2_idx,
        }
    }

    fn flipped(&self, f: Flip) -> ActiveSets {
        let mut b_g1 = self.b_g1.clone();
        let mut b_g2 = self.b_g2.clone();
        let mut b_delta = self.b_delta.clone();
        match f {
            Flip::G1(i) => b_g1[i] = !b_g1[i],
            Flip::G2(j) => b_g2[j] = !b_g2[j],
            Flip::Delta(i) => b_delta[i] = !b_delta[i],
        }
        ActiveSets::from_selectors(b_g1, b_g2, b_delta)
    }
}

/// Components fixed by the selectors before the reduced solve.
#[derive(Debug, Clone)]
pub struct Eliminated {
    /// dx on the threshold-inactive coordinates, aligned with `n1_idx`.
    pub d_x_n1: Vec<f64>,
    /// dy on the plus-part-active rows, aligned with `b2_idx`.
    pub d_y_b2: Vec<f64>,
    /// dw on the plus-part-inactive rows, aligned with `n2_idx`.
    pub d_w_n2: Vec<f64>,
}

/// At a kink the generalized Jacobian has one element per side; when the
/// current side's direction is blocked at the kink, the other side's element
/// is the one to use. Retries are bounded per iteration.
const MAX_SELECTOR_FLIPS: usize = 8;

/// Selector entry whose boundary blocks the current Newton ray.
#[derive(Debug, Clone, Copy)]
enum Flip {
    G1(usize),
    G2(usize),
    Delta(usize),
}

/// One accepted Newton step, kept for merit-contract audits.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub theta_before: f64,
    pub theta_after: f64,
    pub backtracks: u32,
    /// True when the step was accepted by the first-iteration heuristic
    /// rather than the merit test.
    pub heuristic: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SsnStats {
    pub iterations: u64,
    pub factorizations: u64,
    pub converged: bool,
    /// True when a line search exhausted its backtracks.
    pub line_search_failed: bool,
    pub steps: Vec<StepRecord>,
    /// (|B_g1|, |N_g2|) at exit.
    pub final_sets: (usize, usize),
}

impl<'a> SsnContext<'a> {
    /// Residual of the proximally regularized stationarity system, stacking
    /// the x block (n) over the w-multiplier block (l).
    pub fn residual_r(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let p = self.p;
        let (n, l) = (p.n(), p.l());
        let mut r = vec![0f64; n + l];
        p.q.matvec_add(1.0, x, &mut r[..n]);
        p.c_mat_t().matvec_add(-1.0, &y[..l], &mut r[..n]);
        p.a_mat_t().matvec_add(-1.0, &y[l..], &mut r[..n]);
        let shifted: Vec<f64> = (0..n).map(|i| self.z_anchor[i] / self.beta + x[i]).collect();
        let projected = project_box(&shifted, &p.a_l, &p.a_u);
        for i in 0..n {
            r[i] += p.c[i]
                + self.z_anchor[i]
                + self.beta * (x[i] - projected[i])
                + (x[i] - self.x_anchor[i]) / self.rho;
        }
        r[n..].copy_from_slice(&y[..l]);
        r
    }

    /// Coupling and equality residual with the proximal dual shift, unscaled:
    /// rows [Cx + d - w; Ax - b] + beta^-1 (y - y_anchor).
    fn bottom_residual(&self, x: &[f64], w: &[f64], y: &[f64]) -> Vec<f64> {
        let p = self.p;
        let (l, m) = (p.l(), p.m());
        let mut bot = vec![0f64; l + m];
        p.c_mat.matvec_add(1.0, x, &mut bot[..l]);
        p.a_mat.matvec_add(1.0, x, &mut bot[l..]);
        for i in 0..l {
            bot[i] += p.d[i] - w[i] + (y[i] - self.y_anchor[i]) / self.beta;
        }
        for t in 0..m {
            bot[l + t] += -p.b[t] + (y[l + t] - self.y_anchor[l + t]) / self.beta;
        }
        bot
    }

    /// Smoothed optimality residual: prox displacements of (x, w) on top
    /// (the outer zeta and the prox scaling cancel there), then the
    /// zeta-scaled coupling block.
    pub fn residual_mhat(&self, x: &[f64], w: &[f64], y: &[f64]) -> Vec<f64> {
        let p = self.p;
        let (n, l, m) = (p.n(), p.l(), p.m());
        let r = self.residual_r(x, y);
        let mut out = vec![0f64; n + 2 * l + m];
        let ux: Vec<f64> = (0..n).map(|i| x[i] - self.zeta * r[i]).collect();
        let px = prox_g1(&ux, self.zeta, &p.d_diag);
        for i in 0..n {
            out[i] = x[i] - px[i];
        }
        let uw: Vec<f64> = (0..l).map(|i| w[i] - self.zeta * y[i]).collect();
        let pw = prox_g2(&uw, self.zeta);
        for i in 0..l {
            out[n + i] = w[i] - pw[i];
        }
        let bot = self.bottom_residual(x, w, y);
        for (i, v) in bot.iter().enumerate() {
            out[n + l + i] = self.zeta * v;
        }
        out
    }

    /// Newton merit: squared norm of the smoothed residual.
    pub fn merit(&self, x: &[f64], w: &[f64], y: &[f64]) -> f64 {
        self.residual_mhat(x, w, y).iter().map(|v| v * v).sum()
    }

    /// Distance from zero to the (unsmoothed) subproblem optimality set;
    /// the inner loop stops when this reaches `eps_inner`.
    pub fn dist_to_stationarity(&self, x: &[f64], w: &[f64], y: &[f64]) -> f64 {
        let p = self.p;
        let r = self.residual_r(x, y);
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let proj = project_subdiff_g(x, w, &neg_r, &p.d_diag);
        let mut acc = 0f64;
        for i in 0..r.len() {
            let v = r[i] + proj[i];
            acc += v * v;
        }
        for v in self.bottom_residual(x, w, y) {
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Finds the selector whose kink surface the ray (x,w,y) + alpha (dx,dw,dy)
    /// crosses first within a unit step. A crossing at tiny alpha is what makes
    /// the merit rise immediately along an otherwise exact Newton direction.
    /// Crossings at alpha = 0 (rows sitting exactly on a boundary, moving off
    /// their current side) are only eligible once no interior crossing exists;
    /// eagerly flipping them makes boundary rows ping-pong between retries.
    fn first_blocking_selector(
        &self,
        x: &[f64],
        w: &[f64],
        y: &[f64],
        dx: &[f64],
        dw: &[f64],
        dy: &[f64],
        sets: &ActiveSets,
    ) -> Option<Flip> {
        let p = self.p;
        let (n, l) = (p.n(), p.l());
        let mut interior: Option<(Flip, f64)> = None;
        let mut boundary: Option<Flip> = None;
        let mut consider = |f: Flip, alpha: f64, changes: bool| {
            if !changes || alpha > 1.0 {
                return;
            }
            if alpha > 1e-14 {
                if interior.as_ref().map_or(true, |(_, a)| alpha < *a) {
                    interior = Some((f, alpha));
                }
            } else if boundary.is_none() {
                boundary = Some(f);
            }
        };
        for j in 0..l {
            let s = w[j] - self.zeta * y[j];
            let sp = dw[j] - self.zeta * dy[j];
            if sp == 0.0 {
                continue;
            }
            for bnd in [0.0, self.zeta] {
                let alpha = (bnd - s) / sp;
                if alpha >= -1e-12 {
                    let probe = bnd + 1e-3 * self.zeta * sp.signum();
                    let after = probe <= 0.0 || probe >= self.zeta;
                    consider(Flip::G2(j), alpha, after != sets.b_g2[j]);
                }
            }
        }
        for i in 0..n {
            if dx[i] == 0.0 {
                continue;
            }
            let t = self.z_anchor[i] / self.beta + x[i];
            let width = 1e-9 * (1.0 + t.abs());
            for bnd in [p.a_l[i], p.a_u[i]] {
                if !bnd.is_finite() {
                    continue;
                }
                let alpha = (bnd - t) / dx[i];
                if alpha >= -1e-12 {
                    let probe = bnd + width * dx[i].signum();
                    let after = probe >= p.a_l[i] && probe <= p.a_u[i];
                    consider(Flip::Delta(i), alpha, after != sets.b_delta[i]);
                }
            }
        }
        // Threshold boundaries need the directional change of the stationarity
        // residual on the current box piece.
        let r = self.residual_r(x, y);
        let mut dr = vec![0f64; n];
        p.q.matvec_add(1.0, dx, &mut dr);
        p.c_mat_t().matvec_add(-1.0, &dy[..l], &mut dr);
        p.a_mat_t().matvec_add(-1.0, &dy[l..], &mut dr);
        for i in 0..n {
            let gap = if sets.b_delta[i] { 0.0 } else { self.beta };
            dr[i] += (gap + 1.0 / self.rho) * dx[i];
        }
        for i in 0..n {
            if p.d_diag[i] <= 0.0 {
                continue;
            }
            let u = x[i] - self.zeta * r[i];
            let up = dx[i] - self.zeta * dr[i];
            if up == 0.0 {
                continue;
            }
            let half = self.zeta * p.d_diag[i];
            for bnd in [half, -half] {
                let alpha = (bnd - u) / up;
                if alpha >= -1e-12 {
                    let probe = bnd + 1e-3 * half * up.signum();
                    let after = probe.abs() > half;
                    consider(Flip::G1(i), alpha, after != sets.b_g1[i]);
                }
            }
        }
        if std::env::var("PWLQP_NO_BOUNDARY").is_ok() {
            return interior.map(|(f, _)| f);
        }
        interior.map(|(f, _)| f).or(boundary)
    }

    /// Kept coupling rows whose implied multiplier y + dy overshoots [-1, 0]
    /// by more than a full box width: backtracking handles small overshoot,
    /// but violations this large mean the row was misclassified and belongs
    /// on the flat branch. Never empties the saddle system's row block.
    fn dual_clamp_flips(&self, y: &[f64], dy: &[f64], sets: &ActiveSets) -> Vec<usize> {
        const MARGIN: f64 = 1.0;
        let flips: Vec<usize> = sets
            .n2_idx
            .iter()
            .copied()
            .filter(|&i| {
                let t = y[i] + dy[i];
                t < -1.0 - MARGIN || t > MARGIN
            })
            .collect();
        if flips.len() == sets.n2_idx.len() && self.p.m() == 0 {
            return Vec::new();
        }
        flips
    }

    /// Chooses the Bouligand selectors at the current point.
    pub fn build_active_sets(&self, x: &[f64], w: &[f64], y: &[f64]) -> ActiveSets {
        let p = self.p;
        let n = p.n();
        let r = self.residual_r(x, y);
        let u_hat: Vec<f64> = (0..n).map(|i| x[i] - self.zeta * r[i]).collect();
        let b_g1 = select_b_g1(&u_hat, self.zeta, &p.d_diag);
        let b_g2 = select_b_g2(w, &y[..p.l()], self.zeta);
        let b_delta = select_b_delta(self.z_anchor, x, self.beta, &p.a_l, &p.a_u);
        ActiveSets::from_selectors(b_g1, b_g2, b_delta)
    }

    /// Assembles the reduced saddle system and right-hand side at the current
    /// point, together with the eliminated direction components.
    pub fn assemble_reduced(
        &self,
        w: &[f64],
        sets: &ActiveSets,
        mhat: &[f64],
    ) -> (SaddleSystem, Vec<f64>, Eliminated) {
        let p = self.p;
        let (n, l, m) = (p.n(), p.l(), p.m());
        let nb = sets.b1_idx.len();
        let n2 = sets.n2_idx.len();
        let q = n2 + m;
        let zeta = self.zeta;

        // Closed-form eliminations.
        let d_x_n1: Vec<f64> = sets.n1_idx.iter().map(|&i| -mhat[i]).collect();
        let d_y_b2: Vec<f64> = sets.b2_idx.iter().map(|&i| -mhat[n + i] / zeta).collect();
        let d_w_n2: Vec<f64> = sets.n2_idx.iter().map(|&i| -w[i]).collect();

        // Correction products, computed through full-width matvecs on
        // zero-extended vectors.
        let mut ext_dx = vec![0f64; n];
        for (t, &i) in sets.n1_idx.iter().enumerate() {
            ext_dx[i] = d_x_n1[t];
        }
        let mut q_dxn = vec![0f64; n];
        p.q.matvec(&ext_dx, &mut q_dxn);
        let mut c_dxn = vec![0f64; l];
        p.c_mat.matvec(&ext_dx, &mut c_dxn);
        let mut a_dxn = vec![0f64; m];
        p.a_mat.matvec(&ext_dx, &mut a_dxn);
        let mut ext_dy = vec![0f64; l];
        for (t, &i) in sets.b2_idx.iter().enumerate() {
            ext_dy[i] = d_y_b2[t];
        }
        let mut ct_dyb = vec![0f64; n];
        p.c_mat_t().matvec(&ext_dy, &mut ct_dyb);

        // Right-hand side: stationarity rows on B_g1, then coupling rows on
        // N_g2, then equality rows.
        let mut rhs = vec![0f64; nb + q];
        for (bj, &j) in sets.b1_idx.iter().enumerate() {
            rhs[bj] = mhat[j] / zeta + q_dxn[j] - ct_dyb[j];
        }
        for (t, &i) in sets.n2_idx.iter().enumerate() {
            rhs[nb + t] = -mhat[n + l + i] / zeta - c_dxn[i] + d_w_n2[t];
        }
        for t in 0..m {
            rhs[nb + n2 + t] = -mhat[n + 2 * l + t] / zeta - a_dxn[t];
        }

        // Hessian block: -(Q_BB + diag(beta (1 - Bdelta) + rho^-1)).
        let mut col_map = vec![usize::MAX; n];
        for (bj, &j) in sets.b1_idx.iter().enumerate() {
            col_map[j] = bj;
        }
        let mut h_trips: Vec<(usize, usize, f64)> = Vec::new();
        for (bj, &j) in sets.b1_idx.iter().enumerate() {
            let (rows, vals) = p.q.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let bi = col_map[i];
                if bi != usize::MAX && bi <= bj {
                    h_trips.push((bi, bj, -v));
                }
            }
            let shift = self.beta * if sets.b_delta[j] { 0.0 } else { 1.0 } + 1.0 / self.rho;
            h_trips.push((bj, bj, -shift));
        }
        let h_upper = CscMatrix::from_triplets(nb, nb, &h_trips).expect("mapped indices in range");

        // Coupling transpose: columns are the kept coupling/equality rows.
        let mut e_trips: Vec<(usize, usize, f64)> = Vec::new();
        for (t, &i) in sets.n2_idx.iter().enumerate() {
            let (rows, vals) = p.c_mat_t().col(i);
            for (&j, &v) in rows.iter().zip(vals) {
                let bj = col_map[j];
                if bj != usize::MAX {
                    e_trips.push((bj, t, v));
                }
            }
        }
        for s in 0..m {
            let (rows, vals) = p.a_mat_t().col(s);
            for (&j, &v) in rows.iter().zip(vals) {
                let bj = col_map[j];
                if bj != usize::MAX {
                    e_trips.push((bj, n2 + s, v));
                }
            }
        }
        let e_t = CscMatrix::from_triplets(nb, q, &e_trips).expect("mapped indices in range");

        let signature = Signature::new(
            &sets.b_g1,
            &sets.b_g2,
            &sets.b_delta,
            self.beta,
            self.zeta,
            self.rho,
        );
        let sys = SaddleSystem {
            h_upper,
            e_t,
            reg: 1.0 / self.beta,
            signature,
        };
        (
            sys,
            rhs,
            Eliminated {
                d_x_n1,
                d_y_b2,
                d_w_n2,
            },
        )
    }

    /// Scatters the reduced solution and the eliminated components back into
    /// full-length directions (dx, dw, dy).
    pub fn recover_eliminated(
        &self,
        x: &[f64],
        w: &[f64],
        y: &[f64],
        sets: &ActiveSets,
        elim: &Eliminated,
        reduced: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.p;
        let (n, l, m) = (p.n(), p.l(), p.m());
        let nb = sets.b1_idx.len();
        let n2 = sets.n2_idx.len();
        debug_assert_eq!(reduced.len(), nb + n2 + m);

        let mut dx = vec![0f64; n];
        for (bj, &j) in sets.b1_idx.iter().enumerate() {
            dx[j] = reduced[bj];
        }
        for (t, &j) in sets.n1_idx.iter().enumerate() {
            dx[j] = elim.d_x_n1[t];
        }

        let mut dy = vec![0f64; l + m];
        for (t, &i) in sets.n2_idx.iter().enumerate() {
            dy[i] = reduced[nb + t];
        }
        for (t, &i) in sets.b2_idx.iter().enumerate() {
            dy[i] = elim.d_y_b2[t];
        }
        for s in 0..m {
            dy[l + s] = reduced[nb + n2 + s];
        }

        let mut dw = vec![0f64; l];
        for (t, &i) in sets.n2_idx.iter().enumerate() {
            dw[i] = elim.d_w_n2[t];
        }
        if !sets.b2_idx.is_empty() {
            let mut x_new = x.to_vec();
            for i in 0..n {
                x_new[i] += dx[i];
            }
            let mut cx = vec![0f64; l];
            p.c_mat.matvec(&x_new, &mut cx);
            for &i in &sets.b2_idx {
                dw[i] = cx[i] + p.d[i] - w[i] + (y[i] + dy[i] - self.y_anchor[i]) / self.beta;
            }
        }
        (dx, dw, dy)
    }

    /// Backtracking on the merit. Returns (step count m_j, new merit), or
    /// None when `max_backtracks` steps all fail the decrease test.
    pub fn line_search(
        &self,
        x: &[f64],
        w: &[f64],
        y: &[f64],
        dir: (&[f64], &[f64], &[f64]),
        theta0: f64,
    ) -> Option<(u32, f64)> {
        let (dx, dw, dy) = dir;
        let mut alpha = 1.0;
        for mj in 0..=self.params.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(dx).map(|(a, d)| a + alpha * d).collect();
            let wt: Vec<f64> = w.iter().zip(dw).map(|(a, d)| a + alpha * d).collect();
            let yt: Vec<f64> = y.iter().zip(dy).map(|(a, d)| a + alpha * d).collect();
            let theta = self.merit(&xt, &wt, &yt);
            if theta <= (1.0 - 2.0 * self.params.mu * alpha) * theta0 {
                return Some((mj, theta));
            }
            alpha *= self.params.delta;
        }
        None
    }

    /// Runs the Newton loop from `start` until the stationarity distance
    /// drops below `eps_inner` or the iteration budget is exhausted. Every
    /// direction attempt counts against the budget, including selector-flip
    /// retries, so `factorizations <= iterations` holds on every call.
    /// On non-convergence the walk's endpoint is returned as long as its
    /// merit improved on the entry merit, so a rerun at the same anchors
    /// resumes the walk instead of repeating it; otherwise the lowest-merit
    /// iterate seen. The distance metric is unusable for this comparison:
    /// it is discontinuous across kink surfaces and understates the error
    /// at points sitting exactly on them.
    pub fn solve(
        &self,
        start: (Vec<f64>, Vec<f64>, Vec<f64>),
        cache: &mut FactorCache,
    ) -> Result<((Vec<f64>, Vec<f64>, Vec<f64>), SsnStats), FactorError> {
        let (mut x, mut w, mut y) = start;
        let mut stats = SsnStats::default();
        let mut sets = self.build_active_sets(&x, &w, &y);
        stats.final_sets = (sets.b1_idx.len(), sets.n2_idx.len());
        let entry_dist = self.dist_to_stationarity(&x, &w, &y);
        if entry_dist <= self.eps_inner {
            stats.converged = true;
            return Ok(((x, w, y), stats));
        }
        let budget = self.params.max_inner as u64;
        let theta_entry = self.merit(&x, &w, &y);
        let mut best = (theta_entry, x.clone(), w.clone(), y.clone(), stats.final_sets);
        let mut last_theta = theta_entry;
        let mut first_direction = true;
        while stats.iterations < budget {
            let mhat = self.residual_mhat(&x, &w, &y);
            let theta0: f64 = mhat.iter().map(|v| v * v).sum();
            let (sys, rhs, elim) = self.assemble_reduced(&w, &sets, &mhat);
            let reduced = if sys.dim() > 0 {
                let fact = cache.get_or_factorize(&sys, &mut stats.factorizations)?;
                fact.solve(&rhs)
            } else {
                Vec::new()
            };
            let (mut dx, mut dw, mut dy) =
                self.recover_eliminated(&x, &w, &y, &sets, &elim, &reduced);
            stats.iterations += 1;
            if !(dx.iter().chain(&dw).chain(&dy)).all(|v| v.is_finite()) {
                return Err(FactorError::TinyPivot {
                    step: 0,
                    dim: sys.dim(),
                    value: f64::NAN,
                });
            }
            let mut accepted = None;
            if first_direction {
                // First step of each subproblem is taken at full length
                // without requiring a merit decrease, as long as it does not
                // blow the merit up past the predictor guard.
                let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
                let wt: Vec<f64> = w.iter().zip(&dw).map(|(a, d)| a + d).collect();
                let yt: Vec<f64> = y.iter().zip(&dy).map(|(a, d)| a + d).collect();
                let theta = self.merit(&xt, &wt, &yt);
                if theta <= self.params.heuristic_growth_cap * theta0 {
                    accepted = Some((0u32, theta, true));
                }
            }
            first_direction = false;
            if accepted.is_none() {
                accepted = self
                    .line_search(&x, &w, &y, (&dx, &dw, &dy), theta0)
                    .map(|(mj, theta)| (mj, theta, false));
            }
            // A failed search means the ray exits its kink piece almost
            // immediately. Each retry below recomputes the direction under a
            // repaired selector set and costs one budget unit.
            let mut cur_sets = sets.clone();
            let retry = |stats: &mut SsnStats,
                             cache: &mut FactorCache,
                             trial: &ActiveSets|
             -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
                let (sys2, rhs2, elim2) = self.assemble_reduced(&w, trial, &mhat);
                let reduced2 = if sys2.dim() > 0 {
                    match cache.get_or_factorize(&sys2, &mut stats.factorizations) {
                        Ok(fact) => fact.solve(&rhs2),
                        Err(_) => return None,
                    }
                } else {
                    Vec::new()
                };
                stats.iterations += 1;
                let dir = self.recover_eliminated(&x, &w, &y, trial, &elim2, &reduced2);
                (dir.0.iter().chain(&dir.1).chain(&dir.2))
                    .all(|v| v.is_finite())
                    .then_some(dir)
            };
            // Kept rows whose stepped multiplier leaves its box want the flat
            // branch; repair them in one batch before single flips.
            if accepted.is_none()
                && stats.iterations < budget
                && std::env::var("PWLQP_NO_CLAMP").is_err()
            {
                let clamp = self.dual_clamp_flips(&y, &dy, &cur_sets);
                if !clamp.is_empty() {
                    let mut b_g2 = cur_sets.b_g2.clone();
                    for &i in &clamp {
                        b_g2[i] = true;
                    }
                    let trial = ActiveSets::from_selectors(
                        cur_sets.b_g1.clone(),
                        b_g2,
                        cur_sets.b_delta.clone(),
                    );
                    if let Some((ndx, ndw, ndy)) = retry(&mut stats, cache, &trial) {
                        cur_sets = trial;
                        dx = ndx;
                        dw = ndw;
                        dy = ndy;
                        accepted = self
                            .line_search(&x, &w, &y, (&dx, &dw, &dy), theta0)
                            .map(|(mj, theta)| (mj, theta, false));
                    }
                }
            }
            let mut flips = 0;
            while accepted.is_none() && flips < MAX_SELECTOR_FLIPS && stats.iterations < budget {
                let Some(f) = self.first_blocking_selector(&x, &w, &y, &dx, &dw, &dy, &cur_sets)
                else {
                    break;
                };
                cur_sets = cur_sets.flipped(f);
                flips += 1;
                let Some((ndx, ndw, ndy)) = retry(&mut stats, cache, &cur_sets) else {
                    break;
                };
                dx = ndx;
                dw = ndw;
                dy = ndy;
                accepted = self
                    .line_search(&x, &w, &y, (&dx, &dw, &dy), theta0)
                    .map(|(mj, theta)| (mj, theta, false));
            }
            let Some((mj, theta_after, heuristic)) = accepted else {
                stats.line_search_failed = true;
                break;
            };
            let alpha = self.params.delta.powi(mj as i32);
            for (a, d) in x.iter_mut().zip(&dx) {
                *a += alpha * d;
            }
            for (a, d) in w.iter_mut().zip(&dw) {
                *a += alpha * d;
            }
            for (a, d) in y.iter_mut().zip(&dy) {
                *a += alpha * d;
            }
            stats.steps.push(StepRecord {
                theta_before: theta0,
                theta_after,
                backtracks: mj,
                heuristic,
            });
            sets = self.build_active_sets(&x, &w, &y);
            stats.final_sets = (sets.b1_idx.len(), sets.n2_idx.len());
            let dist = self.dist_to_stationarity(&x, &w, &y);
            last_dist = dist;
            if dist < best.0 {
                best = (dist, x.clone(), w.clone(), y.clone(), stats.final_sets);
            }
            if dist <= self.eps_inner {
                stats.converged = true;
                break;
            }
        }
        if !stats.converged && last_dist >= entry_dist {
            let (_, bx, bw, by, bsets) = best;
            x = bx;
            w = bw;
            y = by;
            stats.final_sets = bsets;
        }
        Ok(((x, w, y), stats))
    }
}

/// Norm helper exposed for diagnostics on smoothed residual vectors.
pub fn merit_norm(mhat: &[f64]) -> f64 {
    norm2(mhat)
}
