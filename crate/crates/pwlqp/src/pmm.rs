//! Proximal method of multipliers: the outer loop around the Newton solver.
//!
//! Each outer iteration anchors the proximal terms at the current iterate,
//! solves the smoothed subproblem to a vanishing inner tolerance, applies the
//! multiplier updates, and adapts the penalty when the overall residual
//! stalls. Termination tests the four optimality residuals of the original
//! problem, not of any subproblem.

use crate::linalg::{norm2, norm_inf, FactorCache};
use crate::problem::{Iterate, ProblemData};
use crate::prox::{project_box, prox_g1, prox_g2};
use crate::ssn::{SsnContext, SsnParams, SsnStats};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Multiplier magnitude beyond which the run is declared suspect; the method
/// assumes a feasible bounded problem and its duals stay bounded on those.
pub const DUAL_SAFEGUARD: f64 = 1e10;

/// The penalty grows when the max residual fails to shrink by this factor
/// between consecutive outer iterations.
pub const STALL_FACTOR: f64 = 0.95;

/// Consecutive budget-exhausted inner runs tolerated before slow residual
/// progress counts as a stall. Exhaustion with progress is not a failure;
/// the next run resumes the same Newton walk, so growing the penalty early
/// just makes the subproblems harder for no reason.
pub const SOFT_FAIL_PATIENCE: u32 = 3;

/// Penalty, proximal, and inner-tolerance schedule of the outer loop.
#[derive(Debug, Clone)]
pub struct PenaltySchedule {
    pub beta0: f64,
    pub beta_inf: f64,
    pub rho0: f64,
    pub beta_growth: f64,
    /// Constant ratio beta_k / rho_k.
    pub tau: f64,
    pub eps0: f64,
    pub eps_decay: f64,
    pub max_outer: usize,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            beta0: 10.0,
            beta_inf: 1e8,
            rho0: 50.0,
            beta_growth: 5.0,
            tau: 10.0 / 50.0,
            eps0: 1.0,
            eps_decay: 0.5,
            max_outer: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    SuspectedInfeasible,
    NumericalError,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::SuspectedInfeasible => "suspected-infeasible",
            SolveStatus::NumericalError => "numerical-error",
        };
        f.write_str(s)
    }
}

/// Final accounting of one solve. `residuals` holds, in order: dual
/// stationarity in x, stationarity in w, primal feasibility, and box
/// complementarity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub outer_iters: u64,
    pub inner_iters_total: u64,
    pub factorizations: u64,
    pub residuals: [f64; 4],
    pub objective: f64,
    pub wall_time_s: f64,
    pub active_set_sizes: (usize, usize),
    pub warmstart_iters: u64,
}

impl SolveReport {
    /// Iteration counters in the "PMM(SSN)[Fact.]" layout.
    pub fn counters(&self) -> String {
        format!(
            "{}({})[{}]",
            self.outer_iters, self.inner_iters_total, self.factorizations
        )
    }
}

/// Per-outer-iteration trace for audits of the inner solver's behavior.
#[derive(Debug, Clone)]
pub struct OuterRecord {
    pub beta: f64,
    pub rho: f64,
    pub zeta: f64,
    pub eps_inner: f64,
    pub stats: SsnStats,
    /// Appendix-style termination residuals after this iteration's updates.
    pub residuals: [f64; 4],
}

/// Multiplier update for the box term: the new multiplier is the gap between
/// the penalized point and its box projection, scaled back by beta.
pub fn z_update(z_k: &[f64], x_next: &[f64], beta: f64, a_l: &[f64], a_u: &[f64]) -> Vec<f64> {
    debug_assert!(beta > 0.0);
    let shifted: Vec<f64> = z_k
        .iter()
        .zip(x_next)
        .map(|(z, x)| z / beta + x)
        .collect();
    let proj = project_box(&shifted, a_l, a_u);
    (0..z_k.len())
        .map(|i| z_k[i] + beta * (x_next[i] - proj[i]))
        .collect()
}

/// One penalty-schedule step: grows beta only when progress stalled, and
/// keeps rho coupled through the constant ratio.
pub fn penalty_update(
    sched: &PenaltySchedule,
    _k: usize,
    beta: f64,
    stalled: bool,
) -> (f64, f64) {
    let beta_next = if stalled {
        (beta * sched.beta_growth).min(sched.beta_inf)
    } else {
        beta
    };
    (beta_next, beta_next / sched.tau)
}

/// The four optimality residuals of the original problem, measured with
/// unit-scale proximal maps, and whether all are within `tol`.
pub fn check_termination(p: &ProblemData, it: &Iterate, tol: f64) -> (bool, [f64; 4]) {
    let (n, l, m) = (p.n(), p.l(), p.m());
    let (x, w, y, z) = (&it.x, &it.w, &it.y, &it.z);

    let mut grad = vec![0f64; n];
    p.q.matvec_add(1.0, x, &mut grad);
    p.c_mat_t().matvec_add(-1.0, &y[..l], &mut grad);
    p.a_mat_t().matvec_add(-1.0, &y[l..], &mut grad);
    let v: Vec<f64> = (0..n).map(|i| x[i] - (p.c[i] + grad[i] + z[i])).collect();
    let px = prox_g1(&v, 1.0, &p.d_diag);
    let diff_x: Vec<f64> = (0..n).map(|i| x[i] - px[i]).collect();
    let res1 = norm2(&diff_x) / (1.0 + norm_inf(&p.c));

    let u: Vec<f64> = (0..l).map(|i| w[i] - y[i]).collect();
    let pw = prox_g2(&u, 1.0);
    let diff_w: Vec<f64> = (0..l).map(|i| w[i] - pw[i]).collect();
    let res2 = norm2(&diff_w);

    let mut feas = vec![0f64; l + m];
    p.c_mat.matvec_add(1.0, x, &mut feas[..l]);
    p.a_mat.matvec_add(1.0, x, &mut feas[l..]);
    for i in 0..l {
        feas[i] += p.d[i] - w[i];
    }
    for t in 0..m {
        feas[l + t] -= p.b[t];
    }
    let res3 = norm2(&feas) / (1.0 + norm_inf(&p.b) + norm_inf(&p.d));

    let xz: Vec<f64> = (0..n).map(|i| x[i] + z[i]).collect();
    let pb = project_box(&xz, &p.a_l, &p.a_u);
    let diff_b: Vec<f64> = (0..n).map(|i| x[i] - pb[i]).collect();
    let res4 = norm2(&diff_b) / (1.0 + norm_inf(x) + norm_inf(z));

    let res = [res1, res2, res3, res4];
    (res.iter().all(|r| *r <= tol), res)
}

/// Objective reported for a near-optimal iterate: x snapped into the box and
/// w recomputed from the coupling rows, so the value refers to a point that
/// satisfies K and the w-definition exactly.
pub fn report_objective(p: &ProblemData, x: &[f64]) -> f64 {
    let xp = project_box(x, &p.a_l, &p.a_u);
    let mut w = p.d.clone();
    p.c_mat.matvec_add(1.0, &xp, &mut w);
    p.objective(&xp, &w)
}

/// Full outer loop with per-iteration traces.
pub fn pmm_solve_traced(
    p: &ProblemData,
    start: Iterate,
    sched: &PenaltySchedule,
    tol: f64,
    ssn: &SsnParams,
) -> (Iterate, SolveReport, Vec<OuterRecord>) {
    debug_assert!(start.dims_match(p));
    let clock = Instant::now();
    let Iterate {
        mut x,
        mut w,
        mut y,
        mut z,
    } = start;

    let mut beta = sched.beta0;
    let mut rho = sched.rho0;
    let mut cache = FactorCache::new();
    let mut trace: Vec<OuterRecord> = Vec::new();

    let mut status = SolveStatus::MaxIter;
    let mut outer_iters = 0u64;
    let mut inner_total = 0u64;
    let mut fact_total = 0u64;
    let mut sets_at_exit = (0usize, 0usize);
    let mut prev_max_res = f64::INFINITY;
    let mut fails_at_beta = 0u32;
    let mut soft_streak = 0u32;

    for k in 0..sched.max_outer {
        let eps_k = (sched.eps0 * sched.eps_decay.powi(k as i32)).max(0.1 * tol);
        let zeta = 1.0f64.min(1.0 / beta);
        let (x_k, y_k, z_k) = (x.clone(), y.clone(), z.clone());
        let ctx = SsnContext {
            p,
            x_anchor: &x_k,
            y_anchor: &y_k,
            z_anchor: &z_k,
            beta,
            rho,
            zeta,
            eps_inner: eps_k,
            params: ssn.clone(),
        };
        let solved = ctx.solve((x.clone(), w.clone(), y.clone()), &mut cache);
        outer_iters = (k + 1) as u64;
        let stats = match solved {
            Ok(((xn, wn, yn), stats)) => {
                x = xn;
                w = wn;
                y = yn;
                stats
            }
            Err(_) => {
                status = SolveStatus::NumericalError;
                break;
            }
        };
        inner_total += stats.iterations;
        fact_total += stats.factorizations;
        sets_at_exit = stats.final_sets;
        let inner_ok = stats.converged;

        z = z_update(&z_k, &x, beta, &p.a_l, &p.a_u);

        let it = Iterate {
            x: x.clone(),
            w: w.clone(),
            y: y.clone(),
            z: z.clone(),
        };
        let (done, res) = check_termination(p, &it, tol);
        trace.push(OuterRecord {
            beta,
            rho,
            zeta,
            eps_inner: eps_k,
            stats,
            residuals: res,
        });
        if done {
            status = SolveStatus::Optimal;
            break;
        }
        if norm_inf(&y) > DUAL_SAFEGUARD || norm_inf(&z) > DUAL_SAFEGUARD {
            status = SolveStatus::SuspectedInfeasible;
            break;
        }

        let bisect = std::env::var("PWLQP_OLD_STALL").is_ok();
        // Only a line-search breakdown is a hard inner failure. A run that
        // spent its budget still descending hands its progress to the next
        // outer step and must not push the penalty up.
        let hard_fail = !inner_ok
            && (trace.last().map_or(false, |r| r.stats.line_search_failed)
                || trace.last().map_or(true, |r| r.stats.steps.is_empty()));
        if if bisect { !inner_ok } else { hard_fail } {
            fails_at_beta += 1;
        } else if inner_ok {
            fails_at_beta = 0;
        }
        soft_streak = if inner_ok { 0 } else { soft_streak + 1 };
        // An outer step whose subproblem was already solved at entry carries
        // no new information; only steps with actual inner work can stall.
        let worked = trace.last().map_or(true, |r| r.stats.iterations > 0);
        let max_res = res.iter().fold(0.0f64, |a, r| a.max(*r));
        let slow = worked && max_res > STALL_FACTOR * prev_max_res;
        let stalled = (slow && (bisect || inner_ok || soft_streak >= SOFT_FAIL_PATIENCE))
            || fails_at_beta >= 2;
        let (beta_next, rho_next) = penalty_update(sched, k, beta, stalled);
        if beta_next != beta {
            fails_at_beta = 0;
        }
        beta = beta_next;
        rho = rho_next;
        prev_max_res = max_res;
    }

    let it = Iterate { x, w, y, z };
    let (done, residuals) = check_termination(p, &it, tol);
    if done {
        // A breakdown or budget exit at an already-optimal iterate still
        // counts as a solve; keeps status consistent with the residuals.
        status = SolveStatus::Optimal;
    }
    let report = SolveReport {
        status,
        outer_iters,
        inner_iters_total: inner_total,
        factorizations: fact_total,
        residuals,
        objective: report_objective(p, &it.x),
        wall_time_s: clock.elapsed().as_secs_f64(),
        active_set_sizes: sets_at_exit,
        warmstart_iters: 0,
    };
    (it, report, trace)
}

/// Outer loop without trace collection.
pub fn pmm_solve(
    p: &ProblemData,
    start: Iterate,
    sched: &PenaltySchedule,
    tol: f64,
) -> (Iterate, SolveReport) {
    let (it, report, _) = pmm_solve_traced(p, start, sched, tol, &SsnParams::default());
    (it, report)
}
