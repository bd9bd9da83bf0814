//! Scratch diagnostics, not part of the example set.

use pwlqp::linalg::FactorCache;
use pwlqp::model::{build_cvar, synthetic_returns};
use pwlqp::pmm::{pmm_solve_traced, z_update, PenaltySchedule};
use pwlqp::problem::Iterate;
use pwlqp::ssn::{SsnContext, SsnParams};

fn main() {
    let assets = 28;
    let ds = synthetic_returns(assets, 1363, 7);
    let lo = vec![-1.0; assets];
    let hi = vec![0.6; assets];
    let p = build_cvar(&ds, 0.05, 1e-2, &lo, &hi).expect("valid parameters");
    let sched = PenaltySchedule::default();

    // Reproduce the outer state entering iteration 7 by replaying the loop.
    let mut x = vec![0.0; p.n()];
    let mut w = vec![0.0; p.l()];
    let mut y = vec![0.0; p.l() + p.m()];
    let mut z = vec![0.0; p.n()];
    let mut beta = sched.beta0;
    let mut rho = sched.rho0;
    let mut cache = FactorCache::new();
    let target_k = 7usize;
    for k in 0..target_k {
        let eps_k = (sched.eps0 * sched.eps_decay.powi(k as i32)).max(0.1 * 1e-5);
        let zeta = 1.0f64.min(1.0 / beta);
        let (x_k, y_k, z_k) = (x.clone(), y.clone(), z.clone());
        let ctx = SsnContext {
            p: &p,
            x_anchor: &x_k,
            y_anchor: &y_k,
            z_anchor: &z_k,
            beta,
            rho,
            zeta,
            eps_inner: eps_k,
            params: SsnParams::default(),
        };
        let ((xn, wn, yn), stats) = ctx.solve((x.clone(), w.clone(), y.clone()), &mut cache).unwrap();
        x = xn;
        w = wn;
        y = yn;
        z = z_update(&z_k, &x, beta, &p.a_l, &p.a_u);
        println!("replay k={k} inner={} conv={}", stats.iterations, stats.converged);
        let _ = (&rho,);
    }

    // Manual Newton walk at outer iteration 7 with dist printed per point.
    let eps_k = (sched.eps0 * sched.eps_decay.powi(target_k as i32)).max(0.1 * 1e-5);
    let zeta = 1.0f64.min(1.0 / beta);
    let (x_k, y_k, z_k) = (x.clone(), y.clone(), z.clone());
    let ctx = SsnContext {
        p: &p,
        x_anchor: &x_k,
        y_anchor: &y_k,
        z_anchor: &z_k,
        beta,
        rho,
        zeta,
        eps_inner: eps_k,
        params: SsnParams::default(),
    };
    let entry_dist = ctx.dist_to_stationarity(&x, &w, &y);
    println!(
        "k={target_k} beta={beta:.1e} zeta={zeta:.1e} eps={eps_k:.2e} entry_dist={entry_dist:.6e} theta0={:.6e}",
        ctx.merit(&x, &w, &y)
    );
    let mut sets = ctx.build_active_sets(&x, &w, &y);
    let mut cache2 = FactorCache::new();
    for iter in 0..20 {
        let mhat = ctx.residual_mhat(&x, &w, &y);
        let theta0: f64 = mhat.iter().map(|v| v * v).sum();
        let (sys, rhs, elim) = ctx.assemble_reduced(&w, &sets, &mhat);
        let mut nfact = 0u64;
        let reduced = if sys.dim() > 0 {
            cache2.get_or_factorize(&sys, &mut nfact).unwrap().solve(&rhs)
        } else {
            Vec::new()
        };
        let (dx, dw, dy) = ctx.recover_eliminated(&x, &w, &y, &sets, &elim, &reduced);
        let Some((mj, theta_after)) = ctx.line_search(&x, &w, &y, (&dx, &dw, &dy), theta0) else {
            println!("it={iter:2} LSFAIL theta0={theta0:.6e}");
            break;
        };
        let alpha = 0.5f64.powi(mj as i32);
        for (a, d) in x.iter_mut().zip(&dx) {
            *a += alpha * d;
        }
        for (a, d) in w.iter_mut().zip(&dw) {
            *a += alpha * d;
        }
        for (a, d) in y.iter_mut().zip(&dy) {
            *a += alpha * d;
        }
        sets = ctx.build_active_sets(&x, &w, &y);
        let dist = ctx.dist_to_stationarity(&x, &w, &y);
        println!(
            "it={iter:2} mj={mj:2} theta {theta0:.4e} -> {theta_after:.4e}  dist={dist:.6e}  sets=({},{})",
            sets.b1_idx.len(),
            sets.n2_idx.len()
        );
    }
}
