//! Sparse LDL^T factorization for symmetric quasi-definite matrices.
//!
//! Quasi-definite matrices are strongly factorizable: every symmetric
//! permutation admits LDL^T with a diagonal D and no 2x2 pivots, so the
//! ordering is chosen purely for sparsity (approximate minimum degree) and
//! the numeric phase never pivots. Pivot signs are checked against the
//! inertia the caller expects; a sign flip or a vanishing pivot means the
//! assembled system lost definiteness and is reported as a breakdown rather
//! than silently producing garbage.

use thiserror::Error;

use super::sparse::CscMatrix;

/// Pivots below this magnitude are treated as numerical breakdown.
pub const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("pivot {value:.3e} at elimination step {step} (dim {dim}) below magnitude floor")]
    TinyPivot { step: usize, dim: usize, value: f64 },
    #[error(
        "inertia mismatch: expected {expected_neg} negative / {expected_pos} positive pivots, \
         got {got_neg}/{got_pos}"
    )]
    WrongInertia {
        expected_neg: usize,
        expected_pos: usize,
        got_neg: usize,
        got_pos: usize,
    },
}

/// Approximate minimum-degree ordering.
///
/// Quotient-graph scheme: eliminated nodes become elements whose member lists
/// stand in for the fill clique, and node degrees are tracked as cheap upper
/// bounds (element overlaps are not deduplicated). Exactness is irrelevant
/// for correctness; any symmetric order factors.
pub fn amd_order(upper: &CscMatrix) -> Vec<usize> {
    let n = upper.ncols();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in upper.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }

    let mut elements: Vec<Vec<usize>> = Vec::new();
    let mut elem_alive: Vec<bool> = Vec::new();
    let mut elem_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = adj.iter().map(|l| l.len()).collect();
    let mut mark = vec![usize::MAX; n];
    let mut perm = Vec::with_capacity(n);

    for step in 0..n {
        let mut v = usize::MAX;
        let mut best = usize::MAX;
        for u in 0..n {
            if alive[u] && deg[u] < best {
                best = deg[u];
                v = u;
            }
        }
        perm.push(v);
        alive[v] = false;

        // Alive neighborhood of v, direct edges plus element members.
        let mut lv: Vec<usize> = Vec::new();
        for &u in &adj[v] {
            if alive[u] && mark[u] != step {
                mark[u] = step;
                lv.push(u);
            }
        }
        for &e in &elem_of[v] {
            if !elem_alive[e] {
                continue;
            }
            for &u in &elements[e] {
                if alive[u] && mark[u] != step {
                    mark[u] = step;
                    lv.push(u);
                }
            }
            elem_alive[e] = false; // absorbed into the new element
        }
        if lv.is_empty() {
            continue;
        }
        lv.sort_unstable();
        let s = lv.len();
        let eid = elements.len();
        for &u in &lv {
            elem_of[u].push(eid);
            // Degree bound: lose v, gain the rest of the new clique.
            deg[u] = (deg[u] + s).saturating_sub(2).min(n - 1);
        }
        elements.push(lv);
        elem_alive.push(true);
    }
    perm
}

/// LDL^T factors of a permuted symmetric matrix, plus the original upper
/// triangle kept for residual refinement.
#[derive(Debug, Clone)]
pub struct Factorization {
    dim: usize,
    perm: Vec<usize>, // new -> old
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    upper: CscMatrix,
    inertia: (usize, usize),
}

/// Factors `Sym(upper)` with an AMD fill-reducing order.
///
/// `expected_inertia` is (negative, positive) pivot counts; `None` skips the
/// sign check (tiny pivots still error).
pub fn factorize(
    upper: CscMatrix,
    expected_inertia: Option<(usize, usize)>,
) -> Result<Factorization, FactorError> {
    let n = upper.ncols();
    debug_assert_eq!(upper.nrows(), n);
    let perm = amd_order(&upper);
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }

    // Upper triangle of the permuted matrix.
    let mut trips = Vec::with_capacity(upper.nnz());
    for (i, j, v) in upper.iter() {
        let (pi, pj) = (iperm[i], iperm[j]);
        let (r, c) = if pi <= pj { (pi, pj) } else { (pj, pi) };
        trips.push((r, c, v));
    }
    let pm = CscMatrix::from_triplets(n, n, &trips).expect("permuted indices in range");

    // Symbolic phase: elimination tree and column counts.
    let mut parent = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];
    for k in 0..n {
        flag[k] = k;
        let (rows, _) = pm.col(k);
        for &i0 in rows {
            if i0 >= k {
                continue;
            }
            let mut i = i0;
            while flag[i] != k {
                if parent[i] == usize::MAX {
                    parent[i] = k;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }

    let mut lp = vec![0usize; n + 1];
    for i in 0..n {
        lp[i + 1] = lp[i] + lnz[i];
    }
    let mut lfill = vec![0usize; n];
    let mut li = vec![0usize; lp[n]];
    let mut lx = vec![0f64; lp[n]];
    let mut d = vec![0f64; n];
    let mut y = vec![0f64; n];
    let mut pattern = vec![0usize; n];
    flag.fill(usize::MAX);
    let (mut neg, mut pos) = (0usize, 0usize);

    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        y[k] = 0.0;
        let (rows, vals) = pm.col(k);
        for (&i0, &v) in rows.iter().zip(vals) {
            y[i0] += v;
            if i0 == k {
                continue;
            }
            // Walk toward the root, collecting the row pattern in topological
            // order; the low end of `pattern` doubles as the walk stack.
            let mut len = 0usize;
            let mut i = i0;
            while flag[i] != k {
                pattern[len] = i;
                len += 1;
                flag[i] = k;
                i = parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = pattern[len];
            }
        }
        let mut dk = y[k];
        y[k] = 0.0;
        for idx in top..n {
            let i = pattern[idx];
            let yi = y[i];
            y[i] = 0.0;
            let lki = yi / d[i];
            for p in lp[i]..lp[i] + lfill[i] {
                y[li[p]] -= lx[p] * yi;
            }
            dk -= lki * yi;
            let p = lp[i] + lfill[i];
            li[p] = k;
            lx[p] = lki;
            lfill[i] += 1;
        }
        if dk.abs() < PIVOT_FLOOR || !dk.is_finite() {
            return Err(FactorError::TinyPivot {
                step: k,
                dim: n,
                value: dk,
            });
        }
        if dk < 0.0 {
            neg += 1;
        } else {
            pos += 1;
        }
        d[k] = dk;
    }

    if let Some((eneg, epos)) = expected_inertia {
        if (neg, pos) != (eneg, epos) {
            return Err(FactorError::WrongInertia {
                expected_neg: eneg,
                expected_pos: epos,
                got_neg: neg,
                got_pos: pos,
            });
        }
    }

    Ok(Factorization {
        dim: n,
        perm,
        lp,
        li,
        lx,
        d,
        upper,
        inertia: (neg, pos),
    })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// (negative, positive) pivot counts.
    pub fn inertia(&self) -> (usize, usize) {
        self.inertia
    }

    pub fn l_nnz(&self) -> usize {
        self.lx.len()
    }

    fn solve_permuted(&self, b: &mut [f64]) {
        let n = self.dim;
        for k in 0..n {
            let bk = b[k];
            if bk != 0.0 {
                for p in self.lp[k]..self.lp[k + 1] {
                    b[self.li[p]] -= self.lx[p] * bk;
                }
            }
        }
        for k in 0..n {
            b[k] /= self.d[k];
        }
        for k in (0..n).rev() {
            let mut bk = b[k];
            for p in self.lp[k]..self.lp[k + 1] {
                bk -= self.lx[p] * b[self.li[p]];
            }
            b[k] = bk;
        }
    }

    fn solve_once(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let mut pb = vec![0f64; n];
        for new in 0..n {
            pb[new] = rhs[self.perm[new]];
        }
        self.solve_permuted(&mut pb);
        for new in 0..n {
            out[self.perm[new]] = pb[new];
        }
    }

    /// Solves Sym(upper) x = rhs with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.dim);
        let n = self.dim;
        let mut x = vec![0f64; n];
        self.solve_once(rhs, &mut x);
        let mut r = vec![0f64; n];
        self.upper.sym_matvec_upper(&x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        let mut dx = vec![0f64; n];
        self.solve_once(&r, &mut dx);
        for i in 0..n {
            x[i] += dx[i];
        }
        x
    }

    /// Max-norm residual of a candidate solution against the stored matrix.
    pub fn residual_inf(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut ax = vec![0f64; self.dim];
        self.upper.sym_matvec_upper(x, &mut ax);
        ax.iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
