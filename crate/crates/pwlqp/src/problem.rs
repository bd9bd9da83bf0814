//! Problem data and evaluation for the piecewise-linear quadratic program
//!
//! ```text
//!   minimize    c'x + (1/2) x'Qx + sum_i (w_i)_+ + sum_i D_ii |x_i| + k0
//!   subject to  Cx + d - w = 0
//!               Ax = b
//!               a_l <= x <= a_u   (entries may be infinite)
//! ```
//!
//! `w` is the vector of piecewise-linear arguments; the plus-part sum prices
//! only its positive components. Absolute-value and componentwise-max sums
//! reduce to this shape (see [`ProblemData::absorb_abs_term`] and
//! [`ProblemData::absorb_max_term`]).

use std::sync::OnceLock;

use thiserror::Error;

use crate::linalg::{dot, CscMatrix};

/// One validation failure, tied to the offending field (and index when the
/// problem is entrywise).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub index: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]: {}", self.field, i, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("term has {got} columns, problem has {expected}")]
    ColumnMismatch { got: usize, expected: usize },
    #[error("term blocks disagree: {0}")]
    BlockMismatch(String),
}

/// Immutable problem data. Treat as frozen once validated; the absorbing
/// transformers return new instances instead of mutating.
#[derive(Debug)]
pub struct ProblemData {
    /// Linear cost, length n.
    pub c: Vec<f64>,
    /// Quadratic cost, n x n, symmetric positive semidefinite.
    pub q: CscMatrix,
    /// Piecewise-linear rows, l x n.
    pub c_mat: CscMatrix,
    /// Piecewise-linear offsets, length l.
    pub d: Vec<f64>,
    /// Equality rows, m x n.
    pub a_mat: CscMatrix,
    /// Equality right-hand side, length m.
    pub b: Vec<f64>,
    /// Nonnegative weights of the weighted l1 term, length n.
    pub d_diag: Vec<f64>,
    /// Box lower bounds, length n, -inf allowed.
    pub a_l: Vec<f64>,
    /// Box upper bounds, length n, +inf allowed.
    pub a_u: Vec<f64>,
    /// Constant objective offset carried through reformulations.
    pub const_offset: f64,
    c_mat_t: OnceLock<CscMatrix>,
    a_mat_t: OnceLock<CscMatrix>,
}

impl Clone for ProblemData {
    fn clone(&self) -> Self {
        ProblemData {
            c: self.c.clone(),
            q: self.q.clone(),
            c_mat: self.c_mat.clone(),
            d: self.d.clone(),
            a_mat: self.a_mat.clone(),
            b: self.b.clone(),
            d_diag: self.d_diag.clone(),
            a_l: self.a_l.clone(),
            a_u: self.a_u.clone(),
            const_offset: self.const_offset,
            c_mat_t: OnceLock::new(),
            a_mat_t: OnceLock::new(),
        }
    }
}

impl PartialEq for ProblemData {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
            && self.q == other.q
            && self.c_mat == other.c_mat
            && self.d == other.d
            && self.a_mat == other.a_mat
            && self.b == other.b
            && self.d_diag == other.d_diag
            && self.a_l == other.a_l
            && self.a_u == other.a_u
            && self.const_offset == other.const_offset
    }
}

impl ProblemData {
    pub fn new(
        c: Vec<f64>,
        q: CscMatrix,
        c_mat: CscMatrix,
        d: Vec<f64>,
        a_mat: CscMatrix,
        b: Vec<f64>,
        d_diag: Vec<f64>,
        a_l: Vec<f64>,
        a_u: Vec<f64>,
        const_offset: f64,
    ) -> Self {
        ProblemData {
            c,
            q,
            c_mat,
            d,
            a_mat,
            b,
            d_diag,
            a_l,
            a_u,
            const_offset,
            c_mat_t: OnceLock::new(),
            a_mat_t: OnceLock::new(),
        }
    }

    /// Unconstrained problem shell: n variables, no piecewise rows, no
    /// equalities, free box, zero costs. Useful as a starting point in tests
    /// and model construction.
    pub fn empty(n: usize) -> Self {
        ProblemData::new(
            vec![0.0; n],
            CscMatrix::zeros(n, n),
            CscMatrix::zeros(0, n),
            Vec::new(),
            CscMatrix::zeros(0, n),
            Vec::new(),
            vec![0.0; n],
            vec![f64::NEG_INFINITY; n],
            vec![f64::INFINITY; n],
            0.0,
        )
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn l(&self) -> usize {
        self.d.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Transpose of the piecewise-linear block, cached.
    pub fn c_mat_t(&self) -> &CscMatrix {
        self.c_mat_t.get_or_init(|| self.c_mat.transpose())
    }

    /// Transpose of the equality block, cached.
    pub fn a_mat_t(&self) -> &CscMatrix {
        self.a_mat_t.get_or_init(|| self.a_mat.transpose())
    }

    /// Collects every dimension and sign violation; `Ok` means solvable shape.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut v: Vec<Violation> = Vec::new();
        let n = self.n();
        let l = self.l();
        let m = self.m();
        let mut dim = |field: &'static str, got: (usize, usize), want: (usize, usize)| {
            if got != want {
                v.push(Violation {
                    field,
                    index: None,
                    message: format!("shape {}x{}, expected {}x{}", got.0, got.1, want.0, want.1),
                });
            }
        };
        dim("Q", (self.q.nrows(), self.q.ncols()), (n, n));
        dim("C", (self.c_mat.nrows(), self.c_mat.ncols()), (l, n));
        dim("A", (self.a_mat.nrows(), self.a_mat.ncols()), (m, n));
        let mut len = |field: &'static str, got: usize, want: usize| {
            if got != want {
                v.push(Violation {
                    field,
                    index: None,
                    message: format!("length {got}, expected {want}"),
                });
            }
        };
        len("D", self.d_diag.len(), n);
        len("a_l", self.a_l.len(), n);
        len("a_u", self.a_u.len(), n);
        for (i, &w) in self.d_diag.iter().enumerate() {
            if !(w >= 0.0) {
                v.push(Violation {
                    field: "D",
                    index: Some(i),
                    message: format!("weight {w} must be nonnegative"),
                });
            }
        }
        for i in 0..self.a_l.len().min(self.a_u.len()) {
            if self.a_l[i].is_nan() || self.a_u[i].is_nan() {
                v.push(Violation {
                    field: "a_l/a_u",
                    index: Some(i),
                    message: "bound is NaN".into(),
                });
            } else if self.a_l[i] > self.a_u[i] {
                v.push(Violation {
                    field: "a_l/a_u",
                    index: Some(i),
                    message: format!("empty box: {} > {}", self.a_l[i], self.a_u[i]),
                });
            }
        }
        let finite = |field: &'static str, xs: &[f64], v: &mut Vec<Violation>| {
            for (i, x) in xs.iter().enumerate() {
                if !x.is_finite() {
                    v.push(Violation {
                        field,
                        index: Some(i),
                        message: format!("non-finite entry {x}"),
                    });
                }
            }
        };
        finite("c", &self.c, &mut v);
        finite("d", &self.d, &mut v);
        finite("b", &self.b, &mut v);
        if self.q.nrows() == self.q.ncols() {
            let scale = self.q.values().iter().fold(0f64, |a, x| a.max(x.abs()));
            let asym = self.q.asymmetry();
            if asym > 1e-12 * (1.0 + scale) {
                v.push(Violation {
                    field: "Q",
                    index: None,
                    message: format!("not symmetric (max |Q - Q'| = {asym:.3e})"),
                });
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Objective value at (x, w). Returns +inf when x leaves the box; callers
    /// wanting a box-insensitive value should project x first.
    pub fn objective(&self, x: &[f64], w: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(w.len(), self.l());
        for i in 0..self.n() {
            if x[i] < self.a_l[i] || x[i] > self.a_u[i] {
                return f64::INFINITY;
            }
        }
        let mut qx = vec![0f64; self.n()];
        self.q.matvec(x, &mut qx);
        let mut val = self.const_offset + dot(&self.c, x) + 0.5 * dot(x, &qx);
        for &wi in w {
            if wi > 0.0 {
                val += wi;
            }
        }
        for (xi, di) in x.iter().zip(&self.d_diag) {
            val += di * xi.abs();
        }
        val
    }

    /// Rewrites `self` plus the term `||C1 x + d1||_1` into pure plus-part
    /// form: the linear part folds into the cost, and doubled rows join the
    /// piecewise block.
    pub fn absorb_abs_term(&self, c1: &CscMatrix, d1: &[f64]) -> Result<ProblemData, TransformError> {
        if c1.ncols() != self.n() {
            return Err(TransformError::ColumnMismatch {
                got: c1.ncols(),
                expected: self.n(),
            });
        }
        if c1.nrows() != d1.len() {
            return Err(TransformError::BlockMismatch(format!(
                "C1 has {} rows, d1 has {}",
                c1.nrows(),
                d1.len()
            )));
        }
        let mut out = self.clone();
        // |v| = -v + 2 (v)_+ row by row.
        let mut fold = vec![0f64; self.n()];
        c1.matvec_transpose(&vec![1.0; c1.nrows()], &mut fold);
        for (ci, fi) in out.c.iter_mut().zip(&fold) {
            *ci -= fi;
        }
        out.const_offset -= d1.iter().sum::<f64>();
        out.c_mat = stack_rows(&self.c_mat, &scale_matrix(c1, 2.0));
        out.d.extend(d1.iter().map(|v| 2.0 * v));
        Ok(ProblemData::new(
            out.c,
            out.q,
            out.c_mat,
            out.d,
            out.a_mat,
            out.b,
            out.d_diag,
            out.a_l,
            out.a_u,
            out.const_offset,
        ))
    }

    /// Rewrites `self` plus the term `sum_i max{(C1 x + d1)_i, (C2 x + d2)_i}`
    /// into pure plus-part form.
    pub fn absorb_max_term(
        &self,
        c1: &CscMatrix,
        d1: &[f64],
        c2: &CscMatrix,
        d2: &[f64],
    ) -> Result<ProblemData, TransformError> {
        if c1.ncols() != self.n() || c2.ncols() != self.n() {
            return Err(TransformError::ColumnMismatch {
                got: if c1.ncols() != self.n() { c1.ncols() } else { c2.ncols() },
                expected: self.n(),
            });
        }
        if c1.nrows() != c2.nrows() || c1.nrows() != d1.len() || c2.nrows() != d2.len() {
            return Err(TransformError::BlockMismatch(format!(
                "rows: C1 {}, C2 {}, d1 {}, d2 {}",
                c1.nrows(),
                c2.nrows(),
                d1.len(),
                d2.len()
            )));
        }
        let mut out = self.clone();
        // max{u, v} = v + (u - v)_+ row by row.
        let mut fold = vec![0f64; self.n()];
        c2.matvec_transpose(&vec![1.0; c2.nrows()], &mut fold);
        for (ci, fi) in out.c.iter_mut().zip(&fold) {
            *ci += fi;
        }
        out.const_offset += d2.iter().sum::<f64>();
        let diff = add_matrices(c1, &scale_matrix(c2, -1.0));
        out.c_mat = stack_rows(&self.c_mat, &diff);
        out.d.extend(d1.iter().zip(d2).map(|(a, b)| a - b));
        Ok(ProblemData::new(
            out.c,
            out.q,
            out.c_mat,
            out.d,
            out.a_mat,
            out.b,
            out.d_diag,
            out.a_l,
            out.a_u,
            out.const_offset,
        ))
    }
}

fn scale_matrix(m: &CscMatrix, s: f64) -> CscMatrix {
    let trips: Vec<_> = m.iter().map(|(i, j, v)| (i, j, s * v)).collect();
    CscMatrix::from_triplets(m.nrows(), m.ncols(), &trips).expect("same shape")
}

fn add_matrices(a: &CscMatrix, b: &CscMatrix) -> CscMatrix {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut trips: Vec<_> = a.iter().collect();
    trips.extend(b.iter());
    CscMatrix::from_triplets(a.nrows(), a.ncols(), &trips).expect("same shape")
}

/// [top; bottom] with matching column counts.
fn stack_rows(top: &CscMatrix, bottom: &CscMatrix) -> CscMatrix {
    assert_eq!(top.ncols(), bottom.ncols());
    let off = top.nrows();
    let mut trips: Vec<_> = top.iter().collect();
    trips.extend(bottom.iter().map(|(i, j, v)| (i + off, j, v)));
    CscMatrix::from_triplets(top.nrows() + bottom.nrows(), top.ncols(), &trips)
        .expect("same column count")
}

/// Primal-dual point: x (n), piecewise arguments w (l), multipliers y (l+m)
/// for the coupling and equality rows, and the box multiplier z (n).
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Iterate {
    pub fn zeros(p: &ProblemData) -> Self {
        Iterate {
            x: vec![0.0; p.n()],
            w: vec![0.0; p.l()],
            y: vec![0.0; p.l() + p.m()],
            z: vec![0.0; p.n()],
        }
    }

    pub fn dims_match(&self, p: &ProblemData) -> bool {
        self.x.len() == p.n()
            && self.w.len() == p.l()
            && self.y.len() == p.l() + p.m()
            && self.z.len() == p.n()
    }
}
