//! Sparse linear algebra: CSC matrices, quasi-definite LDL^T, and the
//! reduced saddle systems the semismooth Newton step solves.

pub mod ldl;
pub mod sparse;

pub use ldl::{amd_order, factorize, FactorError, Factorization, PIVOT_FLOOR};
pub use sparse::{CscMatrix, SparseError};

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max norm.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Identifies one assembled saddle system up to numerical identity: the three
/// selector bitsets plus the penalty triple. Two systems with equal signatures
/// have identical matrices, so a factorization can be reused.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    bg1: Vec<u64>,
    bg2: Vec<u64>,
    bdelta: Vec<u64>,
    beta_bits: u64,
    zeta_bits: u64,
    rho_bits: u64,
}

fn pack_bits(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

impl Signature {
    pub fn new(bg1: &[bool], bg2: &[bool], bdelta: &[bool], beta: f64, zeta: f64, rho: f64) -> Self {
        Signature {
            bg1: pack_bits(bg1),
            bg2: pack_bits(bg2),
            bdelta: pack_bits(bdelta),
            beta_bits: beta.to_bits(),
            zeta_bits: zeta.to_bits(),
            rho_bits: rho.to_bits(),
        }
    }
}

/// Reduced Newton saddle system
///
/// ```text
/// [ H  E^T ] [ dx_B ]   [ rhs_1 ]
/// [ E  rI  ] [ dy_R ] = [ rhs_2 ]
/// ```
///
/// with H negative definite (stored as its upper triangle) and r > 0, i.e. a
/// symmetric quasi-definite matrix with inertia (|B|, q).
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    /// Upper triangle of the negative-definite block, dimension nb.
    pub h_upper: CscMatrix,
    /// Transpose of the coupling block: nb x q, column t holding coupling row t.
    pub e_t: CscMatrix,
    /// Positive diagonal of the regularized block.
    pub reg: f64,
    pub signature: Signature,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.h_upper.ncols() + self.e_t.ncols()
    }

    /// Upper triangle of the full (nb+q)-dimensional matrix.
    pub fn joint_upper(&self) -> CscMatrix {
        let nb = self.h_upper.ncols();
        let q = self.e_t.ncols();
        let dim = nb + q;
        let nnz = self.h_upper.nnz() + self.e_t.nnz() + q;
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut rows = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for j in 0..nb {
            let (r, v) = self.h_upper.col(j);
            rows.extend_from_slice(r);
            vals.extend_from_slice(v);
            col_ptr.push(rows.len());
        }
        for t in 0..q {
            let (r, v) = self.e_t.col(t);
            rows.extend_from_slice(r);
            vals.extend_from_slice(v);
            rows.push(nb + t);
            vals.push(self.reg);
            col_ptr.push(rows.len());
        }
        CscMatrix::from_parts(dim, dim, col_ptr, rows, vals)
    }

    /// Factors the saddle matrix, enforcing the quasi-definite inertia.
    pub fn factorize(&self) -> Result<Factorization, FactorError> {
        let nb = self.h_upper.ncols();
        let q = self.e_t.ncols();
        factorize(self.joint_upper(), Some((nb, q)))
    }
}

/// Depth-one factorization cache keyed by signature.
#[derive(Debug, Default)]
pub struct FactorCache {
    entry: Option<(Signature, Factorization)>,
}

impl FactorCache {
    pub fn new() -> Self {
        FactorCache { entry: None }
    }

    /// True when the most recent factorization matches `sig`.
    pub fn hit(&self, sig: &Signature) -> bool {
        matches!(&self.entry, Some((s, _)) if s == sig)
    }

    /// Returns the cached factorization for this system's signature, factoring
    /// (and bumping `count`) only on a miss.
    pub fn get_or_factorize(
        &mut self,
        sys: &SaddleSystem,
        count: &mut u64,
    ) -> Result<&Factorization, FactorError> {
        if !self.hit(&sys.signature) {
            let f = sys.factorize()?;
            *count += 1;
            self.entry = Some((sys.signature.clone(), f));
        }
        Ok(&self.entry.as_ref().expect("entry just ensured").1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_distinguishes_sets_and_penalties() {
        let a = Signature::new(&[true, false], &[true], &[false, false], 10.0, 0.1, 50.0);
        let b = Signature::new(&[true, false], &[true], &[false, false], 10.0, 0.1, 50.0);
        assert_eq!(a, b);
        let c = Signature::new(&[true, true], &[true], &[false, false], 10.0, 0.1, 50.0);
        assert_ne!(a, c);
        let d = Signature::new(&[true, false], &[true], &[false, true], 10.0, 0.1, 50.0);
        assert_ne!(a, d);
        let e = Signature::new(&[true, false], &[true], &[false, false], 50.0, 0.1, 50.0);
        assert_ne!(a, e);
    }

    #[test]
    fn cache_reuses_matching_signature() {
        let h = CscMatrix::from_triplets(1, 1, &[(0, 0, -2.0)]).unwrap();
        let et = CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
        let sys = SaddleSystem {
            h_upper: h,
            e_t: et,
            reg: 0.5,
            signature: Signature::new(&[true], &[false], &[true], 10.0, 0.1, 50.0),
        };
        let mut cache = FactorCache::new();
        let mut count = 0u64;
        cache.get_or_factorize(&sys, &mut count).unwrap();
        cache.get_or_factorize(&sys, &mut count).unwrap();
        assert_eq!(count, 1);
        let mut other = sys.clone();
        other.signature = Signature::new(&[false], &[false], &[true], 10.0, 0.1, 50.0);
        cache.get_or_factorize(&other, &mut count).unwrap();
        assert_eq!(count, 2);
    }

    #[test]
    fn joint_solve_matches_two_by_two() {
        // [[-2, 1], [1, 0.5]] x = (1, 0) -> (-0.25, 0.5)
        let sys = SaddleSystem {
            h_upper: CscMatrix::from_triplets(1, 1, &[(0, 0, -2.0)]).unwrap(),
            e_t: CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap(),
            reg: 0.5,
            signature: Signature::new(&[true], &[false], &[false], 1.0, 1.0, 1.0),
        };
        let f = sys.factorize().unwrap();
        let x = f.solve(&[1.0, 0.0]);
        assert!((x[0] + 0.25).abs() < 1e-14);
        assert!((x[1] - 0.5).abs() < 1e-14);
    }
}
