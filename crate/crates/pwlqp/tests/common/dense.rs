//! Dense linear algebra for test oracles. Row-major storage, partial-pivot
//! LU, deliberately independent of the crate's sparse kernels.

#[derive(Debug, Clone)]
pub struct DenseMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMat {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }
}

/// Solves a dense square system by LU with partial pivoting. Returns None on
/// numerical singularity.
pub fn lu_solve(a: &DenseMat, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    assert_eq!(b.len(), n);
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = m[piv[k] * n + k].abs();
        for i in (k + 1)..n {
            let v = m[piv[i] * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < 1e-13 {
            return None;
        }
        piv.swap(k, p);
        let pk = piv[k];
        for i in (k + 1)..n {
            let pi = piv[i];
            let f = m[pi * n + k] / m[pk * n + k];
            m[pi * n + k] = f;
            for j in (k + 1)..n {
                m[pi * n + j] -= f * m[pk * n + j];
            }
        }
    }
    // Forward substitution on the permuted rhs.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = x[piv[i]];
        for j in 0..i {
            s -= m[piv[i] * n + j] * y[j];
        }
        y[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= m[piv[i] * n + j] * x[j];
        }
        x[i] = s / m[piv[i] * n + i];
    }
    Some(x)
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
