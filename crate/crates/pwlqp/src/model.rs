//! Constructors mapping datasets into solver problems: CVaR and mean
//! absolute semideviation portfolio selection, quantile regression, and
//! elastic-net soft-margin SVM.
//!
//! Linear costs on w have no slot in the canonical problem, so builders fold
//! them through the constraint rows: at feasibility w = Cx + d, hence a term
//! t'w becomes (C't)'x plus a constant.

use crate::linalg::CscMatrix;
use crate::problem::ProblemData;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("alpha must lie strictly inside (0,1), got {0}")]
    AlphaRange(f64),
    #[error("parameter {name} must be nonnegative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("feature index {index} out of range for dimension {dim} in row {row}")]
    FeatureIndex { row: usize, index: usize, dim: usize },
    #[error("label at row {row} is {value}, SVM labels must be -1 or +1")]
    LabelNotBinary { row: usize, value: f64 },
    #[error("need at least {need} scenarios, got {got}")]
    TooFewScenarios { need: usize, got: usize },
    #[error("bounds have length {got}, expected one per asset ({expected})")]
    BoundsLength { got: usize, expected: usize },
}

/// Scenario returns, one row per observation, plus the expected-return floor
/// the portfolio must meet.
#[derive(Debug, Clone)]
pub struct ReturnsDataset {
    rows: Vec<f64>,
    assets: usize,
    pub benchmark: f64,
}

impl ReturnsDataset {
    /// Benchmark defaults to the expected return of the uniform allocation
    /// when none is given.
    pub fn from_rows(rows: Vec<Vec<f64>>, benchmark: Option<f64>) -> Result<Self, ModelError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let assets = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * assets);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != assets {
                return Err(ModelError::RaggedRow {
                    row: i,
                    got: r.len(),
                    expected: assets,
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite { row: i });
            }
            flat.extend_from_slice(r);
        }
        let mut ds = ReturnsDataset {
            rows: flat,
            assets,
            benchmark: 0.0,
        };
        ds.benchmark = benchmark.unwrap_or_else(|| {
            ds.mean_returns().iter().sum::<f64>() / assets as f64
        });
        Ok(ds)
    }

    pub fn n_scenarios(&self) -> usize {
        self.rows.len() / self.assets
    }

    pub fn n_assets(&self) -> usize {
        self.assets
    }

    pub fn scenario(&self, i: usize) -> &[f64] {
        &self.rows[i * self.assets..(i + 1) * self.assets]
    }

    /// Sample mean return per asset.
    pub fn mean_returns(&self) -> Vec<f64> {
        let l = self.n_scenarios();
        let mut mu = vec![0f64; self.assets];
        for i in 0..l {
            for (m, v) in mu.iter_mut().zip(self.scenario(i)) {
                *m += v;
            }
        }
        for m in mu.iter_mut() {
            *m /= l as f64;
        }
        mu
    }
}

/// Sparse feature rows with one target per row.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Vec<Vec<(usize, f64)>>,
    pub dim: usize,
    pub targets: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<(usize, f64)>>,
        dim: usize,
        targets: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if features.is_empty() || features.len() != targets.len() {
            return Err(ModelError::EmptyDataset);
        }
        for (row, feats) in features.iter().enumerate() {
            for &(j, v) in feats {
                if j >= dim {
                    return Err(ModelError::FeatureIndex { row, index: j, dim });
                }
                if !v.is_finite() {
                    return Err(ModelError::NonFinite { row });
                }
            }
        }
        Ok(LabeledDataset {
            features,
            dim,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// One-factor Gaussian return generator at weekly-return scale, reproducible
/// from the seed.
pub fn synthetic_returns(assets: usize, scenarios: usize, seed: u64) -> ReturnsDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let market = Normal::new(0.002, 0.02).unwrap();
    let noise = Normal::new(0.0, 0.025).unwrap();
    let beta_spread = Normal::new(1.0, 0.25).unwrap();
    let drift = Normal::new(0.001, 0.001).unwrap();
    let betas: Vec<f64> = (0..assets).map(|_| beta_spread.sample(&mut rng)).collect();
    let drifts: Vec<f64> = (0..assets).map(|_| drift.sample(&mut rng)).collect();
    let mut rows = Vec::with_capacity(scenarios);
    for _ in 0..scenarios {
        let f = market.sample(&mut rng);
        rows.push(
            (0..assets)
                .map(|j| drifts[j] + betas[j] * f + noise.sample(&mut rng))
                .collect(),
        );
    }
    ReturnsDataset::from_rows(rows, None).expect("generated rows are rectangular")
}

fn check_bounds(len: usize, a_l: &[f64], a_u: &[f64]) -> Result<(), ModelError> {
    for b in [a_l, a_u] {
        if b.len() != len {
            return Err(ModelError::BoundsLength {
                got: b.len(),
                expected: len,
            });
        }
    }
    Ok(())
}

/// Budget row 1'x = 1 and expected-return row mu'x - s = r with a slack
/// bounded below by zero; shared by both portfolio builders. `extra` counts
/// objective-only variables sitting between the assets and the slack.
fn portfolio_equalities(
    ds: &ReturnsDataset,
    extra: usize,
) -> (CscMatrix, Vec<f64>) {
    let na = ds.n_assets();
    let n = na + extra + 1;
    let mu = ds.mean_returns();
    let mut trips = Vec::with_capacity(2 * na + 1);
    for j in 0..na {
        trips.push((0, j, 1.0));
        if mu[j] != 0.0 {
            trips.push((1, j, mu[j]));
        }
    }
    trips.push((1, n - 1, -1.0));
    let a = CscMatrix::from_triplets(2, n, &trips).expect("indices in range");
    (a, vec![1.0, ds.benchmark])
}

/// Conditional value-at-risk portfolio: minimize t + mean of the worst
/// alpha-tail of losses plus a weighted l1 penalty, subject to full
/// investment and an expected-return floor.
///
/// Variables are (asset weights, value-at-risk level t, return slack s).
pub fn build_cvar(
    ds: &ReturnsDataset,
    alpha: f64,
    tau: f64,
    a_l: &[f64],
    a_u: &[f64],
) -> Result<ProblemData, ModelError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ModelError::AlphaRange(alpha));
    }
    if tau < 0.0 {
        return Err(ModelError::NegativeParameter {
            name: "tau",
            value: tau,
        });
    }
    let na = ds.n_assets();
    check_bounds(na, a_l, a_u)?;
    let l = ds.n_scenarios();
    let n = na + 2;
    let scale = 1.0 / (l as f64 * alpha);
    let mut trips = Vec::with_capacity(l * (na + 1));
    for i in 0..l {
        for (j, v) in ds.scenario(i).iter().enumerate() {
            if *v != 0.0 {
                trips.push((i, j, -scale * v));
            }
        }
        trips.push((i, na, -scale));
    }
    let c_mat = CscMatrix::from_triplets(l, n, &trips).expect("indices in range");
    let (a_mat, b) = portfolio_equalities(ds, 1);
    let mut c = vec![0f64; n];
    c[na] = 1.0;
    let mut d_diag = vec![tau; n];
    d_diag[na] = 0.0;
    d_diag[na + 1] = 0.0;
    let mut lo = a_l.to_vec();
    let mut hi = a_u.to_vec();
    lo.extend([f64::NEG_INFINITY, 0.0]);
    hi.extend([f64::INFINITY, f64::INFINITY]);
    Ok(ProblemData::new(
        c,
        CscMatrix::zeros(n, n),
        c_mat,
        vec![0.0; l],
        a_mat,
        b,
        d_diag,
        lo,
        hi,
        0.0,
    ))
}

/// Mean absolute semideviation portfolio: minimize the average shortfall of
/// the return below its mean plus a weighted l1 penalty, same constraint
/// blocks as the CVaR model but without the value-at-risk variable.
pub fn build_masd(
    ds: &ReturnsDataset,
    tau: f64,
    a_l: &[f64],
    a_u: &[f64],
) -> Result<ProblemData, ModelError> {
    let l = ds.n_scenarios();
    if l < 2 {
        return Err(ModelError::TooFewScenarios { need: 2, got: l });
    }
    if tau < 0.0 {
        return Err(ModelError::NegativeParameter {
            name: "tau",
            value: tau,
        });
    }
    let na = ds.n_assets();
    check_bounds(na, a_l, a_u)?;
    let n = na + 1;
    let mu = ds.mean_returns();
    let inv_l = 1.0 / l as f64;
    let mut trips = Vec::with_capacity(l * na);
    for i in 0..l {
        for (j, v) in ds.scenario(i).iter().enumerate() {
            let coeff = inv_l * (mu[j] - v);
            if coeff != 0.0 {
                trips.push((i, j, coeff));
            }
        }
    }
    let c_mat = CscMatrix::from_triplets(l, n, &trips).expect("indices in range");
    let (a_mat, b) = portfolio_equalities(ds, 0);
    let mut d_diag = vec![tau; n];
    d_diag[na] = 0.0;
    let mut lo = a_l.to_vec();
    let mut hi = a_u.to_vec();
    lo.push(0.0);
    hi.push(f64::INFINITY);
    Ok(ProblemData::new(
        vec![0.0; n],
        CscMatrix::zeros(n, n),
        c_mat,
        vec![0.0; l],
        a_mat,
        b,
        d_diag,
        lo,
        hi,
        0.0,
    ))
}

/// Quantile regression with an elastic-net penalty on the coefficients (the
/// intercept is unpenalized). Variables are (intercept, coefficients); the
/// asymmetric part of the pinball loss is folded into the linear cost.
pub fn build_quantile(
    ds: &LabeledDataset,
    alpha: f64,
    lambda: f64,
    tau: f64,
) -> Result<ProblemData, ModelError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ModelError::AlphaRange(alpha));
    }
    if lambda < 0.0 {
        return Err(ModelError::NegativeParameter {
            name: "lambda",
            value: lambda,
        });
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(ModelError::NegativeParameter {
            name: "tau",
            value: tau,
        });
    }
    let l = ds.len();
    let d = ds.dim;
    let n = d + 1;
    let inv_l = 1.0 / l as f64;
    let mut trips = Vec::new();
    for (i, feats) in ds.features.iter().enumerate() {
        trips.push((i, 0, -inv_l));
        for &(j, v) in feats {
            if v != 0.0 {
                trips.push((i, 1 + j, -inv_l * v));
            }
        }
    }
    let c_mat = CscMatrix::from_triplets(l, n, &trips).expect("indices in range");
    let d_vec: Vec<f64> = ds.targets.iter().map(|y| inv_l * y).collect();
    // (alpha-1) 1'w folded through w = Cx + d.
    let ones = vec![1.0; l];
    let mut c = vec![0f64; n];
    c_mat.matvec_transpose(&ones, &mut c);
    for v in c.iter_mut() {
        *v *= alpha - 1.0;
    }
    let const_offset = (alpha - 1.0) * d_vec.iter().sum::<f64>();
    let ridge = lambda * (1.0 - tau);
    let q_trips: Vec<(usize, usize, f64)> =
        (1..n).map(|j| (j, j, ridge)).collect();
    let q = CscMatrix::from_triplets(n, n, &q_trips).expect("diagonal");
    let mut d_diag = vec![lambda * tau; n];
    d_diag[0] = 0.0;
    Ok(ProblemData::new(
        c,
        q,
        c_mat,
        d_vec,
        CscMatrix::zeros(0, n),
        Vec::new(),
        d_diag,
        vec![f64::NEG_INFINITY; n],
        vec![f64::INFINITY; n],
        const_offset,
    ))
}

/// Soft-margin linear SVM with an elastic-net penalty on the weight vector.
/// Variables are (offset, weights); the decision function is xi'beta - beta0.
pub fn build_svm(
    ds: &LabeledDataset,
    lambda: f64,
    tau1: f64,
    tau2: f64,
) -> Result<ProblemData, ModelError> {
    for (name, value) in [("lambda", lambda), ("tau1", tau1), ("tau2", tau2)] {
        if value < 0.0 {
            return Err(ModelError::NegativeParameter { name, value });
        }
    }
    for (row, y) in ds.targets.iter().enumerate() {
        if *y != 1.0 && *y != -1.0 {
            return Err(ModelError::LabelNotBinary { row, value: *y });
        }
    }
    let l = ds.len();
    let d = ds.dim;
    let n = d + 1;
    let inv_l = 1.0 / l as f64;
    let mut trips = Vec::new();
    for (i, feats) in ds.features.iter().enumerate() {
        let y = ds.targets[i];
        trips.push((i, 0, inv_l * y));
        for &(j, v) in feats {
            if v != 0.0 {
                trips.push((i, 1 + j, -inv_l * y * v));
            }
        }
    }
    let c_mat = CscMatrix::from_triplets(l, n, &trips).expect("indices in range");
    let ridge = lambda * tau2;
    let q_trips: Vec<(usize, usize, f64)> =
        (1..n).map(|j| (j, j, ridge)).collect();
    let q = CscMatrix::from_triplets(n, n, &q_trips).expect("diagonal");
    let mut d_diag = vec![lambda * tau1; n];
    d_diag[0] = 0.0;
    Ok(ProblemData::new(
        vec![0.0; n],
        q,
        c_mat,
        vec![inv_l; l],
        CscMatrix::zeros(0, n),
        Vec::new(),
        d_diag,
        vec![f64::NEG_INFINITY; n],
        vec![f64::INFINITY; n],
        0.0,
    ))
}
