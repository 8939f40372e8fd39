//! ε-support-vector regression with an RBF kernel.
//!
//! The dual is solved in the standard `2n`-variable form by sequential
//! minimal optimisation with second-order working-set selection:
//!
//! ```text
//! min ½ βᵀQβ + pᵀβ   s.t. yᵀβ = 0, 0 ≤ β ≤ C
//! y = (+1…, −1…),  p = (ε − z, ε + z),  Q_ij = y_i y_j k(x_i, x_j)
//! ```
//!
//! The regression coefficient of sample `i` is `β_i − β_{i+n}`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::LogisticParams;
use super::metrics::spearman;
use crate::error::{Error, Result};

pub const KKT_TOL: f64 = 1e-3;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const MIN_ROWS: usize = 8;
pub const INNER_FOLDS: usize = 5;
pub const MODEL_VERSION: u32 = 1;
const TAU: f64 = 1e-12;

/// Hyperparameter grid searched by [`svr_train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrGrid {
    pub c: Vec<f64>,
    pub g: Vec<f64>,
    pub epsilon: f64,
}

impl Default for SvrGrid {
    /// `C ∈ {2⁻⁵, 2⁻³, …, 2¹⁵}`, `g ∈ {2⁻¹⁵, 2⁻¹³, …, 2³}`, `ε = 0.1`.
    fn default() -> Self {
        Self {
            c: (-5..=15).step_by(2).map(|e| 2f64.powi(e)).collect(),
            g: (-15..=3).step_by(2).map(|e| 2f64.powi(e)).collect(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl SvrGrid {
    pub fn fixed(c: f64, g: f64, epsilon: f64) -> Self {
        Self {
            c: vec![c],
            g: vec![g],
            epsilon,
        }
    }
}

/// Raw output of one SMO solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrSolution {
    /// Per training row, `β_i − β_{i+n}`.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn rbf(sq_dist: f64, g: f64) -> f64 {
    (-g * sq_dist).exp()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pairwise squared distances, row-major `n × n`.
pub fn sq_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(&x[i], &x[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Solves the ε-SVR dual for a precomputed `n × n` kernel matrix.
pub fn smo_solve(kernel: &[f64], z: &[f64], c: f64, epsilon: f64, max_iter: usize) -> SvrSolution {
    let n = z.len();
    let l = 2 * n;
    let y = |t: usize| if t < n { 1.0 } else { -1.0 };
    let k = |a: usize, b: usize| kernel[(a % n) * n + b % n];
    let q = |a: usize, b: usize| y(a) * y(b) * k(a, b);
    let mut beta = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                epsilon - z[t]
            } else {
                epsilon + z[t - n]
            }
        })
        .collect();
    let upper = |b: f64| b >= c;
    let lower = |b: f64| b <= 0.0;

    let diag: Vec<f64> = (0..n).map(|t| kernel[t * n + t]).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // Maximal violating i, then j by second-order gain. The first n
        // variables carry y = +1, the last n carry y = −1.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if !upper(beta[t]) && -grad[t] >= gmax {
                gmax = -grad[t];
                i_sel = t;
            }
        }
        for t in n..l {
            if !lower(beta[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i_sel != usize::MAX {
            let row = &kernel[(i_sel % n) * n..][..n];
            let kii = diag[i_sel % n];
            for half in 0..2 {
                let yt = if half == 0 { 1.0 } else { -1.0 };
                for u in 0..n {
                    let t = u + half * n;
                    let in_low = if half == 0 {
                        !lower(beta[t])
                    } else {
                        !upper(beta[t])
                    };
                    if !in_low {
                        continue;
                    }
                    let yg = yt * grad[t];
                    gmax2 = gmax2.max(yg);
                    let b = gmax + yg;
                    if b > 0.0 {
                        // y_i y_t Q_it = K_it
                        let a = kii + diag[u] - 2.0 * row[u];
                        let a = if a > 0.0 { a } else { TAU };
                        let obj = -(b * b) / a;
                        if obj <= obj_min {
                            obj_min = obj;
                            j_sel = t;
                        }
                    }
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax + gmax2 < KKT_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (beta[i], beta[j]);
        let qij = q(i, j);
        if y(i) != y(j) {
            let quad = k(i, i) + k(j, j) + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = k(i, i) + k(j, j) - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }
        let (di, dj) = (y(i) * (beta[i] - old_i), y(j) * (beta[j] - old_j));
        let (ki, kj) = (&kernel[(i % n) * n..][..n], &kernel[(j % n) * n..][..n]);
        let (g_pos, g_neg) = grad.split_at_mut(n);
        for u in 0..n {
            let step = ki[u] * di + kj[u] * dj;
            g_pos[u] += step;
            g_neg[u] -= step;
        }
    }
    if !converged {
        log::warn!("SMO hit the iteration cap ({max_iter}) before reaching KKT tolerance");
    }

    // Bias from free variables, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..l {
        let yg = y(t) * grad[t];
        if upper(beta[t]) {
            if y(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(beta[t]) {
            if y(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    SvrSolution {
        coef: (0..n).map(|t| beta[t] - beta[t + n]).collect(),
        bias: -rho,
        iterations,
        converged,
    }
}

fn default_max_iter(n: usize) -> usize {
    (200 * n).max(100_000)
}

/// Trained quality model: normalisation, support vectors and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub feat_mean: Vec<f64>,
    pub feat_std: Vec<f64>,
    /// Columns with zero training variance; their std was replaced by 1.
    pub constant_features: Vec<usize>,
    /// Normalised support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub g: f64,
    pub epsilon: f64,
    pub converged: bool,
    /// Internal cross-validation SRCC of the chosen hyperparameters; absent
    /// for a single-point grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_srcc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logistic: Option<LogisticParams>,
}

impl QualityModel {
    pub fn dim(&self) -> usize {
        self.feat_mean.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.feat_mean)
            .zip(&self.feat_std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    fn decision(&self, xn: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (sv, a) in self.support_vectors.iter().zip(&self.dual_coef) {
            acc += a * rbf(sq_dist(sv, xn), self.g);
        }
        acc
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {}",
                m.version
            )));
        }
        let d = m.feat_mean.len();
        if m.feat_std.len() != d
            || m.feat_std.iter().any(|s| !(*s > 0.0))
            || m.support_vectors.iter().any(|v| v.len() != d)
            || m.support_vectors.len() != m.dual_coef.len()
        {
            return Err(Error::Model("inconsistent model dimensions".into()));
        }
        Ok(m)
    }
}

/// `Σ αᵢ k(xᵢ, x) + b` on the normalised input.
pub fn svr_predict(model: &QualityModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::Shape(format!(
            "expected {} features, got {}",
            model.dim(),
            x.len()
        )));
    }
    Ok(model.decision(&model.normalize(x)))
}

pub fn svr_predict_batch(model: &QualityModel, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter().map(|r| svr_predict(model, r)).collect()
}

/// Population mean and std per column; zero std becomes 1 and is reported.
pub fn zscore_stats(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; d];
    for row in x {
        for k in 0..d {
            std[k] += (row[k] - mean[k]).powi(2) / n;
        }
    }
    let mut constant = Vec::new();
    for (k, s) in std.iter_mut().enumerate() {
        *s = s.sqrt();
        if !(*s > 1e-12 * mean[k].abs().max(1.0)) {
            *s = 1.0;
            constant.push(k);
        }
    }
    (mean, std, constant)
}

fn validate(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_ROWS {
        return Err(Error::TooFewSamples {
            needed: MIN_ROWS,
            got: x.len(),
        });
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("feature rows differ in length".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite training value".into()));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::Degenerate("all training labels are equal".into()));
    }
    Ok(())
}

fn kernel_from(dist: &[f64], idx: &[usize], n_all: usize, g: f64) -> Vec<f64> {
    let n = idx.len();
    let mut k = vec![0.0; n * n];
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            k[a * n + b] = rbf(dist[ia * n_all + ib], g);
        }
    }
    k
}

/// Out-of-fold SRCC of one hyperparameter pair; constant predictions count
/// as 0.
fn inner_cv_srcc(dist: &[f64], y: &[f64], folds: &[usize], c: f64, g: f64, eps: f64) -> f64 {
    let n = y.len();
    let mut pred = vec![0.0; n];
    for f in 0..INNER_FOLDS {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        if test.is_empty() {
            continue;
        }
        let k = kernel_from(dist, &train, n, g);
        let z: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let sol = smo_solve(&k, &z, c, eps, default_max_iter(train.len()));
        for &t in &test {
            let mut acc = sol.bias;
            for (a, &tr) in sol.coef.iter().zip(&train) {
                if *a != 0.0 {
                    acc += a * rbf(dist[t * n + tr], g);
                }
            }
            pred[t] = acc;
        }
    }
    spearman(&pred, y).unwrap_or(0.0)
}

/// Fits normalisation and an ε-SVR. With more than one grid point the
/// hyperparameters are chosen by internal 5-fold cross-validation
/// maximising SRCC; folds are drawn from `seed`. Ties keep the earlier grid
/// point (C outer, g inner, both ascending).
pub fn svr_train(x: &[Vec<f64>], y: &[f64], grid: &SvrGrid, seed: u64) -> Result<QualityModel> {
    validate(x, y)?;
    if grid.c.is_empty() || grid.g.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    if grid.c.iter().chain(&grid.g).any(|v| !(*v > 0.0)) || !(grid.epsilon >= 0.0) {
        return Err(Error::InvalidArgument(
            "grid values must be positive".into(),
        ));
    }
    let (mean, std, constant) = zscore_stats(x);
    if !constant.is_empty() {
        log::debug!("{} constant feature column(s)", constant.len());
    }
    let xn: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            r.iter()
                .zip(&mean)
                .zip(&std)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();
    let n = xn.len();
    let dist = sq_distances(&xn);

    let (mut c_best, mut g_best, mut selection) = (grid.c[0], grid.g[0], None);
    if grid.c.len() * grid.g.len() > 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut folds = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            folds[i] = pos % INNER_FOLDS;
        }
        let mut srcc_best = f64::NEG_INFINITY;
        for &c in &grid.c {
            for &g in &grid.g {
                let s = inner_cv_srcc(&dist, y, &folds, c, g, grid.epsilon);
                if s > srcc_best {
                    (c_best, g_best, srcc_best) = (c, g, s);
                }
            }
        }
        log::debug!("selected C={c_best} g={g_best} (inner SRCC {srcc_best:.4})");
        selection = Some(srcc_best);
    }

    let all: Vec<usize> = (0..n).collect();
    let k = kernel_from(&dist, &all, n, g_best);
    let sol = smo_solve(&k, y, c_best, grid.epsilon, default_max_iter(n));
    let (support_vectors, dual_coef): (Vec<_>, Vec<_>) = xn
        .into_iter()
        .zip(sol.coef)
        .filter(|(_, a)| *a != 0.0)
        .unzip();
    Ok(QualityModel {
        version: MODEL_VERSION,
        feature_names: Vec::new(),
        feat_mean: mean,
        feat_std: std,
        constant_features: constant,
        support_vectors,
        dual_coef,
        bias: sol.bias,
        c: c_best,
        g: g_best,
        epsilon: grid.epsilon,
        converged: sol.converged,
        selection_srcc: selection,
        logistic: None,
    })
}
