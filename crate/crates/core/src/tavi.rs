//! Tensor angular variation index.
//!
//! For every view of a stack the SSIM against the stack's first principal
//! component gives a structural-similarity curve over normalised angular
//! position `p = i/(V−1)`. The curve is summarised by a least-squares
//! quadratic `f1·p² + f2·p + f3` and by co-occurrence statistics of its
//! quantised consecutive pairs.
//!
//! Feature layout (21 values): for each of L*, a*, b*:
//! `f1, f2, f3, contrast, asm, entropy, idm`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::imgproc::{filter_valid, gaussian_kernel};
use crate::viewstack::ViewStack;

pub const TAVI_LEN: usize = 21;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const COOC_LEVELS: usize = 8;

pub const CHANNEL_FEATURE_NAMES: [&str; 7] = [
    "ss_f1",
    "ss_f2",
    "ss_f3",
    "cooc_contrast",
    "cooc_asm",
    "cooc_entropy",
    "cooc_idm",
];

/// Mean single-scale SSIM with an 11×11 Gaussian window (σ = 1.5) over the
/// fully-covered positions.
pub fn ssim(a: &Array2<f64>, b: &Array2<f64>, dynamic_range: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "SSIM inputs differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let (h, w) = a.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::TooSmall(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    if !(dynamic_range > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dynamic range must be positive, got {dynamic_range}"
        )));
    }
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let k = gaussian_kernel(SSIM_WINDOW / 2, SSIM_SIGMA);
    let mu_a = filter_valid(a, &k);
    let mu_b = filter_valid(b, &k);
    let e_aa = filter_valid(&(a * a), &k);
    let e_bb = filter_valid(&(b * b), &k);
    let e_ab = filter_valid(&(a * b), &k);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a.as_slice().unwrap()[i], mu_b.as_slice().unwrap()[i]);
        let saa = e_aa.as_slice().unwrap()[i] - ma * ma;
        let sbb = e_bb.as_slice().unwrap()[i] - mb * mb;
        let sab = e_ab.as_slice().unwrap()[i] - ma * mb;
        let num = (2.0 * (ma * mb) + c1) * (2.0 * sab + c2);
        let den = (ma * ma + mb * mb + c1) * (saa + sbb + c2);
        sum += num / den;
    }
    Ok(sum / mu_a.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsCurve {
    pub values: Vec<f64>,
    pub positions: Vec<f64>,
}

impl SsCurve {
    /// Positions `i/(V−1)`, or `[0]` for a single value.
    pub fn from_values(values: Vec<f64>) -> Self {
        let v = values.len();
        let positions = if v <= 1 {
            vec![0.0; v]
        } else {
            (0..v).map(|i| i as f64 / (v - 1) as f64).collect()
        };
        Self { values, positions }
    }

    /// Population standard deviation of the values.
    pub fn std_dev(&self) -> f64 {
        let n = self.values.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n;
        (self
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n)
            .sqrt()
    }
}

/// SSIM of each view of `stack` against the principal component `pc`.
pub fn ss_curve(stack: &ViewStack, pc: &Array2<f64>, dynamic_range: f64) -> Result<SsCurve> {
    let values = (0..stack.len())
        .map(|i| ssim(&stack.view(i), pc, dynamic_range))
        .collect::<Result<Vec<_>>>()?;
    Ok(SsCurve::from_values(values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFit {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub residual_rms: f64,
}

impl QuadFit {
    pub fn eval(&self, p: f64) -> f64 {
        self.f1 * p * p + self.f2 * p + self.f3
    }
}

/// Solves a 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Least-squares quadratic over the curve's positions.
pub fn fit_quadratic(curve: &SsCurve) -> Result<QuadFit> {
    let v = curve.values.len();
    if v < 3 || curve.positions.len() != v {
        return Err(Error::TooFewSamples { needed: 3, got: v });
    }
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (&p, &y) in curve.positions.iter().zip(&curve.values) {
        let basis = [p * p, p, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * y;
        }
    }
    let [f1, f2, f3] = solve3(m, rhs)
        .ok_or_else(|| Error::Numeric("singular quadratic normal equations".into()))?;
    let mut fit = QuadFit {
        f1,
        f2,
        f3,
        residual_rms: 0.0,
    };
    let sse: f64 = curve
        .positions
        .iter()
        .zip(&curve.values)
        .map(|(&p, &y)| (fit.eval(p) - y).powi(2))
        .sum();
    fit.residual_rms = (sse / v as f64).sqrt();
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoocFeatures {
    pub contrast: f64,
    pub asm: f64,
    pub entropy: f64,
    pub idm: f64,
}

impl CoocFeatures {
    pub fn as_array(&self) -> [f64; 4] {
        [self.contrast, self.asm, self.entropy, self.idm]
    }
}

/// Bin of a curve value on the fixed range `[0, 1]`; negatives clamp to 0.
pub fn quantize(v: f64, levels: usize) -> usize {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    ((v * levels as f64).floor() as usize).min(levels - 1)
}

/// Symmetrised, normalised co-occurrence matrix of consecutive quantised
/// curve values.
pub fn cooc_matrix(curve: &SsCurve, levels: usize) -> Result<Array2<f64>> {
    if curve.values.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: curve.values.len(),
        });
    }
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be positive".into()));
    }
    let q: Vec<usize> = curve.values.iter().map(|&v| quantize(v, levels)).collect();
    let mut p = Array2::<f64>::zeros((levels, levels));
    for w in q.windows(2) {
        p[[w[0], w[1]]] += 1.0;
        p[[w[1], w[0]]] += 1.0;
    }
    let total = 2.0 * (q.len() - 1) as f64;
    p.mapv_inplace(|v| v / total);
    Ok(p)
}

pub fn cooc_features(curve: &SsCurve, levels: usize) -> Result<CoocFeatures> {
    let p = cooc_matrix(curve, levels)?;
    let mut f = CoocFeatures {
        contrast: 0.0,
        asm: 0.0,
        entropy: 0.0,
        idm: 0.0,
    };
    for ((l, h), &v) in p.indexed_iter() {
        if v == 0.0 {
            continue;
        }
        let d = (l as f64 - h as f64).powi(2);
        f.contrast += d * v;
        f.asm += v * v;
        f.entropy -= v * v.ln();
        f.idm += v / (1.0 + d);
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaviFeatures {
    pub curves: [SsCurve; 3],
    pub fits: [QuadFit; 3],
    pub cooc: [CoocFeatures; 3],
}

impl TaviFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(TAVI_LEN);
        for n in 0..3 {
            out.extend_from_slice(&[self.fits[n].f1, self.fits[n].f2, self.fits[n].f3]);
            out.extend_from_slice(&self.cooc[n].as_array());
        }
        out
    }
}

/// TAVI features of one stack position across the three channels.
pub fn tavi_features(
    stacks: [&ViewStack; 3],
    pcs: [&Array2<f64>; 3],
    dynamic_ranges: [f64; 3],
) -> Result<TaviFeatures> {
    if stacks.iter().any(|s| s.coords != stacks[0].coords) {
        return Err(Error::Shape("channel stacks are not aligned".into()));
    }
    let mut curves = Vec::with_capacity(3);
    let mut fits = Vec::with_capacity(3);
    let mut cooc = Vec::with_capacity(3);
    for n in 0..3 {
        let curve = ss_curve(stacks[n], pcs[n], dynamic_ranges[n])?;
        fits.push(fit_quadratic(&curve)?);
        cooc.push(cooc_features(&curve, COOC_LEVELS)?);
        curves.push(curve);
    }
    let [c0, c1, c2]: [SsCurve; 3] = curves.try_into().expect("three curves");
    Ok(TaviFeatures {
        curves: [c0, c1, c2],
        fits: [fits[0], fits[1], fits[2]],
        cooc: [cooc[0], cooc[1], cooc[2]],
    })
}
