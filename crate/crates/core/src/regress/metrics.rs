//! Correlation and error criteria.

use serde::{Deserialize, Serialize};

use super::logistic::LogisticParams;
use crate::error::{Error, Result};

/// Outlier threshold in residual standard deviations.
pub const OUTLIER_SIGMAS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub srcc: f64,
    pub lcc: f64,
    pub rmse: f64,
    pub or_ratio: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Splits rejected before this one was accepted.
    pub resamples: usize,
    pub c: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub srcc: f64,
    pub lcc: f64,
    pub rmse: f64,
    pub or_ratio: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterations: Vec<IterationRecord>,
}

/// 1-based ranks with ties given their mean rank.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: a.len(),
        });
    }
    Ok(())
}

/// Pearson correlation, clamped to `[−1, 1]`.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate(
            "zero variance in correlation input".into(),
        ));
    }
    // sqrt(s·s) == s exactly, so identical inputs give exactly 1.
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson correlation of mid-ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    pearson(&mid_ranks(a), &mid_ranks(b))
}

pub fn rmse(pred: &[f64], mos: &[f64]) -> Result<f64> {
    check_pair(pred, mos)?;
    let sse: f64 = pred.iter().zip(mos).map(|(p, m)| (p - m) * (p - m)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Fraction of residuals larger than [`OUTLIER_SIGMAS`] times the residual
/// standard deviation.
pub fn outlier_ratio(pred: &[f64], mos: &[f64]) -> Result<f64> {
    check_pair(pred, mos)?;
    let res: Vec<f64> = pred.iter().zip(mos).map(|(p, m)| p - m).collect();
    let n = res.len() as f64;
    let mean = res.iter().sum::<f64>() / n;
    let sd = (res.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Ok(0.0);
    }
    Ok(res.iter().filter(|r| r.abs() > OUTLIER_SIGMAS * sd).count() as f64 / n)
}

/// SRCC on raw predictions; LCC, RMSE and OR on logistic-mapped
/// predictions when `fitted` is given.
pub fn metrics(pred: &[f64], mos: &[f64], fitted: Option<&LogisticParams>) -> Result<EvalSummary> {
    check_pair(pred, mos)?;
    let mapped: Vec<f64> = match fitted {
        Some(p) => pred.iter().map(|&q| p.eval(q)).collect(),
        None => pred.to_vec(),
    };
    Ok(EvalSummary {
        srcc: spearman(pred, mos)?,
        lcc: pearson(&mapped, mos)?,
        rmse: rmse(&mapped, mos)?,
        or_ratio: outlier_ratio(&mapped, mos)?,
        iterations: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mid_ranks_with_ties() {
        assert_eq!(
            mid_ranks(&[10.0, 20.0, 20.0, 5.0, 20.0]),
            vec![2.0, 4.0, 4.0, 1.0, 4.0]
        );
    }

    #[test]
    fn trivial_cases() {
        let mos = [1.0, 2.5, 3.0, 4.2, 5.0];
        let up = [0.1, 0.2, 0.5, 0.9, 3.0];
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert_eq!(spearman(&up, &mos).unwrap(), 1.0);
        assert_eq!(spearman(&down, &mos).unwrap(), -1.0);
        let m = metrics(&mos, &mos, None).unwrap();
        assert_eq!((m.lcc, m.rmse, m.or_ratio), (1.0, 0.0, 0.0));
        assert!(pearson(&[1.0, 1.0, 1.0], &mos[..3]).is_err());
        assert!(metrics(&mos, &mos[..4], None).is_err());
    }

    #[test]
    fn outlier_ratio_counts_large_residuals() {
        let mos = vec![0.0; 10];
        let mut pred = vec![0.0; 10];
        pred[3] = 10.0;
        // Residual sd is 3, the outlier sits at 9 from the mean.
        assert_eq!(outlier_ratio(&pred, &mos).unwrap(), 0.1);
    }

    proptest! {
        #[test]
        fn spearman_invariant_to_monotone_maps(v in proptest::collection::vec(-3.0f64..3.0, 3..30), seed in 0u64..100) {
            let mos: Vec<f64> = v.iter().enumerate().map(|(i, x)| x * 0.5 + ((i as u64 * 7 + seed) % 5) as f64).collect();
            prop_assume!(mos.iter().any(|m| *m != mos[0]) && v.iter().any(|x| *x != v[0]));
            let base = spearman(&v, &mos).unwrap();
            let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
            let c: Vec<f64> = v.iter().map(|x| x * x * x).collect();
            prop_assert!((spearman(&e, &mos).unwrap() - base).abs() < 1e-12);
            prop_assert!((spearman(&c, &mos).unwrap() - base).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }
    }
}
