//! Repeated train/test cross-validation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::logistic_fit;
use super::metrics::{outlier_ratio, pearson, rmse, spearman, EvalSummary, IterationRecord};
use super::svr::{svr_predict_batch, svr_train, SvrGrid};
use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_FRAC: f64 = 0.8;
/// Rejected splits allowed per iteration before giving up.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Whole scenes go to one side, so content never leaks across the split.
    #[default]
    Scene,
    Item,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub scenes: Vec<String>,
    pub labels: Vec<f64>,
    pub features: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn rows(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub iterations: usize,
    pub train_frac: f64,
    pub split: SplitMode,
    pub seed: u64,
    pub grid: SvrGrid,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            train_frac: DEFAULT_TRAIN_FRAC,
            split: SplitMode::Scene,
            seed: 0,
            grid: SvrGrid::default(),
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn split(ds: &Dataset, cfg: &CvConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let take = |n: usize| ((cfg.train_frac * n as f64).round() as usize).clamp(1, n - 1);
    match cfg.split {
        SplitMode::Item => {
            let mut idx: Vec<usize> = (0..ds.len()).collect();
            idx.shuffle(rng);
            let k = take(idx.len());
            let mut train = idx[..k].to_vec();
            let mut test = idx[k..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            (train, test)
        }
        SplitMode::Scene => {
            let mut scenes: Vec<&str> = ds
                .scenes
                .iter()
                .map(String::as_str)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            scenes.shuffle(rng);
            let k = take(scenes.len());
            let train_scenes: BTreeSet<&str> = scenes[..k].iter().copied().collect();
            (0..ds.len()).partition(|&i| train_scenes.contains(ds.scenes[i].as_str()))
        }
    }
}

fn run_iteration(ds: &Dataset, cfg: &CvConfig, iteration: usize) -> Result<IterationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(iteration as u64);
    let mut resamples = 0;
    loop {
        let (train, test) = split(ds, cfg, &mut rng);
        let inner_seed: u64 = rng.random();
        let (xtr, ytr) = ds.rows(&train);
        let (xte, yte) = ds.rows(&test);
        let usable = test.len() >= 2
            && yte.iter().any(|v| *v != yte[0])
            && ytr.iter().any(|v| *v != ytr[0])
            && train.len() >= super::svr::MIN_ROWS;
        if usable {
            let model = svr_train(&xtr, &ytr, &cfg.grid, inner_seed)?;
            let pred = svr_predict_batch(&model, &xte)?;
            let (srcc, lcc, err, or_ratio) = if pred.iter().all(|p| *p == pred[0]) {
                // A constant predictor ranks nothing; its best mapping is the
                // label mean.
                let mean = yte.iter().sum::<f64>() / yte.len() as f64;
                let flat = vec![mean; yte.len()];
                (0.0, 0.0, rmse(&flat, &yte)?, outlier_ratio(&flat, &yte)?)
            } else {
                let mapped: Vec<f64> = match logistic_fit(&pred, &yte) {
                    Ok(p) => pred.iter().map(|&q| p.eval(q)).collect(),
                    Err(_) => pred.clone(),
                };
                let lcc = pearson(&mapped, &yte).unwrap_or(0.0);
                (
                    spearman(&pred, &yte)?,
                    lcc,
                    rmse(&mapped, &yte)?,
                    outlier_ratio(&mapped, &yte)?,
                )
            };
            return Ok(IterationRecord {
                iteration,
                srcc,
                lcc,
                rmse: err,
                or_ratio,
                n_train: train.len(),
                n_test: test.len(),
                resamples,
                c: model.c,
                g: model.g,
            });
        }
        resamples += 1;
        if resamples > MAX_RESAMPLES {
            return Err(Error::Degenerate(format!(
                "iteration {iteration}: no usable train/test split after {MAX_RESAMPLES} draws"
            )));
        }
    }
}

/// Runs `cfg.iterations` independent splits and reports the median of each
/// criterion. Iteration `i` draws from stream `i` of a ChaCha generator
/// seeded with `cfg.seed`, so results do not depend on scheduling.
pub fn cross_validate(ds: &Dataset, cfg: &CvConfig) -> Result<EvalSummary> {
    let n = ds.len();
    if ds.scenes.len() != n || ds.features.len() != n || ds.ids.len() != n {
        return Err(Error::Shape("dataset columns differ in length".into()));
    }
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be positive".into()));
    }
    if !(cfg.train_frac > 0.0 && cfg.train_frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {}",
            cfg.train_frac
        )));
    }
    match cfg.split {
        SplitMode::Scene => {
            let k = ds.scenes.iter().collect::<BTreeSet<_>>().len();
            if k < 2 {
                return Err(Error::TooFewSamples { needed: 2, got: k });
            }
        }
        SplitMode::Item => {
            if n < 10 {
                return Err(Error::TooFewSamples { needed: 10, got: n });
            }
        }
    }
    let records = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| run_iteration(ds, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let total_resamples: usize = records.iter().map(|r| r.resamples).sum();
    if total_resamples > 0 {
        log::info!("{total_resamples} split(s) resampled");
    }
    let pick = |f: fn(&IterationRecord) -> f64| median(records.iter().map(f).collect());
    Ok(EvalSummary {
        srcc: pick(|r| r.srcc),
        lcc: pick(|r| r.lcc),
        rmse: pick(|r| r.rmse),
        or_ratio: pick(|r| r.or_ratio),
        iterations: records,
    })
}

/// Fold index per item for `k`-fold prediction. Scene mode assigns whole
/// scenes round-robin after a seeded shuffle.
pub fn fold_assignment(ds: &Dataset, k: usize, split: SplitMode, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match split {
        SplitMode::Item => {
            let mut order: Vec<usize> = (0..ds.len()).collect();
            order.shuffle(&mut rng);
            let mut folds = vec![0; ds.len()];
            for (pos, &i) in order.iter().enumerate() {
                folds[i] = pos % k;
            }
            folds
        }
        SplitMode::Scene => {
            let mut scenes: Vec<&str> = ds
                .scenes
                .iter()
                .map(String::as_str)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            scenes.shuffle(&mut rng);
            ds.scenes
                .iter()
                .map(|s| scenes.iter().position(|x| x == s).expect("scene listed") % k)
                .collect()
        }
    }
}

/// Out-of-fold predictions: each item is scored by a model trained on the
/// other `k − 1` folds.
pub fn out_of_fold(
    ds: &Dataset,
    k: usize,
    split: SplitMode,
    seed: u64,
    grid: &SvrGrid,
) -> Result<Vec<f64>> {
    let groups = match split {
        SplitMode::Scene => ds.scenes.iter().collect::<BTreeSet<_>>().len(),
        SplitMode::Item => ds.len(),
    };
    if k < 2 || groups < k {
        return Err(Error::InvalidArgument(format!(
            "{k} folds need at least {k} groups, have {groups}"
        )));
    }
    let folds = fold_assignment(ds, k, split, seed);
    let parts = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<usize>, Vec<usize>) =
                (0..ds.len()).partition(|&i| folds[i] != f);
            let (xtr, ytr) = ds.rows(&train);
            let (xte, _) = ds.rows(&test);
            let model = svr_train(&xtr, &ytr, grid, seed.wrapping_add(f as u64))?;
            Ok((test, svr_predict_batch(&model, &xte)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pred = vec![0.0; ds.len()];
    for (idx, p) in parts {
        for (i, v) in idx.into_iter().zip(p) {
            pred[i] = v;
        }
    }
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(n: usize, scenes: usize, seed: u64, shuffle_labels: bool) -> Dataset {
        dataset_dim(n, scenes, seed, shuffle_labels, 4)
    }

    fn dataset_dim(
        n: usize,
        scenes: usize,
        seed: u64,
        shuffle_labels: bool,
        dim: usize,
    ) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut labels: Vec<f64> = features.iter().map(|f| 3.0 * f[0] + 1.0).collect();
        if shuffle_labels {
            labels.shuffle(&mut rng);
        }
        Dataset {
            ids: (0..n).map(|i| format!("item{i}")).collect(),
            scenes: (0..n).map(|i| format!("s{}", i % scenes)).collect(),
            labels,
            features,
        }
    }

    fn quick(split: SplitMode, iterations: usize) -> CvConfig {
        CvConfig {
            iterations,
            split,
            seed: 11,
            grid: SvrGrid {
                c: vec![1.0, 16.0],
                g: vec![0.05, 0.5],
                epsilon: 0.1,
            },
            ..CvConfig::default()
        }
    }

    #[test]
    fn learnable_labels_rank_perfectly() {
        let s = cross_validate(
            &dataset_dim(60, 10, 1, false, 1),
            &quick(SplitMode::Scene, 8),
        )
        .unwrap();
        assert_eq!(s.srcc, 1.0);
        assert_eq!(s.iterations.len(), 8);
    }

    #[test]
    fn permuted_labels_are_unlearnable() {
        let s = cross_validate(&dataset(100, 100, 2, true), &quick(SplitMode::Item, 20)).unwrap();
        assert!(s.srcc.abs() < 0.3, "median SRCC {}", s.srcc);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let ds = dataset(40, 8, 3, false);
        let cfg = quick(SplitMode::Scene, 6);
        let a = cross_validate(&ds, &cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| cross_validate(&ds, &cfg).unwrap());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn scene_split_keeps_scenes_together() {
        let ds = dataset(30, 5, 4, false);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (train, test) = split(&ds, &quick(SplitMode::Scene, 1), &mut rng);
        let tr: BTreeSet<_> = train.iter().map(|&i| &ds.scenes[i]).collect();
        assert!(test.iter().all(|&i| !tr.contains(&ds.scenes[i])));
        assert_eq!(train.len() + test.len(), 30);
        assert_eq!(tr.len(), 4);
    }

    #[test]
    fn out_of_fold_covers_every_item_once() {
        let ds = dataset_dim(50, 10, 6, false, 1);
        let folds = fold_assignment(&ds, 5, SplitMode::Scene, 1);
        for (i, a) in folds.iter().enumerate() {
            for (j, b) in folds.iter().enumerate() {
                if ds.scenes[i] == ds.scenes[j] {
                    assert_eq!(a, b);
                }
            }
        }
        let pred = out_of_fold(
            &ds,
            5,
            SplitMode::Scene,
            1,
            &quick(SplitMode::Scene, 1).grid,
        )
        .unwrap();
        assert_eq!(pred.len(), 50);
        assert!(spearman(&pred, &ds.labels).unwrap() > 0.95);
        assert!(out_of_fold(&ds, 11, SplitMode::Scene, 1, &SvrGrid::default()).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let ds = dataset(9, 1, 5, false);
        assert!(cross_validate(&ds, &quick(SplitMode::Scene, 2)).is_err());
        assert!(cross_validate(&ds, &quick(SplitMode::Item, 2)).is_err());
    }
}
