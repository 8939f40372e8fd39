//! Five-parameter logistic mapping of objective scores onto the label scale:
//! `f(q) = β1·(½ − 1/(1 + exp(β2·(q − β3)))) + β4·q + β5`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_PAIRS: usize = 5;
const RESTARTS: usize = 10;
const JITTER_SEED: u64 = 0x6c6f_6769;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub beta: [f64; 5],
}

impl LogisticParams {
    pub fn eval(&self, q: f64) -> f64 {
        let [b1, b2, b3, b4, b5] = self.beta;
        let z = b2 * (q - b3);
        // 1/(1+e^z), written to stay finite for large |z|.
        let s = if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        };
        b1 * (0.5 - s) + b4 * q + b5
    }

    pub fn identity() -> Self {
        Self {
            beta: [0.0, 1.0, 0.0, 1.0, 0.0],
        }
    }
}

fn sse(beta: &[f64; 5], q: &[f64], mos: &[f64]) -> f64 {
    let p = LogisticParams { beta: *beta };
    let s: f64 = q
        .iter()
        .zip(mos)
        .map(|(&x, &m)| (p.eval(x) - m).powi(2))
        .sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

/// Derivative-free simplex minimisation (reflection 1, expansion 2,
/// contraction ½, shrink ½).
pub fn nelder_mead<F>(
    f: F,
    x0: [f64; 5],
    step: [f64; 5],
    max_evals: usize,
    ftol: f64,
) -> ([f64; 5], f64)
where
    F: Fn(&[f64; 5]) -> f64,
{
    const N: usize = 5;
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += step[i];
        simplex.push((x, f(&x)));
    }
    let mut evals = N + 1;
    let order = |s: &mut Vec<([f64; N], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    while evals < max_evals {
        let (best, worst) = (simplex[0].1, simplex[N].1);
        if (worst - best).abs() <= ftol * (best.abs() + worst.abs()) + 1e-300 {
            break;
        }
        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += x[k] / N as f64;
            }
        }
        let along = |t: f64| -> [f64; N] {
            std::array::from_fn(|k| centroid[k] + t * (simplex[N].0[k] - centroid[k]))
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[N].1 {
                let xc = along(-0.5);
                (xc, f(&xc))
            } else {
                let xc = along(0.5);
                (xc, f(&xc))
            };
            evals += 1;
            if fc < simplex[N].1.min(fr) {
                simplex[N] = (xc, fc);
            } else {
                let x_best = simplex[0].0;
                for item in simplex.iter_mut().skip(1) {
                    let x: [f64; N] =
                        std::array::from_fn(|k| x_best[k] + 0.5 * (item.0[k] - x_best[k]));
                    *item = (x, f(&x));
                }
                evals += N;
            }
        }
        order(&mut simplex);
    }
    simplex[0]
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt(),
    )
}

/// Least-squares fit of the logistic mapping.
///
/// Starts from the usual heuristic initialisation, ten jittered copies of it,
/// and the ordinary least-squares line (`β1 = 0`). Each start is refined by
/// repeated simplex runs; the lowest error wins.
pub fn logistic_fit(q: &[f64], mos: &[f64]) -> Result<LogisticParams> {
    if q.len() != mos.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            q.len(),
            mos.len()
        )));
    }
    if q.len() < MIN_PAIRS {
        return Err(Error::TooFewSamples {
            needed: MIN_PAIRS,
            got: q.len(),
        });
    }
    if q.iter().chain(mos).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logistic input".into()));
    }
    let (mq, sq) = mean_std(q);
    let (mm, sm) = mean_std(mos);
    let lo = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sq = if sq > 0.0 { sq } else { 1.0 };
    let sm = if sm > 0.0 { sm } else { 1.0 };

    let cov: f64 = q
        .iter()
        .zip(mos)
        .map(|(a, b)| (a - mq) * (b - mm))
        .sum::<f64>()
        / q.len() as f64;
    let slope = cov / (sq * sq);
    let ols = [0.0, 1.0 / sq, mq, slope, mm - slope * mq];
    let base = [hi - lo, 1.0 / sq, mq, 0.0, mm];

    let mut starts = vec![base, ols];
    let mut rng = ChaCha8Rng::seed_from_u64(JITTER_SEED);
    for _ in 0..RESTARTS {
        let j = |rng: &mut ChaCha8Rng| rng.random_range(-0.5..0.5);
        starts.push([
            base[0] * (1.0 + j(&mut rng)),
            base[1] * (1.0 + j(&mut rng)),
            base[2] + sq * j(&mut rng),
            sm / sq * 0.2 * j(&mut rng),
            base[4] + sm * 0.2 * j(&mut rng),
        ]);
    }
    let step = [
        0.1 * (hi - lo).max(sm),
        0.1 / sq,
        0.1 * sq,
        0.1 * sm / sq,
        0.1 * sm,
    ];
    let objective = |b: &[f64; 5]| sse(b, q, mos);
    let mut best = (ols, objective(&ols));
    for s in starts {
        let (mut x, mut fx) = (s, objective(&s));
        for _ in 0..4 {
            let (nx, nf) = nelder_mead(objective, x, step, 4000, 1e-15);
            let improved = nf < fx * (1.0 - 1e-12);
            if nf <= fx {
                x = nx;
                fx = nf;
            }
            if !improved {
                break;
            }
        }
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(LogisticParams { beta: best.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::metrics::pearson;

    fn grid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn identity_data_is_no_worse_than_identity_map() {
        let q = grid(20);
        let p = logistic_fit(&q, &q).unwrap();
        assert!(sse(&p.beta, &q, &q) <= sse(&LogisticParams::identity().beta, &q, &q));
    }

    #[test]
    fn affine_labels_fit_exactly() {
        let q = grid(15);
        let mos: Vec<f64> = q.iter().map(|x| 2.0 * x + 3.0).collect();
        let p = logistic_fit(&q, &mos).unwrap();
        let mapped: Vec<f64> = q.iter().map(|&x| p.eval(x)).collect();
        assert!((pearson(&mapped, &mos).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn recovers_logistic_labels() {
        let q = grid(40);
        let truth = LogisticParams {
            beta: [3.0, 2.5, 0.3, 0.2, 1.0],
        };
        let mos: Vec<f64> = q.iter().map(|&x| truth.eval(x)).collect();
        let p = logistic_fit(&q, &mos).unwrap();
        let rmse = (sse(&p.beta, &q, &mos) / q.len() as f64).sqrt();
        assert!(rmse < 1e-3, "rmse {rmse}");
    }

    #[test]
    fn mapped_lcc_not_below_raw() {
        let q: Vec<f64> = (0..30).map(|i| ((i * 17 % 31) as f64).sqrt()).collect();
        let mos: Vec<f64> = q
            .iter()
            .enumerate()
            .map(|(i, x)| x * x * 0.3 + (i % 4) as f64 * 0.2)
            .collect();
        let p = logistic_fit(&q, &mos).unwrap();
        let mapped: Vec<f64> = q.iter().map(|&x| p.eval(x)).collect();
        assert!(pearson(&mapped, &mos).unwrap() >= pearson(&q, &mos).unwrap() - 1e-9);
    }

    #[test]
    fn errors() {
        assert!(logistic_fit(&[1.0; 4], &[1.0; 4]).is_err());
        assert!(logistic_fit(&[1.0; 5], &[1.0; 6]).is_err());
    }

    #[test]
    fn eval_is_stable_for_large_arguments() {
        let p = LogisticParams {
            beta: [1.0, 1e6, 0.0, 0.0, 0.0],
        };
        assert_eq!(p.eval(1.0), 0.5);
        assert_eq!(p.eval(-1.0), -0.5);
    }
}
