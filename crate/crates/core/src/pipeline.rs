//! Per-light-field feature extraction.
//!
//! For each orientation, every usable stack is decomposed per channel, the
//! 38 PCSC and 21 TAVI features of its principal components are
//! concatenated, and the stack vectors are averaged. The four orientation
//! vectors are then pooled.

use ndarray::Array2;

use crate::colorspace::{lab_channels, LAB_NOMINAL_RANGE};
use crate::error::{Error, Result};
use crate::lfio::LightField;
use crate::pcsc::pcsc_features;
use crate::regress::pool::{pool, OrientationFeatures, PooledFeatures, DEFAULT_WEIGHTS};
use crate::regress::table::FEATURE_LEN;
use crate::tavi::tavi_features;
use crate::tucker::angular_components;
use crate::viewstack::{build_stacks, filter_usable, Orientation, ViewStack, DEFAULT_MIN_LEN};

/// The quadratic fit of the angular curve needs three views.
pub const MIN_STACK_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub min_stack_len: usize,
    pub weights: [f64; 4],
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            min_stack_len: DEFAULT_MIN_LEN,
            weights: DEFAULT_WEIGHTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub orientations: OrientationFeatures,
    pub pooled: PooledFeatures,
}

/// The 59 features of one stack position across the three channels, and
/// the first component's energy fraction in the L* stack.
pub fn stack_features(stacks: [&ViewStack; 3]) -> Result<(Vec<f64>, f64)> {
    let comps = [
        angular_components(stacks[0])?,
        angular_components(stacks[1])?,
        angular_components(stacks[2])?,
    ];
    let pcs: [Array2<f64>; 3] = std::array::from_fn(|n| comps[n].first());
    let refs = [&pcs[0], &pcs[1], &pcs[2]];
    let mut v = pcsc_features(refs)?.to_vec();
    v.extend(tavi_features(stacks, refs, LAB_NOMINAL_RANGE)?.to_vec());
    debug_assert_eq!(v.len(), FEATURE_LEN);
    Ok((v, comps[0].energy_fractions()[0]))
}

/// Mean stack feature vector per orientation; `None` where no stack reaches
/// `min_stack_len`.
pub fn orientation_features(lf: &LightField, min_stack_len: usize) -> Result<OrientationFeatures> {
    if min_stack_len < MIN_STACK_LEN {
        return Err(Error::InvalidArgument(format!(
            "minimum stack length must be at least {MIN_STACK_LEN}, got {min_stack_len}"
        )));
    }
    let grids = lab_channels(lf);
    let mut vectors: [Option<Vec<f64>>; 4] = Default::default();
    let mut stack_counts = [0; 4];
    for o in Orientation::ALL {
        let per_channel: Vec<Vec<ViewStack>> = (0..3)
            .map(|c| filter_usable(build_stacks(&grids[c], o, c), min_stack_len))
            .collect();
        let count = per_channel[0].len();
        if count == 0 {
            log::debug!("no usable {}° stacks", o.degrees());
            continue;
        }
        let mut acc = vec![0.0; FEATURE_LEN];
        for i in 0..count {
            let (v, _) =
                stack_features([&per_channel[0][i], &per_channel[1][i], &per_channel[2][i]])?;
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += x;
            }
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite {}° feature",
                o.degrees()
            )));
        }
        vectors[o.index()] = Some(acc);
        stack_counts[o.index()] = count;
    }
    Ok(OrientationFeatures {
        vectors,
        stack_counts,
    })
}

pub fn extract(lf: &LightField, cfg: &ExtractConfig) -> Result<Extraction> {
    let orientations = orientation_features(lf, cfg.min_stack_len)?;
    if orientations.present().iter().all(|p| !p) {
        return Err(Error::TooSmall(format!(
            "no stack of at least {} views in a {}x{} grid",
            cfg.min_stack_len,
            lf.angular_size().0,
            lf.angular_size().1
        )));
    }
    let pooled = pool(&orientations, cfg.weights)?;
    Ok(Extraction {
        orientations,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    fn field(angular: (usize, usize)) -> LightField {
        generate(&SynthSpec {
            seed: 1,
            angular,
            spatial: (24, 24),
            disparity: 0.5,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn layout_and_determinism() {
        let lf = field((4, 4));
        let a = extract(&lf, &ExtractConfig::default()).unwrap();
        assert_eq!(a.pooled.f_final.len(), FEATURE_LEN);
        assert_eq!(a.orientations.stack_counts, [4, 3, 4, 3]);
        let b = extract(&lf, &ExtractConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn narrow_grid_leaves_orientations_absent() {
        let lf = field((2, 5));
        let e = extract(&lf, &ExtractConfig::default()).unwrap();
        assert_eq!(e.orientations.present(), [true, false, false, false]);
        assert_eq!(e.pooled.weights, [1.0, 0.0, 0.0, 0.0]);
        assert!(extract(&field((2, 2)), &ExtractConfig::default()).is_err());
        let cfg = ExtractConfig {
            min_stack_len: 2,
            ..ExtractConfig::default()
        };
        assert!(extract(&lf, &cfg).is_err());
    }
}
