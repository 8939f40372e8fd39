//! Principal-component spatial characteristics.
//!
//! Feature layout (38 values):
//!
//! ```text
//! for channel in [L*, a*, b*]:
//!     alpha, sigma_l, sigma_r, eta            AGGD of the MSCN coefficients
//!     whole, band_low, band_mid, band_high,   block-DCT entropies of the
//!     orient_0, orient_1, orient_2            principal component
//! phi, gamma, m12, m13, m23                   MGGD of per-pixel MSCN triples
//! ```

mod aggd;
mod dct;
mod mggd;
mod mscn;

pub use aggd::{fit_aggd, gg_ratio, AggdParams, ALPHA_MAX, ALPHA_MIN};
pub use dct::{dct_entropy, DctEntropyFeatures, BLOCK};
pub use mggd::{fit_mggd, MggdParams};
pub use mscn::{mscn, MscnField, WINDOW_HALF, WINDOW_SIGMA};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const PCSC_LEN: usize = 38;
const PER_CHANNEL: usize = 11;

pub const CHANNEL_FEATURE_NAMES: [&str; PER_CHANNEL] = [
    "aggd_alpha",
    "aggd_sigma_l",
    "aggd_sigma_r",
    "aggd_eta",
    "dct_entropy_whole",
    "dct_entropy_band_low",
    "dct_entropy_band_mid",
    "dct_entropy_band_high",
    "dct_entropy_orient_0",
    "dct_entropy_orient_1",
    "dct_entropy_orient_2",
];

pub const JOINT_FEATURE_NAMES: [&str; 5] =
    ["mggd_phi", "mggd_gamma", "mggd_m12", "mggd_m13", "mggd_m23"];

#[derive(Debug, Clone, PartialEq)]
pub struct PcscFeatures {
    pub aggd: [AggdParams; 3],
    pub entropy: [DctEntropyFeatures; 3],
    pub mggd: MggdParams<3>,
}

impl PcscFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(PCSC_LEN);
        for n in 0..3 {
            out.extend_from_slice(&self.aggd[n].as_array());
            out.extend_from_slice(&self.entropy[n].as_array());
        }
        out.push(self.mggd.phi);
        out.push(self.mggd.gamma);
        out.extend(self.mggd.off_diagonals());
        out
    }
}

/// PCSC features of the three channel principal components of one stack.
pub fn pcsc_features(pcs: [&Array2<f64>; 3]) -> Result<PcscFeatures> {
    let dim = pcs[0].dim();
    if pcs.iter().any(|p| p.dim() != dim) {
        return Err(Error::Shape("principal components differ in size".into()));
    }
    let fields = [mscn(pcs[0])?, mscn(pcs[1])?, mscn(pcs[2])?];
    let mut aggd = Vec::with_capacity(3);
    let mut entropy = Vec::with_capacity(3);
    for (field, pc) in fields.iter().zip(pcs) {
        let samples: Vec<f64> = field.coeffs.iter().copied().collect();
        aggd.push(fit_aggd(&samples)?);
        entropy.push(dct_entropy(pc)?);
    }
    let triples: Vec<[f64; 3]> = fields[0]
        .coeffs
        .iter()
        .zip(fields[1].coeffs.iter())
        .zip(fields[2].coeffs.iter())
        .map(|((&l, &a), &b)| [l, a, b])
        .collect();
    let mggd = fit_mggd(&triples)?;
    Ok(PcscFeatures {
        aggd: [aggd[0], aggd[1], aggd[2]],
        entropy: [entropy[0], entropy[1], entropy[2]],
        mggd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_inputs_take_degenerate_paths() {
        let c = Array2::from_elem((32, 32), 50.0);
        let f = pcsc_features([&c, &c, &c]).unwrap();
        assert!(f.aggd.iter().all(|a| a.degenerate));
        assert!(f.entropy.iter().all(|e| e.as_array() == [0.0; 7]));
        assert!(f.mggd.regularized);
        assert_eq!(f.to_vec().len(), PCSC_LEN);
    }

    #[test]
    fn layout_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mk = |rng: &mut ChaCha8Rng, s: f64| {
            Array2::from_shape_fn((24, 24), |_| s * rng.random_range(0.0..1.0))
        };
        let (l, a, b) = (mk(&mut rng, 100.0), mk(&mut rng, 20.0), mk(&mut rng, 30.0));
        let f1 = pcsc_features([&l, &a, &b]).unwrap().to_vec();
        let f2 = pcsc_features([&l, &a, &b]).unwrap().to_vec();
        assert_eq!(f1.len(), PCSC_LEN);
        assert_eq!(
            f1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            f2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(f1.iter().all(|v| v.is_finite()));
        assert_eq!(
            CHANNEL_FEATURE_NAMES.len() * 3 + JOINT_FEATURE_NAMES.len(),
            PCSC_LEN
        );
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let a = Array2::zeros((16, 16));
        let b = Array2::zeros((16, 17));
        assert!(pcsc_features([&a, &a, &b]).is_err());
    }
}
