//! Orientation pooling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::viewstack::Orientation;

pub const DEFAULT_WEIGHTS: [f64; 4] = [0.25; 4];

/// Per-orientation feature vectors, indexed 0°, 45°, 90°, 135°. An
/// orientation without usable stacks is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationFeatures {
    pub vectors: [Option<Vec<f64>>; 4],
    /// Usable stacks averaged into each vector.
    pub stack_counts: [usize; 4],
}

impl OrientationFeatures {
    pub fn get(&self, o: Orientation) -> Option<&[f64]> {
        self.vectors[o.index()].as_deref()
    }

    pub fn present(&self) -> [bool; 4] {
        std::array::from_fn(|i| self.vectors[i].is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledFeatures {
    pub f_final: Vec<f64>,
    /// Effective weights after dropping absent orientations; sum to 1.
    pub weights: [f64; 4],
}

/// Sums four terms in sorted order and in pairs, so the result does not
/// depend on the order the terms arrive in.
fn sum4(mut t: [f64; 4]) -> f64 {
    t.sort_by(f64::total_cmp);
    (t[0] + t[1]) + (t[2] + t[3])
}

/// Weighted sum of the orientation vectors. Absent orientations get weight
/// zero and the remaining weights are renormalised.
pub fn pool(orient: &OrientationFeatures, weights: [f64; 4]) -> Result<PooledFeatures> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "orientation weights must be finite and non-negative, got {weights:?}"
        )));
    }
    let present = orient.present();
    let total = sum4(std::array::from_fn(|i| {
        if present[i] {
            weights[i]
        } else {
            0.0
        }
    }));
    if !(total > 0.0) {
        return Err(Error::Degenerate(
            "no orientation with positive weight has usable stacks".into(),
        ));
    }
    let eff: [f64; 4] = std::array::from_fn(|i| if present[i] { weights[i] / total } else { 0.0 });
    if total != 1.0 && present.iter().any(|p| !p) {
        log::debug!("pooling over a subset of orientations with weights {eff:?}");
    }
    let len = orient
        .vectors
        .iter()
        .flatten()
        .map(Vec::len)
        .next()
        .expect("at least one orientation present");
    if orient.vectors.iter().flatten().any(|v| v.len() != len) {
        return Err(Error::Shape("orientation vectors differ in length".into()));
    }
    let f_final = (0..len)
        .map(|k| {
            sum4(std::array::from_fn(|i| match &orient.vectors[i] {
                Some(v) => eff[i] * v[k],
                None => 0.0,
            }))
        })
        .collect();
    Ok(PooledFeatures {
        f_final,
        weights: eff,
    })
}
