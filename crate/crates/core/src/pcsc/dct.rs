//! Block-DCT entropy features.
//!
//! Each non-overlapping `B × B` block is transformed with an orthonormal
//! type-II DCT. Over the AC coefficients of a block, `p = |c| / Σ|c|` and the
//! entropy is `−Σ p ln p`. Seven entropies are averaged over blocks: all AC
//! coefficients, three radial bands and three orientation sectors. Bands and
//! sectors hold equal coefficient counts; a subset is renormalised on its
//! own, and a subset with zero mass contributes entropy 0.

use std::sync::OnceLock;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const BLOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DctEntropyFeatures {
    pub whole: f64,
    /// Low, mid, high radial frequency.
    pub bands: [f64; 3],
    /// Sectors by increasing angle from the horizontal-frequency axis.
    pub orients: [f64; 3],
}

impl DctEntropyFeatures {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.whole,
            self.bands[0],
            self.bands[1],
            self.bands[2],
            self.orients[0],
            self.orients[1],
            self.orients[2],
        ]
    }
}

struct Layout {
    basis: [[f64; BLOCK]; BLOCK],
    ac: Vec<(usize, usize)>,
    bands: [Vec<usize>; 3],
    orients: [Vec<usize>; 3],
}

fn layout() -> &'static Layout {
    static LAYOUT: OnceLock<Layout> = OnceLock::new();
    LAYOUT.get_or_init(|| {
        let n = BLOCK as f64;
        let mut basis = [[0.0; BLOCK]; BLOCK];
        for (u, row) in basis.iter_mut().enumerate() {
            let c = if u == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = c * (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos();
            }
        }
        // (u, v) = (vertical frequency, horizontal frequency).
        let ac: Vec<(usize, usize)> = (0..BLOCK)
            .flat_map(|u| (0..BLOCK).map(move |v| (u, v)))
            .filter(|&p| p != (0, 0))
            .collect();
        let third = ac.len() / 3;
        let split = |order: Vec<usize>| -> [Vec<usize>; 3] {
            [
                order[..third].to_vec(),
                order[third..2 * third].to_vec(),
                order[2 * third..].to_vec(),
            ]
        };
        let r2 = |(u, v): (usize, usize)| u * u + v * v;
        let mut radial: Vec<usize> = (0..ac.len()).collect();
        radial.sort_by_key(|&i| (r2(ac[i]), ac[i]));
        // Angle of (u, v) from the v axis, compared exactly by cross products.
        let mut angular: Vec<usize> = (0..ac.len()).collect();
        angular.sort_by(|&i, &j| {
            let (ui, vi) = ac[i];
            let (uj, vj) = ac[j];
            (ui * vj)
                .cmp(&(uj * vi))
                .then(r2(ac[i]).cmp(&r2(ac[j])))
                .then(ac[i].cmp(&ac[j]))
        });
        Layout {
            basis,
            bands: split(radial),
            orients: split(angular),
            ac,
        }
    })
}

fn dct_block(
    block: &[[f64; BLOCK]; BLOCK],
    basis: &[[f64; BLOCK]; BLOCK],
) -> [[f64; BLOCK]; BLOCK] {
    let mut tmp = [[0.0; BLOCK]; BLOCK];
    for u in 0..BLOCK {
        for y in 0..BLOCK {
            tmp[u][y] = (0..BLOCK).map(|x| basis[u][x] * block[x][y]).sum();
        }
    }
    let mut out = [[0.0; BLOCK]; BLOCK];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            out[u][v] = (0..BLOCK).map(|y| tmp[u][y] * basis[v][y]).sum();
        }
    }
    out
}

fn entropy_of(mags: &[f64], idx: &[usize]) -> f64 {
    let total: f64 = idx.iter().map(|&i| mags[i]).sum();
    if !(total > 0.0) {
        return 0.0;
    }
    idx.iter()
        .map(|&i| mags[i] / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Mean block entropies of the AC DCT coefficients of `image`.
pub fn dct_entropy(image: &Array2<f64>) -> Result<DctEntropyFeatures> {
    let (h, w) = image.dim();
    if h < BLOCK || w < BLOCK {
        return Err(Error::TooSmall(format!(
            "DCT entropy needs at least {BLOCK}x{BLOCK}, got {h}x{w}"
        )));
    }
    let lay = layout();
    let all: Vec<usize> = (0..lay.ac.len()).collect();
    let mut acc = [0.0f64; 7];
    let mut count = 0usize;
    let mut mags = vec![0.0; lay.ac.len()];
    for bx in 0..h / BLOCK {
        for by in 0..w / BLOCK {
            let mut block = [[0.0; BLOCK]; BLOCK];
            // Subtracting one pixel only moves the DC term; a flat block
            // then transforms to exact zeros.
            let anchor = image[[bx * BLOCK, by * BLOCK]];
            for (x, row) in block.iter_mut().enumerate() {
                for (y, v) in row.iter_mut().enumerate() {
                    *v = image[[bx * BLOCK + x, by * BLOCK + y]] - anchor;
                }
            }
            let c = dct_block(&block, &lay.basis);
            for (m, &(u, v)) in mags.iter_mut().zip(&lay.ac) {
                *m = c[u][v].abs();
            }
            acc[0] += entropy_of(&mags, &all);
            for k in 0..3 {
                acc[1 + k] += entropy_of(&mags, &lay.bands[k]);
                acc[4 + k] += entropy_of(&mags, &lay.orients[k]);
            }
            count += 1;
        }
    }
    let m = acc.map(|v| v / count as f64);
    Ok(DctEntropyFeatures {
        whole: m[0],
        bands: [m[1], m[2], m[3]],
        orients: [m[4], m[5], m[6]],
    })
}
