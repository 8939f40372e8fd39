use ndarray::Array2;

use crate::error::{Error, Result};
use crate::imgproc::{gaussian_kernel, reflect};

/// Window half-size `K = L = 3` (7×7 support).
pub const WINDOW_HALF: usize = 3;
/// The 7×7 support spans ±3 standard deviations.
pub const WINDOW_SIGMA: f64 = 7.0 / 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MscnField {
    pub coeffs: Array2<f64>,
    pub window_halfsize: (usize, usize),
    pub window_sigma: f64,
}

/// Mean-subtracted contrast-normalised coefficients
/// `(I − μ) / (σ + 1)` with a 7×7 circular Gaussian window and
/// symmetric-reflection borders.
pub fn mscn(image: &Array2<f64>) -> Result<MscnField> {
    let (h, w) = image.dim();
    let side = 2 * WINDOW_HALF + 1;
    if h < side || w < side {
        return Err(Error::TooSmall(format!(
            "MSCN needs at least {side}x{side}, got {h}x{w}"
        )));
    }
    let g = gaussian_kernel(WINDOW_HALF, WINDOW_SIGMA);
    let r = WINDOW_HALF as isize;
    let mut coeffs = Array2::zeros((h, w));
    let mut diff = [0.0f64; 49];
    for x in 0..h {
        for y in 0..w {
            let centre = image[[x, y]];
            // Work with offsets from the centre pixel so a flat patch gives an
            // exactly zero numerator.
            let mut shift = 0.0;
            let mut n = 0;
            for (i, gi) in g.iter().enumerate() {
                let xx = reflect(x as isize + i as isize - r, h);
                for (j, gj) in g.iter().enumerate() {
                    let yy = reflect(y as isize + j as isize - r, w);
                    let d = image[[xx, yy]] - centre;
                    diff[n] = d;
                    n += 1;
                    shift += gi * gj * d;
                }
            }
            // I − μ = −shift
            let num = -shift;
            let mut var = 0.0;
            n = 0;
            for gi in &g {
                for gj in &g {
                    let e = diff[n] + num;
                    var += gi * gj * e * e;
                    n += 1;
                }
            }
            coeffs[[x, y]] = num / (var.sqrt() + 1.0);
        }
    }
    Ok(MscnField {
        coeffs,
        window_halfsize: (WINDOW_HALF, WINDOW_HALF),
        window_sigma: WINDOW_SIGMA,
    })
}
