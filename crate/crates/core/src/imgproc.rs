//! Small separable-filter helpers shared by the feature extractors and the
//! distortion generator.

use ndarray::Array2;

/// Sampled Gaussian of half-width `radius`, normalised to sum 1.
pub fn gaussian_kernel(radius: usize, sigma: f64) -> Vec<f64> {
    let r = radius as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Half-sample symmetric reflection (`… b a | a b c … | c b …`).
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Separable convolution with symmetric-reflection borders; output has the
/// input's size.
pub fn filter_reflect(img: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (h, w) = img.dim();
    let r = (kernel.len() / 2) as isize;
    let mut tmp = Array2::zeros((h, w));
    for x in 0..h {
        for y in 0..w {
            let mut acc = 0.0;
            for (j, &k) in kernel.iter().enumerate() {
                acc += k * img[[x, reflect(y as isize + j as isize - r, w)]];
            }
            tmp[[x, y]] = acc;
        }
    }
    let mut out = Array2::zeros((h, w));
    for x in 0..h {
        for y in 0..w {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                acc += k * tmp[[reflect(x as isize + i as isize - r, h), y]];
            }
            out[[x, y]] = acc;
        }
    }
    out
}

/// Separable convolution over fully-covered positions only
/// (`(h − K + 1) × (w − K + 1)` output).
pub fn filter_valid(img: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (h, w) = img.dim();
    let k = kernel.len();
    assert!(h >= k && w >= k, "image smaller than kernel");
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut tmp = Array2::<f64>::zeros((h, ow));
    for x in 0..h {
        for y in 0..ow {
            tmp[[x, y]] = kernel
                .iter()
                .enumerate()
                .map(|(j, &c)| c * img[[x, y + j]])
                .sum();
        }
    }
    let mut out = Array2::<f64>::zeros((oh, ow));
    for x in 0..oh {
        for y in 0..ow {
            out[[x, y]] = kernel
                .iter()
                .enumerate()
                .map(|(i, &c)| c * tmp[[x + i, y]])
                .sum();
        }
    }
    out
}
