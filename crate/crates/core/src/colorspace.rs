//! sRGB to CIELAB (2° observer, D65).

use ndarray::{Array2, Array3};

use crate::lfio::LightField;

/// D65 reference white.
pub const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

// Linear sRGB -> XYZ. Rows sum to the D65 white point.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const EPS: f64 = 216.0 / 24389.0; // (6/29)^3
const KAPPA: f64 = 24389.0 / 27.0; // (29/3)^3

/// The three CIELAB channels of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub l: Array2<f64>,
    pub a: Array2<f64>,
    pub b: Array2<f64>,
}

impl LabImage {
    /// Channel by index: 0 = L*, 1 = a*, 2 = b*.
    pub fn channel(&self, n: usize) -> &Array2<f64> {
        match n {
            0 => &self.l,
            1 => &self.a,
            2 => &self.b,
            _ => panic!("Lab channel index {n} out of range"),
        }
    }
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPS {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > EPS {
        t
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// Converts one sRGB triple in `[0, 1]` to `(L*, a*, b*)`.
pub fn srgb_pixel_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    for (row, out) in RGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    // The Y row sums to 1 + 1e-7, which would push white a hair above 100.
    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    [l, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Inverse of [`srgb_pixel_to_lab`]; the result is clamped to `[0, 1]`.
pub fn lab_pixel_to_srgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE_D65[0],
        lab_f_inv(fy) * WHITE_D65[1],
        lab_f_inv(fz) * WHITE_D65[2],
    ];
    let mut rgb = [0.0; 3];
    for (row, out) in XYZ_TO_RGB.iter().zip(rgb.iter_mut()) {
        let lin = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
        *out = linear_to_srgb(lin.max(0.0)).clamp(0.0, 1.0);
    }
    rgb
}

/// Converts an `X × Y × 3` sRGB image to CIELAB.
pub fn srgb_to_cielab(image: &Array3<f64>) -> LabImage {
    let (h, w, c) = image.dim();
    assert_eq!(c, 3, "expected 3 colour channels");
    let mut l = Array2::zeros((h, w));
    let mut a = Array2::zeros((h, w));
    let mut b = Array2::zeros((h, w));
    for x in 0..h {
        for y in 0..w {
            let lab = srgb_pixel_to_lab([image[[x, y, 0]], image[[x, y, 1]], image[[x, y, 2]]]);
            l[[x, y]] = lab[0];
            a[[x, y]] = lab[1];
            b[[x, y]] = lab[2];
        }
    }
    LabImage { l, a, b }
}

/// Inverse conversion of a whole image, clamped to the sRGB gamut.
pub fn cielab_to_srgb(lab: &LabImage) -> Array3<f64> {
    let (h, w) = lab.l.dim();
    let mut out = Array3::zeros((h, w, 3));
    for x in 0..h {
        for y in 0..w {
            let rgb = lab_pixel_to_srgb([lab.l[[x, y]], lab.a[[x, y]], lab.b[[x, y]]]);
            for c in 0..3 {
                out[[x, y, c]] = rgb[c];
            }
        }
    }
    out
}

/// One Lab channel of every view of a light field, row-major over `(s, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    pub angular: (usize, usize),
    pub views: Vec<Array2<f64>>,
}

impl ChannelGrid {
    pub fn new(angular: (usize, usize), views: Vec<Array2<f64>>) -> Self {
        assert_eq!(
            angular.0 * angular.1,
            views.len(),
            "grid/view count mismatch"
        );
        Self { angular, views }
    }

    /// 0-based `(s, t)`.
    pub fn view(&self, s: usize, t: usize) -> &Array2<f64> {
        &self.views[s * self.angular.1 + t]
    }

    /// Swaps the two angular axes.
    pub fn transposed(&self) -> Self {
        let (s_len, t_len) = self.angular;
        let mut views = Vec::with_capacity(self.views.len());
        for t in 0..t_len {
            for s in 0..s_len {
                views.push(self.view(s, t).clone());
            }
        }
        Self::new((t_len, s_len), views)
    }
}

/// Splits a light field into its L*, a*, b* channel grids.
pub fn lab_channels(lf: &LightField) -> [ChannelGrid; 3] {
    let angular = lf.angular_size();
    let mut grids: [Vec<Array2<f64>>; 3] = Default::default();
    for v in lf.views() {
        let lab = srgb_to_cielab(v);
        grids[0].push(lab.l);
        grids[1].push(lab.a);
        grids[2].push(lab.b);
    }
    grids.map(|views| ChannelGrid::new(angular, views))
}

/// Per-channel nominal dynamic range used by the SSIM constants.
pub const LAB_NOMINAL_RANGE: [f64; 3] = [100.0, 255.0, 255.0];
