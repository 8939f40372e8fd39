//! Synthetic light fields with graded distortions.
//!
//! A scene is an analytic texture (oriented sinusoids plus soft-edged discs)
//! seen through an `S × T` camera grid; view `(s, t)` samples the texture at
//! `(x + d·(s − s_c), y + d·(t − t_c))`, where `d` is the disparity and
//! `(s_c, t_c)` the grid centre. Because the texture is analytic, sub-pixel
//! disparities need no resampling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspace::{lab_pixel_to_srgb, srgb_pixel_to_lab};
use crate::error::{Error, Result};
use crate::imgproc::{filter_reflect, gaussian_kernel};
use crate::lfio::{write_lightfield, write_manifest, DatasetManifest, LightField, ManifestEntry};

pub const MAX_SEVERITY: u8 = 5;
pub const PRISTINE_LABEL: f64 = 6.0;

pub const BLUR_SIGMA: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];
pub const QUANT_LEVELS: [u32; 5] = [64, 32, 16, 8, 4];
pub const VIEW_STRIDE: [usize; 5] = [8, 6, 4, 3, 2];
pub const HUE_SHIFT_DEG: [f64; 5] = [8.0, 16.0, 24.0, 32.0, 40.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Texture {
    Waves,
    Discs,
    #[default]
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub angular: (usize, usize),
    pub spatial: (usize, usize),
    /// Pixels of translation per view step.
    pub disparity: f64,
    pub texture: Texture,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            angular: (9, 9),
            spatial: (64, 64),
            disparity: 1.0,
            texture: Texture::Mixed,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (s, t) = self.angular;
        let (x, y) = self.spatial;
        if s == 0 || t == 0 || x == 0 || y == 0 {
            return Err(Error::InvalidArgument(format!(
                "synthetic sizes must be positive, got {s}x{t} views of {x}x{y}"
            )));
        }
        if !(self.disparity >= 0.0 && self.disparity.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "disparity must be finite and >= 0, got {}",
                self.disparity
            )));
        }
        if self.disparity * s.max(t) as f64 >= x.min(y) as f64 / 4.0 {
            return Err(Error::InvalidArgument(format!(
                "disparity {} too large for {s}x{t} views of {x}x{y}: need disparity*max(S,T) < min(X,Y)/4",
                self.disparity
            )));
        }
        Ok(())
    }
}

struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    gain: [f64; 3],
}

struct Disc {
    cx: f64,
    cy: f64,
    radius: f64,
    gain: [f64; 3],
}

struct TextureModel {
    base: [f64; 3],
    waves: Vec<Wave>,
    discs: Vec<Disc>,
}

/// Mostly achromatic gain with a small chroma tint.
fn tinted(rng: &mut ChaCha8Rng, amp: f64, chroma: f64) -> [f64; 3] {
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(-chroma..chroma));
    std::array::from_fn(|c| amp * (1.0 + tint[c]))
}

impl TextureModel {
    fn new(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let grey = rng.random_range(0.4..0.6);
        let base = tinted(&mut rng, grey, 0.1);
        let (x, y) = (spec.spatial.0 as f64, spec.spatial.1 as f64);
        let mut waves = Vec::new();
        if spec.texture != Texture::Discs {
            for _ in 0..12 {
                // Log-uniform frequency in cycles per pixel, 1/f amplitude.
                let f = (rng.random_range((1.0f64 / 40.0).ln()..(1.0f64 / 4.0).ln())).exp();
                let theta = rng.random_range(0.0..std::f64::consts::PI);
                let amp = 0.006 / f.sqrt();
                waves.push(Wave {
                    fx: f * theta.cos(),
                    fy: f * theta.sin(),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    gain: tinted(&mut rng, amp, 0.6),
                });
            }
        }
        let mut discs = Vec::new();
        if spec.texture != Texture::Waves {
            for _ in 0..6 {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let (cx, cy) = (rng.random_range(0.0..x), rng.random_range(0.0..y));
                let radius = rng.random_range(x.min(y) / 10.0..x.min(y) / 4.0);
                let amp = sign * rng.random_range(0.08..0.2);
                discs.push(Disc {
                    cx,
                    cy,
                    radius,
                    gain: tinted(&mut rng, amp, 0.5),
                });
            }
        }
        Self { base, waves, discs }
    }

    fn eval(&self, x: f64, y: f64) -> [f64; 3] {
        let mut v = self.base.map(|b| b - 0.5);
        for w in &self.waves {
            let s = (std::f64::consts::TAU * (w.fx * x + w.fy * y) + w.phase).sin();
            for c in 0..3 {
                v[c] += w.gain[c] * s;
            }
        }
        for d in &self.discs {
            let r = ((x - d.cx).powi(2) + (y - d.cy).powi(2)).sqrt();
            // Soft edge about one pixel wide.
            let inside = 1.0 / (1.0 + ((r - d.radius) / 0.5).exp());
            for c in 0..3 {
                v[c] += d.gain[c] * inside;
            }
        }
        v.map(|u| 0.5 + 0.45 * (u / 0.45).tanh())
    }
}

/// Renders the pristine light field described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<LightField> {
    spec.validate()?;
    let tex = TextureModel::new(spec);
    let (s_len, t_len) = spec.angular;
    let (x_len, y_len) = spec.spatial;
    let (sc, tc) = ((s_len as f64 - 1.0) / 2.0, (t_len as f64 - 1.0) / 2.0);
    let mut views = Vec::with_capacity(s_len * t_len);
    for s in 0..s_len {
        for t in 0..t_len {
            let dx = spec.disparity * (s as f64 - sc);
            let dy = spec.disparity * (t as f64 - tc);
            let mut v = Array3::zeros((x_len, y_len, 3));
            for x in 0..x_len {
                for y in 0..y_len {
                    let px = tex.eval(x as f64 + dx, y as f64 + dy);
                    for c in 0..3 {
                        v[[x, y, c]] = px[c];
                    }
                }
            }
            views.push(v);
        }
    }
    LightField::new(spec.angular, views)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionKind {
    Blur,
    Quantize,
    NnView,
    LinearView,
    ChromaShift,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 5] = [
        DistortionKind::Blur,
        DistortionKind::Quantize,
        DistortionKind::NnView,
        DistortionKind::LinearView,
        DistortionKind::ChromaShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistortionKind::Blur => "blur",
            DistortionKind::Quantize => "quantize",
            DistortionKind::NnView => "nn_view",
            DistortionKind::LinearView => "linear_view",
            DistortionKind::ChromaShift => "chroma_shift",
        }
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown distortion {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    /// 1 (mild) to 5 (severe).
    pub severity: u8,
}

impl DistortionSpec {
    pub fn new(kind: DistortionKind, severity: u8) -> Result<Self> {
        if !(1..=MAX_SEVERITY).contains(&severity) {
            return Err(Error::InvalidArgument(format!(
                "severity must be in 1..=5, got {severity}"
            )));
        }
        Ok(Self { kind, severity })
    }

    pub fn label(&self) -> f64 {
        PRISTINE_LABEL - self.severity as f64
    }

    fn level(&self) -> usize {
        self.severity as usize - 1
    }
}

/// 0-based views rebuilt by the angular distortions for stride `k`: every
/// `k`-th view in row-major order.
pub fn replaced_views(angular: (usize, usize), k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for s in 0..angular.0 {
        for t in 0..angular.1 {
            if is_replaced(s, t, k, angular.1) {
                out.push((s, t));
            }
        }
    }
    out
}

/// Every `k`-th view in row-major order, counting from 1.
fn is_replaced(s: usize, t: usize, k: usize, t_len: usize) -> bool {
    (s * t_len + t + 1) % k == 0
}

fn blur(lf: &LightField, sigma: f64) -> Result<LightField> {
    let kernel = gaussian_kernel((3.0 * sigma).ceil() as usize, sigma);
    lf.map_views(|_, _, v| {
        let mut out = v.clone();
        for c in 0..3 {
            let ch = v.index_axis(ndarray::Axis(2), c).to_owned();
            out.index_axis_mut(ndarray::Axis(2), c)
                .assign(&filter_reflect(&ch, &kernel));
        }
        out
    })
}

fn quantize(lf: &LightField, levels: u32) -> Result<LightField> {
    let q = (levels - 1) as f64;
    lf.map_views(|_, _, v| v.mapv(|c| (c * q).round() / q))
}

fn nn_view(lf: &LightField, k: usize) -> Result<LightField> {
    let (s_len, t_len) = lf.angular_size();
    let kept: Vec<(usize, usize)> = (0..s_len)
        .flat_map(|s| (0..t_len).map(move |t| (s, t)))
        .filter(|&(s, t)| !is_replaced(s, t, k, t_len))
        .collect();
    lf.map_views(|s, t, v| {
        if !is_replaced(s, t, k, t_len) || kept.is_empty() {
            return v.clone();
        }
        // `kept` is lexicographic, so min_by_key breaks ties toward the
        // smallest (s, t).
        let &(ns, nt) = kept
            .iter()
            .min_by_key(|&&(ks, kt)| {
                (ks as isize - s as isize).pow(2) + (kt as isize - t as isize).pow(2)
            })
            .expect("non-empty");
        lf.view(ns, nt).clone()
    })
}

fn linear_view(lf: &LightField, k: usize) -> Result<LightField> {
    let (s_len, t_len) = lf.angular_size();
    lf.map_views(|s, t, v| {
        if !is_replaced(s, t, k, t_len) {
            return v.clone();
        }
        let inside = |ns: isize, nt: isize| {
            ns >= 0 && nt >= 0 && (ns as usize) < s_len && (nt as usize) < t_len
        };
        let (s, t) = (s as isize, t as isize);
        let mut pair: Vec<(isize, isize)> = [(s, t - 1), (s, t + 1)]
            .into_iter()
            .filter(|&(a, b)| inside(a, b))
            .collect();
        if pair.is_empty() {
            pair = [(s - 1, t), (s + 1, t)]
                .into_iter()
                .filter(|&(a, b)| inside(a, b))
                .collect();
        }
        if pair.is_empty() {
            return v.clone();
        }
        let mut acc = Array3::<f64>::zeros(v.dim());
        for &(ns, nt) in &pair {
            acc += lf.view(ns as usize, nt as usize);
        }
        acc / pair.len() as f64
    })
}

fn chroma_shift(lf: &LightField, degrees: f64) -> Result<LightField> {
    let (sin, cos) = degrees.to_radians().sin_cos();
    lf.map_views(|s, t, v| {
        if (s + t) % 2 == 0 {
            return v.clone();
        }
        let mut out = v.clone();
        let (x_len, y_len, _) = v.dim();
        for x in 0..x_len {
            for y in 0..y_len {
                let lab = srgb_pixel_to_lab([v[[x, y, 0]], v[[x, y, 1]], v[[x, y, 2]]]);
                let rot = [
                    lab[0],
                    cos * lab[1] - sin * lab[2],
                    sin * lab[1] + cos * lab[2],
                ];
                let rgb = lab_pixel_to_srgb(rot);
                for c in 0..3 {
                    out[[x, y, c]] = rgb[c];
                }
            }
        }
        out
    })
}

/// Applies one graded distortion; dimensions are preserved.
pub fn distort(lf: &LightField, spec: DistortionSpec) -> Result<LightField> {
    let i = spec.level();
    match spec.kind {
        DistortionKind::Blur => blur(lf, BLUR_SIGMA[i]),
        DistortionKind::Quantize => quantize(lf, QUANT_LEVELS[i]),
        DistortionKind::NnView => nn_view(lf, VIEW_STRIDE[i]),
        DistortionKind::LinearView => linear_view(lf, VIEW_STRIDE[i]),
        DistortionKind::ChromaShift => chroma_shift(lf, HUE_SHIFT_DEG[i]),
    }
}

/// A grid of scenes × distortions × severities.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub scenes: usize,
    pub kinds: Vec<DistortionKind>,
    pub severities: Vec<u8>,
    pub include_pristine: bool,
    /// Template for every scene; scene `i` uses seed `base.seed + i`.
    pub base: SynthSpec,
}

impl DatasetPlan {
    pub fn items(&self) -> Vec<(usize, Option<DistortionSpec>)> {
        let mut out = Vec::new();
        for scene in 0..self.scenes {
            if self.include_pristine {
                out.push((scene, None));
            }
            for &kind in &self.kinds {
                for &severity in &self.severities {
                    out.push((scene, Some(DistortionSpec { kind, severity })));
                }
            }
        }
        out
    }
}

pub fn scene_name(scene: usize) -> String {
    format!("scene{scene:02}")
}

pub fn item_id(scene: usize, distortion: Option<DistortionSpec>) -> String {
    match distortion {
        None => format!("{}_pristine", scene_name(scene)),
        Some(d) => format!("{}_{}_{}", scene_name(scene), d.kind, d.severity),
    }
}

/// Writes every item of `plan` under `dir` and a `manifest.json` listing
/// them with severity-derived labels.
pub fn write_dataset(plan: &DatasetPlan, dir: &Path) -> Result<(PathBuf, DatasetManifest)> {
    for &s in &plan.severities {
        DistortionSpec::new(DistortionKind::Blur, s)?;
    }
    let mut entries = Vec::new();
    for scene in 0..plan.scenes {
        let spec = SynthSpec {
            seed: plan.base.seed.wrapping_add(scene as u64),
            ..plan.base.clone()
        };
        let pristine = generate(&spec)?;
        for (sc, dist) in plan.items().into_iter().filter(|(sc, _)| *sc == scene) {
            let id = item_id(sc, dist);
            let (lf, label) = match dist {
                None => (pristine.clone(), PRISTINE_LABEL),
                Some(d) => (distort(&pristine, d)?, d.label()),
            };
            write_lightfield(&lf, &dir.join(&id))?;
            log::debug!("wrote {id}");
            entries.push(ManifestEntry {
                id: id.clone(),
                path: PathBuf::from(&id),
                label: Some(label),
                scene: scene_name(sc),
            });
        }
    }
    let manifest = DatasetManifest { entries };
    let path = dir.join("manifest.json");
    write_manifest(&path, &manifest)?;
    Ok((path, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::srgb_to_cielab;

    fn small(seed: u64, disparity: f64) -> SynthSpec {
        SynthSpec {
            seed,
            angular: (5, 5),
            spatial: (32, 32),
            disparity,
            texture: Texture::Mixed,
        }
    }

    #[test]
    fn zero_disparity_views_identical() {
        let lf = generate(&small(1, 0.0)).unwrap();
        assert!(lf.views().iter().all(|v| v == &lf.views()[0]));
    }

    #[test]
    fn seed_repeat_is_bitwise_equal() {
        assert_eq!(
            generate(&small(7, 0.5)).unwrap(),
            generate(&small(7, 0.5)).unwrap()
        );
        assert_ne!(
            generate(&small(7, 0.5)).unwrap(),
            generate(&small(8, 0.5)).unwrap()
        );
    }

    #[test]
    fn invariant_enforced() {
        let mut s = small(0, 1.6);
        assert!(s.validate().is_err());
        s.disparity = 1.5;
        assert!(s.validate().is_ok());
        s.disparity = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn adjacent_views_correlate_best_at_one_pixel() {
        let spec = SynthSpec {
            seed: 3,
            angular: (9, 9),
            spatial: (64, 64),
            disparity: 1.0,
            texture: Texture::Mixed,
        };
        let lf = generate(&spec).unwrap();
        let a = lf.channel(4, 4, 1);
        let b = lf.channel(4, 5, 1);
        let corr = |shift: isize| {
            let mut pairs = Vec::new();
            for x in 0..64 {
                for y in 8..56 {
                    pairs.push((a[[x, (y as isize + shift) as usize]], b[[x, y]]));
                }
            }
            let n = pairs.len() as f64;
            let (ma, mb) = pairs
                .iter()
                .fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
            let cov: f64 = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum();
            let va: f64 = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum();
            let vb: f64 = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum();
            cov / (va * vb).sqrt()
        };
        let best = (-4..=4)
            .max_by(|&i, &j| corr(i).total_cmp(&corr(j)))
            .unwrap();
        assert_eq!(best, 1);
        assert!(corr(1) > 0.999);
    }

    fn psnr(a: &LightField, b: &LightField) -> f64 {
        let mut total = 0.0;
        for (va, vb) in a.views().iter().zip(b.views()) {
            let mse = (va - vb).mapv(|d| d * d).mean().unwrap();
            total += 10.0 * (1.0 / mse.max(1e-20)).log10();
        }
        total / a.views().len() as f64
    }

    #[test]
    fn blur_psnr_decreases_with_severity() {
        let mut medians = Vec::new();
        for sev in 1..=5 {
            let mut vals: Vec<f64> = (0..10)
                .map(|seed| {
                    let lf = generate(&SynthSpec {
                        angular: (3, 3),
                        ..small(seed, 0.5)
                    })
                    .unwrap();
                    psnr(
                        &lf,
                        &distort(&lf, DistortionSpec::new(DistortionKind::Blur, sev).unwrap())
                            .unwrap(),
                    )
                })
                .collect();
            vals.sort_by(f64::total_cmp);
            medians.push(0.5 * (vals[4] + vals[5]));
        }
        assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    }

    #[test]
    fn nn_view_touches_only_replaced_views() {
        let spec = SynthSpec {
            angular: (9, 9),
            spatial: (40, 40),
            ..small(4, 1.0)
        };
        let lf = generate(&spec).unwrap();
        let d = distort(&lf, DistortionSpec::new(DistortionKind::NnView, 5).unwrap()).unwrap();
        let replaced = replaced_views((9, 9), 2);
        for s in 0..9 {
            for t in 0..9 {
                if replaced.contains(&(s, t)) {
                    assert_ne!(d.view(s, t), lf.view(s, t), "({s},{t})");
                } else {
                    assert_eq!(d.view(s, t), lf.view(s, t));
                }
            }
        }
        assert_eq!(replaced.len(), 40);
        // (1,0) is the 10th view; its kept neighbours (0,0), (1,1) and (2,0)
        // all sit at distance 1 and the lexicographic tie-break picks (0,0).
        assert_eq!(d.view(1, 0), lf.view(0, 0));
    }

    #[test]
    fn linear_view_averages_neighbours() {
        let lf = generate(&small(5, 1.0)).unwrap();
        let d = distort(
            &lf,
            DistortionSpec::new(DistortionKind::LinearView, 4).unwrap(),
        )
        .unwrap();
        // Stride 3: the third view in row-major order is (0,2).
        let expect = (lf.view(0, 1) + lf.view(0, 3)) / 2.0;
        assert!((d.view(0, 2) - &expect).iter().all(|v| v.abs() < 1e-15));
        assert_eq!(d.view(0, 0), lf.view(0, 0));
    }

    #[test]
    fn chroma_shift_preserves_lightness() {
        let lf = generate(&small(6, 1.0)).unwrap();
        let d = distort(
            &lf,
            DistortionSpec::new(DistortionKind::ChromaShift, 5).unwrap(),
        )
        .unwrap()
        .quantized_8bit();
        let mut max_dl: f64 = 0.0;
        let mut changed = false;
        for (a, b) in lf.views().iter().zip(d.views()) {
            let (la, lb) = (srgb_to_cielab(a), srgb_to_cielab(b));
            max_dl = max_dl.max((&la.l - &lb.l).iter().fold(0.0, |m, v| m.max(v.abs())));
            changed |= (&la.a - &lb.a).iter().any(|v| v.abs() > 1.0);
        }
        assert!(changed);
        assert!(max_dl < 0.5, "max |dL*| {max_dl}");
    }

    #[test]
    fn distortions_keep_dimensions_and_are_deterministic() {
        let lf = generate(&small(2, 0.5)).unwrap();
        for kind in DistortionKind::ALL {
            for sev in 1..=5 {
                let spec = DistortionSpec::new(kind, sev).unwrap();
                let a = distort(&lf, spec).unwrap();
                assert_eq!(a.angular_size(), lf.angular_size());
                assert_eq!(a.spatial_size(), lf.spatial_size());
                assert_eq!(a, distort(&lf, spec).unwrap());
            }
        }
        assert!(DistortionSpec::new(DistortionKind::Blur, 0).is_err());
        assert!(DistortionSpec::new(DistortionKind::Blur, 6).is_err());
        assert_eq!(
            "nn_view".parse::<DistortionKind>().unwrap(),
            DistortionKind::NnView
        );
        assert!("jpeg".parse::<DistortionKind>().is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let plan = DatasetPlan {
            scenes: 2,
            kinds: vec![DistortionKind::Blur],
            severities: vec![1, 5],
            include_pristine: true,
            base: SynthSpec {
                angular: (3, 3),
                spatial: (16, 16),
                disparity: 0.5,
                ..SynthSpec::default()
            },
        };
        let (path, manifest) = write_dataset(&plan, dir.path()).unwrap();
        assert_eq!(manifest.entries.len(), 6);
        let loaded = crate::lfio::load_manifest(&path).unwrap();
        let labels: Vec<f64> = loaded.entries.iter().map(|e| e.label.unwrap()).collect();
        assert_eq!(labels, vec![6.0, 5.0, 1.0, 6.0, 5.0, 1.0]);
        assert_eq!(loaded.entries[4].id, "scene01_blur_1");
        assert_eq!(loaded.entries[4].scene, "scene01");
        let lf = crate::lfio::load_lightfield(&loaded.entries[0], Some((3, 3))).unwrap();
        assert_eq!(
            lf,
            generate(&SynthSpec {
                seed: 0,
                ..plan.base.clone()
            })
            .unwrap()
            .quantized_8bit()
        );
    }
}
