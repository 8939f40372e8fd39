//! Light-field and dataset-manifest I/O.
//!
//! On disk a light field is one directory holding a complete `S × T` grid of
//! sub-aperture views named `v_<s>_<t>.<ext>` with 1-based angular indices.
//! Integer samples are mapped to `[0, 1]` by dividing by the type maximum
//! (255 or 65535), so full white is exactly `1.0`.
//!
//! Spatial convention: `x` indexes image rows and `y` indexes columns, so
//! `spatial_size = (X, Y) = (height, width)`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Rgb};
use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

/// A 4D light field `L(s, t, x, y)` of RGB triples in `[0, 1]`.
///
/// Views are stored row-major over the angular grid; each view is an
/// `X × Y × 3` array.
#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    angular: (usize, usize),
    spatial: (usize, usize),
    views: Vec<Array3<f64>>,
}

impl LightField {
    /// Builds a light field from `S·T` views in row-major angular order.
    /// Channel values are clamped to `[0, 1]`.
    pub fn new(angular: (usize, usize), views: Vec<Array3<f64>>) -> Result<Self> {
        let (s, t) = angular;
        if s == 0 || t == 0 {
            return Err(Error::InvalidArgument(format!(
                "angular size must be positive, got {s}x{t}"
            )));
        }
        if views.len() != s * t {
            return Err(Error::Shape(format!(
                "expected {} views for a {s}x{t} grid, got {}",
                s * t,
                views.len()
            )));
        }
        let dim = views[0].dim();
        if dim.0 == 0 || dim.1 == 0 || dim.2 != 3 {
            return Err(Error::Shape(format!("invalid view shape {dim:?}")));
        }
        let mut views = views;
        for (k, v) in views.iter_mut().enumerate() {
            if v.dim() != dim {
                return Err(Error::Shape(format!(
                    "view ({},{}) has shape {:?}, expected {dim:?}",
                    k / t + 1,
                    k % t + 1,
                    v.dim()
                )));
            }
            v.mapv_inplace(|c| if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) });
        }
        Ok(Self {
            angular,
            spatial: (dim.0, dim.1),
            views,
        })
    }

    pub fn angular_size(&self) -> (usize, usize) {
        self.angular
    }

    pub fn spatial_size(&self) -> (usize, usize) {
        self.spatial
    }

    /// View at 0-based angular coordinate `(s, t)`.
    pub fn view(&self, s: usize, t: usize) -> &Array3<f64> {
        &self.views[s * self.angular.1 + t]
    }

    pub fn views(&self) -> &[Array3<f64>] {
        &self.views
    }

    /// One colour channel of one view as a 2D array.
    pub fn channel(&self, s: usize, t: usize, c: usize) -> Array2<f64> {
        self.view(s, t).index_axis(ndarray::Axis(2), c).to_owned()
    }

    /// Applies `f` to every view, keeping the grid.
    pub fn map_views<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, &Array3<f64>) -> Array3<f64>,
    {
        let t_len = self.angular.1;
        let views = self
            .views
            .iter()
            .enumerate()
            .map(|(k, v)| f(k / t_len, k % t_len, v))
            .collect();
        Self::new(self.angular, views)
    }

    /// The field as it reads back after an 8-bit write.
    pub fn quantized_8bit(&self) -> Self {
        let views = self
            .views
            .iter()
            .map(|v| v.mapv(|c| (c * 255.0).round() / 255.0))
            .collect();
        Self {
            angular: self.angular,
            spatial: self.spatial,
            views,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<f64>,
    pub scene: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestDoc {
    version: u32,
    entries: Vec<ManifestEntry>,
}

/// Reads and validates a manifest. Relative entry paths are resolved against
/// the manifest's own directory.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ManifestDoc = serde_json::from_str(&text).map_err(|e| Error::ManifestParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if doc.version != MANIFEST_VERSION {
        return Err(Error::ManifestParse {
            path: path.to_path_buf(),
            message: format!(
                "unsupported version {}, expected {MANIFEST_VERSION}",
                doc.version
            ),
        });
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(doc.entries.len());
    for mut e in doc.entries {
        if e.id.is_empty() {
            return Err(Error::ManifestEntry {
                id: e.id,
                message: "empty id".into(),
            });
        }
        if !seen.insert(e.id.clone()) {
            return Err(Error::DuplicateId(e.id));
        }
        if e.scene.trim().is_empty() {
            return Err(Error::ManifestEntry {
                id: e.id,
                message: "scene must be non-empty".into(),
            });
        }
        if let Some(l) = e.label {
            if !l.is_finite() {
                return Err(Error::ManifestEntry {
                    id: e.id,
                    message: "label must be finite".into(),
                });
            }
        }
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
        if !e.path.is_dir() {
            return Err(Error::ManifestEntry {
                message: format!("directory {} does not exist", e.path.display()),
                id: e.id,
            });
        }
        entries.push(e);
    }
    Ok(DatasetManifest { entries })
}

/// Writes a version-1 manifest. Paths are written as given.
pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let doc = ManifestDoc {
        version: MANIFEST_VERSION,
        entries: manifest.entries.clone(),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::ManifestParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parses `v_<s>_<t>.<ext>` into 1-based `(s, t)`.
fn parse_view_name(name: &str) -> Option<(usize, usize)> {
    let stem = name.strip_prefix("v_")?;
    let (stem, ext) = stem.rsplit_once('.')?;
    if ext.is_empty() {
        return None;
    }
    let (s, t) = stem.split_once('_')?;
    let s: usize = s.parse().ok()?;
    let t: usize = t.parse().ok()?;
    (s >= 1 && t >= 1).then_some((s, t))
}

fn decode_view(path: &Path) -> Result<Array3<f64>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = Array3::<f64>::zeros((h, w, 3));
    match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => {
            let buf = img.to_rgb16();
            for (y, x, p) in buf.enumerate_pixels() {
                for c in 0..3 {
                    out[[x as usize, y as usize, c]] = f64::from(p[c]) / 65535.0;
                }
            }
        }
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => {
            let buf = img.to_rgb32f();
            for (y, x, p) in buf.enumerate_pixels() {
                for c in 0..3 {
                    out[[x as usize, y as usize, c]] = f64::from(p[c]).clamp(0.0, 1.0);
                }
            }
        }
        _ => {
            let buf = img.to_rgb8();
            for (y, x, p) in buf.enumerate_pixels() {
                for c in 0..3 {
                    out[[x as usize, y as usize, c]] = f64::from(p[c]) / 255.0;
                }
            }
        }
    }
    Ok(out)
}

/// Loads the light field described by `entry`.
///
/// The angular grid is inferred from the largest indices present unless
/// `expected_grid` is given. The result does not depend on directory listing
/// order.
pub fn load_lightfield(
    entry: &ManifestEntry,
    expected_grid: Option<(usize, usize)>,
) -> Result<LightField> {
    let dir = &entry.path;
    let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: BTreeMap<(usize, usize), PathBuf> = BTreeMap::new();
    for item in listing {
        let item = item.map_err(|e| Error::io(dir, e))?;
        let name = item.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(st) = parse_view_name(name) {
            if let Some(prev) = files.insert(st, item.path()) {
                return Err(Error::LightField {
                    id: entry.id.clone(),
                    message: format!(
                        "view ({},{}) present twice: {} and {}",
                        st.0,
                        st.1,
                        prev.display(),
                        item.path().display()
                    ),
                });
            }
        }
    }
    let (s_len, t_len) = match expected_grid {
        Some(g) => g,
        None => {
            if files.is_empty() {
                return Err(Error::LightField {
                    id: entry.id.clone(),
                    message: format!("no v_<s>_<t> views in {}", dir.display()),
                });
            }
            let s = files.keys().map(|k| k.0).max().unwrap_or(0);
            let t = files.keys().map(|k| k.1).max().unwrap_or(0);
            (s, t)
        }
    };
    if let Some(&(s, t)) = files.keys().find(|&&(s, t)| s > s_len || t > t_len) {
        return Err(Error::LightField {
            id: entry.id.clone(),
            message: format!("view ({s},{t}) lies outside the {s_len}x{t_len} grid"),
        });
    }
    let mut views = Vec::with_capacity(s_len * t_len);
    let mut spatial: Option<(usize, usize)> = None;
    for s in 1..=s_len {
        for t in 1..=t_len {
            let path = files.get(&(s, t)).ok_or_else(|| Error::MissingView {
                id: entry.id.clone(),
                s,
                t,
            })?;
            let v = decode_view(path)?;
            let dim = (v.dim().0, v.dim().1);
            match spatial {
                None => spatial = Some(dim),
                Some(d) if d != dim => {
                    return Err(Error::LightField {
                        id: entry.id.clone(),
                        message: format!(
                            "view ({s},{t}) is {}x{}, expected {}x{}",
                            dim.0, dim.1, d.0, d.1
                        ),
                    })
                }
                _ => {}
            }
            views.push(v);
        }
    }
    LightField::new((s_len, t_len), views)
}

/// Writes every view as an 8-bit RGB PNG in the canonical layout.
pub fn write_lightfield(lf: &LightField, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (s_len, t_len) = lf.angular_size();
    let (x_len, y_len) = lf.spatial_size();
    for s in 0..s_len {
        for t in 0..t_len {
            let v = lf.view(s, t);
            let img =
                ImageBuffer::<Rgb<u8>, Vec<u8>>::from_fn(y_len as u32, x_len as u32, |y, x| {
                    let px = |c: usize| (v[[x as usize, y as usize, c]] * 255.0).round() as u8;
                    Rgb([px(0), px(1), px(2)])
                });
            let path = dir.join(format!("v_{}_{}.png", s + 1, t + 1));
            img.save(&path).map_err(|e| Error::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
    }
    Ok(())
}
