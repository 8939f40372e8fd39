//! Feature tables on disk.
//!
//! The pooled table is a CSV with header `id,scene,label,f001..f059`; an
//! empty label cell means "unlabelled". Per-orientation vectors go to a
//! second CSV with header `id,scene,label,orientation,stacks,f001..f059`,
//! where an orientation without usable stacks has empty feature cells. A
//! JSON sidecar names every feature column.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::Dataset;
use crate::error::{Error, Result};
use crate::pcsc::{self, PCSC_LEN};
use crate::tavi::{self, TAVI_LEN};
use crate::viewstack::Orientation;

pub const FEATURE_LEN: usize = PCSC_LEN + TAVI_LEN;
pub const SIDECAR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Pcsc,
    Tavi,
}

impl std::str::FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcsc" => Ok(Self::Pcsc),
            "tavi" => Ok(Self::Tavi),
            _ => Err(Error::InvalidArgument(format!(
                "unknown feature group {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelTag {
    L,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    /// Statistics over all three channels jointly.
    #[serde(rename = "joint")]
    Joint,
}

impl ChannelTag {
    pub const LAB: [ChannelTag; 3] = [ChannelTag::L, ChannelTag::A, ChannelTag::B];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelTag::L => "L",
            ChannelTag::A => "a",
            ChannelTag::B => "b",
            ChannelTag::Joint => "joint",
        }
    }
}

impl std::str::FromStr for ChannelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Self::L),
            "a" | "A" => Ok(Self::A),
            "b" | "B" => Ok(Self::B),
            _ => Err(Error::InvalidArgument(format!(
                "unknown channel {s:?} (expected L, a or b)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    /// CSV header, `f001` … `f059`.
    pub column: String,
    pub name: String,
    pub group: FeatureGroup,
    pub channel: ChannelTag,
}

pub fn column_code(k: usize) -> String {
    format!("f{:03}", k + 1)
}

/// The fixed 59-column layout: PCSC then TAVI.
pub fn feature_columns() -> Vec<ColumnInfo> {
    let mut out = Vec::with_capacity(FEATURE_LEN);
    let mut push = |name: String, group, channel| {
        out.push(ColumnInfo {
            column: column_code(out.len()),
            name,
            group,
            channel,
        })
    };
    for ch in ChannelTag::LAB {
        for n in pcsc::CHANNEL_FEATURE_NAMES {
            push(format!("{}_{n}", ch.as_str()), FeatureGroup::Pcsc, ch);
        }
    }
    for n in pcsc::JOINT_FEATURE_NAMES {
        push(n.to_string(), FeatureGroup::Pcsc, ChannelTag::Joint);
    }
    for ch in ChannelTag::LAB {
        for n in tavi::CHANNEL_FEATURE_NAMES {
            push(format!("{}_{n}", ch.as_str()), FeatureGroup::Tavi, ch);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: u32,
    /// Orientation weights used for the pooled table (0°, 45°, 90°, 135°).
    pub weights: [f64; 4],
    pub min_stack_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_file: Option<String>,
    pub columns: Vec<ColumnInfo>,
}

impl Sidecar {
    pub fn write(&self, path: &Path) -> Result<()> {
        let s =
            serde_json::to_string_pretty(self).map_err(|e| Error::FeatureTable(e.to_string()))?;
        std::fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sc: Self = serde_json::from_str(&s)
            .map_err(|e| Error::FeatureTable(format!("{}: {e}", path.display())))?;
        if sc.version != SIDECAR_VERSION {
            return Err(Error::FeatureTable(format!(
                "unsupported sidecar version {}",
                sc.version
            )));
        }
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub scene: String,
    pub label: Option<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    /// Feature column headers, e.g. `f001`.
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::FeatureTable(format!("{}: {e}", path.display()))
}

fn fmt_label(l: Option<f64>) -> String {
    l.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_f64(path: &Path, row: usize, col: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| {
        csv_err(
            path,
            format!("row {row}, column {col}: not a number: {s:?}"),
        )
    })
}

impl FeatureTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["id".to_string(), "scene".into(), "label".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for r in &self.rows {
            let mut rec = vec![r.id.clone(), r.scene.clone(), fmt_label(r.label)];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let header: Vec<String> = rd
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(String::from)
            .collect();
        if header.len() < 4 || header[..3] != ["id", "scene", "label"] {
            return Err(csv_err(
                path,
                "header must start with id,scene,label and name at least one feature",
            ));
        }
        let columns = header[3..].to_vec();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            if rec.len() != header.len() {
                return Err(csv_err(
                    path,
                    format!(
                        "row {} has {} fields, expected {}",
                        i + 1,
                        rec.len(),
                        header.len()
                    ),
                ));
            }
            let label = match rec[2].trim() {
                "" => None,
                s => Some(parse_f64(path, i + 1, "label", s)?),
            };
            let values = (3..rec.len())
                .map(|k| parse_f64(path, i + 1, &header[k], &rec[k]))
                .collect::<Result<Vec<_>>>()?;
            rows.push(FeatureRow {
                id: rec[0].to_string(),
                scene: rec[1].to_string(),
                label,
                values,
            });
        }
        Ok(Self { columns, rows })
    }

    /// Keeps the listed columns, in table order.
    pub fn select(&self, keep: &[String]) -> Result<Self> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|c| {
                self.columns
                    .iter()
                    .position(|x| x == c)
                    .ok_or_else(|| Error::FeatureTable(format!("no column {c}")))
            })
            .collect::<Result<_>>()?;
        let mut idx = idx;
        idx.sort_unstable();
        idx.dedup();
        Ok(Self {
            columns: idx.iter().map(|&k| self.columns[k].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: idx.iter().map(|&k| r.values[k]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    /// Training/evaluation view; every row must carry a label.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut labels = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            labels.push(
                r.label
                    .ok_or_else(|| Error::FeatureTable(format!("row {:?} has no label", r.id)))?,
            );
        }
        Ok(Dataset {
            ids: self.rows.iter().map(|r| r.id.clone()).collect(),
            scenes: self.rows.iter().map(|r| r.scene.clone()).collect(),
            labels,
            features: self.rows.iter().map(|r| r.values.clone()).collect(),
        })
    }
}

/// Column headers matching a channel/group selection. Joint columns need all
/// three channels.
pub fn select_columns(
    columns: &[ColumnInfo],
    channels: &[ChannelTag],
    groups: &[FeatureGroup],
) -> Vec<String> {
    let all_lab = ChannelTag::LAB.iter().all(|c| channels.contains(c));
    columns
        .iter()
        .filter(|c| groups.contains(&c.group))
        .filter(|c| match c.channel {
            ChannelTag::Joint => all_lab,
            ch => channels.contains(&ch),
        })
        .map(|c| c.column.clone())
        .collect()
}

/// One row of the per-orientation CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationRow {
    pub id: String,
    pub scene: String,
    pub label: Option<f64>,
    pub orientation: Orientation,
    pub stacks: usize,
    pub values: Option<Vec<f64>>,
}

pub fn write_orientation_csv(
    path: &Path,
    columns: &[String],
    rows: &[OrientationRow],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<String> = ["id", "scene", "label", "orientation", "stacks"]
        .map(String::from)
        .to_vec();
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.id.clone(),
            r.scene.clone(),
            fmt_label(r.label),
            r.orientation.degrees().to_string(),
            r.stacks.to_string(),
        ];
        match &r.values {
            Some(v) => rec.extend(v.iter().map(|x| x.to_string())),
            None => rec.extend(std::iter::repeat_n(String::new(), columns.len())),
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
