//! JSON file formats: line maps, queries, results, ground truth, label remaps
//! and frame manifests.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Label, Line3D, Mat3, PixelLine, Pose, Vec3};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictEntry {
    pub id: Label,
    pub word: String,
}

/// A semantic 3D line map.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMap {
    pub dictionary: Vec<DictEntry>,
    pub lines: Vec<Line3D>,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    version: u32,
    dictionary: Vec<DictEntry>,
    lines: Vec<MapLineRecord>,
}

#[derive(Serialize, Deserialize)]
struct MapLineRecord {
    endpoints: [[f64; 3]; 2],
    label: Label,
}

impl LineMap {
    pub fn to_json(&self) -> Result<String> {
        let file = MapFile {
            version: MAP_FORMAT_VERSION,
            dictionary: self.dictionary.clone(),
            lines: self
                .lines
                .iter()
                .map(|l| MapLineRecord {
                    endpoints: l.endpoints().map(|e| [e.x, e.y, e.z]),
                    label: l.label(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(s)?;
        if file.version != MAP_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported line map version {} (expected {MAP_FORMAT_VERSION})",
                file.version
            )));
        }
        let lines = file
            .lines
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Line3D::from_endpoints(Vec3::from(r.endpoints[0]), Vec3::from(r.endpoints[1]), r.label)
                    .map_err(|e| Error::invalid(format!("map line {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LineMap {
            dictionary: file.dictionary,
            lines,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Axis-aligned bounding box of all endpoints, or `None` for an empty map.
    pub fn bounding_box(&self) -> Option<[Vec3; 2]> {
        let mut it = self.lines.iter().flat_map(|l| l.endpoints().iter());
        let first = *it.next()?;
        Some(it.fold([first, first], |[lo, hi], p| [lo.inf(p), hi.sup(p)]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsRecord {
    /// Row-major camera matrix.
    pub k: [f64; 9],
    pub width: u32,
    pub height: u32,
}

impl IntrinsicsRecord {
    pub fn from_intrinsics(k: &Intrinsics) -> Self {
        let m = k.k();
        let mut a = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                a[3 * r + c] = m[(r, c)];
            }
        }
        IntrinsicsRecord {
            k: a,
            width: k.width(),
            height: k.height(),
        }
    }

    pub fn to_intrinsics(&self) -> Result<Intrinsics> {
        Intrinsics::new(Mat3::from_row_slice(&self.k), self.width, self.height)
    }
}

/// Retrieval prior: an approximate rotation axis and the side of the grid
/// cell to search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prior {
    pub alpha: f64,
    pub phi: f64,
    pub side_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryLineRecord {
    pub coeffs: [f64; 3],
    pub endpoints_px: [[f64; 2]; 2],
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryFile {
    intrinsics: IntrinsicsRecord,
    lines: Vec<QueryLineRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<Prior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    submap: Option<Vec<usize>>,
}

/// A query image: intrinsics, labeled 2D lines and optional retrieval data.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub intrinsics: Intrinsics,
    pub lines: Vec<PixelLine>,
    pub prior: Option<Prior>,
    /// Map line indices observed by retrieved images; when present, only
    /// these lines are considered.
    pub submap: Option<Vec<usize>>,
}

impl Query {
    pub fn to_json(&self) -> Result<String> {
        let f = QueryFile {
            intrinsics: IntrinsicsRecord::from_intrinsics(&self.intrinsics),
            lines: self
                .lines
                .iter()
                .map(|l| QueryLineRecord {
                    coeffs: l.coeffs,
                    endpoints_px: l.endpoints,
                    label: l.label,
                })
                .collect(),
            prior: self.prior,
            submap: self.submap.clone(),
        };
        Ok(serde_json::to_string_pretty(&f)?)
    }

    /// Parses a query. Line records are kept as given; invalid lines are
    /// reported by the pipeline, not here.
    pub fn from_json(s: &str) -> Result<Self> {
        let f: QueryFile = serde_json::from_str(s)?;
        Ok(Query {
            intrinsics: f.intrinsics.to_intrinsics()?,
            lines: f
                .lines
                .into_iter()
                .map(|r| PixelLine {
                    coeffs: r.coeffs,
                    endpoints: r.endpoints_px,
                    label: r.label,
                })
                .collect(),
            prior: f.prior,
            submap: f.submap,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// A pose as stored on disk: `(w, x, y, z)` quaternion plus translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn from_pose(p: &Pose) -> Self {
        let t = p.translation();
        PoseRecord {
            rotation: p.quaternion(),
            translation: [t.x, t.y, t.z],
        }
    }

    pub fn to_pose(&self) -> Result<Pose> {
        Pose::from_quaternion(self.rotation, Vec3::from(self.translation))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub associate: f64,
    pub rotation: f64,
    pub translation: f64,
    pub total: f64,
}

/// Output of `solve` for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// `(w, x, y, z)`; absent when relocalization failed.
    pub rotation: Option<[f64; 4]>,
    pub translation: Option<[f64; 3]>,
    pub value_r: f64,
    pub value_t: f64,
    /// Inlier associations as `(query line, map line)` pairs.
    pub inliers: Vec<(usize, usize)>,
    pub certified: bool,
    pub timings_ms: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ResultRecord {
    pub fn pose(&self) -> Option<Result<Pose>> {
        match (self.rotation, self.translation) {
            (Some(q), Some(t)) => Some(Pose::from_quaternion(q, Vec3::from(t))),
            _ => None,
        }
    }
}

/// Ground truth for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub pose: PoseRecord,
    /// Map index of each query line's true match, if it has one.
    #[serde(default)]
    pub matches: Vec<Option<usize>>,
}

/// Reads a JSON array or a single JSON value of `T`.
pub fn read_list<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let s = fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&s)?;
    Ok(match v {
        serde_json::Value::Array(_) => serde_json::from_value(v)?,
        other => vec![serde_json::from_value(other)?],
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Label merge table; labels absent from the table map to themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelRemap(pub BTreeMap<Label, Label>);

impl LabelRemap {
    /// Follows chains (`a -> b`, `b -> c` becomes `a -> c`) so that applying
    /// the table twice equals applying it once; cycles are rejected.
    pub fn new(table: BTreeMap<Label, Label>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (&k, &v) in &table {
            let mut target = v;
            let mut steps = 0;
            while let Some(&next) = table.get(&target) {
                if next == target {
                    break;
                }
                steps += 1;
                if steps > table.len() {
                    return Err(Error::invalid(format!("label remap has a cycle through {k}")));
                }
                target = next;
            }
            out.insert(k, target);
        }
        Ok(LabelRemap(out))
    }

    pub fn apply(&self, l: Label) -> Label {
        self.0.get(&l).copied().unwrap_or(l)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)?;
        // JSON object keys are strings
        let raw: BTreeMap<String, Label> = serde_json::from_str(&s)?;
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let k: Label = k
                .parse()
                .map_err(|_| Error::invalid(format!("remap key `{k}` is not a label id")))?;
            out.insert(k, v);
        }
        Self::new(out)
    }
}

/// One posed RGB-D frame in a map-building manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub pose: PoseRecord,
    pub intrinsics: IntrinsicsRecord,
    /// 16-bit PNG depth raster, relative to the manifest.
    pub depth: String,
    /// Meters per depth unit.
    #[serde(default = "default_depth_scale")]
    pub depth_scale: f64,
    pub segments: Vec<QueryLineRecord>,
}

fn default_depth_scale() -> f64 {
    0.001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameManifest {
    #[serde(default)]
    pub dictionary: Vec<DictEntry>,
    pub frames: Vec<FrameRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_round_trip() {
        let m = LineMap {
            dictionary: vec![DictEntry {
                id: 3,
                word: "door".into(),
            }],
            lines: vec![
                Line3D::from_endpoints(Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.0 / 3.0, -2.0, 5.5), 3).unwrap(),
                Line3D::from_endpoints(Vec3::new(-1e-7, 4.0, 2.0), Vec3::new(1.0, 4.0, 2.0), 0).unwrap(),
            ],
        };
        let back = LineMap::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn map_version_checked() {
        let s = r#"{"version": 9, "dictionary": [], "lines": []}"#;
        assert!(LineMap::from_json(s).is_err());
    }

    #[test]
    fn query_round_trip() {
        let k = Intrinsics::pinhole(500.0, 510.0, 320.5, 239.5, 640, 480).unwrap();
        let q = Query {
            intrinsics: k,
            lines: vec![PixelLine::from_endpoints([1.0, 2.0].into(), [300.25, 400.125].into(), 4).unwrap()],
            prior: Some(Prior {
                alpha: 0.1,
                phi: 0.2,
                side_length: std::f64::consts::PI,
            }),
            submap: Some(vec![0, 5, 7]),
        };
        assert_eq!(Query::from_json(&q.to_json().unwrap()).unwrap(), q);
    }

    #[test]
    fn pose_record_round_trip() {
        let p = Pose::from_quaternion([0.3, -0.5, 0.1, 0.8], Vec3::new(1.5, -2.0, 0.25)).unwrap();
        let r = PoseRecord::from_pose(&p);
        let s = serde_json::to_string(&r).unwrap();
        let back: PoseRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!((back.to_pose().unwrap().rotation() - p.rotation()).abs().max() < 1e-12);
    }

    #[test]
    fn remap_parses_string_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("remap.json");
        fs::write(&p, r#"{"4": 2, "7": 2}"#).unwrap();
        let r = LabelRemap::load(&p).unwrap();
        assert_eq!(r.apply(4), 2);
        assert_eq!(r.apply(2), 2);
        assert_eq!(r.apply(9), 9);
    }

    #[test]
    fn remap_chains_resolve_and_cycles_fail() {
        let r = LabelRemap::new(BTreeMap::from([(1, 2), (2, 3), (5, 5)])).unwrap();
        for l in 0..8 {
            assert_eq!(r.apply(r.apply(l)), r.apply(l));
        }
        assert_eq!(r.apply(1), 3);
        assert!(LabelRemap::new(BTreeMap::from([(1, 2), (2, 1)])).is_err());
    }
}
