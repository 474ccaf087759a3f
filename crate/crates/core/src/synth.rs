//! Seeded synthetic scenes: random labeled 3D segments, random camera poses
//! and the labeled image lines they produce, with ground-truth bookkeeping.
//!
//! Planted ambiguity: for a few matched query lines the generator adds a
//! large group of same-label map lines that are all consistent with one wrong
//! rotation, so plain inlier counting prefers that rotation.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rodrigues, rotation_error, Intrinsics, Label, Line3D, Mat3, PixelLine, Pose, Vec2, Vec3};
use crate::io::{DictEntry, GroundTruth, LineMap, PoseRecord, Query};
use crate::translation::clip_segment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_map_lines: usize,
    pub dictionary_size: usize,
    /// Label probabilities; uniform when absent.
    pub label_weights: Option<Vec<f64>>,
    pub n_query_lines: usize,
    pub n_queries: usize,
    /// Standard deviation (radians) of the rotation applied to each image
    /// line's normal.
    pub noise_rad: f64,
    /// Fraction of query lines that are projections of map lines.
    pub match_fraction: f64,
    pub scene_box: [[f64; 3]; 2],
    /// Fraction of the box (per axis, centered) where cameras are placed.
    pub camera_region: f64,
    pub line_length: [f64; 2],
    pub image_width: u32,
    pub image_height: u32,
    pub focal: f64,
    pub min_depth: f64,
    /// Shortest visible projected segment (pixels) usable as a true match.
    pub min_pixel_length: f64,
    pub planted_clusters: usize,
    pub cluster_size: usize,
    /// Smallest angle (degrees) between the true and the decoy rotation.
    pub decoy_min_angle_deg: f64,
    pub max_pose_attempts: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            seed: 0,
            n_map_lines: 120,
            dictionary_size: 8,
            label_weights: None,
            n_query_lines: 15,
            n_queries: 1,
            noise_rad: 0.0,
            match_fraction: 1.0,
            scene_box: [[-5.0, -5.0, -1.5], [5.0, 5.0, 1.5]],
            camera_region: 0.5,
            line_length: [0.5, 2.5],
            image_width: 640,
            image_height: 480,
            focal: 500.0,
            min_depth: 0.3,
            min_pixel_length: 30.0,
            planted_clusters: 0,
            cluster_size: 0,
            decoy_min_angle_deg: 30.0,
            max_pose_attempts: 10_000,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_query_lines == 0 || self.n_queries == 0 {
            return Err(Error::invalid("scene needs at least one query with one line"));
        }
        if self.dictionary_size == 0 || self.n_map_lines == 0 {
            return Err(Error::invalid("scene needs map lines and labels"));
        }
        if let Some(w) = &self.label_weights {
            let s: f64 = w.iter().sum();
            if w.len() != self.dictionary_size || w.iter().any(|x| !(*x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("label weights must be nonnegative, one per label, summing to 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.match_fraction) || !(self.noise_rad >= 0.0) {
            return Err(Error::invalid("match fraction must be in [0, 1] and noise nonnegative"));
        }
        let [lo, hi] = self.scene_box;
        if (0..3).any(|i| !(lo[i] < hi[i])) {
            return Err(Error::invalid("scene box must have positive extent"));
        }
        if !(0.0 < self.line_length[0] && self.line_length[0] <= self.line_length[1]) {
            return Err(Error::invalid("line length range must be positive"));
        }
        if !(0.0..=1.0).contains(&self.camera_region) || !(self.focal > 0.0) || !(self.min_depth > 0.0) {
            return Err(Error::invalid("camera region, focal length and min depth out of range"));
        }
        if self.planted_clusters > self.matched_lines() {
            return Err(Error::invalid("planted clusters need as many matched query lines"));
        }
        Ok(())
    }

    pub fn matched_lines(&self) -> usize {
        (self.match_fraction * self.n_query_lines as f64).round() as usize
    }

    pub fn intrinsics(&self) -> Result<Intrinsics> {
        Intrinsics::pinhole(
            self.focal,
            self.focal,
            self.image_width as f64 / 2.0,
            self.image_height as f64 / 2.0,
            self.image_width,
            self.image_height,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQuery {
    pub query: Query,
    pub pose: Pose,
    /// True map index per query line, `None` for lines with no counterpart.
    pub true_matches: Vec<Option<usize>>,
    /// The rotation favored by the planted clusters, if any.
    pub decoy: Option<Mat3>,
}

impl SyntheticQuery {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            pose: PoseRecord::from_pose(&self.pose),
            matches: self.true_matches.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub map: LineMap,
    pub queries: Vec<SyntheticQuery>,
}

/// A camera pose together with the map lines it sees and their clipped
/// pixel segments.
struct View {
    pose: Pose,
    visible: Vec<(usize, Vec2, Vec2)>,
}

pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    Pose::from_quaternion(q, Vec3::zeros())
        .map(|p| *p.rotation())
        .unwrap_or_else(|_| Mat3::identity())
}

fn unit(rng: &mut impl Rng) -> Vec3 {
    Vec3::from(UnitSphere.sample(rng))
}

fn any_orthonormal(w: &Vec3) -> (Vec3, Vec3) {
    let a = if w.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = w.cross(&a).normalize();
    (e1, w.cross(&e1))
}

/// The pixel segment of `line` seen from `pose`, clipped to depth
/// `min_depth` and to the image.
pub fn visible_segment(pose: &Pose, line: &Line3D, k: &Intrinsics, min_depth: f64) -> Option<(Vec2, Vec2)> {
    let [a, b] = line.endpoints().map(|e| pose.world_to_camera(&e));
    if a.z < min_depth && b.z < min_depth {
        return None;
    }
    let clip = |p: Vec3, q: Vec3| if p.z >= min_depth { p } else { p + (q - p) * ((min_depth - p.z) / (q.z - p.z)) };
    let (a, b) = (clip(a, b), clip(b, a));
    clip_segment(k.project(&a), k.project(&b), k.width() as f64, k.height() as f64)
}

/// Pixel line through the image of a plane normal `n` (normalized frame),
/// with endpoints `a`, `b` moved onto it.
fn pixel_line(n: &Vec3, a: Vec2, b: Vec2, k: &Intrinsics, label: Label) -> Result<PixelLine> {
    let c = k.k_inv().transpose() * n;
    let c = c / c.xy().norm();
    let onto = |p: Vec2| p - c.xy() * (c.x * p.x + c.y * p.y + c.z);
    let (a, b) = (onto(a), onto(b));
    let line = PixelLine {
        coeffs: [c.x, c.y, c.z],
        endpoints: [[a.x, a.y], [b.x, b.y]],
        label,
    };
    line.validate()?;
    Ok(line)
}

fn sample_label(rng: &mut impl Rng, weights: &Option<WeightedIndex<f64>>, d: usize) -> Label {
    match weights {
        Some(w) => w.sample(rng) as Label,
        None => rng.random_range(0..d) as Label,
    }
}

fn sample_view(rng: &mut impl Rng, spec: &SceneSpec, lines: &[Line3D], k: &Intrinsics) -> Result<View> {
    let [lo, hi] = spec.scene_box;
    let needed = spec.matched_lines();
    for _ in 0..spec.max_pose_attempts.max(1) {
        let c = Vec3::from_fn(|i, _| {
            let mid = 0.5 * (lo[i] + hi[i]);
            let half = 0.5 * (hi[i] - lo[i]) * spec.camera_region;
            if half > 0.0 {
                rng.random_range(mid - half..=mid + half)
            } else {
                mid
            }
        });
        let pose = Pose::new(random_rotation(rng), c)?;
        let visible: Vec<_> = lines
            .iter()
            .enumerate()
            .filter_map(|(i, l)| {
                let (a, b) = visible_segment(&pose, l, k, spec.min_depth)?;
                ((b - a).norm() >= spec.min_pixel_length).then_some((i, a, b))
            })
            .collect();
        if visible.len() >= needed {
            return Ok(View { pose, visible });
        }
    }
    Err(Error::invalid(format!(
        "no camera pose sees {needed} map lines after {} attempts",
        spec.max_pose_attempts
    )))
}

fn random_segment(rng: &mut impl Rng, spec: &SceneSpec, label: Label) -> Result<Line3D> {
    let [lo, hi] = spec.scene_box;
    let mid = Vec3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i]));
    let dir = unit(rng);
    segment_along(rng, spec, mid, dir, label)
}

fn segment_along(rng: &mut impl Rng, spec: &SceneSpec, mid: Vec3, dir: Vec3, label: Label) -> Result<Line3D> {
    let [l0, l1] = spec.line_length;
    let len = if l1 > l0 { rng.random_range(l0..=l1) } else { l0 };
    Line3D::from_endpoints(mid - dir * (len / 2.0), mid + dir * (len / 2.0), label)
}

/// Rotation applied to an image normal to model detection noise.
fn perturb(rng: &mut impl Rng, n: &Vec3, sigma: f64) -> Vec3 {
    if sigma == 0.0 {
        return *n;
    }
    let (e1, e2) = any_orthonormal(n);
    let beta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let axis = e1 * beta.cos() + e2 * beta.sin();
    let angle: f64 = Normal::new(0.0, sigma).map(|d| d.sample(rng)).unwrap_or(0.0);
    rodrigues(&axis, angle) * n
}

/// Generates a scene; the same spec always produces the same scene.
pub fn synth_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.intrinsics()?;
    let weights = match &spec.label_weights {
        Some(w) => Some(WeightedIndex::new(w.iter().copied()).map_err(|e| Error::invalid(e.to_string()))?),
        None => None,
    };
    let mut lines = Vec::with_capacity(spec.n_map_lines);
    for _ in 0..spec.n_map_lines {
        let label = sample_label(&mut rng, &weights, spec.dictionary_size);
        lines.push(random_segment(&mut rng, spec, label)?);
    }
    let mut dictionary: Vec<DictEntry> = (0..spec.dictionary_size)
        .map(|i| DictEntry {
            id: i as Label,
            word: format!("class{i}"),
        })
        .collect();

    let mut views = Vec::with_capacity(spec.n_queries);
    for _ in 0..spec.n_queries {
        views.push(sample_view(&mut rng, spec, &lines, &k)?);
    }

    let needed = spec.matched_lines();
    let mut queries = Vec::with_capacity(spec.n_queries);
    for mut view in views {
        view.visible.shuffle(&mut rng);
        view.visible.truncate(needed);
        let mut pixel = Vec::with_capacity(spec.n_query_lines);
        let mut matches = Vec::with_capacity(spec.n_query_lines);
        let mut normals = Vec::with_capacity(needed);
        for &(i, a, b) in &view.visible {
            let n = crate::geometry::project_line_normal(&view.pose, &lines[i])
                .ok_or_else(|| Error::invalid("map line passes through the camera center"))?;
            normals.push(n);
            let noisy = perturb(&mut rng, &n, spec.noise_rad);
            pixel.push(pixel_line(&noisy, a, b, &k, lines[i].label())?);
            matches.push(Some(i));
        }
        while pixel.len() < spec.n_query_lines {
            let (w, h) = (spec.image_width as f64, spec.image_height as f64);
            let a = Vec2::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
            let b = Vec2::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
            if (b - a).norm() < spec.min_pixel_length {
                continue;
            }
            let label = sample_label(&mut rng, &weights, spec.dictionary_size);
            pixel.push(PixelLine::from_endpoints(a, b, label)?);
            matches.push(None);
        }

        let decoy = if spec.planted_clusters > 0 {
            let r_true = *view.pose.rotation();
            let decoy = loop {
                let r = random_rotation(&mut rng);
                if rotation_error(&r, &r_true) >= spec.decoy_min_angle_deg {
                    break r;
                }
            };
            for (q, n) in normals.iter().enumerate().take(spec.planted_clusters) {
                let label = dictionary.len() as Label;
                dictionary.push(DictEntry {
                    id: label,
                    word: format!("planted{}", label as usize - spec.dictionary_size),
                });
                let original = matches[q].expect("planted lines are matched");
                let copy = lines[original].with_label(label);
                matches[q] = Some(lines.len());
                lines.push(copy);
                pixel[q].label = label;
                // every direction orthogonal to the decoy's world normal fits
                let (e1, e2) = any_orthonormal(&(decoy * n));
                let [lo, hi] = spec.scene_box;
                for _ in 0..spec.cluster_size {
                    let beta: f64 = rng.random_range(0.0..std::f64::consts::PI);
                    let dir = e1 * beta.cos() + e2 * beta.sin();
                    let mid = Vec3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i]));
                    lines.push(segment_along(&mut rng, spec, mid, dir, label)?);
                }
            }
            Some(decoy)
        } else {
            None
        };

        queries.push(SyntheticQuery {
            query: Query {
                intrinsics: k.clone(),
                lines: pixel,
                prior: None,
                submap: None,
            },
            pose: view.pose,
            true_matches: matches,
            decoy,
        });
    }

    Ok(SyntheticScene {
        map: LineMap { dictionary, lines },
        queries,
    })
}
