//! Line map construction from posed RGB-D frames with labeled 2D segments:
//! depth back-projection under perturbed hypotheses, robust 3D line fitting
//! and greedy graph clustering of duplicate lines.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Label, Line3D, Mat3, PixelLine, Pose, Vec2, Vec3};
use crate::io::{FrameManifest, FrameRecord, LineMap};
use crate::translation::clip_segment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapBuilderConfig {
    /// Depth samples per segment.
    pub n_samples: usize,
    /// Perpendicular endpoint offsets (pixels) tried per endpoint.
    pub perturbations_px: Vec<f64>,
    /// Score penalty per pixel of perturbation (meters per pixel).
    pub lambda: f64,
    /// Largest accepted RMS distance of samples to the fitted line (meters).
    pub rms_max: f64,
    /// Parallelism threshold (degrees).
    pub delta_r_deg: f64,
    /// Proximity threshold (meters).
    pub delta_t: f64,
    /// Smallest vertex degree that registers a cluster.
    pub delta_d: usize,
}

impl Default for MapBuilderConfig {
    fn default() -> Self {
        MapBuilderConfig {
            n_samples: 32,
            perturbations_px: vec![0.0, -1.0, 1.0, -2.0, 2.0],
            lambda: 0.02,
            rms_max: 0.02,
            delta_r_deg: 5.0,
            delta_t: 0.05,
            delta_d: 3,
        }
    }
}

impl MapBuilderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::Config("map_builder.n_samples must be at least 2".into()));
        }
        if !self.perturbations_px.contains(&0.0) {
            return Err(Error::Config("map_builder.perturbations_px must include 0".into()));
        }
        if !(self.delta_r_deg > 0.0 && self.delta_t > 0.0 && self.rms_max > 0.0 && self.lambda >= 0.0) {
            return Err(Error::Config("map_builder thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Dense depth raster in meters; zero means missing.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::invalid("depth raster size does not match its dimensions"));
        }
        Ok(DepthMap { width, height, data })
    }

    /// Fills a raster from a per-pixel function.
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f64) -> Self {
        let data = (0..height).flat_map(|v| (0..width).map(move |u| (u, v))).map(|(u, v)| f(u, v)).collect();
        DepthMap { width, height, data }
    }

    /// Reads a 16-bit (or 8-bit) grayscale PNG scaled by `scale` meters/unit.
    pub fn load_png(path: &Path, scale: f64) -> Result<Self> {
        let img = image::open(path)?.into_luma16();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|d| d as f64 * scale).collect();
        Self::new(w, h, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Depth at the pixel nearest to `p`, if inside and valid.
    pub fn at(&self, p: &Vec2) -> Option<f64> {
        let (u, v) = (p.x.round(), p.y.round());
        if !(u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64) {
            return None;
        }
        let d = self.data[v as usize * self.width as usize + u as usize];
        (d > 0.0 && d.is_finite()).then_some(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameInput {
    pub pose: Pose,
    pub intrinsics: Intrinsics,
    pub depth: DepthMap,
    pub segments: Vec<PixelLine>,
}

impl FrameInput {
    /// Loads a manifest frame; the depth path is relative to `base`.
    pub fn from_record(rec: &FrameRecord, base: &Path) -> Result<Self> {
        let segments = rec
            .segments
            .iter()
            .map(|s| PixelLine {
                coeffs: s.coeffs,
                endpoints: s.endpoints_px,
                label: s.label,
            })
            .collect();
        Ok(FrameInput {
            pose: rec.pose.to_pose()?,
            intrinsics: rec.intrinsics.to_intrinsics()?,
            depth: DepthMap::load_png(&base.join(&rec.depth), rec.depth_scale)?,
            segments,
        })
    }
}

/// Samples `n` points uniformly along the segment (clipped to the image),
/// looks up depth and returns the world points of valid samples.
pub fn backproject_segment(a: Vec2, b: Vec2, frame: &FrameInput, n: usize) -> Vec<Vec3> {
    backproject_with_depth(a, b, frame, n).into_iter().map(|(p, _)| p).collect()
}

fn backproject_with_depth(a: Vec2, b: Vec2, frame: &FrameInput, n: usize) -> Vec<(Vec3, f64)> {
    // pixels own [i - 0.5, i + 0.5); clip in coordinates shifted by half a pixel
    let half = Vec2::new(0.5, 0.5);
    let (w, h) = (frame.depth.width() as f64 - 1e-9, frame.depth.height() as f64 - 1e-9);
    let Some((a, b)) = clip_segment(a + half, b + half, w, h) else {
        return Vec::new();
    };
    let (a, b) = (a - half, b - half);
    let n = n.max(2);
    (0..n)
        .filter_map(|i| {
            let p = a + (b - a) * (i as f64 / (n - 1) as f64);
            let d = frame.depth.at(&p)?;
            let ray = frame.intrinsics.unproject(&p);
            Some((frame.pose.camera_to_world(&(ray * d)), d))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub point: Vec3,
    pub direction: Vec3,
    pub rms: f64,
    /// Extremal projections of the kept points.
    pub endpoints: [Vec3; 2],
    /// Number of points kept after trimming.
    pub support: usize,
}

fn principal(points: &[Vec3]) -> (Vec3, Vec3, [f64; 3]) {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    let s = points.iter().fold(Mat3::zeros(), |acc, p| {
        let d = p - c;
        acc + d * d.transpose()
    });
    let eig = s.symmetric_eigen();
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut v = eig.eigenvectors.column(order[0]).into_owned();
    // deterministic orientation: largest component positive
    if v[v.iamax()] < 0.0 {
        v = -v;
    }
    (c, v, order.map(|i| eig.eigenvalues[i]))
}

fn perp(p: &Vec3, c: &Vec3, v: &Vec3) -> f64 {
    let d = p - c;
    (d - v * v.dot(&d)).norm()
}

/// Principal-direction line fit with one trimming pass (points farther than
/// three times the median distance are dropped and the line refit).
pub fn fit_line3d(points: &[Vec3], rms_max: f64) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::invalid("line fit needs at least two points"));
    }
    let (c, v, _) = principal(points);
    let mut dist: Vec<f64> = points.iter().map(|p| perp(p, &c, &v)).collect();
    let mut sorted = dist.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let cut = (3.0 * median).max(1e-9);
    let kept: Vec<Vec3> = points.iter().zip(&dist).filter(|(_, &d)| d <= cut).map(|(p, _)| *p).collect();
    let pts = if kept.len() >= 2 { kept } else { points.to_vec() };
    let (c, v, ev) = principal(&pts);
    dist.clear();
    dist.extend(pts.iter().map(|p| perp(p, &c, &v)));
    let rms = (dist.iter().map(|d| d * d).sum::<f64>() / dist.len() as f64).sqrt();
    if ev[0] <= 0.0 {
        return Err(Error::invalid("line fit points coincide"));
    }
    if ev[1] >= 0.9 * ev[0] && rms > rms_max {
        return Err(Error::invalid("scatter has no dominant direction"));
    }
    let (lo, hi) = pts.iter().map(|p| v.dot(&(p - c))).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| (l.min(s), h.max(s)));
    Ok(LineFit {
        point: c,
        direction: v,
        rms,
        endpoints: [c + v * lo, c + v * hi],
        support: pts.len(),
    })
}

/// Tries perpendicular endpoint offsets and keeps the fit with the smallest
/// `mean depth + lambda * |offset|` whose RMS passes the gate.
pub fn select_hypothesis(seg: &PixelLine, frame: &FrameInput, cfg: &MapBuilderConfig) -> Option<Line3D> {
    let (a, b) = (seg.endpoint(0), seg.endpoint(1));
    let d = b - a;
    if !(d.norm() > 0.0) {
        return None;
    }
    let normal = Vec2::new(-d.y, d.x) / d.norm();
    let mut best: Option<(f64, Line3D)> = None;
    for &da in &cfg.perturbations_px {
        for &db in &cfg.perturbations_px {
            let samples = backproject_with_depth(a + normal * da, b + normal * db, frame, cfg.n_samples);
            if samples.len() < 2 {
                continue;
            }
            let pts: Vec<Vec3> = samples.iter().map(|(p, _)| *p).collect();
            let Ok(fit) = fit_line3d(&pts, cfg.rms_max) else {
                continue;
            };
            if !(fit.rms < cfg.rms_max) {
                continue;
            }
            let mean_depth = samples.iter().map(|(_, z)| z).sum::<f64>() / samples.len() as f64;
            let score = mean_depth + cfg.lambda * da.hypot(db);
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                if let Ok(line) = Line3D::new(fit.point, fit.direction, seg.label, fit.endpoints) {
                    best = Some((score, line));
                }
            }
        }
    }
    best.map(|(_, l)| l)
}

fn adjacent(a: &Line3D, b: &Line3D, cos_r: f64, delta_t: f64) -> bool {
    let (va, vb) = (a.direction(), b.direction());
    if va.dot(vb).abs() <= cos_r {
        return false;
    }
    let d = a.point() - b.point();
    let off = |v: &Vec3| (d - v * v.dot(&d)).norm();
    off(va) < delta_t && off(vb) < delta_t
}

/// Symmetric adjacency lists of the parallel-and-close graph.
pub fn line_graph(lines: &[Line3D], delta_r_deg: f64, delta_t: f64) -> Vec<Vec<usize>> {
    let cos_r = delta_r_deg.to_radians().cos();
    let mut adj = vec![Vec::new(); lines.len()];
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if adjacent(&lines[i], &lines[j], cos_r, delta_t) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Greedy clustering: repeatedly take the highest-degree vertex, and while
/// its degree reaches `delta_d`, register one line per label found in its
/// closed neighborhood and delete that neighborhood.
pub fn cluster_lines(lines: &[Line3D], delta_r_deg: f64, delta_t: f64, delta_d: usize) -> Vec<Line3D> {
    let adj = line_graph(lines, delta_r_deg, delta_t);
    let mut alive = vec![true; lines.len()];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut out = Vec::new();
    while let Some(top) = (0..lines.len())
        .filter(|&i| alive[i])
        .max_by(|&i, &j| degree[i].cmp(&degree[j]).then(j.cmp(&i)))
    {
        if degree[top] < delta_d {
            break;
        }
        let mut members: Vec<usize> = adj[top].iter().copied().filter(|&j| alive[j]).collect();
        members.push(top);
        let (p, v) = (*lines[top].point(), *lines[top].direction());
        let labels: BTreeSet<Label> = members.iter().map(|&m| lines[m].label()).collect();
        let (lo, hi) = members
            .iter()
            .flat_map(|&m| lines[m].endpoints().iter())
            .map(|e| v.dot(&(e - p)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| (l.min(s), h.max(s)));
        for s in labels {
            if let Ok(l) = Line3D::new(p, v, s, [p + v * lo, p + v * hi]) {
                out.push(l);
            }
        }
        for &m in &members {
            alive[m] = false;
        }
        for &m in &members {
            for &j in &adj[m] {
                if alive[j] {
                    degree[j] -= 1;
                }
            }
        }
    }
    out
}

/// Builds a map from frames: per-segment hypothesis selection followed by
/// clustering.
pub fn build_map(frames: &[FrameInput], cfg: &MapBuilderConfig) -> Result<(Vec<Line3D>, usize)> {
    cfg.validate()?;
    let mut candidates = Vec::new();
    let mut skipped = 0;
    for f in frames {
        for s in &f.segments {
            match select_hypothesis(s, f, cfg) {
                Some(l) => candidates.push(l),
                None => skipped += 1,
            }
        }
    }
    Ok((cluster_lines(&candidates, cfg.delta_r_deg, cfg.delta_t, cfg.delta_d), skipped))
}

/// Loads a manifest, builds the map and attaches its dictionary.
pub fn build_map_from_manifest(path: &Path, cfg: &MapBuilderConfig) -> Result<(LineMap, usize)> {
    let manifest: FrameManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let frames = manifest
        .frames
        .iter()
        .map(|r| FrameInput::from_record(r, base))
        .collect::<Result<Vec<_>>>()?;
    let (lines, skipped) = build_map(&frames, cfg)?;
    Ok((
        LineMap {
            dictionary: manifest.dictionary,
            lines,
        },
        skipped,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn k() -> Intrinsics {
        Intrinsics::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn frame(depth: DepthMap, pose: Pose) -> FrameInput {
        FrameInput {
            pose,
            intrinsics: k(),
            depth,
            segments: Vec::new(),
        }
    }

    fn line(a: [f64; 3], b: [f64; 3], label: Label) -> Line3D {
        Line3D::from_endpoints(Vec3::from(a), Vec3::from(b), label).unwrap()
    }

    #[test]
    fn planar_depth_backprojects_onto_the_line() {
        let f = frame(DepthMap::from_fn(640, 480, |_, _| 2.0), Pose::identity());
        let pts = backproject_segment(Vec2::new(100.0, 240.0), Vec2::new(500.0, 240.0), &f, 20);
        assert_eq!(pts.len(), 20);
        // the image row v = 240 on the plane z = 2 is the line y = 0, z = 2
        assert!(pts.iter().all(|p| p.y.abs() < 1e-6 && (p.z - 2.0).abs() < 1e-6));
    }

    #[test]
    fn zero_depth_and_border_segments() {
        let f = frame(DepthMap::from_fn(640, 480, |_, _| 0.0), Pose::identity());
        assert!(backproject_segment(Vec2::new(10.0, 10.0), Vec2::new(300.0, 10.0), &f, 10).is_empty());
        let f = frame(DepthMap::from_fn(640, 480, |_, _| 1.0), Pose::identity());
        let pts = backproject_segment(Vec2::new(-50.0, 479.4), Vec2::new(700.0, 479.4), &f, 50);
        assert!(pts.len() >= 2);
    }

    #[test]
    fn fit_collinear_and_outlier() {
        let v = Vec3::new(1.0, 2.0, -0.5).normalize();
        let mut pts: Vec<Vec3> = (0..20).map(|i| Vec3::new(0.3, 0.1, 2.0) + v * (i as f64 * 0.05)).collect();
        let f = fit_line3d(&pts, 0.02).unwrap();
        assert!(f.rms < 1e-12);
        assert!(f.direction.dot(&v).abs() > 1.0 - 1e-12);
        let off = v.cross(&Vec3::z()).normalize();
        pts.push(Vec3::new(0.3, 0.1, 2.0) + v * 0.5 + off * 0.3);
        let f = fit_line3d(&pts, 0.02).unwrap();
        assert_eq!(f.support, 20);
        assert!((1.0 - f.direction.dot(&v).abs()) < 1e-12);
        assert!(fit_line3d(&pts[..1], 0.02).is_err());
    }

    /// Total least squares via SVD of the centered data matrix.
    fn tls_direction(pts: &[Vec3]) -> Vec3 {
        let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
        let m = nalgebra::DMatrix::from_fn(pts.len(), 3, |i, j| pts[i][j] - c[j]);
        let svd = m.svd(false, true);
        let vt = svd.v_t.unwrap();
        let i = svd.singular_values.imax();
        Vec3::new(vt[(i, 0)], vt[(i, 1)], vt[(i, 2)])
    }

    #[test]
    fn noisy_fit_matches_tls() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = Normal::new(0.0, 0.005).unwrap();
        for _ in 0..20 {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
            let pts: Vec<Vec3> = (0..60)
                .map(|i| v * (i as f64 * 0.03) + Vec3::from_fn(|_, _| noise.sample(&mut rng)))
                .collect();
            let f = fit_line3d(&pts, 0.02).unwrap();
            let angle = f.direction.dot(&v).abs().min(1.0).acos().to_degrees();
            assert!(angle < 1.0);
            let tls = tls_direction(&pts);
            // the trimmed fit agrees with TLS up to the effect of trimming
            assert!(f.direction.dot(&tls).abs().min(1.0).acos().to_degrees() < 1.0);
        }
    }

    #[test]
    fn foreground_wins_on_a_depth_step() {
        // near plane left of column 320, far plane from 320 on
        let depth = DepthMap::from_fn(640, 480, |u, _| if u < 320 { 1.0 } else { 3.0 });
        let f = frame(depth, Pose::identity());
        let seg = PixelLine::from_endpoints(Vec2::new(320.0, 100.0), Vec2::new(320.0, 380.0), 4).unwrap();
        let l = select_hypothesis(&seg, &f, &MapBuilderConfig::default()).unwrap();
        assert!(l.endpoints().iter().all(|e| (e.z - 1.0).abs() < 1e-9));
        assert_eq!(l.label(), 4);
    }

    #[test]
    fn flat_scene_keeps_the_unperturbed_segment() {
        let f = frame(DepthMap::from_fn(640, 480, |_, _| 2.0), Pose::identity());
        let seg = PixelLine::from_endpoints(Vec2::new(100.0, 200.0), Vec2::new(400.0, 260.0), 1).unwrap();
        let l = select_hypothesis(&seg, &f, &MapBuilderConfig::default()).unwrap();
        // unperturbed endpoints back-project to these points
        let want = [Vec2::new(100.0, 200.0), Vec2::new(400.0, 260.0)].map(|p| k().unproject(&p) * 2.0);
        for w in want {
            assert!(l.distance_to(&w) < 1e-3, "{}", l.distance_to(&w));
        }
    }

    #[test]
    fn rms_gate_rejects_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<f64> = (0..640 * 480).map(|_| rng.random_range(0.5..5.0)).collect();
        let f = frame(DepthMap::new(640, 480, data).unwrap(), Pose::identity());
        let seg = PixelLine::from_endpoints(Vec2::new(100.0, 200.0), Vec2::new(400.0, 260.0), 1).unwrap();
        assert!(select_hypothesis(&seg, &f, &MapBuilderConfig::default()).is_none());
    }

    #[test]
    fn hypothesis_is_translation_equivariant() {
        let depth = DepthMap::from_fn(640, 480, |u, _| if u < 320 { 1.0 } else { 3.0 });
        let seg = PixelLine::from_endpoints(Vec2::new(320.0, 100.0), Vec2::new(320.0, 380.0), 4).unwrap();
        let cfg = MapBuilderConfig::default();
        let a = select_hypothesis(&seg, &frame(depth.clone(), Pose::identity()), &cfg).unwrap();
        let shift = Vec3::new(1.5, -2.0, 0.7);
        let b = select_hypothesis(&seg, &frame(depth, Pose::new(Mat3::identity(), shift).unwrap()), &cfg).unwrap();
        for (ea, eb) in a.endpoints().iter().zip(b.endpoints()) {
            assert!((ea + shift - eb).norm() < 1e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn clustering_examples() {
        let copies: Vec<_> = (0..5).map(|_| line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1)).collect();
        assert_eq!(cluster_lines(&copies, 5.0, 0.05, 3).len(), 1);

        let mut two = Vec::new();
        for i in 0..4 {
            let e = i as f64 * 0.001;
            two.push(line([0.0, e, 0.0], [1.0, e, 0.0], 1));
            two.push(line([0.0, 1.0 + e, 0.0], [1.0, 1.0 + e, 0.0], 1));
        }
        assert_eq!(cluster_lines(&two, 5.0, 0.05, 3).len(), 2);

        let labeled: Vec<_> = [1, 1, 2].into_iter().map(|s| line([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], s)).collect();
        let out = cluster_lines(&labeled, 5.0, 0.05, 2);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].point(), out[1].point());
        assert_ne!(out[0].label(), out[1].label());
    }

    #[test]
    fn star_and_empty_graphs_terminate() {
        assert!(cluster_lines(&[], 5.0, 0.05, 3).is_empty());
        // hub at the origin, spokes offset within delta_t of the hub only
        let mut star = vec![line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0)];
        for i in 0..6 {
            let a = i as f64 * std::f64::consts::TAU / 6.0;
            let (y, z) = (0.04 * a.cos(), 0.04 * a.sin());
            star.push(line([0.0, y, z], [1.0, y, z], 0));
        }
        let out = cluster_lines(&star, 5.0, 0.05, 3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].point(), star[0].point());
    }

    #[test]
    fn merged_endpoints_span_the_cluster() {
        let parts = vec![
            line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0),
            line([0.5, 0.0, 0.0], [2.0, 0.0, 0.0], 0),
            line([-1.0, 0.001, 0.0], [0.2, 0.001, 0.0], 0),
            line([0.3, 0.0, 0.0], [0.4, 0.0, 0.0], 0),
        ];
        let out = cluster_lines(&parts, 5.0, 0.05, 3);
        let xs: Vec<f64> = out[0].endpoints().iter().map(|e| e.x).collect();
        assert!((xs[0].min(xs[1]) + 1.0).abs() < 1e-9 && (xs[0].max(xs[1]) - 2.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn graph_is_symmetric_and_output_is_bounded(raw in prop::collection::vec((prop::array::uniform3(-1.0..1.0f64), prop::array::uniform3(-1.0..1.0f64), 0u32..3), 0..30)) {
            let lines: Vec<Line3D> = raw
                .iter()
                .filter_map(|(p, d, s)| {
                    let (p, d) = (Vec3::from(*p) * 0.1, Vec3::from(*d) + Vec3::new(3.0, 0.0, 0.0));
                    Line3D::from_endpoints(p, p + d, *s).ok()
                })
                .collect();
            let adj = line_graph(&lines, 5.0, 0.05);
            for (i, ns) in adj.iter().enumerate() {
                prop_assert!(!ns.contains(&i));
                for &j in ns {
                    prop_assert!(adj[j].contains(&i));
                }
            }
            let out = cluster_lines(&lines, 5.0, 0.05, 2);
            prop_assert!(out.len() <= lines.len());
            for o in &out {
                prop_assert!(lines.iter().any(|l| (l.point() - o.point()).norm() < 1e-12 && (l.direction() - o.direction()).norm() < 1e-12));
            }
        }
    }
}
