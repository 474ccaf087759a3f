//! Sat-CM translation search for a fixed rotation, visibility pruning and
//! least-squares refinement.
//!
//! With the rotation known, each association constrains the camera center
//! `t` to a slab `|n* . t - n* . p| <= eps_t`, where `n*` is the rotated image
//! normal made orthogonal to the map line direction. The search branches over
//! two translation axes and stabs the third (the one with the largest scene
//! extent) exactly.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::bnb::{branch_and_bound, BnbConfig, Bounder, Evaluated, Leaf, Rect};
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Line3D, Mat3, Pose, Vec2, Vec3};
use crate::intervals::{Interval, IntervalSet};
use crate::saturation::{SaturationKind, SaturationSpec, WeightBank};
use crate::stabbing::{Stabber, TaggedInterval};

pub const DEFAULT_EPSILON_T: f64 = 0.03;
const PROJECTION_TOL: f64 = 1e-9;
const COEFF_TOL: f64 = 1e-12;
/// Depth (meters) at which segments are clipped before projection.
pub const NEAR_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationConfig {
    pub epsilon_t: f64,
    pub gap: f64,
    /// Rectangles narrower than this (meters) are not split.
    pub min_cube_width: f64,
    pub max_nodes: usize,
    pub saturation_kind: SaturationKind,
    pub q: f64,
    /// Largest possible translation residual for the likelihood design.
    pub upper_bound: f64,
    /// Relative inflation of the map bounding box.
    pub box_margin: f64,
    /// Absolute floor (meters) on the inflation of each box axis.
    pub min_box_margin: f64,
    /// Optimal translations closer than this (meters) are merged.
    pub cluster_radius: f64,
    pub max_candidates: usize,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        TranslationConfig {
            epsilon_t: DEFAULT_EPSILON_T,
            gap: 1e-6,
            min_cube_width: 5e-3,
            max_nodes: 2_000_000,
            saturation_kind: SaturationKind::Truncated,
            q: crate::saturation::DEFAULT_Q_TRUSTED,
            upper_bound: 1.0,
            box_margin: 0.1,
            min_box_margin: 0.1,
            cluster_radius: 0.06,
            max_candidates: 8,
        }
    }
}

impl TranslationConfig {
    pub fn saturation(&self) -> Result<SaturationSpec> {
        SaturationSpec::new(self.saturation_kind, self.q, self.epsilon_t, self.upper_bound)
    }
}

/// `normalize(n - (n . v) v)`, or `None` when `n` and `v` are (nearly) parallel.
pub fn project_normal(n: &Vec3, v: &Vec3) -> Option<Vec3> {
    let r = n - v * n.dot(v);
    let norm = r.norm();
    (norm >= PROJECTION_TOL).then(|| r / norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransAssociation {
    pub query: usize,
    pub map: usize,
    n_star: Vec3,
    p: Vec3,
    const_a: f64,
}

impl TransAssociation {
    /// `n_world` is the rotated image-line normal; `line` the map line.
    pub fn new(query: usize, map: usize, n_world: &Vec3, line: &Line3D) -> Option<Self> {
        let n_star = project_normal(n_world, line.direction())?;
        let p = *line.point();
        Some(TransAssociation {
            query,
            map,
            n_star,
            p,
            const_a: n_star.dot(&p),
        })
    }

    pub fn n_star(&self) -> &Vec3 {
        &self.n_star
    }

    pub fn point(&self) -> &Vec3 {
        &self.p
    }

    pub fn const_a(&self) -> f64 {
        self.const_a
    }

    /// `|n* . (p - t)|`
    pub fn residual(&self, t: &Vec3) -> f64 {
        (self.n_star.dot(t) - self.const_a).abs()
    }
}

/// Axis-aligned search box; `axes[0]` is the stabbed (distinguished) axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransCube {
    pub lo: Vec3,
    pub hi: Vec3,
    pub axes: [usize; 3],
}

impl TransCube {
    /// Chooses the axis with the largest extent as the stabbed one.
    pub fn new(lo: Vec3, hi: Vec3) -> Result<Self> {
        if !(0..3).all(|i| lo[i].is_finite() && hi[i].is_finite() && lo[i] <= hi[i]) {
            return Err(Error::invalid("translation box must be finite and nonempty"));
        }
        let ext = hi - lo;
        let d = (0..3).fold(0, |best, i| if ext[i] > ext[best] { i } else { best });
        let axes = [d, (d + 1) % 3, (d + 2) % 3];
        Ok(TransCube { lo, hi, axes })
    }

    /// Map bounding box inflated by `rel` of each extent, at least `abs`.
    pub fn from_lines(lines: &[Line3D], rel: f64, abs: f64) -> Result<Self> {
        let mut it = lines.iter().flat_map(|l| l.endpoints().iter());
        let first = *it.next().ok_or_else(|| Error::invalid("empty map has no scene box"))?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let pad = ((hi - lo) * rel).map(|x| x.max(abs));
        Self::new(lo - pad, hi + pad)
    }

    pub fn rect(&self) -> Rect {
        let [_, a, b] = self.axes;
        Rect::new([self.lo[a], self.lo[b]], [self.hi[a], self.hi[b]])
    }

    pub fn stab_range(&self) -> (f64, f64) {
        (self.lo[self.axes[0]], self.hi[self.axes[0]])
    }

    /// World point from `(stabbed, branched_0, branched_1)` coordinates.
    pub fn compose(&self, x: f64, yz: [f64; 2]) -> Vec3 {
        let mut t = Vec3::zeros();
        t[self.axes[0]] = x;
        t[self.axes[1]] = yz[0];
        t[self.axes[2]] = yz[1];
        t
    }
}

/// Admissible stabbed-axis values for one association, given the branched
/// coordinates as a point (`rect.lo == rect.hi`) or a rectangle.
///
/// The residual is linear in the branched coordinates, so over a rectangle
/// its offset `b` ranges between its values at the vertices.
pub fn trans_theta_intervals(a: &TransAssociation, cube: &TransCube, rect: &Rect, eps: f64) -> Option<Interval> {
    let [x, y, z] = cube.axes;
    let (nx, ny, nz) = (a.n_star[x], a.n_star[y], a.n_star[z]);
    let (b_lo, b_hi) = offset_range(ny, nz, rect, a.const_a);
    let (lo, hi) = cube.stab_range();
    if nx.abs() < COEFF_TOL {
        return (b_lo <= eps && b_hi >= -eps).then(|| Interval::new(lo, hi));
    }
    // union over b in [b_lo, b_hi] of {x : |nx x + b| <= eps}
    let (mut l, mut h) = ((-eps - b_hi) / nx, (eps - b_lo) / nx);
    if l > h {
        std::mem::swap(&mut l, &mut h);
    }
    let (l, h) = (l.max(lo), h.min(hi));
    (l <= h).then(|| Interval::new(l, h))
}

fn offset_range(ny: f64, nz: f64, rect: &Rect, c: f64) -> (f64, f64) {
    let (y0, y1) = (ny * rect.lo[0], ny * rect.hi[0]);
    let (z0, z1) = (nz * rect.lo[1], nz * rect.hi[1]);
    (y0.min(y1) + z0.min(z1) - c, y0.max(y1) + z0.max(z1) - c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransCandidate {
    pub t: Vec3,
    pub value: f64,
    /// Indices into the association slice.
    pub inliers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSolution {
    pub candidates: Vec<TransCandidate>,
    pub value: f64,
    pub upper: f64,
    pub certified: bool,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct TranslationProblem<'a> {
    assoc: &'a [TransAssociation],
    samples: Vec<usize>,
    bank: WeightBank,
    eps: f64,
    cube: TransCube,
}

impl<'a> TranslationProblem<'a> {
    /// `M_k` is the number of translation associations sharing a query index.
    pub fn new(assoc: &'a [TransAssociation], spec: &SaturationSpec, eps: f64, cube: TransCube) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("epsilon_t = {eps} must be positive")));
        }
        let mut ids = BTreeMap::new();
        for a in assoc {
            let next = ids.len();
            ids.entry(a.query).or_insert(next);
        }
        let samples: Vec<usize> = assoc.iter().map(|a| ids[&a.query]).collect();
        let mut counts = vec![0usize; ids.len()];
        for &s in &samples {
            counts[s] += 1;
        }
        Ok(TranslationProblem {
            assoc,
            samples,
            bank: WeightBank::new(spec, &counts),
            eps,
            cube,
        })
    }

    pub fn cube(&self) -> &TransCube {
        &self.cube
    }

    fn collect(&self, indices: impl Iterator<Item = usize>, rect: &Rect, buf: &mut Vec<TaggedInterval>, mut alive: Option<&mut Vec<u32>>) {
        buf.clear();
        for i in indices {
            if let Some(iv) = trans_theta_intervals(&self.assoc[i], &self.cube, rect, self.eps) {
                if let Some(al) = alive.as_deref_mut() {
                    al.push(i as u32);
                }
                buf.push(TaggedInterval::new(iv.lo, iv.hi, self.samples[i]));
            }
        }
    }

    /// Value and optimal stabbed-axis regions at branched coordinates `yz`.
    pub fn best_at(&self, yz: [f64; 2]) -> (f64, IntervalSet) {
        let mut buf = Vec::new();
        self.collect(0..self.assoc.len(), &Rect::new(yz, yz), &mut buf, None);
        let mut s = Stabber::new();
        let v = s.sweep(&buf, &self.bank);
        (v, IntervalSet::from_intervals(s.regions().to_vec()))
    }

    pub fn upper_bound(&self, rect: &Rect) -> f64 {
        let mut buf = Vec::new();
        self.collect(0..self.assoc.len(), rect, &mut buf, None);
        Stabber::new().sweep(&buf, &self.bank)
    }

    pub fn objective(&self, t: &Vec3) -> (f64, Vec<usize>) {
        let mut counts = vec![0usize; self.bank.len()];
        let mut inliers = Vec::new();
        for (i, a) in self.assoc.iter().enumerate() {
            if a.residual(t) <= self.eps {
                counts[self.samples[i]] += 1;
                inliers.push(i);
            }
        }
        let v = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| self.bank.table(k).sigma(c))
            .sum();
        (v, inliers)
    }

    pub fn solve(&self, cfg: &TranslationConfig) -> Result<TranslationSolution> {
        if self.assoc.is_empty() {
            return Err(Error::NoAssociations("translation search needs at least one association".into()));
        }
        let mut bounder = TransBounder {
            prob: self,
            stab: Stabber::new(),
            buf: Vec::with_capacity(self.assoc.len()),
        };
        let all: Vec<u32> = (0..self.assoc.len() as u32).collect();
        let bnb = BnbConfig {
            gap: cfg.gap,
            min_width: cfg.min_cube_width,
            max_nodes: cfg.max_nodes,
        };
        let out = branch_and_bound(&mut bounder, self.cube.rect(), &all, &bnb);
        let candidates = if out.value > 0.0 {
            self.cluster(&out.optima, out.value, cfg)
        } else {
            Vec::new()
        };
        Ok(TranslationSolution {
            candidates,
            value: out.value,
            upper: out.upper,
            certified: out.certified,
            nodes: out.nodes,
        })
    }

    fn cluster(&self, leaves: &[Leaf<Vec<Interval>>], value: f64, cfg: &TranslationConfig) -> Vec<TransCandidate> {
        let mut clusters: Vec<(Vec3, Vec<Vec3>)> = Vec::new();
        for leaf in leaves {
            let yz = leaf.rect.center();
            for r in &leaf.payload {
                let t = self.cube.compose(r.mid(), yz);
                match clusters.iter_mut().find(|(seed, _)| (seed - t).norm() < cfg.cluster_radius) {
                    Some((_, m)) => m.push(t),
                    None => clusters.push((t, vec![t])),
                }
            }
        }
        clusters.sort_by_key(|(_, m)| std::cmp::Reverse(m.len()));
        clusters.truncate(cfg.max_candidates.max(1));
        clusters
            .into_iter()
            .map(|(seed, members)| {
                let mean = members.iter().sum::<Vec3>() / members.len() as f64;
                let (mv, mi) = self.objective(&mean);
                let (t, value, inliers) = if mv >= value - cfg.gap {
                    (mean, mv, mi)
                } else {
                    let (sv, si) = self.objective(&seed);
                    (seed, sv, si)
                };
                TransCandidate { t, value, inliers }
            })
            .collect()
    }
}

struct TransBounder<'p, 'a> {
    prob: &'p TranslationProblem<'a>,
    stab: Stabber,
    buf: Vec<TaggedInterval>,
}

impl Bounder for TransBounder<'_, '_> {
    type State = Vec<u32>;
    type Payload = Vec<Interval>;

    fn bound(&mut self, rect: &Rect, parent: &Vec<u32>) -> Evaluated<Vec<u32>, Vec<Interval>> {
        let mut alive = Vec::with_capacity(parent.len());
        self.prob
            .collect(parent.iter().map(|&i| i as usize), rect, &mut self.buf, Some(&mut alive));
        let upper = self.stab.sweep(&self.buf, &self.prob.bank);
        let c = rect.center();
        self.prob
            .collect(alive.iter().map(|&i| i as usize), &Rect::new(c, c), &mut self.buf, None);
        let lower = self.stab.sweep(&self.buf, &self.prob.bank);
        Evaluated {
            upper: upper.max(lower),
            lower,
            state: alive,
            payload: self.stab.regions().to_vec(),
        }
    }
}

/// Convenience wrapper around [`TranslationProblem::solve`].
pub fn solve_translation(
    associations: &[TransAssociation],
    spec: &SaturationSpec,
    cfg: &TranslationConfig,
    scene_box: &TransCube,
) -> Result<TranslationSolution> {
    TranslationProblem::new(associations, spec, cfg.epsilon_t, *scene_box)?.solve(cfg)
}

/// Liang-Barsky clipping of segment `a`-`b` to `[0, w] x [0, h]`.
pub fn clip_segment(a: Vec2, b: Vec2, w: f64, h: f64) -> Option<(Vec2, Vec2)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x), (d.x, w - a.x), (-d.y, a.y), (d.y, h - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((a + d * t0, a + d * t1))
}

/// Does segment `a`-`b` meet `[0, w] x [0, h]`?
pub fn segment_meets_rect(a: Vec2, b: Vec2, w: f64, h: f64) -> bool {
    clip_segment(a, b, w, h).is_some()
}

/// Whether a map segment is in front of the camera and projects into the
/// image.
pub fn segment_visible(pose: &Pose, line: &Line3D, k: &Intrinsics) -> bool {
    let [a, b] = line.endpoints().map(|e| pose.world_to_camera(&e));
    if a.z <= NEAR_CLIP && b.z <= NEAR_CLIP {
        return false;
    }
    // clip the part behind the near plane
    let clip = |p: Vec3, q: Vec3| -> Vec3 {
        if p.z >= NEAR_CLIP {
            p
        } else {
            let s = (NEAR_CLIP - p.z) / (q.z - p.z);
            p + (q - p) * s
        }
    };
    let (a2, b2) = (clip(a, b), clip(b, a));
    segment_meets_rect(k.project(&a2), k.project(&b2), k.width() as f64, k.height() as f64)
}

/// Keeps the inliers whose map segment passes the visibility test.
pub fn prune_inliers(pose: &Pose, inliers: &[usize], lines: impl Fn(usize) -> Line3D, k: &Intrinsics) -> Vec<usize> {
    inliers
        .iter()
        .copied()
        .filter(|&i| segment_visible(pose, &lines(i), k))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub t: Vec3,
    /// True when the normals do not span three dimensions; `t` is then the
    /// input translation.
    pub rank_deficient: bool,
    /// Sum of squared residuals at `t`.
    pub ssr: f64,
}

fn ssr(assoc: &[&TransAssociation], t: &Vec3) -> f64 {
    assoc.iter().map(|a| a.residual(t).powi(2)).sum()
}

/// Least-squares translation `argmin sum (n* . (p - t))^2` via the normal
/// equations.
pub fn refine_translation(assoc: &[&TransAssociation], t0: &Vec3) -> Refined {
    let mut a = Mat3::zeros();
    let mut b = Vec3::zeros();
    for x in assoc {
        a += x.n_star * x.n_star.transpose();
        b += x.n_star * x.const_a;
    }
    let eig = a.symmetric_eigenvalues();
    let (lmin, lmax) = (eig.min(), eig.max());
    if assoc.len() < 3 || !(lmin > 1e-9 * lmax.max(1e-300)) {
        return Refined {
            t: *t0,
            rank_deficient: true,
            ssr: ssr(assoc, t0),
        };
    }
    match a.cholesky() {
        Some(ch) => {
            let t = ch.solve(&b);
            Refined {
                t,
                rank_deficient: false,
                ssr: ssr(assoc, &t),
            }
        }
        None => Refined {
            t: *t0,
            rank_deficient: true,
            ssr: ssr(assoc, t0),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn unit() -> impl Strategy<Value = Vec3> {
        (0.0..PI, 0.0..TAU).prop_map(|(a, p)| crate::geometry::polar_to_unit(a, p))
    }

    fn assoc(n: Vec3, p: Vec3) -> TransAssociation {
        let n = n.normalize();
        TransAssociation {
            query: 0,
            map: 0,
            n_star: n,
            p,
            const_a: n.dot(&p),
        }
    }

    #[test]
    fn project_normal_examples() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(project_normal(&n, &Vec3::x()), Some(n));
        let n = Vec3::new(1.0, 1.0, 0.0).normalize();
        let r = project_normal(&n, &Vec3::x()).unwrap();
        assert!((r - Vec3::y()).norm() < 1e-15);
        assert_eq!(project_normal(&Vec3::x(), &Vec3::x()), None);
    }

    #[test]
    fn axis_aligned_slab() {
        let cube = TransCube::new(Vec3::new(-5.0, -1.0, -1.0), Vec3::new(5.0, 1.0, 1.0)).unwrap();
        assert_eq!(cube.axes[0], 0);
        let a = assoc(Vec3::x(), Vec3::new(2.0, 0.0, 0.0));
        let iv = trans_theta_intervals(&a, &cube, &Rect::new([0.0, 0.0], [0.0, 0.0]), 0.03).unwrap();
        assert!((iv.lo - 1.97).abs() < 1e-12 && (iv.hi - 2.03).abs() < 1e-12);
    }

    #[test]
    fn degenerate_coefficient_gives_full_range() {
        let cube = TransCube::new(Vec3::new(-5.0, -1.0, -1.0), Vec3::new(5.0, 1.0, 1.0)).unwrap();
        let a = assoc(Vec3::y(), Vec3::zeros());
        let iv = trans_theta_intervals(&a, &cube, &Rect::new([0.0, 0.0], [0.0, 0.0]), 0.03).unwrap();
        assert_eq!((iv.lo, iv.hi), (-5.0, 5.0));
        let off = trans_theta_intervals(&a, &cube, &Rect::new([0.5, 0.0], [0.5, 0.0]), 0.03);
        assert!(off.is_none());
    }

    #[test]
    fn liang_barsky_cases() {
        let (w, h) = (640.0, 480.0);
        assert!(segment_meets_rect(Vec2::new(-100.0, 240.0), Vec2::new(800.0, 240.0), w, h));
        assert!(!segment_meets_rect(Vec2::new(-100.0, -10.0), Vec2::new(-5.0, 500.0), w, h));
        assert!(segment_meets_rect(Vec2::new(10.0, 10.0), Vec2::new(20.0, 20.0), w, h));
        assert!(!segment_meets_rect(Vec2::new(700.0, 0.0), Vec2::new(900.0, 480.0), w, h));
    }

    #[test]
    fn visibility_examples() {
        let k = Intrinsics::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let pose = Pose::identity();
        let behind = Line3D::from_endpoints(Vec3::new(-1.0, 0.0, -2.0), Vec3::new(1.0, 0.0, -3.0), 0).unwrap();
        assert!(!segment_visible(&pose, &behind, &k));
        let across = Line3D::from_endpoints(Vec3::new(-1.0, 0.0, 4.0), Vec3::new(1.0, 0.0, 4.0), 0).unwrap();
        assert!(segment_visible(&pose, &across, &k));
        // one endpoint behind, the visible part crosses the image
        let half = Line3D::from_endpoints(Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.0, 0.1, -3.0), 0).unwrap();
        assert!(segment_visible(&pose, &half, &k));
    }

    #[test]
    fn refinement_examples() {
        let t_true = Vec3::new(0.3, -1.2, 2.0);
        let normals = [Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(1.0, 1.0, 1.0)];
        let assocs: Vec<_> = normals
            .iter()
            .enumerate()
            .map(|(i, n)| assoc(*n, t_true + n.cross(&Vec3::new(0.1, 0.2, i as f64 + 0.3))))
            .collect();
        let refs: Vec<_> = assocs.iter().collect();
        let r = refine_translation(&refs, &Vec3::zeros());
        assert!(!r.rank_deficient);
        assert!(assocs.iter().all(|a| a.residual(&r.t) < 1e-10));

        let par: Vec<_> = (0..4).map(|i| assoc(Vec3::x(), Vec3::new(i as f64, 0.0, 0.0))).collect();
        let refs: Vec<_> = par.iter().collect();
        assert!(refine_translation(&refs, &Vec3::zeros()).rank_deficient);
    }

    proptest! {
        #[test]
        fn projected_normal_is_orthogonal(n in unit(), v in unit()) {
            if let Some(r) = project_normal(&n, &v) {
                prop_assert!(r.dot(&v).abs() < 1e-12);
                prop_assert!((r.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn rectangle_set_contains_point_sets(n in unit(), p in prop::array::uniform3(-3.0..3.0f64),
                                             y0 in -2.0..2.0f64, y1 in -2.0..2.0f64, z0 in -2.0..2.0f64, z1 in -2.0..2.0f64) {
            let cube = TransCube::new(Vec3::new(-4.0, -2.0, -2.0), Vec3::new(4.0, 2.0, 2.0)).unwrap();
            let a = assoc(n, Vec3::from(p));
            let rect = Rect::new([y0.min(y1), z0.min(z1)], [y0.max(y1), z0.max(z1)]);
            let big = trans_theta_intervals(&a, &cube, &rect, 0.03);
            for i in 0..=20 {
                for j in 0..=20 {
                    let y = rect.lo[0] + (rect.hi[0] - rect.lo[0]) * i as f64 / 20.0;
                    let z = rect.lo[1] + (rect.hi[1] - rect.lo[1]) * j as f64 / 20.0;
                    if let Some(small) = trans_theta_intervals(&a, &cube, &Rect::new([y, z], [y, z]), 0.03) {
                        let big = big.expect("rectangle set must be nonempty");
                        prop_assert!(big.lo <= small.lo + 1e-9 && small.hi <= big.hi + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn refinement_never_increases_ssr(seed_t in prop::array::uniform3(-2.0..2.0f64),
                                          ns in prop::collection::vec((unit(), prop::array::uniform3(-3.0..3.0f64)), 3..12)) {
            let assocs: Vec<_> = ns.iter().map(|(n, p)| assoc(*n, Vec3::from(*p))).collect();
            let refs: Vec<_> = assocs.iter().collect();
            let t0 = Vec3::from(seed_t);
            let r = refine_translation(&refs, &t0);
            prop_assert!(r.ssr <= ssr(&refs, &t0) + 1e-9);
        }
    }
}
