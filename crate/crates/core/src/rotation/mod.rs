//! Globally optimal Sat-CM rotation search.
//!
//! The search branches over the rotation axis `u` and solves the amplitude
//! `theta` exactly by saturated interval stabbing. Residuals are
//! `n^T W v = (W^T n) . v`, so the searched rotation `W` is the transpose of
//! the camera-to-world rotation; results are reported both ways.

mod bounds;
mod theta;

pub use bounds::{h1_bounds, h1_bounds_in, h2_bounds, h2_bounds_in, Association, AxisCube, CubeFrame};
pub use theta::{theta_intervals, theta_set, ThetaSet};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::bnb::{branch_and_bound, BnbConfig, Bounder, Evaluated, Rect};
use crate::error::{Error, Result};
use crate::geometry::{rodrigues, rotation_error, AxisAngle, Mat3, Vec3};
use crate::intervals::{Interval, IntervalSet};
use crate::saturation::{SaturationSpec, WeightBank};
use crate::stabbing::{Stabber, TaggedInterval};

pub const DEFAULT_EPSILON_R: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    pub epsilon_r: f64,
    pub gap: f64,
    /// Axis cubes narrower than this (radians) are not split.
    pub min_cube_width: f64,
    pub max_nodes: usize,
    /// Optimal rotations closer than this are merged into one candidate.
    pub cluster_radius_deg: f64,
    pub max_candidates: usize,
    /// Side of the retrieval grid cell used as the initial cube when a prior
    /// axis is available: pi or pi/2; `None` searches the whole sphere.
    pub prior_side_length: Option<f64>,
}

impl Default for RotationConfig {
    fn default() -> Self {
        RotationConfig {
            epsilon_r: DEFAULT_EPSILON_R,
            gap: 1e-6,
            min_cube_width: 1e-3,
            max_nodes: 4_000_000,
            cluster_radius_deg: 2.0,
            max_candidates: 8,
            prior_side_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationCandidate {
    /// Camera-to-world rotation.
    pub rotation: Mat3,
    /// Axis-angle of the searched rotation (the transpose of `rotation`).
    pub axis_angle: AxisAngle,
    pub value: f64,
    /// Indices (into the association slice) with residual at most `epsilon_r`.
    pub inliers: Vec<usize>,
    /// Number of optimal leaf cubes merged into this candidate.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationSolution {
    /// Distinct optimal rotations, best supported first.
    pub candidates: Vec<RotationCandidate>,
    pub value: f64,
    /// Upper bound on the optimum at exit.
    pub upper: f64,
    pub certified: bool,
    pub nodes: usize,
}

/// Associations with their saturation weights, ready to be searched.
#[derive(Debug, Clone)]
pub struct RotationProblem<'a> {
    assoc: &'a [Association],
    samples: Vec<usize>,
    bank: WeightBank,
    eps: f64,
}

impl<'a> RotationProblem<'a> {
    /// `M_k` is the number of associations sharing a query index.
    pub fn new(assoc: &'a [Association], spec: &SaturationSpec, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("epsilon_r = {eps} must be positive")));
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
        Ok(RotationProblem {
            assoc,
            samples,
            bank: WeightBank::new(spec, &counts),
            eps,
        })
    }

    pub fn associations(&self) -> &[Association] {
        self.assoc
    }

    pub fn weights(&self) -> &WeightBank {
        &self.bank
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    fn collect(&self, indices: impl Iterator<Item = usize>, mut bounds: impl FnMut(&Association) -> (f64, f64, f64, f64), buf: &mut Vec<TaggedInterval>, alive: Option<&mut Vec<u32>>) {
        buf.clear();
        let mut alive = alive;
        for i in indices {
            let a = &self.assoc[i];
            let (l1, h1, l2, h2) = bounds(a);
            let set = theta_set(a.dot(), l1, h1, l2, h2, self.eps);
            if set.is_empty() {
                continue;
            }
            if let Some(al) = alive.as_deref_mut() {
                al.push(i as u32);
            }
            for iv in set.as_slice() {
                buf.push(TaggedInterval::new(iv.lo, iv.hi, self.samples[i]));
            }
        }
    }

    /// Best amplitude for a fixed axis: `(value, optimal theta regions)`.
    pub fn best_theta(&self, u: &Vec3) -> (f64, IntervalSet) {
        let mut buf = Vec::with_capacity(2 * self.assoc.len());
        self.collect(0..self.assoc.len(), |a| point_bounds(a, u), &mut buf, None);
        let mut s = Stabber::new();
        let v = s.sweep(&buf, &self.bank);
        (v, IntervalSet::from_intervals(s.regions().to_vec()))
    }

    /// Value attained at the cube center and the optimal amplitudes there.
    pub fn lower_bound(&self, cube: &AxisCube) -> (f64, IntervalSet) {
        self.best_theta(&cube.center_axis())
    }

    /// Upper bound of the objective over all axes in `cube` and all amplitudes.
    pub fn upper_bound(&self, cube: &AxisCube) -> f64 {
        let mut buf = Vec::with_capacity(2 * self.assoc.len());
        let frame = CubeFrame::new(cube);
        self.collect(0..self.assoc.len(), |a| cube_bounds(a, &frame), &mut buf, None);
        Stabber::new().sweep(&buf, &self.bank)
    }

    /// Objective and inliers of a searched rotation `W`.
    pub fn objective(&self, w: &Mat3) -> (f64, Vec<usize>) {
        let mut counts = vec![0usize; self.bank.len()];
        let mut inliers = Vec::new();
        for (i, a) in self.assoc.iter().enumerate() {
            if a.normal().dot(&(w * a.direction())).abs() <= self.eps {
                counts[self.samples[i]] += 1;
                inliers.push(i);
            }
        }
        let value = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| self.bank.table(k).sigma(c))
            .sum();
        (value, inliers)
    }

    /// Runs the search from `prior` (default: the whole sphere of axes).
    pub fn solve(&self, cfg: &RotationConfig, prior: Option<&AxisCube>) -> Result<RotationSolution> {
        if self.assoc.is_empty() {
            return Err(Error::NoAssociations("rotation search needs at least one association".into()));
        }
        let root = prior.copied().unwrap_or_else(AxisCube::full_sphere);
        let mut bounder = RotBounder {
            prob: self,
            stab: Stabber::new(),
            buf: Vec::with_capacity(2 * self.assoc.len()),
            center: Vec::with_capacity(2 * self.assoc.len()),
            best: f64::NEG_INFINITY,
            gap: cfg.gap,
        };
        let all: Vec<u32> = (0..self.assoc.len() as u32).collect();
        let bnb = BnbConfig {
            gap: cfg.gap,
            min_width: cfg.min_cube_width,
            max_nodes: cfg.max_nodes,
        };
        let out = branch_and_bound(&mut bounder, root.rect(), &all, &bnb);
        let candidates = if out.value > 0.0 {
            self.cluster(&out.optima, out.value, cfg)
        } else {
            Vec::new()
        };
        Ok(RotationSolution {
            candidates,
            value: out.value,
            upper: out.upper,
            certified: out.certified,
            nodes: out.nodes,
        })
    }

    fn cluster(&self, leaves: &[crate::bnb::Leaf<Vec<Interval>>], value: f64, cfg: &RotationConfig) -> Vec<RotationCandidate> {
        // one searched rotation per (leaf, optimal amplitude region)
        let mut points: Vec<Mat3> = Vec::new();
        for leaf in leaves {
            let u = AxisCube::from_rect(&leaf.rect).center_axis();
            for r in &leaf.payload {
                points.push(rodrigues(&u, r.mid()));
            }
        }
        let mut clusters: Vec<(Mat3, Vec<Mat3>)> = Vec::new();
        for w in points {
            match clusters
                .iter_mut()
                .find(|(seed, _)| rotation_error(seed, &w) < cfg.cluster_radius_deg)
            {
                Some((_, members)) => members.push(w),
                None => clusters.push((w, vec![w])),
            }
        }
        // stable sort keeps discovery order among equally supported clusters
        clusters.sort_by_key(|(_, m)| std::cmp::Reverse(m.len()));
        clusters.truncate(cfg.max_candidates.max(1));
        clusters
            .into_iter()
            .map(|(seed, members)| {
                let mean = chordal_mean(&members).unwrap_or(seed);
                let (mv, mi) = self.objective(&mean);
                let (w, v, inliers) = if mv >= value - cfg.gap {
                    (mean, mv, mi)
                } else {
                    let (sv, si) = self.objective(&seed);
                    (seed, sv, si)
                };
                RotationCandidate {
                    rotation: w.transpose(),
                    axis_angle: AxisAngle::from_matrix(&w),
                    value: v,
                    inliers,
                    support: members.len(),
                }
            })
            .collect()
    }
}

fn point_bounds(a: &Association, u: &Vec3) -> (f64, f64, f64, f64) {
    let (h1, h2) = (a.h1(u), a.h2(u));
    (h1, h1, h2, h2)
}

fn cube_bounds(a: &Association, frame: &CubeFrame) -> (f64, f64, f64, f64) {
    let (l1, h1) = h1_bounds_in(frame, a);
    let (l2, h2) = h2_bounds_in(frame, a);
    (l1, h1, l2, h2)
}

/// Projection of the average matrix onto SO(3).
fn chordal_mean(ms: &[Mat3]) -> Option<Mat3> {
    let sum = ms.iter().fold(Mat3::zeros(), |acc, m| acc + m);
    let svd = sum.svd(true, true);
    let (u, vt) = (svd.u?, svd.v_t?);
    let d = (u * vt).determinant().signum();
    let fix = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    Some(u * fix * vt)
}

struct RotBounder<'p, 'a> {
    prob: &'p RotationProblem<'a>,
    stab: Stabber,
    buf: Vec<TaggedInterval>,
    center: Vec<TaggedInterval>,
    best: f64,
    gap: f64,
}

impl Bounder for RotBounder<'_, '_> {
    type State = Vec<u32>;
    type Payload = Vec<Interval>;

    fn incumbent(&mut self, best: f64) {
        self.best = best;
    }

    fn bound(&mut self, rect: &Rect, parent: &Vec<u32>) -> Evaluated<Vec<u32>, Vec<Interval>> {
        let cube = AxisCube::from_rect(rect);
        let frame = CubeFrame::new(&cube);
        let u = cube.center_axis();
        let eps = self.prob.eps;
        let mut alive = Vec::with_capacity(parent.len());
        self.center.clear();
        self.buf.clear();
        for &i in parent {
            let a = &self.prob.assoc[i as usize];
            let (c1, c2) = (a.h1(&u), a.h2(&u));
            let (l1, h1, l2, h2) = cube_bounds(a, &frame);
            let set = theta_set(a.dot(), l1, h1, l2, h2, eps);
            if set.is_empty() {
                continue;
            }
            alive.push(i);
            let sample = self.prob.samples[i as usize];
            for iv in set.as_slice() {
                self.buf.push(TaggedInterval::new(iv.lo, iv.hi, sample));
            }
            // associations with no admissible amplitude over the cube cannot
            // be inliers at its center either
            for iv in theta_set(a.dot(), c1, c1, c2, c2, eps).as_slice() {
                self.center.push(TaggedInterval::new(iv.lo, iv.hi, sample));
            }
        }
        let upper = self.stab.sweep(&self.buf, &self.prob.bank);
        if upper < self.best - self.gap {
            return Evaluated {
                upper,
                lower: f64::NEG_INFINITY,
                state: alive,
                payload: Vec::new(),
            };
        }
        let lower = self.stab.sweep(&self.center, &self.prob.bank);
        Evaluated {
            upper: upper.max(lower),
            lower,
            state: alive,
            payload: self.stab.regions().to_vec(),
        }
    }
}

/// Gauss-Newton refinement of a camera-to-world rotation minimizing
/// `sum ((R n_i) . v_i)^2` over `(normal, direction)` pairs. Returns `None`
/// when the pairs do not constrain all three rotational degrees of freedom.
pub fn refine_rotation(r0: &Mat3, pairs: &[(Vec3, Vec3)]) -> Option<Mat3> {
    if pairs.len() < 3 {
        return None;
    }
    let mut r = *r0;
    for _ in 0..20 {
        let mut jtj = Mat3::zeros();
        let mut jtr = Vec3::zeros();
        for (n, v) in pairs {
            let rn = r * n;
            let j = rn.cross(v);
            jtj += j * j.transpose();
            jtr += j * rn.dot(v);
        }
        let eig = jtj.symmetric_eigenvalues();
        if !(eig.min() > 1e-9 * eig.max().max(1e-300)) {
            return None;
        }
        let delta = -jtj.cholesky()?.solve(&jtr);
        let step = delta.norm();
        r = if step > 0.0 { rodrigues(&(delta / step), step) * r } else { r };
        if step < 1e-13 {
            break;
        }
    }
    // re-orthonormalize against drift
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u?, svd.v_t?);
    Some(u * vt)
}

/// Convenience wrapper around [`RotationProblem::solve`].
pub fn solve_rotation(
    associations: &[Association],
    spec: &SaturationSpec,
    cfg: &RotationConfig,
    prior: Option<&AxisCube>,
) -> Result<RotationSolution> {
    RotationProblem::new(associations, spec, cfg.epsilon_r)?.solve(cfg, prior)
}
