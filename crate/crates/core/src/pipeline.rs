//! End-to-end relocalization: semantic association, rotation search,
//! translation search per rotation candidate, pruning and refinement.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{normalize_pixel_line, polar_to_unit, unit_to_polar, Line2D, Line3D, Mat3, Pose, Vec3};
use crate::io::{LabelRemap, LineMap, Query, ResultRecord, Timings};
use crate::rotation::{refine_rotation, Association, AxisCube, RotationProblem};
use crate::translation::{refine_translation, segment_visible, Refined, TransAssociation, TransCube, TranslationProblem};

/// Same-label candidates of one query line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryCandidates {
    /// Index of the query line.
    pub query: usize,
    /// Indices of the map lines sharing its (remapped) label.
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssociationSet {
    /// Query lines with at least one candidate, in input order.
    pub lines: Vec<QueryCandidates>,
    /// Query lines dropped because no map line shares their label.
    pub dropped: usize,
}

impl AssociationSet {
    /// `M = sum_k M_k`.
    pub fn total(&self) -> usize {
        self.lines.iter().map(|c| c.map.len()).sum()
    }

    pub fn m_k(&self, query: usize) -> usize {
        self.lines
            .iter()
            .find(|c| c.query == query)
            .map_or(0, |c| c.map.len())
    }

    /// `(M - K) / M`, assuming each retained query line has exactly one true
    /// match. Dropped lines are not counted.
    pub fn nominal_outlier_ratio(&self) -> f64 {
        let m = self.total();
        if m == 0 {
            return 0.0;
        }
        (m - self.lines.len()) as f64 / m as f64
    }

    /// `(M - #true) / M` given the true map index of each query line.
    pub fn outlier_ratio(&self, truth: &[Option<usize>]) -> f64 {
        let m = self.total();
        if m == 0 {
            return 0.0;
        }
        let hits = self
            .lines
            .iter()
            .filter(|c| truth.get(c.query).copied().flatten().is_some_and(|t| c.map.contains(&t)))
            .count();
        (m - hits) as f64 / m as f64
    }

    /// `(query, map)` pairs in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.lines.iter().flat_map(|c| c.map.iter().map(move |&m| (c.query, m)))
    }
}

/// Matches every query line with every map line of the same label, after
/// applying `remap` to both sides. `map_subset` restricts the map lines
/// considered.
pub fn associate(
    query: &[Line2D],
    map: &[Line3D],
    remap: &LabelRemap,
    map_subset: Option<&[usize]>,
) -> Result<AssociationSet> {
    let all: Vec<usize>;
    let subset = match map_subset {
        Some(s) => {
            if let Some(&bad) = s.iter().find(|&&i| i >= map.len()) {
                return Err(Error::invalid(format!("sub-map index {bad} out of range ({} lines)", map.len())));
            }
            s
        }
        None => {
            all = (0..map.len()).collect();
            &all
        }
    };
    let map_labels: Vec<_> = subset.iter().map(|&i| (i, remap.apply(map[i].label()))).collect();
    let mut out = AssociationSet::default();
    for (k, l) in query.iter().enumerate() {
        let label = remap.apply(l.label());
        let cands: Vec<usize> = map_labels
            .iter()
            .filter(|(_, ml)| *ml == label)
            .map(|&(i, _)| i)
            .collect();
        if cands.is_empty() {
            out.dropped += 1;
        } else {
            out.lines.push(QueryCandidates { query: k, map: cands });
        }
    }
    if out.lines.is_empty() {
        return Err(Error::NoAssociations(format!(
            "none of the {} query lines shares a label with the map",
            query.len()
        )));
    }
    Ok(out)
}

pub(crate) fn check_side_length(side: f64) -> Result<()> {
    if (side - PI).abs() < 1e-9 || (side - FRAC_PI_2).abs() < 1e-9 {
        Ok(())
    } else {
        Err(Error::invalid(format!("prior side length {side} must be pi or pi/2")))
    }
}

/// Grid cell of side `side` (pi or pi/2) over `(alpha, phi)` that contains
/// the given axis; axes on a grid line go to the lower cell.
pub fn prior_cube_from_retrieval(alpha: f64, phi: f64, side: f64) -> Result<AxisCube> {
    check_side_length(side)?;
    if !(0.0..=PI).contains(&alpha) || !(0.0..=TAU).contains(&phi) {
        return Err(Error::invalid(format!("prior axis ({alpha}, {phi}) out of range")));
    }
    let side = if (side - PI).abs() < 1e-9 { PI } else { FRAC_PI_2 };
    let cell = |x: f64, cells: usize| ((x / side).ceil() as usize).saturating_sub(1).min(cells - 1);
    let (na, np) = if side == PI { (1, 2) } else { (2, 4) };
    let (i, j) = (cell(alpha, na) as f64, cell(phi, np) as f64);
    AxisCube::new([i * side, (i + 1.0) * side], [j * side, (j + 1.0) * side])
}

/// Search-space cube for a retrieved camera-to-world rotation axis: the
/// searched rotation is the inverse, whose axis is the antipode.
pub fn search_cube_for_prior(alpha: f64, phi: f64, side: f64) -> Result<AxisCube> {
    let (a, p) = unit_to_polar(&-polar_to_unit(alpha, phi));
    prior_cube_from_retrieval(a, p, side)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Query lines that could not be normalized or were too short.
    pub rejected_lines: usize,
    /// Query lines without same-label map lines.
    pub dropped_lines: usize,
    /// `M`
    pub associations: usize,
    /// `K`, query lines with at least one candidate.
    pub query_lines: usize,
    pub nominal_outlier_ratio: f64,
    pub rotation_candidates: usize,
    pub rotation_nodes: usize,
    pub translation_nodes: usize,
    /// Translation associations dropped because the rotated normal is
    /// parallel to the map line.
    pub parallel_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelocResult {
    /// Camera-to-world pose; `None` on failure.
    pub pose: Option<Pose>,
    pub value_r: f64,
    pub value_t: f64,
    pub rotation_inliers: usize,
    /// Surviving translation inliers as `(query line, map line)`.
    pub inliers: Vec<(usize, usize)>,
    pub certified_rotation: bool,
    pub certified_translation: bool,
    /// The chosen translation could not be refined (normals span < 3 dims).
    pub rank_deficient: bool,
    pub timings: Timings,
    pub diagnostics: Diagnostics,
    pub failure: Option<String>,
}

impl RelocResult {
    fn failed(reason: impl Into<String>, diagnostics: Diagnostics, timings: Timings) -> Self {
        RelocResult {
            pose: None,
            value_r: 0.0,
            value_t: 0.0,
            rotation_inliers: 0,
            inliers: Vec::new(),
            certified_rotation: false,
            certified_translation: false,
            rank_deficient: false,
            timings,
            diagnostics,
            failure: Some(reason.into()),
        }
    }

    pub fn certified(&self) -> bool {
        self.certified_rotation && self.certified_translation
    }

    pub fn to_record(&self) -> ResultRecord {
        ResultRecord {
            rotation: self.pose.as_ref().map(|p| p.quaternion()),
            translation: self.pose.as_ref().map(|p| {
                let t = p.translation();
                [t.x, t.y, t.z]
            }),
            value_r: self.value_r,
            value_t: self.value_t,
            inliers: self.inliers.clone(),
            certified: self.certified(),
            timings_ms: self.timings.clone(),
            failure: self.failure.clone(),
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

struct Choice {
    pose: Pose,
    value_t: f64,
    rotation_inliers: usize,
    inliers: Vec<(usize, usize)>,
    certified: bool,
    rank_deficient: bool,
    ssr: f64,
}

struct PolishContext<'a> {
    rot_assoc: &'a [Association],
    lines: &'a [Line3D],
    intrinsics: &'a crate::geometry::Intrinsics,
    eps_r: f64,
    eps_t: f64,
}

type Polished = (Mat3, Vec3, Vec<usize>, bool, f64);

impl PolishContext<'_> {
    fn trans(&self, r: &Mat3, set: &[usize]) -> Vec<TransAssociation> {
        set.iter()
            .filter_map(|&i| {
                let a = &self.rot_assoc[i];
                TransAssociation::new(a.query, a.map, &(r * a.normal()), &self.lines[a.map])
            })
            .collect()
    }

    fn refine_t(&self, r: &Mat3, set: &[usize], t0: &Vec3) -> Refined {
        let trans = self.trans(r, set);
        let refs: Vec<&TransAssociation> = trans.iter().collect();
        refine_translation(&refs, t0)
    }

    /// Associations consistent with the full pose: rotation and translation
    /// residuals within tolerance and the segment visible.
    fn consistent(&self, r: &Mat3, t: &Vec3) -> Vec<usize> {
        let pose = match Pose::new(*r, *t) {
            Ok(p) => p,
            Err(_) => return Vec::new(),
        };
        (0..self.rot_assoc.len())
            .filter(|&i| {
                let a = &self.rot_assoc[i];
                let line = &self.lines[a.map];
                let n_w = r * a.normal();
                n_w.dot(line.direction()).abs() <= self.eps_r
                    && TransAssociation::new(a.query, a.map, &n_w, line).is_some_and(|x| x.residual(t) <= self.eps_t)
                    && segment_visible(&pose, line, self.intrinsics)
            })
            .collect()
    }

    fn refine_both(&self, r: &Mat3, t: &Vec3, set: &[usize]) -> Option<(Mat3, Refined)> {
        let pairs: Vec<(Vec3, Vec3)> = set
            .iter()
            .map(|&i| (*self.rot_assoc[i].normal(), *self.lines[self.rot_assoc[i].map].direction()))
            .collect();
        let r1 = refine_rotation(r, &pairs)?;
        let t1 = self.refine_t(&r1, set, t);
        (!t1.rank_deficient).then_some((r1, t1))
    }

    /// Joint least-squares polish on the pose-consistent inliers, followed by
    /// one re-collection of the inliers at the polished pose. Accepted only
    /// if it keeps at least as many inliers.
    fn polish(&self, r: &Mat3, t: &Vec3, set: &[usize]) -> Option<Polished> {
        let (r1, t1) = self.refine_both(r, t, set)?;
        let s1 = self.consistent(&r1, &t1.t);
        if s1.len() < set.len() {
            return None;
        }
        match self.refine_both(&r1, &t1.t, &s1) {
            Some((r2, t2)) if self.consistent(&r2, &t2.t).len() >= s1.len() => Some((r2, t2.t, s1, false, t2.ssr)),
            _ => Some((r1, t1.t, s1, false, t1.ssr)),
        }
    }
}

/// Relocalizes one query against a map.
///
/// Invalid configuration and malformed inputs are errors; a query that
/// cannot be localized yields a result with `failure` set.
pub fn relocalize(query: &Query, map: &LineMap, cfg: &Config, remap: &LabelRemap) -> Result<RelocResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut diag = Diagnostics::default();
    let mut timings = Timings::default();

    let mut lines = Vec::with_capacity(query.lines.len());
    let mut index = Vec::with_capacity(query.lines.len());
    for (k, l) in query.lines.iter().enumerate() {
        let ok = l.validate().is_ok() && l.length() >= cfg.pipeline.min_line_length_px;
        match normalize_pixel_line(l, &query.intrinsics) {
            Ok(n) if ok => {
                lines.push(n);
                index.push(k);
            }
            _ => diag.rejected_lines += 1,
        }
    }
    let assoc = match associate(&lines, &map.lines, remap, query.submap.as_deref()) {
        Ok(a) => a,
        Err(Error::NoAssociations(msg)) => {
            diag.dropped_lines = lines.len();
            timings.associate = ms(start);
            timings.total = timings.associate;
            return Ok(RelocResult::failed(msg, diag, timings));
        }
        Err(e) => return Err(e),
    };
    diag.dropped_lines = assoc.dropped;
    diag.associations = assoc.total();
    diag.query_lines = assoc.lines.len();
    diag.nominal_outlier_ratio = assoc.nominal_outlier_ratio();

    let mut rot_assoc = Vec::with_capacity(assoc.total());
    for (k, m) in assoc.pairs() {
        let a = Association::new(index[k], m, *lines[k].normal(), *map.lines[m].direction())?;
        rot_assoc.push(a);
    }
    timings.associate = ms(start);

    let t_rot = Instant::now();
    let prior = match &query.prior {
        Some(p) => {
            let side = cfg.rotation.prior_side_length.unwrap_or(p.side_length);
            Some(search_cube_for_prior(p.alpha, p.phi, side)?)
        }
        None => None,
    };
    let problem = RotationProblem::new(&rot_assoc, &cfg.rotation_saturation()?, cfg.rotation.epsilon_r)?;
    let rot = problem.solve(&cfg.rotation, prior.as_ref())?;
    timings.rotation = ms(t_rot);
    diag.rotation_candidates = rot.candidates.len();
    diag.rotation_nodes = rot.nodes;

    let t_trans = Instant::now();
    let scene_lines: Vec<Line3D> = match &query.submap {
        Some(s) => s.iter().map(|&i| map.lines[i].clone()).collect(),
        None => map.lines.clone(),
    };
    let cube = TransCube::from_lines(&scene_lines, cfg.translation.box_margin, cfg.translation.min_box_margin)?;
    let t_spec = cfg.translation.saturation()?;
    let mut best: Option<Choice> = None;
    let ctx = PolishContext {
        rot_assoc: &rot_assoc,
        lines: &map.lines,
        intrinsics: &query.intrinsics,
        eps_r: cfg.rotation.epsilon_r,
        eps_t: cfg.translation.epsilon_t,
    };
    for cand in &rot.candidates {
        let r = cand.rotation;
        let mut src = Vec::with_capacity(cand.inliers.len());
        let mut trans = Vec::with_capacity(cand.inliers.len());
        for &i in &cand.inliers {
            let a = &rot_assoc[i];
            match TransAssociation::new(a.query, a.map, &(r * a.normal()), &map.lines[a.map]) {
                Some(t) => {
                    src.push(i);
                    trans.push(t);
                }
                None => diag.parallel_dropped += 1,
            }
        }
        if trans.is_empty() {
            continue;
        }
        let tp = TranslationProblem::new(&trans, &t_spec, cfg.translation.epsilon_t, cube)?;
        let sol = tp.solve(&cfg.translation)?;
        diag.translation_nodes += sol.nodes;
        for tc in &sol.candidates {
            let pose = Pose::new(r, tc.t)?;
            let kept: Vec<usize> = tc
                .inliers
                .iter()
                .filter(|&&i| segment_visible(&pose, &map.lines[trans[i].map], &query.intrinsics))
                .map(|&i| src[i])
                .collect();
            let refined = ctx.refine_t(&r, &kept, &tc.t);
            let (mut r_out, mut t_out, mut set, mut rank_deficient, mut ssr) =
                (r, refined.t, kept, refined.rank_deficient, refined.ssr);
            if cfg.pipeline.refine_pose && !rank_deficient {
                if let Some(p) = ctx.polish(&r_out, &t_out, &set) {
                    (r_out, t_out, set, rank_deficient, ssr) = p;
                }
            }
            let better = match &best {
                None => true,
                Some(b) => set.len() > b.inliers.len() || (set.len() == b.inliers.len() && ssr < b.ssr),
            };
            if better {
                best = Some(Choice {
                    pose: Pose::new(r_out, t_out)?,
                    value_t: sol.value,
                    rotation_inliers: cand.inliers.len(),
                    inliers: set.iter().map(|&i| (rot_assoc[i].query, rot_assoc[i].map)).collect(),
                    certified: sol.certified,
                    rank_deficient,
                    ssr,
                });
            }
        }
    }
    timings.translation = ms(t_trans);
    timings.total = ms(start);

    Ok(match best {
        Some(c) => RelocResult {
            pose: Some(c.pose),
            value_r: rot.value,
            value_t: c.value_t,
            rotation_inliers: c.rotation_inliers,
            inliers: c.inliers,
            certified_rotation: rot.certified,
            certified_translation: c.certified,
            rank_deficient: c.rank_deficient,
            timings,
            diagnostics: diag,
            failure: None,
        },
        None => {
            let mut out = RelocResult::failed("no rotation candidate produced a translation", diag, timings);
            out.value_r = rot.value;
            out.certified_rotation = rot.certified;
            out
        }
    })
}

/// Query lines that normalize, with their indices in the query.
fn usable_lines(query: &Query) -> (Vec<Line2D>, Vec<usize>) {
    query
        .lines
        .iter()
        .enumerate()
        .filter_map(|(k, l)| normalize_pixel_line(l, &query.intrinsics).ok().map(|n| (n, k)))
        .unzip()
}

/// Rotation associations of a query: every usable query line against every
/// map line with its label. `Association::query` indexes `query.lines`.
pub fn rotation_associations(query: &Query, map: &LineMap, remap: &LabelRemap) -> Result<Vec<Association>> {
    let (lines, index) = usable_lines(query);
    let assoc = associate(&lines, &map.lines, remap, query.submap.as_deref())?;
    assoc
        .pairs()
        .map(|(k, m)| Association::new(index[k], m, *lines[k].normal(), *map.lines[m].direction()))
        .collect()
}

/// Fraction of a query's associations that are not true matches; `truth`
/// holds the true map index of each line of `query.lines`.
pub fn outlier_ratio(query: &Query, map: &LineMap, remap: &LabelRemap, truth: &[Option<usize>]) -> Result<f64> {
    let (lines, index) = usable_lines(query);
    let assoc = associate(&lines, &map.lines, remap, query.submap.as_deref())?;
    let truth: Vec<Option<usize>> = index.iter().map(|&k| truth.get(k).copied().flatten()).collect();
    Ok(assoc.outlier_ratio(&truth))
}

/// Rotation-only variant: the best camera-to-world rotation, the searched
/// value and whether it is certified.
pub fn relocalize_rotation(
    query: &Query,
    map: &LineMap,
    cfg: &Config,
    remap: &LabelRemap,
) -> Result<Option<(Mat3, f64, bool)>> {
    let rot_assoc = match rotation_associations(query, map, remap) {
        Ok(a) => a,
        Err(Error::NoAssociations(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let problem = RotationProblem::new(&rot_assoc, &cfg.rotation_saturation()?, cfg.rotation.epsilon_r)?;
    let prior = match &query.prior {
        Some(p) => Some(search_cube_for_prior(p.alpha, p.phi, cfg.rotation.prior_side_length.unwrap_or(p.side_length))?),
        None => None,
    };
    let sol = problem.solve(&cfg.rotation, prior.as_ref())?;
    Ok(sol.candidates.first().map(|c| (c.rotation, sol.value, sol.certified)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_error, Vec2};
    use crate::synth::{synth_scene, SceneSpec};

    fn l2(label: u32) -> Line2D {
        Line2D::new(Vec3::new(0.0, 1.0, 0.0), label, [Vec2::zeros(), Vec2::new(1.0, 0.0)]).unwrap()
    }

    fn l3(label: u32) -> Line3D {
        Line3D::from_endpoints(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), label).unwrap()
    }

    #[test]
    fn associate_counts() {
        let map: Vec<_> = [3, 3, 1, 3, 3, 2].into_iter().map(l3).collect();
        let a = associate(&[l2(3)], &map, &LabelRemap::default(), None).unwrap();
        assert_eq!(a.m_k(0), 4);
        assert_eq!(a.total(), 4);
        let a = associate(&[l2(3), l2(9)], &map, &LabelRemap::default(), Some(&[0, 1, 2])).unwrap();
        assert_eq!(a.m_k(0), 2);
        assert_eq!(a.dropped, 1);
        assert!(matches!(
            associate(&[l2(7)], &map, &LabelRemap::default(), None),
            Err(Error::NoAssociations(_))
        ));
        let remap = LabelRemap::new([(7, 2)].into()).unwrap();
        assert_eq!(associate(&[l2(7)], &map, &remap, None).unwrap().total(), 1);
    }

    #[test]
    fn prior_cells() {
        let c = prior_cube_from_retrieval(0.1, 0.1, FRAC_PI_2).unwrap();
        assert_eq!((c.alpha, c.phi), ([0.0, FRAC_PI_2], [0.0, FRAC_PI_2]));
        let c = prior_cube_from_retrieval(2.0, 4.0, PI).unwrap();
        assert_eq!((c.alpha, c.phi), ([0.0, PI], [PI, TAU]));
        // on a grid line: lower cell
        let c = prior_cube_from_retrieval(FRAC_PI_2, PI, FRAC_PI_2).unwrap();
        assert_eq!((c.alpha, c.phi), ([0.0, FRAC_PI_2], [FRAC_PI_2, PI]));
        assert!(prior_cube_from_retrieval(0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn outlier_ratio_matches_bookkeeping() {
        let spec = SceneSpec {
            seed: 2,
            ..SceneSpec::default()
        };
        let scene = synth_scene(&spec).unwrap();
        let q = &scene.queries[0];
        let lines: Vec<_> = q
            .query
            .lines
            .iter()
            .map(|l| normalize_pixel_line(l, &q.query.intrinsics).unwrap())
            .collect();
        let a = associate(&lines, &scene.map.lines, &LabelRemap::default(), None).unwrap();
        let m = a.total();
        let expect = (m - spec.n_query_lines) as f64 / m as f64;
        assert!((a.outlier_ratio(&q.true_matches) - expect).abs() < 1e-15);
        assert_eq!(a.outlier_ratio(&q.true_matches), a.nominal_outlier_ratio());
    }

    #[test]
    fn noiseless_scene_is_recovered() {
        let spec = SceneSpec {
            seed: 1,
            ..SceneSpec::default()
        };
        let scene = synth_scene(&spec).unwrap();
        let q = &scene.queries[0];
        let res = relocalize(&q.query, &scene.map, &Config::default(), &LabelRemap::default()).unwrap();
        let pose = res.pose.clone().expect("pose");
        assert!(rotation_error(pose.rotation(), q.pose.rotation()) < 0.5);
        assert!((pose.translation() - q.pose.translation()).norm() < 0.03);
        assert!(res.certified());
    }

    #[test]
    fn unusable_query_fails_gracefully() {
        let scene = synth_scene(&SceneSpec::default()).unwrap();
        let mut q = scene.queries[0].query.clone();
        for l in &mut q.lines {
            l.label = 999;
        }
        let res = relocalize(&q, &scene.map, &Config::default(), &LabelRemap::default()).unwrap();
        assert!(res.pose.is_none() && res.failure.is_some());
        q.lines.clear();
        let res = relocalize(&q, &scene.map, &Config::default(), &LabelRemap::default()).unwrap();
        assert!(res.failure.is_some());
    }

    #[test]
    fn prior_matches_true_axis() {
        let scene = synth_scene(&SceneSpec {
            seed: 4,
            ..SceneSpec::default()
        })
        .unwrap();
        let sq = &scene.queries[0];
        let aa = crate::geometry::AxisAngle::from_matrix(sq.pose.rotation());
        let mut q = sq.query.clone();
        q.prior = Some(crate::io::Prior {
            alpha: aa.alpha(),
            phi: aa.phi(),
            side_length: FRAC_PI_2,
        });
        let res = relocalize(&q, &scene.map, &Config::default(), &LabelRemap::default()).unwrap();
        let pose = res.pose.clone().expect("pose");
        assert!(rotation_error(pose.rotation(), sq.pose.rotation()) < 0.5);
    }
}
