//! Accuracy summaries over a batch of relocalization results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::rotation_error;
use crate::io::{GroundTruth, ResultRecord};

pub const ROTATION_RECALL_DEG: f64 = 5.0;
pub const TRANSLATION_RECALL_CM: [f64; 3] = [5.0, 10.0, 15.0];

/// Quantile of an ascending slice by linear interpolation between closest
/// ranks: position `p (n - 1)`, the default of most statistics packages.
/// `None` for an empty slice.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = h.floor() as usize;
    if i + 1 >= n {
        return Some(sorted[n - 1]);
    }
    let (a, b) = (sorted[i], sorted[i + 1]);
    if a == b {
        return Some(a);
    }
    Some(a + (h - i as f64) * (b - a))
}

/// 25/50/75 % quantiles. Failed queries count as infinitely wrong, so a
/// quantile that falls on them is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
}

impl Quartiles {
    fn of(errors: &[Option<f64>]) -> Self {
        let mut v: Vec<f64> = errors.iter().map(|e| e.unwrap_or(f64::INFINITY)).collect();
        v.sort_by(f64::total_cmp);
        let q = |p| quantile(&v, p).filter(|x| x.is_finite());
        Quartiles {
            q25: q(0.25),
            q50: q(0.5),
            q75: q(0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_queries: usize,
    pub n_failed: usize,
    /// Per query, `None` when no pose was returned.
    pub rotation_errors_deg: Vec<Option<f64>>,
    pub translation_errors_cm: Vec<Option<f64>>,
    pub rotation_quartiles_deg: Quartiles,
    pub translation_quartiles_cm: Quartiles,
    /// Fraction of queries with rotation error below 5 degrees.
    pub recall_rotation_5deg: f64,
    /// `(threshold in cm, fraction of queries below it)`.
    pub recall_translation: Vec<(f64, f64)>,
    pub median_outlier_ratio: Option<f64>,
    pub median_time_ms: Option<f64>,
}

fn recall(errors: &[Option<f64>], threshold: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().filter(|e| matches!(e, Some(x) if *x < threshold)).count() as f64 / errors.len() as f64
}

fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Compares `results` with `truth` query by query. `outlier_ratios` is either
/// empty or holds one ratio per query.
pub fn evaluate(results: &[ResultRecord], truth: &[GroundTruth], outlier_ratios: &[f64]) -> Result<EvalReport> {
    if results.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} results but {} ground-truth poses",
            results.len(),
            truth.len()
        )));
    }
    if !outlier_ratios.is_empty() && outlier_ratios.len() != results.len() {
        return Err(Error::invalid("one outlier ratio per query expected"));
    }
    let mut rot = Vec::with_capacity(results.len());
    let mut trans = Vec::with_capacity(results.len());
    for (r, gt) in results.iter().zip(truth) {
        let gt = gt.pose.to_pose()?;
        match r.pose().transpose()? {
            Some(p) => {
                rot.push(Some(rotation_error(p.rotation(), gt.rotation())));
                trans.push(Some((p.translation() - gt.translation()).norm() * 100.0));
            }
            None => {
                rot.push(None);
                trans.push(None);
            }
        }
    }
    let times: Vec<f64> = results.iter().map(|r| r.timings_ms.total).collect();
    Ok(EvalReport {
        n_queries: results.len(),
        n_failed: rot.iter().filter(|e| e.is_none()).count(),
        rotation_quartiles_deg: Quartiles::of(&rot),
        translation_quartiles_cm: Quartiles::of(&trans),
        recall_rotation_5deg: recall(&rot, ROTATION_RECALL_DEG),
        recall_translation: TRANSLATION_RECALL_CM.iter().map(|&c| (c, recall(&trans, c))).collect(),
        median_outlier_ratio: median(outlier_ratios),
        median_time_ms: median(&times),
        rotation_errors_deg: rot,
        translation_errors_cm: trans,
    })
}
