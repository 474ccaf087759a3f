//! Objective landscapes over the sphere of rotation axes, each point taking
//! its best rotation amplitude.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{polar_to_unit, Vec3};
use crate::rotation::{Association, RotationProblem};
use crate::saturation::{SaturationKind, SaturationSpec};

/// Values on cell centers `alpha_i = (i + 1/2) step`, `phi_j = (j + 1/2) step`,
/// normalized so that the largest is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub kind: SaturationKind,
    pub alphas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major, `values[i * phis.len() + j]`.
    pub values: Vec<f64>,
    /// Unnormalized maximum.
    pub max: f64,
}

impl Landscape {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.phis.len() + j]
    }

    /// First cell (row-major) holding the maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        (best / self.phis.len(), best % self.phis.len())
    }

    pub fn axis(&self, i: usize, j: usize) -> Vec3 {
        polar_to_unit(self.alphas[i], self.phis[j])
    }

    /// Cell containing the axis `u`.
    pub fn cell_of(&self, u: &Vec3) -> (usize, usize) {
        let (a, p) = crate::geometry::unit_to_polar(u);
        let step = self.alphas.get(1).map_or(PI, |x| x - self.alphas[0]);
        let i = ((a / step) as usize).min(self.alphas.len() - 1);
        let j = ((p / step) as usize).min(self.phis.len() - 1);
        (i, j)
    }

    /// `alpha_deg,phi_deg,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha_deg,phi_deg,value\n");
        for (i, a) in self.alphas.iter().enumerate() {
            for (j, p) in self.phis.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", a.to_degrees(), p.to_degrees(), self.value(i, j));
            }
        }
        s
    }
}

/// Evaluates the searched objective on a grid with `step_deg` spacing.
pub fn landscape(assoc: &[Association], spec: &SaturationSpec, eps: f64, step_deg: f64) -> Result<Landscape> {
    if !(step_deg > 0.0 && step_deg <= 180.0) {
        return Err(Error::invalid(format!("grid step {step_deg} must lie in (0, 180]")));
    }
    let problem = RotationProblem::new(assoc, spec, eps)?;
    let step = step_deg.to_radians();
    let na = (PI / step).ceil() as usize;
    let np = (TAU / step).ceil() as usize;
    let alphas: Vec<f64> = (0..na).map(|i| ((i as f64 + 0.5) * step).min(PI)).collect();
    let phis: Vec<f64> = (0..np).map(|j| ((j as f64 + 0.5) * step).min(TAU)).collect();
    let mut values = Vec::with_capacity(na * np);
    for &a in &alphas {
        for &p in &phis {
            values.push(problem.best_theta(&polar_to_unit(a, p)).0);
        }
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter_mut().for_each(|v| *v /= max);
    }
    Ok(Landscape {
        kind: spec.kind(),
        alphas,
        phis,
        values,
        max,
    })
}
