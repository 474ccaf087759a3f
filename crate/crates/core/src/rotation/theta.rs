//! Admissible rotation amplitudes for one association, in closed form.

use std::f64::consts::{PI, TAU};

use crate::intervals::{Interval, IntervalSet};

/// At most four disjoint sorted pieces of `[0, pi]`, kept inline to avoid
/// allocating in the bounding loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThetaSet {
    buf: [Interval; 4],
    len: usize,
}

impl ThetaSet {
    fn push(&mut self, lo: f64, hi: f64) {
        if lo > hi {
            return;
        }
        if self.len > 0 && lo <= self.buf[self.len - 1].hi {
            let last = &mut self.buf[self.len - 1];
            last.hi = last.hi.max(hi);
        } else if self.len < 4 {
            self.buf[self.len] = Interval { lo, hi };
            self.len += 1;
        }
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.buf[..self.len]
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn full() -> Self {
        let mut s = ThetaSet::default();
        s.push(0.0, PI);
        s
    }

    fn intersect(&self, other: &ThetaSet) -> ThetaSet {
        let mut out = ThetaSet::default();
        let (x, y) = (self.as_slice(), other.as_slice());
        let (mut i, mut j) = (0, 0);
        while i < x.len() && j < y.len() {
            out.push(x[i].lo.max(y[j].lo), x[i].hi.min(y[j].hi));
            if x[i].hi < y[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        out
    }
}

/// `{theta in [0, pi] : a + b sin(theta) + c (1 - cos(theta)) <= eps}`.
///
/// The left side equals `(a + c) + r sin(theta + psi)` with
/// `r = |(b, c)|` and `psi = atan2(-c, b)`.
fn sublevel(a: f64, b: f64, c: f64, eps: f64) -> ThetaSet {
    let r = (b * b + c * c).sqrt();
    let d = eps - a - c;
    if d >= r {
        return ThetaSet::full();
    }
    if d < -r || r == 0.0 {
        return ThetaSet::default();
    }
    let psi = (-c).atan2(b);
    let beta = (d / r).clamp(-1.0, 1.0).asin();
    // sin(x) <= d / r on [pi - beta, 2 pi + beta] modulo 2 pi
    let (lo, hi) = (PI - beta - psi, TAU + beta - psi);
    let mut pieces = [(0.0, -1.0); 4];
    for (slot, k) in pieces.iter_mut().zip(-2..=1) {
        let shift = k as f64 * TAU;
        *slot = ((lo + shift).max(0.0), (hi + shift).min(PI));
    }
    let mut out = ThetaSet::default();
    for (l, h) in pieces {
        out.push(l, h);
    }
    out
}

/// Amplitudes `theta` for which the residual can lie in `[-eps, eps]` given
/// `h1 in [h1_lo, h1_hi]` and `h2 in [h2_lo, h2_hi]`; `a = n . v`.
///
/// Because `sin(theta)` and `1 - cos(theta)` are nonnegative on `[0, pi]`,
/// the residual is enclosed by the sinusoids built from the lower and from
/// the upper coefficients.
pub fn theta_set(a: f64, h1_lo: f64, h1_hi: f64, h2_lo: f64, h2_hi: f64, eps: f64) -> ThetaSet {
    let below = sublevel(a, h1_lo, h2_lo, eps);
    if below.is_empty() {
        return below;
    }
    let above = sublevel(-a, -h1_hi, -h2_hi, eps);
    below.intersect(&above)
}

/// [`theta_set`] as a normalized [`IntervalSet`].
pub fn theta_intervals(a: f64, h1_lo: f64, h1_hi: f64, h2_lo: f64, h2_hi: f64, eps: f64) -> IntervalSet {
    IntervalSet::from_intervals(theta_set(a, h1_lo, h1_hi, h2_lo, h2_hi, eps).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(a: f64, b: f64, c: f64, t: f64) -> f64 {
        a + b * t.sin() + c * (1.0 - t.cos())
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(theta_intervals(0.0, 0.0, 0.0, 0.0, 0.0, 0.1), IntervalSet::single(0.0, PI));
        assert!(theta_intervals(1.0, 0.0, 0.0, 0.0, 0.0, 0.5).is_empty());
    }

    #[test]
    fn quarter_turn() {
        // residual sin(theta): admissible near 0 and near pi
        let s = theta_intervals(0.0, 1.0, 1.0, 0.0, 0.0, 0.1);
        let a = 0.1f64.asin();
        assert_eq!(s.len(), 2);
        assert!((s.intervals()[0].hi - a).abs() < 1e-12);
        assert!((s.intervals()[1].lo - (PI - a)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn point_coefficients_match_grid(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64, eps in 0.001..0.3f64) {
            let s = theta_intervals(a, b, b, c, c, eps);
            let n = 100_000;
            for i in 0..=n {
                let t = PI * i as f64 / n as f64;
                let v = f(a, b, c, t);
                // skip grid points too close to the boundary to classify robustly
                if ((v.abs() - eps).abs()) < 1e-9 {
                    continue;
                }
                prop_assert_eq!(s.contains(t), v.abs() <= eps, "t = {}, f = {}", t, v);
            }
        }

        #[test]
        fn relaxed_set_contains_every_member(a in -1.0..1.0f64, b0 in -1.0..1.0f64, b1 in -1.0..1.0f64,
                                             c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, eps in 0.001..0.3f64,
                                             s in 0.0..1.0f64, r in 0.0..1.0f64) {
            let (bl, bh) = (b0.min(b1), b0.max(b1));
            let (cl, ch) = (c0.min(c1), c0.max(c1));
            let relaxed = theta_intervals(a, bl, bh, cl, ch, eps);
            let b = bl + s * (bh - bl);
            let c = cl + r * (ch - cl);
            let exact = theta_intervals(a, b, b, c, c, eps);
            for iv in exact.intervals() {
                for t in [iv.lo, iv.mid(), iv.hi] {
                    prop_assert!(relaxed.contains(t) || relaxed.intervals().iter().any(|x| (x.lo - t).abs() < 1e-12 || (x.hi - t).abs() < 1e-12));
                }
            }
        }
    }
}
