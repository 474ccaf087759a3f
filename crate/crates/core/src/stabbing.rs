//! Saturated interval stabbing: the exact solver for one-dimensional Sat-CM.
//!
//! Given closed intervals tagged with the sample that produced them, find the
//! stabbers `x` maximizing `sum_k sigma_k(#{intervals of k containing x})`.

use serde::{Deserialize, Serialize};

use crate::intervals::{Interval, IntervalSet};
use crate::saturation::WeightBank;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedInterval {
    pub lo: f64,
    pub hi: f64,
    pub sample: usize,
}

impl TaggedInterval {
    pub fn new(lo: f64, hi: f64, sample: usize) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}]");
        TaggedInterval { lo, hi, sample }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabResult {
    pub value: f64,
    /// Every maximal closed region attaining `value`, sorted and disjoint.
    pub regions: IntervalSet,
    /// Per-sample inlier counts at the midpoint of the first region.
    pub counts: Vec<usize>,
}

/// Relative plateau tolerance used to merge floating-point-equal optima.
pub const VALUE_TOL: f64 = 1e-12;

#[inline]
fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Reusable sweep buffers; one per thread keeps the bounding loop free of
/// allocations.
#[derive(Debug, Default, Clone)]
pub struct Stabber {
    events: Vec<u128>,
    counts: Vec<u32>,
    regions: Vec<Interval>,
}

const RIGHT: u32 = 1 << 31;

/// Sort key: the coordinate's bits mapped to an order-preserving integer in
/// the high word, the tagged sample in the low word.
#[inline]
fn event(x: f64, tag: u32) -> u128 {
    let b = x.to_bits();
    let ord = if b >> 63 == 1 { !b } else { b | 1 << 63 };
    (ord as u128) << 32 | tag as u128
}

#[inline]
fn coord(e: u128) -> f64 {
    let ord = (e >> 32) as u64;
    f64::from_bits(if ord >> 63 == 1 { ord & !(1 << 63) } else { !ord })
}

#[inline]
fn tag(e: u128) -> u32 {
    e as u32
}

impl Stabber {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs the sweep and returns the optimal value; the optimal regions are
    /// left in [`Stabber::regions`].
    pub fn sweep(&mut self, intervals: &[TaggedInterval], weights: &WeightBank) -> f64 {
        self.events.clear();
        self.regions.clear();
        if intervals.is_empty() {
            return 0.0;
        }
        self.counts.clear();
        self.counts.resize(weights.len(), 0);
        for iv in intervals {
            debug_assert!(iv.sample < weights.len() && iv.sample < RIGHT as usize);
            // adding 0.0 turns -0.0 into 0.0 so that sorting and grouping agree
            self.events.push(event(iv.lo + 0.0, iv.sample as u32));
            self.events.push(event(iv.hi + 0.0, iv.sample as u32 | RIGHT));
        }
        // left endpoints sort before right endpoints at equal coordinates
        self.events.sort_unstable();

        let mut best = f64::NEG_INFINITY;
        let mut v = 0.0;
        let n = self.events.len();
        let mut i = 0;
        while i < n {
            let x = coord(self.events[i]);
            while i < n && coord(self.events[i]) == x && tag(self.events[i]) & RIGHT == 0 {
                let k = tag(self.events[i]) as usize;
                self.counts[k] += 1;
                v += weights.table(k).weight(self.counts[k] as usize);
                i += 1;
            }
            self.offer(v, x, x, &mut best);
            while i < n && coord(self.events[i]) == x {
                let k = (tag(self.events[i]) & !RIGHT) as usize;
                v -= weights.table(k).weight(self.counts[k] as usize);
                self.counts[k] -= 1;
                i += 1;
            }
            if i < n {
                let next = coord(self.events[i]);
                self.offer(v, x, next, &mut best);
            }
        }
        best.max(0.0)
    }

    fn offer(&mut self, v: f64, lo: f64, hi: f64, best: &mut f64) {
        if *best == f64::NEG_INFINITY || (v > *best && !ties(v, *best)) {
            *best = v;
            self.regions.clear();
            self.regions.push(Interval::new(lo, hi));
        } else if ties(v, *best) {
            match self.regions.last_mut() {
                Some(last) if lo <= last.hi => last.hi = last.hi.max(hi),
                _ => self.regions.push(Interval::new(lo, hi)),
            }
        }
    }

    /// Optimal regions of the last sweep.
    pub fn regions(&self) -> &[Interval] {
        &self.regions
    }
}

/// Objective `sum_k sigma_k(N_k(x))` at a single stabber, by direct counting.
pub fn objective_at(intervals: &[TaggedInterval], weights: &WeightBank, x: f64) -> f64 {
    sample_counts(intervals, weights.len(), x)
        .iter()
        .enumerate()
        .map(|(k, &c)| weights.table(k).sigma(c))
        .sum()
}

fn sample_counts(intervals: &[TaggedInterval], n_samples: usize, x: f64) -> Vec<usize> {
    let mut counts = vec![0; n_samples];
    for iv in intervals {
        if iv.lo <= x && x <= iv.hi {
            counts[iv.sample] += 1;
        }
    }
    counts
}

/// Saturated interval stabbing: `O(M log M)` time for `M` intervals.
pub fn sat_stab(intervals: &[TaggedInterval], weights: &WeightBank) -> StabResult {
    let mut s = Stabber::new();
    let value = s.sweep(intervals, weights);
    let regions = IntervalSet::from_intervals(s.regions.clone());
    let counts = match regions.intervals().first() {
        Some(r) => sample_counts(intervals, weights.len(), r.mid()),
        None => vec![0; weights.len()],
    };
    StabResult {
        value,
        regions,
        counts,
    }
}
