//! Closed intervals and normalized interval sets on a 1-D parameter domain.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// A sorted union of disjoint closed intervals. Touching intervals are
/// merged, so consecutive members are separated by a gap of positive width.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMode {
    Union,
    Intersection,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            IntervalSet {
                intervals: vec![Interval::new(lo, hi)],
            }
        } else {
            IntervalSet::empty()
        }
    }

    /// Normalizes an arbitrary list; inverted pairs are dropped.
    pub fn from_intervals(mut v: Vec<Interval>) -> Self {
        v.retain(|i| i.lo <= i.hi);
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match out.last_mut() {
                Some(last) if i.lo <= last.hi => last.hi = last.hi.max(i.hi),
                _ => out.push(i),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        // sets are tiny in practice; a linear scan beats binary search here
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        merge_interval_sets(self, other, MergeMode::Union)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        merge_interval_sets(self, other, MergeMode::Intersection)
    }

    /// Restriction to `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> IntervalSet {
        self.intersection(&IntervalSet::single(lo, hi))
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        IntervalSet::from_intervals(iter.into_iter().collect())
    }
}

/// Union or intersection of two normalized sets.
pub fn merge_interval_sets(a: &IntervalSet, b: &IntervalSet, mode: MergeMode) -> IntervalSet {
    match mode {
        MergeMode::Union => {
            let mut v = Vec::with_capacity(a.len() + b.len());
            v.extend_from_slice(&a.intervals);
            v.extend_from_slice(&b.intervals);
            IntervalSet::from_intervals(v)
        }
        MergeMode::Intersection => {
            let (x, y) = (&a.intervals, &b.intervals);
            let (mut i, mut j) = (0, 0);
            let mut out = Vec::new();
            while i < x.len() && j < y.len() {
                let lo = x[i].lo.max(y[j].lo);
                let hi = x[i].hi.min(y[j].hi);
                if lo <= hi {
                    out.push(Interval::new(lo, hi));
                }
                if x[i].hi < y[j].hi {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            // members of a normalized set never touch, so neither do the pieces
            IntervalSet { intervals: out }
        }
    }
}
