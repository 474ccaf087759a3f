//! Best-first branch and bound over two-dimensional rectangles.
//!
//! Both solvers branch on two parameters and solve the third exactly, so the
//! driver only needs rectangles, a bounding callback and a stopping rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        debug_assert!(lo[0] <= hi[0] && lo[1] <= hi[1]);
        Rect { lo, hi }
    }

    pub fn width(&self) -> f64 {
        (self.hi[0] - self.lo[0]).max(self.hi[1] - self.lo[1])
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    /// The four quadrants around the center.
    pub fn split(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect::new(self.lo, c),
            Rect::new([self.lo[0], c[1]], [c[0], self.hi[1]]),
            Rect::new([c[0], self.lo[1]], [self.hi[0], c[1]]),
            Rect::new(c, self.hi),
        ]
    }
}

/// Result of bounding one rectangle.
#[derive(Debug, Clone)]
pub struct Evaluated<S, P> {
    /// Upper bound of the objective over the rectangle.
    pub upper: f64,
    /// An objective value attained inside the rectangle.
    pub lower: f64,
    /// State handed to the children (for example the associations that can
    /// still be inliers).
    pub state: S,
    /// Data describing where `lower` is attained.
    pub payload: P,
}

pub trait Bounder {
    type State;
    type Payload;

    fn bound(&mut self, rect: &Rect, parent: &Self::State) -> Evaluated<Self::State, Self::Payload>;

    /// Called with the best value found so far before children are bounded.
    /// A rectangle whose upper bound falls more than the gap below it is
    /// discarded, so its `lower` may then be reported as `-inf`.
    fn incumbent(&mut self, _best: f64) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    /// Absolute objective gap under which a rectangle is not split further;
    /// values within `gap` of the optimum count as ties.
    pub gap: f64,
    /// Rectangles narrower than this are not split.
    pub min_width: f64,
    /// Cap on bound evaluations.
    pub max_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct Leaf<P> {
    pub rect: Rect,
    pub lower: f64,
    pub upper: f64,
    pub payload: P,
}

#[derive(Debug, Clone)]
pub struct BnbOutcome<P> {
    /// Best attained value.
    pub value: f64,
    /// Largest upper bound among unresolved rectangles at exit; never below
    /// `value`.
    pub upper: f64,
    /// Resolved rectangles whose attained value ties `value`, sorted by
    /// decreasing value and then by coordinates.
    pub optima: Vec<Leaf<P>>,
    /// False when the node cap stopped the search early.
    pub certified: bool,
    /// Number of bound evaluations.
    pub nodes: usize,
}

struct Queued<S, P> {
    rect: Rect,
    eval: Evaluated<S, P>,
}

fn lex(a: &Rect, b: &Rect) -> Ordering {
    a.lo[0]
        .total_cmp(&b.lo[0])
        .then(a.lo[1].total_cmp(&b.lo[1]))
        .then(a.hi[0].total_cmp(&b.hi[0]))
        .then(a.hi[1].total_cmp(&b.hi[1]))
}

impl<S, P> PartialEq for Queued<S, P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S, P> Eq for Queued<S, P> {}

impl<S, P> PartialOrd for Queued<S, P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S, P> Ord for Queued<S, P> {
    // max-heap: larger upper bound first, then wider, then lexicographically smaller
    fn cmp(&self, other: &Self) -> Ordering {
        self.eval
            .upper
            .total_cmp(&other.eval.upper)
            .then(self.rect.width().total_cmp(&other.rect.width()))
            .then(lex(&other.rect, &self.rect))
    }
}

/// Runs best-first branch and bound from `root`.
///
/// A popped rectangle becomes a leaf once its bounds agree within `gap` or it
/// is narrower than `min_width`; the search ends when no queued rectangle can
/// tie the best value. Every rectangle that could still hold a tie is
/// resolved, so the returned optima do not depend on evaluation order.
pub fn branch_and_bound<B: Bounder>(
    bounder: &mut B,
    root: Rect,
    root_state: &B::State,
    cfg: &BnbConfig,
) -> BnbOutcome<B::Payload> {
    let first = bounder.bound(&root, root_state);
    let mut nodes = 1;
    let mut best = first.lower;
    let mut heap = BinaryHeap::new();
    heap.push(Queued { rect: root, eval: first });
    let mut leaves: Vec<Leaf<B::Payload>> = Vec::new();
    let mut certified = true;
    let mut open_upper = best;

    while let Some(node) = heap.pop() {
        if node.eval.upper < best - cfg.gap {
            break;
        }
        let Queued { rect, eval } = node;
        if eval.upper - eval.lower <= cfg.gap || rect.width() <= cfg.min_width {
            open_upper = open_upper.max(eval.upper);
            if eval.lower >= best - cfg.gap {
                leaves.push(Leaf {
                    rect,
                    lower: eval.lower,
                    upper: eval.upper,
                    payload: eval.payload,
                });
            }
            continue;
        }
        if nodes + 4 > cfg.max_nodes {
            certified = false;
            open_upper = open_upper.max(eval.upper);
            leaves.push(Leaf {
                rect,
                lower: eval.lower,
                upper: eval.upper,
                payload: eval.payload,
            });
            for rest in heap.drain() {
                open_upper = open_upper.max(rest.eval.upper);
                leaves.push(Leaf {
                    rect: rest.rect,
                    lower: rest.eval.lower,
                    upper: rest.eval.upper,
                    payload: rest.eval.payload,
                });
            }
            break;
        }
        for child in rect.split() {
            bounder.incumbent(best);
            let mut ev = bounder.bound(&child, &eval.state);
            nodes += 1;
            // a child cannot beat its parent's bound
            ev.upper = ev.upper.min(eval.upper).max(ev.lower);
            best = best.max(ev.lower);
            if ev.upper >= best - cfg.gap {
                heap.push(Queued { rect: child, eval: ev });
            }
        }
    }

    leaves.retain(|l| l.lower >= best - cfg.gap);
    leaves.sort_by(|a, b| b.lower.total_cmp(&a.lower).then(lex(&a.rect, &b.rect)));
    BnbOutcome {
        value: best,
        upper: open_upper.max(best),
        optima: leaves,
        certified,
        nodes,
    }
}
