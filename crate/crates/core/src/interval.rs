//! Closed intervals and finite unions of disjoint open intervals.

use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True if `self` lies in the interior of `outer`.
    pub fn inside_interior_of(&self, outer: &Interval) -> bool {
        outer.lo < self.lo && self.hi < outer.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Finite union of disjoint open intervals, kept sorted with strictly positive
/// gaps. Touching or overlapping pieces are merged on construction, so the
/// measure is the plain sum of lengths.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_interval(i: Interval) -> Self {
        Self::new(vec![(i.lo, i.hi)])
    }

    /// Normalizes arbitrary `(lo, hi)` pairs. Empty pieces are dropped.
    pub fn new(mut pieces: Vec<(f64, f64)>) -> Self {
        pieces.retain(|&(lo, hi)| lo < hi);
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (lo, hi) in pieces {
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        // a fold from +0.0; an empty f64 `sum` is -0.0
        self.intervals.iter().fold(0.0, |acc, (lo, hi)| acc + (hi - lo))
    }

    pub fn contains(&self, x: f64) -> bool {
        let p = self.intervals.partition_point(|iv| iv.0 < x);
        p > 0 && x < self.intervals[p - 1].1
    }

    /// Intersection with the open interval `(clip.lo, clip.hi)`.
    pub fn clip(&self, clip: &Interval) -> Self {
        Self::new(
            self.intervals
                .iter()
                .filter_map(|&(lo, hi)| {
                    let (a, b) = (lo.max(clip.lo), hi.min(clip.hi));
                    (a < b).then_some((a, b))
                })
                .collect(),
        )
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::new(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::new(out)
    }

    /// `self \ other`, up to the finitely many endpoints of `other`.
    pub fn difference(&self, other: &Self) -> Self {
        let b = &other.intervals;
        let mut out = Vec::new();
        let mut j = 0;
        for &(lo, hi) in &self.intervals {
            let mut cur = lo;
            while j < b.len() && b[j].1 <= cur {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].0 < hi {
                if b[k].0 > cur {
                    out.push((cur, b[k].0));
                }
                cur = cur.max(b[k].1);
                if cur >= hi {
                    break;
                }
                k += 1;
            }
            if cur < hi {
                out.push((cur, hi));
            }
        }
        Self::new(out)
    }

    /// `I \ self` as a union of open intervals.
    pub fn complement_in(&self, i: &Interval) -> Self {
        IntervalUnion::from_interval(*i).difference(self)
    }

    /// Inclusion up to a set of measure zero.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.difference(other).measure() == 0.0
    }

    /// Cumulative measure function `x -> mes(self ∩ (-inf, x))`, evaluated with
    /// precomputed prefix sums.
    pub fn cumulative(&self) -> CumulativeMeasure<'_> {
        let mut prefix = Vec::with_capacity(self.intervals.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for (lo, hi) in &self.intervals {
            acc += hi - lo;
            prefix.push(acc);
        }
        CumulativeMeasure {
            set: self,
            prefix,
        }
    }
}

/// Piecewise-linear map `x -> mes(B ∩ (-inf, x))`.
pub struct CumulativeMeasure<'a> {
    set: &'a IntervalUnion,
    prefix: Vec<f64>,
}

impl CumulativeMeasure<'_> {
    pub fn at(&self, x: f64) -> f64 {
        let ivs = &self.set.intervals;
        let p = ivs.partition_point(|iv| iv.0 < x);
        if p == 0 {
            return 0.0;
        }
        let (lo, hi) = ivs[p - 1];
        self.prefix[p - 1] + (x.min(hi) - lo)
    }
}
