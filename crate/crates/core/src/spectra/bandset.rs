use crate::scalar::Real;

/// Finite union of disjoint closed-open frequency intervals `[low, high)`.
///
/// The interval list is kept normalized: sorted ascending, non-empty, and
/// with touching or overlapping intervals merged.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet<T> {
    intervals: Vec<(T, T)>,
}

impl<T: Real> Default for BandSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> BandSet<T> {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// Builds a set from arbitrary intervals. Degenerate intervals
    /// (`high <= low`) are dropped; overlapping ones are merged.
    pub fn new<I: IntoIterator<Item = (T, T)>>(intervals: I) -> Self {
        let mut raw: Vec<(T, T)> = intervals.into_iter().filter(|&(lo, hi)| hi > lo).collect();
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite band edges"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        Self { intervals: merged }
    }

    pub fn interval(low: T, high: T) -> Self {
        Self::new([(low, high)])
    }

    /// `[-half_width, half_width)`, the passband of an ideal low-pass filter.
    pub fn symmetric(half_width: T) -> Self {
        Self::interval(-half_width, half_width)
    }

    /// Interval `[low, high)` together with its mirror image `[-high, -low)`.
    pub fn mirrored_pair(low: T, high: T) -> Self {
        Self::new([(low, high), (-high, -low)])
    }

    pub fn intervals(&self) -> &[(T, T)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> T {
        self.intervals.iter().fold(T::zero(), |acc, &(lo, hi)| acc + (hi - lo))
    }

    pub fn contains(&self, f: T) -> bool {
        // first interval whose high edge is beyond f
        let idx = self.intervals.partition_point(|&(_, hi)| hi <= f);
        self.intervals.get(idx).is_some_and(|&(lo, _)| lo <= f)
    }

    pub fn lowest(&self) -> Option<T> {
        self.intervals.first().map(|iv| iv.0)
    }

    pub fn highest(&self) -> Option<T> {
        self.intervals.last().map(|iv| iv.1)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(lo, hi) in &self.intervals {
            let mut cursor = lo;
            for &(b0, b1) in &other.intervals {
                if b1 <= cursor {
                    continue;
                }
                if b0 >= hi {
                    break;
                }
                if b0 > cursor {
                    out.push((cursor, b0));
                }
                cursor = cursor.max(b1);
                if cursor >= hi {
                    break;
                }
            }
            if cursor < hi {
                out.push((cursor, hi));
            }
        }
        Self::new(out)
    }

    pub fn shifted(&self, delta: T) -> Self {
        Self {
            intervals: self.intervals.iter().map(|&(lo, hi)| (lo + delta, hi + delta)).collect(),
        }
    }

    pub fn clipped(&self, low: T, high: T) -> Self {
        self.intersection(&Self::interval(low, high))
    }

    /// Mirror image `{-f : f in self}`.
    pub fn negated(&self) -> Self {
        Self::new(self.intervals.iter().map(|&(lo, hi)| (-hi, -lo)))
    }

    /// True when `f in self <=> -f in self` up to `tol` on every edge.
    pub fn is_symmetric(&self, tol: T) -> bool {
        let mirror = self.negated();
        mirror.intervals.len() == self.intervals.len()
            && mirror
                .intervals
                .iter()
                .zip(&self.intervals)
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol)
    }

    /// Measure of the overlap with `other`.
    pub fn overlap(&self, other: &Self) -> T {
        self.intersection(other).measure()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_merges() {
        let b = BandSet::<f64>::new([(0.5, 0.7), (-0.2, 0.1), (0.1, 0.3), (0.6, 0.9), (1.0, 1.0)]);
        assert_eq!(b.intervals(), &[(-0.2, 0.3), (0.5, 0.9)]);
        assert!((b.measure() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn closed_open_membership() {
        let b = BandSet::interval(-0.25, 0.25);
        assert!(b.contains(-0.25));
        assert!(!b.contains(0.25));
        assert!(b.contains(0.0));
        assert!(!BandSet::<f64>::empty().contains(0.0));
    }

    #[test]
    fn set_algebra() {
        let a = BandSet::<f64>::new([(0.0, 1.0), (2.0, 3.0)]);
        let b = BandSet::new([(0.5, 2.5)]);
        assert_eq!(a.intersection(&b).intervals(), &[(0.5, 1.0), (2.0, 2.5)]);
        assert_eq!(a.difference(&b).intervals(), &[(0.0, 0.5), (2.5, 3.0)]);
        assert_eq!(a.union(&b).intervals(), &[(0.0, 3.0)]);
        assert!((a.overlap(&b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetry_check() {
        assert!(BandSet::mirrored_pair(0.3, 0.4).is_symmetric(1e-12));
        assert!(BandSet::symmetric(0.3).is_symmetric(0.0));
        assert!(!BandSet::interval(0.0, 0.3).is_symmetric(1e-12));
    }
}
