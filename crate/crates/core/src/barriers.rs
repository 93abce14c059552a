//! Target sets in the (running max, running min) plane and on the doubled
//! axis.
//!
//! A [`VhBarrier`] is a union of v-lines `{x} × [depth, x]`, which stop a
//! path reaching `x` as a new maximum, and h-lines `[y, right] × {y}` with a
//! tail `{max = y, min ≤ y}`, which stop a path reaching `y` as a new minimum
//! while its maximum is still at most `right`, and every path climbing to `y`
//! as a new maximum.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::BarrierError;

/// Vertical segment `{max} × [depth, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VLine {
    pub max: f64,
    pub depth: f64,
}

/// Horizontal segment `[min, right] × {min}` plus its tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HLine {
    pub min: f64,
    pub right: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VhDoc {
    #[serde(default)]
    v_lines: Vec<VLine>,
    #[serde(default)]
    h_lines: Vec<HLine>,
}

/// Canonical vh-barrier: lines sorted by level, at most one line of each
/// kind per level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "VhDoc", into = "VhDoc")]
pub struct VhBarrier {
    v_lines: Vec<VLine>,
    h_lines: Vec<HLine>,
}

impl TryFrom<VhDoc> for VhBarrier {
    type Error = BarrierError;

    fn try_from(doc: VhDoc) -> Result<Self, Self::Error> {
        VhBarrier::new(doc.v_lines, doc.h_lines)
    }
}

impl From<VhBarrier> for VhDoc {
    fn from(b: VhBarrier) -> Self {
        VhDoc {
            v_lines: b.v_lines,
            h_lines: b.h_lines,
        }
    }
}

/// Hit-test convention for segment endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HitConvention {
    Closed,
    Open,
}

fn check_finite(x: f64) -> Result<(), BarrierError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(BarrierError::NonFinite(x))
    }
}

impl VhBarrier {
    /// Validates and canonicalizes: lines at the same level are merged
    /// (deepest depth, largest right end), and a v-line sharing its level
    /// with an h-line is dropped since the h-line's tail contains it.
    pub fn new(
        v_lines: impl IntoIterator<Item = VLine>,
        h_lines: impl IntoIterator<Item = HLine>,
    ) -> Result<Self, BarrierError> {
        let mut v: Vec<VLine> = Vec::new();
        for l in v_lines {
            check_finite(l.max)?;
            check_finite(l.depth)?;
            if l.depth > l.max {
                return Err(BarrierError::DepthAboveLevel {
                    level: l.max,
                    depth: l.depth,
                });
            }
            v.push(l);
        }
        let mut h: Vec<HLine> = Vec::new();
        for l in h_lines {
            check_finite(l.min)?;
            check_finite(l.right)?;
            if l.right < l.min {
                return Err(BarrierError::RightBelowLevel {
                    level: l.min,
                    right: l.right,
                });
            }
            h.push(l);
        }
        v.sort_by(|a, b| a.max.total_cmp(&b.max));
        v.dedup_by(|next, kept| {
            let same = next.max == kept.max;
            if same {
                kept.depth = kept.depth.min(next.depth);
            }
            same
        });
        h.sort_by(|a, b| a.min.total_cmp(&b.min));
        h.dedup_by(|next, kept| {
            let same = next.min == kept.min;
            if same {
                kept.right = kept.right.max(next.right);
            }
            same
        });
        v.retain(|l| h.binary_search_by(|x| x.min.total_cmp(&l.max)).is_err());
        Ok(VhBarrier { v_lines: v, h_lines: h })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn v_lines(&self) -> &[VLine] {
        &self.v_lines
    }

    pub fn h_lines(&self) -> &[HLine] {
        &self.h_lines
    }

    pub fn is_empty(&self) -> bool {
        self.v_lines.is_empty() && self.h_lines.is_empty()
    }

    pub fn v_line_at(&self, level: f64) -> Option<VLine> {
        self.v_lines.iter().copied().find(|l| l.max == level)
    }

    pub fn h_line_at(&self, level: f64) -> Option<HLine> {
        self.h_lines.iter().copied().find(|l| l.min == level)
    }

    /// Every coordinate appearing in the barrier.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * (self.v_lines.len() + self.h_lines.len()));
        for l in &self.v_lines {
            out.extend([l.max, l.depth]);
        }
        for l in &self.h_lines {
            out.extend([l.min, l.right]);
        }
        out
    }

    /// Applies `f` to every coordinate, e.g. to snap onto a grid.
    pub fn map_coordinates(&self, f: impl Fn(f64) -> f64) -> VhBarrier {
        VhBarrier::new(
            self.v_lines.iter().map(|l| VLine {
                max: f(l.max),
                depth: f(l.depth).min(f(l.max)),
            }),
            self.h_lines.iter().map(|l| HLine {
                min: f(l.min),
                right: f(l.right).max(f(l.min)),
            }),
        )
        .expect("monotone coordinate maps keep a barrier well formed")
    }

    /// Closed point-in-set test for `(max, min)`, tails included.
    pub fn contains(&self, max: f64, min: f64) -> bool {
        self.v_lines
            .iter()
            .any(|l| l.max == max && l.depth <= min && min <= l.max)
            || self
                .h_lines
                .iter()
                .any(|l| (l.min == min && l.min <= max && max <= l.right) || (l.min == max && min <= l.min))
    }

    /// Does a path whose maximum has just reached `level`, with running
    /// minimum `min`, lie in the barrier?
    pub fn hit_on_new_max(&self, level: f64, min: f64, convention: HitConvention) -> bool {
        match convention {
            HitConvention::Closed => {
                self.v_line_at(level).is_some_and(|l| l.depth <= min) || self.h_line_at(level).is_some()
            }
            HitConvention::Open => {
                self.v_line_at(level).is_some_and(|l| l.depth < min && min < level)
                    || self.h_line_at(level).is_some_and(|_| min < level)
            }
        }
    }

    /// Does a path whose minimum has just reached `level`, with running
    /// maximum `max`, lie in the barrier?
    pub fn hit_on_new_min(&self, level: f64, max: f64, convention: HitConvention) -> bool {
        self.h_line_at(level).is_some_and(|l| match convention {
            HitConvention::Closed => max <= l.right,
            HitConvention::Open => level < max && max < l.right,
        })
    }

    /// Point-set union; coinciding levels keep the longer line.
    pub fn union(&self, other: &VhBarrier) -> VhBarrier {
        VhBarrier::new(
            self.v_lines.iter().chain(&other.v_lines).copied(),
            self.h_lines.iter().chain(&other.h_lines).copied(),
        )
        .expect("union of well-formed barriers is well formed")
    }

    /// Doubled-axis image: a v-line `(x, y)` becomes `{d ≤_D Left(y)}` at
    /// level `x`, an h-line `(y, x)` becomes `{d ≤_D Right(x)}` at level `y`.
    pub fn to_dbarrier(&self) -> DBarrier {
        let mut levels: Vec<(f64, DPoint)> = self
            .v_lines
            .iter()
            .map(|l| (l.max, DPoint::left(l.depth)))
            .chain(self.h_lines.iter().map(|l| (l.min, DPoint::right(l.right))))
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(dpoint_cmp(&b.1, &a.1)));
        levels.dedup_by(|next, kept| next.0 == kept.0);
        DBarrier { levels }
    }

    /// Checks that v-line depths and h-line right ends are non-increasing
    /// in the line level, restricted to v-lines above `start` and h-lines
    /// below it.
    pub fn structure_report(&self, start: f64) -> StructureReport {
        let v: Vec<VLine> = self.v_lines.iter().copied().filter(|l| l.max > start).collect();
        let h: Vec<HLine> = self.h_lines.iter().copied().filter(|l| l.min < start).collect();
        let v_violations = v
            .windows(2)
            .filter(|w| w[1].depth > w[0].depth)
            .map(|w| (w[0].max, w[1].max))
            .collect();
        let h_violations = h
            .windows(2)
            .filter(|w| w[1].right > w[0].right)
            .map(|w| (w[0].min, w[1].min))
            .collect();
        StructureReport {
            v_violations,
            h_violations,
        }
    }
}

/// Pairs of consecutive line levels breaking boundary monotonicity.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StructureReport {
    pub v_violations: Vec<(f64, f64)>,
    pub h_violations: Vec<(f64, f64)>,
}

impl StructureReport {
    pub fn is_monotone(&self) -> bool {
        self.v_violations.is_empty() && self.h_violations.is_empty()
    }
}

/// Closed point-in-set test, as a free function.
pub fn vh_hit(b: &VhBarrier, max: f64, min: f64) -> bool {
    b.contains(max, min)
}

/// Point-set union, as a free function.
pub fn union(a: &VhBarrier, b: &VhBarrier) -> VhBarrier {
    a.union(b)
}

/// Half of the doubled axis: `Left` is the flipped copy, `Right` the reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Point of the doubled axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DPoint {
    pub side: Side,
    pub value: f64,
}

impl DPoint {
    pub fn left(value: f64) -> Self {
        DPoint {
            side: Side::Left,
            value,
        }
    }

    pub fn right(value: f64) -> Self {
        DPoint {
            side: Side::Right,
            value,
        }
    }
}

/// The order `≤_D`: the whole left half precedes the right half, the left
/// half runs backwards.
pub fn dpoint_cmp(a: &DPoint, b: &DPoint) -> Ordering {
    match (a.side, b.side) {
        (Side::Left, Side::Right) => Ordering::Less,
        (Side::Right, Side::Left) => Ordering::Greater,
        (Side::Left, Side::Left) => b.value.total_cmp(&a.value),
        (Side::Right, Side::Right) => a.value.total_cmp(&b.value),
    }
}

/// Inverse barrier on `D × R`: at each level the region is `{d ≤_D extent}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DBarrier {
    levels: Vec<(f64, DPoint)>,
}

impl DBarrier {
    pub fn levels(&self) -> &[(f64, DPoint)] {
        &self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn extent_at(&self, level: f64) -> Option<DPoint> {
        self.levels
            .binary_search_by(|(l, _)| l.total_cmp(&level))
            .ok()
            .map(|i| self.levels[i].1)
    }

    /// Closed membership `d ≤_D extent(level)`.
    pub fn contains(&self, d: DPoint, level: f64) -> bool {
        self.extent_at(level)
            .is_some_and(|e| dpoint_cmp(&d, &e) != Ordering::Greater)
    }

    /// Strict membership `d <_D extent(level)`.
    pub fn contains_strictly(&self, d: DPoint, level: f64) -> bool {
        self.extent_at(level)
            .is_some_and(|e| dpoint_cmp(&d, &e) == Ordering::Less)
    }

    pub fn map_coordinates(&self, f: impl Fn(f64) -> f64) -> DBarrier {
        let mut levels: Vec<(f64, DPoint)> = self
            .levels
            .iter()
            .map(|&(l, d)| {
                (
                    f(l),
                    DPoint {
                        side: d.side,
                        value: f(d.value),
                    },
                )
            })
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(dpoint_cmp(&b.1, &a.1)));
        levels.dedup_by(|next, kept| next.0 == kept.0);
        DBarrier { levels }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        self.levels.iter().flat_map(|&(l, d)| [l, d.value]).collect()
    }
}

/// Free-function form of [`VhBarrier::to_dbarrier`].
pub fn to_dbarrier(b: &VhBarrier) -> DBarrier {
    b.to_dbarrier()
}

/// Orientation of a time-space barrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSpaceKind {
    /// `{(t, x) : t ≥ threshold(x)}`
    Root,
    /// `{(t, x) : t ≤ threshold(x)}`
    Inverse,
}

/// Per-level time threshold; `None` stands for `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelThreshold {
    pub level: f64,
    pub threshold: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSpaceDoc {
    kind: TimeSpaceKind,
    levels: Vec<LevelThreshold>,
}

/// Barrier in time-space, defined on finitely many levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeSpaceDoc", into = "TimeSpaceDoc")]
pub struct TimeSpaceBarrier {
    kind: TimeSpaceKind,
    levels: Vec<LevelThreshold>,
}

impl TryFrom<TimeSpaceDoc> for TimeSpaceBarrier {
    type Error = BarrierError;

    fn try_from(doc: TimeSpaceDoc) -> Result<Self, Self::Error> {
        TimeSpaceBarrier::new(doc.kind, doc.levels)
    }
}

impl From<TimeSpaceBarrier> for TimeSpaceDoc {
    fn from(b: TimeSpaceBarrier) -> Self {
        TimeSpaceDoc {
            kind: b.kind,
            levels: b.levels,
        }
    }
}

impl TimeSpaceBarrier {
    pub fn new(kind: TimeSpaceKind, mut levels: Vec<LevelThreshold>) -> Result<Self, BarrierError> {
        for l in &levels {
            check_finite(l.level)?;
            if let Some(t) = l.threshold {
                if t.is_nan() || t < 0.0 {
                    return Err(BarrierError::InvalidThreshold(t));
                }
            }
        }
        levels.sort_by(|a, b| a.level.total_cmp(&b.level));
        if let Some(w) = levels.windows(2).find(|w| w[0].level == w[1].level) {
            return Err(BarrierError::DuplicateLevel(w[0].level));
        }
        Ok(TimeSpaceBarrier { kind, levels })
    }

    pub fn kind(&self) -> TimeSpaceKind {
        self.kind
    }

    pub fn levels(&self) -> &[LevelThreshold] {
        &self.levels
    }

    /// Threshold at `level`: `Some(+∞)` for a `None` entry, `None` when the
    /// level carries no barrier.
    pub fn threshold_at(&self, level: f64) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map(|l| l.threshold.unwrap_or(f64::INFINITY))
    }

    /// Is `(time, level)` inside the region?
    pub fn contains(&self, time: f64, level: f64) -> bool {
        self.threshold_at(level).is_some_and(|t| match self.kind {
            TimeSpaceKind::Root => time >= t,
            TimeSpaceKind::Inverse => time <= t,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(max: f64, depth: f64) -> VLine {
        VLine { max, depth }
    }

    fn h(min: f64, right: f64) -> HLine {
        HLine { min, right }
    }

    fn barrier(vs: &[(f64, f64)], hs: &[(f64, f64)]) -> VhBarrier {
        VhBarrier::new(vs.iter().map(|&(a, b)| v(a, b)), hs.iter().map(|&(a, b)| h(a, b))).unwrap()
    }

    #[test]
    fn point_hits() {
        assert!(vh_hit(&barrier(&[(1.0, -1.0)], &[]), 1.0, 0.0));
        let b = barrier(&[], &[(-1.0, 1.0)]);
        assert!(vh_hit(&b, 0.5, -1.0));
        assert!(!vh_hit(&b, 2.0, -0.5));
        assert!(vh_hit(&b, -1.0, -3.0), "tail");
        assert!(!vh_hit(&VhBarrier::empty(), 0.0, 0.0));
    }

    #[test]
    fn validation() {
        assert!(VhBarrier::new([v(0.0, 1.0)], []).is_err());
        assert!(VhBarrier::new([], [h(1.0, 0.0)]).is_err());
        assert!(VhBarrier::new([v(f64::NAN, 1.0)], []).is_err());
        let doc = r#"{"v_lines": [{"max": 1, "depth": -1}, {"max": 1, "depth": -2}], "h_lines": []}"#;
        let b: VhBarrier = serde_json::from_str(doc).unwrap();
        assert_eq!(b.v_lines(), &[v(1.0, -2.0)]);
        let back: VhBarrier = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn covered_v_lines_are_dropped() {
        let b = barrier(&[(0.0, -2.0), (1.0, -1.0)], &[(0.0, 0.5)]);
        assert_eq!(b.v_lines(), &[v(1.0, -1.0)]);
        assert!(b.contains(0.0, -2.0));
        assert_eq!(b.coordinates().len(), b.to_dbarrier().coordinates().len());
    }

    #[test]
    fn union_examples() {
        let r = barrier(&[(1.0, -1.0), (2.0, -3.0)], &[(-1.0, 1.0)]);
        assert_eq!(union(&r, &r), r);
        assert_eq!(union(&VhBarrier::empty(), &r), r);
        let u = union(&barrier(&[(1.0, -1.0)], &[]), &barrier(&[(1.0, -2.0)], &[]));
        assert_eq!(u, barrier(&[(1.0, -2.0)], &[]));
    }

    #[test]
    fn dbarrier_examples() {
        let d = barrier(&[(1.0, -1.0)], &[]).to_dbarrier();
        assert_eq!(d.levels(), &[(1.0, DPoint::left(-1.0))]);
        let d = barrier(&[], &[(-1.0, 1.0)]).to_dbarrier();
        assert_eq!(d.levels(), &[(-1.0, DPoint::right(1.0))]);
        assert!(VhBarrier::empty().to_dbarrier().is_empty());
        // a v-line and an h-line at one level merge to the larger extent
        let d = barrier(&[(0.0, -2.0)], &[(0.0, 1.0)]).to_dbarrier();
        assert_eq!(d.levels(), &[(0.0, DPoint::right(1.0))]);
    }

    #[test]
    fn dpoint_order_examples() {
        assert_eq!(dpoint_cmp(&DPoint::left(1.0), &DPoint::left(0.0)), Ordering::Less);
        assert_eq!(dpoint_cmp(&DPoint::left(-5.0), &DPoint::right(-5.0)), Ordering::Less);
        assert_eq!(dpoint_cmp(&DPoint::right(0.0), &DPoint::right(1.0)), Ordering::Less);
    }

    #[test]
    fn conventions_agree_off_grid() {
        let b = barrier(&[(1.0, -1.0)], &[(-1.0, 1.0)]);
        for probe in [-1.5, -0.5, 0.5] {
            assert_eq!(
                b.hit_on_new_max(1.0, probe, HitConvention::Closed),
                b.hit_on_new_max(1.0, probe, HitConvention::Open)
            );
            assert_eq!(
                b.hit_on_new_min(-1.0, probe + 1.0, HitConvention::Closed),
                b.hit_on_new_min(-1.0, probe + 1.0, HitConvention::Open)
            );
        }
        // they differ exactly on segment endpoints
        assert!(b.hit_on_new_max(1.0, -1.0, HitConvention::Closed));
        assert!(!b.hit_on_new_max(1.0, -1.0, HitConvention::Open));
    }

    #[test]
    fn structure_report_flags_increasing_depths() {
        let good = barrier(&[(1.0, -1.0), (2.0, -2.0)], &[(-2.0, 2.0), (-1.0, 1.0)]);
        assert!(good.structure_report(0.0).is_monotone());
        let bad = barrier(&[(1.0, -2.0), (2.0, -1.0)], &[]);
        assert_eq!(bad.structure_report(0.0).v_violations, vec![(1.0, 2.0)]);
    }

    #[test]
    fn time_space_regions() {
        let lv = |level, threshold| LevelThreshold { level, threshold };
        let root = TimeSpaceBarrier::new(TimeSpaceKind::Root, vec![lv(1.0, Some(0.5)), lv(-1.0, None)]).unwrap();
        assert!(root.contains(0.5, 1.0));
        assert!(!root.contains(0.4, 1.0));
        assert!(!root.contains(100.0, -1.0));
        assert!(!root.contains(1.0, 0.0));
        let rost = TimeSpaceBarrier::new(TimeSpaceKind::Inverse, vec![lv(0.0, None)]).unwrap();
        assert!(rost.contains(1e9, 0.0));
        assert!(TimeSpaceBarrier::new(TimeSpaceKind::Root, vec![lv(0.0, Some(-1.0))]).is_err());
        assert!(TimeSpaceBarrier::new(TimeSpaceKind::Root, vec![lv(0.0, None), lv(0.0, None)]).is_err());
        let json = serde_json::to_string(&root).unwrap();
        assert_eq!(serde_json::from_str::<TimeSpaceBarrier>(&json).unwrap(), root);
    }
}
