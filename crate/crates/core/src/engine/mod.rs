//! Exact stopped laws for rules that act on the running extrema.
//!
//! Between two consecutive extremum events a Brownian path only needs to
//! know which of two levels it reaches first, so the joint law of
//! `(B_τ, max, min)` follows from a finite dynamic program over pairs of
//! grid levels, with gambler's-ruin transition probabilities.

mod law;
pub mod mc;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use law::{JointAtom, StoppedLaw};

use crate::barriers::{DBarrier, DPoint, HitConvention, VhBarrier};
use crate::error::EngineError;
use crate::measures::{compensated_sum, DiscreteMeasure};

/// Levels closer than this (relative to their magnitude) are identified.
pub const GRID_TOL: f64 = 1e-12;

/// Tolerance for the final mass balance.
pub const MASS_LEAK_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GRID_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Sorted, deduplicated set of levels on which every extremum event and
/// every stop happens.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalGrid {
    levels: Vec<f64>,
}

impl CriticalGrid {
    /// Builds the grid. Values within [`GRID_TOL`] collapse to one level,
    /// represented by an anchor when one is present.
    pub fn new(anchors: impl IntoIterator<Item = f64>, others: impl IntoIterator<Item = f64>) -> Self {
        let mut all: Vec<(f64, bool)> = anchors
            .into_iter()
            .map(|x| (x, true))
            .chain(others.into_iter().map(|x| (x, false)))
            .filter(|(x, _)| x.is_finite())
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<f64> = Vec::with_capacity(all.len());
        let mut group_start = f64::NAN;
        let mut anchored = false;
        for (x, anchor) in all {
            if levels.last().is_some() && close(group_start, x) {
                if anchor && !anchored {
                    *levels.last_mut().expect("non-empty") = x;
                    anchored = true;
                }
            } else {
                levels.push(x);
                group_start = x;
                anchored = anchor;
            }
        }
        CriticalGrid { levels }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.levels.partition_point(|&l| l < x);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .find(|&j| j < self.levels.len() && close(self.levels[j], x))
    }

    /// The grid level within tolerance of `x`, or `x` itself.
    pub fn snap(&self, x: f64) -> f64 {
        self.index_of(x).map_or(x, |i| self.levels[i])
    }
}

/// Gambler's-ruin kernel for Brownian motion started at `x` inside `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSplit {
    pub p_down: f64,
    pub p_up: f64,
    pub e_time: f64,
}

/// Exit probabilities and expected exit time of `(a, b)` from `x`.
///
/// # Panics
///
/// Panics if `a >= b`.
pub fn exit_split(x: f64, a: f64, b: f64) -> ExitSplit {
    assert!(a < b, "degenerate exit interval ({a}, {b})");
    let width = b - a;
    ExitSplit {
        p_down: (b - x) / width,
        p_up: (x - a) / width,
        e_time: (x - a) * (b - x),
    }
}

/// What just happened to the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Start,
    NewMax,
    NewMin,
    Interior,
}

/// Position together with running extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaState {
    pub pos: f64,
    pub max: f64,
    pub min: f64,
    pub event: Event,
}

/// Open interval known to contain the running extremum opposite to the
/// current event. `hi` (for a minimum) or `lo` (for a maximum) is the
/// recorded grid level; the other end is the neighbouring grid level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    /// A point strictly inside the band.
    pub fn probe(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (false, true) => self.hi - 1.0,
            (true, false) => self.lo + 1.0,
            (false, false) => 0.0,
        }
    }
}

/// A stopping rule that only looks at extremum events and, optionally, a
/// floor below the current position.
pub trait ExtremaRule {
    /// Levels at which the rule can change its behaviour.
    fn coordinates(&self) -> Vec<f64>;

    /// Stop at time zero when starting at `x` (after the atom rule).
    fn stop_at_start(&self, _x: f64) -> bool {
        false
    }

    /// Stop when the maximum reaches `level` with the minimum in `min`.
    fn stop_at_new_max(&self, level: f64, min: Band) -> bool;

    /// Stop when the minimum reaches `level` with the maximum in `max`.
    fn stop_at_new_min(&self, level: f64, max: Band) -> bool;

    /// Level below the current position at which the path stops, given the
    /// recorded maximum.
    fn floor(&self, _max: f64) -> Option<f64> {
        None
    }
}

impl<R: ExtremaRule + ?Sized> ExtremaRule for &R {
    fn coordinates(&self) -> Vec<f64> {
        (**self).coordinates()
    }

    fn stop_at_start(&self, x: f64) -> bool {
        (**self).stop_at_start(x)
    }

    fn stop_at_new_max(&self, level: f64, min: Band) -> bool {
        (**self).stop_at_new_max(level, min)
    }

    fn stop_at_new_min(&self, level: f64, max: Band) -> bool {
        (**self).stop_at_new_min(level, max)
    }

    fn floor(&self, max: f64) -> Option<f64> {
        (**self).floor(max)
    }
}

/// Rules whose coordinates can be moved onto grid levels.
pub trait Snap {
    fn snapped(&self, grid: &CriticalGrid) -> Self;
}

/// Hitting time of a vh-barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct VhRule {
    pub barrier: VhBarrier,
    pub convention: HitConvention,
}

impl VhRule {
    pub fn new(barrier: VhBarrier) -> Self {
        VhRule {
            barrier,
            convention: HitConvention::Closed,
        }
    }

    pub fn with_convention(barrier: VhBarrier, convention: HitConvention) -> Self {
        VhRule { barrier, convention }
    }
}

impl ExtremaRule for VhRule {
    fn coordinates(&self) -> Vec<f64> {
        self.barrier.coordinates()
    }

    fn stop_at_new_max(&self, level: f64, min: Band) -> bool {
        self.barrier.hit_on_new_max(level, min.probe(), self.convention)
    }

    fn stop_at_new_min(&self, level: f64, max: Band) -> bool {
        self.barrier.hit_on_new_min(level, max.probe(), self.convention)
    }
}

impl Snap for VhRule {
    fn snapped(&self, grid: &CriticalGrid) -> Self {
        VhRule {
            barrier: self.barrier.map_coordinates(|x| grid.snap(x)),
            convention: self.convention,
        }
    }
}

/// Which events a [`DRule`] reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DEvents {
    Both,
    MaxOnly,
    MinOnly,
}

/// Hitting time of a doubled-axis barrier: a new maximum at `x` with
/// recorded minimum `y` probes `(Left(y), x)`, a new minimum at `y` with
/// recorded maximum `x` probes `(Right(x), y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DRule {
    pub barrier: DBarrier,
    pub events: DEvents,
}

impl DRule {
    pub fn new(barrier: DBarrier) -> Self {
        DRule {
            barrier,
            events: DEvents::Both,
        }
    }
}

impl ExtremaRule for DRule {
    fn coordinates(&self) -> Vec<f64> {
        self.barrier.coordinates()
    }

    fn stop_at_new_max(&self, level: f64, min: Band) -> bool {
        self.events != DEvents::MinOnly && self.barrier.contains_strictly(DPoint::left(min.hi), level)
    }

    fn stop_at_new_min(&self, level: f64, max: Band) -> bool {
        self.events != DEvents::MaxOnly && self.barrier.contains_strictly(DPoint::right(max.lo), level)
    }
}

impl Snap for DRule {
    fn snapped(&self, grid: &CriticalGrid) -> Self {
        DRule {
            barrier: self.barrier.map_coordinates(|x| grid.snap(x)),
            events: self.events,
        }
    }
}

/// The rule seen by the reflected path `-B`. Only meaningful for rules
/// without a floor.
#[derive(Debug, Clone, PartialEq)]
pub struct Mirror<R>(pub R);

impl<R: ExtremaRule> ExtremaRule for Mirror<R> {
    fn coordinates(&self) -> Vec<f64> {
        self.0.coordinates().into_iter().map(|x| -x).collect()
    }

    fn stop_at_start(&self, x: f64) -> bool {
        self.0.stop_at_start(-x)
    }

    fn stop_at_new_max(&self, level: f64, min: Band) -> bool {
        self.0.stop_at_new_min(
            -level,
            Band {
                lo: -min.hi,
                hi: -min.lo,
            },
        )
    }

    fn stop_at_new_min(&self, level: f64, max: Band) -> bool {
        self.0.stop_at_new_max(
            -level,
            Band {
                lo: -max.hi,
                hi: -max.lo,
            },
        )
    }

    fn floor(&self, _max: f64) -> Option<f64> {
        debug_assert!(
            self.0.floor(f64::INFINITY).is_none(),
            "mirrored floors are not supported"
        );
        None
    }
}

impl<R: Snap> Snap for Mirror<R> {
    fn snapped(&self, grid: &CriticalGrid) -> Self {
        let reflected = CriticalGrid {
            levels: grid.levels.iter().rev().map(|x| -x).collect(),
        };
        Mirror(self.0.snapped(&reflected))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    AtMax,
    AtMin,
}

/// Low-level view of one transition out of a live state; shared by the
/// exact engine and the path sampler.
pub(crate) struct Step {
    pub split: ExitSplit,
    pub up: Target,
    pub down: Target,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Target {
    /// Continue at state `(i_max, i_min)` sitting at the max or the min.
    AtMax(usize, usize),
    AtMin(usize, usize),
    /// Stop with record `(endpoint, max, min)` as grid indices.
    Stop(usize, usize, usize),
    /// No level to reach in this direction.
    Missing,
}

/// Computes the transition out of state `(i, j)` with position index `p`.
pub(crate) fn step<R: ExtremaRule>(grid: &[f64], rule: &R, i: usize, j: usize, p: usize) -> Step {
    let n = grid.len();
    let pos = grid[p];
    let (up, b) = if i + 1 < n {
        let level = grid[i + 1];
        let band = Band {
            lo: if j > 0 { grid[j - 1] } else { f64::NEG_INFINITY },
            hi: grid[j],
        };
        let t = if rule.stop_at_new_max(level, band) {
            Target::Stop(i + 1, i + 1, j)
        } else {
            Target::AtMax(i + 1, j)
        };
        (t, level)
    } else {
        (Target::Missing, f64::INFINITY)
    };
    let floor = rule.floor(grid[i]).filter(|&f| f >= grid[j]);
    let (down, a) = match floor {
        Some(f) => {
            let k = grid.partition_point(|&l| l < f).min(n - 1);
            (Target::Stop(k, i, j), f)
        }
        None if j > 0 => {
            let level = grid[j - 1];
            let band = Band {
                lo: grid[i],
                hi: if i + 1 < n { grid[i + 1] } else { f64::INFINITY },
            };
            let t = if rule.stop_at_new_min(level, band) {
                Target::Stop(j - 1, i, j - 1)
            } else {
                Target::AtMin(i, j - 1)
            };
            (t, level)
        }
        None => (Target::Missing, f64::NEG_INFINITY),
    };
    let split = if a.is_finite() && b.is_finite() {
        exit_split(pos, a, b)
    } else {
        ExitSplit {
            p_down: f64::NAN,
            p_up: f64::NAN,
            e_time: f64::INFINITY,
        }
    };
    Step { split, up, down }
}

fn check_atom_stop(lambda: &DiscreteMeasure, atom_stop: &DiscreteMeasure) -> Result<(), EngineError> {
    lambda.require_probability()?;
    for a in atom_stop.atoms() {
        let start = lambda.mass_at(a.x);
        if a.p > start + crate::measures::MASS_TOL {
            return Err(EngineError::AtomStopExceedsStart {
                x: a.x,
                stop: a.p,
                start,
            });
        }
    }
    Ok(())
}

/// Grid used for a rule under starting law `lambda`.
pub fn grid_for<R: ExtremaRule>(rule: &R, lambda: &DiscreteMeasure, extra_levels: &[f64]) -> CriticalGrid {
    CriticalGrid::new(
        lambda.locations(),
        rule.coordinates().into_iter().chain(extra_levels.iter().copied()),
    )
}

/// Exact joint law of `(B_τ, max, min)` and `E[τ]` for an extrema rule.
///
/// Mass `atom_stop` is stopped at time zero; the remaining starting mass
/// runs until the rule stops it. `extra_levels` refine the grid on which
/// extrema are recorded without changing the law of the endpoint.
pub fn exact_law<R: ExtremaRule + Snap>(
    rule: &R,
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
    extra_levels: &[f64],
) -> Result<StoppedLaw, EngineError> {
    check_atom_stop(lambda, atom_stop)?;
    let grid = grid_for(rule, lambda, extra_levels);
    let rule = rule.snapped(&grid);
    let g = grid.levels();
    let n = g.len();

    let mut records: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut durations: Vec<f64> = Vec::new();
    let mut at_max = vec![0.0_f64; n * n];
    let mut at_min = vec![0.0_f64; n * n];
    let mut start = vec![0.0_f64; n];
    let mut atom_zero = Vec::new();
    for a in lambda.atoms() {
        let k = grid.index_of(a.x).expect("starting atoms are grid levels");
        let stopped = atom_stop.mass_at(a.x).min(a.p);
        let live = a.p - stopped;
        if stopped > 0.0 {
            *records.entry((k, k, k)).or_default() += stopped;
            atom_zero.push((a.x, stopped));
        }
        if live > 0.0 {
            if rule.stop_at_start(g[k]) {
                *records.entry((k, k, k)).or_default() += live;
            } else {
                start[k] += live;
            }
        }
    }

    let mut propagate =
        |mass: f64, i: usize, j: usize, p: usize, at_max: &mut [f64], at_min: &mut [f64]| -> Result<(), EngineError> {
            let s = step(g, &rule, i, j, p);
            if s.up == Target::Missing || s.down == Target::Missing {
                return Err(EngineError::NonTerminating {
                    pos: g[p],
                    max: g[i],
                    min: g[j],
                    mass,
                });
            }
            durations.push(mass * s.split.e_time);
            for (t, w) in [(s.up, s.split.p_up), (s.down, s.split.p_down)] {
                let m = mass * w;
                match t {
                    Target::AtMax(a, b) => at_max[a * n + b] += m,
                    Target::AtMin(a, b) => at_min[a * n + b] += m,
                    Target::Stop(e, a, b) => *records.entry((e, a, b)).or_default() += m,
                    Target::Missing => unreachable!(),
                }
            }
            Ok(())
        };

    for (k, &m) in start.iter().enumerate() {
        if m > 0.0 {
            propagate(m, k, k, k, &mut at_max, &mut at_min)?;
        }
    }
    for width in 1..n {
        for j in 0..n - width {
            let i = j + width;
            for side in [Side::AtMax, Side::AtMin] {
                let m = match side {
                    Side::AtMax => at_max[i * n + j],
                    Side::AtMin => at_min[i * n + j],
                };
                if m > 0.0 {
                    let p = if side == Side::AtMax { i } else { j };
                    propagate(m, i, j, p, &mut at_max, &mut at_min)?;
                }
            }
        }
    }

    let joint: Vec<JointAtom> = records
        .into_iter()
        .map(|((e, a, b), mass)| JointAtom {
            endpoint: g[e],
            max: g[a],
            min: g[b],
            mass,
        })
        .collect();
    let total = compensated_sum(joint.iter().map(|a| a.mass));
    if (total - 1.0).abs() > MASS_LEAK_TOL {
        return Err(EngineError::MassLeak { total });
    }
    Ok(StoppedLaw::new(
        joint,
        compensated_sum(durations),
        DiscreteMeasure::new(atom_zero)?,
    ))
}

/// Exact law of the hitting time of a vh-barrier with atom rule `atom_stop`.
pub fn vh_stopped_law(
    barrier: &VhBarrier,
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
) -> Result<StoppedLaw, EngineError> {
    exact_law(&VhRule::new(barrier.clone()), lambda, atom_stop, &[])
}

/// Same dynamic program as [`vh_stopped_law`] with hit tests routed through
/// the doubled-axis barrier.
pub fn dbarrier_stopped_law(
    db: &DBarrier,
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
) -> Result<StoppedLaw, EngineError> {
    exact_law(&DRule::new(db.clone()), lambda, atom_stop, &[])
}
