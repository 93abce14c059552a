//! Stopping rules: the Perkins vh-barrier rule and the classical baselines
//! it is compared against.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::barriers::{HitConvention, TimeSpaceBarrier, TimeSpaceKind, VhBarrier};
use crate::engine::mc::{mc_extrema_law, mc_time_space_law, McConfig};
use crate::engine::{
    exact_law, grid_for, Band, CriticalGrid, Event, ExtremaRule, ExtremaState, Snap, StoppedLaw, VhRule,
};
use crate::error::{BarrierError, EngineError};
use crate::measures::{compensated_sum, DiscreteMeasure};

/// One step of a [`StepMap`]: from `from` on, the map equals `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    pub from: f64,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepMapDoc {
    breakpoints: Vec<Breakpoint>,
}

/// Right-continuous non-decreasing step function with `f(m) ≤ m`, equal to
/// `-∞` left of the first breakpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "StepMapDoc", into = "StepMapDoc")]
pub struct StepMap {
    breakpoints: Vec<Breakpoint>,
}

impl TryFrom<StepMapDoc> for StepMap {
    type Error = BarrierError;

    fn try_from(doc: StepMapDoc) -> Result<Self, Self::Error> {
        StepMap::new(doc.breakpoints)
    }
}

impl From<StepMap> for StepMapDoc {
    fn from(m: StepMap) -> Self {
        StepMapDoc {
            breakpoints: m.breakpoints,
        }
    }
}

impl StepMap {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self, BarrierError> {
        for b in &breakpoints {
            for x in [b.from, b.value] {
                if !x.is_finite() {
                    return Err(BarrierError::NonFinite(x));
                }
            }
            if b.value > b.from {
                return Err(BarrierError::StopAboveMax {
                    from: b.from,
                    value: b.value,
                });
            }
        }
        if breakpoints
            .windows(2)
            .any(|w| w[1].from <= w[0].from || w[1].value < w[0].value)
        {
            return Err(BarrierError::NonMonotoneStepMap);
        }
        Ok(StepMap { breakpoints })
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn eval(&self, m: f64) -> f64 {
        let i = self.breakpoints.partition_point(|b| b.from <= m);
        if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[i - 1].value
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        self.breakpoints.iter().flat_map(|b| [b.from, b.value]).collect()
    }

    /// Applies a non-decreasing coordinate map to breakpoints and values.
    pub fn map_coordinates(&self, f: impl Fn(f64) -> f64) -> StepMap {
        let mut breakpoints: Vec<Breakpoint> = self
            .breakpoints
            .iter()
            .map(|b| Breakpoint {
                from: f(b.from),
                value: f(b.value).min(f(b.from)),
            })
            .collect();
        breakpoints.dedup_by(|next, kept| {
            let same = next.from == kept.from;
            if same {
                kept.value = next.value;
            }
            same
        });
        StepMap { breakpoints }
    }
}

/// Barycenter boundary for a start at the mean: with
/// `ψ(x) = E_μ[X | X ≥ x]`, the map sends `m ∈ [ψ(x_i), ψ(x_{i+1}))` to the
/// atom `x_i`.
///
/// # Panics
///
/// Panics if `mu` is empty.
pub fn azema_yor_boundary(mu: &DiscreteMeasure) -> StepMap {
    let atoms = mu.atoms();
    assert!(!atoms.is_empty(), "target law has no atoms");
    let last = atoms.len() - 1;
    let breakpoints = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let tail = &atoms[i..];
            let psi = if i == last {
                a.x
            } else {
                compensated_sum(tail.iter().map(|t| t.p * t.x)) / compensated_sum(tail.iter().map(|t| t.p))
            };
            Breakpoint {
                from: psi.max(a.x),
                value: a.x,
            }
        })
        .collect();
    StepMap::new(breakpoints).expect("barycenters increase with the atom")
}

/// Stopping rule parameters, tagged by rule family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StoppingRule {
    /// Hitting time of a vh-barrier after stopping `atom_stop` at time zero.
    Perkins {
        barrier: VhBarrier,
        atom_stop: DiscreteMeasure,
    },
    /// Stop once the path falls to `boundary(running max)`.
    AzemaYor { boundary: StepMap },
    /// Stop once the running max reaches an independent level drawn from
    /// `G`, or the path falls to `g(running max)`.
    HobsonPedersen {
        #[serde(rename = "G")]
        big_g: DiscreteMeasure,
        g: StepMap,
    },
    /// First entry into a time-space barrier `{t ≥ threshold(x)}`.
    Root { barrier: TimeSpaceBarrier },
    /// First entry into `{t ≤ threshold(x)}` after the atom rule.
    Rost {
        barrier: TimeSpaceBarrier,
        atom_stop: DiscreteMeasure,
    },
}

impl StoppingRule {
    pub fn name(&self) -> &'static str {
        match self {
            StoppingRule::Perkins { .. } => "perkins",
            StoppingRule::AzemaYor { .. } => "azema_yor",
            StoppingRule::HobsonPedersen { .. } => "hobson_pedersen",
            StoppingRule::Root { .. } => "root",
            StoppingRule::Rost { .. } => "rost",
        }
    }

    /// Space coordinates the rule refers to.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            StoppingRule::Perkins { barrier, atom_stop } => {
                let mut xs = barrier.coordinates();
                xs.extend(atom_stop.locations());
                xs
            }
            StoppingRule::AzemaYor { boundary } => boundary.coordinates(),
            StoppingRule::HobsonPedersen { big_g, g } => {
                let mut xs = g.coordinates();
                xs.extend(big_g.locations());
                xs
            }
            StoppingRule::Root { barrier } => barrier.levels().iter().map(|l| l.level).collect(),
            StoppingRule::Rost { barrier, atom_stop } => {
                let mut xs: Vec<f64> = barrier.levels().iter().map(|l| l.level).collect();
                xs.extend(atom_stop.locations());
                xs
            }
        }
    }

    /// Mass stopped at time zero before the rule itself acts.
    pub fn atom_stop(&self) -> DiscreteMeasure {
        match self {
            StoppingRule::Perkins { atom_stop, .. } | StoppingRule::Rost { atom_stop, .. } => atom_stop.clone(),
            _ => DiscreteMeasure::zero(),
        }
    }
}

/// Decides whether the path stops in `state`. `time_or_aux` is the elapsed
/// time for Root and Rost rules and the sampled level `G` for
/// Hobson-Pedersen; other rules ignore it.
pub fn should_stop(rule: &StoppingRule, state: &ExtremaState, time_or_aux: f64) -> bool {
    match rule {
        StoppingRule::Perkins { barrier, .. } => match state.event {
            Event::NewMax => barrier.hit_on_new_max(state.max, state.min, HitConvention::Closed),
            Event::NewMin => barrier.hit_on_new_min(state.min, state.max, HitConvention::Closed),
            Event::Start | Event::Interior => false,
        },
        StoppingRule::AzemaYor { boundary } => state.pos <= boundary.eval(state.max),
        StoppingRule::HobsonPedersen { g, .. } => state.pos <= g.eval(state.max) || state.max >= time_or_aux,
        StoppingRule::Root { barrier } | StoppingRule::Rost { barrier, .. } => barrier.contains(time_or_aux, state.pos),
    }
}

/// Azéma-Yor type rule on the extrema engine: the boundary acts as a floor.
#[derive(Debug, Clone, PartialEq)]
pub struct AyRule {
    pub boundary: StepMap,
}

impl ExtremaRule for AyRule {
    fn coordinates(&self) -> Vec<f64> {
        self.boundary.coordinates()
    }

    fn stop_at_start(&self, x: f64) -> bool {
        x <= self.boundary.eval(x)
    }

    fn stop_at_new_max(&self, level: f64, _min: Band) -> bool {
        level <= self.boundary.eval(level)
    }

    fn stop_at_new_min(&self, level: f64, max: Band) -> bool {
        level <= self.boundary.eval(max.lo)
    }

    fn floor(&self, max: f64) -> Option<f64> {
        Some(self.boundary.eval(max)).filter(|f| f.is_finite())
    }
}

impl Snap for AyRule {
    fn snapped(&self, grid: &CriticalGrid) -> Self {
        AyRule {
            boundary: self.boundary.map_coordinates(|x| grid.snap(x)),
        }
    }
}

/// Hobson-Pedersen rule for one path, with the external level already drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpPathRule<'a> {
    pub g: &'a StepMap,
    pub level: f64,
}

impl ExtremaRule for HpPathRule<'_> {
    fn coordinates(&self) -> Vec<f64> {
        let mut c = self.g.coordinates();
        c.push(self.level);
        c
    }

    fn stop_at_start(&self, x: f64) -> bool {
        x >= self.level || x <= self.g.eval(x)
    }

    fn stop_at_new_max(&self, level: f64, _min: Band) -> bool {
        level >= self.level || level <= self.g.eval(level)
    }

    fn stop_at_new_min(&self, level: f64, max: Band) -> bool {
        level <= self.g.eval(max.lo)
    }

    fn floor(&self, max: f64) -> Option<f64> {
        Some(self.g.eval(max)).filter(|f| f.is_finite())
    }
}

/// Exact stopped law for rules that the extrema engine can evaluate.
pub fn exact_stopped_law(rule: &StoppingRule, lambda: &DiscreteMeasure) -> Result<StoppedLaw, EngineError> {
    exact_stopped_law_refined(rule, lambda, &[])
}

/// As [`exact_stopped_law`], recording extrema on a grid refined by `extra_levels`.
pub fn exact_stopped_law_refined(
    rule: &StoppingRule,
    lambda: &DiscreteMeasure,
    extra_levels: &[f64],
) -> Result<StoppedLaw, EngineError> {
    match rule {
        StoppingRule::Perkins { barrier, atom_stop } => {
            exact_law(&VhRule::new(barrier.clone()), lambda, atom_stop, extra_levels)
        }
        StoppingRule::AzemaYor { boundary } => exact_law(
            &AyRule {
                boundary: boundary.clone(),
            },
            lambda,
            &DiscreteMeasure::zero(),
            extra_levels,
        ),
        StoppingRule::HobsonPedersen { .. } => Err(EngineError::Unsupported("the Hobson-Pedersen rule")),
        StoppingRule::Root { .. } => Err(EngineError::Unsupported("a Root barrier")),
        StoppingRule::Rost { .. } => Err(EngineError::Unsupported("a Rost barrier")),
    }
}

/// Monte Carlo stopped law. Extrema rules run on the exact skeleton,
/// time-space rules on Euler paths with step `cfg.dt`.
pub fn mc_stopped_law(
    rule: &StoppingRule,
    lambda: &DiscreteMeasure,
    cfg: &McConfig,
) -> Result<StoppedLaw, EngineError> {
    mc_stopped_law_refined(rule, lambda, &[], cfg)
}

/// As [`mc_stopped_law`], recording extrema on a grid refined by `extra_levels`.
pub fn mc_stopped_law_refined(
    rule: &StoppingRule,
    lambda: &DiscreteMeasure,
    extra_levels: &[f64],
    cfg: &McConfig,
) -> Result<StoppedLaw, EngineError> {
    match rule {
        StoppingRule::Perkins { barrier, atom_stop } => {
            let r = VhRule::new(barrier.clone());
            let grid = grid_for(&r, lambda, extra_levels);
            let r = r.snapped(&grid);
            mc_extrema_law(&grid, |_| &r, lambda, atom_stop, cfg)
        }
        StoppingRule::AzemaYor { boundary } => {
            let r = AyRule {
                boundary: boundary.clone(),
            };
            let grid = grid_for(&r, lambda, extra_levels);
            let r = r.snapped(&grid);
            mc_extrema_law(&grid, |_| &r, lambda, &DiscreteMeasure::zero(), cfg)
        }
        StoppingRule::HobsonPedersen { big_g, g } => {
            let grid = CriticalGrid::new(
                lambda.locations(),
                g.coordinates()
                    .into_iter()
                    .chain(big_g.locations())
                    .chain(extra_levels.iter().copied()),
            );
            let g = g.map_coordinates(|x| grid.snap(x));
            let levels: Vec<(f64, f64)> = big_g.atoms().iter().map(|a| (grid.snap(a.x), a.p)).collect();
            let total: f64 = levels.iter().map(|l| l.1).sum();
            mc_extrema_law(
                &grid,
                |rng| {
                    let u: f64 = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let level = levels
                        .iter()
                        .find(|l| {
                            acc += l.1;
                            u < acc
                        })
                        .or(levels.last())
                        .map_or(f64::INFINITY, |l| l.0);
                    HpPathRule { g: &g, level }
                },
                lambda,
                &DiscreteMeasure::zero(),
                cfg,
            )
        }
        StoppingRule::Root { barrier } => {
            if barrier.kind() != TimeSpaceKind::Root {
                return Err(EngineError::Unsupported("a Root rule with an inverse barrier"));
            }
            mc_time_space_law(barrier, lambda, &DiscreteMeasure::zero(), extra_levels, cfg)
        }
        StoppingRule::Rost { barrier, atom_stop } => {
            if barrier.kind() != TimeSpaceKind::Inverse {
                return Err(EngineError::Unsupported("a Rost rule with a Root barrier"));
            }
            mc_time_space_law(barrier, lambda, atom_stop, extra_levels, cfg)
        }
    }
}
