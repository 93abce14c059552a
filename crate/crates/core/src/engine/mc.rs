//! Seeded Monte Carlo evaluation of stopping rules.
//!
//! Every path draws from its own ChaCha stream `(seed, path index)`, and
//! paths are processed in fixed batches whose results are combined in
//! order, so the output does not depend on the thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{step, CriticalGrid, ExtremaRule, JointAtom, StoppedLaw, Target};
use crate::barriers::{TimeSpaceBarrier, TimeSpaceKind};
use crate::error::EngineError;
use crate::measures::{compensated_sum, DiscreteMeasure};

const BATCH: u64 = 1 << 14;

/// Sampler settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Maximum number of steps per path.
    pub step_cap: u64,
    /// Euler step for time-space rules.
    pub dt: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 1_000_000,
            seed: 42,
            step_cap: 10_000_000,
            dt: 1e-4,
        }
    }
}

impl McConfig {
    pub fn with_paths(n_paths: u64, seed: u64) -> Self {
        McConfig {
            n_paths,
            seed,
            ..Self::default()
        }
    }
}

/// The random stream of path `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Starts {
    /// `(grid index, cumulative mass, probability of an atom stop)`
    atoms: Vec<(usize, f64, f64)>,
}

impl Starts {
    fn new(grid: &CriticalGrid, lambda: &DiscreteMeasure, atom_stop: &DiscreteMeasure) -> Result<Self, EngineError> {
        lambda.require_probability()?;
        let mut cum = 0.0;
        let atoms = lambda
            .atoms()
            .iter()
            .map(|a| {
                cum += a.p;
                let k = grid.index_of(a.x).expect("starting atoms are grid levels");
                (k, cum, (atom_stop.mass_at(a.x) / a.p).min(1.0))
            })
            .collect();
        Ok(Starts { atoms })
    }

    /// Start index and whether the atom rule stops the path at time zero.
    fn draw(&self, rng: &mut ChaCha8Rng) -> (usize, bool) {
        let u: f64 = rng.random();
        let total = self.atoms.last().map_or(1.0, |a| a.1);
        let pick = self
            .atoms
            .iter()
            .find(|a| u * total < a.1)
            .or(self.atoms.last())
            .expect("non-empty starting law");
        let v: f64 = rng.random();
        (pick.0, v < pick.2)
    }
}

#[derive(Default)]
struct Tally {
    counts: BTreeMap<(usize, usize, usize), u64>,
    zero: BTreeMap<usize, u64>,
    durations: Vec<f64>,
}

impl Tally {
    fn absorb(&mut self, other: Tally) {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_default() += c;
        }
        for (k, c) in other.zero {
            *self.zero.entry(k).or_default() += c;
        }
        self.durations.push(compensated_sum(other.durations));
    }

    fn into_law(self, grid: &[f64], n_paths: u64) -> Result<StoppedLaw, EngineError> {
        let n = n_paths as f64;
        let joint = self
            .counts
            .into_iter()
            .map(|((e, a, b), c)| JointAtom {
                endpoint: grid[e],
                max: grid[a],
                min: grid[b],
                mass: c as f64 / n,
            })
            .collect();
        let zero = DiscreteMeasure::new(self.zero.into_iter().map(|(k, c)| (grid[k], c as f64 / n)))?;
        Ok(StoppedLaw::new(joint, compensated_sum(self.durations) / n, zero))
    }
}

fn run_batches<F>(n_paths: u64, per_path: F) -> Result<Tally, EngineError>
where
    F: Fn(u64, &mut Tally) -> Result<(), EngineError> + Sync,
{
    let batches = n_paths.div_ceil(BATCH);
    let results: Vec<Result<Tally, EngineError>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut tally = Tally::default();
            for path in b * BATCH..((b + 1) * BATCH).min(n_paths) {
                per_path(path, &mut tally)?;
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::default();
    for r in results {
        total.absorb(r?);
    }
    Ok(total)
}

/// Samples an extrema rule on its exact skeleton: every step is one
/// gambler's-ruin draw between grid levels, so the sampled law carries no
/// discretisation bias. `make_rule` is called once per path (after the
/// start has been drawn) and may use the path's stream, e.g. for an
/// external randomisation. Rules must already be snapped to `grid`.
pub fn mc_extrema_law<R, F>(
    grid: &CriticalGrid,
    make_rule: F,
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
    cfg: &McConfig,
) -> Result<StoppedLaw, EngineError>
where
    R: ExtremaRule,
    F: Fn(&mut ChaCha8Rng) -> R + Sync,
{
    let starts = Starts::new(grid, lambda, atom_stop)?;
    let g = grid.levels();
    let tally = run_batches(cfg.n_paths, |path, tally| {
        let mut rng = path_rng(cfg.seed, path);
        let (k, atom) = starts.draw(&mut rng);
        if atom {
            *tally.zero.entry(k).or_default() += 1;
            *tally.counts.entry((k, k, k)).or_default() += 1;
            return Ok(());
        }
        let rule = make_rule(&mut rng);
        if rule.stop_at_start(g[k]) {
            *tally.counts.entry((k, k, k)).or_default() += 1;
            return Ok(());
        }
        let (mut i, mut j, mut p) = (k, k, k);
        let mut duration = 0.0;
        for _ in 0..cfg.step_cap {
            let s = step(g, &rule, i, j, p);
            if s.up == Target::Missing || s.down == Target::Missing {
                return Err(EngineError::NonTerminating {
                    pos: g[p],
                    max: g[i],
                    min: g[j],
                    mass: 1.0 / cfg.n_paths as f64,
                });
            }
            duration += s.split.e_time;
            let u: f64 = rng.random();
            let next = if u < s.split.p_up { s.up } else { s.down };
            match next {
                Target::AtMax(a, b) => (i, j, p) = (a, b, a),
                Target::AtMin(a, b) => (i, j, p) = (a, b, b),
                Target::Stop(e, a, b) => {
                    *tally.counts.entry((e, a, b)).or_default() += 1;
                    tally.durations.push(duration);
                    return Ok(());
                }
                Target::Missing => unreachable!(),
            }
        }
        Err(EngineError::PathBudgetExceeded {
            path,
            cap: cfg.step_cap,
        })
    })?;
    tally.into_law(g, cfg.n_paths)
}

/// Euler simulation of a time-space barrier rule. Grid levels are checked
/// whenever a step crosses them; extrema are recorded at grid resolution,
/// with `extra_levels` refining the grid.
pub fn mc_time_space_law(
    barrier: &TimeSpaceBarrier,
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
    extra_levels: &[f64],
    cfg: &McConfig,
) -> Result<StoppedLaw, EngineError> {
    let grid = CriticalGrid::new(
        lambda.locations(),
        barrier
            .levels()
            .iter()
            .map(|l| l.level)
            .chain(extra_levels.iter().copied()),
    );
    let starts = Starts::new(&grid, lambda, atom_stop)?;
    let g = grid.levels();
    let thresholds: Vec<Option<f64>> = g.iter().map(|&l| barrier.threshold_at(l)).collect();
    let inside = |k: usize, t: f64| {
        thresholds[k].is_some_and(|th| match barrier.kind() {
            TimeSpaceKind::Root => t >= th,
            TimeSpaceKind::Inverse => t <= th,
        })
    };
    let sd = cfg.dt.sqrt();
    let tally = run_batches(cfg.n_paths, |path, tally| {
        let mut rng = path_rng(cfg.seed, path);
        let (k, atom) = starts.draw(&mut rng);
        if atom {
            *tally.zero.entry(k).or_default() += 1;
            *tally.counts.entry((k, k, k)).or_default() += 1;
            return Ok(());
        }
        let (mut hi, mut lo) = (k, k);
        let mut pos = g[k];
        let mut t = 0.0;
        for _ in 0..cfg.step_cap {
            let z: f64 = rng.sample(StandardNormal);
            let next = pos + sd * z;
            t += cfg.dt;
            let crossed: Box<dyn Iterator<Item = usize>> = if next > pos {
                let a = g.partition_point(|&l| l <= pos);
                let b = g.partition_point(|&l| l <= next);
                Box::new(a..b)
            } else {
                let a = g.partition_point(|&l| l < next);
                let b = g.partition_point(|&l| l < pos);
                Box::new((a..b).rev())
            };
            for c in crossed {
                hi = hi.max(c);
                lo = lo.min(c);
                if inside(c, t) {
                    *tally.counts.entry((c, hi, lo)).or_default() += 1;
                    tally.durations.push(t);
                    return Ok(());
                }
            }
            pos = next;
        }
        Err(EngineError::PathBudgetExceeded {
            path,
            cap: cfg.step_cap,
        })
    })?;
    tally.into_law(g, cfg.n_paths)
}

/// Event index at which each rule stops along a shared path; `Some(0)`
/// is a stop at time zero, `None` means the rule had not stopped when the
/// path ran out of levels.
pub type PathStops = Vec<Option<u64>>;

/// Drives one skeleton path per index through all `rules` at once. Each
/// path runs until every rule has stopped. Rules must be snapped to
/// `grid` and must not use floors.
pub fn pathwise_stops(
    grid: &CriticalGrid,
    rules: &[&(dyn ExtremaRule + Sync)],
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
    cfg: &McConfig,
) -> Result<Vec<PathStops>, EngineError> {
    let starts = Starts::new(grid, lambda, atom_stop)?;
    let g = grid.levels();
    let n = g.len();
    let paths: Vec<Result<PathStops, EngineError>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path);
            let (k, atom) = starts.draw(&mut rng);
            if atom {
                return Ok(vec![Some(0); rules.len()]);
            }
            let mut stops: PathStops = rules.iter().map(|r| r.stop_at_start(g[k]).then_some(0)).collect();
            let (mut i, mut j, mut p) = (k, k, k);
            let mut event = 0u64;
            while stops.iter().any(Option::is_none) {
                if event >= cfg.step_cap {
                    return Err(EngineError::PathBudgetExceeded {
                        path,
                        cap: cfg.step_cap,
                    });
                }
                if i + 1 == n || j == 0 {
                    break;
                }
                event += 1;
                let split = super::exit_split(g[p], g[j - 1], g[i + 1]);
                let u: f64 = rng.random();
                if u < split.p_up {
                    let band = super::Band {
                        lo: if j > 0 { g[j - 1] } else { f64::NEG_INFINITY },
                        hi: g[j],
                    };
                    for (s, r) in stops.iter_mut().zip(rules) {
                        if s.is_none() && r.stop_at_new_max(g[i + 1], band) {
                            *s = Some(event);
                        }
                    }
                    i += 1;
                    p = i;
                } else {
                    let band = super::Band {
                        lo: g[i],
                        hi: if i + 1 < n { g[i + 1] } else { f64::INFINITY },
                    };
                    for (s, r) in stops.iter_mut().zip(rules) {
                        if s.is_none() && r.stop_at_new_min(g[j - 1], band) {
                            *s = Some(event);
                        }
                    }
                    j -= 1;
                    p = j;
                }
            }
            Ok(stops)
        })
        .collect();
    paths.into_iter().collect()
}
