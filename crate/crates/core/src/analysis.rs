//! Verification of stopped laws: embedding residuals, laws of the running
//! extrema, stochastic dominance, objective vectors, and the Loynes
//! union argument.
//!
//! Extrema are recorded at grid resolution: the recorded maximum is the
//! largest grid level the path reached, i.e. the true maximum rounded down
//! to the grid (and the recorded minimum is the true minimum rounded up).
//! Rounding is monotone, so laws compared on a common grid inherit every
//! stochastic-dominance relation of the true extrema.

use std::cmp::Ordering;
use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::barriers::VhBarrier;
use crate::engine::mc::{pathwise_stops, McConfig, PathStops};
use crate::engine::{exact_law, CriticalGrid, DEvents, DRule, ExtremaRule, JointAtom, Snap, StoppedLaw, VhRule};
use crate::error::EngineError;
use crate::measures::{compensated_sum, DiscreteMeasure};
use crate::rules::{exact_stopped_law_refined, StoppingRule};

/// Tolerance for CDF and objective comparisons.
pub const COMPARE_TOL: f64 = 1e-9;

/// Bounded, continuous, strictly increasing test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuxiliaryFunction {
    Tanh,
    /// `(2/π) atan(x)`
    Atan,
    /// Linear interpolation through strictly increasing `(x, y)` knots,
    /// continued by `tanh` tails on both sides.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    /// `scale · φ`, for invariance checks.
    Scaled {
        scale: f64,
        inner: Box<AuxiliaryFunction>,
    },
}

impl AuxiliaryFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            AuxiliaryFunction::Tanh => x.tanh(),
            AuxiliaryFunction::Atan => FRAC_2_PI * x.atan(),
            AuxiliaryFunction::PiecewiseLinear { knots } => {
                let (Some(first), Some(last)) = (knots.first(), knots.last()) else {
                    return x.tanh();
                };
                if x <= first.0 {
                    return first.1 + (x - first.0).tanh();
                }
                if x >= last.0 {
                    return last.1 + (x - last.0).tanh();
                }
                let i = knots.partition_point(|k| k.0 <= x);
                let (a, b) = (knots[i - 1], knots[i]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
            AuxiliaryFunction::Scaled { scale, inner } => scale * inner.eval(x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            AuxiliaryFunction::Tanh => "tanh".into(),
            AuxiliaryFunction::Atan => "atan".into(),
            AuxiliaryFunction::PiecewiseLinear { .. } => "piecewise_linear".into(),
            AuxiliaryFunction::Scaled { scale, inner } => format!("{scale}*{}", inner.name()),
        }
    }

    /// The standard battery: `tanh`, `(2/π) atan` and a piecewise-linear
    /// map with one knot per grid level.
    pub fn battery(levels: &[f64]) -> Vec<AuxiliaryFunction> {
        let mut xs: Vec<f64> = levels.iter().copied().filter(|x| x.is_finite()).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let n = xs.len().max(1) as f64;
        let knots = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| (x, (k as f64 + 1.0) / n + 0.25 * x.tanh()))
            .collect();
        vec![
            AuxiliaryFunction::Tanh,
            AuxiliaryFunction::Atan,
            AuxiliaryFunction::PiecewiseLinear { knots },
        ]
    }
}

/// `(E[φ(max)], -E[φ(min)], -E[φ(max) B_τ²], -E[φ(-min) B_τ²])`, compared
/// lexicographically; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl ObjectiveVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.g1, self.g2, self.g3, self.g4]
    }

    /// Lexicographic order with ties up to `tol`.
    pub fn lex_cmp(&self, other: &ObjectiveVector, tol: f64) -> Ordering {
        for (a, b) in self.as_array().into_iter().zip(other.as_array()) {
            if a < b - tol {
                return Ordering::Less;
            }
            if a > b + tol {
                return Ordering::Greater;
            }
        }
        Ordering::Equal
    }
}

pub fn objective_vector(law: &StoppedLaw, phi: &AuxiliaryFunction) -> ObjectiveVector {
    let sum = |f: &dyn Fn(&JointAtom) -> f64| compensated_sum(law.joint.iter().map(|a| a.mass * f(a)));
    ObjectiveVector {
        g1: sum(&|a| phi.eval(a.max)),
        g2: -sum(&|a| phi.eval(a.min)),
        g3: -sum(&|a| phi.eval(a.max) * a.endpoint * a.endpoint),
        g4: -sum(&|a| phi.eval(-a.min) * a.endpoint * a.endpoint),
    }
}

/// Total-variation distance between the endpoint law and `mu`.
pub fn verify_embedding(law: &StoppedLaw, mu: &DiscreteMeasure) -> f64 {
    law.endpoint_law().tv_distance(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Max,
    Min,
}

/// Right-continuous CDF known at finitely many levels, with its left
/// limits `P(X < level)` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub left: Vec<f64>,
}

impl StepCdf {
    /// CDF of a discrete measure.
    pub fn of_measure(m: &DiscreteMeasure) -> StepCdf {
        let mut acc = Vec::new();
        let values: Vec<f64> = m
            .atoms()
            .iter()
            .map(|a| {
                acc.push(a.p);
                compensated_sum(acc.iter().copied())
            })
            .collect();
        let left = std::iter::once(0.0)
            .chain(values.iter().copied())
            .take(values.len())
            .collect();
        StepCdf {
            levels: m.locations().collect(),
            values,
            left,
        }
    }

    /// Value at `x`, carried forward from the largest known level `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.levels.partition_point(|&l| l <= x);
        if i == 0 {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// Left limit at `x`; between known levels this is [`StepCdf::eval`].
    pub fn eval_left(&self, x: f64) -> f64 {
        match self.levels.binary_search_by(|l| l.total_cmp(&x)) {
            Ok(i) => self.left[i],
            Err(_) => self.eval(x),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,cdf,left_limit\n");
        for ((l, v), w) in self.levels.iter().zip(&self.values).zip(&self.left) {
            out.push_str(&format!("{l:.16e},{v:.16e},{w:.16e}\n"));
        }
        out
    }
}

/// CDF of the true maximum or minimum at each of `levels`, exact when the
/// levels lie on the recording grid.
///
/// A record equals the true extremum when the path stopped there or never
/// moved. Otherwise the true maximum lies strictly inside the grid gap above
/// the recorded one, and the true minimum strictly inside the gap below.
pub fn extrema_cdf_at(law: &StoppedLaw, which: Extremum, levels: &[f64]) -> StepCdf {
    let mut levels: Vec<f64> = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mass =
        |pred: &dyn Fn(&JointAtom) -> bool| compensated_sum(law.joint.iter().filter(|a| pred(a)).map(|a| a.mass));
    let exact = |a: &JointAtom| {
        a.at_time_zero()
            || match which {
                Extremum::Max => a.stopped_at_max(),
                Extremum::Min => a.stopped_at_min(),
            }
    };
    let (values, left) = levels
        .iter()
        .map(|&x| match which {
            Extremum::Max => (mass(&|a| a.max < x || (a.max == x && exact(a))), mass(&|a| a.max < x)),
            Extremum::Min => (mass(&|a| a.min <= x), mass(&|a| a.min < x || (a.min == x && !exact(a)))),
        })
        .unzip();
    StepCdf { levels, values, left }
}

/// CDF of an extremum at every level appearing in the law.
pub fn extrema_cdf(law: &StoppedLaw, which: Extremum) -> StepCdf {
    let levels: Vec<f64> = law
        .joint
        .iter()
        .map(|a| match which {
            Extremum::Max => a.max,
            Extremum::Min => a.min,
        })
        .collect();
    extrema_cdf_at(law, which, &levels)
}

/// Outcome of a pointwise CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DominanceVerdict {
    Equal,
    /// The first law is stochastically smaller (its CDF lies above).
    FirstSmaller,
    SecondSmaller,
    Crossing {
        at: f64,
    },
}

impl DominanceVerdict {
    pub fn swapped(self) -> Self {
        match self {
            DominanceVerdict::FirstSmaller => DominanceVerdict::SecondSmaller,
            DominanceVerdict::SecondSmaller => DominanceVerdict::FirstSmaller,
            v => v,
        }
    }
}

/// Compares two CDFs, values and left limits, on the union of their levels
/// with tolerance [`COMPARE_TOL`].
pub fn dominance(a: &StepCdf, b: &StepCdf) -> DominanceVerdict {
    let mut levels: Vec<f64> = a.levels.iter().chain(&b.levels).copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut sign = 0i8;
    let gaps = levels
        .iter()
        .flat_map(|&x| [(x, a.eval_left(x) - b.eval_left(x)), (x, a.eval(x) - b.eval(x))]);
    for (x, d) in gaps {
        let s = if d > COMPARE_TOL {
            1
        } else if d < -COMPARE_TOL {
            -1
        } else {
            0
        };
        if s != 0 {
            if sign == 0 {
                sign = s;
            } else if s != sign {
                return DominanceVerdict::Crossing { at: x };
            }
        }
    }
    match sign {
        1 => DominanceVerdict::FirstSmaller,
        -1 => DominanceVerdict::SecondSmaller,
        _ => DominanceVerdict::Equal,
    }
}

/// Dominance verdict for one extremum of two laws, evaluated at every level
/// either law records.
pub fn law_dominance(a: &StoppedLaw, b: &StoppedLaw, which: Extremum) -> DominanceVerdict {
    let mut levels: Vec<f64> = a.joint.iter().chain(&b.joint).flat_map(|j| [j.max, j.min]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    dominance(&extrema_cdf_at(a, which, &levels), &extrema_cdf_at(b, which, &levels))
}

/// Exact laws of several rules with extrema recorded on one grid built
/// from all their coordinates, so that their extrema laws are comparable.
pub fn exact_laws_on_common_grid(
    rules: &[StoppingRule],
    lambda: &DiscreteMeasure,
) -> Result<Vec<StoppedLaw>, EngineError> {
    let mut levels: Vec<f64> = rules.iter().flat_map(StoppingRule::coordinates).collect();
    levels.extend(lambda.locations());
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    rules
        .iter()
        .map(|r| exact_stopped_law_refined(r, lambda, &levels))
        .collect()
}

/// Grid levels plus the midpoint of every gap.
pub fn refine_with_midpoints(levels: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = levels.iter().copied().filter(|x| x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mids: Vec<f64> = xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    xs.extend(mids);
    xs.sort_by(f64::total_cmp);
    xs
}

/// Positive-time records that stopped strictly between their running
/// extrema.
pub fn monotonicity_audit(law: &StoppedLaw) -> Vec<JointAtom> {
    law.joint
        .iter()
        .filter(|a| a.mass > 0.0 && !a.at_time_zero() && !a.stopped_at_max() && !a.stopped_at_min())
        .copied()
        .collect()
}

/// Result of comparing two barriers with their union.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoynesReport {
    pub endpoint_tv_r_s: f64,
    pub endpoint_tv_r_union: f64,
    pub endpoint_tv_s_union: f64,
    /// Total variation between the joint laws of `R` and `S`; coordinates
    /// within `1e-7` are identified.
    pub joint_tv_r_s: f64,
    pub union_law: StoppedLaw,
    pub paths: u64,
    /// Paths on which `τ_{R∪S} ≠ τ_R ∧ τ_S`.
    pub violations: u64,
}

/// Coordinate tolerance for matching joint laws of different calibrations.
pub const JOINT_COORD_TOL: f64 = 1e-7;

fn min_stop(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn snapped_on<R: ExtremaRule + Snap>(rules: &[R], lambda: &DiscreteMeasure) -> (CriticalGrid, Vec<R>) {
    let grid = CriticalGrid::new(lambda.locations(), rules.iter().flat_map(ExtremaRule::coordinates));
    let snapped = rules.iter().map(|r| r.snapped(&grid)).collect();
    (grid, snapped)
}

/// Compares `R`, `S` and `R ∪ S` under the same starting law and atom rule:
/// exact endpoint and joint laws, and the pathwise identity
/// `τ_{R∪S} = τ_R ∧ τ_S` on shared skeleton paths.
pub fn loynes_check(
    r: &VhBarrier,
    s: &VhBarrier,
    lambda: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cfg: &McConfig,
) -> Result<LoynesReport, EngineError> {
    let u = r.union(s);
    let law_r = exact_law(&VhRule::new(r.clone()), lambda, nu, &[])?;
    let law_s = exact_law(&VhRule::new(s.clone()), lambda, nu, &[])?;
    let law_u = exact_law(&VhRule::new(u.clone()), lambda, nu, &[])?;
    let (end_r, end_s, end_u) = (law_r.endpoint_law(), law_s.endpoint_law(), law_u.endpoint_law());
    let (grid, rules) = snapped_on(
        &[VhRule::new(r.clone()), VhRule::new(s.clone()), VhRule::new(u)],
        lambda,
    );
    let refs: Vec<&(dyn ExtremaRule + Sync)> = rules.iter().map(|r| r as &(dyn ExtremaRule + Sync)).collect();
    let stops = pathwise_stops(&grid, &refs, lambda, nu, cfg)?;
    let violations = count_violations(&stops, |p| p[2] != min_stop(p[0], p[1]));
    Ok(LoynesReport {
        endpoint_tv_r_s: end_r.tv_distance(&end_s),
        endpoint_tv_r_union: end_r.tv_distance(&end_u),
        endpoint_tv_s_union: end_s.tv_distance(&end_u),
        joint_tv_r_s: law_r.joint_tv(&law_s, JOINT_COORD_TOL),
        union_law: law_u,
        paths: cfg.n_paths,
        violations,
    })
}

fn count_violations(stops: &[PathStops], bad: impl Fn(&PathStops) -> bool) -> u64 {
    stops.iter().filter(|p| bad(p)).count() as u64
}

/// Pathwise check of `τ_R = τ̄ ∧ τ̲`, where `τ̄` only watches new maxima
/// against the doubled-axis barrier and `τ̲` only new minima.
pub fn d_representation_check(
    barrier: &VhBarrier,
    lambda: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cfg: &McConfig,
) -> Result<u64, EngineError> {
    let db = barrier.to_dbarrier();
    let grid = CriticalGrid::new(lambda.locations(), barrier.coordinates());
    let direct = VhRule::new(barrier.clone()).snapped(&grid);
    let over = DRule {
        barrier: db.clone(),
        events: DEvents::MaxOnly,
    }
    .snapped(&grid);
    let under = DRule {
        barrier: db,
        events: DEvents::MinOnly,
    }
    .snapped(&grid);
    let refs: [&(dyn ExtremaRule + Sync); 3] = [&direct, &over, &under];
    let stops = pathwise_stops(&grid, &refs, lambda, nu, cfg)?;
    Ok(count_violations(&stops, |p| p[0] != min_stop(p[1], p[2])))
}

/// Per-atom check of a Monte Carlo law against an exact one: the largest
/// deviation in units of the binomial standard error `sqrt(p(1-p)/n)`.
pub fn binomial_z_scores(exact: &StoppedLaw, sampled: &StoppedLaw, n_paths: u64) -> Vec<(JointAtom, f64)> {
    let n = n_paths as f64;
    let mut out: Vec<(JointAtom, f64)> = exact
        .joint
        .iter()
        .map(|a| {
            let q = sampled
                .joint
                .iter()
                .find(|b| b.endpoint == a.endpoint && b.max == a.max && b.min == a.min)
                .map_or(0.0, |b| b.mass);
            let se = (a.mass * (1.0 - a.mass) / n).sqrt();
            let z = if se > 0.0 {
                (q - a.mass).abs() / se
            } else if q == a.mass {
                0.0
            } else {
                f64::INFINITY
            };
            (*a, z)
        })
        .collect();
    for b in &sampled.joint {
        if !exact
            .joint
            .iter()
            .any(|a| b.endpoint == a.endpoint && b.max == a.max && b.min == a.min)
        {
            out.push((*b, f64::INFINITY));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::{HLine, VLine};
    use crate::engine::vh_stopped_law;

    fn two_atom_law(extra: &[f64]) -> StoppedLaw {
        let b = VhBarrier::new([VLine { max: 1.0, depth: -1.0 }], [HLine { min: -1.0, right: 1.0 }]).unwrap();
        exact_law(
            &VhRule::new(b),
            &DiscreteMeasure::dirac(0.0),
            &DiscreteMeasure::zero(),
            extra,
        )
        .unwrap()
    }

    #[test]
    fn verify_embedding_examples() {
        let law = two_atom_law(&[]);
        let mu = DiscreteMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(verify_embedding(&law, &mu), 0.0);
        let lambda = DiscreteMeasure::new([(-1.0, 0.5), (2.0, 0.5)]).unwrap();
        let zero = vh_stopped_law(&VhBarrier::empty(), &lambda, &lambda).unwrap();
        assert_eq!(verify_embedding(&zero, &lambda), 0.0);
    }

    #[test]
    fn max_cdf_matches_gamblers_ruin() {
        let levels: Vec<f64> = (1..8).map(|k| f64::from(k) / 8.0).collect();
        let law = two_atom_law(&levels);
        let cdf = extrema_cdf_at(&law, Extremum::Max, &levels);
        for (&m, &f) in cdf.levels.iter().zip(&cdf.values) {
            // P[max ≤ m] = 1 - P[max > m] and P[max > m] = P[max ≥ m] off the atoms
            assert!((1.0 - f - 1.0 / (1.0 + m)).abs() < 1e-14, "{m}");
        }
        assert_eq!(extrema_cdf_at(&law, Extremum::Max, &[1.0]).values, vec![1.0]);
    }

    #[test]
    fn zero_time_cdf_is_starting_cdf() {
        let lambda = DiscreteMeasure::new([(-1.0, 0.25), (0.5, 0.75)]).unwrap();
        let law = vh_stopped_law(&VhBarrier::empty(), &lambda, &lambda).unwrap();
        let cdf = extrema_cdf(&law, Extremum::Max);
        assert_eq!(cdf, StepCdf::of_measure(&lambda));
        assert_eq!(extrema_cdf(&law, Extremum::Min), StepCdf::of_measure(&lambda));
    }

    #[test]
    fn symmetric_instance_min_cdf_reflects_max_cdf() {
        let levels = [-0.5, 0.5];
        let law = two_atom_law(&levels);
        assert_eq!(law.reflected().joint, law.joint);
        for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let min_cdf = extrema_cdf_at(&law, Extremum::Min, &[-x]).values[0];
            let max_below: f64 = law.joint.iter().filter(|a| a.max < x).map(|a| a.mass).sum();
            assert!((min_cdf - (1.0 - max_below)).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn dominance_examples() {
        let a = StepCdf::of_measure(&DiscreteMeasure::dirac(0.0));
        let b = StepCdf::of_measure(&DiscreteMeasure::dirac(1.0));
        assert_eq!(dominance(&a, &a), DominanceVerdict::Equal);
        assert_eq!(dominance(&a, &b), DominanceVerdict::FirstSmaller);
        assert_eq!(dominance(&b, &a), DominanceVerdict::SecondSmaller);
        let c = StepCdf::of_measure(&DiscreteMeasure::new([(-1.0, 0.5), (2.0, 0.5)]).unwrap());
        assert!(matches!(dominance(&c, &b), DominanceVerdict::Crossing { at } if at == 1.0));
    }

    #[test]
    fn mass_inside_a_grid_gap_shows_in_left_limits() {
        let law = |down: f64| {
            let joint = vec![
                JointAtom {
                    endpoint: -1.0,
                    max: 0.0,
                    min: -1.0,
                    mass: down,
                },
                JointAtom {
                    endpoint: 1.0,
                    max: 1.0,
                    min: 0.0,
                    mass: 1.0 - down,
                },
            ];
            StoppedLaw::new(joint, 1.0, DiscreteMeasure::zero())
        };
        let (a, b) = (law(0.5), law(0.6));
        let max = |l: &StoppedLaw| extrema_cdf(l, Extremum::Max);
        assert_eq!(max(&a).values, max(&b).values);
        assert_eq!(dominance(&max(&a), &max(&b)), DominanceVerdict::SecondSmaller);
        let min = |l: &StoppedLaw| extrema_cdf(l, Extremum::Min);
        assert_eq!(min(&a).left, vec![0.0, 1.0]);
        assert_eq!(dominance(&min(&a), &min(&b)), DominanceVerdict::SecondSmaller);
    }

    #[test]
    fn objective_examples() {
        let zero = vh_stopped_law(
            &VhBarrier::empty(),
            &DiscreteMeasure::dirac(0.0),
            &DiscreteMeasure::dirac(0.0),
        )
        .unwrap();
        for phi in AuxiliaryFunction::battery(&[-1.0, 0.0, 1.0]) {
            assert_eq!(objective_vector(&zero, &phi).g1, phi.eval(0.0));
        }
        let a = two_atom_law(&[]);
        let b = zero;
        for phi in AuxiliaryFunction::battery(&[-1.0, 0.0, 1.0]) {
            let scaled = AuxiliaryFunction::Scaled {
                scale: 2.0,
                inner: Box::new(phi.clone()),
            };
            let plain = objective_vector(&a, &phi).lex_cmp(&objective_vector(&b, &phi), COMPARE_TOL);
            let twice = objective_vector(&a, &scaled).lex_cmp(&objective_vector(&b, &scaled), COMPARE_TOL);
            assert_eq!(plain, twice);
        }
    }

    #[test]
    fn battery_is_strictly_increasing_and_bounded() {
        let battery = AuxiliaryFunction::battery(&[-2.0, -0.5, 0.0, 1.0, 3.0]);
        for phi in &battery {
            let xs: Vec<f64> = (-400..=400).map(|k| f64::from(k) / 40.0).collect();
            for w in xs.windows(2) {
                assert!(phi.eval(w[1]) > phi.eval(w[0]), "{} at {}", phi.name(), w[0]);
            }
            assert!(phi.eval(1e6).is_finite() && phi.eval(1e6) < 10.0);
            assert!(phi.eval(-1e6) > -10.0);
        }
    }

    #[test]
    fn audit_flags_interior_stops() {
        let mut law = two_atom_law(&[]);
        assert!(monotonicity_audit(&law).is_empty());
        law.joint.push(JointAtom {
            endpoint: 0.0,
            max: 1.0,
            min: -1.0,
            mass: 0.1,
        });
        assert_eq!(monotonicity_audit(&law).len(), 1);
        let zero = vh_stopped_law(
            &VhBarrier::empty(),
            &DiscreteMeasure::dirac(0.0),
            &DiscreteMeasure::dirac(0.0),
        )
        .unwrap();
        assert!(monotonicity_audit(&zero).is_empty());
    }

    #[test]
    fn self_union_has_no_violations() {
        let b = VhBarrier::new(
            [VLine { max: 2.0, depth: -2.0 }, VLine { max: 0.0, depth: -1.5 }],
            [HLine { min: -2.0, right: 2.0 }],
        )
        .unwrap();
        let lambda = DiscreteMeasure::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        let nu = DiscreteMeasure::new([(0.0, 0.5)]).unwrap();
        let report = loynes_check(&b, &b, &lambda, &nu, &McConfig::with_paths(2_000, 1)).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.endpoint_tv_r_s, 0.0);
        assert_eq!(report.joint_tv_r_s, 0.0);
        assert_eq!(
            d_representation_check(&b, &lambda, &nu, &McConfig::with_paths(2_000, 2)).unwrap(),
            0
        );
    }
}
