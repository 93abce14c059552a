//! Calibration of the Perkins vh-barrier for atomic starting and target laws.
//!
//! The shared mass `ν = λ ∧ μ` is stopped at time zero. What remains,
//! `λ' = λ - ν` and `μ' = μ - ν`, is still in convex order and lives on
//! disjoint supports. The extreme atoms of `μ'` are caught by full lines;
//! every interior atom `z` gets one control `θ ∈ [0, 2]`:
//!
//! * `θ ∈ [0, 1]`: a v-line at `z` reaching from `z` down to `z - θ (z - y_lo)`;
//! * `θ ∈ (1, 2]`: a full v-line and an h-line at `z` whose right end moves
//!   from `z` to `x_hi`.
//!
//! The mass stopped at `z` grows with `θ_z` and shrinks with every other
//! control, so Gauss-Seidel sweeps started from zero increase monotonically
//! towards the solution. A damped Newton step with a finite-difference
//! Jacobian finishes the job once the residual is small.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barriers::{HLine, VLine, VhBarrier};
use crate::engine::{exact_law, Mirror, StoppedLaw, VhRule};
use crate::error::{CalibrationError, EngineError};
use crate::measures::{convex_order, meet, DiscreteMeasure};
use crate::rules::StoppingRule;

/// Which running extremum the calibrated rule optimises first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Minimise the law of the running maximum.
    #[default]
    MaxPriority,
    /// Mirror image: the barrier is stated for the reflected path `-B`.
    MinPriority,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Target total-variation residual.
    pub tol: f64,
    /// Cap on sweeps plus Newton steps.
    pub max_iterations: usize,
    /// Smallest bracket width in a one-dimensional solve.
    pub bracket_floor: f64,
    /// Sweeps without improvement before giving up.
    pub stall_sweeps: usize,
    pub orientation: Orientation,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tol: 1e-10,
            max_iterations: 10_000,
            bracket_floor: 1e-14,
            stall_sweeps: 25,
            orientation: Orientation::MaxPriority,
        }
    }
}

impl CalibrationOptions {
    pub fn with_tol(tol: f64) -> Self {
        CalibrationOptions { tol, ..Self::default() }
    }
}

/// Control of the lines at one interior target level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelControl {
    pub level: f64,
    pub theta: f64,
}

/// A calibrated Perkins rule with its exact-engine certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub rule: StoppingRule,
    pub residual_tv: f64,
    pub iterations: usize,
    /// Exact stopped law of `rule` under `lambda`, in original coordinates.
    pub certificate: StoppedLaw,
    pub orientation: Orientation,
    pub controls: Vec<LevelControl>,
    pub lambda: DiscreteMeasure,
    pub mu: DiscreteMeasure,
}

impl CalibrationResult {
    pub fn barrier(&self) -> &VhBarrier {
        match &self.rule {
            StoppingRule::Perkins { barrier, .. } => barrier,
            _ => unreachable!("calibration always yields a Perkins rule"),
        }
    }

    pub fn atom_stop(&self) -> &DiscreteMeasure {
        match &self.rule {
            StoppingRule::Perkins { atom_stop, .. } => atom_stop,
            _ => unreachable!("calibration always yields a Perkins rule"),
        }
    }
}

/// The calibration problem in max-priority coordinates.
struct Problem {
    lambda: DiscreteMeasure,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    x_hi: f64,
    y_lo: f64,
    levels: Vec<f64>,
    targets: Vec<f64>,
    mass_below: Vec<bool>,
}

impl Problem {
    fn new(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> Self {
        let nu = meet(lambda, mu);
        let lam_p = lambda.minus(&nu);
        let mu_p = mu.minus(&nu);
        let (y_lo, x_hi) = match (mu_p.min_location(), mu_p.max_location()) {
            (Some(a), Some(b)) => (a, b),
            _ => (0.0, 0.0),
        };
        let interior: Vec<f64> = mu_p.locations().filter(|&z| z > y_lo && z < x_hi).collect();
        let order = outside_in(&interior, y_lo, x_hi);
        let levels: Vec<f64> = order.iter().map(|&k| interior[k]).collect();
        let targets = levels.iter().map(|&z| mu.mass_at(z)).collect();
        let mass_below = levels.iter().map(|&z| lam_p.locations().any(|x| x < z)).collect();
        Problem {
            lambda: lambda.clone(),
            mu: mu.clone(),
            nu,
            x_hi,
            y_lo,
            levels,
            targets,
            mass_below,
        }
    }

    fn trivial(&self) -> bool {
        self.x_hi <= self.y_lo
    }

    fn barrier(&self, theta: &[f64]) -> VhBarrier {
        if self.trivial() {
            return VhBarrier::empty();
        }
        let mut v = vec![VLine {
            max: self.x_hi,
            depth: self.y_lo,
        }];
        let mut h = vec![HLine {
            min: self.y_lo,
            right: self.x_hi,
        }];
        for ((&z, &t), &below) in self.levels.iter().zip(theta).zip(&self.mass_below) {
            if t <= 0.0 {
                continue;
            }
            if t <= 1.0 {
                v.push(VLine {
                    max: z,
                    depth: (z - t * (z - self.y_lo)).max(self.y_lo),
                });
            } else {
                if below {
                    v.push(VLine {
                        max: z,
                        depth: self.y_lo,
                    });
                }
                h.push(HLine {
                    min: z,
                    right: (z + (t - 1.0) * (self.x_hi - z)).min(self.x_hi),
                });
            }
        }
        VhBarrier::new(v, h).expect("controls in [0, 2] give well-formed lines")
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Eval, EngineError> {
        let law = exact_law(&VhRule::new(self.barrier(theta)), &self.lambda, &self.nu, &[])?;
        let end = law.endpoint_law();
        let residual = end.tv_distance(&self.mu);
        let gaps = self
            .levels
            .iter()
            .zip(&self.targets)
            .map(|(&z, &target)| end.mass_at(z) - target)
            .collect();
        Ok(Eval { law, residual, gaps })
    }
}

struct Eval {
    law: StoppedLaw,
    residual: f64,
    gaps: Vec<f64>,
}

/// Indices of `levels` ordered from the outermost to the innermost.
fn outside_in(levels: &[f64], lo: f64, hi: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..levels.len()).collect();
    idx.sort_by(|&a, &b| {
        let da = (levels[a] - lo).min(hi - levels[a]);
        let db = (levels[b] - lo).min(hi - levels[b]);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    idx
}

/// Solver state shared by the plain and the perturbed calibration.
struct Solver<'a> {
    problem: &'a Problem,
    opts: CalibrationOptions,
    theta: Vec<f64>,
    current: Eval,
    best: (Vec<f64>, f64),
    iterations: usize,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a Problem, opts: CalibrationOptions, theta: Vec<f64>) -> Result<Self, EngineError> {
        let current = problem.evaluate(&theta)?;
        let best = (theta.clone(), current.residual);
        Ok(Solver {
            problem,
            opts,
            theta,
            current,
            best,
            iterations: 0,
        })
    }

    fn accept(&mut self, theta: Vec<f64>, eval: Eval) {
        if eval.residual < self.best.1 {
            self.best = (theta.clone(), eval.residual);
        }
        self.theta = theta;
        self.current = eval;
    }

    /// Solves for `θ_k` with the other controls frozen (Illinois method).
    fn solve_level(&mut self, k: usize, tol_f: f64) -> Result<(), EngineError> {
        let gap = |s: &Self, t: f64| -> Result<(f64, Eval), EngineError> {
            let mut theta = s.theta.clone();
            theta[k] = t;
            let e = s.problem.evaluate(&theta)?;
            Ok((e.gaps[k], e))
        };
        let t0 = self.theta[k];
        let g0 = self.current.gaps[k];
        if g0.abs() <= tol_f {
            return Ok(());
        }
        let (mut a, mut fa, mut b, mut fb) = if g0 < 0.0 {
            let (fb, eb) = gap(self, 2.0)?;
            if fb <= 0.0 {
                let mut theta = self.theta.clone();
                theta[k] = 2.0;
                self.accept(theta, eb);
                return Ok(());
            }
            (t0, g0, 2.0, fb)
        } else {
            let (fa, ea) = gap(self, 0.0)?;
            if fa >= 0.0 {
                let mut theta = self.theta.clone();
                theta[k] = 0.0;
                self.accept(theta, ea);
                return Ok(());
            }
            (0.0, fa, t0, g0)
        };
        let mut side = 0i8;
        let mut last: Option<(f64, Eval)> = None;
        while b - a > self.opts.bracket_floor {
            let t = ((a * fb - b * fa) / (fb - fa)).clamp(a, b);
            let t = if t <= a || t >= b { 0.5 * (a + b) } else { t };
            let (ft, et) = gap(self, t)?;
            let done = ft.abs() <= tol_f;
            last = Some((t, et));
            if done {
                break;
            }
            if ft < 0.0 {
                a = t;
                fa = ft;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = t;
                fb = ft;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        if let Some((t, e)) = last {
            let mut theta = self.theta.clone();
            theta[k] = t;
            self.accept(theta, e);
        }
        Ok(())
    }

    fn sweep(&mut self, order: &[usize]) -> Result<(), EngineError> {
        let n = order.len().max(1) as f64;
        let tol_f = 0.1 * self.opts.tol / n;
        for &k in order {
            self.solve_level(k, tol_f)?;
        }
        self.iterations += 1;
        Ok(())
    }

    /// One damped Newton step on the level gaps; returns whether it
    /// reduced the residual.
    fn newton(&mut self) -> Result<bool, EngineError> {
        let n = self.theta.len();
        let h = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for w in 0..n {
            let mut theta = self.theta.clone();
            let step = if theta[w] + h <= 2.0 { h } else { -h };
            theta[w] += step;
            let e = self.problem.evaluate(&theta)?;
            for z in 0..n {
                jac[(z, w)] = (e.gaps[z] - self.current.gaps[z]) / step;
            }
        }
        self.iterations += 1;
        let rhs = -DVector::from_column_slice(&self.current.gaps);
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Ok(false);
        };
        if !delta.iter().all(|d| d.is_finite()) {
            return Ok(false);
        }
        let mut scale = 1.0;
        for _ in 0..8 {
            let theta: Vec<f64> = self
                .theta
                .iter()
                .zip(delta.iter())
                .map(|(t, d)| (t + scale * d).clamp(0.0, 2.0))
                .collect();
            let e = self.problem.evaluate(&theta)?;
            if e.residual < self.current.residual {
                self.accept(theta, e);
                return Ok(true);
            }
            scale *= 0.5;
        }
        Ok(false)
    }

    fn run(&mut self, order: &[usize]) -> Result<(), EngineError> {
        let mut since_best = 0;
        let mut best_seen = self.current.residual;
        while self.current.residual > self.opts.tol && self.iterations < self.opts.max_iterations {
            if self.current.residual < 1e-3 && self.newton()? {
                continue;
            }
            self.sweep(order)?;
            if self.current.residual < best_seen * (1.0 - 1e-6) {
                best_seen = self.current.residual;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= self.opts.stall_sweeps {
                    break;
                }
            }
        }
        Ok(())
    }

    fn finish(self, orientation: Orientation) -> Result<CalibrationResult, CalibrationError> {
        let (theta, _) = self.best;
        let problem = self.problem;
        let eval = problem.evaluate(&theta)?;
        let result = assemble(problem, &theta, eval, self.iterations, orientation);
        if result.residual_tv <= self.opts.tol {
            Ok(result)
        } else {
            Err(CalibrationError::NoProgress {
                residual: result.residual_tv,
                iterations: result.iterations,
                best: Box::new(result),
            })
        }
    }
}

fn assemble(
    problem: &Problem,
    theta: &[f64],
    eval: Eval,
    iterations: usize,
    orientation: Orientation,
) -> CalibrationResult {
    let rule = StoppingRule::Perkins {
        barrier: problem.barrier(theta),
        atom_stop: problem.nu.clone(),
    };
    let controls = problem
        .levels
        .iter()
        .zip(theta)
        .map(|(&level, &theta)| LevelControl { level, theta })
        .collect();
    let (certificate, lambda, mu) = match orientation {
        Orientation::MaxPriority => (eval.law, problem.lambda.clone(), problem.mu.clone()),
        Orientation::MinPriority => (eval.law.reflected(), problem.lambda.reflected(), problem.mu.reflected()),
    };
    CalibrationResult {
        rule,
        residual_tv: eval.residual,
        iterations,
        certificate,
        orientation,
        controls,
        lambda,
        mu,
    }
}

fn prepare(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    opts: &CalibrationOptions,
) -> Result<Problem, CalibrationError> {
    lambda.require_probability()?;
    mu.require_probability()?;
    if !convex_order(lambda, mu) {
        return Err(CalibrationError::ConvexOrderViolated);
    }
    Ok(match opts.orientation {
        Orientation::MaxPriority => Problem::new(lambda, mu),
        Orientation::MinPriority => Problem::new(&lambda.reflected(), &mu.reflected()),
    })
}

/// Finds a vh-barrier whose hitting time, after stopping `λ ∧ μ` at time
/// zero, embeds `mu` from `lambda` with total-variation residual at most
/// `tol`.
pub fn calibrate_perkins(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    tol: f64,
) -> Result<CalibrationResult, CalibrationError> {
    calibrate_with(lambda, mu, &CalibrationOptions::with_tol(tol))
}

/// [`calibrate_perkins`] with explicit solver options.
pub fn calibrate_with(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult, CalibrationError> {
    let problem = prepare(lambda, mu, opts)?;
    let order: Vec<usize> = (0..problem.levels.len()).collect();
    let mut solver = Solver::new(&problem, *opts, vec![0.0; order.len()])?;
    solver.run(&order)?;
    solver.finish(opts.orientation)
}

/// Recalibrates along a different trajectory: random starting controls and
/// a random sweep order, both drawn from `seed`.
pub fn recalibrate_perturbed(
    result: &CalibrationResult,
    seed: u64,
    tol: f64,
) -> Result<CalibrationResult, CalibrationError> {
    let opts = CalibrationOptions {
        tol,
        orientation: result.orientation,
        ..CalibrationOptions::default()
    };
    let (lambda, mu) = match result.orientation {
        Orientation::MaxPriority => (result.lambda.clone(), result.mu.clone()),
        Orientation::MinPriority => (result.lambda.reflected(), result.mu.reflected()),
    };
    let problem = prepare(&lambda, &mu, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..problem.levels.len()).collect();
    order.shuffle(&mut rng);
    let theta: Vec<f64> = order.iter().map(|_| rng.random_range(0.0..2.0)).collect();
    let mut solver = Solver::new(&problem, opts, theta)?;
    solver.run(&order)?;
    solver.finish(opts.orientation)
}

/// A rule embedding the same target as `result`, found along a perturbed
/// search trajectory.
pub fn perturb_solution(result: &CalibrationResult, seed: u64) -> Result<StoppingRule, CalibrationError> {
    Ok(recalibrate_perturbed(result, seed, result.residual_tv.max(1e-10))?.rule)
}

/// Exact stopped law of a calibrated rule in original coordinates.
pub fn rule_law(result: &CalibrationResult) -> Result<StoppedLaw, EngineError> {
    rule_law_refined(result, &[])
}

/// As [`rule_law`], recording extrema on a grid refined by `extra_levels`.
pub fn rule_law_refined(result: &CalibrationResult, extra_levels: &[f64]) -> Result<StoppedLaw, EngineError> {
    let rule = VhRule::new(result.barrier().clone());
    match result.orientation {
        Orientation::MaxPriority => exact_law(&rule, &result.lambda, result.atom_stop(), extra_levels),
        Orientation::MinPriority => exact_law(
            &Mirror(rule),
            &result.lambda,
            &result.atom_stop().reflected(),
            extra_levels,
        ),
    }
}

/// Barrier coordinates of a calibrated rule in original coordinates.
pub fn rule_levels(result: &CalibrationResult) -> Vec<f64> {
    let xs = result.barrier().coordinates();
    match result.orientation {
        Orientation::MaxPriority => xs,
        Orientation::MinPriority => xs.into_iter().map(|x| -x).collect(),
    }
}

/// Total variation between the joint stopped laws of two calibrations of
/// the same instance, with extrema recorded on a common grid.
pub fn joint_law_distance(a: &CalibrationResult, b: &CalibrationResult) -> Result<f64, EngineError> {
    let mut levels = rule_levels(a);
    levels.extend(rule_levels(b));
    let law_a = rule_law_refined(a, &levels)?;
    let law_b = rule_law_refined(b, &levels)?;
    Ok(law_a.joint_tv(&law_b, crate::analysis::JOINT_COORD_TOL))
}

/// A one-parameter family of atomic targets on a fixed support.
pub trait AtomFamily {
    /// Starting law shared by the family.
    fn lambda(&self) -> DiscreteMeasure;
    /// Support common to all members.
    fn support(&self) -> Vec<f64>;
    fn member(&self, alpha: f64) -> Result<DiscreteMeasure, crate::error::MeasureError>;
}

/// `λ = ¼δ₋₁ + ½δ₀ + ¼δ₁`, `μ_α = (1-α)/2 δ₋₂ + α δ₀ + (1-α)/2 δ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExampleFamily;

impl AtomFamily for ExampleFamily {
    fn lambda(&self) -> DiscreteMeasure {
        DiscreteMeasure::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).expect("valid law")
    }

    fn support(&self) -> Vec<f64> {
        vec![-2.0, 0.0, 2.0]
    }

    fn member(&self, alpha: f64) -> Result<DiscreteMeasure, crate::error::MeasureError> {
        let side = (1.0 - alpha) / 2.0;
        DiscreteMeasure::new([(-2.0, side), (0.0, alpha), (2.0, side)])
    }
}

/// Starting law `δ₀` with targets on `{-1, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PointStartFamily;

impl AtomFamily for PointStartFamily {
    fn lambda(&self) -> DiscreteMeasure {
        DiscreteMeasure::dirac(0.0)
    }

    fn support(&self) -> Vec<f64> {
        vec![-1.0, 0.0, 1.0]
    }

    fn member(&self, alpha: f64) -> Result<DiscreteMeasure, crate::error::MeasureError> {
        let side = (1.0 - alpha) / 2.0;
        DiscreteMeasure::new([(-1.0, side), (0.0, alpha), (1.0, side)])
    }
}

/// Largest target mass at `level` embeddable with a v-line only, and with
/// a v-line plus an h-line. All starting mass on the family support is
/// stopped at time zero, the extreme support points carry full lines, and
/// the line at `level` is pushed to its extreme position.
pub fn feasible_band(family: &dyn AtomFamily, level: f64) -> Result<(f64, f64), EngineError> {
    let lambda = family.lambda();
    let support = family.support();
    let nu = DiscreteMeasure::new(
        lambda
            .atoms()
            .iter()
            .filter(|a| support.contains(&a.x))
            .map(|a| (a.x, a.p)),
    )?;
    let lo = support.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let outer_v = VLine { max: hi, depth: lo };
    let outer_h = HLine { min: lo, right: hi };
    let mass = |v: Vec<VLine>, h: Vec<HLine>| -> Result<f64, EngineError> {
        let barrier = VhBarrier::new(v, h).expect("family lines are well formed");
        let law = exact_law(&VhRule::new(barrier), &lambda, &nu, &[])?;
        Ok(law.endpoint_law().mass_at(level))
    };
    let v_only = mass(vec![outer_v, VLine { max: level, depth: lo }], vec![outer_h])?;
    let vh = mass(
        vec![outer_v, VLine { max: level, depth: lo }],
        vec![outer_h, HLine { min: level, right: hi }],
    )?;
    Ok((v_only, vh))
}

/// How the stopped mass at one level is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelUse {
    pub at_time_zero: bool,
    pub v_line: bool,
    pub h_line: bool,
}

/// Reads off from a certificate which mechanisms stop mass at `level`.
pub fn level_use(certificate: &StoppedLaw, level: f64, mass_tol: f64) -> LevelUse {
    let mass = |pred: &dyn Fn(&crate::engine::JointAtom) -> bool| -> f64 {
        certificate
            .joint
            .iter()
            .filter(|a| a.endpoint == level && pred(a))
            .map(|a| a.mass)
            .sum()
    };
    LevelUse {
        at_time_zero: mass(&|a| a.at_time_zero()) > mass_tol,
        v_line: mass(&|a| !a.at_time_zero() && a.stopped_at_max()) > mass_tol,
        h_line: mass(&|a| !a.at_time_zero() && a.stopped_at_min()) > mass_tol,
    }
}

/// The four regimes of the example family at level zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleCase {
    AtomStopOnly,
    VLine,
    VAndHLine,
    NotInConvexOrder,
}

impl ExampleCase {
    pub fn label(&self) -> &'static str {
        match self {
            ExampleCase::AtomStopOnly => "[0, 1/2]: atom-stop only",
            ExampleCase::VLine => "(1/2, 5/8]: v-line",
            ExampleCase::VAndHLine => "(5/8, 3/4]: v-line and h-line",
            ExampleCase::NotInConvexOrder => "(3/4, 1]: not in convex order",
        }
    }

    /// Classifies a certificate of the example family by the mechanisms
    /// stopping mass at zero after time zero.
    pub fn from_certificate(certificate: &StoppedLaw, mass_tol: f64) -> ExampleCase {
        let u = level_use(certificate, 0.0, mass_tol);
        match (u.v_line, u.h_line) {
            (_, true) => ExampleCase::VAndHLine,
            (true, false) => ExampleCase::VLine,
            (false, false) => ExampleCase::AtomStopOnly,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::JointAtom;

    fn example(alpha: f64) -> Result<CalibrationResult, CalibrationError> {
        let fam = ExampleFamily;
        calibrate_perkins(&fam.lambda(), &fam.member(alpha).unwrap(), 1e-12)
    }

    #[test]
    fn example_low_alpha_uses_atom_stop_only() {
        let r = example(0.4).unwrap();
        assert!((r.atom_stop().mass_at(0.0) - 0.4).abs() < 1e-15);
        assert!(r.barrier().v_line_at(0.0).is_none());
        assert!(r.barrier().h_line_at(0.0).is_none());
        assert_eq!(r.barrier().v_line_at(2.0).map(|l| l.depth), Some(-2.0));
        assert_eq!(r.barrier().h_line_at(-2.0).map(|l| l.right), Some(2.0));
        assert_eq!(
            ExampleCase::from_certificate(&r.certificate, 1e-12),
            ExampleCase::AtomStopOnly
        );
    }

    #[test]
    fn example_v_line_depth_matches_gamblers_ruin() {
        // from -1, reach 0 before d with probability (-1 - d) / (0 - d)
        for (alpha, depth) in [(0.6, -5.0 / 3.0), (0.55, -1.25)] {
            let r = example(alpha).unwrap();
            let d = r.barrier().v_line_at(0.0).unwrap().depth;
            assert!((d - depth).abs() < 1e-9, "alpha {alpha}: {d}");
            assert!(r.barrier().h_line_at(0.0).is_none());
            assert_eq!(ExampleCase::from_certificate(&r.certificate, 1e-12), ExampleCase::VLine);
        }
    }

    #[test]
    fn example_h_line_right_end() {
        // full v-line gives 5/8; from 1, reach 0 before r with probability (r - 1) / r
        let r = example(0.7).unwrap();
        let right = r.barrier().h_line_at(0.0).unwrap().right;
        assert!((right - 10.0 / 7.0).abs() < 1e-9, "{right}");
        assert_eq!(
            ExampleCase::from_certificate(&r.certificate, 1e-12),
            ExampleCase::VAndHLine
        );
    }

    #[test]
    fn example_high_alpha_is_rejected() {
        assert!(matches!(example(0.8), Err(CalibrationError::ConvexOrderViolated)));
    }

    #[test]
    fn example_duration_identity() {
        for alpha in [0.3, 0.6, 0.7, 0.75] {
            let r = example(alpha).unwrap();
            let expected = 4.0 * (1.0 - alpha) - 0.5;
            assert!(
                (r.certificate.expected_duration - expected).abs() < 1e-8,
                "alpha {alpha}"
            );
        }
    }

    #[test]
    fn example_bands() {
        let (v, vh) = feasible_band(&ExampleFamily, 0.0).unwrap();
        assert!((v - 0.625).abs() < 1e-15);
        assert!((vh - 0.75).abs() < 1e-15);
        let (v, vh) = feasible_band(&PointStartFamily, 0.0).unwrap();
        assert_eq!((v, vh), (1.0, 1.0));
    }

    #[test]
    fn identical_laws_need_no_lines() {
        let lambda = ExampleFamily.lambda();
        let r = calibrate_perkins(&lambda, &lambda, 1e-10).unwrap();
        assert!(r.barrier().is_empty());
        assert_eq!(r.certificate.expected_duration, 0.0);
        assert_eq!(r.residual_tv, 0.0);
    }

    #[test]
    fn min_priority_mirrors_the_instance() {
        let lambda = DiscreteMeasure::new([(-0.5, 0.5), (0.5, 0.5)]).unwrap();
        let mu = DiscreteMeasure::new([(-2.0, 0.25), (-0.5, 0.25), (1.0, 0.25), (1.5, 0.25)]).unwrap();
        assert!(convex_order(&lambda, &mu));
        let opts = CalibrationOptions {
            orientation: Orientation::MinPriority,
            ..CalibrationOptions::with_tol(1e-11)
        };
        let r = calibrate_with(&lambda, &mu, &opts).unwrap();
        assert_eq!(r.lambda, lambda);
        assert!(r.certificate.endpoint_law().tv_distance(&mu) <= 1e-11);
        let direct = rule_law(&r).unwrap();
        assert!(direct.joint_tv(&r.certificate, 1e-12) < 1e-12);
    }

    #[test]
    fn perturbed_recalibration_agrees() {
        let fam = ExampleFamily;
        let r = example(0.6).unwrap();
        for seed in 0..3 {
            let p = recalibrate_perturbed(&r, seed, 1e-12).unwrap();
            assert!(p.certificate.joint_tv(&r.certificate, 1e-7) <= 1e-9);
            assert!(p.certificate.endpoint_law().tv_distance(&fam.member(0.6).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn level_use_reads_records() {
        let law = StoppedLaw::new(
            vec![
                JointAtom {
                    endpoint: 0.0,
                    max: 0.0,
                    min: 0.0,
                    mass: 0.5,
                },
                JointAtom {
                    endpoint: 0.0,
                    max: 0.0,
                    min: -1.0,
                    mass: 0.25,
                },
                JointAtom {
                    endpoint: 2.0,
                    max: 2.0,
                    min: -1.0,
                    mass: 0.25,
                },
            ],
            1.0,
            DiscreteMeasure::dirac(0.0),
        );
        let u = level_use(&law, 0.0, 1e-12);
        assert!(u.at_time_zero && u.v_line && !u.h_line);
    }
}
