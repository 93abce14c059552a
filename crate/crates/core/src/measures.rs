//! Finitely supported measures on the real line.
//!
//! A [`DiscreteMeasure`] holds the starting law, the target law and the
//! shared mass `λ ∧ μ` that a barrier embedding stops at time zero. The
//! order-theoretic tools needed to decide solvability live here as well:
//! potential functions and the convex order they characterise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::MeasureError;

/// Tolerance for mass and mean comparisons.
pub const MASS_TOL: f64 = 1e-12;

/// A single atom `p · δ_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    atoms: Vec<Atom>,
}

/// Finitely supported (sub-)probability measure.
///
/// Locations are strictly increasing and every stored mass is positive; the
/// zero measure is the empty atom list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl TryFrom<MeasureDoc> for DiscreteMeasure {
    type Error = MeasureError;

    fn try_from(doc: MeasureDoc) -> Result<Self, Self::Error> {
        DiscreteMeasure::new(doc.atoms.into_iter().map(|a| (a.x, a.p)))
    }
}

impl From<DiscreteMeasure> for MeasureDoc {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureDoc { atoms: m.atoms }
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn same_location(a: f64, b: f64) -> bool {
    (a - b).abs() <= MASS_TOL * a.abs().max(b.abs()).max(1.0)
}

impl DiscreteMeasure {
    /// Builds a measure from `(location, mass)` pairs.
    ///
    /// Duplicate locations, negative or non-finite masses and totals outside
    /// `[0, 1 + 1e-12]` are rejected. Zero masses are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MeasureError> {
        let mut out = Vec::new();
        for (x, p) in atoms {
            if !x.is_finite() {
                return Err(MeasureError::NonFiniteLocation(x));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(MeasureError::InvalidMass { x, p });
            }
            if p > 0.0 {
                out.push(Atom { x, p });
            } else if out.iter().any(|a: &Atom| a.x == x) {
                return Err(MeasureError::DuplicateLocation(x));
            }
        }
        out.sort_by(|a, b| a.x.total_cmp(&b.x));
        if let Some(w) = out.windows(2).find(|w| w[0].x == w[1].x) {
            return Err(MeasureError::DuplicateLocation(w[0].x));
        }
        let m = DiscreteMeasure { atoms: out };
        let total = m.total();
        if total > 1.0 + MASS_TOL {
            return Err(MeasureError::TotalOutOfRange(total));
        }
        Ok(m)
    }

    /// Builds a measure, summing masses of coinciding locations.
    pub fn merged(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MeasureError> {
        let mut raw: Vec<(f64, f64)> = atoms.into_iter().collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (x, p) in raw {
            match merged.last_mut() {
                Some(last) if same_location(last.0, x) => last.1 += p,
                _ => merged.push((x, p)),
            }
        }
        Self::new(merged)
    }

    /// The Dirac mass at `x`.
    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure {
            atoms: vec![Atom { x, p: 1.0 }],
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.x)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.p))
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= MASS_TOL
    }

    pub fn require_probability(&self) -> Result<(), MeasureError> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(MeasureError::NotProbability(self.total()))
        }
    }

    /// Mass of the atom at `x`, matching locations within `1e-12`.
    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms.iter().find(|a| same_location(a.x, x)).map_or(0.0, |a| a.p)
    }

    pub fn min_location(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.x)
    }

    pub fn max_location(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.x)
    }

    /// `Σ p · x^k` for `k ∈ {1, 2}`, compensated.
    pub fn moment(&self, k: u32) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.p * a.x.powi(k as i32)))
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Potential `u(x) = -Σ p · |x - location|`.
    pub fn potential(&self, x: f64) -> f64 {
        -compensated_sum(self.atoms.iter().map(|a| a.p * (x - a.x).abs()))
    }

    /// Atom-wise difference `self - other`, assuming `other ≤ self`.
    ///
    /// Atoms of `other` without a counterpart in `self` are ignored and
    /// masses are clamped at zero.
    pub fn minus(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let atoms = self
            .atoms
            .iter()
            .filter_map(|a| {
                let p = (a.p - other.mass_at(a.x)).max(0.0);
                (p > 0.0).then_some(Atom { x: a.x, p })
            })
            .collect();
        DiscreteMeasure { atoms }
    }

    /// Atom-wise sum; locations are merged within `1e-12`.
    pub fn plus(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure, MeasureError> {
        Self::merged(self.atoms.iter().chain(other.atoms.iter()).map(|a| (a.x, a.p)))
    }

    /// `true` when every atom of `self` is dominated by the matching atom of
    /// `other` (within `1e-12`).
    pub fn dominated_by(&self, other: &DiscreteMeasure) -> bool {
        self.atoms.iter().all(|a| a.p <= other.mass_at(a.x) + MASS_TOL)
    }

    /// Image under `x ↦ -x`.
    pub fn reflected(&self) -> DiscreteMeasure {
        let atoms = self.atoms.iter().rev().map(|a| Atom { x: -a.x, p: a.p }).collect();
        DiscreteMeasure { atoms }
    }

    /// Total-variation distance `½ Σ |a - b|` over the union of supports.
    pub fn tv_distance(&self, other: &DiscreteMeasure) -> f64 {
        let mut diffs = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.atoms, &other.atoms);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && !same_location(a[i].x, b[j].x) && a[i].x < b[j].x) {
                diffs.push(a[i].p);
                i += 1;
            } else if i == a.len() || (!same_location(a[i].x, b[j].x) && b[j].x < a[i].x) {
                diffs.push(b[j].p);
                j += 1;
            } else {
                diffs.push((a[i].p - b[j].p).abs());
                i += 1;
                j += 1;
            }
        }
        0.5 * compensated_sum(diffs)
    }
}

/// `Σ mass · location^k`.
pub fn moment(m: &DiscreteMeasure, k: u32) -> f64 {
    m.moment(k)
}

/// `u_m(x) = -Σ mass · |x - location|`.
pub fn potential(m: &DiscreteMeasure, x: f64) -> f64 {
    m.potential(x)
}

/// Decides `λ ≤ μ` in convex order for probability measures.
///
/// Potentials of atomic measures are piecewise linear with kinks at the
/// atoms, so comparing them on the union of supports (with equal means)
/// is exact.
pub fn convex_order(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> bool {
    if !lambda.is_probability() || !mu.is_probability() {
        return false;
    }
    if (lambda.mean() - mu.mean()).abs() > MASS_TOL {
        return false;
    }
    lambda
        .locations()
        .chain(mu.locations())
        .all(|x| mu.potential(x) <= lambda.potential(x) + MASS_TOL)
}

/// Largest measure dominated by both arguments: `(λ ∧ μ)({x}) = min(λ({x}), μ({x}))`.
pub fn meet(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> DiscreteMeasure {
    let atoms = lambda
        .atoms
        .iter()
        .filter_map(|a| {
            let p = a.p.min(mu.mass_at(a.x));
            (p > 0.0).then_some(Atom { x: a.x, p })
        })
        .collect();
    DiscreteMeasure { atoms }
}

/// Mean-preserving split of one atom: a fraction `stay` remains in place,
/// the rest moves to `x - down` or `x + up` with the unique martingale
/// weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub stay: f64,
    pub down: f64,
    pub up: f64,
}

impl Split {
    pub const IDENTITY: Split = Split {
        stay: 1.0,
        down: 1.0,
        up: 1.0,
    };
}

/// A martingale kernel acting atom-by-atom on a discrete measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleKernel {
    pub splits: Vec<Split>,
}

impl MartingaleKernel {
    pub fn identity(n: usize) -> Self {
        MartingaleKernel {
            splits: vec![Split::IDENTITY; n],
        }
    }

    /// Pushes `m` through the kernel. The result dominates `m` in convex order.
    ///
    /// # Panics
    ///
    /// Panics if the kernel has fewer splits than `m` has atoms.
    pub fn apply(&self, m: &DiscreteMeasure) -> Result<DiscreteMeasure, MeasureError> {
        assert!(self.splits.len() >= m.len(), "kernel shorter than measure");
        let mut out = Vec::with_capacity(3 * m.len());
        for (a, s) in m.atoms.iter().zip(&self.splits) {
            let kept = a.p * s.stay;
            if kept > 0.0 {
                out.push((a.x, kept));
            }
            let moving = a.p - kept;
            if moving > 0.0 {
                let width = s.down + s.up;
                out.push((a.x - s.down, moving * s.up / width));
                out.push((a.x + s.up, moving * s.down / width));
            }
        }
        DiscreteMeasure::merged(out)
    }
}

fn tick(rng: &mut ChaCha8Rng, spread: f64, lo_ticks: u32, hi_ticks: u32) -> f64 {
    f64::from(rng.random_range(lo_ticks..=hi_ticks)) * spread / 64.0
}

fn random_kernel(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> MartingaleKernel {
    let splits = (0..n)
        .map(|_| {
            let stay = if rng.random_bool(0.3) {
                f64::from(rng.random_range(1..=3u32)) / 4.0
            } else {
                0.0
            };
            Split {
                stay,
                down: tick(rng, spread, 16, 64),
                up: tick(rng, spread, 16, 64),
            }
        })
        .collect();
    MartingaleKernel { splits }
}

/// Random pair `(λ, μ)` with `λ ≤ μ` in convex order, deterministic in `seed`.
///
/// `λ` has `n_atoms` atoms on a lattice of mesh `spread / 64` inside
/// `[-spread, spread]`; `μ` is the image of `λ` under a random martingale
/// kernel. Some atoms keep part of their mass in place so that the two
/// laws frequently share mass.
///
/// # Panics
///
/// Panics if `n_atoms == 0` or `spread <= 0`.
pub fn random_convex_pair(seed: u64, n_atoms: usize, spread: f64) -> (DiscreteMeasure, DiscreteMeasure) {
    assert!(n_atoms >= 1 && spread > 0.0, "need n_atoms >= 1 and spread > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ticks: Vec<i32> = Vec::with_capacity(n_atoms);
    while ticks.len() < n_atoms {
        let t = rng.random_range(-64..=64);
        if !ticks.contains(&t) {
            ticks.push(t);
        }
    }
    let weights: Vec<f64> = (0..n_atoms).map(|_| rng.random_range(1..=8u32).into()).collect();
    let wsum: f64 = weights.iter().sum();
    let lambda = DiscreteMeasure::new(
        ticks
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| (f64::from(t) * spread / 64.0, w / wsum)),
    )
    .expect("lattice atoms are distinct");
    let kernel = random_kernel(&mut rng, n_atoms, spread);
    let mu = kernel.apply(&lambda).expect("kernel preserves total mass");
    (lambda, mu)
}

/// Instance `seed` of the standard test corpus. Every fifth instance
/// starts from `δ₀` with a random point-start target; the others are
/// random convex pairs with two to five starting atoms on `[-2, 2]`.
pub fn corpus_pair(seed: u64) -> (DiscreteMeasure, DiscreteMeasure) {
    if seed.is_multiple_of(5) {
        (DiscreteMeasure::dirac(0.0), random_point_start_target(seed, 2.0))
    } else {
        random_convex_pair(seed, 2 + (seed % 4) as usize, 2.0)
    }
}

/// Random target for a Dirac start at zero: two rounds of mean-preserving
/// dilation, giving three or four atoms with mean zero.
pub fn random_point_start_target(seed: u64, spread: f64) -> DiscreteMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = MartingaleKernel {
        splits: vec![Split {
            stay: 0.0,
            down: tick(&mut rng, spread, 16, 64),
            up: tick(&mut rng, spread, 16, 64),
        }],
    };
    let stage = first.apply(&DiscreteMeasure::dirac(0.0)).expect("valid split");
    let second = MartingaleKernel {
        splits: (0..stage.len())
            .map(|i| {
                Split {
                    stay: 0.0,
                    down: tick(&mut rng, spread, 8, 48),
                    up: tick(&mut rng, spread, 8, 48),
                }
                .or_identity(i == 1 && rng.random_bool(0.25))
            })
            .collect(),
    };
    second.apply(&stage).expect("valid split")
}

impl Split {
    fn or_identity(self, identity: bool) -> Split {
        if identity {
            Split::IDENTITY
        } else {
            self
        }
    }
}
