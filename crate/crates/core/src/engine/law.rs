use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::measures::{compensated_sum, DiscreteMeasure};

/// One atom of the joint law of `(B_τ, max_{s≤τ} B_s, min_{s≤τ} B_s)`.
///
/// `max` and `min` are the last grid levels the path reached; records with
/// `max == min` are stops at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointAtom {
    pub endpoint: f64,
    pub max: f64,
    pub min: f64,
    pub mass: f64,
}

impl JointAtom {
    pub fn at_time_zero(&self) -> bool {
        self.max == self.min
    }

    /// The path stopped while sitting at its running maximum.
    pub fn stopped_at_max(&self) -> bool {
        self.endpoint == self.max
    }

    pub fn stopped_at_min(&self) -> bool {
        self.endpoint == self.min
    }

    fn key_cmp(&self, other: &JointAtom) -> Ordering {
        self.endpoint
            .total_cmp(&other.endpoint)
            .then(self.max.total_cmp(&other.max))
            .then(self.min.total_cmp(&other.min))
    }
}

/// Joint law of a stopped path together with `E[τ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppedLaw {
    pub joint: Vec<JointAtom>,
    pub expected_duration: f64,
    pub atom_mass_at_zero: DiscreteMeasure,
}

impl StoppedLaw {
    /// Sorts records by `(endpoint, max, min)` and merges duplicates.
    pub fn new(mut joint: Vec<JointAtom>, expected_duration: f64, atom_mass_at_zero: DiscreteMeasure) -> Self {
        joint.retain(|a| a.mass > 0.0);
        joint.sort_by(JointAtom::key_cmp);
        joint.dedup_by(|next, kept| {
            let same = next.key_cmp(kept) == Ordering::Equal;
            if same {
                kept.mass += next.mass;
            }
            same
        });
        StoppedLaw {
            joint,
            expected_duration,
            atom_mass_at_zero,
        }
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.joint.iter().map(|a| a.mass))
    }

    /// Law of `B_τ`.
    pub fn endpoint_law(&self) -> DiscreteMeasure {
        DiscreteMeasure::merged(self.joint.iter().map(|a| (a.endpoint, a.mass)))
            .expect("stopped masses form a sub-probability")
    }

    pub fn mean_endpoint(&self) -> f64 {
        compensated_sum(self.joint.iter().map(|a| a.mass * a.endpoint))
    }

    pub fn second_moment(&self) -> f64 {
        compensated_sum(self.joint.iter().map(|a| a.mass * a.endpoint * a.endpoint))
    }

    /// The law of the reflected path `-B`: endpoints negate, max and min swap.
    pub fn reflected(&self) -> StoppedLaw {
        StoppedLaw::new(
            self.joint
                .iter()
                .map(|a| JointAtom {
                    endpoint: -a.endpoint,
                    max: -a.min,
                    min: -a.max,
                    mass: a.mass,
                })
                .collect(),
            self.expected_duration,
            self.atom_mass_at_zero.reflected(),
        )
    }

    /// One row per joint atom, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("endpoint,max,min,mass\n");
        for a in &self.joint {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", a.endpoint, a.max, a.min, a.mass)
                .expect("writing to a String cannot fail");
        }
        out
    }

    /// Total variation between two joint laws. Coordinates are clustered
    /// into chains with gaps of at most `coord_tol`, and each chain counts
    /// as a single value.
    pub fn joint_tv(&self, other: &StoppedLaw, coord_tol: f64) -> f64 {
        let both = || self.joint.iter().chain(&other.joint);
        let endpoint = Clusters::new(both().map(|a| a.endpoint), coord_tol);
        let max = Clusters::new(both().map(|a| a.max), coord_tol);
        let min = Clusters::new(both().map(|a| a.min), coord_tol);
        let mut cells: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
        let mut add = |a: &JointAtom, sign: f64| {
            let key = (endpoint.of(a.endpoint), max.of(a.max), min.of(a.min));
            cells.entry(key).or_default().push(sign * a.mass);
        };
        self.joint.iter().for_each(|a| add(a, 1.0));
        other.joint.iter().for_each(|a| add(a, -1.0));
        0.5 * compensated_sum(cells.into_values().map(|v| compensated_sum(v).abs()))
    }
}

/// Sorted values grouped into chains whose neighbours are within a
/// tolerance.
struct Clusters {
    values: Vec<f64>,
    ids: Vec<usize>,
}

impl Clusters {
    fn new(values: impl Iterator<Item = f64>, tol: f64) -> Self {
        let mut values: Vec<f64> = values.collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut ids = Vec::with_capacity(values.len());
        let mut id = 0;
        for (i, w) in values.iter().enumerate() {
            if i > 0 && w - values[i - 1] > tol {
                id += 1;
            }
            ids.push(id);
        }
        Clusters { values, ids }
    }

    fn of(&self, x: f64) -> usize {
        let i = self.values.partition_point(|v| v.total_cmp(&x).is_lt());
        self.ids[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(endpoint: f64, max: f64, min: f64, mass: f64) -> JointAtom {
        JointAtom {
            endpoint,
            max,
            min,
            mass,
        }
    }

    #[test]
    fn merges_and_sorts() {
        let law = StoppedLaw::new(
            vec![
                atom(1.0, 1.0, -1.0, 0.25),
                atom(-1.0, 0.0, -1.0, 0.5),
                atom(1.0, 1.0, -1.0, 0.25),
                atom(0.0, 0.0, 0.0, 0.0),
            ],
            1.0,
            DiscreteMeasure::zero(),
        );
        assert_eq!(law.joint.len(), 2);
        assert_eq!(law.joint[0].endpoint, -1.0);
        assert_eq!(law.joint[1].mass, 0.5);
        assert_eq!(law.total_mass(), 1.0);
        assert_eq!(law.mean_endpoint(), 0.0);
    }

    #[test]
    fn reflection_swaps_extrema() {
        let law = StoppedLaw::new(vec![atom(2.0, 2.0, -1.0, 1.0)], 2.0, DiscreteMeasure::zero());
        let r = law.reflected();
        assert_eq!(r.joint, vec![atom(-2.0, 1.0, -2.0, 1.0)]);
        assert_eq!(r.reflected(), law);
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let law = StoppedLaw::new(vec![atom(1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0)], 0.0, DiscreteMeasure::zero());
        let csv = law.to_csv();
        assert!(csv.starts_with("endpoint,max,min,mass\n3.3333333333333331e-1,"));
        let parsed: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }

    #[test]
    fn joint_tv_identifies_nearby_coordinates() {
        let a = StoppedLaw::new(
            vec![atom(0.0, 0.0, -1.0, 0.5), atom(1.0, 1.0, 0.0, 0.5)],
            0.0,
            DiscreteMeasure::zero(),
        );
        let b = StoppedLaw::new(
            vec![
                atom(0.0, 0.0, -1.0 + 1e-9, 0.5),
                atom(1.0, 1.0, 0.0, 0.25),
                atom(2.0, 2.0, 0.0, 0.25),
            ],
            0.0,
            DiscreteMeasure::zero(),
        );
        assert!((a.joint_tv(&b, 1e-7) - 0.25).abs() < 1e-15);
        assert!((a.joint_tv(&b, 1e-12) - 0.75).abs() < 1e-15);
        assert_eq!(a.joint_tv(&a, 0.0), 0.0);
    }

    #[test]
    fn joint_tv_pools_split_records() {
        let a = StoppedLaw::new(
            vec![atom(0.0, 1.0, -1.0, 1e-12), atom(0.0, 1.0 + 1e-11, -1.0, 1.0 - 1e-12)],
            0.0,
            DiscreteMeasure::zero(),
        );
        let b = StoppedLaw::new(vec![atom(0.0, 1.0 + 1e-11, -1.0, 1.0)], 0.0, DiscreteMeasure::zero());
        assert!(a.joint_tv(&b, 1e-7) < 1e-15);
        assert!(b.joint_tv(&a, 1e-7) < 1e-15);
    }
}
