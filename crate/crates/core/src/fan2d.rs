//! Complete smooth fans in the plane and their semifree circles.
//!
//! Rays are listed counterclockwise; consecutive rays span the
//! two-dimensional cones, the last cone closing back to the first ray.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::IntMatrix;
use crate::quasitoric::CharMatrixCube;

pub type Ray = [i64; 2];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FanError {
    #[error("fan is not complete and smooth")]
    NotCompleteSmooth,
    #[error("circle vector is not semifree for this fan")]
    NotSemifree,
}

fn det(a: Ray, b: Ray) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Upper half-plane (including the positive x-axis) first.
fn half(v: Ray) -> u8 {
    if v[1] > 0 || (v[1] == 0 && v[0] > 0) {
        0
    } else {
        1
    }
}

/// Exact comparison of arguments in `[0, 2π)`.
pub fn angle_cmp(a: Ray, b: Ray) -> Ordering {
    half(a).cmp(&half(b)).then_with(|| 0.cmp(&det(a, b)))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fan2D {
    pub rays: Vec<Ray>,
}

/// The pairs `(λ_3, λ_4)` left open by the classification of semifree
/// complete smooth fans normalized to `λ_1 = (1,0)`, `λ_2 = (0,1)`,
/// `ν = λ_1 + λ_2`.
pub const SEMIFREE_TAILS: [[Ray; 2]; 3] = [[[-1, 0], [0, -1]], [[-1, 0], [-2, -1]], [[-1, -2], [0, -1]]];

impl Fan2D {
    pub fn new(rays: Vec<Ray>) -> Self {
        Fan2D { rays }
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// Cones `(λ_i, λ_{i+1})`, indices cyclic.
    pub fn cones(&self) -> impl Iterator<Item = (Ray, Ray)> + '_ {
        let m = self.rays.len();
        (0..m).map(move |i| (self.rays[i], self.rays[(i + 1) % m]))
    }

    /// Number of full turns made by going once around the rays.
    pub fn winding_number(&self) -> Option<usize> {
        let mut wraps = 0;
        for (a, b) in self.cones() {
            if det(a, b) <= 0 {
                return None;
            }
            if angle_cmp(b, a) == Ordering::Less {
                wraps += 1;
            }
        }
        Some(wraps)
    }

    pub fn is_complete_smooth(&self) -> bool {
        let m = self.rays.len();
        if m < 3 {
            return false;
        }
        if self.rays.iter().any(|&r| gcd(r[0], r[1]) != 1) {
            return false;
        }
        for i in 0..m {
            if self.rays[i + 1..].contains(&self.rays[i]) {
                return false;
            }
        }
        self.cones().all(|(a, b)| det(a, b) == 1) && self.winding_number() == Some(1)
    }

    /// Coordinates of `ν` in the basis of each cone.
    pub fn cone_weights(&self, nu: Ray) -> Vec<[i64; 2]> {
        // det(a, b) = 1, so ν = det(ν, b)·a + det(a, ν)·b
        self.cones().map(|(a, b)| [det(nu, b), det(a, nu)]).collect()
    }

    pub fn is_semifree(&self, nu: Ray) -> bool {
        self.cone_weights(nu).iter().flatten().all(|&k| k == 1 || k == -1)
    }

    /// Semifree `ν` among the candidates `±λ_1 ± λ_2`, lexicographic.
    pub fn semifree_vectors(&self) -> Result<Vec<Ray>, FanError> {
        if !self.is_complete_smooth() {
            return Err(FanError::NotCompleteSmooth);
        }
        let (a, b) = (self.rays[0], self.rays[1]);
        let mut cands: Vec<Ray> = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            .iter()
            .map(|&(s, t)| [s * a[0] + t * b[0], s * a[1] + t * b[1]])
            .collect();
        cands.sort();
        cands.dedup();
        Ok(cands.into_iter().filter(|&nu| self.is_semifree(nu)).collect())
    }

    /// Rotates the rays so the cone containing `ν` with weights `(1, 1)`
    /// comes first, then applies the orientation-preserving lattice
    /// automorphism sending that cone to `(1,0), (0,1)`.
    pub fn normalized_at(&self, nu: Ray) -> Result<Fan2D, FanError> {
        if !self.is_complete_smooth() {
            return Err(FanError::NotCompleteSmooth);
        }
        if !self.is_semifree(nu) {
            return Err(FanError::NotSemifree);
        }
        let w = self.cone_weights(nu);
        let i = w.iter().position(|&k| k == [1, 1]).expect("a semifree vector lies inside one cone");
        let m = self.rays.len();
        let (a, b) = (self.rays[i], self.rays[(i + 1) % m]);
        // inverse of the matrix with columns a, b (determinant one)
        let map = |v: Ray| [b[1] * v[0] - b[0] * v[1], -a[1] * v[0] + a[0] * v[1]];
        Ok(Fan2D { rays: (0..m).map(|j| map(self.rays[(i + j) % m])).collect() })
    }

    /// Lexicographically least ray list over all choices of first cone and
    /// both orientations, each cone sent to the standard basis. Two complete
    /// smooth fans are `GL(2, ℤ)`-equivalent iff these agree.
    pub fn canonical_form(&self) -> Vec<Ray> {
        let m = self.rays.len();
        let mut best: Option<Vec<Ray>> = None;
        for reversed in [false, true] {
            let seq: Vec<Ray> = if reversed { self.rays.iter().rev().copied().collect() } else { self.rays.clone() };
            for i in 0..m {
                let (a, b) = (seq[i], seq[(i + 1) % m]);
                let d = det(a, b);
                if d.abs() != 1 {
                    continue;
                }
                let map = |v: Ray| [d * (b[1] * v[0] - b[0] * v[1]), d * (-a[1] * v[0] + a[0] * v[1])];
                let cand: Vec<Ray> = (0..m).map(|j| map(seq[(i + j) % m])).collect();
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        best.unwrap_or_default()
    }

    /// For a four-ray fan starting at `(1,0), (0,1)`: `Λ★` with columns
    /// `λ_3` and `λ_4`, the rays opposite `λ_1` and `λ_2`.
    pub fn reduced_matrix(&self) -> Option<CharMatrixCube> {
        if self.rays.len() != 4 || self.rays[0] != [1, 0] || self.rays[1] != [0, 1] {
            return None;
        }
        let (c, d) = (self.rays[2], self.rays[3]);
        let m = IntMatrix::from_rows(vec![vec![c[0], d[0]], vec![c[1], d[1]]]).ok()?;
        CharMatrixCube::new(m).ok()
    }
}

/// Every complete smooth fan with at most `max_rays` rays, coordinates in
/// `[-bound, bound]`, starting `(1,0), (0,1)`, in depth-first order with
/// candidate rays tried by increasing angle.
pub fn enumerate_fans(max_rays: usize, bound: i64) -> Vec<Fan2D> {
    let mut out = Vec::new();
    let mut rays: Vec<Ray> = vec![[1, 0], [0, 1]];
    if max_rays >= 3 && bound >= 1 {
        extend(&mut rays, max_rays, bound, &mut out);
    }
    out
}

/// Rays `v` in the box with `det(prev, v) = 1` and argument beyond `prev`.
fn successors(prev: Ray, bound: i64) -> Vec<Ray> {
    let mut next = Vec::new();
    for x in -bound..=bound {
        for y in -bound..=bound {
            let v = [x, y];
            if det(prev, v) == 1 && angle_cmp(prev, v) == Ordering::Less {
                next.push(v);
            }
        }
    }
    next.sort_by(|&a, &b| angle_cmp(a, b));
    next
}

fn extend(rays: &mut Vec<Ray>, max_rays: usize, bound: i64, out: &mut Vec<Fan2D>) {
    let last = *rays.last().expect("nonempty");
    if rays.len() >= 3 && det(last, [1, 0]) == 1 {
        out.push(Fan2D { rays: rays.clone() });
    }
    if rays.len() == max_rays {
        return;
    }
    for v in successors(last, bound) {
        rays.push(v);
        extend(rays, max_rays, bound, out);
        rays.pop();
    }
}

/// One fan of the census.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanRecord {
    pub rays: Vec<Ray>,
    pub semifree: Vec<Ray>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanCensusSummary {
    pub max_rays: usize,
    pub bound: i64,
    pub fans: usize,
    pub semifree_fans: usize,
    /// `GL(2, ℤ)` classes among the semifree fans.
    pub semifree_orbits: usize,
    /// Semifree fans violating the four-ray classification after
    /// normalization.
    pub violations: usize,
    pub normal_forms_seen: Vec<[Ray; 2]>,
}

/// Checks a semifree fan against the classification: four rays, and after
/// normalizing at each semifree `ν` the tail is one of [`SEMIFREE_TAILS`].
pub fn classification_holds(f: &Fan2D, semifree: &[Ray]) -> bool {
    semifree.iter().all(|&nu| {
        let g = f.normalized_at(nu).expect("semifree vectors come from this fan");
        g.rays.len() == 4 && SEMIFREE_TAILS.contains(&[g.rays[2], g.rays[3]])
    })
}

pub fn fan_census(max_rays: usize, bound: i64) -> (Vec<FanRecord>, FanCensusSummary) {
    let fans = enumerate_fans(max_rays, bound);
    let mut records = Vec::with_capacity(fans.len());
    let mut orbits = std::collections::BTreeSet::new();
    let mut violations = 0;
    let mut seen = std::collections::BTreeSet::new();
    for f in &fans {
        let semifree = f.semifree_vectors().expect("enumerated fans are complete and smooth");
        if !semifree.is_empty() {
            orbits.insert(f.canonical_form());
            if !classification_holds(f, &semifree) {
                violations += 1;
            }
            if f.rays.len() == 4 && semifree.contains(&[1, 1]) {
                seen.insert([f.rays[2], f.rays[3]]);
            }
        }
        records.push(FanRecord { rays: f.rays.clone(), semifree });
    }
    let summary = FanCensusSummary {
        max_rays,
        bound,
        fans: fans.len(),
        semifree_fans: records.iter().filter(|r| !r.semifree.is_empty()).count(),
        semifree_orbits: orbits.len(),
        violations,
        normal_forms_seen: seen.into_iter().collect(),
    };
    (records, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semifree::{enumerate_semifree_vectors, CircleVector};
    use proptest::prelude::*;

    fn fan(r: &[Ray]) -> Fan2D {
        Fan2D::new(r.to_vec())
    }

    #[test]
    fn completeness() {
        assert!(fan(&[[1, 0], [0, 1], [-1, 0], [0, -1]]).is_complete_smooth());
        assert!(fan(&[[1, 0], [0, 1], [-1, -2], [0, -1]]).is_complete_smooth());
        assert!(!fan(&[[1, 0], [0, 1], [-2, -1]]).is_complete_smooth());
        assert!(fan(&[[1, 0], [0, 1], [-1, -1]]).is_complete_smooth());
        // twice around
        let twice = fan(&[[1, 0], [0, 1], [-1, 0], [0, -1], [1, 0], [0, 1], [-1, 0], [0, -1]]);
        assert!(!twice.is_complete_smooth());
        assert!(!fan(&[[1, 0], [0, 1]]).is_complete_smooth());
        assert!(!fan(&[[2, 0], [0, 1], [-1, -1]]).is_complete_smooth());
        // clockwise
        assert!(!fan(&[[1, 0], [0, -1], [-1, 0], [0, 1]]).is_complete_smooth());
    }

    #[test]
    fn winding() {
        assert_eq!(fan(&[[1, 0], [0, 1], [-1, -1]]).winding_number(), Some(1));
        let cw = fan(&[[1, 0], [0, -1], [-1, 0], [0, 1]]);
        assert_eq!(cw.winding_number(), None);
    }

    #[test]
    fn semifree_examples() {
        let product = fan(&[[1, 0], [0, 1], [-1, 0], [0, -1]]);
        assert!(product.semifree_vectors().unwrap().contains(&[1, 1]));
        let h2 = fan(&[[1, 0], [0, 1], [-1, -2], [0, -1]]);
        assert!(h2.semifree_vectors().unwrap().contains(&[1, 1]));
        let h1 = fan(&[[1, 0], [0, 1], [-1, 1], [0, -1]]);
        assert!(h1.semifree_vectors().unwrap().is_empty());
        let cp2 = fan(&[[1, 0], [0, 1], [-1, -1]]);
        assert!(cp2.semifree_vectors().unwrap().is_empty());
        assert_eq!(fan(&[[1, 0], [0, 1]]).semifree_vectors(), Err(FanError::NotCompleteSmooth));
    }

    #[test]
    fn normalization() {
        // semifree with ν = (1,-1), not (1,1), so the raw tail is not listed
        let f = fan(&[[1, 0], [0, 1], [-1, 2], [0, -1]]);
        assert_eq!(f.semifree_vectors().unwrap(), vec![[-1, 1], [1, -1]]);
        assert!(!SEMIFREE_TAILS.contains(&[f.rays[2], f.rays[3]]));
        let g = f.normalized_at([1, -1]).unwrap();
        assert_eq!(g.rays, vec![[1, 0], [0, 1], [-1, 0], [-2, -1]]);
        assert!(g.is_semifree([1, 1]));
        assert!(classification_holds(&f, &[[1, -1], [-1, 1]]));
        assert_eq!(f.normalized_at([1, 1]), Err(FanError::NotSemifree));
    }

    #[test]
    fn canonical_forms() {
        let a = fan(&[[1, 0], [0, 1], [-1, 0], [-2, -1]]);
        let b = fan(&[[1, 0], [0, 1], [-1, -2], [0, -1]]);
        assert_eq!(a.canonical_form(), b.canonical_form());
        let p = fan(&[[1, 0], [0, 1], [-1, 0], [0, -1]]);
        assert_ne!(p.canonical_form(), b.canonical_form());
    }

    #[test]
    fn enumeration() {
        let small = enumerate_fans(3, 1);
        assert_eq!(small, vec![fan(&[[1, 0], [0, 1], [-1, -1]])]);
        let four = enumerate_fans(4, 2);
        assert!(four.contains(&fan(&[[1, 0], [0, 1], [-1, 0], [0, -1]])));
        assert!(four.contains(&fan(&[[1, 0], [0, 1], [-1, -2], [0, -1]])));
        assert!(four.iter().all(|f| f.is_complete_smooth()));
        assert!(enumerate_fans(2, 3).is_empty());
    }

    #[test]
    fn four_ray_fans_match_characteristic_matrices() {
        for f in enumerate_fans(4, 4).into_iter().filter(|f| f.len() == 4) {
            let c = f.reduced_matrix().expect("four-ray fans give characteristic matrices");
            let from_fan: Vec<Ray> = f.semifree_vectors().unwrap();
            let from_matrix: Vec<Ray> =
                enumerate_semifree_vectors(&c).iter().map(|v| [v.as_slice()[0], v.as_slice()[1]]).collect();
            assert_eq!(from_fan, from_matrix, "{:?}", f.rays);
            for nu in [[1, 1], [1, -1]] {
                assert_eq!(
                    f.is_semifree(nu),
                    crate::semifree::is_semifree(&c, &CircleVector::new(nu.to_vec()).unwrap())
                );
            }
        }
    }

    #[test]
    fn small_census() {
        let (records, summary) = fan_census(6, 3);
        assert_eq!(records.len(), summary.fans);
        assert_eq!(summary.violations, 0);
        assert_eq!(summary.semifree_orbits, 2);
        assert!(summary.normal_forms_seen.contains(&[[-1, 0], [0, -1]]));
        assert!(summary.normal_forms_seen.contains(&[[-1, -2], [0, -1]]));
    }

    proptest! {
        #[test]
        fn semifree_closed_under_negation(idx in 0usize..200) {
            let fans = enumerate_fans(5, 3);
            let f = &fans[idx % fans.len()];
            let s = f.semifree_vectors().unwrap();
            for nu in &s {
                prop_assert!(s.contains(&[-nu[0], -nu[1]]));
            }
        }

        #[test]
        fn angle_order_is_total(a in (-5i64..=5, -5i64..=5), b in (-5i64..=5, -5i64..=5)) {
            let (a, b) = ([a.0, a.1], [b.0, b.1]);
            prop_assume!(a != [0, 0] && b != [0, 0]);
            let ab = angle_cmp(a, b);
            prop_assert_eq!(ab.reverse(), angle_cmp(b, a));
            let fa = (a[1] as f64).atan2(a[0] as f64).rem_euclid(std::f64::consts::TAU);
            let fb = (b[1] as f64).atan2(b[0] as f64).rem_euclid(std::f64::consts::TAU);
            if (fa - fb).abs() > 1e-9 {
                prop_assert_eq!(ab, fa.partial_cmp(&fb).unwrap());
            }
        }
    }
}
