//! Semifree circle subgroups with isolated fixed points.
//!
//! A circle `ν` acts semifreely with isolated fixed points iff, at every
//! vertex, the coordinates of `ν` in the basis of vertex columns are all `±1`.
//! For Bott towers this is compared with factorizations of `D = (E - A)/2`
//! into elementary column operations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::IntMatrix;
use crate::quasitoric::{BottMatrix, CharMatrixCube, CubeVertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemifreeError {
    #[error("circle vector {0:?} is not primitive")]
    NotPrimitive(Vec<i64>),
    #[error("circle vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix is not unipotent upper triangular")]
    NotUnipotentUpper,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Primitive integer vector selecting a circle subgroup of the torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct CircleVector {
    nu: Vec<i64>,
}

impl TryFrom<Vec<i64>> for CircleVector {
    type Error = SemifreeError;
    fn try_from(nu: Vec<i64>) -> Result<Self, SemifreeError> {
        CircleVector::new(nu)
    }
}

impl From<CircleVector> for Vec<i64> {
    fn from(c: CircleVector) -> Self {
        c.nu
    }
}

impl CircleVector {
    pub fn new(nu: Vec<i64>) -> Result<Self, SemifreeError> {
        if nu.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
            return Err(SemifreeError::NotPrimitive(nu));
        }
        Ok(CircleVector { nu })
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.nu
    }

    pub fn neg(&self) -> Self {
        CircleVector { nu: self.nu.iter().map(|x| -x).collect() }
    }

    /// All `±1` vectors of length `n`, lexicographic with `-1 < 1`.
    pub fn sign_vectors(n: usize) -> impl Iterator<Item = CircleVector> {
        (0..1u32 << n).map(move |code| CircleVector {
            nu: (0..n).map(|i| if code >> (n - 1 - i) & 1 == 1 { 1 } else { -1 }).collect(),
        })
    }
}

/// Coordinates of `ν` in the basis of vertex columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector {
    pub k: Vec<i64>,
}

impl WeightVector {
    pub fn is_unit(&self) -> bool {
        self.k.iter().all(|&x| x == 1 || x == -1)
    }
}

pub fn weights_at_vertex(c: &CharMatrixCube, nu: &CircleVector, v: CubeVertex) -> WeightVector {
    assert_eq!(nu.len(), c.n(), "circle vector length");
    let basis = c.vertex_matrix(v);
    let inverse = basis.inverse_unimodular().expect("vertex columns of a characteristic matrix are a basis");
    let k = inverse.mul_vec(nu.as_slice());
    debug_assert_eq!(basis.mul_vec(&k), nu.as_slice());
    WeightVector { k }
}

pub fn is_semifree(c: &CharMatrixCube, nu: &CircleVector) -> bool {
    CubeVertex::all(c.n()).all(|v| weights_at_vertex(c, nu, v).is_unit())
}

/// Every semifree `ν`. At the initial vertex the weights are `ν` itself, so
/// only the `2^n` sign vectors can qualify. Both `ν` and `-ν` are listed.
pub fn enumerate_semifree_vectors(c: &CharMatrixCube) -> Vec<CircleVector> {
    CircleVector::sign_vectors(c.n()).filter(|nu| is_semifree(c, nu)).collect()
}

/// Which off-diagonal coefficients a factorization step may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCoefficients {
    /// `c = 1`
    Unit,
    /// `c = ±1`
    SignedUnit,
    /// any nonzero `c`
    Integer,
}

impl StepCoefficients {
    fn allows(self, c: i64) -> bool {
        match self {
            StepCoefficients::Unit => c == 1,
            StepCoefficients::SignedUnit => c == 1 || c == -1,
            StepCoefficients::Integer => c != 0,
        }
    }
}

/// `D = C_0 C_1 ⋯ C_{n-1}` where `C_k` is the identity, or the identity with
/// one extra entry `c` at `(i, k)`, `i < k`. Equivalently column `k` of `D`
/// is `e_k + c · column_i(D)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub steps: Vec<Option<(usize, i64)>>,
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.steps.len()
    }

    /// Rebuilds `D` from the steps.
    pub fn replay(&self) -> IntMatrix {
        let n = self.n();
        let mut d = IntMatrix::identity(n);
        for (k, step) in self.steps.iter().enumerate() {
            if let Some((i, c)) = *step {
                assert!(i < k, "step refers to a later column");
                for r in 0..n {
                    let v = d.get(r, k) + c * d.get(r, i);
                    d.set(r, k, v);
                }
            }
        }
        d
    }

    /// Multiplies out the elementary factors `C_0 ⋯ C_{n-1}`.
    pub fn product(&self) -> IntMatrix {
        let n = self.n();
        let mut p = IntMatrix::identity(n);
        for (k, step) in self.steps.iter().enumerate() {
            if let Some((i, c)) = *step {
                let mut ck = IntMatrix::identity(n);
                ck.set(i, k, c);
                p = p.mul(&ck).expect("factor entries are small");
            }
        }
        p
    }

    pub fn max_abs_coefficient(&self) -> i64 {
        self.steps.iter().flatten().map(|&(_, c)| c.abs()).max().unwrap_or(0)
    }
}

fn factorize(d: &IntMatrix, allowed: StepCoefficients) -> Result<Option<Factorization>, SemifreeError> {
    if !d.is_unipotent_upper() {
        return Err(SemifreeError::NotUnipotentUpper);
    }
    let n = d.n();
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = d.column(k);
        v[k] -= 1;
        // a multiple of column i ends at row i with the multiplier itself
        let Some(i) = (0..k).rev().find(|&r| v[r] != 0) else {
            steps.push(None);
            continue;
        };
        let c = v[i];
        if !allowed.allows(c) || !(0..n).all(|r| v[r] == c * d.get(r, i)) {
            return Ok(None);
        }
        steps.push(Some((i, c)));
    }
    Ok(Some(Factorization { steps }))
}

pub fn factorize_unit(d: &IntMatrix) -> Result<Option<Factorization>, SemifreeError> {
    factorize(d, StepCoefficients::Unit)
}

pub fn factorize_signed_unit(d: &IntMatrix) -> Result<Option<Factorization>, SemifreeError> {
    factorize(d, StepCoefficients::SignedUnit)
}

pub fn factorize_integer(d: &IntMatrix) -> Result<Option<Factorization>, SemifreeError> {
    factorize(d, StepCoefficients::Integer)
}

/// `(E - A)/2`, or `None` when `E - A` has an odd entry.
pub fn half_difference(a: &BottMatrix) -> Option<IntMatrix> {
    let m = a.matrix();
    let n = m.n();
    let diff = IntMatrix::from_fn(n, |i, j| i64::from(i == j) - m.get(i, j));
    if diff.entries().any(|x| x % 2 != 0) {
        return None;
    }
    Some(diff.map(|x| x / 2))
}

pub fn factorize_bott(a: &BottMatrix, allowed: StepCoefficients) -> Option<Factorization> {
    let d = half_difference(a)?;
    factorize(&d, allowed).expect("(E - A)/2 is unipotent upper triangular")
}

/// The factorization criterion with `c = 1` throughout.
pub fn semifree_by_factorization(a: &BottMatrix) -> bool {
    factorize_bott(a, StepCoefficients::Unit).is_some()
}

/// The factorization criterion with `c = ±1`.
pub fn semifree_by_relaxed_factorization(a: &BottMatrix) -> bool {
    factorize_bott(a, StepCoefficients::SignedUnit).is_some()
}

/// Per-matrix semifree summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemifreeReport {
    pub semifree_vectors: Vec<CircleVector>,
    pub strict_factorization: bool,
    pub relaxed_factorization: bool,
    pub integer_factorization: bool,
}

impl SemifreeReport {
    pub fn for_bott(a: &BottMatrix) -> Self {
        let mut r = Self::for_lambda(&a.characteristic());
        r.strict_factorization = factorize_bott(a, StepCoefficients::Unit).is_some();
        r.relaxed_factorization = factorize_bott(a, StepCoefficients::SignedUnit).is_some();
        r.integer_factorization = factorize_bott(a, StepCoefficients::Integer).is_some();
        r
    }

    /// Factorization flags are only meaningful for Bott towers; they are
    /// `false` here.
    pub fn for_lambda(c: &CharMatrixCube) -> Self {
        SemifreeReport {
            semifree_vectors: enumerate_semifree_vectors(c),
            strict_factorization: false,
            relaxed_factorization: false,
            integer_factorization: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(rows: &[&[i64]]) -> CharMatrixCube {
        CharMatrixCube::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn im(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn cv(v: &[i64]) -> CircleVector {
        CircleVector::new(v.to_vec()).unwrap()
    }

    fn bott(rows: &[&[i64]]) -> BottMatrix {
        BottMatrix::new(im(rows)).unwrap()
    }

    #[test]
    fn weights() {
        let c = cm(&[&[-1, 0], &[-2, -1]]);
        let nu = cv(&[1, 1]);
        assert_eq!(weights_at_vertex(&c, &nu, CubeVertex::initial(2)).k, vec![1, 1]);
        assert_eq!(weights_at_vertex(&c, &nu, CubeVertex::opposite_initial(2)).k, vec![-1, 1]);
        let e = CharMatrixCube::new(IntMatrix::identity(3).neg()).unwrap();
        let nu = cv(&[2, -1, 5]);
        assert_eq!(weights_at_vertex(&e, &nu, CubeVertex::opposite_initial(3)).k, vec![-2, 1, -5]);
    }

    #[test]
    fn semifree_examples() {
        let e = CharMatrixCube::new(IntMatrix::identity(2).neg()).unwrap();
        assert!(is_semifree(&e, &cv(&[1, 1])));
        assert_eq!(enumerate_semifree_vectors(&e).len(), 4);
        let c = cm(&[&[-1, 0], &[-2, -1]]);
        assert!(is_semifree(&c, &cv(&[1, 1])));
        assert_eq!(enumerate_semifree_vectors(&c), vec![cv(&[-1, -1]), cv(&[1, 1])]);
        assert!(!is_semifree(&cm(&[&[-1, 0], &[-4, -1]]), &cv(&[1, 1])));
        let counter = bott(&[&[-1, 0, -2], &[0, -1, -2], &[0, 0, -1]]);
        assert!(enumerate_semifree_vectors(&counter.characteristic()).is_empty());
    }

    #[test]
    fn circle_vectors() {
        assert!(CircleVector::new(vec![2, 4]).is_err());
        assert!(CircleVector::new(vec![0, 0]).is_err());
        assert!(CircleVector::new(vec![2, 3]).is_ok());
        let all: Vec<Vec<i64>> = CircleVector::sign_vectors(2).map(|c| c.nu).collect();
        assert_eq!(all, vec![vec![-1, -1], vec![-1, 1], vec![1, -1], vec![1, 1]]);
        assert!(serde_json::from_str::<CircleVector>("[3,6]").is_err());
    }

    #[test]
    fn factorization_examples() {
        let d = im(&[&[1, 1, 1], &[0, 1, 0], &[0, 0, 1]]);
        let f = factorize_unit(&d).unwrap().unwrap();
        assert_eq!(f.steps, vec![None, Some((0, 1)), Some((0, 1))]);
        assert_eq!(f.replay(), d);
        assert_eq!(f.product(), d);

        let bad = im(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1]]);
        assert_eq!(factorize_unit(&bad).unwrap(), None);
        assert_eq!(factorize_integer(&bad).unwrap(), None);

        let e = IntMatrix::identity(4);
        assert_eq!(factorize_unit(&e).unwrap().unwrap().steps, vec![None; 4]);

        let two = im(&[&[1, 2], &[0, 1]]);
        assert_eq!(factorize_unit(&two).unwrap(), None);
        assert_eq!(factorize_integer(&two).unwrap().unwrap().steps, vec![None, Some((0, 2))]);

        assert_eq!(factorize_unit(&im(&[&[1, 0], &[1, 1]])), Err(SemifreeError::NotUnipotentUpper));
    }

    #[test]
    fn bott_criteria() {
        assert!(semifree_by_factorization(&bott(&[&[-1, -2, -2], &[0, -1, 0], &[0, 0, -1]])));
        assert!(!semifree_by_factorization(&bott(&[&[-1, 0, -2], &[0, -1, -2], &[0, 0, -1]])));
        assert!(semifree_by_factorization(&BottMatrix::trivial(3)));
        // odd entries short-circuit
        assert!(half_difference(&BottMatrix::hirzebruch(3)).is_none());
        assert!(!semifree_by_factorization(&BottMatrix::hirzebruch(3)));

        // positive twist: semifree by the weights, only the signed test agrees
        let plus = BottMatrix::hirzebruch(2);
        assert_eq!(enumerate_semifree_vectors(&plus.characteristic()), vec![cv(&[-1, 1]), cv(&[1, -1])]);
        assert!(!semifree_by_factorization(&plus));
        assert!(semifree_by_relaxed_factorization(&plus));
    }

    #[test]
    fn report() {
        let r = SemifreeReport::for_bott(&BottMatrix::hirzebruch(-4));
        assert!(r.semifree_vectors.is_empty());
        assert!(!r.strict_factorization && !r.relaxed_factorization && r.integer_factorization);
        let j = serde_json::to_value(SemifreeReport::for_bott(&BottMatrix::hirzebruch(-2))).unwrap();
        assert_eq!(j["semifree_vectors"], serde_json::json!([[-1, -1], [1, 1]]));
    }

    #[test]
    fn relaxed_matches_weights_exhaustive() {
        for n in 1..=4 {
            for a in BottMatrix::all_with_entries(n, &[-2, 0, 2]) {
                let c = a.characteristic();
                assert_eq!(
                    semifree_by_relaxed_factorization(&a),
                    !enumerate_semifree_vectors(&c).is_empty(),
                    "{:?}",
                    a
                );
            }
        }
    }

    fn unipotent(n: usize) -> impl Strategy<Value = IntMatrix> {
        proptest::collection::vec(-2i64..=2, n * n).prop_map(move |v| {
            IntMatrix::from_fn(n, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => v[i * n + j],
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Greater => 0,
            })
        })
    }

    fn bott_strategy() -> impl Strategy<Value = BottMatrix> {
        (1usize..=4).prop_flat_map(|n| {
            proptest::collection::vec(prop_oneof![Just(0i64), Just(-2), Just(2)], n * n)
                .prop_map(move |v| BottMatrix::from_upper(n, |i, j| v[i * n + j]))
        })
    }

    proptest! {
        #[test]
        fn factorizations_replay(d in (1usize..=5).prop_flat_map(unipotent)) {
            for allowed in [StepCoefficients::Unit, StepCoefficients::SignedUnit, StepCoefficients::Integer] {
                if let Some(f) = factorize(&d, allowed).unwrap() {
                    prop_assert_eq!(f.replay(), d.clone());
                    prop_assert_eq!(f.product(), d.clone());
                }
            }
        }

        #[test]
        fn factorization_hierarchy(d in (1usize..=5).prop_flat_map(unipotent)) {
            let unit = factorize_unit(&d).unwrap().is_some();
            let signed = factorize_signed_unit(&d).unwrap().is_some();
            let integer = factorize_integer(&d).unwrap().is_some();
            prop_assert!(!unit || signed);
            prop_assert!(!signed || integer);
        }

        #[test]
        fn negation_symmetry(a in bott_strategy()) {
            let c = a.characteristic();
            for nu in CircleVector::sign_vectors(c.n()) {
                prop_assert_eq!(is_semifree(&c, &nu), is_semifree(&c, &nu.neg()));
            }
        }

    }
}
