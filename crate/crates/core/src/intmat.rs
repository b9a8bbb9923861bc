//! Exact integer matrices: determinants, principal minors, permutation
//! conjugation and the normal form for matrices whose proper principal
//! minors are all one.
//!
//! Entries are `i64`; every determinant is accumulated in `i128` with checked
//! arithmetic. Inputs are limited to [`MAX_DIM`] rows and entries of absolute
//! value at most [`MAX_ENTRY`], which keeps every minor (Hadamard bound) far
//! inside `i128`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported side length.
pub const MAX_DIM: usize = 8;

/// Largest supported absolute value of an input entry.
pub const MAX_ENTRY: i64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("matrix has no rows")]
    Empty,
    #[error("row {row} has {len} entries, expected {n}")]
    Ragged { row: usize, len: usize, n: usize },
    #[error("matrix side {0} exceeds the supported maximum {MAX_DIM}")]
    TooLarge(usize),
    #[error("entry {value} at ({row}, {col}) exceeds the supported magnitude {MAX_ENTRY}")]
    EntryTooLarge { row: usize, col: usize, value: i64 },
    #[error("index {index} out of range for size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(i128),
}

/// Coefficient domain used by computations that run both over the integers
/// and modulo two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coefficients {
    #[serde(rename = "Z")]
    Integers,
    #[serde(rename = "Z2")]
    Mod2,
}

impl Coefficients {
    pub fn reduce(self, x: i64) -> i64 {
        match self {
            Coefficients::Integers => x,
            Coefficients::Mod2 => x.rem_euclid(2),
        }
    }

    pub fn reduce_wide(self, x: i128) -> i128 {
        match self {
            Coefficients::Integers => x,
            Coefficients::Mod2 => x.rem_euclid(2),
        }
    }
}

/// Square integer matrix stored row-major.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    /// Builds a matrix from rows, checking squareness and the size limits.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, MatrixError> {
        let n = rows.len();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        if n > MAX_DIM {
            return Err(MatrixError::TooLarge(n));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(MatrixError::Ragged { row, len: r.len(), n });
            }
            for (col, &value) in r.iter().enumerate() {
                if value.abs() > MAX_ENTRY {
                    return Err(MatrixError::EntryTooLarge { row, col, value });
                }
            }
            entries.extend(r);
        }
        Ok(IntMatrix { n, entries })
    }

    /// Builds an `n x n` matrix entry by entry. No magnitude check.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        assert!(n > 0, "matrix side must be positive");
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        IntMatrix { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| i64::from(i == j))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: i64) {
        self.entries[i * self.n + j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(<[i64]>::to_vec).collect()
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().copied()
    }

    pub fn max_abs_entry(&self) -> i64 {
        self.entries.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        IntMatrix { n: self.n, entries: self.entries.iter().map(|&x| f(x)).collect() }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn reduce(&self, coeffs: Coefficients) -> Self {
        self.map(|x| coeffs.reduce(x))
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<Self, MatrixError> {
        if self.n != other.n {
            return Err(MatrixError::SizeMismatch { left: self.n, right: other.n });
        }
        let n = self.n;
        Ok(Self::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.get(i, k).checked_mul(other.get(k, j)).expect("matrix product overflow"))
                .fold(0i64, |acc, x| acc.checked_add(x).expect("matrix product overflow"))
        }))
    }

    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == 0))
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == 0))
    }

    pub fn is_unipotent_upper(&self) -> bool {
        self.is_upper_triangular() && (0..self.n).all(|i| self.get(i, i) == 1)
    }

    /// Exact determinant. Cofactor expansion up to size 4, fraction-free
    /// elimination beyond.
    pub fn det(&self) -> i128 {
        if self.n <= 4 {
            self.det_by_cofactors()
        } else {
            self.det_by_elimination()
        }
    }

    /// Laplace expansion along the first row.
    pub fn det_by_cofactors(&self) -> i128 {
        let idx: Vec<usize> = (0..self.n).collect();
        cofactor_det(self, &idx, &idx)
    }

    /// Bareiss fraction-free elimination; every intermediate is a minor.
    pub fn det_by_elimination(&self) -> i128 {
        let n = self.n;
        let mut m: Vec<i128> = self.entries.iter().map(|&x| i128::from(x)).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if m[k * n + k] == 0 {
                match (k + 1..n).find(|&r| m[r * n + k] != 0) {
                    Some(r) => {
                        for c in 0..n {
                            m.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            let pivot = m[k * n + k];
            for i in k + 1..n {
                for j in k + 1..n {
                    let a = pivot.checked_mul(m[i * n + j]).expect("determinant overflow");
                    let b = m[i * n + k].checked_mul(m[k * n + j]).expect("determinant overflow");
                    let num = a.checked_sub(b).expect("determinant overflow");
                    debug_assert_eq!(num % prev, 0);
                    m[i * n + j] = num / prev;
                }
                m[i * n + k] = 0;
            }
            prev = pivot;
        }
        sign * m[n * n - 1]
    }

    /// Determinant of the submatrix on the given rows and columns (which must
    /// be in range and of equal length). Empty selections give one.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> i128 {
        debug_assert_eq!(rows.len(), cols.len());
        match rows.len() {
            0 => 1,
            1 => i128::from(self.get(rows[0], cols[0])),
            2 => {
                let (a, b) = (i128::from(self.get(rows[0], cols[0])), i128::from(self.get(rows[0], cols[1])));
                let (c, d) = (i128::from(self.get(rows[1], cols[0])), i128::from(self.get(rows[1], cols[1])));
                a * d - b * c
            }
            k if k <= 4 => cofactor_det(self, rows, cols),
            _ => {
                let sub = IntMatrix::from_fn(rows.len(), |i, j| self.get(rows[i], cols[j]));
                sub.det_by_elimination()
            }
        }
    }

    /// Principal minor on an index subset (0-based, any order, no repeats).
    pub fn principal_minor(&self, subset: &[usize]) -> Result<i128, MatrixError> {
        let mut idx = subset.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return Err(MatrixError::IndexOutOfRange { index: bad, n: self.n });
        }
        Ok(self.minor(&idx, &idx))
    }

    /// Principal minor on the subset encoded by the bits of `mask`.
    pub fn principal_minor_mask(&self, mask: u32) -> i128 {
        let idx = mask_indices(mask);
        self.minor(&idx, &idx)
    }

    /// All `2^n` principal minors indexed by subset mask.
    pub fn principal_minors(&self) -> Vec<i128> {
        (0..1u32 << self.n).map(|m| self.principal_minor_mask(m)).collect()
    }

    /// Exact inverse of a matrix with determinant `±1`, via the adjugate.
    pub fn inverse_unimodular(&self) -> Result<IntMatrix, MatrixError> {
        let det = self.det();
        if det != 1 && det != -1 {
            return Err(MatrixError::NotUnimodular(det));
        }
        let n = self.n;
        if n == 1 {
            return Ok(IntMatrix::from_fn(1, |_, _| det as i64));
        }
        let all: Vec<usize> = (0..n).collect();
        Ok(IntMatrix::from_fn(n, |i, j| {
            // inverse[i][j] = (-1)^(i+j) * minor(delete row j, delete col i) / det
            let rows: Vec<usize> = all.iter().copied().filter(|&r| r != j).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&c| c != i).collect();
            let cof = self.minor(&rows, &cols) * if (i + j) % 2 == 0 { 1 } else { -1 };
            i64::try_from(cof * det).expect("inverse entry overflow")
        }))
    }

    /// The matrix `P(σ)⁻¹ · self · P(σ)`, i.e. entry `(i, j)` is
    /// `self[σ(i)][σ(j)]`.
    pub fn conjugate(&self, sigma: &Permutation) -> Result<IntMatrix, MatrixError> {
        if sigma.len() != self.n {
            return Err(MatrixError::SizeMismatch { left: self.n, right: sigma.len() });
        }
        Ok(IntMatrix::from_fn(self.n, |i, j| self.get(sigma.image(i), sigma.image(j))))
    }
}

fn cofactor_det(m: &IntMatrix, rows: &[usize], cols: &[usize]) -> i128 {
    match rows.len() {
        0 => 1,
        1 => i128::from(m.get(rows[0], cols[0])),
        2 => {
            i128::from(m.get(rows[0], cols[0])) * i128::from(m.get(rows[1], cols[1]))
                - i128::from(m.get(rows[0], cols[1])) * i128::from(m.get(rows[1], cols[0]))
        }
        k => {
            let sub_rows = &rows[1..];
            let mut total = 0i128;
            let mut sub_cols = Vec::with_capacity(k - 1);
            for (c, &col) in cols.iter().enumerate() {
                let a = m.get(rows[0], col);
                if a == 0 {
                    continue;
                }
                sub_cols.clear();
                sub_cols.extend(cols.iter().enumerate().filter(|&(d, _)| d != c).map(|(_, &x)| x));
                let term =
                    i128::from(a).checked_mul(cofactor_det(m, sub_rows, &sub_cols)).expect("determinant overflow");
                total = if c % 2 == 0 { total + term } else { total - term };
            }
            total
        }
    }
}

/// Indices of the set bits of `mask`, ascending.
pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask >> i & 1 == 1).collect()
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = MatrixError;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self, Self::Error> {
        IntMatrix::from_rows(rows)
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.rows()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.entries.iter().map(|x| x.to_string().len()).max().unwrap_or(1);
        for (i, row) in self.entries.chunks(self.n).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>width$}")).collect();
            write!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// A bijection of `0..n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, MatrixError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(MatrixError::NotAPermutation(n));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// `i ↦ n - 1 - i`.
    pub fn reversal(n: usize) -> Self {
        Permutation { images: (0..n).rev().collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { images: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len());
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    /// Permutation matrix with ones at `(σ(i), i)`.
    pub fn matrix(&self) -> IntMatrix {
        IntMatrix::from_fn(self.len(), |r, c| i64::from(self.images[c] == r))
    }

    /// All permutations of `0..n` in lexicographic order of their image lists.
    pub fn all(n: usize) -> LexPermutations {
        LexPermutations { current: Some((0..n).collect()) }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = MatrixError;
    fn try_from(images: Vec<usize>) -> Result<Self, Self::Error> {
        Permutation::new(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.images)
    }
}

pub struct LexPermutations {
    current: Option<Vec<usize>>,
}

impl Iterator for LexPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.current.take()?;
        let out = Permutation { images: cur.clone() };
        let mut next = cur;
        // standard next-permutation step
        if let Some(i) = (0..next.len().saturating_sub(1)).rev().find(|&i| next[i] < next[i + 1]) {
            let j = (i + 1..next.len()).rev().find(|&j| next[j] > next[i]).unwrap();
            next.swap(i, j);
            next[i + 1..].reverse();
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Outcome of the permutation normal form for matrices whose proper
/// principal minors are all one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum MinorNormalForm {
    /// Conjugate by `sigma` to a unipotent upper triangular matrix.
    UpperTriangular { sigma: Permutation },
    /// Conjugate by `sigma` to the cyclic matrix with ones on the diagonal,
    /// `b[i]` at `(i, i+1)` for `i < n-1` and `b[n-1]` at `(n-1, 0)`.
    Cyclic { sigma: Permutation, b: Vec<i64> },
    /// Some proper principal minor differs from one.
    NotApplicable,
}

/// The cyclic matrix with unit diagonal and nonzero pattern
/// `(0,1), (1,2), ..., (n-2,n-1), (n-1,0)` carrying `b`.
pub fn cyclic_matrix(b: &[i64]) -> IntMatrix {
    let n = b.len();
    assert!(n >= 2, "cyclic form needs n >= 2");
    let mut m = IntMatrix::identity(n);
    for i in 0..n - 1 {
        m.set(i, i + 1, b[i]);
    }
    m.set(n - 1, 0, b[n - 1]);
    m
}

fn has_cyclic_shape(m: &IntMatrix, coeffs: Coefficients) -> bool {
    let n = m.n();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let x = coeffs.reduce(m.get(i, j));
            if i == j {
                x == 1
            } else if j == i + 1 || (i == n - 1 && j == 0) {
                x != 0
            } else {
                x == 0
            }
        })
    })
}

fn has_unipotent_shape(m: &IntMatrix, coeffs: Coefficients) -> bool {
    let n = m.n();
    (0..n).all(|i| (0..=i).all(|j| coeffs.reduce(m.get(i, j)) == i64::from(i == j)))
}

/// Integer version of [`minor_normal_form_over`].
pub fn minor_normal_form(a: &IntMatrix) -> MinorNormalForm {
    minor_normal_form_over(a, Coefficients::Integers)
}

/// Classifies `a` (read in `coeffs`) when every proper principal minor is
/// one, returning the lexicographically smallest witnessing permutation.
/// For `Mod2` the `b` values are reduced.
pub fn minor_normal_form_over(a: &IntMatrix, coeffs: Coefficients) -> MinorNormalForm {
    let n = a.n();
    let full = (1u32 << n) - 1;
    let proper_ok = (0..full).all(|mask| coeffs.reduce_wide(a.principal_minor_mask(mask)) == 1);
    if !proper_ok {
        return MinorNormalForm::NotApplicable;
    }
    let det_is_one = coeffs.reduce_wide(a.det()) == 1;
    if det_is_one {
        for sigma in Permutation::all(n) {
            let c = a.conjugate(&sigma).expect("sizes match");
            if has_unipotent_shape(&c, coeffs) {
                return MinorNormalForm::UpperTriangular { sigma };
            }
        }
    } else {
        if n == 1 {
            return MinorNormalForm::NotApplicable;
        }
        for sigma in Permutation::all(n) {
            let c = a.conjugate(&sigma).expect("sizes match");
            if has_cyclic_shape(&c, coeffs) {
                let mut b: Vec<i64> = (0..n - 1).map(|i| c.get(i, i + 1)).collect();
                b.push(c.get(n - 1, 0));
                let b = b.into_iter().map(|x| coeffs.reduce(x)).collect();
                return MinorNormalForm::Cyclic { sigma, b };
            }
        }
    }
    panic!("no permutation normal form found for {a:?} although all proper principal minors are one");
}

/// Replays a normal-form witness: checks that conjugating by the returned
/// permutation literally produces the claimed shape.
pub fn verify_normal_form(a: &IntMatrix, form: &MinorNormalForm, coeffs: Coefficients) -> bool {
    match form {
        MinorNormalForm::NotApplicable => true,
        MinorNormalForm::UpperTriangular { sigma } => {
            a.conjugate(sigma).map(|c| has_unipotent_shape(&c, coeffs)).unwrap_or(false)
        }
        MinorNormalForm::Cyclic { sigma, b } => a
            .conjugate(sigma)
            .map(|c| {
                has_cyclic_shape(&c, coeffs)
                    && b.iter().all(|&x| x != 0)
                    && c.reduce(coeffs) == cyclic_matrix(b).reduce(coeffs)
            })
            .unwrap_or(false),
    }
}
