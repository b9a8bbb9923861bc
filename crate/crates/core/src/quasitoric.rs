//! Characteristic matrices of quasitoric manifolds over the `n`-cube.
//!
//! Facets are indexed `0..2n` with `F_i` and `F_{n+i}` opposite. The
//! characteristic matrix is kept in refined form `(E | Λ★)`; only the reduced
//! submatrix `Λ★` is stored, its column `j` being the vector of facet `F_{n+j}`.
//! A vertex of the cube picks one facet from each opposite pair and is encoded
//! as a bit mask: bit `i` clear selects `F_i`, bit `i` set selects `F_{n+i}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat::{mask_indices, IntMatrix, MatrixError, Permutation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuasitoricError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("principal minor on {subset:?} is {minor}, not ±1")]
    NotCharacteristic { subset: Vec<usize>, minor: i128 },
    #[error("declared size {declared} does not match matrix size {actual}")]
    SizeMismatch { declared: usize, actual: usize },
    #[error("not a Bott matrix: {0}")]
    InvalidBottMatrix(String),
    #[error("characteristic matrix is not of Bott type")]
    NotBott,
    #[error("facet index {index} out of range for the {n}-cube")]
    FacetOutOfRange { index: usize, n: usize },
    #[error("a facet of the 1-cube is a point")]
    PointFacet,
}

/// A vertex of the `n`-cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeVertex {
    n: usize,
    mask: u32,
}

impl CubeVertex {
    pub fn new(n: usize, mask: u32) -> Self {
        assert!(n < 32 && mask < 1 << n, "vertex mask out of range");
        CubeVertex { n, mask }
    }

    pub fn from_bits(eps: &[u8]) -> Self {
        let mask = eps.iter().enumerate().fold(0u32, |m, (i, &e)| m | (u32::from(e & 1) << i));
        CubeVertex { n: eps.len(), mask }
    }

    /// The vertex `F_0 ∩ … ∩ F_{n-1}`.
    pub fn initial(n: usize) -> Self {
        CubeVertex { n, mask: 0 }
    }

    /// The vertex `F_n ∩ … ∩ F_{2n-1}`.
    pub fn opposite_initial(n: usize) -> Self {
        CubeVertex { n, mask: (1 << n) - 1 }
    }

    pub fn all(n: usize) -> impl Iterator<Item = CubeVertex> {
        (0..1u32 << n).map(move |mask| CubeVertex { n, mask })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn eps(&self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.n).map(|i| u8::from(self.eps(i))).collect()
    }

    /// Facet indices (`0..2n`) meeting at this vertex, one per pair.
    pub fn facets(&self) -> Vec<usize> {
        (0..self.n).map(|i| if self.eps(i) { self.n + i } else { i }).collect()
    }
}

/// Whether every principal minor (all `2^n` subsets) is `±1`.
pub fn is_valid_characteristic(lambda_star: &IntMatrix) -> bool {
    first_bad_minor(lambda_star).is_none()
}

fn first_bad_minor(lambda_star: &IntMatrix) -> Option<(u32, i128)> {
    (0..1u32 << lambda_star.n())
        .map(|mask| (mask, lambda_star.principal_minor_mask(mask)))
        .find(|&(_, m)| m != 1 && m != -1)
}

/// Reduced submatrix `Λ★` of a characteristic matrix over the `n`-cube.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CharMatrixJson", into = "CharMatrixJson")]
pub struct CharMatrixCube {
    lambda_star: IntMatrix,
}

#[derive(Serialize, Deserialize)]
struct CharMatrixJson {
    n: usize,
    lambda_star: IntMatrix,
}

impl TryFrom<CharMatrixJson> for CharMatrixCube {
    type Error = QuasitoricError;
    fn try_from(j: CharMatrixJson) -> Result<Self, Self::Error> {
        if j.n != j.lambda_star.n() {
            return Err(QuasitoricError::SizeMismatch { declared: j.n, actual: j.lambda_star.n() });
        }
        CharMatrixCube::new(j.lambda_star)
    }
}

impl From<CharMatrixCube> for CharMatrixJson {
    fn from(c: CharMatrixCube) -> Self {
        CharMatrixJson { n: c.n(), lambda_star: c.lambda_star }
    }
}

impl CharMatrixCube {
    pub fn new(lambda_star: IntMatrix) -> Result<Self, QuasitoricError> {
        if let Some((mask, minor)) = first_bad_minor(&lambda_star) {
            return Err(QuasitoricError::NotCharacteristic { subset: mask_indices(mask), minor });
        }
        Ok(CharMatrixCube { lambda_star })
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, QuasitoricError> {
        Self::new(IntMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.lambda_star.n()
    }

    pub fn lambda_star(&self) -> &IntMatrix {
        &self.lambda_star
    }

    /// Vector of facet `F_j`, `j < 2n`.
    pub fn facet_vector(&self, j: usize) -> Vec<i64> {
        let n = self.n();
        if j < n {
            (0..n).map(|r| i64::from(r == j)).collect()
        } else {
            self.lambda_star.column(j - n)
        }
    }

    /// The `n` facet vectors at a vertex, in pair order.
    pub fn vertex_columns(&self, v: CubeVertex) -> Vec<Vec<i64>> {
        assert_eq!(v.n(), self.n());
        v.facets().into_iter().map(|j| self.facet_vector(j)).collect()
    }

    /// The vertex columns assembled as the columns of a square matrix.
    pub fn vertex_matrix(&self, v: CubeVertex) -> IntMatrix {
        let cols = self.vertex_columns(v);
        IntMatrix::from_fn(self.n(), |i, j| cols[j][i])
    }

    /// Sign of the torus fixed point over `v`: the principal minor of `-Λ★`
    /// on the set of flipped coordinates.
    pub fn sign_of_fixed_point(&self, v: CubeVertex) -> i64 {
        assert_eq!(v.n(), self.n());
        let minor = self.lambda_star.principal_minor_mask(v.mask());
        let k = v.mask().count_ones();
        let s = if k.is_multiple_of(2) { minor } else { -minor };
        debug_assert!(s == 1 || s == -1);
        s as i64
    }

    /// Signs at all `2^n` vertices, indexed by vertex mask.
    pub fn fixed_point_signs(&self) -> Vec<i64> {
        CubeVertex::all(self.n()).map(|v| self.sign_of_fixed_point(v)).collect()
    }

    /// Every principal minor of `-Λ★` equals one.
    pub fn is_bott_tower(&self) -> bool {
        self.fixed_point_signs().iter().all(|&s| s == 1)
    }

    /// Finds the lexicographically smallest `σ` with `conjugate(Λ★, σ) = Aᵗ`
    /// for a Bott matrix `A`.
    pub fn bott_matrix_from(&self) -> Result<(BottMatrix, Permutation), QuasitoricError> {
        if !self.is_bott_tower() {
            return Err(QuasitoricError::NotBott);
        }
        for sigma in Permutation::all(self.n()) {
            let c = self.lambda_star.conjugate(&sigma)?;
            if c.is_lower_triangular() && (0..self.n()).all(|i| c.get(i, i) == -1) {
                let bott = BottMatrix::new(c.transpose())?;
                return Ok((bott, sigma));
            }
        }
        panic!("all principal minors of -Λ★ are one but no triangularizing permutation exists");
    }

    /// Searches row and column sign flips of `Λ★` (omniorientation changes)
    /// together with permutation conjugation for a Bott matrix transpose.
    /// Permutations are tried in lexicographic order, then row flips, then
    /// column flips (flip masks ascending); the first hit is returned.
    pub fn bott_up_to_omniorientation(&self) -> Option<OmniorientedBott> {
        let n = self.n();
        for sigma in Permutation::all(n) {
            let c = self.lambda_star.conjugate(&sigma).expect("sizes match");
            // flips never change the zero pattern
            if !c.is_lower_triangular() {
                continue;
            }
            for rows in 0..1u32 << n {
                for cols in 0..1u32 << n {
                    let flipped = apply_flips(&self.lambda_star, rows, cols);
                    let d = flipped.conjugate(&sigma).expect("sizes match");
                    if (0..n).all(|i| d.get(i, i) == -1) {
                        let bott = BottMatrix::new(d.transpose()).expect("triangular with -1 diagonal");
                        return Some(OmniorientedBott {
                            bott,
                            row_flips: flip_signs(rows, n),
                            col_flips: flip_signs(cols, n),
                            sigma,
                        });
                    }
                }
            }
        }
        None
    }

    /// Characteristic matrix of the characteristic submanifold over facet
    /// `F_i` (`side = false`) or `F_{n+i}` (`side = true`), in refined form.
    pub fn restrict_to_facet(&self, i: usize, side: bool) -> Result<CharMatrixCube, QuasitoricError> {
        let n = self.n();
        if i >= n {
            return Err(QuasitoricError::FacetOutOfRange { index: i, n });
        }
        if n == 1 {
            return Err(QuasitoricError::PointFacet);
        }
        let own = self.facet_vector(if side { n + i } else { i });
        let projection = LatticeProjection::along(&own);
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let m = n - 1;
        let base: Vec<Vec<i64>> = others.iter().map(|&j| projection.apply(&self.facet_vector(j))).collect();
        let opposite: Vec<Vec<i64>> = others.iter().map(|&j| projection.apply(&self.facet_vector(n + j))).collect();
        let b = IntMatrix::from_fn(m, |r, c| base[c][r]);
        let b_prime = IntMatrix::from_fn(m, |r, c| opposite[c][r]);
        let b_inv =
            b.inverse_unimodular().expect("projected vertex columns of a valid characteristic matrix form a basis");
        let mut reduced = b_inv.mul(&b_prime)?;
        if m == 1 {
            reduced = IntMatrix::from_fn(1, |_, _| -1);
        }
        CharMatrixCube::new(reduced)
    }

    /// All `2n` facet restrictions, ordered `F_0, …, F_{n-1}, F_n, …`.
    pub fn facet_restrictions(&self) -> Result<Vec<CharMatrixCube>, QuasitoricError> {
        let mut out = Vec::with_capacity(2 * self.n());
        for side in [false, true] {
            for i in 0..self.n() {
                out.push(self.restrict_to_facet(i, side)?);
            }
        }
        Ok(out)
    }
}

fn flip_signs(mask: u32, n: usize) -> Vec<i64> {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()
}

fn apply_flips(m: &IntMatrix, rows: u32, cols: u32) -> IntMatrix {
    IntMatrix::from_fn(m.n(), |i, j| {
        let s = ((rows >> i) ^ (cols >> j)) & 1;
        if s == 1 {
            -m.get(i, j)
        } else {
            m.get(i, j)
        }
    })
}

/// Witness that a characteristic matrix becomes a Bott matrix transpose after
/// sign flips and conjugation: `conjugate(diag(row_flips)·Λ★·diag(col_flips), σ) = Aᵗ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmniorientedBott {
    pub bott: BottMatrix,
    pub row_flips: Vec<i64>,
    pub col_flips: Vec<i64>,
    pub sigma: Permutation,
}

impl OmniorientedBott {
    pub fn no_flips(&self) -> bool {
        self.row_flips.iter().chain(&self.col_flips).all(|&s| s == 1)
    }

    /// Replays the witness against `Λ★`.
    pub fn verify(&self, c: &CharMatrixCube) -> bool {
        let n = c.n();
        let to_mask = |v: &[i64]| v.iter().enumerate().fold(0u32, |m, (i, &s)| m | (u32::from(s == -1) << i));
        if self.row_flips.len() != n || self.col_flips.len() != n || self.sigma.len() != n {
            return false;
        }
        let flipped = apply_flips(c.lambda_star(), to_mask(&self.row_flips), to_mask(&self.col_flips));
        flipped.conjugate(&self.sigma).map(|d| d == self.bott.matrix().transpose()).unwrap_or(false)
    }
}

/// A surjection `ℤⁿ → ℤⁿ⁻¹` whose kernel is spanned by a primitive vector.
struct LatticeProjection {
    transform: IntMatrix,
    dropped: usize,
}

impl LatticeProjection {
    /// Row-reduces `v` to `±e_p` by integer Euclid steps (smallest nonzero
    /// magnitude first, ties to the smallest index); the same unimodular row
    /// operations applied to the identity give the transform, and coordinate
    /// `p` is dropped. For `v = ±e_i` this just drops coordinate `i`.
    fn along(v: &[i64]) -> Self {
        let n = v.len();
        let mut w = v.to_vec();
        let mut t = IntMatrix::identity(n);
        loop {
            let nonzero: Vec<usize> = (0..n).filter(|&i| w[i] != 0).collect();
            assert!(!nonzero.is_empty(), "projection along the zero vector");
            if nonzero.len() == 1 {
                let p = nonzero[0];
                assert_eq!(w[p].abs(), 1, "projection along a non-primitive vector");
                return LatticeProjection { transform: t, dropped: p };
            }
            let p = *nonzero.iter().min_by_key(|&&i| (w[i].abs(), i)).unwrap();
            for &j in &nonzero {
                if j == p {
                    continue;
                }
                let q = w[j].div_euclid(w[p]);
                w[j] -= q * w[p];
                for c in 0..n {
                    let val = t.get(j, c) - q * t.get(p, c);
                    t.set(j, c, val);
                }
            }
        }
    }

    fn apply(&self, x: &[i64]) -> Vec<i64> {
        let y = self.transform.mul_vec(x);
        y.into_iter().enumerate().filter(|&(i, _)| i != self.dropped).map(|(_, v)| v).collect()
    }
}

/// Upper triangular integer matrix with `-1` on the diagonal; entry `(i, j)`
/// for `i < j` is the twisting integer of the tower.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "BottJson", into = "BottJson")]
pub struct BottMatrix {
    a: IntMatrix,
}

#[derive(Serialize, Deserialize)]
struct BottJson {
    n: usize,
    a: IntMatrix,
}

impl TryFrom<BottJson> for BottMatrix {
    type Error = QuasitoricError;
    fn try_from(j: BottJson) -> Result<Self, Self::Error> {
        if j.n != j.a.n() {
            return Err(QuasitoricError::SizeMismatch { declared: j.n, actual: j.a.n() });
        }
        BottMatrix::new(j.a)
    }
}

impl From<BottMatrix> for BottJson {
    fn from(b: BottMatrix) -> Self {
        BottJson { n: b.n(), a: b.a }
    }
}

impl BottMatrix {
    pub fn new(a: IntMatrix) -> Result<Self, QuasitoricError> {
        if !a.is_upper_triangular() {
            return Err(QuasitoricError::InvalidBottMatrix("not upper triangular".into()));
        }
        if let Some(i) = (0..a.n()).find(|&i| a.get(i, i) != -1) {
            return Err(QuasitoricError::InvalidBottMatrix(format!("diagonal entry {i} is not -1")));
        }
        Ok(BottMatrix { a })
    }

    /// Builds `A` from a function giving `a_ij` for `i < j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let a = IntMatrix::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => f(i, j),
            std::cmp::Ordering::Equal => -1,
            std::cmp::Ordering::Greater => 0,
        });
        BottMatrix { a }
    }

    /// Height-two tower with `a_01 = m`.
    pub fn hirzebruch(m: i64) -> Self {
        Self::from_upper(2, |_, _| m)
    }

    /// The trivial tower `A = -E`.
    pub fn trivial(n: usize) -> Self {
        Self::from_upper(n, |_, _| 0)
    }

    /// All Bott matrices of height `n` whose above-diagonal entries are taken
    /// from `values`, in lexicographic order of the row-major upper entries.
    pub fn all_with_entries(n: usize, values: &[i64]) -> Vec<BottMatrix> {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; slots.len()];
        loop {
            let mut a = IntMatrix::from_fn(n, |i, j| if i == j { -1 } else { 0 });
            for (s, &(i, j)) in slots.iter().enumerate() {
                a.set(i, j, values[idx[s]]);
            }
            out.push(BottMatrix { a });
            // odometer, last slot fastest
            let mut s = slots.len();
            loop {
                if s == 0 {
                    return out;
                }
                s -= 1;
                idx[s] += 1;
                if idx[s] < values.len() {
                    break;
                }
                idx[s] = 0;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.a
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.a.get(i, j)
    }

    /// The quasitoric description with `Λ★ = Aᵗ`.
    pub fn characteristic(&self) -> CharMatrixCube {
        CharMatrixCube::new(self.a.transpose()).expect("transposed Bott matrices are characteristic")
    }
}

/// Streams every `Λ★` with entries in `[lo, hi]` whose principal minors are
/// all `±1`, in lexicographic order of the row-major entries. A minor is
/// checked as soon as its last (bottom-right) entry is placed, so invalid
/// branches are cut early.
pub struct CharMatrixEnumerator {
    n: usize,
    lo: i64,
    hi: i64,
    prefix_len: usize,
    current: IntMatrix,
    pos: usize,
    started: bool,
    done: bool,
}

/// All valid `Λ★` of size `n` with entries in `[-bound, bound]`.
pub fn enumerate_char_matrices(n: usize, bound: i64) -> CharMatrixEnumerator {
    CharMatrixEnumerator::new(n, -bound, bound, &[])
}

impl CharMatrixEnumerator {
    /// Enumerates the matrices whose leading row-major entries equal
    /// `prefix`. Concatenating the streams over all prefixes of a fixed
    /// length, in lexicographic prefix order, reproduces the full stream.
    pub fn new(n: usize, lo: i64, hi: i64, prefix: &[i64]) -> Self {
        assert!((1..=crate::intmat::MAX_DIM).contains(&n));
        assert!(prefix.len() <= n * n);
        let mut current = IntMatrix::from_fn(n, |_, _| lo);
        for (p, &v) in prefix.iter().enumerate() {
            current.set(p / n, p % n, v);
        }
        CharMatrixEnumerator { n, lo, hi, prefix_len: prefix.len(), current, pos: 0, started: false, done: lo > hi }
    }

    /// Row prefixes of the given length over `[lo, hi]`, lexicographic.
    pub fn prefixes(lo: i64, hi: i64, len: usize) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (lo..=hi).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn position_ok(&self, p: usize) -> bool {
        let (r, c) = (p / self.n, p % self.n);
        if r != c {
            return true;
        }
        // every subset whose largest index is r
        (0..1u32 << r).all(|low| {
            let m = self.current.principal_minor_mask(low | 1 << r);
            m == 1 || m == -1
        })
    }

    fn get(&self, p: usize) -> i64 {
        self.current.get(p / self.n, p % self.n)
    }

    fn put(&mut self, p: usize, v: i64) {
        self.current.set(p / self.n, p % self.n, v);
    }
}

impl Iterator for CharMatrixEnumerator {
    type Item = CharMatrixCube;

    fn next(&mut self) -> Option<CharMatrixCube> {
        if self.done {
            return None;
        }
        let total = self.n * self.n;
        let mut pos: usize;
        if !self.started {
            self.started = true;
            if !(0..self.prefix_len).all(|p| self.position_ok(p)) {
                self.done = true;
                return None;
            }
            if self.prefix_len == total {
                self.done = true;
                return Some(CharMatrixCube { lambda_star: self.current.clone() });
            }
            pos = self.prefix_len;
            self.put(pos, self.lo - 1);
        } else {
            pos = self.pos;
        }
        loop {
            let v = self.get(pos) + 1;
            if v > self.hi {
                if pos == self.prefix_len {
                    self.done = true;
                    return None;
                }
                pos -= 1;
                continue;
            }
            self.put(pos, v);
            if !self.position_ok(pos) {
                continue;
            }
            if pos + 1 == total {
                self.pos = pos;
                return Some(CharMatrixCube { lambda_star: self.current.clone() });
            }
            pos += 1;
            self.put(pos, self.lo - 1);
        }
    }
}
