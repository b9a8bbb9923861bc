//! Even-degree cohomology rings of quasitoric manifolds over cubes.
//!
//! A ring is presented by `n` degree-2 generators `u_0, …, u_{n-1}` and one
//! rule per generator rewriting `u_k²` as a combination of square-free
//! quadratic monomials, optionally with extra homogeneous relations. Elements
//! live on the square-free monomials `u_I`, indexed by subsets `I`; the grade
//! of `u_I` is `|I|` (cohomological degree `2|I|`).
//!
//! Two engines compute normal forms. When repeated rewriting of squares
//! terminates and passes a confluence certificate the multiplication table is
//! filled recursively. Otherwise every grade is row-reduced over `ℚ` or `GF(2)`
//! with non-square-free monomials ordered first, so they are eliminated in
//! favour of square-free ones.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::intmat::{Coefficients, IntMatrix, Permutation, MAX_DIM};
use crate::quasitoric::{BottMatrix, CharMatrixCube};
use crate::semifree::{factorize_integer, half_difference, Factorization};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohomologyError {
    #[error("{0} generators exceed the supported maximum {MAX_DIM}")]
    TooManyGenerators(usize),
    #[error("expected {expected} square rules, got {got}")]
    RuleCount { expected: usize, got: usize },
    #[error("square rule {k}: {reason}")]
    BadRule { k: usize, reason: String },
    #[error("extra relation {index}: {reason}")]
    BadRelation { index: usize, reason: String },
    #[error("monomial {monomial:?} of grade {grade} survives in the quotient; square-free monomials do not span")]
    NotSquareFreeSpanned { grade: usize, monomial: Vec<u8> },
    #[error("normal forms in grade {0} need fractions; square-free monomials are not an integral basis")]
    NotIntegral(usize),
}

/// Set of generator indices, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subset(pub u32);

impl Subset {
    pub fn empty() -> Self {
        Subset(0)
    }

    pub fn full(n: usize) -> Self {
        Subset(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(i: usize) -> Self {
        Subset(1 << i)
    }

    pub fn pair(i: usize, j: usize) -> Self {
        Subset(1 << i | 1 << j)
    }

    pub fn from_indices(indices: &[usize]) -> Option<Self> {
        let mut m = 0u32;
        for &i in indices {
            if i >= 32 || m >> i & 1 == 1 {
                return None;
            }
            m |= 1 << i;
        }
        Some(Subset(m))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Subset(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        Subset(self.0 & !(1 << i))
    }

    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    pub fn max_index(self) -> Option<usize> {
        (self.0 != 0).then(|| 31 - self.0.leading_zeros() as usize)
    }

    fn map(self, f: impl Fn(usize) -> usize) -> Self {
        Subset(self.indices().into_iter().fold(0, |m, i| m | 1 << f(i)))
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.len(), self.0).cmp(&(other.len(), other.0))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.indices())
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Subset::from_indices(&v).ok_or_else(|| D::Error::custom("subset indices must be distinct and below 32"))
    }
}

/// Integer combination of square-free monomials.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct RingElement {
    terms: BTreeMap<Subset, i64>,
}

impl RingElement {
    pub fn zero() -> Self {
        RingElement::default()
    }

    pub fn one() -> Self {
        Self::monomial(Subset::empty(), 1)
    }

    pub fn generator(i: usize) -> Self {
        Self::monomial(Subset::singleton(i), 1)
    }

    pub fn monomial(s: Subset, c: i64) -> Self {
        let mut e = RingElement::zero();
        e.add_term(s, c);
        e
    }

    /// `Σ c_i u_i`.
    pub fn linear(c: &[i64]) -> Self {
        let mut e = RingElement::zero();
        for (i, &x) in c.iter().enumerate() {
            e.add_term(Subset::singleton(i), x);
        }
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Subset, i64)>) -> Self {
        let mut e = RingElement::zero();
        for (s, c) in terms {
            e.add_term(s, c);
        }
        e
    }

    pub fn add_term(&mut self, s: Subset, c: i64) {
        if c == 0 {
            return;
        }
        let slot = self.terms.entry(s).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.terms.remove(&s);
        }
    }

    pub fn add_scaled(&mut self, other: &RingElement, c: i64) {
        for (&s, &x) in &other.terms {
            self.add_term(s, c * x);
        }
    }

    pub fn scaled(&self, c: i64) -> Self {
        let mut e = RingElement::zero();
        e.add_scaled(self, c);
        e
    }

    pub fn reduce(&self, coeffs: Coefficients) -> Self {
        Self::from_terms(self.terms.iter().map(|(&s, &c)| (s, coeffs.reduce(c))))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, s: Subset) -> i64 {
        self.terms.get(&s).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Subset, i64)> + '_ {
        self.terms.iter().map(|(&s, &c)| (s, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The common grade of all terms, if the element is homogeneous and
    /// nonzero.
    pub fn grade(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|s| s.len());
        let first = it.next()?;
        it.all(|g| g == first).then_some(first)
    }

    fn map_indices(&self, f: impl Fn(usize) -> usize + Copy) -> Self {
        Self::from_terms(self.terms.iter().map(|(&s, &c)| (s.map(f), c)))
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (s, c)) in self.terms().enumerate() {
            let mono = if s.is_empty() {
                "1".to_string()
            } else {
                let idx: Vec<String> = s.indices().iter().map(|i| i.to_string()).collect();
                format!("u{{{}}}", idx.join(","))
            };
            let sign = if c < 0 { "-" } else { "+" };
            match (k, c.abs()) {
                (0, 1) if c < 0 => write!(f, "-{mono}")?,
                (0, 1) => write!(f, "{mono}")?,
                (0, a) if c < 0 => write!(f, "-{a} {mono}")?,
                (0, a) => write!(f, "{a} {mono}")?,
                (_, 1) => write!(f, " {sign} {mono}")?,
                (_, a) => write!(f, " {sign} {a} {mono}")?,
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    terms: Vec<(Subset, i64)>,
}

impl Serialize for RingElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ElementJson { terms: self.terms().collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RingElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(RingElement::from_terms(ElementJson::deserialize(d)?.terms))
    }
}

/// How normal forms were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Rewriting,
    Elimination,
}

/// Rule `k` lists `(S, c)` with `u_k² = Σ c·u_S`, every `S` of size two.
pub type SquareRule = Vec<(Subset, i64)>;

#[derive(Clone)]
pub struct GradedRing {
    n: usize,
    coeffs: Coefficients,
    square_rules: Vec<SquareRule>,
    extra_relations: Vec<RingElement>,
    engine: Engine,
    /// `action[I][j]` is the normal form of `u_I · u_j`.
    action: Vec<Vec<RingElement>>,
    ranks: Vec<usize>,
}

impl fmt::Debug for GradedRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedRing")
            .field("n", &self.n)
            .field("coeffs", &self.coeffs)
            .field("square_rules", &self.square_rules)
            .field("extra_relations", &self.extra_relations)
            .field("engine", &self.engine)
            .finish()
    }
}

impl PartialEq for GradedRing {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.coeffs == other.coeffs
            && self.square_rules == other.square_rules
            && self.extra_relations == other.extra_relations
    }
}

#[derive(Serialize, Deserialize)]
struct RingJson {
    n: usize,
    coeffs: Coefficients,
    square_rules: Vec<SquareRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    extra_relations: Vec<RingElement>,
}

impl Serialize for GradedRing {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RingJson {
            n: self.n,
            coeffs: self.coeffs,
            square_rules: self.square_rules.clone(),
            extra_relations: self.extra_relations.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GradedRing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = RingJson::deserialize(d)?;
        GradedRing::new(j.n, j.coeffs, j.square_rules, j.extra_relations).map_err(D::Error::custom)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl GradedRing {
    pub fn new(
        n: usize,
        coeffs: Coefficients,
        square_rules: Vec<SquareRule>,
        extra_relations: Vec<RingElement>,
    ) -> Result<Self, CohomologyError> {
        if n > MAX_DIM {
            return Err(CohomologyError::TooManyGenerators(n));
        }
        if square_rules.len() != n {
            return Err(CohomologyError::RuleCount { expected: n, got: square_rules.len() });
        }
        let mut rules = Vec::with_capacity(n);
        for (k, rule) in square_rules.into_iter().enumerate() {
            let mut e = RingElement::zero();
            for (s, c) in rule {
                if s.len() != 2 || s.max_index().is_some_and(|m| m >= n) {
                    return Err(CohomologyError::BadRule {
                        k,
                        reason: format!("term {s:?} is not a pair of generators"),
                    });
                }
                e.add_term(s, c);
            }
            rules.push(e.reduce(coeffs).terms().collect::<Vec<_>>());
        }
        let mut extra = Vec::new();
        for (index, g) in extra_relations.into_iter().enumerate() {
            let g = g.reduce(coeffs);
            if g.is_zero() {
                continue;
            }
            match g.grade() {
                Some(q) if q >= 2 => {}
                _ => {
                    return Err(CohomologyError::BadRelation {
                        index,
                        reason: "relations must be homogeneous of grade at least two".into(),
                    })
                }
            }
            if g.terms().any(|(s, _)| s.max_index().is_some_and(|m| m >= n)) {
                return Err(CohomologyError::BadRelation { index, reason: "generator index out of range".into() });
            }
            extra.push(g);
        }

        if extra.is_empty() {
            if let Some(action) = rewriting_action(n, coeffs, &rules) {
                if certificate_holds(n, coeffs, &rules, &action) {
                    let ranks = (0..=n).map(|q| binomial(n, q)).collect();
                    return Ok(GradedRing {
                        n,
                        coeffs,
                        square_rules: rules,
                        extra_relations: extra,
                        engine: Engine::Rewriting,
                        action,
                        ranks,
                    });
                }
            }
        }
        let (mut action, ranks) = match coeffs {
            Coefficients::Integers => eliminate::<BigRational>(n, &rules, &extra)?,
            Coefficients::Mod2 => eliminate::<Gf2>(n, &rules, &extra)?,
        };
        for e in action.iter_mut().flatten() {
            *e = e.reduce(coeffs);
        }
        Ok(GradedRing {
            n,
            coeffs,
            square_rules: rules,
            extra_relations: extra,
            engine: Engine::Elimination,
            action,
            ranks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> Coefficients {
        self.coeffs
    }

    pub fn square_rules(&self) -> &[SquareRule] {
        &self.square_rules
    }

    pub fn extra_relations(&self) -> &[RingElement] {
        &self.extra_relations
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    /// Additive rank of each grade `q = 0..=n`.
    pub fn graded_ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn generator(&self, i: usize) -> RingElement {
        assert!(i < self.n);
        RingElement::generator(i)
    }

    /// Normal form of `x · u_j`.
    pub fn mul_generator(&self, x: &RingElement, j: usize) -> RingElement {
        let mut out = RingElement::zero();
        for (s, c) in x.terms() {
            out.add_scaled(&self.action[s.0 as usize][j], c);
        }
        out.reduce(self.coeffs)
    }

    /// Normal form of `x · u_S`.
    pub fn mul_monomial(&self, x: &RingElement, s: Subset) -> RingElement {
        s.indices().into_iter().fold(x.clone(), |acc, j| self.mul_generator(&acc, j))
    }

    pub fn multiply(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let a = a.reduce(self.coeffs);
        let mut out = RingElement::zero();
        for (s, c) in b.terms() {
            out.add_scaled(&self.mul_monomial(&a, s), c);
        }
        out.reduce(self.coeffs)
    }

    pub fn square(&self, a: &RingElement) -> RingElement {
        self.multiply(a, a)
    }

    pub fn product(&self, factors: &[RingElement]) -> RingElement {
        factors.iter().fold(RingElement::one(), |acc, x| self.multiply(&acc, x))
    }

    /// Normal form of `u_0 u_1 ⋯ u_{n-1}`.
    pub fn top_product(&self) -> RingElement {
        self.mul_monomial(&RingElement::one(), Subset::full(self.n))
    }

    /// Normal form of the monomial with the given exponents.
    pub fn monomial_normal_form(&self, exponents: &[u32]) -> RingElement {
        assert_eq!(exponents.len(), self.n);
        let mut x = RingElement::one();
        for (j, &e) in exponents.iter().enumerate() {
            for _ in 0..e {
                x = self.mul_generator(&x, j);
            }
        }
        x
    }

    /// Renames generators: new `u_i` is old `u_{σ(i)}`.
    pub fn reorder(&self, sigma: &Permutation) -> Result<GradedRing, CohomologyError> {
        assert_eq!(sigma.len(), self.n);
        let inv = sigma.inverse();
        let rules = (0..self.n)
            .map(|i| self.square_rules[sigma.image(i)].iter().map(|&(s, c)| (s.map(|t| inv.image(t)), c)).collect())
            .collect();
        let extra = self.extra_relations.iter().map(|g| g.map_indices(|t| inv.image(t))).collect();
        GradedRing::new(self.n, self.coeffs, rules, extra)
    }

    /// The same presentation with coefficients reduced modulo two.
    pub fn mod2(&self) -> Result<GradedRing, CohomologyError> {
        GradedRing::new(self.n, Coefficients::Mod2, self.square_rules.clone(), self.extra_relations.clone())
    }

    /// (P1) every `u_k²` rewrites into terms `u_i u_k` with `i < k`, and (P2)
    /// the top product is nonzero, both modulo two and in the given
    /// generator order.
    pub fn is_bq_algebra_mod2(&self) -> bool {
        let ring = match self.coeffs {
            Coefficients::Mod2 => self.clone(),
            Coefficients::Integers => match self.mod2() {
                Ok(r) => r,
                Err(_) => return false,
            },
        };
        let p1 = ring.square_rules.iter().enumerate().all(|(k, rule)| {
            rule.iter().all(|&(s, _)| s.contains(k) && s.without(k).max_index().is_some_and(|i| i < k))
        });
        p1 && !ring.top_product().is_zero()
    }

    /// First generator order (lexicographic in `σ`) under which the ring is
    /// a BQ-algebra modulo two.
    pub fn bq_ordering_mod2(&self) -> Option<Permutation> {
        let base = match self.coeffs {
            Coefficients::Mod2 => self.clone(),
            Coefficients::Integers => self.mod2().ok()?,
        };
        Permutation::all(self.n).find(|sigma| base.reorder(sigma).is_ok_and(|r| r.is_bq_algebra_mod2()))
    }
}

/// Ring of the tower: `u_k² = Σ_{i<k} a_ik u_i u_k`.
pub fn build_ring(a: &BottMatrix, coeffs: Coefficients) -> GradedRing {
    let n = a.n();
    let rules = (0..n).map(|k| (0..k).map(|i| (Subset::pair(i, k), a.entry(i, k))).collect()).collect();
    GradedRing::new(n, coeffs, rules, Vec::new()).expect("triangular rules always rewrite")
}

/// Ring presented by `u_i = v_{n+i}`, the linear relations
/// `v_k = -Σ_j Λ★_kj u_j` and the relations `v_k u_k = 0`, which give
/// `u_k² = -Λ★_kk Σ_{j≠k} Λ★_kj u_j u_k`.
pub fn build_ring_from_lambda(c: &CharMatrixCube, coeffs: Coefficients) -> Result<GradedRing, CohomologyError> {
    let l = c.lambda_star();
    let n = c.n();
    let rules = (0..n)
        .map(|k| (0..n).filter(|&j| j != k).map(|j| (Subset::pair(j, k), -l.get(k, k) * l.get(k, j))).collect())
        .collect();
    GradedRing::new(n, coeffs, rules, Vec::new())
}

fn rewriting_action(n: usize, coeffs: Coefficients, rules: &[SquareRule]) -> Option<Vec<Vec<RingElement>>> {
    struct Rewriter<'a> {
        coeffs: Coefficients,
        rules: &'a [SquareRule],
        memo: Vec<Vec<Option<RingElement>>>,
        visiting: Vec<Vec<bool>>,
    }

    impl Rewriter<'_> {
        fn act(&mut self, mask: Subset, j: usize) -> Option<RingElement> {
            if !mask.contains(j) {
                return Some(RingElement::monomial(mask.with(j), 1));
            }
            let m = mask.0 as usize;
            if let Some(e) = &self.memo[m][j] {
                return Some(e.clone());
            }
            if self.visiting[m][j] {
                return None;
            }
            self.visiting[m][j] = true;
            let base = RingElement::monomial(mask.without(j), 1);
            let mut out = RingElement::zero();
            for &(s, c) in self.rules[j].iter() {
                let mut t = base.clone();
                for i in s.indices() {
                    t = self.mul_gen(&t, i)?;
                }
                out.add_scaled(&t, c);
            }
            let out = out.reduce(self.coeffs);
            self.visiting[m][j] = false;
            self.memo[m][j] = Some(out.clone());
            Some(out)
        }

        fn mul_gen(&mut self, x: &RingElement, j: usize) -> Option<RingElement> {
            let mut out = RingElement::zero();
            for (s, c) in x.terms() {
                out.add_scaled(&self.act(s, j)?, c);
            }
            Some(out.reduce(self.coeffs))
        }
    }

    let size = 1usize << n;
    let mut r = Rewriter { coeffs, rules, memo: vec![vec![None; n]; size], visiting: vec![vec![false; n]; size] };
    let mut action = Vec::with_capacity(size);
    for m in 0..size {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(r.act(Subset(m as u32), j)?);
        }
        action.push(row);
    }
    Some(action)
}

/// The operators `x ↦ x·u_j` on the square-free module commute and kill
/// every relation, so the module is the quotient ring itself.
fn certificate_holds(n: usize, coeffs: Coefficients, rules: &[SquareRule], action: &[Vec<RingElement>]) -> bool {
    let mul = |x: &RingElement, j: usize| {
        let mut out = RingElement::zero();
        for (s, c) in x.terms() {
            out.add_scaled(&action[s.0 as usize][j], c);
        }
        out.reduce(coeffs)
    };
    for m in 0..1u32 << n {
        let x = RingElement::monomial(Subset(m), 1);
        for a in 0..n {
            let xa = mul(&x, a);
            for b in a + 1..n {
                if mul(&xa, b) != mul(&mul(&x, b), a) {
                    return false;
                }
            }
            let mut rhs = RingElement::zero();
            for &(s, c) in &rules[a] {
                let t = s.indices().into_iter().fold(x.clone(), |acc, i| mul(&acc, i));
                rhs.add_scaled(&t, c);
            }
            if mul(&xa, a) != rhs.reduce(coeffs) {
                return false;
            }
        }
    }
    true
}

trait Field: Clone + PartialEq {
    fn zero() -> Self;
    fn from_i64(x: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// `self -= a * b`
    fn sub_mul(&mut self, a: &Self, b: &Self);
    fn to_integer(&self) -> Option<i64>;
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Gf2(bool);

impl Field for Gf2 {
    fn zero() -> Self {
        Gf2(false)
    }
    fn from_i64(x: i64) -> Self {
        Gf2(x.rem_euclid(2) == 1)
    }
    fn is_zero(&self) -> bool {
        !self.0
    }
    fn inv(&self) -> Self {
        assert!(self.0, "inverse of zero");
        *self
    }
    fn mul(&self, other: &Self) -> Self {
        Gf2(self.0 && other.0)
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        self.0 ^= a.0 && b.0;
    }
    fn to_integer(&self) -> Option<i64> {
        Some(i64::from(self.0))
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn inv(&self) -> Self {
        self.recip()
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn to_integer(&self) -> Option<i64> {
        if self.denom().is_one() {
            self.numer().to_i64()
        } else {
            None
        }
    }
}

/// Reduced row echelon form in place; returns the pivot column of each
/// surviving row.
fn rref<F: Field>(rows: &mut Vec<Vec<F>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].inv();
        for x in rows[r].iter_mut() {
            *x = x.mul(&inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    x.sub_mul(&f, y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Exponent vectors of total degree `d` in `n` variables.
fn monomials(n: usize, d: usize) -> Vec<Vec<u8>> {
    fn go(n: usize, d: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == n - 1 {
            prefix.push(d as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=d).rev() {
            prefix.push(e as u8);
            go(n, d - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(n, d, &mut Vec::new(), &mut out);
    out
}

fn square_free(e: &[u8]) -> Option<Subset> {
    e.iter().all(|&x| x <= 1).then(|| Subset(e.iter().enumerate().fold(0, |m, (i, &x)| m | u32::from(x) << i)))
}

fn add_subset(e: &[u8], s: Subset) -> Vec<u8> {
    let mut out = e.to_vec();
    for i in s.indices() {
        out[i] += 1;
    }
    out
}

type ActionTable = (Vec<Vec<RingElement>>, Vec<usize>);

fn eliminate<F: Field>(n: usize, rules: &[SquareRule], extra: &[RingElement]) -> Result<ActionTable, CohomologyError> {
    let size = 1usize << n;
    let mut action = vec![vec![RingElement::zero(); n]; size];
    let mut ranks = Vec::with_capacity(n + 1);
    for d in 0..=n + 1 {
        let mut mons = monomials(n, d);
        // non-square-free first so they become pivots
        mons.sort_by_key(|e| match square_free(e) {
            None => (0, Subset(0)),
            Some(s) => (1, s),
        });
        let index: HashMap<Vec<u8>, usize> = mons.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let ncols = mons.len();
        let mut rows: Vec<Vec<F>> = Vec::new();
        if d >= 2 {
            for m in monomials(n, d - 2) {
                for (k, rule) in rules.iter().enumerate() {
                    let mut row = vec![F::zero(); ncols];
                    let mut sq = m.clone();
                    sq[k] += 2;
                    row[index[&sq]] = F::from_i64(1);
                    for &(s, c) in rule {
                        let col = index[&add_subset(&m, s)];
                        row[col].sub_mul(&F::from_i64(c), &F::from_i64(1));
                    }
                    rows.push(row);
                }
            }
        }
        for g in extra {
            let q = g.grade().expect("validated homogeneous");
            if q > d {
                continue;
            }
            for m in monomials(n, d - q) {
                let mut row = vec![F::zero(); ncols];
                for (s, c) in g.terms() {
                    let col = index[&add_subset(&m, s)];
                    row[col].sub_mul(&F::from_i64(-c), &F::from_i64(1));
                }
                rows.push(row);
            }
        }
        let pivots = rref(&mut rows, ncols);
        let mut pivot_row = vec![None; ncols];
        for (r, &c) in pivots.iter().enumerate() {
            pivot_row[c] = Some(r);
        }
        let mut free = 0;
        for (c, e) in mons.iter().enumerate() {
            if pivot_row[c].is_none() {
                if square_free(e).is_none() {
                    return Err(CohomologyError::NotSquareFreeSpanned { grade: d, monomial: e.clone() });
                }
                free += 1;
            }
        }
        if d <= n {
            ranks.push(free);
        }
        if d == 0 {
            continue;
        }
        for m in 0..size {
            let mask = Subset(m as u32);
            if mask.len() != d - 1 {
                continue;
            }
            let base = add_subset(&vec![0; n], mask);
            for j in 0..n {
                let mut e = base.clone();
                e[j] += 1;
                let col = index[&e];
                let nf = match pivot_row[col] {
                    None => RingElement::monomial(square_free(&e).expect("free columns are square-free"), 1),
                    Some(r) => {
                        let mut out = RingElement::zero();
                        for (c2, x) in rows[r].iter().enumerate() {
                            if c2 == col || x.is_zero() {
                                continue;
                            }
                            let v = x.to_integer().ok_or(CohomologyError::NotIntegral(d))?;
                            let s = square_free(&mons[c2]).expect("pivot rows only involve free columns");
                            out.add_term(s, -v);
                        }
                        out
                    }
                };
                action[m][j] = nf;
            }
        }
    }
    Ok((action, ranks))
}

/// Degree-two elements with vanishing square, found by search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareZeroBasis {
    pub bound: i64,
    /// Coefficient vectors in the generators `u_i`.
    pub vectors: Vec<Vec<i64>>,
}

pub const DEFAULT_SEARCH_BOUND: i64 = 8;

/// The quadratic map `c ↦ (Σ c_i u_i)²` as coefficient vectors over the
/// grade-two basis.
struct SquareMap {
    pairs: Vec<Subset>,
    table: Vec<Vec<Vec<i64>>>,
    coeffs: Coefficients,
}

impl SquareMap {
    fn new(ring: &GradedRing) -> Self {
        let n = ring.n();
        let pairs: Vec<Subset> = (0..n).flat_map(|i| (i + 1..n).map(move |j| Subset::pair(i, j))).collect();
        let table = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let p = ring.multiply(&RingElement::generator(i), &RingElement::generator(j));
                        pairs.iter().map(|&s| p.coefficient(s)).collect()
                    })
                    .collect()
            })
            .collect();
        SquareMap { pairs, table, coeffs: ring.coeffs() }
    }

    fn squares_to_zero(&self, c: &[i64]) -> bool {
        let n = c.len();
        let mut acc = vec![0i64; self.pairs.len()];
        for i in 0..n {
            if c[i] == 0 {
                continue;
            }
            for j in 0..n {
                if c[j] == 0 {
                    continue;
                }
                for (a, &t) in acc.iter_mut().zip(&self.table[i][j]) {
                    *a += c[i] * c[j] * t;
                }
            }
        }
        acc.iter().all(|&a| self.coeffs.reduce(a) == 0)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Primitive coefficient vectors in `[-bound, bound]^n` whose first nonzero
/// entry is positive and whose element squares to zero, lexicographic.
pub fn square_zero_vectors(ring: &GradedRing, bound: i64) -> Vec<Vec<i64>> {
    let n = ring.n();
    let map = SquareMap::new(ring);
    let mut out = Vec::new();
    let mut c = vec![-bound; n];
    loop {
        let first = c.iter().find(|&&x| x != 0).copied();
        if first.is_some_and(|f| f > 0) && c.iter().fold(0, |g, &x| gcd(g, x)) == 1 && map.squares_to_zero(&c) {
            out.push(c.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < bound {
                c[i] += 1;
                break;
            }
            c[i] = -bound;
        }
    }
}

/// First `n`-subset (lexicographic) of [`square_zero_vectors`] forming a
/// unimodular change of generators. Absence only means nothing was found
/// within `bound`.
pub fn find_square_zero_basis(ring: &GradedRing, bound: i64) -> Option<SquareZeroBasis> {
    let n = ring.n();
    let cands = square_zero_vectors(ring, bound);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    fn search(cands: &[Vec<i64>], n: usize, start: usize, chosen: &mut Vec<usize>, coeffs: Coefficients) -> bool {
        if chosen.len() == n {
            let m = IntMatrix::from_fn(n, |i, j| cands[chosen[j]][i]);
            let det = m.det();
            return match coeffs {
                Coefficients::Integers => det == 1 || det == -1,
                Coefficients::Mod2 => det.rem_euclid(2) == 1,
            };
        }
        for k in start..cands.len() {
            if cands.len() - k < n - chosen.len() {
                break;
            }
            chosen.push(k);
            if search(cands, n, k + 1, chosen, coeffs) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if n == 0 || !search(&cands, n, 0, &mut chosen, ring.coeffs()) {
        return None;
    }
    Some(SquareZeroBasis { bound, vectors: chosen.iter().map(|&k| cands[k].clone()).collect() })
}

/// Checks that the vectors give square-zero elements whose full product is
/// nonzero.
pub fn verify_square_zero_basis(ring: &GradedRing, vectors: &[Vec<i64>]) -> bool {
    let xs: Vec<RingElement> = vectors.iter().map(|v| RingElement::linear(v)).collect();
    xs.len() == ring.n() && xs.iter().all(|x| ring.square(x).is_zero()) && !ring.product(&xs).is_zero()
}

/// Outcome of the product-of-spheres test for a Bott tower.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoToProduct {
    pub iso: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factorization: Option<Factorization>,
    /// Column `k` of `(E - A)/2`, giving `x_k = Σ_j d_jk u_j`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<i64>>>,
}

/// Decided by integer factorization of `(E - A)/2`; on success the basis
/// `x_k = Σ_j d_jk u_j` is checked in the ring.
pub fn iso_to_product_test(a: &BottMatrix) -> IsoToProduct {
    let no = IsoToProduct { iso: false, factorization: None, basis: None };
    let Some(d) = half_difference(a) else {
        return no;
    };
    let Some(f) = factorize_integer(&d).expect("(E - A)/2 is unipotent") else {
        return no;
    };
    let basis: Vec<Vec<i64>> = (0..a.n()).map(|k| d.column(k)).collect();
    let ring = build_ring(a, Coefficients::Integers);
    assert!(verify_square_zero_basis(&ring, &basis), "factorization witness fails in the ring of {a:?}");
    IsoToProduct { iso: true, factorization: Some(f), basis: Some(basis) }
}

/// `(f_0, f_1)` of the `n`-cube: facets and codimension-two faces.
pub fn expected_face_counts(n: usize) -> (i64, i64) {
    let n = n as i64;
    (2 * n, 2 * n * (n - 1))
}

/// `b_2 = f_0 - n` and `b_4 = f_1 - (n-1) f_0 + C(n, n-2)`.
pub fn betti_from_face_counts(f0: i64, f1: i64, n: usize) -> (i64, i64) {
    assert!(n >= 2, "face-count identities need n >= 2");
    let c = binomial(n, n - 2) as i64;
    (f0 - n as i64, f1 - (n as i64 - 1) * f0 + c)
}

/// Nonzero `a ∈ [-bound, bound]^n` with `a_i² b_i = 2 a_i a_{i+1}` for all
/// `i` (indices cyclic).
pub fn cyclic_square_zero_system(b: &[i64], bound: i64) -> Vec<Vec<i64>> {
    let n = b.len();
    let mut out = Vec::new();
    let total = (2 * bound + 1).pow(n as u32);
    for code in 0..total {
        let mut x = code;
        let a: Vec<i64> = (0..n)
            .map(|_| {
                let d = x % (2 * bound + 1) - bound;
                x /= 2 * bound + 1;
                d
            })
            .rev()
            .collect();
        if a.iter().all(|&v| v == 0) {
            continue;
        }
        if (0..n).all(|i| a[i] * a[i] * b[i] == 2 * a[i] * a[(i + 1) % n]) {
            out.push(a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intmat::cyclic_matrix;
    use proptest::prelude::*;

    const Z: Coefficients = Coefficients::Integers;
    const Z2: Coefficients = Coefficients::Mod2;

    fn cm(rows: &[&[i64]]) -> CharMatrixCube {
        CharMatrixCube::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn u(i: &[usize]) -> RingElement {
        RingElement::monomial(Subset::from_indices(i).unwrap(), 1)
    }

    #[test]
    fn hirzebruch_rules() {
        for m in [-3, 0, 2, 5] {
            let r = build_ring(&BottMatrix::hirzebruch(m), Z);
            assert_eq!(r.engine(), Engine::Rewriting);
            assert!(r.square(&u(&[0])).is_zero());
            assert_eq!(r.square(&u(&[1])), u(&[0, 1]).scaled(m));
            assert_eq!(r.multiply(&u(&[0]), &u(&[1])), u(&[0, 1]));
        }
    }

    #[test]
    fn trivial_ring() {
        let r = build_ring(&BottMatrix::trivial(3), Z);
        for i in 0..3 {
            assert!(r.square(&u(&[i])).is_zero());
        }
        let s = RingElement::linear(&[1, 1, 0]);
        assert_eq!(r.square(&s), u(&[0, 1]).scaled(2));
        assert_eq!(r.graded_ranks(), &[1, 3, 3, 1]);
    }

    #[test]
    fn lambda_matches_bott() {
        let a = BottMatrix::from_upper(4, |i, j| (i as i64 + 1) * (j as i64) - 3);
        for coeffs in [Z, Z2] {
            let x = build_ring(&a, coeffs);
            let y = build_ring_from_lambda(&a.characteristic(), coeffs).unwrap();
            assert_eq!(x, y);
        }
        let e = build_ring_from_lambda(&CharMatrixCube::new(IntMatrix::identity(3).neg()).unwrap(), Z).unwrap();
        assert!(e.square_rules().iter().all(|r| r.is_empty()));
    }

    #[test]
    fn non_bott_ring() {
        let c = cm(&[&[-1, -2], &[-1, -1]]);
        let r = build_ring_from_lambda(&c, Z2).unwrap();
        assert!(r.square(&u(&[0])).is_zero());
        assert_eq!(r.square(&u(&[1])), u(&[0, 1]));
        assert!(r.is_bq_algebra_mod2());

        let z = build_ring_from_lambda(&c, Z).unwrap();
        assert_eq!(z.engine(), Engine::Elimination);
        assert_eq!(z.graded_ranks(), &[1, 2, 1]);
        assert_eq!(z.square(&u(&[0])), u(&[0, 1]).scaled(-2));
        assert_eq!(z.square(&u(&[1])), u(&[0, 1]).scaled(-1));
        assert!(z.multiply(&u(&[0, 1]), &u(&[1])).is_zero());
    }

    #[test]
    fn engines_agree_on_towers() {
        let a = BottMatrix::from_upper(3, |i, j| 2 * i as i64 - j as i64);
        let r = build_ring(&a, Z);
        let (action, ranks) = eliminate::<BigRational>(3, r.square_rules(), &[]).unwrap();
        assert_eq!(ranks, vec![1, 3, 3, 1]);
        assert_eq!(action, r.action);
        let r2 = build_ring(&a, Z2);
        let (action, _) = eliminate::<Gf2>(3, r2.square_rules(), &[]).unwrap();
        let reduced: Vec<Vec<RingElement>> =
            action.iter().map(|row| row.iter().map(|e| e.reduce(Z2)).collect()).collect();
        assert_eq!(reduced, r2.action);
    }

    #[test]
    fn bq_shape_violation() {
        // u_1² = u_0 u_2 is not of the form Σ_{i<1} a_i u_i u_1
        let rules = vec![vec![], vec![(Subset::pair(0, 2), 1)], vec![]];
        let r = GradedRing::new(3, Z2, rules, vec![]).unwrap();
        assert!(!r.is_bq_algebra_mod2());
    }

    #[test]
    fn bq_top_product_killed() {
        let rules = vec![vec![], vec![(Subset::pair(0, 1), 1)]];
        let r = GradedRing::new(2, Z2, rules.clone(), vec![]).unwrap();
        assert!(r.is_bq_algebra_mod2());
        let truncated = GradedRing::new(2, Z2, rules, vec![u(&[0, 1])]).unwrap();
        assert!(truncated.top_product().is_zero());
        assert_eq!(truncated.graded_ranks(), &[1, 2, 0]);
        assert!(!truncated.is_bq_algebra_mod2());
    }

    #[test]
    fn bq_ordering_search() {
        let upper = cm(&[&[-1, 3, 1], &[0, -1, 1], &[0, 0, -1]]);
        let r = build_ring_from_lambda(&upper, Z2).unwrap();
        assert!(!r.is_bq_algebra_mod2());
        let sigma = r.bq_ordering_mod2().unwrap();
        assert!(r.reorder(&sigma).unwrap().is_bq_algebra_mod2());
    }

    #[test]
    fn square_zero_search() {
        let e = build_ring(&BottMatrix::trivial(3), Z);
        let b = find_square_zero_basis(&e, 1).unwrap();
        assert_eq!(b.vectors, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);

        let h = build_ring(&BottMatrix::hirzebruch(-4), Z);
        let b = find_square_zero_basis(&h, DEFAULT_SEARCH_BOUND).unwrap();
        assert!(verify_square_zero_basis(&h, &b.vectors));
        assert!(b.vectors.contains(&vec![2, 1]));
        // (u_1 + c u_0)² = (2c + m) u_0 u_1
        let x = RingElement::linear(&[2, 1]);
        assert!(h.square(&x).is_zero());

        let odd = build_ring(&BottMatrix::hirzebruch(1), Z);
        // c_1 (2 c_0 + c_1) = 0: the two solutions span an index-two sublattice
        assert_eq!(square_zero_vectors(&odd, DEFAULT_SEARCH_BOUND), vec![vec![1, -2], vec![1, 0]]);
        assert!(find_square_zero_basis(&odd, DEFAULT_SEARCH_BOUND).is_none());
    }

    #[test]
    fn iso_examples() {
        for m in -6..=6 {
            assert_eq!(iso_to_product_test(&BottMatrix::hirzebruch(m)).iso, m % 2 == 0);
        }
        assert!(iso_to_product_test(&BottMatrix::trivial(4)).iso);
        let counter =
            BottMatrix::new(IntMatrix::from_rows(vec![vec![-1, 0, -2], vec![0, -1, -2], vec![0, 0, -1]]).unwrap())
                .unwrap();
        assert!(!iso_to_product_test(&counter).iso);
    }

    #[test]
    fn face_counts() {
        assert_eq!(expected_face_counts(2), (4, 4));
        assert_eq!(expected_face_counts(3), (6, 12));
        for n in 2..7 {
            let (f0, f1) = expected_face_counts(n);
            assert_eq!(betti_from_face_counts(f0, f1, n), (n as i64, binomial(n, 2) as i64));
        }
    }

    #[test]
    fn cyclic_forms_have_no_square_zero_elements() {
        let divisors = [-2i64, -1, 1, 2];
        for n in 2..=3usize {
            let target = if n % 2 == 0 { 2 } else { -2 };
            let mut seen = 0;
            for code in 0..4usize.pow(n as u32) {
                let b: Vec<i64> = (0..n).map(|i| divisors[code / 4usize.pow(i as u32) % 4]).collect();
                if b.iter().product::<i64>() != target {
                    continue;
                }
                seen += 1;
                let c = CharMatrixCube::new(cyclic_matrix(&b).neg()).unwrap();
                let ring = build_ring_from_lambda(&c, Z).unwrap();
                assert_eq!(ring.graded_ranks().iter().sum::<usize>(), 1 << n);
                assert!(square_zero_vectors(&ring, DEFAULT_SEARCH_BOUND).is_empty(), "{b:?}");
                if n == 3 {
                    assert!(cyclic_square_zero_system(&b, DEFAULT_SEARCH_BOUND).is_empty());
                }
            }
            assert!(seen > 0);
        }
    }

    #[test]
    fn cyclic_system_finds_solutions_when_product_matches() {
        // ∏ b = 2^n admits a_i all nonzero
        let sols = cyclic_square_zero_system(&[2, 2, 2], 2);
        assert!(sols.contains(&vec![1, 1, 1]));
    }

    #[test]
    fn json_round_trip() {
        let r = build_ring(&BottMatrix::hirzebruch(3), Z);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"n":2,"coeffs":"Z","square_rules":[[],[[[0,1],3]]]}"#);
        let back: GradedRing = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let x = RingElement::from_terms([(Subset::pair(0, 2), 3), (Subset::singleton(1), -1)]);
        let j = serde_json::to_string(&x).unwrap();
        assert_eq!(j, r#"{"terms":[[[1],-1],[[0,2],3]]}"#);
        assert_eq!(serde_json::from_str::<RingElement>(&j).unwrap(), x);
        assert_eq!(x.to_string(), "-u{1} + 3 u{0,2}");
        assert!(serde_json::from_str::<GradedRing>(r#"{"n":2,"coeffs":"Z","square_rules":[[[[0],1]],[]]}"#).is_err());
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials(3, 2).len(), 6);
        assert_eq!(monomials(2, 3), vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        assert_eq!(monomials(1, 0), vec![vec![0]]);
    }

    fn bott_strategy() -> impl Strategy<Value = BottMatrix> {
        (1usize..=4).prop_flat_map(|n| {
            proptest::collection::vec(-4i64..=4, n * n)
                .prop_map(move |v| BottMatrix::from_upper(n, |i, j| v[i * n + j]))
        })
    }

    fn element(n: usize) -> impl Strategy<Value = RingElement> {
        proptest::collection::vec(-3i64..=3, 1 << n)
            .prop_map(|c| RingElement::from_terms(c.into_iter().enumerate().map(|(m, x)| (Subset(m as u32), x))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn ring_axioms((a, x, y, z) in bott_strategy().prop_flat_map(|a| {
            let n = a.n();
            (Just(a), element(n), element(n), element(n))
        })) {
            for coeffs in [Z, Z2] {
                let r = build_ring(&a, coeffs);
                prop_assert_eq!(r.multiply(&x, &y), r.multiply(&y, &x));
                prop_assert_eq!(
                    r.multiply(&r.multiply(&x, &y), &z),
                    r.multiply(&x, &r.multiply(&y, &z))
                );
                prop_assert_eq!(r.top_product(), RingElement::monomial(Subset::full(a.n()), 1));
            }
        }

        #[test]
        fn iso_witness_found_by_search(a in bott_strategy()) {
            let t = iso_to_product_test(&a);
            if t.iso {
                let ring = build_ring(&a, Z);
                let bound = t.basis.as_ref().unwrap().iter().flatten().map(|x| x.abs()).max().unwrap().max(1);
                let found = find_square_zero_basis(&ring, bound);
                prop_assert!(found.is_some());
                prop_assert!(verify_square_zero_basis(&ring, &found.unwrap().vectors));
            }
        }
    }
}
