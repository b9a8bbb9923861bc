//! Per-matrix classification records and the exhaustive census over a range
//! of entries.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cohomology::{
    build_ring, build_ring_from_lambda, find_square_zero_basis, iso_to_product_test, verify_square_zero_basis,
    GradedRing, DEFAULT_SEARCH_BOUND,
};
use crate::intmat::{Coefficients, IntMatrix, MatrixError, Permutation};
use crate::quasitoric::{
    is_valid_characteristic, BottMatrix, CharMatrixCube, CharMatrixEnumerator, OmniorientedBott, QuasitoricError,
};
use crate::semifree::{enumerate_semifree_vectors, factorize_bott, half_difference, CircleVector, StepCoefficients};

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected an object with \"n\" and either \"a\" or \"lambda_star\"")]
    Shape,
    #[error("declared n = {declared} but the matrix has size {actual}")]
    SizeMismatch { declared: usize, actual: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Quasitoric(#[from] QuasitoricError),
    #[error("entry range [{lo}, {hi}] is empty")]
    EmptyRange { lo: i64, hi: i64 },
    #[error("rank {0} is outside 1..=4")]
    Rank(usize),
}

/// A matrix as given on input: a Bott matrix `A` or a raw `Λ★`, which need
/// not be characteristic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Bott { n: usize, a: IntMatrix },
    Lambda { n: usize, lambda_star: IntMatrix },
}

impl MatrixInput {
    pub fn from_json(v: &Value) -> Result<Self, CensusError> {
        let obj = v.as_object().ok_or(CensusError::Shape)?;
        let n: usize = serde_json::from_value(obj.get("n").cloned().ok_or(CensusError::Shape)?)?;
        let (m, bott) = match (obj.get("a"), obj.get("lambda_star")) {
            (Some(a), None) => (serde_json::from_value::<IntMatrix>(a.clone())?, true),
            (None, Some(l)) => (serde_json::from_value::<IntMatrix>(l.clone())?, false),
            _ => return Err(CensusError::Shape),
        };
        if m.n() != n {
            return Err(CensusError::SizeMismatch { declared: n, actual: m.n() });
        }
        Ok(if bott { MatrixInput::Bott { n, a: m } } else { MatrixInput::Lambda { n, lambda_star: m } })
    }

    pub fn parse(text: &str) -> Result<Self, CensusError> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    pub fn n(&self) -> usize {
        match self {
            MatrixInput::Bott { n, .. } | MatrixInput::Lambda { n, .. } => *n,
        }
    }
}

impl From<&BottMatrix> for MatrixInput {
    fn from(a: &BottMatrix) -> Self {
        MatrixInput::Bott { n: a.n(), a: a.matrix().clone() }
    }
}

impl From<&CharMatrixCube> for MatrixInput {
    fn from(c: &CharMatrixCube) -> Self {
        MatrixInput::Lambda { n: c.n(), lambda_star: c.lambda_star().clone() }
    }
}

/// `conjugate(Λ★, sigma) = Aᵗ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BottWitness {
    pub bott: BottMatrix,
    pub sigma: Permutation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub input: MatrixInput,
    pub valid: bool,
    /// All principal minors of `-Λ★` equal one.
    pub bott: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bott_witness: Option<BottWitness>,
    pub bott_up_to_omniorientation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omniorientation_witness: Option<OmniorientedBott>,
    pub semifree_vectors: Vec<CircleVector>,
    /// Factorizations of `(E - A)/2` for the Bott form of the matrix: the
    /// literal one when `bott`, else the omniorientation witness.
    pub strict_factorization: bool,
    pub relaxed_factorization: bool,
    pub integer_factorization: bool,
    pub ring_iso_to_product: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub square_zero_basis: Option<Vec<Vec<i64>>>,
    pub signs: Vec<i64>,
    pub all_signs_positive: bool,
    pub graded_ranks: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bq_ordering_mod2: Option<Permutation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_us: Option<u64>,
}

impl CensusRecord {
    fn invalid(input: MatrixInput) -> Self {
        CensusRecord {
            input,
            valid: false,
            bott: false,
            bott_witness: None,
            bott_up_to_omniorientation: false,
            omniorientation_witness: None,
            semifree_vectors: Vec::new(),
            strict_factorization: false,
            relaxed_factorization: false,
            integer_factorization: false,
            ring_iso_to_product: false,
            square_zero_basis: None,
            signs: Vec::new(),
            all_signs_positive: false,
            graded_ranks: Vec::new(),
            bq_ordering_mod2: None,
            elapsed_us: None,
        }
    }

    /// The Bott matrix the factorization verdicts refer to.
    pub fn bott_form(&self) -> Option<&BottMatrix> {
        match (&self.bott_witness, &self.omniorientation_witness) {
            (Some(w), _) => Some(&w.bott),
            (None, Some(o)) => Some(&o.bott),
            _ => None,
        }
    }

    pub fn is_semifree(&self) -> bool {
        !self.semifree_vectors.is_empty()
    }
}

/// Classifies one input. Invalid `Λ★` gives a record with `valid: false`;
/// malformed Bott matrices are errors.
pub fn classify(input: &MatrixInput) -> Result<CensusRecord, CensusError> {
    let c = match input {
        MatrixInput::Bott { a, .. } => BottMatrix::new(a.clone())?.characteristic(),
        MatrixInput::Lambda { lambda_star, .. } => {
            if !is_valid_characteristic(lambda_star) {
                return Ok(CensusRecord::invalid(input.clone()));
            }
            CharMatrixCube::new(lambda_star.clone())?
        }
    };
    Ok(classify_valid(input.clone(), &c))
}

/// [`classify`] with `elapsed_us` filled in.
pub fn classify_timed(input: &MatrixInput) -> Result<CensusRecord, CensusError> {
    let start = Instant::now();
    let mut r = classify(input)?;
    r.elapsed_us = Some(start.elapsed().as_micros() as u64);
    Ok(r)
}

fn classify_valid(input: MatrixInput, c: &CharMatrixCube) -> CensusRecord {
    let n = c.n();
    let signs = c.fixed_point_signs();
    let bott_witness = match &input {
        MatrixInput::Bott { a, .. } => Some(BottWitness {
            bott: BottMatrix::new(a.clone()).expect("checked by the caller"),
            sigma: Permutation::identity(n),
        }),
        MatrixInput::Lambda { .. } => c.bott_matrix_from().ok().map(|(bott, sigma)| BottWitness { bott, sigma }),
    };
    let omni = c.bott_up_to_omniorientation();
    let mut r = CensusRecord::invalid(input);
    r.valid = true;
    r.bott = bott_witness.is_some();
    r.all_signs_positive = signs.iter().all(|&s| s == 1);
    r.signs = signs;
    r.bott_witness = bott_witness;
    r.bott_up_to_omniorientation = omni.is_some();
    r.omniorientation_witness = omni;
    r.semifree_vectors = enumerate_semifree_vectors(c);

    if let Some(a) = r.bott_form().cloned() {
        r.strict_factorization = factorize_bott(&a, StepCoefficients::Unit).is_some();
        r.relaxed_factorization = factorize_bott(&a, StepCoefficients::SignedUnit).is_some();
        r.integer_factorization = factorize_bott(&a, StepCoefficients::Integer).is_some();
        let iso = iso_to_product_test(&a);
        r.ring_iso_to_product = iso.iso;
        r.square_zero_basis = iso.basis;
        let ring = build_ring(&a, Coefficients::Integers);
        r.graded_ranks = ring.graded_ranks().to_vec();
        r.bq_ordering_mod2 = ring.bq_ordering_mod2();
    } else if let Ok(ring) = build_ring_from_lambda(c, Coefficients::Integers) {
        let basis = find_square_zero_basis(&ring, DEFAULT_SEARCH_BOUND);
        r.ring_iso_to_product = basis.is_some();
        r.square_zero_basis = basis.map(|b| b.vectors);
        r.graded_ranks = ring.graded_ranks().to_vec();
        r.bq_ordering_mod2 = ring.bq_ordering_mod2();
    }
    r
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Rebuilds the ring the record's ranks and BQ verdict came from.
fn record_ring(r: &CensusRecord, c: &CharMatrixCube) -> Option<GradedRing> {
    match r.bott_form() {
        Some(a) => Some(build_ring(a, Coefficients::Integers)),
        None => build_ring_from_lambda(c, Coefficients::Integers).ok(),
    }
}

fn input_lambda(input: &MatrixInput) -> Option<CharMatrixCube> {
    match input {
        MatrixInput::Bott { a, .. } => BottMatrix::new(a.clone()).ok().map(|b| b.characteristic()),
        MatrixInput::Lambda { lambda_star, .. } => CharMatrixCube::new(lambda_star.clone()).ok(),
    }
}

/// Replays every witness in the record and checks the invariants that must
/// hold for any valid matrix. Returns one message per failure.
pub fn check_record(r: &CensusRecord) -> Vec<String> {
    let mut bad = Vec::new();
    let Some(c) = input_lambda(&r.input) else {
        if r.valid {
            bad.push("record marked valid but the input is not characteristic".into());
        }
        return bad;
    };
    if !r.valid {
        bad.push("characteristic input marked invalid".into());
        return bad;
    }
    let n = c.n();
    if r.bott != r.all_signs_positive {
        bad.push("bott verdict disagrees with the fixed-point signs".into());
    }
    if r.bott && !r.bott_up_to_omniorientation {
        bad.push("Bott matrix not found up to omniorientation".into());
    }
    if r.is_semifree() && !r.bott_up_to_omniorientation {
        bad.push("semifree matrix is not equivalent to a Bott tower".into());
    }
    if r.strict_factorization && !r.relaxed_factorization || r.relaxed_factorization && !r.integer_factorization {
        bad.push("factorization verdicts are not nested".into());
    }
    if let Some(w) = &r.bott_witness {
        if !matches!(r.input, MatrixInput::Bott { .. })
            && c.lambda_star().conjugate(&w.sigma).ok() != Some(w.bott.matrix().transpose())
        {
            bad.push("Bott witness does not replay".into());
        }
    }
    if let Some(o) = &r.omniorientation_witness {
        if !o.verify(&c) {
            bad.push("omniorientation witness does not replay".into());
        }
    }
    if let Some(a) = r.bott_form() {
        for (flag, allowed) in [
            (r.strict_factorization, StepCoefficients::Unit),
            (r.relaxed_factorization, StepCoefficients::SignedUnit),
            (r.integer_factorization, StepCoefficients::Integer),
        ] {
            match factorize_bott(a, allowed) {
                Some(f) if flag => {
                    if Some(f.replay()) != half_difference(a) || Some(f.product()) != half_difference(a) {
                        bad.push(format!("{allowed:?} factorization does not replay"));
                    }
                }
                None if !flag => {}
                _ => bad.push(format!("{allowed:?} factorization verdict is not reproducible")),
            }
        }
    }
    for v in &r.semifree_vectors {
        if !crate::semifree::is_semifree(&c, v) {
            bad.push(format!("vector {:?} is not semifree", v.as_slice()));
        }
    }
    let ring = record_ring(r, &c);
    match (&ring, &r.square_zero_basis) {
        (Some(ring), Some(b)) if !verify_square_zero_basis(ring, b) => {
            bad.push("square-zero basis does not verify".into());
        }
        (_, None) if r.ring_iso_to_product => bad.push("product verdict without a basis".into()),
        _ => {}
    }
    let expected: Vec<usize> = (0..=n).map(|q| binomial(n, q)).collect();
    if r.graded_ranks != expected {
        bad.push(format!("graded ranks {:?}, expected {:?}", r.graded_ranks, expected));
    }
    match (&ring, &r.bq_ordering_mod2) {
        (_, None) => bad.push("no generator order makes the mod-2 ring a BQ-algebra".into()),
        (Some(ring), Some(sigma)) => {
            let ok = ring.mod2().and_then(|m| m.reorder(sigma)).is_ok_and(|m| m.is_bq_algebra_mod2());
            if !ok {
                bad.push("BQ ordering does not replay".into());
            }
        }
        (None, Some(_)) => bad.push("BQ ordering without a ring".into()),
    }
    bad
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusOptions {
    pub n: usize,
    pub entry_min: i64,
    pub entry_max: i64,
    pub jobs: usize,
}

impl CensusOptions {
    pub fn new(n: usize, entry_min: i64, entry_max: i64) -> Self {
        CensusOptions { n, entry_min, entry_max, jobs: 1 }
    }

    pub fn validate(&self) -> Result<(), CensusError> {
        if !(1..=4).contains(&self.n) {
            return Err(CensusError::Rank(self.n));
        }
        if self.entry_min > self.entry_max {
            return Err(CensusError::EmptyRange { lo: self.entry_min, hi: self.entry_max });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub n: usize,
    pub entry_min: i64,
    pub entry_max: i64,
    pub matrices: usize,
    pub bott: usize,
    pub bott_up_to_omniorientation: usize,
    pub semifree: usize,
    /// Semifree matrices that are Bott only after an omniorientation change.
    pub semifree_not_literally_bott: usize,
    pub strict_factorization: usize,
    pub relaxed_factorization: usize,
    pub integer_factorization: usize,
    pub ring_iso_to_product: usize,
    pub all_signs_positive: usize,
    pub bq_mod2: usize,
    pub violations: usize,
}

impl CensusSummary {
    fn add(&mut self, r: &CensusRecord, violations: usize) {
        let b = usize::from;
        self.matrices += 1;
        self.bott += b(r.bott);
        self.bott_up_to_omniorientation += b(r.bott_up_to_omniorientation);
        self.semifree += b(r.is_semifree());
        self.semifree_not_literally_bott += b(r.is_semifree() && !r.bott);
        self.strict_factorization += b(r.strict_factorization);
        self.relaxed_factorization += b(r.relaxed_factorization);
        self.integer_factorization += b(r.integer_factorization);
        self.ring_iso_to_product += b(r.ring_iso_to_product);
        self.all_signs_positive += b(r.all_signs_positive);
        self.bq_mod2 += b(r.bq_ordering_mod2.is_some());
        self.violations += violations;
    }
}

/// One census record together with its invariant failures.
#[derive(Debug, Clone)]
pub struct CheckedRecord {
    pub record: CensusRecord,
    pub violations: Vec<String>,
}

/// Classifies every valid `Λ★` with entries in the range, calling `sink` in
/// enumeration order. Work is split by first-row prefix across `jobs`
/// threads; the output does not depend on `jobs`.
pub fn run_census(opts: CensusOptions, mut sink: impl FnMut(&CheckedRecord)) -> Result<CensusSummary, CensusError> {
    opts.validate()?;
    let mut summary =
        CensusSummary { n: opts.n, entry_min: opts.entry_min, entry_max: opts.entry_max, ..Default::default() };
    let prefixes = CharMatrixEnumerator::prefixes(opts.entry_min, opts.entry_max, opts.n);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build().expect("thread pool");
    let batch = 4 * opts.jobs.max(1);
    for chunk in prefixes.chunks(batch) {
        let done: Vec<Vec<CheckedRecord>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|p| {
                    CharMatrixEnumerator::new(opts.n, opts.entry_min, opts.entry_max, p)
                        .map(|c| {
                            let record = classify_valid(MatrixInput::from(&c), &c);
                            let violations = check_record(&record);
                            CheckedRecord { record, violations }
                        })
                        .collect()
                })
                .collect()
        });
        for r in done.iter().flatten() {
            summary.add(&r.record, r.violations.len());
            sink(r);
        }
    }
    Ok(summary)
}

/// Collects a census in memory.
pub fn census(opts: CensusOptions) -> Result<(Vec<CheckedRecord>, CensusSummary), CensusError> {
    let mut out = Vec::new();
    let summary = run_census(opts, |r| out.push(r.clone()))?;
    Ok((out, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambda(rows: &[&[i64]]) -> MatrixInput {
        MatrixInput::Lambda {
            n: rows.len(),
            lambda_star: IntMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap(),
        }
    }

    #[test]
    fn parse_inputs() {
        let m = MatrixInput::parse(r#"{"n":2,"a":[[-1,3],[0,-1]]}"#).unwrap();
        assert!(matches!(m, MatrixInput::Bott { n: 2, .. }));
        let m = MatrixInput::parse(r#"{"n":1,"lambda_star":[[5]]}"#).unwrap();
        assert!(matches!(m, MatrixInput::Lambda { n: 1, .. }));
        assert!(matches!(MatrixInput::parse(r#"{"n":2,"a":[[-1]]}"#), Err(CensusError::SizeMismatch { .. })));
        assert!(matches!(MatrixInput::parse(r#"{"a":[[-1]]}"#), Err(CensusError::Shape)));
        assert!(matches!(MatrixInput::parse(r#"[1]"#), Err(CensusError::Shape)));
        assert!(MatrixInput::parse("{").is_err());
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"{"n":1,"lambda_star":[[5]]}"#);
    }

    #[test]
    fn not_a_bott_tower() {
        let r = classify(&lambda(&[&[-1, -2], &[-1, -1]])).unwrap();
        assert!(r.valid);
        assert!(!r.bott);
        assert!(!r.all_signs_positive);
        assert!(!r.bott_up_to_omniorientation);
        assert!(r.semifree_vectors.is_empty());
        assert_eq!(r.graded_ranks, vec![1, 2, 1]);
        assert!(check_record(&r).is_empty(), "{:?}", check_record(&r));
    }

    #[test]
    fn invalid_lambda() {
        let r = classify(&lambda(&[&[2]])).unwrap();
        assert!(!r.valid);
        assert!(check_record(&r).is_empty());
        let bad_bott = MatrixInput::parse(r#"{"n":2,"a":[[1,0],[0,-1]]}"#).unwrap();
        assert!(classify(&bad_bott).is_err());
    }

    #[test]
    fn hirzebruch_records() {
        for m in -4i64..=4 {
            let a = BottMatrix::hirzebruch(m);
            let r = classify(&MatrixInput::from(&a)).unwrap();
            assert!(r.bott && r.bott_up_to_omniorientation);
            assert_eq!(r.ring_iso_to_product, m % 2 == 0, "m = {m}");
            assert_eq!(r.is_semifree(), m == 0 || m.abs() == 2, "m = {m}");
            assert!(check_record(&r).is_empty(), "m = {m}: {:?}", check_record(&r));
        }
    }

    #[test]
    fn lambda_bott_uses_witness() {
        // Aᵗ conjugated by the reversal
        let r = classify(&lambda(&[&[-1, -2], &[0, -1]])).unwrap();
        assert!(r.bott);
        let w = r.bott_witness.as_ref().unwrap();
        assert_eq!(w.bott, BottMatrix::hirzebruch(-2));
        assert!(r.strict_factorization);
        assert!(check_record(&r).is_empty());
    }

    #[test]
    fn omniorientation_only() {
        let r = classify(&lambda(&[&[1, 0], &[0, -1]])).unwrap();
        assert!(!r.bott && r.bott_up_to_omniorientation);
        assert!(r.is_semifree());
        assert!(r.ring_iso_to_product);
        assert!(check_record(&r).is_empty());
    }

    #[test]
    fn tampered_records_are_caught() {
        let mut r = classify(&MatrixInput::from(&BottMatrix::hirzebruch(2))).unwrap();
        r.graded_ranks = vec![1, 1, 1];
        assert!(!check_record(&r).is_empty());
        let mut r = classify(&MatrixInput::from(&BottMatrix::hirzebruch(2))).unwrap();
        r.square_zero_basis = Some(vec![vec![1, 0], vec![0, 1]]);
        assert!(!check_record(&r).is_empty());
        let mut r = classify(&MatrixInput::from(&BottMatrix::hirzebruch(3))).unwrap();
        r.strict_factorization = true;
        assert!(!check_record(&r).is_empty());
    }

    #[test]
    fn census_is_independent_of_jobs() {
        let run = |jobs| {
            let (recs, s) = census(CensusOptions { jobs, ..CensusOptions::new(2, -2, 2) }).unwrap();
            (recs.into_iter().map(|r| serde_json::to_string(&r.record).unwrap()).collect::<Vec<_>>(), s)
        };
        let (a, sa) = run(1);
        let (b, sb) = run(3);
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert_eq!(sa.violations, 0);
        let direct = crate::quasitoric::enumerate_char_matrices(2, 2).count();
        assert_eq!(sa.matrices, direct);
    }

    #[test]
    fn census_options_checked() {
        assert!(census(CensusOptions::new(0, -1, 1)).is_err());
        assert!(census(CensusOptions::new(2, 1, -1)).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!((0..=4).map(|k| binomial(4, k)).collect::<Vec<_>>(), vec![1, 4, 6, 4, 1]);
    }
}
