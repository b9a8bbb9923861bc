//! The acceptance suite: ten exhaustive or fixed-point checks over the whole
//! crate, each reported as one pass/fail line.

use std::fmt;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::census::{run_census, CensusOptions, CensusSummary, CheckedRecord};
use crate::cohomology::{build_ring, build_ring_from_lambda, iso_to_product_test, verify_square_zero_basis};
use crate::fan2d::{fan_census, Fan2D, FanCensusSummary, FanRecord, SEMIFREE_TAILS};
use crate::intmat::{minor_normal_form, verify_normal_form, Coefficients, IntMatrix, MinorNormalForm, Permutation};
use crate::quasitoric::{enumerate_char_matrices, BottMatrix, CharMatrixCube, CubeVertex};
use crate::semifree::{
    enumerate_semifree_vectors, factorize_bott, half_difference, semifree_by_factorization, StepCoefficients,
};
use crate::simplicial::SimplicialComplex;

const SEED: u64 = 0x5eed_b077;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>2} {}: {} ({} ms)", self.id, self.name, self.detail, self.elapsed_ms)
    }
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn(&Suite) -> (bool, String),
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "hirzebruch parity", budget: Duration::from_secs(1), run: hirzebruch_parity },
    Criterion {
        id: 2,
        name: "factorization fixed points",
        budget: Duration::from_secs(60),
        run: factorization_examples,
    },
    Criterion {
        id: 3,
        name: "semifree oracle vs strict factorization",
        budget: Duration::from_secs(10),
        run: oracle_vs_factorization,
    },
    Criterion { id: 4, name: "semifree implies Bott", budget: Duration::from_secs(300), run: semifree_implies_bott },
    Criterion { id: 5, name: "fixed-point signs", budget: Duration::from_secs(300), run: fixed_point_signs },
    Criterion { id: 6, name: "minor trichotomy", budget: Duration::from_secs(60), run: minor_trichotomy },
    Criterion { id: 7, name: "graded ranks", budget: Duration::from_secs(300), run: graded_ranks },
    Criterion { id: 8, name: "two-dimensional fans", budget: Duration::from_secs(60), run: fans },
    Criterion { id: 9, name: "crosscomplex recognition", budget: Duration::from_secs(60), run: crosscomplexes },
    Criterion { id: 10, name: "witness soundness", budget: Duration::from_secs(300), run: witnesses },
];

/// Shared censuses, computed on first use.
pub struct Suite {
    jobs: usize,
    cube_census: OnceLock<Vec<(CensusSummary, Vec<CheckedRecord>)>>,
    fan_census: OnceLock<(Vec<FanRecord>, FanCensusSummary)>,
}

impl Suite {
    pub fn new(jobs: usize) -> Self {
        Suite { jobs: jobs.max(1), cube_census: OnceLock::new(), fan_census: OnceLock::new() }
    }

    /// All valid `Λ★` with entries in `[-3, 3]`, `n ≤ 3`.
    fn cube_census(&self) -> &[(CensusSummary, Vec<CheckedRecord>)] {
        self.cube_census.get_or_init(|| {
            (1..=3)
                .map(|n| {
                    let mut records = Vec::new();
                    let opts = CensusOptions { jobs: self.jobs, ..CensusOptions::new(n, -3, 3) };
                    let summary = run_census(opts, |r| records.push(r.clone())).expect("census options are valid");
                    (summary, records)
                })
                .collect()
        })
    }

    fn fan_census(&self) -> &(Vec<FanRecord>, FanCensusSummary) {
        self.fan_census.get_or_init(|| fan_census(10, 6))
    }

    pub fn run(&self, id: u8) -> Option<CriterionReport> {
        let c = CRITERIA.iter().find(|c| c.id == id)?;
        let start = Instant::now();
        let (ok, mut detail) = (c.run)(self);
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        if !in_budget {
            detail.push_str(&format!("; over the {} s budget", c.budget.as_secs()));
        }
        Some(CriterionReport { id, name: c.name, passed: ok && in_budget, detail, elapsed_ms: elapsed.as_millis() })
    }

    pub fn run_all(&self) -> Vec<CriterionReport> {
        CRITERIA.iter().map(|c| self.run(c.id).expect("listed criterion")).collect()
    }
}

pub fn criterion_ids() -> impl Iterator<Item = u8> {
    CRITERIA.iter().map(|c| c.id)
}

/// Runs every criterion with one worker per available core.
pub fn run_all() -> Vec<CriterionReport> {
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    Suite::new(jobs).run_all()
}

fn im(rows: &[&[i64]]) -> IntMatrix {
    IntMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("literal matrix")
}

fn bott(rows: &[&[i64]]) -> BottMatrix {
    BottMatrix::new(im(rows)).expect("literal Bott matrix")
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn binomial_row(n: usize) -> Vec<usize> {
    (0..=n).map(|q| binomial(n, q)).collect()
}

fn hirzebruch_range() -> impl Iterator<Item = BottMatrix> {
    (-10..=10).map(BottMatrix::hirzebruch)
}

fn zero_minus_two(max_n: usize) -> Vec<BottMatrix> {
    (1..=max_n).flat_map(|n| BottMatrix::all_with_entries(n, &[0, -2])).collect()
}

fn random_bott(count: usize) -> Vec<BottMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=5);
            BottMatrix::from_upper(n, |_, _| rng.gen_range(-4..=4))
        })
        .collect()
}

fn factorization_pair() -> (BottMatrix, BottMatrix) {
    (bott(&[&[-1, -2, -2], &[0, -1, 0], &[0, 0, -1]]), bott(&[&[-1, 0, -2], &[0, -1, -2], &[0, 0, -1]]))
}

fn hirzebruch_parity(_: &Suite) -> (bool, String) {
    let wrong: Vec<i64> =
        (-10..=10).filter(|&m| iso_to_product_test(&BottMatrix::hirzebruch(m)).iso != (m % 2 == 0)).collect();
    (wrong.is_empty(), format!("21 twists checked, mismatches at {wrong:?}"))
}

fn factorization_examples(_: &Suite) -> (bool, String) {
    let (good, bad) = factorization_pair();
    let factors = [
        im(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
        im(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]),
        im(&[&[1, 0, 1], &[0, 1, 0], &[0, 0, 1]]),
    ];
    let d = im(&[&[1, 1, 1], &[0, 1, 0], &[0, 0, 1]]);
    let factors_ok = match factorize_bott(&good, StepCoefficients::Unit) {
        Some(f) => {
            let ours: Vec<IntMatrix> = f
                .steps
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut c = IntMatrix::identity(3);
                    if let Some((i, x)) = *s {
                        c.set(i, k, x);
                    }
                    c
                })
                .collect();
            ours == factors && f.product() == d && half_difference(&good) == Some(d.clone())
        }
        None => false,
    };
    let absent = !semifree_by_factorization(&bad);
    let others = BottMatrix::all_with_entries(3, &[0, -2]);
    let occurring = others.iter().filter(|a| semifree_by_factorization(a)).count();
    let by_weights = others.iter().filter(|a| !enumerate_semifree_vectors(&a.characteristic()).is_empty()).count();
    let ok = factors_ok && absent && occurring == by_weights;
    (
        ok,
        format!(
            "expected factors: {factors_ok}; second matrix has no factorization: {absent}; {occurring} of 8 matrices with entries 0/-2 factor, {by_weights} semifree by weights"
        ),
    )
}

fn oracle_vs_factorization(_: &Suite) -> (bool, String) {
    let mut counts = Vec::new();
    let mut mismatches = Vec::new();
    for n in 1..=4 {
        let all = BottMatrix::all_with_entries(n, &[0, -2]);
        counts.push(all.len());
        for a in all {
            let oracle = !enumerate_semifree_vectors(&a.characteristic()).is_empty();
            if oracle != semifree_by_factorization(&a) {
                mismatches.push(a.matrix().rows());
            }
        }
    }
    let ok = mismatches.is_empty() && counts == [1, 2, 8, 64];
    (ok, format!("matrices per n {counts:?}, mismatches {}", mismatches.len()))
}

fn semifree_implies_bott(s: &Suite) -> (bool, String) {
    let mut semifree = 0;
    let mut literal_failures = 0;
    let mut failures = 0;
    let mut total = 0;
    for (_, records) in s.cube_census() {
        for r in records.iter().map(|r| &r.record) {
            total += 1;
            if r.is_semifree() {
                semifree += 1;
                literal_failures += usize::from(!r.bott);
                failures += usize::from(!r.bott_up_to_omniorientation);
            }
        }
    }
    (
        failures == 0 && semifree > 0,
        format!(
            "{total} matrices, {semifree} semifree, {failures} not equivalent to a Bott tower; {literal_failures} need an omniorientation change"
        ),
    )
}

/// Sign of a fixed point from the refined matrix `(E | Λ★)` and inward
/// normals `a_i = e_i`, `a_{n+i} = -e_i`.
fn sign_oracle(c: &CharMatrixCube, v: CubeVertex) -> i64 {
    let n = c.n();
    let l = c.lambda_star();
    let lam = IntMatrix::from_fn(n, |r, i| if v.eps(i) { l.get(r, i) } else { i64::from(r == i) });
    let normals = IntMatrix::from_fn(n, |r, i| {
        if r != i {
            0
        } else if v.eps(i) {
            -1
        } else {
            1
        }
    });
    (lam.det() * normals.det()).signum() as i64
}

/// Some permutation conjugates `Λ★` to a lower triangular matrix with `-1`
/// on the diagonal.
fn is_bott_by_search(c: &CharMatrixCube) -> bool {
    Permutation::all(c.n()).any(|sigma| {
        let m = c.lambda_star().conjugate(&sigma).expect("sizes match");
        m.is_lower_triangular() && (0..c.n()).all(|i| m.get(i, i) == -1)
    })
}

fn fixed_point_signs(_: &Suite) -> (bool, String) {
    let mut bad_bott = 0;
    let mut disagree = 0;
    for a in random_bott(1000) {
        let c = a.characteristic();
        for v in CubeVertex::all(c.n()) {
            let s = sign_oracle(&c, v);
            bad_bott += usize::from(s != 1);
            disagree += usize::from(s != c.sign_of_fixed_point(v));
        }
    }
    let mut non_bott = 0;
    let mut all_positive = 0;
    for c in enumerate_char_matrices(2, 4) {
        let signs: Vec<i64> = CubeVertex::all(2).map(|v| sign_oracle(&c, v)).collect();
        disagree += usize::from(signs != c.fixed_point_signs());
        if !is_bott_by_search(&c) {
            non_bott += 1;
            all_positive += usize::from(signs.iter().all(|&s| s == 1));
        }
    }
    (
        bad_bott == 0 && all_positive == 0 && disagree == 0 && non_bott > 0,
        format!(
            "1000 random Bott matrices: {bad_bott} negative signs; {non_bott} non-Bott matrices at n = 2: {all_positive} with all signs positive; {disagree} disagreements with the minor formula"
        ),
    )
}

/// 0/±1 matrices of size 3 with unit diagonal and all proper principal
/// minors equal to one.
fn trichotomy_inputs() -> Vec<IntMatrix> {
    let offdiag: Vec<(usize, usize)> =
        (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    (0..3usize.pow(6))
        .map(|code| {
            let mut m = IntMatrix::identity(3);
            for (k, &(i, j)) in offdiag.iter().enumerate() {
                m.set(i, j, (code / 3usize.pow(k as u32) % 3) as i64 - 1);
            }
            m
        })
        .filter(|m| (1..7u32).all(|mask| m.principal_minor_mask(mask) == 1))
        .collect()
}

fn minor_trichotomy(_: &Suite) -> (bool, String) {
    let inputs = trichotomy_inputs();
    let (mut upper, mut cyclic, mut wrong) = (0, 0, 0);
    for m in &inputs {
        let form = minor_normal_form(m);
        let expected_upper = m.det() == 1;
        match &form {
            MinorNormalForm::UpperTriangular { .. } if expected_upper => upper += 1,
            MinorNormalForm::Cyclic { b, .. } if !expected_upper && b.iter().all(|&x| x != 0) => cyclic += 1,
            _ => wrong += 1,
        }
        if !verify_normal_form(m, &form, Coefficients::Integers) {
            wrong += 1;
        }
    }
    (
        wrong == 0 && cyclic > 0 && upper > 0,
        format!("{} matrices: {upper} triangular, {cyclic} cyclic, {wrong} wrong", inputs.len()),
    )
}

fn graded_ranks(s: &Suite) -> (bool, String) {
    let mut rings = 0;
    let mut wrong = 0;
    let mut check = |n: usize, ranks: &[usize]| {
        rings += 1;
        wrong += usize::from(ranks != binomial_row(n).as_slice());
    };
    let (good, bad) = factorization_pair();
    let botts = hirzebruch_range().chain([good, bad]).chain(zero_minus_two(4)).chain(random_bott(1000));
    for a in botts {
        check(a.n(), build_ring(&a, Coefficients::Integers).graded_ranks());
        check(a.n(), build_ring(&a, Coefficients::Mod2).graded_ranks());
    }
    for (_, records) in s.cube_census() {
        for r in records {
            check(r.record.input.n(), &r.record.graded_ranks);
        }
    }
    for c in enumerate_char_matrices(2, 4) {
        match build_ring_from_lambda(&c, Coefficients::Integers) {
            Ok(ring) => check(2, ring.graded_ranks()),
            Err(_) => check(2, &[]),
        }
    }
    (wrong == 0, format!("{rings} rings, {wrong} with ranks other than binomial coefficients"))
}

fn fans(s: &Suite) -> (bool, String) {
    let (records, summary) = s.fan_census();
    let not_four = records.iter().filter(|r| !r.semifree.is_empty() && r.rays.len() != 4).count();
    let forms = [([[-1, 0], [0, -1]], im(&[&[-1, 0], &[0, -1]])), ([[-1, 0], [-2, -1]], im(&[&[-1, -2], &[0, -1]]))];
    let forms_ok = forms.iter().all(|(tail, matrix)| {
        summary.normal_forms_seen.contains(tail)
            && Fan2D::new(vec![[1, 0], [0, 1], tail[0], tail[1]])
                .reduced_matrix()
                .is_some_and(|c| c.lambda_star() == matrix)
    });
    let tails_ok = summary.normal_forms_seen.iter().all(|t| SEMIFREE_TAILS.contains(t));
    (
        summary.violations == 0 && not_four == 0 && forms_ok && tails_ok && summary.semifree_fans > 0,
        format!(
            "{} fans, {} semifree in {} classes; {} violate the four-ray classification; both normal forms occur: {forms_ok}",
            summary.fans, summary.semifree_fans, summary.semifree_orbits, summary.violations
        ),
    )
}

fn test_complexes() -> Vec<SimplicialComplex> {
    let mut out = Vec::new();
    for k in 0..=4 {
        out.push(SimplicialComplex::crosscomplex(k));
    }
    for m in 2..=10 {
        out.push(SimplicialComplex::simplex_boundary(m));
    }
    for a in 2..=4 {
        for k in 0..=2 {
            let j = SimplicialComplex::crosscomplex(k).join(&SimplicialComplex::simplex_boundary(a));
            if j.vertex_count() <= 10 {
                out.push(j);
            }
        }
    }
    for m in 3..=10 {
        out.push(crate::simplicial::SimplePolytopeCombinatorics::polygon(m).dual_complex());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    // relabelled crosscomplexes and crosscomplexes missing one facet
    for k in 1..=4 {
        let c = SimplicialComplex::crosscomplex(k);
        let v = c.vertex_count();
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..v).collect();
            for i in (1..v).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let facets: Vec<Vec<usize>> = c.facets().iter().map(|f| f.iter().map(|&x| perm[x]).collect()).collect();
            out.push(SimplicialComplex::new(v, facets.clone()).expect("relabelled complex"));
            let drop = rng.gen_range(0..facets.len());
            let fewer: Vec<Vec<usize>> =
                facets.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, f)| f.clone()).collect();
            out.push(SimplicialComplex::new(v, fewer).expect("every vertex still used"));
        }
    }
    while out.len() < 600 {
        let v = rng.gen_range(2..=10);
        let dim = rng.gen_range(0..v.min(4));
        let count = rng.gen_range(1..=16);
        let faces: Vec<Vec<usize>> = (0..count)
            .map(|_| {
                let mut f: Vec<usize> = (0..v).collect();
                for i in (1..v).rev() {
                    f.swap(i, rng.gen_range(0..=i));
                }
                f.truncate(dim + 1);
                f
            })
            .collect();
        if let Ok(k) = SimplicialComplex::new(v, faces) {
            out.push(k);
        }
    }
    out
}

fn crosscomplexes(_: &Suite) -> (bool, String) {
    let octahedron = SimplicialComplex::crosscomplex(2);
    let simplex = SimplicialComplex::simplex_boundary(5);
    let fixed = octahedron.is_crosscomplex()
        && octahedron.is_crosscomplex_recursive()
        && !simplex.is_crosscomplex()
        && !simplex.is_crosscomplex_recursive();
    let complexes = test_complexes();
    let disagree = complexes.iter().filter(|k| k.is_crosscomplex() != k.is_crosscomplex_recursive()).count();
    let positive = complexes.iter().filter(|k| k.is_crosscomplex()).count();
    (
        fixed && disagree == 0,
        format!(
            "octahedron and simplex boundary recognized: {fixed}; {} complexes, {positive} crosscomplexes, {disagree} disagreements",
            complexes.len()
        ),
    )
}

fn witnesses(s: &Suite) -> (bool, String) {
    let mut checked = 0usize;
    let mut failed = Vec::new();
    for (summary, records) in s.cube_census() {
        checked += records.len();
        for r in records.iter().filter(|r| !r.violations.is_empty()) {
            failed.push(format!("n = {}: {:?}", summary.n, r.violations));
        }
    }
    let (good, bad) = factorization_pair();
    let botts: Vec<BottMatrix> =
        hirzebruch_range().chain([good, bad]).chain(zero_minus_two(4)).chain(random_bott(1000)).collect();
    for a in &botts {
        let d = half_difference(a);
        for allowed in [StepCoefficients::Unit, StepCoefficients::SignedUnit, StepCoefficients::Integer] {
            if let Some(f) = factorize_bott(a, allowed) {
                checked += 1;
                if Some(f.replay()) != d || Some(f.product()) != d {
                    failed.push(format!("{allowed:?} factorization of {:?}", a.matrix().rows()));
                }
            }
        }
        let iso = iso_to_product_test(a);
        if let Some(basis) = &iso.basis {
            checked += 1;
            if !verify_square_zero_basis(&build_ring(a, Coefficients::Integers), basis) {
                failed.push(format!("square-zero basis of {:?}", a.matrix().rows()));
            }
        }
        if let Some(sigma) = build_ring(a, Coefficients::Mod2).bq_ordering_mod2() {
            checked += 1;
            let ring = build_ring(a, Coefficients::Mod2).reorder(&sigma);
            if !ring.is_ok_and(|r| r.is_bq_algebra_mod2()) {
                failed.push(format!("BQ ordering of {:?}", a.matrix().rows()));
            }
        }
    }
    for c in enumerate_char_matrices(2, 4) {
        if let Ok((a, sigma)) = c.bott_matrix_from() {
            checked += 1;
            if c.lambda_star().conjugate(&sigma).ok() != Some(a.matrix().transpose()) {
                failed.push(format!("Bott witness of {:?}", c.lambda_star().rows()));
            }
        }
        if let Some(o) = c.bott_up_to_omniorientation() {
            checked += 1;
            if !o.verify(&c) {
                failed.push(format!("omniorientation witness of {:?}", c.lambda_star().rows()));
            }
        }
    }
    for m in trichotomy_inputs() {
        checked += 1;
        if !verify_normal_form(&m, &minor_normal_form(&m), Coefficients::Integers) {
            failed.push(format!("normal form of {:?}", m.rows()));
        }
    }
    let (records, _) = s.fan_census();
    for r in records.iter().filter(|r| !r.semifree.is_empty()) {
        let f = Fan2D::new(r.rays.clone());
        for &nu in &r.semifree {
            checked += 1;
            let ok = f.normalized_at(nu).is_ok_and(|g| {
                g.rays[..2] == [[1, 0], [0, 1]] && g.is_semifree([1, 1]) && g.canonical_form() == f.canonical_form()
            });
            if !ok {
                failed.push(format!("normalization of {:?} at {nu:?}", r.rays));
            }
        }
    }
    let shown: Vec<&String> = failed.iter().take(3).collect();
    (failed.is_empty(), format!("{checked} witnesses replayed, {} failures {shown:?}", failed.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_oracle_matches_minors_at_small_n() {
        for c in enumerate_char_matrices(3, 1) {
            for v in CubeVertex::all(3) {
                assert_eq!(sign_oracle(&c, v), c.sign_of_fixed_point(v));
            }
        }
    }

    #[test]
    fn bott_search_matches_principal_minors() {
        for c in enumerate_char_matrices(2, 3) {
            assert_eq!(is_bott_by_search(&c), c.is_bott_tower(), "{:?}", c.lambda_star());
        }
    }

    #[test]
    fn trichotomy_inputs_are_filtered() {
        let inputs = trichotomy_inputs();
        assert!(inputs.iter().all(|m| (0..3).all(|i| m.get(i, i) == 1)));
        assert!(inputs.contains(&IntMatrix::identity(3)));
        assert!(inputs.contains(&im(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]])));
    }

    #[test]
    fn random_bott_is_deterministic() {
        assert_eq!(random_bott(20), random_bott(20));
        assert!(random_bott(200).iter().any(|a| a.n() == 5));
    }

    #[test]
    fn test_complexes_stay_small() {
        assert!(test_complexes().iter().all(|k| k.vertex_count() <= 10));
    }

    #[test]
    fn report_line() {
        let r = CriterionReport { id: 3, name: "x", passed: false, detail: "d".into(), elapsed_ms: 5 };
        assert_eq!(r.to_string(), "[FAIL]  3 x: d (5 ms)");
    }

    #[test]
    fn unknown_criterion() {
        assert!(Suite::new(1).run(11).is_none());
        assert_eq!(criterion_ids().count(), 10);
    }
}
