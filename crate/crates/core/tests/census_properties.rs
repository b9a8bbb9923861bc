use cubetoric::census::{census, check_record, classify, CensusOptions, MatrixInput};
use cubetoric::intmat::IntMatrix;
use cubetoric::quasitoric::{enumerate_char_matrices, BottMatrix, CharMatrixCube};
use proptest::prelude::*;

fn bott_strategy() -> impl Strategy<Value = BottMatrix> {
    (1usize..=4).prop_flat_map(|n| {
        proptest::collection::vec(-3i64..=3, n * (n - 1) / 2).prop_map(move |vals| {
            let mut it = vals.into_iter();
            BottMatrix::from_upper(n, |_, _| it.next().expect("one value per entry"))
        })
    })
}

fn flip_columns(c: &CharMatrixCube, mask: u32) -> CharMatrixCube {
    let l = c.lambda_star();
    let m = IntMatrix::from_fn(c.n(), |i, j| if mask >> j & 1 == 1 { -l.get(i, j) } else { l.get(i, j) });
    CharMatrixCube::new(m).expect("column flips keep every minor a unit")
}

proptest! {
    #[test]
    fn bott_and_transpose_agree(a in bott_strategy()) {
        let from_bott = classify(&MatrixInput::from(&a)).unwrap();
        let from_lambda = classify(&MatrixInput::from(&a.characteristic())).unwrap();
        prop_assert!(from_bott.bott && from_lambda.bott);
        prop_assert_eq!(&from_bott.semifree_vectors, &from_lambda.semifree_vectors);
        prop_assert_eq!(from_bott.ring_iso_to_product, from_lambda.ring_iso_to_product);
        prop_assert_eq!(from_bott.strict_factorization, from_lambda.strict_factorization);
        prop_assert_eq!(&from_bott.graded_ranks, &from_lambda.graded_ranks);
        prop_assert!(check_record(&from_bott).is_empty());
        prop_assert!(check_record(&from_lambda).is_empty());
    }

    #[test]
    fn omniorientation_changes_keep_verdicts(a in bott_strategy(), mask in 0u32..16) {
        let c = a.characteristic();
        let mask = mask & ((1 << c.n()) - 1);
        let flipped = flip_columns(&c, mask);
        let r = classify(&MatrixInput::from(&flipped)).unwrap();
        let base = classify(&MatrixInput::from(&c)).unwrap();
        prop_assert!(r.bott_up_to_omniorientation);
        prop_assert_eq!(r.is_semifree(), base.is_semifree());
        prop_assert_eq!(r.ring_iso_to_product, base.ring_iso_to_product);
        prop_assert_eq!(r.bott, mask == 0);
        prop_assert!(check_record(&r).is_empty(), "{:?}", check_record(&r));
    }

    #[test]
    fn records_round_trip(a in bott_strategy()) {
        let r = classify(&MatrixInput::from(&a.characteristic())).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: cubetoric::census::CensusRecord = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, r);
    }
}

#[test]
fn summary_counts_match_records() {
    let (records, s) = census(CensusOptions::new(2, -3, 3)).unwrap();
    assert_eq!(s.matrices, records.len());
    assert_eq!(s.matrices, enumerate_char_matrices(2, 3).count());
    let count = |f: &dyn Fn(&cubetoric::census::CensusRecord) -> bool| records.iter().filter(|r| f(&r.record)).count();
    assert_eq!(s.bott, count(&|r| r.bott));
    assert_eq!(s.semifree, count(&|r| r.is_semifree()));
    assert_eq!(s.ring_iso_to_product, count(&|r| r.ring_iso_to_product));
    assert_eq!(s.bq_mod2, s.matrices);
    assert_eq!(s.violations, 0);
    assert!(s.bott < s.bott_up_to_omniorientation);
    assert!(s.strict_factorization <= s.relaxed_factorization);
    assert!(s.relaxed_factorization <= s.integer_factorization);
}

#[test]
fn census_streams_in_enumeration_order() {
    let (records, _) = census(CensusOptions { jobs: 2, ..CensusOptions::new(2, -1, 2) }).unwrap();
    let direct: Vec<MatrixInput> =
        cubetoric::quasitoric::CharMatrixEnumerator::new(2, -1, 2, &[]).map(|c| MatrixInput::from(&c)).collect();
    let ours: Vec<MatrixInput> = records.into_iter().map(|r| r.record.input).collect();
    assert_eq!(ours, direct);
}
