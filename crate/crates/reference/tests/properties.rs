//! Property tests for the library's invariants.

use efsvm::bagging::{bootstrap_indices, majority_vote};
use efsvm::data::{split_indices, stratified_split, DiscretizationMap, SplitSpec};
use efsvm::filters::{BinnedData, Column, SubsetEvaluation, SubsetMethod};
use efsvm::report::{ConfusionMatrix, Partition};
use efsvm::selection::{aggregate, AggregationMode, FeatureSelection, SearchKind, SelectionDetail, SelectorCode, SelectorId};
use efsvm::svm::{kernel_eval, read_model, smo_train, train_multiclass, write_model, KernelSpec, SvmConfig};
use efsvm_reference as oracle;
use proptest::prelude::*;

fn subset_selection(code: SelectorCode, selected: Vec<usize>) -> FeatureSelection {
    FeatureSelection {
        id: SelectorId::new(code, SearchKind::Genetic).unwrap(),
        detail: SelectionDetail::Subset(SubsetEvaluation {
            method: SubsetMethod::Cfs,
            subset: selected.clone(),
            value: 0.0,
        }),
        selected,
        evaluations: 0,
    }
}

fn feature_set(n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..n, 1..=n).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_uncertainty_is_symmetric_and_bounded(seed in 0u64..10_000, rows in 6usize..30) {
        let ds = oracle::small_dataset(seed, rows, 3, 3);
        let dmap = DiscretizationMap::fit(&ds).unwrap();
        let binned = BinnedData::new(&ds, &dmap).unwrap();
        let cols = [Column::Feature(0), Column::Feature(1), Column::Feature(2), Column::Class];
        for &a in &cols {
            for &b in &cols {
                let ab = binned.symmetric_uncertainty(a, b).unwrap();
                let ba = binned.symmetric_uncertainty(b, a).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-12);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
            }
        }
    }

    #[test]
    fn information_gain_is_non_negative(seed in 0u64..10_000, rows in 6usize..40) {
        let ds = oracle::small_dataset(seed, rows, 4, 2);
        let dmap = DiscretizationMap::fit(&ds).unwrap();
        for f in 0..ds.n_features() {
            prop_assert!(efsvm::filters::info_gain(&ds, f, &dmap).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn confusion_matrix_is_invariant_under_row_permutation(
        pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..60),
        seed in 0u64..1000,
    ) {
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let (d, a): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let order = bootstrap_indices(pairs.len(), seed);
        let mut perm: Vec<usize> = (0..pairs.len()).collect();
        perm.sort_by_key(|&i| (order[i], i));
        let dp: Vec<usize> = perm.iter().map(|&i| d[i]).collect();
        let ap: Vec<usize> = perm.iter().map(|&i| a[i]).collect();
        let m1 = ConfusionMatrix::from_predictions(labels.clone(), &d, &a, Partition::Test).unwrap();
        let m2 = ConfusionMatrix::from_predictions(labels, &dp, &ap, Partition::Test).unwrap();
        prop_assert_eq!(&m1.counts, &m2.counts);
        prop_assert_eq!(m1.total(), pairs.len());
    }

    #[test]
    fn majority_vote_ignores_member_order(
        preds in proptest::collection::vec(0usize..3, 1..12),
        seed in 0u64..1000,
    ) {
        let priors = [0.5, 0.3, 0.2];
        let mut shuffled = preds.clone();
        let keys = bootstrap_indices(preds.len(), seed);
        let mut idx: Vec<usize> = (0..preds.len()).collect();
        idx.sort_by_key(|&i| (keys[i], i));
        for (slot, &i) in idx.iter().enumerate() {
            shuffled[slot] = preds[i];
        }
        let a = majority_vote(&preds, &priors, None).unwrap();
        let b = majority_vote(&shuffled, &priors, None).unwrap();
        prop_assert_eq!(a, b);
        let top = (0..3).map(|c| preds.iter().filter(|&&p| p == c).count()).max().unwrap();
        prop_assert_eq!(preds.iter().filter(|&&p| p == a).count(), top);
    }

    #[test]
    fn union_and_intersection_follow_set_laws(a in feature_set(10), b in feature_set(10)) {
        let sa = subset_selection(SelectorCode::Fs1, a.clone());
        let sb = subset_selection(SelectorCode::Fs2, b.clone());
        let union = aggregate(&[sa.clone(), sb.clone()], AggregationMode::Union, 10).unwrap();
        let swapped = aggregate(&[sb.clone(), sa.clone()], AggregationMode::Union, 10).unwrap();
        prop_assert_eq!(&union.result, &swapped.result);
        for f in 0..10 {
            prop_assert_eq!(union.result.contains(&f), a.contains(&f) || b.contains(&f));
        }
        match aggregate(&[sa, sb], AggregationMode::Intersection, 10) {
            Ok(inter) => {
                for f in 0..10 {
                    prop_assert_eq!(inter.result.contains(&f), a.contains(&f) && b.contains(&f));
                }
            }
            Err(e) => {
                prop_assert!(matches!(e, efsvm::Error::EmptyIntersection));
                prop_assert!(a.iter().all(|f| !b.contains(f)));
            }
        }
    }

    #[test]
    fn stratified_split_sizes_follow_the_floor_rule(seed in 0u64..10_000, rows in 12usize..80, fraction in 0.2f64..0.8) {
        let ds = oracle::small_dataset(seed, rows, 2, 3);
        let spec = SplitSpec { train_fraction: fraction, seed, stratified: true };
        let counts = ds.class_counts();
        if counts.iter().any(|&n| n > 0 && ((fraction * n as f64).floor() as usize == 0 || (fraction * n as f64).floor() as usize == n)) {
            prop_assert!(split_indices(&ds, &spec).is_err());
        } else {
            let (train, test) = stratified_split(&ds, &spec).unwrap();
            prop_assert_eq!(train.n_rows() + test.n_rows(), ds.n_rows());
            for (c, &n) in counts.iter().enumerate() {
                prop_assert_eq!(train.class_counts()[c], (fraction * n as f64).floor() as usize);
            }
            let (again, _) = stratified_split(&ds, &spec).unwrap();
            prop_assert_eq!(train.rows(), again.rows());
        }
    }

    #[test]
    fn kernel_matches_closed_form(
        u in proptest::collection::vec(-3.0f64..3.0, 1..8),
        shift in -1.0f64..1.0,
        degree in 1u32..8,
        coef0 in 0.0f64..2.0,
    ) {
        let v: Vec<f64> = u.iter().map(|x| x * 0.5 + shift).collect();
        let got = kernel_eval(&u, &v, &KernelSpec::polynomial(degree, coef0)).unwrap();
        let want = oracle::poly(&u, &v, degree, coef0);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn trained_machines_satisfy_kkt(seed in 0u64..10_000, n in 4usize..24, c_exp in -1i32..3, degree in 1u32..4) {
        let mut r = oracle::rng(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![oracle::normal(&mut r), oracle::normal(&mut r)]).collect();
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c = 10f64.powi(c_exp);
        let cfg = SvmConfig::new(c, degree);
        let m = smo_train(&x, &y, &cfg).unwrap();
        prop_assert!(m.converged);
        let sum: f64 = m.alphas.iter().zip(&m.labels).map(|(a, y)| a * y).sum();
        prop_assert!(sum.abs() <= 1e-6 * c.max(1.0));
        for (a, sv) in m.alphas.iter().zip(&m.support) {
            prop_assert!(*a > 0.0 && *a <= c);
            let i = x.iter().position(|row| row == sv).unwrap();
            let margin = y[i] * m.decision_value(sv).unwrap();
            if *a < c {
                prop_assert!((margin - 1.0).abs() <= cfg.tolerance + 1e-6, "margin {margin}");
            } else {
                prop_assert!(margin <= 1.0 + cfg.tolerance + 1e-6);
            }
        }
        for (row, yi) in x.iter().zip(&y) {
            if !m.support.contains(row) {
                prop_assert!(yi * m.decision_value(row).unwrap() >= 1.0 - cfg.tolerance - 1e-6);
            }
        }
    }

    #[test]
    fn model_files_round_trip(seed in 0u64..10_000, degree in 1u32..4) {
        let ds = oracle::small_dataset(seed, 30, 3, 3);
        let model = train_multiclass(&ds, &SvmConfig::new(1.0, degree)).unwrap();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back = read_model(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.predict_dataset(&ds).unwrap(), model.predict_dataset(&ds).unwrap());
    }
}

#[test]
fn bootstrap_keeps_about_63_percent_of_rows() {
    let n = 1000;
    let mean = (0..100u64)
        .map(|s| {
            let mut seen = vec![false; n];
            for i in bootstrap_indices(n, s) {
                seen[i] = true;
            }
            seen.iter().filter(|&&b| b).count() as f64 / n as f64
        })
        .sum::<f64>()
        / 100.0;
    assert!((mean - 0.632).abs() <= 0.02, "{mean}");
}
