//! Library measures and solvers against the brute-force references on
//! larger inputs than the acceptance fixtures.

use efsvm::data::{AttributeSpec, Dataset, DiscretizationMap};
use efsvm::filters::{self, CfsEvaluator, RankRule};
use efsvm::search::exhaustive_search;
use efsvm::selection::{run_selector, SearchKind, SelectorCode, SelectorConfigs, SelectorId};
use efsvm::svm::{smo_train, SvmConfig};
use efsvm_reference as oracle;

fn binned(ds: &Dataset) -> (DiscretizationMap, Vec<Vec<u32>>, Vec<u32>) {
    let dmap = DiscretizationMap::fit(ds).unwrap();
    let cols = (0..ds.n_features()).map(|f| dmap.binned_column(ds, f)).collect();
    let class = ds.labels().iter().map(|&l| l as u32).collect();
    (dmap, cols, class)
}

#[test]
fn measures_match_on_medium_datasets() {
    for seed in 0..6u64 {
        let ds = oracle::small_dataset(seed, 60 + 10 * seed as usize, 5, 3);
        let (dmap, cols, class) = binned(&ds);
        for f in 0..ds.n_features() {
            let ig = filters::info_gain(&ds, f, &dmap).unwrap();
            assert!((ig - oracle::info_gain(&cols[f], &class)).abs() < 1e-9);
        }
        for mask in 1u32..32 {
            let subset: Vec<usize> = (0..5).filter(|f| mask >> f & 1 == 1).collect();
            let merit = filters::cfs_merit(&ds, &subset, &dmap).unwrap();
            assert!((merit - oracle::cfs_merit(&cols, &class, &subset)).abs() < 1e-9, "{subset:?}");
            let inc = filters::inconsistency_rate(&ds, &subset, &dmap).unwrap();
            assert!((inc - oracle::inconsistency_rate(&cols, &class, &subset)).abs() < 1e-9);
        }
    }
}

#[test]
fn relieff_matches_with_many_neighbours() {
    for seed in 0..4u64 {
        let ds = oracle::small_dataset(50 + seed, 40, 4, 3);
        for k in [1, 5, 10] {
            let got = filters::relieff(&ds, ds.n_rows(), k, 0).unwrap();
            let want = oracle::relieff(ds.rows(), ds.labels(), ds.n_classes(), k);
            for f in 0..4 {
                assert!((got.scores[f] - want[f]).abs() < 1e-9, "seed {seed} k {k} f {f}");
            }
        }
    }
}

#[test]
fn relieff_separates_a_clean_single_feature() {
    let ds = Dataset::new(
        vec![AttributeSpec::numeric("x")],
        AttributeSpec::nominal("y", vec!["A".into(), "B".into()]),
        vec![vec![0.0], vec![0.1], vec![1.0], vec![0.9]],
        vec![0, 0, 1, 1],
    )
    .unwrap();
    let got = filters::relieff(&ds, 4, 1, 0).unwrap().scores[0];
    let want = oracle::relieff(ds.rows(), ds.labels(), 2, 1)[0];
    assert!(got > 0.0);
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn cfs_maximizer_matches_full_enumeration() {
    let ds = oracle::small_dataset(7, 50, 4, 2);
    let (dmap, cols, class) = binned(&ds);
    let eval = CfsEvaluator::new(&ds, &dmap).unwrap();
    let best = exhaustive_search(&eval, 4).unwrap();
    // enumerate in descending mask order as an independent pass
    let mut top: Option<(f64, Vec<usize>)> = None;
    for mask in (1u32..16).rev() {
        let s: Vec<usize> = (0..4).filter(|f| mask >> f & 1 == 1).collect();
        let m = oracle::cfs_merit(&cols, &class, &s);
        let better = match &top {
            None => true,
            Some((tm, ts)) => m > *tm || (m == *tm && (s.len() < ts.len() || (s.len() == ts.len() && s < *ts))),
        };
        if better {
            top = Some((m, s));
        }
    }
    let (m, s) = top.unwrap();
    assert_eq!(best.subset, s);
    assert!((best.score - m).abs() < 1e-12);
}

#[test]
fn cfs_drops_a_redundant_copy() {
    // feature 1 duplicates feature 0; feature 2 carries independent signal
    let mut r = oracle::rng(3);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..80 {
        let y = i % 2;
        let a = if rand::Rng::gen_bool(&mut r, 0.85) { y } else { 1 - y } as f64;
        let c = if rand::Rng::gen_bool(&mut r, 0.75) { y } else { 1 - y } as f64;
        let noise = rand::Rng::gen_range(&mut r, 0..2) as f64;
        rows.push(vec![a, a, c, noise]);
        labels.push(y);
    }
    let bin = |name: String| AttributeSpec::nominal(name, vec!["0".into(), "1".into()]);
    let features = (0..4).map(|f| bin(format!("f{f}"))).collect();
    let ds = Dataset::new(features, bin("y".into()), rows, labels).unwrap();
    let id = SelectorId::new(SelectorCode::Fs1, SearchKind::Genetic).unwrap();
    let sel = run_selector(id, &ds, &SelectorConfigs::default()).unwrap();
    assert!(sel.selected.contains(&0));
    assert!(!sel.selected.contains(&1));
    let (_, cols, class) = binned(&ds);
    let best = (1u32..16)
        .map(|mask| {
            let s: Vec<usize> = (0..4).filter(|f| mask >> f & 1 == 1).collect();
            oracle::cfs_merit(&cols, &class, &s)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((oracle::cfs_merit(&cols, &class, &sel.selected) - best).abs() < 1e-12);
}

#[test]
fn keep_all_rankers_select_every_feature() {
    let ds = oracle::small_dataset(11, 40, 6, 3);
    for code in [SelectorCode::Fs3, SelectorCode::Fs4] {
        let id = SelectorId::new(code, SearchKind::Ranker(RankRule::KeepAll)).unwrap();
        let sel = run_selector(id, &ds, &SelectorConfigs::default()).unwrap();
        assert_eq!(sel.selected, (0..6).collect::<Vec<_>>());
    }
}

#[test]
fn smo_matches_the_dense_solver_on_six_points() {
    for seed in 0..20u64 {
        let mut r = oracle::rng(900 + seed);
        let x: Vec<Vec<f64>> = (0..6).map(|_| vec![oracle::normal(&mut r), oracle::normal(&mut r)]).collect();
        let y: Vec<f64> = (0..6).map(|i| if i < 3 { 1.0 } else { -1.0 }).collect();
        for (c, degree) in [(0.5, 1), (5.0, 2), (50.0, 3)] {
            let cfg = SvmConfig {
                tolerance: 1e-6,
                ..SvmConfig::new(c, degree)
            };
            let m = smo_train(&x, &y, &cfg).unwrap();
            let q = oracle::qp_oracle(&x, &y, c, degree, 1.0);
            assert!(
                (m.dual_objective() - q.objective).abs() < 1e-6,
                "seed {seed} C {c} degree {degree}: {} vs {}",
                m.dual_objective(),
                q.objective
            );
        }
    }
}

#[test]
fn two_point_machine_decision_values() {
    let x = vec![vec![-1.0], vec![1.0]];
    let y = vec![-1.0, 1.0];
    let cfg = SvmConfig {
        kernel: efsvm::KernelSpec::polynomial(1, 0.0),
        ..SvmConfig::new(10.0, 1)
    };
    let m = smo_train(&x, &y, &cfg).unwrap();
    assert!(m.decision_value(&[0.0]).unwrap().abs() < 1e-12);
    assert!((m.decision_value(&[1.0]).unwrap() - 1.0).abs() < 1e-12);
    let q = oracle::qp_oracle(&x, &y, 10.0, 1, 0.0);
    assert!((q.alpha[0] - 0.5).abs() < 1e-9 && (q.alpha[1] - 0.5).abs() < 1e-9);
}
