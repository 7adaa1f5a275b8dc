use lce::cascade::fit_tree;
use lce::eval::{min_rank_table, wins_ties};
use lce::gbt::fit_gbt;
use lce::{
    kfold_indices, train_test_indices, BaseLearner, CascadeConfig, CsvOptions, Dataset64,
    FeatureMatrix64, GbtConfig64, LceConfig64, LceModel, Parallelism, Targets, Task,
};
use proptest::prelude::*;

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        4 => (-20i32..20).prop_map(|v| Some(v as f64 / 4.0)),
    ]
}

/// Rows, width and class labels (every class in `0..k` present).
fn classified(
    max_rows: usize,
) -> impl Strategy<Value = (Vec<Vec<Option<f64>>>, usize, Vec<usize>, usize)> {
    (1usize..=4, 2usize..=4).prop_flat_map(move |(width, k)| {
        (k.max(4)..=max_rows).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(cell(), width), n),
                Just(width),
                prop::collection::vec(0..k, n).prop_map(move |mut l| {
                    for (c, slot) in l.iter_mut().take(k).enumerate() {
                        *slot = c;
                    }
                    l
                }),
                Just(k),
            )
        })
    })
}

fn dataset(rows: &[Vec<Option<f64>>], width: usize, labels: Vec<usize>, k: usize) -> Dataset64 {
    Dataset64::new(
        FeatureMatrix64::from_rows(width, rows).unwrap(),
        (0..width).map(|j| format!("f{j}")).collect(),
        "label",
        Targets::Classes {
            labels,
            n_classes: k,
        },
        (0..k).map(|c| format!("c{c}")).collect(),
    )
    .unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn small_config(seed: u64) -> LceConfig64 {
    LceConfig64 {
        n_estimators: 3,
        seed,
        parallelism: Parallelism::threads(1).unwrap(),
        cascade: CascadeConfig {
            max_depth: 2,
            tuning_budget: 2,
            ..CascadeConfig::default()
        },
        ..LceConfig64::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn split_partitions_and_stratifies(labels in prop::collection::vec(0usize..3, 8..120), f in 0.1f64..0.9, seed: u64) {
        let mut labels = labels;
        labels[0] = 0;
        labels[1] = 1;
        labels[2] = 2;
        let n = labels.len();
        let n_test = (f * n as f64 - 1e-9).ceil() as usize;
        prop_assume!(n_test < n);
        let t: Targets<f64> = Targets::Classes { labels: labels.clone(), n_classes: 3 };
        let (train, test) = train_test_indices(&t, f, seed, true).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(test.len(), n_test);
        for c in 0..3 {
            let n_c = labels.iter().filter(|&&l| l == c).count() as f64;
            let got = test.iter().filter(|&&i| labels[i] == c).count() as f64;
            prop_assert!(got == (n_c * f).floor() || got == (n_c * f).ceil(), "class {} got {} of {}", c, got, n_c);
        }
        prop_assert_eq!(train_test_indices(&t, f, seed, true).unwrap(), (train, test));
    }

    #[test]
    fn kfold_is_a_balanced_partition(labels in prop::collection::vec(0usize..3, 10..80), k in 2usize..6, seed: u64, stratified: bool) {
        let n = labels.len();
        let t: Targets<f64> = Targets::Classes { labels: labels.clone(), n_classes: 3 };
        let folds = kfold_indices(&t, k, seed, stratified).unwrap();
        prop_assert_eq!(folds.len(), k);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        if stratified {
            for c in 0..3 {
                let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn csv_round_trip((rows, width, labels, k) in classified(30)) {
        let ds = dataset(&rows, width, labels, k);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back: Dataset64 = lce::read_csv(buf.as_slice(), "label", Task::Classification, &CsvOptions::default()).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        prop_assert_eq!(back.feature_names(), ds.feature_names());
        // class indices follow first appearance, so compare by name
        for i in 0..ds.n_rows() {
            let name = |d: &Dataset64| match d.targets() {
                Targets::Classes { labels, .. } => d.class_names()[labels[i]].clone(),
                Targets::Values(_) => unreachable!(),
            };
            prop_assert_eq!(name(&back), name(&ds));
        }
    }

    #[test]
    fn rank_bounds(acc in prop::collection::vec(prop::collection::vec(0u8..=20, 3), 1..12)) {
        let acc: Vec<Vec<f64>> = acc.into_iter().map(|r| r.into_iter().map(|v| 80.0 + v as f64 / 2.0).collect()).collect();
        let ranks = min_rank_table(&acc).unwrap();
        prop_assert!(ranks.iter().all(|&r| (1.0..=3.0).contains(&r)));
        let wins = wins_ties(&acc).unwrap();
        prop_assert!(wins.iter().sum::<usize>() >= acc.len());
        let dominant: Vec<Vec<f64>> = acc.iter().map(|r| vec![101.0, r[1], r[2]]).collect();
        prop_assert_eq!(min_rank_table(&dominant).unwrap()[0], 1.0);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn probabilities_sum_to_one((rows, width, labels, k) in classified(40), seed: u64, probe in prop::collection::vec(cell(), 4)) {
        let ds = dataset(&rows, width, labels, k);
        let model = lce::fit(&ds, &small_config(seed)).unwrap();
        let mut probes: Vec<Vec<Option<f64>>> = rows.clone();
        probes.push(probe[..width].to_vec());
        probes.push(vec![None; width]);
        for row in &probes {
            let p = model.predict_proba(row).unwrap();
            prop_assert_eq!(p.len(), k);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn fitting_is_deterministic((rows, width, labels, k) in classified(30), seed: u64) {
        let ds = dataset(&rows, width, labels, k);
        let a = lce::fit(&ds, &small_config(seed)).unwrap();
        let b = lce::fit(&ds, &small_config(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tree_order_does_not_change_output((rows, width, labels, k) in classified(30), seed: u64, rot in 1usize..3) {
        let ds = dataset(&rows, width, labels, k);
        let model = lce::fit(&ds, &small_config(seed)).unwrap();
        let mut trees = model.trees().to_vec();
        trees.rotate_left(rot);
        trees.swap(0, 1);
        let permuted = LceModel::from_trees(trees, model.feature_names().to_vec(), model.class_names().to_vec(), model.config().clone()).unwrap();
        for row in &rows {
            let a: Vec<u64> = model.predict_proba(row).unwrap().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = permuted.predict_proba(row).unwrap().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn working_row_grows_by_one_block_per_level((rows, width, labels, k) in classified(40), seed: u64) {
        let ds = dataset(&rows, width, labels, k);
        let cfg = CascadeConfig { max_depth: 3, tuning_budget: 1, ..CascadeConfig::default() };
        let tree = fit_tree(ds.features(), ds.targets(), &cfg, seed).unwrap();
        prop_assert_eq!(tree.augment_width, k);
        for row in &rows {
            let mut seen = 0;
            tree.predict_traced(row, |depth, work| {
                assert_eq!(work.len(), width + (depth + 1) * k);
                seen += 1;
            }).unwrap();
            prop_assert!((1..=4).contains(&seen));
        }
    }

    #[test]
    fn plain_trees_do_not_augment((rows, width, labels, k) in classified(40), seed: u64) {
        let ds = dataset(&rows, width, labels, k);
        let cfg = CascadeConfig { max_depth: 3, base: BaseLearner::Disabled, ..CascadeConfig::default() };
        let tree = fit_tree(ds.features(), ds.targets(), &cfg, seed).unwrap();
        prop_assert_eq!(tree.augment_width, 0);
        for row in &rows {
            tree.predict_traced(row, |_, work| assert_eq!(work.len(), width)).unwrap();
        }
    }

    #[test]
    fn training_loss_never_increases(
        (rows, width, labels, k) in classified(40),
        eta in prop::sample::select(vec![0.1, 0.3, 1.0]),
        lambda in prop::sample::select(vec![0.0, 1.0]),
        regression: bool,
    ) {
        let x = FeatureMatrix64::from_rows(width, &rows).unwrap();
        let targets = if regression {
            Targets::Values(labels.iter().zip(&rows).map(|(&l, r)| l as f64 * 2.0 + r[0].unwrap_or(0.5)).collect())
        } else {
            Targets::Classes { labels, n_classes: k }
        };
        let cfg = GbtConfig64 { n_rounds: 12, max_depth: 3, learning_rate: eta, reg_lambda: lambda, ..GbtConfig64::default() };
        let model = fit_gbt(&x, &targets, &cfg).unwrap();
        let mut prev = model.mean_loss(&x, &targets, 0).unwrap();
        for r in 1..=cfg.n_rounds {
            let cur = model.mean_loss(&x, &targets, r).unwrap();
            prop_assert!(cur <= prev + 1e-9, "round {}: {} > {}", r, cur, prev);
            prev = cur;
        }
    }
}
