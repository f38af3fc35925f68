use std::path::PathBuf;

use deepgwc::data::{
    load_content_cites, rate_split, row_normalize, standard_split, stratified_counts, DataError,
};
use proptest::prelude::*;

fn fixture(content: &str, cites: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("toy.content");
    let e = dir.path().join("toy.cites");
    std::fs::write(&c, content).unwrap();
    std::fs::write(&e, cites).unwrap();
    (dir, c, e)
}

const CONTENT: &str = "p31\t0\t1\t1\tTheory\n\
                       p7\t1\t0\t0\tAI\n\
                       p12\t0\t0\t1\tTheory\n\
                       p5 1 1 0 ML\n";

#[test]
fn loads_toy_dataset() {
    let (_d, c, e) = fixture(CONTENT, "p31\tp7\np7\tp31\np12\tp5\n\np99\tp5\n");
    let ds = load_content_cites::<f64>(&c, &e).unwrap();
    let g = &ds.graph;
    assert_eq!((g.num_nodes(), g.num_features(), g.num_classes()), (4, 3, 3));
    assert_eq!(g.node_ids(), &["p31", "p7", "p12", "p5"]);
    assert_eq!(ds.class_names, vec!["AI", "ML", "Theory"]);
    assert_eq!(g.labels(), &[2, 0, 2, 1]);
    assert_eq!(g.edges(), &[(0, 1), (2, 3)]);
    assert_eq!((ds.dropped_edges, ds.cites_rows), (1, 4));
    assert_eq!(g.features().row(3), &[1.0, 1.0, 0.0]);
}

#[test]
fn malformed_row_reports_line() {
    let (_d, c, e) = fixture("a\t1\t0\tX\nb\t1\tY\n", "");
    let err = load_content_cites::<f64>(&c, &e).unwrap_err();
    assert!(matches!(err, DataError::Malformed { line: 2, .. }), "{err}");
    assert!(err.to_string().contains(":2:"));

    let (_d, c, e) = fixture("a\t1\tzz\tX\n", "");
    assert!(matches!(load_content_cites::<f64>(&c, &e), Err(DataError::Malformed { line: 1, .. })));

    let (_d, c, e) = fixture("a\t1\tX\n", "a\n");
    assert!(matches!(load_content_cites::<f64>(&c, &e), Err(DataError::Malformed { line: 1, .. })));
}

#[test]
fn duplicate_id_is_rejected() {
    let (_d, c, e) = fixture("a\t1\tX\nb\t0\tX\na\t1\tY\n", "");
    assert!(matches!(
        load_content_cites::<f64>(&c, &e),
        Err(DataError::DuplicateNode { line: 3, .. })
    ));
}

#[test]
fn missing_file_names_path() {
    let err = load_content_cites::<f64>("/nonexistent/x.content".as_ref(), "/nonexistent/x.cites".as_ref())
        .unwrap_err();
    assert!(err.to_string().contains("/nonexistent/x.content"));
}

#[test]
fn row_normalization_of_loaded_features() {
    let (_d, c, e) = fixture(CONTENT, "");
    let ds = load_content_cites::<f64>(&c, &e).unwrap();
    let x = row_normalize(ds.graph.features());
    assert_eq!(x.row(0), &[0.0, 0.5, 0.5]);
}

fn labelled(sizes: &[usize]) -> deepgwc::graph::Graph<f64> {
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat(c).take(k))
        .collect();
    let n = labels.len();
    deepgwc::graph::Graph::new(n, [], deepgwc::linalg::DenseMatrix::zeros(n, 1), labels, sizes.len()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rate_split_is_disjoint_and_stratified(
        sizes in prop::collection::vec(200usize..900, 2..8),
        rate in 0.003..0.05f64,
        seed in any::<u64>(),
    ) {
        let g = labelled(&sizes);
        let n = g.num_nodes();
        prop_assume!((rate * n as f64).round() as usize >= sizes.len());
        prop_assume!((rate * n as f64).round() as usize + 1500 <= n);
        let split = rate_split(&g, rate, seed).unwrap();
        prop_assert!(split.is_disjoint());
        prop_assert_eq!(split.train.len(), (rate * n as f64).round() as usize);
        for (c, &size) in sizes.iter().enumerate() {
            let count = split.train.iter().filter(|&&i| g.labels()[i] == c).count();
            let quota = split.train.len() as f64 * size as f64 / n as f64;
            prop_assert!(count >= 1);
            prop_assert!((count as f64 - quota).abs() <= 1.0, "class {} count {} quota {}", c, count, quota);
        }
    }

    #[test]
    fn stratified_counts_sum_to_total(sizes in prop::collection::vec(1usize..500, 1..10), extra in 0usize..50) {
        let total = sizes.len() + extra;
        prop_assume!(total <= sizes.iter().sum());
        let counts = stratified_counts(&sizes, total);
        prop_assert_eq!(counts.iter().sum::<usize>(), total);
        prop_assert!(counts.iter().zip(&sizes).all(|(&k, &s)| k >= 1 && k <= s));
    }
}

#[test]
fn standard_split_is_deterministic_and_index_ordered() {
    let g = labelled(&[351, 217, 418, 818, 426, 298, 180]);
    let a = standard_split(&g, 0).unwrap();
    assert_eq!(a, standard_split(&g, 0).unwrap());
    assert_eq!(a.train.len(), 140);
    assert!(a.is_disjoint());
    assert!(a.validation.windows(2).all(|w| w[0] < w[1]));
    let rest: Vec<usize> = (0..2708).filter(|i| a.train.binary_search(i).is_err()).collect();
    assert_eq!(a.validation, rest[..500].to_vec());
    assert_eq!(a.test, rest[rest.len() - 1000..].to_vec());
}
