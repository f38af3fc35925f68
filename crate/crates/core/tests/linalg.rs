mod common;

use common::naive_matmul;
use deepgwc::linalg::{eigh_sym, spmm, threshold_sparsify, DenseMatrix, SparseMatrix};
use proptest::prelude::*;

fn dense_strategy(rows: usize, cols: usize, zero_rate: f64) -> impl Strategy<Value = DenseMatrix<f64>> {
    prop::collection::vec((0.0..1.0f64, -10.0..10.0f64), rows * cols).prop_map(move |cells| {
        let data = cells
            .into_iter()
            .map(|(u, v)| if u < zero_rate { 0.0 } else { v })
            .collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    })
}

fn symmetric_strategy(n: usize) -> impl Strategy<Value = DenseMatrix<f64>> {
    dense_strategy(n, n, 0.3).prop_map(|m| {
        let t = m.transpose();
        m.add(&t).unwrap().scale(0.5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn spmm_matches_naive_product(a in dense_strategy(20, 20, 0.7), b in dense_strategy(20, 20, 0.0)) {
        let sparse = SparseMatrix::from_dense(&a, 0.0);
        let got = spmm(&sparse, &b).unwrap();
        let want = naive_matmul(&a, &b);
        prop_assert!(got.max_abs_diff(&want).unwrap() <= 1e-12);
    }

    #[test]
    fn spgemm_matches_naive_product(a in dense_strategy(12, 9, 0.6), b in dense_strategy(9, 14, 0.6)) {
        let got = SparseMatrix::from_dense(&a, 0.0)
            .matmul(&SparseMatrix::from_dense(&b, 0.0))
            .unwrap()
            .to_dense();
        prop_assert!(got.max_abs_diff(&naive_matmul(&a, &b)).unwrap() <= 1e-12);
    }

    #[test]
    fn transposed_spmm_matches_explicit_transpose(a in dense_strategy(15, 11, 0.6), b in dense_strategy(15, 4, 0.0)) {
        let sparse = SparseMatrix::from_dense(&a, 0.0);
        let got = sparse.spmm_transpose(&b).unwrap();
        let want = naive_matmul(&a.transpose(), &b);
        prop_assert!(got.max_abs_diff(&want).unwrap() <= 1e-12);
    }

    #[test]
    fn dense_sparse_round_trip(a in dense_strategy(17, 13, 0.5)) {
        let sparse = SparseMatrix::from_dense(&a, 0.0);
        prop_assert_eq!(sparse.to_dense(), a.clone());
        let nonzero = a.as_slice().iter().filter(|&&v| v != 0.0).count();
        prop_assert_eq!(sparse.nnz(), nonzero);
    }

    #[test]
    fn thresholding_never_increases_nnz(a in dense_strategy(10, 10, 0.2), t in 0.0..5.0f64) {
        let base = SparseMatrix::from_dense(&a, 0.0);
        let cut = threshold_sparsify(&a, t).unwrap();
        prop_assert!(cut.nnz() <= base.nnz());
        for (&v, &c) in a.as_slice().iter().zip(cut.to_dense().as_slice()) {
            prop_assert!(c == 0.0 || c == v);
            prop_assert!(v.abs() < t || v == 0.0 || c == v);
        }
    }

    #[test]
    fn eigen_reconstructs_and_is_orthonormal(m in symmetric_strategy(10)) {
        let eig = eigh_sym(&m).unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let residual = eig.reconstruct().sub(&m).unwrap().max_abs();
        prop_assert!(residual <= 1e-10, "residual {}", residual);
        let gram = eig.vectors.matmul_tn(&eig.vectors).unwrap();
        prop_assert!(gram.max_abs_diff(&DenseMatrix::identity(10)).unwrap() <= 1e-10);
    }

    #[test]
    fn eigen_trace_is_preserved(m in symmetric_strategy(8)) {
        let eig = eigh_sym(&m).unwrap();
        let trace: f64 = m.diagonal().iter().sum();
        let total: f64 = eig.values.iter().sum();
        prop_assert!((trace - total).abs() <= 1e-10 * (1.0 + trace.abs()));
    }
}

#[test]
fn eigen_agrees_with_jacobi_oracle() {
    let m = common::random_dense(12, 12, 5);
    let m = m.add(&m.transpose()).unwrap().scale(0.5);
    let mut oracle = common::jacobi_eigen(&m).0;
    oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let values = eigh_sym(&m).unwrap().values;
    for (a, b) in values.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-11, "{a} vs {b}");
    }
}

#[test]
fn spmm_thread_count_does_not_change_bits() {
    let a = SparseMatrix::from_dense(&common::random_dense(300, 300, 1).map(|v| if v.abs() < 0.8 { 0.0 } else { v }), 0.0);
    let b = common::random_dense(300, 16, 2);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let x = one.install(|| a.spmm(&b).unwrap());
    let y = four.install(|| a.spmm(&b).unwrap());
    assert_eq!(x, y);
}

#[test]
fn f32_and_f64_agree() {
    let m = common::random_dense(6, 6, 9);
    let m = m.add(&m.transpose()).unwrap();
    let lo = eigh_sym(&m.cast::<f32>()).unwrap();
    let hi = eigh_sym(&m).unwrap();
    for (a, b) in lo.values.iter().zip(&hi.values) {
        assert!((f64::from(*a) - b).abs() < 1e-4);
    }
}
