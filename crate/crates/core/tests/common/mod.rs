//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use deepgwc::linalg::DenseMatrix;

pub fn naive_matmul(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    assert_eq!(a.cols(), b.rows());
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
}

/// Cyclic Jacobi eigendecomposition; eigenvectors are the columns of the
/// returned matrix (unsorted).
pub fn jacobi_eigen(m: &DenseMatrix<f64>) -> (Vec<f64>, DenseMatrix<f64>) {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    (values, DenseMatrix::from_fn(n, n, |i, j| v[i][j]))
}

/// `U diag(f(λ)) Uᵀ` from a Jacobi decomposition.
pub fn spectral_function(m: &DenseMatrix<f64>, f: impl Fn(f64) -> f64) -> DenseMatrix<f64> {
    let (values, u) = jacobi_eigen(m);
    let n = m.rows();
    DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| u.get(i, k) * f(values[k]) * u.get(j, k)).sum()
    })
}

/// Dense normalized Laplacian built straight from an edge list.
pub fn laplacian_oracle(n: usize, edges: &[(usize, usize)]) -> DenseMatrix<f64> {
    let mut deg = vec![0.0f64; n];
    for &(a, b) in edges {
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    let mut l = DenseMatrix::from_fn(n, n, |i, j| if i == j && deg[i] > 0.0 { 1.0 } else { 0.0 });
    for &(a, b) in edges {
        let v = -1.0 / (deg[a] * deg[b]).sqrt();
        l.set(a, b, v);
        l.set(b, a, v);
    }
    l
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` built straight from an edge list.
pub fn renormalized_oracle(n: usize, edges: &[(usize, usize)]) -> DenseMatrix<f64> {
    let mut deg = vec![1.0f64; n];
    for &(a, b) in edges {
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    let mut p = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / deg[i] } else { 0.0 });
    for &(a, b) in edges {
        let v = 1.0 / (deg[a] * deg[b]).sqrt();
        p.set(a, b, v);
        p.set(b, a, v);
    }
    p
}

pub fn relu(m: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    m.map(|x| x.max(0.0))
}

/// `σ(P̃ H W)`
pub fn gcn_layer_oracle(
    n: usize,
    edges: &[(usize, usize)],
    h: &DenseMatrix<f64>,
    w: &DenseMatrix<f64>,
) -> DenseMatrix<f64> {
    let p = renormalized_oracle(n, edges);
    relu(&naive_matmul(&naive_matmul(&p, h), w))
}

/// `σ(ψ F ψ⁻¹ H W)` with `F = f I`.
pub fn gwnn_layer_oracle(
    psi: &DenseMatrix<f64>,
    psi_inverse: &DenseMatrix<f64>,
    f: f64,
    h: &DenseMatrix<f64>,
    w: &DenseMatrix<f64>,
) -> DenseMatrix<f64> {
    let n = psi.rows();
    let filter = DenseMatrix::from_fn(n, n, |i, j| if i == j { f } else { 0.0 });
    let op = naive_matmul(&naive_matmul(psi, &filter), psi_inverse);
    relu(&naive_matmul(&naive_matmul(&op, h), w))
}

/// Largest singular value by power iteration on `MᵀM`.
pub fn spectral_norm(m: &DenseMatrix<f64>) -> f64 {
    let n = m.cols();
    let mut x = DenseMatrix::from_fn(n, 1, |i, _| 1.0 + (i as f64 * 0.37).sin() * 0.5);
    let mut sigma = 0.0;
    for _ in 0..500 {
        let y = naive_matmul(&m.transpose(), &naive_matmul(m, &x));
        let norm = y.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        x = y.scale(1.0 / norm);
        sigma = norm.sqrt();
    }
    sigma
}

pub fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}
