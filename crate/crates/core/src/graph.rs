//! Undirected graphs, normalized Laplacians and the self-loop renormalized
//! propagation matrix.

use std::collections::VecDeque;

use thiserror::Error;

use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) has an endpoint outside [0, {2})")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("feature matrix has {rows} rows but the graph has {n} nodes")]
    FeatureRows { rows: usize, n: usize },
    #[error("label vector has length {len} but the graph has {n} nodes")]
    LabelCount { len: usize, n: usize },
    #[error("label {label} at node {node} is not below the class count {classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        classes: usize,
    },
}

/// Simple undirected graph with node features and class labels.
///
/// Edges are stored once as `(i, j)` with `i < j`; duplicates and
/// self-loops are discarded on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    n: usize,
    edges: Vec<(usize, usize)>,
    features: DenseMatrix<T>,
    labels: Vec<usize>,
    num_classes: usize,
    node_ids: Vec<String>,
}

impl<T: Scalar> Graph<T> {
    pub fn new(
        n: usize,
        raw_edges: impl IntoIterator<Item = (usize, usize)>,
        features: DenseMatrix<T>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, GraphError> {
        if features.rows() != n {
            return Err(GraphError::FeatureRows {
                rows: features.rows(),
                n,
            });
        }
        if labels.len() != n {
            return Err(GraphError::LabelCount {
                len: labels.len(),
                n,
            });
        }
        if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(GraphError::LabelOutOfRange {
                node,
                label,
                classes: num_classes,
            });
        }
        let mut edges = Vec::new();
        for (a, b) in raw_edges {
            if a >= n || b >= n {
                return Err(GraphError::EndpointOutOfRange(a, b, n));
            }
            if a != b {
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self {
            n,
            edges,
            features,
            labels,
            num_classes,
            node_ids: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    /// Structure-only graph: a single constant feature, every label 0.
    pub fn from_edges(n: usize, raw_edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::new(
            n,
            raw_edges,
            DenseMatrix::from_fn(n, 1, |_, _| T::one()),
            vec![0; n],
            1,
        )
        .expect("structure-only graph with in-range edges")
    }

    pub fn with_node_ids(mut self, ids: Vec<String>) -> Self {
        assert_eq!(ids.len(), self.n, "one id per node");
        self.node_ids = ids;
        self
    }

    pub fn with_features(mut self, features: DenseMatrix<T>) -> Result<Self, GraphError> {
        if features.rows() != self.n {
            return Err(GraphError::FeatureRows {
                rows: features.rows(),
                n: self.n,
            });
        }
        self.features = features;
        Ok(self)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &DenseMatrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Symmetric unit-weight adjacency matrix.
    pub fn adjacency(&self) -> SparseMatrix<T> {
        let trip = self
            .edges
            .iter()
            .flat_map(|&(a, b)| [(a, b, T::one()), (b, a, T::one())])
            .collect();
        SparseMatrix::from_triplets(self.n, self.n, trip).expect("edges in range")
    }

    /// Applies `P g P^T` for a node permutation: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let p = self.features.cols();
        let mut features = DenseMatrix::zeros(self.n, p);
        let mut labels = vec![0; self.n];
        let mut ids = vec![String::new(); self.n];
        for i in 0..self.n {
            features.row_mut(perm[i]).copy_from_slice(self.features.row(i));
            labels[perm[i]] = self.labels[i];
            ids[perm[i]] = self.node_ids[i].clone();
        }
        let edges: Vec<_> = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Self::new(self.n, edges, features, labels, self.num_classes)
            .expect("permutation preserves validity")
            .with_node_ids(ids)
    }
}

/// Laplacian `L = I - D^{-1/2} A D^{-1/2}` (zero rows for isolated nodes), the renormalized propagation
/// matrix `P = D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃ = D + I`, and the raw
/// degrees.
///
/// `L` is kept sparse; [`LaplacianBundle::laplacian_dense`] materializes it
/// for the eigensolver.
#[derive(Clone, Debug)]
pub struct LaplacianBundle<T> {
    pub laplacian: SparseMatrix<T>,
    pub renorm_propagation: SparseMatrix<T>,
    pub degree: Vec<T>,
}

impl<T: Scalar> LaplacianBundle<T> {
    pub fn num_nodes(&self) -> usize {
        self.degree.len()
    }

    pub fn laplacian_dense(&self) -> DenseMatrix<T> {
        self.laplacian.to_dense()
    }
}

pub fn build_laplacian<T: Scalar>(g: &Graph<T>) -> LaplacianBundle<T> {
    let n = g.num_nodes();
    let deg: Vec<T> = g
        .degrees()
        .into_iter()
        .map(T::from_usize_lossy)
        .collect();
    // 1/sqrt(d_a d_b) rather than a product of two inverse roots keeps
    // entries such as 1/2 exact.
    let norm = |da: T, db: T| T::one() / (da * db).sqrt();
    let mut lap = Vec::with_capacity(n + 2 * g.num_edges());
    let mut prop = Vec::with_capacity(n + 2 * g.num_edges());
    for i in 0..n {
        // isolated nodes get an all-zero Laplacian row
        if deg[i] > T::zero() {
            lap.push((i, i, T::one()));
        }
        prop.push((i, i, T::one() / (deg[i] + T::one())));
    }
    for &(a, b) in g.edges() {
        // both endpoints of an edge have degree >= 1
        let w = -norm(deg[a], deg[b]);
        let p = norm(deg[a] + T::one(), deg[b] + T::one());
        lap.push((a, b, w));
        lap.push((b, a, w));
        prop.push((a, b, p));
        prop.push((b, a, p));
    }
    LaplacianBundle {
        laplacian: SparseMatrix::from_triplets(n, n, lap).expect("in range"),
        renorm_propagation: SparseMatrix::from_triplets(n, n, prop).expect("in range"),
        degree: deg,
    }
}

/// Connected components, each sorted ascending, ordered by smallest member.
pub fn connected_components<T: Scalar>(g: &Graph<T>) -> Vec<Vec<usize>> {
    let n = g.num_nodes();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in g.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
