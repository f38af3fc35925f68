//! Citation-network ingestion from plain-text `content`/`cites` files, the
//! standard and label-rate splits, and small synthetic graphs.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Nodes per class in the standard split's training set.
pub const STANDARD_PER_CLASS: usize = 20;
pub const VALIDATION_SIZE: usize = 500;
pub const TEST_SIZE: usize = 1000;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: duplicate node id '{id}'")]
    DuplicateNode {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("class {class} has {size} nodes, {need} required")]
    ClassTooSmall {
        class: usize,
        size: usize,
        need: usize,
    },
    #[error("label rate {0} must lie strictly between 0 and 1")]
    InvalidRate(f64),
    #[error("label rate gives {train} training nodes, fewer than the {classes} classes")]
    RateTooSmall { train: usize, classes: usize },
    #[error("split needs {need} nodes but the graph has {n}")]
    Capacity { need: usize, n: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Node-index sets for one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub label_rate: f64,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn is_disjoint(&self) -> bool {
        let mut all: Vec<usize> = self
            .train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .copied()
            .collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        all.len() == total
    }
}

/// A loaded graph plus bookkeeping from ingestion.
#[derive(Clone, Debug)]
pub struct LoadedDataset<T> {
    pub graph: Graph<T>,
    /// Distinct class label strings; index = class id.
    pub class_names: Vec<String>,
    /// Cites rows whose endpoints were not both present in the content file.
    pub dropped_edges: usize,
    /// Non-empty cites rows read.
    pub cites_rows: usize,
}

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `<id> <feat_1> … <feat_p> <label>` rows and `<cited> <citing>`
/// rows (tab or space separated).
///
/// Node indices follow first appearance in the content file; class ids
/// follow lexicographic label order. Cites rows naming an unknown id are
/// dropped and counted.
pub fn load_content_cites<T: Scalar>(
    content_path: &Path,
    cites_path: &Path,
) -> Result<LoadedDataset<T>, DataError> {
    let content = read(content_path)?;
    let malformed = |line: usize, msg: String| DataError::Malformed {
        path: content_path.to_path_buf(),
        line,
        msg,
    };

    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut values: Vec<T> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in content.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(malformed(
                lineno,
                format!("expected id, features and label, found {} fields", fields.len()),
            ));
        }
        let p = fields.len() - 2;
        match width {
            None => width = Some(p),
            Some(w) if w != p => {
                return Err(malformed(lineno, format!("{p} features, earlier rows have {w}")))
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if index.contains_key(&id) {
            return Err(DataError::DuplicateNode {
                path: content_path.to_path_buf(),
                line: lineno,
                id,
            });
        }
        for tok in &fields[1..=p] {
            let v: f64 = tok
                .parse()
                .map_err(|_| malformed(lineno, format!("feature '{tok}' is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(lineno, format!("feature '{tok}' is not finite")));
            }
            values.push(T::lit(v));
        }
        index.insert(id.clone(), ids.len());
        ids.push(id);
        raw_labels.push(fields[p + 1].to_string());
    }
    let n = ids.len();
    let p = width.unwrap_or(0);
    if n == 0 {
        return Err(malformed(0, "no node rows".into()));
    }

    let class_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let class_of: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(k, s)| (s.as_str(), k))
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|l| class_of[l.as_str()]).collect();

    let cites = read(cites_path)?;
    let mut edges = Vec::new();
    let mut dropped = 0;
    let mut rows = 0;
    for (lineno, line) in cites.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(DataError::Malformed {
                path: cites_path.to_path_buf(),
                line: lineno,
                msg: format!("expected two node ids, found {} fields", fields.len()),
            });
        }
        rows += 1;
        match (index.get(fields[0]), index.get(fields[1])) {
            (Some(&a), Some(&b)) => edges.push((a, b)),
            _ => dropped += 1,
        }
    }

    let features = DenseMatrix::from_vec(n, p, values).expect("one row per node");
    let graph = Graph::new(n, edges, features, labels, class_names.len())?.with_node_ids(ids);
    Ok(LoadedDataset {
        graph,
        class_names,
        dropped_edges: dropped,
        cites_rows: rows,
    })
}

/// Scales each feature row to unit sum; all-zero rows are left as is.
pub fn row_normalize<T: Scalar>(features: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = features.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let s: T = row.iter().copied().sum();
        if s != T::zero() {
            for v in row.iter_mut() {
                *v /= s;
            }
        }
    }
    out
}

fn nodes_by_class<T: Scalar>(g: &Graph<T>) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); g.num_classes()];
    for (i, &c) in g.labels().iter().enumerate() {
        by_class[c].push(i);
    }
    by_class
}

/// Deterministic split: the first 20 nodes of each class (by index) train,
/// the first 500 remaining nodes validate, and the last 1000 remaining
/// nodes test.
///
/// Graphs with fewer than 1500 non-training nodes divide the remainder
/// between validation and test in the same 1:2 ratio.
pub fn standard_split<T: Scalar>(g: &Graph<T>, seed: u64) -> Result<DatasetSplit, DataError> {
    let by_class = nodes_by_class(g);
    let mut train = Vec::with_capacity(STANDARD_PER_CLASS * by_class.len());
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < STANDARD_PER_CLASS {
            return Err(DataError::ClassTooSmall {
                class,
                size: members.len(),
                need: STANDARD_PER_CLASS,
            });
        }
        train.extend_from_slice(&members[..STANDARD_PER_CLASS]);
    }
    train.sort_unstable();
    let n = g.num_nodes();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    let (val_size, test_size) = if rest.len() >= VALIDATION_SIZE + TEST_SIZE {
        (VALIDATION_SIZE, TEST_SIZE)
    } else {
        let v = rest.len() / 3;
        (v, rest.len() - v)
    };
    let validation = rest[..val_size].to_vec();
    let test = rest[rest.len() - test_size..].to_vec();
    Ok(DatasetSplit {
        label_rate: train.len() as f64 / n as f64,
        train,
        validation,
        test,
        seed,
    })
}

/// Per-class training counts for `total` nodes, proportional to class
/// sizes with at least one node per class (largest-remainder rounding).
pub fn stratified_counts(class_sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let quota: Vec<f64> = class_sizes
        .iter()
        .map(|&s| total as f64 * s as f64 / n as f64)
        .collect();
    let mut counts: Vec<usize> = quota
        .iter()
        .zip(class_sizes)
        .map(|(&q, &s)| (q.floor() as usize).max(1).min(s))
        .collect();
    let mut assigned: usize = counts.iter().sum();
    // order by fractional shortfall, largest first; ties to lower class id
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quota[a] - counts[a] as f64, quota[b] - counts[b] as f64);
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    while assigned < total {
        let before = assigned;
        for &c in &order {
            if assigned == total {
                break;
            }
            if counts[c] < class_sizes[c] {
                counts[c] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    while assigned > total {
        let before = assigned;
        for &c in order.iter().rev() {
            if assigned == total {
                break;
            }
            if counts[c] > 1 {
                counts[c] -= 1;
                assigned -= 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    counts
}

/// Class-stratified random split with `round(rate · n)` training nodes and
/// 500/1000 validation/test nodes drawn from the remainder. Smaller
/// remainders are divided 1:2 as in [`standard_split`].
pub fn rate_split<T: Scalar>(g: &Graph<T>, rate: f64, seed: u64) -> Result<DatasetSplit, DataError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(DataError::InvalidRate(rate));
    }
    let n = g.num_nodes();
    let total = (rate * n as f64).round() as usize;
    let classes = g.num_classes();
    if total < classes {
        return Err(DataError::RateTooSmall {
            train: total,
            classes,
        });
    }
    if total + 2 > n {
        return Err(DataError::Capacity { need: total + 2, n });
    }
    let by_class = nodes_by_class(g);
    if let Some((class, _)) = by_class.iter().enumerate().find(|(_, m)| m.is_empty()) {
        return Err(DataError::ClassTooSmall {
            class,
            size: 0,
            need: 1,
        });
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let counts = stratified_counts(&sizes, total);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; n];
    let mut train = Vec::with_capacity(total);
    for (members, &k) in by_class.iter().zip(&counts) {
        for pos in sample(&mut rng, members.len(), k).iter() {
            train.push(members[pos]);
            in_train[members[pos]] = true;
        }
    }
    train.sort_unstable();
    let mut rest: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    rest.shuffle(&mut rng);
    let (val_size, test_size) = if rest.len() >= VALIDATION_SIZE + TEST_SIZE {
        (VALIDATION_SIZE, TEST_SIZE)
    } else {
        let v = rest.len() / 3;
        (v, rest.len() - v)
    };
    let mut validation = rest[..val_size].to_vec();
    let mut test = rest[val_size..val_size + test_size].to_vec();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit {
        label_rate: train.len() as f64 / n as f64,
        train,
        validation,
        test,
        seed,
    })
}

/// `per_class` random training nodes per class; validation and test drawn
/// at random from the remainder.
pub fn class_balanced_split<T: Scalar>(
    g: &Graph<T>,
    per_class: usize,
    validation: usize,
    test: usize,
    seed: u64,
) -> Result<DatasetSplit, DataError> {
    let by_class = nodes_by_class(g);
    let n = g.num_nodes();
    let need = per_class * by_class.len() + validation + test;
    if need > n {
        return Err(DataError::Capacity { need, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; n];
    let mut train = Vec::new();
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < per_class {
            return Err(DataError::ClassTooSmall {
                class,
                size: members.len(),
                need: per_class,
            });
        }
        for pos in sample(&mut rng, members.len(), per_class).iter() {
            train.push(members[pos]);
            in_train[members[pos]] = true;
        }
    }
    train.sort_unstable();
    let mut rest: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    rest.shuffle(&mut rng);
    let mut val: Vec<usize> = rest[..validation].to_vec();
    let mut tst: Vec<usize> = rest[validation..validation + test].to_vec();
    val.sort_unstable();
    tst.sort_unstable();
    Ok(DatasetSplit {
        label_rate: train.len() as f64 / n as f64,
        train,
        validation: val,
        test: tst,
        seed,
    })
}

/// Two `k`-cliques joined by the bridge `(k−1, k)`; label = clique.
/// Features are a one-hot community indicator plus one seeded noise column.
pub fn synthetic_two_clique<T: Scalar>(k: usize, seed: u64) -> Graph<T> {
    assert!(k >= 3, "cliques need at least 3 nodes");
    let n = 2 * k;
    let mut edges = Vec::with_capacity(k * (k - 1) + 1);
    for offset in [0, k] {
        for a in 0..k {
            for b in (a + 1)..k {
                edges.push((offset + a, offset + b));
            }
        }
    }
    edges.push((k - 1, k));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= k)).collect();
    let features = DenseMatrix::from_fn(n, 3, |i, j| match j {
        0 => T::lit(if i < k { 1.0 } else { 0.0 }),
        1 => T::lit(if i >= k { 1.0 } else { 0.0 }),
        _ => T::lit(rng.gen::<f64>()),
    });
    Graph::new(n, edges, features, labels, 2).expect("valid construction")
}

/// Erdős–Rényi graph with uniform random features and labels.
pub fn random_graph<T: Scalar>(
    n: usize,
    edge_prob: f64,
    num_features: usize,
    classes: usize,
    seed: u64,
) -> Graph<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen::<f64>() < edge_prob {
                edges.push((a, b));
            }
        }
    }
    let features = DenseMatrix::from_fn(n, num_features, |_, _| {
        if rng.gen::<f64>() < 0.3 {
            T::zero()
        } else {
            T::lit(rng.gen::<f64>())
        }
    });
    let labels = (0..n).map(|_| rng.gen_range(0..classes)).collect();
    Graph::new(n, edges, features, labels, classes).expect("valid construction")
}
