#!/usr/bin/env python3
"""Convert Planetoid files (ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index})
into <name>.content / <name>.cites.

Nodes are written in Planetoid index order, so `--split standard` selects
the usual 20-per-class training nodes, the next 500 for validation and the
1000 test nodes. Citeseer's featureless padding nodes (test indices missing
from the raw files) are dropped.

usage: planetoid_to_content_cites.py <raw-dir> <name> <out-dir>
"""

import os
import pickle
import sys

import numpy as np
import scipy.sparse as sp


def load(raw, name, part):
    with open(os.path.join(raw, f"ind.{name}.{part}"), "rb") as f:
        return pickle.load(f, encoding="latin1")


def main(raw, name, out):
    x, y, tx, ty, allx, ally, graph = (
        load(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph")
    )
    with open(os.path.join(raw, f"ind.{name}.test.index")) as f:
        test_index = [int(line) for line in f if line.strip()]
    order = np.sort(test_index)

    features = sp.vstack((allx, tx)).tolil()
    labels = np.vstack((ally, ty))
    n_total = max(len(graph), order[-1] + 1)
    present = np.zeros(n_total, dtype=bool)
    present[: allx.shape[0]] = True
    present[order] = True

    full_x = sp.lil_matrix((n_total, features.shape[1]))
    full_y = np.zeros((n_total, labels.shape[1]))
    full_x[: allx.shape[0]] = features[: allx.shape[0]]
    full_y[: allx.shape[0]] = labels[: allx.shape[0]]
    # tx row k belongs to node test_index[k]
    full_x[test_index] = features[allx.shape[0]:]
    full_y[test_index] = labels[allx.shape[0]:]
    full_x = full_x.tocsr()

    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, f"{name}.content"), "w") as f:
        for i in range(n_total):
            if not present[i]:
                continue
            row = full_x[i].toarray().ravel()
            feats = "\t".join(f"{v:g}" for v in row)
            f.write(f"{i}\t{feats}\tc{int(full_y[i].argmax())}\n")
    edges = {
        (min(i, j), max(i, j))
        for i, nbrs in graph.items()
        for j in nbrs
        if i != j and present[i] and present[j]
    }
    with open(os.path.join(out, f"{name}.cites"), "w") as f:
        for i, j in sorted(edges):
            f.write(f"{i}\t{j}\n")


if __name__ == "__main__":
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    main(*sys.argv[1:])
