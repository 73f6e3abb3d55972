#!/usr/bin/env python3
"""Convert public ACM and IMDB releases into graf dataset directories.

acm:  ACM3025.mat as distributed with the HAN code (keys PAP, PLP, feature,
      label, train_idx, val_idx, test_idx). PLP is the paper-subject-paper
      relation and is written as PSP.
imdb: the preprocessed IMDB folder distributed with the MAGNN code
      (adjM.npz, node_types.npy, features_0.npz, labels.npy,
      train_val_test_idx.npz). Node types 0, 1, 2 are movies, directors, actors.
"""

import argparse
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp


def write_common(out, features, labels, splits, networks):
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "features.csv", np.asarray(features, dtype=float), delimiter=",", fmt="%.6g")
    with open(out / "labels.tsv", "w") as f:
        for i, y in enumerate(labels):
            f.write(f"{i}\t{int(y)}\n")
    for name, ids in zip(("train", "val", "test"), splits):
        np.savetxt(out / f"split_{name}.txt", np.sort(np.asarray(ids, dtype=int).ravel()), fmt="%d")
    entries = []
    for name, adj in networks:
        coo = sp.triu(sp.coo_matrix(adj), k=1).tocoo()
        np.savetxt(out / f"assoc_{name}.tsv", np.column_stack([coo.row, coo.col]), fmt="%d", delimiter="\t")
        entries.append({"name": name, "edges": f"assoc_{name}.tsv"})
    (out / "meta_paths.json").write_text(json.dumps(entries, indent=2) + "\n")


def dense(x):
    return x.toarray() if sp.issparse(x) else np.asarray(x)


def acm(src, out):
    m = scipy.io.loadmat(src)
    labels = dense(m["label"]).argmax(axis=1)
    splits = [m[k].ravel() for k in ("train_idx", "val_idx", "test_idx")]
    networks = [("PAP", sp.csr_matrix(m["PAP"])), ("PSP", sp.csr_matrix(m["PLP"]))]
    write_common(out, dense(m["feature"]), labels, splits, networks)


def imdb(src, out):
    adj = sp.load_npz(src / "adjM.npz").tocsr()
    types = np.load(src / "node_types.npy")
    features = dense(sp.load_npz(src / "features_0.npz"))
    labels = np.load(src / "labels.npy")
    idx = np.load(src / "train_val_test_idx.npz")
    movies, directors, actors = (np.flatnonzero(types == t) for t in (0, 1, 2))
    m_d = (adj[movies][:, directors] > 0).astype(np.int64)
    m_a = (adj[movies][:, actors] > 0).astype(np.int64)
    networks = [("MDM", m_d @ m_d.T), ("MRM", m_a @ m_a.T)]
    splits = [idx["train_idx"], idx["val_idx"], idx["test_idx"]]
    write_common(out, features, labels, splits, networks)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("dataset", choices=["acm", "imdb"])
    p.add_argument("source", type=Path, help="ACM3025.mat, or the MAGNN IMDB folder")
    p.add_argument("out", type=Path)
    a = p.parse_args()
    (acm if a.dataset == "acm" else imdb)(a.source, a.out)


if __name__ == "__main__":
    main()
