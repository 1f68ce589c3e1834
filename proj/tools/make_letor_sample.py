#!/usr/bin/env python3
"""Write a synthetic 200-query ranking sample in the MSLR-WEB30K text layout.

Each line is `<rel> qid:<id> 1:<v> ... 136:<v>`. A hidden per-document quality
drives both the graded relevance (0..4, skewed toward 0) and a block of
informative features on mixed scales. Some columns are constant so the
ingest filter has something to drop.

    python3 tools/make_letor_sample.py data/web30k_sample.txt.gz
"""

import argparse
import gzip
import io

import numpy as np

NUM_FEATURES = 136
CONSTANT_COLUMNS = {1: 0.0, 2: 0.0, 3: 1.0, 41: 0.0, 42: 3.0, 96: 0.0, 97: 0.0, 136: 1.0}
# Cut points on the latent quality; yields roughly 45/30/15/7/3 percent.
RELEVANCE_CUTS = np.array([-0.1, 0.75, 1.45, 2.1])


def format_value(v):
    if v == int(v):
        return str(int(v))
    return f"{v:.6g}"


def make_query(rng, loadings, scales, kinds, num_docs):
    quality = rng.normal(size=num_docs) + 0.4 * rng.normal()
    noisy = quality + 0.35 * rng.normal(size=num_docs)
    relevance = np.searchsorted(RELEVANCE_CUTS, noisy)

    latent = np.outer(quality, loadings) + rng.normal(size=(num_docs, NUM_FEATURES))
    features = np.empty_like(latent)
    for j in range(NUM_FEATURES):
        if kinds[j] == "count":
            features[:, j] = np.floor(np.exp(0.6 * latent[:, j]) * scales[j])
        elif kinds[j] == "ratio":
            features[:, j] = 1.0 / (1.0 + np.exp(-latent[:, j]))
        else:
            features[:, j] = np.maximum(0.0, latent[:, j] + 2.0) * scales[j]
    for col, value in CONSTANT_COLUMNS.items():
        features[:, col - 1] = value
    return relevance, features


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("output")
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--seed", type=int, default=20240611)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    loadings = np.zeros(NUM_FEATURES)
    informative = rng.choice(NUM_FEATURES, size=48, replace=False)
    loadings[informative] = rng.uniform(0.8, 2.0, size=informative.size)
    kinds = rng.choice(["count", "ratio", "score"], size=NUM_FEATURES, p=[0.4, 0.2, 0.4])
    scales = 10.0 ** rng.uniform(-1, 3, size=NUM_FEATURES)

    if args.output.endswith(".gz"):
        # mtime=0 keeps the archive byte-identical across runs.
        out = io.TextIOWrapper(gzip.GzipFile(args.output, "wb", mtime=0))
    else:
        out = open(args.output, "w")
    with out:
        for q in range(args.queries):
            qid = 1000 + 7 * q
            num_docs = int(rng.integers(30, 51))
            relevance, features = make_query(rng, loadings, scales, kinds, num_docs)
            for rel, row in zip(relevance, features):
                cols = " ".join(f"{j + 1}:{format_value(v)}" for j, v in enumerate(row))
                out.write(f"{rel} qid:{qid} {cols}\n")


if __name__ == "__main__":
    main()
