"""Exact K-means by exhaustive enumeration of set partitions.

Partitions of [N] into exactly k nonempty blocks are enumerated as restricted
growth strings in lexicographic order, grown one position at a time with
dead-prefix pruning, and scored in vectorized batches. Ties go to the first
partition found, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Assignment, DataSet, kmeans_objective

__all__ = ["OracleResult", "stirling2", "solve_exact"]

DEFAULT_PARTITION_LIMIT = 5_000_000
_EVAL_CHUNK = 65_536


@dataclass(frozen=True)
class OracleResult:
    best: Assignment
    zstar: float
    partitions_evaluated: int


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k), exactly."""
    if k < 0 or n < 0:
        raise ValueError("n and k must be nonnegative")
    if k == 0:
        return 1 if n == 0 else 0
    if k > n:
        return 0
    prev = [1] + [0] * k  # row for n=0 over j=0..k
    for i in range(1, n + 1):
        cur = [0] * (k + 1)
        for j in range(1, min(i, k) + 1):
            cur[j] = j * prev[j] + prev[j - 1]
        prev = cur
    return prev[k]


def _enumerate_rgs(n: int, k: int) -> np.ndarray:
    """All length-n restricted growth strings with exactly k blocks, as an
    (S(n,k), n) int8 matrix in lexicographic order."""
    labels = np.zeros((1, 1), dtype=np.int8)
    maxes = np.zeros(1, dtype=np.int8)
    for pos in range(1, n):
        nopts = np.minimum(maxes + 1, k - 1) + 1
        total = int(nopts.sum())
        rows = np.repeat(np.arange(labels.shape[0]), nopts)
        new_label = (np.arange(total) - np.repeat(np.cumsum(nopts) - nopts, nopts)).astype(np.int8)
        grown = np.empty((total, pos + 1), dtype=np.int8)
        grown[:, :pos] = labels[rows]
        grown[:, pos] = new_label
        maxes = np.maximum(maxes[rows], new_label)
        # prune prefixes that cannot reach k blocks with the positions left
        keep = (maxes.astype(np.int64) + (n - pos - 1)) >= (k - 1)
        labels, maxes = grown[keep], maxes[keep]
    return labels[maxes == (k - 1)]


def solve_exact(ds: DataSet, k: int, limit: int = DEFAULT_PARTITION_LIMIT) -> OracleResult:
    """Globally optimal K-means assignment for small instances.

    Rejects up front when the partition count S(N, k) exceeds ``limit`` so
    callers fail fast instead of hanging.
    """
    n = ds.n_points
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={n}")
    count = stirling2(n, k)
    if count > limit:
        raise ValueError(
            f"S({n}, {k}) = {count} partitions exceeds the limit of {limit}; "
            "raise `limit` explicitly to enumerate anyway"
        )
    labels = _enumerate_rgs(n, k)
    assert labels.shape[0] == count

    X = ds.points
    total_sq = float(np.trace(ds.gram))
    eye = np.eye(k)
    best_val = np.inf
    best_row = -1
    for lo in range(0, labels.shape[0], _EVAL_CHUNK):
        chunk = labels[lo : lo + _EVAL_CHUNK]
        onehot = eye[chunk]  # (m, n, k)
        counts = onehot.sum(axis=1)
        sums = np.einsum("dn,mnk->mdk", X, onehot)
        vals = total_sq - ((sums * sums).sum(axis=1) / counts).sum(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_row = lo + i
    best = Assignment(labels[best_row].astype(np.int64), k)
    # re-evaluate through the shared objective so zstar matches it exactly
    return OracleResult(best=best, zstar=kmeans_objective(ds, best), partitions_evaluated=int(count))
