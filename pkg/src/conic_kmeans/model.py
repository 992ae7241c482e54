"""Core data model: datasets, cluster assignments, the K-means objective in its
equivalent forms, the normalized-indicator (Stiefel) correspondence, and Lloyd
iterations.

Conventions used throughout the package:
  * data matrices are D x N (one column per point),
  * cluster labels are 0-based integers in [0, k),
  * all randomness flows through explicit integer seeds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataSet",
    "Assignment",
    "StiefelFactor",
    "load_dataset",
    "load_dataset_csv",
    "save_dataset_csv",
    "kmeans_objective",
    "kmeans_objective_direct",
    "centroids_of",
    "partition_matrix",
    "assignment_to_stiefel",
    "stiefel_to_assignment",
    "lloyd_step",
    "lloyd_full",
]

LLOYD_MAX_ITERS = 300


@dataclass(frozen=True)
class DataSet:
    """A D x N point matrix with its Gram and squared-distance matrices.

    ``gram`` is X^T X and ``sqdist`` holds ||x_p - x_q||^2; both are computed
    once at load time and satisfy sqdist[p, q] = gram[p, p] + gram[q, q]
    - 2 gram[p, q].
    """

    points: np.ndarray
    gram: np.ndarray = field(repr=False)
    sqdist: np.ndarray = field(repr=False)

    @property
    def n_features(self) -> int:
        return self.points.shape[0]

    @property
    def n_points(self) -> int:
        return self.points.shape[1]


def load_dataset(points: np.ndarray) -> DataSet:
    """Build a DataSet from a D x N matrix, rejecting non-finite entries."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"points must be a D x N matrix with D, N >= 1, got shape {pts.shape}")
    bad = np.argwhere(~np.isfinite(pts))
    if bad.size:
        d, n = bad[0]
        raise ValueError(f"non-finite entry at feature {d}, point {n}: {pts[d, n]!r}")
    gram = pts.T @ pts
    gram = (gram + gram.T) / 2.0
    diag = np.diag(gram)
    sqdist = diag[:, None] + diag[None, :] - 2.0 * gram
    np.maximum(sqdist, 0.0, out=sqdist)
    np.fill_diagonal(sqdist, 0.0)
    for arr in (pts, gram, sqdist):
        arr.setflags(write=False)
    return DataSet(points=pts, gram=gram, sqdist=sqdist)


def load_dataset_csv(path) -> DataSet:
    """Read a headerless CSV with one data point per row and transpose it to
    the internal D x N layout."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno + 1}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: rows have inconsistent column counts")
    return load_dataset(np.asarray(rows, dtype=np.float64).T)


def save_dataset_csv(ds: DataSet, path) -> None:
    """Write one data point per row (the inverse of load_dataset_csv)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for col in ds.points.T:
            writer.writerow([f"{v:.17g}" for v in col])


@dataclass(frozen=True)
class Assignment:
    """A partition of [N] into k nonempty clusters, as 0-based labels."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size < 1:
            raise ValueError("labels must be a nonempty 1-d integer vector")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if labels.min() < 0 or labels.max() >= self.k:
            raise ValueError(f"labels must lie in [0, {self.k})")
        counts = np.bincount(labels, minlength=self.k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValueError(f"cluster {empty[0]} is empty; every cluster needs >= 1 point")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n_points(self) -> int:
        return self.labels.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def indicator(self) -> np.ndarray:
        """The N x k binary matrix whose columns are the cluster vectors."""
        pi = np.zeros((self.labels.size, self.k))
        pi[np.arange(self.labels.size), self.labels] = 1.0
        return pi


def _check_compatible(ds: DataSet, a: Assignment) -> None:
    if a.n_points != ds.n_points:
        raise ValueError(f"assignment covers {a.n_points} points, dataset has {ds.n_points}")


def kmeans_objective(ds: DataSet, a: Assignment) -> float:
    """Within-cluster sum of squares, computed in the Gram form
    tr(X^T X) - sum_i pi_i^T (X^T X) pi_i / |P_i|."""
    _check_compatible(ds, a)
    pi = a.indicator()
    counts = a.counts().astype(np.float64)
    quad = np.einsum("ni,nm,mi->i", pi, ds.gram, pi)
    return float(np.trace(ds.gram) - np.sum(quad / counts))


def kmeans_objective_direct(ds: DataSet, a: Assignment) -> float:
    """Same objective evaluated directly as sum_i sum_{n in P_i} ||x_n - c_i||^2."""
    _check_compatible(ds, a)
    cents = centroids_of(ds, a)
    diffs = ds.points - cents[:, a.labels]
    return float(np.sum(diffs * diffs))


def centroids_of(ds: DataSet, a: Assignment) -> np.ndarray:
    """Cluster means as a D x k matrix."""
    _check_compatible(ds, a)
    pi = a.indicator()
    return (ds.points @ pi) / a.counts()


def partition_matrix(a: Assignment) -> np.ndarray:
    """The N x N block-constant lift Y = sum_i pi_i pi_i^T / |P_i|."""
    pi = a.indicator()
    return (pi / a.counts()) @ pi.T


@dataclass(frozen=True)
class StiefelFactor:
    """Nonnegative N x k matrix U with orthonormal columns, the normalized
    cluster indicators u_i = pi_i / sqrt(|P_i|)."""

    u: np.ndarray

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        if u.ndim != 2:
            raise ValueError("u must be an N x k matrix")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def k(self) -> int:
        return self.u.shape[1]

    def validate(self, tol: float = 1e-6) -> None:
        """Reject factors violating nonnegativity, orthonormality, or the row
        sum condition sum_i u_i u_i^T e = e beyond ``tol``."""
        u = self.u
        if u.min() < -tol:
            raise ValueError(f"negative entry {u.min():.3e} violates nonnegativity")
        gram = u.T @ u
        ortho = np.abs(gram - np.eye(self.k)).max()
        if ortho > tol:
            raise ValueError(f"columns not orthonormal: max |U^T U - I| = {ortho:.3e}")
        rowsum = u @ (u.T @ np.ones(u.shape[0]))
        rs = np.abs(rowsum - 1.0).max()
        if rs > tol:
            raise ValueError(f"row-sum condition violated: max |UU^T e - e| = {rs:.3e}")


def assignment_to_stiefel(a: Assignment) -> StiefelFactor:
    """u_i = pi_i / sqrt(|P_i|)."""
    pi = a.indicator()
    return StiefelFactor(pi / np.sqrt(a.counts()))


def stiefel_to_assignment(u: StiefelFactor, tol: float = 1e-6) -> Assignment:
    """Recover the partition via pi_i = u_i u_i^T e; inverse of
    assignment_to_stiefel up to cluster relabeling."""
    u.validate(tol)
    mat = u.u
    pi = mat * (mat.T @ np.ones(mat.shape[0]))[None, :]
    labels = np.argmax(pi, axis=1)
    peak = pi[np.arange(mat.shape[0]), labels]
    if np.abs(peak - 1.0).max() > max(tol * mat.shape[0], tol):
        raise ValueError(
            f"indicator entries not binary: max |pi - 1| at assigned entries = "
            f"{np.abs(peak - 1.0).max():.3e}"
        )
    return Assignment(labels, u.k)


def _nearest_labels(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels; ties resolve to the smallest cluster index."""
    pn = np.sum(points * points, axis=0)
    cn = np.sum(centers * centers, axis=0)
    d2 = pn[:, None] + cn[None, :] - 2.0 * (points.T @ centers)
    return np.argmin(d2, axis=1)


def _repair_empty(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Fill each empty cluster with the point farthest from its own centroid,
    taken from a cluster that keeps at least one member. Never increases the
    objective: the moved point becomes a zero-cost singleton."""
    labels = labels.copy()
    for cluster in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[cluster] > 0:
            continue
        sums = np.zeros((k, points.shape[0]))
        np.add.at(sums, labels, points.T)
        cents = (sums / np.maximum(counts, 1)[:, None]).T
        dist = np.sum((points - cents[:, labels]) ** 2, axis=0)
        dist[counts[labels] < 2] = -np.inf
        donor = int(np.argmax(dist))
        if not np.isfinite(dist[donor]):
            raise ValueError(f"cannot repair empty cluster {cluster}: no donor cluster with >= 2 points")
        labels[donor] = cluster
    return labels


def lloyd_step(ds: DataSet, a: Assignment) -> Assignment:
    """One Lloyd iteration: recompute centroids, reassign each point to its
    nearest centroid (ties to the smallest index), repair empty clusters."""
    _check_compatible(ds, a)
    labels = _nearest_labels(ds.points, centroids_of(ds, a))
    return Assignment(_repair_empty(ds.points, labels, a.k), a.k)


def lloyd_full(ds: DataSet, k: int, seed: int, max_iters: int = LLOYD_MAX_ITERS) -> Assignment:
    """Lloyd's algorithm from a seeded initialization (k distinct data points
    drawn uniformly as initial centroids), run until the assignment is stable
    or ``max_iters`` steps."""
    if not 1 <= k <= ds.n_points:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={ds.n_points}")
    rng = np.random.default_rng(seed)
    centers = ds.points[:, rng.choice(ds.n_points, size=k, replace=False)]
    labels = _repair_empty(ds.points, _nearest_labels(ds.points, centers), k)
    a = Assignment(labels, k)
    for _ in range(max_iters):
        nxt = lloyd_step(ds, a)
        if np.array_equal(nxt.labels, a.labels):
            return nxt
        a = nxt
    return a
