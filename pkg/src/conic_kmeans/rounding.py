"""Turning relaxation solutions into cluster assignments.

Three routes:
  * the iterative symmetry-breaking scheme on the per-cluster relaxation
    (solve, pin the best unassigned point for cluster k, re-solve; finish with
    one Lloyd step),
  * a detector for exact-recovery solutions of the trace relaxation (block
    form Y = sum_i pi_i pi_i^T / |P_i|),
  * the denoising baseline: cluster the columns of X Y and assign each
    original point to its nearest denoised centroid.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .formulations import R0Solution, R2Solution, build_r0, build_r2, extract
from .model import Assignment, DataSet, _repair_empty, lloyd_step
from .solver.admm import SolverConfig, solve
from .solver.problem import STATUS_OPTIMAL

__all__ = [
    "RoundingTrace",
    "algorithm1",
    "detect_partition_matrix",
    "detect_exact_recovery",
    "denoise_round",
    "DEFAULT_RECOVERY_TOL",
]

DEFAULT_RECOVERY_TOL = 1e-3


@dataclass
class RoundingTrace:
    """Everything the iterative rounding run produced, for audits and benchmarks."""

    k: int
    pins: list[tuple[int, int]] = field(default_factory=list)  # (cluster, point), 0-based
    values: list[float] = field(default_factory=list)  # relaxation value per solve
    statuses: list[str] = field(default_factory=list)
    assignment_estimates: list[np.ndarray] = field(default_factory=list)  # k x N per solve
    pre_lloyd_labels: np.ndarray | None = None
    final_labels: np.ndarray | None = None
    solve_seconds: list[float] = field(default_factory=list)
    inexact: bool = False  # any solve stopped at the iteration cap

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "pins": [list(p) for p in self.pins],
                "values": self.values,
                "statuses": self.statuses,
                "assignment_estimates": [est.tolist() for est in self.assignment_estimates],
                "pre_lloyd_labels": None
                if self.pre_lloyd_labels is None
                else self.pre_lloyd_labels.tolist(),
                "final_labels": None if self.final_labels is None else self.final_labels.tolist(),
                "solve_seconds": self.solve_seconds,
                "inexact": self.inexact,
            }
        )


def algorithm1(
    ds: DataSet, k: int, cfg: SolverConfig | None = None
) -> tuple[Assignment, RoundingTrace]:
    """Iterative symmetry-breaking rounding on the per-cluster relaxation.

    Runs K solves in total: the initial one, then one per cluster 2..K after
    pinning that cluster's best unassigned point (the point maximizing
    e_n^T V_k e among points that are neither point 0 nor already pinned,
    ties to the smallest index). Each data point then joins the cluster
    maximizing e_n^T V_k e, and a single Lloyd step finishes.

    A solve that stops at the iteration cap is used as-is but flags the trace.
    """
    cfg = cfg or SolverConfig()
    n = ds.n_points
    trace = RoundingTrace(k=k)
    if k == 1:
        labels = np.zeros(n, dtype=np.int64)
        trace.pre_lloyd_labels = labels
        trace.final_labels = labels
        return Assignment(labels, 1), trace

    def solve_with(pins: list[tuple[int, int]]) -> R0Solution:
        problem = build_r0(ds, k, pins)
        t0 = time.perf_counter()
        sol = solve(problem, cfg)
        trace.solve_seconds.append(time.perf_counter() - t0)
        trace.statuses.append(sol.status)
        if sol.status != STATUS_OPTIMAL:
            trace.inexact = True
        extracted = extract(problem, sol)
        trace.values.append(extracted.value)
        trace.assignment_estimates.append(extracted.assignment_estimates())
        return extracted

    extracted = solve_with([])
    pins: list[tuple[int, int]] = []
    for cluster in range(1, k):
        weights = extracted.blocks[cluster].V.sum(axis=1)
        blocked = {0} | {p for _, p in pins}
        candidates = np.array([p for p in range(n) if p not in blocked])
        pin_point = int(candidates[np.argmax(weights[candidates])])
        pins.append((cluster, pin_point))
        trace.pins.append((cluster, pin_point))
        extracted = solve_with(pins)

    estimates = extracted.assignment_estimates()  # k x N
    labels = np.argmax(estimates, axis=0)
    labels = _repair_empty(ds.points, labels, k)
    pre = Assignment(labels, k)
    trace.pre_lloyd_labels = pre.labels
    final = lloyd_step(ds, pre)
    trace.final_labels = final.labels
    return final, trace


def detect_partition_matrix(Y: np.ndarray, tol: float = DEFAULT_RECOVERY_TOL) -> Assignment | None:
    """Recover an assignment from a matrix of the block-constant form
    sum_i pi_i pi_i^T / |P_i|, entrywise within ``tol``; None otherwise.

    Blocks are found by thresholding each unassigned row at half its diagonal
    value, then the block-form reconstruction is verified entrywise.
    """
    n = Y.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    k = 0
    for p in range(n):
        if labels[p] >= 0:
            continue
        mag = Y[p, p]
        if mag <= tol:
            return None
        members = np.flatnonzero(Y[p] > mag / 2.0)
        if p not in members or (labels[members] >= 0).any():
            return None
        labels[members] = k
        k += 1
    counts = np.bincount(labels, minlength=k)
    recon = np.zeros_like(Y)
    for i in range(k):
        idx = labels == i
        recon[np.ix_(idx, idx)] = 1.0 / counts[i]
    if np.abs(Y - recon).max() > tol:
        return None
    return Assignment(labels, k)


def detect_exact_recovery(y: R2Solution, tol: float = DEFAULT_RECOVERY_TOL) -> Assignment | None:
    """Exact-recovery detector for trace-relaxation solutions."""
    return detect_partition_matrix(y.Y, tol)


def denoise_round(ds: DataSet, y: R2Solution, k: int, seed: int) -> Assignment:
    """Denoising baseline: cluster the denoised points (columns of X Y) with
    seeded Lloyd, then assign each original point to its nearest denoised
    centroid."""
    from .model import centroids_of, lloyd_full, load_dataset

    denoised = load_dataset(ds.points @ y.Y)
    denoised_assignment = lloyd_full(denoised, k, seed)
    centers = centroids_of(denoised, denoised_assignment)
    pn = np.sum(ds.points * ds.points, axis=0)
    cn = np.sum(centers * centers, axis=0)
    d2 = pn[:, None] + cn[None, :] - 2.0 * (ds.points.T @ centers)
    labels = _repair_empty(ds.points, np.argmin(d2, axis=1), k)
    return Assignment(labels, k)
