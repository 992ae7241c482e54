"""Builders for the doubly nonnegative relaxation hierarchy and structured
solution extraction.

Four relaxations of the K-means problem are assembled as standard-form cone
programs over a common variable layout (one svec'd symmetric block per PSD
constraint, every equality and sign constraint expressed as a slack row):

  * r2    -- the classical trace relaxation: one N x N block Y with
             tr(Y) = K, Y e = e, Y >= 0, Y PSD.
  * r1    -- two N x N blocks W1, W2 with traces 1 and K-1, joint row sums
             W1 e + W2 e = e, and the symmetry-breaking row e_1^T W1 e = 1.
  * r0bar -- two bordered blocks of order 2N+3 carrying the full linearized
             indicator structure; block 2 aggregates clusters 2..K, so its
             homogenizing entries equal K-1.
  * r0    -- K bordered blocks of order 2N+3, one per cluster, with the
             coupling rows sum_i V_i e = e and optional per-cluster pins
             e_n^T V_i e = 1 (the first data point is always pinned to the
             first cluster).

Each bordered block of order B = 2N+3 is laid out as

    rows/cols [0, N)      normalized indicator part (V / W on the diagonal)
    row/col   N           homogenizing coordinate t
    rows/cols [N+1, 2N+1) slack part (Y / Sigma on the diagonal)
    row/col   2N+1        threshold coordinate w
    row/col   2N+2        rank-one border (copy of column N)

The additive constant tr(X^T X) of every objective is carried in problem
metadata, not in the cost vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import Assignment, DataSet
from .solver.cones import ConeSpec, NonNeg, Psd, SecondOrder, Zero, smat, svec, svec_dim
from .solver.problem import (
    STATUS_MAX_ITERS,
    STATUS_OPTIMAL,
    BlockSpan,
    ConicProblem,
    ConicSolution,
    SymbolSpan,
    VariableMap,
)

__all__ = [
    "build_r0",
    "build_r0bar",
    "build_r1",
    "build_r2",
    "extract",
    "BorderedBlockView",
    "R0Solution",
    "R0BarSolution",
    "R1Solution",
    "R2Solution",
    "assignment_lift_value",
]

_SQRT2 = float(np.sqrt(2.0))


class _Builder:
    """Accumulates svec variable blocks and constraint rows, then assembles a
    ConicProblem with rows ordered Zero | NonNeg | SecondOrder | Psd."""

    def __init__(self):
        self.blocks: list[BlockSpan] = []
        self.symbols: list[SymbolSpan] = []
        self._eq: list[tuple[list[int], list[float], float]] = []
        self._soc: list[list[int]] = []  # coordinate lists, t last
        self._c_chunks: list[tuple[int, np.ndarray]] = []
        self._n = 0

    def add_block(self, name: str, order: int) -> int:
        span = BlockSpan(name, self._n, self._n + svec_dim(order), order)
        self.blocks.append(span)
        self._n += svec_dim(order)
        return len(self.blocks) - 1

    def coord(self, blk: int, i: int, j: int) -> tuple[int, float]:
        """Solver coordinate of entry (i, j) of block ``blk`` and the factor
        turning a coefficient on the matrix entry into one on the coordinate."""
        if i > j:
            i, j = j, i
        return self.blocks[blk].start + j * (j + 1) // 2 + i, (1.0 if i == j else 1.0 / _SQRT2)

    def add_eq(self, terms: list[tuple[int, int, int, float]], rhs: float) -> None:
        """Equality  sum coef * entry(blk, i, j) = rhs."""
        coords: dict[int, float] = {}
        for blk, i, j, coef in terms:
            idx, mult = self.coord(blk, i, j)
            coords[idx] = coords.get(idx, 0.0) + coef * mult
        self._eq.append((list(coords.keys()), list(coords.values()), rhs))

    def add_soc(self, blk: int, entries: list[tuple[int, int]]) -> None:
        self._soc.append([self.coord(blk, i, j)[0] for i, j in entries])

    def add_objective(self, blk: int, top_left: np.ndarray) -> None:
        """Add tr(top_left @ M[:order, :order]) to the objective for a block
        whose leading principal submatrix carries the cost."""
        self._c_chunks.append((self.blocks[blk].start, svec(top_left)))

    def add_symbol(self, name: str, blk: int, rows: tuple[int, int], cols: tuple[int, int]) -> None:
        self.symbols.append(SymbolSpan(name, blk, rows, cols))

    def build(self, metadata: dict) -> ConicProblem:
        n = self._n
        n_eq = len(self._eq)
        rows, cols, vals, b = [], [], [], []
        for r, (cds, cfs, rhs) in enumerate(self._eq):
            rows.extend([r] * len(cds))
            cols.extend(cds)
            vals.extend(cfs)
            b.append(rhs)
        offset = n_eq
        # one nonnegativity slack per distinct entry of every block
        rows.extend(range(offset, offset + n))
        cols.extend(range(n))
        vals.extend([-1.0] * n)
        b.extend([0.0] * n)
        offset += n
        atoms: list = [Zero(n_eq), NonNeg(n)]
        for coords in self._soc:
            rows.extend(range(offset, offset + len(coords)))
            cols.extend(coords)
            # uniform positive rescaling of an SOC atom does not change membership
            vals.extend([-1.0] * len(coords))
            b.extend([0.0] * len(coords))
            offset += len(coords)
            atoms.append(SecondOrder(len(coords)))
        for blk in self.blocks:
            dim = blk.stop - blk.start
            rows.extend(range(offset, offset + dim))
            cols.extend(range(blk.start, blk.stop))
            vals.extend([-1.0] * dim)
            b.extend([0.0] * dim)
            offset += dim
            atoms.append(Psd(blk.order))
        c = np.zeros(n)
        for start, chunk in self._c_chunks:
            c[start : start + chunk.size] += chunk
        A = sp.csc_matrix(
            (np.asarray(vals), (np.asarray(rows), np.asarray(cols))), shape=(offset, n)
        )
        problem = ConicProblem(
            c=c,
            A=A,
            b=np.asarray(b, dtype=np.float64),
            cones=ConeSpec(tuple(atoms)),
            variable_map=VariableMap(tuple(self.blocks), tuple(self.symbols)),
            metadata=metadata,
        )
        problem.validate()
        return problem


def _check_k(ds: DataSet, k: int) -> None:
    if not 1 <= k <= ds.n_points:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={ds.n_points}")


def build_r2(ds: DataSet, k: int) -> ConicProblem:
    """The classical trace relaxation over a single N x N block."""
    _check_k(ds, k)
    n = ds.n_points
    bld = _Builder()
    blk = bld.add_block("Y", n)
    bld.add_symbol("Y", blk, (0, n), (0, n))
    bld.add_objective(blk, -ds.gram)
    bld.add_eq([(blk, p, p, 1.0) for p in range(n)], float(k))
    for p in range(n):
        bld.add_eq([(blk, p, q, 1.0) for q in range(n)], 1.0)
    return bld.build(_metadata("r2", ds, k))


def build_r1(ds: DataSet, k: int) -> ConicProblem:
    """Two-block relaxation with traces 1 / K-1 and the symmetry-breaking row."""
    _check_k(ds, k)
    n = ds.n_points
    bld = _Builder()
    w1 = bld.add_block("W1", n)
    w2 = bld.add_block("W2", n)
    bld.add_symbol("W1", w1, (0, n), (0, n))
    bld.add_symbol("W2", w2, (0, n), (0, n))
    bld.add_objective(w1, -ds.gram)
    bld.add_objective(w2, -ds.gram)
    bld.add_eq([(w1, p, p, 1.0) for p in range(n)], 1.0)
    bld.add_eq([(w2, p, p, 1.0) for p in range(n)], float(k - 1))
    for p in range(n):
        bld.add_eq(
            [(w1, p, q, 1.0) for q in range(n)] + [(w2, p, q, 1.0) for q in range(n)], 1.0
        )
    bld.add_eq([(w1, 0, q, 1.0) for q in range(n)], 1.0)
    return bld.build(_metadata("r1", ds, k))


def _add_bordered_block(bld: _Builder, name: str, n: int, tau: float) -> int:
    """One bordered block of order 2N+3 with homogenizing value ``tau``
    (1 for a per-cluster block, K-1 for the aggregate block): pins the t and
    corner entries, ties the border column to column N, encodes the membership
    cone ||u|| <= t and the linearized indicator identities."""
    B = 2 * n + 3
    t, w_idx, border = n, 2 * n + 1, 2 * n + 2
    blk = bld.add_block(name, B)
    bld.add_eq([(blk, t, t, 1.0)], tau)
    bld.add_eq([(blk, border, border, 1.0)], tau)
    for j in range(border):
        bld.add_eq([(blk, j, border, 1.0), (blk, j, t, -1.0)], 0.0)
    # membership second-order cone on the border copy of (u, t)
    bld.add_soc(blk, [(r, border) for r in range(n)] + [(t, border)])
    for p in range(n):
        sp_ = n + 1 + p
        bld.add_eq([(blk, p, p, 1.0), (blk, p, w_idx, -1.0)], 0.0)  # diag(V) = h
        bld.add_eq([(blk, p, t, 1.0), (blk, sp_, t, 1.0), (blk, t, w_idx, -1.0)], 0.0)  # u + s = w e
        bld.add_eq(
            [
                (blk, p, p, 1.0),
                (blk, sp_, sp_, 1.0),
                (blk, p, sp_, 2.0),
                (blk, w_idx, w_idx, 1.0),
                (blk, p, w_idx, -2.0),
                (blk, sp_, w_idx, -2.0),
            ],
            0.0,
        )  # diag(V + Y + 2G) + z e - 2h - 2r = 0
    _add_block_symbols(bld, name, blk, n)
    return blk


def _add_block_symbols(bld: _Builder, name: str, blk: int, n: int) -> None:
    t, w_idx, border = n, 2 * n + 1, 2 * n + 2
    spans = {
        "V": ((0, n), (0, n)),
        "u": ((0, n), (t, t + 1)),
        "G": ((0, n), (n + 1, 2 * n + 1)),
        "h": ((0, n), (w_idx, w_idx + 1)),
        "s": ((n + 1, 2 * n + 1), (t, t + 1)),
        "Y": ((n + 1, 2 * n + 1), (n + 1, 2 * n + 1)),
        "r": ((n + 1, 2 * n + 1), (w_idx, w_idx + 1)),
        "w": ((t, t + 1), (w_idx, w_idx + 1)),
        "z": ((w_idx, w_idx + 1), (w_idx, w_idx + 1)),
        "border": ((0, border), (border, border + 1)),
    }
    for sym, (r, c) in spans.items():
        bld.add_symbol(f"{name}.{sym}", blk, r, c)


def build_r0bar(ds: DataSet, k: int) -> ConicProblem:
    """Aggregated two-block form of the per-cluster relaxation: block 1 is the
    first cluster, block 2 carries the sum of clusters 2..K (hence trace K-1
    and homogenizing entries K-1)."""
    _check_k(ds, k)
    n = ds.n_points
    bld = _Builder()
    b1 = _add_bordered_block(bld, "block1", n, 1.0)
    b2 = _add_bordered_block(bld, "block2", n, float(k - 1))
    bld.add_objective(b1, -ds.gram)
    bld.add_objective(b2, -ds.gram)
    bld.add_eq([(b1, p, p, 1.0) for p in range(n)], 1.0)
    bld.add_eq([(b2, p, p, 1.0) for p in range(n)], float(k - 1))
    for p in range(n):
        bld.add_eq(
            [(b1, p, q, 1.0) for q in range(n)] + [(b2, p, q, 1.0) for q in range(n)], 1.0
        )
    bld.add_eq([(b1, 0, q, 1.0) for q in range(n)], 1.0)
    return bld.build(_metadata("r0bar", ds, k))


def build_r0(
    ds: DataSet, k: int, pins: list[tuple[int, int]] | tuple[tuple[int, int], ...] = ()
) -> ConicProblem:
    """K bordered blocks, one per cluster, with coupling rows sum_i V_i e = e.

    ``pins`` are additional (cluster, point) equalities e_point^T V_cluster e = 1,
    0-based; the pin (0, 0) assigning the first data point to the first cluster
    is always present and must not be repeated.
    """
    _check_k(ds, k)
    n = ds.n_points
    all_pins = [(0, 0)] + [(int(i), int(p)) for i, p in pins]
    clusters = [i for i, _ in all_pins]
    points = [p for _, p in all_pins]
    if len(set(clusters)) != len(clusters) or len(set(points)) != len(points):
        raise ValueError(f"pins must be pairwise distinct in clusters and points, got {all_pins}")
    for i, p in all_pins:
        if not (0 <= i < k and 0 <= p < n):
            raise ValueError(f"pin ({i}, {p}) out of range for k={k}, N={n}")
    bld = _Builder()
    blks = [_add_bordered_block(bld, f"cluster{i}", n, 1.0) for i in range(k)]
    for blk in blks:
        bld.add_objective(blk, -ds.gram)
        bld.add_eq([(blk, p, p, 1.0) for p in range(n)], 1.0)
    for p in range(n):
        bld.add_eq([(blk, p, q, 1.0) for blk in blks for q in range(n)], 1.0)
    for i, p in all_pins:
        bld.add_eq([(blks[i], p, q, 1.0) for q in range(n)], 1.0)
    meta = _metadata("r0", ds, k)
    meta["pins"] = [list(pin) for pin in all_pins]
    return bld.build(meta)


def _metadata(formulation: str, ds: DataSet, k: int) -> dict:
    return {
        "formulation": formulation,
        "n": ds.n_points,
        "k": k,
        "objective_constant": float(np.trace(ds.gram)),
    }


# ---------------------------------------------------------------------------
# structured extraction


@dataclass(frozen=True)
class BorderedBlockView:
    """Named views into one bordered block of order 2N+3."""

    M: np.ndarray
    n: int

    @property
    def V(self) -> np.ndarray:
        return self.M[: self.n, : self.n]

    @property
    def u(self) -> np.ndarray:
        return self.M[: self.n, self.n]

    @property
    def G(self) -> np.ndarray:
        return self.M[: self.n, self.n + 1 : 2 * self.n + 1]

    @property
    def h(self) -> np.ndarray:
        return self.M[: self.n, 2 * self.n + 1]

    @property
    def s(self) -> np.ndarray:
        return self.M[self.n + 1 : 2 * self.n + 1, self.n]

    @property
    def Y(self) -> np.ndarray:
        return self.M[self.n + 1 : 2 * self.n + 1, self.n + 1 : 2 * self.n + 1]

    @property
    def r(self) -> np.ndarray:
        return self.M[self.n + 1 : 2 * self.n + 1, 2 * self.n + 1]

    @property
    def w(self) -> float:
        return float(self.M[self.n, 2 * self.n + 1])

    @property
    def z(self) -> float:
        return float(self.M[2 * self.n + 1, 2 * self.n + 1])

    @property
    def border(self) -> np.ndarray:
        return self.M[: 2 * self.n + 2, 2 * self.n + 2]


@dataclass(frozen=True)
class R2Solution:
    Y: np.ndarray
    value: float
    report: dict


@dataclass(frozen=True)
class R1Solution:
    W1: np.ndarray
    W2: np.ndarray
    value: float
    report: dict


@dataclass(frozen=True)
class R0BarSolution:
    blocks: tuple[BorderedBlockView, BorderedBlockView]
    value: float
    report: dict

    @property
    def W1(self) -> np.ndarray:
        return self.blocks[0].V

    @property
    def W2(self) -> np.ndarray:
        return self.blocks[1].V


@dataclass(frozen=True)
class R0Solution:
    blocks: tuple[BorderedBlockView, ...]
    value: float
    report: dict

    @property
    def V(self) -> list[np.ndarray]:
        return [blk.V for blk in self.blocks]

    def assignment_estimates(self) -> np.ndarray:
        """The k x N matrix of estimates pi_i = V_i e."""
        return np.vstack([blk.V.sum(axis=1) for blk in self.blocks])


def _eig_min(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((mat + mat.T) / 2.0)[0])


def _bordered_report(view: BorderedBlockView, trace_target: float, tau: float) -> dict:
    n = view.n
    rep = {
        "trace": abs(float(np.trace(view.V)) - trace_target),
        "diag_h": float(np.abs(np.diag(view.V) - view.h).max()),
        "threshold": float(np.abs(view.u + view.s - view.w).max()),
        "diag_system": float(
            np.abs(
                np.diag(view.V) + np.diag(view.Y) + 2 * np.diag(view.G) + view.z - 2 * view.h - 2 * view.r
            ).max()
        ),
        "homogenizing": abs(float(view.M[n, n]) - tau),
        "corner": abs(float(view.M[2 * n + 2, 2 * n + 2]) - tau),
        "border_tie": float(np.abs(view.border - view.M[: 2 * n + 2, n]).max()),
        "soc": max(float(np.linalg.norm(view.u) - view.M[n, 2 * n + 2]), 0.0),
        "nonneg": max(0.0, -float(view.M.min())),
        "psd": max(0.0, -_eig_min(view.M)),
    }
    return rep


def extract(
    problem: ConicProblem, sol: ConicSolution
) -> R0Solution | R0BarSolution | R1Solution | R2Solution:
    """Structured view of a solver solution; constraint violations are measured
    and reported, never clipped."""
    if sol.status not in (STATUS_OPTIMAL, STATUS_MAX_ITERS):
        raise ValueError(f"cannot extract from a solve with status {sol.status!r}")
    if sol.x.size != problem.n:
        raise ValueError(
            f"solution has {sol.x.size} coordinates, problem variable map covers {problem.n}"
        )
    form = problem.metadata.get("formulation")
    n = problem.metadata["n"]
    k = problem.metadata["k"]
    mats = [
        smat(sol.x[blk.start : blk.stop], blk.order) for blk in problem.variable_map.blocks
    ]
    value = problem.objective_value(sol.x)
    if form == "r2":
        Y = mats[0]
        report = {
            "trace": abs(float(np.trace(Y)) - k),
            "row_sums": float(np.abs(Y.sum(axis=1) - 1.0).max()),
            "nonneg": max(0.0, -float(Y.min())),
            "psd": max(0.0, -_eig_min(Y)),
        }
        return R2Solution(Y=Y, value=value, report=report)
    if form == "r1":
        W1, W2 = mats
        report = {
            "trace_1": abs(float(np.trace(W1)) - 1.0),
            "trace_2": abs(float(np.trace(W2)) - (k - 1.0)),
            "row_sums": float(np.abs(W1.sum(axis=1) + W2.sum(axis=1) - 1.0).max()),
            "first_point": abs(float(W1[0].sum()) - 1.0),
            "nonneg": max(0.0, -min(float(W1.min()), float(W2.min()))),
            "psd": max(0.0, -min(_eig_min(W1), _eig_min(W2))),
        }
        return R1Solution(W1=W1, W2=W2, value=value, report=report)
    if form == "r0bar":
        views = (BorderedBlockView(mats[0], n), BorderedBlockView(mats[1], n))
        report = {
            "block1": _bordered_report(views[0], 1.0, 1.0),
            "block2": _bordered_report(views[1], k - 1.0, k - 1.0),
            "row_sums": float(np.abs(views[0].V.sum(axis=1) + views[1].V.sum(axis=1) - 1.0).max()),
            "first_point": abs(float(views[0].V[0].sum()) - 1.0),
        }
        return R0BarSolution(blocks=views, value=value, report=report)
    if form == "r0":
        views = tuple(BorderedBlockView(mat, n) for mat in mats)
        coupling = np.abs(sum(v.V.sum(axis=1) for v in views) - 1.0).max()
        report = {
            f"cluster{i}": _bordered_report(v, 1.0, 1.0) for i, v in enumerate(views)
        }
        report["coupling"] = float(coupling)
        report["pins"] = float(
            max(
                abs(views[i].V[p].sum() - 1.0)
                for i, p in problem.metadata.get("pins", [[0, 0]])
            )
        )
        return R0Solution(blocks=views, value=value, report=report)
    raise ValueError(f"unknown formulation {form!r} in problem metadata")


def assignment_lift_value(ds: DataSet, a: Assignment) -> float:
    """Objective value of the block-constant lift of an assignment under the
    trace relaxation; equals the K-means objective of the assignment."""
    from .model import partition_matrix

    Y = partition_matrix(a)
    return float(np.trace(ds.gram) - np.sum(ds.gram * Y))
