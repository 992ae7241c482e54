"""Cone atoms, symmetric vectorization, and Euclidean cone projections.

PSD blocks live in scaled symmetric vectorization (svec): the upper triangle
in column-major order with off-diagonal entries multiplied by sqrt(2), so that
inner products of svec vectors equal trace inner products of the matrices.
Coordinate (i, j) with i <= j sits at index j*(j+1)/2 + i.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Zero",
    "NonNeg",
    "SecondOrder",
    "Psd",
    "ConeSpec",
    "svec_dim",
    "svec_index",
    "svec",
    "smat",
    "project_nonneg",
    "project_soc",
    "project_psd",
    "ConeProjector",
]

SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class Zero:
    dim: int


@dataclass(frozen=True)
class NonNeg:
    dim: int


@dataclass(frozen=True)
class SecondOrder:
    dim: int  # (x, t) with t last; dim >= 2


@dataclass(frozen=True)
class Psd:
    order: int  # matrix side length n; spans n(n+1)/2 svec coordinates

    @property
    def dim(self) -> int:
        return self.order * (self.order + 1) // 2


ConeAtom = Zero | NonNeg | SecondOrder | Psd


@dataclass(frozen=True)
class ConeSpec:
    """Ordered product of cone atoms governing a slack vector."""

    atoms: tuple[ConeAtom, ...]

    def __post_init__(self):
        for atom in self.atoms:
            if isinstance(atom, Psd):
                if atom.order < 1:
                    raise ValueError(f"Psd order must be >= 1, got {atom.order}")
            elif isinstance(atom, SecondOrder):
                if atom.dim < 2:
                    raise ValueError(f"SecondOrder dim must be >= 2, got {atom.dim}")
            elif atom.dim < 1:
                raise ValueError(f"{type(atom).__name__} dim must be >= 1, got {atom.dim}")

    @property
    def total_dim(self) -> int:
        return sum(a.dim for a in self.atoms)


def svec_dim(order: int) -> int:
    return order * (order + 1) // 2


def svec_index(i: int, j: int) -> int:
    """svec coordinate of entry (i, j), 0-based, any order of i and j."""
    if i > j:
        i, j = j, i
    return j * (j + 1) // 2 + i


@lru_cache(maxsize=None)
def _svec_cache(order: int):
    iu = np.concatenate([np.arange(j + 1) for j in range(order)])
    ju = np.repeat(np.arange(order), np.arange(1, order + 1))
    scale = np.where(iu < ju, SQRT2, 1.0)
    return iu, ju, scale


def svec(mat: np.ndarray) -> np.ndarray:
    """Scaled column-major upper-triangle vectorization of a symmetric matrix."""
    iu, ju, scale = _svec_cache(mat.shape[0])
    return mat[iu, ju] * scale


def smat(vec: np.ndarray, order: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    iu, ju, scale = _svec_cache(order)
    out = np.zeros((order, order))
    vals = vec / scale
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def project_nonneg(v: np.ndarray) -> np.ndarray:
    """Componentwise projection onto the nonnegative orthant."""
    return np.maximum(v, 0.0)


def project_soc(v: np.ndarray) -> np.ndarray:
    """Closed-form projection onto {(x, t): ||x|| <= t} with t last."""
    if v.size < 2:
        raise ValueError("second-order cone vectors need length >= 2")
    x, t = v[:-1], v[-1]
    nx = float(np.linalg.norm(x))
    if nx <= t:
        return v.copy()
    if nx <= -t:
        return np.zeros_like(v)
    out = np.empty_like(v)
    coef = (nx + t) / 2.0
    out[:-1] = (coef / nx) * x
    out[-1] = coef
    return out


def project_psd(mat: np.ndarray, sym_tol: float = 1e-12) -> np.ndarray:
    """Projection onto the PSD cone: clamp negative eigenvalues at zero."""
    asym = np.abs(mat - mat.T).max() if mat.size else 0.0
    scale = max(1.0, float(np.abs(mat).max())) if mat.size else 1.0
    if asym > sym_tol * scale:
        raise ValueError(f"matrix not symmetric: max asymmetry {asym:.3e}")
    w, q = np.linalg.eigh((mat + mat.T) / 2.0)
    if w[0] >= 0.0:
        return mat.copy()
    wpos = np.maximum(w, 0.0)
    return (q * wpos) @ q.T


class ConeProjector:
    """Projects slack vectors onto a fixed cone product.

    Precomputes atom slices and batches PSD blocks of equal order so the
    eigendecompositions run as one stacked LAPACK call per order.
    """

    def __init__(self, cones: ConeSpec):
        self.cones = cones
        self.dim = cones.total_dim
        offset = 0
        self._zero: list[tuple[int, int]] = []
        self._nonneg: list[tuple[int, int]] = []
        self._soc: list[tuple[int, int]] = []
        psd: dict[int, list[int]] = {}
        for atom in cones.atoms:
            span = (offset, offset + atom.dim)
            if isinstance(atom, Zero):
                self._zero.append(span)
            elif isinstance(atom, NonNeg):
                self._nonneg.append(span)
            elif isinstance(atom, SecondOrder):
                self._soc.append(span)
            else:
                psd.setdefault(atom.order, []).append(offset)
            offset += atom.dim
        # per order: offsets array plus shared svec index cache
        self._psd = [
            (order, np.asarray(offs), *_svec_cache(order)) for order, offs in sorted(psd.items())
        ]

    def project(self, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Project v onto the cone product. Zero-cone sections map to 0."""
        res = v.copy() if out is None else np.copyto(out, v) or out
        for lo, hi in self._zero:
            res[lo:hi] = 0.0
        for lo, hi in self._nonneg:
            np.maximum(res[lo:hi], 0.0, out=res[lo:hi])
        for lo, hi in self._soc:
            res[lo:hi] = project_soc(v[lo:hi])
        for order, offs, iu, ju, scale in self._psd:
            L = svec_dim(order)
            blocks = v[offs[:, None] + np.arange(L)[None, :]] / scale
            mats = np.zeros((len(offs), order, order))
            mats[:, iu, ju] = blocks
            mats[:, ju, iu] = blocks
            w, q = np.linalg.eigh(mats)
            np.maximum(w, 0.0, out=w)
            proj = (q * w[:, None, :]) @ np.swapaxes(q, 1, 2)
            res[offs[:, None] + np.arange(L)[None, :]] = proj[:, iu, ju] * scale
        return res

    def in_dual_zero_sections(self, v: np.ndarray) -> np.ndarray:
        """Mask selecting coordinates whose dual cone is all of R (zero cone)."""
        mask = np.zeros(self.dim, dtype=bool)
        for lo, hi in self._zero:
            mask[lo:hi] = True
        return mask
