"""First-order operator-splitting solver for standard-form cone programs.

The algorithm is ADMM on  min c^T x + I_C(z)  s.t.  A x = z  with
C = b - K: each iteration solves one cached sparse factorization of the
quasi-definite KKT system

    [ sigma*I   A^T      ] [x]   [rhs_x]
    [ A        -diag(1/rho)] [nu] = [rhs_z]

followed by a Euclidean projection onto the cone product and a dual update.
By Moreau decomposition the slack s = b - z lies in K and the dual y in K*
exactly at every iteration, so only the affine residuals and the duality gap
need to converge.

Ruiz equilibration (row scaling uniform across each second-order/PSD atom so
cone membership is preserved) plus a scalar cost normalization stabilize
convergence; the penalty rho adapts to the primal/dual residual ratio with a
refactorization whenever it moves by more than the tolerated ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import ConeProjector, Psd, SecondOrder, Zero
from .problem import (
    STATUS_INFEASIBLE_SUSPECTED,
    STATUS_MAX_ITERS,
    STATUS_OPTIMAL,
    ConicProblem,
    ConicSolution,
)

__all__ = ["SolverConfig", "solve"]


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and algorithm parameters; all defaults are disclosed here so
    runs are reproducible."""

    tol: float = 1e-5
    max_iters: int = 50_000
    rho: float = 1.0
    rho_eq_scale: float = 1e3  # extra weight on zero-cone (equality) rows
    sigma: float = 1e-6
    alpha: float = 1.6  # over-relaxation
    ruiz_iters: int = 10
    check_interval: int = 25
    adaptive_rho: bool = True
    adaptive_rho_interval: int = 100
    adaptive_rho_ratio: float = 5.0  # refactorize when rho moves past this ratio
    rho_min: float = 1e-6
    rho_max: float = 1e6
    divergence_threshold: float = 1e12
    verbose: bool = False


def _atom_row_groups(problem: ConicProblem):
    """(slice, needs_uniform_scaling) per cone atom, in row order."""
    groups = []
    offset = 0
    for atom in problem.cones.atoms:
        groups.append((slice(offset, offset + atom.dim), isinstance(atom, (SecondOrder, Psd))))
        offset += atom.dim
    return groups


def _equilibrate(problem: ConicProblem, iters: int):
    """Ruiz row/column equilibration of A. Row scalings are collapsed to one
    value per SOC/PSD atom (their max) so the scaled slack stays in the cone."""
    A = problem.A
    m, n = A.shape
    d = np.ones(m)
    e = np.ones(n)
    groups = _atom_row_groups(problem)
    B = A.copy()
    for _ in range(iters):
        absB = abs(B)
        cn = absB.max(axis=0).toarray().ravel()
        rn = absB.max(axis=1).toarray().ravel()
        for rows, uniform in groups:
            if uniform and rn[rows].size:
                rn[rows] = rn[rows].max()
        estep = 1.0 / np.sqrt(np.where(cn > 1e-12, cn, 1.0))
        dstep = 1.0 / np.sqrt(np.where(rn > 1e-12, rn, 1.0))
        B = sp.diags(dstep) @ B @ sp.diags(estep)
        d *= dstep
        e *= estep
    return d, e, B.tocsc()


def _zero_row_mask(problem: ConicProblem) -> np.ndarray:
    mask = np.zeros(problem.m, dtype=bool)
    offset = 0
    for atom in problem.cones.atoms:
        if isinstance(atom, Zero):
            mask[offset : offset + atom.dim] = True
        offset += atom.dim
    return mask


class _KktSolver:
    """Cached LU factorization of the quasi-definite KKT matrix."""

    def __init__(self, Abar: sp.csc_matrix, sigma: float):
        self._Abar = Abar
        self._sigma = sigma
        self._n = Abar.shape[1]
        self._upper = sp.hstack([sigma * sp.eye(self._n, format="csc"), Abar.T], format="csc")
        self._factor = None

    def factorize(self, rho_vec: np.ndarray) -> None:
        lower = sp.hstack([self._Abar, sp.diags(-1.0 / rho_vec)], format="csc")
        kkt = sp.vstack([self._upper, lower], format="csc")
        self._factor = spla.splu(kkt, permc_spec="MMD_AT_PLUS_A")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._factor.solve(rhs)


def solve(problem: ConicProblem, cfg: SolverConfig | None = None) -> ConicSolution:
    """Solve a cone program; deterministic given (problem, cfg)."""
    cfg = cfg or SolverConfig()
    problem.validate()
    m, n = problem.m, problem.n

    d, e, Abar = _equilibrate(problem, cfg.ruiz_iters)
    bbar = d * problem.b
    c_scaled_raw = e * problem.c
    cnorm_inf = float(np.abs(c_scaled_raw).max()) if n else 0.0
    gamma = 1.0 / cnorm_inf if cnorm_inf > 1e-12 else 1.0
    cbar = gamma * c_scaled_raw

    zero_rows = _zero_row_mask(problem)
    projector = ConeProjector(problem.cones)

    rho_base = cfg.rho
    rho_vec = np.where(zero_rows, rho_base * cfg.rho_eq_scale, rho_base)
    kkt = _KktSolver(Abar, cfg.sigma)
    kkt.factorize(rho_vec)

    AbarT = Abar.T.tocsc()
    bnorm = 1.0 + float(np.linalg.norm(problem.b))
    cnorm = 1.0 + float(np.linalg.norm(problem.c))

    x = np.zeros(n)
    z = np.zeros(m)
    y = np.zeros(m)
    rhs = np.empty(n + m)
    trace: list[tuple[int, float, float, float]] = []

    status = STATUS_MAX_ITERS
    rp = rd = gap = np.inf
    iterations = cfg.max_iters

    def residuals(x, z, y):
        """Unscaled residuals derived from scaled iterates."""
        Ax_s = Abar @ x  # = D (A x_unscaled)
        Aty_s = AbarT @ y  # = gamma E (A^T y_unscaled)
        x_u = e * x
        y_u = d * y / gamma
        s_u = (bbar - z) / d
        rp = float(np.linalg.norm((Ax_s - z) / d)) / bnorm
        rd = float(np.linalg.norm(Aty_s / e / gamma + problem.c)) / cnorm
        ctx = float(problem.c @ x_u)
        bty = float(problem.b @ y_u)
        gap = abs(ctx + bty) / (1.0 + abs(ctx) + abs(bty))
        return rp, rd, gap, Ax_s, Aty_s, x_u, y_u, s_u

    it = 0
    for it in range(1, cfg.max_iters + 1):
        rhs[:n] = cfg.sigma * x - cbar
        rhs[n:] = z - y / rho_vec
        sol = kkt.solve(rhs)
        xt = sol[:n]
        zt = z + (sol[n:] - y) / rho_vec

        x = cfg.alpha * xt + (1.0 - cfg.alpha) * x
        w = cfg.alpha * zt + (1.0 - cfg.alpha) * z + y / rho_vec
        z = bbar - projector.project(bbar - w)
        y = rho_vec * (w - z)

        if it % cfg.check_interval == 0 or it == cfg.max_iters:
            if not np.isfinite(x).all() or float(np.abs(x).max(initial=0.0)) > cfg.divergence_threshold:
                status = STATUS_INFEASIBLE_SUSPECTED
                iterations = it
                break
            rp, rd, gap, Ax_s, Aty_s, *_ = residuals(x, z, y)
            trace.append((it, rp, rd, gap))
            if cfg.verbose and it % (cfg.check_interval * 40) == 0:
                print(f"  iter {it:6d}  rp {rp:.3e}  rd {rd:.3e}  gap {gap:.3e}  rho {rho_base:.2e}")
            if max(rp, rd, gap) <= cfg.tol:
                status = STATUS_OPTIMAL
                iterations = it
                break
            if cfg.adaptive_rho and it % cfg.adaptive_rho_interval == 0:
                rp_s = float(np.linalg.norm(Ax_s - z)) / max(
                    float(np.linalg.norm(Ax_s)), float(np.linalg.norm(z)), 1e-10
                )
                rd_s = float(np.linalg.norm(cbar + Aty_s)) / max(
                    float(np.linalg.norm(cbar)), float(np.linalg.norm(Aty_s)), 1e-10
                )
                proposed = rho_base * np.sqrt(rp_s / max(rd_s, 1e-14))
                proposed = float(np.clip(proposed, cfg.rho_min, cfg.rho_max))
                ratio = proposed / rho_base
                if ratio > cfg.adaptive_rho_ratio or ratio < 1.0 / cfg.adaptive_rho_ratio:
                    rho_base = proposed
                    rho_vec = np.where(zero_rows, rho_base * cfg.rho_eq_scale, rho_base)
                    kkt.factorize(rho_vec)

    rp, rd, gap, _, _, x_u, y_u, s_u = residuals(x, z, y)
    if status == STATUS_MAX_ITERS:
        iterations = it
    if status != STATUS_INFEASIBLE_SUSPECTED and max(rp, rd, gap) <= cfg.tol:
        status = STATUS_OPTIMAL
    return ConicSolution(
        x=x_u,
        s=s_u,
        y=y_u,
        status=status,
        primal_residual=rp,
        dual_residual=rd,
        gap=gap,
        iterations=iterations,
        residual_trace=trace,
    )
