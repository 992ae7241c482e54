"""Standard-form cone programs and their solutions.

A problem is  min c^T x  s.t.  A x + s = b,  s in K,  with K an ordered
product of zero, nonnegative, second-order, and PSD cones. The dual reads
max -b^T y  s.t.  A^T y + c = 0,  y in K*.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import ConeSpec, NonNeg, Psd, SecondOrder, Zero, svec_dim

__all__ = [
    "BlockSpan",
    "SymbolSpan",
    "VariableMap",
    "ConicProblem",
    "ConicSolution",
    "STATUS_OPTIMAL",
    "STATUS_MAX_ITERS",
    "STATUS_INFEASIBLE_SUSPECTED",
    "problem_to_json",
    "problem_from_json",
]

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERS = "max_iters"
STATUS_INFEASIBLE_SUSPECTED = "infeasible_suspected"


@dataclass(frozen=True)
class BlockSpan:
    """One named svec block of the primal variable vector."""

    name: str
    start: int
    stop: int
    order: int  # matrix side length of the block


@dataclass(frozen=True)
class SymbolSpan:
    """A formulation symbol, located as a submatrix of a variable block."""

    name: str
    block: int  # index into VariableMap.blocks
    rows: tuple[int, int]  # half-open row range within the block matrix
    cols: tuple[int, int]


@dataclass(frozen=True)
class VariableMap:
    """Partition of solver coordinates into svec blocks, plus symbol locations."""

    blocks: tuple[BlockSpan, ...]
    symbols: tuple[SymbolSpan, ...] = ()

    def validate(self, n: int) -> None:
        pos = 0
        for blk in self.blocks:
            if blk.start != pos:
                raise ValueError(f"variable_map block {blk.name!r} starts at {blk.start}, expected {pos}")
            if blk.stop - blk.start != svec_dim(blk.order):
                raise ValueError(f"variable_map block {blk.name!r} span does not match svec({blk.order})")
            pos = blk.stop
        if pos != n:
            raise ValueError(f"variable_map covers {pos} coordinates, problem has {n}")

    def block(self, name: str) -> BlockSpan:
        for blk in self.blocks:
            if blk.name == name:
                return blk
        raise KeyError(name)

    def listing(self) -> str:
        """Human-readable symbol -> coordinate mapping for audits."""
        lines = []
        for blk in self.blocks:
            lines.append(f"{blk.name}: svec coords [{blk.start}, {blk.stop}), order {blk.order}")
        for sym in self.symbols:
            blk = self.blocks[sym.block]
            lines.append(
                f"{sym.name}: rows [{sym.rows[0]}, {sym.rows[1]}) x cols [{sym.cols[0]}, {sym.cols[1]})"
                f" of {blk.name}"
            )
        return "\n".join(lines)


@dataclass
class ConicProblem:
    """Cone program data: min c^T x  s.t.  A x + s = b, s in cones."""

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: ConeSpec
    variable_map: VariableMap
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def validate(self) -> None:
        if self.A.shape != (self.m, self.n):
            raise ValueError(f"A has shape {self.A.shape}, expected ({self.m}, {self.n})")
        if self.cones.total_dim != self.m:
            raise ValueError(f"cones span {self.cones.total_dim} rows, b has {self.m}")
        for name, arr in (("c", self.c), ("b", self.b), ("A", self.A.data)):
            if arr.size and not np.isfinite(arr).all():
                raise ValueError(f"non-finite entries in {name}")
        self.variable_map.validate(self.n)

    def objective_value(self, x: np.ndarray) -> float:
        """c^T x plus the additive constant carried in metadata."""
        return float(self.c @ x) + float(self.metadata.get("objective_constant", 0.0))


@dataclass
class ConicSolution:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    residual_trace: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


_ATOM_NAMES = {Zero: "zero", NonNeg: "nonneg", SecondOrder: "second_order", Psd: "psd"}


def _atom_to_json(atom) -> dict:
    if isinstance(atom, Psd):
        return {"type": "psd", "order": atom.order}
    return {"type": _ATOM_NAMES[type(atom)], "dim": atom.dim}


def _atom_from_json(obj) -> Zero | NonNeg | SecondOrder | Psd:
    t = obj["type"]
    if t == "zero":
        return Zero(obj["dim"])
    if t == "nonneg":
        return NonNeg(obj["dim"])
    if t == "second_order":
        return SecondOrder(obj["dim"])
    if t == "psd":
        return Psd(obj["order"])
    raise ValueError(f"unknown cone atom type {t!r}")


def problem_to_json(problem: ConicProblem) -> str:
    """Self-describing JSON dump (dimensions, cones, sparse triplets, vectors,
    variable map) for cross-checking against external solvers."""
    coo = problem.A.tocoo()
    payload = {
        "format": "conic-kmeans-problem-v1",
        "n": problem.n,
        "m": problem.m,
        "cones": [_atom_to_json(a) for a in problem.cones.atoms],
        "A": {
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "vals": coo.data.tolist(),
        },
        "b": problem.b.tolist(),
        "c": problem.c.tolist(),
        "variable_map": {
            "blocks": [
                {"name": blk.name, "start": blk.start, "stop": blk.stop, "order": blk.order}
                for blk in problem.variable_map.blocks
            ],
            "symbols": [
                {"name": s.name, "block": s.block, "rows": list(s.rows), "cols": list(s.cols)}
                for s in problem.variable_map.symbols
            ],
        },
        "metadata": problem.metadata,
    }
    return json.dumps(payload)


def problem_from_json(text: str) -> ConicProblem:
    obj = json.loads(text)
    if obj.get("format") != "conic-kmeans-problem-v1":
        raise ValueError("not a conic-kmeans problem dump")
    m, n = obj["m"], obj["n"]
    A = sp.csc_matrix(
        (obj["A"]["vals"], (obj["A"]["rows"], obj["A"]["cols"])), shape=(m, n), dtype=np.float64
    )
    vm = VariableMap(
        blocks=tuple(
            BlockSpan(b["name"], b["start"], b["stop"], b["order"])
            for b in obj["variable_map"]["blocks"]
        ),
        symbols=tuple(
            SymbolSpan(s["name"], s["block"], tuple(s["rows"]), tuple(s["cols"]))
            for s in obj["variable_map"]["symbols"]
        ),
    )
    problem = ConicProblem(
        c=np.asarray(obj["c"], dtype=np.float64),
        A=A,
        b=np.asarray(obj["b"], dtype=np.float64),
        cones=ConeSpec(tuple(_atom_from_json(a) for a in obj["cones"])),
        variable_map=vm,
        metadata=obj.get("metadata", {}),
    )
    problem.validate()
    return problem
