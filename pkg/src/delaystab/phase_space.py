"""Prehistory vectors over R^d and the exponentially weighted norms on them.

A prehistory is a column (phi[0], phi[-1], phi[-2], ...) of states.  Only
finitely supported columns are represented; they are stored as a map from
depth j >= 0 to the coordinate phi[-j].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

SUP = math.inf


def as_state(v, dim: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a 1-d float array (a state in X = R^d)."""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"state must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"state has dimension {arr.shape[0]}, expected {dim}")
    return arr


def state_norm(v) -> float:
    """Max-absolute-entry norm on X."""
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def matrix_norm(m) -> float:
    """Operator norm induced by the max norm, i.e. the max absolute row sum."""
    m = np.asarray(m, dtype=float)
    return float(np.max(np.sum(np.abs(m), axis=-1))) if m.size else 0.0


@dataclass(frozen=True)
class WeightSpec:
    """Weight exponent ``gamma`` and summability index ``r`` (``SUP`` for B^gamma)."""

    gamma: float
    r: float = SUP

    def __post_init__(self):
        if not (self.r == SUP or self.r >= 1):
            raise ValueError(f"r must be >= 1 or SUP, got {self.r}")


class PhaseVector:
    """Finitely supported prehistory column with coordinates in R^dim.

    Instances are immutable; zero coordinates are pruned on construction.
    """

    __slots__ = ("_dim", "_support")

    def __init__(self, dim: int, support: Mapping[int, object] | None = None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        clean = {}
        for j, v in (support or {}).items():
            j = int(j)
            if j < 0:
                raise ValueError(f"depth must be >= 0, got {j}")
            arr = as_state(v, dim).copy()
            if np.any(arr != 0):
                arr.flags.writeable = False
                clean[j] = arr
        self._dim = dim
        self._support = dict(sorted(clean.items()))

    @classmethod
    def zero(cls, dim: int) -> "PhaseVector":
        return cls(dim)

    @classmethod
    def from_columns(cls, columns) -> "PhaseVector":
        """Build from a dense array whose row j is the coordinate phi[-j]."""
        cols = np.asarray(columns, dtype=float)
        if cols.ndim == 1:
            cols = cols[:, None]
        return cls(cols.shape[1], {j: cols[j] for j in range(cols.shape[0])})

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def support(self) -> dict[int, np.ndarray]:
        return dict(self._support)

    def depths(self) -> list[int]:
        return list(self._support)

    def items(self):
        return self._support.items()

    def max_depth(self) -> int:
        """Deepest nonzero depth, or -1 for the zero vector."""
        return max(self._support) if self._support else -1

    def is_zero(self) -> bool:
        return not self._support

    def coord(self, m: int) -> np.ndarray:
        """The m-th coordinate phi[m] for m <= 0."""
        if m > 0:
            raise ValueError("coordinates are indexed by m <= 0")
        v = self._support.get(-m)
        return v.copy() if v is not None else np.zeros(self._dim)

    def to_columns(self, depth: int | None = None) -> np.ndarray:
        depth = self.max_depth() if depth is None else depth
        out = np.zeros((depth + 1, self._dim))
        for j, v in self._support.items():
            if j <= depth:
                out[j] = v
        return out

    def _check(self, other: "PhaseVector"):
        if not isinstance(other, PhaseVector):
            return NotImplemented
        if other._dim != self._dim:
            raise ValueError(f"dimension mismatch: {self._dim} vs {other._dim}")
        return None

    def __add__(self, other: "PhaseVector") -> "PhaseVector":
        if self._check(other) is NotImplemented:
            return NotImplemented
        out = dict(self._support)
        for j, v in other._support.items():
            out[j] = out[j] + v if j in out else v
        return PhaseVector(self._dim, out)

    def __neg__(self) -> "PhaseVector":
        return PhaseVector(self._dim, {j: -v for j, v in self._support.items()})

    def __sub__(self, other: "PhaseVector") -> "PhaseVector":
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __mul__(self, c: float) -> "PhaseVector":
        return PhaseVector(self._dim, {j: c * v for j, v in self._support.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhaseVector):
            return NotImplemented
        return (
            self._dim == other._dim
            and self._support.keys() == other._support.keys()
            and all(np.array_equal(v, other._support[j]) for j, v in self._support.items())
        )

    __hash__ = None

    def __repr__(self) -> str:
        body = ", ".join(f"[{-j}]: {v.tolist()}" for j, v in self._support.items())
        return f"PhaseVector(dim={self._dim}, {{{body}}})"


def embed(psi, j: int, dim: int | None = None) -> PhaseVector:
    """E_j psi: the prehistory with ``psi`` at coordinate j <= 0 and zero elsewhere."""
    if j > 0:
        raise ValueError("embedding index must be <= 0")
    psi = as_state(psi, dim)
    return PhaseVector(psi.shape[0], {-j: psi})


def norm(phi: PhaseVector, w: WeightSpec | float) -> float:
    """|phi| in B^gamma (r = SUP) or B^{r,gamma} (finite r)."""
    if not isinstance(w, WeightSpec):
        w = WeightSpec(float(w))
    if phi.is_zero():
        return 0.0
    depths = np.fromiter(phi._support.keys(), dtype=float)
    mags = np.array([state_norm(v) for v in phi._support.values()])
    expo = -w.gamma * depths
    if np.max(expo) < 700 and np.min(expo) > -700:
        weighted = mags * np.exp(expo)
        return lp_norm(weighted, w.r)
    # log domain when e^{-gamma j} would overflow or underflow
    logs = np.log(mags) + expo
    top = np.max(logs)
    if top > 709.7:
        return math.inf
    if w.r == SUP:
        return float(np.exp(top))
    return float(np.exp(top) * np.sum(np.exp(w.r * (logs - top))) ** (1.0 / w.r))


def shift_pow(phi: PhaseVector, j: int) -> PhaseVector:
    """S^j phi: move every coordinate j units deeper, zeros on top."""
    if j < 0:
        raise ValueError("shift power must be >= 0")
    if j == 0:
        return phi
    return PhaseVector(phi.dim, {d + j: v for d, v in phi._support.items()})


def project(phi: PhaseVector, m1: float, m2: int) -> PhaseVector:
    """P_[m1, m2] phi: keep coordinates m1 <= m <= m2 (m1 may be -inf)."""
    if m2 > 0:
        raise ValueError("m2 must be <= 0")
    if m1 > m2:
        raise ValueError(f"empty window: m1={m1} > m2={m2}")
    lo, hi = -m2, (math.inf if m1 == -math.inf else -m1)
    return PhaseVector(phi.dim, {d: v for d, v in phi._support.items() if lo <= d <= hi})


def seq_norm(u, p: float) -> float:
    """l^p norm of a finite X-valued sequence (rows are states; 1-d means d = 1)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    arr = np.asarray(u, dtype=float)
    if arr.size == 0:
        return 0.0
    mags = np.abs(arr) if arr.ndim == 1 else np.max(np.abs(arr), axis=-1)
    return lp_norm(mags, p)


def lp_norm(mags, p: float) -> float:
    """l^p norm of a sequence of nonnegative magnitudes."""
    mags = np.asarray(mags, dtype=float)
    if mags.size == 0:
        return 0.0
    top = float(np.max(mags))
    if p == math.inf or top == 0.0:
        return top
    return top * float(np.sum((mags / top) ** p)) ** (1.0 / p)


def phase_distance(a: PhaseVector, b: PhaseVector, gamma: float = 1.0) -> float:
    return norm(a - b, WeightSpec(gamma))


def sum_phase(vectors: Iterable[PhaseVector], dim: int) -> PhaseVector:
    out = PhaseVector.zero(dim)
    for v in vectors:
        out = out + v
    return out
