"""Forward solvers: the delay recursion, its first-order phase-space form and H.

Forcings are indexed by absolute time; entries outside the given array are zero.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .phase_space import PhaseVector, WeightSpec, embed, norm, seq_norm, shift_pow
from .system import KernelSystem, apply, kernel_sum


def _forcing(f, dim: int, N: int) -> np.ndarray:
    """Dense (N, dim) forcing array, zero padded or truncated to length N."""
    out = np.zeros((N, dim))
    if f is None:
        return out
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 1:
        if dim != 1:
            arr = arr.reshape(-1, dim) if arr.size % dim == 0 and arr.size else arr[:, None]
        else:
            arr = arr[:, None]
    if arr.shape[-1] != dim:
        raise ValueError(f"forcing has dimension {arr.shape[-1]}, expected {dim}")
    m = min(N, arr.shape[0])
    out[:m] = arr[:m]
    return out


@dataclass(frozen=True)
class Trajectory:
    """x(tau), ..., x(N) for a single solve."""

    start: int
    values: np.ndarray  # shape (N - start + 1, d)
    initial_prehistory: PhaseVector
    forcing: np.ndarray = field(repr=False, default=None)

    @property
    def end(self) -> int:
        return self.start + len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def at(self, n: int) -> np.ndarray:
        return self.values[n - self.start]

    def prehistory(self, n: int) -> PhaseVector:
        """x_n: the column (x(n), x(n-1), ...) including the initial prehistory."""
        if not self.start <= n <= self.end:
            raise ValueError(f"time {n} outside [{self.start}, {self.end}]")
        lag = n - self.start
        supp = {i: self.values[n - self.start - i] for i in range(lag + 1)}
        for j, v in self.initial_prehistory.items():
            if j >= 1:
                supp[lag + j] = v
        return PhaseVector(self.initial_prehistory.dim, supp)

    def norm(self, p: float) -> float:
        return seq_norm(self.values, p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.values.shape[1]
        w.writerow(["n"] + [f"x_{i + 1}" for i in range(d)])
        for i, row in enumerate(self.values):
            w.writerow([self.start + i] + [format(float(v), ".17g") for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class PhaseTrajectory:
    """y(tau), ..., y(N) as prehistory vectors."""

    start: int
    values: list

    def __post_init__(self):
        dims = {v.dim for v in self.values}
        if len(dims) > 1:
            raise ValueError("all prehistories must share a dimension")

    def __len__(self) -> int:
        return len(self.values)

    def at(self, n: int) -> PhaseVector:
        return self.values[n - self.start]

    def norms(self, w: WeightSpec | float) -> np.ndarray:
        return np.array([norm(v, w) for v in self.values])

    def to_triples(self) -> list[tuple]:
        """Sparse export rows (n, depth, component values)."""
        rows = []
        for i, v in enumerate(self.values):
            for j, c in v.items():
                rows.append((self.start + i, j, tuple(float(t) for t in c)))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.values[0].dim if self.values else 1
        w.writerow(["n", "depth"] + [f"c_{i + 1}" for i in range(d)])
        for n, j, comps in self.to_triples():
            w.writerow([n, j] + [format(c, ".17g") for c in comps])
        return buf.getvalue()


def solve(sys: KernelSystem, tau: int, phi: PhaseVector, f, N: int) -> Trajectory:
    """Solve x(n+1) = L(n) x_n + f(n) on [tau, N] with x_tau = phi."""
    if N < tau or tau < 0:
        raise ValueError("need 0 <= tau <= N")
    if phi.dim != sys.dim:
        raise ValueError(f"dimension mismatch: system {sys.dim}, prehistory {phi.dim}")
    d = sys.dim
    F = _forcing(f, d, N)
    xs = np.zeros((N - tau + 1, d))
    xs[0] = phi.coord(0)
    pre = [(j, v) for j, v in phi.items() if j >= 1]
    for n in range(tau, N):
        lag = n - tau
        # depths 0..lag hit computed states, deeper ones hit phi
        ks = list(range(lag + 1)) + [lag + j for j, _ in pre]
        vs = np.concatenate([xs[lag::-1], np.array([v for _, v in pre]).reshape(-1, d)])
        Ls = np.stack([sys.L(n, k) for k in ks])
        xs[lag + 1] = kernel_sum(Ls, vs) + F[n]
    return Trajectory(start=tau, values=xs, initial_prehistory=phi, forcing=F)


def reduced_solve(sys: KernelSystem, tau: int, phi: PhaseVector, g: Sequence, N: int) -> PhaseTrajectory:
    """Solve y(n+1) = D(n) y(n) + g(n) with D(n) = E_0 L(n) + S.

    ``g`` is indexed by absolute time; missing entries are zero.
    """
    if N < tau or tau < 0:
        raise ValueError("need 0 <= tau <= N")
    if phi.dim != sys.dim:
        raise ValueError(f"dimension mismatch: system {sys.dim}, prehistory {phi.dim}")
    ys = [phi]
    y = phi
    for n in range(tau, N):
        nxt = embed(apply(sys, n, y), 0) + shift_pow(y, 1)
        if n < len(g) and g[n] is not None:
            if g[n].dim != sys.dim:
                raise ValueError("forcing dimension mismatch")
            nxt = nxt + g[n]
        ys.append(nxt)
        y = nxt
    return PhaseTrajectory(start=tau, values=ys)


class HRecurrenceMismatch(AssertionError):
    pass


def h_operator(g: Sequence[PhaseVector], N: int, dim: int | None = None) -> PhaseTrajectory:
    """h(n) = sum_{k<n} S^{n-k-1} (I - P_0) g(k) for 0 <= n <= N.

    Evaluated from the coordinate formula and from h(n+1) = S h(n) + (I-P_0) g(n);
    the two must agree exactly.
    """
    if dim is None:
        if not g:
            raise ValueError("dim required for an empty forcing")
        dim = g[0].dim
    gk = lambda k: g[k] if k < len(g) and g[k] is not None else None

    direct = []
    for n in range(N + 1):
        acc: dict[int, np.ndarray] = {}
        for k in range(n):
            gv = gk(k)
            if gv is None:
                continue
            for j, v in gv.items():
                if j == 0:
                    continue
                depth = j + n - 1 - k
                acc[depth] = acc[depth] + v if depth in acc else v
                if not np.any(acc[depth]):
                    del acc[depth]
        direct.append(PhaseVector(dim, acc))

    rec = [PhaseVector.zero(dim)]
    for n in range(N):
        nxt = shift_pow(rec[-1], 1)
        gv = gk(n)
        if gv is not None:
            top = PhaseVector(dim, {j: v for j, v in gv.items() if j != 0})
            nxt = nxt + top
        rec.append(nxt)

    for n, (a, b) in enumerate(zip(direct, rec)):
        if a != b:
            raise HRecurrenceMismatch(f"h({n}) differs between sum and recurrence")
    return PhaseTrajectory(start=0, values=direct)


def representation_residual(sys: KernelSystem, g: Sequence[PhaseVector], N: int, gamma: float = 1.0) -> float:
    """max_n | y(n, 0, 0; g) - (x_n(0, 0; g[0] + L h) + h(n)) |_{B^gamma}."""
    d = sys.dim
    zero = PhaseVector.zero(d)
    h = h_operator(g, N, dim=d)
    fstar = np.zeros((N, d))
    for n in range(N):
        top = g[n].coord(0) if n < len(g) and g[n] is not None else np.zeros(d)
        fstar[n] = top + apply(sys, n, h.at(n))
    x = solve(sys, 0, zero, fstar, N)
    y = reduced_solve(sys, 0, zero, g, N)
    w = WeightSpec(gamma)
    worst = 0.0
    for n in range(N + 1):
        worst = max(worst, norm(y.at(n) - (x.prehistory(n) + h.at(n)), w))
    return worst


def forced_response(sys: KernelSystem, F: np.ndarray, N: int | None = None) -> np.ndarray:
    """Batch solve with zero initial data: F has shape (P, N, d), result (P, N+1, d)."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    P, n_f, d = F.shape
    if d != sys.dim:
        raise ValueError("forcing dimension mismatch")
    N = n_f if N is None else N
    if n_f < N:
        F = np.concatenate([F, np.zeros((P, N - n_f, d))], axis=1)
    X = np.zeros((P, N + 1, d))
    if N == 0:
        return X
    T = sys.table(N - 1, N - 1)
    for n in range(N):
        # coefficient block acting on (x(n), x(n-1), ..., x(0))
        Lrow = T[n, : n + 1]
        A = Lrow.transpose(1, 0, 2).reshape(d, (n + 1) * d)
        hist = X[:, n::-1, :].reshape(P, (n + 1) * d)
        X[:, n + 1] = hist @ A.T + F[:, n]
    return X


def phase_of_forcing(f, dim: int) -> list[PhaseVector]:
    """g = E_0 f."""
    F = np.asarray(f, dtype=float).reshape(len(f), dim)
    return [embed(v, 0) for v in F]
