"""Kernel-determined delay systems x(n+1) = sum_k L(n,k) x(n-k) + f(n).

The kernel L(n,k) is a d x d matrix acting on the state k steps in the past.
Everything here is read off the kernel; operators that are not determined by
their kernel (such as Banach limits) cannot be expressed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .phase_space import PhaseVector, as_state, matrix_norm

Kernel = Callable[[int, int], object]


@dataclass(frozen=True)
class TailCertificate:
    """Asserts ||L(n,k)|| <= C * rho**k for every n and every k >= k0."""

    C: float
    rho: float
    k0: int = 0

    def __post_init__(self):
        if self.C < 0 or not (0 <= self.rho < 1) or self.k0 < 0:
            raise ValueError(f"malformed tail certificate {self}")

    def weighted_tail(self, gamma: float, start: int) -> float:
        """Bound on sum_{k >= start} e^{k gamma} ||L(n,k)|| for start >= k0."""
        if start < self.k0:
            raise ValueError("certificate only covers k >= k0")
        if self.C == 0 or self.rho == 0:
            return 0.0
        ratio = math.exp(gamma) * self.rho
        if ratio >= 1:
            return math.inf
        return self.C * ratio**start / (1 - ratio)


@dataclass(frozen=True, eq=False)
class KernelSystem:
    """A delay system given by its kernel.

    ``order``      L(n,k) = 0 for k >= order (bounded delay).
    ``max_delay``  L(n,k) = 0 for k > max_delay(n) (row support, e.g. Volterra
                   systems that never look before time 0 have max_delay(n) = n).
    ``tail_bound`` (gamma, l) -> a bound on sup_n sum_{k>=l} e^{k gamma}||L(n,k)||
                   valid for every n (math.inf when no such bound exists).
    ``table_fn``   optional vectorised kernel: (n_max, k_max) -> array of shape
                   (n_max+1, k_max+1, d, d); must agree with ``kernel``.
    """

    dim: int
    kernel: Kernel
    tail_certificate: Optional[TailCertificate] = None
    order: Optional[int] = None
    max_delay: Optional[Callable[[int], int]] = None
    tail_bound: Optional[Callable[[float, int], float]] = None
    table_fn: Optional[Callable[[int, int], np.ndarray]] = None
    name: str = "custom"
    source: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.order is not None and self.order < 1:
            raise ValueError("order must be >= 1")

    def L(self, n: int, k: int) -> np.ndarray:
        """The kernel matrix L(n,k)."""
        if n < 0 or k < 0:
            raise ValueError("kernel indices must be nonnegative")
        if self.order is not None and k >= self.order:
            return np.zeros((self.dim, self.dim))
        if self.max_delay is not None and k > self.max_delay(n):
            return np.zeros((self.dim, self.dim))
        m = np.asarray(self.kernel(n, k), dtype=float)
        if m.ndim == 0 or m.shape == (1,):
            m = m.reshape(1, 1) * np.eye(self.dim) if self.dim > 1 else m.reshape(1, 1)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"kernel returned shape {m.shape}, expected {(self.dim, self.dim)}")
        return m

    def extent(self, n: int) -> Optional[int]:
        """Largest k with possibly nonzero L(n,k), or None when unbounded."""
        bounds = []
        if self.order is not None:
            bounds.append(self.order - 1)
        if self.max_delay is not None:
            bounds.append(self.max_delay(n))
        return min(bounds) if bounds else None

    def table(self, n_max: int, k_max: int) -> np.ndarray:
        """Read-only array T[n, k] = L(n, k) for n <= n_max, k <= k_max."""
        return _table(self, int(n_max), int(k_max))

    def __repr__(self) -> str:
        return f"KernelSystem(name={self.name!r}, dim={self.dim}, order={self.order})"


@lru_cache(maxsize=16)
def _table(sys: KernelSystem, n_max: int, k_max: int) -> np.ndarray:
    d = sys.dim
    if sys.table_fn is not None:
        out = np.array(sys.table_fn(n_max, k_max), dtype=float)
        if out.shape != (n_max + 1, k_max + 1, d, d):
            raise ValueError(f"table_fn returned shape {out.shape}")
        if sys.order is not None:
            out[:, sys.order:] = 0.0
    else:
        out = np.zeros((n_max + 1, k_max + 1, d, d))
        for n in range(n_max + 1):
            top = k_max
            ext = sys.extent(n)
            if ext is not None:
                top = min(top, ext)
            for k in range(top + 1):
                out[n, k] = sys.L(n, k)
    out.flags.writeable = False
    return out


def clear_table_cache():
    _table.cache_clear()


# ---------------------------------------------------------------------------
# evaluation on prehistories


def apply(sys: KernelSystem, n: int, phi: PhaseVector) -> np.ndarray:
    """L(n) phi = sum over the support of phi of L(n,j) phi[-j].

    Terms are accumulated in increasing depth so that skipping zero
    coordinates never changes the floating-point result.
    """
    if phi.dim != sys.dim:
        raise ValueError(f"dimension mismatch: system {sys.dim}, prehistory {phi.dim}")
    if phi.is_zero():
        return np.zeros(sys.dim)
    depths = phi.depths()
    Ls = np.stack([sys.L(n, j) for j in depths])
    vs = np.stack([v for _, v in phi.items()])
    return kernel_sum(Ls, vs)


def kernel_sum(Ls: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """sum_i Ls[i] @ vs[i], added strictly left to right.

    Every solver path funnels through here, so the result does not depend on
    which path assembled the terms or on whether zero terms were dropped.
    """
    d = Ls.shape[-1]
    if Ls.shape[0] == 0:
        return np.zeros(Ls.shape[1] if Ls.ndim == 3 else d)
    terms = Ls[:, :, 0] * vs[:, 0:1]
    for j in range(1, d):
        terms = terms + Ls[:, :, j] * vs[:, j : j + 1]
    return np.add.accumulate(terms, axis=0)[-1]


def operator_norm_interval(sys: KernelSystem, n: int, gamma: float, k_max: int) -> tuple[float, float]:
    """Enclosure of sum_k e^{k gamma} ||L(n,k)||, the B^gamma -> X operator norm.

    The lower end sums k <= k_max exactly.  The upper end adds whatever the
    system can certify about k > k_max and is +inf when nothing is known.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    lower = math.fsum(_weighted(gamma, k, matrix_norm(sys.L(n, k))) for k in range(k_max + 1))
    ext = sys.extent(n)
    if ext is not None and ext <= k_max:
        return lower, lower
    cert = sys.tail_certificate
    if cert is not None:
        head = math.fsum(
            _weighted(gamma, k, matrix_norm(sys.L(n, k))) for k in range(k_max + 1, cert.k0)
        )
        tail = cert.weighted_tail(gamma, max(k_max + 1, cert.k0))
        if math.isfinite(tail):
            return lower, lower + head + tail
    if sys.tail_bound is not None:
        tb = sys.tail_bound(gamma, k_max + 1)
        if math.isfinite(tb):
            return lower, lower + tb
    return lower, math.inf


def _weighted(gamma: float, k: int, nrm: float) -> float:
    if nrm == 0.0:
        return 0.0
    expo = k * gamma
    if abs(expo) < 700:
        return nrm * math.exp(expo)
    return math.exp(expo + math.log(nrm))


def weighted_norms(table: np.ndarray, gamma: float) -> np.ndarray:
    """e^{k gamma} ||T[n,k]|| for every entry of a kernel table, shape (n, k)."""
    norms = np.max(np.sum(np.abs(table), axis=-1), axis=-1)
    ks = np.arange(table.shape[1], dtype=float)
    out = np.zeros_like(norms)
    pos = norms > 0
    with np.errstate(over="ignore"):
        logs = np.log(np.where(pos, norms, 1.0)) + gamma * ks[None, :]
        out[pos] = np.exp(logs[pos])
    return out


# ---------------------------------------------------------------------------
# the fading-memory boundedness condition


class Verdict(str, Enum):
    HOLDS = "HOLDS"
    FAILS_EMPIRICALLY = "FAILS_EMPIRICALLY"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class ConditionReport:
    gamma: float
    l: int
    n_window: int
    window_sup: float
    uniform_bound: Optional[float]
    verdict: Verdict
    nested: tuple = ()  # (window, sup) for window/2, window, 2*window
    exact: bool = True  # False when window sums are truncated lower bounds

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "l": self.l,
            "n_window": self.n_window,
            "window_sup": self.window_sup,
            "uniform_bound": self.uniform_bound,
            "verdict": self.verdict.value,
            "nested": [list(t) for t in self.nested],
            "exact": self.exact,
        }


DIVERGENCE_FACTOR = 2.0
_REL = 1e-12


def tail_sums(sys: KernelSystem, gamma: float, l: int, n_max: int, k_cap: int | None = None):
    """Per-row tails sum_{k >= l} e^{k gamma} ||L(n,k)|| for n <= n_max.

    Returns (sums, exact).  Rows whose support is unknown are truncated at
    ``k_cap`` (default 2 * n_max + l) and the sums are then lower bounds.
    """
    exts = [sys.extent(n) for n in range(n_max + 1)]
    exact = all(e is not None for e in exts)
    if exact:
        k_top = max([l] + [e for e in exts])
    else:
        k_top = k_cap if k_cap is not None else 2 * n_max + l
    tab = sys.table(n_max, k_top)
    w = weighted_norms(tab, gamma)
    w[:, :l] = 0.0
    sums = np.sum(w, axis=1)
    cert = sys.tail_certificate
    if not exact and cert is not None and cert.k0 <= k_top + 1:
        tail = cert.weighted_tail(gamma, k_top + 1)
        if math.isfinite(tail):
            sums = sums + tail
            exact = True
    return sums, exact


def uniform_tail_bound(sys: KernelSystem, gamma: float, l: int) -> Optional[float]:
    """A bound on sup_n sum_{k>=l} e^{k gamma}||L(n,k)|| valid for all n, if derivable."""
    bounds = []
    if sys.order is not None and l >= sys.order:
        bounds.append(0.0)
    cert = sys.tail_certificate
    if cert is not None and l >= cert.k0:
        bounds.append(cert.weighted_tail(gamma, l))
    if sys.tail_bound is not None:
        bounds.append(float(sys.tail_bound(gamma, l)))
    finite = [b for b in bounds if math.isfinite(b)]
    return min(finite) if finite else None


def fading_condition(sys: KernelSystem, gamma: float, l: int, n_window: int) -> ConditionReport:
    """Check sup_n sum_{k >= l} e^{k gamma} ||L(n,k)|| < inf.

    HOLDS needs a bound valid for all n (order, certificate or closed form).
    FAILS_EMPIRICALLY needs the window sup to grow strictly across the nested
    windows n_window/2, n_window, 2*n_window and at least double over the
    last step.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if n_window < 1:
        raise ValueError("n_window must be >= 1")
    sums, exact = tail_sums(sys, gamma, l, 2 * n_window)
    windows = (max(n_window // 2, 0), n_window, 2 * n_window)
    sups = tuple(float(np.max(sums[: w + 1])) for w in windows)
    bound = uniform_tail_bound(sys, gamma, l)
    if bound is not None:
        verdict = Verdict.HOLDS
    elif (
        sups[0] < sups[1] < sups[2]
        and sups[2] >= DIVERGENCE_FACTOR * sups[1] * (1 - _REL)
    ):
        verdict = Verdict.FAILS_EMPIRICALLY
    else:
        verdict = Verdict.UNKNOWN
    return ConditionReport(
        gamma=gamma,
        l=l,
        n_window=n_window,
        window_sup=sups[1],
        uniform_bound=bound,
        verdict=verdict,
        nested=tuple(zip(windows, sups)),
        exact=exact,
    )


def find_fading_condition(sys: KernelSystem, gamma: float, n_window: int, l_max: int = 64) -> ConditionReport:
    """Try l = 1, 2, 4, ... up to l_max and return the first HOLDS report.

    When no l certifies the condition the report for l = 1 is returned.
    """
    first = None
    l = 1
    while l <= l_max:
        rep = fading_condition(sys, gamma, l, n_window)
        if rep.verdict is Verdict.HOLDS:
            return rep
        first = first or rep
        l *= 2
    return first


# ---------------------------------------------------------------------------
# constructions


def subdiagonalize(sys: KernelSystem) -> KernelSystem:
    """The associated subdiagonal system: L'(n,k) = L(n,k) for k < n, else 0."""
    if sys.name.endswith("[subd]"):
        return sys
    d = sys.dim
    zero = np.zeros((d, d))

    def kernel(n, k):
        return sys.L(n, k) if k < n else zero

    def max_delay(n):
        ext = sys.extent(n)
        return n - 1 if ext is None else min(ext, n - 1)

    def table_fn(n_max, k_max):
        tab = np.array(sys.table(n_max, k_max))
        n_idx = np.arange(n_max + 1)[:, None]
        k_idx = np.arange(k_max + 1)[None, :]
        tab[k_idx >= n_idx] = 0.0
        return tab

    src = None if sys.source is None else {"subdiagonal_of": sys.source}
    return replace(
        sys,
        kernel=kernel,
        max_delay=max_delay,
        table_fn=table_fn,
        name=sys.name + "[subd]",
        source=src,
    )


def is_subdiagonal(sys: KernelSystem, n_max: int) -> bool:
    tab = sys.table(n_max, n_max + 2)
    for n in range(n_max + 1):
        if np.any(tab[n, n:] != 0):
            return False
    return True


def from_bounded_delay(coeffs: Kernel, order: int, dim: int | None = None, name: str = "bounded_delay") -> KernelSystem:
    """x(n+1) = sum_{k < order} coeffs(n,k) x(n-k) + f(n)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if dim is None:
        dim = np.atleast_2d(np.asarray(coeffs(0, 0), dtype=float)).shape[0]
    return KernelSystem(dim=dim, kernel=coeffs, order=order, name=name)


def first_order(A: Callable[[int], object], dim: int | None = None) -> KernelSystem:
    """The ordinary recursion z(n+1) = A(n) z(n) as an order-1 delay system."""
    return from_bounded_delay(lambda n, k: A(n), 1, dim=dim, name="first_order")


def zero_system(dim: int = 1) -> KernelSystem:
    z = np.zeros((dim, dim))
    return KernelSystem(
        dim=dim,
        kernel=lambda n, k: z,
        order=1,
        table_fn=lambda n_max, k_max: np.zeros((n_max + 1, k_max + 1, dim, dim)),
        name="zero",
        source={"dimension": dim, "kernel": {"type": "table", "entries": []}},
    )


def as_kernel_state(sys: KernelSystem, v) -> np.ndarray:
    return as_state(v, sys.dim)
