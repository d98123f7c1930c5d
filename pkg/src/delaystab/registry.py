"""Named example systems with closed-form oracles, plus random test systems."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .system import KernelSystem, TailCertificate

INF = math.inf


# ---------------------------------------------------------------------------
# coefficient sequences a(n)


@dataclass(frozen=True)
class ASeq:
    """A scalar sequence a(n), n >= 0, in one of a few closed forms.

    kind: "harmonic" (1/n, a(0)=0), "power" (c n^-s, a(0)=0),
    "geometric" (c r^n), "list" (explicit values, zero afterwards).
    """

    kind: str
    c: float = 1.0
    r: float = 0.5
    s: float = 1.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("harmonic", "power", "geometric", "list"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")

    def __call__(self, n: int) -> float:
        if self.kind == "harmonic":
            return 0.0 if n == 0 else 1.0 / n
        if self.kind == "power":
            return 0.0 if n == 0 else self.c * float(n) ** (-self.s)
        if self.kind == "geometric":
            return self.c * self.r**n
        return float(self.values[n]) if n < len(self.values) else 0.0

    def weighted_sup(self, gamma: float, n_from: int, shift: int = 0) -> float:
        """sup_{n >= n_from} e^{(n - shift) gamma} |a(n)|."""
        n_from = max(n_from, 0)
        if self.kind == "list":
            vals = [math.exp((n - shift) * gamma) * abs(self(n)) for n in range(n_from, len(self.values))]
            return max(vals, default=0.0)
        if self.kind in ("harmonic", "power"):
            if gamma > 0:
                return INF
            n = max(n_from, 1)
            return math.exp((n - shift) * gamma) * abs(self(n))
        base = math.exp(gamma) * abs(self.r)
        if base > 1:
            return INF
        return abs(self.c) * math.exp(-shift * gamma) * base**n_from

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("power", "geometric"):
            out["c"] = self.c
        if self.kind == "power":
            out["s"] = self.s
        if self.kind == "geometric":
            out["r"] = self.r
        if self.kind == "list":
            out["values"] = list(self.values)
        return out


def parse_aseq(spec) -> ASeq:
    """Accept an ASeq, a dict, or a string such as "harmonic", "geometric:0.5",
    "power:2", "list:1,0.5,0.25"."""
    if isinstance(spec, ASeq):
        return spec
    if isinstance(spec, dict):
        kind = spec.get("kind", spec.get("type"))
        if kind == "list":
            return ASeq("list", values=tuple(float(v) for v in spec["values"]))
        return ASeq(
            kind,
            c=float(spec.get("c", 1.0)),
            r=float(spec.get("r", 0.5)),
            s=float(spec.get("s", 1.0)),
        )
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        kind = kind.strip()
        if kind == "list":
            return ASeq("list", values=tuple(float(v) for v in arg.split(",") if v.strip()))
        if kind == "geometric":
            return ASeq("geometric", r=float(arg) if arg else 0.5)
        if kind == "power":
            return ASeq("power", s=float(arg) if arg else 1.0)
        return ASeq(kind)
    raise ValueError(f"cannot interpret sequence spec {spec!r}")


# ---------------------------------------------------------------------------
# builtins


def _scalar(dim: int, value: float) -> np.ndarray:
    return value * np.eye(dim)


def _ex61(dim: int = 1, a="harmonic") -> KernelSystem:
    a = parse_aseq(a)

    def kernel(n, k):
        return _scalar(dim, a(n) if n >= 1 and k == n - 1 else 0.0)

    return KernelSystem(
        dim=dim,
        kernel=kernel,
        max_delay=lambda n: max(n - 1, 0),
        tail_bound=lambda g, l: a.weighted_sup(g, l + 1, shift=1),
        name="ex6.1",
        source=_src("ex6.1", dim, a=a.to_dict()),
    )


def ex62_times(n_max: int) -> list[int]:
    """The activation times n_k = n_{k-1} + k + 2 (k >= 1, n_0 = 0) up to n_max."""
    out, n, k = [], 0, 0
    while True:
        k += 1
        n = n + k + 2
        if n > n_max:
            return out
        out.append(n)


def _ex62_index(n: int) -> Optional[int]:
    # n = k(k+5)/2 for some k >= 1
    if n < 3:
        return None
    k = int((-5 + math.isqrt(25 + 8 * n)) // 2)
    for kk in (k - 1, k, k + 1):
        if kk >= 1 and kk * (kk + 5) // 2 == n:
            return kk
    return None


def _ex62(dim: int = 1) -> KernelSystem:
    def kernel(n, k):
        kk = _ex62_index(n)
        return _scalar(dim, 1.0 if kk is not None and k == kk else 0.0)

    def max_delay(n):
        kk = _ex62_index(n)
        return 0 if kk is None else kk

    return KernelSystem(
        dim=dim,
        kernel=kernel,
        max_delay=max_delay,
        tail_bound=lambda g, l: math.exp(l * g) if g <= 0 else INF,
        name="ex6.2",
        source=_src("ex6.2", dim),
    )


def _top_plus_diag(name: str, top: float, diag: Callable[[int], float], tail, dim: int, src: dict) -> KernelSystem:
    def kernel(n, k):
        v = 0.0
        if k == 0:
            v += top
        if k == n:
            v += diag(n)
        return _scalar(dim, v)

    return KernelSystem(dim=dim, kernel=kernel, max_delay=lambda n: n, tail_bound=tail, name=name, source=src)


def _exp_sup(g: float, l: int) -> float:
    # sup_{n >= l} e^{n g}
    return math.exp(l * g) if g <= 0 else INF


def _ex63(dim: int = 1) -> KernelSystem:
    return _top_plus_diag("ex6.3", 0.5, lambda n: 1.0, _exp_sup, dim, _src("ex6.3", dim))


def _ex64(dim: int = 1) -> KernelSystem:
    return _top_plus_diag("ex6.4", 1.0, lambda n: 1.0, _exp_sup, dim, _src("ex6.4", dim))


def _ex64p(dim: int = 1, a="harmonic") -> KernelSystem:
    a = parse_aseq(a)
    return _top_plus_diag(
        "ex6.4p", 1.0, a, lambda g, l: a.weighted_sup(g, l), dim, _src("ex6.4p", dim, a=a.to_dict())
    )


def _ex65_tail(delta: float):
    def bound(g: float, l: int) -> float:
        c = delta - g
        if c <= 0:
            return INF
        # t e^{-c t} peaks at t = 1/c
        cands = {max(l, 1), max(l, math.floor(1 / c)), max(l, math.ceil(1 / c))}
        return max(n * math.exp(-c * n) for n in cands)

    return bound


def _ex65(dim: int = 1, delta: float = 1.0) -> KernelSystem:
    delta = float(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    return _top_plus_diag(
        "ex6.5", 0.0, lambda n: n * math.exp(-n * delta), _ex65_tail(delta), dim, _src("ex6.5", dim, delta=delta)
    )


def _sec7(dim: int = 1) -> KernelSystem:
    def kernel(n, k):
        return _scalar(dim, math.exp(-n) / ((k + 1) * (k + 2)))

    def tail(g, l):
        # sum_{k>=l} 1/((k+1)(k+2)) = 1/(l+1); the e^{-n} factor is at most 1
        return 1.0 / (l + 1) if g <= 0 else INF

    return KernelSystem(dim=dim, kernel=kernel, tail_bound=tail, name="sec7", source=_src("sec7", dim))


def _src(name: str, dim: int, **params) -> dict:
    p = dict(params)
    if dim != 1:
        p["dim"] = dim
    return {"dimension": dim, "kernel": {"type": "builtin", "name": name, "params": p}}


# ---------------------------------------------------------------------------
# oracles: x(0..N) for tau = 0, phi = E_0 x0, forcing f (shape (N, d))


def _oracle_ex61(params):
    a = parse_aseq(params.get("a", "harmonic"))

    def run(x0, f, N):
        x = np.zeros((N + 1, len(x0)))
        x[0] = x0
        for n in range(N):
            x[n + 1] = f[n] if n == 0 else a(n) * x[1] + f[n]
        return x

    return run


def _oracle_ex62(params):
    def run(x0, f, N):
        x = np.zeros((N + 1, len(x0)))
        x[0] = x0
        for n in range(N):
            x[n + 1] = f[n]
            k = _ex62_index(n)
            if k is not None:
                x[n + 1] = x[n + 1] + x[n - k]
        return x

    return run


def _oracle_ex63(params):
    def run(x0, f, N):
        x = np.zeros((N + 1, len(x0)))
        for n in range(N + 1):
            x[n] = (2 - 2.0**-n) * x0 + sum((2.0 ** (1 - (n - k)) * f[k] for k in range(n)), np.zeros(len(x0)))
        return x

    return run


def _oracle_ex64(params):
    def run(x0, f, N):
        cs = np.vstack([np.zeros(len(x0)), np.cumsum(f[:N], axis=0)])
        return np.array([(n + 1) * x0 for n in range(N + 1)]) + cs

    return run


def _oracle_ex64p(params):
    a = parse_aseq(params.get("a", "harmonic"))

    def run(x0, f, N):
        cs = np.vstack([np.zeros(len(x0)), np.cumsum(f[:N], axis=0)])
        acoef = np.concatenate([[0.0], np.cumsum([a(k) for k in range(N)])])
        return (1 + acoef)[:, None] * x0[None, :] + cs

    return run


def _oracle_ex65(params):
    delta = float(params.get("delta", 1.0))

    def run(x0, f, N):
        x = np.zeros((N + 1, len(x0)))
        x[0] = x0
        for n in range(N):
            x[n + 1] = n * math.exp(-n * delta) * x0 + f[n]
        return x

    return run


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    constructor: Callable[..., KernelSystem]
    oracle: Optional[Callable[[dict], Callable]]
    expected_verdicts: dict = field(default_factory=dict)
    description: str = ""
    params: tuple = ()

    def build(self, **params) -> KernelSystem:
        return self.constructor(**params)


REGISTRY: dict[str, RegistryEntry] = {
    e.name: e
    for e in [
        RegistryEntry(
            "ex6.1",
            _ex61,
            _oracle_ex61,
            {"any": "(l^p,l^r)-stable but not (l^p,l^q)-stable when a is in l^r but not l^q; not UES for any gamma"},
            "x(1)=f(0), x(n+1)=a(n)x(1)+f(n)",
            ("dim", "a"),
        ),
        RegistryEntry(
            "ex6.2",
            _ex62,
            _oracle_ex62,
            {"gamma>0": "(l^p,l^q)-stable with gain <= 2; fading condition fails; neither UES nor US"},
            "L(n_k)phi = phi[-k], n_k = n_{k-1}+k+2, zero at other times",
            ("dim",),
        ),
        RegistryEntry(
            "ex6.3",
            _ex63,
            _oracle_ex63,
            {"gamma<=0": "not UES in B^gamma for gamma<=0, (l^p,l^q)-stable for p<=q"},
            "x(n+1) = x(n)/2 + x(0) + f(n)",
            ("dim",),
        ),
        RegistryEntry(
            "ex6.4",
            _ex64,
            _oracle_ex64,
            {"gamma=0": "(l^1,l^inf)-stable, fading condition holds, not US in B^0"},
            "x(n+1) = x(n) + x(0) + f(n)",
            ("dim",),
        ),
        RegistryEntry(
            "ex6.4p",
            _ex64p,
            _oracle_ex64p,
            {"gamma=0": "US in B^0 iff sum a(n) < inf; (l^1,l^inf)-stable for every a"},
            "x(n+1) = x(n) + a(n)x(0) + f(n)",
            ("dim", "a"),
        ),
        RegistryEntry(
            "ex6.5",
            _ex65,
            _oracle_ex65,
            {"0<gamma<delta": "UES in B^gamma", "gamma=delta": "not US in B^delta"},
            "x(n+1) = n e^{-n delta} x(0) + f(n)",
            ("dim", "delta"),
        ),
        RegistryEntry(
            "sec7",
            _sec7,
            None,
            {"gamma=0": "UES in B^0 with |x(tau+k)| <= e^{-(tau+k-1)}|phi|", "gamma>0": "kernel unbounded on B^gamma"},
            "x(n+1) = sum_{k<=n} e^{-n}/((n-k+1)(n-k+2)) x(k)",
            ("dim",),
        ),
    ]
}


def builtin(name: str, **params) -> KernelSystem:
    if name not in REGISTRY:
        raise KeyError(f"unknown builtin {name!r}; known: {', '.join(REGISTRY)}")
    entry = REGISTRY[name]
    bad = set(params) - set(entry.params)
    if bad:
        raise ValueError(f"builtin {name} does not take parameters {sorted(bad)}")
    if "dim" in params:
        params["dim"] = int(params["dim"])
    return entry.build(**params)


def oracle(name: str, **params):
    entry = REGISTRY[name]
    return None if entry.oracle is None else entry.oracle(params)


# ---------------------------------------------------------------------------
# random systems


def periodic_bounded_delay(coeffs: np.ndarray, name: str = "bounded_delay", certificate=None) -> KernelSystem:
    """L(n,k) = coeffs[n % P, k] for k < order; coeffs has shape (P, order, d, d)."""
    C = np.array(coeffs, dtype=float)
    if C.ndim != 4 or C.shape[2] != C.shape[3]:
        raise ValueError(f"coefficients must have shape (P, order, d, d), got {C.shape}")
    C.flags.writeable = False
    P, order, d, _ = C.shape

    def kernel(n, k):
        return C[n % P, k]

    def table_fn(n_max, k_max):
        out = np.zeros((n_max + 1, k_max + 1, d, d))
        kk = min(order, k_max + 1)
        out[:, :kk] = C[np.arange(n_max + 1) % P, :kk]
        return out

    entries = [
        {"n": int(n), "k": int(k), "matrix": C[n, k].tolist()}
        for n in range(P)
        for k in range(order)
        if np.any(C[n, k])
    ]
    src = {
        "dimension": d,
        "kernel": {"type": "bounded_delay", "order": order, "period": P, "entries": entries},
    }
    return KernelSystem(
        dim=d,
        kernel=kernel,
        order=order,
        table_fn=table_fn,
        tail_certificate=certificate,
        name=name,
        source=src,
    )


def random_system(rng: np.random.Generator, dim: int | None = None, order: int | None = None,
                  period: int | None = None, scale: float = 0.9) -> KernelSystem:
    """Random bounded-delay system with sum_k ||L(n,k)|| <= scale (so UES for scale < 1)."""
    dim = int(rng.integers(1, 4)) if dim is None else dim
    order = int(rng.integers(1, 7)) if order is None else order
    period = int(rng.integers(1, 6)) if period is None else period
    C = rng.uniform(-1, 1, size=(period, order, dim, dim)) * (scale / (order * dim))
    return periodic_bounded_delay(C, name="random")


def random_phase_sequence(rng: np.random.Generator, dim: int, length: int, max_depth: int = 6,
                          density: float = 0.5):
    """Random finitely supported prehistory sequence g(0..length-1)."""
    from .phase_space import PhaseVector

    out = []
    for _ in range(length):
        supp = {}
        for j in range(max_depth + 1):
            if rng.random() < density:
                supp[j] = rng.normal(size=dim)
        out.append(PhaseVector(dim, supp))
    return out
