"""System spec documents (JSON) and report serialization."""
from __future__ import annotations

import json
import math
from dataclasses import replace
from typing import Any

import numpy as np

from .registry import REGISTRY, builtin, periodic_bounded_delay
from .system import KernelSystem, TailCertificate


class SpecError(ValueError):
    """Malformed system spec document."""


def _matrix(raw, d: int, where: str) -> np.ndarray:
    try:
        m = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: matrix is not numeric") from exc
    if m.ndim == 0 and d == 1:
        m = m.reshape(1, 1)
    if m.shape != (d, d):
        raise SpecError(f"{where}: matrix has shape {m.shape}, expected {(d, d)}")
    return m


def _int(raw, where: str, lo: int = 0) -> int:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw or raw < lo:
        raise SpecError(f"{where}: expected an integer >= {lo}, got {raw!r}")
    return int(raw)


def _certificate(raw) -> TailCertificate | None:
    if raw is None:
        return None
    if not isinstance(raw, dict) or not {"C", "rho"} <= set(raw):
        raise SpecError("tail_certificate needs fields C and rho (and optionally k0)")
    try:
        return TailCertificate(float(raw["C"]), float(raw["rho"]), _int(raw.get("k0", 0), "tail_certificate.k0"))
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def _table_system(d: int, entries: list, where: str) -> KernelSystem:
    table: dict[tuple[int, int], np.ndarray] = {}
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or not {"n", "k", "matrix"} <= set(e):
            raise SpecError(f"{where}[{i}]: entries need n, k and matrix")
        key = (_int(e["n"], f"{where}[{i}].n"), _int(e["k"], f"{where}[{i}].k"))
        if key in table:
            raise SpecError(f"{where}: duplicate entry for (n, k) = {key}")
        table[key] = _matrix(e["matrix"], d, f"{where}[{i}]")
    zero = np.zeros((d, d))
    order = max((k for _, k in table), default=0) + 1

    def kernel(n, k):
        return table.get((n, k), zero)

    def table_fn(n_max, k_max):
        out = np.zeros((n_max + 1, k_max + 1, d, d))
        for (n, k), m in table.items():
            if n <= n_max and k <= k_max:
                out[n, k] = m
        return out

    return KernelSystem(dim=d, kernel=kernel, order=order, table_fn=table_fn, name="table")


def _bounded_delay_system(d: int, spec: dict) -> KernelSystem:
    order = _int(spec.get("order"), "kernel.order", lo=1)
    entries = spec.get("entries", [])
    if not isinstance(entries, list):
        raise SpecError("kernel.entries must be a list")
    period = spec.get("period")
    timed = [e for e in entries if isinstance(e, dict) and "n" in e]
    if period is not None or not timed:
        P = 1 if period is None else _int(period, "kernel.period", lo=1)
        C = np.zeros((P, order, d, d))
        seen = set()
        for i, e in enumerate(entries):
            if not isinstance(e, dict) or not {"k", "matrix"} <= set(e):
                raise SpecError(f"kernel.entries[{i}]: entries need k and matrix")
            k = _int(e["k"], f"kernel.entries[{i}].k")
            if k >= order:
                raise SpecError(f"kernel.entries[{i}]: k={k} is not below order {order}")
            ns = [_int(e["n"], f"kernel.entries[{i}].n")] if "n" in e else list(range(P))
            for n in ns:
                if n >= P:
                    raise SpecError(f"kernel.entries[{i}]: n={n} is not below period {P}")
                if (n, k) in seen:
                    raise SpecError(f"kernel: duplicate entry for (n, k) = {(n, k)}")
                seen.add((n, k))
                C[n, k] = _matrix(e["matrix"], d, f"kernel.entries[{i}]")
        return periodic_bounded_delay(C)
    # explicit time-indexed coefficients; untimed entries apply at every other time
    sys = _table_system(d, timed, "kernel.entries")
    default = {}
    for i, e in enumerate(entries):
        if "n" not in e:
            k = _int(e["k"], f"kernel.entries[{i}].k")
            if k in default:
                raise SpecError(f"kernel: duplicate default entry for k={k}")
            default[k] = _matrix(e["matrix"], d, f"kernel.entries[{i}]")
    if any(k >= order for k in default):
        raise SpecError("kernel: entry k not below order")
    timed_keys = {(int(e["n"]), int(e["k"])) for e in timed}
    for n, k in timed_keys:
        if k >= order:
            raise SpecError(f"kernel: entry k={k} not below order {order}")
    zero = np.zeros((d, d))

    def kernel(n, k):
        if (n, k) in timed_keys:
            return sys.kernel(n, k)
        return default.get(k, zero)

    return KernelSystem(dim=d, kernel=kernel, order=order, name="bounded_delay")


def load_spec(doc: dict | str) -> KernelSystem:
    """Build a KernelSystem from a spec document (dict or JSON text)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    d = _int(doc.get("dimension"), "dimension", lo=1)
    kern = doc.get("kernel")
    if not isinstance(kern, dict) or "type" not in kern:
        raise SpecError("kernel must be an object with a type field")
    kind = kern["type"]
    if kind == "builtin":
        name = kern.get("name")
        if name not in REGISTRY:
            raise SpecError(f"unknown builtin {name!r}; known: {', '.join(REGISTRY)}")
        params = dict(kern.get("params", {}))
        if "dim" in params and int(params["dim"]) != d:
            raise SpecError(f"builtin dim={params['dim']} disagrees with dimension={d}")
        if d != 1:
            params["dim"] = d
        try:
            sys = builtin(name, **params)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"builtin {name}: {exc}") from exc
    elif kind == "table":
        entries = kern.get("entries", [])
        if not isinstance(entries, list):
            raise SpecError("kernel.entries must be a list")
        sys = _table_system(d, entries, "kernel.entries")
    elif kind == "bounded_delay":
        sys = _bounded_delay_system(d, kern)
    else:
        raise SpecError(f"unknown kernel type {kind!r}")

    cert = _certificate(doc.get("tail_certificate"))
    src = {"dimension": d, "kernel": kern}
    if cert is not None:
        src["tail_certificate"] = {"C": cert.C, "rho": cert.rho, "k0": cert.k0}
        _spot_check(sys, cert)
    return replace(sys, tail_certificate=cert, source=src)


def _spot_check(sys: KernelSystem, cert: TailCertificate, n_max: int = 40, span: int = 40):
    for n in range(0, n_max + 1, 3):
        for k in range(cert.k0, cert.k0 + span + 1, 2):
            nrm = float(np.max(np.sum(np.abs(sys.L(n, k)), axis=1)))
            if nrm > cert.C * cert.rho**k * (1 + 1e-12) + 1e-300:
                raise SpecError(f"tail certificate violated at (n, k) = {(n, k)}: ||L|| = {nrm}")


def dump_spec(sys: KernelSystem) -> dict:
    """The spec document that reproduces ``sys``."""
    if sys.source is None:
        raise ValueError(f"system {sys.name!r} has no serializable source")
    out = json.loads(json.dumps(sys.source))
    if sys.tail_certificate is not None:
        c = sys.tail_certificate
        out["tail_certificate"] = {"C": c.C, "rho": c.rho, "k0": c.k0}
    return out


def _clean(obj: Any):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, round-trip float repr, non-finite values as strings."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
