"""Acceptance checks shared by ``delaystab verify`` and the test suite.

Each check returns a ``CheckResult``; ``run_all`` prints one line per check.
"""
from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import (
    FitVerdict,
    b0_sufficiency,
    blackbox_from,
    classify,
    decay_profile,
    gain_probes,
    kernel_bound_violations,
    kernel_identify,
    lplq_gain,
    batch_response,
    probe_responses,
    stability_fit,
)
from .phase_space import (
    PhaseVector,
    WeightSpec,
    embed,
    norm,
    project,
    seq_norm,
    shift_pow,
)
from .registry import builtin, random_phase_sequence, random_system
from .solver import h_operator, reduced_solve, representation_residual, solve
from .system import Verdict, subdiagonalize

INF = math.inf


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.detail}) [{self.seconds:.1f}s]"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported with its message
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def _rel_close(a, b, tol):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b))))


# ---------------------------------------------------------------------------
# criteria


def criterion_1(n_systems: int = 200, seed: int = 1) -> tuple[bool, str]:
    """Representation identity on random systems (d <= 3, order <= 6, length <= 60)."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_systems):
        s = random_system(rng)
        length = int(rng.integers(1, 61))
        g = random_phase_sequence(rng, s.dim, length, max_depth=int(rng.integers(0, 8)))
        worst = max(worst, representation_residual(s, g, length))
    elapsed = time.perf_counter() - t0
    return worst <= 1e-10 and elapsed <= 30, f"max residual {worst:.2e}, {elapsed:.1f}s for {n_systems} systems"


def criterion_2(n_g: int = 100, seed: int = 2) -> tuple[bool, str]:
    """hlp bound for gamma in {0.1, 1, 3}, p in {1, 2, inf}; single-probe oracle."""
    rng = np.random.default_rng(seed)
    violations, checks = 0, 0
    for gamma in (0.1, 1.0, 3.0):
        w = WeightSpec(gamma)
        c = 1.0 / (1.0 - math.exp(-gamma))
        for _ in range(n_g):
            dim = int(rng.integers(1, 4))
            length = int(rng.integers(1, 25))
            g = random_phase_sequence(rng, dim, length, max_depth=int(rng.integers(1, 8)))
            h = h_operator(g, length + 40, dim=dim)
            hn = h.norms(w)
            gn = np.array([norm(v, w) for v in g])
            for p in (1.0, 2.0, INF):
                checks += 1
                if seq_norm(hn, p) > c * seq_norm(gn, p) * (1 + 1e-12):
                    violations += 1
    g = [embed([1.0], -1)]
    h = h_operator(g, 60, dim=1)
    measured = seq_norm(h.norms(WeightSpec(1.0)), 2)
    expected = math.exp(-1) / math.sqrt(1 - math.exp(-2))
    ok_oracle = abs(measured - expected) <= 1e-10 * expected
    return violations == 0 and ok_oracle, (
        f"{violations} violations in {checks} checks; single probe {measured:.15g} vs {expected:.15g}"
    )


def criterion_3() -> tuple[bool, str]:
    """ex6.3 closed forms and the gamma = -1 classification."""
    s = builtin("ex6.3")
    zero = PhaseVector.zero(1)
    n = np.arange(51)
    imp = solve(s, 0, zero, [1.0], 50).values[:, 0]
    hom = solve(s, 0, embed([1.0], 0), None, 50).values[:, 0]
    want_imp = np.where(n >= 1, 2.0 ** (1 - n), 0.0)
    want_hom = 2 - 2.0 ** (-n)
    ok_oracles = _rel_close(imp, want_imp, 1e-12) and _rel_close(hom, want_hom, 1e-12)
    rep = classify(s, -1.0, 2.0, 2.0, 200, 50, seed=0)
    ok_cls = (
        rep.gain.bounded
        and rep.fading.verdict is Verdict.HOLDS
        and rep.ues.verdict is FitVerdict.INCONSISTENT
        and any("gamma <= 0" in t for t in rep.theorem_check)
    )
    return ok_oracles and ok_cls, (
        f"oracles {'ok' if ok_oracles else 'MISMATCH'}; gamma=-1: gain bounded={rep.gain.bounded}, "
        f"fading={rep.fading.verdict.value}, UES={rep.ues.verdict.value}"
    )


def criterion_4() -> tuple[bool, str]:
    """ex6.4 profile, and the B^0 sufficient conditions on the ex6.4p variant."""
    prof = decay_profile(builtin("ex6.4"), 0.0, 200, 20, max_lag=100, doubled=False)
    ok_prof = bool(np.array_equal(prof.rho, 1.0 + prof.lags))

    geo = builtin("ex6.4p", a="geometric:0.5")
    rep = b0_sufficiency(geo, 400)
    hom = decay_profile(geo, 0.0, 200, 200, doubled=False)
    ok_geo = rep.certified_by == "ii" and rep.condition_ii["holds"] and float(np.max(hom.rho)) <= 3.0

    har = builtin("ex6.4p", a="harmonic")
    rep_h = b0_sufficiency(har, 400)
    prof_h = decay_profile(har, 0.0, 400, 20, max_lag=200, doubled=False)
    logs = np.log(prof_h.lags.astype(float))
    ok_har = (not rep_h.condition_ii["holds"]) and bool(np.all(prof_h.rho >= 0.95 * logs))
    ok_har = ok_har and prof_h.rho[-1] > prof_h.rho[len(prof_h.rho) // 2 - 1]
    return ok_prof and ok_geo and ok_har, (
        f"rho=1+s {'exact' if ok_prof else 'MISMATCH'}; a=2^-n certified_by={rep.certified_by}, "
        f"sup rho={float(np.max(hom.rho)):.6g}; a=1/n condition (ii) holds={rep_h.condition_ii['holds']}, "
        f"rho(200)={prof_h.rho[-1]:.4g} vs log 200={math.log(200):.4g}"
    )


def criterion_5() -> tuple[bool, str]:
    """ex6.5 with delta = 1: UES fit at gamma = 0.5, US failure at gamma = 1."""
    s = builtin("ex6.5", delta=1.0)
    fit = stability_fit(decay_profile(s, 0.5, 400, 200, norm="phase"), "UES")
    ok_ues = fit.verdict is FitVerdict.CONSISTENT and 0.4 <= fit.nu <= 0.6
    prof = decay_profile(s, 1.0, 200, 200, norm="phase")
    us = stability_fit(prof, "US")
    ratio = float(np.max(prof.rho_doubled) / np.max(prof.rho))
    ok_us = us.verdict is FitVerdict.INCONSISTENT and ratio >= 1.8
    return ok_ues and ok_us, (
        f"gamma=0.5: UES {fit.verdict.value}, nu={fit.nu:.4f}; gamma=1: US {us.verdict.value}, "
        f"K growth x{ratio:.3f} under N=200->400"
    )


def criterion_6() -> tuple[bool, str]:
    """ex6.1 with a(n) = 1/n: gain traces against the harmonic numbers."""
    s = builtin("ex6.1", a="harmonic")
    resp = probe_responses(s, 400)
    g11 = lplq_gain(s, 1.0, 1.0, 400, responses=resp)
    g12 = lplq_gain(s, 1.0, 2.0, 400, responses=resp)
    harm = {N: 1 + math.fsum(1.0 / k for k in range(1, N)) for N in (100, 200, 400)}
    ok11 = all(abs(v - harm[H]) <= 1e-9 for H, v in g11.growth_trace)
    top = 1 + math.pi / math.sqrt(6) + 1e-9
    ok12 = all(1 <= v <= top for _, v in g12.growth_trace)
    return ok11 and ok12, (
        "gain(1,1) " + ", ".join(f"N={H}: {v:.12g}" for H, v in g11.growth_trace)
        + "; gain(1,2) " + ", ".join(f"{v:.6g}" for _, v in g12.growth_trace)
    )


def criterion_7(n_systems: int = 100, seed: int = 7) -> tuple[bool, str]:
    """Kernel identification: exact recovery and the kernel growth bound."""
    rng = np.random.default_rng(seed)
    worst, bound_fail, runs = 0.0, 0, 0
    systems = [random_system(rng, order=4) for _ in range(n_systems)]
    systems += [builtin("ex6.3"), builtin("sec7")]
    for s in systems:
        G = lplq_gain(s, INF, INF, 32, seed=0).value
        bb = blackbox_from(s)
        for n0 in (1, 3, 7):
            mats = kernel_identify(bb, n0, 5, s.dim)
            truth = np.array([s.L(n0 + k, k) for k in range(6)])
            worst = max(worst, float(np.max(np.abs(mats - truth))))
            bound_fail += len(kernel_bound_violations(mats, G))
            runs += 1
    return worst <= 1e-12 and bound_fail == 0, (
        f"{runs} runs, max error {worst:.2e}, {bound_fail} bound violations"
    )


def criterion_8(n_systems: int = 100, seed: int = 8, N: int = 40) -> tuple[bool, str]:
    """Subdiagonal equivalence on all gain probes, bit for bit."""
    rng = np.random.default_rng(seed)
    mismatches, probes = 0, 0
    zero_cache = {}
    for i in range(n_systems):
        s = random_system(rng, order=int(rng.integers(1, 13)))
        sd = subdiagonalize(s)
        F, _ = gain_probes(s, N, seed=i)
        X1 = batch_response(s, F, workers=1)
        X2 = batch_response(sd, F, workers=1)
        probes += len(F)
        mismatches += int(np.sum(~np.all(X1 == X2, axis=(1, 2))))
        zero = zero_cache.setdefault(s.dim, PhaseVector.zero(s.dim))
        for f in F[:: max(1, len(F) // 5)]:
            a = solve(s, 0, zero, f, N).values
            b = solve(sd, 0, zero, f, N).values
            probes += 1
            mismatches += int(not np.array_equal(a, b))
    return mismatches == 0, f"{mismatches} mismatching trajectories out of {probes}"


def criterion_9() -> tuple[bool, str]:
    """sec7 Volterra system: decay bound and first values."""
    s = builtin("sec7")
    phi = embed([1.0], 0)
    worst = -INF
    for tau in (0, 3, 10):
        x = solve(s, tau, phi, None, tau + 60).values[:, 0]
        k = np.arange(1, 61)
        bound = np.exp(-(tau + k - 1.0))
        worst = max(worst, float(np.max(np.abs(x[1:]) / bound)))
    x = solve(s, 0, phi, None, 2).values[:, 0]
    ok_vals = abs(x[1] - 0.5) <= 1e-12 * 0.5 and abs(x[2] - 5 / (12 * math.e)) <= 1e-12 * 5 / (12 * math.e)
    return worst <= 1.0 and ok_vals, f"max |x|/bound = {worst:.4f}; x(1)={x[1]:.17g}, x(2)={x[2]:.17g}"


# ---------------------------------------------------------------------------
# invariant suites


def phase_space_invariants(n: int = 200, seed: int = 11) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    fails = []
    for _ in range(n):
        d = int(rng.integers(1, 4))
        phi = PhaseVector(d, {int(j): rng.normal(size=d) for j in rng.integers(0, 12, size=rng.integers(0, 6))})
        gamma = float(rng.uniform(-2, 2))
        j = int(rng.integers(0, 6))
        a, b = norm(shift_pow(phi, j), gamma), math.exp(-j * gamma) * norm(phi, gamma)
        if abs(a - b) > 1e-12 * max(1.0, abs(b)):
            fails.append("shift isometry")
        top = project(phi, 0, 0)
        if norm(phi, gamma) != max(norm(top, gamma), norm(phi - top, gamma)):
            fails.append("decomposition")
        g2 = gamma + abs(float(rng.normal()))
        if norm(phi, g2) > norm(phi, gamma) * (1 + 1e-12):
            fails.append("monotone embedding")
        gneg, r = -abs(float(rng.uniform(0.1, 2))), int(rng.integers(1, 4))
        lo, mid = norm(phi, 0.0), norm(phi, WeightSpec(0.0, r))
        hi = (1 - math.exp(gneg * r)) ** (-1 / r) * norm(phi, gneg)
        if not (lo <= mid * (1 + 1e-12) and mid <= hi * (1 + 1e-12)):
            fails.append("weighted embedding")
        u = rng.normal(size=(int(rng.integers(1, 10)), d))
        ps = sorted(rng.uniform(1, 5, size=2))
        if seq_norm(u, ps[1]) > seq_norm(u, ps[0]) * (1 + 1e-12) or seq_norm(u, INF) > seq_norm(u, ps[1]) * (1 + 1e-12):
            fails.append("seq_norm monotone")
        m1, m2 = sorted(int(v) for v in rng.integers(-10, 1, size=2))
        pr = project(phi, m1, m2)
        if project(pr, m1, m2) != pr:
            fails.append("idempotence")
        if m1 > -10:
            lower = project(phi, -10, m1 - 1)
            union = project(phi, -10, m2)
            if lower + pr != union:
                fails.append("disjoint windows")
    return not fails, f"{n} samples, failures: {sorted(set(fails)) or 'none'}"


def solver_invariants(n: int = 40, seed: int = 12) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    fails = []
    for _ in range(n):
        s = random_system(rng)
        d = s.dim
        N = int(rng.integers(2, 30))
        tau = int(rng.integers(0, 5))
        N += tau
        phi = PhaseVector(d, {int(j): rng.normal(size=d) for j in rng.integers(0, 8, size=rng.integers(0, 4))})
        f = rng.normal(size=(N, d))
        tr = solve(s, tau, phi, f, N)
        g = [embed(f[k], 0) if k >= tau else None for k in range(N)]
        y = reduced_solve(s, tau, phi, g, N)
        for m in range(tau, N + 1):
            if not np.array_equal(y.at(m).coord(0), tr.at(m)) or y.at(m) != tr.prehistory(m):
                fails.append("reduction equivalence")
                break
        gs = random_phase_sequence(rng, d, int(rng.integers(1, 20)))
        h_operator(gs, len(gs) + 5, dim=d)  # raises on sum/recurrence mismatch
        # prehistory sandwich with finitely supported x_0
        gamma = float(rng.uniform(0.2, 2))
        tr0 = solve(s, 0, phi, None, 60)
        xs = np.max(np.abs(tr0.values), axis=1)
        ph = np.array([norm(tr0.prehistory(m), gamma) for m in range(61)])
        for p in (1.0, 2.0):
            left = np.sum(xs**p)
            mid = np.sum(ph**p)
            right = (norm(phi, gamma) ** p + left) / (1 - math.exp(-p * gamma))
            if not (left <= mid * (1 + 1e-12) and mid <= right * (1 + 1e-9)):
                fails.append("prehistory sandwich")
        if abs(max(float(np.max(xs)), norm(phi, gamma)) - max(float(np.max(ph)), norm(phi, gamma))) > 1e-12 * max(1.0, float(np.max(ph))):
            fails.append("sup identity")
        # linearity in (phi, f)
        f2 = rng.normal(size=(N, d))
        phi2 = PhaseVector(d, {0: rng.normal(size=d)})
        a = solve(s, tau, phi + phi2, f + f2, N).values
        b = solve(s, tau, phi, f, N).values + solve(s, tau, phi2, f2, N).values
        if not _rel_close(a, b, 1e-10):
            fails.append("superposition")
    return not fails, f"{n} systems, failures: {sorted(set(fails)) or 'none'}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("criterion 1 (representation identity)", criterion_1),
    ("criterion 2 (hlp bound)", criterion_2),
    ("criterion 3 (ex6.3 oracles and gamma<=0 classification)", criterion_3),
    ("criterion 4 (ex6.4 profile and B^0 sufficiency)", criterion_4),
    ("criterion 5 (ex6.5 UES/US fits)", criterion_5),
    ("criterion 6 (ex6.1 gain traces)", criterion_6),
    ("criterion 7 (kernel identification)", criterion_7),
    ("criterion 8 (subdiagonal equivalence)", criterion_8),
    ("criterion 9 (sec7 decay bound)", criterion_9),
    ("phase_space invariants", phase_space_invariants),
    ("solver invariants", solver_invariants),
]


def run_all(stream=None, quick: bool = False) -> bool:
    """Run every check, print one line each, and report overall success."""
    stream = stream or sys.stdout
    t0 = time.perf_counter()
    ok = True
    for name, fn in CHECKS:
        if quick and fn in (criterion_1, criterion_7, criterion_8):
            small = {criterion_1: 20, criterion_7: 10, criterion_8: 10}[fn]
            res = _timed(name, lambda fn=fn, small=small: fn(small))
        else:
            res = _timed(name, fn)
        print(res.line(), file=stream, flush=True)
        ok &= res.passed
    total = time.perf_counter() - t0
    within = total < 300
    print(f"criterion 10 (verify suite): {'PASS' if ok and within else 'FAIL'} "
          f"(all checks {'passed' if ok else 'did not pass'}, {total:.1f}s of 300s budget)", file=stream, flush=True)
    return ok and within
