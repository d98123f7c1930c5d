"""Empirical stability toolkit: gains, decay profiles, fits, kernel identification."""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .phase_space import PhaseVector, embed, matrix_norm
from .solver import forced_response, h_operator, solve
from .system import (
    ConditionReport,
    KernelSystem,
    Verdict,
    apply,
    find_fading_condition,
    tail_sums,
    weighted_norms,
)

INF = math.inf
NU_MIN = 1e-3
GROWTH_TOL = 0.1
IDENTIFY_TOL = 1e-9
_CHUNK = 256


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DELAYSTAB_WORKERS", "1")))
    except ValueError:
        return 1


def _lp_rows(mags: np.ndarray, p: float) -> np.ndarray:
    """Row-wise l^p norms of nonnegative magnitudes (last axis)."""
    top = np.max(mags, axis=-1) if mags.shape[-1] else np.zeros(mags.shape[:-1])
    if p == INF:
        return top
    safe = np.where(top > 0, top, 1.0)
    return np.where(top > 0, safe * np.sum((mags / safe[..., None]) ** p, axis=-1) ** (1.0 / p), 0.0)


# ---------------------------------------------------------------------------
# gains


@dataclass(frozen=True)
class GainEstimate:
    p: float
    q: float
    horizon: int
    value: float
    growth_trace: tuple  # ((H, value), ...) at N/4, N/2, N
    probe_count: int

    @property
    def bounded(self) -> bool:
        """Trace growth from N/2 to N below the tolerance."""
        (_, half), (_, full) = self.growth_trace[-2], self.growth_trace[-1]
        if half == 0:
            return full == 0
        return full / half - 1 < GROWTH_TOL

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "horizon": self.horizon,
            "value": self.value,
            "growth_trace": [list(t) for t in self.growth_trace],
            "bounded": self.bounded,
            "probe_count": self.probe_count,
        }


def adversarial_forcing(sys: KernelSystem, n0: int, k1: int, psi, N: int) -> np.ndarray:
    """f(n0-1) = psi, f(n0+k) = -L(n0+k, k) psi for k < k1, zero elsewhere.

    With zero initial data this pins x_{n0+k} = E_{-k} psi and makes
    x(n0+k1+1) = L(n0+k1, k1) psi.
    """
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    d = sys.dim
    psi = np.asarray(psi, dtype=float).reshape(d)
    f = np.zeros((N, d))
    if n0 - 1 < N:
        f[n0 - 1] = psi
    for k in range(k1):
        if n0 + k < N:
            f[n0 + k] = -sys.L(n0 + k, k) @ psi
    return f


def gain_probes(sys: KernelSystem, N: int, seed: int = 0, n_dense: int = 32,
                adversarial_n0: Optional[Sequence[int]] = None) -> tuple[np.ndarray, list[str]]:
    """The probe family: impulses, Rademacher inputs, and adversarial sequences.

    Returns forcings of shape (P, N, d) and a label per probe.
    """
    d = sys.dim
    forcings, labels = [], []
    for t in range(N):
        for i in range(d):
            f = np.zeros((N, d))
            f[t, i] = 1.0
            forcings.append(f)
            labels.append(f"impulse t={t} i={i}")
    rng = np.random.default_rng(seed)
    for r in range(n_dense):
        forcings.append(rng.choice([-1.0, 1.0], size=(N, d)))
        labels.append(f"rademacher {r}")
    n0s = sorted({n for n in (1, N // 4, N // 2, *(adversarial_n0 or ())) if 1 <= n <= N})
    T = sys.table(N - 1, N - 1) if N >= 1 else None
    eye = np.eye(d)
    for n0 in n0s:
        for k1 in range(0, N - n0 + 1):
            psis = [eye[i] for i in range(d)]
            if n0 + k1 <= N - 1 and k1 <= N - 1:
                M = T[n0 + k1, k1]
                row = int(np.argmax(np.sum(np.abs(M), axis=1)))
                sgn = np.where(M[row] >= 0, 1.0, -1.0)
                if d > 1 or sgn[0] < 0:
                    psis.append(sgn)
            for idx, psi in enumerate(psis):
                f = np.zeros((N, d))
                f[n0 - 1] = psi
                for k in range(k1):
                    if n0 + k < N:
                        f[n0 + k] = -T[n0 + k, k] @ psi
                forcings.append(f)
                labels.append(f"adversarial n0={n0} k1={k1} psi={idx}")
    return np.array(forcings).reshape(-1, N, d), labels


def batch_response(sys: KernelSystem, F: np.ndarray, workers: int | None = None) -> np.ndarray:
    """forced_response over fixed-size chunks, optionally on a thread pool.

    Chunk boundaries do not depend on the worker count, so results are
    identical for any degree of parallelism.
    """
    P, N, _ = F.shape
    sys.table(max(N - 1, 0), max(N - 1, 0))  # build once before fanning out
    chunks = [F[i : i + _CHUNK] for i in range(0, P, _CHUNK)]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(chunks) == 1:
        parts = [forced_response(sys, c, N) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: forced_response(sys, c, N), chunks))
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, N + 1, sys.dim))


def probe_responses(sys: KernelSystem, N: int, seed: int = 0, n_dense: int = 32,
                    adversarial_n0: Optional[Sequence[int]] = None, workers: int | None = None):
    """(F, X): the probe forcings and their zero-initial-data responses."""
    F, _ = gain_probes(sys, N, seed, n_dense, adversarial_n0)
    return F, batch_response(sys, F, workers)


def lplq_gain(sys: KernelSystem, p: float, q: float, N: int, seed: int = 0, n_dense: int = 32,
              adversarial_n0: Optional[Sequence[int]] = None, workers: int | None = None,
              responses: Optional[tuple] = None) -> GainEstimate:
    """Lower bound on the (l^p, l^q) gain from the probe family, traced at N/4, N/2, N.

    At horizon H each probe is cut to [0, H-1]; by causality its response on
    [0, H] is unchanged, so every probe contributes at every horizon.
    """
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    if p > q:
        raise ValueError(f"need p <= q, got p={p}, q={q}")
    if N < 4:
        raise ValueError("N must be >= 4")
    F, X = responses if responses is not None else probe_responses(sys, N, seed, n_dense, adversarial_n0, workers)
    fm = np.max(np.abs(F), axis=-1)  # (P, N)
    xm = np.max(np.abs(X), axis=-1)  # (P, N+1)
    trace = []
    value = 0.0
    for H in (N // 4, N // 2, N):
        fn = _lp_rows(fm[:, :H], p)
        xn = _lp_rows(xm[:, : H + 1], q)
        pos = fn > 0
        if pos.any():
            value = max(value, float(np.max(xn[pos] / fn[pos])))
        trace.append((H, value))
    return GainEstimate(p=p, q=q, horizon=N, value=value, growth_trace=tuple(trace), probe_count=len(F))


# ---------------------------------------------------------------------------
# decay profiles


@dataclass(frozen=True)
class DecayProfile:
    gamma: float
    lags: np.ndarray
    rho: np.ndarray
    probe_depth: int
    window: int
    norm: str = "state"
    rho_doubled: Optional[np.ndarray] = None
    window_doubled: Optional[int] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["s", "rho"] + (["rho_doubled"] if self.rho_doubled is not None else [])
        w.writerow(cols)
        n = len(self.rho) if self.rho_doubled is None else max(len(self.rho), len(self.rho_doubled))
        cell = lambda arr, i: format(float(arr[i]), ".17g") if i < len(arr) else ""
        for i in range(n):
            row = [i + 1, cell(self.rho, i)]
            if self.rho_doubled is not None:
                row.append(cell(self.rho_doubled, i))
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "norm": self.norm,
            "window": self.window,
            "probe_depth": self.probe_depth,
            "lags": [int(s) for s in self.lags],
            "rho": [float(v) for v in self.rho],
            "window_doubled": self.window_doubled,
            "rho_doubled": None if self.rho_doubled is None else [float(v) for v in self.rho_doubled],
        }


def resolvent(sys: KernelSystem, N: int) -> np.ndarray:
    """R[t, :, s, :] = R(t, s): the state at t started from x(s) = I with zero past.

    Shape (N+1, d, N+1, d); entries with t < s are zero.
    """
    d = sys.dim
    T = sys.table(max(N - 1, 0), max(N - 1, 0))
    R = np.zeros((N + 1, d, N + 1, d))
    R[0, :, 0, :] = np.eye(d)
    flat = R.reshape(N + 1, d, (N + 1) * d)
    for n in range(N):
        A = T[n, n::-1].transpose(1, 0, 2).reshape(d, (n + 1) * d)  # acts on x(0..n)
        stacked = flat[: n + 1].reshape((n + 1) * d, (N + 1) * d)
        flat[n + 1] = A @ stacked
        R[n + 1, :, n + 1, :] = np.eye(d)
    return R


def _response_envelope(sys: KernelSystem, gamma: float, N: int, J: int, S: int) -> np.ndarray:
    """U[tau, s] = max over unit probes of |x(tau+s, tau, probe; 0)| for 0 <= s <= S.

    Probes are e^{j gamma} E_{-j} e_i, 0 <= j <= J.  Entries with tau+s > N are
    left at zero.
    """
    d = sys.dim
    R = resolvent(sys, N)
    U = np.zeros((N, S + 1))
    taus = np.arange(N)
    for s in range(S + 1):
        ok = taus + s <= N
        t = taus[ok]
        U[t, s] = np.max(np.abs(R[t + s, :, t, :]), axis=(1, 2))
    if J == 0:
        return U
    T = sys.table(N - 1, N - 1 + J)
    s_idx = np.arange(1, S + 1)
    for c in range(1 - (N - 1), J + 1):
        t_lo, t_hi = max(0, 1 - c), min(N - 1, J - c)
        if t_lo > t_hi:
            continue
        # forcing from the probe: F(m) = L(m, m + c) psi for m >= tau
        m_all = np.arange(t_lo, N)
        D = T[m_all, m_all + c]
        keep = np.any(D != 0, axis=(1, 2))
        if not keep.any():
            continue
        ms, D = m_all[keep], D[keep]
        G = np.einsum("nbic,icd->nibd", R[:, :, ms + 1, :], D)
        Gs = np.cumsum(G[:, ::-1], axis=1)[:, ::-1]  # Gs[n, i] = sum_{i' >= i}
        tau = np.arange(t_lo, t_hi + 1)
        i0 = np.searchsorted(ms, tau)
        valid_t = i0 < len(ms)
        tau, i0 = tau[valid_t], i0[valid_t]
        if tau.size == 0:
            continue
        n_grid = tau[:, None] + s_idx[None, :]
        inside = n_grid <= N
        n_clip = np.where(inside, n_grid, N)
        W = Gs[n_clip, i0[:, None]]  # (ntau, S, d, d)
        mags = np.where(inside, np.max(np.abs(W), axis=(2, 3)), 0.0)
        j = c + tau
        with np.errstate(over="ignore", invalid="ignore"):
            scaled = np.where(mags > 0, mags * np.exp(j * gamma)[:, None], 0.0)
        U[tau, 1:] = np.maximum(U[tau, 1:], scaled)
    return U


def _profile_rho(sys, gamma, N, J, S, norm):
    U = _response_envelope(sys, gamma, N, J, S)
    taus = np.arange(N)
    if norm == "phase":
        V = U.copy()
        decay = math.exp(-gamma)
        for s in range(1, S + 1):
            V[:, s] = np.maximum(decay * V[:, s - 1], U[:, s])
        U = V
    elif norm != "state":
        raise ValueError(f"norm must be 'state' or 'phase', got {norm!r}")
    rho = np.array([np.max(U[taus <= N - s, s]) for s in range(1, S + 1)])
    return rho


def decay_profile(sys: KernelSystem, gamma: float, N: int, J: int, max_lag: int | None = None,
                  norm: str = "state", doubled: bool = True) -> DecayProfile:
    """rho(s) = max over tau <= N - s and unit probes of the response at lag s.

    ``norm="state"`` measures |x(tau+s)|; ``norm="phase"`` measures the whole
    prehistory |x_{tau+s}| in B^gamma.  With ``doubled`` the profile is also
    computed on the window (2N, 2J) with lags up to 2S; ``rho_doubled[i]`` is
    the value at lag i + 1, so the first S entries line up with ``rho``.
    """
    if N < 2 or J < 0:
        raise ValueError("need N >= 2 and J >= 0")
    S = N // 2 if max_lag is None else max_lag
    if not 1 <= S <= N:
        raise ValueError("max_lag must lie in [1, N]")
    rho = _profile_rho(sys, gamma, N, J, S, norm)
    rho2 = _profile_rho(sys, gamma, 2 * N, 2 * J, 2 * S, norm) if doubled else None
    return DecayProfile(
        gamma=gamma,
        lags=np.arange(1, S + 1),
        rho=rho,
        probe_depth=J,
        window=N,
        norm=norm,
        rho_doubled=rho2,
        window_doubled=2 * N if doubled else None,
    )


# ---------------------------------------------------------------------------
# fits


class FitVerdict(str, Enum):
    CONSISTENT = "CONSISTENT"
    INCONSISTENT = "INCONSISTENT"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class FitResult:
    mode: str
    verdict: FitVerdict
    K: float
    nu: Optional[float]
    growth: Optional[float]
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "verdict": self.verdict.value,
            "K": self.K,
            "nu": self.nu,
            "growth": self.growth,
            "note": self.note,
        }


def _doubling_growth(profile: DecayProfile) -> Optional[float]:
    if profile.rho_doubled is None:
        return None
    a, b = profile.rho, profile.rho_doubled
    worst = 0.0
    for x, y in zip(a, b):
        if x > 0:
            worst = max(worst, y / x - 1)
        elif y > 0:
            return INF
    return worst


def stability_fit(profile: DecayProfile, mode: str = "UES", nu_min: float = NU_MIN,
                  growth_tol: float = GROWTH_TOL) -> FitResult:
    """Fit K e^{-nu s} (UES) or a constant bound K (US) to a decay profile."""
    rho = np.asarray(profile.rho, dtype=float)
    if rho.size == 0:
        raise ValueError("empty profile")
    mode = mode.upper()
    if mode == "US":
        K = float(np.max(rho))
        if profile.rho_doubled is None:
            return FitResult("US", FitVerdict.INCONCLUSIVE, K, None, None, "no window-doubling data")
        K2 = float(np.max(profile.rho_doubled))
        growth = 0.0 if K == 0 and K2 == 0 else (INF if K == 0 else K2 / K - 1)
        v = FitVerdict.CONSISTENT if growth < growth_tol else FitVerdict.INCONSISTENT
        return FitResult("US", v, K, 0.0, growth)
    if mode != "UES":
        raise ValueError("mode must be UES or US")

    S = len(rho)
    lags = np.asarray(profile.lags, dtype=float)
    sel = lags >= S / 4
    pos = sel & (rho > 0)
    growth = _doubling_growth(profile)
    if not np.any(rho > 0):
        nu, K = INF, 0.0
    elif pos.sum() < 2:
        return FitResult("UES", FitVerdict.INCONCLUSIVE, float(np.max(rho)), None, growth,
                         "fewer than two positive samples in the fit range")
    else:
        slope, _ = np.polyfit(lags[pos], np.log(rho[pos]), 1)
        nu = float(-slope)
        with np.errstate(over="ignore"):
            K = float(np.max(rho * np.exp(nu * lags)))
    if growth is None:
        return FitResult("UES", FitVerdict.INCONCLUSIVE, K, nu, None, "no window-doubling data")
    if abs(nu) < nu_min:
        return FitResult("UES", FitVerdict.INCONCLUSIVE, K, nu, growth,
                         "slope within tie-break band; see the US verdict")
    ok = nu >= nu_min and growth < growth_tol
    return FitResult("UES", FitVerdict.CONSISTENT if ok else FitVerdict.INCONSISTENT, K, nu, growth)


# ---------------------------------------------------------------------------
# kernel identification


class IdentificationError(RuntimeError):
    pass


def blackbox_from(sys: KernelSystem) -> Callable[[np.ndarray], np.ndarray]:
    """Input-output map f -> x(0..len(f)) of the system with zero initial data."""
    zero = PhaseVector.zero(sys.dim)

    def run(f):
        f = np.asarray(f, dtype=float).reshape(-1, sys.dim)
        return solve(sys, 0, zero, f, len(f)).values

    return run


def kernel_identify(blackbox: Callable[[np.ndarray], np.ndarray], n0: int, k_max: int, d: int) -> np.ndarray:
    """Recover L(n0+k, k), 0 <= k <= k_max, from input-output experiments.

    For each basis vector psi the forcing pins x_{n0+k} = E_{-k} psi, so the
    next state reads off one more column.  Returns shape (k_max+1, d, d).
    """
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    out = np.zeros((k_max + 1, d, d))
    eye = np.eye(d)
    for k1 in range(k_max + 1):
        for i in range(d):
            psi = eye[i]
            M = n0 + k1 + 1
            f = np.zeros((M, d))
            f[n0 - 1] = psi
            for k in range(k1):
                f[n0 + k] = -out[k][:, i]
            x = np.asarray(blackbox(f), dtype=float).reshape(-1, d)
            if x.shape[0] < M + 1:
                raise IdentificationError("black box returned a short trajectory")
            dev = max(
                float(np.max(np.abs(x[:n0]))) if n0 > 0 else 0.0,
                float(np.max(np.abs(x[n0] - psi))),
                float(np.max(np.abs(x[n0 + 1 : n0 + k1 + 1]))) if k1 > 0 else 0.0,
            )
            if dev > IDENTIFY_TOL:
                raise IdentificationError(
                    f"intermediate states deviate by {dev:.3e} at k1={k1}, psi=e_{i}; "
                    "the black box is not a kernel-determined delay system"
                )
            out[k1][:, i] = x[n0 + k1 + 1]
    return out


def kernel_bound_violations(mats: np.ndarray, G: float) -> list[int]:
    """Indices k where ||L(n0+k, k)|| exceeds 2^k G^{k+1} (G taken as max(1, G))."""
    G = max(1.0, G)
    return [k for k, m in enumerate(mats) if matrix_norm(m) > (2.0**k) * G ** (k + 1) * (1 + 1e-12)]


def projected_norm_bound(G: float, gamma: float, j: int) -> float:
    """Bound on sum_{m=j}^{0} e^{-m gamma} ||L(n, -m)|| from a gain constant G."""
    G = max(1.0, G)
    base = 2 * math.exp(gamma) * G
    return G * (base ** (-j + 1) - 1) / (base - 1)


# ---------------------------------------------------------------------------
# sufficient conditions in B^0


@dataclass(frozen=True)
class B0Report:
    condition_i: dict
    condition_ii: dict
    certified_by: Optional[str]
    gamma_ml_h_evidence: dict
    experimental: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "condition_i": self.condition_i,
            "condition_ii": self.condition_ii,
            "certified_by": self.certified_by,
            "gamma_ml_h_evidence": self.gamma_ml_h_evidence,
            "experimental": self.experimental,
        }


def _tail_partial_sums(sys: KernelSystem, l: int, N: int, power: float = 1.0):
    sums, exact = tail_sums(sys, 0.0, l, N)
    vals = sums**power
    half = float(np.sum(vals[: N // 2 + 1]))
    full = float(np.sum(vals[: N + 1]))
    return half, full, exact


def b0_sufficiency(sys: KernelSystem, N: int, seed: int = 0, l_max: int = 64,
                   p_interp: Optional[float] = None, workers: int | None = None) -> B0Report:
    """Evaluate the two B^0 sufficient conditions for uniform stability.

    (i)  sup_n ||L(n) P_{[-inf,-l]}|| < inf and a bounded (inf, inf) gain trace;
    (ii) sum_n ||L(n) P_{[-inf,-l]}|| < inf and a bounded (1, inf) gain trace.
    """
    resp = probe_responses(sys, N, seed, workers=workers)
    fading = find_fading_condition(sys, 0.0, N, l_max)
    g_inf = lplq_gain(sys, INF, INF, N, seed, responses=resp)
    cond_i = {
        "fading": fading.to_dict(),
        "gain_inf_inf": g_inf.to_dict(),
        "holds": fading.verdict is Verdict.HOLDS and g_inf.bounded,
    }

    best = None
    l = 1
    while l <= l_max:
        half, full, exact = _tail_partial_sums(sys, l, N)
        growth = 0.0 if full == 0 else (INF if half == 0 else full / half - 1)
        rec = {"l": l, "partial_sum_half": half, "partial_sum_full": full, "growth": growth, "exact": exact}
        if best is None or growth < best["growth"]:
            best = rec
        if growth < GROWTH_TOL:
            break
        l *= 2
    g_one = lplq_gain(sys, 1.0, INF, N, seed, responses=resp)
    cond_ii = {
        "tail_sum": best,
        "gain_1_inf": g_one.to_dict(),
        "holds": best["growth"] < GROWTH_TOL and g_one.bounded,
    }

    certified = "i" if cond_i["holds"] else ("ii" if cond_ii["holds"] else None)
    evidence = gamma_ml_h_evidence(sys, min(N, 64))

    experimental = None
    if p_interp is not None:
        half, full, exact = _tail_partial_sums(sys, 1, N, power=p_interp)
        g_p = lplq_gain(sys, p_interp, INF, N, seed, responses=resp)
        experimental = {
            "p": p_interp,
            "p_summed_tail_half": half,
            "p_summed_tail_full": full,
            "gain_p_inf": g_p.to_dict(),
            "note": "exploratory; no verdict asserted",
        }
    return B0Report(cond_i, cond_ii, certified, evidence, experimental)


def gamma_ml_h_evidence(sys: KernelSystem, M: int) -> dict:
    """Evaluate g -> x(., 0, 0; L H g) on single-coordinate probes in l^1(B^0).

    Finite probes cannot decide the inclusion into l^inf; the ratios are
    reported as evidence only.
    """
    d = sys.dim
    zero = PhaseVector.zero(d)
    worst, count = 0.0, 0
    depths = [j for j in (1, 2, 4, 8, 16, 32) if j < M]
    for t in sorted({0, M // 4}):
        for j in depths:
            for i in range(d):
                g = [None] * M
                g[t] = embed(np.eye(d)[i], -j)
                h = h_operator(g, M, dim=d)
                lh = np.array([apply(sys, n, h.at(n)) for n in range(M)])
                x = solve(sys, 0, zero, lh, M).values
                worst = max(worst, float(np.max(np.abs(x))))
                count += 1
    return {"probes": count, "horizon": M, "max_sup_ratio": worst, "note": "evidence only"}


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class StabilityReport:
    gamma: float
    p: float
    q: float
    ues: FitResult
    us: FitResult
    gain: GainEstimate
    fading: ConditionReport
    profile: DecayProfile
    theorem_check: tuple
    contradiction: bool
    gamma_grid: tuple = ()
    gamma_monotone: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "p": self.p,
            "q": self.q,
            "ues": self.ues.to_dict(),
            "us": self.us.to_dict(),
            "gain": self.gain.to_dict(),
            "fading": self.fading.to_dict(),
            "profile": self.profile.to_dict(),
            "theorem_check": list(self.theorem_check),
            "contradiction": self.contradiction,
            "gamma_grid": [list(t) for t in self.gamma_grid],
            "gamma_monotone": self.gamma_monotone,
        }


def _criterion_check(gain_ok: bool, fading: Verdict, fit: FitResult, label: str) -> tuple[list, bool]:
    notes = []
    if fading is not Verdict.HOLDS:
        notes.append(f"conditions of the {label} criterion not met; no contradiction")
        return notes, False
    if fit.verdict is FitVerdict.INCONCLUSIVE:
        notes.append(f"fading condition holds but the {label} fit is inconclusive; no check possible")
        return notes, False
    stable = fit.verdict is FitVerdict.CONSISTENT
    if gain_ok == stable:
        notes.append(
            f"fading condition holds; gain {'bounded' if gain_ok else 'unbounded'} and "
            f"{label} {'consistent' if stable else 'inconsistent'}, as predicted"
        )
        return notes, False
    notes.append(
        f"CONTRADICTION: fading condition holds, gain {'bounded' if gain_ok else 'unbounded'} "
        f"but {label} {'consistent' if stable else 'inconsistent'}"
    )
    return notes, True


def classify(sys: KernelSystem, gamma: float, p: float, q: float, N: int, J: int, seed: int = 0,
             gamma_grid: Sequence[float] = (), workers: int | None = None) -> StabilityReport:
    """Compare empirical gain, fading condition, and decay fits against the criteria."""
    if p > q:
        raise ValueError(f"need p <= q, got p={p}, q={q}")
    gain = lplq_gain(sys, p, q, N, seed, workers=workers)
    fading = find_fading_condition(sys, gamma, N)
    prof = decay_profile(sys, gamma, N, J, norm="phase")
    ues = stability_fit(prof, "UES")
    us = stability_fit(prof, "US")
    if ues.verdict is FitVerdict.CONSISTENT and (us.verdict is not FitVerdict.CONSISTENT or us.K > ues.K):
        us = FitResult("US", FitVerdict.CONSISTENT, min(us.K, ues.K), 0.0, us.growth, "implied by UES")

    notes: list[str] = []
    contradiction = False
    if gamma <= 0:
        notes.append(
            "gamma <= 0: the gain-based criteria are not asserted in this phase space; "
            "any combination of verdicts is admissible"
        )
        if gain.bounded and fading.verdict is Verdict.HOLDS and ues.verdict is FitVerdict.INCONSISTENT:
            notes.append("gain bounded and fading condition holds while UES is inconsistent (allowed for gamma <= 0)")
    elif p == 1 and q == INF:
        n, c = _criterion_check(gain.bounded, fading.verdict, us, "US")
        notes += n
        contradiction |= c
    else:
        n, c = _criterion_check(gain.bounded, fading.verdict, ues, "UES")
        notes += n
        contradiction |= c

    grid, monotone = (), None
    if gamma_grid:
        rows = []
        for g in sorted(set(float(x) for x in gamma_grid)):
            fit = stability_fit(decay_profile(sys, g, N, J, norm="phase"), "UES")
            rows.append((g, fit.verdict.value, fit.nu))
        grid = tuple(rows)
        monotone = True
        for i, (g, v, _) in enumerate(rows):
            if v == FitVerdict.CONSISTENT.value:
                if any(v2 != FitVerdict.CONSISTENT.value for _, v2, _ in rows[:i]):
                    monotone = False
        if not monotone:
            notes.append("UES verdicts are not monotone in gamma on this grid")
            contradiction = True
    return StabilityReport(gamma, p, q, ues, us, gain, fading, prof, tuple(notes), contradiction, grid, monotone)
