import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaystab.analysis import (
    FitVerdict,
    IdentificationError,
    b0_sufficiency,
    blackbox_from,
    classify,
    decay_profile,
    kernel_bound_violations,
    kernel_identify,
    lplq_gain,
    probe_responses,
    projected_norm_bound,
    resolvent,
    stability_fit,
)
from delaystab.phase_space import WeightSpec, embed, norm, seq_norm
from delaystab.registry import builtin, random_system
from delaystab.solver import solve
from delaystab.system import Verdict, zero_system


def brute_profile(sys, gamma, N, J, S, phase):
    """rho(s) by direct simulation of every unit probe from every start time."""
    d = sys.dim
    rho = np.zeros(S)
    for tau in range(N):
        for j in range(J + 1):
            for i in range(d):
                phi = embed(math.exp(j * gamma) * np.eye(d)[i], -j)
                tr = solve(sys, tau, phi, None, min(N, tau + S))
                for s in range(1, min(S, N - tau) + 1):
                    if phase:
                        v = norm(tr.prehistory(tau + s), WeightSpec(gamma))
                    else:
                        v = float(np.max(np.abs(tr.at(tau + s))))
                    rho[s - 1] = max(rho[s - 1], v)
    return rho


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.4, -0.3]), st.booleans())
def test_profile_matches_brute_force(seed, gamma, phase):
    rng = np.random.default_rng(seed)
    s = random_system(rng, order=int(rng.integers(1, 6)))
    N, J, S = 10, 4, 6
    prof = decay_profile(s, gamma, N, J, max_lag=S, norm="phase" if phase else "state", doubled=False)
    want = brute_profile(s, gamma, N, J, S, phase)
    assert np.allclose(prof.rho, want, rtol=1e-10, atol=1e-300)


def test_profile_brute_force_on_infinite_memory():
    s = builtin("sec7")
    prof = decay_profile(s, 0.0, 12, 6, max_lag=6, doubled=False)
    assert np.allclose(prof.rho, brute_profile(s, 0.0, 12, 6, 6, False), rtol=1e-12)


def test_profile_examples():
    assert not decay_profile(zero_system(), 0.5, 20, 5, doubled=False).rho.any()
    prof = decay_profile(builtin("ex6.4"), 0.0, 60, 10, max_lag=30, doubled=False)
    assert np.array_equal(prof.rho, 1.0 + prof.lags)
    N = 40
    prof = decay_profile(builtin("ex6.5", delta=1.0), 1.0, N, N, max_lag=10, doubled=False)
    s = prof.lags
    assert np.all(prof.rho >= (N - 1) * np.exp(-(s - 1.0)) * (1 - 1e-12))


def test_resolvent_identity_columns():
    s = random_system(np.random.default_rng(2), dim=2)
    R = resolvent(s, 6)
    for t in range(7):
        assert np.array_equal(R[t, :, t, :], np.eye(2))
        assert not R[t, :, t + 1 :, :].any()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1.0, 1.0), (1.0, 2.0), (2.0, math.inf), (1.0, math.inf)]))
def test_gain_is_a_sound_lower_bound(seed, pq):
    p, q = pq
    s = random_system(np.random.default_rng(seed))
    N = 24
    F, X = probe_responses(s, N, seed=seed)
    g = lplq_gain(s, p, q, N, responses=(F, X))
    for f, x in zip(F, X):
        assert seq_norm(x, q) <= g.value * seq_norm(f, p) + 1e-12
    vals = [v for _, v in g.growth_trace]
    assert vals == sorted(vals)


def test_gain_examples():
    s = builtin("ex6.1", a="harmonic")
    g = lplq_gain(s, 1.0, 1.0, 80)
    assert g.value >= 1 + math.fsum(1 / k for k in range(1, 80)) - 1e-9
    assert lplq_gain(s, 1.0, 2.0, 80).value <= 1 + math.pi / math.sqrt(6)
    assert lplq_gain(builtin("ex6.3"), math.inf, math.inf, 80).value <= 2.0
    with pytest.raises(ValueError):
        lplq_gain(s, 2.0, 1.0, 80)


def test_fit_examples():
    s = builtin("ex6.5", delta=1.0)
    fit = stability_fit(decay_profile(s, 0.5, 200, 100, norm="phase"), "UES")
    assert fit.verdict is FitVerdict.CONSISTENT and 0.4 <= fit.nu <= 0.6
    prof = decay_profile(builtin("ex6.3"), 0.0, 120, 40, norm="phase")
    assert stability_fit(prof, "US").verdict is FitVerdict.CONSISTENT
    assert stability_fit(prof, "US").K == pytest.approx(2.0, rel=1e-6)
    assert stability_fit(prof, "UES").verdict is not FitVerdict.CONSISTENT
    prof = decay_profile(builtin("ex6.4"), 0.0, 60, 10)
    assert stability_fit(prof, "US").verdict is FitVerdict.INCONSISTENT


def test_state_norm_profile_sees_the_faster_rate():
    # the current state decays like e^{-delta s}; the shifted probe keeps the prehistory at e^{-gamma s}
    s = builtin("ex6.5", delta=1.0)
    nu_state = stability_fit(decay_profile(s, 0.5, 200, 100), "UES").nu
    nu_phase = stability_fit(decay_profile(s, 0.5, 200, 100, norm="phase"), "UES").nu
    assert nu_state > 0.9 and abs(nu_phase - 0.5) < 0.1


def test_fit_without_doubling_is_inconclusive():
    prof = decay_profile(builtin("ex6.5", delta=1.0), 0.5, 80, 40, doubled=False)
    assert stability_fit(prof, "UES").verdict is FitVerdict.INCONCLUSIVE
    assert stability_fit(prof, "US").verdict is FitVerdict.INCONCLUSIVE


def test_identify_examples():
    mats = kernel_identify(blackbox_from(builtin("ex6.3")), 5, 3, 1)
    assert mats[:, 0, 0].tolist() == [0.5, 0.0, 0.0, 0.0]
    mats = kernel_identify(blackbox_from(builtin("sec7")), 3, 1, 1)
    assert mats[0, 0, 0] == pytest.approx(math.exp(-3) / 2, rel=1e-14)
    assert mats[1, 0, 0] == pytest.approx(math.exp(-4) / 6, rel=1e-14)


def test_identify_random_systems_exactly():
    rng = np.random.default_rng(17)
    for _ in range(5):
        s = random_system(rng, order=4)
        for n0 in (1, 3, 7):
            mats = kernel_identify(blackbox_from(s), n0, 5, s.dim)
            truth = np.array([s.L(n0 + k, k) for k in range(6)])
            assert np.max(np.abs(mats - truth)) <= 1e-12
            G = lplq_gain(s, math.inf, math.inf, 24).value
            assert kernel_bound_violations(mats, G) == []


def test_identify_rejects_non_kernel_blackbox():
    def saturating(f):
        f = np.asarray(f, dtype=float).reshape(-1, 1)
        x = np.zeros((len(f) + 1, 1))
        for n in range(len(f)):
            x[n + 1] = np.tanh(0.5 * x[n] + f[n])
        return x

    with pytest.raises(IdentificationError):
        kernel_identify(saturating, 2, 3, 1)


def test_projected_norm_bound():
    assert projected_norm_bound(1.0, 0.0, 0) == 1.0
    assert projected_norm_bound(1.0, 0.0, -1) == pytest.approx(3.0)
    s = builtin("ex6.3")
    G = lplq_gain(s, math.inf, math.inf, 40).value
    n = 10
    for j in (0, -1, -3):
        lhs = sum(math.exp(-m * 0.2) * abs(s.L(n, -m)[0, 0]) for m in range(j, 1))
        assert lhs <= projected_norm_bound(G, 0.2, j)


def test_b0_sufficiency_examples():
    rep = b0_sufficiency(builtin("ex6.4p", a="geometric:0.5"), 200)
    assert rep.certified_by == "ii"
    rep = b0_sufficiency(builtin("ex6.4p", a="harmonic"), 400)
    assert not rep.condition_ii["holds"]
    s = random_system(np.random.default_rng(0), order=3, scale=0.3)
    assert b0_sufficiency(s, 100).condition_i["fading"]["verdict"] == Verdict.HOLDS.value
    exp = b0_sufficiency(builtin("ex6.4p", a="harmonic"), 100, p_interp=2.0).experimental
    assert exp["p"] == 2.0 and "no verdict" in exp["note"]


def test_classify_nonpositive_gamma_exclusion():
    rep = classify(builtin("ex6.3"), -1.0, 2.0, 2.0, 120, 40)
    assert rep.gain.bounded and rep.fading.verdict is Verdict.HOLDS
    assert rep.ues.verdict is FitVerdict.INCONSISTENT
    assert any("gamma <= 0" in t for t in rep.theorem_check)
    assert not rep.contradiction


def test_classify_sparse_jump_system_flags_unmet_conditions():
    rep = classify(builtin("ex6.2"), 0.5, 2.0, 2.0, 160, 160)
    assert rep.gain.bounded and rep.gain.value <= 2.0
    assert rep.fading.verdict is Verdict.FAILS_EMPIRICALLY
    assert rep.us.verdict is FitVerdict.INCONSISTENT
    assert any("not met; no contradiction" in t for t in rep.theorem_check)
    assert not rep.contradiction


def test_classify_gamma_grid_monotone():
    rep = classify(builtin("ex6.5", delta=1.0), 0.5, 2.0, 2.0, 160, 120, gamma_grid=[0.25, 0.5, 0.75, 1.0])
    verdicts = {g: v for g, v, _ in rep.gamma_grid}
    assert verdicts[0.25] == verdicts[0.5] == verdicts[0.75] == "CONSISTENT"
    assert verdicts[1.0] != "CONSISTENT"
    assert rep.gamma_monotone
    assert classify(builtin("ex6.5", delta=1.0), 1.0, 2.0, 2.0, 160, 160).us.verdict is FitVerdict.INCONSISTENT
