import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaystab.phase_space import PhaseVector, embed
from delaystab.registry import builtin, random_system
from delaystab.system import (
    KernelSystem,
    TailCertificate,
    Verdict,
    apply,
    fading_condition,
    find_fading_condition,
    first_order,
    from_bounded_delay,
    is_subdiagonal,
    operator_norm_interval,
    subdiagonalize,
    zero_system,
)


def test_apply_half_plus_memory_system():
    s = builtin("ex6.3")
    assert np.array_equal(apply(s, 5, embed([3.0], 0)), [1.5])
    # the k = n term reaches the initial value
    assert np.array_equal(apply(s, 5, embed([3.0], -5)), [3.0])


def test_apply_zero_vector():
    s = builtin("ex6.5", delta=1.0)
    assert np.array_equal(apply(s, 4, PhaseVector.zero(1)), [0.0])


def test_apply_volterra():
    assert apply(builtin("sec7"), 0, embed([1.0], 0))[0] == 0.5


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(builtin("ex6.3"), 0, embed([1.0, 2.0], 0))


def test_operator_norm_examples():
    s = builtin("ex6.4")
    for n in (1, 5, 30):
        assert operator_norm_interval(s, n, 0.0, n + 2) == (2.0, 2.0)
    assert operator_norm_interval(zero_system(2), 3, 0.5, 10) == (0.0, 0.0)
    lo, hi = operator_norm_interval(builtin("sec7"), 0, 0.0, 3)
    assert lo == pytest.approx(0.8, rel=1e-15)
    assert hi == pytest.approx(1.0, rel=1e-12)


def test_operator_norm_uses_certificate():
    cert = TailCertificate(1.0, 0.5)
    s = KernelSystem(dim=1, kernel=lambda n, k: np.array([[0.5**k]]), tail_certificate=cert)
    lo, hi = operator_norm_interval(s, 0, 0.0, 10)
    assert lo == pytest.approx(2 - 0.5**10, rel=1e-14)
    assert hi == pytest.approx(2.0, rel=1e-14)
    # e^gamma rho >= 1: no finite bound
    assert math.isinf(operator_norm_interval(s, 0, 1.0, 10)[1])


def test_no_bound_without_certificate():
    s = KernelSystem(dim=1, kernel=lambda n, k: np.array([[0.5**k]]))
    assert math.isinf(operator_norm_interval(s, 0, 0.0, 10)[1])


def test_fading_examples():
    r = fading_condition(builtin("ex6.3"), 0.0, 1, 50)
    assert r.verdict is Verdict.HOLDS and r.uniform_bound == 1.0
    r = fading_condition(builtin("ex6.5", delta=1.0), 1.0, 1, 64)
    assert r.verdict is Verdict.FAILS_EMPIRICALLY
    assert r.window_sup == pytest.approx(64.0, rel=1e-12)
    r = fading_condition(zero_system(), 0.3, 1, 10)
    assert r.verdict is Verdict.HOLDS and r.uniform_bound == 0.0


def test_fading_bounded_delay_empty_tail():
    s = from_bounded_delay(lambda n, k: np.array([[0.3]]), 3)
    r = fading_condition(s, 2.0, 3, 20)
    assert r.verdict is Verdict.HOLDS and r.uniform_bound == 0.0
    assert find_fading_condition(s, 2.0, 20).verdict is Verdict.HOLDS


def test_bounded_delay_constructors():
    A = first_order(lambda n: [[2.0, 0.0], [1.0, 1.0]])
    assert A.order == 1
    assert np.array_equal(A.L(3, 0), [[2.0, 0.0], [1.0, 1.0]])
    assert not A.L(3, 1).any()
    s = from_bounded_delay(lambda n, k: np.array([[0.25 if k == 0 else -1.0]]), 2)
    phi = PhaseVector(1, {0: [2.0], 1: [3.0], 2: [7.0]})
    assert apply(s, 4, phi)[0] == 0.25 * 2.0 - 3.0


def test_subdiagonalize_examples():
    s = builtin("ex6.3")
    sd = subdiagonalize(s)
    for n in range(8):
        for k in range(10):
            want = 0.5 if (k == 0 and n >= 1) else 0.0
            assert sd.L(n, k)[0, 0] == want
    assert is_subdiagonal(sd, 20)
    assert not is_subdiagonal(s, 20)
    assert subdiagonalize(sd) is sd


def test_subdiagonalize_idempotent_on_random_systems():
    rng = np.random.default_rng(3)
    for _ in range(10):
        s = random_system(rng)
        once, twice = subdiagonalize(s), subdiagonalize(subdiagonalize(s))
        assert np.array_equal(once.table(12, 12), twice.table(12, 12))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 15), st.integers(0, 15))
def test_kernel_consistency(seed, n, k):
    rng = np.random.default_rng(seed)
    s = random_system(rng)
    psi = rng.normal(size=s.dim)
    assert np.allclose(apply(s, n, embed(psi, -k)), s.L(n, k) @ psi, rtol=1e-14, atol=0)


def test_table_matches_kernel():
    s = builtin("sec7")
    T = s.table(6, 9)
    for n in range(7):
        for k in range(10):
            assert T[n, k, 0, 0] == s.L(n, k)[0, 0]
