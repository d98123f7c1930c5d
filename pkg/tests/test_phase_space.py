import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaystab.phase_space import (
    SUP,
    PhaseVector,
    WeightSpec,
    embed,
    matrix_norm,
    norm,
    project,
    seq_norm,
    shift_pow,
    state_norm,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


@st.composite
def phase_vectors(draw, dim=None, max_depth=15):
    d = dim or draw(st.integers(1, 3))
    depths = draw(st.lists(st.integers(0, max_depth), max_size=6, unique=True))
    supp = {j: np.array(draw(st.lists(finite, min_size=d, max_size=d))) for j in depths}
    return PhaseVector(d, supp)


def test_embedding_norm_is_state_norm():
    psi = np.array([3.0, -4.0])
    for w in (WeightSpec(0.7), WeightSpec(-2.0, 3), 5.0):
        assert norm(embed(psi, 0), w) == 4.0


def test_unweighted_sup():
    phi = PhaseVector(1, {0: [1.0], 2: [3.0]})
    assert norm(phi, WeightSpec(0.0)) == 3.0


def test_weighted_two_norm():
    phi = PhaseVector(1, {0: [1.0], 1: [1.0]})
    assert norm(phi, WeightSpec(math.log(2), 2)) == pytest.approx(math.sqrt(5) / 2, rel=1e-15)


def test_zero_vector_has_zero_norm_and_prunes():
    assert norm(PhaseVector(2, {3: [0.0, 0.0]}), 1.0) == 0.0
    assert PhaseVector(2, {3: [0.0, 0.0]}).is_zero()
    assert embed([0.0], -5).is_zero()


def test_shift_examples():
    psi = np.array([2.0])
    assert shift_pow(embed(psi, -1), 1) == embed(psi, -2)
    phi = PhaseVector(1, {0: [1.0], 3: [2.0]})
    assert shift_pow(phi, 0) is phi


def test_project_examples():
    phi = PhaseVector(1, {0: [1.0], 3: [2.0]})
    assert project(phi, -math.inf, 0) == phi
    assert project(embed([1.0], -3), -1, 0).is_zero()
    with pytest.raises(ValueError):
        project(phi, 0, -1)
    with pytest.raises(ValueError):
        project(phi, -2, 1)


def test_embed_weight():
    assert norm(embed([2.0], -4), WeightSpec(0.5)) == pytest.approx(2.0 * math.exp(-2.0), rel=1e-15)
    with pytest.raises(ValueError):
        embed([1.0], 1)


def test_seq_norm_examples():
    assert seq_norm([1, 1, 1, 1], 1) == 4.0
    assert seq_norm([3, -4], math.inf) == 4.0
    assert seq_norm([], 2) == 0.0
    with pytest.raises(ValueError):
        seq_norm([1.0], 0.5)


def test_dimension_mismatch_and_bad_weights():
    with pytest.raises(ValueError):
        PhaseVector(1, {0: [1.0]}) + PhaseVector(2, {0: [1.0, 2.0]})
    with pytest.raises(ValueError):
        WeightSpec(0.0, 0.5)
    with pytest.raises(ValueError):
        PhaseVector(1, {-1: [1.0]})


def test_state_and_matrix_norms():
    assert state_norm([1.0, -7.0, 2.0]) == 7.0
    assert matrix_norm([[1.0, -2.0], [0.5, 0.5]]) == 3.0


def test_huge_weights_use_log_domain():
    phi = embed([1.0], -2000)
    assert norm(phi, WeightSpec(1.0)) == 0.0 or norm(phi, WeightSpec(1.0)) < 1e-300
    assert math.isinf(norm(phi, WeightSpec(-1.0)))


@given(phase_vectors(), st.floats(-3, 3), st.integers(0, 8))
def test_shift_scales_norm(phi, gamma, j):
    got = norm(shift_pow(phi, j), WeightSpec(gamma))
    want = math.exp(-j * gamma) * norm(phi, WeightSpec(gamma))
    assert got == pytest.approx(want, rel=1e-12, abs=0)


@given(phase_vectors(), st.floats(-3, 3))
def test_top_coordinate_decomposition(phi, gamma):
    top = project(phi, 0, 0)
    assert norm(phi, gamma) == max(norm(top, gamma), norm(phi - top, gamma))


@given(phase_vectors(), st.floats(-3, 3), st.floats(0, 3))
def test_larger_weight_gives_smaller_norm(phi, gamma, extra):
    assert norm(phi, gamma + extra) <= norm(phi, gamma) * (1 + 1e-12)


@given(phase_vectors(), st.floats(0.05, 3), st.integers(1, 4))
def test_summable_space_sandwich(phi, neg, r):
    gamma = -neg
    lo = norm(phi, WeightSpec(0.0))
    mid = norm(phi, WeightSpec(0.0, r))
    hi = (1 - math.exp(gamma * r)) ** (-1 / r) * norm(phi, WeightSpec(gamma))
    assert lo <= mid * (1 + 1e-12)
    assert mid <= hi * (1 + 1e-12)


@given(st.lists(finite, min_size=1, max_size=30), st.floats(1, 6), st.floats(0, 6))
def test_seq_norm_decreases_in_p(u, p, extra):
    assert seq_norm(u, p + extra) <= seq_norm(u, p) * (1 + 1e-12)
    assert seq_norm(u, SUP) <= seq_norm(u, p) * (1 + 1e-12)


@given(phase_vectors(), st.integers(-12, 0), st.integers(-12, 0))
def test_projection_idempotent_and_additive(phi, a, b):
    m1, m2 = min(a, b), max(a, b)
    pr = project(phi, m1, m2)
    assert project(pr, m1, m2) == pr
    if m1 > -12:
        assert project(phi, -12, m1 - 1) + pr == project(phi, -12, m2)
    assert project(phi, -math.inf, m1 - 1 if m1 > -math.inf else m1) + project(phi, m1, 0) == phi or m1 == -math.inf


@given(phase_vectors(dim=2), phase_vectors(dim=2))
def test_arithmetic_round_trip(a, b):
    assert (a + b) - b == a or np.allclose((a + b - b).to_columns(20), a.to_columns(20))
    assert a - a == PhaseVector.zero(2)
    assert 2.0 * a == a + a


def test_columns_round_trip():
    cols = np.array([[1.0, 0.0], [0.0, 0.0], [2.0, -1.0]])
    phi = PhaseVector.from_columns(cols)
    assert phi.depths() == [0, 2]
    assert np.array_equal(phi.to_columns(), cols)
    assert np.array_equal(phi.coord(-2), [2.0, -1.0])
    with pytest.raises(ValueError):
        phi.coord(1)
