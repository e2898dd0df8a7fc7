from __future__ import annotations

import itertools
import math
from unittest.mock import patch

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from swselect.errors import InvalidArgumentError
from swselect.errors import SizeLimitError
from swselect.transport import DirectionSet
from swselect.transport import EmpiricalDistribution
from swselect.transport import exact_wasserstein
from swselect.transport import project
from swselect.transport import project_rows
from swselect.transport import sample_unit_directions
from swselect.transport import single_sample_bounds
from swselect.transport import sliced_wasserstein
from swselect.transport import wasserstein_1d

REL = 1e-9
ABS = 1e-12


def close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=REL, abs_tol=ABS)


def loo_pair(rows: np.ndarray, k: int, l: int):  # noqa: E741
    return (
        EmpiricalDistribution.leave_one_out(rows, k),
        EmpiricalDistribution.leave_one_out(rows, l),
    )


def test_directions_are_unit_vectors():
    dirs = sample_unit_directions(3, 5, seed=42)
    assert (5, 3) == dirs.directions.shape
    np.testing.assert_allclose(np.linalg.norm(dirs.directions, axis=1), 1.0, rtol=0, atol=1e-12)


def test_directions_in_one_dimension_are_signs():
    dirs = sample_unit_directions(1, 4, seed=7)
    assert set(dirs.directions.ravel().tolist()) <= {1.0, -1.0}


def test_directions_are_uniform_on_average():
    dirs = sample_unit_directions(2, 10000, seed=1)
    assert np.linalg.norm(dirs.directions.mean(axis=0)) < 0.05


def test_directions_are_reproducible():
    first = sample_unit_directions(4, 30, seed=123)
    second = sample_unit_directions(4, 30, seed=123)
    assert first.directions.tobytes() == second.directions.tobytes()
    other = sample_unit_directions(4, 30, seed=124)
    assert first.directions.tobytes() != other.directions.tobytes()


class ScriptedDraws:
    def __init__(self, *draws: np.ndarray) -> None:
        self.draws = list(draws)

    def standard_normal(self, shape):
        return self.draws.pop(0)[: shape[0]].copy()


def test_zero_draw_is_redrawn():
    fake = ScriptedDraws(np.array([[0.0, 0.0], [3.0, 4.0]]), np.array([[1.0, 0.0]]))
    with patch('swselect.transport.substream', return_value=fake):
        dirs = sample_unit_directions(2, 2, seed=0)
    assert [[1.0, 0.0], [0.6, 0.8]] == dirs.directions.tolist()
    assert [] == fake.draws


@pytest.mark.parametrize(('d', 'n'), [(0, 3), (3, 0)])
def test_directions_reject_empty_shapes(d, n):
    with pytest.raises(InvalidArgumentError):
        sample_unit_directions(d, n, seed=0)


def test_project_axis_and_diagonal():
    dist = EmpiricalDistribution(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert [1.0, 3.0] == project(dist, [1.0, 0.0]).tolist()
    assert [2.0, 4.0] == project(dist, [0.0, 1.0]).tolist()
    single = EmpiricalDistribution(np.array([[3.0, 4.0]]))
    assert math.isclose(5.0, project(single, [0.6, 0.8])[0])


def test_project_is_sorted():
    dist = EmpiricalDistribution(np.array([[5.0], [-1.0], [2.0]]))
    assert [-1.0, 2.0, 5.0] == project(dist, [1.0]).tolist()
    assert [-5.0, -2.0, 1.0] == project(dist, [-1.0]).tolist()


def test_project_dimension_mismatch():
    dist = EmpiricalDistribution(np.array([[1.0, 2.0]]))
    with pytest.raises(InvalidArgumentError):
        project(dist, [1.0, 0.0, 0.0])


def test_project_rows_matches_matmul():
    rows = np.random.default_rng(3).normal(size=(20, 4))
    dirs = sample_unit_directions(4, 7, seed=3)
    np.testing.assert_allclose(project_rows(rows, dirs.directions), rows @ dirs.directions.T)


def test_empirical_distribution_rejects_nan():
    with pytest.raises(InvalidArgumentError):
        EmpiricalDistribution(np.array([[0.0, np.nan]]))


def test_wasserstein_1d_examples():
    assert 0.0 == wasserstein_1d([0, 1, 2], [0, 1, 2], 2)
    assert 3.0 == wasserstein_1d([0], [3], 1)
    assert 1.0 == wasserstein_1d([0, 2], [1, 3], 1)


def test_wasserstein_1d_errors():
    with pytest.raises(InvalidArgumentError):
        wasserstein_1d([0, 1], [0], 1)
    with pytest.raises(InvalidArgumentError):
        wasserstein_1d([0], [1], 0.5)
    with pytest.raises(InvalidArgumentError):
        wasserstein_1d([1, 0], [0, 1], 1)


def test_exact_examples():
    a = EmpiricalDistribution(np.array([[0.0, 0.0], [1.0, 0.0]]))
    b = EmpiricalDistribution(np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert close(1.0, exact_wasserstein(a, b, 2, 'l2'))
    assert 0.0 == exact_wasserstein(a, a, 2)


def test_exact_l1_norm():
    a = EmpiricalDistribution(np.array([[0.0, 0.0]]))
    b = EmpiricalDistribution(np.array([[1.0, 1.0]]))
    assert close(2.0, exact_wasserstein(a, b, 1, 'l1'))
    assert close(math.sqrt(2.0), exact_wasserstein(a, b, 1, 'l2'))


def test_exact_size_limit():
    rows = np.zeros((513, 1))
    dist = EmpiricalDistribution(rows)
    with pytest.raises(SizeLimitError):
        exact_wasserstein(dist, dist, 1)


def test_exact_cardinality_mismatch():
    with pytest.raises(InvalidArgumentError):
        exact_wasserstein(
            EmpiricalDistribution(np.zeros((2, 1))), EmpiricalDistribution(np.zeros((3, 1))), 1
        )


def test_brute_force_and_assignment_agree():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = rng.normal(size=(8, 3))
        b = rng.normal(size=(8, 3))
        brute = exact_wasserstein(EmpiricalDistribution(a), EmpiricalDistribution(b), 2)
        padded_a = np.vstack([a, np.full((1, 3), 50.0)])
        padded_b = np.vstack([b, np.full((1, 3), 50.0)])
        solved = exact_wasserstein(
            EmpiricalDistribution(padded_a), EmpiricalDistribution(padded_b), 2
        )
        # the shared far atom stays put, so only the normalization changes
        assert close(brute**2 * 8 / 9, solved**2)


def test_sliced_identity_and_one_dimension():
    rng = np.random.default_rng(5)
    a = EmpiricalDistribution(rng.normal(size=(12, 1)))
    b = EmpiricalDistribution(rng.normal(size=(12, 1)))
    plus = DirectionSet(np.array([[1.0]]), seed=0, n_directions=1)
    for t in (1.0, 2.0, 3.0):
        assert 0.0 == sliced_wasserstein(a, a, t, plus)
        expected = wasserstein_1d(np.sort(a.atoms[:, 0]), np.sort(b.atoms[:, 0]), t)
        assert expected == sliced_wasserstein(a, b, t, plus)


def test_sliced_below_exact_on_point_sets():
    rng = np.random.default_rng(21)
    a = EmpiricalDistribution(rng.normal(size=(10, 2)))
    b = EmpiricalDistribution(rng.normal(loc=1.0, size=(10, 2)))
    dirs = sample_unit_directions(2, 500, seed=21)
    assert sliced_wasserstein(a, b, 2, dirs) <= exact_wasserstein(a, b, 2) + 1e-9


def test_sliced_is_deterministic():
    rng = np.random.default_rng(8)
    a = EmpiricalDistribution(rng.normal(size=(15, 3)))
    b = EmpiricalDistribution(rng.normal(size=(15, 3)))
    first = sliced_wasserstein(a, b, 2, sample_unit_directions(3, 64, seed=99))
    second = sliced_wasserstein(a, b, 2, sample_unit_directions(3, 64, seed=99))
    assert first == second


def test_sliced_dimension_mismatch():
    a = EmpiricalDistribution(np.zeros((3, 2)))
    with pytest.raises(InvalidArgumentError):
        sliced_wasserstein(a, a, 1, sample_unit_directions(3, 4, seed=0))


def test_single_sample_bounds_examples():
    bounds = single_sample_bounds([0.0, 0.0], [3.0, 4.0], 101, 1)
    assert close(0.05, bounds.lower)
    assert close(0.05, bounds.upper)
    bounds = single_sample_bounds([0.0, 0.0], [2.0, 0.0], 5, 2)
    assert close(0.5, bounds.lower)
    assert close(1.0, bounds.upper)


def test_single_sample_bounds_errors():
    with pytest.raises(InvalidArgumentError):
        single_sample_bounds([0.0], [1.0], 1, 1)
    with pytest.raises(InvalidArgumentError):
        single_sample_bounds([0.0], [1.0, 2.0], 4, 1)


def test_bounds_sandwich_all_pairs_small_set():
    rows = np.random.default_rng(10).normal(size=(10, 2))
    for k, l in itertools.combinations(range(10), 2):  # noqa: E741
        a, b = loo_pair(rows, k, l)
        bounds = single_sample_bounds(rows[k], rows[l], 10, 2)
        exact = exact_wasserstein(a, b, 2)
        assert bounds.lower - REL * bounds.lower <= exact <= bounds.upper * (1 + REL)


def test_bounds_sandwich_assignment_oracle():
    rng = np.random.default_rng(2024)
    rows = rng.normal(size=(100, 2))
    for _ in range(200):
        k, l = (int(x) for x in rng.choice(100, size=2, replace=False))  # noqa: E741
        a, b = loo_pair(rows, k, l)
        for t in (1.0, 2.0, 3.0):
            bounds = single_sample_bounds(rows[k], rows[l], 100, t)
            exact = exact_wasserstein(a, b, t)
            assert bounds.lower * (1 - REL) - ABS <= exact <= bounds.upper * (1 + REL) + ABS


# quarter-step lattice: distinct point sets stay measurably apart
finite = st.integers(min_value=-40, max_value=40).map(lambda v: v / 4)


@st.composite
def point_sets(draw, max_size=8, max_dim=3):
    size = draw(st.integers(min_value=1, max_value=max_size))
    dim = draw(st.integers(min_value=1, max_value=max_dim))
    cells = st.lists(finite, min_size=dim, max_size=dim)
    a = draw(st.lists(cells, min_size=size, max_size=size))
    b = draw(st.lists(cells, min_size=size, max_size=size))
    return np.array(a), np.array(b)


@given(point_sets(), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
@settings(max_examples=60, deadline=None)
def test_symmetry(pair, t):
    a, b = (EmpiricalDistribution(x) for x in pair)
    dirs = sample_unit_directions(a.dim, 16, seed=3)
    assert exact_wasserstein(a, b, t) == exact_wasserstein(b, a, t)
    assert sliced_wasserstein(a, b, t, dirs) == sliced_wasserstein(b, a, t, dirs)
    u, v = np.sort(pair[0][:, 0]), np.sort(pair[1][:, 0])
    assert wasserstein_1d(u, v, t) == wasserstein_1d(v, u, t)


@given(point_sets(max_size=6), st.sampled_from([1.0, 2.0]))
@settings(max_examples=40, deadline=None)
def test_identity_of_indiscernibles(pair, t):
    a, b = pair
    shuffled = EmpiricalDistribution(a[::-1])
    assert exact_wasserstein(EmpiricalDistribution(a), shuffled, t) <= ABS
    same = sorted(map(tuple, a.tolist())) == sorted(map(tuple, b.tolist()))
    distance = exact_wasserstein(EmpiricalDistribution(a), EmpiricalDistribution(b), t)
    assert same == (distance <= ABS)


@given(point_sets(max_size=7), st.sampled_from([1.0, 1.5, 2.0]), st.sampled_from([2.0, 3.0]))
@settings(max_examples=40, deadline=None)
def test_order_monotonicity(pair, t, q):
    a, b = (EmpiricalDistribution(x) for x in pair)
    low, high = min(t, q), max(t, q)
    assert exact_wasserstein(a, b, low) <= exact_wasserstein(a, b, high) * (1 + REL) + ABS


@given(point_sets(max_size=8), st.integers(min_value=0, max_value=2**32))
@settings(max_examples=40, deadline=None)
def test_projection_contraction(pair, seed):
    a, b = (EmpiricalDistribution(x) for x in pair)
    dirs = sample_unit_directions(a.dim, 50, seed=seed)
    for t in (1.0, 2.0):
        assert sliced_wasserstein(a, b, t, dirs) <= exact_wasserstein(a, b, t) + 1e-9


def test_projection_contraction_larger_sets():
    rng = np.random.default_rng(77)
    for trial in range(100):
        m = int(rng.integers(1, 31))
        d = int(rng.integers(2, 4))
        a = EmpiricalDistribution(rng.normal(size=(m, d)))
        b = EmpiricalDistribution(rng.normal(loc=0.5, size=(m, d)))
        dirs = sample_unit_directions(d, 200, seed=trial)
        assert sliced_wasserstein(a, b, 2, dirs) <= exact_wasserstein(a, b, 2) + 1e-9


def test_closed_form_matches_oracle_in_one_dimension():
    rng = np.random.default_rng(3)
    for _ in range(100):
        m = int(rng.integers(1, 51))
        t = float(rng.choice([1.0, 2.0, 3.0]))
        u = np.sort(rng.normal(size=m))
        v = np.sort(rng.normal(scale=2.0, size=m))
        oracle = exact_wasserstein(EmpiricalDistribution(u), EmpiricalDistribution(v), t)
        assert close(oracle, wasserstein_1d(u, v, t))


def test_single_sample_plan_is_optimal_at_order_one():
    rng = np.random.default_rng(50)
    for _ in range(50):
        n = int(rng.integers(4, 11))
        d = int(rng.integers(1, 6))
        rows = rng.normal(size=(n, d))
        for k, l in itertools.combinations(range(n), 2):  # noqa: E741
            a, b = loo_pair(rows, k, l)
            expected = np.linalg.norm(rows[k] - rows[l]) / (n - 1)
            assert close(expected, exact_wasserstein(a, b, 1))


@given(
    st.integers(min_value=5, max_value=12),
    st.integers(min_value=1, max_value=3),
    st.sampled_from([1.0, 2.0, 3.0]),
    st.integers(min_value=0, max_value=2**32),
)
@settings(max_examples=25, deadline=None)
def test_bounds_sandwich_brute_force(n, d, t, seed):
    rows = np.random.default_rng(seed).normal(size=(n, d))
    k, l = 0, n - 1  # noqa: E741
    a, b = loo_pair(rows, k, l)
    bounds = single_sample_bounds(rows[k], rows[l], n, t)
    exact = exact_wasserstein(a, b, t)
    assert bounds.lower * (1 - REL) - ABS <= exact <= bounds.upper * (1 + REL) + ABS
