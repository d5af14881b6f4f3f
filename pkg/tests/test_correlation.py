import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrnet.correlation import CorrelationMatrix, correlation_matrix, mean_correlation
from corrnet.errors import InsufficientData
from corrnet.returns import ReturnPanel, log_returns, normalize
from corrnet.synth import Block, SynthSpec, generate

from conftest import make_panel


def _normed(values):
    values = np.asarray(values, dtype=float)
    panel = make_panel(np.ones((values.shape[0] + 1, values.shape[1])))
    return normalize(ReturnPanel(panel.dates[1:], panel.instruments, values))


def naive_pearson(x, y):
    """Two-pass textbook Pearson coefficient in plain Python."""
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def test_identical_columns():
    x = [0.01, -0.02, 0.015, 0.003]
    corr = correlation_matrix(_normed(np.column_stack([x, x])))
    assert corr.values[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_negated_column():
    x = np.array([0.01, -0.02, 0.015, 0.003])
    corr = correlation_matrix(_normed(np.column_stack([x, -x])))
    assert corr.values[0, 1] == pytest.approx(-1.0, abs=1e-12)


def test_bivariate_gaussian_recovery():
    spec = SynthSpec(seed=7, n_instruments=2, n_days=261, blocks=(Block(0.6, size=2),))
    returns = log_returns(generate(spec))
    corr = correlation_matrix(normalize(returns))
    oracle = naive_pearson(returns.values[:, 0].tolist(), returns.values[:, 1].tolist())
    assert corr.values[0, 1] == pytest.approx(oracle, abs=1e-12)
    assert abs(corr.values[0, 1] - 0.6) <= 0.12


def test_brute_force_equivalence():
    rng = np.random.default_rng(11)
    for _ in range(25):
        values = rng.normal(0, 0.01, (20, 5)) + rng.normal(0, 0.01, (20, 1))
        corr = correlation_matrix(_normed(values))
        for i in range(5):
            for j in range(5):
                expected = naive_pearson(values[:, i].tolist(), values[:, j].tolist())
                assert abs(corr.values[i, j] - expected) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(3, 40))
def test_matrix_invariants(seed, n, t):
    rng = np.random.default_rng(seed)
    values = rng.normal(0, 0.01, (t, n)) + rng.normal(0, 0.01, (t, 1))
    corr = correlation_matrix(_normed(values))
    assert np.array_equal(corr.values, corr.values.T)
    assert np.all(np.diag(corr.values) == 1.0)
    assert np.all(np.abs(corr.values) <= 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(range(5)))
def test_permutation_consistency(seed, perm):
    rng = np.random.default_rng(seed)
    values = rng.normal(0, 0.01, (30, 5)) + rng.normal(0, 0.01, (30, 1))
    base = correlation_matrix(_normed(values))
    permuted = correlation_matrix(_normed(values[:, perm]))
    np.testing.assert_allclose(permuted.values, base.values[np.ix_(perm, perm)], atol=1e-14)
    assert mean_correlation(permuted) == pytest.approx(mean_correlation(base), abs=1e-14)


def test_needs_two_instruments():
    with pytest.raises(InsufficientData):
        correlation_matrix(_normed(np.array([[0.01], [0.02], [0.04]])))


def test_excluded_instruments_absent():
    values = np.column_stack([[0.01, 0.03, -0.02, 0.0], [0.02, 0.01, 0.0, 0.01], [0.0] * 4])
    corr = correlation_matrix(_normed(values))
    assert corr.instruments == ("I0", "I1")


@pytest.mark.parametrize("pairs,expected", [
    ([0.4], 0.4),
    ([0.0, 0.0, 0.0], 0.0),
    ([0.1, 0.2, 0.3], 0.2),
])
def test_mean_correlation(pairs, expected):
    n = 2 if len(pairs) == 1 else 3
    values = np.eye(n)
    values[np.triu_indices(n, 1)] = pairs
    values = values + np.triu(values, 1).T
    assert mean_correlation(CorrelationMatrix(tuple("abc"[:n]), values)) == pytest.approx(expected)


def test_asymmetric_matrix_rejected():
    with pytest.raises(ValueError):
        CorrelationMatrix(("a", "b"), np.array([[1.0, 0.5], [0.4, 1.0]]))
