import itertools
import math

import numpy as np
import pytest

import entropies
from entropies import (
    EntropyMethod,
    conditional_entropy,
    conditional_info_variance,
    guessing_probability,
    hypothesis_testing_entropy_classical,
    inner_trace_radius,
    max_conditional_fidelity,
    max_entropy_zero,
    min_entropy_zero,
    normal_cdf,
    normal_quantile,
    outer_trace_radius,
    relative_entropy,
    second_order_band,
    second_order_hypothesis_testing,
    second_order_min_entropy,
    smooth_max_entropy_classical,
    smooth_min_entropy_classical,
)
from exceptions import ConvergenceError, SupportError, ValidationError
from matrix_core import DensityOperator, trace_norm
from model import CqState, InputDistribution
from optimizer import simplex_grid
from tests.helpers import random_density, random_joint


def _classical_state(P):
    p_x = P.sum(axis=1)
    return CqState.classical(InputDistribution(p_x), P / p_x[:, None])


def _random_instances(rng, count):
    for _ in range(count):
        nx, ny = rng.integers(2, 5, size=2)
        yield random_joint(rng, nx, ny)


def test_min_entropy_matches_exhaustive_guessing(rng):
    for P in _random_instances(rng, 200):
        nx, ny = P.shape
        best = max(
            sum(P[g[y], y] for y in range(ny))
            for g in itertools.product(range(nx), repeat=ny)
        )
        assert min_entropy_zero(_classical_state(P)).value == pytest.approx(-math.log2(best), abs=1e-9)


def test_max_entropy_matches_sigma_grid(rng):
    for P in _random_instances(rng, 200):
        report = max_entropy_zero(_classical_state(P))
        roots = np.sqrt(P).sum(axis=0)
        sigma = np.asarray(report.metadata["sigma_B"])
        at_sigma = float(np.sqrt(sigma) @ roots) ** 2
        assert report.value == pytest.approx(math.log2(at_sigma), abs=1e-9)
        grid = simplex_grid(P.shape[1], 0.05)
        grid_best = float(((np.sqrt(grid) @ roots) ** 2).max())
        assert math.log2(grid_best) <= report.value + 1e-9


def test_max_entropy_is_fidelity_with_best_sigma(rng):
    P = random_joint(rng, 2, 3)
    report = max_entropy_zero(_classical_state(P))
    sigma = np.asarray(report.metadata["sigma_B"])
    joint = np.diag(P.ravel())
    product = np.kron(np.eye(2), np.diag(sigma))
    roots = np.sqrt(joint) @ np.sqrt(product)
    fid = float(np.sum(np.linalg.svd(roots, compute_uv=False)) ** 2)
    assert report.value == pytest.approx(math.log2(fid), abs=1e-9)


def test_guessing_probability_matches_helstrom(rng):
    for _ in range(100):
        p0 = float(rng.uniform(0.1, 0.9))
        rho0, rho1 = random_density(rng, 2), random_density(rng, 2)
        state = CqState.quantum(InputDistribution([p0, 1 - p0]), [rho0, rho1])
        helstrom = 0.5 + 0.5 * trace_norm(p0 * rho0 - (1 - p0) * rho1)
        report = min_entropy_zero(state)
        assert report.method is EntropyMethod.ITERATIVE_DISCRIMINATION
        assert report.value == pytest.approx(-math.log2(helstrom), abs=1e-6)


def test_guessing_bracket_contains_optimum(rng):
    rho0, rho1 = random_density(rng, 2), random_density(rng, 2)
    result = guessing_probability([0.4 * rho0, 0.6 * rho1])
    lower, upper = result["bracket"]
    helstrom = 0.5 + 0.5 * trace_norm(0.4 * rho0 - 0.6 * rho1)
    assert lower - 1e-12 <= helstrom <= upper + 1e-12
    assert sum(result["povm"]) == pytest.approx(np.eye(2), abs=1e-9)


def test_fidelity_ascent_agrees_with_closed_form(rng):
    P = random_joint(rng, 3, 3)
    state = _classical_state(P)
    result = max_conditional_fidelity(state.weighted_blocks())
    assert 2 * math.log2(result["value"]) == pytest.approx(max_entropy_zero(state).value, abs=1e-6)


def test_entropy_ordering_classical(rng):
    for P in _random_instances(rng, 100):
        state = _classical_state(P)
        h = conditional_entropy(state)
        assert min_entropy_zero(state).value <= h + 1e-12
        assert h <= max_entropy_zero(state).value + 1e-12


def test_entropy_ordering_quantum(rng):
    for _ in range(20):
        k = int(rng.integers(2, 4))
        probs = rng.dirichlet(np.ones(k))
        blocks = [random_density(rng, 2) for _ in range(k)]
        state = CqState.quantum(InputDistribution(probs), blocks)
        h = conditional_entropy(state)
        assert min_entropy_zero(state).value <= h + 1e-6
        assert h <= max_entropy_zero(state).value + 1e-6


def test_conditional_entropy_of_bell_state():
    bell = DensityOperator.pure([1, 0, 0, 1])
    assert conditional_entropy(bell, (2, 2)) == pytest.approx(-1.0)
    assert conditional_info_variance(bell, (2, 2)) == pytest.approx(0.0, abs=1e-9)


def test_conditional_entropy_of_binary_symmetric():
    f = 0.11
    state = CqState.classical(InputDistribution.uniform(2), [[1 - f, f], [f, 1 - f]])
    h2 = -f * math.log2(f) - (1 - f) * math.log2(1 - f)
    assert conditional_entropy(state) == pytest.approx(h2)
    v = f * (1 - f) * math.log2((1 - f) / f) ** 2
    assert conditional_info_variance(state) == pytest.approx(v)


def test_relative_entropy_support_condition():
    with pytest.raises(SupportError):
        relative_entropy(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]))
    assert relative_entropy(np.diag([1.0, 0.0]), np.diag([0.5, 0.5])) == pytest.approx(1.0)


def test_smooth_min_entropy_removes_top_mass():
    P = np.array([[0.9], [0.1]])
    assert smooth_min_entropy_classical(P, 0.0).value == pytest.approx(-math.log2(0.9))
    smoothed = smooth_min_entropy_classical(P, 0.1)
    assert smoothed.method is EntropyMethod.BISECTION_LP
    assert smoothed.value == pytest.approx(-math.log2(0.8), abs=2e-4)
    assert smoothed.metadata["purified_radius_outer"] == pytest.approx(math.sqrt(0.1))
    assert smooth_min_entropy_classical(P, 1.0).value == math.inf


def test_smooth_min_entropy_monotone_in_radius(rng):
    P = random_joint(rng, 3, 2)
    values = [smooth_min_entropy_classical(P, r).value for r in (0.0, 0.02, 0.05, 0.1)]
    for a, b in zip(values, values[1:]):
        assert b >= a - 1e-4


def test_smooth_max_entropy_drops_light_atom():
    P = np.array([[0.9], [0.1]])
    assert smooth_max_entropy_classical(P, 0.0).value == pytest.approx(math.log2(1.6))
    assert smooth_max_entropy_classical(P, 0.1).value == pytest.approx(math.log2(0.9), abs=1e-9)
    assert smooth_max_entropy_classical(P, 1.0).value == -math.inf


def test_smooth_max_entropy_monotone_in_radius(rng):
    P = random_joint(rng, 3, 3)
    values = [smooth_max_entropy_classical(P, r).value for r in (0.0, 0.02, 0.05, 0.1)]
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-9


def test_smoothing_rejects_negative_radius():
    with pytest.raises(ValidationError):
        smooth_min_entropy_classical(np.array([[1.0]]), -0.1)


def test_hypothesis_testing_entropy_uniform_bit():
    P = np.array([[0.5], [0.5]])
    assert hypothesis_testing_entropy_classical(P, [1.0], 0.0).value == pytest.approx(1.0)
    assert hypothesis_testing_entropy_classical(P, [1.0], 0.5).value == pytest.approx(0.0)
    assert hypothesis_testing_entropy_classical(P, [1.0], 1.0).value == -math.inf


def test_hypothesis_testing_entropy_decreases_with_eps(rng):
    P = random_joint(rng, 3, 3)
    sigma = P.sum(axis=0)
    values = [hypothesis_testing_entropy_classical(P, sigma, e).value for e in (0.01, 0.1, 0.3)]
    assert values[0] >= values[1] >= values[2]


def test_trace_radius_conversions():
    assert inner_trace_radius(0.1) == pytest.approx(0.01)
    assert outer_trace_radius(0.1) == pytest.approx(0.2)


def test_normal_functions():
    assert normal_cdf(0.0) == pytest.approx(0.5)
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    assert normal_quantile(0.5) == 0.0
    with pytest.raises(ValidationError):
        normal_quantile(1.0)


def test_second_order_expansions():
    assert second_order_band(1) == 0.0
    assert second_order_band(1024) == pytest.approx(10.0)
    assert second_order_min_entropy(0.5, 0.0, 10, 0.1) == pytest.approx(5.0)
    q = normal_quantile(0.01)
    assert second_order_min_entropy(0.5, 4.0, 100, 0.1) == pytest.approx(50 + 20 * q)
    assert second_order_hypothesis_testing(0.5, 4.0, 100, 0.01) == pytest.approx(50 - 20 * q)
    with pytest.raises(ValidationError):
        second_order_min_entropy(0.5, 1.0, 0, 0.1)


def test_conditional_entropy_routes_must_agree(monkeypatch):
    f = 0.11
    state = CqState.classical(InputDistribution.uniform(2), [[1 - f, f], [f, 1 - f]])
    exact = entropies.classical_conditional_entropy(state.joint_table())
    monkeypatch.setattr(entropies, "classical_conditional_entropy", lambda joint: exact + 1e-6)
    with pytest.raises(ConvergenceError) as info:
        conditional_entropy(state)
    low, high = info.value.bracket
    assert low == pytest.approx(exact, abs=1e-9)
    assert high == pytest.approx(exact + 1e-6, abs=1e-9)
