import numpy as np
import pytest

from exceptions import DimensionMismatchError, ValidationError
from matrix_core import (
    DensityOperator,
    HermitianOperator,
    fidelity,
    inverse_sqrt_on_support,
    nonpositive_part_projector,
    partial_trace,
    partial_trace_array,
    permute_factors,
    positive_part_projector,
    purified_distance,
    sqrt_psd,
    tensor,
    trace_norm,
)
from tests.helpers import random_density


def test_hermitian_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))


def test_hermitian_rejects_non_square():
    with pytest.raises(ValidationError):
        HermitianOperator(np.zeros((2, 3)))


def test_density_rejects_negative_eigenvalue():
    with pytest.raises(ValidationError):
        DensityOperator.from_matrix(np.diag([1.5, -0.5]))


def test_density_subnormalized_trace():
    rho = DensityOperator.from_probabilities([0.3, 0.2], normalized=False)
    assert rho.trace == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        DensityOperator.from_probabilities([0.3, 0.2])


def test_partial_trace_of_product_state(rng):
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    ab = DensityOperator.from_matrix(np.kron(a, b))
    assert np.allclose(partial_trace(ab, [2, 3], [0]).entries, a)
    assert np.allclose(partial_trace(ab, [2, 3], [1]).entries, b)
    assert partial_trace_array(ab.entries, [2, 3], []).shape == (1, 1)
    assert partial_trace_array(ab.entries, [2, 3], [])[0, 0] == pytest.approx(1.0)


def test_partial_trace_factor_mismatch():
    with pytest.raises(DimensionMismatchError):
        partial_trace_array(np.eye(6), [2, 2], [0])


def test_permute_factors_swaps_kron(rng):
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    swapped = permute_factors(np.kron(a, b), [2, 3], [1, 0])
    assert np.allclose(swapped, np.kron(b, a))


def test_tensor_dimension():
    assert tensor(np.eye(2), np.eye(3)).dim == 6


def test_matrix_functions_on_support():
    m = np.diag([4.0, 0.0, 1.0])
    assert np.allclose(sqrt_psd(m), np.diag([2.0, 0.0, 1.0]))
    assert np.allclose(inverse_sqrt_on_support(m), np.diag([0.5, 0.0, 1.0]))


def test_trace_norm_of_difference():
    assert trace_norm(np.diag([0.7, 0.3]) - np.diag([0.2, 0.8])) == pytest.approx(1.0)


def test_fidelity_pure_states():
    psi = DensityOperator.pure([1, 0])
    plus = DensityOperator.pure([1, 1])
    assert fidelity(psi, plus) == pytest.approx(0.5)
    assert purified_distance(psi, plus) == pytest.approx(np.sqrt(0.5))
    assert fidelity(psi, psi) == pytest.approx(1.0)


def test_fidelity_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        fidelity(np.eye(2) / 2, np.eye(3) / 3)


def test_positive_part_projectors_are_complementary(rng):
    h = rng.normal(size=(4, 4))
    h = h + h.T
    p = positive_part_projector(h).entries
    q = nonpositive_part_projector(h).entries
    assert np.allclose(p + q, np.eye(4))
    assert np.allclose(p @ p, p)
    assert np.trace(p @ h).real >= 0
