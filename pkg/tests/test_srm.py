import numpy as np
import pytest

from exceptions import SizeLimitError, ValidationError
from model import CqState, InputDistribution
from protocol.hashing import BinaryLinearHashFamily, LinearHash
from protocol.srm import hayashi_nagaoka_gap, srm_average_error, srm_bound, srm_decoder, srm_error

from tests.helpers import random_density


def _random_state(rng, num_u, dim):
    p = InputDistribution(rng.dirichlet(np.ones(num_u)))
    return CqState.quantum(p, [random_density(rng, dim, rank=int(rng.integers(1, dim + 1))) for _ in range(num_u)])


def test_srm_povm_is_valid(rng):
    state = _random_state(rng, 4, 2)
    g = LinearHash(np.array([[1, 1]]))
    for c in range(2):
        povm = srm_decoder(state, g, c)
        assert povm.completeness_error() <= 1e-9
        assert povm.min_eigenvalue() >= -1e-9
        assert povm.coset.tolist() == g.preimage(c).tolist()


def test_srm_average_error_below_bound(rng):
    shapes = [(4, 2), (2, 4), (2, 2), (4, 2)]
    violations = []
    for instance in range(50):
        num_u, dim = shapes[instance % len(shapes)]
        state = _random_state(rng, num_u, dim)
        b = int(np.log2(num_u))
        for m in range(1, b + 1):
            family = BinaryLinearHashFamily(b, m)
            average = srm_average_error(state, family)
            bound = srm_bound(state, m)
            if average > bound + 1e-9:
                violations.append((instance, m, average, bound))
    assert violations == []


def test_srm_error_is_a_probability(rng):
    state = _random_state(rng, 4, 2)
    for g in BinaryLinearHashFamily(2, 1).members():
        assert 0.0 <= srm_error(state, g) <= 1.0


def test_perfectly_distinguishable_states_decode_without_error():
    blocks = [np.diag(row) for row in np.eye(4)]
    state = CqState.quantum(InputDistribution.uniform(4), blocks)
    assert srm_error(state, LinearHash.identity(2)) == pytest.approx(0.0, abs=1e-9)


def test_srm_dimension_guards(rng):
    state = _random_state(rng, 4, 2)
    with pytest.raises(ValidationError):
        srm_decoder(state, LinearHash(np.array([[1, 0, 1]])), 0)
    big = CqState.quantum(InputDistribution.uniform(16), [random_density(rng, 8) for _ in range(16)])
    with pytest.raises(SizeLimitError):
        srm_bound(big, 2)


@pytest.mark.parametrize("d", [0.25, 1.0, 4.0])
def test_hayashi_nagaoka_gap_nonnegative(rng, d):
    for _ in range(30):
        dim = int(rng.integers(2, 5))
        vecs = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))[0]
        weights = rng.random(dim)
        s = (vecs * weights) @ vecs.conj().T
        t = random_density(rng, dim) * rng.random() * 3
        assert hayashi_nagaoka_gap(s, t, d) >= -1e-9


def test_hayashi_nagaoka_gap_rejects_nonpositive_d():
    with pytest.raises(ValidationError):
        hayashi_nagaoka_gap(np.eye(2) / 2, np.eye(2) / 2, 0.0)
