import numpy as np
import pytest

from exceptions import ValidationError
from model import InputDistribution
from protocol.hashing import BinaryLinearHashFamily, HashKind
from protocol.shaper import build_shaper, input_bits_for, leftover_hash_check, uniformity_gap
from protocol.source_code import binary_symmetric_table


def _dirichlet(rng, size):
    return InputDistribution(rng.dirichlet(np.ones(size)))


def test_input_bits_for():
    assert [input_bits_for(k) for k in (1, 2, 3, 4, 5, 64, 65)] == [0, 1, 2, 2, 3, 6, 7]


@pytest.mark.parametrize("size,r", [(5, 2), (8, 1), (8, 3), (6, 2)])
def test_composition_reproduces_input_distribution(rng, size, r):
    p = _dirichlet(rng, size)
    shaper = build_shaper(p, BinaryLinearHashFamily(input_bits_for(size), r), seed=3)
    assert np.allclose(shaper.compose(), p.probs, atol=1e-12)
    assert shaper.compose_uniform().sum() == pytest.approx(1.0)
    for cond in shaper.conditionals:
        assert np.allclose(np.asarray(cond.sum(axis=1)).ravel(), 1.0)


def test_shaper_rows_stay_in_preimage(rng):
    p = _dirichlet(rng, 8)
    shaper = build_shaper(p, BinaryLinearHashFamily(3, 2), seed=1)
    for gamma, h in enumerate(shaper.hashes[:8]):
        for u in range(shaper.num_messages):
            x = shaper.sample(u, gamma, rng)
            if h.preimage(u).size:
                assert h(x) == u


def test_unreachable_slices_are_filled():
    p = InputDistribution([0.3, 0.7])
    shaper = build_shaper(p, BinaryLinearHashFamily(3, 2))
    assert shaper.unreachable_slices > 0
    assert np.allclose(shaper.compose(), p.probs)


def test_shaper_argument_checks():
    p = InputDistribution.uniform(8)
    with pytest.raises(ValidationError):
        build_shaper(p, BinaryLinearHashFamily(3, 2), u_bits=1)
    with pytest.raises(ValidationError):
        build_shaper(p, BinaryLinearHashFamily(2, 1))


@pytest.mark.parametrize("kind", list(HashKind))
def test_uniformity_gap_within_bound(rng, kind):
    for _ in range(10):
        p = _dirichlet(rng, 8)
        shaper = build_shaper(p, BinaryLinearHashFamily(3, 1, kind))
        report = uniformity_gap(shaper)
        assert report.averaged_marginal_gap <= report.gap + 1e-12
        assert report.gap <= report.bound + 1e-12


@pytest.mark.parametrize("r", [1, 2, 3])
def test_leftover_hash_lemma_unsmoothed(r):
    side = binary_symmetric_table(6, 0.2)
    for instance in range(50):
        p = _dirichlet(np.random.default_rng(instance), 64)
        check = leftover_hash_check(p, side, r, 0.0, HashKind.TOEPLITZ, seed=instance)
        assert check.full_family
        assert check.holds, (instance, check.lhs, check.rhs)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_leftover_hash_lemma_smoothed(r):
    side = binary_symmetric_table(6, 0.2)
    for instance in range(3):
        p = _dirichlet(np.random.default_rng(100 + instance), 64)
        check = leftover_hash_check(p, side, r, 0.05, HashKind.TOEPLITZ, seed=instance)
        assert check.holds, (instance, check.lhs, check.rhs)


def test_leftover_hash_check_rejects_bad_side_channel():
    with pytest.raises(ValidationError):
        leftover_hash_check(InputDistribution.uniform(4), np.ones((3, 2)) / 2, 1)
