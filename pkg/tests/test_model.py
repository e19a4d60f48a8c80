import numpy as np
import pytest

from exceptions import AccessStructureError, DimensionMismatchError, SizeLimitError, ValidationError
from model import (
    AccessStructure,
    CqBroadcastChannel,
    CqState,
    InputDistribution,
    all_subsets,
    build_cq_state,
    product_extension,
    subset_label,
)
from tests.helpers import random_density


def _minimal(family):
    return [s for s in family if not any(t < s for t in family)]


def _random_structures(num_users, rng, count):
    subsets = [s for s in all_subsets(num_users) if s]
    for _ in range(count):
        picks = [s for s in subsets if rng.random() < 0.3] or [subsets[-1]]
        yield AccessStructure(num_users, frozenset(_minimal(picks)))


def test_access_structure_closure_and_complement(rng):
    for num_users in range(1, 6):
        everything = set(all_subsets(num_users))
        for a in _random_structures(num_users, rng, 40):
            auth = a.authorized_sets()
            unauth = a.unauthorized_sets()
            assert set(auth) | set(unauth) == everything
            assert not set(auth) & set(unauth)
            assert frozenset() in unauth
            assert set(a.minimal_authorized) <= set(auth)
            for s in auth:
                for u in range(1, num_users + 1):
                    assert a.is_authorized(s | {u})
            for s in unauth:
                assert all(not a.is_authorized(t) for t in everything if t <= s)


def test_access_structure_rejects_bad_input():
    with pytest.raises(AccessStructureError):
        AccessStructure.from_sets(3, [])
    with pytest.raises(AccessStructureError):
        AccessStructure.from_sets(3, [set()])
    with pytest.raises(AccessStructureError):
        AccessStructure.from_sets(3, [{1, 4}])
    with pytest.raises(AccessStructureError):
        AccessStructure.from_sets(3, [{1}, {1, 2}])


def test_threshold_structure_counts():
    a = AccessStructure.threshold(3, 2)
    assert len(a.authorized_sets()) == 4
    assert len(a.unauthorized_sets()) == 4
    assert not a.is_all_users
    assert AccessStructure.all_users(3).is_all_users


def test_three_user_example(three_user_access):
    labels = [subset_label(s) for s in three_user_access.unauthorized_sets()]
    assert labels == ["{}", "{1}", "{2}", "{3}", "{1,3}"]
    assert [subset_label(s) for s in three_user_access.authorized_sets()] == ["{1,2}", "{2,3}", "{1,2,3}"]


def test_input_distribution_validation():
    with pytest.raises(ValidationError):
        InputDistribution([0.5, 0.6])
    with pytest.raises(ValidationError):
        InputDistribution([])
    assert InputDistribution.uniform(4).probs == pytest.approx([0.25] * 4)
    assert InputDistribution.point_mass(3, 1).probs == pytest.approx([0, 1, 0])


def test_binary_flip_marginals(three_user_flip):
    assert three_user_flip.is_classical
    assert three_user_flip.user_dims == (2, 2, 2)
    w1 = three_user_flip.marginal_transition({1})
    assert w1 == pytest.approx(np.array([[0.95, 0.05], [0.05, 0.95]]))
    w13 = three_user_flip.marginal_transition({1, 3})
    assert w13.shape == (2, 4)
    assert w13[0] == pytest.approx([0.95 * 0.8, 0.95 * 0.2, 0.05 * 0.8, 0.05 * 0.2])
    assert three_user_flip.marginal_transition(set()).shape == (2, 1)


def test_channel_rejects_bad_rows():
    with pytest.raises(ValidationError):
        CqBroadcastChannel.from_transition([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(DimensionMismatchError):
        CqBroadcastChannel.binary_flip([0.1]).marginal_transition({2})


def test_diagonal_states_become_classical():
    w = CqBroadcastChannel.from_states([np.diag([1.0, 0.0]), np.diag([0.3, 0.7])], [2])
    assert w.is_classical
    assert w.marginal_transition({1})[1] == pytest.approx([0.3, 0.7])


def test_quantum_channel_partial_states(rng):
    a, b = random_density(rng, 2), random_density(rng, 2)
    w = CqBroadcastChannel.from_states([np.kron(a, b), np.kron(b, a)], [2, 2])
    assert not w.is_classical
    first = w.conditional_states({1})
    assert np.allclose(first[0], a)
    assert np.allclose(first[1], b)


def test_quantum_dimension_cap():
    with pytest.raises(SizeLimitError):
        CqBroadcastChannel.from_states([np.ones((128, 128)) / 128], [128])


def test_cq_state_joint_and_marginal(three_user_flip):
    p = InputDistribution([0.3, 0.7])
    state = build_cq_state(p, three_user_flip, {2})
    assert state.joint_table().sum() == pytest.approx(1.0)
    assert np.real(np.diag(state.side_marginal())) == pytest.approx(state.joint_table().sum(axis=0))
    assert state.joint.dim == 4


def test_cq_state_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        CqState.classical(InputDistribution.uniform(2), np.ones((3, 1)))


def test_product_extension_of_flip_channel():
    w = CqBroadcastChannel.binary_flip([0.1, 0.2])
    w2 = product_extension(w, 2)
    assert w2.input_alphabet_size == 4
    assert w2.user_dims == (4, 4)
    # x = (1, 0), user 1 sees (y^1, y^2) = (1, 0) with probability 0.9 * 0.9
    t1 = w2.marginal_transition({1})
    assert t1[2, 2] == pytest.approx(0.81)
    assert t1[2, 0] == pytest.approx(0.09)
    assert product_extension(w, 1) is w


def test_product_extension_matches_kron_per_user():
    w = CqBroadcastChannel.binary_flip([0.05, 0.3])
    w3 = product_extension(w, 3)
    for user in (1, 2):
        single = w.marginal_transition({user})
        expected = np.kron(np.kron(single, single), single)
        assert w3.marginal_transition({user}) == pytest.approx(expected)


def test_product_extension_guard():
    w = CqBroadcastChannel.binary_flip([0.1, 0.1, 0.1])
    with pytest.raises(SizeLimitError):
        product_extension(w, 8)


def test_all_subsets_canonical_order():
    assert [subset_label(s) for s in all_subsets(2)] == ["{}", "{1}", "{2}", "{1,2}"]
    assert len(all_subsets(4)) == 2 ** 4
