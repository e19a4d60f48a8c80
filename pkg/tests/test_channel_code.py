import numpy as np
import pytest

import config
from exceptions import ValidationError
from model import AccessStructure, CqBroadcastChannel, InputDistribution, product_extension, subset_label
from protocol.channel_code import (
    design_parameters,
    evaluate_reliability,
    evaluate_security,
    lift_to_channel_code,
    reliability_error,
    run_protocol,
    security_chain_bound,
    security_distance,
    select_encoder,
)
from protocol.hashing import BinaryLinearHashFamily
from protocol.shaper import build_shaper, uniformity_gap
from protocol.source_code import VirtualChannel, build_compound_source_code
from rates import EpsilonBudget


def _code(w, p, u_bits, m, sets, seed=0):
    shaper = build_shaper(p, BinaryLinearHashFamily(3, u_bits), seed=seed)
    virtual = VirtualChannel.from_shaper(shaper, w)
    source = build_compound_source_code(virtual, sets, m, seed)
    return lift_to_channel_code(source, shaper)


@pytest.fixture
def noiseless():
    return CqBroadcastChannel.independent([np.eye(8)], name="noiseless")


@pytest.fixture
def positive_p(rng):
    return InputDistribution(rng.dirichlet(np.ones(8)))


def test_design_parameters(two_user_flip):
    a = AccessStructure.all_users(2)
    b = EpsilonBudget.for_general(0.01, 0.01, 10.0, a)
    design = design_parameters(two_user_flip, a, InputDistribution.uniform(2), b)
    assert design.input_bits == 1
    assert 0 <= design.u_bits <= 1
    assert design.raw_u_bits == pytest.approx(design.min_entropy - 12)


def test_design_parameters_rejects_quantum():
    plus = np.full((2, 2), 0.5)
    w = CqBroadcastChannel.from_states([np.diag([1.0, 0.0]), plus], [2])
    a = AccessStructure.all_users(1)
    b = EpsilonBudget.for_general(0.01, 0.01, 10.0, a)
    with pytest.raises(ValidationError):
        design_parameters(w, a, InputDistribution.uniform(2), b)


def test_encode_decode_round_trip_on_noiseless_channel(noiseless, positive_p, rng):
    code = _code(noiseless, positive_p, 2, 1, [{1}])
    assert code.secret_bits == 1
    for gamma, h in enumerate(code.shaper.hashes):
        if not h.is_surjective:
            continue
        for c in range(code.source.num_syndromes):
            for s in range(code.secret_size):
                x = code.transmit(s, gamma, rng, c)
                assert code.decode({1}, x, gamma, c) == s


def test_encode_checks(noiseless, positive_p):
    code = _code(noiseless, positive_p, 2, 1, [{1}])
    with pytest.raises(ValidationError):
        code.encode(0)
    with pytest.raises(ValidationError):
        code.encode(2, 0)
    assert code.encode(0, 0) in code.source.cosets[0]


def test_full_syndrome_carries_no_secret(noiseless, positive_p):
    code = _code(noiseless, positive_p, 2, 2, [{1}])
    assert code.secret_bits == 0
    for c in range(4):
        assert security_distance(code, {1}, c).value == pytest.approx(0.0, abs=1e-12)


def test_noiseless_user_learns_the_secret(noiseless):
    code = _code(noiseless, InputDistribution.uniform(8), 2, 0, [{1}])
    distance = security_distance(code, {1}).value
    assert distance > 0.5
    assert distance <= security_chain_bound(code, noiseless, {1})


def test_noisy_user_leak_stays_within_chain_bound():
    w = product_extension(CqBroadcastChannel.binary_flip([0.3]), 3)
    code = _code(w, InputDistribution.uniform(8), 1, 0, [{1}])
    assert code.secret_bits == 1
    distance = security_distance(code, {1}).value
    bound = security_chain_bound(code, w, {1})
    assert 0 < distance <= bound < 2


def test_useless_user_learns_nothing(positive_p):
    w = CqBroadcastChannel.independent([np.eye(8), np.full((8, 2), 0.5)])
    code = _code(w, positive_p, 2, 1, [{1}])
    distances = evaluate_security(code, [{2}])
    assert distances["{2}"].value == pytest.approx(0.0, abs=1e-12)
    assert distances["{2}"].value <= security_chain_bound(code, w, {2})
    assert security_chain_bound(code, w, {2}, radius=0.05) >= 0.2


def test_reliability_exact_matches_monte_carlo(monkeypatch):
    w = product_extension(CqBroadcastChannel.binary_flip([0.1, 0.2]), 3)
    code = _code(w, InputDistribution.uniform(8), 2, 1, [{1}, {2}])
    exact = reliability_error(code, {2}, 0)
    monkeypatch.setattr(config, "EXACT_ENUMERATION_LIMIT", 0)
    sampled = reliability_error(code, {2}, 0, trials=20_000, seed=4)
    assert exact.exact and not sampled.exact
    assert abs(sampled.value - exact.value) <= 5 * sampled.sigma + 1e-3


def test_select_encoder_minimizes_score():
    w = product_extension(CqBroadcastChannel.binary_flip([0.05, 0.3]), 3)
    a = AccessStructure.all_users(2)
    code = _code(w, InputDistribution.uniform(8), 2, 1, [{1, 2}])
    selected = select_encoder(code, a, EpsilonBudget.for_general(0.01, 0.01, 10.0, a))
    assert selected.syndrome in (0, 1)
    scores = []
    for c in range(2):
        rel = evaluate_reliability(code, syndrome=c)
        sec = evaluate_security(code, a.unauthorized_sets(), syndrome=c)
        scores.append(max(e.value for e in rel.values()) + max(e.value for e in sec.values()))
    assert selected.diagnostics["selected_score"] == pytest.approx(min(scores))
    assert "guarantee_met" in selected.diagnostics
    assert set(selected.security) == {"{}", "{1}", "{2}"}
    averaged = evaluate_security(code, a.unauthorized_sets())
    bounds = {subset_label(s): security_chain_bound(code, w, s) for s in a.unauthorized_sets()}
    for label, estimate in averaged.items():
        assert estimate.value <= bounds[label], label
    assert min(bounds.values()) < 2


def test_end_to_end_code_meets_budget():
    w = product_extension(CqBroadcastChannel.binary_flip([0.02, 0.3]), 4)
    a = AccessStructure.from_sets(2, [{1, 2}])
    budget = EpsilonBudget.for_general(0.01, 0.01, 10.0, a)
    report = run_protocol(w, a, InputDistribution.uniform(16), budget, seed=7, trials=10_000)
    # user 1 alone is unauthorized and almost noiseless: the design leaves no secret bits
    assert report.design.raw_u_bits < 0
    assert report.u_bits == 0 and report.secret_bits == 0
    for estimate in report.reliability.values():
        assert estimate.upper <= budget.eps
    assert report.max_distance <= budget.eps


@pytest.fixture
def split_bits():
    """User 1 sees the high bit of x, user 2 the low bit."""
    x = np.arange(4)
    high, low = np.zeros((4, 2)), np.zeros((4, 2))
    high[x, x // 2] = 1.0
    low[x, x % 2] = 1.0
    return CqBroadcastChannel.independent([high, low], name="split_bits")


def test_end_to_end_code_with_a_secret_meets_budget(split_bits):
    a = AccessStructure.from_sets(2, [{1, 2}])
    budget = EpsilonBudget.for_general(0.01, 0.01, 10.0, a)
    report = run_protocol(split_bits, a, InputDistribution.uniform(4), budget, seed=7, u_bits=1, m=0)
    assert report.secret_bits == 1
    # the zero hash leaves U undecodable; each single-bit hash reveals it to one user
    assert report.reliability["{1,2}"].value == pytest.approx(0.125)
    assert report.security["{1}"].value == pytest.approx(0.25)
    assert report.security["{2}"].value == pytest.approx(0.25)
    assert report.security["{}"].value == pytest.approx(0.0, abs=1e-12)
    for estimate in report.reliability.values():
        assert estimate.exact and estimate.upper <= budget.eps
    assert report.max_distance <= budget.eps


def test_lifted_code_error_within_source_error_and_uniformity_gap():
    x = np.arange(256)
    channel = np.full((256, 16), 0.01)
    channel[x, x % 16] = 0.85
    w = CqBroadcastChannel.independent([channel])
    shaper = build_shaper(InputDistribution.uniform(256), BinaryLinearHashFamily(8, 8), seed=0)
    virtual = VirtualChannel.from_shaper(shaper, w)
    source = build_compound_source_code(virtual, [{1}], 3, seed=0)
    code = lift_to_channel_code(source, shaper)
    assert (code.u_bits, code.m, code.secret_size) == (8, 3, 32)
    measured = reliability_error(code, {1})
    source_error = source.errors["{1}"]
    assert measured.exact and source_error.exact
    gap = uniformity_gap(shaper).gap
    assert gap > 0
    assert measured.value <= source_error.value + gap + 3 * (measured.sigma + source_error.sigma)


def test_end_to_end_with_overrides_is_deterministic():
    w = product_extension(CqBroadcastChannel.binary_flip([0.02, 0.3]), 4)
    a = AccessStructure.from_sets(2, [{1, 2}])
    budget = EpsilonBudget.for_general(0.01, 0.01, 10.0, a)
    first = run_protocol(w, a, InputDistribution.uniform(16), budget, seed=3, u_bits=2, m=1)
    second = run_protocol(w, a, InputDistribution.uniform(16), budget, seed=3, u_bits=2, m=1)
    assert (first.u_bits, first.m, first.secret_bits) == (2, 1, 1)
    assert first.code.syndrome == second.code.syndrome
    assert np.array_equal(first.code.source.encoder.matrix, second.code.source.encoder.matrix)
    assert first.as_dict()["per_A_error"] == second.as_dict()["per_A_error"]


def test_run_protocol_rejects_other_budgets():
    a = AccessStructure.all_users(2)
    w = CqBroadcastChannel.binary_flip([0.1, 0.1])
    with pytest.raises(ValidationError):
        run_protocol(w, a, InputDistribution.uniform(2), EpsilonBudget.for_second_order(0.01, 10.0, a))
    with pytest.raises(ValidationError):
        run_protocol(w, a, InputDistribution.uniform(2), EpsilonBudget.for_general(0.01, 0.01, 10.0, a), u_bits=3)
