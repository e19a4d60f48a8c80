"""Secret-sharing codes built from a shaper and a compound source code.

For a syndrome c the encoder Enc_c maps secret s to the s-th element (in
increasing order) of the coset g^-1(c); the shaper then turns u into an input
symbol. Authorized sets decode u with the source decoder and read off its
position in the coset. Security is the trace distance between the joint of
(S, Y_B, Gamma) and the product of its marginals, Gamma being public.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

import config
from entropies import inner_trace_radius, min_entropy_zero, smooth_min_entropy_classical
from exceptions import ValidationError
from model import AccessStructure, CqBroadcastChannel, InputDistribution, UserSubset, build_cq_state, subset_label
from protocol.hashing import BinaryLinearHashFamily, HashKind, Seed
from protocol.shaper import Shaper, build_shaper, input_bits_for, uniformity_gap
from protocol.source_code import (
    CompoundSourceCode,
    Estimate,
    VirtualChannel,
    build_compound_source_code,
    compound_syndrome_bits,
)
from rates import BudgetPath, EpsilonBudget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DesignParameters:
    input_bits: int
    u_bits: int
    raw_u_bits: float
    min_entropy: float
    integrality_loss: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "input_bits": self.input_bits,
            "u_bits": self.u_bits,
            "raw_u_bits": self.raw_u_bits,
            "min_entropy": self.min_entropy,
            "integrality_loss": self.integrality_loss,
        }


def design_parameters(
    w: CqBroadcastChannel, a: AccessStructure, p: InputDistribution, b: EpsilonBudget
) -> DesignParameters:
    """u_bits = floor(min_B H_min^{eps'}(X|Y_B) - delta - 2), clamped to [0, input_bits]."""
    if not w.is_classical:
        raise ValidationError("The coding scheme runs on classical channels")
    radius = inner_trace_radius(b.eps_prime)
    values = []
    for subset in a.unauthorized_sets():
        state = build_cq_state(p, w, subset)
        joint = state.joint_table()
        if joint.size <= config.SMOOTHING_ATOM_LIMIT:
            values.append(smooth_min_entropy_classical(joint, radius).value)
        else:
            values.append(min_entropy_zero(state).value)
    h_min = min(values)
    raw = h_min - b.delta - 2
    bits = input_bits_for(w.input_alphabet_size)
    u_bits = int(min(max(math.floor(raw), 0), bits)) if math.isfinite(raw) else bits
    loss = raw - u_bits if math.isfinite(raw) and 0 <= raw <= bits else 0.0
    if loss > 0:
        logger.warning(f"u_bits rounded down from {raw:.4f} to {u_bits}; {loss:.4f} bits lost to integrality")
    if raw < 0:
        logger.warning(f"min-entropy budget {raw:.4f} is negative; the code carries no secret")
    return DesignParameters(bits, u_bits, raw, h_min, loss)


@dataclass
class SecretSharingCode:
    """Shaper + source code + (optionally) a selected syndrome c*.

    With `syndrome` unset the code stands for the whole family over c, used
    with c uniform.
    """

    shaper: Shaper
    source: CompoundSourceCode
    syndrome: Optional[int] = None
    reliability: Dict[str, Estimate] = field(default_factory=dict)
    security: Dict[str, Estimate] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def virtual(self) -> VirtualChannel:
        return self.source.virtual

    @property
    def u_bits(self) -> int:
        return self.shaper.u_bits

    @property
    def m(self) -> int:
        return self.source.m

    @property
    def secret_bits(self) -> int:
        return self.u_bits - self.m

    @property
    def secret_size(self) -> int:
        return 2 ** self.secret_bits

    def coset(self, c: Optional[int] = None) -> np.ndarray:
        c = self.syndrome if c is None else c
        if c is None:
            raise ValidationError("No syndrome selected; pass c explicitly")
        return self.source.cosets[c]

    def encode(self, s: int, c: Optional[int] = None) -> int:
        """Enc_c(s): the s-th smallest u with g(u) = c."""
        coset = self.coset(c)
        if not 0 <= s < coset.size:
            raise ValidationError(f"Secret {s} outside 0..{coset.size - 1}")
        return int(coset[s])

    def decode(self, subset: Iterable[int], y: int, gamma: int, c: Optional[int] = None) -> int:
        c = self.syndrome if c is None else c
        u = self.source.decode(subset, y, gamma, c)
        return int(np.searchsorted(self.coset(c), u))

    def transmit(self, s: int, gamma: int, rng: np.random.Generator, c: Optional[int] = None) -> int:
        """Input symbol for secret s under seed gamma."""
        return self.shaper.sample(self.encode(s, c), gamma, rng)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "u_bits": self.u_bits,
            "m": self.m,
            "secret_bits": self.secret_bits,
            "syndrome": self.syndrome,
            "encoder_matrix": self.source.encoder.matrix.tolist(),
            "reliability": {k: v.as_dict() for k, v in self.reliability.items()},
            "security": {k: v.as_dict() for k, v in self.security.items()},
            "diagnostics": self.diagnostics,
        }


def lift_to_channel_code(sc: CompoundSourceCode, shaper: Shaper) -> SecretSharingCode:
    """The family {Enc_c} over all syndromes; the code before selection."""
    if sc.virtual.shaper is not None and sc.virtual.shaper is not shaper:
        raise ValidationError("Source code was built on a different shaper")
    if not sc.encoder.is_surjective:
        raise ValidationError("Syndrome map must be surjective for Enc_c to be a bijection")
    gap = uniformity_gap(shaper)
    code = SecretSharingCode(shaper, sc)
    code.diagnostics.update({
        "source_errors": {k: v.as_dict() for k, v in sc.errors.items()},
        "uniformity_gap": gap.gap,
        "averaged_marginal_gap": gap.averaged_marginal_gap,
    })
    logger.info(f"Lifted to a channel code: |S|=2^{code.secret_bits}, |C|=2^{code.m}")
    return code


def _syndromes(code: SecretSharingCode, syndrome: Optional[int]) -> List[int]:
    if syndrome is not None:
        return [syndrome]
    return list(range(code.source.num_syndromes))


def _sample_rows(table: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One index per row of a row-stochastic table."""
    cdf = np.cumsum(table, axis=1)
    draws = rng.random(table.shape[0]) * cdf[:, -1]
    return np.minimum((cdf < draws[:, None]).sum(axis=1), table.shape[1] - 1)


def reliability_error(
    code: SecretSharingCode,
    subset: Iterable[int],
    syndrome: Optional[int] = None,
    trials: int = config.MONTE_CARLO_TRIALS,
    seed: Seed = 0,
) -> Estimate:
    """Pr[S != Dec_{c,A}] with S and Gamma uniform, for c fixed or uniform over all syndromes."""
    key = frozenset(subset)
    table = code.virtual.side_table(key)
    decoder = code.source.decoder_table(key)
    syndromes = _syndromes(code, syndrome)
    n_gamma, n_u, n_y = table.shape
    if n_gamma * n_u * n_y <= config.EXACT_ENUMERATION_LIMIT:
        correct = 0.0
        for c in syndromes:
            dec = decoder[:, c, :]
            correct += float(table[np.arange(n_gamma)[:, None], dec, np.arange(n_y)[None, :]].sum())
        correct /= n_gamma * code.secret_size * len(syndromes)
        return Estimate(max(0.0, 1.0 - correct), 0.0, True, 0)
    logger.warning(f"Reliability state space of {n_gamma * n_u * n_y} points; Monte Carlo with {trials} trials")
    rng = np.random.default_rng(seed)
    gammas = rng.integers(n_gamma, size=trials)
    cs = np.asarray(syndromes)[rng.integers(len(syndromes), size=trials)]
    secrets = rng.integers(code.secret_size, size=trials)
    us = np.array([code.source.cosets[c][s] for c, s in zip(cs, secrets)])
    ys = _sample_rows(table[gammas, us, :], rng)
    failures = int(np.count_nonzero(decoder[gammas, cs, ys] != us))
    return Estimate.from_bernoulli(failures, trials)


def _secret_table(code: SecretSharingCode, table: np.ndarray, syndromes: Sequence[int]) -> np.ndarray:
    """W'(y | Enc_c(s), gamma) averaged over the given syndromes, shape (|Gamma|, |S|, |Y|)."""
    total = np.zeros((table.shape[0], code.secret_size, table.shape[2]))
    for c in syndromes:
        total += table[:, code.source.cosets[c], :]
    return total / len(syndromes)


def security_distance(
    code: SecretSharingCode,
    subset: Iterable[int],
    syndrome: Optional[int] = None,
    trials: int = config.MONTE_CARLO_TRIALS,
    seed: Seed = 0,
) -> Estimate:
    """||P_{S Y_B Gamma} - P_S x P_{Y_B Gamma}||_1 for c fixed, or for c uniform and hidden."""
    key = frozenset(subset)
    table = code.virtual.side_table(key)
    syndromes = _syndromes(code, syndrome)
    n_gamma, n_u, n_y = table.shape
    if n_gamma * n_u * n_y <= config.EXACT_ENUMERATION_LIMIT:
        cond = _secret_table(code, table, syndromes)
        marginal = cond.mean(axis=1, keepdims=True)
        distance = float(np.abs(cond - marginal).sum()) / (n_gamma * code.secret_size)
        return Estimate(distance, 0.0, True, 0)
    # plug-in estimate from a histogram; biased upward
    logger.warning(f"Security state space of {n_gamma * n_u * n_y} points; plug-in estimate from {trials} trials")
    rng = np.random.default_rng(seed)
    gammas = rng.integers(n_gamma, size=trials)
    cs = np.asarray(syndromes)[rng.integers(len(syndromes), size=trials)]
    secrets = rng.integers(code.secret_size, size=trials)
    us = np.array([code.source.cosets[c][s] for c, s in zip(cs, secrets)])
    ys = _sample_rows(table[gammas, us, :], rng)
    counts = np.zeros((n_gamma, code.secret_size, n_y))
    np.add.at(counts, (gammas, secrets, ys), 1.0)
    joint = counts / trials
    product = joint.sum(axis=1, keepdims=True) * joint.sum(axis=(0, 2), keepdims=True)
    distance = float(np.abs(joint - product).sum())
    cells = int(np.count_nonzero(counts))
    return Estimate(distance, math.sqrt(cells / trials), False, trials)


def evaluate_reliability(
    code: SecretSharingCode,
    sets: Optional[Sequence[Iterable[int]]] = None,
    syndrome: Optional[int] = None,
    trials: int = config.MONTE_CARLO_TRIALS,
    seed: Seed = 0,
) -> Dict[str, Estimate]:
    """Per-authorized-set decoding error; defaults to the code's decoder sets and selected syndrome."""
    sets = code.source.sets if sets is None else [frozenset(s) for s in sets]
    c = code.syndrome if syndrome is None else syndrome
    return {subset_label(s): reliability_error(code, s, c, trials, seed) for s in sets}


def evaluate_security(
    code: SecretSharingCode,
    b_sets: Sequence[Iterable[int]],
    syndrome: Optional[int] = None,
    trials: int = config.MONTE_CARLO_TRIALS,
    seed: Seed = 0,
) -> Dict[str, Estimate]:
    """Per-unauthorized-set security distance.

    With `syndrome` None and no selected syndrome this is the code with c
    drawn uniformly and kept secret, the quantity the security chain bounds.
    """
    c = code.syndrome if syndrome is None else syndrome
    return {subset_label(s): security_distance(code, s, c, trials, seed) for s in b_sets}


def security_chain_bound(code: SecretSharingCode, w: CqBroadcastChannel, subset: Iterable[int], radius: float = 0.0) -> float:
    """4 r + 2 sqrt(2^(u - H_min^r(X|Y_B))) with r a trace-norm radius."""
    joint = build_cq_state(code.shaper.input_dist, w, subset).joint_table()
    if radius > 0:
        h_min = smooth_min_entropy_classical(joint, radius).value
    else:
        h_min = -math.log2(float(joint.max(axis=0).sum()))
    if not math.isfinite(h_min):
        return 4 * radius
    return 4 * radius + 2 * math.sqrt(2.0 ** (code.u_bits - h_min))


def select_encoder(
    code: SecretSharingCode,
    a: AccessStructure,
    budget: Optional[EpsilonBudget] = None,
    seed: Seed = 0,
    trials: int = config.MONTE_CARLO_TRIALS,
) -> SecretSharingCode:
    """c* minimizing max_A error + max_B distance over the swept syndromes."""
    n_c = code.source.num_syndromes
    if n_c <= config.SYNDROME_SWEEP_LIMIT:
        candidates = list(range(n_c))
    else:
        rng = np.random.default_rng(seed)
        candidates = sorted(rng.choice(n_c, size=config.SYNDROME_SWEEP_LIMIT, replace=False).tolist())
        logger.info(f"Sweeping {len(candidates)} of {n_c} syndromes")
    unauthorized = a.unauthorized_sets()
    best = None
    sums = []
    for c in candidates:
        rel = evaluate_reliability(code, syndrome=c, trials=trials, seed=seed)
        sec = evaluate_security(code, unauthorized, syndrome=c, trials=trials, seed=seed)
        score = max(e.value for e in rel.values()) + max(e.value for e in sec.values())
        sums.append(sum(e.value for e in rel.values()) + sum(e.value for e in sec.values()))
        if best is None or score < best[0]:
            best = (score, c, rel, sec)
    score, c_star, rel, sec = best
    diagnostics = dict(code.diagnostics)
    diagnostics.update({"swept_syndromes": len(candidates), "selected_score": score, "average_total": float(np.mean(sums))})
    if budget is not None:
        guarantee = budget.eps
        diagnostics["budget_eps"] = guarantee
        diagnostics["guarantee_met"] = bool(np.mean(sums) <= guarantee)
        if not diagnostics["guarantee_met"]:
            logger.warning(
                f"Average total error {np.mean(sums):.4g} over the swept syndromes exceeds the budget {guarantee:.4g}"
            )
    logger.info(f"Selected syndrome c*={c_star} with score {score:.4g}")
    return replace(code, syndrome=c_star, reliability=rel, security=sec, diagnostics=diagnostics)


@dataclass
class SimulationReport:
    rate_bits: int
    u_bits: int
    m: int
    secret_bits: int
    reliability: Dict[str, Estimate]
    security: Dict[str, Estimate]
    budget: EpsilonBudget
    seed: int
    design: DesignParameters
    code: SecretSharingCode
    averaged_security: Dict[str, Estimate] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(e.value for e in self.reliability.values())

    @property
    def max_distance(self) -> float:
        return max(e.value for e in self.security.values())

    def as_dict(self) -> Dict[str, Any]:
        return {
            "rate_bits": self.rate_bits,
            "u_bits": self.u_bits,
            "m": self.m,
            "secret_bits": self.secret_bits,
            "per_A_error": {k: v.as_dict() for k, v in self.reliability.items()},
            "per_B_distance": {k: v.as_dict() for k, v in self.security.items()},
            "averaged_code_distance": {k: v.as_dict() for k, v in self.averaged_security.items()},
            "budget": self.budget.as_dict(),
            "seed": self.seed,
            "design": self.design.as_dict(),
            "code": self.code.as_dict(),
        }


def run_protocol(
    w: CqBroadcastChannel,
    a: AccessStructure,
    p: InputDistribution,
    b: EpsilonBudget,
    seed: int = 0,
    u_bits: Optional[int] = None,
    m: Optional[int] = None,
    kind: HashKind = HashKind.FULL_RANDOM_MATRIX,
    trials: int = config.MONTE_CARLO_TRIALS,
) -> SimulationReport:
    """Design, build, select and evaluate a code end to end."""
    if b.path is not BudgetPath.GENERAL:
        raise ValidationError(f"The coding scheme uses a general budget, got {b.path.value}")
    b.check_access(a)
    design = design_parameters(w, a, p, b)
    u = design.u_bits if u_bits is None else u_bits
    if not 0 <= u <= design.input_bits:
        raise ValidationError(f"u_bits={u} outside 0..{design.input_bits}")
    shaper = build_shaper(p, BinaryLinearHashFamily(design.input_bits, u, kind), u, seed)
    virtual = VirtualChannel.from_shaper(shaper, w)
    authorized = a.authorized_sets()
    if m is None:
        m = compound_syndrome_bits(virtual, authorized, b.eps1, b.eps2)
    source = build_compound_source_code(virtual, authorized, m, seed, trials=trials)
    family_code = lift_to_channel_code(source, shaper)
    averaged = evaluate_security(family_code, a.unauthorized_sets(), trials=trials, seed=seed)
    code = select_encoder(family_code, a, b, seed, trials)
    logger.info(
        f"Protocol finished: {code.secret_bits} secret bits, max error {max(e.value for e in code.reliability.values()):.4g}, "
        f"max distance {max(e.value for e in code.security.values()):.4g}"
    )
    return SimulationReport(
        rate_bits=code.secret_bits,
        u_bits=u,
        m=m,
        secret_bits=code.secret_bits,
        reliability=code.reliability,
        security=code.security,
        budget=b,
        seed=seed,
        design=design,
        code=code,
        averaged_security=averaged,
    )
