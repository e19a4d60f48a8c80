"""Source coding of U with compound side information.

The virtual channel takes (u, gamma) to the users' outputs through the shaper
and the physical channel. A compound source code is one linear syndrome map g
shared by every authorized set, and one maximum-likelihood decoder per set:
h_A(y_A, gamma, c) is the most likely u with g(u) = c, smallest u on ties.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

import config
from entropies import (
    hypothesis_testing_entropy_classical,
    inner_trace_radius,
    max_entropy_zero,
    smooth_max_entropy_classical,
)
from exceptions import DimensionMismatchError, ValidationError
from model import CqBroadcastChannel, CqState, InputDistribution, UserSubset, subset_label
from protocol.hashing import BinaryLinearHashFamily, LinearHash, Seed, sample_surjective_hash
from protocol.shaper import Shaper

logger = logging.getLogger(__name__)

SIGMA_LEVEL = 3.0


@dataclass(frozen=True)
class Estimate:
    """A measured probability or distance with its 1-sigma uncertainty."""

    value: float
    sigma: float = 0.0
    exact: bool = True
    trials: int = 0

    @property
    def upper(self) -> float:
        return self.value + SIGMA_LEVEL * self.sigma

    def as_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "sigma": self.sigma, "exact": self.exact, "trials": self.trials, "upper": self.upper}

    @classmethod
    def from_bernoulli(cls, failures: int, trials: int) -> "Estimate":
        rate = failures / trials
        return cls(rate, math.sqrt(max(rate * (1 - rate), 0.0) / trials), False, trials)


def binary_symmetric_table(bits: int, flip: float) -> np.ndarray:
    """W(y|u) for each of `bits` bits flipped independently with probability `flip`."""
    values = np.arange(2 ** bits)
    distance = np.array([[bin(int(u ^ y)).count("1") for y in values] for u in values])
    return flip ** distance * (1 - flip) ** (bits - distance)


class VirtualChannel:
    """(u, gamma) -> Y_D, with a prior P(u | gamma) for the source-coding view.

    Build with `from_shaper` for the protocol or `from_side_channels` for
    stand-alone source coding with conditionally independent users.
    """

    def __init__(self, prior: np.ndarray, num_users: int, tables_fn, shaper: Optional[Shaper] = None):
        self.prior = np.asarray(prior, dtype=float)
        if self.prior.ndim != 2:
            raise DimensionMismatchError(f"Prior must have shape (|Gamma|, |U|), got {self.prior.shape}")
        self.num_users = num_users
        self.shaper = shaper
        self._tables_fn = tables_fn
        self._cache: Dict[UserSubset, np.ndarray] = {}

    @classmethod
    def from_shaper(cls, shaper: Shaper, w: CqBroadcastChannel) -> "VirtualChannel":
        if not w.is_classical:
            raise ValidationError("The virtual channel is built for classical channels")
        if w.input_alphabet_size != shaper.input_dist.size:
            raise DimensionMismatchError(
                f"Shaper over {shaper.input_dist.size} symbols for a channel with |X|={w.input_alphabet_size}"
            )

        def tables(subset):
            physical = w.marginal_transition(subset)
            return np.stack([np.asarray(cond @ physical) for cond in shaper.conditionals])

        return cls(shaper.marginals, w.num_users, tables, shaper)

    @classmethod
    def from_side_channels(cls, prior: Sequence[float], per_user: Sequence) -> "VirtualChannel":
        """Single seed; user l sees y_l ~ per_user[l](. | u) independently."""
        p = InputDistribution(prior).probs
        mats = [np.asarray(t, dtype=float) for t in per_user]
        for t in mats:
            if t.shape[0] != p.size:
                raise DimensionMismatchError(f"Side channel with {t.shape[0]} rows for |U|={p.size}")

        def tables(subset):
            out = np.ones((p.size, 1))
            for user in sorted(subset):
                t = mats[user - 1]
                out = (out[:, :, None] * t[:, None, :]).reshape(p.size, -1)
            return out[None]

        return cls(p[None], len(mats), tables)

    @property
    def num_seeds(self) -> int:
        return self.prior.shape[0]

    @property
    def num_messages(self) -> int:
        return self.prior.shape[1]

    @property
    def u_bits(self) -> int:
        return int(round(math.log2(self.num_messages)))

    def side_table(self, subset: Iterable[int]) -> np.ndarray:
        """W'(y_D | u, gamma), shape (|Gamma|, |U|, |Y_D|)."""
        key = frozenset(subset)
        if any(u < 1 or u > self.num_users for u in key):
            raise DimensionMismatchError(f"Subset {subset_label(key)} names users outside 1..{self.num_users}")
        if key not in self._cache:
            self._cache[key] = self._tables_fn(key)
        return self._cache[key]

    def joint(self, subset: Iterable[int]) -> np.ndarray:
        """P(gamma, u, y_D) with gamma uniform."""
        return self.prior[:, :, None] * self.side_table(subset) / self.num_seeds

    def source_state(self, subset: Iterable[int]) -> CqState:
        """U given (Y_D, Gamma) as a classical cq state with side symbol index gamma * |Y_D| + y."""
        j = self.joint(subset)
        table = j.transpose(1, 0, 2).reshape(self.num_messages, -1)
        p_u = table.sum(axis=1)
        cond = np.zeros_like(table)
        seen = p_u > 0
        cond[seen] = table[seen] / p_u[seen, None]
        cond[~seen] = 1.0 / table.shape[1]
        return CqState.classical(InputDistribution(p_u), cond, subset)


def _syndrome_cap(virtual: VirtualChannel, raw: float) -> int:
    m = max(0, math.ceil(raw))
    if m > virtual.u_bits:
        logger.info(f"Syndrome length {m} capped at u_bits={virtual.u_bits}")
        m = virtual.u_bits
    return m


def _max_entropy_upper(virtual: VirtualChannel, subset: UserSubset, eps1: float) -> float:
    joint = virtual.source_state(subset).joint_table()
    if joint.size > config.SMOOTHING_ATOM_LIMIT:
        logger.warning(f"Side-information joint of {joint.size} atoms; using the unsmoothed max-entropy")
        return max_entropy_zero(virtual.source_state(subset)).value
    return smooth_max_entropy_classical(joint, inner_trace_radius(eps1)).value


def compound_syndrome_bits(virtual: VirtualChannel, sets: Sequence[Iterable[int]], eps1: float, eps2: float) -> int:
    """max_A ceil(H_max^eps1(U|Y_A Gamma) + 2 log(1/eps2) + 2 log(k+1)) + 3, capped at u_bits."""
    k = len(sets)
    raw = max(
        _max_entropy_upper(virtual, frozenset(s), eps1) + 2 * math.log2(1 / eps2) + 2 * math.log2(k + 1)
        for s in sets
    )
    return _syndrome_cap(virtual, raw + 3) if math.isfinite(raw) else 0


def single_syndrome_bits(virtual: VirtualChannel, subset: Iterable[int], eps1: float, eps2: float) -> int:
    raw = _max_entropy_upper(virtual, frozenset(subset), eps1) + 2 * math.log2(1 / eps2)
    return _syndrome_cap(virtual, raw + 3) if math.isfinite(raw) else 0


def hypothesis_testing_syndrome_bits(
    virtual: VirtualChannel, sets: Sequence[Iterable[int]], eps1: float, eta: float
) -> int:
    """max_A ceil(H_h^{eps1-eta}(U|Y_A Gamma) + log(eps1/eta^2)) + 2, capped at u_bits."""
    if not 0 < eta <= eps1 < 1:
        raise ValidationError(f"Need 0 < eta <= eps1 < 1, got eta={eta}, eps1={eps1}")
    values = []
    for s in sets:
        joint = virtual.source_state(frozenset(s)).joint_table()
        values.append(hypothesis_testing_entropy_classical(joint, joint.sum(axis=0), eps1 - eta).value)
    raw = max(values) + math.log2(eps1 / eta ** 2)
    return _syndrome_cap(virtual, raw + 2) if math.isfinite(raw) else 0


class CompoundSourceCode:
    """Syndrome encoder g with one ML decoder per authorized set."""

    def __init__(self, encoder: LinearHash, virtual: VirtualChannel, sets: Sequence[Iterable[int]]):
        if encoder.input_bits != virtual.u_bits:
            raise DimensionMismatchError(f"Encoder on {encoder.input_bits} bits for |U|=2^{virtual.u_bits}")
        self.encoder = encoder
        self.virtual = virtual
        self.sets: List[UserSubset] = [frozenset(s) for s in sets]
        self.cosets = encoder.cosets()
        self.syndromes = encoder.evaluate_all()
        self.errors: Dict[str, Estimate] = {}
        self._decoders: Dict[UserSubset, np.ndarray] = {}

    @property
    def m(self) -> int:
        return self.encoder.output_bits

    @property
    def num_syndromes(self) -> int:
        return 2 ** self.m

    def decoder_table(self, subset: Iterable[int]) -> np.ndarray:
        """h_A as an array indexed [gamma, c, y]."""
        key = frozenset(subset)
        if key not in self._decoders:
            joint = self.virtual.joint(key)
            table = np.zeros((joint.shape[0], self.num_syndromes, joint.shape[2]), dtype=np.int64)
            for c, coset in enumerate(self.cosets):
                if coset.size == 0:
                    continue
                table[:, c, :] = coset[np.argmax(joint[:, coset, :], axis=1)]
            self._decoders[key] = table
        return self._decoders[key]

    def decode(self, subset: Iterable[int], y: int, gamma: int, c: int) -> int:
        return int(self.decoder_table(subset)[gamma, c, y])

    def measure(self, subset: Iterable[int], trials: int = config.MONTE_CARLO_TRIALS, seed: Seed = 0) -> Estimate:
        """Pr[h_A(Y_A, Gamma, g(U)) != U] with (Gamma, U, Y_A) from the virtual channel."""
        key = frozenset(subset)
        joint = self.virtual.joint(key)
        if joint.size <= config.EXACT_ENUMERATION_LIMIT:
            correct = sum(float(joint[:, coset, :].max(axis=1).sum()) for coset in self.cosets if coset.size)
            return Estimate(max(0.0, 1.0 - correct), 0.0, True, 0)
        logger.warning(f"Source-code state space of {joint.size} points; Monte Carlo with {trials} trials")
        rng = np.random.default_rng(seed)
        flat = joint.reshape(-1)
        draws = rng.choice(flat.size, size=trials, p=flat / flat.sum())
        gammas, rest = np.divmod(draws, joint.shape[1] * joint.shape[2])
        us, ys = np.divmod(rest, joint.shape[2])
        table = self.decoder_table(key)
        failures = int(np.count_nonzero(table[gammas, self.syndromes[us], ys] != us))
        return Estimate.from_bernoulli(failures, trials)

    def measure_all(self, trials: int = config.MONTE_CARLO_TRIALS, seed: Seed = 0) -> Dict[str, Estimate]:
        self.errors = {subset_label(s): self.measure(s, trials, seed) for s in self.sets}
        return self.errors

    @property
    def max_error(self) -> float:
        return max(e.value for e in self.errors.values()) if self.errors else float("nan")


def build_compound_source_code(
    virtual: VirtualChannel,
    sets: Sequence[Iterable[int]],
    m: int,
    seed: Seed = 0,
    candidates: int = config.HASH_CANDIDATES,
    encoder: Optional[LinearHash] = None,
    trials: int = config.MONTE_CARLO_TRIALS,
) -> CompoundSourceCode:
    """Best of `candidates` surjective syndrome maps by measured max error, or the given encoder."""
    if not 0 <= m <= virtual.u_bits:
        raise ValidationError(f"Syndrome length {m} outside 0..{virtual.u_bits}")
    if not sets:
        raise ValidationError("Compound source code needs at least one decoder set")
    if encoder is not None:
        pool = [encoder]
    else:
        family = BinaryLinearHashFamily(virtual.u_bits, m)
        base = list(np.atleast_1d(seed))
        pool = [sample_surjective_hash(family, base + [i]) for i in range(max(1, candidates))]
    best: Optional[CompoundSourceCode] = None
    for g in pool:
        code = CompoundSourceCode(g, virtual, sets)
        code.measure_all(trials, seed)
        if best is None or code.max_error < best.max_error:
            best = code
    logger.info(f"Compound source code: m={m}, {len(sets)} decoders, max error {best.max_error:.4g}")
    return best
