"""Shaper: turns a near-uniform hash value back into an input symbol.

For every hash f_gamma of the seed pool the shaper stores P_{f_gamma(X)}
over U = {0,1}^u and the conditional P(x | u, gamma), which is P_X
restricted to the preimage f_gamma^-1(u) and renormalized.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import sparse

import config
from entropies import min_entropy_zero, smooth_min_entropy_classical
from exceptions import ValidationError
from model import CqState, InputDistribution
from protocol.hashing import BinaryLinearHashFamily, LinearHash, Seed, seed_pool

logger = logging.getLogger(__name__)

# Max deviation of the composed distribution from P_X
COMPOSITION_TOL = 1e-10

# Largest family averaged member by member in leftover_hash_check
LHL_FAMILY_LIMIT = 2 ** 16


def input_bits_for(alphabet_size: int) -> int:
    """Bits needed to embed an alphabet of this size."""
    return max(0, math.ceil(math.log2(alphabet_size))) if alphabet_size > 1 else 0


@dataclass
class Shaper:
    """Per-seed conditional tables P(x | u, gamma) and hash marginals P_{f_gamma(X)}.

    Attributes:
        conditionals: One sparse (|U|, |X|) row-stochastic matrix per seed.
        marginals: Array of shape (|Gamma|, |U|).
        repaired_slices: Number of (u, gamma) slices with zero P_X mass that
            were filled uniformly over their preimage.
        unreachable_slices: Number of slices with no preimage inside the input
            alphabet, filled uniformly over the whole alphabet.
    """

    input_dist: InputDistribution
    family: BinaryLinearHashFamily
    hashes: List[LinearHash]
    conditionals: List[sparse.csr_matrix]
    marginals: np.ndarray
    repaired_slices: int = 0
    unreachable_slices: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def u_bits(self) -> int:
        return self.family.output_bits

    @property
    def num_messages(self) -> int:
        return 2 ** self.u_bits

    @property
    def num_seeds(self) -> int:
        return len(self.hashes)

    def compose(self) -> np.ndarray:
        """Distribution of X when U ~ P_{f_gamma(X)} and gamma is uniform over the pool."""
        total = np.zeros(self.input_dist.size)
        for marginal, cond in zip(self.marginals, self.conditionals):
            total += cond.T @ marginal
        return total / self.num_seeds

    def compose_uniform(self) -> np.ndarray:
        """Distribution of X when U is uniform."""
        total = np.zeros(self.input_dist.size)
        u = np.full(self.num_messages, 1.0 / self.num_messages)
        for cond in self.conditionals:
            total += cond.T @ u
        return total / self.num_seeds

    def sample(self, u: int, gamma: int, rng: np.random.Generator) -> int:
        row = self.conditionals[gamma].getrow(u)
        return int(rng.choice(row.indices, p=row.data / row.data.sum()))


def build_shaper(
    p: InputDistribution, family: BinaryLinearHashFamily, u_bits: Optional[int] = None, seed: Seed = 0
) -> Shaper:
    """Shaper tables for every hash of the seed pool by enumeration over the input alphabet."""
    if u_bits is not None and u_bits != family.output_bits:
        raise ValidationError(f"u_bits={u_bits} does not match the family output width {family.output_bits}")
    if p.size > 2 ** family.input_bits:
        raise ValidationError(f"Input alphabet of size {p.size} does not fit in {family.input_bits} bits")
    hashes = seed_pool(family, seed, config.SEED_POOL_LIMIT)
    n_u = 2 ** family.output_bits
    symbols = np.arange(p.size)
    conditionals, marginals = [], []
    repaired = unreachable = 0
    for h in hashes:
        images = np.asarray(h(symbols), dtype=np.int64).reshape(-1)
        mass = np.bincount(images, weights=p.probs, minlength=n_u)
        counts = np.bincount(images, minlength=n_u)
        weights = p.probs.copy()
        dead = mass[images] <= 0
        weights[dead] = 1.0
        norm = np.where(dead, counts[images], mass[images])
        data = weights / norm
        rows, cols = list(images), list(symbols)
        vals = list(data)
        for u in np.flatnonzero(counts == 0):
            rows.extend([int(u)] * p.size)
            cols.extend(symbols.tolist())
            vals.extend([1.0 / p.size] * p.size)
            unreachable += 1
        repaired += int(np.count_nonzero((mass <= 0) & (counts > 0)))
        cond = sparse.csr_matrix((vals, (rows, cols)), shape=(n_u, p.size))
        cond.eliminate_zeros()
        conditionals.append(cond)
        marginals.append(mass)
    if repaired or unreachable:
        logger.warning(
            f"Shaper filled {repaired} zero-mass slices over their preimage and "
            f"{unreachable} slices without preimage over the whole alphabet"
        )
    shaper = Shaper(p, family, hashes, conditionals, np.asarray(marginals), repaired, unreachable)
    gap = float(np.max(np.abs(shaper.compose() - p.probs)))
    shaper.diagnostics["composition_error"] = gap
    if gap > COMPOSITION_TOL:
        raise ValidationError(f"Shaper does not reproduce P_X (max deviation {gap:.3e})")
    logger.info(f"Shaper built: {len(hashes)} seeds, |U|=2^{family.output_bits}, |X|={p.size}")
    return shaper


@dataclass(frozen=True)
class UniformityReport:
    """Distance of the shaped hash value from uniform.

    Attributes:
        gap: (1/|Gamma|) sum_gamma ||P_{f_gamma(X)} - uniform||_1, the seed-joint distance.
        averaged_marginal_gap: ||E_gamma P_{f_gamma(X)} - uniform||_1, never larger than gap.
        bound: 2 eps + sqrt(2^(u - H_min^eps(X))) with eps a trace-norm radius.
    """

    gap: float
    averaged_marginal_gap: float
    bound: float
    eps: float

    def as_dict(self) -> Dict[str, float]:
        return {"gap": self.gap, "averaged_marginal_gap": self.averaged_marginal_gap, "bound": self.bound, "eps": self.eps}


def uniformity_gap(shaper: Shaper, eps: float = 0.0) -> UniformityReport:
    uniform = 1.0 / shaper.num_messages
    per_seed = np.abs(shaper.marginals - uniform).sum(axis=1)
    averaged = float(np.abs(shaper.marginals.mean(axis=0) - uniform).sum())
    state = CqState.classical(shaper.input_dist, np.ones((shaper.input_dist.size, 1)))
    if eps > 0:
        h_min = smooth_min_entropy_classical(state.joint_table(), eps).value
    else:
        h_min = min_entropy_zero(state).value
    bound = 2 * eps + math.sqrt(2.0 ** (shaper.u_bits - h_min)) if math.isfinite(h_min) else 2 * eps
    return UniformityReport(float(per_seed.mean()), averaged, bound, eps)


@dataclass(frozen=True)
class LeftoverHashCheck:
    lhs: float
    rhs: float
    members: int
    full_family: bool

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-12

    def as_dict(self) -> Dict[str, Any]:
        return {"lhs": self.lhs, "rhs": self.rhs, "members": self.members, "full_family": self.full_family, "holds": self.holds}


def leftover_hash_check(
    p_x: InputDistribution,
    side_channel,
    r: int,
    eps: float = 0.0,
    kind: str = "full_random_matrix",
    seed: Seed = 0,
) -> LeftoverHashCheck:
    """||P_{f_Gamma(X) Gamma Z} - uniform x P_{Gamma Z}||_1 against 2 eps + sqrt(2^(r - H_min^eps(X|Z))).

    `side_channel` is W(z|x) of shape (|X|, |Z|); eps is a trace-norm radius.
    Families up to LHL_FAMILY_LIMIT members are enumerated; larger ones are
    replaced by a seeded pool of that size.
    """
    w = np.asarray(side_channel, dtype=float)
    if w.ndim != 2 or w.shape[0] != p_x.size:
        raise ValidationError(f"Side channel of shape {w.shape} for |X|={p_x.size}")
    b = input_bits_for(p_x.size)
    family = BinaryLinearHashFamily(b, r, kind)
    hashes = seed_pool(family, seed, LHL_FAMILY_LIMIT)
    joint = p_x.probs[:, None] * w
    p_z = joint.sum(axis=0)
    symbols = np.arange(p_x.size)
    n_u = 2 ** r
    total = 0.0
    for h in hashes:
        onehot = np.zeros((p_x.size, n_u))
        onehot[symbols, np.asarray(h(symbols)).reshape(-1)] = 1.0
        total += float(np.abs(onehot.T @ joint - p_z[None, :] / n_u).sum())
    lhs = total / len(hashes)
    if eps > 0:
        h_min = smooth_min_entropy_classical(joint, eps).value
    else:
        h_min = min_entropy_zero(CqState.classical(p_x, w)).value
    rhs = 2 * eps + (math.sqrt(2.0 ** (r - h_min)) if math.isfinite(h_min) else 0.0)
    return LeftoverHashCheck(lhs, rhs, len(hashes), len(hashes) == family.seed_space)
