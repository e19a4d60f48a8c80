"""Square-root-measurement decoding of a hashed cq source at small dimension.

Given psi_{UB} = sum_u P(u) |u><u| ⊗ rho_u, a syndrome map g and a reference
state phi_B, the decoder for syndrome c measures with

    Lambda_u = (sum_{u' in g^-1(c)} Q_u')^{-1/2} Q_u (sum ...)^{-1/2},
    Q_u = {P(u) rho_u - 2^{-(m-1)} phi_B}_+,

plus a failure element completing the POVM.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

import config
from exceptions import SizeLimitError, ValidationError
from matrix_core import EIGEN_CUTOFF, as_array, inverse_sqrt_on_support, positive_part_projector
from model import CqState
from protocol.hashing import BinaryLinearHashFamily, LinearHash, Seed, sample_hash

logger = logging.getLogger(__name__)

# Completeness and positivity tolerance of a constructed POVM
POVM_TOL = 1e-9

# Hash draws averaged when the family is too large to enumerate
SRM_SAMPLES = 200


@dataclass
class SrmPovm:
    """Elements for the coset of one syndrome, aligned with `coset`, plus the failure element."""

    coset: np.ndarray
    elements: List[np.ndarray]
    failure: np.ndarray

    def completeness_error(self) -> float:
        total = sum(self.elements, np.zeros_like(self.failure)) + self.failure
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh(e)[0]) for e in self.elements + [self.failure])


def _check_dims(state: CqState) -> None:
    if state.input_size * state.side_dim > config.MAX_QUANTUM_DIM:
        raise SizeLimitError(
            f"SRM decoding on dimension {state.input_size * state.side_dim} exceeds {config.MAX_QUANTUM_DIM}"
        )


def _reference(state: CqState, phi: Optional[np.ndarray]) -> np.ndarray:
    return state.side_marginal() if phi is None else as_array(phi)


def _q_operators(state: CqState, m: int, phi: Optional[np.ndarray]) -> List[np.ndarray]:
    """Per-u block of the positive-part projector {psi - 2^{-(m-1)} 1 ⊗ phi}_+."""
    ref = _reference(state, phi)
    scale = 2.0 ** (-(m - 1))
    return [positive_part_projector(block - scale * ref).entries for block in state.weighted_blocks()]


def srm_decoder(
    state: CqState, g: LinearHash, c: int, m: Optional[int] = None, phi: Optional[np.ndarray] = None
) -> SrmPovm:
    """POVM decoding u in g^-1(c) from the side system."""
    _check_dims(state)
    m = g.output_bits if m is None else m
    if 2 ** g.input_bits != state.input_size:
        raise ValidationError(f"Hash on {g.input_bits} bits for |U|={state.input_size}")
    return _decoder_from_q(_q_operators(state, m, phi), g.preimage(c), state.side_dim)


def _decoder_from_q(q: Sequence[np.ndarray], coset: np.ndarray, dim: int) -> SrmPovm:
    total = sum((q[u] for u in coset), np.zeros((dim, dim), dtype=complex))
    root = inverse_sqrt_on_support(total)
    elements = [root @ q[u] @ root for u in coset]
    elements = [(e + e.conj().T) / 2 for e in elements]
    failure = np.eye(dim) - sum(elements, np.zeros((dim, dim), dtype=complex))
    povm = SrmPovm(np.asarray(coset), elements, (failure + failure.conj().T) / 2)
    if povm.completeness_error() > POVM_TOL or povm.min_eigenvalue() < -POVM_TOL:
        raise ValidationError("Square-root measurement is not a valid POVM")
    return povm


def srm_error(state: CqState, g: LinearHash, m: Optional[int] = None, phi: Optional[np.ndarray] = None) -> float:
    """Exact probability that the SRM decoder given g(U) misses U."""
    _check_dims(state)
    m = g.output_bits if m is None else m
    q = _q_operators(state, m, phi)
    weighted = state.weighted_blocks()
    correct = 0.0
    for coset in g.cosets():
        if coset.size == 0:
            continue
        povm = _decoder_from_q(q, coset, state.side_dim)
        correct += sum(float(np.real(np.trace(e @ weighted[u]))) for u, e in zip(coset, povm.elements))
    return float(np.clip(1.0 - correct, 0.0, 1.0))


def srm_average_error(
    state: CqState,
    family: BinaryLinearHashFamily,
    m: Optional[int] = None,
    phi: Optional[np.ndarray] = None,
    seed: Seed = 0,
    samples: int = SRM_SAMPLES,
) -> float:
    """SRM error averaged over the whole family, or over `samples` seeded draws if it is larger."""
    m = family.output_bits if m is None else m
    if family.seed_space <= max(samples, config.SEED_POOL_LIMIT):
        hashes = list(family.members())
    else:
        base = list(np.atleast_1d(seed))
        hashes = [sample_hash(family, base + [i]) for i in range(samples)]
    return float(np.mean([srm_error(state, g, m, phi) for g in hashes]))


def srm_bound(state: CqState, m: int, phi: Optional[np.ndarray] = None) -> float:
    """2 Tr[(1 - P) psi] + 4 2^-m Tr[P (1 ⊗ phi)]."""
    _check_dims(state)
    ref = _reference(state, phi)
    q = _q_operators(state, m, phi)
    missed = sum(float(np.real(np.trace(block - qu @ block))) for qu, block in zip(q, state.weighted_blocks()))
    overlap = sum(float(np.real(np.trace(qu @ ref))) for qu in q)
    return 2 * missed + 4 * 2.0 ** (-m) * overlap


def hayashi_nagaoka_gap(S, T, d: float = 1.0) -> float:
    """Smallest eigenvalue of (1+d)(1-S) + (2+d+1/d) T - (1 - (S+T)^{-1/2} S (S+T)^{-1/2}).

    Nonnegative whenever 0 <= S <= 1 and T >= 0.
    """
    if d <= 0:
        raise ValidationError(f"d must be positive, got {d}")
    s, t = as_array(S), as_array(T)
    dim = s.shape[0]
    root = inverse_sqrt_on_support(s + t)
    eye = np.eye(dim)
    gap = (1 + d) * (eye - s) + (2 + d + 1 / d) * t - (eye - root @ s @ root)
    gap = (gap + gap.conj().T) / 2
    value = float(np.linalg.eigvalsh(gap)[0])
    if value < -EIGEN_CUTOFF:
        logger.warning(f"Hayashi-Nagaoka gap {value:.3e} is negative")
    return value
