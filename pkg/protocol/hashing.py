"""Linear hash families over GF(2).

Inputs and outputs are integers read as bit strings, most significant bit
first. A hash is an r x b binary matrix; evaluation is a matrix-vector product
mod 2. Both families are exactly 2-universal: for x != x', the fraction of
seeds with f(x) = f(x') is 2^-r.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import toeplitz

from exceptions import SizeLimitError, ValidationError

logger = logging.getLogger(__name__)

# Widest input / output handled; evaluate_all materializes 2^b entries
MAX_HASH_BITS = 24

Seed = Union[int, Sequence[int]]


class HashKind(str, Enum):
    FULL_RANDOM_MATRIX = "full_random_matrix"
    TOEPLITZ = "toeplitz"


def int_to_bits(values, width: int) -> np.ndarray:
    """Bit expansion of integers, shape (..., width), MSB first."""
    v = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((v[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    width = b.shape[-1]
    if width == 0:
        return np.zeros(b.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return b @ weights


def gf2_rank(matrix) -> int:
    """Rank over GF(2) by Gaussian elimination."""
    m = np.array(matrix, dtype=np.uint8) % 2
    if m.size == 0:
        return 0
    rank = 0
    rows, cols = m.shape
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass(frozen=True)
class LinearHash:
    """x -> M x over GF(2) with M of shape (output_bits, input_bits)."""

    matrix: np.ndarray
    seed_index: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.uint8)
        if m.ndim != 2:
            raise ValidationError(f"Hash matrix must be 2-D, got shape {m.shape}")
        if np.any(m > 1):
            raise ValidationError("Hash matrix entries must be 0 or 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, bits: int) -> "LinearHash":
        return cls(np.eye(bits, dtype=np.uint8))

    @property
    def input_bits(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_bits(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return gf2_rank(self.matrix)

    @property
    def is_surjective(self) -> bool:
        return self.rank == self.output_bits

    @property
    def is_injective(self) -> bool:
        return self.rank == self.input_bits

    def __call__(self, x):
        bits = int_to_bits(x, self.input_bits)
        out = bits_to_int((bits.astype(np.int64) @ self.matrix.T.astype(np.int64)) % 2)
        return int(out) if np.ndim(out) == 0 else out

    def evaluate_all(self) -> np.ndarray:
        """Hash values of 0 .. 2^b - 1."""
        return np.asarray(self(np.arange(2 ** self.input_bits)), dtype=np.int64)

    def preimage(self, c: int) -> np.ndarray:
        """Sorted inputs hashing to c."""
        return np.flatnonzero(self.evaluate_all() == c)

    def cosets(self) -> List[np.ndarray]:
        images = self.evaluate_all()
        order = np.argsort(images, kind="stable")
        bounds = np.searchsorted(images[order], np.arange(2 ** self.output_bits + 1))
        return [order[bounds[c]:bounds[c + 1]] for c in range(2 ** self.output_bits)]


@dataclass(frozen=True)
class BinaryLinearHashFamily:
    input_bits: int
    output_bits: int
    kind: HashKind = HashKind.FULL_RANDOM_MATRIX

    def __post_init__(self):
        object.__setattr__(self, "kind", HashKind(self.kind))
        if not 0 <= self.input_bits <= MAX_HASH_BITS:
            raise SizeLimitError(f"Hash input width {self.input_bits} outside 0..{MAX_HASH_BITS}")
        if not 0 <= self.output_bits <= self.input_bits:
            raise ValidationError(f"Hash output width {self.output_bits} must lie in 0..{self.input_bits}")

    @property
    def seed_bits(self) -> int:
        if self.output_bits == 0 or self.input_bits == 0:
            return 0
        if self.kind is HashKind.TOEPLITZ:
            return self.output_bits + self.input_bits - 1
        return self.output_bits * self.input_bits

    @property
    def seed_space(self) -> int:
        """|Gamma|."""
        return 2 ** self.seed_bits

    def matrix_from_bits(self, bits: np.ndarray) -> np.ndarray:
        r, b = self.output_bits, self.input_bits
        if self.seed_bits == 0:
            return np.zeros((r, b), dtype=np.uint8)
        if self.kind is HashKind.TOEPLITZ:
            col = bits[:r]
            row = np.concatenate([bits[:1], bits[r:]])
            return np.asarray(toeplitz(col, row), dtype=np.uint8)
        return np.asarray(bits, dtype=np.uint8).reshape(r, b)

    def member(self, index: int) -> LinearHash:
        """The hash whose seed bits spell `index`."""
        if not 0 <= index < self.seed_space:
            raise ValidationError(f"Seed index {index} outside 0..{self.seed_space - 1}")
        return LinearHash(self.matrix_from_bits(int_to_bits(index, self.seed_bits)), seed_index=index)

    def members(self) -> Iterable[LinearHash]:
        if self.seed_bits > MAX_HASH_BITS:
            raise SizeLimitError(f"Family of 2^{self.seed_bits} members is too large to enumerate")
        for index in range(self.seed_space):
            yield self.member(index)

    def as_dict(self):
        return {"input_bits": self.input_bits, "output_bits": self.output_bits, "kind": self.kind.value}


def sample_hash(family: BinaryLinearHashFamily, seed: Seed) -> LinearHash:
    """Deterministic draw of one family member from `seed`."""
    bits = np.random.default_rng(seed).integers(0, 2, size=family.seed_bits, dtype=np.uint8)
    return LinearHash(family.matrix_from_bits(bits))


def sample_surjective_hash(family: BinaryLinearHashFamily, seed: Seed, max_draws: int = 256) -> LinearHash:
    """First full-row-rank draw from the seeded stream; every syndrome then has 2^(b-r) preimages."""
    base = list(np.atleast_1d(seed))
    for attempt in range(max_draws):
        h = sample_hash(family, base + [attempt])
        if h.is_surjective:
            return h
    raise ValidationError(f"No surjective hash in {max_draws} draws from {family.as_dict()}")


def seed_pool(family: BinaryLinearHashFamily, seed: Seed = 0, limit: int = 256) -> List[LinearHash]:
    """The whole family when it has at most `limit` members, else `limit` seeded draws."""
    if family.seed_space <= limit:
        return list(family.members())
    logger.info(f"Hash family has 2^{family.seed_bits} members; sampling a pool of {limit}")
    base = list(np.atleast_1d(seed))
    return [sample_hash(family, base + [i]) for i in range(limit)]


def collision_probability(hashes: Sequence[LinearHash], x: int, x_prime: int) -> float:
    """Fraction of the given hashes with f(x) = f(x')."""
    return float(np.mean([h(x) == h(x_prime) for h in hashes]))
