"""Broadcast channels, input distributions, cq states and access structures.

Users are numbered 1..L. A user subset is a frozenset of user numbers; the
empty set stands for "no side information". Classical channels are stored as a
transition tensor of shape (|X|, d_1, ..., d_L) and only materialized as
diagonal density operators on request.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag

import config
from exceptions import AccessStructureError, DimensionMismatchError, SizeLimitError, ValidationError
from matrix_core import (
    HERMITIAN_TOL,
    DensityOperator,
    HermitianOperator,
    partial_trace_array,
    permute_factors,
    tensor_all,
)

logger = logging.getLogger(__name__)

UserSubset = FrozenSet[int]

# Largest transition tensor product_extension will build for classical channels
MAX_TRANSITION_ENTRIES = 2 ** 24

# Dense cq joints are only assembled up to this dimension
MAX_DENSE_JOINT_DIM = 4096


def subset_key(subset: Iterable[int]) -> Tuple[int, Tuple[int, ...]]:
    s = tuple(sorted(subset))
    return len(s), s


def canonical_order(subsets: Iterable[Iterable[int]]) -> List[UserSubset]:
    """Sort subsets by size, then lexicographically."""
    return sorted((frozenset(s) for s in subsets), key=subset_key)


def subset_label(subset: Iterable[int]) -> str:
    return "{" + ",".join(str(u) for u in sorted(subset)) + "}"


def all_subsets(num_users: int) -> List[UserSubset]:
    users = range(1, num_users + 1)
    return canonical_order(
        frozenset(c) for k in range(num_users + 1) for c in itertools.combinations(users, k)
    )


@dataclass(frozen=True)
class InputDistribution:
    """Probability vector over the input alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValidationError("Input distribution is empty")
        if np.any(p < -HERMITIAN_TOL) or abs(float(p.sum()) - 1.0) > HERMITIAN_TOL:
            raise ValidationError(f"Not a probability vector: {p.tolist()}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, size: int) -> "InputDistribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, symbol: int) -> "InputDistribution":
        p = np.zeros(size)
        p[symbol] = 1.0
        return cls(p)


@dataclass(frozen=True)
class AccessStructure:
    """Monotone access structure given by its minimal authorized sets."""

    num_users: int
    minimal_authorized: FrozenSet[UserSubset]

    def __post_init__(self):
        if int(self.num_users) < 1:
            raise AccessStructureError(f"Access structure needs at least one user, got {self.num_users}")
        sets = frozenset(frozenset(int(u) for u in s) for s in self.minimal_authorized)
        if not sets:
            raise AccessStructureError("Access structure has no authorized set")
        for s in sets:
            if not s:
                raise AccessStructureError("The empty set cannot be authorized")
            if min(s) < 1 or max(s) > self.num_users:
                raise AccessStructureError(f"Set {subset_label(s)} names users outside 1..{self.num_users}")
        for s, t in itertools.permutations(sets, 2):
            if s < t:
                raise AccessStructureError(
                    f"Minimal sets must form an antichain: {subset_label(s)} is contained in {subset_label(t)}"
                )
        object.__setattr__(self, "minimal_authorized", sets)

    @classmethod
    def from_sets(cls, num_users: int, sets: Iterable[Iterable[int]]) -> "AccessStructure":
        return cls(num_users, frozenset(frozenset(s) for s in sets))

    @classmethod
    def all_users(cls, num_users: int) -> "AccessStructure":
        return cls(num_users, frozenset([frozenset(range(1, num_users + 1))]))

    @classmethod
    def threshold(cls, num_users: int, t: int) -> "AccessStructure":
        """Every set of at least t users is authorized."""
        if not 1 <= t <= num_users:
            raise AccessStructureError(f"Threshold {t} outside 1..{num_users}")
        return cls(num_users, frozenset(frozenset(c) for c in itertools.combinations(range(1, num_users + 1), t)))

    def is_authorized(self, subset: Iterable[int]) -> bool:
        s = frozenset(subset)
        return any(m <= s for m in self.minimal_authorized)

    def authorized_sets(self) -> List[UserSubset]:
        return upward_closure(self)

    def unauthorized_sets(self) -> List[UserSubset]:
        return unauthorized_sets(self)

    @property
    def is_all_users(self) -> bool:
        return self.minimal_authorized == frozenset([frozenset(range(1, self.num_users + 1))])

    def as_dict(self) -> Dict:
        return {
            "users": self.num_users,
            "minimal_authorized": [sorted(s) for s in canonical_order(self.minimal_authorized)],
        }


def upward_closure(a: AccessStructure) -> List[UserSubset]:
    """All authorized sets, in canonical order."""
    return [s for s in all_subsets(a.num_users) if a.is_authorized(s)]


def unauthorized_sets(a: AccessStructure) -> List[UserSubset]:
    """Complement of the authorized sets; always contains the empty set."""
    return [s for s in all_subsets(a.num_users) if not a.is_authorized(s)]


@dataclass(frozen=True, eq=False)
class CqBroadcastChannel:
    """Map from input symbols to joint output states of L users.

    Exactly one of `transition` (classical, shape (|X|, d_1, ..., d_L)) and
    `states` (dense density matrices on the tensor of user spaces) is set.
    """

    input_alphabet_size: int
    user_dims: Tuple[int, ...]
    transition: Optional[np.ndarray] = None
    states: Optional[Tuple[np.ndarray, ...]] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.user_dims)
        object.__setattr__(self, "user_dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"User dimensions must be positive, got {dims}")
        if self.input_alphabet_size < 1:
            raise ValidationError("Input alphabet must be nonempty")
        if (self.transition is None) == (self.states is None):
            raise ValidationError("Give exactly one of a transition tensor or a list of output states")
        if self.transition is not None:
            t = np.array(self.transition, dtype=float)
            if t.shape != (self.input_alphabet_size,) + dims:
                raise DimensionMismatchError(
                    f"Transition shape {t.shape} does not match ({self.input_alphabet_size},) + {dims}"
                )
            if np.any(t < -HERMITIAN_TOL):
                raise ValidationError("Transition probabilities must be nonnegative")
            rows = t.reshape(self.input_alphabet_size, -1).sum(axis=1)
            if np.any(np.abs(rows - 1.0) > HERMITIAN_TOL):
                raise ValidationError(f"Transition rows must sum to 1, got {rows.tolist()}")
            t = np.clip(t, 0.0, None)
            t.setflags(write=False)
            object.__setattr__(self, "transition", t)
        else:
            total = int(np.prod(dims))
            if total > config.MAX_QUANTUM_DIM:
                raise SizeLimitError(f"Quantum output dimension {total} exceeds {config.MAX_QUANTUM_DIM}")
            if len(self.states) != self.input_alphabet_size:
                raise DimensionMismatchError(
                    f"{len(self.states)} output states for an input alphabet of size {self.input_alphabet_size}"
                )
            checked = []
            for x, rho in enumerate(self.states):
                op = DensityOperator.from_matrix(rho, normalized=True)
                if op.dim != total:
                    raise DimensionMismatchError(f"Output for x={x} has dim {op.dim}, expected {total}")
                m = op.entries.copy()
                m.setflags(write=False)
                checked.append(m)
            object.__setattr__(self, "states", tuple(checked))

    @classmethod
    def from_transition(cls, tensor, name: str = "") -> "CqBroadcastChannel":
        t = np.asarray(tensor, dtype=float)
        return cls(t.shape[0], tuple(t.shape[1:]), transition=t, name=name)

    @classmethod
    def from_states(cls, states: Sequence, user_dims: Sequence[int], name: str = "") -> "CqBroadcastChannel":
        """Dense outputs; diagonal outputs are stored as a classical channel."""
        mats = [np.asarray(s, dtype=complex) for s in states]
        if all(HermitianOperator(m).is_diagonal() for m in mats):
            diag = np.array([np.real(np.diag(m)) for m in mats])
            return cls.from_transition(diag.reshape((len(mats),) + tuple(user_dims)), name=name)
        return cls(len(mats), tuple(user_dims), states=tuple(mats), name=name)

    @classmethod
    def independent(cls, per_user: Sequence, name: str = "") -> "CqBroadcastChannel":
        """Classical channel whose users see conditionally independent outputs."""
        mats = [np.asarray(w, dtype=float) for w in per_user]
        tensor = mats[0]
        for w in mats[1:]:
            tensor = tensor[..., None] * w.reshape((w.shape[0],) + (1,) * (tensor.ndim - 1) + (w.shape[1],))
        return cls.from_transition(tensor, name=name)

    @classmethod
    def binary_flip(cls, flips: Sequence[float], name: str = "") -> "CqBroadcastChannel":
        """Y_l = X xor N_l with independent N_l ~ Bernoulli(flips[l])."""
        return cls.independent([[[1 - f, f], [f, 1 - f]] for f in flips], name=name)

    @property
    def num_users(self) -> int:
        return len(self.user_dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.user_dims))

    @property
    def is_classical(self) -> bool:
        return self.transition is not None

    def _check_subset(self, subset: Iterable[int]) -> List[int]:
        users = sorted(set(int(u) for u in subset))
        if any(u < 1 or u > self.num_users for u in users):
            raise DimensionMismatchError(f"Subset {users} names users outside 1..{self.num_users}")
        return users

    def subset_dim(self, subset: Iterable[int]) -> int:
        return int(np.prod([self.user_dims[u - 1] for u in self._check_subset(subset)]))

    def marginal_transition(self, subset: Iterable[int]) -> np.ndarray:
        """W(y_D | x) as an array of shape (|X|, prod of d_l over D)."""
        if not self.is_classical:
            raise ValidationError("marginal_transition needs a classical channel")
        users = self._check_subset(subset)
        drop = tuple(l for l in range(1, self.num_users + 1) if l not in users)
        t = self.transition.sum(axis=drop) if drop else self.transition
        return np.asarray(t).reshape(self.input_alphabet_size, -1)

    def conditional_states(self, subset: Iterable[int]) -> List[np.ndarray]:
        """rho^x restricted to the users in `subset`, one dense matrix per input."""
        users = self._check_subset(subset)
        if self.is_classical:
            return [np.diag(row).astype(complex) for row in self.marginal_transition(users)]
        keep = [u - 1 for u in users]
        return [partial_trace_array(rho, self.user_dims, keep) for rho in self.states]

    def output(self, x: int) -> DensityOperator:
        if self.is_classical:
            return DensityOperator.from_probabilities(self.transition[x].ravel())
        return DensityOperator.from_matrix(self.states[x])

    @property
    def outputs(self) -> List[DensityOperator]:
        return [self.output(x) for x in range(self.input_alphabet_size)]

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "kind": "classical" if self.is_classical else "quantum",
            "input_alphabet": self.input_alphabet_size,
            "user_dims": list(self.user_dims),
        }


@dataclass(frozen=True, eq=False)
class CqState:
    """psi_{X Y_D} = sum_x P(x) |x><x| ⊗ rho^x_{Y_D}.

    Classical states keep the conditional table W(y|x) in `table`; quantum
    states keep one dense conditional block per input in `blocks`.
    """

    input_dist: InputDistribution
    subset: UserSubset
    table: Optional[np.ndarray] = None
    blocks: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        n = self.input_dist.size
        if (self.table is None) == (self.blocks is None):
            raise ValidationError("CqState needs exactly one of a conditional table or conditional blocks")
        if self.table is not None:
            t = np.array(self.table, dtype=float)
            if t.ndim != 2 or t.shape[0] != n:
                raise DimensionMismatchError(f"Conditional table shape {t.shape} does not match |X|={n}")
            if np.any(np.abs(t.sum(axis=1) - 1.0) > HERMITIAN_TOL) or np.any(t < -HERMITIAN_TOL):
                raise ValidationError("Conditional table rows must be probability vectors")
            t = np.clip(t, 0.0, None)
            t.setflags(write=False)
            object.__setattr__(self, "table", t)
        else:
            if len(self.blocks) != n:
                raise DimensionMismatchError(f"{len(self.blocks)} blocks for |X|={n}")
            mats = []
            for b in self.blocks:
                m = DensityOperator.from_matrix(b).entries.copy()
                m.setflags(write=False)
                mats.append(m)
            if len({m.shape for m in mats}) != 1:
                raise DimensionMismatchError("Conditional blocks must share one dimension")
            object.__setattr__(self, "blocks", tuple(mats))
        object.__setattr__(self, "subset", frozenset(self.subset))

    @classmethod
    def classical(cls, p: InputDistribution, table, subset: Iterable[int] = ()) -> "CqState":
        return cls(p, frozenset(subset), table=np.asarray(table, dtype=float))

    @classmethod
    def quantum(cls, p: InputDistribution, blocks: Sequence, subset: Iterable[int] = ()) -> "CqState":
        """Quantum conditionals; all-diagonal blocks are stored classically."""
        mats = [np.asarray(b, dtype=complex) for b in blocks]
        if all(HermitianOperator(m).is_diagonal() for m in mats):
            return cls.classical(p, np.array([np.real(np.diag(m)) for m in mats]), subset)
        return cls(p, frozenset(subset), blocks=tuple(mats))

    @property
    def is_classical(self) -> bool:
        return self.table is not None

    @property
    def input_size(self) -> int:
        return self.input_dist.size

    @property
    def side_dim(self) -> int:
        return self.table.shape[1] if self.is_classical else self.blocks[0].shape[0]

    def joint_table(self) -> np.ndarray:
        """P(x, y) for classical states."""
        if not self.is_classical:
            raise ValidationError("joint_table needs a classical cq state")
        return self.input_dist.probs[:, None] * self.table

    def weighted_blocks(self) -> List[np.ndarray]:
        """P(x) rho^x for every x."""
        if self.is_classical:
            return [np.diag(row).astype(complex) for row in self.joint_table()]
        return [p * b for p, b in zip(self.input_dist.probs, self.blocks)]

    def side_marginal(self) -> np.ndarray:
        """rho_{Y_D} as a dense matrix."""
        if self.is_classical:
            return np.diag(self.joint_table().sum(axis=0)).astype(complex)
        return sum(self.weighted_blocks())

    @property
    def joint(self) -> DensityOperator:
        """Block-diagonal dense joint operator."""
        dim = self.input_size * self.side_dim
        if dim > MAX_DENSE_JOINT_DIM:
            raise SizeLimitError(f"Dense cq joint of dimension {dim} exceeds {MAX_DENSE_JOINT_DIM}")
        return DensityOperator.from_matrix(block_diag(*self.weighted_blocks()))


def build_cq_state(p: InputDistribution, w: CqBroadcastChannel, subset: Iterable[int]) -> CqState:
    """psi_{X Y_D} for input distribution p through channel w restricted to D."""
    if p.size != w.input_alphabet_size:
        raise DimensionMismatchError(f"Input distribution of size {p.size} for |X|={w.input_alphabet_size}")
    users = frozenset(w._check_subset(subset))
    if w.is_classical:
        return CqState.classical(p, w.marginal_transition(users), users)
    return CqState.quantum(p, w.conditional_states(users), users)


def product_extension(w: CqBroadcastChannel, n: int) -> CqBroadcastChannel:
    """n independent uses; input (x_1..x_n) is indexed row-major, user l sees (y_l^1..y_l^n)."""
    if n < 1:
        raise ValidationError(f"Blocklength must be positive, got {n}")
    if n == 1:
        return w
    L = w.num_users
    order = [c * L + l for l in range(L) for c in range(n)]
    new_dims = tuple(d ** n for d in w.user_dims)
    name = f"{w.name}^{n}" if w.name else ""
    if w.is_classical:
        entries = w.input_alphabet_size ** n * w.total_dim ** n
        if entries > MAX_TRANSITION_ENTRIES:
            raise SizeLimitError(f"Product extension needs {entries} transition entries (limit {MAX_TRANSITION_ENTRIES})")
        flat = w.transition.reshape(w.input_alphabet_size, -1)
        t = flat
        for _ in range(n - 1):
            t = np.kron(t, flat)
        t = t.reshape((t.shape[0],) + w.user_dims * n)
        t = t.transpose([0] + [1 + o for o in order])
        return CqBroadcastChannel.from_transition(t.reshape((t.shape[0],) + new_dims), name=name)
    if n > 3 or w.total_dim ** n > config.MAX_QUANTUM_DIM:
        raise SizeLimitError(f"Quantum product extension to n={n} exceeds dimension {config.MAX_QUANTUM_DIM}")
    states = []
    for xs in itertools.product(range(w.input_alphabet_size), repeat=n):
        rho = tensor_all(w.states[x] for x in xs)
        states.append(permute_factors(rho, list(w.user_dims) * n, order))
    logger.debug(f"Built quantum product extension n={n} with {len(states)} inputs")
    return CqBroadcastChannel(w.input_alphabet_size ** n, new_dims, states=tuple(states), name=name)
