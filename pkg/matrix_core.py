"""Dense complex Hermitian linear algebra at small dimension.

Everything the entropy, distance and decoder code needs: Hermitian and density
operator value types, Kronecker products, partial traces, sorted
eigendecompositions, matrix functions on supports, trace norm, fidelity,
purified distance and positive-part projectors. All logarithms are base 2.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Sequence, Tuple, Union

import numpy as np

from exceptions import ConvergenceError, DimensionMismatchError, ValidationError

logger = logging.getLogger(__name__)

# Max absolute deviation from Hermiticity / positivity / normalization
HERMITIAN_TOL = 1e-10

# Eigenvalues at or below this count as zero (logs, supports, positive parts)
EIGEN_CUTOFF = 1e-12

# Allowed reconstruction error of eigh, relative to the operator's max entry
RECONSTRUCTION_TOL = 1e-9


@dataclass(frozen=True)
class HermitianOperator:
    """A dim x dim complex matrix equal to its conjugate transpose."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValidationError(f"Operator must be a non-empty square matrix, got shape {m.shape}")
        deviation = float(np.max(np.abs(m - m.conj().T)))
        if deviation > HERMITIAN_TOL:
            raise ValidationError(f"Operator is not Hermitian (max deviation {deviation:.3e})")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def is_diagonal(self, tol: float = HERMITIAN_TOL) -> bool:
        off = self.entries - np.diag(np.diag(self.entries))
        return bool(np.max(np.abs(off), initial=0.0) <= tol)


@dataclass(frozen=True)
class DensityOperator:
    """A positive semidefinite operator with trace 1 (normalized) or in (0, 1] (subnormalized)."""

    base: HermitianOperator
    normalized: bool = True

    def __post_init__(self):
        if not isinstance(self.base, HermitianOperator):
            object.__setattr__(self, "base", HermitianOperator(self.base))
        smallest = float(np.linalg.eigvalsh(self.base.entries)[0])
        if smallest < -HERMITIAN_TOL:
            raise ValidationError(f"Density operator has negative eigenvalue {smallest:.3e}")
        tr = self.base.trace
        if self.normalized:
            if abs(tr - 1.0) > HERMITIAN_TOL:
                raise ValidationError(f"Normalized density operator has trace {tr!r}")
        elif not (0.0 < tr <= 1.0 + HERMITIAN_TOL):
            raise ValidationError(f"Subnormalized density operator has trace {tr!r} outside (0, 1]")

    @property
    def entries(self) -> np.ndarray:
        return self.base.entries

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def trace(self) -> float:
        return self.base.trace

    @classmethod
    def from_matrix(cls, matrix, normalized: bool = True) -> "DensityOperator":
        return cls(HermitianOperator(matrix), normalized)

    @classmethod
    def from_probabilities(cls, probs: Sequence[float], normalized: bool = True) -> "DensityOperator":
        return cls(HermitianOperator.diagonal(probs), normalized)

    @classmethod
    def pure(cls, vector: Sequence[complex]) -> "DensityOperator":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(HermitianOperator(np.outer(v, v.conj())), True)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(HermitianOperator(np.eye(dim) / dim), True)


Operator = Union[HermitianOperator, DensityOperator, np.ndarray]


def as_array(a: Operator) -> np.ndarray:
    """Return the underlying complex matrix of any operator-like value."""
    if isinstance(a, (HermitianOperator, DensityOperator)):
        return a.entries
    return np.asarray(a, dtype=complex)


def tensor(a: Operator, b: Operator) -> HermitianOperator:
    """Kronecker product a ⊗ b."""
    return HermitianOperator(np.kron(as_array(a), as_array(b)))


def tensor_all(operators: Iterable[Operator]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in operators:
        out = np.kron(out, as_array(op))
    return out


def _check_factors(dim: int, factor_dims: Sequence[int]) -> List[int]:
    dims = [int(d) for d in factor_dims]
    if any(d <= 0 for d in dims):
        raise DimensionMismatchError(f"Factor dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != dim:
        raise DimensionMismatchError(f"Factor dimensions {dims} do not multiply to {dim}")
    return dims


def partial_trace_array(m: np.ndarray, factor_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not in `keep`; kept factors stay in ascending order."""
    dims = _check_factors(m.shape[0], factor_dims)
    kept = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= len(dims) for i in kept):
        raise DimensionMismatchError(f"Kept factor indices {kept} out of range for {len(dims)} factors")
    t = np.asarray(m).reshape(dims + dims)
    for i in reversed([i for i in range(len(dims)) if i not in kept]):
        half = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + half)
    d = int(np.prod([dims[i] for i in kept])) if kept else 1
    return t.reshape(d, d)


def partial_trace(rho: DensityOperator, factor_dims: Sequence[int], keep: Iterable[int]) -> DensityOperator:
    """Reduced operator on the kept factors."""
    reduced = partial_trace_array(as_array(rho), factor_dims, keep)
    normalized = rho.normalized if isinstance(rho, DensityOperator) else True
    return DensityOperator(HermitianOperator(reduced), normalized)


def permute_factors(m: np.ndarray, factor_dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor order[j] of the input becomes factor j of the output."""
    dims = _check_factors(m.shape[0], factor_dims)
    order = list(order)
    if sorted(order) != list(range(len(dims))):
        raise DimensionMismatchError(f"{order} is not a permutation of {len(dims)} factors")
    k = len(dims)
    t = np.asarray(m).reshape(dims + dims).transpose(order + [k + o for o in order])
    return t.reshape(m.shape)


def eigh(a: Operator) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors (columns) of a Hermitian operator."""
    m = as_array(a)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"Eigendecomposition did not converge: {e}") from e
    idx = np.argsort(w)[::-1]
    w, v = w[idx], v[:, idx]
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    residual = float(np.max(np.abs(m - (v * w) @ v.conj().T), initial=0.0))
    if residual > RECONSTRUCTION_TOL * scale:
        raise ConvergenceError(f"Eigendecomposition residual {residual:.3e} above tolerance")
    return w, v


def apply_on_support(a: Operator, fn: Callable[[np.ndarray], np.ndarray], cutoff: float = EIGEN_CUTOFF) -> np.ndarray:
    """Spectral calculus restricted to eigenvalues above cutoff; zero elsewhere."""
    w, v = eigh(a)
    mask = w > cutoff
    values = np.zeros_like(w)
    values[mask] = fn(w[mask])
    return (v * values) @ v.conj().T


def sqrt_psd(a: Operator) -> np.ndarray:
    return apply_on_support(a, np.sqrt)


def inverse_sqrt_on_support(a: Operator) -> np.ndarray:
    """Moore-Penrose pseudo-inverse square root."""
    return apply_on_support(a, lambda w: 1.0 / np.sqrt(w))


def log2_on_support(a: Operator) -> np.ndarray:
    return apply_on_support(a, np.log2)


def support_projector(a: Operator) -> np.ndarray:
    return apply_on_support(a, np.ones_like)


def trace_norm(a: Operator) -> float:
    """Sum of absolute eigenvalues."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_array(a)))))


def fidelity(rho: Operator, sigma: Operator) -> float:
    """F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2."""
    a, b = as_array(rho), as_array(sigma)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Fidelity of operators with shapes {a.shape} and {b.shape}")
    singular = np.linalg.svd(sqrt_psd(a) @ sqrt_psd(b), compute_uv=False)
    return float(np.clip(np.sum(singular) ** 2, 0.0, 1.0))


def purified_distance(rho: Operator, sigma: Operator) -> float:
    return float(np.sqrt(max(0.0, 1.0 - fidelity(rho, sigma))))


def positive_part_projector(a: Operator, cutoff: float = EIGEN_CUTOFF) -> HermitianOperator:
    """Projector onto the eigenspaces with eigenvalue > cutoff."""
    w, v = eigh(a)
    vp = v[:, w > cutoff]
    return HermitianOperator(vp @ vp.conj().T)


def nonpositive_part_projector(a: Operator, cutoff: float = EIGEN_CUTOFF) -> HermitianOperator:
    w, v = eigh(a)
    vn = v[:, w <= cutoff]
    return HermitianOperator(vn @ vn.conj().T)
