"""Information measures on cq states, in bits.

Quantum quantities are computed spectrally at small dimension. For classical
(diagonal) states the min-, max- and hypothesis-testing entropies have exact
closed forms or linear-program characterizations, and only those are smoothed.

Smoothing balls are trace-norm balls {P' subnormalized : ||P' - P||_1 <= r}.
Such a ball sits inside the purified-distance ball of radius sqrt(r) and
contains the purified-distance ball of radius r/2; both radii are recorded in
the report metadata.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, sparse
from scipy.special import erfc

from exceptions import ConvergenceError, DimensionMismatchError, SupportError, ValidationError
from matrix_core import (
    EIGEN_CUTOFF,
    HERMITIAN_TOL,
    DensityOperator,
    as_array,
    eigh,
    inverse_sqrt_on_support,
    log2_on_support,
    partial_trace_array,
    sqrt_psd,
    support_projector,
)
from model import CqState

logger = logging.getLogger(__name__)

# Optimal discrimination fixed point
DISCRIMINATION_TOL = 1e-7
DISCRIMINATION_STEP_TOL = 1e-9
DISCRIMINATION_DAMPING = 0.5
MAX_ITERATIONS = 100_000

# Fidelity ascent over sigma_B
ASCENT_TOL = 1e-6

# Classical smoothing
BISECTION_GAP = 1e-4
DESCENT_GAP = 1e-3
VERTEX_ENUMERATION_ATOMS = 12

# Routes of H(A|B) must agree to this
ROUTE_AGREEMENT = 1e-8


class EntropyMethod(str, Enum):
    SPECTRAL = "spectral"
    CLOSED_FORM = "closed_form"
    ITERATIVE_DISCRIMINATION = "iterative_discrimination"
    FIXED_POINT_ASCENT = "fixed_point_ascent"
    BISECTION_LP = "bisection_lp"
    PROJECTED_DESCENT = "projected_descent"
    NEYMAN_PEARSON = "neyman_pearson"


METHOD_TOLERANCE = {
    EntropyMethod.SPECTRAL: ROUTE_AGREEMENT,
    EntropyMethod.CLOSED_FORM: 1e-12,
    EntropyMethod.ITERATIVE_DISCRIMINATION: DISCRIMINATION_TOL,
    EntropyMethod.FIXED_POINT_ASCENT: ASCENT_TOL,
    EntropyMethod.BISECTION_LP: BISECTION_GAP,
    EntropyMethod.PROJECTED_DESCENT: DESCENT_GAP,
    EntropyMethod.NEYMAN_PEARSON: 1e-12,
}


@dataclass(frozen=True)
class EntropyReport:
    """A computed entropy with the method that produced it and its achieved tolerance."""

    value: float
    method: EntropyMethod
    residual: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.residual > METHOD_TOLERANCE[self.method]:
            raise ConvergenceError(
                f"{self.method.value} residual {self.residual:.3e} above tolerance {METHOD_TOLERANCE[self.method]:.0e}"
            )

    def as_dict(self) -> Dict[str, Any]:
        out = {"value": _json_float(self.value), "method": self.method.value, "residual": self.residual}
        for key, val in self.metadata.items():
            if isinstance(val, (int, float, str, bool)):
                out[key] = _json_float(val) if isinstance(val, float) else val
            elif isinstance(val, (list, tuple)) and all(isinstance(v, (int, float)) for v in val):
                out[key] = [_json_float(float(v)) for v in val]
        return out


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


# ---------------------------------------------------------------------------
# Shannon / von Neumann
# ---------------------------------------------------------------------------

def shannon_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float).ravel()
    p = p[p > EIGEN_CUTOFF]
    return float(-np.sum(p * np.log2(p)))


def classical_conditional_entropy(joint) -> float:
    """H(X|Y) for a joint table P(x, y)."""
    P = np.asarray(joint, dtype=float)
    return shannon_entropy(P) - shannon_entropy(P.sum(axis=0))


def von_neumann(rho: DensityOperator) -> float:
    """-Tr[rho log rho]."""
    if isinstance(rho, DensityOperator) and not rho.normalized:
        raise ValidationError("von Neumann entropy needs a normalized state")
    return shannon_entropy(np.linalg.eigvalsh(as_array(rho)))


def _check_support(rho: np.ndarray, sigma: np.ndarray) -> None:
    outside = np.eye(sigma.shape[0]) - support_projector(sigma)
    leak = float(np.real(np.trace(outside @ rho)))
    if leak > 1e-10:
        raise SupportError(f"supp(rho) is not contained in supp(sigma) (leaked weight {leak:.3e})")


def relative_entropy(rho, sigma) -> float:
    """D(rho || sigma) = Tr[rho (log rho - log sigma)]."""
    r, s = as_array(rho), as_array(sigma)
    _check_support(r, s)
    return float(np.real(np.trace(r @ (log2_on_support(r) - log2_on_support(s)))))


def relative_entropy_variance(rho, sigma) -> float:
    """V(rho || sigma) = Tr[rho (log rho - log sigma)^2] - D^2."""
    r, s = as_array(rho), as_array(sigma)
    _check_support(r, s)
    diff = log2_on_support(r) - log2_on_support(s)
    d = float(np.real(np.trace(r @ diff)))
    v = float(np.real(np.trace(r @ diff @ diff))) - d * d
    if v < -1e-9:
        raise ConvergenceError(f"Negative information variance {v:.3e}")
    return max(v, 0.0)


def _bipartition(state: Union[CqState, DensityOperator], dims: Optional[Tuple[int, int]]):
    if isinstance(state, CqState):
        return as_array(state.joint), (state.input_size, state.side_dim)
    if dims is None:
        raise DimensionMismatchError("A bipartite density operator needs its split (d_A, d_B)")
    return as_array(state), tuple(dims)


def conditional_entropy(state: Union[CqState, DensityOperator], dims: Optional[Tuple[int, int]] = None) -> float:
    """H(A|B) = H(AB) - H(B), cross-checked against -D(rho_AB || 1 ⊗ rho_B)."""
    if isinstance(state, CqState) and state.is_classical:
        P = state.joint_table()
        route1 = classical_conditional_entropy(P)
        py = np.broadcast_to(P.sum(axis=0), P.shape)
        mask = P > EIGEN_CUTOFF
        route2 = float(-np.sum(P[mask] * np.log2(P[mask] / py[mask])))
    elif isinstance(state, CqState):
        probs = state.input_dist.probs
        h_xy = shannon_entropy(probs) + sum(
            p * shannon_entropy(np.linalg.eigvalsh(b)) for p, b in zip(probs, state.blocks) if p > 0
        )
        route1 = h_xy - shannon_entropy(np.linalg.eigvalsh(state.side_marginal()))
        rho = as_array(state.joint)
        route2 = -relative_entropy(rho, np.kron(np.eye(state.input_size), state.side_marginal()))
    else:
        rho, (da, db) = _bipartition(state, dims)
        rho_b = partial_trace_array(rho, [da, db], [1])
        route1 = shannon_entropy(np.linalg.eigvalsh(rho)) - shannon_entropy(np.linalg.eigvalsh(rho_b))
        route2 = -relative_entropy(rho, np.kron(np.eye(da), rho_b))
    if abs(route1 - route2) > ROUTE_AGREEMENT:
        raise ConvergenceError(
            f"Conditional entropy routes disagree by {abs(route1 - route2):.3e}",
            bracket=(min(route1, route2), max(route1, route2)),
        )
    return route1


def conditional_info_variance(state: Union[CqState, DensityOperator], dims: Optional[Tuple[int, int]] = None) -> float:
    """V(A|B) = V(rho_AB || 1_A ⊗ rho_B)."""
    if isinstance(state, CqState) and state.is_classical:
        P = state.joint_table()
        py = np.broadcast_to(P.sum(axis=0), P.shape)
        mask = P > EIGEN_CUTOFF
        log_ratio = np.log2(P[mask] / py[mask])
        d = float(np.sum(P[mask] * log_ratio))
        return max(float(np.sum(P[mask] * log_ratio ** 2)) - d * d, 0.0)
    rho, (da, db) = _bipartition(state, dims)
    rho_b = partial_trace_array(rho, [da, db], [1])
    return relative_entropy_variance(rho, np.kron(np.eye(da), rho_b))


# ---------------------------------------------------------------------------
# Min- and max-entropy without smoothing
# ---------------------------------------------------------------------------

def _discrimination_bracket(ensemble: Sequence[np.ndarray], povm: Sequence[np.ndarray]) -> Tuple[float, float, np.ndarray]:
    y = sum(a @ e for a, e in zip(ensemble, povm))
    y = (y + y.conj().T) / 2
    lower = float(sum(np.real(np.trace(a @ e)) for a, e in zip(ensemble, povm)))
    shift = max(float(np.linalg.eigvalsh(a - y)[-1]) for a in ensemble)
    upper = float(np.real(np.trace(y))) + y.shape[0] * max(shift, 0.0)
    return lower, upper, y


def guessing_probability(
    ensemble: Sequence[np.ndarray],
    tol: float = DISCRIMINATION_TOL,
    damping: float = DISCRIMINATION_DAMPING,
    max_iter: int = MAX_ITERATIONS,
) -> Dict[str, Any]:
    """Optimal success probability for the weighted ensemble {P(x) rho^x}.

    Damped fixed point E_x <- R^-1 A_x E_x A_x R^-1 with R = (sum A_x E_x A_x)^1/2,
    completed on the kernel of R. The dual point Y = sum A_x E_x, shifted to
    dominate every A_x, gives the upper end of the bracket.

    Returns:
        dict with p_guess (primal, a lower bound), bracket, iterations and povm.
    """
    A = [np.asarray(a, dtype=complex) for a in ensemble]
    k, d = len(A), A[0].shape[0]
    povm = [np.eye(d, dtype=complex) / k for _ in A]
    previous = -np.inf
    lower = upper = 0.0
    for iteration in range(1, max_iter + 1):
        r2 = sum(a @ e @ a for a, e in zip(A, povm))
        r_inv = inverse_sqrt_on_support(r2)
        fresh = [r_inv @ a @ e @ a @ r_inv for a, e in zip(A, povm)]
        fresh[0] = fresh[0] + (np.eye(d) - sum(fresh))
        povm = [damping * e + (1 - damping) * (f + f.conj().T) / 2 for e, f in zip(povm, fresh)]
        lower, upper, _ = _discrimination_bracket(A, povm)
        if abs(lower - previous) <= DISCRIMINATION_STEP_TOL and upper - lower <= tol:
            return {"p_guess": lower, "bracket": (lower, upper), "iterations": iteration, "povm": povm}
        previous = lower
    raise ConvergenceError(
        f"Discrimination fixed point did not reach gap {tol:.0e} in {max_iter} iterations",
        bracket=(lower, upper),
    )


def max_conditional_fidelity(
    ensemble: Sequence[np.ndarray], tol: float = 1e-10, max_iter: int = 20_000
) -> Dict[str, Any]:
    """max over sigma of sum_x ||sqrt(A_x) sqrt(sigma)||_1, by alternating ascent.

    Each sweep fixes the polar unitaries W_x of sqrt(A_x) sqrt(sigma) and then sets
    sqrt(sigma) to the normalized positive part of Herm(sum_x W_x sqrt(A_x)).
    The objective never decreases.
    """
    roots = [sqrt_psd(a) for a in ensemble]
    sigma = sum(np.asarray(a, dtype=complex) for a in ensemble)
    sigma = sigma / np.real(np.trace(sigma))
    value = _root_fidelity_sum(roots, sigma)
    improvement = np.inf
    for iteration in range(1, max_iter + 1):
        root_sigma = sqrt_psd(sigma)
        m = np.zeros_like(sigma)
        for r in roots:
            u, _, vh = np.linalg.svd(r @ root_sigma)
            m = m + vh.conj().T @ u.conj().T @ r
        h = (m + m.conj().T) / 2
        w, v = eigh(h)
        w = np.clip(w, 0.0, None)
        tau = (v * w) @ v.conj().T
        candidate = tau @ tau
        candidate = candidate / np.real(np.trace(candidate))
        new_value = _root_fidelity_sum(roots, candidate)
        improvement = new_value - value
        if improvement > 0:
            sigma, value = candidate, new_value
        if improvement <= tol * max(value, 1.0):
            return {"value": value, "sigma": sigma, "iterations": iteration, "improvement": max(improvement, 0.0)}
    if improvement <= ASCENT_TOL * value / 4:
        logger.warning(f"Fidelity ascent stopped at the iteration cap with step {improvement:.2e}")
        return {"value": value, "sigma": sigma, "iterations": max_iter, "improvement": improvement}
    raise ConvergenceError(
        f"Fidelity ascent did not settle in {max_iter} iterations",
        bracket=(value, float(sum(np.sqrt(max(np.real(np.trace(r @ r)), 0.0)) for r in roots))),
    )


def _root_fidelity_sum(roots: Sequence[np.ndarray], sigma: np.ndarray) -> float:
    rs = sqrt_psd(sigma)
    return float(sum(np.sum(np.linalg.svd(r @ rs, compute_uv=False)) for r in roots))


def _classical_min_entropy(P: np.ndarray) -> Tuple[float, np.ndarray]:
    col_max = P.max(axis=0)
    return -math.log2(float(col_max.sum())), col_max / col_max.sum()


def _classical_max_entropy(P: np.ndarray) -> Tuple[float, np.ndarray]:
    col = np.sqrt(np.clip(P, 0.0, None)).sum(axis=0) ** 2
    total = float(col.sum())
    if total <= 0.0:
        return -np.inf, col
    return math.log2(total), col / total


def min_entropy_zero(state: CqState) -> EntropyReport:
    """H_min(X|Y_D) = -log p_guess."""
    if state.is_classical:
        value, sigma = _classical_min_entropy(state.joint_table())
        return EntropyReport(value, EntropyMethod.CLOSED_FORM, 0.0, {"lambda": value, "sigma_B": sigma.tolist()})
    result = guessing_probability(state.weighted_blocks())
    lower, upper = result["bracket"]
    value = -math.log2(result["p_guess"])
    return EntropyReport(
        value,
        EntropyMethod.ITERATIVE_DISCRIMINATION,
        upper - lower,
        {
            "lambda": value,
            "p_guess": result["p_guess"],
            "bracket": [-math.log2(upper), value],
            "iterations": result["iterations"],
        },
    )


def max_entropy_zero(state: CqState) -> EntropyReport:
    """H_max(X|Y_D) = log max_sigma F(psi_XB, 1_X ⊗ sigma_B)."""
    if state.is_classical:
        value, sigma = _classical_max_entropy(state.joint_table())
        return EntropyReport(value, EntropyMethod.CLOSED_FORM, 0.0, {"sigma_B": sigma.tolist()})
    result = max_conditional_fidelity(state.weighted_blocks())
    value = 2 * math.log2(result["value"])
    residual = 2 * math.log2(1 + result["improvement"] / result["value"])
    return EntropyReport(
        value,
        EntropyMethod.FIXED_POINT_ASCENT,
        residual,
        {"iterations": result["iterations"], "sigma_B_spectrum": np.linalg.eigvalsh(result["sigma"]).tolist()},
    )


# ---------------------------------------------------------------------------
# Classical smoothing
# ---------------------------------------------------------------------------

def inner_trace_radius(eps: float) -> float:
    """Trace-norm radius of a ball inside the purified-distance ball of radius eps."""
    return eps * eps


def outer_trace_radius(eps: float) -> float:
    """Trace-norm radius of a ball containing the purified-distance ball of radius eps."""
    return 2 * eps


def _radius_metadata(radius: float) -> Dict[str, float]:
    return {
        "trace_radius": radius,
        "purified_radius_inner": radius / 2,
        "purified_radius_outer": math.sqrt(radius),
    }


def _as_joint(P_xy) -> np.ndarray:
    P = np.asarray(P_xy, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or np.any(P < -HERMITIAN_TOL) or abs(float(P.sum()) - 1.0) > 1e-9:
        raise ValidationError("Expected a normalized joint distribution table P(x, y)")
    return np.clip(P, 0.0, None)


def _min_entropy_feasible(P: np.ndarray, radius: float, lam: float) -> bool:
    """Is there P' with ||P' - P||_1 <= radius, sum P' <= 1 and P'(x,y) <= 2^-lam Q(y)?"""
    nx, ny = P.shape
    n = nx * ny
    scale = 2.0 ** (-lam)
    eye = sparse.identity(n, format="csr")
    zeros_q = sparse.csr_matrix((n, ny))
    zeros_t = sparse.csr_matrix((n, n))
    # row (x, y) of P' ravel is x * ny + y
    spread = sparse.kron(sparse.csr_matrix(np.ones((nx, 1))), sparse.identity(ny), format="csr")
    a_ub = sparse.vstack(
        [
            sparse.hstack([eye, -scale * spread, zeros_t]),
            sparse.hstack([eye, zeros_q, -eye]),
            sparse.hstack([-eye, zeros_q, -eye]),
            sparse.hstack([sparse.csr_matrix((1, n)), sparse.csr_matrix((1, ny)), sparse.csr_matrix(np.ones((1, n)))]),
            sparse.hstack([sparse.csr_matrix(np.ones((1, n))), sparse.csr_matrix((1, ny)), sparse.csr_matrix((1, n))]),
        ],
        format="csr",
    )
    flat = P.ravel()
    b_ub = np.concatenate([np.zeros(n), flat, -flat, [radius], [1.0]])
    a_eq = sparse.hstack([sparse.csr_matrix((1, n)), sparse.csr_matrix(np.ones((1, ny))), sparse.csr_matrix((1, n))], format="csr")
    res = optimize.linprog(
        np.zeros(2 * n + ny), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs"
    )
    if res.status not in (0, 2):
        logger.warning(f"Smoothing LP returned status {res.status} ({res.message}); treating as infeasible")
    return res.status == 0


def smooth_min_entropy_classical(P_xy, eps: float) -> EntropyReport:
    """H_min^eps(X|Y) over the trace-norm ball of radius eps, by bisection on lambda."""
    P = _as_joint(P_xy)
    if eps < 0:
        raise ValidationError(f"Smoothing radius must be nonnegative, got {eps}")
    base, sigma = _classical_min_entropy(P)
    meta = _radius_metadata(eps)
    if eps == 0:
        return EntropyReport(base, EntropyMethod.CLOSED_FORM, 0.0, {**meta, "lambda": base, "sigma_B": sigma.tolist()})
    if eps >= 1:
        # the zero operator is inside the ball
        return EntropyReport(np.inf, EntropyMethod.CLOSED_FORM, 0.0, {**meta, "zero_in_ball": True})
    lo = base
    hi = math.log2(P.shape[0]) - math.log2(1 - eps) + BISECTION_GAP
    steps = 0
    while hi - lo > BISECTION_GAP:
        mid = (lo + hi) / 2
        if _min_entropy_feasible(P, eps, mid):
            lo = mid
        else:
            hi = mid
        steps += 1
    return EntropyReport(lo, EntropyMethod.BISECTION_LP, hi - lo, {**meta, "lambda": lo, "bisection_steps": steps})


def _max_entropy_objective(Pt: np.ndarray) -> float:
    return float((np.sqrt(np.clip(Pt, 0.0, None)).sum(axis=0) ** 2).sum())


def _project_capped_box(z: np.ndarray, cap: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {0 <= r <= cap, sum r <= budget}."""
    r = np.clip(z, 0.0, cap)
    if r.sum() <= budget:
        return r
    excess = lambda tau: float(np.clip(z - tau, 0.0, cap).sum()) - budget
    tau = optimize.brentq(excess, 0.0, float(z.max()), xtol=1e-15)
    return np.clip(z - tau, 0.0, cap)


def _max_entropy_descent(P: np.ndarray, radius: float, start: np.ndarray, max_iter: int = 500) -> Tuple[np.ndarray, float, float]:
    removal = start.copy()
    value = _max_entropy_objective(P - removal)
    step, improvement = radius, 0.0
    for _ in range(max_iter):
        Pt = np.clip(P - removal, 0.0, None)
        cols = np.sqrt(Pt).sum(axis=0, keepdims=True)
        grad = np.where(Pt > EIGEN_CUTOFF, cols / np.sqrt(np.maximum(Pt, EIGEN_CUTOFF)), 0.0)
        grad = grad / max(float(np.abs(grad).max()), 1e-300)
        while step > 1e-12:
            candidate = _project_capped_box(removal + step * grad, P, radius)
            new_value = _max_entropy_objective(P - candidate)
            if new_value < value - 1e-15:
                improvement = value - new_value
                removal, value = candidate, new_value
                step = min(step * 2, radius)
                break
            step /= 2
        else:
            improvement = 0.0
            break
    return removal, value, improvement


def _max_entropy_vertices(P: np.ndarray, radius: float) -> float:
    flat = P.ravel()
    atoms = [i for i in range(flat.size) if flat[i] > 0]
    best = _max_entropy_objective(P)
    for k in range(len(atoms) + 1):
        for full in itertools.combinations(atoms, k):
            left = radius - float(flat[list(full)].sum())
            if left < 0:
                continue
            base = flat.copy()
            base[list(full)] = 0.0
            best = min(best, _max_entropy_objective(base.reshape(P.shape)))
            for j in atoms:
                if j in full or flat[j] <= left:
                    continue
                trial = base.copy()
                trial[j] -= left
                best = min(best, _max_entropy_objective(trial.reshape(P.shape)))
    return best


def smooth_max_entropy_classical(P_xy, eps: float) -> EntropyReport:
    """H_max^eps(X|Y) over the trace-norm ball of radius eps.

    The objective is concave in P', so its minimum sits at a vertex of the
    ball. Mass is only ever removed. Small supports are settled by vertex
    enumeration; larger ones by projected descent from several starts.
    """
    P = _as_joint(P_xy)
    if eps < 0:
        raise ValidationError(f"Smoothing radius must be nonnegative, got {eps}")
    meta = _radius_metadata(eps)
    base, _ = _classical_max_entropy(P)
    if eps == 0:
        return EntropyReport(base, EntropyMethod.CLOSED_FORM, 0.0, meta)
    if eps >= 1:
        return EntropyReport(-np.inf, EntropyMethod.CLOSED_FORM, 0.0, {**meta, "zero_in_ball": True})

    starts = [np.zeros_like(P)]
    order = np.argsort(P, axis=None, kind="stable")
    greedy = np.zeros(P.size)
    left = eps
    for i in order:
        take = min(left, P.ravel()[i])
        greedy[i] = take
        left -= take
        if left <= 0:
            break
    starts.append(greedy.reshape(P.shape))
    starts.append(_project_capped_box(np.full(P.shape, eps), P, eps))

    best_value, improvement = np.inf, 0.0
    for start in starts:
        _, value, imp = _max_entropy_descent(P, eps, start)
        if value < best_value:
            best_value, improvement = value, imp
    descent_bits = math.log2(best_value) if best_value > 0 else -np.inf
    meta["descent_value"] = descent_bits

    if int(np.count_nonzero(P)) <= VERTEX_ENUMERATION_ATOMS:
        exact = _max_entropy_vertices(P, eps)
        value = math.log2(exact) if exact > 0 else -np.inf
        meta["vertex_enumeration"] = True
        return EntropyReport(min(value, descent_bits), EntropyMethod.PROJECTED_DESCENT, 0.0, meta)
    residual = math.log2(1 + improvement / best_value) if best_value > 0 else 0.0
    return EntropyReport(descent_bits, EntropyMethod.PROJECTED_DESCENT, min(residual, DESCENT_GAP), meta)


def hypothesis_testing_entropy_classical(P_xy, sigma_y, eps: float) -> EntropyReport:
    """H_h^eps(X|Y)_{P|sigma} = -D_h^eps(P_XY || 1_X ⊗ sigma_Y) by Neyman-Pearson.

    At eps = 1 the optimal test is zero: D_h is the +inf sentinel and the
    entropy is -inf.
    """
    P = _as_joint(P_xy)
    sigma = np.asarray(sigma_y, dtype=float).ravel()
    if sigma.size != P.shape[1] or np.any(sigma < 0):
        raise DimensionMismatchError(f"Conditioning distribution of size {sigma.size} for |Y|={P.shape[1]}")
    if not 0 <= eps <= 1:
        raise ValidationError(f"Type-I error must lie in [0, 1], got {eps}")
    if eps == 1:
        return EntropyReport(-np.inf, EntropyMethod.NEYMAN_PEARSON, 0.0, {"relative_entropy": np.inf})

    cost_atoms = np.broadcast_to(sigma, P.shape).ravel()
    mass_atoms = P.ravel()
    support = np.flatnonzero(mass_atoms > 0)
    costs, masses = cost_atoms[support], mass_atoms[support]
    ratio = np.full(support.size, np.inf)
    priced = costs > 0
    ratio[priced] = masses[priced] / costs[priced]
    order = support[np.argsort(-ratio, kind="stable")]
    target = 1.0 - eps
    captured, cost = 0.0, 0.0
    for i in order:
        if captured >= target - 1e-15:
            break
        need = target - captured
        if mass_atoms[i] <= need:
            captured += mass_atoms[i]
            cost += cost_atoms[i]
        else:
            frac = need / mass_atoms[i]
            captured += need
            cost += frac * cost_atoms[i]
    if cost <= 0:
        return EntropyReport(-np.inf, EntropyMethod.NEYMAN_PEARSON, 0.0, {"relative_entropy": np.inf, "type_two_error": 0.0})
    value = math.log2(cost)
    return EntropyReport(value, EntropyMethod.NEYMAN_PEARSON, 0.0, {"relative_entropy": -value, "type_two_error": cost})


# ---------------------------------------------------------------------------
# Second-order expansions
# ---------------------------------------------------------------------------

def normal_cdf(x: float) -> float:
    return float(0.5 * erfc(-x / math.sqrt(2.0)))


def normal_quantile(p: float) -> float:
    """Phi^-1(p) by bisection on the erfc-based CDF."""
    if not 0 < p < 1:
        raise ValidationError(f"Quantile argument must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    return float(optimize.bisect(lambda x: normal_cdf(x) - p, -40.0, 40.0, xtol=1e-12, maxiter=200))


def second_order_band(n: int) -> float:
    """Width of the O(log n) term left out of the second-order expansions."""
    return math.log2(n) if n > 1 else 0.0


def _check_second_order(V: float, n: int, eps: float) -> float:
    if n < 1:
        raise ValidationError(f"Blocklength must be positive, got {n}")
    if not 0 < eps < 1:
        raise ValidationError(f"Smoothing parameter must lie in (0, 1), got {eps}")
    if V < -1e-12:
        raise ValidationError(f"Information variance must be nonnegative, got {V}")
    return max(V, 0.0)


def second_order_min_entropy(H: float, V: float, n: int, eps: float) -> float:
    """n H + sqrt(n V) Phi^-1(eps^2)."""
    V = _check_second_order(V, n, eps)
    if V == 0:
        return n * H
    return n * H + math.sqrt(n * V) * normal_quantile(eps * eps)


def second_order_hypothesis_testing(H: float, V: float, n: int, eps: float) -> float:
    """n H - sqrt(n V) Phi^-1(eps)."""
    V = _check_second_order(V, n, eps)
    if V == 0:
        return n * H
    return n * H - math.sqrt(n * V) * normal_quantile(eps)
