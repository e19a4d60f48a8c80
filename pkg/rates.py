"""Rate expressions for secret sharing over cq broadcast channels.

Each evaluator takes a channel, an access structure and an input distribution
and returns a RateReport whose `rate` equals term_b - term_a - sum(penalties).
Smoothed entropies are computed exactly for classical channels (trace-norm
balls converted in the direction that keeps the bound valid). Quantum channels
use the unsmoothed values and carry the `quantum_eps0_plugin` flag.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from entropies import (
    conditional_entropy,
    conditional_info_variance,
    hypothesis_testing_entropy_classical,
    inner_trace_radius,
    max_entropy_zero,
    min_entropy_zero,
    outer_trace_radius,
    second_order_band,
    second_order_hypothesis_testing,
    second_order_min_entropy,
    smooth_max_entropy_classical,
    smooth_min_entropy_classical,
)
from exceptions import AccessStructureError, BudgetError, DimensionMismatchError, SizeLimitError, ValidationError
from model import (
    AccessStructure,
    CqBroadcastChannel,
    CqState,
    InputDistribution,
    UserSubset,
    build_cq_state,
    subset_label,
)
from optimizer import OptimizerConfig, SimplexPoint, conditional_mutual_information, maximize, simplex_grid

logger = logging.getLogger(__name__)

# |rate - (term_b - term_a - penalties)| allowed in a RateReport
REPORT_TOL = 1e-9

# Largest number of P_{X|S} grid combinations the converse search visits
CONVERSE_GRID_LIMIT = 10_000

QUANTUM_EPS0_PLUGIN = "quantum_eps0_plugin"
SMOOTHING_SKIPPED = "smoothing_skipped"


class BudgetPath(str, Enum):
    GENERAL = "general"
    ALL_USERS = "all_users"
    HYPOTHESIS_TESTING = "hypothesis_testing"
    SECOND_ORDER = "second_order"


@dataclass(frozen=True)
class EpsilonBudget:
    """Error-parameter bookkeeping for one rate expression.

    Args:
        eps1: Smoothing of the authorized-set max/hypothesis-testing entropies.
        eps2: Hashing slack of the source code (zero on the second-order path).
        delta: Privacy-amplification slack in bits.
        num_authorized: |A|, the number of authorized sets.
        num_unauthorized: |B|, the number of unauthorized sets (including the empty set).
        path: Which expression the budget belongs to.
        eta: Hypothesis-testing split, required on that path only.
    """

    eps1: float
    eps2: float
    delta: float
    num_authorized: int
    num_unauthorized: int
    path: BudgetPath = BudgetPath.GENERAL
    eta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "path", BudgetPath(self.path))
        if not 0 < self.eps1 < 1:
            raise BudgetError(f"eps1 must lie in (0, 1), got {self.eps1}")
        if self.delta <= 0:
            raise BudgetError(f"delta must be positive, got {self.delta}")
        if self.num_authorized < 1 or self.num_unauthorized < 1:
            raise BudgetError("Budget needs at least one authorized and one unauthorized set")
        if self.path in (BudgetPath.GENERAL, BudgetPath.ALL_USERS):
            if not 0 < self.eps2 < 1:
                raise BudgetError(f"eps2 must lie in (0, 1), got {self.eps2}")
        elif self.eps2 != 0:
            raise BudgetError(f"eps2 is not part of the {self.path.value} budget")
        if self.path is BudgetPath.HYPOTHESIS_TESTING:
            if self.eta is None or not 0 < self.eta <= self.eps1:
                raise BudgetError(f"eta must lie in (0, eps1], got {self.eta}")
        elif self.eta is not None:
            raise BudgetError(f"eta is not part of the {self.path.value} budget")
        if self.path is not BudgetPath.SECOND_ORDER:
            if not 0 < self.eps_prime < 1:
                raise BudgetError(f"Derived eps' = {self.eps_prime:.6g} outside (0, 1)")
            if not 0 < self.eps < 1:
                raise BudgetError(f"Derived eps = {self.eps:.6g} outside (0, 1); the code guarantee would be vacuous")

    @classmethod
    def for_general(cls, eps1: float, eps2: float, delta: float, access: AccessStructure) -> "EpsilonBudget":
        return cls(eps1, eps2, delta, len(access.authorized_sets()), len(access.unauthorized_sets()))

    @classmethod
    def for_all_users(cls, eps1: float, eps2: float, delta: float, num_users: int) -> "EpsilonBudget":
        return cls(eps1, eps2, delta, 1, 2 ** num_users - 1, BudgetPath.ALL_USERS)

    @classmethod
    def for_hypothesis_testing(cls, eps1: float, eta: float, delta: float, access: AccessStructure) -> "EpsilonBudget":
        return cls(
            eps1, 0.0, delta, len(access.authorized_sets()), len(access.unauthorized_sets()),
            BudgetPath.HYPOTHESIS_TESTING, eta,
        )

    @classmethod
    def for_second_order(cls, eps1: float, delta: float, access: AccessStructure) -> "EpsilonBudget":
        return cls(
            eps1, 0.0, delta, len(access.authorized_sets()), len(access.unauthorized_sets()), BudgetPath.SECOND_ORDER
        )

    @property
    def eps_prime(self) -> float:
        if self.path is BudgetPath.ALL_USERS:
            return self.eps1 + self.eps2
        return self.eps1 * (self.num_authorized + 1) + self.eps2

    @property
    def eps(self) -> float:
        ep = self.eps_prime
        leak = self.num_unauthorized * (4 * ep + 2 ** (-self.delta / 2))
        if self.path is BudgetPath.ALL_USERS:
            return 3 * ep + 2 ** (-self.delta / 2 - 1) + leak
        total = self.num_authorized * (3 * ep + 2 ** (-self.delta / 2 - 1)) + leak
        if self.path is BudgetPath.HYPOTHESIS_TESTING:
            return 4 * total
        return total

    def check_access(self, access: AccessStructure) -> None:
        if self.path is BudgetPath.ALL_USERS:
            expected = (1, 2 ** access.num_users - 1)
        else:
            expected = (len(access.authorized_sets()), len(access.unauthorized_sets()))
        if (self.num_authorized, self.num_unauthorized) != expected:
            raise BudgetError(
                f"Budget was built for |A|={self.num_authorized}, |B|={self.num_unauthorized}; "
                f"access structure has |A|={expected[0]}, |B|={expected[1]}"
            )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path.value,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "delta": self.delta,
            "eta": self.eta,
            "eps_prime": self.eps_prime,
            "eps": self.eps,
            "num_authorized": self.num_authorized,
            "num_unauthorized": self.num_unauthorized,
        }


@dataclass(frozen=True)
class RateReport:
    """One evaluated rate expression with its breakdown."""

    rate: float
    term_b: float
    term_a: float
    penalties: Dict[str, float]
    kind: str
    input_distribution: Optional[Tuple[float, ...]] = None
    budget: Optional[EpsilonBudget] = None
    per_set_b: Dict[str, float] = field(default_factory=dict)
    per_set_a: Dict[str, float] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()
    band: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        expected = self.term_b - self.term_a - sum(self.penalties.values())
        if math.isfinite(expected) and abs(self.rate - expected) > REPORT_TOL:
            raise ValidationError(f"Rate {self.rate} does not match its breakdown {expected}")

    @property
    def minimizing_set_b(self) -> Optional[str]:
        return min(self.per_set_b, key=self.per_set_b.get) if self.per_set_b else None

    @property
    def maximizing_set_a(self) -> Optional[str]:
        return max(self.per_set_a, key=self.per_set_a.get) if self.per_set_a else None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "rate": _json_float(self.rate),
            "term_b": _json_float(self.term_b),
            "term_a": _json_float(self.term_a),
            "penalties": {k: _json_float(v) for k, v in self.penalties.items()},
            "input_distribution": list(self.input_distribution) if self.input_distribution is not None else None,
            "budget": self.budget.as_dict() if self.budget else None,
            "per_set_b": {k: _json_float(v) for k, v in self.per_set_b.items()},
            "per_set_a": {k: _json_float(v) for k, v in self.per_set_a.items()},
            "minimizing_set_b": self.minimizing_set_b,
            "maximizing_set_a": self.maximizing_set_a,
            "flags": sorted(self.flags),
            "band": self.band,
            "details": self.details,
        }


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _probs(p: InputDistribution) -> Tuple[float, ...]:
    return tuple(float(v) for v in p.probs)


class EntropyTerms:
    """Per-subset smoothed entropies of X given Y_D, with substitution flags."""

    def __init__(self, w: CqBroadcastChannel, p: InputDistribution):
        if p.size != w.input_alphabet_size:
            raise DimensionMismatchError(f"Input distribution of size {p.size} for |X|={w.input_alphabet_size}")
        self.w = w
        self.p = p
        self.flags: set = set()
        self.radii: Dict[str, float] = {}
        self._states: Dict[UserSubset, CqState] = {}

    def state(self, subset: UserSubset) -> CqState:
        if subset not in self._states:
            self._states[subset] = build_cq_state(self.p, self.w, subset)
        return self._states[subset]

    def _smoothable(self, state: CqState, radius: float) -> bool:
        if radius == 0:
            return False
        if not state.is_classical:
            self.flags.add(QUANTUM_EPS0_PLUGIN)
            return False
        if state.input_size * state.side_dim > config.SMOOTHING_ATOM_LIMIT:
            self.flags.add(SMOOTHING_SKIPPED)
            logger.warning(
                f"Joint of {state.input_size * state.side_dim} atoms exceeds {config.SMOOTHING_ATOM_LIMIT}; "
                "using the unsmoothed entropy"
            )
            return False
        return True

    def min_entropy(self, subset: UserSubset, radius: float) -> float:
        self.radii["min_entropy_trace_radius"] = radius
        state = self.state(subset)
        if self._smoothable(state, radius):
            return smooth_min_entropy_classical(state.joint_table(), radius).value
        return min_entropy_zero(state).value

    def max_entropy(self, subset: UserSubset, radius: float) -> float:
        self.radii["max_entropy_trace_radius"] = radius
        state = self.state(subset)
        if self._smoothable(state, radius):
            return smooth_max_entropy_classical(state.joint_table(), radius).value
        return max_entropy_zero(state).value

    def hypothesis_testing(self, subset: UserSubset, eps: float) -> float:
        state = self.state(subset)
        if not state.is_classical:
            raise ValidationError("Hypothesis-testing entropies are evaluated on classical channels only")
        joint = state.joint_table()
        return hypothesis_testing_entropy_classical(joint, joint.sum(axis=0), eps).value


def _split_terms(
    unauthorized: Sequence[UserSubset],
    authorized: Sequence[UserSubset],
    term_b_of: Callable[[UserSubset], float],
    term_a_of: Callable[[UserSubset], float],
) -> Tuple[float, float, Dict[str, float], Dict[str, float]]:
    per_b = {subset_label(s): term_b_of(s) for s in unauthorized}
    per_a = {subset_label(s): term_a_of(s) for s in authorized}
    return min(per_b.values()), max(per_a.values()), per_b, per_a


def _assemble(kind, term_b, term_a, penalties, p, budget=None, per_b=None, per_a=None, flags=(), band=0.0, details=None):
    if math.isinf(term_b) or math.isinf(term_a):
        rate = term_b - term_a
    else:
        rate = term_b - term_a - sum(penalties.values())
    report = RateReport(
        rate=rate,
        term_b=term_b,
        term_a=term_a,
        penalties=penalties,
        kind=kind,
        input_distribution=_probs(p) if p is not None else None,
        budget=budget,
        per_set_b=per_b or {},
        per_set_a=per_a or {},
        flags=tuple(sorted(flags)),
        band=band,
        details=details or {},
    )
    if QUANTUM_EPS0_PLUGIN in report.flags:
        logger.warning(f"{kind}: quantum channel evaluated with unsmoothed entropies")
    return report


def one_shot_achievable_rate(
    w: CqBroadcastChannel, a: AccessStructure, p: InputDistribution, b: EpsilonBudget
) -> RateReport:
    """Achievable one-shot rate for a general access structure."""
    if b.path is not BudgetPath.GENERAL:
        raise BudgetError(f"one_shot_achievable_rate needs a general budget, got {b.path.value}")
    b.check_access(a)
    terms = EntropyTerms(w, p)
    r_min, r_max = inner_trace_radius(b.eps_prime), inner_trace_radius(b.eps1)
    term_b, term_a, per_b, per_a = _split_terms(
        a.unauthorized_sets(), a.authorized_sets(),
        lambda s: terms.min_entropy(s, r_min),
        lambda s: terms.max_entropy(s, r_max),
    )
    penalties = {
        "delta": b.delta,
        "two_log_inv_eps2": 2 * math.log2(1 / b.eps2),
        "two_log_authorized": 2 * math.log2(b.num_authorized + 1),
        "constant": 6.0,
    }
    return _assemble(
        "one_shot", term_b, term_a, penalties, p, b, per_b, per_a, terms.flags,
        details={"trace_radii": terms.radii},
    )


def all_user_one_shot_rate(
    w: CqBroadcastChannel, p: InputDistribution, b: EpsilonBudget, a: Optional[AccessStructure] = None
) -> RateReport:
    """One-shot rate when only the full set of users is authorized."""
    if a is None:
        a = AccessStructure.all_users(w.num_users)
    elif not a.is_all_users or a.num_users != w.num_users:
        raise AccessStructureError("all_user_one_shot_rate needs the access structure {[1:L]}")
    if b.path is not BudgetPath.ALL_USERS:
        raise BudgetError(f"all_user_one_shot_rate needs an all-user budget, got {b.path.value}")
    b.check_access(a)
    terms = EntropyTerms(w, p)
    r_min, r_max = inner_trace_radius(b.eps_prime), inner_trace_radius(b.eps1)
    term_b, term_a, per_b, per_a = _split_terms(
        a.unauthorized_sets(), a.authorized_sets(),
        lambda s: terms.min_entropy(s, r_min),
        lambda s: terms.max_entropy(s, r_max),
    )
    penalties = {"delta": b.delta, "two_log_inv_eps2": 2 * math.log2(1 / b.eps2), "constant": 6.0}
    return _assemble(
        "all_user_one_shot", term_b, term_a, penalties, p, b, per_b, per_a, terms.flags,
        details={"trace_radii": terms.radii},
    )


def hypothesis_testing_rate(
    w: CqBroadcastChannel, a: AccessStructure, p: InputDistribution, b: EpsilonBudget
) -> RateReport:
    """Achievable rate with hypothesis-testing entropies on the authorized side."""
    if not w.is_classical:
        raise ValidationError("hypothesis_testing_rate is evaluated on classical channels only")
    if b.path is not BudgetPath.HYPOTHESIS_TESTING:
        raise BudgetError(f"hypothesis_testing_rate needs a hypothesis-testing budget, got {b.path.value}")
    b.check_access(a)
    terms = EntropyTerms(w, p)
    r_min = inner_trace_radius(b.eps_prime)
    term_b, term_a, per_b, per_a = _split_terms(
        a.unauthorized_sets(), a.authorized_sets(),
        lambda s: terms.min_entropy(s, r_min),
        lambda s: terms.hypothesis_testing(s, b.eps1 - b.eta),
    )
    penalties = {
        "delta": b.delta,
        "log_eps1_over_eta_sq": math.log2(b.eps1 / b.eta ** 2),
        "constant": 5.0,
    }
    return _assemble(
        "hypothesis_testing", term_b, term_a, penalties, p, b, per_b, per_a, terms.flags,
        details={"trace_radii": terms.radii},
    )


def _secret_states(w: CqBroadcastChannel, p_sx: np.ndarray, subset: UserSubset) -> CqState:
    p_s = p_sx.sum(axis=1)
    cond = np.zeros_like(p_sx)
    seen = p_s > 0
    cond[seen] = p_sx[seen] / p_s[seen, None]
    cond[~seen] = 1.0 / p_sx.shape[1]
    ps = InputDistribution(p_s)
    if w.is_classical:
        return CqState.classical(ps, cond @ w.marginal_transition(subset), subset)
    blocks = w.conditional_states(subset)
    return CqState.quantum(ps, [sum(c * rho for c, rho in zip(row, blocks)) for row in cond], subset)


def converse_breakdown(w: CqBroadcastChannel, a: AccessStructure, p_sx, eps: float) -> RateReport:
    """Upper bound on the rate of an eps-good code, evaluated at one joint P_SX."""
    p_sx = np.asarray(p_sx, dtype=float)
    if p_sx.ndim != 2 or p_sx.shape[1] != w.input_alphabet_size:
        raise DimensionMismatchError(f"P_SX of shape {p_sx.shape} for |X|={w.input_alphabet_size}")
    if np.any(p_sx < 0) or abs(float(p_sx.sum()) - 1.0) > 1e-9:
        raise ValidationError("P_SX must be a joint probability table")
    if not 0 < eps < 0.5:
        raise ValidationError(f"Converse needs 0 < eps < 1/2, got {eps}")
    flags: set = set()
    states: Dict[UserSubset, CqState] = {}

    def state(s):
        if s not in states:
            states[s] = _secret_states(w, p_sx, s)
        return states[s]

    r_min, r_max = outer_trace_radius(math.sqrt(eps)), outer_trace_radius(math.sqrt(2 * eps))

    def smoothed(s, radius, smooth_fn, zero_fn):
        st = state(s)
        if not st.is_classical:
            flags.add(QUANTUM_EPS0_PLUGIN)
            return zero_fn(st).value
        if st.input_size * st.side_dim > config.SMOOTHING_ATOM_LIMIT:
            flags.add(SMOOTHING_SKIPPED)
            return zero_fn(st).value
        return smooth_fn(st.joint_table(), radius).value

    term_b, term_a, per_b, per_a = _split_terms(
        a.unauthorized_sets(), a.authorized_sets(),
        lambda s: smoothed(s, r_min, smooth_min_entropy_classical, min_entropy_zero),
        lambda s: smoothed(s, r_max, smooth_max_entropy_classical, max_entropy_zero),
    )
    return _assemble(
        "converse", term_b, term_a, {}, None, None, per_b, per_a, flags,
        details={"eps": eps, "secret_alphabet": p_sx.shape[0], "trace_radii": {"min": r_min, "max": r_max}},
    )


def one_shot_converse(w: CqBroadcastChannel, a: AccessStructure, p_sx, eps: float) -> float:
    """min_B H_min^{sqrt(eps)}(S|Y_B) - max_A H_max^{sqrt(2 eps)}(S|Y_A) at the given P_SX."""
    return converse_breakdown(w, a, p_sx, eps).rate


def converse_grid_search(
    w: CqBroadcastChannel, a: AccessStructure, secret_size: int, eps: float, step: float = 0.1
) -> RateReport:
    """Best converse value over S uniform and P_{X|S} on a simplex grid.

    The result is a lower bound on the maximum over all joints.
    """
    if secret_size < 1:
        raise ValidationError(f"Secret alphabet must be nonempty, got {secret_size}")
    grid = simplex_grid(w.input_alphabet_size, step)
    combos = len(grid) ** secret_size
    if combos > CONVERSE_GRID_LIMIT:
        raise SizeLimitError(
            f"Converse grid has {combos} points (limit {CONVERSE_GRID_LIMIT}); use a coarser step or fewer secrets"
        )
    best: Optional[RateReport] = None
    best_joint = None
    for rows in itertools.product(range(len(grid)), repeat=secret_size):
        p_sx = grid[list(rows)] / secret_size
        report = converse_breakdown(w, a, p_sx, eps)
        if best is None or report.rate > best.rate:
            best, best_joint = report, p_sx
    logger.info(f"Converse grid search over {combos} joints: best bound {best.rate:.6g} bits")
    details = dict(best.details)
    details.update({
        "grid_points": combos,
        "grid_step": step,
        "best_joint": best_joint.tolist(),
        "label": "best found; lower bound on the converse maximum",
    })
    return RateReport(
        rate=best.rate, term_b=best.term_b, term_a=best.term_a, penalties={}, kind="converse_grid",
        per_set_b=best.per_set_b, per_set_a=best.per_set_a, flags=best.flags, details=details,
    )


def _conditional_moments(terms: EntropyTerms, subset: UserSubset) -> Tuple[float, float]:
    state = terms.state(subset)
    return conditional_entropy(state), conditional_info_variance(state)


def second_order_rate(
    w: CqBroadcastChannel,
    a: AccessStructure,
    p: InputDistribution,
    n: int,
    eps1: float,
    delta: float = 1.0,
    eps_prime: Optional[float] = None,
) -> RateReport:
    """Second-order rate per channel use with its log(n)/n band.

    Args:
        eps_prime: Overrides eps1 * (|A| + 1) as the unauthorized-side parameter.
    """
    budget = EpsilonBudget.for_second_order(eps1, delta, a)
    ep = budget.eps_prime if eps_prime is None else eps_prime
    if not 0 < ep < 1:
        raise BudgetError(f"Second-order eps' = {ep:.6g} outside (0, 1)")
    terms = EntropyTerms(w, p)

    def lower(s):
        H, V = _conditional_moments(terms, s)
        return second_order_min_entropy(H, V, n, ep) / n

    def upper(s):
        H, V = _conditional_moments(terms, s)
        return second_order_hypothesis_testing(H, V, n, eps1) / n

    term_b, term_a, per_b, per_a = _split_terms(a.unauthorized_sets(), a.authorized_sets(), lower, upper)
    vacuous = budget.eps >= 1
    return _assemble(
        "second_order", term_b, term_a, {}, p, budget, per_b, per_a,
        band=second_order_band(n) / n,
        details={"n": n, "eps_prime": ep, "eps_vacuous": vacuous},
    )


def asymptotic_rate(w: CqBroadcastChannel, a: AccessStructure, p: InputDistribution) -> RateReport:
    """min_B H(X|Y_B) - max_A H(X|Y_A)."""
    terms = EntropyTerms(w, p)
    term_b, term_a, per_b, per_a = _split_terms(
        a.unauthorized_sets(), a.authorized_sets(),
        lambda s: conditional_entropy(terms.state(s)),
        lambda s: conditional_entropy(terms.state(s)),
    )
    return _assemble("asymptotic", term_b, term_a, {}, p, None, per_b, per_a)


def classical_capacity(
    w: CqBroadcastChannel, a: Optional[AccessStructure] = None, cfg: Optional[OptimizerConfig] = None
) -> RateReport:
    """max over P_X of min_B I(X; Y_rest | Y_B) for the all-user structure."""
    if not w.is_classical:
        raise ValidationError("classical_capacity needs a classical channel")
    if a is None:
        a = AccessStructure.all_users(w.num_users)
    elif not a.is_all_users or a.num_users != w.num_users:
        raise AccessStructureError("classical_capacity needs the access structure {[1:L]}")
    unauthorized = a.unauthorized_sets()

    def objective(point: SimplexPoint) -> List[float]:
        return [conditional_mutual_information(point, w, s) for s in unauthorized]

    result = maximize(objective, w.input_alphabet_size, cfg)
    p = result.argmax.as_input()
    per_b = {subset_label(s): conditional_mutual_information(p, w, s) for s in unauthorized}
    value = min(per_b.values())
    logger.info(f"Capacity search finished at {value:.6g} bits with P_X={np.round(p.probs, 4).tolist()}")
    return _assemble(
        "capacity", value, 0.0, {}, p, None, per_b, {}, details={"optimizer": result.diagnostics},
    )


def maximize_rate(
    evaluate: Callable[[InputDistribution], RateReport],
    w: CqBroadcastChannel,
    cfg: Optional[OptimizerConfig] = None,
) -> RateReport:
    """Outer maximization of a per-input-distribution rate evaluator."""
    result = maximize(lambda point: evaluate(point.as_input()).rate, w.input_alphabet_size, cfg)
    report = evaluate(result.argmax.as_input())
    details = dict(report.details)
    details["optimizer"] = result.diagnostics
    return RateReport(
        rate=report.rate, term_b=report.term_b, term_a=report.term_a, penalties=report.penalties,
        kind=report.kind, input_distribution=report.input_distribution, budget=report.budget,
        per_set_b=report.per_set_b, per_set_a=report.per_set_a, flags=report.flags, band=report.band,
        details=details,
    )
