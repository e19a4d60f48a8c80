"""Maximization of rate objectives over the probability simplex.

Multistart projected gradient ascent with finite-difference gradients and step
halving. Objectives may return a single value or a vector of component values;
in the latter case the objective is their minimum and the ascent direction is
the average gradient of the components that attain it. Small alphabets are
cross-checked on a simplex grid. Results are the best point found, not a
certified optimum.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
from entropies import classical_conditional_entropy
from exceptions import ValidationError
from matrix_core import HERMITIAN_TOL
from model import CqBroadcastChannel, InputDistribution

logger = logging.getLogger(__name__)

# Components within this of the minimum are treated as active
TIE_TOL = 1e-9


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0 or np.any(p < -HERMITIAN_TOL) or abs(float(p.sum()) - 1.0) > HERMITIAN_TOL:
            raise ValidationError(f"Not a point of the simplex: {p.tolist()}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def dim(self) -> int:
        return self.probs.size

    def as_input(self) -> InputDistribution:
        return InputDistribution(self.probs)


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = config.OPTIMIZER_STARTS
    workers: int = config.OPTIMIZER_WORKERS
    seed: int = 0
    max_iter: int = 200
    fd_step: float = 1e-6
    initial_step: float = 0.1
    min_step: float = 1e-10
    grid_max_dim: int = 4
    grid_step: float = 1e-3
    refine_radius: float = 0.01


@dataclass
class OptimizationResult:
    argmax: SimplexPoint
    value: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)


def project_to_simplex(v: Sequence[float]) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float).ravel()
    if np.all(v >= 0) and abs(float(v.sum()) - 1.0) <= 1e-15:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u - (css - 1.0) / idx > 0)[0][-1])
    theta = (css[rho] - 1.0) / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def simplex_grid(dim: int, step: float, center: Optional[np.ndarray] = None, radius: Optional[float] = None) -> np.ndarray:
    """Grid points of the simplex with spacing `step`, optionally restricted to a box around `center`."""
    total = int(round(1.0 / step))
    if center is None:
        points = []
        for bars in itertools.combinations(range(total + dim - 1), dim - 1):
            edges = (-1,) + bars + (total + dim - 1,)
            points.append([edges[i + 1] - edges[i] - 1 for i in range(dim)])
        return np.asarray(points, dtype=float) / total
    lo = np.maximum(np.round((center - radius) * total), 0).astype(int)
    hi = np.minimum(np.round((center + radius) * total), total).astype(int)
    ranges = [range(lo[i], hi[i] + 1) for i in range(dim - 1)]
    points = []
    for head in itertools.product(*ranges):
        last = total - sum(head)
        if lo[-1] <= last <= hi[-1]:
            points.append(list(head) + [last])
    if not points:
        return np.empty((0, dim))
    return np.asarray(points, dtype=float) / total


def conditional_mutual_information(
    p: Union[SimplexPoint, InputDistribution, Sequence[float]], w: CqBroadcastChannel, b_set: Iterable[int]
) -> float:
    """I(X; Y_rest | Y_B) = H(X|Y_B) - H(X|Y_all) for a classical channel."""
    if not w.is_classical:
        raise ValidationError("Conditional mutual information is evaluated on classical channels")
    probs = p.probs if isinstance(p, (SimplexPoint, InputDistribution)) else np.asarray(p, dtype=float)
    everyone = range(1, w.num_users + 1)
    joint_b = probs[:, None] * w.marginal_transition(b_set)
    joint_all = probs[:, None] * w.marginal_transition(everyone)
    return classical_conditional_entropy(joint_b) - classical_conditional_entropy(joint_all)


class _Evaluator:
    def __init__(self, objective: Callable[[SimplexPoint], Union[float, Sequence[float]]]):
        self.objective = objective

    def __call__(self, probs: np.ndarray) -> Tuple[float, np.ndarray]:
        comps = np.atleast_1d(np.asarray(self.objective(SimplexPoint(probs)), dtype=float))
        return float(comps.min()), comps

    def gradient(self, probs: np.ndarray, comps: np.ndarray, h: float) -> np.ndarray:
        active = comps <= comps.min() + TIE_TOL
        grad = np.zeros(probs.size)
        for i in range(probs.size):
            bumped = probs.copy()
            bumped[i] += h
            q = project_to_simplex(bumped)
            # the projection can shorten the move on a face of the simplex
            moved = float(q[i] - probs[i])
            if moved <= 0.0:
                continue
            _, c = self(q)
            grad[i] = float(np.mean((c[active] - comps[active]) / moved))
        return grad - grad.mean()


def _ascend(evaluate: _Evaluator, start: np.ndarray, cfg: OptimizerConfig, index: int) -> Dict[str, Any]:
    p = project_to_simplex(start)
    value, comps = evaluate(p)
    initial = value
    step = cfg.initial_step
    reason = "iteration cap"
    iteration = 0
    for iteration in range(1, cfg.max_iter + 1):
        grad = evaluate.gradient(p, comps, cfg.fd_step)
        norm = float(np.linalg.norm(grad))
        if norm < 1e-12:
            reason = "stationary"
            break
        direction = grad / norm
        improved = False
        while step > cfg.min_step:
            q = project_to_simplex(p + step * direction)
            v, c = evaluate(q)
            if v > value + 1e-15:
                p, value, comps = q, v, c
                step = min(step * 2, 1.0)
                improved = True
                break
            step /= 2
        if not improved:
            reason = "step underflow"
            break
    return {"index": index, "probs": p, "value": value, "initial": initial, "iterations": iteration, "stop": reason}


def maximize(
    objective: Callable[[SimplexPoint], Union[float, Sequence[float]]],
    dim: int,
    cfg: Optional[OptimizerConfig] = None,
) -> OptimizationResult:
    """Best point found for max over the simplex of `objective` (min over components)."""
    cfg = cfg or OptimizerConfig()
    if dim < 1:
        raise ValidationError(f"Simplex dimension must be positive, got {dim}")
    evaluate = _Evaluator(objective)
    starts = [np.full(dim, 1.0 / dim)]
    for i in range(1, cfg.starts):
        starts.append(np.random.default_rng([cfg.seed, i]).dirichlet(np.ones(dim)))

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        traces = list(pool.map(lambda args: _ascend(evaluate, args[1], cfg, args[0]), enumerate(starts)))

    best = max(traces, key=lambda t: (t["value"], -t["index"]))
    best_probs, best_value = best["probs"], best["value"]
    diagnostics: Dict[str, Any] = {
        "label": "best found",
        "starts": [
            {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in t.items() if k != "probs"}
            for t in traces
        ],
        "non_improving_starts": sum(1 for t in traces if t["value"] <= t["initial"]),
    }

    if dim <= cfg.grid_max_dim and dim > 1:
        coarse_step = 0.05 if dim <= 3 else 0.1
        grid = simplex_grid(dim, coarse_step)
        values = [evaluate(g)[0] for g in grid]
        coarse_best = grid[int(np.argmax(values))]
        grid_best_value, grid_best = -np.inf, None
        for center in (coarse_best, best_probs):
            local = simplex_grid(dim, cfg.grid_step, center, cfg.refine_radius)
            for g in local:
                v = evaluate(g)[0]
                if v > grid_best_value:
                    grid_best_value, grid_best = v, g
        diagnostics["grid"] = {"step": cfg.grid_step, "value": float(grid_best_value), "coarse_points": len(grid)}
        if grid_best is not None and grid_best_value > best_value:
            logger.info(f"Grid refinement improved the ascent value by {grid_best_value - best_value:.3e}")
            best_probs, best_value = grid_best, grid_best_value
    elif dim == 1:
        best_probs, best_value = np.ones(1), evaluate(np.ones(1))[0]

    return OptimizationResult(SimplexPoint(best_probs), float(best_value), diagnostics)
