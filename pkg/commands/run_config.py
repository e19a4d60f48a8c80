"""RunConfig: everything one CLI invocation depends on."""
import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import config
from exceptions import ValidationError

COMMANDS = (
    "rate-oneshot",
    "rate-converse",
    "rate-second-order",
    "rate-asymptotic",
    "capacity",
    "simulate",
    "entropy",
    "lhl-check",
)

PATHS = ("general", "all-user", "hypothesis-testing")

# Axes a sweep may run along, per command
SWEEP_AXES = {
    "rate-second-order": ("n", "eps1"),
    "rate-oneshot": ("eps1",),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated command-line configuration.

    `n` is the blocklength of the second-order expansion for
    rate-second-order and the number of product-extension copies otherwise.
    """

    command: str
    channel: str
    access: Optional[str] = None
    eps1: float = 1e-3
    eps2: float = 1e-3
    delta: float = 10.0
    eta: Optional[float] = None
    n: int = 1
    seed: Optional[int] = None
    out: Optional[str] = None
    trials: int = config.MONTE_CARLO_TRIALS
    sweep: Optional[str] = None
    input_dist: Optional[Tuple[float, ...]] = None
    optimize: bool = False
    secret_size: int = 2
    grid_step: float = 0.1
    subset: Optional[Tuple[int, ...]] = None
    r: Optional[int] = None
    eps: Optional[float] = None
    u_bits: Optional[int] = None
    m: Optional[int] = None
    path: str = "general"
    hash_kind: str = "full_random_matrix"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"Unknown command '{self.command}' (choose from {', '.join(COMMANDS)})")
        if self.path not in PATHS:
            raise ValidationError(f"Unknown budget path '{self.path}' (choose from {', '.join(PATHS)})")
        if self.command == "simulate" and self.seed is None:
            raise ValidationError("simulate needs an explicit --seed")
        if self.n < 1:
            raise ValidationError(f"--n must be positive, got {self.n}")
        if self.trials < 1:
            raise ValidationError(f"--trials must be positive, got {self.trials}")
        if self.sweep is not None:
            if self.command not in SWEEP_AXES:
                raise ValidationError(f"{self.command} does not support --sweep")
            parse_sweep(self.sweep, SWEEP_AXES[self.command])

    @property
    def rng_seed(self) -> int:
        return 0 if self.seed is None else self.seed

    def as_dict(self) -> Dict[str, Any]:
        out = dataclasses.asdict(self)
        for key in ("input_dist", "subset"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out


def parse_sweep(spec: str, axes: Tuple[str, ...]) -> Tuple[str, List[float]]:
    """'n=100,1000,10000' or 'eps1=0.01,0.05' into (axis, ascending values)."""
    axis, sep, values = spec.partition("=")
    axis = axis.strip()
    if not sep or axis not in axes:
        raise ValidationError(f"Sweep '{spec}' must look like <axis>=v1,v2,... with axis in {', '.join(axes)}")
    try:
        points = [int(v) if axis == "n" else float(v) for v in values.split(",") if v.strip()]
    except ValueError as e:
        raise ValidationError(f"Sweep '{spec}': {e}") from e
    if not points:
        raise ValidationError(f"Sweep '{spec}' has no points")
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValidationError(f"Sweep '{spec}' must be strictly ascending")
    return axis, points
