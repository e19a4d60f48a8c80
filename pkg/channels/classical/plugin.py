"""Classical broadcast channel given by per-user transition matrices."""
from typing import Any, Dict, List

import numpy as np

from channel_base import ChannelFormatPlugin
from exceptions import DimensionMismatchError, ValidationError
from model import CqBroadcastChannel


class Plugin(ChannelFormatPlugin):
    """`per_user[l]` is W_l(y|x) with one row per input.

    Without `joint` the users' outputs are conditionally independent given x.
    A `joint` table has one row per input over the product output alphabet
    (user 1 most significant); its per-user marginals must equal `per_user`.
    """

    def __init__(self):
        super().__init__("classical")

    def _stochastic(self, rows, label: str) -> np.ndarray:
        m = np.asarray(rows, dtype=float)
        if m.ndim != 2:
            raise ValidationError(f"{label} must be a rectangular matrix")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > self.tolerance)
        if bad.size:
            raise ValidationError(f"{label}[{bad[0]}] sums to {sums[bad[0]]!r}, not 1")
        return m / sums[:, None]

    def parse(self, document: Dict[str, Any]) -> CqBroadcastChannel:
        outputs = document["outputs"]
        name = document.get("name", "")
        per_user: List[np.ndarray] = [
            self._stochastic(m, f"outputs.per_user[{l}]") for l, m in enumerate(outputs["per_user"])
        ]
        inputs = {m.shape[0] for m in per_user}
        if len(inputs) != 1:
            raise DimensionMismatchError(f"per_user matrices disagree on |X|: {sorted(inputs)}")
        if "joint" not in outputs:
            return CqBroadcastChannel.independent(per_user, name=name)

        dims = tuple(m.shape[1] for m in per_user)
        joint = self._stochastic(outputs["joint"], "outputs.joint")
        if joint.shape != (per_user[0].shape[0], int(np.prod(dims))):
            raise DimensionMismatchError(
                f"outputs.joint has shape {joint.shape}, expected ({per_user[0].shape[0]}, {int(np.prod(dims))})"
            )
        tensor = joint.reshape((joint.shape[0],) + dims)
        for l, m in enumerate(per_user):
            others = tuple(axis for axis in range(1, len(dims) + 1) if axis != l + 1)
            marginal = tensor.sum(axis=others) if others else tensor
            if np.max(np.abs(marginal - m)) > self.tolerance:
                raise ValidationError(f"outputs.joint marginal of user {l + 1} differs from outputs.per_user[{l}]")
        return CqBroadcastChannel.from_transition(tensor, name=name)
