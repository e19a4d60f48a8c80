"""Classical-quantum broadcast channel given by one density matrix per input."""
from typing import Any, Dict

import numpy as np

from channel_base import ChannelFormatPlugin
from exceptions import DimensionMismatchError
from model import CqBroadcastChannel


class Plugin(ChannelFormatPlugin):
    """`states[x]` is rho^x on the tensor product of the users' spaces, entries as [re, im]."""

    def __init__(self):
        super().__init__("quantum")

    def parse(self, document: Dict[str, Any]) -> CqBroadcastChannel:
        outputs = document["outputs"]
        dims = [int(d) for d in outputs["user_dims"]]
        total = int(np.prod(dims))
        states = []
        for x, rows in enumerate(outputs["states"]):
            pairs = np.asarray(rows, dtype=float)
            if pairs.shape != (total, total, 2):
                raise DimensionMismatchError(
                    f"outputs.states[{x}] has shape {pairs.shape[:2]}, expected ({total}, {total})"
                )
            rho = pairs[..., 0] + 1j * pairs[..., 1]
            trace = float(np.real(np.trace(rho)))
            if abs(trace - 1.0) <= self.tolerance:
                rho = rho / trace
            states.append(rho)
        return CqBroadcastChannel.from_states(states, dims, name=document.get("name", ""))
