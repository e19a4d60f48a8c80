"""Binary input, user l sees X xor N_l with N_l ~ Bernoulli(flips[l])."""
from typing import Any, Dict

from channel_base import ChannelFormatPlugin
from exceptions import DimensionMismatchError
from model import CqBroadcastChannel


class Plugin(ChannelFormatPlugin):
    def __init__(self):
        super().__init__("flip")

    def parse(self, document: Dict[str, Any]) -> CqBroadcastChannel:
        if document["input_alphabet"] != 2:
            raise DimensionMismatchError(f"Flip channels have a binary input, file declares {document['input_alphabet']}")
        return CqBroadcastChannel.binary_flip(document["outputs"]["flips"], name=document.get("name", ""))
