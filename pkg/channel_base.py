"""Base class for channel-file format plugins."""
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from jsonschema import Draft202012Validator

import config
from model import CqBroadcastChannel

logger = logging.getLogger(__name__)


def error_path(error, prefix: str = "") -> str:
    """JSON path of a jsonschema error, e.g. outputs.per_user[0][1]."""
    path = prefix
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<root>"


class ChannelFormatPlugin(ABC):
    """One `kind` of channel file.

    Each plugin lives in `channels/<kind>/` next to a `config.json` (display
    name and numeric tolerance) and a `schema.json` for the `outputs` section.
    """

    def __init__(self, kind: str, channels_dir: Optional[Path] = None):
        self.kind = kind
        self.plugin_dir = (channels_dir or config.CHANNELS_DIR) / kind
        self.config = self._load_json("config.json")
        self.schema = self._load_json("schema.json")
        self._validator = Draft202012Validator(self.schema) if self.schema else None

    def _load_json(self, name: str) -> Dict[str, Any]:
        path = self.plugin_dir / name
        if path.exists():
            with open(path, "r") as f:
                return json.load(f)
        return {}

    @property
    def nice_name(self) -> str:
        return self.config.get("nice_name", self.kind)

    @property
    def tolerance(self) -> float:
        """Allowed deviation of row sums and marginals in files of this kind."""
        return float(self.config.get("tolerance", 1e-9))

    def validate_document(self, outputs: Any) -> Tuple[bool, Optional[str]]:
        """
        Validate the `outputs` section against the plugin schema.

        Returns:
            Tuple of (is_valid, error_message) where the message names the
            JSON path of the first failing field.
        """
        if self._validator is None:
            return True, None
        errors = sorted(self._validator.iter_errors(outputs), key=lambda e: list(e.absolute_path))
        if not errors:
            return True, None
        first = errors[0]
        return False, f"{error_path(first, 'outputs')}: {first.message}"

    @abstractmethod
    def parse(self, document: Dict[str, Any]) -> CqBroadcastChannel:
        """
        Build the channel from a validated channel document.

        Args:
            document: The whole channel file; `outputs` has passed validate_document.

        Returns:
            The broadcast channel described by the file.
        """
        pass

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "nice_name": self.nice_name, "tolerance": self.tolerance}
