"""Channel-format plugin loader and file readers."""
import importlib.util
import json
import logging
import sys
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from jsonschema import Draft202012Validator

import config
from channel_base import ChannelFormatPlugin, error_path
from exceptions import AccessStructureError, DimensionMismatchError, ValidationError
from model import AccessStructure, CqBroadcastChannel

logger = logging.getLogger(__name__)


class ChannelLoader:
    """Loads every format plugin found under the channels directory."""

    def __init__(self, channels_dir: Optional[Path] = None):
        self.channels_dir = channels_dir or config.CHANNELS_DIR
        self.plugins: Dict[str, ChannelFormatPlugin] = {}
        self._load_plugins()

    def _load_plugins(self):
        for plugin_dir in sorted(self.channels_dir.iterdir()):
            if not plugin_dir.is_dir():
                continue
            kind = plugin_dir.name
            plugin_file = plugin_dir / "plugin.py"
            if not plugin_file.exists():
                continue
            try:
                spec = importlib.util.spec_from_file_location(f"channels.{kind}.plugin", plugin_file)
                module = importlib.util.module_from_spec(spec)
                sys.modules[f"channels.{kind}.plugin"] = module
                spec.loader.exec_module(module)
                if hasattr(module, "Plugin"):
                    self.plugins[kind] = module.Plugin()
                    logger.debug(f"Loaded channel format: {kind}")
                else:
                    logger.warning(f"Channel format {kind} does not have a Plugin class")
            except Exception as e:
                logger.error(f"Error loading channel format {kind}: {e}", exc_info=True)

    def get_plugin(self, kind: str) -> Optional[ChannelFormatPlugin]:
        return self.plugins.get(kind)

    def list_kinds(self) -> List[str]:
        return list(self.plugins.keys())

    def load_document(
        self, document: Dict[str, Any], source: str = "<document>"
    ) -> Tuple[CqBroadcastChannel, Optional[AccessStructure]]:
        """Validate and parse a channel document; the access structure is returned when present."""
        validate_against("channel.schema.json", document, source)
        kind = document["kind"]
        plugin = self.get_plugin(kind)
        if plugin is None:
            raise ValidationError(f"{source}: unknown channel kind '{kind}' (known: {', '.join(self.list_kinds())})")
        is_valid, error = plugin.validate_document(document["outputs"])
        if not is_valid:
            raise ValidationError(f"{source}: {error}")
        channel = plugin.parse(document)
        if channel.num_users != document["users"]:
            raise DimensionMismatchError(f"{source}: file declares {document['users']} users, outputs describe {channel.num_users}")
        if channel.input_alphabet_size != document["input_alphabet"]:
            raise DimensionMismatchError(
                f"{source}: file declares |X|={document['input_alphabet']}, outputs describe {channel.input_alphabet_size}"
            )
        access = None
        if "minimal_authorized" in document:
            access = AccessStructure.from_sets(document["users"], document["minimal_authorized"])
        logger.info(f"Loaded {plugin.nice_name} '{channel.name}' from {source}")
        return channel, access


def read_json(path: Path) -> Any:
    """Parse a JSON file; syntax errors become ValidationError with line and column."""
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ValidationError(f"{path}: cannot read file ({e.strerror})") from e


@lru_cache(maxsize=None)
def _validator(schema_name: str) -> Draft202012Validator:
    with open(config.SCHEMAS_DIR / schema_name, "r") as f:
        return Draft202012Validator(json.load(f))


def validate_against(schema_name: str, document: Any, source: str) -> None:
    errors = sorted(_validator(schema_name).iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        raise ValidationError(f"{source}: {error_path(errors[0])}: {errors[0].message}")


@lru_cache(maxsize=None)
def get_loader() -> ChannelLoader:
    return ChannelLoader()


def load_channel_file(path) -> Tuple[CqBroadcastChannel, Optional[AccessStructure]]:
    path = Path(path)
    return get_loader().load_document(read_json(path), str(path))


def load_access_file(path, num_users: Optional[int] = None) -> AccessStructure:
    path = Path(path)
    document = read_json(path)
    validate_against("access.schema.json", document, str(path))
    if num_users is not None and document["users"] != num_users:
        raise AccessStructureError(f"{path}: access structure over {document['users']} users for a {num_users}-user channel")
    return AccessStructure.from_sets(document["users"], document["minimal_authorized"])
