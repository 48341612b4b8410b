"""
Scenario Repository for Ladartrack Data Layer
Loads and saves scenario and tracker-config JSON files with line-anchored diagnostics.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from domain.exceptions import InvalidArgumentError
from domain.tracker import TrackerConfig
from .exceptions import JsonSerializationError, ScenarioConfigError
from .file_manager import FileManager, PathLike
from .simulator import ScenarioConfig

logger = logging.getLogger(__name__)

_INDEX = re.compile(r'\[(\d+)\]')


class ScenarioRepository:
    """Repository for scenario and tracker configuration files."""

    def __init__(self, file_manager: Optional[FileManager] = None):
        self.file_manager = file_manager or FileManager()

    def load_scenario(self, path: PathLike) -> ScenarioConfig:
        """
        Load a scenario file.

        Raises:
            FileNotFoundError: If the file doesn't exist
            JsonSerializationError: If the file is not valid JSON (message carries line:col)
            ScenarioConfigError: If a field is invalid (message names the field and its line)
        """
        data, text, resolved = self._read_json(path)
        try:
            config = ScenarioConfig.from_dict(data)
        except ScenarioConfigError as e:
            raise ScenarioConfigError(self._anchor(resolved, text, e.field, str(e)), field=e.field)
        logger.info("loaded scenario '%s' from %s (%d frames)", config.name, resolved, config.frame_count)
        return config

    def load_tracker_config(self, path: Optional[PathLike]) -> TrackerConfig:
        """
        Load tracker overrides merged onto the defaults; None gives the defaults.

        Raises:
            ScenarioConfigError: If an override is unknown or invalid
        """
        if path is None:
            return TrackerConfig()
        data, text, resolved = self._read_json(path)
        if not isinstance(data, dict):
            raise ScenarioConfigError(f"{resolved}:1: tracker config must be an object")
        try:
            return TrackerConfig.from_dict(data)
        except (InvalidArgumentError, TypeError, ValueError, AttributeError) as e:
            field = next((key for key in self._mentioned_keys(data) if key in str(e)), None)
            raise ScenarioConfigError(self._anchor(resolved, text, field, str(e)), field=field)

    def save_scenario(self, config: ScenarioConfig, path: PathLike) -> Path:
        try:
            text = json.dumps(config.to_dict(), indent=2) + '\n'
        except (TypeError, ValueError) as e:
            raise JsonSerializationError(f"Failed to serialize scenario: {e}")
        return self.file_manager.write_text_atomic(path, text)

    def _read_json(self, path: PathLike) -> Tuple[Any, str, Path]:
        resolved = self.file_manager.require_file(path)
        try:
            text = resolved.read_text(encoding='utf-8')
        except OSError as e:
            raise ScenarioConfigError(f"Cannot read '{resolved}': {e}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise JsonSerializationError(f"{resolved}:{e.lineno}:{e.colno}: {e.msg}")
        if not isinstance(data, dict):
            raise ScenarioConfigError(f"{resolved}:1: top level must be a JSON object")
        return data, text, resolved

    @staticmethod
    def _mentioned_keys(data: Dict[str, Any]):
        """Keys of the mapping and its nested mappings, longest first."""
        keys = set()
        stack = [data]
        while stack:
            current = stack.pop()
            if isinstance(current, dict):
                keys.update(current)
                stack.extend(current.values())
            elif isinstance(current, list):
                stack.extend(current)
        return sorted(keys, key=len, reverse=True)

    @staticmethod
    def locate_field(text: str, field: Optional[str]) -> Optional[int]:
        """1-based line of the key named by a dotted field path, if present in the text."""
        if not field:
            return None
        leaf = _INDEX.sub('', field.split('.')[-1])
        indices = _INDEX.findall(field)
        pattern = re.compile(r'"' + re.escape(leaf) + r'"\s*:')
        lines = [number for number, line in enumerate(text.splitlines(), start=1) if pattern.search(line)]
        if not lines:
            return None
        occurrence = int(indices[-1]) if indices else 0
        return lines[occurrence] if occurrence < len(lines) else lines[0]

    def _anchor(self, path: Path, text: str, field: Optional[str], message: str) -> str:
        line = self.locate_field(text, field)
        return f"{path}:{line}: {message}" if line is not None else f"{path}: {message}"
