"""
File Manager for Ladartrack Data Layer
Handles run output directories, path resolution and atomic text writes.
"""

import shutil
from pathlib import Path
from typing import Optional, Union

from .exceptions import FileNotFoundError, OutputWriteError

PathLike = Union[str, Path]


class FileManager:
    """Resolves paths against a run directory and writes files atomically."""

    SCAN_LOG_NAME = 'scan_log.jsonl'
    TRACKS_NAME = 'tracks.csv'
    METRICS_NAME = 'metrics.json'

    def __init__(self, output_root: Optional[PathLike] = None):
        """
        Initialize FileManager.

        Args:
            output_root: Directory outputs are written to. Relative paths are
                         resolved against it.
        """
        self.output_root = Path(output_root) if output_root else None

    def set_output_root(self, output_root: PathLike) -> Path:
        """Set and create the output directory."""
        self.output_root = Path(output_root).absolute()
        self.ensure_directory(self.output_root)
        return self.output_root

    def resolve(self, path: PathLike) -> Path:
        """Resolve a path; relative paths are taken from the output root."""
        candidate = Path(path)
        if candidate.is_absolute() or self.output_root is None:
            return candidate
        return self.output_root / candidate

    def output_path(self, name: str) -> Path:
        if self.output_root is None:
            raise OutputWriteError("Output root not set - cannot place output files")
        return self.output_root / name

    @property
    def scan_log_path(self) -> Path:
        return self.output_path(self.SCAN_LOG_NAME)

    @property
    def tracks_path(self) -> Path:
        return self.output_path(self.TRACKS_NAME)

    @property
    def metrics_path(self) -> Path:
        return self.output_path(self.METRICS_NAME)

    def require_file(self, path: PathLike) -> Path:
        """
        Return the resolved path of an existing file.

        Raises:
            FileNotFoundError: If the file doesn't exist or is not a regular file
        """
        resolved = self.resolve(path)
        if not resolved.exists():
            raise FileNotFoundError(f"File not found: {resolved}")
        if not resolved.is_file():
            raise FileNotFoundError(f"Path is not a file: {resolved}")
        return resolved

    def ensure_directory(self, path: PathLike) -> Path:
        """
        Create a directory (and parents) if needed.

        Raises:
            OutputWriteError: If directory creation fails
        """
        resolved = self.resolve(path)
        try:
            resolved.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputWriteError(f"Failed to create directory '{resolved}': {e}")
        return resolved

    def write_text_atomic(self, path: PathLike, text: str) -> Path:
        """
        Write text to a temporary file next to the target, then move it into place.

        Raises:
            OutputWriteError: If the file cannot be written
        """
        target = self.resolve(path)
        self.ensure_directory(target.parent)
        temp_path = target.with_suffix(target.suffix + '.tmp')
        try:
            # newline='' keeps output byte-identical across platforms
            with open(temp_path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
            shutil.move(str(temp_path), str(target))
        except OSError as e:
            if temp_path.exists():
                try:
                    temp_path.unlink()
                except OSError:
                    pass
            raise OutputWriteError(f"Cannot write '{target}': {e}")
        return target
