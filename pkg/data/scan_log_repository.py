"""
Scan Log Repository for Ladartrack Data Layer
Reads and writes line-delimited JSON scan logs, one frame per line.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

from domain.entities import ScanFrame
from domain.exceptions import InvalidArgumentError
from .exceptions import JsonSerializationError, ScanLogError, TruncatedLogError, UnsupportedFormatError
from .file_manager import FileManager, PathLike

logger = logging.getLogger(__name__)


@dataclass
class ScanLog:
    """Frames read from a log plus anything that had to be skipped."""

    frames: List[ScanFrame] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.frames)


class ScanLogRepository:
    """Repository for scan logs (format_version 1, see docs/formats.md)."""

    FORMAT_VERSION = 1

    def __init__(self, file_manager: Optional[FileManager] = None):
        self.file_manager = file_manager or FileManager()

    def encode_frame(self, frame: ScanFrame, index: int) -> str:
        record = {'format_version': self.FORMAT_VERSION, 'frame': index}
        record.update(frame.to_dict())
        try:
            return json.dumps(record, separators=(',', ':'))
        except (TypeError, ValueError) as e:
            raise JsonSerializationError(f"Failed to serialize frame {index}: {e}")

    def write(self, frames: Iterable[ScanFrame], path: PathLike) -> int:
        """
        Write frames to a log, replacing any existing file.

        Returns:
            Number of frames written

        Raises:
            OutputWriteError: If the file cannot be written
        """
        lines = [self.encode_frame(frame, index) for index, frame in enumerate(frames)]
        text = ''.join(line + '\n' for line in lines)
        target = self.file_manager.write_text_atomic(path, text)
        logger.info("wrote %d frames to %s", len(lines), target)
        return len(lines)

    def decode_frame(self, line: str, line_number: int) -> ScanFrame:
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ScanLogError(f"line {line_number}:{e.colno}: {e.msg}")
        if not isinstance(record, dict):
            raise ScanLogError(f"line {line_number}: frame record must be an object")
        version = record.get('format_version')
        if version != self.FORMAT_VERSION:
            raise UnsupportedFormatError(f"line {line_number}: unsupported format_version {version!r}")
        try:
            return ScanFrame.from_dict(record)
        except (KeyError, TypeError, ValueError, InvalidArgumentError) as e:
            raise ScanLogError(f"line {line_number}: malformed frame record ({e})")

    def read(self, path: PathLike, strict: bool = False) -> ScanLog:
        """
        Read every complete frame of a log.

        A final line without its newline that does not parse is a truncated
        write: it is dropped with a warning. Other malformed lines are skipped
        with a warning unless ``strict`` is set.

        Raises:
            FileNotFoundError: If the log doesn't exist
            ScanLogError: On malformed lines in strict mode or unsupported versions
            TruncatedLogError: On truncation in strict mode
        """
        resolved = self.file_manager.require_file(path)
        try:
            text = resolved.read_text(encoding='utf-8')
        except OSError as e:
            raise ScanLogError(f"Cannot read scan log '{resolved}': {e}")

        log = ScanLog()
        lines = text.split('\n')
        ends_cleanly = text.endswith('\n') or not text
        last_timestamp = None
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            is_tail = number == len(lines) and not ends_cleanly
            try:
                frame = self.decode_frame(line, number)
            except ScanLogError as e:
                if is_tail:
                    message = f"{resolved}: truncated final frame at line {number}, {len(log)} complete frames kept"
                    if strict:
                        raise TruncatedLogError(message)
                    log.truncated = True
                    log.warnings.append(message)
                    logger.warning(message)
                    break
                if strict or isinstance(e, UnsupportedFormatError):
                    raise ScanLogError(f"{resolved}: {e}")
                log.warnings.append(f"{resolved}: {e}")
                logger.warning("skipping %s", e)
                continue
            if last_timestamp is not None and frame.timestamp <= last_timestamp:
                message = f"{resolved}: line {number}: timestamp {frame.timestamp} not after {last_timestamp}"
                if strict:
                    raise ScanLogError(message)
                log.warnings.append(message)
                logger.warning("skipping %s", message)
                continue
            last_timestamp = frame.timestamp
            log.frames.append(frame)
        logger.info("read %d frames from %s", len(log), resolved)
        return log
