"""
Data layer exceptions for Ladartrack
Contains all scenario, scan log and output file related exceptions.
"""


class DataError(Exception):
    """Base exception for all data layer errors."""
    pass


class ScenarioConfigError(DataError):
    """Raised when a scenario or tracker config file is malformed or invalid.

    ``field`` holds the dotted path of the offending entry when known,
    e.g. ``vehicles[0].length``.
    """

    def __init__(self, message: str, field: str = None):
        super().__init__(message)
        self.field = field


class ScanLogError(DataError):
    """Raised when a scan log cannot be read or a frame record is malformed."""
    pass


class TruncatedLogError(ScanLogError):
    """Raised when a scan log ends in the middle of a frame record."""
    pass


class OutputWriteError(DataError):
    """Raised when an output file or directory cannot be written."""
    pass


class FileNotFoundError(DataError):
    """Raised when referenced files cannot be found on disk."""
    pass


class JsonSerializationError(DataError):
    """Raised when JSON serialization/deserialization fails."""
    pass


class UnsupportedFormatError(ScanLogError):
    """Raised when a scan log record carries an unknown format_version."""
    pass
