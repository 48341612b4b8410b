"""
Data layer for Ladartrack
Handles scenario files, scan logs, track outputs and the synthetic LADAR.
"""

from .scenario_repository import ScenarioRepository
from .scan_log_repository import ScanLogRepository, ScanLog
from .track_output_repository import TrackOutputRepository
from .file_manager import FileManager
from .simulator import (
    ScenarioConfig, SensorModel, Trajectory, Segment, VehicleSpec, ClutterSpec, Corruption,
    generate_truth, render_scan, simulate, simulate_frame, cluster_points
)
from .exceptions import (
    DataError,
    ScenarioConfigError,
    ScanLogError,
    TruncatedLogError,
    UnsupportedFormatError,
    OutputWriteError,
    FileNotFoundError,
    JsonSerializationError
)

__all__ = [
    'ScenarioRepository',
    'ScanLogRepository',
    'ScanLog',
    'TrackOutputRepository',
    'FileManager',
    'ScenarioConfig',
    'SensorModel',
    'Trajectory',
    'Segment',
    'VehicleSpec',
    'ClutterSpec',
    'Corruption',
    'generate_truth',
    'render_scan',
    'simulate',
    'simulate_frame',
    'cluster_points',
    'DataError',
    'ScenarioConfigError',
    'ScanLogError',
    'TruncatedLogError',
    'UnsupportedFormatError',
    'OutputWriteError',
    'FileNotFoundError',
    'JsonSerializationError'
]
