"""
Application Service for Ladartrack
Main coordinator that provides a unified interface to all use cases.
"""

from pathlib import Path
from typing import Optional

from .base_use_case import Repositories, UseCaseResult
from .use_cases import (
    RunSimulationUseCase, SimulateRequest,
    RunTrackingUseCase, TrackRequest,
    RunEvaluationUseCase, EvaluateRequest,
)


class ApplicationService:
    """
    Main application service that coordinates all use cases.

    This is the primary interface between the command line and the tracking logic.
    """

    def __init__(self, repositories: Optional[Repositories] = None):
        """Initialize the application service."""
        self.repositories = repositories or Repositories.create()

        self._simulate_use_case = RunSimulationUseCase(self.repositories)
        self._track_use_case = RunTrackingUseCase(self.repositories)
        self._evaluate_use_case = RunEvaluationUseCase(self.repositories)

    def simulate(self, scenario_path: Path, output_dir: Path, seed: Optional[int] = None) -> UseCaseResult:
        """
        Render a scenario into ``<output_dir>/scan_log.jsonl``.

        Returns:
            UseCaseResult whose data is a SimulateResponse
        """
        request = SimulateRequest(scenario_path=scenario_path, output_dir=output_dir, seed=seed)
        return self._simulate_use_case.execute_safely(request)

    def track(self, output_dir: Path, scan_log_path: Optional[Path] = None,
              tracker_config_path: Optional[Path] = None, policy: Optional[str] = None,
              seed: Optional[int] = None) -> UseCaseResult:
        """
        Track a scan log and write ``tracks.csv`` and ``metrics.json`` to ``output_dir``.

        Returns:
            UseCaseResult whose data is a TrackResponse
        """
        request = TrackRequest(
            output_dir=output_dir,
            scan_log_path=scan_log_path,
            tracker_config_path=tracker_config_path,
            policy=policy,
            seed=seed,
        )
        return self._track_use_case.execute_safely(request)

    def evaluate(self, scenario_path: Path, output_dir: Path, seed: Optional[int] = None,
                 tracker_config_path: Optional[Path] = None, policy: Optional[str] = None) -> UseCaseResult:
        """Simulate a scenario, then track it, writing all outputs to ``output_dir``."""
        request = EvaluateRequest(
            scenario_path=scenario_path,
            output_dir=output_dir,
            seed=seed,
            tracker_config_path=tracker_config_path,
            policy=policy,
        )
        return self._evaluate_use_case.execute_safely(request)
