"""
Evaluation use cases for Ladartrack
Simulates a scenario and tracks the resulting log in one run.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from ..base_use_case import BaseUseCase, Repositories
from ..exceptions import UseCaseError, WorkflowError
from .simulation_use_cases import RunSimulationUseCase, SimulateRequest, SimulateResponse
from .tracking_use_cases import RunTrackingUseCase, TrackRequest, TrackResponse

logger = logging.getLogger(__name__)


@dataclass
class EvaluateRequest:
    scenario_path: Optional[Path] = None
    output_dir: Optional[Path] = None
    seed: Optional[int] = None
    tracker_config_path: Optional[Path] = None
    policy: Optional[str] = None


@dataclass
class EvaluateResponse:
    simulation: SimulateResponse
    tracking: TrackResponse
    warnings: List[str] = field(default_factory=list)


class RunEvaluationUseCase(BaseUseCase[EvaluateRequest, EvaluateResponse]):
    """Use case for simulate-then-track runs; the seed drives both stages."""

    def __init__(self, repositories: Repositories):
        super().__init__(repositories)
        self._simulate = RunSimulationUseCase(repositories)
        self._track = RunTrackingUseCase(repositories)

    def _requests(self, request: EvaluateRequest):
        simulate = SimulateRequest(request.scenario_path, request.output_dir, request.seed)
        track = TrackRequest(
            output_dir=request.output_dir,
            tracker_config_path=request.tracker_config_path,
            policy=request.policy,
            seed=request.seed,
        )
        return simulate, track

    def validate_request(self, request: EvaluateRequest) -> None:
        super().validate_request(request)
        simulate, track = self._requests(request)
        self._simulate.validate_request(simulate)
        self._track.validate_request(track)

    def execute(self, request: EvaluateRequest) -> EvaluateResponse:
        simulate, track = self._requests(request)
        try:
            simulation = self._simulate.execute(simulate)
        except UseCaseError as e:
            raise WorkflowError(str(e), stage='simulate')
        track.scan_log_path = simulation.scan_log_path
        try:
            tracking = self._track.execute(track)
        except UseCaseError as e:
            raise WorkflowError(str(e), stage='track')

        if tracking.frames != simulation.frames:
            raise WorkflowError(f"tracked {tracking.frames} of {simulation.frames} simulated frames", stage='track')
        logger.info("evaluation of '%s' complete: %d frames", simulation.scenario.name, simulation.frames)
        return EvaluateResponse(simulation, tracking, warnings=list(tracking.warnings))
