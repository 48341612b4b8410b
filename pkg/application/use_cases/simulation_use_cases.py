"""
Simulation use cases for Ladartrack
Renders a scenario into a scan log.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from data import DataError, ScenarioConfig, simulate
from ..base_use_case import BaseUseCase
from ..exceptions import UseCaseError, ValidationError

logger = logging.getLogger(__name__)


@dataclass
class SimulateRequest:
    """Request to render a scenario file into ``<output_dir>/scan_log.jsonl``."""
    scenario_path: Optional[Path] = None
    output_dir: Optional[Path] = None
    seed: Optional[int] = None


@dataclass
class SimulateResponse:
    scan_log_path: Path
    scenario: ScenarioConfig
    frames: int
    warnings: List[str] = field(default_factory=list)


def validate_seed(seed: Optional[int]) -> None:
    if seed is None:
        return
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer (got {seed!r})")


class RunSimulationUseCase(BaseUseCase[SimulateRequest, SimulateResponse]):
    """Use case for rendering a scenario into a scan log."""

    def validate_request(self, request: SimulateRequest) -> None:
        super().validate_request(request)

        if not request.scenario_path:
            raise ValidationError("A scenario file is required")
        if not request.output_dir:
            raise ValidationError("An output directory is required")
        validate_seed(request.seed)

    def execute(self, request: SimulateRequest) -> SimulateResponse:
        repositories = self.repositories
        try:
            config = repositories.scenarios.load_scenario(request.scenario_path)
            if request.seed is not None:
                config = config.with_seed(request.seed)
            repositories.file_manager.set_output_root(request.output_dir)
            path = repositories.file_manager.scan_log_path
            frames = repositories.scan_logs.write(simulate(config), path)
        except DataError as e:
            raise UseCaseError(str(e))

        logger.info("scenario '%s' (seed %d) rendered to %s", config.name, config.seed, path)
        return SimulateResponse(scan_log_path=path, scenario=config, frames=frames)
