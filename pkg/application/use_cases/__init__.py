"""
Use cases module for Ladartrack Application Layer
Contains all the specific use case implementations.
"""

from .simulation_use_cases import RunSimulationUseCase, SimulateRequest, SimulateResponse
from .tracking_use_cases import RunTrackingUseCase, TrackRequest, TrackResponse, run_tracker
from .evaluation_use_cases import RunEvaluationUseCase, EvaluateRequest, EvaluateResponse

__all__ = [
    'RunSimulationUseCase', 'SimulateRequest', 'SimulateResponse',
    'RunTrackingUseCase', 'TrackRequest', 'TrackResponse', 'run_tracker',
    'RunEvaluationUseCase', 'EvaluateRequest', 'EvaluateResponse',
]
