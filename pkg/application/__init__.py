"""
Application layer for Ladartrack
Contains use cases and application services that orchestrate simulation, tracking and scoring.
"""

from .application_service import ApplicationService
from .base_use_case import BaseUseCase, ErrorKind, Repositories, UseCaseResult
from .metrics import MetricsReport, ObjectMetrics, compute_metrics
from .use_cases import (
    RunSimulationUseCase,
    RunTrackingUseCase,
    RunEvaluationUseCase
)
from .exceptions import (
    ApplicationError,
    UseCaseError,
    ValidationError,
    WorkflowError
)

__all__ = [
    'ApplicationService',
    'BaseUseCase',
    'ErrorKind',
    'Repositories',
    'UseCaseResult',
    'MetricsReport',
    'ObjectMetrics',
    'compute_metrics',
    'RunSimulationUseCase',
    'RunTrackingUseCase',
    'RunEvaluationUseCase',
    'ApplicationError',
    'UseCaseError',
    'ValidationError',
    'WorkflowError'
]
