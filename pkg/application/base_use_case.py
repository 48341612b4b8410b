"""
Use case plumbing for the Ladartrack application layer.

Every run (simulate, track, evaluate) is a use case: a request dataclass is
validated, executed against the shared repositories and wrapped in a
UseCaseResult so the CLI can map failures to exit codes without catching
exceptions itself.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Generic, List, Optional, TypeVar

from data import DataError, FileManager, ScanLogRepository, ScenarioRepository, TrackOutputRepository
from domain import DomainError
from .exceptions import UseCaseError, ValidationError

logger = logging.getLogger(__name__)

TRequest = TypeVar('TRequest')
TResponse = TypeVar('TResponse')


class ErrorKind(str, Enum):
    """Failure classes a run can end in; the CLI maps them to exit codes."""
    VALIDATION = 'validation'
    USE_CASE = 'use_case'
    UNEXPECTED = 'unexpected'


@dataclass
class UseCaseResult(Generic[TResponse]):
    success: bool
    data: Optional[TResponse] = None
    error: Optional[str] = None
    error_kind: Optional[ErrorKind] = None
    warnings: List[str] = field(default_factory=list)
    execution_time: float = 0.0
    timestamp: datetime = field(default_factory=datetime.now)


@dataclass
class Repositories:
    """Repositories shared by the use cases of one run."""
    file_manager: FileManager
    scenarios: ScenarioRepository
    scan_logs: ScanLogRepository
    tracks: TrackOutputRepository

    @classmethod
    def create(cls, output_root: Optional[Path] = None, prediction_steps: int = 10) -> 'Repositories':
        file_manager = FileManager(output_root)
        return cls(
            file_manager=file_manager,
            scenarios=ScenarioRepository(file_manager),
            scan_logs=ScanLogRepository(file_manager),
            tracks=TrackOutputRepository(file_manager, prediction_steps),
        )


class BaseUseCase(ABC, Generic[TRequest, TResponse]):
    """Validate, run and wrap one request against the shared repositories."""

    def __init__(self, repositories: Repositories):
        self.repositories = repositories

    @abstractmethod
    def execute(self, request: TRequest) -> TResponse:
        """Run the request; raises ValidationError or UseCaseError on failure."""

    def validate_request(self, request: TRequest) -> None:
        if request is None:
            raise ValidationError("Request cannot be None")

    def execute_safely(self, request: TRequest) -> UseCaseResult[TResponse]:
        """
        Run the request and never raise.

        Data and domain errors that escape ``execute`` are reported as
        ``use_case`` failures; anything else is logged with its traceback
        and reported as ``unexpected``.
        """
        started = time.perf_counter()
        try:
            self.validate_request(request)
            response = self.execute(request)
        except ValidationError as e:
            return self._failure(ErrorKind.VALIDATION, f"Validation error: {e}", started)
        except (UseCaseError, DataError, DomainError) as e:
            return self._failure(ErrorKind.USE_CASE, str(e), started)
        except Exception as e:
            logger.exception("unexpected failure in %s", type(self).__name__)
            return self._failure(ErrorKind.UNEXPECTED, f"Unexpected error: {e}", started)

        return UseCaseResult(
            success=True,
            data=response,
            warnings=list(getattr(response, 'warnings', None) or []),
            execution_time=time.perf_counter() - started,
        )

    @staticmethod
    def _failure(kind: ErrorKind, message: str, started: float) -> UseCaseResult:
        return UseCaseResult(success=False, error=message, error_kind=kind,
                             execution_time=time.perf_counter() - started)
