"""
Domain layer for Ladartrack
Contains the motion models, robust fitting, shape estimation and the tracker.
"""

from .entities import (
    MotionModel, FitKind, IsmState, VasmState, NoiseParams, PointCluster,
    CornerFit, RansacConfig, ShapeEstimate, BoxPose, Measurement, TruthState, ScanFrame
)
from .shape import ShapeConfig, ShapeModel, DimensionHistogram, observe_dimension, estimate_dimension
from .tracker import (
    HypothesisPolicy, HypothesisParams, TrackerConfig, Track, TrackManager, TrackReport,
    kf_predict, kf_update, associate, detect_mover, spawn_hypotheses, select_best,
    reinitialize_failed, predict_trajectory
)
from .exceptions import (
    DomainError, InvalidArgumentError, FitFailureError, DegenerateFitError,
    ImmatureHistogramError, TrackError
)

__all__ = [
    'MotionModel',
    'FitKind',
    'IsmState',
    'VasmState',
    'NoiseParams',
    'PointCluster',
    'CornerFit',
    'RansacConfig',
    'ShapeEstimate',
    'BoxPose',
    'Measurement',
    'TruthState',
    'ScanFrame',
    'ShapeConfig',
    'ShapeModel',
    'DimensionHistogram',
    'observe_dimension',
    'estimate_dimension',
    'HypothesisPolicy',
    'HypothesisParams',
    'TrackerConfig',
    'Track',
    'TrackManager',
    'TrackReport',
    'kf_predict',
    'kf_update',
    'associate',
    'detect_mover',
    'spawn_hypotheses',
    'select_best',
    'reinitialize_failed',
    'predict_trajectory',
    'DomainError',
    'InvalidArgumentError',
    'FitFailureError',
    'DegenerateFitError',
    'ImmatureHistogramError',
    'TrackError'
]
