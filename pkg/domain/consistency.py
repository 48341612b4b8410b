"""
Filter consistency statistics for Ladartrack

NEES and NIS of a consistent filter are chi-square distributed, so the mean over
N independent runs lies inside a chi-square band with N * dof degrees of
freedom scaled by 1/N.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import chi2

from .entities import IsmState, Measurement, MotionModel, NoiseParams
from .exceptions import InvalidArgumentError
from .geometry import wrap_angle
from .kinematics import ism_process_noise, ism_transition_matrix
from .shape import ShapeModel
from .tracker import Track, kf_predict, kf_update

logger = logging.getLogger(__name__)


def nees(error: np.ndarray, cov: np.ndarray) -> float:
    """Normalised estimation error squared e^T P^-1 e."""
    e = np.asarray(error, dtype=float)
    return float(e @ np.linalg.solve(cov, e))


def nis(innovation: np.ndarray, S: np.ndarray) -> float:
    """Normalised innovation squared nu^T S^-1 nu."""
    return nees(innovation, S)


def chi2_band(dof: int, runs: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Two-sided bounds on the mean of ``runs`` chi-square(dof) samples."""
    if dof < 1 or runs < 1:
        raise InvalidArgumentError("chi2_band needs dof >= 1 and runs >= 1")
    if not 0 < confidence < 1:
        raise InvalidArgumentError("confidence must be in (0, 1)")
    tail = (1.0 - confidence) / 2.0
    total = dof * runs
    return chi2.ppf(tail, total) / runs, chi2.ppf(1.0 - tail, total) / runs


@dataclass(frozen=True, eq=False)
class ConsistencyResult:
    mean_nees: np.ndarray    # per step, averaged over runs
    mean_nis: np.ndarray     # per step, averaged over runs
    nees_band: Tuple[float, float]
    nis_band: Tuple[float, float]

    @property
    def overall_nees(self) -> float:
        """Mean NEES over every run and step."""
        return float(np.mean(self.mean_nees))

    @property
    def overall_nis(self) -> float:
        return float(np.mean(self.mean_nis))

    @property
    def fraction_in_band(self) -> float:
        lower, upper = self.nees_band
        return float(np.mean((self.mean_nees >= lower) & (self.mean_nees <= upper)))


def run_ism_consistency(runs: int = 100, steps: int = 50, dt: float = 0.1,
                        noise: Optional[NoiseParams] = None,
                        meas_sigma: Tuple[float, float, float] = (0.1, 0.1, 0.02),
                        seed: int = 0, confidence: float = 0.95) -> ConsistencyResult:
    """Monte-Carlo of the ISM filter against truth drawn from the same linear model."""
    noise = noise or NoiseParams()
    rng = np.random.default_rng(seed)
    phi = ism_transition_matrix(dt)
    Q = ism_process_noise(dt, noise)
    chol_q = np.linalg.cholesky(Q + 1e-15 * np.eye(6))
    R = np.diag(np.square(meas_sigma))
    H = Measurement.observation_matrix(MotionModel.ISM)
    P0 = np.diag([1.0, 1.0, 1.0, 1.0, 0.05, 0.05])
    chol_p0 = np.linalg.cholesky(P0)
    estimate0 = np.array([0.0, 5.0, 0.0, 0.0, 0.0, 0.0])

    nees_values = np.empty((runs, steps))
    nis_values = np.empty((runs, steps))
    for run in range(runs):
        truth = estimate0 + chol_p0 @ rng.standard_normal(6)
        track = Track(MotionModel.ISM, IsmState.from_vector(estimate0), P0.copy(), ShapeModel(),
                      score_window=deque(maxlen=steps))
        for k in range(steps):
            truth = phi @ truth + chol_q @ rng.standard_normal(6)
            z = H @ truth + rng.standard_normal(3) * np.asarray(meas_sigma)
            track = kf_predict(track, dt, noise)
            track, nis_values[run, k] = kf_update(track, Measurement(z, R))
            error = track.state.to_vector() - truth
            error[4] = wrap_angle(error[4])
            nees_values[run, k] = nees(error, track.cov)

    result = ConsistencyResult(
        mean_nees=nees_values.mean(axis=0),
        mean_nis=nis_values.mean(axis=0),
        nees_band=chi2_band(6, runs, confidence),
        nis_band=chi2_band(3, runs, confidence),
    )
    logger.info("ISM consistency: %d runs x %d steps, mean NEES %.2f, %.0f%% of steps inside the NEES band",
                runs, steps, result.overall_nees, 100.0 * result.fraction_in_band)
    return result
